//! Field snapshot in the binary field format plus a JSON sidecar.

use super::{DiagnosticsRecord, FlowParams};
use crate::error::{Error, Result};
use crate::spectral::{io, Field};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub t: f64,
    pub params: FlowParams,
    /// Most recent diagnostics records, oldest first.
    pub diagnostics_tail: Vec<DiagnosticsRecord>,
}

/// Records kept in the sidecar.
pub const TAIL_LEN: usize = 8;

pub fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
}

pub fn save(
    dir: &Path,
    stem: &str,
    field: &Field,
    t: f64,
    params: &FlowParams,
    diagnostics: &[DiagnosticsRecord],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (bin, json) = paths(dir, stem);
    io::save_binary(field, &bin)?;
    let tail = diagnostics[diagnostics.len().saturating_sub(TAIL_LEN)..].to_vec();
    let meta = CheckpointMeta {
        t,
        params: params.clone(),
        diagnostics_tail: tail,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(json, text)?;
    Ok(())
}

pub fn load(dir: &Path, stem: &str) -> Result<(Field, CheckpointMeta)> {
    let (bin, json) = paths(dir, stem);
    let field = io::load_binary(&bin)?;
    let meta = serde_json::from_str(&fs::read_to_string(json)?).map_err(|e| Error::Format(e.to_string()))?;
    Ok((field, meta))
}
