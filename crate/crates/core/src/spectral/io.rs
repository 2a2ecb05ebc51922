//! Field files.
//!
//! Binary: little-endian header `n: u64, M: u64, L: f64, p: u64`, then the
//! p components one after another, each `M^n` f64 values with axis 0
//! fastest. CSV: one row per grid point, `x[,y],c0,...`, shortest
//! round-trip float formatting.

use super::{Field, GridSpec};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub fn write_binary<W: Write>(f: &Field, mut w: W) -> Result<()> {
    w.write_all(&(f.grid.dim as u64).to_le_bytes())?;
    w.write_all(&(f.grid.m as u64).to_le_bytes())?;
    w.write_all(&f.grid.length.to_le_bytes())?;
    w.write_all(&(f.p() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * f.npoints());
    for c in &f.comps {
        buf.clear();
        for x in c {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let dim = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let length = f64::from_bits(read_u64(&mut r)?);
    let p = read_u64(&mut r)? as usize;
    let grid = GridSpec::new(dim, m, length)?;
    if p == 0 || p > 64 {
        return Err(Error::Format(format!("implausible component count {p}")));
    }
    let n = grid.npoints();
    let mut bytes = vec![0u8; 8 * n];
    let mut comps = Vec::with_capacity(p);
    for _ in 0..p {
        r.read_exact(&mut bytes)?;
        comps.push(
            bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Field::from_comps(grid, comps)
}

pub fn save_binary(f: &Field, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_binary(f, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_binary(path: &Path) -> Result<Field> {
    read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_csv<W: Write>(f: &Field, mut w: W) -> Result<()> {
    writeln!(w, "# n={} M={} L={} p={}", f.grid.dim, f.grid.m, f.grid.length, f.p())?;
    let mut head: Vec<String> = ["x", "y"][..f.grid.dim].iter().map(|s| s.to_string()).collect();
    head.extend((0..f.p()).map(|a| format!("c{a}")));
    writeln!(w, "{}", head.join(","))?;
    for i in 0..f.npoints() {
        let x = f.grid.coords(i);
        let mut row: Vec<String> = x[..f.grid.dim].iter().map(|v| v.to_string()).collect();
        row.extend(f.comps.iter().map(|c| c[i].to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(mut r: R) -> Result<Field> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let meta = lines.next().ok_or_else(|| Error::Format("empty csv".into()))?;
    let mut dim = None;
    let mut m = None;
    let mut length = None;
    let mut p = None;
    for tok in meta.trim_start_matches('#').split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token {tok}")))?;
        let bad = |_| Error::Format(format!("bad header value {tok}"));
        match k {
            "n" => dim = Some(v.parse::<usize>().map_err(|_| Error::Format(tok.into()))?),
            "M" => m = Some(v.parse::<usize>().map_err(|_| Error::Format(tok.into()))?),
            "L" => length = Some(v.parse::<f64>().map_err(bad)?),
            "p" => p = Some(v.parse::<usize>().map_err(|_| Error::Format(tok.into()))?),
            _ => return Err(Error::Format(format!("unknown header key {k}"))),
        }
    }
    let missing = || Error::Format("incomplete csv header".into());
    let grid = GridSpec::new(
        dim.ok_or_else(missing)?,
        m.ok_or_else(missing)?,
        length.ok_or_else(missing)?,
    )?;
    let p = p.ok_or_else(missing)?;
    lines.next();
    let mut comps = vec![Vec::with_capacity(grid.npoints()); p];
    for (row, line) in lines.enumerate() {
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != grid.dim + p {
            return Err(Error::Format(format!("row {row}: expected {} columns", grid.dim + p)));
        }
        for a in 0..p {
            let v = vals[grid.dim + a]
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("row {row}: bad number {}", vals[grid.dim + a])))?;
            comps[a].push(v);
        }
    }
    Field::from_comps(grid, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = GridSpec::new(2, 8, 1.7).unwrap();
        Field::from_fn(g, 3, |x, o| {
            o[0] = (x[0] * 1.3).sin() / 3.0;
            o[1] = x[1].exp() * 1e-300;
            o[2] = -0.1 + x[0] * x[1];
        })
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 3 * 64 * 8);
        let g = read_binary(&buf[..]).unwrap();
        for (a, b) in f.comps.iter().flatten().zip(g.comps.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(f.grid, g.grid);
    }

    #[test]
    fn binary_rejects_truncation() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert!(read_binary(&buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(read_binary(&buf[..]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        assert_eq!(read_csv(&buf[..]).unwrap(), f);
    }
}
