//! Data-parallel execution switch.
//!
//! With the `parallel` feature the pointwise kernels and per-component
//! transforms run on the rayon pool once the work is large enough to pay
//! for it. `Exec::Sequential` forces the plain loops (also the only option
//! without the feature). Results are bit-identical either way: no kernel
//! does a parallel reduction.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Auto,
    Sequential,
}

/// Below this many grid points the rayon overhead dominates.
pub const PAR_THRESHOLD: usize = 2048;

impl Exec {
    pub fn parallel_for(self, len: usize) -> bool {
        cfg!(feature = "parallel") && self == Exec::Auto && len >= PAR_THRESHOLD
    }
}

/// Fill `out` (point-major, `width` values per point) by calling `f(i, chunk)`.
pub fn for_each_point<F>(exec: Exec, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let n = if width == 0 { 0 } else { out.len() / width };
    #[cfg(feature = "parallel")]
    if exec.parallel_for(n) {
        use rayon::prelude::*;
        out.par_chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = (exec, n);
    for (i, c) in out.chunks_mut(width).enumerate() {
        f(i, c);
    }
}

/// Apply `f` to each item of a mutable slice (components, rows).
pub fn for_each_mut<T, F>(exec: Exec, work: usize, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel_for(work) && items.len() > 1 {
        use rayon::prelude::*;
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    let _ = (exec, work);
    for (i, x) in items.iter_mut().enumerate() {
        f(i, x);
    }
}

/// Map over independent jobs (e.g. an epsilon sweep). Order is preserved.
pub fn map_jobs<T, R, F>(exec: Exec, jobs: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Auto && jobs.len() > 1 {
        use rayon::prelude::*;
        return jobs.par_iter().map(&f).collect();
    }
    let _ = exec;
    jobs.iter().map(f).collect()
}

/// Run two closures, concurrently when allowed.
pub fn join<A, B, RA, RB>(exec: Exec, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Auto {
        return rayon::join(a, b);
    }
    let _ = exec;
    (a(), b())
}
