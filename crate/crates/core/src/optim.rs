//! Multi-start gradient ascent on the complex unit sphere.
//!
//! Objectives are real functions of a unit vector `ψ` that return their value
//! together with the Wirtinger gradient `∂f/∂ψ*`. Each restart draws its
//! starting point from its own ChaCha stream, so results do not depend on how
//! restarts are scheduled across threads.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

pub const DEFAULT_RESTARTS: usize = 64;

#[derive(Debug, Clone)]
pub struct SphereOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    /// Deterministic starting points tried before the random ones.
    pub initial_points: Vec<DVector<C64>>,
}

impl SphereOptions {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self {
            restarts,
            seed,
            max_iters: 500,
            grad_tol: 1e-10,
            initial_points: Vec::new(),
        }
    }

    pub fn with_initial_points(mut self, pts: Vec<DVector<C64>>) -> Self {
        self.initial_points = pts;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self::new(DEFAULT_RESTARTS, 0)
    }
}

/// Outcome of a multi-start run.
#[derive(Debug, Clone)]
pub struct SphereResult {
    pub value: f64,
    pub argmax: DVector<C64>,
    /// Index of the winning start (initial points first, then random restarts).
    pub best_start: usize,
    pub total_iterations: usize,
    pub starts: usize,
}

/// Optimizer metadata carried into verdicts and reports.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OptimizerInfo {
    pub restarts: usize,
    pub seed: u64,
    pub best_start: usize,
    pub total_iterations: usize,
}

impl SphereResult {
    pub fn info(&self, seed: u64) -> OptimizerInfo {
        OptimizerInfo {
            restarts: self.starts,
            seed,
            best_start: self.best_start,
            total_iterations: self.total_iterations,
        }
    }
}

fn ascend<F>(f: &F, mut psi: DVector<C64>, opts: &SphereOptions) -> Result<(f64, DVector<C64>, usize)>
where
    F: Fn(&DVector<C64>) -> Result<(f64, DVector<C64>)>,
{
    psi.unscale_mut(psi.norm());
    let (mut val, mut grad) = f(&psi)?;
    let mut step = 1.0f64;
    let mut iters = 0;
    while iters < opts.max_iters {
        iters += 1;
        let radial = psi.dotc(&grad).re;
        let tangent = &grad - psi.scale(radial);
        let gnorm2 = tangent.norm_squared();
        if gnorm2.sqrt() < opts.grad_tol {
            break;
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..40 {
            let mut cand = &psi + tangent.scale(t);
            cand.unscale_mut(cand.norm());
            let (cv, cg) = f(&cand)?;
            if cv >= val + 0.25 * t * gnorm2 {
                accepted = Some((cand, cv, cg));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, cv, cg)) => {
                let gain = cv - val;
                psi = cand;
                val = cv;
                grad = cg;
                step = (t * 1.5).min(1e6);
                if gain <= 1e-15 * val.abs().max(1.0) {
                    break;
                }
            }
            None => break,
        }
    }
    Ok((val, psi, iters))
}

/// Maximizes `f` over unit vectors in `C^dim`.
pub fn maximize<F>(dim: usize, opts: &SphereOptions, f: F) -> Result<SphereResult>
where
    F: Fn(&DVector<C64>) -> Result<(f64, DVector<C64>)> + Sync,
{
    if opts.restarts == 0 && opts.initial_points.is_empty() {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("optimization over a zero-dimensional space".into()));
    }
    if let Some(p) = opts.initial_points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "initial point of length {} for dimension {dim}",
            p.len()
        )));
    }
    let n_init = opts.initial_points.len();
    let total = n_init + opts.restarts;
    let runs: Vec<Result<(f64, DVector<C64>, usize)>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let start = if k < n_init {
                opts.initial_points[k].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream((k - n_init) as u64);
                linalg::random_unit_vector(&mut rng, dim)
            };
            ascend(&f, start, opts)
        })
        .collect();
    let mut best: Option<(usize, f64, DVector<C64>)> = None;
    let mut total_iterations = 0;
    for (k, r) in runs.into_iter().enumerate() {
        let (v, psi, it) = r?;
        total_iterations += it;
        if v.is_nan() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, bv, _)| v > *bv) {
            best = Some((k, v, psi));
        }
    }
    let (best_start, value, argmax) =
        best.ok_or_else(|| Error::Solver("every optimizer start produced NaN".into()))?;
    Ok(SphereResult {
        value,
        argmax,
        best_start,
        total_iterations,
        starts: total,
    })
}

/// Minimizes `f`; the returned `value` is the minimum found.
pub fn minimize<F>(dim: usize, opts: &SphereOptions, f: F) -> Result<SphereResult>
where
    F: Fn(&DVector<C64>) -> Result<(f64, DVector<C64>)> + Sync,
{
    let mut r = maximize(dim, opts, |psi| {
        let (v, g) = f(psi)?;
        Ok((-v, -g))
    })?;
    r.value = -r.value;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use nalgebra::DMatrix;

    fn rayleigh(h: DMatrix<C64>) -> impl Fn(&DVector<C64>) -> Result<(f64, DVector<C64>)> + Sync {
        move |psi| {
            let hp = &h * psi;
            Ok((psi.dotc(&hp).re, hp))
        }
    }

    #[test]
    fn rayleigh_quotient_finds_extreme_eigenvalues() {
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.5, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        );
        let ev = linalg::hermitian_eigenvalues(&h).unwrap();
        let opts = SphereOptions::new(8, 3);
        let max = maximize(3, &opts, rayleigh(h.clone())).unwrap();
        let min = minimize(3, &opts, rayleigh(h)).unwrap();
        assert!((max.value - ev[2]).abs() < 1e-9);
        assert!((min.value - ev[0]).abs() < 1e-9);
        assert!((max.argmax.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let h = DMatrix::from_fn(5, 5, |i, j| c((i * j) as f64 - 2.0 * (i == j) as u8 as f64, 0.0));
        let opts = SphereOptions::new(16, 99);
        let a = maximize(5, &opts, rayleigh(h.clone())).unwrap();
        let b = maximize(5, &opts, rayleigh(h)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.best_start, b.best_start);
        assert_eq!(a.argmax, b.argmax);
    }

    #[test]
    fn zero_restarts_rejected() {
        let opts = SphereOptions::new(0, 0);
        assert!(maximize(2, &opts, rayleigh(linalg::identity(2))).is_err());
    }
}
