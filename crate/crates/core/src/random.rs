//! Seeded random states and maps for tests, sweeps and acceptance runs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::maps::ProcessMap;
use crate::operator::{DensityMatrix, HermitianOperator};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    random_isometry(rng, d, d)
}

/// `rows x cols` isometry, `rows >= cols`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, rows, cols).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> Result<DensityMatrix> {
    let d = dims.iter().product();
    DensityMatrix::pure(dims, &linalg::random_unit_vector(rng, d))
}

/// Induced-measure random state of the given rank (`G G† / tr`).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>, rank: usize) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} for dimension {d}")));
    }
    let g = ginibre(rng, d, rank);
    let m = &g * g.adjoint();
    let t = linalg::trace(&m).re;
    DensityMatrix::new(HermitianOperator::from_hermitian_part(dims, &m.unscale(t))?)
}

/// `(weight, a, b)` of one product component.
pub type ProductTerm = (f64, DVector<C64>, DVector<C64>);

/// Mixture of `terms` random product pure states, with the components.
pub fn random_separable_state<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    db: usize,
    terms: usize,
) -> Result<(DensityMatrix, Vec<ProductTerm>)> {
    if terms == 0 {
        return Err(Error::InvalidArgument("separable mixture needs at least one term".into()));
    }
    let raw: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut m = DMatrix::zeros(da * db, da * db);
    let mut parts = Vec::with_capacity(terms);
    for w in raw {
        let w = w / total;
        let a = linalg::random_unit_vector(rng, da);
        let b = linalg::random_unit_vector(rng, db);
        m += linalg::projector(&a.kronecker(&b)).scale(w);
        parts.push((w, a, b));
    }
    let rho = DensityMatrix::new(HermitianOperator::from_hermitian_part(vec![da, db], &m)?)?;
    Ok((rho, parts))
}

/// Random CPTP map from a Stinespring isometry with `kraus` operators.
pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, din: usize, dout: usize, kraus: usize) -> Result<ProcessMap> {
    if kraus == 0 {
        return Err(Error::InvalidArgument("at least one Kraus operator required".into()));
    }
    let v = random_isometry(rng, dout * kraus, din);
    let ks: Vec<DMatrix<C64>> = (0..kraus).map(|k| v.rows(k * dout, dout).clone_owned()).collect();
    ProcessMap::from_kraus(vec![din], vec![dout], &ks)
}

/// `(1-w) Φ + w U(·)^T U†` on a qubit, with `Φ` random CPTP and `w ∈ [w_lo, w_hi]`.
/// Trace preserving and positive; redrawn until its Choi matrix has an
/// eigenvalue below `-1e-3`, so the result is never completely positive.
pub fn random_positive_qubit_map<R: Rng + ?Sized>(rng: &mut R, w_lo: f64, w_hi: f64) -> Result<(ProcessMap, f64)> {
    if !(0.0 < w_lo && w_lo <= w_hi && w_hi <= 1.0) {
        return Err(Error::InvalidArgument(format!("weight range [{w_lo}, {w_hi}]")));
    }
    for _ in 0..1000 {
        let w = w_lo + (w_hi - w_lo) * rng.random::<f64>();
        let phi = random_cptp(rng, 2, 2, 2)?;
        let u = random_unitary(rng, 2);
        let ut = ProcessMap::compose(
            &ProcessMap::from_kraus(vec![2], vec![2], &[u])?,
            &ProcessMap::transpose(2),
        )?;
        let m = ProcessMap::combine(&[(1.0 - w, &phi), (w, &ut)])?;
        if m.min_choi_eigenvalue()? < -1e-3 {
            return Ok((m, w));
        }
    }
    Err(Error::Solver("could not draw a non-CP positive map".into()))
}
