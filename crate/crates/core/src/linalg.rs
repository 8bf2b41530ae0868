//! Dense complex/real helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Iteration cap handed to the QR eigensolver, per matrix row.
const EIGEN_ITERS_PER_ROW: usize = 300;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

/// `(m + m^†) / 2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> Result<(DVector<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let cap = EIGEN_ITERS_PER_ROW * n.max(4);
    let eig = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, cap)
        .ok_or(Error::EigenNonConvergence(cap))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<DVector<f64>> {
    Ok(hermitian_eigen(m)?.0)
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> Result<f64> {
    let vals = hermitian_eigenvalues(m)?;
    Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Real symmetric eigen-decomposition, eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let cap = EIGEN_ITERS_PER_ROW * n.max(4);
    let sym = (m + m.transpose()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, cap)
        .ok_or(Error::EigenNonConvergence(cap))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

/// Real embedding `[[Re H, -Im H], [Im H, Re H]]`; PSD iff `H` is, with doubled spectrum.
pub fn realify(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Inverse of [`realify`] after projecting onto the complex-structured part.
pub fn complexify(r: &DMatrix<f64>) -> DMatrix<C64> {
    let n = r.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (r[(i, j)] + r[(i + n, j + n)]);
        let im = 0.5 * (r[(i + n, j)] - r[(i, j + n)]);
        C64::new(re, im)
    })
}

/// Outer product `|u><v|`.
pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> DMatrix<C64> {
    u * v.adjoint()
}

pub fn projector(v: &DVector<C64>) -> DMatrix<C64> {
    outer(v, v)
}

/// Expectation `<v|m|v>` (real part).
pub fn expectation(m: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// Orthonormal Hilbert–Schmidt basis of Hermitian matrices supported on the given sectors.
///
/// Each sector is a list of basis indices; the basis spans the block-diagonal algebra
/// `⊕_k L(span sector_k)`.
pub fn hermitian_basis(dim: usize, sectors: &[Vec<usize>]) -> Vec<DMatrix<C64>> {
    let mut basis = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for sector in sectors {
        for (a, &i) in sector.iter().enumerate() {
            let mut m = DMatrix::zeros(dim, dim);
            m[(i, i)] = ONE;
            basis.push(m);
            for &j in &sector[a + 1..] {
                let mut sym = DMatrix::zeros(dim, dim);
                sym[(i, j)] = C64::new(s, 0.0);
                sym[(j, i)] = C64::new(s, 0.0);
                basis.push(sym);
                let mut anti = DMatrix::zeros(dim, dim);
                anti[(i, j)] = C64::new(0.0, s);
                anti[(j, i)] = C64::new(0.0, -s);
                basis.push(anti);
            }
        }
    }
    basis
}

/// Standard normal complex vector, normalised.
pub fn random_unit_vector<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
    use rand_distr::{Distribution, StandardNormal};
    let v = DVector::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    v.unscale(norm)
}

pub fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
}
