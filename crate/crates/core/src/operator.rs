//! Hermitian operators with an explicit tensor-factor structure.
//!
//! Multi-indices are ordered with the first factor most significant, matching
//! the Kronecker product.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Entrywise tolerance for Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Minimum eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-9;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dims: Vec<usize>,
    m: DMatrix<C64>,
}

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&self.eigenvalues.map(|x| C64::new(x, 0.0)));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.iter().copied().next().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.iter().copied().last().unwrap_or(0.0)
    }
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDims(format!("{dims:?}")));
    }
    let total: usize = dims.iter().product();
    if total != n {
        return Err(Error::InvalidDims(format!(
            "product of {dims:?} is {total}, matrix is {n}x{n}"
        )));
    }
    Ok(())
}

/// Splits a flat index into per-factor digits.
fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

fn flat(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

impl HermitianOperator {
    /// Validates squareness, the factorization and Hermiticity.
    pub fn new(dims: Vec<usize>, m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_dims(&dims, m.nrows())?;
        let dev = linalg::max_hermiticity_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { dims, m })
    }

    /// Single-factor operator.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        Self::new(vec![n], m)
    }

    /// Takes the Hermitian part of `m`, for results of exact-arithmetic-Hermitian
    /// computations carrying round-off.
    pub fn from_hermitian_part(dims: Vec<usize>, m: &DMatrix<C64>) -> Result<Self> {
        check_dims(&dims, m.nrows())?;
        Ok(Self {
            dims,
            m: linalg::hermitian_part(m),
        })
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, m: DMatrix<C64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), m.nrows());
        Self { dims, m }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let m = DMatrix::from_diagonal(&DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&x| C64::new(x, 0.0)),
        ));
        Self::from_parts_unchecked(vec![diag.len()], m)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self::from_parts_unchecked(dims, linalg::identity(n))
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self::from_parts_unchecked(dims, DMatrix::zeros(n, n))
    }

    /// `|v><v|` on a single factor.
    pub fn projector(v: &DVector<C64>) -> Self {
        Self::from_parts_unchecked(vec![v.len()], linalg::projector(v))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    /// Same entries under a different factorization of the same total dimension.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.m.nrows())?;
        self.dims = dims;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.m).re
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(linalg::trace_product(&self.m, &other.m).re)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts_unchecked(self.dims.clone(), self.m.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_parts_unchecked(self.dims.clone(), &self.m + &other.m))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_parts_unchecked(self.dims.clone(), &self.m - &other.m))
    }

    /// `u · self · u^†` for any `u` with matching column count.
    pub fn conjugate_by(&self, u: &DMatrix<C64>, out_dims: Vec<usize>) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "conjugating {}-dim operator by {}x{}",
                self.dim(),
                u.nrows(),
                u.ncols()
            )));
        }
        Self::from_hermitian_part(out_dims, &(u * &self.m * u.adjoint()))
    }

    pub fn expectation(&self, v: &DVector<C64>) -> f64 {
        linalg::expectation(&self.m, v)
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_entry(&(&self.m - &other.m))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_parts_unchecked(dims, linalg::kron(&self.m, &other.m))
    }

    /// Transposition on factor `sub`.
    pub fn partial_transpose(&self, sub: usize) -> Result<Self> {
        let k = self.dims.len();
        if sub >= k {
            return Err(Error::SubsystemOutOfRange { index: sub, count: k });
        }
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut rd = vec![0; k];
        let mut cd = vec![0; k];
        for r in 0..n {
            digits(r, &self.dims, &mut rd);
            for col in 0..n {
                digits(col, &self.dims, &mut cd);
                std::mem::swap(&mut rd[sub], &mut cd[sub]);
                out[(flat(&rd, &self.dims), flat(&cd, &self.dims))] = self.m[(r, col)];
                std::mem::swap(&mut rd[sub], &mut cd[sub]);
            }
        }
        Ok(Self::from_parts_unchecked(self.dims.clone(), out))
    }

    /// Traces out factor `sub`. Tracing the only factor yields a 1x1 operator.
    pub fn partial_trace(&self, sub: usize) -> Result<Self> {
        let k = self.dims.len();
        if sub >= k {
            return Err(Error::SubsystemOutOfRange { index: sub, count: k });
        }
        let mut out_dims = self.dims.clone();
        out_dims.remove(sub);
        if out_dims.is_empty() {
            out_dims.push(1);
        }
        let m_out: usize = out_dims.iter().product();
        let mut out = DMatrix::zeros(m_out, m_out);
        let n = self.dim();
        let mut rd = vec![0; k];
        let mut cd = vec![0; k];
        for r in 0..n {
            digits(r, &self.dims, &mut rd);
            for col in 0..n {
                digits(col, &self.dims, &mut cd);
                if rd[sub] != cd[sub] {
                    continue;
                }
                let rr = reduced_index(&rd, &self.dims, sub);
                let cc = reduced_index(&cd, &self.dims, sub);
                out[(rr, cc)] += self.m[(r, col)];
            }
        }
        Ok(Self::from_parts_unchecked(out_dims, out))
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(&self.m)?;
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> Result<DVector<f64>> {
        linalg::hermitian_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(&self.m)
    }

    pub fn is_psd(&self) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= PSD_TOL)
    }

    /// Sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|x| x.abs()).sum())
    }

    /// `tr(sign(A) A)`, the maximizer of `tr(MA)` over `-1 <= M <= 1`.
    pub fn trace_norm_variational(&self) -> Result<f64> {
        let s = self.spectral()?;
        let signs = s.eigenvalues.map(|x| C64::new(if x >= 0.0 { 1.0 } else { -1.0 }, 0.0));
        let m = &s.eigenvectors * DMatrix::from_diagonal(&signs) * s.eigenvectors.adjoint();
        Ok(linalg::trace_product(&m, &self.m).re)
    }

    /// Sum of the absolute values of negative eigenvalues.
    pub fn negative_part_sum(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
    }

    pub fn to_record(&self) -> MatrixRecord {
        MatrixRecord::from_matrix(self.dims.clone(), &self.m)
    }

    pub fn from_record(rec: &MatrixRecord) -> Result<Self> {
        Self::new(rec.dims.clone(), rec.to_matrix()?)
    }
}

fn reduced_index(d: &[usize], dims: &[usize], skip: usize) -> usize {
    let mut acc = 0;
    for (k, (&x, &dk)) in d.iter().zip(dims).enumerate() {
        if k != skip {
            acc = acc * dk + x;
        }
    }
    acc
}

/// Unit-trace (or declared-trace) positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    normalized: bool,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NonUnitTrace(tr));
        }
        Self::check_psd(&op)?;
        Ok(Self { op, normalized: true })
    }

    /// PSD operator whose trace must match `declared_trace`.
    pub fn unnormalized(op: HermitianOperator, declared_trace: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr - declared_trace).abs() > TRACE_TOL {
            return Err(Error::NotDensity(format!(
                "trace {tr} differs from declared {declared_trace}"
            )));
        }
        Self::check_psd(&op)?;
        Ok(Self { op, normalized: false })
    }

    fn check_psd(op: &HermitianOperator) -> Result<()> {
        let lmin = op.min_eigenvalue()?;
        if lmin < PSD_TOL {
            return Err(Error::NotDensity(format!("minimum eigenvalue {lmin:e}")));
        }
        Ok(())
    }

    /// Pure state on the given factorization; `v` is normalised here.
    pub fn pure(dims: Vec<usize>, v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let u = v.unscale(norm);
        let op = HermitianOperator::from_hermitian_part(dims, &linalg::projector(&u))?;
        Ok(Self { op, normalized: true })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        let op = HermitianOperator::identity(dims).scale(1.0 / n as f64);
        Self { op, normalized: true }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(self.matrix(), self.matrix()).re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            op: self.op.tensor(&other.op),
            normalized: self.normalized && other.normalized,
        }
    }

    /// Convex combination `(1-w) self + w other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        let op = self.op.scale(1.0 - w).add(&other.op.scale(w))?;
        Self::new(op)
    }
}

/// Serialized matrix: dims plus row-major `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixRecord {
    pub fn from_matrix(dims: Vec<usize>, m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let z = m[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self { dims, entries }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        let n: usize = self.dims.iter().product();
        if self.entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for dims {:?}",
                self.entries.len(),
                self.dims
            )));
        }
        Ok(DMatrix::from_row_iterator(
            n,
            n,
            self.entries.iter().map(|&[re, im]| C64::new(re, im)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, pauli_x, pauli_z};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn psi_plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        DensityMatrix::pure(vec![2, 2], &v).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
        let g = DMatrix::from_fn(n, n, |_, _| {
            C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        HermitianOperator::from_hermitian_part(vec![n], &g).unwrap()
    }

    #[test]
    fn tensor_of_paulis_and_projectors() {
        let z = HermitianOperator::from_matrix(pauli_z()).unwrap();
        let zz = z.tensor(&z);
        assert_eq!(zz.dims(), &[2, 2]);
        assert_eq!(zz.matrix()[(0, 0)], c(1.0, 0.0));
        let p0 = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        let p1 = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let p01 = p0.tensor(&p1);
        assert_eq!(p01.matrix()[(1, 1)], c(1.0, 0.0));
        assert!((p01.trace() - 1.0).abs() < 1e-15);
        let i4 = HermitianOperator::identity(vec![2]).tensor(&HermitianOperator::identity(vec![2]));
        assert!(i4.max_abs_diff(&HermitianOperator::identity(vec![2, 2])) == 0.0);
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let rho = psi_plus();
        let pt = rho.op().partial_transpose(1).unwrap();
        let ev = pt.eigenvalues().unwrap();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pt.trace_norm().unwrap() - 2.0).abs() < 1e-12);
        assert!((pt.trace_norm_variational().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bell_partial_trace_is_maximally_mixed() {
        let red = psi_plus().op().partial_trace(0).unwrap();
        assert_eq!(red.dims(), &[2]);
        // independent contraction: rho_B[b,b'] = sum_a rho[(a,b),(a,b')]
        let m = psi_plus().matrix().clone();
        for b in 0..2 {
            for bp in 0..2 {
                let direct = m[(b, bp)] + m[(2 + b, 2 + bp)];
                assert!((red.matrix()[(b, bp)] - direct).norm() < 1e-15);
            }
        }
        assert!(red.max_abs_diff(&HermitianOperator::identity(vec![2]).scale(0.5)) < 1e-15);
    }

    #[test]
    fn index_errors() {
        let rho = psi_plus();
        assert!(matches!(
            rho.op().partial_transpose(2),
            Err(Error::SubsystemOutOfRange { index: 2, count: 2 })
        ));
        assert!(rho.op().partial_trace(5).is_err());
    }

    #[test]
    fn spectral_examples() {
        let d = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let ev = d.eigenvalues().unwrap();
        assert_eq!(ev.as_slice().len(), 3);
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let x = HermitianOperator::from_matrix(pauli_x()).unwrap();
        let ev = x.eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        let z = HermitianOperator::from_matrix(pauli_z()).unwrap();
        assert!((z.trace_norm().unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(&mut rng, 8);
        let s = a.spectral().unwrap();
        let scale = linalg::max_abs_entry(a.matrix());
        let err = linalg::max_abs_entry(&(s.reconstruct() - a.matrix()));
        assert!(err <= 1e-9 * scale);
        let gram = s.eigenvectors.adjoint() * &s.eigenvectors;
        assert!(linalg::max_abs_entry(&(gram - linalg::identity(8))) < 1e-10);
        for w in s.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn rejects_non_hermitian_and_bad_dims() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::from_matrix(m), Err(Error::NotHermitian(_))));
        assert!(HermitianOperator::new(vec![3], linalg::identity(4)).is_err());
        let bad = HermitianOperator::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(bad).is_err());
    }

    #[test]
    fn record_roundtrip() {
        let rho = psi_plus();
        let rec = rho.op().to_record();
        let back = HermitianOperator::from_record(&rec).unwrap();
        assert_eq!(&back, rho.op());
        let json = serde_json::to_string(&rec).unwrap();
        let parsed: MatrixRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, rec);
    }
}
