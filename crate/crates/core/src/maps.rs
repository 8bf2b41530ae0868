//! Hermiticity-preserving linear maps in Choi form.
//!
//! The Choi matrix is `J = Σ_ij |i><j| ⊗ Λ(|i><j|)` with the input factor first,
//! so `J[(i·d_out + a), (j·d_out + b)] = Λ(|i><j|)[a, b]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::observables::ObservableSet;
use crate::operator::{DensityMatrix, HermitianOperator, MatrixRecord, PSD_TOL};
use crate::optim::{self, OptimizerInfo, SphereOptions};

/// Tolerance for the trace-preservation and unitality flags.
pub const TP_TOL: f64 = 1e-9;
/// A found output eigenvalue below this certifies non-positivity.
pub const VIOLATION_TOL: f64 = -1e-7;
/// Agreement required between the squashing identity's two sides.
pub const SQUASH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    choi: DMatrix<C64>,
    trace_preserving: bool,
    unital: bool,
}

impl ProcessMap {
    /// Builds a map from its Choi matrix, which must be Hermitian.
    pub fn from_choi(in_dims: Vec<usize>, out_dims: Vec<usize>, choi: DMatrix<C64>) -> Result<Self> {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        if choi.nrows() != din * dout || choi.ncols() != din * dout {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix {}x{} for {din} -> {dout}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        let dev = linalg::max_hermiticity_deviation(&choi);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::assemble(in_dims, out_dims, linalg::hermitian_part(&choi)))
    }

    fn assemble(in_dims: Vec<usize>, out_dims: Vec<usize>, choi: DMatrix<C64>) -> Self {
        let mut m = Self {
            in_dims,
            out_dims,
            choi,
            trace_preserving: false,
            unital: false,
        };
        m.trace_preserving = m.trace_preservation_deviation() <= TP_TOL;
        m.unital = m.unitality_deviation() <= TP_TOL;
        m
    }

    /// Builds the map from its action on the matrix units `|i><j|`.
    pub fn from_fn<F>(in_dims: Vec<usize>, out_dims: Vec<usize>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<DMatrix<C64>>,
    {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        let mut choi = DMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let block = f(i, j)?;
                if block.nrows() != dout || block.ncols() != dout {
                    return Err(Error::DimensionMismatch(format!(
                        "block {}x{} for output dimension {dout}",
                        block.nrows(),
                        block.ncols()
                    )));
                }
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&block);
            }
        }
        Self::from_choi(in_dims, out_dims, choi)
    }

    /// `ρ ↦ Σ_k K_k ρ K_k^†`.
    pub fn from_kraus(in_dims: Vec<usize>, out_dims: Vec<usize>, kraus: &[DMatrix<C64>]) -> Result<Self> {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        let mut choi = DMatrix::zeros(din * dout, din * dout);
        for k in kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {}x{} for {din} -> {dout}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            // vec with input index major: v[(i, a)] = K[a, i]
            let v = DVector::from_fn(din * dout, |r, _| k[(r % dout, r / dout)]);
            choi += &v * v.adjoint();
        }
        Self::from_choi(in_dims, out_dims, choi)
    }

    pub fn identity(d: usize) -> Self {
        let mut choi = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + i, j * d + j)] = ONE;
            }
        }
        Self::assemble(vec![d], vec![d], choi)
    }

    /// Transposition in the computational basis; its Choi matrix is the swap.
    pub fn transpose(d: usize) -> Self {
        let mut choi = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + j, j * d + i)] = ONE;
            }
        }
        Self::assemble(vec![d], vec![d], choi)
    }

    /// `ρ ↦ (1-p) ρ + p tr(ρ) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParameterOutOfRange {
                name: "p",
                value: p,
                range: "[0, 1]",
            });
        }
        let id = Self::identity(d);
        let mut choi = id.choi.scale(1.0 - p);
        for k in 0..d * d {
            choi[(k, k)] += C64::new(p / d as f64, 0.0);
        }
        Ok(Self::assemble(vec![d], vec![d], choi))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn choi(&self) -> &DMatrix<C64> {
        &self.choi
    }

    pub fn choi_operator(&self) -> HermitianOperator {
        HermitianOperator::from_parts_unchecked(vec![self.in_dim(), self.out_dim()], self.choi.clone())
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    /// `max |tr_out J - I|`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let mut dev = 0.0f64;
        for i in 0..din {
            for j in 0..din {
                let mut t = ZERO;
                for a in 0..dout {
                    t += self.choi[(i * dout + a, j * dout + a)];
                }
                let target = if i == j { ONE } else { ZERO };
                dev = dev.max((t - target).norm());
            }
        }
        dev
    }

    /// `max |Λ(I) - I|`, meaningful when input and output dimensions agree.
    pub fn unitality_deviation(&self) -> f64 {
        if self.in_dim() != self.out_dim() {
            return f64::INFINITY;
        }
        let img = self.apply_matrix(&linalg::identity(self.in_dim()));
        linalg::max_abs_entry(&(img - linalg::identity(self.out_dim())))
    }

    /// Action on an arbitrary (not necessarily Hermitian) input matrix.
    pub fn apply_matrix(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let mut out = DMatrix::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let xij = x[(i, j)];
                if xij == ZERO {
                    continue;
                }
                let block = self.choi.view((i * dout, j * dout), (dout, dout));
                out.zip_apply(&block, |o, b| *o += xij * b);
            }
        }
        out
    }

    pub fn apply(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        if a.dim() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "map input dimension {} applied to {}-dim operator",
                self.in_dim(),
                a.dim()
            )));
        }
        HermitianOperator::from_hermitian_part(self.out_dims.clone(), &self.apply_matrix(a.matrix()))
    }

    /// Image of the pure state `|ψ><ψ|`.
    pub fn apply_pure(&self, psi: &DVector<C64>) -> DMatrix<C64> {
        self.apply_matrix(&linalg::projector(psi))
    }

    /// The dual map with respect to the Hilbert–Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let n = din * dout;
        // J†[(a, i), (b, j)] = J[(j, b), (i, a)]
        let choi = DMatrix::from_fn(n, n, |r, c| {
            let (a, i) = (r / din, r % din);
            let (b, j) = (c / din, c % din);
            self.choi[(j * dout + b, i * dout + a)]
        });
        Self::assemble(self.out_dims.clone(), self.in_dims.clone(), choi)
    }

    /// `T∘Λ∘T`, whose Choi matrix is the entrywise conjugate.
    pub fn conjugate_by_transposition(&self) -> Self {
        Self::assemble(self.in_dims.clone(), self.out_dims.clone(), self.choi.map(|z| z.conj()))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        if outer.in_dim() != inner.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "composing {} -> {} after {} -> {}",
                outer.in_dim(),
                outer.out_dim(),
                inner.in_dim(),
                inner.out_dim()
            )));
        }
        let (din, dmid, dout) = (inner.in_dim(), inner.out_dim(), outer.out_dim());
        let mut choi = DMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let block = inner.choi.view((i * dmid, j * dmid), (dmid, dmid)).into_owned();
                let img = outer.apply_matrix(&block);
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&img);
            }
        }
        Ok(Self::assemble(inner.in_dims.clone(), outer.out_dims.clone(), choi))
    }

    /// `a ⊗ b` acting on the product of the input spaces.
    pub fn tensor_maps(a: &Self, b: &Self) -> Self {
        let (ia, oa, ib, ob) = (a.in_dim(), a.out_dim(), b.in_dim(), b.out_dim());
        let din = ia * ib;
        let dout = oa * ob;
        let n = din * dout;
        let choi = DMatrix::from_fn(n, n, |r, c| {
            let (ri, ra) = (r / dout, r % dout);
            let (ci, ca) = (c / dout, c % dout);
            let (i1, i2, a1, a2) = (ri / ib, ri % ib, ra / ob, ra % ob);
            let (j1, j2, b1, b2) = (ci / ib, ci % ib, ca / ob, ca % ob);
            a.choi[(i1 * oa + a1, j1 * oa + b1)] * b.choi[(i2 * ob + a2, j2 * ob + b2)]
        });
        let mut in_dims = a.in_dims.clone();
        in_dims.extend_from_slice(&b.in_dims);
        let mut out_dims = a.out_dims.clone();
        out_dims.extend_from_slice(&b.out_dims);
        Self::assemble(in_dims, out_dims, choi)
    }

    /// Linear combination `Σ w_k Λ_k` of maps with equal shapes.
    pub fn combine(terms: &[(f64, &Self)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty map combination".into()))?;
        let mut choi = DMatrix::zeros(first.choi.nrows(), first.choi.ncols());
        for (w, m) in terms {
            if m.in_dim() != first.in_dim() || m.out_dim() != first.out_dim() {
                return Err(Error::DimensionMismatch("maps of different shapes".into()));
            }
            choi += m.choi.scale(*w);
        }
        Ok(Self::assemble(first.in_dims.clone(), first.out_dims.clone(), choi))
    }

    /// Restriction to the input subspace spanned by the given basis indices.
    pub fn restrict_input(&self, indices: &[usize]) -> Result<Self> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        if let Some(&bad) = indices.iter().find(|&&i| i >= din) {
            return Err(Error::InvalidArgument(format!("input index {bad} out of range")));
        }
        let k = indices.len();
        let choi = DMatrix::from_fn(k * dout, k * dout, |r, c| {
            let (i, a) = (indices[r / dout], r % dout);
            let (j, b) = (indices[c / dout], c % dout);
            self.choi[(i * dout + a, j * dout + b)]
        });
        Ok(Self::assemble(vec![k], self.out_dims.clone(), choi))
    }

    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(&self.choi)
    }

    pub fn to_record(&self) -> ProcessMapRecord {
        ProcessMapRecord {
            in_dims: self.in_dims.clone(),
            out_dims: self.out_dims.clone(),
            choi: MatrixRecord::from_matrix(vec![self.in_dim(), self.out_dim()], &self.choi),
            trace_preserving: self.trace_preserving,
            unital: self.unital,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcessMapRecord {
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub choi: MatrixRecord,
    pub trace_preserving: bool,
    pub unital: bool,
}

/// Analytic evidence of positivity supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PositivityCertificate {
    CompletelyPositive,
    /// Every expectation vector of the full set lies in the target Bloch ball.
    BlochBallInclusion { blocks: usize, max_norm: f64 },
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PositivityStatus {
    CertifiedYes { certificate: PositivityCertificate },
    CertifiedNo {
        /// Unit input vector whose image has a negative eigenvalue.
        #[serde(serialize_with = "serialize_vector")]
        witness: DVector<C64>,
        min_output_eigenvalue: f64,
    },
    Undecided,
}

fn serialize_vector<S: serde::Serializer>(v: &DVector<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v.iter() {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub completely_positive: bool,
    pub min_choi_eigenvalue: f64,
    pub positive: PositivityStatus,
    /// Smallest output eigenvalue found over pure inputs; `None` when not searched.
    pub worst_min_eigenvalue: Option<f64>,
    pub optimizer: Option<OptimizerInfo>,
}

impl PositivityVerdict {
    pub fn witness_state(&self) -> Option<DensityMatrix> {
        match &self.positive {
            PositivityStatus::CertifiedNo { witness, .. } => {
                DensityMatrix::pure(vec![witness.len()], witness).ok()
            }
            _ => None,
        }
    }

    pub fn is_certified_positive(&self) -> bool {
        matches!(self.positive, PositivityStatus::CertifiedYes { .. })
    }

    pub fn is_certified_not_positive(&self) -> bool {
        matches!(self.positive, PositivityStatus::CertifiedNo { .. })
    }
}

/// CP test on the Choi spectrum. Complete positivity also settles positivity.
pub fn check_complete_positivity(m: &ProcessMap) -> Result<PositivityVerdict> {
    let lmin = m.min_choi_eigenvalue()?;
    let cp = lmin >= PSD_TOL;
    Ok(PositivityVerdict {
        completely_positive: cp,
        min_choi_eigenvalue: lmin,
        positive: if cp {
            PositivityStatus::CertifiedYes {
                certificate: PositivityCertificate::CompletelyPositive,
            }
        } else {
            PositivityStatus::Undecided
        },
        worst_min_eigenvalue: None,
        optimizer: None,
    })
}

/// Searches pure inputs for a negative output eigenvalue.
///
/// A found violation wins over any supplied certificate; otherwise positivity is
/// certified only through complete positivity or `certificate`.
pub fn check_positivity(
    m: &ProcessMap,
    restarts: usize,
    seed: u64,
    certificate: Option<PositivityCertificate>,
) -> Result<PositivityVerdict> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let cp = check_complete_positivity(m)?;
    let adj = m.adjoint();
    let d = m.in_dim();
    let basis_starts: Vec<DVector<C64>> = (0..d)
        .map(|k| {
            let mut v = DVector::zeros(d);
            v[k] = ONE;
            v
        })
        .collect();
    let opts = SphereOptions::new(restarts, seed).with_initial_points(basis_starts);
    let res = optim::minimize(d, &opts, |psi| {
        let out = m.apply_pure(psi);
        let (vals, vecs) = linalg::hermitian_eigen(&out)?;
        let v = vecs.column(0).into_owned();
        let g = adj.apply_matrix(&linalg::projector(&v)) * psi;
        Ok((vals[0], g))
    })?;
    let positive = if res.value < VIOLATION_TOL {
        PositivityStatus::CertifiedNo {
            witness: res.argmax.clone(),
            min_output_eigenvalue: res.value,
        }
    } else if cp.completely_positive {
        cp.positive.clone()
    } else if let Some(c) = certificate {
        PositivityStatus::CertifiedYes { certificate: c }
    } else {
        PositivityStatus::Undecided
    };
    Ok(PositivityVerdict {
        completely_positive: cp.completely_positive,
        min_choi_eigenvalue: cp.min_choi_eigenvalue,
        positive,
        worst_min_eigenvalue: Some(res.value),
        optimizer: Some(res.info(seed)),
    })
}

/// `ρ ↦ (tr ρ F_i)_i`.
#[derive(Debug, Clone)]
pub struct MeasurementMap<'a> {
    set: &'a ObservableSet,
}

impl MeasurementMap<'_> {
    pub fn apply(&self, rho: &HermitianOperator) -> Result<Vec<f64>> {
        self.set.expectations(rho)
    }
}

pub fn measurement_map(set: &ObservableSet) -> MeasurementMap<'_> {
    MeasurementMap { set }
}

pub fn linear_inversion(set: &ObservableSet, e: &[f64]) -> Result<crate::observables::Reconstruction> {
    set.linear_inversion(e)
}

/// `Λ = R_T ∘ M_F`: maps full-space states to target-space operators with
/// `tr(ρ F_i) = tr(Λ[ρ] T_i)`.
pub fn build_squasher(targets: &ObservableSet, fulls: &ObservableSet) -> Result<ProcessMap> {
    if targets.len() != fulls.len() {
        return Err(Error::LengthMismatch {
            targets: targets.len(),
            fulls: fulls.len(),
        });
    }
    targets.ensure_complete()?;
    let d = fulls.dim();
    let mut worst = 0.0f64;
    let map = ProcessMap::from_fn(fulls.dims().to_vec(), targets.dims().to_vec(), |i, j| {
        let mut unit = DMatrix::zeros(d, d);
        unit[(i, j)] = ONE;
        let e = fulls.expectations_complex(&unit);
        let tr = if i == j { ONE } else { ZERO };
        let out = targets.reconstruct_linear(&e, tr);
        for (k, t) in targets.operators().iter().enumerate() {
            let got = linalg::trace_product(t.matrix(), &out);
            worst = worst.max((got - e[k]).norm());
        }
        Ok(out)
    })?;
    let scale = fulls
        .operators()
        .iter()
        .map(|f| linalg::max_abs_entry(f.matrix()))
        .fold(1.0, f64::max);
    if worst > SQUASH_TOL * scale {
        return Err(Error::IncompatibleDependencies(worst));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::observables::pauli_set;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cc: usize) -> DMatrix<C64> {
        DMatrix::from_fn(r, cc, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
        HermitianOperator::from_hermitian_part(vec![n], &random_matrix(rng, n, n)).unwrap()
    }

    fn random_hp_map(rng: &mut ChaCha8Rng, din: usize, dout: usize) -> ProcessMap {
        let g = random_matrix(rng, din * dout, din * dout);
        ProcessMap::from_choi(vec![din], vec![dout], linalg::hermitian_part(&g)).unwrap()
    }

    fn bell() -> HermitianOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        DensityMatrix::pure(vec![2, 2], &v).unwrap().into_op()
    }

    #[test]
    fn identity_and_transpose_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_hermitian(&mut rng, 3);
        assert!(ProcessMap::identity(3).apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
        let y = HermitianOperator::from_matrix(linalg::pauli_y()).unwrap();
        let ty = ProcessMap::transpose(2).apply(&y).unwrap();
        assert!(ty.max_abs_diff(&y.scale(-1.0)) < 1e-15);
        let t = ProcessMap::transpose(2);
        assert_eq!(t.conjugate_by_transposition(), t);
        let id = ProcessMap::identity(2);
        assert_eq!(id.conjugate_by_transposition(), id);
        assert_eq!(id.adjoint(), id);
    }

    #[test]
    fn linearity_of_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_hp_map(&mut rng, 3, 2);
        let a = random_hermitian(&mut rng, 3);
        let b = random_hermitian(&mut rng, 3);
        let lhs = m.apply(&a.add(&b).unwrap()).unwrap();
        let rhs = m.apply(&a).unwrap().add(&m.apply(&b).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn adjoint_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_hp_map(&mut rng, 3, 4);
            let rho = random_hermitian(&mut rng, 3);
            let x = random_hermitian(&mut rng, 4);
            let lhs = m.apply(&rho).unwrap().inner(&x).unwrap();
            let rhs = rho.inner(&m.adjoint().apply(&x).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            assert!(linalg::max_abs_entry(&(m.adjoint().adjoint().choi - &m.choi)) < 1e-15);
        }
    }

    #[test]
    fn adjoint_of_trace_preserving_is_unital() {
        let dep = ProcessMap::depolarizing(3, 0.3).unwrap();
        assert!(dep.is_trace_preserving());
        let k = DMatrix::from_row_slice(2, 3, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        // Not trace preserving, so its adjoint is not unital.
        let m = ProcessMap::from_kraus(vec![3], vec![2], &[k]).unwrap();
        assert!(!m.is_trace_preserving());
        let amp = ProcessMap::from_kraus(
            vec![2],
            vec![2],
            &[
                DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)]),
                DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            ],
        )
        .unwrap();
        assert!(amp.is_trace_preserving());
        assert!(amp.adjoint().is_unital());
        assert!(!amp.is_unital());
    }

    #[test]
    fn compose_and_tensor_agree_with_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inner = random_hp_map(&mut rng, 2, 3);
        let outer = random_hp_map(&mut rng, 3, 2);
        let comp = ProcessMap::compose(&outer, &inner).unwrap();
        for _ in 0..5 {
            let x = random_hermitian(&mut rng, 2);
            let seq = outer.apply(&inner.apply(&x).unwrap()).unwrap();
            assert!(comp.apply(&x).unwrap().max_abs_diff(&seq) < 1e-10);
        }
        let id = ProcessMap::identity(3);
        assert!(linalg::max_abs_entry(&(ProcessMap::compose(&id, &inner).unwrap().choi - &inner.choi)) < 1e-15);
        let lhs = ProcessMap::compose(&inner.adjoint(), &outer.adjoint()).unwrap();
        let rhs = ProcessMap::compose(&outer, &inner).unwrap().adjoint();
        assert!(linalg::max_abs_entry(&(lhs.choi - rhs.choi)) < 1e-10);
        assert!(ProcessMap::compose(&inner, &inner).is_err());

        let a = random_hp_map(&mut rng, 2, 3);
        let b = random_hp_map(&mut rng, 3, 2);
        let ab = ProcessMap::tensor_maps(&a, &b);
        let xa = random_hermitian(&mut rng, 2);
        let xb = random_hermitian(&mut rng, 3);
        let lhs = ab.apply(&xa.tensor(&xb)).unwrap();
        let rhs = a.apply(&xa).unwrap().tensor(&b.apply(&xb).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn transpose_tensor_identity_is_partial_transpose() {
        let tid = ProcessMap::tensor_maps(&ProcessMap::transpose(2), &ProcessMap::identity(2));
        let out = tid.apply(&bell()).unwrap();
        assert!(out.max_abs_diff(&bell().partial_transpose(0).unwrap()) < 1e-15);
    }

    #[test]
    fn complete_positivity_examples() {
        assert!(check_complete_positivity(&ProcessMap::identity(2)).unwrap().completely_positive);
        let t = check_complete_positivity(&ProcessMap::transpose(2)).unwrap();
        assert!(!t.completely_positive);
        // Choi of transposition is the swap: spectrum {-1, 1, 1, 1}.
        assert!((t.min_choi_eigenvalue + 1.0).abs() < 1e-12);
        let dep = check_complete_positivity(&ProcessMap::depolarizing(2, 0.5).unwrap()).unwrap();
        assert!(dep.completely_positive);
        assert!((dep.min_choi_eigenvalue - 0.25).abs() < 1e-12);
    }

    #[test]
    fn positivity_examples() {
        let id = check_positivity(&ProcessMap::identity(2), 8, 0, None).unwrap();
        assert!(id.is_certified_positive());
        let t = check_positivity(&ProcessMap::transpose(2), 8, 0, None).unwrap();
        assert_eq!(t.positive, PositivityStatus::Undecided);
        assert!(t.worst_min_eigenvalue.unwrap() > -1e-9);
        let cert = PositivityCertificate::Other("transpose of a PSD matrix is PSD".into());
        let t = check_positivity(&ProcessMap::transpose(2), 8, 0, Some(cert)).unwrap();
        assert!(t.is_certified_positive());

        let tid = ProcessMap::tensor_maps(&ProcessMap::transpose(2), &ProcessMap::identity(2));
        let v = check_positivity(&tid, 16, 5, None).unwrap();
        match &v.positive {
            PositivityStatus::CertifiedNo { witness, min_output_eigenvalue } => {
                assert!((min_output_eigenvalue + 0.5).abs() < 1e-8, "{min_output_eigenvalue}");
                // the witness is a maximally entangled state
                let rho = DensityMatrix::pure(vec![2, 2], witness).unwrap();
                let red = rho.op().partial_trace(1).unwrap();
                assert!(red.max_abs_diff(&HermitianOperator::identity(vec![2]).scale(0.5)) < 1e-4);
            }
            other => panic!("expected violation, got {other:?}"),
        }
        assert!(v.witness_state().is_some());
    }

    #[test]
    fn measurement_and_inversion() {
        let p = pauli_set();
        let zero = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(measurement_map(&p).apply(&zero).unwrap(), vec![0.0, 0.0, 1.0]);
        let mixed = HermitianOperator::identity(vec![2]).scale(0.5);
        let e = measurement_map(&p).apply(&mixed).unwrap();
        assert!(e.iter().all(|x| x.abs() < 1e-15));
        let r = linear_inversion(&p, &[0.0, 0.0, 1.0]).unwrap();
        assert!(r.operator.max_abs_diff(&zero) < 1e-14);
    }

    #[test]
    fn squasher_of_identical_sets_is_identity() {
        let p = pauli_set();
        let sq = build_squasher(&p, &p).unwrap();
        assert!(linalg::max_abs_entry(&(sq.choi() - ProcessMap::identity(2).choi())) < 1e-12);
        assert!(sq.is_trace_preserving());
    }

    #[test]
    fn squasher_rejects_mismatched_sets() {
        let p = pauli_set();
        let short = ObservableSet::new(
            p.operators()[..2].to_vec(),
            p.labels()[..2].to_vec(),
            crate::observables::Normalization::UnitTrace,
        )
        .unwrap();
        assert!(matches!(build_squasher(&p, &short), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            build_squasher(&short, &short),
            Err(Error::NotTomographicallyComplete { .. })
        ));
    }

    #[test]
    fn restriction_keeps_selected_block() {
        let id = ProcessMap::identity(3);
        let r = id.restrict_input(&[0, 2]).unwrap();
        assert_eq!(r.in_dim(), 2);
        assert_eq!(r.out_dim(), 3);
        let mut x = DMatrix::zeros(2, 2);
        x[(1, 1)] = ONE;
        let out = r.apply_matrix(&x);
        assert_eq!(out[(2, 2)], ONE);
    }
}
