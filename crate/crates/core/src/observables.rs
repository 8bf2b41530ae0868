//! Ordered observable sets and linear inversion of their expectation values.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator::{DensityMatrix, HermitianOperator};

/// Relative singular-value threshold for the design-matrix rank.
pub const RANK_TOL: f64 = 1e-8;
/// Largest accepted residual when the data overdetermine the reconstruction.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// POVM closure tolerance.
pub const POVM_TOL: f64 = 1e-9;

/// Extra linear functional the reconstruction must honour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Normalization {
    /// Expectations alone determine the operator.
    None,
    /// `tr X` is supplied separately (1 for states).
    UnitTrace,
    /// Each group of operator indices sums to the identity.
    Povm(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
struct Design {
    basis: Vec<DMatrix<C64>>,
    pinv: DMatrix<f64>,
    rank: usize,
}

/// Observable list on one space, with the block-diagonal algebra that
/// reconstructions live in.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    dims: Vec<usize>,
    ops: Vec<HermitianOperator>,
    labels: Vec<String>,
    normalization: Normalization,
    sectors: Vec<Vec<usize>>,
    design: OnceLock<Design>,
}

/// Result of [`ObservableSet::linear_inversion`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub operator: HermitianOperator,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

impl ObservableSet {
    pub fn new(ops: Vec<HermitianOperator>, labels: Vec<String>, normalization: Normalization) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty observable set".into()))?;
        let dims = first.dims().to_vec();
        if let Some(bad) = ops.iter().find(|o| o.dims() != dims.as_slice()) {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {:?} vs {:?}",
                bad.dims(),
                dims
            )));
        }
        if labels.len() != ops.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} operators",
                labels.len(),
                ops.len()
            )));
        }
        let d = first.dim();
        let set = Self {
            dims,
            ops,
            labels,
            normalization,
            sectors: vec![(0..d).collect()],
            design: OnceLock::new(),
        };
        if let Normalization::Povm(groups) = &set.normalization {
            set.check_povm(groups)?;
        }
        Ok(set)
    }

    fn check_povm(&self, groups: &[Vec<usize>]) -> Result<()> {
        let d = self.dim();
        for g in groups {
            let mut sum = DMatrix::<C64>::zeros(d, d);
            for &i in g {
                let op = self.ops.get(i).ok_or_else(|| {
                    Error::InvalidArgument(format!("POVM group index {i} out of range"))
                })?;
                let lmin = op.min_eigenvalue()?;
                if lmin < -POVM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "POVM element `{}` has eigenvalue {lmin:e}",
                        self.labels[i]
                    )));
                }
                sum += op.matrix();
            }
            let dev = linalg::max_abs_entry(&(sum - linalg::identity(d)));
            if dev > POVM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "POVM group does not sum to identity (deviation {dev:e})"
                )));
            }
        }
        Ok(())
    }

    /// Restricts reconstructions to the block-diagonal algebra over the given index sets.
    pub fn with_sectors(mut self, sectors: Vec<Vec<usize>>) -> Result<Self> {
        let d = self.dim();
        let mut seen = vec![false; d];
        for &i in sectors.iter().flatten() {
            if i >= d || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "sector index {i} out of range or repeated"
                )));
            }
            seen[i] = true;
        }
        self.sectors = sectors;
        self.design = OnceLock::new();
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn operators(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn sectors(&self) -> &[Vec<usize>] {
        &self.sectors
    }

    pub fn is_povm(&self) -> bool {
        matches!(self.normalization, Normalization::Povm(_))
    }

    fn has_trace_row(&self) -> bool {
        self.normalization == Normalization::UnitTrace
    }

    fn design(&self) -> &Design {
        self.design.get_or_init(|| {
            let d = self.dim();
            let basis = linalg::hermitian_basis(d, &self.sectors);
            let nb = basis.len();
            let extra = usize::from(self.has_trace_row());
            let m = self.ops.len() + extra;
            let mut a = DMatrix::<f64>::zeros(m, nb);
            for (i, op) in self.ops.iter().enumerate() {
                for (k, b) in basis.iter().enumerate() {
                    a[(i, k)] = linalg::trace_product(op.matrix(), b).re;
                }
            }
            if extra == 1 {
                for (k, b) in basis.iter().enumerate() {
                    a[(m - 1, k)] = linalg::trace(b).re;
                }
            }
            let svd = a.clone().svd(true, true);
            let u = svd.u.as_ref().expect("requested U");
            let vt = svd.v_t.as_ref().expect("requested V^T");
            let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&k| smax > 0.0 && svd.singular_values[k] > RANK_TOL * smax)
                .collect();
            let rank = keep.len();
            let mut pinv = DMatrix::<f64>::zeros(nb, m);
            for &k in &keep {
                let s = svd.singular_values[k];
                let uk = u.column(k);
                let vk = vt.row(k).transpose();
                pinv += (vk * uk.transpose()).unscale(s);
            }
            Design {
                basis,
                pinv,
                rank,
            }
        })
    }

    /// Dimension of the real space of Hermitian operators in the sector algebra.
    pub fn required_rank(&self) -> usize {
        self.sectors.iter().map(|s| s.len() * s.len()).sum()
    }

    pub fn rank(&self) -> usize {
        self.design().rank
    }

    pub fn is_tomographically_complete(&self) -> bool {
        self.rank() == self.required_rank()
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.is_tomographically_complete() {
            Ok(())
        } else {
            Err(Error::NotTomographicallyComplete {
                rank: self.rank(),
                required: self.required_rank(),
            })
        }
    }

    /// `E_i = tr(x F_i)`.
    pub fn expectations(&self, x: &HermitianOperator) -> Result<Vec<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator of dimension {} for observables of dimension {}",
                x.dim(),
                self.dim()
            )));
        }
        self.ops.iter().map(|f| f.inner(x)).collect()
    }

    /// `tr(x F_i)` for a general (non-Hermitian) matrix.
    pub fn expectations_complex(&self, x: &DMatrix<C64>) -> Vec<C64> {
        self.ops.iter().map(|f| linalg::trace_product(f.matrix(), x)).collect()
    }

    /// Complex-linear reconstruction `R(E)`; `trace` feeds the normalization row.
    pub(crate) fn reconstruct_linear(&self, e: &[C64], trace: C64) -> DMatrix<C64> {
        let des = self.design();
        let mut rhs_re = DVector::<f64>::from_iterator(e.len(), e.iter().map(|z| z.re));
        let mut rhs_im = DVector::<f64>::from_iterator(e.len(), e.iter().map(|z| z.im));
        if self.has_trace_row() {
            rhs_re = rhs_re.push(trace.re);
            rhs_im = rhs_im.push(trace.im);
        }
        let xr = &des.pinv * rhs_re;
        let xi = &des.pinv * rhs_im;
        let d = self.dim();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for (k, b) in des.basis.iter().enumerate() {
            out += b * C64::new(xr[k], xi[k]);
        }
        out
    }

    /// Unique Hermitian `X` in the sector algebra with `tr(X T_i) = E_i`
    /// (and `tr X = 1` under unit-trace normalization). Not repaired if non-PSD.
    pub fn linear_inversion(&self, e: &[f64]) -> Result<Reconstruction> {
        if e.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} expectations for {} observables",
                e.len(),
                self.len()
            )));
        }
        self.ensure_complete()?;
        let ez: Vec<C64> = e.iter().map(|&x| C64::new(x, 0.0)).collect();
        let x = self.reconstruct_linear(&ez, C64::new(1.0, 0.0));
        let op = HermitianOperator::from_hermitian_part(self.dims.clone(), &x)?;
        let mut residual = self
            .expectations(&op)?
            .iter()
            .zip(e)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if self.has_trace_row() {
            residual = residual.max((op.trace() - 1.0).abs());
        }
        if residual > RESIDUAL_TOL {
            return Err(Error::InconsistentData(residual));
        }
        let min_eigenvalue = op.min_eigenvalue()?;
        Ok(Reconstruction {
            is_psd: min_eigenvalue >= crate::operator::PSD_TOL,
            min_eigenvalue,
            residual,
            operator: op,
        })
    }

    /// Products `A_i ⊗ B_j`, ordered with `i` major.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut ops = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(ops.capacity());
        for (a, la) in self.ops.iter().zip(&self.labels) {
            for (b, lb) in other.ops.iter().zip(&other.labels) {
                ops.push(a.tensor(b));
                labels.push(format!("{la}|{lb}"));
            }
        }
        let nb = other.len();
        let normalization = match (&self.normalization, &other.normalization) {
            (Normalization::Povm(ga), Normalization::Povm(gb)) => {
                let mut groups = Vec::new();
                for g in ga {
                    for h in gb {
                        groups.push(g.iter().flat_map(|&i| h.iter().map(move |&j| i * nb + j)).collect());
                    }
                }
                Normalization::Povm(groups)
            }
            (Normalization::None, Normalization::None) => Normalization::None,
            _ => Normalization::UnitTrace,
        };
        let db = other.dim();
        let sectors = self
            .sectors
            .iter()
            .flat_map(|sa| {
                other.sectors.iter().map(move |sb| {
                    sa.iter().flat_map(|&a| sb.iter().map(move |&b| a * db + b)).collect()
                })
            })
            .collect();
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let set = Self {
            dims,
            ops,
            labels,
            normalization,
            sectors: vec![],
            design: OnceLock::new(),
        };
        set.with_sectors(sectors)
    }

    /// Expectations of a density matrix, as `measurement_map` would report.
    pub fn measure(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.expectations(rho.op())
    }
}

/// Pauli set `{σ_x, σ_y, σ_z}` with unit-trace normalization.
pub fn pauli_set() -> ObservableSet {
    let ops = [linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()]
        .into_iter()
        .map(|m| HermitianOperator::from_matrix(m).expect("Pauli matrices are Hermitian"))
        .collect();
    ObservableSet::new(ops, vec!["x".into(), "y".into(), "z".into()], Normalization::UnitTrace)
        .expect("Pauli set is well formed")
}
