//! Small dense semidefinite programs over Hermitian unknowns.
//!
//! A problem is a set of real decision variables `y`, affine Hermitian blocks
//! `F_b(y) = F_b0 + Σ_k y_k F_bk` required to be PSD, linear equalities and an
//! optional linear objective to minimize. Complex blocks are embedded as real
//! symmetric matrices through [`linalg::realify`]; equalities are eliminated by
//! Gauss-Jordan reduction before the interior-point solve.
//!
//! Feasibility is decided by a phase-I problem `min t` subject to
//! `F_b(y) + t I ⪰ 0` and `t ≥ -1`. A negative optimal `t` gives a strictly
//! feasible point; a positive one comes with a dual ray `X ⪰ 0` satisfying
//! `tr(X F_bk) = 0` and `tr(X F_b0) < 0`, which rules out every `y`.

mod ipm;
mod problems;

pub use problems::{
    bisect_threshold, diamond_norm, diamond_norm_lower_bound, h1_norm_ppt_upper_bound, separable_compatibility, threshold_search,
    trace_norm_sdp, CompatibilityOptions, CompatibilityReport, ConstraintMode, DiamondNorm, ExpectationData,
    IonTrapScenario, ThresholdResult,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use ipm::{Entry, IpmSettings, StdForm};

/// Largest number of real variables accepted after elimination.
pub const MAX_VARIABLES: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdpTolerances {
    /// Relative duality gap for `optimal`.
    pub gap: f64,
    /// Strict feasibility margin for feasibility declarations.
    pub feasibility_margin: f64,
    pub max_iterations: usize,
}

impl Default for SdpTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            feasibility_margin: 1e-9,
            max_iterations: 200,
        }
    }
}

/// Hermitian unknown occupying `dim²` consecutive real variables, one per
/// element of the orthonormal basis from [`linalg::hermitian_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianVar {
    offset: usize,
    dim: usize,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    fn basis(&self) -> Vec<DMatrix<C64>> {
        linalg::hermitian_basis(self.dim, &[(0..self.dim).collect()])
    }

    /// The unknown as an affine expression.
    pub fn expr(&self) -> AffineHermitian {
        AffineHermitian {
            constant: DMatrix::zeros(self.dim, self.dim),
            terms: self.basis().into_iter().enumerate().map(|(k, m)| (self.offset + k, m)).collect(),
        }
    }

    /// Value of the unknown at a solution vector.
    pub fn value(&self, y: &[f64]) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, m) in self.basis().into_iter().enumerate() {
            out += m.scale(y[self.offset + k]);
        }
        out
    }
}

/// `constant + Σ y_k M_k` with Hermitian matrices.
#[derive(Debug, Clone)]
pub struct AffineHermitian {
    pub constant: DMatrix<C64>,
    pub terms: Vec<(usize, DMatrix<C64>)>,
}

impl AffineHermitian {
    pub fn constant(m: DMatrix<C64>) -> Self {
        Self {
            constant: m,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// Applies a real-linear, Hermiticity-preserving map to every coefficient.
    pub fn map<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(&self, f: F) -> Self {
        Self {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(k, m)| (*k, f(m))).collect(),
        }
    }

    pub fn plus(mut self, other: &Self) -> Self {
        self.constant += &other.constant;
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn add_constant(mut self, m: &DMatrix<C64>) -> Self {
        self.constant += m;
        self
    }

    /// Real coefficients and constant of `tr(F · self)` for Hermitian `F`.
    pub fn trace_against(&self, f: &DMatrix<C64>) -> (Vec<(usize, f64)>, f64) {
        let coeffs = self.terms.iter().map(|(k, m)| (*k, linalg::trace_product(f, m).re)).collect();
        (coeffs, linalg::trace_product(f, &self.constant).re)
    }
}

#[derive(Debug, Clone, Serialize)]
struct LmiBlock {
    /// Real dimension after embedding.
    dim: usize,
    constant: Vec<f64>,
    /// `(variable, row, col, value)` with both triangles present.
    coeffs: Vec<(usize, usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
struct Equality {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SdpProblem {
    n_vars: usize,
    blocks: Vec<LmiBlock>,
    equalities: Vec<Equality>,
    objective: Option<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Feasible,
    InfeasibleCertified,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InfeasibilityCertificate {
    /// The equalities alone are inconsistent.
    Equalities { residual: f64 },
    /// Dual ray on the PSD blocks (real embedded, row-major).
    Ray {
        blocks: Vec<Vec<f64>>,
        /// `-Σ tr(X_b F_b0)`; positive certifies infeasibility.
        value: f64,
        /// Largest `|Σ_b tr(X_b F_bk)|` over eliminated variables.
        residual: f64,
        min_eigenvalue: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective at the returned point (primal value of the minimization).
    pub objective: Option<f64>,
    /// Value of the dual problem; a lower bound on the minimum.
    pub dual_objective: Option<f64>,
    pub duality_gap: f64,
    pub variables: Vec<f64>,
    /// Smallest eigenvalue over all PSD blocks at `variables`.
    pub min_slack: f64,
    pub certificate: Option<InfeasibilityCertificate>,
    pub iterations: usize,
    pub diagnostics: String,
    /// Real multiplier blocks of the main solve, one per PSD block in the order
    /// added; the last iterate if that solve did not converge. Empty when the
    /// main solve did not run.
    #[serde(skip)]
    pub multipliers: Vec<DMatrix<f64>>,
}

impl SdpSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, SdpStatus::Optimal | SdpStatus::Feasible)
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn add_scalar(&mut self) -> usize {
        self.n_vars += 1;
        self.n_vars - 1
    }

    pub fn add_hermitian(&mut self, dim: usize) -> HermitianVar {
        let v = HermitianVar {
            offset: self.n_vars,
            dim,
        };
        self.n_vars += dim * dim;
        v
    }

    fn check_vars(&self, idx: impl IntoIterator<Item = usize>) -> Result<()> {
        for k in idx {
            if k >= self.n_vars {
                return Err(Error::InvalidArgument(format!("variable {k} not allocated")));
            }
        }
        Ok(())
    }

    /// Requires `expr ⪰ 0`.
    pub fn psd(&mut self, expr: &AffineHermitian) -> Result<()> {
        let n = expr.dim();
        self.check_vars(expr.terms.iter().map(|t| t.0))?;
        for m in std::iter::once(&expr.constant).chain(expr.terms.iter().map(|t| &t.1)) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "block term {}x{} in a {n}x{n} block",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if linalg::max_hermiticity_deviation(m) > 1e-12 * (1.0 + linalg::max_abs_entry(m)) {
                return Err(Error::NotHermitian(linalg::max_hermiticity_deviation(m)));
            }
        }
        let c = linalg::realify(&expr.constant);
        let mut coeffs = Vec::new();
        for (k, m) in &expr.terms {
            let r = linalg::realify(m);
            for i in 0..2 * n {
                for j in 0..2 * n {
                    let v = r[(i, j)];
                    if v != 0.0 {
                        coeffs.push((*k, i, j, v));
                    }
                }
            }
        }
        self.blocks.push(LmiBlock {
            dim: 2 * n,
            constant: c.transpose().iter().cloned().collect(),
            coeffs,
        });
        Ok(())
    }

    /// Requires a real scalar expression `constant + Σ c_k y_k ≥ 0`.
    pub fn nonnegative(&mut self, coeffs: &[(usize, f64)], constant: f64) -> Result<()> {
        self.check_vars(coeffs.iter().map(|t| t.0))?;
        self.blocks.push(LmiBlock {
            dim: 1,
            constant: vec![constant],
            coeffs: coeffs.iter().map(|&(k, v)| (k, 0, 0, v)).collect(),
        });
        Ok(())
    }

    /// `Σ c_k y_k = rhs`.
    pub fn equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
        self.check_vars(coeffs.iter().map(|t| t.0))?;
        self.equalities.push(Equality { coeffs, rhs });
        Ok(())
    }

    /// `tr(F · expr) = value`.
    pub fn trace_equality(&mut self, expr: &AffineHermitian, f: &DMatrix<C64>, value: f64) -> Result<()> {
        let (coeffs, constant) = expr.trace_against(f);
        self.equality(coeffs, value - constant)
    }

    /// Minimize `constant + Σ c_k y_k`.
    pub fn minimize(&mut self, coeffs: Vec<(usize, f64)>, constant: f64) -> Result<()> {
        self.check_vars(coeffs.iter().map(|t| t.0))?;
        self.objective = Some((coeffs, constant));
        Ok(())
    }

    pub fn has_objective(&self) -> bool {
        self.objective.is_some()
    }

    /// Smallest eigenvalue over all blocks at `y`.
    pub fn min_slack(&self, y: &[f64]) -> Result<f64> {
        let mut min = f64::INFINITY;
        for blk in &self.blocks {
            let mut m = DMatrix::from_row_slice(blk.dim, blk.dim, &blk.constant);
            for &(k, i, j, v) in &blk.coeffs {
                m[(i, j)] += v * y[k];
            }
            let (ev, _) = linalg::symmetric_eigen(&m)?;
            min = min.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        Ok(min)
    }

    fn objective_value(&self, y: &[f64]) -> Option<f64> {
        self.objective.as_ref().map(|(c, c0)| c0 + c.iter().map(|&(k, v)| v * y[k]).sum::<f64>())
    }
}

/// `y = y0 + N z`, with `N` kept sparse as one column per free variable.
struct Elimination {
    y0: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
}

impl Elimination {
    fn expand(&self, z: &[f64]) -> Vec<f64> {
        let mut y = self.y0.clone();
        for (col, &zk) in self.columns.iter().zip(z) {
            for &(i, v) in col {
                y[i] += v * zk;
            }
        }
        y
    }
}

/// Gauss-Jordan with full pivoting; `Err(residual)` if inconsistent.
fn eliminate(n: usize, eqs: &[Equality]) -> std::result::Result<Elimination, f64> {
    if eqs.is_empty() {
        return Ok(Elimination {
            y0: vec![0.0; n],
            columns: (0..n).map(|k| vec![(k, 1.0)]).collect(),
        });
    }
    let r = eqs.len();
    let mut e = DMatrix::<f64>::zeros(r, n);
    let mut rhs = nalgebra::DVector::<f64>::zeros(r);
    for (i, eq) in eqs.iter().enumerate() {
        for &(k, v) in &eq.coeffs {
            e[(i, k)] += v;
        }
        rhs[i] = eq.rhs;
    }
    let scale = e.amax().max(1e-300);
    let rhs_scale = 1.0 + rhs.amax();
    let tol = 1e-10 * scale;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row_used = vec![false; r];
    let mut col_used = vec![false; n];
    loop {
        let mut best = (0.0, 0, 0);
        for i in (0..r).filter(|&i| !row_used[i]) {
            for j in (0..n).filter(|&j| !col_used[j]) {
                if e[(i, j)].abs() > best.0 {
                    best = (e[(i, j)].abs(), i, j);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        let (_, pi, pj) = best;
        let inv = 1.0 / e[(pi, pj)];
        e.row_mut(pi).scale_mut(inv);
        rhs[pi] *= inv;
        let prow = e.row(pi).clone_owned();
        let prhs = rhs[pi];
        for i in 0..r {
            if i != pi {
                let f = e[(i, pj)];
                if f != 0.0 {
                    for j in 0..n {
                        e[(i, j)] -= f * prow[j];
                    }
                    rhs[i] -= f * prhs;
                }
            }
        }
        row_used[pi] = true;
        col_used[pj] = true;
        pivots.push((pi, pj));
    }
    let residual = (0..r).filter(|&i| !row_used[i]).map(|i| rhs[i].abs()).fold(0.0, f64::max);
    if residual > 1e-9 * rhs_scale {
        return Err(residual);
    }
    let mut y0 = vec![0.0; n];
    for &(pi, pj) in &pivots {
        y0[pj] = rhs[pi];
    }
    let columns = (0..n)
        .filter(|&j| !col_used[j])
        .map(|j| {
            let mut col = vec![(j, 1.0)];
            for &(pi, pj) in &pivots {
                let v = e[(pi, j)];
                if v.abs() > 1e-15 * scale {
                    col.push((pj, -v));
                }
            }
            col
        })
        .collect();
    Ok(Elimination { y0, columns })
}

/// Reduced standard form: `S(z) = Σ z_k A_k - C` with `C = -F(y0)`.
fn reduce(p: &SdpProblem, el: &Elimination) -> StdForm {
    let dims: Vec<usize> = p.blocks.iter().map(|b| b.dim).collect();
    // Per-variable coefficient lists, grouped by original variable.
    let mut by_var: Vec<Vec<Entry>> = vec![Vec::new(); p.n_vars];
    let mut c: Vec<DMatrix<f64>> = Vec::with_capacity(p.blocks.len());
    for (bi, blk) in p.blocks.iter().enumerate() {
        let mut f0 = DMatrix::from_row_slice(blk.dim, blk.dim, &blk.constant);
        for &(k, i, j, v) in &blk.coeffs {
            by_var[k].push(Entry { blk: bi, r: i, c: j, v });
            f0[(i, j)] += v * el.y0[k];
        }
        c.push(-f0);
    }
    let obj: Vec<f64> = match &p.objective {
        Some((coeffs, _)) => {
            let mut dense = vec![0.0; p.n_vars];
            for &(k, v) in coeffs {
                dense[k] += v;
            }
            dense
        }
        None => vec![0.0; p.n_vars],
    };
    let mut a = Vec::with_capacity(el.columns.len());
    let mut b = Vec::with_capacity(el.columns.len());
    for col in &el.columns {
        let mut acc: std::collections::BTreeMap<(usize, usize, usize), f64> = Default::default();
        let mut bk = 0.0;
        for &(var, w) in col {
            bk += w * obj[var];
            for e in &by_var[var] {
                *acc.entry((e.blk, e.r, e.c)).or_insert(0.0) += w * e.v;
            }
        }
        a.push(
            acc.into_iter()
                .filter(|(_, v)| v.abs() > 1e-15)
                .map(|((blk, r, c), v)| Entry { blk, r, c, v })
                .collect(),
        );
        b.push(bk);
    }
    StdForm { dims, c, a, b }
}

fn settings(tol: &SdpTolerances) -> IpmSettings {
    IpmSettings {
        gap_tol: tol.gap,
        feas_tol: tol.feasibility_margin,
        max_iters: tol.max_iterations,
    }
}

fn failure(p: &SdpProblem, status: SdpStatus, msg: String, iterations: usize) -> SdpSolution {
    SdpSolution {
        status,
        objective: None,
        dual_objective: None,
        duality_gap: f64::NAN,
        variables: vec![0.0; p.n_vars],
        min_slack: f64::NAN,
        certificate: None,
        iterations,
        diagnostics: msg,
        multipliers: Vec::new(),
    }
}

/// Phase I: `min t` s.t. `S(z) + t I ⪰ 0`, `t + 1 ≥ 0`.
fn phase_one(
    p: &SdpProblem,
    el: &Elimination,
    sf: &StdForm,
    kept: &[usize],
    tol: &SdpTolerances,
) -> Result<SdpSolution> {
    let mut dims = sf.dims.clone();
    dims.push(1);
    let mut c = sf.c.clone();
    c.push(DMatrix::from_element(1, 1, -1.0));
    let mut a = sf.a.clone();
    let nb = sf.dims.len();
    let mut t_col: Vec<Entry> = Vec::new();
    for (bi, &n) in sf.dims.iter().enumerate() {
        t_col.extend((0..n).map(|i| Entry { blk: bi, r: i, c: i, v: 1.0 }));
    }
    t_col.push(Entry { blk: nb, r: 0, c: 0, v: 1.0 });
    a.push(t_col);
    let mut b = vec![0.0; sf.a.len()];
    b.push(1.0);
    let ph = StdForm { dims, c, a, b };
    let out = ipm::solve(&ph, &settings(tol));
    let iterations = out.iterations;
    if !out.converged {
        return Ok(failure(p, SdpStatus::NumericalFailure, format!("phase I: {}", out.message), iterations));
    }
    let t = out.z[sf.a.len()];
    let y = el.expand(&restore(el.columns.len(), kept, &out.z[..sf.a.len()]));
    let min_slack = p.min_slack(&y)?;
    let gap = out.dual_obj - out.primal_obj;
    if t <= tol.feasibility_margin && min_slack >= -tol.feasibility_margin {
        return Ok(SdpSolution {
            status: SdpStatus::Feasible,
            objective: p.objective_value(&y),
            dual_objective: None,
            duality_gap: gap,
            variables: y,
            min_slack,
            certificate: None,
            iterations,
            diagnostics: format!("phase I margin {:.3e}", -t),
            multipliers: Vec::new(),
        });
    }
    let xb: Vec<DMatrix<f64>> = out.x[..nb].to_vec();
    let value: f64 = sf.c.iter().zip(&xb).map(|(cb, xb)| cb.dot(xb)).sum();
    let residual = sf
        .a
        .iter()
        .map(|ak| ak.iter().map(|e| e.v * xb[e.blk][(e.r, e.c)]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let mut min_eig = f64::INFINITY;
    for m in &xb {
        let (ev, _) = linalg::symmetric_eigen(m)?;
        min_eig = min_eig.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let verified = value > tol.feasibility_margin && residual <= 1e-7 && min_eig >= -1e-9;
    let cert = InfeasibilityCertificate::Ray {
        blocks: xb.iter().map(|m| m.transpose().iter().cloned().collect()).collect(),
        value,
        residual,
        min_eigenvalue: min_eig,
    };
    let status = if verified {
        SdpStatus::InfeasibleCertified
    } else {
        SdpStatus::NumericalFailure
    };
    Ok(SdpSolution {
        status,
        objective: None,
        dual_objective: None,
        duality_gap: gap,
        variables: y,
        min_slack,
        certificate: Some(cert),
        iterations,
        diagnostics: format!("phase I optimum t = {t:.3e}, ray value {value:.3e}, residual {residual:.1e}"),
        multipliers: Vec::new(),
    })
}

/// Solves `p`. Feasibility problems go straight to phase I; optimization
/// problems fall back to it when the main solve fails, so that infeasibility
/// is only ever reported with a certificate.
pub fn solve(p: &SdpProblem, tol: &SdpTolerances) -> Result<SdpSolution> {
    if p.blocks.is_empty() {
        return Err(Error::InvalidArgument("problem has no PSD blocks".into()));
    }
    let el = match eliminate(p.n_vars, &p.equalities) {
        Ok(el) => el,
        Err(residual) => {
            let mut s = failure(p, SdpStatus::InfeasibleCertified, "inconsistent equalities".into(), 0);
            s.certificate = Some(InfeasibilityCertificate::Equalities { residual });
            return Ok(s);
        }
    };
    if el.columns.len() > MAX_VARIABLES {
        return Err(Error::Unsupported(format!(
            "{} free variables exceed the dense solver limit of {MAX_VARIABLES}",
            el.columns.len()
        )));
    }
    let sf = reduce(p, &el);
    if let Some(k) = sf.a.iter().position(|ak| ak.is_empty()) {
        if sf.b[k] != 0.0 {
            return Ok(failure(p, SdpStatus::NumericalFailure, "objective unbounded along a free direction".into(), 0));
        }
    }
    let (sf, kept) = compact(sf);
    if sf.a.is_empty() || !p.has_objective() {
        return phase_one(p, &el, &sf, &kept, tol);
    }
    let out = ipm::solve(&sf, &settings(tol));
    if out.converged {
        let y = el.expand(&restore(el.columns.len(), &kept, &out.z));
        // Reduced objective differs from the original by the constant c·y0.
        let offset = p.objective_value(&el.y0).unwrap_or(0.0);
        return Ok(SdpSolution {
            status: SdpStatus::Optimal,
            objective: p.objective_value(&y),
            dual_objective: Some(out.primal_obj + offset),
            duality_gap: out.dual_obj - out.primal_obj,
            min_slack: p.min_slack(&y)?,
            variables: y,
            certificate: None,
            iterations: out.iterations,
            diagnostics: out.message,
            multipliers: out.x,
        });
    }
    let ph = phase_one(p, &el, &sf, &kept, tol)?;
    Ok(match ph.status {
        SdpStatus::InfeasibleCertified => ph,
        _ => {
            let mut f = failure(p, SdpStatus::NumericalFailure, format!("main solve: {}", out.message), out.iterations);
            // Last iterate, for callers that can repair it into a certificate.
            if out.z.len() == kept.len() {
                f.variables = el.expand(&restore(el.columns.len(), &kept, &out.z));
            }
            f.multipliers = out.x;
            f
        }
    })
}

/// Drops free variables that appear in no block (their cost is zero by the
/// caller's check); they stay pinned at zero.
fn compact(sf: StdForm) -> (StdForm, Vec<usize>) {
    let kept: Vec<usize> = (0..sf.a.len()).filter(|&k| !sf.a[k].is_empty()).collect();
    let a = kept.iter().map(|&k| sf.a[k].clone()).collect();
    let b = kept.iter().map(|&k| sf.b[k]).collect();
    (StdForm { dims: sf.dims, c: sf.c, a, b }, kept)
}

fn restore(n: usize, kept: &[usize], z: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; n];
    for (&k, &v) in kept.iter().zip(z) {
        full[k] = v;
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z};

    #[test]
    fn max_eigenvalue_example() {
        // minimize t s.t. t I - σx ⪰ 0
        let mut p = SdpProblem::new();
        let t = p.add_scalar();
        let e = AffineHermitian {
            constant: -pauli_x(),
            terms: vec![(t, linalg::identity(2))],
        };
        p.psd(&e).unwrap();
        p.minimize(vec![(t, 1.0)], 0.0).unwrap();
        let s = solve(&p, &SdpTolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective.unwrap() - 1.0).abs() < 1e-7);
        assert!(s.duality_gap.abs() <= 1e-8 * 2.0);
    }

    #[test]
    fn impossible_expectation_is_certified_infeasible() {
        let mut p = SdpProblem::new();
        let rho = p.add_hermitian(2);
        let e = rho.expr();
        p.psd(&e).unwrap();
        p.trace_equality(&e, &linalg::identity(2), 1.0).unwrap();
        p.trace_equality(&e, &pauli_z(), 2.0).unwrap();
        let s = solve(&p, &SdpTolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::InfeasibleCertified);
        match s.certificate.unwrap() {
            InfeasibilityCertificate::Ray { value, residual, min_eigenvalue, .. } => {
                assert!(value > 1e-9 && residual <= 1e-7 && min_eigenvalue >= -1e-9);
            }
            other => panic!("unexpected certificate {other:?}"),
        }
    }

    #[test]
    fn attainable_expectation_is_feasible() {
        let mut p = SdpProblem::new();
        let rho = p.add_hermitian(2);
        let e = rho.expr();
        p.psd(&e).unwrap();
        p.trace_equality(&e, &linalg::identity(2), 1.0).unwrap();
        p.trace_equality(&e, &pauli_z(), 0.5).unwrap();
        let s = solve(&p, &SdpTolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Feasible);
        let r = rho.value(&s.variables);
        assert!((linalg::trace_product(&r, &pauli_z()).re - 0.5).abs() < 1e-9);
        assert!(s.min_slack > 0.0);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut p = SdpProblem::new();
        let x = p.add_scalar();
        p.nonnegative(&[(x, 1.0)], 0.0).unwrap();
        p.equality(vec![(x, 1.0)], 1.0).unwrap();
        p.equality(vec![(x, 2.0)], 3.0).unwrap();
        let s = solve(&p, &SdpTolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::InfeasibleCertified);
        assert!(matches!(s.certificate, Some(InfeasibilityCertificate::Equalities { .. })));
    }
}
