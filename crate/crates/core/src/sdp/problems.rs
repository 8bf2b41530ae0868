use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{solve, SdpProblem, SdpSolution, SdpStatus, SdpTolerances};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::maps::ProcessMap;
use crate::models::{self, IonModel};
use crate::observables::ObservableSet;
use crate::operator::HermitianOperator;
use crate::optim::{self, OptimizerInfo, SphereOptions};

/// Largest `dim(A)·dim(B)` for which PPT is equivalent to separability.
pub const PPT_EXACT_DIM: usize = 6;

/// Which expectations constrain the separable explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    #[default]
    JointAndMarginals,
    JointOnly,
}

/// Measured expectations of a bipartite experiment. `joint` is ordered
/// `i`-major over `A_i ⊗ B_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationData {
    pub joint: Vec<f64>,
    pub marginal_a: Vec<f64>,
    pub marginal_b: Vec<f64>,
}

impl ExpectationData {
    /// Expectations of `rho` (dims `[dim A, dim B]`) under the given sets.
    pub fn from_state(rho: &HermitianOperator, a: &ObservableSet, b: &ObservableSet) -> Result<Self> {
        let (da, db) = (a.dim(), b.dim());
        if rho.dim() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} measured by {da}x{db} observables",
                rho.dim()
            )));
        }
        let m = rho.matrix();
        let ia = linalg::identity(da);
        let ib = linalg::identity(db);
        let mut joint = Vec::with_capacity(a.len() * b.len());
        for fa in a.operators() {
            for fb in b.operators() {
                joint.push(linalg::trace_product(m, &linalg::kron(fa.matrix(), fb.matrix())).re);
            }
        }
        let marginal_a = a
            .operators()
            .iter()
            .map(|fa| linalg::trace_product(m, &linalg::kron(fa.matrix(), &ib)).re)
            .collect();
        let marginal_b = b
            .operators()
            .iter()
            .map(|fb| linalg::trace_product(m, &linalg::kron(&ia, fb.matrix())).re)
            .collect();
        Ok(Self {
            joint,
            marginal_a,
            marginal_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatibilityOptions {
    pub mode: ConstraintMode,
    /// Impose `σ^Γ ⪰ 0`; without it the test only asks for some state.
    pub ppt: bool,
    pub tolerances: SdpTolerances,
}

impl Default for CompatibilityOptions {
    fn default() -> Self {
        Self {
            mode: ConstraintMode::default(),
            ppt: true,
            tolerances: SdpTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub solution: SdpSolution,
    /// True when PPT is only necessary for separability at these dimensions.
    pub relaxation: bool,
    /// Explaining state when feasible, dims `[dim A, dim B]`.
    #[serde(skip)]
    pub state: Option<DMatrix<C64>>,
}

impl CompatibilityReport {
    /// Infeasible-certified with PPT: no separable state reproduces the data.
    pub fn entanglement_verified(&self) -> bool {
        self.solution.status == SdpStatus::InfeasibleCertified
    }
}

fn partial_transpose_a(m: &DMatrix<C64>, da: usize, db: usize) -> DMatrix<C64> {
    HermitianOperator::from_parts_unchecked(vec![da, db], m.clone())
        .partial_transpose(0)
        .expect("factor 0 exists")
        .into_matrix()
}

fn compatibility_problem(
    data: &ExpectationData,
    a: &ObservableSet,
    b: &ObservableSet,
    mode: ConstraintMode,
    ppt: bool,
) -> Result<(SdpProblem, super::HermitianVar)> {
    let (da, db) = (a.dim(), b.dim());
    if data.joint.len() != a.len() * b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} joint expectations for {}x{} observables",
            data.joint.len(),
            a.len(),
            b.len()
        )));
    }
    if mode == ConstraintMode::JointAndMarginals && (data.marginal_a.len() != a.len() || data.marginal_b.len() != b.len()) {
        return Err(Error::DimensionMismatch("marginal expectations do not match the observable sets".into()));
    }
    let mut p = SdpProblem::new();
    let sigma = p.add_hermitian(da * db);
    let e = sigma.expr();
    p.psd(&e)?;
    if ppt {
        p.psd(&e.map(|m| partial_transpose_a(m, da, db)))?;
    }
    p.trace_equality(&e, &linalg::identity(da * db), 1.0)?;
    let mut k = 0;
    for fa in a.operators() {
        for fb in b.operators() {
            p.trace_equality(&e, &linalg::kron(fa.matrix(), fb.matrix()), data.joint[k])?;
            k += 1;
        }
    }
    if mode == ConstraintMode::JointAndMarginals {
        let ib = linalg::identity(db);
        let ia = linalg::identity(da);
        for (fa, &v) in a.operators().iter().zip(&data.marginal_a) {
            p.trace_equality(&e, &linalg::kron(fa.matrix(), &ib), v)?;
        }
        for (fb, &v) in b.operators().iter().zip(&data.marginal_b) {
            p.trace_equality(&e, &linalg::kron(&ia, fb.matrix()), v)?;
        }
    }
    Ok((p, sigma))
}

/// Searches for a PPT state reproducing `data` under `A_i ⊗ B_j`. If none
/// exists, re-solves without PPT so that data no state at all explains is
/// reported as [`Error::InconsistentData`] rather than as entanglement.
pub fn separable_compatibility(
    data: &ExpectationData,
    a: &ObservableSet,
    b: &ObservableSet,
    opts: &CompatibilityOptions,
) -> Result<CompatibilityReport> {
    let (p, sigma) = compatibility_problem(data, a, b, opts.mode, opts.ppt)?;
    let solution = solve(&p, &opts.tolerances)?;
    if solution.status == SdpStatus::InfeasibleCertified && opts.ppt {
        let (q, _) = compatibility_problem(data, a, b, opts.mode, false)?;
        let any = solve(&q, &opts.tolerances)?;
        if any.status == SdpStatus::InfeasibleCertified {
            let r = match &any.certificate {
                Some(super::InfeasibilityCertificate::Ray { value, .. }) => *value,
                Some(super::InfeasibilityCertificate::Equalities { residual }) => *residual,
                None => f64::NAN,
            };
            return Err(Error::InconsistentData(r));
        }
    }
    let state = solution.is_feasible().then(|| sigma.value(&solution.variables));
    Ok(CompatibilityReport {
        relaxation: a.dim() * b.dim() > PPT_EXACT_DIM,
        solution,
        state,
    })
}

/// Ion-trap experiment: Werner data measured with `|0>, |x+>, |y+>` on both
/// sides, explained either by a qubit pair or a qubit-qutrit pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonTrapScenario {
    pub model: IonModel,
    pub mode: ConstraintMode,
}

impl IonTrapScenario {
    pub fn data(&self, p: f64) -> Result<ExpectationData> {
        let (a, b) = models::ion_trap_sets(IonModel::Qubit)?;
        let rho = models::werner_state(p)?;
        ExpectationData::from_state(rho.op(), &a, &b)
    }

    pub fn compatibility(&self, p: f64, tol: &SdpTolerances) -> Result<CompatibilityReport> {
        let (a, b) = models::ion_trap_sets(self.model)?;
        let opts = CompatibilityOptions {
            mode: self.mode,
            ppt: true,
            tolerances: *tol,
        };
        separable_compatibility(&self.data(p)?, &a, &b, &opts)
    }

    /// True if a separable explanation exists at noise `p`.
    pub fn is_compatible(&self, p: f64, tol: &SdpTolerances) -> Result<bool> {
        let r = self.compatibility(p, tol)?;
        match r.solution.status {
            SdpStatus::Feasible | SdpStatus::Optimal => Ok(true),
            SdpStatus::InfeasibleCertified => Ok(false),
            SdpStatus::NumericalFailure => Err(Error::Solver(format!("p = {p}: {}", r.solution.diagnostics))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    /// Final bracket: infeasible at `lo`, feasible at `hi`.
    pub lo: f64,
    pub hi: f64,
    pub probes: usize,
}

/// Bisection for the boundary of a predicate that is false below and true above it.
pub fn bisect_threshold<F>(mut feasible: F, p_lo: f64, p_hi: f64, tol_p: f64) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(p_lo < p_hi && tol_p > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need p_lo < p_hi and tol_p > 0, got [{p_lo}, {p_hi}], {tol_p}"
        )));
    }
    let lo_feasible = feasible(p_lo)?;
    let hi_feasible = feasible(p_hi)?;
    if lo_feasible || !hi_feasible {
        return Err(Error::NotBracketing {
            p_lo,
            p_hi,
            lo_feasible,
            hi_feasible,
        });
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    let mut probes = 2;
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        probes += 1;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        threshold: 0.5 * (lo + hi),
        lo,
        hi,
        probes,
    })
}

/// Noise level above which the scenario's data has a separable explanation.
pub fn threshold_search(
    scenario: &IonTrapScenario,
    p_lo: f64,
    p_hi: f64,
    tol_p: f64,
    tol: &SdpTolerances,
) -> Result<ThresholdResult> {
    bisect_threshold(|p| scenario.is_compatible(p, tol), p_lo, p_hi, tol_p)
}

/// `‖H‖₁ = min 2 tr P - tr H` over `P ⪰ 0`, `P - H ⪰ 0`.
pub fn trace_norm_sdp(h: &DMatrix<C64>, tol: &SdpTolerances) -> Result<SdpSolution> {
    let d = h.nrows();
    let mut p = SdpProblem::new();
    let pv = p.add_hermitian(d);
    let e = pv.expr();
    p.psd(&e)?;
    p.psd(&e.clone().add_constant(&(-h)))?;
    let (coeffs, _) = e.trace_against(&linalg::identity(d));
    let coeffs = coeffs.into_iter().map(|(k, v)| (k, 2.0 * v)).collect();
    p.minimize(coeffs, -linalg::trace(h).re)?;
    solve(&p, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamondNorm {
    /// Certified upper bound from a repaired dual feasible point.
    pub value: f64,
    /// Maximization-side value of the program, if the solver converged.
    pub sdp_lower: Option<f64>,
    /// Best `‖(Ω⊗id)[|ψ><ψ|]‖₁` found by multi-start search.
    pub lower_bound: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub optimizer: OptimizerInfo,
}

impl DiamondNorm {
    /// `value - lower_bound`, non-negative up to solver tolerance.
    pub fn discrepancy(&self) -> f64 {
        self.value - self.lower_bound
    }
}

/// Partial trace over the second factor of a `(a·d) x (b·d)` matrix.
fn trace_second(x: &DMatrix<C64>, a: usize, b: usize, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(a, b, |r, c| (0..d).map(|o| x[(r * d + o, c * d + o)]).sum())
}

/// Multi-start lower bound on `‖Ω‖_◇` for Hermiticity-preserving `Ω`,
/// maximizing over pure inputs on the doubled space.
pub fn diamond_norm_lower_bound(m: &ProcessMap, restarts: usize, seed: u64) -> Result<(f64, OptimizerInfo)> {
    let (din, dout) = (m.in_dim(), m.out_dim());
    let j = m.choi().clone();
    let iout = linalg::identity(dout);
    // ψ_(i,r) = K[r, i]; output (K⊗I) J (K†⊗I) on (reference, output).
    let kmat = |psi: &DVector<C64>| DMatrix::from_fn(din, din, |r, i| psi[i * din + r]);
    let objective = |psi: &DVector<C64>| -> Result<(f64, DVector<C64>)> {
        let kk = linalg::kron(&kmat(psi), &iout);
        let left = &kk * &j;
        let h = linalg::hermitian_part(&(&left * kk.adjoint()));
        let (ev, vecs) = linalg::hermitian_eigen(&h)?;
        let signs = DMatrix::from_diagonal(&ev.map(|x| C64::new(if x >= 0.0 { 1.0 } else { -1.0 }, 0.0)));
        let u = &vecs * signs * vecs.adjoint();
        let g = trace_second(&(u * left), din, din, dout);
        let grad = DVector::from_fn(din * din, |idx, _| {
            let (i, r) = (idx / din, idx % din);
            g[(r, i)]
        });
        Ok((ev.iter().map(|x| x.abs()).sum(), grad))
    };
    let mut maxent = DVector::zeros(din * din);
    for i in 0..din {
        maxent[i * din + i] = C64::new(1.0 / (din as f64).sqrt(), 0.0);
    }
    let opts = SphereOptions::new(restarts, seed).with_initial_points(vec![maxent]);
    let r = optim::maximize(din * din, &opts, objective)?;
    Ok((r.value, r.info(seed)))
}

/// Smallest `s ≥ 0` with `m + sI ⪰ 0`, padded against eigenvalue round-off.
fn psd_shift(m: &DMatrix<C64>) -> Result<f64> {
    let pad = 64.0 * f64::EPSILON * (1.0 + m.norm());
    Ok((pad - linalg::min_eigenvalue(m)?).max(0.0))
}

struct NormBound {
    /// Upper bound recomputed from a repaired dual feasible point.
    value: f64,
    /// Value of the maximization, when the solver converged.
    lower: Option<f64>,
    duality_gap: f64,
    iterations: usize,
}

/// `max tr(J(W0 - W1))` over `W0, W1 ⪰ 0`, `W0 + W1 ⪯ ρ⊗I`, `tr ρ = 1`; with
/// `ppt` the three blocks must also be PPT across input:output.
///
/// The bound comes from the dual, read off the solver's multipliers: `Z` for
/// the cap `ρ⊗I - W0 - W1`, and `R, Q0, Q1` for the partial transposes of the
/// cap, `W0` and `W1`. Any `Z, R, Q0, Q1 ⪰ 0` with
///
/// `Z + R^Γ - Q0^Γ - J ⪰ 0`, `Z + R^Γ - Q1^Γ + J ⪰ 0`
///
/// certifies `λ_max(tr_out Z + (tr_out R)^T)` (drop `R, Q` without `ppt`).
/// The multipliers are made exactly feasible by identity shifts (`R, Q` first,
/// then `Z`), so the value is an upper bound even from an unconverged solve.
fn norm_bound(m: &ProcessMap, ppt: bool, tol: &SdpTolerances) -> Result<NormBound> {
    let (din, dout) = (m.in_dim(), m.out_dim());
    let d = din * dout;
    let vars = 2 * d * d + din * din;
    if vars > super::MAX_VARIABLES {
        return Err(Error::Unsupported(format!(
            "map norm program with {vars} variables exceeds the dense solver limit"
        )));
    }
    let j = m.choi();
    let pt = |x: &DMatrix<C64>| partial_transpose_a(x, din, dout);
    let mut p = SdpProblem::new();
    let w0 = p.add_hermitian(d);
    let w1 = p.add_hermitian(d);
    let rho = p.add_hermitian(din);
    let (e0, e1, er) = (w0.expr(), w1.expr(), rho.expr());
    let iout = linalg::identity(dout);
    let cap = er
        .map(|x| linalg::kron(x, &iout))
        .plus(&e0.scale(-1.0))
        .plus(&e1.scale(-1.0));
    // Block order: W0, [W0^Γ], W1, [W1^Γ], cap, [cap^Γ].
    for e in [&e0, &e1, &cap] {
        p.psd(e)?;
        if ppt {
            p.psd(&e.map(pt))?;
        }
    }
    p.trace_equality(&er, &linalg::identity(din), 1.0)?;
    let (c0, _) = e0.trace_against(j);
    let (c1, _) = e1.trace_against(j);
    let coeffs = c0.into_iter().map(|(k, v)| (k, -v)).chain(c1).collect();
    p.minimize(coeffs, 0.0)?;
    let sol = solve(&p, tol)?;
    let blocks = if ppt { 6 } else { 3 };
    if sol.multipliers.len() != blocks {
        return Err(Error::Solver(format!("map norm program: {}", sol.diagnostics)));
    }

    // Realified multipliers pair with realified blocks, doubling traces.
    let mult = |i: usize| linalg::complexify(&sol.multipliers[i]).scale(2.0);
    let shifted = |x: DMatrix<C64>| -> Result<DMatrix<C64>> {
        let s = psd_shift(&x)?;
        let n = x.nrows();
        Ok(x + linalg::identity(n).scale(s))
    };
    let mut zv = mult(if ppt { 4 } else { 2 });
    let mut top = DMatrix::zeros(din, din);
    let mut shift = psd_shift(&zv)?;
    if ppt {
        let (q0, q1, r) = (shifted(mult(1))?, shifted(mult(3))?, shifted(mult(5))?);
        let base = &zv + pt(&r);
        for blk in [&base - pt(&q0) - j, &base - pt(&q1) + j] {
            shift = shift.max(psd_shift(&blk)?);
        }
        top += trace_second(&r, din, din, dout).transpose();
    } else {
        for blk in [&zv - j, &zv + j] {
            shift = shift.max(psd_shift(&blk)?);
        }
    }
    zv += linalg::identity(d).scale(shift);
    top += trace_second(&zv, din, din, dout);
    let ev = linalg::hermitian_eigenvalues(&linalg::hermitian_part(&top))?;
    let value = ev.max() * (1.0 + 64.0 * f64::EPSILON);

    if !value.is_finite() {
        return Err(Error::Solver(format!("map norm program: {}", sol.diagnostics)));
    }
    let optimal = sol.status == SdpStatus::Optimal;
    Ok(NormBound {
        value,
        lower: optimal.then(|| -sol.objective.unwrap_or(f64::NAN)),
        duality_gap: sol.duality_gap,
        iterations: sol.iterations,
    })
}

/// `‖Ω‖_◇` for Hermiticity-preserving `Ω` with Choi matrix `J` (input first),
/// together with the multi-start lower bound.
pub fn diamond_norm(m: &ProcessMap, restarts: usize, seed: u64, tol: &SdpTolerances) -> Result<DiamondNorm> {
    let nb = norm_bound(m, false, tol)?;
    let (lower_bound, optimizer) = diamond_norm_lower_bound(m, restarts, seed)?;
    Ok(DiamondNorm {
        value: nb.value,
        sdp_lower: nb.lower,
        lower_bound,
        duality_gap: nb.duality_gap,
        iterations: nb.iterations,
        optimizer,
    })
}

/// Certified upper bound on `max_ψ ‖Ω[|ψ><ψ|]‖₁`.
///
/// That maximum equals the norm program restricted to product operators
/// `W_a = σ⊗Q_a`; requiring PPT instead of product form relaxes it.
pub fn h1_norm_ppt_upper_bound(m: &ProcessMap, tol: &SdpTolerances) -> Result<f64> {
    Ok(norm_bound(m, true, tol)?.value)
}
