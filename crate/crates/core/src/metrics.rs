//! Negativity, PPT and witness checks, and negativity lower bounds for states
//! seen through positive (not necessarily completely positive) local maps.
//!
//! The bounds divide by a norm of the local maps, so only certified upper
//! bounds on that norm are ever used to state a bound. Heuristic maxima are
//! reported next to them for diagnostics.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::maps::ProcessMap;
use crate::operator::{DensityMatrix, HermitianOperator, PSD_TOL};
use crate::optim::{self, OptimizerInfo, SphereOptions};
use crate::sdp::{self, SdpTolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativityReport {
    /// `(‖X^Γ‖₁ - 1) / 2`.
    pub value: f64,
    pub trace_norm: f64,
    /// Sum of `|λ|` over negative eigenvalues of `X^Γ`.
    pub negative_eigenvalue_sum: f64,
}

/// Negativity of a unit-trace Hermitian operator across `cut` (the transposed factor).
pub fn negativity(x: &HermitianOperator, cut: usize) -> Result<NegativityReport> {
    let t = x.trace();
    if (t - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitTrace(t));
    }
    let ev = x.partial_transpose(cut)?.eigenvalues()?;
    let trace_norm: f64 = ev.iter().map(|v| v.abs()).sum();
    let negative_eigenvalue_sum: f64 = ev.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    Ok(NegativityReport {
        value: (trace_norm - 1.0) / 2.0,
        trace_norm,
        negative_eigenvalue_sum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum PptVerdict {
    Ppt { min_eigenvalue: f64 },
    Npt { min_eigenvalue: f64 },
}

impl PptVerdict {
    pub fn is_npt(&self) -> bool {
        matches!(self, PptVerdict::Npt { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            PptVerdict::Ppt { min_eigenvalue } | PptVerdict::Npt { min_eigenvalue } => *min_eigenvalue,
        }
    }
}

pub fn ppt_test(rho: &HermitianOperator, cut: usize) -> Result<PptVerdict> {
    let min_eigenvalue = rho.partial_transpose(cut)?.min_eigenvalue()?;
    Ok(if min_eigenvalue < PSD_TOL {
        PptVerdict::Npt { min_eigenvalue }
    } else {
        PptVerdict::Ppt { min_eigenvalue }
    })
}

/// `tr(W ρ)`.
pub fn witness_value(w: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if w.dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "witness dims {:?} vs state dims {:?}",
            w.dims(),
            rho.dims()
        )));
    }
    w.inner(rho.op())
}

#[derive(Debug, Clone)]
pub struct PptWitness {
    /// `(|v><v|)^Γ` for the most negative eigenvector `v` of `ρ^Γ`.
    pub operator: HermitianOperator,
    /// `tr(W ρ)`, equal to the smallest eigenvalue of `ρ^Γ`.
    pub value: f64,
}

/// Witness detecting `rho` when it is NPT across `cut`.
pub fn ppt_witness(rho: &HermitianOperator, cut: usize) -> Result<Option<PptWitness>> {
    let s = rho.partial_transpose(cut)?.spectral()?;
    if s.min() >= PSD_TOL {
        return Ok(None);
    }
    let v = s.eigenvectors.column(0).clone_owned();
    let operator = HermitianOperator::projector(&v)
        .with_dims(rho.dims().to_vec())?
        .partial_transpose(cut)?;
    let value = operator.inner(rho)?;
    Ok(Some(PptWitness { operator, value }))
}

/// `(Λ_A ⊗ Λ_B)[X]` without forming the joint Choi matrix.
pub fn apply_local(ma: &ProcessMap, mb: &ProcessMap, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (da, db) = (ma.in_dim(), mb.in_dim());
    if x.nrows() != da * db || x.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} for local maps on {da}x{db}",
            x.nrows()
        )));
    }
    let (oa, ob) = (ma.out_dim(), mb.out_dim());
    let unit = |d: usize, i: usize, j: usize| {
        let mut e = DMatrix::zeros(d, d);
        e[(i, j)] = C64::new(1.0, 0.0);
        e
    };
    let out_b: Vec<DMatrix<C64>> = (0..db * db).map(|kl| mb.apply_matrix(&unit(db, kl / db, kl % db))).collect();
    let mut out = DMatrix::zeros(oa * ob, oa * ob);
    for i in 0..da {
        for j in 0..da {
            let mut inner = DMatrix::zeros(ob, ob);
            for k in 0..db {
                for l in 0..db {
                    let v = x[(i * db + k, j * db + l)];
                    if v != C64::new(0.0, 0.0) {
                        inner += &out_b[k * db + l] * v;
                    }
                }
            }
            if inner.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            out += linalg::kron(&ma.apply_matrix(&unit(da, i, j)), &inner);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct H1Norm {
    /// Best `‖Ω[|ψ><ψ|]‖₁` found; a lower bound on the norm.
    pub value: f64,
    pub optimizer: OptimizerInfo,
}

fn trace_norm_with_sign(h: &DMatrix<C64>) -> Result<(f64, DMatrix<C64>)> {
    let (ev, vecs) = linalg::hermitian_eigen(&linalg::hermitian_part(h))?;
    let signs = DMatrix::from_diagonal(&ev.map(|x| C64::new(if x >= 0.0 { 1.0 } else { -1.0 }, 0.0)));
    Ok((ev.iter().map(|x| x.abs()).sum(), &vecs * signs * vecs.adjoint()))
}

fn h1_search<F, G>(dim: usize, restarts: usize, seed: u64, apply: F, adjoint: G) -> Result<H1Norm>
where
    F: Fn(&DMatrix<C64>) -> Result<DMatrix<C64>> + Sync,
    G: Fn(&DMatrix<C64>) -> Result<DMatrix<C64>> + Sync,
{
    let objective = |psi: &DVector<C64>| -> Result<(f64, DVector<C64>)> {
        let (v, u) = trace_norm_with_sign(&apply(&linalg::projector(psi))?)?;
        Ok((v, adjoint(&u)? * psi))
    };
    let basis = (0..dim)
        .map(|i| {
            let mut e = DVector::zeros(dim);
            e[i] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let opts = SphereOptions::new(restarts, seed).with_initial_points(basis);
    let r = optim::maximize(dim, &opts, objective)?;
    Ok(H1Norm {
        value: r.value,
        optimizer: r.info(seed),
    })
}

/// Multi-start estimate of `max_ψ ‖Ω[|ψ><ψ|]‖₁`.
pub fn h1_norm(m: &ProcessMap, restarts: usize, seed: u64) -> Result<H1Norm> {
    let adj = m.adjoint();
    h1_search(m.in_dim(), restarts, seed, |x| Ok(m.apply_matrix(x)), |u| Ok(adj.apply_matrix(u)))
}

/// Multi-start estimate of `‖Λ_A ⊗ Λ_B‖₁ᴴ`.
pub fn h1_norm_local(ma: &ProcessMap, mb: &ProcessMap, restarts: usize, seed: u64) -> Result<H1Norm> {
    let (aa, ab) = (ma.adjoint(), mb.adjoint());
    h1_search(
        ma.in_dim() * mb.in_dim(),
        restarts,
        seed,
        |x| apply_local(ma, mb, x),
        |u| apply_local(&aa, &ab, u),
    )
}

fn icosphere(level: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push((v[a] + v[b]).normalize());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    (v, f)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridBound {
    /// Certified upper bound on `max_ψ ‖Ω[|ψ><ψ|]‖₁`.
    pub upper: f64,
    /// Largest value at a grid point on the sphere (a lower bound).
    pub sampled: f64,
    pub points: usize,
}

/// Exhaustive Bloch-sphere bound for maps on a qubit.
///
/// `r ↦ ‖Ω[(I + r·σ)/2]‖₁` is convex on all of `R³`. Every pure state lies in
/// the radial cone of an icosphere face, inside the polytope spanned by the
/// face's vertices and their images scaled by `1/d`, where `d` is the
/// distance of the face plane from the origin. The maximum over that polytope
/// is attained at one of those points.
pub fn h1_norm_grid_upper_bound(m: &ProcessMap, level: usize) -> Result<GridBound> {
    if m.in_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "grid bound needs a qubit input, map has input dimension {}",
            m.in_dim()
        )));
    }
    let (v, faces) = icosphere(level);
    let mut scale = vec![1.0f64; v.len()];
    for [a, b, c] in &faces {
        let n = (v[*b] - v[*a]).cross(&(v[*c] - v[*a])).normalize();
        let d = n.dot(&v[*a]).abs();
        for i in [*a, *b, *c] {
            scale[i] = scale[i].max(1.0 / d);
        }
    }
    let paulis = [linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()];
    let f = |r: &Vector3<f64>| -> Result<f64> {
        let mut rho = linalg::identity(2);
        for k in 0..3 {
            rho += paulis[k].scale(r[k]);
        }
        let out = m.apply_matrix(&rho.scale(0.5));
        Ok(linalg::hermitian_eigenvalues(&linalg::hermitian_part(&out))?.iter().map(|x| x.abs()).sum())
    };
    let vals = (0..v.len())
        .into_par_iter()
        .map(|i| Ok((f(&v[i])?, f(&(v[i] * scale[i]))?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let sampled = vals.iter().map(|p| p.0).fold(0.0, f64::max);
    let upper = vals.iter().map(|p| p.0.max(p.1)).fold(0.0, f64::max);
    Ok(GridBound {
        upper: upper * (1.0 + 1e-12),
        sampled,
        points: v.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    HNorm,
    Diamond,
}

/// Party whose map is conjugated by transposition in the norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormCertificate {
    /// Both maps completely positive and trace preserving; the norm is 1.
    Cptp,
    /// Dual value of the PPT relaxation of the norm program.
    PptRelaxation,
    /// Exhaustive Bloch-sphere grid.
    Grid,
    /// Product of semidefinite diamond norms.
    DiamondProduct,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub which: BoundKind,
    pub side: Side,
    /// Certified norm entering the bound, if one could be obtained.
    pub norm: Option<f64>,
    pub norm_certificate: Option<NormCertificate>,
    /// Multi-start lower estimate of the norm; diagnostic only.
    pub heuristic_norm: Option<f64>,
    /// Negativity of `(Λ_A ⊗ Λ_B)[ρ]`.
    pub squashed_negativity: f64,
    /// `(N_out - (K - 1)/2) / K`; negative values are vacuous and kept as is.
    pub bound: Option<f64>,
    pub vacuous: bool,
    pub map_a_cp: bool,
    pub map_b_cp: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundOptions {
    pub restarts: usize,
    pub seed: u64,
    pub tolerances: SdpTolerances,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            tolerances: SdpTolerances::default(),
        }
    }
}

fn is_cp(m: &ProcessMap) -> Result<bool> {
    Ok(m.min_choi_eigenvalue()? >= PSD_TOL)
}

fn require_tp(m: &ProcessMap) -> Result<()> {
    if !m.is_trace_preserving() {
        return Err(Error::NotTracePreserving(m.trace_preservation_deviation()));
    }
    Ok(())
}

fn squashed(rho: &DensityMatrix, ma: &ProcessMap, mb: &ProcessMap) -> Result<HermitianOperator> {
    if rho.dim() != ma.in_dim() * mb.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for maps on {}x{}",
            rho.dim(),
            ma.in_dim(),
            mb.in_dim()
        )));
    }
    let out = apply_local(ma, mb, rho.matrix())?;
    HermitianOperator::from_hermitian_part(vec![ma.out_dim(), mb.out_dim()], &out)
}

fn assemble(n_out: f64, k: Option<f64>) -> (Option<f64>, bool) {
    match k {
        Some(k) => {
            let b = (n_out - (k - 1.0) / 2.0) / k;
            (Some(b), b <= 0.0)
        }
        None => (None, true),
    }
}

fn diamond_or_one(m: &ProcessMap, cp: bool, opts: &BoundOptions) -> Result<Option<f64>> {
    if cp {
        return Ok(Some(1.0));
    }
    match sdp::diamond_norm(m, opts.restarts, opts.seed, &opts.tolerances) {
        Ok(d) => Ok(Some(d.value)),
        // No certificate: the bound is reported as unavailable.
        Err(Error::Unsupported(_) | Error::Solver(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn certify_norm(
    ma: &ProcessMap,
    mb: &ProcessMap,
    side: Side,
    cps: (bool, bool),
    opts: &BoundOptions,
) -> Result<(Option<f64>, Option<NormCertificate>, f64)> {
    let (ta, tb) = match side {
        Side::A => (ma.conjugate_by_transposition(), mb.clone()),
        Side::B => (ma.clone(), mb.conjugate_by_transposition()),
    };
    let heuristic = h1_norm_local(&ta, &tb, opts.restarts, opts.seed)?.value;
    if cps.0 && cps.1 {
        return Ok((Some(1.0), Some(NormCertificate::Cptp), heuristic));
    }
    let mut best: Option<(f64, NormCertificate)> = None;
    let mut offer = |v: f64, c: NormCertificate| {
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, c));
        }
    };
    let joint_in = ma.in_dim() * mb.in_dim();
    if joint_in == 1 {
        // Degenerate: a single input state.
        offer(heuristic, NormCertificate::Grid);
    } else {
        let joint = ProcessMap::tensor_maps(&ta, &tb);
        match sdp::h1_norm_ppt_upper_bound(&joint, &opts.tolerances) {
            Ok(v) => offer(v, NormCertificate::PptRelaxation),
            Err(Error::Unsupported(_) | Error::Solver(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if let (Some(da), Some(db)) = (diamond_or_one(ma, cps.0, opts)?, diamond_or_one(mb, cps.1, opts)?) {
        offer(da * db, NormCertificate::DiamondProduct);
    }
    // A certified bound can never sit below a value actually attained.
    let best = best.map(|(v, c)| (v.max(heuristic), c));
    Ok((best.map(|b| b.0), best.map(|b| b.1), heuristic))
}

/// Lower bound on `N(ρ)` from the H-norm of the transposition-conjugated
/// local maps, with the conjugation on `side`.
pub fn negativity_bound_h(
    rho: &DensityMatrix,
    ma: &ProcessMap,
    mb: &ProcessMap,
    side: Side,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    require_tp(ma)?;
    require_tp(mb)?;
    let x = squashed(rho, ma, mb)?;
    let n_out = negativity(&x, 0)?.value;
    let cps = (is_cp(ma)?, is_cp(mb)?);
    let (norm, cert, heuristic) = certify_norm(ma, mb, side, cps, opts)?;
    let (bound, vacuous) = assemble(n_out, norm);
    Ok(BoundReport {
        which: BoundKind::HNorm,
        side,
        norm,
        norm_certificate: cert,
        heuristic_norm: Some(heuristic),
        squashed_negativity: n_out,
        bound,
        vacuous,
        map_a_cp: cps.0,
        map_b_cp: cps.1,
    })
}

/// Lower bound on `N(ρ)` from the product of diamond norms.
pub fn negativity_bound_diamond(
    rho: &DensityMatrix,
    ma: &ProcessMap,
    mb: &ProcessMap,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    require_tp(ma)?;
    require_tp(mb)?;
    let x = squashed(rho, ma, mb)?;
    let n_out = negativity(&x, 0)?.value;
    let cps = (is_cp(ma)?, is_cp(mb)?);
    let norm = match (diamond_or_one(ma, cps.0, opts)?, diamond_or_one(mb, cps.1, opts)?) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    let (bound, vacuous) = assemble(n_out, norm);
    Ok(BoundReport {
        which: BoundKind::Diamond,
        side: Side::A,
        norm,
        norm_certificate: norm.map(|_| if cps.0 && cps.1 { NormCertificate::Cptp } else { NormCertificate::DiamondProduct }),
        heuristic_norm: None,
        squashed_negativity: n_out,
        bound,
        vacuous,
        map_a_cp: cps.0,
        map_b_cp: cps.1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSuite {
    pub negativity_in: Option<f64>,
    pub h_side_a: BoundReport,
    pub h_side_b: BoundReport,
    pub diamond: BoundReport,
    /// Largest certified bound among the three.
    pub best: Option<f64>,
}

/// All three bounds; `negativity_in` is filled when the caller knows `ρ`
/// exactly (simulation), for comparison.
pub fn negativity_bounds(
    rho: &DensityMatrix,
    ma: &ProcessMap,
    mb: &ProcessMap,
    opts: &BoundOptions,
) -> Result<BoundSuite> {
    let h_side_a = negativity_bound_h(rho, ma, mb, Side::A, opts)?;
    let h_side_b = negativity_bound_h(rho, ma, mb, Side::B, opts)?;
    let diamond = negativity_bound_diamond(rho, ma, mb, opts)?;
    let best = [h_side_a.bound, h_side_b.bound, diamond.bound]
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))));
    let negativity_in = if rho.dims().len() == 2 {
        Some(negativity(rho.op(), 0)?.value)
    } else {
        None
    };
    Ok(BoundSuite {
        negativity_in,
        h_side_a,
        h_side_b,
        diamond,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{psi_plus, werner_state};

    fn bell() -> DensityMatrix {
        DensityMatrix::pure(vec![2, 2], &psi_plus()).unwrap()
    }

    #[test]
    fn negativity_examples() {
        let mm = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(negativity(mm.op(), 0).unwrap().value.abs() < 1e-12);
        let b = negativity(bell().op(), 0).unwrap();
        assert!((b.value - 0.5).abs() < 1e-12);
        assert!((b.value - b.negative_eigenvalue_sum).abs() < 1e-10);
        let w = werner_state(2.0 / 3.0).unwrap();
        assert!(negativity(w.op(), 0).unwrap().value.abs() < 1e-12);
        let bad = mm.op().scale(2.0);
        assert!(matches!(negativity(&bad, 0), Err(Error::NonUnitTrace(_))));
    }

    #[test]
    fn ppt_examples() {
        let prod = DensityMatrix::maximally_mixed(vec![2]).tensor(&DensityMatrix::maximally_mixed(vec![2]));
        assert!(!ppt_test(prod.op(), 0).unwrap().is_npt());
        let b = ppt_test(bell().op(), 0).unwrap();
        assert!(b.is_npt() && (b.min_eigenvalue() + 0.5).abs() < 1e-12);
        assert!(ppt_test(werner_state(0.6).unwrap().op(), 0).unwrap().is_npt());
        let w = ppt_witness(bell().op(), 0).unwrap().unwrap();
        assert!((w.value + 0.5).abs() < 1e-12);
        assert!(ppt_witness(prod.op(), 0).unwrap().is_none());
    }

    #[test]
    fn local_application_matches_joint_map() {
        let a = ProcessMap::depolarizing(2, 0.3).unwrap();
        let b = ProcessMap::transpose(2);
        let joint = ProcessMap::tensor_maps(&a, &b);
        let x = bell().matrix().clone();
        let d = apply_local(&a, &b, &x).unwrap() - joint.apply_matrix(&x);
        assert!(linalg::max_abs_entry(&d) < 1e-12);
    }

    #[test]
    fn h1_examples() {
        let t = h1_norm(&ProcessMap::transpose(2), 4, 0).unwrap();
        assert!((t.value - 1.0).abs() < 1e-9);
        let tid = h1_norm_local(&ProcessMap::transpose(2), &ProcessMap::identity(2), 8, 0).unwrap();
        assert!((tid.value - 2.0).abs() < 1e-7, "{}", tid.value);
        let g = h1_norm_grid_upper_bound(&ProcessMap::transpose(2), 4).unwrap();
        assert!(g.upper >= 1.0 && g.upper < 1.01, "{g:?}");
        assert!((g.sampled - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_maps_give_exact_negativity() {
        let id = ProcessMap::identity(2);
        let s = negativity_bounds(&bell(), &id, &id, &BoundOptions::default()).unwrap();
        assert!((s.h_side_a.bound.unwrap() - 0.5).abs() < 1e-12);
        assert!((s.diamond.bound.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(s.h_side_a.norm_certificate, Some(NormCertificate::Cptp));
    }

    #[test]
    fn transposition_on_bell_state_is_vacuous() {
        let r = negativity_bound_diamond(&bell(), &ProcessMap::transpose(2), &ProcessMap::identity(2), &BoundOptions::default())
            .unwrap();
        assert!(r.squashed_negativity.abs() < 1e-9);
        assert!((r.norm.unwrap() - 2.0).abs() < 1e-5);
        assert!((r.bound.unwrap() + 0.25).abs() < 1e-5);
        assert!(r.vacuous);
    }

    #[test]
    fn mixed_transposition_bound_holds() {
        let q = 0.4;
        let ma = ProcessMap::combine(&[(1.0 - q, &ProcessMap::identity(2)), (q, &ProcessMap::transpose(2))]).unwrap();
        let id = ProcessMap::identity(2);
        let rho = bell();
        let r = negativity_bound_h(&rho, &ma, &id, Side::A, &BoundOptions::default()).unwrap();
        assert!(r.bound.unwrap() <= 0.5 + 1e-9);
        assert!(r.norm.unwrap() >= r.heuristic_norm.unwrap() - 1e-9);
    }
}
