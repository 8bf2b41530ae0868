//! Expectation bodies of the polarization observables and the inclusion test
//! against the single-photon target body.
//!
//! The target body is the cone over the Bloch ball: a vacuum weight `v` and
//! click differences `g_β` are reachable iff `Σ_β g_β² ≤ (1 - v)²`. Full
//! observables are block diagonal in photon number, so the full body is the
//! convex hull of the per-block bodies and inclusion can be checked block by
//! block on pure states.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::maps::PositivityCertificate;
use crate::models::{self, Basis, PhotonBlockModel, BASES};
use crate::observables::ObservableSet;
use crate::optim::{self, OptimizerInfo, SphereOptions};

/// Slack allowed above the target body before reporting a violation.
pub const INCLUSION_TOL: f64 = 1e-7;
/// Tolerance of the exact anticommutation checks.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochMembership {
    pub inside: bool,
    /// `1 - |E|²`.
    pub margin: f64,
}

pub fn bloch_membership(e: [f64; 3]) -> BlochMembership {
    let r2: f64 = e.iter().map(|x| x * x).sum();
    BlochMembership {
        inside: r2 <= 1.0 + 1e-12,
        margin: 1.0 - r2,
    }
}

/// Maximum of `Σ_β ⟨F_β^n⟩²` over `n`-photon states.
#[derive(Debug, Clone)]
pub struct BlochMaximum {
    pub n: usize,
    pub value: f64,
    pub state: DVector<C64>,
    pub optimizer: OptimizerInfo,
}

fn bloch_objective(ops: &[DMatrix<C64>; 3]) -> impl Fn(&DVector<C64>) -> Result<(f64, DVector<C64>)> + Sync + '_ {
    move |psi| {
        let mut val = 0.0;
        let mut grad = DVector::zeros(psi.len());
        for f in ops {
            let fp = f * psi;
            let g = psi.dotc(&fp).re;
            val += g * g;
            grad += fp.scale(2.0 * g);
        }
        Ok((val, grad))
    }
}

fn difference_blocks(n: usize) -> Result<[DMatrix<C64>; 3]> {
    Ok([
        models::difference_block(n, Basis::X)?,
        models::difference_block(n, Basis::Y)?,
        models::difference_block(n, Basis::Z)?,
    ])
}

/// Multi-start ascent over pure `n`-photon states, seeded also at `|n,0>_β`, `|0,n>_β`.
pub fn max_bloch_norm(n: usize, restarts: usize, seed: u64) -> Result<BlochMaximum> {
    if n == 0 {
        return Err(Error::InvalidArgument("photon number must be at least 1".into()));
    }
    let ops = difference_blocks(n)?;
    let mut starts = Vec::new();
    for beta in BASES {
        let (a, b) = models::extremal_states(n, beta)?;
        starts.push(a);
        starts.push(b);
    }
    let opts = SphereOptions::new(restarts, seed).with_initial_points(starts);
    let res = optim::maximize(n + 1, &opts, bloch_objective(&ops))?;
    Ok(BlochMaximum {
        n,
        value: res.value,
        optimizer: res.info(seed),
        state: res.argmax,
    })
}

/// `Σ_β ⟨F_β^n⟩²` at a given `n`-photon state.
pub fn bloch_norm_at(n: usize, psi: &DVector<C64>) -> Result<f64> {
    let ops = difference_blocks(n)?;
    let (v, _) = bloch_objective(&ops)(psi)?;
    Ok(v)
}

const SAMPLE_CHUNK: usize = 4096;

/// Largest `Σ_β ⟨ops_β⟩²` over `samples` Haar-random pure states of dimension `dim`.
fn sample_max(ops: &[DMatrix<C64>; 3], dim: usize, samples: usize, seed: u64) -> Result<(f64, DVector<C64>)> {
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let f = bloch_objective(ops);
    let best = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let count = SAMPLE_CHUNK.min(samples - ci * SAMPLE_CHUNK);
            let mut best: Option<(f64, DVector<C64>)> = None;
            for _ in 0..count {
                let psi = linalg::random_unit_vector(&mut rng, dim);
                let (v, _) = f(&psi)?;
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, psi));
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    best.into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, DVector<C64>)>, (v, p)| match acc {
            Some((av, ap)) if av >= v => Some((av, ap)),
            _ => Some((v, p)),
        })
        .ok_or_else(|| Error::InvalidArgument("at least one sample required".into()))
}

/// Random-sampling cross-check of [`max_bloch_norm`] over pure symmetric states.
pub fn sample_bloch_norm(n: usize, samples: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("photon number must be at least 1".into()));
    }
    Ok(sample_max(&difference_blocks(n)?, n + 1, samples, seed)?.0)
}

fn positions_mask(n: usize, positions: &[usize]) -> Result<u32> {
    let mut mask = 0u32;
    for &p in positions {
        if p >= n || mask & (1 << p) != 0 {
            return Err(Error::InvalidArgument(format!(
                "position {p} repeated or outside 0..{n}"
            )));
        }
        mask |= 1 << p;
    }
    Ok(mask)
}

/// Checks that `σ_β` strings on `positions` (j = |positions| odd) square to
/// the identity and anticommute pairwise across β.
pub fn anticommutation_certificate(n: usize, positions: &[usize]) -> Result<bool> {
    let j = positions.len();
    if j.is_multiple_of(2) {
        return Err(Error::EvenStringLength(j));
    }
    let mask = positions_mask(n, positions)?;
    let ops: Vec<DMatrix<C64>> = BASES.iter().map(|&b| models::string_operator(n, mask, b)).collect();
    let id = linalg::identity(1 << n);
    for (a, oa) in ops.iter().enumerate() {
        if linalg::max_abs_entry(&(oa * oa - &id)) > ALGEBRA_TOL {
            return Ok(false);
        }
        for ob in &ops[a + 1..] {
            if linalg::max_abs_entry(&(oa * ob + ob * oa)) > ALGEBRA_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every odd-size position subset of `n` qubits, as ascending position lists.
pub fn odd_subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() % 2 == 1)
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect())
        .collect()
}

/// Empirical maximum of `Σ_β ⟨σ_β^{(positions)}⟩²` over random and optimized
/// `n`-qubit pure states.
pub fn toth_bound_check(n: usize, positions: &[usize], samples: usize, seed: u64) -> Result<f64> {
    let j = positions.len();
    if j.is_multiple_of(2) {
        return Err(Error::EvenStringLength(j));
    }
    let mask = positions_mask(n, positions)?;
    let ops = [
        models::string_operator(n, mask, Basis::X),
        models::string_operator(n, mask, Basis::Y),
        models::string_operator(n, mask, Basis::Z),
    ];
    let dim = 1 << n;
    let (sampled, _) = sample_max(&ops, dim, samples.max(1), seed)?;
    let opt = optim::maximize(dim, &SphereOptions::new(16, seed), bloch_objective(&ops))?;
    Ok(sampled.max(opt.value))
}

/// Outcome of the analytic chain for the ideal detector.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnalyticLeg {
    pub passed: bool,
    pub certificates_checked: usize,
    pub certificates_failed: usize,
    /// Largest deviation of the permutation sum from `F_β^n`.
    pub expansion_error: f64,
    /// Whether each block has `2^{n-1}` odd subsets, so the weights sum to one.
    pub counting_ok: bool,
}

/// Anticommutation certificates for every odd string, the permutation
/// expansion of `F_β^n` and the subset counting, for `n = 1..=n_max`.
pub fn analytic_leg(n_max: usize) -> Result<AnalyticLeg> {
    let mut checked = 0;
    let mut failed = 0;
    let mut expansion_error = 0.0f64;
    let mut counting_ok = true;
    for n in 1..=n_max {
        let subsets = odd_subsets(n);
        counting_ok &= subsets.len() == 1 << (n - 1);
        for s in &subsets {
            checked += 1;
            if !anticommutation_certificate(n, s)? {
                failed += 1;
            }
        }
        for beta in BASES {
            let diff = models::qubit_difference_operator(n, beta) - models::permutation_expansion(n, beta);
            expansion_error = expansion_error.max(linalg::max_abs_entry(&diff));
        }
    }
    Ok(AnalyticLeg {
        passed: failed == 0 && counting_ok && expansion_error <= ALGEBRA_TOL,
        certificates_checked: checked,
        certificates_failed: failed,
        expansion_error,
        counting_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub n: usize,
    /// `max_ψ Σ_β g_β² - (1 - v)²`; non-positive means inside the target body.
    pub max_excess: f64,
    /// `Σ_β g_β²` at the maximizer.
    pub bloch_norm: f64,
    /// Vacuum-outcome probability at the maximizer.
    pub vacuum_probability: f64,
    pub optimizer: OptimizerInfo,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum InclusionStatus {
    CertifiedSubset,
    Violated {
        block: usize,
        /// Generating state on the full truncated space, as `[re, im]` pairs.
        state: Vec<[f64; 2]>,
        /// Full-model expectation vector of the witness state.
        expectations: Vec<f64>,
    },
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionVerdict {
    pub status: InclusionStatus,
    pub n_max: usize,
    pub worst_margin: f64,
    pub blocks: Vec<BlockResult>,
    pub numerical_leg_passed: bool,
    /// Present only for the ideal detector.
    pub analytic_leg: Option<AnalyticLeg>,
}

impl InclusionVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self.status, InclusionStatus::CertifiedSubset)
    }

    /// Positivity certificate handed to the squasher's positivity check.
    pub fn certificate(&self) -> Option<PositivityCertificate> {
        if !self.is_certified() {
            return None;
        }
        let max_norm = self.blocks.iter().map(|b| b.bloch_norm).fold(0.0, f64::max);
        Some(PositivityCertificate::BlochBallInclusion {
            blocks: self.blocks.len(),
            max_norm,
        })
    }
}

fn check_target(target: &ObservableSet) -> Result<()> {
    target.ensure_complete()?;
    let shape_ok = target.dim() == 3 && target.len() == 9;
    let mut dev = if shape_ok { 0.0f64 } else { f64::INFINITY };
    if shape_ok {
        for (g, beta) in BASES.iter().enumerate() {
            let ops = &target.operators()[3 * g..3 * g + 3];
            let mut vac = DMatrix::zeros(3, 3);
            vac[(0, 0)] = linalg::ONE;
            dev = dev.max(linalg::max_abs_entry(&(ops[0].matrix() - vac)));
            let diff = ops[1].matrix() - ops[2].matrix();
            let mut pauli = DMatrix::zeros(3, 3);
            pauli.view_mut((1, 1), (2, 2)).copy_from(&beta.pauli());
            dev = dev.max(linalg::max_abs_entry(&(diff - pauli)));
        }
    }
    if dev > 1e-12 {
        return Err(Error::Unsupported(
            "inclusion test needs the vacuum-plus-qubit target with Pauli click differences".into(),
        ));
    }
    Ok(())
}

/// Block-wise test of `S_F ⊆ S_T` for a photon-number-diagonal model.
pub fn check_inclusion(
    model: &PhotonBlockModel,
    target: &ObservableSet,
    restarts: usize,
    seed: u64,
) -> Result<InclusionVerdict> {
    check_target(target)?;
    let dev = model.vacuum_consistency();
    if dev > 1e-12 {
        return Err(Error::Unsupported(format!(
            "vacuum operators differ between bases (deviation {dev:e})"
        )));
    }
    let mut blocks = Vec::new();
    let mut witness = None;
    for n in 0..=model.n_max {
        let g = [
            model.difference_block(Basis::X, n),
            model.difference_block(Basis::Y, n),
            model.difference_block(Basis::Z, n),
        ];
        let vac = model.vacuum_block(n);
        let objective = |psi: &DVector<C64>| -> Result<(f64, DVector<C64>)> {
            let (bn, grad) = bloch_objective(&g)(psi)?;
            let vp = &vac * psi;
            let v = psi.dotc(&vp).re;
            Ok((bn - (1.0 - v) * (1.0 - v), grad + vp.scale(2.0 * (1.0 - v))))
        };
        let mut starts = Vec::new();
        if n > 0 {
            for beta in BASES {
                let (a, b) = models::extremal_states(n, beta)?;
                starts.push(a);
                starts.push(b);
            }
        }
        let opts = SphereOptions::new(restarts, seed.wrapping_add(n as u64)).with_initial_points(starts);
        let res = optim::maximize(n + 1, &opts, objective)?;
        let (bloch_norm, _) = bloch_objective(&g)(&res.argmax)?;
        let vacuum_probability = linalg::expectation(&vac, &res.argmax);
        if res.value > INCLUSION_TOL && witness.is_none() {
            witness = Some((n, res.argmax.clone()));
        }
        blocks.push(BlockResult {
            n,
            max_excess: res.value,
            bloch_norm,
            vacuum_probability,
            optimizer: res.info(seed.wrapping_add(n as u64)),
        });
    }
    let worst_margin = blocks.iter().map(|b| b.max_excess).fold(f64::NEG_INFINITY, f64::max);
    let numerical_leg_passed = witness.is_none();
    let status = match witness {
        Some((n, psi)) => {
            let mut full = DVector::zeros(model.dim());
            full.rows_mut(models::fock_offset(n), n + 1).copy_from(&psi);
            let rho = crate::operator::HermitianOperator::projector(&full);
            let expectations = model.full_set().expectations(&rho)?;
            InclusionStatus::Violated {
                block: n,
                state: full.iter().map(|z| [z.re, z.im]).collect(),
                expectations,
            }
        }
        None => InclusionStatus::CertifiedSubset,
    };
    let analytic_leg = if model.imperfections.is_ideal() {
        Some(analytic_leg(model.n_max)?)
    } else {
        None
    };
    Ok(InclusionVerdict {
        status,
        n_max: model.n_max,
        worst_margin,
        blocks,
        numerical_leg_passed,
        analytic_leg,
    })
}
