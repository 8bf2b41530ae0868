//! Scenario configuration, the end-to-end analyses run by the `squash` binary,
//! and their reports.
//!
//! A [`Scenario`] names a detector model, an optional state and a list of
//! analyses. Every headline number in a report is a [`Claim`] tagged as
//! certified (exact linear algebra or a semidefinite certificate) or heuristic
//! (best value of a multi-start search).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, AnalyticLeg, InclusionVerdict};
use crate::linalg::{self, C64};
use crate::maps::{self, PositivityVerdict, ProcessMap, ProcessMapRecord};
use crate::metrics::{self, BoundOptions, BoundSuite, PptVerdict};
use crate::models::{self, Imperfections, IonModel, PhotonBlockModel};
use crate::operator::{DensityMatrix, HermitianOperator, MatrixRecord, PSD_TOL};
use crate::random;
use crate::sdp::{self, ConstraintMode, DiamondNorm, ExpectationData, IonTrapScenario, SdpTolerances};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual allowed between the reconstructed operator and the input data.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    Certified,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Claim {
    pub value: f64,
    pub evidence: Evidence,
}

fn certified(value: f64) -> Claim {
    Claim {
        value,
        evidence: Evidence::Certified,
    }
}

fn heuristic(value: f64) -> Claim {
    Claim {
        value,
        evidence: Evidence::Heuristic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub n_max: usize,
    pub eta: f64,
    pub p_dark: f64,
    pub q: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            n_max: 3,
            eta: 1.0,
            p_dark: 0.0,
            q: 0.0,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<PhotonBlockModel> {
        PhotonBlockModel::new(
            self.n_max,
            Imperfections {
                eta: self.eta,
                p_dark: self.p_dark,
                q: self.q,
            },
        )
    }
}

/// `amplitude · |a.0, a.1>_A |b.0, b.1>_B` in photon occupation numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonTerm {
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
    pub a: [usize; 2],
    pub b: [usize; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedState {
    pub weight: f64,
    pub state: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// Two-qubit `(1-p)|ψ+><ψ+| + p I/4`.
    Werner { p: f64 },
    /// Density matrix with dims `[d_A, d_B]`.
    Explicit { matrix: MatrixRecord },
    /// Normalized superposition of two-party photon-number states.
    Photons { terms: Vec<PhotonTerm> },
    /// Convex mixture; weights are normalized.
    Mixture { components: Vec<WeightedState> },
}

impl StateSpec {
    /// Two single photons in the polarization state `|ψ+>`.
    pub fn photon_pair() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateSpec::Photons {
            terms: vec![
                PhotonTerm {
                    amplitude: [s, 0.0],
                    a: [1, 0],
                    b: [0, 1],
                },
                PhotonTerm {
                    amplitude: [s, 0.0],
                    a: [0, 1],
                    b: [1, 0],
                },
            ],
        }
    }

    /// Resolves the state; photon states live on the `n_max` truncation.
    pub fn resolve(&self, n_max: usize) -> Result<DensityMatrix> {
        match self {
            StateSpec::Werner { p } => models::werner_state(*p),
            StateSpec::Explicit { matrix } => {
                if matrix.dims.len() != 2 {
                    return Err(Error::Config(format!(
                        "explicit states need two subsystems, got dims {:?}",
                        matrix.dims
                    )));
                }
                let op = HermitianOperator::new(matrix.dims.clone(), matrix.to_matrix()?)?;
                DensityMatrix::new(op)
            }
            StateSpec::Photons { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("photon state without terms".into()));
                }
                let d = models::fock_dim(n_max);
                let mut v = DVector::<C64>::zeros(d * d);
                for t in terms {
                    let amp = C64::new(t.amplitude[0], t.amplitude[1]);
                    if t.a[0] + t.a[1] > n_max || t.b[0] + t.b[1] > n_max {
                        return Err(Error::TruncationExceeded {
                            weight: amp.norm_sqr(),
                            n_max,
                        });
                    }
                    let ia = models::fock_index(t.a[0], t.a[1]);
                    let ib = models::fock_index(t.b[0], t.b[1]);
                    v[ia * d + ib] += amp;
                }
                let norm = v.norm();
                if norm == 0.0 {
                    return Err(Error::Config("photon state has zero norm".into()));
                }
                DensityMatrix::pure(vec![d, d], &v.unscale(norm))
            }
            StateSpec::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if components.is_empty() || components.iter().any(|c| c.weight < 0.0) || total <= 0.0 {
                    return Err(Error::Config("mixture needs non-negative weights with positive sum".into()));
                }
                let mut acc: Option<HermitianOperator> = None;
                for c in components {
                    let term = c.state.resolve(n_max)?.into_op().scale(c.weight / total);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term)?,
                    });
                }
                DensityMatrix::new(acc.expect("non-empty mixture"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Identity { dim: usize },
    Transpose { dim: usize },
    Depolarizing { dim: usize, p: f64 },
    /// `(1-q) id + q T` on a qubit.
    TransposeMixture { q: f64 },
    Choi {
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        choi: MatrixRecord,
    },
    /// Seeded random channel; the seed defaults to the scenario seed.
    RandomCptp {
        din: usize,
        dout: usize,
        kraus: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl MapSpec {
    pub fn build(&self, scenario_seed: u64) -> Result<ProcessMap> {
        match self {
            MapSpec::Identity { dim } => Ok(ProcessMap::identity(*dim)),
            MapSpec::Transpose { dim } => Ok(ProcessMap::transpose(*dim)),
            MapSpec::Depolarizing { dim, p } => ProcessMap::depolarizing(*dim, *p),
            MapSpec::TransposeMixture { q } => {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::ParameterOutOfRange {
                        name: "q",
                        value: *q,
                        range: "[0, 1]",
                    });
                }
                ProcessMap::combine(&[(1.0 - q, &ProcessMap::identity(2)), (*q, &ProcessMap::transpose(2))])
            }
            MapSpec::Choi {
                in_dims,
                out_dims,
                choi,
            } => ProcessMap::from_choi(in_dims.clone(), out_dims.clone(), choi.to_matrix()?),
            MapSpec::RandomCptp { din, dout, kraus, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(scenario_seed));
                random::random_cptp(&mut rng, *din, *dout, *kraus)
            }
        }
    }
}

fn default_lo() -> f64 {
    0.0
}

fn default_hi() -> f64 {
    1.0
}

fn default_tol_p() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// Simulated (or supplied) click data, reconstruction and entanglement verdict.
    TomographyTest {
        /// Expectations of `F_i ⊗ F_j`, `i`-major; simulated from the state if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expectations: Option<Vec<f64>>,
    },
    /// Inclusion, squasher construction and complete positivity per truncation.
    SquashCheck,
    Inclusion,
    Negativity,
    Bounds { map_a: MapSpec, map_b: MapSpec },
    /// Ion-trap separability boundaries for both models and constraint modes.
    Threshold {
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
        #[serde(default = "default_tol_p")]
        tol: f64,
    },
    DiamondNorm { map: MapSpec },
}

impl Analysis {
    fn is_stochastic(&self) -> bool {
        !matches!(self, Analysis::Negativity | Analysis::Threshold { .. })
    }

    fn needs_state(&self) -> bool {
        match self {
            Analysis::TomographyTest { expectations } => expectations.is_none(),
            Analysis::Negativity | Analysis::Bounds { .. } => true,
            _ => false,
        }
    }
}

fn default_restarts() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Required whenever an analysis is stochastic.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub tolerances: SdpTolerances,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: None,
            restarts: default_restarts(),
            model: ModelSpec::default(),
            state: None,
            tolerances: SdpTolerances::default(),
            analyses: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.analyses.is_empty() {
            return Err(Error::Config("no analyses requested".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.model.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if self.seed.is_none() && self.analyses.iter().any(Analysis::is_stochastic) {
            return Err(Error::Config("a seed is required for stochastic analyses".into()));
        }
        if self.state.is_none() && self.analyses.iter().any(Analysis::needs_state) {
            return Err(Error::Config("a state is required by the requested analyses".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "entangled (certified lift)")]
    EntangledCertifiedLift,
    #[serde(rename = "entangled in target data (lift not certified)")]
    EntangledLiftNotCertified,
    #[serde(rename = "not detected")]
    NotDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detection {
    /// The reconstruction itself is not positive semidefinite.
    DirectlyWitnessed,
    Npt,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct QubitPair {
    /// Probability that both parties see exactly one photon.
    pub weight: Claim,
    pub state: MatrixRecord,
    pub negativity: Claim,
    pub ppt: PptVerdict,
    pub witness_value: Claim,
    pub optimal_witness_value: Option<Claim>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftStatus {
    pub status: &'static str,
    pub worst_margin: Claim,
    pub analytic_leg_passed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub n_max: usize,
    pub data_source: &'static str,
    pub observables: usize,
    pub reconstruction: MatrixRecord,
    pub reconstruction_residual: f64,
    pub reconstruction_consistent: bool,
    pub reconstruction_min_eigenvalue: Claim,
    pub target_negativity: Claim,
    pub target_ppt: PptVerdict,
    pub qubit_pair: Option<QubitPair>,
    pub detection: Detection,
    pub lift: LiftStatus,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationCp {
    pub n: usize,
    pub min_choi_eigenvalue: Claim,
    pub completely_positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlochNorm {
    pub n: usize,
    pub max_norm: Claim,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquashReport {
    pub n_max: usize,
    pub bloch_norms: Vec<BlochNorm>,
    pub analytic_leg: Option<AnalyticLeg>,
    pub inclusion: InclusionVerdict,
    pub squasher: ProcessMapRecord,
    pub truncations: Vec<TruncationCp>,
    pub positivity: PositivityVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub worst_margin: Claim,
    pub verdict: InclusionVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativityResult {
    pub dims: Vec<usize>,
    pub negativity: Claim,
    pub trace_norm: f64,
    pub negative_eigenvalue_sum: f64,
    pub ppt: PptVerdict,
    /// Value of the six-projector witness, for two-qubit states.
    pub witness_value: Option<Claim>,
    pub optimal_witness_value: Option<Claim>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsResult {
    pub best: Option<Claim>,
    pub suite: BoundSuite,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ThresholdOutcome {
    Found {
        threshold: Claim,
        lo: f64,
        hi: f64,
        probes: usize,
    },
    NoBoundaryInRange {
        message: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRun {
    pub model: IonModel,
    pub mode: ConstraintMode,
    pub result: ThresholdOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub range: [f64; 2],
    pub runs: Vec<ThresholdRun>,
    /// `[qutrit boundary, qubit boundary)` in the default constraint mode.
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamondReport {
    pub value: Claim,
    pub lower_bound: Claim,
    pub detail: DiamondNorm,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "analysis", rename_all = "kebab-case")]
pub enum AnalysisResult {
    TomographyTest(TomographyReport),
    SquashCheck(SquashReport),
    Inclusion(InclusionReport),
    Negativity(NegativityResult),
    Bounds(BoundsResult),
    Threshold(ThresholdReport),
    DiamondNorm(DiamondReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Scenario,
    pub results: Vec<AnalysisResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Runs every analysis of a validated scenario, in order.
pub fn run_scenario(scenario: &Scenario, command: &str) -> Result<Report> {
    scenario.validate()?;
    let mut results = Vec::with_capacity(scenario.analyses.len());
    for a in &scenario.analyses {
        results.push(run_analysis(scenario, a)?);
    }
    Ok(Report {
        tool: "squash",
        version: VERSION,
        command: command.to_string(),
        inputs: scenario.clone(),
        results,
        wall_time_seconds: None,
    })
}

fn run_analysis(s: &Scenario, a: &Analysis) -> Result<AnalysisResult> {
    let seed = s.seed.unwrap_or(0);
    Ok(match a {
        Analysis::TomographyTest { expectations } => AnalysisResult::TomographyTest(run_tomography_test(
            s,
            expectations.as_deref(),
        )?),
        Analysis::SquashCheck => AnalysisResult::SquashCheck(run_polarization_certification(s)?),
        Analysis::Inclusion => {
            let model = s.model.build()?;
            let verdict = geometry::check_inclusion(&model, &models::target_click_operators()?, s.restarts, seed)?;
            AnalysisResult::Inclusion(InclusionReport {
                worst_margin: heuristic(verdict.worst_margin),
                verdict,
            })
        }
        Analysis::Negativity => {
            let rho = state_of(s)?;
            AnalysisResult::Negativity(negativity_result(&rho)?)
        }
        Analysis::Bounds { map_a, map_b } => {
            let rho = state_of(s)?;
            let (ma, mb) = (map_a.build(seed)?, map_b.build(seed.wrapping_add(1))?);
            let opts = BoundOptions {
                restarts: s.restarts,
                seed,
                tolerances: s.tolerances,
            };
            let suite = metrics::negativity_bounds(&rho, &ma, &mb, &opts)?;
            AnalysisResult::Bounds(BoundsResult {
                best: suite.best.map(certified),
                suite,
            })
        }
        Analysis::Threshold { lo, hi, tol } => AnalysisResult::Threshold(run_ion_trap_threshold(*lo, *hi, *tol, &s.tolerances)?),
        Analysis::DiamondNorm { map } => {
            let m = map.build(seed)?;
            let detail = sdp::diamond_norm(&m, s.restarts, seed, &s.tolerances)?;
            AnalysisResult::DiamondNorm(DiamondReport {
                value: certified(detail.value),
                lower_bound: heuristic(detail.lower_bound),
                detail,
            })
        }
    })
}

fn state_of(s: &Scenario) -> Result<DensityMatrix> {
    s.state
        .as_ref()
        .ok_or_else(|| Error::Config("a state is required".into()))?
        .resolve(s.model.n_max)
}

fn negativity_result(rho: &DensityMatrix) -> Result<NegativityResult> {
    if rho.dims().len() != 2 {
        return Err(Error::Config(format!("negativity needs a bipartite state, got dims {:?}", rho.dims())));
    }
    let n = metrics::negativity(rho.op(), 0)?;
    let ppt = metrics::ppt_test(rho.op(), 0)?;
    let witness_value = if rho.dims() == [2, 2] {
        Some(certified(metrics::witness_value(&models::standard_witness(), rho)?))
    } else {
        None
    };
    let optimal_witness_value = metrics::ppt_witness(rho.op(), 0)?.map(|w| certified(w.value));
    Ok(NegativityResult {
        dims: rho.dims().to_vec(),
        negativity: certified(n.value),
        trace_norm: n.trace_norm,
        negative_eigenvalue_sum: n.negative_eigenvalue_sum,
        ppt,
        witness_value,
        optimal_witness_value,
    })
}

/// Places a two-qubit polarization state in the single-photon blocks.
fn embed_qubit_pair(rho: &DensityMatrix, n_max: usize) -> Result<DensityMatrix> {
    let d = models::fock_dim(n_max);
    let idx = [models::fock_index(1, 0), models::fock_index(0, 1)];
    let mut m = DMatrix::zeros(d * d, d * d);
    for r in 0..4 {
        for c in 0..4 {
            m[(idx[r / 2] * d + idx[r % 2], idx[c / 2] * d + idx[c % 2])] = rho.matrix()[(r, c)];
        }
    }
    DensityMatrix::new(HermitianOperator::from_hermitian_part(vec![d, d], &m)?)
}

fn lift_status(v: &InclusionVerdict) -> LiftStatus {
    LiftStatus {
        status: match v.status {
            geometry::InclusionStatus::CertifiedSubset => "certified-subset",
            geometry::InclusionStatus::Violated { .. } => "violated",
            geometry::InclusionStatus::Undecided => "undecided",
        },
        worst_margin: heuristic(v.worst_margin),
        analytic_leg_passed: v.analytic_leg.as_ref().map(|l| l.passed),
    }
}

/// Click data for `F_i ⊗ F_j`, double-click reassignment included in `F`,
/// reconstructed on vacuum ⊕ qubit per party and tested for entanglement.
pub fn run_tomography_test(s: &Scenario, supplied: Option<&[f64]>) -> Result<TomographyReport> {
    let n_max = s.model.n_max;
    let model = s.model.build()?;
    let target = models::target_click_operators()?;
    let full = model.full_set();
    let (data, data_source) = match supplied {
        Some(e) => (e.to_vec(), "supplied"),
        None => {
            let rho = state_of(s)?;
            let d = models::fock_dim(n_max);
            let rho = if rho.dims() == [2, 2] {
                embed_qubit_pair(&rho, n_max)?
            } else if rho.dims() == [d, d] {
                rho
            } else {
                return Err(Error::DimensionMismatch(format!(
                    "state dims {:?}; expected [2, 2] or [{d}, {d}] for n_max = {n_max}",
                    rho.dims()
                )));
            };
            (ExpectationData::from_state(rho.op(), full, full)?.joint, "simulated")
        }
    };
    let pair_targets = target.tensor(&target)?;
    if data.len() != pair_targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} expectations for {} joint outcomes",
            data.len(),
            pair_targets.len()
        )));
    }
    let rec = pair_targets.linear_inversion(&data)?;
    let x = rec.operator.clone();
    let target_negativity = metrics::negativity(&x, 0)?;
    let target_ppt = metrics::ppt_test(&x, 0)?;

    let qubit_idx = [4usize, 5, 7, 8];
    let pm = DMatrix::from_fn(4, 4, |r, c| x.matrix()[(qubit_idx[r], qubit_idx[c])]);
    let weight = linalg::trace(&pm).re;
    let qubit_pair = if weight > 1e-12 {
        let op = HermitianOperator::from_hermitian_part(vec![2, 2], &pm.unscale(weight))?;
        let ppt = metrics::ppt_test(&op, 0)?;
        let neg = metrics::negativity(&op, 0)?;
        let w = models::standard_witness().inner(&op)?;
        let opt = metrics::ppt_witness(&op, 0)?.map(|w| certified(w.value));
        Some(QubitPair {
            weight: certified(weight),
            state: op.to_record(),
            negativity: certified(neg.value),
            ppt,
            witness_value: certified(w),
            optimal_witness_value: opt,
        })
    } else {
        None
    };

    let detection = if rec.min_eigenvalue < PSD_TOL {
        Detection::DirectlyWitnessed
    } else if target_ppt.is_npt() || qubit_pair.as_ref().is_some_and(|p| p.ppt.is_npt()) {
        Detection::Npt
    } else {
        Detection::None
    };
    let inclusion = geometry::check_inclusion(&model, &target, s.restarts, s.seed.unwrap_or(0))?;
    let verdict = match (detection, inclusion.is_certified()) {
        (Detection::None, _) => Verdict::NotDetected,
        (_, true) => Verdict::EntangledCertifiedLift,
        (_, false) => Verdict::EntangledLiftNotCertified,
    };
    Ok(TomographyReport {
        n_max,
        data_source,
        observables: data.len(),
        reconstruction: x.to_record(),
        reconstruction_residual: rec.residual,
        reconstruction_consistent: rec.residual <= RECONSTRUCTION_TOL,
        reconstruction_min_eigenvalue: certified(rec.min_eigenvalue),
        target_negativity: certified(target_negativity.value),
        target_ppt,
        qubit_pair,
        detection,
        lift: lift_status(&inclusion),
        verdict,
    })
}

/// Block maxima, certificates, inclusion, the squasher and its CP status on
/// every truncation `n ≤ t`.
pub fn run_polarization_certification(s: &Scenario) -> Result<SquashReport> {
    let seed = s.seed.unwrap_or(0);
    let model = s.model.build()?;
    let target = models::target_click_operators()?;
    let bloch_norms = (1..=s.model.n_max)
        .map(|n| {
            let m = geometry::max_bloch_norm(n, s.restarts, seed.wrapping_add(n as u64))?;
            Ok(BlochNorm {
                n,
                max_norm: heuristic(m.value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inclusion = geometry::check_inclusion(&model, &target, s.restarts, seed)?;
    let squasher = maps::build_squasher(&target, model.full_set())?;
    let truncations = (1..=s.model.n_max)
        .map(|t| {
            let idx: Vec<usize> = (0..models::fock_dim(t)).collect();
            let lmin = squasher.restrict_input(&idx)?.min_choi_eigenvalue()?;
            Ok(TruncationCp {
                n: t,
                min_choi_eigenvalue: certified(lmin),
                completely_positive: lmin >= PSD_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let positivity = maps::check_positivity(&squasher, s.restarts, seed, inclusion.certificate())?;
    Ok(SquashReport {
        n_max: s.model.n_max,
        bloch_norms,
        analytic_leg: inclusion.analytic_leg.clone(),
        inclusion,
        squasher: squasher.to_record(),
        truncations,
        positivity,
    })
}

/// Boundaries for qubit-qubit and qubit-qutrit data in both constraint modes.
pub fn run_ion_trap_threshold(lo: f64, hi: f64, tol_p: f64, tol: &SdpTolerances) -> Result<ThresholdReport> {
    let mut runs = Vec::new();
    for model in [IonModel::Qubit, IonModel::Qutrit] {
        for mode in [ConstraintMode::JointAndMarginals, ConstraintMode::JointOnly] {
            let sc = IonTrapScenario { model, mode };
            let result = match sdp::threshold_search(&sc, lo, hi, tol_p, tol) {
                Ok(t) => ThresholdOutcome::Found {
                    threshold: certified(t.threshold),
                    lo: t.lo,
                    hi: t.hi,
                    probes: t.probes,
                },
                Err(e @ Error::NotBracketing { .. }) => ThresholdOutcome::NoBoundaryInRange { message: e.to_string() },
                Err(e) => return Err(e),
            };
            runs.push(ThresholdRun { model, mode, result });
        }
    }
    let found = |m: IonModel| {
        runs.iter().find_map(|r| match (&r.result, r.model == m && r.mode == ConstraintMode::default()) {
            (ThresholdOutcome::Found { threshold, .. }, true) => Some(threshold.value),
            _ => None,
        })
    };
    let interval = match (found(IonModel::Qutrit), found(IonModel::Qubit)) {
        (Some(a), Some(b)) => Some([a, b]),
        _ => None,
    };
    Ok(ThresholdReport {
        range: [lo, hi],
        runs,
        interval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    P,
    Eta,
    PDark,
    Q,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::P => "p",
            SweepParameter::Eta => "eta",
            SweepParameter::PDark => "p_dark",
            SweepParameter::Q => "q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMetric {
    /// Negativity of the input state.
    Negativity,
    /// Negativity of the reconstructed two-qubit state.
    ReconstructedNegativity,
    /// Probability that both parties register a single photon.
    PairWeight,
    /// Worst inclusion margin over photon blocks (heuristic).
    MaxExcess,
    /// Smallest Choi eigenvalue of the squasher.
    MinChoiEigenvalue,
}

impl SweepMetric {
    fn name(self) -> &'static str {
        match self {
            SweepMetric::Negativity => "negativity",
            SweepMetric::ReconstructedNegativity => "reconstructed_negativity",
            SweepMetric::PairWeight => "pair_weight",
            SweepMetric::MaxExcess => "max_excess",
            SweepMetric::MinChoiEigenvalue => "min_choi_eigenvalue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub metrics: Vec<SweepMetric>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub state: Option<StateSpec>,
}

impl SweepConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn sweep_point(cfg: &SweepConfig, value: f64) -> Result<Vec<f64>> {
    let mut model = cfg.model;
    let mut state = cfg.state.clone();
    match cfg.parameter {
        SweepParameter::P => match &state {
            None | Some(StateSpec::Werner { .. }) => state = Some(StateSpec::Werner { p: value }),
            Some(_) => return Err(Error::Config("sweeping p needs a Werner state".into())),
        },
        SweepParameter::Eta | SweepParameter::PDark | SweepParameter::Q if state.is_none() => {
            state = Some(StateSpec::photon_pair());
            match cfg.parameter {
                SweepParameter::Eta => model.eta = value,
                SweepParameter::PDark => model.p_dark = value,
                _ => model.q = value,
            }
        }
        SweepParameter::Eta => model.eta = value,
        SweepParameter::PDark => model.p_dark = value,
        SweepParameter::Q => model.q = value,
    }
    let scenario = Scenario {
        seed: cfg.seed,
        restarts: cfg.restarts,
        model,
        state,
        tolerances: SdpTolerances::default(),
        analyses: vec![],
    };
    let mut row = vec![value];
    let mut tomo: Option<TomographyReport> = None;
    for m in &cfg.metrics {
        let v = match m {
            SweepMetric::Negativity => metrics::negativity(state_of(&scenario)?.op(), 0)?.value,
            SweepMetric::ReconstructedNegativity | SweepMetric::PairWeight => {
                if tomo.is_none() {
                    tomo = Some(run_tomography_test(&scenario, None)?);
                }
                let pair = tomo.as_ref().and_then(|t| t.qubit_pair.as_ref());
                match (m, pair) {
                    (SweepMetric::PairWeight, Some(p)) => p.weight.value,
                    (SweepMetric::ReconstructedNegativity, Some(p)) => p.negativity.value,
                    _ => 0.0,
                }
            }
            SweepMetric::MaxExcess => {
                let model = model.build()?;
                geometry::check_inclusion(&model, &models::target_click_operators()?, cfg.restarts, cfg.seed.unwrap_or(0))?
                    .worst_margin
            }
            SweepMetric::MinChoiEigenvalue => {
                let model = model.build()?;
                maps::build_squasher(&models::target_click_operators()?, model.full_set())?.min_choi_eigenvalue()?
            }
        };
        row.push(v);
    }
    Ok(row)
}

/// One row per grid value, computed concurrently and emitted in grid order.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.values.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if cfg.metrics.is_empty() {
        return Err(Error::Config("sweep requests no metrics".into()));
    }
    let stochastic = cfg
        .metrics
        .iter()
        .any(|m| !matches!(m, SweepMetric::Negativity | SweepMetric::MinChoiEigenvalue));
    if stochastic && cfg.seed.is_none() {
        return Err(Error::Config("a seed is required for stochastic sweep metrics".into()));
    }
    let rows = cfg
        .values
        .par_iter()
        .map(|&v| sweep_point(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec![cfg.parameter.name().to_string()];
    header.extend(cfg.metrics.iter().map(|m| m.name().to_string()));
    Ok(SweepTable { header, rows })
}
