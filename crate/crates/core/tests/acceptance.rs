//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use squashing::geometry;
use squashing::linalg::{self, C64};
use squashing::maps::{self, ProcessMap};
use squashing::metrics::{self, BoundOptions, NormCertificate, Side};
use squashing::models::{self, Basis, IonModel, PhotonBlockModel, BASES};
use squashing::random;
use squashing::scenario::{self, Scenario, StateSpec, Verdict};
use squashing::sdp::{self, ConstraintMode, IonTrapScenario, SdpTolerances};
use squashing::{HermitianOperator, MatrixRecord};

type Check = std::result::Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> std::result::Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("runtime {t:?} exceeds {budget:?}"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn werner_threshold() -> Check {
    let start = Instant::now();
    // Separable (PPT) above the boundary, entangled below.
    let res = sdp::bisect_threshold(
        |p| {
            let rho = models::werner_state(p)?;
            Ok(metrics::negativity(rho.op(), 0)?.value <= 1e-14)
        },
        0.0,
        1.0,
        1e-9,
    )
    .map_err(err)?;
    ensure((res.threshold - 2.0 / 3.0).abs() <= 1e-6, || format!("threshold {}", res.threshold))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("p* = {:.9} after {} probes", res.threshold, res.probes))
}

fn ion_trap_gap() -> Check {
    let start = Instant::now();
    let tol = SdpTolerances::default();
    let search = |model, mode| {
        sdp::threshold_search(&IonTrapScenario { model, mode }, 0.0, 1.0, 1e-4, &tol).map_err(err)
    };
    let qutrit = search(IonModel::Qutrit, ConstraintMode::JointAndMarginals)?;
    let qubit = search(IonModel::Qubit, ConstraintMode::JointAndMarginals)?;
    let qutrit_joint = search(IonModel::Qutrit, ConstraintMode::JointOnly)?;
    ensure((qutrit.threshold - 0.63).abs() <= 0.01, || format!("qutrit boundary {}", qutrit.threshold))?;
    ensure((qubit.threshold - 2.0 / 3.0).abs() <= 1e-3, || format!("qubit boundary {}", qubit.threshold))?;
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "interval [{:.4}, {:.4}) with joint+marginals; joint-only qutrit boundary {:.4}",
        qutrit.threshold, qubit.threshold, qutrit_joint.threshold
    ))
}

fn bloch_maxima() -> Check {
    let start = Instant::now();
    let model = PhotonBlockModel::ideal(5).map_err(err)?;
    let mut worst = 0.0f64;
    for n in 1..=5usize {
        let opt = geometry::max_bloch_norm(n, 64, 100 + n as u64).map_err(err)?;
        let sampled = geometry::sample_bloch_norm(n, 100_000, 200 + n as u64).map_err(err)?;
        worst = worst.max(opt.value).max(sampled);
        ensure(opt.value <= 1.0 + 1e-7 && sampled <= 1.0 + 1e-7, || {
            format!("n = {n}: optimized {} sampled {sampled}", opt.value)
        })?;
        // |n,0>_z is the first vector of the block; evaluate it through the
        // full click model rather than the qubit strings.
        let mut e0 = DVector::<C64>::zeros(n + 1);
        e0[0] = C64::new(1.0, 0.0);
        let via_model: f64 = BASES
            .iter()
            .map(|&b| linalg::expectation(&model.difference_block(b, n), &e0).powi(2))
            .sum();
        let via_strings = geometry::bloch_norm_at(n, &e0).map_err(err)?;
        ensure((via_model - 1.0).abs() <= 1e-9 && (via_strings - 1.0).abs() <= 1e-9, || {
            format!("n = {n}: value at |n,0>_z is {via_model} / {via_strings}")
        })?;
    }
    within_budget(start, Duration::from_secs(120))?;
    Ok(format!("max over n <= 5 is {worst:.12}"))
}

fn pauli(b: Basis) -> DMatrix<C64> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match b {
        Basis::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        Basis::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Basis::Z => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

fn string(n: usize, positions: &[usize], b: Basis) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for q in 0..n {
        let f = if positions.contains(&q) { pauli(b) } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

fn anticommutation() -> Check {
    let mut checked = 0;
    for n in 1..=5usize {
        for positions in geometry::odd_subsets(n) {
            ensure(geometry::anticommutation_certificate(n, &positions).map_err(err)?, || {
                format!("library certificate failed for n = {n}, {positions:?}")
            })?;
            let ops: Vec<_> = BASES.iter().map(|&b| string(n, &positions, b)).collect();
            let id = DMatrix::<C64>::identity(1 << n, 1 << n);
            for a in 0..3 {
                ensure(linalg::max_abs_entry(&(&ops[a] * &ops[a] - &id)) <= 1e-12, || "square".into())?;
                for b in a + 1..3 {
                    let ac = &ops[a] * &ops[b] + &ops[b] * &ops[a];
                    ensure(linalg::max_abs_entry(&ac) <= 1e-12, || format!("anticommutator n = {n}"))?;
                }
            }
            checked += 1;
        }
    }
    let mut expansion = 0.0f64;
    for n in 1..=4usize {
        let v = models::symmetric_embedding(n).map_err(err)?;
        for b in BASES {
            let mut sum = DMatrix::<C64>::zeros(1 << n, 1 << n);
            for positions in geometry::odd_subsets(n) {
                sum += string(n, &positions, b);
            }
            let sum = sum.unscale((1u64 << (n - 1)) as f64);
            let on_block = v.adjoint() * sum * &v;
            let direct = models::difference_block(n, b).map_err(err)?;
            expansion = expansion.max(linalg::max_abs_entry(&(on_block - direct)));
        }
    }
    ensure(expansion <= 1e-12, || format!("expansion error {expansion:e}"))?;
    Ok(format!("{checked} odd strings certified; expansion error {expansion:.1e}"))
}

fn squashing_identity() -> Check {
    let model = PhotonBlockModel::ideal(4).map_err(err)?;
    let target = models::target_click_operators().map_err(err)?;
    let sq = maps::build_squasher(&target, model.full_set()).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rho = random::random_density(&mut rng, vec![model.dim()], model.dim()).map_err(err)?;
        let out = sq.apply(rho.op()).map_err(err)?;
        for (f, t) in model.full_set().operators().iter().zip(target.operators()) {
            let lhs = f.inner(rho.op()).map_err(err)?;
            let rhs = t.inner(&out).map_err(err)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 states x 9 outcomes, max deviation {worst:.1e}"))
}

/// Choi matrix from the Bloch reconstruction on vacuum ⊕ qubit, independent of
/// the linear-inversion squasher.
fn bloch_choi(model: &PhotonBlockModel) -> DMatrix<C64> {
    let d = model.dim();
    let vac = model.operator(Basis::Z, 0).matrix().clone();
    let photon = model.operator(Basis::Z, 1).matrix() + model.operator(Basis::Z, 2).matrix();
    let diffs: Vec<(Basis, DMatrix<C64>)> = BASES
        .iter()
        .map(|&b| (b, model.operator(b, 1).matrix() - model.operator(b, 2).matrix()))
        .collect();
    let mut j = DMatrix::zeros(3 * d, 3 * d);
    for r in 0..d {
        for c in 0..d {
            // tr(|r><c| F) = F[c, r]
            let mut out = DMatrix::<C64>::zeros(3, 3);
            out[(0, 0)] = vac[(c, r)];
            let mut q = DMatrix::<C64>::identity(2, 2) * photon[(c, r)];
            for (b, g) in &diffs {
                q += pauli(*b) * g[(c, r)];
            }
            out.view_mut((1, 1), (2, 2)).copy_from(&(q * C64::new(0.5, 0.0)));
            j.view_mut((3 * r, 3 * c), (3, 3)).copy_from(&out);
        }
    }
    j
}

fn positive_not_cp() -> Check {
    let model = PhotonBlockModel::ideal(4).map_err(err)?;
    let target = models::target_click_operators().map_err(err)?;
    let sq = maps::build_squasher(&target, model.full_set()).map_err(err)?;
    let oracle = bloch_choi(&model);
    let dev = linalg::max_abs_entry(&(sq.choi() - &oracle));
    ensure(dev <= 1e-10, || format!("Choi matrices differ by {dev:e}"))?;
    let upto = |n: usize| -> std::result::Result<(f64, f64), String> {
        let k = models::fock_dim(n);
        let lib = sq
            .restrict_input(&(0..k).collect::<Vec<_>>())
            .map_err(err)?
            .min_choi_eigenvalue()
            .map_err(err)?;
        let orc = linalg::min_eigenvalue(&oracle.view((0, 0), (3 * k, 3 * k)).into_owned()).map_err(err)?;
        Ok((lib, orc))
    };
    let (two, two_o) = upto(2)?;
    let (three, three_o) = upto(3)?;
    ensure(two >= -1e-9 && two_o >= -1e-9, || format!("n <= 2 min eigenvalue {two} / {two_o}"))?;
    ensure(three < -1e-6 && three_o < -1e-6, || format!("n <= 3 min eigenvalue {three} / {three_o}"))?;
    Ok(format!("min Choi eigenvalue {two:.1e} on n <= 2, {three:.6} once n = 3 is included"))
}

fn bound_suite() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_a = f64::INFINITY;
    for k in 0..50u64 {
        let ma = random::random_cptp(&mut rng, 2, 2, 1 + (k as usize % 3)).map_err(err)?;
        let mb = random::random_cptp(&mut rng, 2, 2, 1 + ((k as usize + 1) % 3)).map_err(err)?;
        let rho = random::random_density(&mut rng, vec![2, 2], 1 + (k as usize % 4)).map_err(err)?;
        let opts = BoundOptions {
            restarts: 4,
            seed: k,
            ..BoundOptions::default()
        };
        let r = metrics::negativity_bound_h(&rho, &ma, &mb, Side::A, &opts).map_err(err)?;
        ensure(r.norm_certificate == Some(NormCertificate::Cptp) && r.norm == Some(1.0), || {
            format!("pair {k}: norm {:?} {:?}", r.norm, r.norm_certificate)
        })?;
        let n_in = metrics::negativity(rho.op(), 0).map_err(err)?.value;
        let b = r.bound.ok_or("missing bound")?;
        ensure((b - r.squashed_negativity).abs() <= 1e-12, || "norm-1 bound differs from N_out".into())?;
        worst_a = worst_a.min(n_in - b);
        ensure(n_in >= b - 1e-8, || format!("pair {k}: N = {n_in} < bound {b}"))?;
    }
    let (mut worst_h, mut worst_d, mut worst_order) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut non_vacuous = 0;
    for k in 0..50u64 {
        let (ma, _) = random::random_positive_qubit_map(&mut rng, 0.05, 0.6).map_err(err)?;
        let (mb, _) = random::random_positive_qubit_map(&mut rng, 0.05, 0.6).map_err(err)?;
        let rho = random::random_pure_state(&mut rng, vec![2, 2]).map_err(err)?;
        let opts = BoundOptions {
            restarts: 4,
            seed: 1000 + k,
            ..BoundOptions::default()
        };
        let s = metrics::negativity_bounds(&rho, &ma, &mb, &opts).map_err(err)?;
        let n_in = s.negativity_in.ok_or("missing input negativity")?;
        for r in [&s.h_side_a, &s.h_side_b] {
            let b = r.bound.ok_or_else(|| format!("pair {k}: no certified H-norm"))?;
            worst_h = worst_h.min(n_in - b);
        }
        let hb = s.h_side_a.bound.unwrap().max(s.h_side_b.bound.unwrap());
        let db = s.diamond.bound.ok_or_else(|| format!("pair {k}: no diamond bound"))?;
        worst_d = worst_d.min(n_in - db);
        worst_order = worst_order.max(db - hb);
        if hb > 0.0 {
            non_vacuous += 1;
        }
    }
    ensure(worst_h >= -1e-6, || format!("H-norm bound slack {worst_h:e}"))?;
    ensure(worst_d >= -1e-6, || format!("diamond bound slack {worst_d:e}"))?;
    ensure(worst_order <= 1e-6, || format!("diamond bound exceeds H-norm bound by {worst_order:e}"))?;
    within_budget(start, Duration::from_secs(600))?;
    Ok(format!(
        "CPTP slack >= {worst_a:.1e}; positive maps: H slack >= {worst_h:.1e}, diamond slack >= {worst_d:.1e}, \
         diamond - H <= {worst_order:.1e}, {non_vacuous}/50 non-vacuous"
    ))
}

fn diamond_norms() -> Check {
    let tol = SdpTolerances::default();
    let id = sdp::diamond_norm(&ProcessMap::identity(2), 8, 1, &tol).map_err(err)?;
    ensure((id.value - 1.0).abs() <= 1e-7, || format!("identity {}", id.value))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for (din, dout, k) in [(2, 2, 2), (2, 3, 3), (3, 2, 2), (2, 2, 4), (3, 3, 2)] {
        let m = random::random_cptp(&mut rng, din, dout, k).map_err(err)?;
        let d = sdp::diamond_norm(&m, 8, 2, &tol).map_err(err)?;
        worst = worst.max((d.value - 1.0).abs());
    }
    ensure(worst <= 1e-6, || format!("random CPTP deviation {worst:e}"))?;
    let t = sdp::diamond_norm(&ProcessMap::transpose(2), 16, 3, &tol).map_err(err)?;
    ensure((t.value - 2.0).abs() <= 1e-5, || format!("transpose {}", t.value))?;
    ensure(t.discrepancy().abs() <= 1e-5, || format!("SDP vs search {}", t.discrepancy()))?;
    Ok(format!(
        "identity {:.10}, CPTP max deviation {worst:.1e}, transpose {:.8} (search {:.8})",
        id.value, t.value, t.lower_bound
    ))
}

fn soundness() -> Check {
    let n_max = 4;
    let model = PhotonBlockModel::ideal(n_max).map_err(err)?;
    let target = models::target_click_operators().map_err(err)?;
    let sq = maps::build_squasher(&target, model.full_set()).map_err(err)?;
    let inclusion = geometry::check_inclusion(&model, &target, 32, 5).map_err(err)?;
    ensure(inclusion.is_certified(), || "squasher not certified".into())?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut false_verdicts = 0;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..200usize {
        let (rho, _) = random::random_separable_state(&mut rng, d, d, 1 + k % 6).map_err(err)?;
        let x = metrics::apply_local(&sq, &sq, rho.matrix()).map_err(err)?;
        let x = HermitianOperator::from_hermitian_part(vec![3, 3], &x).map_err(err)?;
        worst.0 = worst.0.min(x.min_eigenvalue().map_err(err)?);
        worst.1 = worst.1.max((x.trace() - 1.0).abs());
        worst.2 = worst.2.min(x.partial_transpose(0).map_err(err)?.min_eigenvalue().map_err(err)?);
        if k % 10 == 0 {
            // The pipeline route: click data, linear inversion, verdict.
            let s = Scenario {
                seed: Some(k as u64),
                restarts: 8,
                model: scenario::ModelSpec {
                    n_max,
                    ..Default::default()
                },
                state: Some(StateSpec::Explicit {
                    matrix: MatrixRecord::from_matrix(vec![d, d], rho.matrix()),
                }),
                ..Scenario::default()
            };
            let rep = scenario::run_tomography_test(&s, None).map_err(err)?;
            let rec = HermitianOperator::from_record(&rep.reconstruction).map_err(err)?;
            ensure(rec.max_abs_diff(&x) <= 1e-9, || format!("state {k}: pipeline and squasher disagree"))?;
            if rep.verdict != Verdict::NotDetected {
                false_verdicts += 1;
            }
        } else if x.min_eigenvalue().map_err(err)? < -1e-9
            || metrics::ppt_test(&x, 0).map_err(err)?.is_npt()
        {
            false_verdicts += 1;
        }
    }
    ensure(worst.0 >= -1e-9 && worst.1 <= 1e-10 && worst.2 >= -1e-9, || format!("{worst:?}"))?;
    ensure(false_verdicts == 0, || format!("{false_verdicts} false entanglement verdicts"))?;
    Ok(format!(
        "200 states: min eigenvalue {:.1e}, trace error {:.1e}, min PT eigenvalue {:.1e}, 0 false verdicts",
        worst.0, worst.1, worst.2
    ))
}

fn run_cli(args: &[&str], out: &std::path::Path) -> std::result::Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_squash"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(err)?;
    ensure(status.success(), || format!("`squash {}` exited with {status}", args.join(" ")))?;
    std::fs::read(out).map_err(err)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let bound = dir.path().join("bound.toml");
    std::fs::write(
        &bound,
        "seed = 4\nrestarts = 8\n[state]\nkind = \"werner\"\np = 0.1\n[[analyses]]\nkind = \"bounds\"\n\
         map_a = { kind = \"transpose-mixture\", q = 0.2 }\nmap_b = { kind = \"depolarizing\", dim = 2, p = 0.1 }\n",
    )
    .map_err(err)?;
    let sweep = dir.path().join("sweep.toml");
    std::fs::write(
        &sweep,
        "seed = 6\nrestarts = 8\nparameter = \"eta\"\nvalues = [0.5, 0.75, 1.0]\n\
         metrics = [\"pair-weight\", \"reconstructed-negativity\", \"max-excess\"]\n[model]\nn_max = 2\n",
    )
    .map_err(err)?;
    let bound = bound.to_str().ok_or("path")?;
    let sweep = sweep.to_str().ok_or("path")?;
    let runs: Vec<Vec<&str>> = vec![
        vec!["verify-tomography", "--seed", "5"],
        vec!["ion-trap-threshold", "--tol", "1e-3"],
        vec!["polarization-certify", "--seed", "5", "--n-max", "4"],
        vec!["negativity", "--werner", "0.3"],
        vec!["diamond-norm", "--map", "transpose:2", "--seed", "5"],
        vec!["bound", "--config", bound],
        vec!["sweep", "--config", sweep],
    ];
    for args in &runs {
        let a = run_cli(args, &dir.path().join("a.out"))?;
        let b = run_cli(args, &dir.path().join("b.out"))?;
        ensure(a == b, || format!("`squash {}` differs between runs", args.join(" ")))?;
    }
    Ok(format!("{} CLI runs byte-identical on repeat", runs.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("werner threshold", werner_threshold),
        ("ion-trap gap", ion_trap_gap),
        ("block bloch maxima", bloch_maxima),
        ("anticommutation certificates", anticommutation),
        ("squashing identity", squashing_identity),
        ("positive-not-CP exhibit", positive_not_cp),
        ("negativity-bound suite", bound_suite),
        ("diamond norm", diamond_norms),
        ("separable soundness", soundness),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
