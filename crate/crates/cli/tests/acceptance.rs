//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines are
//! always visible.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qcond::annex::{eigen_check, m_power_literal, simulated_prob};
use qcond::assumptions::{run_suite, RandomSpec};
use qcond::grover::{build_instance, dual_success_prob, success_prob};
use qcond::logic::Projection;
use qcond::operator::Tolerance;
use qcond::probability::{s_transform, s_transform_event, state_independent_prob, transition_residual, u_transform};
use qcond::random::{random_hermitian, random_projection, stream_rng};
use qcond::teleport::{check_conditions, run, InputProperty, OutcomeSelection, TeleportSystem};
use rand::Rng;

const GROVER_TOL: f64 = 1e-9;
const HEADLINE_TOL: f64 = 1e-9;
const TELEPORT_TOL: f64 = 1e-9;
const CONDITIONS_TOL: f64 = 1e-9;
const SUITE_TOL: f64 = 1e-9;
const ANNEX_TOL: f64 = 1e-9;
const MODULUS_TOL: f64 = 1e-12;
const ALGEBRA_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-9;

const GROVER_BUDGET: Duration = Duration::from_secs(10);
const TELEPORT_BUDGET: Duration = Duration::from_secs(5);
const SUITE_BUDGET: Duration = Duration::from_secs(30);

const GROVER_NS: [usize; 5] = [2, 4, 8, 16, 64];
const SUITE_DIMS: [usize; 4] = [2, 3, 4, 8];
const PROPERTY_CASES: u64 = 500;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

/// `sin²((2r+1)·θ)` with `sin θ = √p`, written out here rather than taken from the library.
fn amplification(p: f64, r: usize) -> f64 {
    let theta = p.sqrt().asin();
    ((2 * r + 1) as f64 * theta).sin().powi(2)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn grover_closed_form() -> Verdict {
    let (worst, elapsed) = timed(|| {
        let mut worst: f64 = 0.0;
        for n in GROVER_NS {
            for m in [1, 2] {
                let inst = build_instance(n, 1, m, tol()).expect("instance");
                // literal S-transform iteration, one step pair per r
                let mut x = inst.e().clone();
                for r in 0..=20 {
                    if r > 0 {
                        x = s_transform_event(inst.target_event(), &x).unwrap();
                        x = s_transform_event(inst.e(), &x).unwrap();
                    }
                    let expected = amplification(1.0 / n as f64, r);
                    let simulated = state_independent_prob(inst.target_event(), &x, &tol())
                        .unwrap()
                        .map_or(f64::INFINITY, |t| (t.value - expected).abs());
                    let fast = (success_prob(&inst, r).unwrap() - expected).abs();
                    let dual = (dual_success_prob(&inst, r).unwrap() - expected).abs();
                    worst = worst.max(simulated).max(fast).max(dual);
                }
            }
        }
        worst
    });
    Verdict::new(
        worst <= GROVER_TOL && elapsed < GROVER_BUDGET,
        format!("max |P − sin²| = {worst:.2e} (tol {GROVER_TOL:.0e}), {:.2} s of {} s", elapsed.as_secs_f64(), GROVER_BUDGET.as_secs()),
    )
}

fn grover_headline() -> Verdict {
    let mut worst: f64 = 0.0;
    for m in [1, 2] {
        let inst = build_instance(4, 1, m, tol()).unwrap();
        let mut x = inst.e().clone();
        x = s_transform_event(inst.target_event(), &x).unwrap();
        x = s_transform_event(inst.e(), &x).unwrap();
        let simulated = state_independent_prob(inst.target_event(), &x, &tol()).unwrap().map_or(0.0, |t| t.value);
        worst = worst.max((simulated - 1.0).abs()).max((success_prob(&inst, 1).unwrap() - 1.0).abs());
    }
    Verdict::new(worst <= HEADLINE_TOL, format!("n = 4, r = 1: |P − 1| = {worst:.2e} (tol {HEADLINE_TOL:.0e})"))
}

fn random_inputs(count: u64) -> Vec<InputProperty> {
    (0..count).map(|i| InputProperty::random(&mut stream_rng(0, i))).collect()
}

fn teleport_end_to_end() -> Verdict {
    let ((final_dev, outcome_dev), elapsed) = timed(|| {
        let system = TeleportSystem::new(tol()).unwrap();
        let (mut final_dev, mut outcome_dev): (f64, f64) = (0.0, 0.0);
        for (i, input) in random_inputs(100).iter().enumerate() {
            for k in 1..=4 {
                let tr = run(&system, input, OutcomeSelection::Forced { k, seed: i as u64 }).unwrap();
                final_dev = final_dev.max((tr.final_prob - 1.0).abs());
                for p in tr.outcome_probs {
                    outcome_dev = outcome_dev.max((p - 0.25).abs());
                }
            }
        }
        (final_dev, outcome_dev)
    });
    Verdict::new(
        final_dev <= TELEPORT_TOL && outcome_dev <= TELEPORT_TOL && elapsed < TELEPORT_BUDGET,
        format!(
            "400 branches: |final − 1| = {final_dev:.2e}, |outcome − ¼| = {outcome_dev:.2e} (tol {TELEPORT_TOL:.0e}), {:.2} s of {} s",
            elapsed.as_secs_f64(),
            TELEPORT_BUDGET.as_secs()
        ),
    )
}

/// `tr(a·b) / tr(b)` straight from the matrices.
fn trace_ratio(a: &Projection, b: &Projection) -> f64 {
    let ab = a.matrix() * b.matrix();
    ab.trace().re / b.matrix().trace().re
}

fn teleport_conditions() -> Verdict {
    let system = TeleportSystem::new(tol()).unwrap();
    let mut worst: f64 = 0.0;
    let mut inapplicable = 0;
    let mut checks = 0;
    for input in random_inputs(100) {
        for c in check_conditions(&system, &input, &tol()).unwrap() {
            worst = worst.max(c.max_residual);
            inapplicable += usize::from(!c.applicable);
            checks += 1;
        }
        // the ½, ¼ and 0 values by a separate route: trace ratios plus the existence residual
        let x = input.projection(tol()).unwrap();
        let (g, _) = qcond::teleport::initial_event(&system, &x).unwrap();
        let ae = system.embed(qcond::teleport::Subsystem::A, system.e()).unwrap();
        let bx = system.embed(qcond::teleport::Subsystem::B, &x).unwrap();
        let joint = qcond::logic::meet_compatible(system.d_ac(), &bx).unwrap();
        let joint_c = qcond::logic::meet_compatible(system.d_ac(), &bx.orthocomplement()).unwrap();
        for (event, given, expected) in [
            (&ae, system.d_ac(), 0.5),
            (system.d_ac(), &g, 0.25),
            (&joint, &g, 0.25),
            (&joint_c, &g, 0.0),
        ] {
            let t = transition_residual(event, given).unwrap();
            worst = worst.max((trace_ratio(event, given) - expected).abs()).max(t.residual);
        }
    }
    Verdict::new(
        worst <= CONDITIONS_TOL && inapplicable == 0,
        format!("{checks} checks on 100 inputs, max residual {worst:.2e} (tol {CONDITIONS_TOL:.0e}), {inapplicable} vacuous"),
    )
}

fn assumption_suite() -> Verdict {
    let ((worst, vacuous, cases), elapsed) = timed(|| {
        let (mut worst, mut vacuous, mut cases) = (0.0f64, Vec::new(), 0);
        for dim in SUITE_DIMS {
            let spec = RandomSpec { dim, rank_e: 0, rank_f: 0, trials: 1000, seed: 0 };
            for c in run_suite(&spec, &tol()).unwrap() {
                worst = worst.max(c.max_residual);
                cases += c.cases;
                if !c.applicable {
                    vacuous.push(format!("{}@{dim}", c.name));
                }
            }
        }
        (worst, vacuous, cases)
    });
    Verdict::new(
        worst <= SUITE_TOL && vacuous.is_empty() && elapsed < SUITE_BUDGET,
        format!(
            "{cases} check evaluations, max residual {worst:.2e} (tol {SUITE_TOL:.0e}), vacuous {vacuous:?}, {:.2} s of {} s",
            elapsed.as_secs_f64(),
            SUITE_BUDGET.as_secs()
        ),
    )
}

/// Smallest max-deviation over all pairings of `got` with `want`.
fn best_matching(got: &[Complex64], want: &[Complex64; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let mut perm = [0, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let dev = (0..4).map(|i| (got[i] - want[p[i]]).norm()).fold(0.0, f64::max);
        best = best.min(dev);
    });
    best
}

fn permute(p: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn annex_agreement() -> Verdict {
    let mut agreement: f64 = 0.0;
    let mut eig: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    for k in 1..20 {
        let p = k as f64 / 20.0;
        for r in 0..=30 {
            let values = [amplification(p, r), m_power_literal(p, r).unwrap(), simulated_prob(p, r).unwrap()];
            for i in 0..3 {
                for j in i + 1..3 {
                    agreement = agreement.max((values[i] - values[j]).abs());
                }
            }
        }
        // α₁ = e^{4iθ} with sin θ = √p
        let a1 = Complex64::from_polar(1.0, 4.0 * p.sqrt().asin());
        let one = Complex64::new(1.0, 0.0);
        let report = eigen_check(p).unwrap();
        eig = eig.max(best_matching(&report.computed_eigs, &[a1, a1.conj(), one, one]));
        let near_circle = report.computed_eigs.iter().filter(|z| (*z - one).norm() > 1e-6);
        modulus = near_circle.fold(modulus, |acc, z| acc.max((z.norm() - 1.0).abs()));
        modulus = modulus.max((qcond::annex::alpha1(p).unwrap().norm() - 1.0).abs());
    }
    Verdict::new(
        agreement <= ANNEX_TOL && eig <= ANNEX_TOL && modulus <= MODULUS_TOL,
        format!(
            "pairwise {agreement:.2e} (tol {ANNEX_TOL:.0e}), eigenvalues {eig:.2e} (tol {ANNEX_TOL:.0e}), |α₁| − 1 {modulus:.2e} (tol {MODULUS_TOL:.0e})"
        ),
    )
}

fn algebraic_properties() -> Verdict {
    let (mut involution, mut idempotence, mut invariance): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut existing = 0;
    for i in 0..PROPERTY_CASES {
        let mut rng = stream_rng(0, i);
        let dim = rng.random_range(2..=6);
        let rank_e = if i % 2 == 0 { 1 } else { rng.random_range(1..=dim) };
        let e = random_projection(dim, rank_e, &mut rng, tol()).unwrap();
        let f = random_projection(dim, rng.random_range(1..=dim), &mut rng, tol()).unwrap();
        let g = random_projection(dim, rng.random_range(1..=dim), &mut rng, tol()).unwrap();
        let h = random_hermitian(dim, &mut rng);

        let twice = s_transform(&e, &s_transform(&e, &h).unwrap()).unwrap();
        involution = involution.max(twice.max_abs_diff(&h));
        let once = u_transform(&e, &h).unwrap();
        idempotence = idempotence.max(u_transform(&e, &once).unwrap().max_abs_diff(&once));

        let before = state_independent_prob(&f, &e, &tol()).unwrap();
        let moved_f = s_transform_event(&g, &f).unwrap();
        let moved_e = s_transform_event(&g, &e).unwrap();
        let after = state_independent_prob(&moved_f, &moved_e, &tol()).unwrap();
        match (before, after) {
            (Some(b), Some(a)) => {
                existing += 1;
                invariance = invariance.max((a.value - b.value).abs());
            }
            (None, None) => {}
            _ => invariance = f64::INFINITY,
        }
    }
    let pass = involution <= ALGEBRA_TOL
        && idempotence <= ALGEBRA_TOL
        && invariance <= INVARIANCE_TOL
        && existing as u64 >= PROPERTY_CASES / 2;
    Verdict::new(
        pass,
        format!(
            "{PROPERTY_CASES} cases: S² − id {involution:.2e}, U² − U {idempotence:.2e} (tol {ALGEBRA_TOL:.0e}), P invariance {invariance:.2e} on {existing} cases (tol {INVARIANCE_TOL:.0e})"
        ),
    )
}

fn read_reports(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|entry| {
            let path = entry.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["first", "second"] {
        let dir = root.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_qcond"))
            .args(["all", "--seed", "0", "--json", "--out"])
            .arg(&dir)
            .output()
            .expect("spawn qcond");
        runs.push((status.status.code(), status.stdout, read_reports(&dir)));
    }
    let (a, b) = (&runs[0], &runs[1]);
    let names: Vec<&str> = a.2.iter().map(|(n, _)| n.as_str()).collect();
    let expected = ["annex.jsonl", "assumptions.json", "grover.jsonl", "summary.json", "teleport.json"];
    let pass = a.0 == Some(0) && b.0 == Some(0) && a.1 == b.1 && a.2 == b.2 && names == expected;
    let bytes: usize = a.2.iter().map(|(_, c)| c.len()).sum();
    Verdict::new(pass, format!("exit {:?}/{:?}, {} files, {bytes} bytes, identical = {}", a.0, b.0, names.len(), a.2 == b.2))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("grover success matches sin²((2r+1)·asin(1/√n))", grover_closed_form),
        ("grover n = 4, r = 1 is certain", grover_headline),
        ("teleportation succeeds in every branch", teleport_end_to_end),
        ("teleportation setup conditions", teleport_conditions),
        ("assumption and lemma suite", assumption_suite),
        ("annex triple agreement and spectrum", annex_agreement),
        ("randomized algebraic properties", algebraic_properties),
        ("byte-identical reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = check();
        let mark = if verdict.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!verdict.pass);
        println!("{mark} criterion {}: {name}: {}", i + 1, verdict.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
