//! Executes a [`RunConfig`] section by section.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use qcond::annex::{
    eigen_check, grid_report, jordan_residual, trig_identity_bound, trig_identity_residual,
    trig_identity_residual_unwrapped, verify_basis_action, AnnexPoint,
};
use qcond::assumptions::{check_given_pair, run_suite, CheckResult, RandomSpec};
use qcond::grover::{build_instance, dual_success_prob, optimal_iterations, sweep, GroverRun};
use qcond::operator::{load_matrix_file, Tolerance};
use qcond::teleport::{check_conditions, run_batch, InputProperty, TeleportSystem, TeleportTranscript};
use serde::Serialize;

use crate::config::{CommandKind, Iterations, RunConfig};

/// The unit-modulus check never runs looser than this.
pub const MODULUS_TOL: f64 = 1e-12;

/// Per-dimension assumption result as written to `assumptions.json`.
#[derive(Clone, Debug, Serialize)]
pub struct DimCheck {
    pub dim: usize,
    #[serde(flatten)]
    pub check: CheckResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct TeleportReport {
    pub conditions: Vec<CheckResult>,
    pub transcripts: Vec<TeleportTranscript>,
}

/// Checks of one section plus figures reported without a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: &'static str,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

impl Section {
    fn new(name: &'static str, checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.passed);
        Self { name, pass, checks, diagnostics: BTreeMap::new() }
    }
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub sections: Vec<Section>,
    pub assumptions: Option<Vec<DimCheck>>,
    pub grover: Option<Vec<GroverRun>>,
    pub teleport: Option<TeleportReport>,
    pub annex: Option<Vec<AnnexPoint>>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.sections.iter().all(|s| s.pass)
    }
}

/// Sets the verdict of `check` against `tol`, keeping its residual.
fn rethreshold(mut check: CheckResult, tol: f64) -> CheckResult {
    check.tolerance = tol;
    check.passed = check.max_residual <= tol;
    check
}

/// Folds results with matching names, keeping first-seen order.
fn aggregate(results: impl IntoIterator<Item = CheckResult>) -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = Vec::new();
    for r in results {
        match out.iter_mut().find(|c| c.name == r.name) {
            Some(c) => c.absorb(r),
            None => out.push(r),
        }
    }
    out
}

fn max_check(name: &str, residuals: impl IntoIterator<Item = f64>, tol: f64) -> CheckResult {
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for r in residuals {
        cases += 1;
        // NaN must fail
        worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
    }
    let mut check = CheckResult::from_residual(name, worst, tol);
    check.cases = cases;
    check.applicable_cases = cases;
    check
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    if cfg.command.runs(CommandKind::VerifyAssumptions) {
        let (rows, section) = assumptions(cfg)?;
        outcome.assumptions = Some(rows);
        outcome.sections.push(section);
    }
    if cfg.command.runs(CommandKind::Grover) {
        let (runs, section) = grover(cfg)?;
        outcome.grover = Some(runs);
        outcome.sections.push(section);
    }
    if cfg.command.runs(CommandKind::Teleport) {
        let (report, section) = teleport(cfg)?;
        outcome.teleport = Some(report);
        outcome.sections.push(section);
    }
    if cfg.command.runs(CommandKind::Annex) {
        let (points, section) = annex(cfg)?;
        outcome.annex = Some(points);
        outcome.sections.push(section);
    }
    Ok(outcome)
}

fn assumptions(cfg: &RunConfig) -> Result<(Vec<DimCheck>, Section)> {
    let params = &cfg.assumptions;
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    if let [e_path, f_path] = params.matrix_files.as_slice() {
        let e = load_matrix_file(e_path)?;
        let f = load_matrix_file(f_path)?;
        let dim = e.dim();
        let checks = check_given_pair(&e, &f, &tol).context("checking the supplied pair")?;
        rows.extend(checks.into_iter().map(|c| DimCheck { dim, check: rethreshold(c, cfg.tol) }));
    } else {
        for &dim in &params.dims {
            let spec = RandomSpec { dim, rank_e: params.rank_e, rank_f: params.rank_f, trials: params.trials, seed: cfg.seed };
            let checks = run_suite(&spec, &tol).with_context(|| format!("assumption suite at dim {dim}"))?;
            rows.extend(checks.into_iter().map(|c| DimCheck { dim, check: rethreshold(c, cfg.tol) }));
        }
    }
    let section = Section::new("assumptions", aggregate(rows.iter().map(|r| r.check.clone())));
    Ok((rows, section))
}

fn grover(cfg: &RunConfig) -> Result<(Vec<GroverRun>, Section)> {
    let g = &cfg.grover;
    let tol = Tolerance::default();
    let mut runs = Vec::new();
    for &n in &g.n {
        let rs: Vec<usize> = match g.r {
            None => (0..=g.r_max).collect(),
            Some(Iterations::Fixed(r)) => vec![r],
            Some(Iterations::Auto) => vec![optimal_iterations(n)?],
        };
        runs.extend(sweep(&[n], &g.multiplicity, &rs, g.target, tol)?);
    }

    let mut dual = Vec::new();
    for &n in &g.n {
        for &m in &g.multiplicity {
            let instance = build_instance(n, g.target.min(n), m, tol)?;
            for run in runs.iter().filter(|x| x.n == n && x.multiplicity == m) {
                dual.push((dual_success_prob(&instance, run.r)? - run.success_prob).abs());
            }
        }
    }
    let checks = vec![
        max_check("grover_closed_form", runs.iter().map(|x| x.deviation), cfg.tol),
        max_check("grover_dual_form", dual, cfg.tol),
    ];
    Ok((runs, Section::new("grover", checks)))
}

fn teleport(cfg: &RunConfig) -> Result<(TeleportReport, Section)> {
    let t = &cfg.teleport;
    let tol = Tolerance::default();
    let system = TeleportSystem::new(tol)?;
    let input = match (t.alpha, t.beta) {
        (Some(a), Some(b)) => Some(InputProperty::vector(a, b)?),
        _ => None,
    };
    let transcripts = run_batch(&system, cfg.seed, t.trials, input, t.force_outcome)?;

    let mut conditions = Vec::new();
    for tr in &transcripts {
        conditions.extend(check_conditions(&system, &tr.input, &tol)?);
    }
    let conditions: Vec<CheckResult> = aggregate(conditions).into_iter().map(|c| rethreshold(c, cfg.tol)).collect();

    let mut checks = conditions.clone();
    checks.push(max_check(
        "teleport_outcome_probs",
        transcripts.iter().flat_map(|tr| tr.outcome_probs.map(|p| (p - 0.25).abs())),
        cfg.tol,
    ));
    checks.push(max_check("teleport_final_prob", transcripts.iter().map(|tr| (tr.final_prob - 1.0).abs()), cfg.tol));
    Ok((TeleportReport { conditions, transcripts }, Section::new("teleport", checks)))
}

fn annex(cfg: &RunConfig) -> Result<(Vec<AnnexPoint>, Section)> {
    let a = &cfg.annex;
    let tol = Tolerance::default();
    let points = grid_report(&a.p_grid, a.r_max)?;

    let mut eigen = Vec::new();
    let mut modulus = Vec::new();
    let mut basis = Vec::new();
    let mut jordan = Vec::new();
    let mut rank = Vec::new();
    for &p in &a.p_grid {
        let report = eigen_check(p)?;
        eigen.push(report.max_deviation);
        modulus.push(report.modulus_defect.max(report.computed_modulus_defect));
        rank.push(if report.rank_m_minus_identity == 3 { 0.0 } else { 1.0 });
        basis.push(rethreshold(verify_basis_action(p, &tol)?, cfg.tol));
        jordan.push(jordan_residual(p)?);
    }

    let mut on_domain = Vec::new();
    let mut unwrapped = Vec::new();
    let mut off_domain: f64 = 0.0;
    for &x in &a.p_grid {
        for r in 0..=a.r_max {
            let principal = trig_identity_residual(x, r)?.abs();
            if x <= trig_identity_bound(r) {
                on_domain.push(principal);
            } else {
                off_domain = off_domain.max(principal);
            }
            unwrapped.push(trig_identity_residual_unwrapped(x, r)?.abs());
        }
    }

    let mut checks = vec![
        max_check("annex_triple_agreement", points.iter().map(|x| x.max_pairwise_dev), cfg.tol),
        max_check("annex_eigenvalues", eigen, cfg.tol),
        max_check("annex_unit_modulus", modulus, cfg.tol.min(MODULUS_TOL)),
        max_check("annex_rank_m_minus_identity", rank, 0.5),
        max_check("annex_jordan_form", jordan, cfg.tol),
    ];
    checks.extend(aggregate(basis));
    checks.push(max_check("annex_trig_identity", on_domain, cfg.tol));
    checks.push(max_check("annex_trig_identity_unwrapped", unwrapped, cfg.tol));

    let mut section = Section::new("annex", checks);
    // principal branches past the bound; expected to be far from zero
    section.diagnostics.insert("trig_identity_off_domain_max".into(), off_domain);
    Ok((points, section))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: CommandKind) -> RunConfig {
        let mut cfg = RunConfig::new(kind);
        cfg.assumptions.dims = vec![2, 3];
        cfg.assumptions.trials = 20;
        cfg.grover.n = vec![4, 8];
        cfg.grover.r_max = 5;
        cfg.teleport.trials = 6;
        cfg.annex.p_grid = vec![0.1, 0.5, 0.9];
        cfg.annex.r_max = 6;
        cfg
    }

    #[test]
    fn small_all_passes() {
        let outcome = execute(&small(CommandKind::All)).unwrap();
        assert_eq!(outcome.sections.len(), 4);
        for s in &outcome.sections {
            for c in &s.checks {
                assert!(c.passed, "{} / {}: {}", s.name, c.name, c.max_residual);
            }
        }
        assert!(outcome.pass());
    }

    #[test]
    fn grover_n4_r1_is_certain() {
        let mut cfg = small(CommandKind::Grover);
        cfg.grover.n = vec![4];
        cfg.grover.r = Some(Iterations::Fixed(1));
        let outcome = execute(&cfg).unwrap();
        let runs = outcome.grover.unwrap();
        assert_eq!(runs.len(), 2);
        assert!(runs.iter().all(|x| (x.success_prob - 1.0).abs() < 1e-12));
    }

    #[test]
    fn auto_picks_the_optimum() {
        let mut cfg = small(CommandKind::Grover);
        cfg.grover.n = vec![16, 64];
        cfg.grover.multiplicity = vec![1];
        cfg.grover.r = Some(Iterations::Auto);
        let runs = execute(&cfg).unwrap().grover.unwrap();
        assert_eq!(runs.iter().map(|x| x.r).collect::<Vec<_>>(), vec![3, 6]);
    }

    #[test]
    fn absurd_tolerance_fails() {
        let mut cfg = small(CommandKind::Annex);
        cfg.tol = 1e-30;
        assert!(!execute(&cfg).unwrap().pass());
    }

    #[test]
    fn forced_outcome_with_given_input() {
        let mut cfg = small(CommandKind::Teleport);
        cfg.teleport.alpha = Some(num_complex::Complex64::new(0.6, 0.0));
        cfg.teleport.beta = Some(num_complex::Complex64::new(0.0, 0.8));
        cfg.teleport.force_outcome = Some(2);
        let outcome = execute(&cfg).unwrap();
        let report = outcome.teleport.unwrap();
        assert!(report.transcripts.iter().all(|t| t.outcome_index == 2 && t.classical_bits == [0, 1]));
        assert_eq!(report.conditions.len(), 6);
        assert!(outcome.sections[0].pass);
    }

    #[test]
    fn aggregate_keeps_order_and_worst() {
        let merged = aggregate([
            CheckResult::from_residual("a", 1e-12, 1e-10),
            CheckResult::from_residual("b", 0.0, 1e-10),
            CheckResult::from_residual("a", 1e-9, 1e-10),
        ]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].cases, 2);
        assert!(!merged[0].passed);
        assert_eq!(max_check("x", [0.0, f64::NAN], 1.0).max_residual, f64::INFINITY);
    }
}
