//! Numerical verifiers for the three structural assumptions on the logic and
//! the lemmas derived from them, run over seeded random projections and a
//! fixed qubit corpus.
//!
//! Each checker returns a [`CheckResult`]. When a lemma's hypothesis does not
//! hold for the given pair (for instance `ℙ(f|e)` does not exist), the result
//! is a vacuous pass marked `applicable: false`.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{is_atom, Projection};
use crate::operator::{ComplexMatrix, MatrixLiteral, Tolerance, C64};
use crate::probability::{
    s_transform, seq_cond_prob, state_independent_prob, transition_residual, u_transform, HermitianOperator, State,
};
pub use crate::random::random_projection;
use crate::random::{random_state_within, stream_rng};

/// A named matrix attached to a failing check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixLiteral,
}

/// Inputs that produced the largest failing residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Trial index for random inputs; `None` for the fixed corpus.
    pub trial: Option<u64>,
    pub matrices: Vec<NamedMatrix>,
}

impl Witness {
    pub fn pair(trial: Option<u64>, e: &Projection, f: &Projection) -> Self {
        Self {
            trial,
            matrices: vec![
                NamedMatrix { name: "e".into(), matrix: e.matrix().to_literal() },
                NamedMatrix { name: "f".into(), matrix: f.matrix().to_literal() },
            ],
        }
    }
}

/// Outcome of one check, or of one check aggregated over many inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// False when the hypothesis never held, i.e. a vacuous pass.
    pub applicable: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub applicable_cases: usize,
    pub witness: Option<Witness>,
}

impl CheckResult {
    pub fn from_residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: residual <= tolerance,
            applicable: true,
            max_residual: residual,
            tolerance,
            cases: 1,
            applicable_cases: 1,
            witness: None,
        }
    }

    pub fn vacuous(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: true,
            applicable: false,
            max_residual: 0.0,
            tolerance,
            cases: 1,
            applicable_cases: 0,
            witness: None,
        }
    }

    fn with_witness(mut self, w: impl FnOnce() -> Witness) -> Self {
        if !self.passed {
            self.witness = Some(w());
        }
        self
    }

    /// Folds another result for the same check into this one. The first
    /// failure's witness is kept.
    pub fn absorb(&mut self, other: CheckResult) {
        debug_assert_eq!(self.name, other.name);
        self.cases += other.cases;
        self.applicable_cases += other.applicable_cases;
        self.applicable |= other.applicable;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.passed = self.max_residual <= self.tolerance;
        if self.witness.is_none() {
            self.witness = other.witness;
        }
    }
}

/// Parameters for a batch of random pairs. A rank of 0 draws the rank
/// uniformly from `1..=dim` on every trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub dim: usize,
    pub rank_e: usize,
    pub rank_f: usize,
    pub trials: usize,
    pub seed: u64,
}

impl RandomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!("dim must be at least 2, got {}", self.dim)));
        }
        for rank in [self.rank_e, self.rank_f] {
            if rank > self.dim {
                return Err(Error::InvalidRank { dim: self.dim, rank });
            }
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        Ok(())
    }
}

fn herm(e: &Projection) -> HermitianOperator {
    HermitianOperator::from(e)
}

/// `S_e f` stays a projection (Hermitian and idempotent, same trace).
pub fn check_assumption1(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    let image = s_transform(e, &herm(f))?;
    let (hermitian, idempotent) = crate::operator::projection_defects(image.matrix());
    let trace_shift = (image.matrix().trace() - f.matrix().trace()).norm();
    let residual = hermitian.max(idempotent).max(trace_shift);
    Ok(CheckResult::from_residual("assumption1", residual, tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// `U_e U_f e = ℙ(f|e)² e` and the derived sequential probabilities
/// `ℙ(e′|e,f) = 1 − p`, `ℙ(e|e,f′) = 1 − p`, `ℙ(e′|e,f′) = p`.
pub fn check_assumption2(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    const NAME: &str = "assumption2";
    let Some(p) = state_independent_prob(f, e, tol)?.map(|t| t.value) else {
        return Ok(CheckResult::vacuous(NAME, tol.abs_tol));
    };
    let ufe = u_transform(f, &herm(e))?;
    let ueufe = u_transform(e, &ufe)?;
    let mut residual = ueufe.matrix().max_abs_diff(&e.matrix().scale(p * p));

    // witness state: uniform on e (the atomic state when e is an atom)
    let rho = State::uniform_on(e)?;
    let (ep, fp) = (e.orthocomplement(), f.orthocomplement());
    if p > tol.abs_tol {
        residual = residual.max((seq_cond_prob(&rho, &ep, e, f)? - (1.0 - p)).abs());
    }
    if 1.0 - p > tol.abs_tol {
        residual = residual.max((seq_cond_prob(&rho, e, e, &fp)? - (1.0 - p)).abs());
        residual = residual.max((seq_cond_prob(&rho, &ep, e, &fp)? - p).abs());
    }
    Ok(CheckResult::from_residual(NAME, residual, tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// Operator form `U_{f′} U_e f = U_{f′} U_{e′} f`.
pub fn check_assumption3(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    let fp = f.orthocomplement();
    let lhs = u_transform(&fp, &u_transform(e, &herm(f))?)?;
    let rhs = u_transform(&fp, &u_transform(&e.orthocomplement(), &herm(f))?)?;
    let residual = lhs.max_abs_diff(&rhs);
    Ok(CheckResult::from_residual("assumption3", residual, tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// State form: for `ρ(f) = 0`, `ρ(f|e)ρ(e) = ρ(f|e′)ρ(e′)`. Both sides are
/// evaluated as `ρ(U_e f)`, which stays defined when `ρ(e) = 0`.
pub fn check_assumption3_state(e: &Projection, f: &Projection, rho: &State, tol: &Tolerance) -> Result<CheckResult> {
    const NAME: &str = "assumption3_state";
    if crate::probability::raw_prob(rho, f)?.abs() > tol.abs_tol {
        return Ok(CheckResult::vacuous(NAME, tol.abs_tol));
    }
    let lhs = rho.matrix().trace_product(u_transform(e, &herm(f))?.matrix()).re;
    let rhs = rho.matrix().trace_product(u_transform(&e.orthocomplement(), &herm(f))?.matrix()).re;
    Ok(CheckResult::from_residual(NAME, (lhs - rhs).abs(), tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

fn is_half(f: &Projection, e: &Projection, tol: &Tolerance) -> Result<bool> {
    Ok(state_independent_prob(f, e, tol)?.is_some_and(|t| (t.value - 0.5).abs() <= tol.abs_tol))
}

/// If `ℙ(f|e) = ½ = ℙ(f|e′)` then `S_e f = f′` and `S_e f′ = f`.
pub fn check_lemma1(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    const NAME: &str = "lemma1";
    if !(is_half(f, e, tol)? && is_half(f, &e.orthocomplement(), tol)?) {
        return Ok(CheckResult::vacuous(NAME, tol.abs_tol));
    }
    let fp = f.orthocomplement();
    let a = s_transform(e, &herm(f))?.max_abs_diff(&herm(&fp));
    let b = s_transform(e, &herm(&fp))?.max_abs_diff(&herm(f));
    Ok(CheckResult::from_residual(NAME, a.max(b), tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// Parts (a)–(c): the four `U_e U_{f/f′} e/e′` identities, `ℙ(S_f e|e) = (2p − 1)²`,
/// and orthogonality of `S_f e` and `e` at `p = ½`.
pub fn check_lemma2(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    const NAME: &str = "lemma2";
    let Some(p) = state_independent_prob(f, e, tol)?.map(|t| t.value) else {
        return Ok(CheckResult::vacuous(NAME, tol.abs_tol));
    };
    let (ep, fp) = (e.orthocomplement(), f.orthocomplement());
    let ue_uf = |g: &Projection, x: &Projection| -> Result<HermitianOperator> {
        u_transform(e, &u_transform(g, &herm(x))?)
    };
    let em = e.matrix();
    let mut residual = [
        (ue_uf(f, e)?, p * p),
        (ue_uf(&fp, e)?, (1.0 - p) * (1.0 - p)),
        (ue_uf(f, &ep)?, p * (1.0 - p)),
        (ue_uf(&fp, &ep)?, p * (1.0 - p)),
    ]
    .iter()
    .map(|(lhs, c)| lhs.matrix().max_abs_diff(&em.scale(*c)))
    .fold(0.0, f64::max);

    let sfe = crate::probability::s_transform_event(f, e)?;
    let t = transition_residual(&sfe, e)?;
    let expected = (2.0 * p - 1.0).powi(2);
    residual = residual.max(t.residual).max((t.value - expected).abs());

    if (p - 0.5).abs() <= tol.abs_tol {
        residual = residual.max((sfe.matrix() * em).max_abs());
    }
    Ok(CheckResult::from_residual(NAME, residual, tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// `ℙ(f|e) = ℙ(e|f)` for two atoms.
pub fn check_atom_symmetry(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<CheckResult> {
    const NAME: &str = "atom_symmetry";
    if !(is_atom(e) && is_atom(f)) {
        return Ok(CheckResult::vacuous(NAME, tol.abs_tol));
    }
    let fe = transition_residual(f, e)?;
    let ef = transition_residual(e, f)?;
    let residual = (fe.value - ef.value).abs().max(fe.residual).max(ef.residual);
    Ok(CheckResult::from_residual(NAME, residual, tol.abs_tol).with_witness(|| Witness::pair(None, e, f)))
}

/// Canonical order of the checks in every report.
pub const CHECK_NAMES: [&str; 7] = [
    "assumption1",
    "assumption2",
    "assumption3",
    "assumption3_state",
    "lemma1",
    "lemma2",
    "atom_symmetry",
];

fn check_pair(e: &Projection, f: &Projection, rho: Option<&State>, tol: &Tolerance) -> Result<Vec<CheckResult>> {
    let state_check = match rho {
        Some(rho) => check_assumption3_state(e, f, rho, tol)?,
        None => CheckResult::vacuous("assumption3_state", tol.abs_tol),
    };
    Ok(vec![
        check_assumption1(e, f, tol)?,
        check_assumption2(e, f, tol)?,
        check_assumption3(e, f, tol)?,
        state_check,
        check_lemma1(e, f, tol)?,
        check_lemma2(e, f, tol)?,
        check_atom_symmetry(e, f, tol)?,
    ])
}

/// `(e, f)` with `e = |0⟩⟨0|` and `f = |χ⟩⟨χ|`, `χ = √p|0⟩ + √(1−p)|1⟩`,
/// direct-summed `copies` times.
pub fn qubit_pair(p: f64, copies: usize, tol: Tolerance) -> Result<(Projection, Projection)> {
    if !(0.0..=1.0).contains(&p) || copies == 0 {
        return Err(Error::Domain(format!("qubit pair needs p in [0,1] and copies >= 1 (p = {p}, copies = {copies})")));
    }
    let dim = 2 * copies;
    let (a, b) = (p.sqrt(), (1.0 - p).sqrt());
    let mut ve = nalgebra::DMatrix::<C64>::zeros(dim, copies);
    let mut vf = nalgebra::DMatrix::<C64>::zeros(dim, copies);
    for c in 0..copies {
        ve[(2 * c, c)] = C64::new(1.0, 0.0);
        vf[(2 * c, c)] = C64::new(a, 0.0);
        vf[(2 * c + 1, c)] = C64::new(b, 0.0);
    }
    Ok((
        Projection::from_orthonormal_columns(&ve, tol)?,
        Projection::from_orthonormal_columns(&vf, tol)?,
    ))
}

/// Fixed inputs: qubit pairs at `p ∈ {0, ¼, ½, ¾, 1}`, single and doubled.
pub fn deterministic_corpus(tol: Tolerance) -> Result<Vec<(Projection, Projection)>> {
    let mut out = Vec::new();
    for copies in [1, 2] {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            out.push(qubit_pair(p, copies, tol)?);
        }
    }
    Ok(out)
}

fn merge_into(acc: &mut Vec<CheckResult>, batch: Vec<CheckResult>) {
    if acc.is_empty() {
        *acc = batch;
    } else {
        for (a, b) in acc.iter_mut().zip(batch) {
            a.absorb(b);
        }
    }
}

/// Runs every check over `spec.trials` random pairs plus the fixed corpus and
/// aggregates per check, in [`CHECK_NAMES`] order.
pub fn run_suite(spec: &RandomSpec, tol: &Tolerance) -> Result<Vec<CheckResult>> {
    spec.validate()?;
    let trial_results: Vec<Vec<CheckResult>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(spec, trial, tol))
        .collect::<Result<_>>()?;

    let mut acc = Vec::new();
    for (e, f) in deterministic_corpus(*tol)? {
        let rho = (f.rank() < f.dim()).then(|| State::uniform_on(&f.orthocomplement())).transpose()?;
        merge_into(&mut acc, check_pair(&e, &f, rho.as_ref(), tol)?);
    }
    for batch in trial_results {
        merge_into(&mut acc, batch);
    }
    Ok(acc)
}

fn run_trial(spec: &RandomSpec, trial: u64, tol: &Tolerance) -> Result<Vec<CheckResult>> {
    let mut rng = stream_rng(spec.seed, trial);
    let mut pick = |rank: usize| if rank == 0 { rng.random_range(1..=spec.dim) } else { rank };
    let (rank_e, rank_f) = (pick(spec.rank_e), pick(spec.rank_f));
    let e = random_projection(spec.dim, rank_e, &mut rng, *tol)?;
    let f = random_projection(spec.dim, rank_f, &mut rng, *tol)?;
    let rho = if f.rank() < f.dim() {
        Some(random_state_within(&f.orthocomplement(), &mut rng, *tol)?)
    } else {
        None
    };
    let mut results = check_pair(&e, &f, rho.as_ref(), tol)?;
    for r in &mut results {
        if let Some(w) = &mut r.witness {
            w.trial = Some(trial);
        }
    }
    Ok(results)
}

/// Checks a user-supplied pair (for example from matrix files).
pub fn check_given_pair(e: &ComplexMatrix, f: &ComplexMatrix, tol: &Tolerance) -> Result<Vec<CheckResult>> {
    let e = Projection::new(e.clone(), *tol)?;
    let f = Projection::new(f.clone(), *tol)?;
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch { left: e.dim(), right: f.dim() });
    }
    let rho = (f.rank() < f.dim()).then(|| State::uniform_on(&f.orthocomplement())).transpose()?;
    check_pair(&e, &f, rho.as_ref(), tol)
}

/// Unit vector helper for hand-built corpora.
pub fn real_ket(components: &[f64]) -> DVector<C64> {
    DVector::from_iterator(components.len(), components.iter().map(|&x| C64::new(x, 0.0)))
}
