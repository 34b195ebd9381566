//! Teleporting a qubit property across three two-level systems A, B, C.
//!
//! The total space is `H_A ⊗ H_B ⊗ H_C` in lexicographic order, so basis
//! index `a·4 + b·2 + c`. Alice holds A and C, Bob holds B; A and B start in
//! the entangled event `d_AB`. Alice tests which of the four Bell events
//! `b_k` holds on A⊗C, sends `k − 1` as two bits, and Bob applies the
//! matching reflection so that B carries the property `x` with certainty.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assumptions::CheckResult;
use crate::error::{Error, Result};
use crate::logic::{is_orthogonal, meet_compatible, Projection};
use crate::operator::{permute_factors, tensor_all, ComplexMatrix, Tolerance, C64};
use crate::probability::{cond_prob, s_transform_event, seq_cond_prob, transition_residual, State};
use crate::random::{random_unit_vector, stream_rng};

pub const QUBIT_DIM: usize = 2;
pub const TOTAL_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
    C,
}

impl Subsystem {
    fn position(self) -> usize {
        match self {
            Subsystem::A => 0,
            Subsystem::B => 1,
            Subsystem::C => 2,
        }
    }
}

fn ket(components: [C64; 4]) -> DVector<C64> {
    DVector::from_column_slice(&components)
}

/// `(|00⟩ + |11⟩)/√2` on two qubits.
fn bell_pair() -> Result<ComplexMatrix> {
    let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    ComplexMatrix::projector_onto(&ket([o, z, z, o]))
}

/// The three-qubit model with its embedded copies of the qubit logic.
#[derive(Clone, Debug)]
pub struct TeleportSystem {
    e: Projection,
    f: Projection,
    d_ab: Projection,
    d_ac: Projection,
    tol: Tolerance,
}

impl TeleportSystem {
    /// `e = |1⟩⟨1|`, `f = |φ⟩⟨φ|` with `φ = (|0⟩ + |1⟩)/√2`,
    /// `d_AB = |ψ⟩⟨ψ| ⊗ I_C`, and `d_AC` the same pair placed on A and C.
    pub fn new(tol: Tolerance) -> Result<Self> {
        let e = Projection::basis(QUBIT_DIM, 1, tol)?;
        let phi = DVector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let f = Projection::onto_vector(&phi, tol)?;
        let id = ComplexMatrix::identity(QUBIT_DIM);
        let pair = bell_pair()?;
        let d_ab = Projection::new(tensor_all(&[&pair, &id])?, tol)?;
        // pair ⊗ I_B is ordered (A, C, B); move B back to the middle
        let acb = tensor_all(&[&pair, &id])?;
        let d_ac = Projection::new(permute_factors(&acb, &[2, 2, 2], &[0, 2, 1])?, tol)?;
        Ok(Self { e, f, d_ab, d_ac, tol })
    }

    pub fn e(&self) -> &Projection {
        &self.e
    }

    pub fn f(&self) -> &Projection {
        &self.f
    }

    pub fn d_ab(&self) -> &Projection {
        &self.d_ab
    }

    pub fn d_ac(&self) -> &Projection {
        &self.d_ac
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    /// Places a single-qubit operator on one factor, identity elsewhere.
    pub fn embed_operator(&self, which: Subsystem, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.dim() != QUBIT_DIM {
            return Err(Error::DimensionMismatch { left: y.dim(), right: QUBIT_DIM });
        }
        let id = ComplexMatrix::identity(QUBIT_DIM);
        let mut factors = [&id, &id, &id];
        factors[which.position()] = y;
        tensor_all(&factors)
    }

    /// The morphism `π_which` from qubit events to events of the full system.
    pub fn embed(&self, which: Subsystem, y: &Projection) -> Result<Projection> {
        let m = self.embed_operator(which, y.matrix())?;
        Ok(Projection::from_parts(m, y.rank() * 4, self.tol))
    }

    fn embedded_e(&self, which: Subsystem) -> Projection {
        self.embed(which, &self.e).expect("qubit event")
    }

    fn embedded_f(&self, which: Subsystem) -> Projection {
        self.embed(which, &self.f).expect("qubit event")
    }

    /// `b_1 = d_AC`, `b_2 = S_{π_A e} d_AC`, `b_3 = S_{π_A f} d_AC`,
    /// `b_4 = S_{π_A e} S_{π_A f} d_AC`.
    pub fn bell_projections(&self) -> Result<[Projection; 4]> {
        let ae = self.embedded_e(Subsystem::A);
        let af = self.embedded_f(Subsystem::A);
        let b1 = self.d_ac.clone();
        let b2 = s_transform_event(&ae, &b1)?;
        let b3 = s_transform_event(&af, &b1)?;
        let b4 = s_transform_event(&ae, &b3)?;
        Ok([b1, b2, b3, b4])
    }
}

/// The qubit property to be teleported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputProperty {
    /// `|ξ⟩⟨ξ|` with `ξ = α|0⟩ + β|1⟩`.
    Vector { alpha: C64, beta: C64 },
    Zero,
    Identity,
}

impl InputProperty {
    /// Checked constructor; `|α|² + |β|²` must be 1 within `1e-9`.
    pub fn vector(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
        }
        Ok(Self::Vector { alpha, beta })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let v = random_unit_vector(QUBIT_DIM, rng);
        Self::Vector { alpha: v[0], beta: v[1] }
    }

    pub fn projection(&self, tol: Tolerance) -> Result<Projection> {
        match *self {
            Self::Vector { alpha, beta } => Projection::onto_vector(&DVector::from_column_slice(&[alpha, beta]), tol),
            Self::Zero => Ok(Projection::zero(QUBIT_DIM, tol)),
            Self::Identity => Ok(Projection::identity(QUBIT_DIM, tol)),
        }
    }

    pub fn amplitudes(&self) -> Option<(C64, C64)> {
        match *self {
            Self::Vector { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }
}

/// Bob's reflection for each outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    Identity,
    ReflectE,
    ReflectF,
    ReflectEThenF,
}

impl Correction {
    pub fn for_outcome(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Self::Identity),
            2 => Ok(Self::ReflectE),
            3 => Ok(Self::ReflectF),
            4 => Ok(Self::ReflectEThenF),
            _ => Err(Error::InvalidInput(format!("outcome index {k} outside 1..=4"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::ReflectE => "S_Be",
            Self::ReflectF => "S_Bf",
            Self::ReflectEThenF => "S_Be S_Bf",
        }
    }

    /// Unitary `u` with the correction acting as `x ↦ u x u*`.
    pub fn unitary(self, system: &TeleportSystem) -> Result<ComplexMatrix> {
        let ue = system.embed_operator(Subsystem::B, &system.e.reflection())?;
        let uf = system.embed_operator(Subsystem::B, &system.f.reflection())?;
        Ok(match self {
            Self::Identity => ComplexMatrix::identity(TOTAL_DIM),
            Self::ReflectE => ue,
            Self::ReflectF => uf,
            Self::ReflectEThenF => &ue * &uf,
        })
    }

    /// Applies the correction to an event as a composition of S-transforms.
    pub fn apply(self, system: &TeleportSystem, x: &Projection) -> Result<Projection> {
        let be = system.embedded_e(Subsystem::B);
        let bf = system.embedded_f(Subsystem::B);
        match self {
            Self::Identity => Ok(x.clone()),
            Self::ReflectE => s_transform_event(&be, x),
            Self::ReflectF => s_transform_event(&bf, x),
            Self::ReflectEThenF => s_transform_event(&be, &s_transform_event(&bf, x)?),
        }
    }
}

/// `k − 1` as two bits, most significant first.
pub fn classical_bits(k: usize) -> Result<[u8; 2]> {
    Correction::for_outcome(k)?;
    let v = (k - 1) as u8;
    Ok([v >> 1, v & 1])
}

/// Inverse of [`classical_bits`].
pub fn outcome_from_bits(bits: [u8; 2]) -> Result<usize> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidInput(format!("not a bit pair: {bits:?}")));
    }
    Ok(((bits[0] << 1) | bits[1]) as usize + 1)
}

/// How Alice's outcome is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeSelection {
    /// Draw from the computed outcome probabilities with stream 0 of `seed`.
    Seeded(u64),
    /// Take outcome `k` regardless of the draw.
    Forced { k: usize, seed: u64 },
}

impl OutcomeSelection {
    fn seed(self) -> u64 {
        match self {
            Self::Seeded(seed) | Self::Forced { seed, .. } => seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportTranscript {
    pub input: InputProperty,
    pub alpha: Option<C64>,
    pub beta: Option<C64>,
    pub outcome_index: usize,
    pub classical_bits: [u8; 2],
    pub correction_name: String,
    pub outcome_probs: [f64; 4],
    pub final_prob: f64,
    pub seed: u64,
}

/// Deviation of any outcome probability from ¼ that aborts a run.
pub const OUTCOME_GUARD: f64 = 1e-6;

/// Initial event `d_AB ∧ π_C x` and its normalized witness state.
pub fn initial_event(system: &TeleportSystem, x: &Projection) -> Result<(Projection, State)> {
    let g = meet_compatible(&system.d_ab, &system.embed(Subsystem::C, x)?)?;
    if g.is_zero() {
        return Err(Error::ConditionOnNull { prob: 0.0 });
    }
    let witness = State::uniform_on(&g)?;
    Ok((g, witness))
}

/// Runs the protocol once.
pub fn run(system: &TeleportSystem, input: &InputProperty, selection: OutcomeSelection) -> Result<TeleportTranscript> {
    if matches!(input, InputProperty::Zero) {
        return Err(Error::InvalidInput("the zero event has no content to teleport".into()));
    }
    let x = input.projection(system.tol)?;
    let (g, witness) = initial_event(system, &x)?;
    let bells = system.bell_projections()?;

    let mut outcome_probs = [0.0; 4];
    for (slot, b) in outcome_probs.iter_mut().zip(&bells) {
        *slot = cond_prob(&witness, b, &g)?;
    }
    if let Some((k, p)) = outcome_probs.iter().enumerate().find(|(_, p)| (*p - 0.25).abs() > OUTCOME_GUARD) {
        return Err(Error::ProtocolViolation(format!("outcome {} has probability {p}, expected 1/4", k + 1)));
    }

    let k = match selection {
        OutcomeSelection::Forced { k, .. } => {
            Correction::for_outcome(k)?;
            k
        }
        OutcomeSelection::Seeded(seed) => sample_outcome(&outcome_probs, seed),
    };
    let correction = Correction::for_outcome(k)?;
    let target = correction.apply(system, &system.embed(Subsystem::B, &x)?)?;
    let final_prob = seq_cond_prob(&witness, &target, &g, &bells[k - 1])?;

    let (alpha, beta) = input.amplitudes().unzip();
    Ok(TeleportTranscript {
        input: *input,
        alpha,
        beta,
        outcome_index: k,
        classical_bits: classical_bits(k)?,
        correction_name: correction.name().to_string(),
        outcome_probs,
        final_prob,
        seed: selection.seed(),
    })
}

fn sample_outcome(probs: &[f64; 4], seed: u64) -> usize {
    let total: f64 = probs.iter().sum();
    let u = stream_rng(seed, 0).random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    4
}

/// `|ℙ(f|e) − expected|`, with a missing state-independent value counted as
/// its residual.
fn transition_defect(f: &Projection, e: &Projection, expected: f64) -> Result<f64> {
    let t = transition_residual(f, e)?;
    Ok(t.residual.max((t.value - expected).abs()))
}

/// Conditions (i)–(iv) for the given input, the complement branch of (iv),
/// and the Bell-basis lemma.
pub fn check_conditions(system: &TeleportSystem, input: &InputProperty, tol: &Tolerance) -> Result<Vec<CheckResult>> {
    let t = tol.abs_tol;
    let x = input.projection(*tol)?;
    let mut samples = vec![system.e.clone(), system.f.clone(), x.clone()];
    samples.extend(samples.clone().iter().map(Projection::orthocomplement));

    let mut out = Vec::new();

    let mut commutators: f64 = 0.0;
    for y in &samples {
        let cy = system.embed(Subsystem::C, y)?;
        let by = system.embed(Subsystem::B, y)?;
        commutators = commutators.max(system.d_ab.matrix().commutator(cy.matrix()).max_abs());
        commutators = commutators.max(system.d_ac.matrix().commutator(by.matrix()).max_abs());
    }
    out.push(CheckResult::from_residual("teleport_condition_i", commutators, t));

    let mut fixed: f64 = 0.0;
    for y in [&system.e, &system.f] {
        let ay = system.embed(Subsystem::A, y)?;
        let by = system.embed(Subsystem::B, y)?;
        let moved = s_transform_event(&ay, &s_transform_event(&by, &system.d_ab)?)?;
        fixed = fixed.max(moved.matrix().max_abs_diff(system.d_ab.matrix()));
    }
    out.push(CheckResult::from_residual("teleport_condition_ii", fixed, t));

    let (ae, af, ce) = (
        system.embedded_e(Subsystem::A),
        system.embedded_f(Subsystem::A),
        system.embedded_e(Subsystem::C),
    );
    let both_e = meet_compatible(&ae, &ce)?;
    let both_not_e = meet_compatible(&ae.orthocomplement(), &ce.orthocomplement())?;
    let mut halves: f64 = 0.0;
    for ev in [&ae, &af, &both_e, &both_not_e] {
        halves = halves.max(transition_defect(ev, &system.d_ac, 0.5)?);
    }
    out.push(CheckResult::from_residual("teleport_condition_iii", halves, t));

    if matches!(input, InputProperty::Zero) {
        out.push(CheckResult::vacuous("teleport_condition_iv", t));
        out.push(CheckResult::vacuous("teleport_complement_branch", t));
        out.push(CheckResult::vacuous("teleport_bell_lemma", t));
        return Ok(out);
    }
    let (g, _) = initial_event(system, &x)?;
    let bx = system.embed(Subsystem::B, &x)?;
    let joint = meet_compatible(&system.d_ac, &bx)?;
    let iv = transition_defect(&joint, &g, 0.25)?.max(transition_defect(&system.d_ac, &g, 0.25)?);
    out.push(CheckResult::from_residual("teleport_condition_iv", iv, t));

    let joint_complement = meet_compatible(&system.d_ac, &bx.orthocomplement())?;
    out.push(CheckResult::from_residual(
        "teleport_complement_branch",
        transition_defect(&joint_complement, &g, 0.0)?,
        t,
    ));

    let bells = system.bell_projections()?;
    let mut lemma: f64 = 0.0;
    for (i, bi) in bells.iter().enumerate() {
        lemma = lemma.max(transition_defect(bi, &g, 0.25)?);
        for bj in &bells[i + 1..] {
            lemma = lemma.max((bi.matrix() * bj.matrix()).max_abs());
        }
    }
    out.push(CheckResult::from_residual("teleport_bell_lemma", lemma, t));
    Ok(out)
}

/// `true` when the four Bell events are pairwise orthogonal.
pub fn bell_basis_is_orthogonal(system: &TeleportSystem) -> Result<bool> {
    let bells = system.bell_projections()?;
    for i in 0..4 {
        for j in i + 1..4 {
            if !is_orthogonal(&bells[i], &bells[j], &system.tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Seeded batch: trial `i` draws its input and outcome from stream `i`.
pub fn run_trials(system: &TeleportSystem, seed: u64, trials: usize) -> Result<Vec<TeleportTranscript>> {
    run_batch(system, seed, trials, None, None)
}

/// Like [`run_trials`], with an optional fixed input and an optional forced
/// outcome. The streams are consumed the same way either way, so trial `i`
/// sees the same outcome draw whether or not the input is fixed.
pub fn run_batch(
    system: &TeleportSystem,
    seed: u64,
    trials: usize,
    input: Option<InputProperty>,
    force: Option<usize>,
) -> Result<Vec<TeleportTranscript>> {
    use rayon::prelude::*;
    if let Some(k) = force {
        Correction::for_outcome(k)?;
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let drawn = InputProperty::random(&mut rng);
            let draw_seed = rng.random::<u64>();
            let selection = match force {
                Some(k) => OutcomeSelection::Forced { k, seed: draw_seed },
                None => OutcomeSelection::Seeded(draw_seed),
            };
            run(system, &input.unwrap_or(drawn), selection)
        })
        .collect()
}
