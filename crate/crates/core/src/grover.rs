//! Grover search as alternating reflections of events.
//!
//! The initial event `e` and the `n` pairwise orthogonal outcome events
//! `f_k` satisfy `ℙ(f_k|e) = 1/n = ℙ(e|f_k)`. One step maps the current event
//! `x` to `S_e S_{f_target} x`; after `r` steps the probability of the target
//! outcome is `sin²((2r + 1)·arcsin(1/√n))`.
//!
//! Events of rank `m > 1` are supported: the space is `C^n ⊗ C^m`, `f_k`
//! projects onto `|k⟩ ⊗ C^m`, and `e` onto `|ψ⟩ ⊗ C^m` with `ψ` the uniform
//! superposition. Steps are computed on orthonormal range frames, where a
//! reflection `2P − I` costs `O(dim · m²)`; [`iterate_via_s_transform`]
//! is the direct operator path kept as a cross-check.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Projection;
use crate::operator::{Tolerance, C64, DEFAULT_MAX_DIM};
use crate::probability::{s_transform_event, TransitionProbability};

/// A search problem over `n` entries with events of rank `multiplicity`.
#[derive(Clone, Debug)]
pub struct GroverInstance {
    n: usize,
    multiplicity: usize,
    target: usize,
    e: Projection,
    f: Vec<Projection>,
    e_frame: DMatrix<C64>,
    f_frames: Vec<DMatrix<C64>>,
    tol: Tolerance,
}

impl GroverInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// One-based index of the searched entry.
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn dim(&self) -> usize {
        self.n * self.multiplicity
    }

    pub fn e(&self) -> &Projection {
        &self.e
    }

    /// Outcome events `f_1 … f_n` (zero-based slice).
    pub fn f(&self) -> &[Projection] {
        &self.f
    }

    pub fn target_event(&self) -> &Projection {
        &self.f[self.target - 1]
    }

    fn target_frame(&self) -> &DMatrix<C64> {
        &self.f_frames[self.target - 1]
    }
}

/// `ℙ(event | condition)` for events given by orthonormal frames.
///
/// With `G = C* E E* C`, `c e c = C G C*` and `p·c = p·C C*`, so the residual
/// `‖c e c − p c‖_max` is the max entry of `C (G − p I) C*`.
pub fn frame_transition(event: &DMatrix<C64>, condition: &DMatrix<C64>) -> TransitionProbability {
    let overlap = condition.adjoint() * event;
    let gram = &overlap * overlap.adjoint();
    let m = condition.ncols();
    let value = gram.trace().re / m as f64;
    let shifted = gram - DMatrix::<C64>::identity(m, m).scale(value);
    let defect = condition * shifted * condition.adjoint();
    let residual = defect.iter().map(|z| z.norm()).fold(0.0, f64::max);
    TransitionProbability { value, residual }
}

/// Applies the reflection `2 V V* − I` to the columns of `w`.
fn reflect(frame: &DMatrix<C64>, w: &DMatrix<C64>) -> DMatrix<C64> {
    let coeff = frame.adjoint() * w;
    (frame * coeff).scale(2.0) - w
}

/// Builds the instance and verifies `ℙ(f_k|e) = 1/n = ℙ(e|f_k)` for every `k`.
pub fn build_instance(n: usize, target: usize, multiplicity: usize, tol: Tolerance) -> Result<GroverInstance> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("database size must be at least 2, got {n}")));
    }
    if multiplicity == 0 {
        return Err(Error::InvalidInput("multiplicity must be at least 1".into()));
    }
    if target == 0 || target > n {
        return Err(Error::InvalidInput(format!("target {target} outside 1..={n}")));
    }
    let dim = n
        .checked_mul(multiplicity)
        .filter(|&d| d <= DEFAULT_MAX_DIM)
        .ok_or(Error::DimensionOverflow { dim: n.saturating_mul(multiplicity), max: DEFAULT_MAX_DIM })?;

    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut e_frame = DMatrix::<C64>::zeros(dim, multiplicity);
    for k in 0..n {
        for j in 0..multiplicity {
            e_frame[(k * multiplicity + j, j)] = amp;
        }
    }
    let f_frames: Vec<DMatrix<C64>> = (0..n)
        .map(|k| {
            let mut v = DMatrix::<C64>::zeros(dim, multiplicity);
            for j in 0..multiplicity {
                v[(k * multiplicity + j, j)] = C64::new(1.0, 0.0);
            }
            v
        })
        .collect();

    let expected = 1.0 / n as f64;
    for (k, fk) in f_frames.iter().enumerate() {
        for (t, label) in [(frame_transition(fk, &e_frame), "f_k|e"), (frame_transition(&e_frame, fk), "e|f_k")] {
            if t.residual > tol.abs_tol || (t.value - expected).abs() > tol.abs_tol {
                return Err(Error::ProtocolViolation(format!(
                    "instance check ℙ({label}) failed for k = {}: value {}, residual {:.3e}",
                    k + 1,
                    t.value,
                    t.residual
                )));
            }
        }
    }

    let e = Projection::from_orthonormal_columns(&e_frame, tol)?;
    let f = f_frames
        .iter()
        .map(|v| Projection::from_orthonormal_columns(v, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroverInstance { n, multiplicity, target, e, f, e_frame, f_frames, tol })
}

/// Frame of `(S_e S_{f_target})^r e`.
fn evolved_frame(instance: &GroverInstance, r: usize) -> DMatrix<C64> {
    let mut w = instance.e_frame.clone();
    for _ in 0..r {
        w = reflect(instance.target_frame(), &w);
        w = reflect(&instance.e_frame, &w);
    }
    w
}

/// `(S_e S_{f_target})^r e`, computed as conjugation by `(u_e u_target)^r`
/// with `u = 2P − I`.
pub fn iterate(instance: &GroverInstance, r: usize) -> Result<Projection> {
    Projection::from_orthonormal_columns(&evolved_frame(instance, r), instance.tol)
}

/// Same event via `r` rounds of `s_transform` on full matrices.
pub fn iterate_via_s_transform(instance: &GroverInstance, r: usize) -> Result<Projection> {
    let mut x = instance.e.clone();
    for _ in 0..r {
        x = s_transform_event(instance.target_event(), &x)?;
        x = s_transform_event(&instance.e, &x)?;
    }
    Ok(x)
}

/// `ℙ(f_target | (S_e S_{f_target})^r e)`; the transition must be state independent.
pub fn success_prob(instance: &GroverInstance, r: usize) -> Result<f64> {
    let t = frame_transition(instance.target_frame(), &evolved_frame(instance, r));
    if t.residual > instance.tol.abs_tol {
        return Err(Error::TransitionNotStateIndependent { residual: t.residual });
    }
    Ok(t.value)
}

/// `ℙ((S_{f_target} S_e)^r f_target | e)`, the other side of the symmetry.
pub fn dual_success_prob(instance: &GroverInstance, r: usize) -> Result<f64> {
    let mut w = instance.target_frame().clone();
    for _ in 0..r {
        w = reflect(&instance.e_frame, &w);
        w = reflect(instance.target_frame(), &w);
    }
    let t = frame_transition(&w, &instance.e_frame);
    if t.residual > instance.tol.abs_tol {
        return Err(Error::TransitionNotStateIndependent { residual: t.residual });
    }
    Ok(t.value)
}

/// Probabilities of every outcome `f_k` after `r` steps, in index order.
pub fn outcome_distribution(instance: &GroverInstance, r: usize) -> Vec<f64> {
    let w = evolved_frame(instance, r);
    instance.f_frames.iter().map(|fk| frame_transition(fk, &w).value).collect()
}

/// `sin²((2r + 1)·arcsin(√p))` for `p ∈ (0, 1]`.
pub fn closed_form(p: f64, r: usize) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("closed form needs p in (0, 1], got {p}")));
    }
    let angle = (2 * r + 1) as f64 * p.sqrt().asin();
    Ok(angle.sin().powi(2))
}

/// Iteration count maximizing the success probability for `n` entries.
///
/// Starts from `round(π / (4·arcsin(1/√n)) − ½)` and settles on the best of
/// its ±1 neighbours, preferring fewer steps on ties.
pub fn optimal_iterations(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("database size must be at least 2, got {n}")));
    }
    let p = 1.0 / n as f64;
    let guess = (std::f64::consts::PI / (4.0 * p.sqrt().asin()) - 0.5).round().max(0.0) as usize;
    let mut best = (guess.saturating_sub(1), closed_form(p, guess.saturating_sub(1))?);
    for r in guess.saturating_sub(1) + 1..=guess + 1 {
        let v = closed_form(p, r)?;
        if v > best.1 + 1e-12 {
            best = (r, v);
        }
    }
    Ok(best.0)
}

/// `(e, f)` with `ℙ(f|e) = p = ℙ(e|f)` for arbitrary `p ∈ (0, 1)`:
/// `e = |0⟩⟨0|`, `f = |χ⟩⟨χ|`, `χ = √p|0⟩ + √(1−p)|1⟩`, direct-summed
/// `multiplicity` times.
pub fn two_projection_pair(p: f64, multiplicity: usize, tol: Tolerance) -> Result<(Projection, Projection)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("two-projection pair needs p in (0, 1), got {p}")));
    }
    crate::assumptions::qubit_pair(p, multiplicity, tol)
}

/// One point of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroverRun {
    pub n: usize,
    pub multiplicity: usize,
    pub target: usize,
    pub r: usize,
    pub success_prob: f64,
    pub closed_form: f64,
    pub deviation: f64,
    #[serde(skip)]
    pub evolved: Option<Projection>,
}

/// Runs `r` steps and compares with the closed form.
pub fn run(instance: &GroverInstance, r: usize) -> Result<GroverRun> {
    let success = success_prob(instance, r)?;
    let expected = closed_form(1.0 / instance.n as f64, r)?;
    Ok(GroverRun {
        n: instance.n,
        multiplicity: instance.multiplicity,
        target: instance.target,
        r,
        success_prob: success,
        closed_form: expected,
        deviation: (success - expected).abs(),
        evolved: Some(iterate(instance, r)?),
    })
}

/// Sweep over every `(n, multiplicity, r)` with `r` in `rs`, sorted by that key.
pub fn sweep(ns: &[usize], multiplicities: &[usize], rs: &[usize], target: usize, tol: Tolerance) -> Result<Vec<GroverRun>> {
    let mut grid = Vec::new();
    for &n in ns {
        for &m in multiplicities {
            grid.push((n, m));
        }
    }
    let per_instance: Vec<Vec<GroverRun>> = grid
        .par_iter()
        .map(|&(n, m)| {
            let instance = build_instance(n, target.min(n), m, tol)?;
            rs.iter()
                .map(|&r| {
                    let mut run = run(&instance, r)?;
                    run.evolved = None;
                    Ok(run)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}
