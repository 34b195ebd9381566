//! States, conditional probabilities and the conditionalization maps.
//!
//! A state is a density operator `a`; conditioning on an event `e` is the
//! Lüders update `a ↦ e a e / trace(a e)`. Some transition probabilities do
//! not depend on the state at all: `ℙ(f|e) = p` exactly when `efe = p·e`.
//!
//! The maps act on the real space of Hermitian operators:
//!
//! * `U_e x = e x e` (conditionalization),
//! * `S_e x = 2U_e x + 2U_{e′} x − x = (2e − I) x (2e − I)` (reflection).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Projection;
use crate::operator::{hermitian_eig, ComplexMatrix, Tolerance};

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    matrix: ComplexMatrix,
    tol: Tolerance,
}

impl State {
    pub fn new(matrix: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > tol.abs_tol {
            return Err(Error::NotAState(format!("Hermitian defect {defect:.3e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.abs_tol || tr.im.abs() > tol.abs_tol {
            return Err(Error::NotAState(format!("trace {tr}")));
        }
        let eig = hermitian_eig(&matrix, &tol)?;
        if let Some(&min) = eig.values.last() {
            if min < -tol.eig_tol {
                return Err(Error::NotAState(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { matrix, tol })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize, tol: Tolerance) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64), tol }
    }

    /// `e / rank(e)`: the uniform state on the range of `e`.
    pub fn uniform_on(e: &Projection) -> Result<Self> {
        if e.is_zero() {
            return Err(Error::ZeroEvent);
        }
        Ok(Self { matrix: e.matrix().scale(1.0 / e.rank() as f64), tol: *e.tol() })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }
}

/// Element of the order-unit space: any Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > tol.abs_tol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Hermitian part `(m + m*)/2`, exact Hermitian by construction.
    fn symmetrized(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        Self { matrix: (&m + &adj).scale(0.5) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale(s) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

impl From<&Projection> for HermitianOperator {
    fn from(e: &Projection) -> Self {
        Self { matrix: e.matrix().clone() }
    }
}

/// A state-independent transition probability `ℙ(f|e)` with the residual
/// `‖efe − p·e‖_max` that certified it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionProbability {
    pub value: f64,
    pub residual: f64,
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Clamps to `[0, 1]` when within `tol` of either end.
pub(crate) fn clamp_unit(x: f64, tol: f64) -> f64 {
    if x < 0.0 && x >= -tol {
        0.0
    } else if x > 1.0 && x <= 1.0 + tol {
        1.0
    } else {
        x
    }
}

/// Unclamped `trace(a e)`.
pub fn raw_prob(rho: &State, e: &Projection) -> Result<f64> {
    same_dim(rho.dim(), e.dim())?;
    Ok(rho.matrix.trace_product(e.matrix()).re)
}

/// `ρ(e) = trace(a e)`.
pub fn prob(rho: &State, e: &Projection) -> Result<f64> {
    Ok(clamp_unit(raw_prob(rho, e)?, rho.tol.abs_tol))
}

fn require_nonnull(rho: &State, e: &Projection) -> Result<f64> {
    let p = raw_prob(rho, e)?;
    if p <= rho.tol.abs_tol {
        return Err(Error::ConditionOnNull { prob: p });
    }
    Ok(p)
}

/// `ρ(f|e) = trace(a e f e) / trace(a e)`.
pub fn cond_prob(rho: &State, f: &Projection, e: &Projection) -> Result<f64> {
    same_dim(f.dim(), e.dim())?;
    let denom = require_nonnull(rho, e)?;
    let efe = e.matrix() * &(f.matrix() * e.matrix());
    let num = rho.matrix.trace_product(&efe).re;
    Ok(clamp_unit(num / denom, rho.tol.abs_tol))
}

/// Lüders update `e a e / trace(a e)`.
pub fn condition_state(rho: &State, e: &Projection) -> Result<State> {
    let denom = require_nonnull(rho, e)?;
    let updated = e.matrix() * &(rho.matrix() * e.matrix());
    let h = HermitianOperator::symmetrized(updated.scale(1.0 / denom));
    State::new(h.matrix, rho.tol)
}

/// `ρ(f | e1, e2) = ρ(U_{e1} U_{e2} f) / ρ(U_{e1} e2)`.
pub fn seq_cond_prob(rho: &State, f: &Projection, e1: &Projection, e2: &Projection) -> Result<f64> {
    same_dim(f.dim(), e1.dim())?;
    same_dim(e1.dim(), e2.dim())?;
    require_nonnull(rho, e1)?;
    let second = cond_prob(rho, e2, e1)?;
    if second <= rho.tol.abs_tol {
        return Err(Error::ConditionOnNull { prob: second });
    }
    let (a, p1, p2) = (&rho.matrix, e1.matrix(), e2.matrix());
    let u2f = p2 * &(f.matrix() * p2);
    let num = a.trace_product(&(p1 * &(&u2f * p1))).re;
    let den = a.trace_product(&(p1 * &(p2 * p1))).re;
    Ok(clamp_unit(num / den, rho.tol.abs_tol))
}

/// `ℙ(f|e)` when it exists: `p = trace(efe)/trace(e)` and `‖efe − p e‖_max ≤ abs_tol`.
pub fn state_independent_prob(f: &Projection, e: &Projection, tol: &Tolerance) -> Result<Option<TransitionProbability>> {
    let t = transition_residual(f, e)?;
    Ok((t.residual <= tol.abs_tol).then_some(TransitionProbability {
        value: clamp_unit(t.value, tol.abs_tol),
        ..t
    }))
}

/// Best-fit `p` and residual, whether or not the residual is small.
pub fn transition_residual(f: &Projection, e: &Projection) -> Result<TransitionProbability> {
    same_dim(f.dim(), e.dim())?;
    if e.is_zero() {
        return Err(Error::ZeroEvent);
    }
    let efe = e.matrix() * &(f.matrix() * e.matrix());
    let value = efe.trace().re / e.matrix().trace().re;
    let residual = efe.max_abs_diff(&e.matrix().scale(value));
    Ok(TransitionProbability { value, residual })
}

/// `U_e x = e x e`.
pub fn u_transform(e: &Projection, x: &HermitianOperator) -> Result<HermitianOperator> {
    same_dim(e.dim(), x.dim())?;
    Ok(HermitianOperator::symmetrized(e.matrix() * &(x.matrix() * e.matrix())))
}

/// `S_e x = (2e − I) x (2e − I)`.
pub fn s_transform(e: &Projection, x: &HermitianOperator) -> Result<HermitianOperator> {
    same_dim(e.dim(), x.dim())?;
    let u = e.reflection();
    Ok(HermitianOperator::symmetrized(&u * &(x.matrix() * &u)))
}

/// `S_e f` as an event. The reflection is unitary, so the rank of `f` carries over.
pub fn s_transform_event(e: &Projection, f: &Projection) -> Result<Projection> {
    let image = s_transform(e, &HermitianOperator::from(f))?;
    let (hermitian, idempotent) = crate::operator::projection_defects(&image.matrix);
    if hermitian > f.tol().abs_tol || idempotent > f.tol().abs_tol {
        return Err(Error::NotProjection { hermitian, idempotent });
    }
    Ok(Projection::from_parts(image.matrix, f.rank(), *f.tol()))
}

/// The atomic state `ℙ_e`: the density operator `e` itself.
pub fn atomic_state(e: &Projection) -> Result<State> {
    if e.rank() != 1 {
        return Err(Error::NotAnAtom { rank: e.rank() });
    }
    Ok(State { matrix: e.matrix().clone(), tol: *e.tol() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{is_compatible, meet_compatible};
    use crate::operator::{is_projection, C64};
    use crate::random::{random_projection, random_state, stream_rng};
    use nalgebra::DVector;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn ket(a: f64, b: f64) -> Projection {
        Projection::onto_vector(&DVector::from_column_slice(&[C64::new(a, 0.0), C64::new(b, 0.0)]), tol()).unwrap()
    }

    #[test]
    fn normalization_and_symmetry() {
        let mut rng = stream_rng(1, 0);
        let rho = random_state(3, &mut rng, tol()).unwrap();
        assert!((prob(&rho, &Projection::identity(3, tol())).unwrap() - 1.0).abs() < 1e-12);
        let mixed = State::maximally_mixed(2, tol());
        assert!((prob(&mixed, &Projection::basis(2, 0, tol()).unwrap()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn state_validation() {
        assert!(State::new(ComplexMatrix::identity(2), tol()).is_err());
        assert!(State::new(ComplexMatrix::diag_real(&[1.5, -0.5]), tol()).is_err());
        assert!(State::new(ComplexMatrix::diag_real(&[0.25, 0.75]), tol()).is_ok());
    }

    #[test]
    fn qubit_overlap_half() {
        let mixed = State::maximally_mixed(2, tol());
        let k0 = Projection::basis(2, 0, tol()).unwrap();
        let plus = ket(1.0, 1.0);
        assert!((cond_prob(&mixed, &plus, &k0).unwrap() - 0.5).abs() < 1e-15);
        assert!((cond_prob(&mixed, &k0, &k0).unwrap() - 1.0).abs() < 1e-15);
        let p = state_independent_prob(&plus, &k0, &tol()).unwrap().unwrap();
        assert!((p.value - 0.5).abs() < 1e-15 && p.residual < 1e-15);
    }

    #[test]
    fn conditioning_on_null_fails() {
        let rho = atomic_state(&Projection::basis(2, 0, tol()).unwrap()).unwrap();
        let k1 = Projection::basis(2, 1, tol()).unwrap();
        assert!(matches!(cond_prob(&rho, &k1, &k1), Err(Error::ConditionOnNull { .. })));
        assert!(matches!(condition_state(&rho, &k1), Err(Error::ConditionOnNull { .. })));
    }

    #[test]
    fn luders_collapse() {
        let mixed = State::maximally_mixed(2, tol());
        let k0 = Projection::basis(2, 0, tol()).unwrap();
        let after = condition_state(&mixed, &k0).unwrap();
        assert!(after.matrix().max_abs_diff(k0.matrix()) < 1e-15);
        let same = condition_state(&mixed, &Projection::identity(2, tol())).unwrap();
        assert!(same.matrix().max_abs_diff(mixed.matrix()) < 1e-15);
    }

    #[test]
    fn transition_probability_absent() {
        // e = diag(1,1,0), f onto (|0> + |2>)/√2: efe = ½|0><0| is not a multiple of e
        let e = Projection::new(ComplexMatrix::diag_real(&[1.0, 1.0, 0.0]), tol()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = Projection::onto_vector(
            &DVector::from_column_slice(&[C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]),
            tol(),
        )
        .unwrap();
        assert!(state_independent_prob(&f, &e, &tol()).unwrap().is_none());
        let r = transition_residual(&f, &e).unwrap();
        // p = trace(efe)/trace(e) = ¼; residual = max(|½ − ¼|, |0 − ¼|)
        assert!((r.value - 0.25).abs() < 1e-15);
        assert!((r.residual - 0.25).abs() < 1e-15);
        assert!(matches!(
            state_independent_prob(&f, &Projection::zero(3, tol()), &tol()),
            Err(Error::ZeroEvent)
        ));
    }

    #[test]
    fn u_transform_identities() {
        let mut rng = stream_rng(2, 0);
        let e = random_projection(4, 2, &mut rng, tol()).unwrap();
        let id = HermitianOperator::from(&Projection::identity(4, tol()));
        assert!(u_transform(&e, &id).unwrap().matrix().max_abs_diff(e.matrix()) < 1e-12);
        let comp = HermitianOperator::from(&e.orthocomplement());
        assert!(u_transform(&e, &comp).unwrap().matrix().max_abs() < 1e-12);
    }

    #[test]
    fn u_of_compatible_pair_is_meet() {
        let t = tol();
        let e = Projection::new(ComplexMatrix::diag_real(&[1.0, 1.0, 0.0, 0.0]), t).unwrap();
        let f = Projection::new(ComplexMatrix::diag_real(&[0.0, 1.0, 1.0, 0.0]), t).unwrap();
        assert!(is_compatible(&e, &f, &t).unwrap());
        let u = u_transform(&e, &HermitianOperator::from(&f)).unwrap();
        assert!(u.matrix().max_abs_diff(meet_compatible(&e, &f).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn s_transform_on_qubit() {
        let k0 = Projection::basis(2, 0, tol()).unwrap();
        let plus = ket(1.0, 1.0);
        let minus = ket(1.0, -1.0);
        let image = s_transform_event(&k0, &plus).unwrap();
        assert!(image.matrix().max_abs_diff(minus.matrix()) < 1e-15);
        let fixed = s_transform(&k0, &HermitianOperator::from(&k0)).unwrap();
        assert!(fixed.matrix().max_abs_diff(k0.matrix()) < 1e-15);
    }

    #[test]
    fn s_image_of_random_events_is_projection() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let e = random_projection(5, 2, &mut rng, tol()).unwrap();
            let f = random_projection(5, 3, &mut rng, tol()).unwrap();
            let image = s_transform(&e, &HermitianOperator::from(&f)).unwrap();
            assert!(is_projection(image.matrix(), &tol()));
        }
    }

    #[test]
    fn atomic_states() {
        let k0 = Projection::basis(2, 0, tol()).unwrap();
        let rho = atomic_state(&k0).unwrap();
        assert_eq!(rho.matrix(), &ComplexMatrix::diag_real(&[1.0, 0.0]));
        assert_eq!(prob(&rho, &k0).unwrap(), 1.0);
        assert!(matches!(atomic_state(&Projection::identity(2, tol())), Err(Error::NotAnAtom { rank: 2 })));
    }

    #[test]
    fn atomic_state_matches_overlap() {
        // |<η|ξ>|² for ξ = (3, 4i)/5 and η = (1, 1)/√2 is ½
        let xi = Projection::onto_vector(
            &DVector::from_column_slice(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
            tol(),
        )
        .unwrap();
        let eta = ket(1.0, 1.0);
        let rho = atomic_state(&xi).unwrap();
        let v = cond_prob(&rho, &eta, &Projection::identity(2, tol())).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let p = state_independent_prob(&eta, &xi, &tol()).unwrap().unwrap();
        assert!((prob(&rho, &eta).unwrap() - p.value).abs() < 1e-15);
    }

    #[test]
    fn seq_with_trivial_first_condition() {
        let mut rng = stream_rng(8, 0);
        let rho = random_state(3, &mut rng, tol()).unwrap();
        let e = random_projection(3, 2, &mut rng, tol()).unwrap();
        let f = random_projection(3, 1, &mut rng, tol()).unwrap();
        let id = Projection::identity(3, tol());
        let a = seq_cond_prob(&rho, &f, &id, &e).unwrap();
        let b = cond_prob(&rho, &f, &e).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn dimension_mismatch_surfaces() {
        let rho = State::maximally_mixed(2, tol());
        let e3 = Projection::identity(3, tol());
        assert!(matches!(prob(&rho, &e3), Err(Error::DimensionMismatch { .. })));
        let x = HermitianOperator::from(&Projection::identity(2, tol()));
        assert!(u_transform(&e3, &x).is_err());
        assert!(s_transform(&e3, &x).is_err());
    }
}
