//! Events as orthogonal projections: order, orthocomplement, orthogonality,
//! compatibility and the meets/joins that compatible pairs admit.
//!
//! A [`Projection`] keeps its orthocomplement alongside its own matrix, so
//! taking the complement is an exact involution rather than a pair of
//! floating-point subtractions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::{hermitian_eig, projection_defects, ComplexMatrix, Tolerance, C64};

/// A Hermitian idempotent operator: an event of the Hilbert quantum logic.
#[derive(Clone, Debug)]
pub struct Projection {
    matrix: ComplexMatrix,
    complement: ComplexMatrix,
    rank: usize,
    tol: Tolerance,
}

impl PartialEq for Projection {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Projection {
    /// Validates `matrix` as a projection and caches its rank.
    pub fn new(matrix: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let (hermitian, idempotent) = projection_defects(&matrix);
        if hermitian > tol.abs_tol || idempotent > tol.abs_tol {
            return Err(Error::NotProjection { hermitian, idempotent });
        }
        let eig = hermitian_eig(&matrix, &tol)?;
        let rank = eig.values.iter().filter(|&&l| (l - 1.0).abs() <= tol.eig_tol).count();
        Ok(Self::from_parts(matrix, rank, tol))
    }

    pub(crate) fn from_parts(matrix: ComplexMatrix, rank: usize, tol: Tolerance) -> Self {
        let complement = &ComplexMatrix::identity(matrix.dim()) - &matrix;
        Self { matrix, complement, rank, tol }
    }

    /// Projection `V V*` onto the span of the columns of `v`, which must be
    /// orthonormal within `abs_tol`. The rank is the column count.
    pub fn from_orthonormal_columns(v: &DMatrix<C64>, tol: Tolerance) -> Result<Self> {
        let gram = v.adjoint() * v;
        let k = v.ncols();
        let defect = (gram - DMatrix::<C64>::identity(k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if k == 0 || k > v.nrows() || defect > tol.abs_tol {
            return Err(Error::InvalidInput(format!(
                "columns are not orthonormal (k = {k}, defect {defect:.3e})"
            )));
        }
        let matrix = ComplexMatrix::from_orthonormal_columns(v)?;
        Ok(Self::from_parts(matrix, k, tol))
    }

    /// Atom `|v⟩⟨v|` for the normalized direction of `v`.
    pub fn onto_vector(v: &DVector<C64>, tol: Tolerance) -> Result<Self> {
        Ok(Self::from_parts(ComplexMatrix::projector_onto(v)?, 1, tol))
    }

    /// `|index⟩⟨index|` in the computational basis.
    pub fn basis(dim: usize, index: usize, tol: Tolerance) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidInput(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Ok(Self::from_parts(ComplexMatrix::diag_real(&diag), 1, tol))
    }

    pub fn zero(dim: usize, tol: Tolerance) -> Self {
        Self::from_parts(ComplexMatrix::zeros(dim), 0, tol)
    }

    pub fn identity(dim: usize, tol: Tolerance) -> Self {
        Self::from_parts(ComplexMatrix::identity(dim), dim, tol)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    /// `I − e`.
    pub fn orthocomplement(&self) -> Self {
        Self {
            matrix: self.complement.clone(),
            complement: self.matrix.clone(),
            rank: self.dim() - self.rank,
            tol: self.tol,
        }
    }

    /// `2e − I`, the unitary reflection implementing the S-transformation.
    pub fn reflection(&self) -> ComplexMatrix {
        &self.matrix - &self.complement
    }

    /// Same event judged against a different tolerance.
    pub fn with_tol(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }
}

fn same_dim(e: &Projection, f: &Projection) -> Result<()> {
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch { left: e.dim(), right: f.dim() });
    }
    Ok(())
}

pub fn orthocomplement(e: &Projection) -> Projection {
    e.orthocomplement()
}

/// `f ≤ e`: the range of `f` lies in the range of `e`, tested as `‖ef − f‖ ≤ abs_tol`.
pub fn leq(f: &Projection, e: &Projection, tol: &Tolerance) -> Result<bool> {
    same_dim(f, e)?;
    Ok((e.matrix() * f.matrix()).max_abs_diff(f.matrix()) <= tol.abs_tol)
}

/// `‖ef‖_max ≤ abs_tol`.
pub fn is_orthogonal(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<bool> {
    same_dim(e, f)?;
    Ok((e.matrix() * f.matrix()).max_abs() <= tol.abs_tol)
}

/// Commutator norm of two events.
pub fn commutator_norm(e: &Projection, f: &Projection) -> Result<f64> {
    same_dim(e, f)?;
    Ok(e.matrix().commutator(f.matrix()).max_abs())
}

/// Compatible events commute.
pub fn is_compatible(e: &Projection, f: &Projection, tol: &Tolerance) -> Result<bool> {
    Ok(commutator_norm(e, f)? <= tol.abs_tol)
}

/// Meet of matrices already known to commute: the symmetrized product.
fn commuting_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let ab = a * b;
    (&ab + &ab.adjoint()).scale(0.5)
}

/// `e ∧ f = ef` for commuting events; incompatible pairs are rejected.
pub fn meet_compatible(e: &Projection, f: &Projection) -> Result<Projection> {
    let commutator = commutator_norm(e, f)?;
    if commutator > e.tol.abs_tol {
        return Err(Error::IncompatiblePair { commutator });
    }
    Projection::new(commuting_product(e.matrix(), f.matrix()), e.tol)
}

/// `e ∨ f = (e′ ∧ f′)′` for commuting events.
pub fn join_compatible(e: &Projection, f: &Projection) -> Result<Projection> {
    Ok(meet_compatible(&e.orthocomplement(), &f.orthocomplement())?.orthocomplement())
}

pub fn is_atom(e: &Projection) -> bool {
    e.rank() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_projection, stream_rng};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn plus() -> Projection {
        Projection::onto_vector(&DVector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]), tol())
            .unwrap()
    }

    #[test]
    fn complement_of_bottom_and_basis() {
        let t = tol();
        let zero = Projection::zero(3, t);
        assert_eq!(zero.orthocomplement().matrix(), &ComplexMatrix::identity(3));
        let k0 = Projection::basis(2, 0, t).unwrap();
        assert_eq!(k0.orthocomplement(), Projection::basis(2, 1, t).unwrap());
    }

    #[test]
    fn complement_is_exact_involution() {
        let mut rng = stream_rng(3, 0);
        for rank in 1..=4 {
            let e = random_projection(5, rank, &mut rng, tol()).unwrap();
            let back = e.orthocomplement().orthocomplement();
            assert_eq!(back.matrix(), e.matrix());
            // rank oracle: count eigenvalues near one on the materialized complement
            let recounted = Projection::new(e.orthocomplement().matrix().clone(), tol()).unwrap();
            assert_eq!(recounted.rank(), 5 - rank);
        }
    }

    #[test]
    fn new_rejects_non_projection() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(matches!(Projection::new(half, tol()), Err(Error::NotProjection { .. })));
    }

    #[test]
    fn order_relations() {
        let t = tol();
        let k0 = Projection::basis(2, 0, t).unwrap();
        assert!(leq(&k0, &Projection::identity(2, t), &t).unwrap());
        assert!(!leq(&k0, &plus(), &t).unwrap());
        assert!(!leq(&plus(), &k0, &t).unwrap());
        assert!(leq(&k0, &Projection::basis(3, 0, t).unwrap(), &t).is_err());
    }

    #[test]
    fn orthogonality_and_compatibility() {
        let t = tol();
        let k0 = Projection::basis(2, 0, t).unwrap();
        let k1 = Projection::basis(2, 1, t).unwrap();
        assert!(is_orthogonal(&k0, &k1, &t).unwrap());
        assert!(is_orthogonal(&plus(), &plus().orthocomplement(), &t).unwrap());
        assert!(is_compatible(&plus(), &plus(), &t).unwrap());
        assert!(!is_compatible(&k0, &plus(), &t).unwrap());
    }

    #[test]
    fn meets_and_joins() {
        let t = tol();
        let mut rng = stream_rng(5, 1);
        let e = random_projection(4, 2, &mut rng, t).unwrap();
        let id = Projection::identity(4, t);
        assert!(meet_compatible(&e, &id).unwrap().matrix().max_abs_diff(e.matrix()) < 1e-12);
        assert_eq!(meet_compatible(&e, &e.orthocomplement()).unwrap().rank(), 0);
        assert!(join_compatible(&e, &Projection::zero(4, t)).unwrap().matrix().max_abs_diff(e.matrix()) < 1e-12);
        let top = join_compatible(&e, &e.orthocomplement()).unwrap();
        assert!(top.matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);

        let j = join_compatible(&Projection::basis(3, 0, t).unwrap(), &Projection::basis(3, 1, t).unwrap()).unwrap();
        assert_eq!(j.rank(), 2);
        assert!(j.matrix().max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn meet_rejects_incompatible() {
        let t = tol();
        let k0 = Projection::basis(2, 0, t).unwrap();
        assert!(matches!(meet_compatible(&k0, &plus()), Err(Error::IncompatiblePair { .. })));
        assert!(matches!(join_compatible(&k0, &plus()), Err(Error::IncompatiblePair { .. })));
    }

    #[test]
    fn atoms() {
        let t = tol();
        assert!(is_atom(&Projection::basis(2, 0, t).unwrap()));
        assert!(!is_atom(&Projection::identity(2, t)));
        let block = Projection::new(ComplexMatrix::diag_real(&[1.0, 1.0, 0.0, 0.0]), t).unwrap();
        assert!(!is_atom(&block));
    }
}
