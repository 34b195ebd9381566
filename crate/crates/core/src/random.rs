//! Seeded sampling of projections, states and Hermitian operators.
//!
//! Randomness comes from ChaCha8 with explicit stream selection: a run is
//! identified by `(seed, stream)` and the draws are identical on every
//! platform. Parallel trials each take their own stream, so results never
//! depend on scheduling. Gaussians use the Box–Muller transform on uniform
//! doubles; orthonormal frames use modified Gram–Schmidt applied twice.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::logic::Projection;
use crate::operator::{ComplexMatrix, Tolerance, C64, ONE, ZERO};
use crate::probability::{HermitianOperator, State};

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` of root seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal deviate via Box–Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - u keeps the logarithm argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Complex normal with unit variance, `(x + iy)/√2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re = gaussian(rng);
    let im = gaussian(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = DMatrix::from_element(rows, cols, ZERO);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<C64> {
    loop {
        let v = DVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(rng)));
        let n = v.norm();
        if n > 1e-8 {
            return v.unscale(n);
        }
    }
}

/// Modified Gram–Schmidt with a second pass; `None` if the columns are
/// numerically dependent.
pub fn orthonormalize(mut v: DMatrix<C64>) -> Option<DMatrix<C64>> {
    for j in 0..v.ncols() {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = v.column(k).dotc(&v.column(j));
                let qk = v.column(k).clone_owned();
                v.column_mut(j).axpy(-proj, &qk, ONE);
            }
        }
        let n = v.column(j).norm();
        if n < 1e-10 {
            return None;
        }
        v.column_mut(j).unscale_mut(n);
    }
    Some(v)
}


/// Orthonormal `dim × rank` frame spanning a Haar-random subspace.
pub fn random_frame<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DMatrix<C64>> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { dim, rank });
    }
    loop {
        if let Some(q) = orthonormalize(gaussian_matrix(dim, rank, rng)) {
            return Ok(q);
        }
    }
}

/// Haar-random projection of the given rank. Full rank returns the identity exactly.
pub fn random_projection<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R, tol: Tolerance) -> Result<Projection> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { dim, rank });
    }
    if rank == dim {
        return Ok(Projection::identity(dim, tol));
    }
    Projection::from_orthonormal_columns(&random_frame(dim, rank, rng)?, tol)
}

/// Random full-rank density operator `G G* / trace(G G*)`.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R, tol: Tolerance) -> Result<State> {
    let g = gaussian_matrix(dim, dim, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    State::new(ComplexMatrix::new(w.unscale(tr))?, tol)
}

/// Random density operator supported inside the range of `e`.
pub fn random_state_within<R: Rng + ?Sized>(e: &Projection, rng: &mut R, tol: Tolerance) -> Result<State> {
    if e.is_zero() {
        return Err(Error::ZeroEvent);
    }
    let g = gaussian_matrix(e.dim(), e.dim(), rng);
    let p = e.matrix().as_matrix();
    let w = p * &g * g.adjoint() * p;
    let tr = w.trace().re;
    State::new(ComplexMatrix::new(w.unscale(tr))?, tol)
}

/// Hermitian operator with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = gaussian_matrix(dim, dim, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    HermitianOperator::new_unchecked(ComplexMatrix::new(h).expect("finite Gaussian matrix"))
}
