//! Numerical audit of the closed form for `ℙ((S_f S_e)^r f | e)`.
//!
//! Four elements `b_1 = e`, `b_2 = f`, `b_3 = U_{e′} f`, `b_4 = U_{f′} e`
//! span a subspace of Hermitian operators that `S_f S_e` maps into itself.
//! The 4×4 matrix [`build_m`] records the coefficients of `S_f S_e b_k`, and
//! the success probability follows from the second column of its `r`-th
//! power.
//!
//! In every Hilbert model the four elements satisfy
//! `b_1 + b_3/(1−p) = I = b_2 + b_4/(1−p)`, so they span only three
//! dimensions. `M` is one valid representation and the coefficients
//! extracted from a concrete model differ from its columns by multiples of
//! [`kernel_vector`]. This also makes eigenvalue 1 of `M` defective, which
//! [`eigen_check`] handles by refining clustered eigenvalues on the
//! characteristic polynomial.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assumptions::{qubit_pair, CheckResult};
use crate::error::{Error, Result};
use crate::grover::closed_form;
use crate::logic::Projection;
use crate::operator::{ComplexMatrix, Tolerance};
use crate::probability::{s_transform, s_transform_event, transition_residual, u_transform, HermitianOperator};

pub type RealMatrix4 = Matrix4<f64>;
pub type ComplexMatrix4 = Matrix4<Complex64>;

fn open_unit(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs p in (0, 1), got {p}")))
    }
}

/// Coefficients of `S_f S_e b_k` in column `k`.
pub fn build_m(p: f64) -> Result<RealMatrix4> {
    open_unit(p, "build_m")?;
    let q = 1.0 - p;
    let d = 8.0 * p * p - 8.0 * p + 3.0;
    #[rustfmt::skip]
    let m = Matrix4::new(
        -1.0,      -2.0 * p, 0.0,           -2.0 * q * q,
        2.0 * p,   d,        2.0 * q * q,   8.0 * p * q * q,
        0.0,       -2.0,     -1.0,          -2.0 * p,
        2.0,       8.0 * p,  2.0 * p,       d,
    );
    Ok(m)
}

/// `(1, −1, 1/(1−p), −1/(1−p))`: the relation among the four elements.
pub fn kernel_vector(p: f64) -> Result<Vector4<f64>> {
    open_unit(p, "kernel_vector")?;
    let s = 1.0 / (1.0 - p);
    Ok(Vector4::new(1.0, -1.0, s, -s))
}

/// `α_1 = 8p² − 8p + 1 + 4(1 − 2p)√(p(1−p)) i`.
pub fn alpha1(p: f64) -> Result<Complex64> {
    open_unit(p, "alpha1")?;
    Ok(Complex64::new(8.0 * p * p - 8.0 * p + 1.0, 4.0 * (1.0 - 2.0 * p) * (p * (1.0 - p)).sqrt()))
}

/// The four spanning elements in the model built by [`qubit_pair`].
pub fn spanning_elements(e: &Projection, f: &Projection) -> Result<[HermitianOperator; 4]> {
    let b1 = HermitianOperator::from(e);
    let b2 = HermitianOperator::from(f);
    let b3 = u_transform(&e.orthocomplement(), &b2)?;
    let b4 = u_transform(&f.orthocomplement(), &b1)?;
    Ok([b1, b2, b3, b4])
}

/// Real vectorization of the operators as columns (real parts, then imaginary parts).
fn vectorize(ops: &[HermitianOperator]) -> DMatrix<f64> {
    let d = ops[0].dim();
    let mut out = DMatrix::zeros(2 * d * d, ops.len());
    for (k, op) in ops.iter().enumerate() {
        for (i, z) in op.matrix().as_matrix().iter().enumerate() {
            out[(i, k)] = z.re;
            out[(d * d + i, k)] = z.im;
        }
    }
    out
}

fn numerical_rank(singular: &[f64]) -> usize {
    let top = singular.iter().cloned().fold(0.0, f64::max);
    singular.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Result of matching `S_f S_e b_k` against the columns of `M` in a concrete model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisAction {
    pub p: f64,
    pub copies: usize,
    pub span_rank: usize,
    /// `max_k ‖S_f S_e b_k − Σ_j M_jk b_j‖_max`.
    pub direct_residual: f64,
    /// Minimum-norm coefficients of `S_f S_e b_k`, one column per `k`.
    pub extracted: RealMatrix4,
    /// Largest component of `M_k − extracted_k` outside the kernel.
    pub coefficient_residual: f64,
}

/// Extracts the coefficients of `S_f S_e b_k` in a model with `copies`
/// blocks and compares them with `M`. Fails with `BasisDegenerate` when the
/// elements span fewer than three dimensions.
pub fn basis_action(p: f64, copies: usize) -> Result<BasisAction> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("basis_action needs p in [0, 1], got {p}")));
    }
    let tol = Tolerance::default();
    let (e, f) = qubit_pair(p, copies, tol)?;
    let b = spanning_elements(&e, &f)?;
    let basis = vectorize(&b);
    let svd = basis.clone().svd(true, true);
    let span_rank = numerical_rank(svd.singular_values.as_slice());
    if span_rank < 3 {
        return Err(Error::BasisDegenerate { rank: span_rank });
    }
    let m = build_m(p)?;

    let images: Vec<HermitianOperator> = b
        .iter()
        .map(|bk| s_transform(&f, &s_transform(&e, bk)?))
        .collect::<Result<_>>()?;

    let mut direct_residual: f64 = 0.0;
    for (k, image) in images.iter().enumerate() {
        let mut combo = ComplexMatrix::zeros(e.dim());
        for (j, bj) in b.iter().enumerate() {
            combo = combo + bj.matrix().scale(m[(j, k)]);
        }
        direct_residual = direct_residual.max(image.matrix().max_abs_diff(&combo));
    }

    let eps = 1e-9 * svd.singular_values.max();
    let targets = vectorize(&images);
    let solved = svd.solve(&targets, eps).map_err(|msg| Error::InvalidInput(msg.to_string()))?;
    let extracted = RealMatrix4::from_fn(|i, j| solved[(i, j)]);

    // project M's columns onto the row space; min-norm solutions live there
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut coefficient_residual: f64 = 0.0;
    for k in 0..4 {
        let col = DMatrix::from_column_slice(4, 1, m.column(k).as_slice());
        let mut projected = DMatrix::<f64>::zeros(4, 1);
        for (idx, s) in svd.singular_values.iter().enumerate() {
            if *s > eps {
                let row = v_t.row(idx);
                let weight = (row * &col)[(0, 0)];
                projected += row.transpose() * weight;
            }
        }
        for i in 0..4 {
            coefficient_residual = coefficient_residual.max((projected[(i, 0)] - extracted[(i, k)]).abs());
        }
    }

    Ok(BasisAction { p, copies, span_rank, direct_residual, extracted, coefficient_residual })
}

/// Check form of [`basis_action`] with one copy of the model.
pub fn verify_basis_action(p: f64, tol: &Tolerance) -> Result<CheckResult> {
    let action = basis_action(p, 1)?;
    Ok(CheckResult::from_residual(
        "annex_basis_action",
        action.direct_residual.max(action.coefficient_residual),
        tol.abs_tol,
    ))
}

/// Eigenvalues of `M` against `{α_1, α_2, 1, 1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenReport {
    pub p: f64,
    /// Eigenvalues after refinement, ordered to match `expected`.
    pub computed_eigs: Vec<Complex64>,
    /// Eigenvalues straight from the Schur decomposition, same order.
    pub raw_eigs: Vec<Complex64>,
    pub expected: Vec<Complex64>,
    pub max_deviation: f64,
    pub raw_max_deviation: f64,
    /// `||α_1| − 1|` from the formula.
    pub modulus_defect: f64,
    /// `||λ| − 1|` over the computed eigenvalues near `α_1` and `α_2`.
    pub computed_modulus_defect: f64,
    pub rank_m_minus_identity: usize,
}

/// Characteristic polynomial coefficients, lowest degree first, by Faddeev–LeVerrier.
pub fn characteristic_polynomial(m: &RealMatrix4) -> [f64; 5] {
    let mut coeffs = [0.0; 5];
    coeffs[4] = 1.0;
    let mut mk = RealMatrix4::zeros();
    for k in 1..=4 {
        mk = m * mk + RealMatrix4::identity() * coeffs[5 - k];
        coeffs[4 - k] = -(m * mk).trace() / k as f64;
    }
    coeffs
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Newton iteration on `q` from `start`.
fn newton(q: &[f64], start: Complex64) -> Complex64 {
    let dq = poly_derivative(q);
    let mut z = start;
    for _ in 0..60 {
        let slope = poly_eval(&dq, z);
        if slope.norm() == 0.0 {
            break;
        }
        let step = poly_eval(q, z) / slope;
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Groups eigenvalues lying within `radius` of each other.
fn clusters(values: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match groups.iter_mut().find(|g| g.iter().any(|&j| (values[j] - v).norm() < radius)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Schur eigenvalues, with each cluster of size `s` replaced by the root of
/// the `(s−1)`-th derivative of the characteristic polynomial nearest to the
/// cluster mean. Returns `(refined, raw)`.
pub fn refined_eigenvalues(m: &RealMatrix4) -> (Vec<Complex64>, Vec<Complex64>) {
    let raw: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    let q = characteristic_polynomial(m);
    let mut refined = raw.clone();
    for group in clusters(&raw, 1e-4) {
        let mean = group.iter().map(|&i| raw[i]).sum::<Complex64>() / group.len() as f64;
        let mut target = q.to_vec();
        for _ in 1..group.len() {
            target = poly_derivative(&target);
        }
        let root = newton(&target, mean);
        for &i in &group {
            refined[i] = root;
        }
    }
    (refined, raw)
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let perm = [a, b, c, d];
                    let mut seen = [false; 4];
                    perm.iter().for_each(|&i| seen[i] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(perm);
                    }
                }
            }
        }
    }
    out
}

/// Assignment of computed to expected values minimizing the worst deviation.
fn best_match(computed: &[Complex64], expected: &[Complex64]) -> ([usize; 4], f64) {
    permutations4()
        .into_iter()
        .map(|perm| {
            let dev = (0..4).map(|i| (computed[perm[i]] - expected[i]).norm()).fold(0.0, f64::max);
            (perm, dev)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("24 permutations")
}

pub fn eigen_check(p: f64) -> Result<EigenReport> {
    let m = build_m(p)?;
    let a1 = alpha1(p)?;
    let one = Complex64::new(1.0, 0.0);
    let expected = vec![a1, a1.conj(), one, one];
    let (refined, raw) = refined_eigenvalues(&m);

    let (perm, max_deviation) = best_match(&refined, &expected);
    let (raw_perm, raw_max_deviation) = best_match(&raw, &expected);
    let computed_eigs: Vec<Complex64> = perm.iter().map(|&i| refined[i]).collect();
    let raw_eigs: Vec<Complex64> = raw_perm.iter().map(|&i| raw[i]).collect();
    let computed_modulus_defect = computed_eigs[..2].iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);

    let shifted = m - RealMatrix4::identity();
    let singular = shifted.svd(false, false).singular_values;
    Ok(EigenReport {
        p,
        computed_eigs,
        raw_eigs,
        expected,
        max_deviation,
        raw_max_deviation,
        modulus_defect: (a1.norm() - 1.0).abs(),
        computed_modulus_defect,
        rank_m_minus_identity: numerical_rank(singular.as_slice()),
    })
}

/// The similarity matrices `N_1`, `N_2` and their stated inverses.
pub struct JordanFactors {
    pub n1: ComplexMatrix4,
    pub n1_inv: ComplexMatrix4,
    pub n2: ComplexMatrix4,
    pub n2_inv: ComplexMatrix4,
}

pub fn jordan_factors(p: f64) -> Result<JordanFactors> {
    open_unit(p, "jordan_factors")?;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let r = |re: f64| Complex64::new(re, 0.0);
    let q = 1.0 - p;
    let root = (p * q).sqrt();
    #[rustfmt::skip]
    let n1 = Matrix4::new(
        r(q),    r(0.0),  r(q),   r(0.0),
        r(0.0),  r(q),    r(0.0), r(q),
        r(-1.0), r(0.0),  r(1.0), r(0.0),
        r(0.0),  r(-1.0), r(0.0), r(1.0),
    );
    #[rustfmt::skip]
    let n1_inv = Matrix4::new(
        r(1.0), r(0.0), r(p - 1.0), r(0.0),
        r(0.0), r(1.0), r(0.0),     r(p - 1.0),
        r(1.0), r(0.0), r(q),       r(0.0),
        r(0.0), r(1.0), r(0.0),     r(q),
    ) / r(2.0 * q);
    #[rustfmt::skip]
    let n2 = Matrix4::new(
        r(1.0),                        r(1.0),                         r(0.0), r(0.0),
        c(1.0 - 2.0 * p, 2.0 * root),  c(1.0 - 2.0 * p, -2.0 * root),  r(0.0), r(0.0),
        r(0.0),                        r(0.0),                         r(1.0), r(-2.0),
        r(0.0),                        r(0.0),                         r(0.0), r(2.0),
    );
    let w = (1.0 - 2.0 * p) / (4.0 * root);
    let v = 1.0 / (4.0 * root);
    #[rustfmt::skip]
    let n2_inv = Matrix4::new(
        c(0.5, w),  c(0.0, -v), r(0.0), r(0.0),
        c(0.5, -w), c(0.0, v),  r(0.0), r(0.0),
        r(0.0),     r(0.0),     r(1.0), r(1.0),
        r(0.0),     r(0.0),     r(0.0), r(0.5),
    );
    Ok(JordanFactors { n1, n1_inv, n2, n2_inv })
}

/// Largest deviation among `N_1 N_1⁻¹ = I`, `N_2 N_2⁻¹ = I` and
/// `N_2⁻¹ N_1⁻¹ M N_1 N_2 = diag(α_1, α_2) ⊕ [[1, 0], [1, 1]]`.
pub fn jordan_residual(p: f64) -> Result<f64> {
    let f = jordan_factors(p)?;
    let m = build_m(p)?.map(|x| Complex64::new(x, 0.0));
    let a1 = alpha1(p)?;
    let (zero, one) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    #[rustfmt::skip]
    let jordan = Matrix4::new(
        a1,   zero,      zero, zero,
        zero, a1.conj(), zero, zero,
        zero, zero,      one,  zero,
        zero, zero,      one,  one,
    );
    let id = ComplexMatrix4::identity();
    let max_abs = |x: ComplexMatrix4| x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let similar = f.n2_inv * f.n1_inv * m * f.n1 * f.n2;
    Ok(max_abs(f.n1 * f.n1_inv - id)
        .max(max_abs(f.n2 * f.n2_inv - id))
        .max(max_abs(similar - jordan)))
}

/// `M^r` by repeated multiplication.
pub fn m_power(p: f64, r: usize) -> Result<RealMatrix4> {
    let m = build_m(p)?;
    let mut acc = RealMatrix4::identity();
    for _ in 0..r {
        acc = m * acc;
    }
    Ok(acc)
}

/// `ℙ((S_f S_e)^r f | e)` from the second column `c` of `M^r`:
/// `U_e` sends `b_1, b_2, b_3, b_4` to `e, p·e, 0, (1−p)²·e`.
pub fn m_power_literal(p: f64, r: usize) -> Result<f64> {
    let c = m_power(p, r)?.column(1).into_owned();
    Ok(c[0] + p * c[1] + (1.0 - p).powi(2) * c[3])
}

/// `½ − ((1 − 2p)/2)·Re(α_1^r) + √(p(1−p))·Im(α_1^r)`.
pub fn m_power_formula(p: f64, r: usize) -> Result<f64> {
    let a = alpha1(p)?.powu(r as u32);
    Ok(0.5 - 0.5 * (1.0 - 2.0 * p) * a.re + (p * (1.0 - p)).sqrt() * a.im)
}

/// Literal matrix-power value, after checking that the formula path agrees within `1e-10`.
pub fn m_power_prob(p: f64, r: usize) -> Result<f64> {
    let literal = m_power_literal(p, r)?;
    let formula = m_power_formula(p, r)?;
    if (literal - formula).abs() > 1e-10 {
        return Err(Error::ProtocolViolation(format!(
            "matrix power {literal} and eigenvalue formula {formula} disagree at p = {p}, r = {r}"
        )));
    }
    Ok(literal)
}

/// `ℙ(f | (S_e S_f)^r e)` in the two-dimensional model.
pub fn simulated_prob(p: f64, r: usize) -> Result<f64> {
    let (e, f) = qubit_pair(p, 1, Tolerance::default())?;
    let mut x = e.clone();
    for _ in 0..r {
        x = s_transform_event(&e, &s_transform_event(&f, &x)?)?;
    }
    let t = transition_residual(&f, &x)?;
    if t.residual > 1e-10 {
        return Err(Error::TransitionNotStateIndependent { residual: t.residual });
    }
    Ok(t.value)
}

/// `arcsin(2√(x − x²)) + r·arcsin(4(1 − 2x)√(x − x²)) − (4r + 2)·arcsin(√x)`
/// with principal branches. Zero only for `x ≤ ½` when `r = 0` and for
/// `x ≤ sin²(π/8)` when `r ≥ 1`; see [`trig_identity_bound`].
pub fn trig_identity_residual(x: f64, r: usize) -> Result<f64> {
    open_unit(x, "trig_identity_residual")?;
    let root = (x - x * x).sqrt();
    let r = r as f64;
    Ok((2.0 * root).asin() + r * (4.0 * (1.0 - 2.0 * x) * root).asin() - (4.0 * r + 2.0) * x.sqrt().asin())
}

/// Upper end of the interval `(0, bound]` on which the principal-branch
/// identity vanishes. Past it `4·arcsin(√x)` exceeds `π/2` and the middle
/// arcsin folds back.
pub fn trig_identity_bound(r: usize) -> f64 {
    if r == 0 {
        0.5
    } else {
        (std::f64::consts::PI / 8.0).sin().powi(2)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Same identity with `s = arccos(1 − 2x)` and `t = arg(α_1)`, reduced mod `2π`.
/// Vanishes on all of `(0, 1)`.
pub fn trig_identity_residual_unwrapped(x: f64, r: usize) -> Result<f64> {
    let a = alpha1(x)?;
    let s = (1.0 - 2.0 * x).acos();
    let t = a.im.atan2(a.re);
    Ok(wrap_angle(s + r as f64 * t - (4 * r + 2) as f64 * x.sqrt().asin()))
}

/// One grid point of the annex report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnexPoint {
    pub p: f64,
    pub r: usize,
    pub closed_form: f64,
    pub m_power: f64,
    pub eigen_formula: f64,
    pub simulated: f64,
    pub max_pairwise_dev: f64,
    pub eig_dev: f64,
}

/// `p = k/20` for `k = 1..=19`.
pub fn default_p_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// Evaluates every `(p, r)` with `r ≤ r_max`, sorted by `(p, r)` in input order.
pub fn grid_report(p_grid: &[f64], r_max: usize) -> Result<Vec<AnnexPoint>> {
    let per_p: Vec<Vec<AnnexPoint>> = p_grid
        .par_iter()
        .map(|&p| {
            let eig_dev = eigen_check(p)?.max_deviation;
            (0..=r_max)
                .map(|r| {
                    let values = [
                        closed_form(p, r)?,
                        m_power_literal(p, r)?,
                        m_power_formula(p, r)?,
                        simulated_prob(p, r)?,
                    ];
                    let mut dev: f64 = 0.0;
                    for i in 0..4 {
                        for j in i + 1..4 {
                            dev = dev.max((values[i] - values[j]).abs());
                        }
                    }
                    Ok(AnnexPoint {
                        p,
                        r,
                        closed_form: values[0],
                        m_power: values[1],
                        eigen_formula: values[2],
                        simulated: values[3],
                        max_pairwise_dev: dev,
                        eig_dev,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_p.into_iter().flatten().collect())
}
