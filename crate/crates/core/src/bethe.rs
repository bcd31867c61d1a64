//! Polynomial (quasi-exact) solutions and their Bethe ansatz equations.
//!
//! With `q₄ = 0`, a monic polynomial `φ = Π(z − z_i)` of degree `n` solves
//! `L[φ] = 0` exactly when
//!
//! * `q₂ = −n p₃`, which fixes the energy `Eₙ` in closed form,
//! * `p₃ Σz_i = 0`,
//! * `q₀ = −p₃ Σz_i² − n p₁ − n(n−1) b₂`, which fixes the required `Δ²`,
//! * the roots satisfy, for every `i`,
//!
//! ```text
//! 4Σ_{p≠ℓ≠j≠i} 1/((z_i−z_p)(z_i−z_ℓ)(z_i−z_j)) + a₁z_i·3Σ_{ℓ≠j≠i} 1/((z_i−z_ℓ)(z_i−z_j))
//!     + (b₂z_i² + b₀)·2Σ_{j≠i} 1/(z_i−z_j) + p₃z_i³ + p₁z_i = 0
//! ```
//!
//! (sums over ordered tuples of distinct indices).
//!
//! Roots are found two ways: damped Newton on the Bethe equations from many
//! random starts, and a linear null-space computation on the coefficients of
//! `L[φ]`. Every accepted state is re-checked by applying the operator.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alpha::AlphaBranch;
use crate::error::{Error, Result};
use crate::identities::check_distinct;
use crate::ode::{apply_operator, ode_coefficients_with_delta_sq, operator_residual, OdeCoefficients};
use crate::params::ModelParams;
use crate::poly::ComplexPolynomial;
use crate::roots::{matched_distance, polynomial_roots, sort_canonical};
use crate::ComplexScalar;

/// Residual threshold for a state to be marked verified.
pub const VERIFY_TOL: f64 = 1e-9;
/// Imaginary parts below this count as zero when classifying physicality.
pub const PHYSICAL_TOL: f64 = 1e-8;

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `Eₙ` from `q₂ = −n p₃`.
pub fn energy_level(n: usize, alpha: ComplexScalar, params: &ModelParams) -> Result<ComplexScalar> {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let a = alpha;
    let nf = n as f64;
    let denom = a * 2.0 * (a * (2.0 * l) + w);
    if denom.norm() < 1e-12 {
        return Err(Error::SingularDenominator(denom.norm()));
    }
    let a2 = a * a;
    let num = a * (4.0 * (nf + 1.0) * w * w)
        - (a2 * (2.0 * l) + a * w + l) * (2.0 * eps)
        - a * (2.0 * l * l) * (a2 * (8.0 * (2.0 * nf + 3.0)) + (2.0 * nf + 1.0))
        - (a2 * 8.0 + (nf - 2.0)) * (l * w);
    Ok(num / denom)
}

/// Ground-state energy written out for `n = 0`.
pub fn ground_state_energy(alpha: ComplexScalar, params: &ModelParams) -> Result<ComplexScalar> {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let a = alpha;
    let denom = a * (a * (2.0 * l) + w);
    if denom.norm() < 1e-12 {
        return Err(Error::SingularDenominator(2.0 * denom.norm()));
    }
    let a2 = a * a;
    let num = (cx(l) - a * (a * (4.0 * l) + eps)) * w
        - (a2 * a * (24.0 * l) + a2 * (2.0 * eps) + a * l + eps) * l
        + a * (2.0 * w * w);
    Ok(num / denom)
}

/// First-excited energy written out for `n = 1`.
pub fn first_excited_energy(alpha: ComplexScalar, params: &ModelParams) -> Result<ComplexScalar> {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let a = alpha;
    let denom = a * 2.0 * (a * (2.0 * l) + w);
    if denom.norm() < 1e-12 {
        return Err(Error::SingularDenominator(denom.norm()));
    }
    let a2 = a * a;
    let num = (cx(l) - a * 2.0 * (a * (4.0 * l) + eps)) * w
        - ((a2 * 40.0 + 3.0) * a * l + a2 * (2.0 * eps) + eps) * (2.0 * l)
        + a * (8.0 * w * w);
    Ok(num / denom)
}

/// `p₃ Σz_i`.
pub fn sum_constraint(roots: &[ComplexScalar], c: &OdeCoefficients) -> ComplexScalar {
    c.p3 * roots.iter().sum::<Complex64>()
}

/// Which factor of `p₃ Σz_i` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumFactor {
    /// `n = 0`, empty sum.
    Empty,
    RootSum,
    P3,
    Both,
    Neither,
}

impl SumFactor {
    pub fn classify(roots: &[ComplexScalar], c: &OdeCoefficients, tol: f64) -> Self {
        if roots.is_empty() {
            return Self::Empty;
        }
        let sum_zero = roots.iter().sum::<Complex64>().norm() < tol;
        let p3_zero = c.p3.norm() < tol;
        match (sum_zero, p3_zero) {
            (true, true) => Self::Both,
            (true, false) => Self::RootSum,
            (false, true) => Self::P3,
            (false, false) => Self::Neither,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Empty => "empty",
            Self::RootSum => "root_sum",
            Self::P3 => "p3",
            Self::Both => "both",
            Self::Neither => "neither",
        }
    }
}

/// Required `Δ²` for level `n` with roots `z_i` and energy `E`.
pub fn delta_squared(
    n: usize,
    alpha: ComplexScalar,
    params: &ModelParams,
    roots: &[ComplexScalar],
    energy: ComplexScalar,
) -> Result<ComplexScalar> {
    if roots.len() != n {
        return Err(Error::InvalidParameter(format!("expected {n} roots, got {}", roots.len())));
    }
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let (a, e, nf) = (alpha, energy, n as f64);
    let sum_sq: Complex64 = roots.iter().map(|z| z * z).sum();
    let a3 = a * a * a;
    let root_weight = (a * (4.0 * w * w) - (a3 * 8.0 + a) * (4.0 * l * l) - l * w) / (l * l);
    Ok(e * (nf * w) - e * e - (root_weight * sum_sq + (nf - nf * nf - 2.0)) * (l * l)
        + eps * eps
        + a * a * (12.0 * l * l * (2.0 * nf * (nf + 1.0) + 1.0))
        - nf * nf * w * w
        + a * (2.0 * l * (2.0 * nf + 1.0)) * (e + 2.0 * w)
        + (a * 2.0 * (l + 2.0 * l * nf) + nf * w) * eps)
}

/// `Δ²` restriction written out for `n = 0`.
pub fn ground_delta_squared(alpha: ComplexScalar, params: &ModelParams, energy: ComplexScalar) -> ComplexScalar {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let (a, e) = (alpha, energy);
    (a * (a * (6.0 * l) + e + 2.0 * w) + l) * (2.0 * l) + a * (2.0 * l * eps) - e * e + eps * eps
}

/// `Δ²` restriction written out for `n = 1` with root `z₁`.
pub fn first_delta_squared(
    alpha: ComplexScalar,
    params: &ModelParams,
    energy: ComplexScalar,
    z1: ComplexScalar,
) -> ComplexScalar {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let (a, e) = (alpha, energy);
    let l2 = l * l;
    let weight = (a * (4.0 * w * w) - (a * a * a * 8.0 + a) * (4.0 * l2) - l * w) / l2;
    (a * a * 60.0 + 2.0 - weight * z1 * z1) * l2 + (a * (6.0 * l) + w) * e + a * (12.0 * l * w)
        + (a * (6.0 * l) + w) * eps
        - e * e
        - w * w
        + eps * eps
}

/// Bethe residual for each root, from the ordered-tuple sums.
pub fn bae_residuals(roots: &[ComplexScalar], c: &OdeCoefficients) -> Result<Vec<ComplexScalar>> {
    check_distinct(roots, crate::identities::DEGENERACY_TOL)?;
    let n = roots.len();
    let zero = cx(0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let zi = roots[i];
        let inv = |j: usize| (zi - roots[j]).inv();
        let (mut s2, mut s3, mut s4) = (zero, zero, zero);
        for j in (0..n).filter(|&j| j != i) {
            s2 += inv(j);
            for l in (0..n).filter(|&l| l != i && l != j) {
                s3 += inv(j) * inv(l);
                for p in (0..n).filter(|&p| p != i && p != j && p != l) {
                    s4 += inv(j) * inv(l) * inv(p);
                }
            }
        }
        let zi2 = zi * zi;
        out.push(
            s4 * 4.0 + c.a1 * zi * s3 * 3.0 + (c.b2 * zi2 + c.b0) * s2 * 2.0 + c.p3 * zi2 * zi + c.p1 * zi,
        );
    }
    Ok(out)
}

/// Same residuals through power sums of `x_j = 1/(z_i − z_j)`; O(n²) per
/// evaluation, used inside Newton.
fn bae_residuals_fast(roots: &[ComplexScalar], c: &OdeCoefficients, out: &mut [ComplexScalar]) {
    let n = roots.len();
    for i in 0..n {
        let zi = roots[i];
        let (mut p1, mut p2, mut p3) = (cx(0.0), cx(0.0), cx(0.0));
        for (j, &zj) in roots.iter().enumerate() {
            if j == i {
                continue;
            }
            let x = (zi - zj).inv();
            let x2 = x * x;
            p1 += x;
            p2 += x2;
            p3 += x2 * x;
        }
        // ordered distinct pairs and triples via Newton's identities
        let e2 = p1 * p1 - p2;
        let e3 = p1 * p1 * p1 - p1 * p2 * 3.0 + p3 * 2.0;
        let zi2 = zi * zi;
        out[i] = e3 * 4.0 + c.a1 * zi * e2 * 3.0 + (c.b2 * zi2 + c.b0) * p1 * 2.0 + c.p3 * zi2 * zi + c.p1 * zi;
    }
}

fn max_norm(v: &[ComplexScalar]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Knobs of the root solvers and of verification.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub seeds: usize,
    pub seed_radius: f64,
    pub max_iterations: usize,
    /// Step shrink factor of the backtracking line search.
    pub damping: f64,
    pub converge_tol: f64,
    /// Root-sets with two roots closer than this are discarded.
    pub distinct_tol: f64,
    /// Root-sets closer than this (as sets) are merged.
    pub dedup_tol: f64,
    pub rng_seed: u64,
    pub verify_tol: f64,
    pub physical_tol: f64,
    /// Relative smallest-singular-value threshold of the null-space oracle.
    pub nullspace_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seeds: 64,
            seed_radius: 3.0,
            max_iterations: 200,
            damping: 0.5,
            converge_tol: 1e-10,
            distinct_tol: 1e-8,
            dedup_tol: 1e-7,
            rng_seed: 0x5eed,
            verify_tol: VERIFY_TOL,
            physical_tol: PHYSICAL_TOL,
            nullspace_tol: 1e-8,
        }
    }
}

fn min_pairwise(roots: &[ComplexScalar]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            m = m.min((roots[i] - roots[j]).norm());
        }
    }
    m
}

/// Damped Newton from one start. Returns the converged roots and residual.
fn newton(start: Vec<ComplexScalar>, c: &OdeCoefficients, cfg: &SolverConfig) -> Option<(Vec<ComplexScalar>, f64)> {
    let n = start.len();
    let mut z = start;
    let mut f = vec![cx(0.0); n];
    let mut trial_f = vec![cx(0.0); n];
    bae_residuals_fast(&z, c, &mut f);
    let mut res = max_norm(&f);
    let mut jac = DMatrix::<Complex64>::zeros(n, n);
    let (mut fp, mut fm) = (vec![cx(0.0); n], vec![cx(0.0); n]);
    for _ in 0..cfg.max_iterations {
        if !res.is_finite() {
            return None;
        }
        if res < cfg.converge_tol {
            return Some((z, res));
        }
        for j in 0..n {
            let h = 1e-7 * (1.0 + z[j].norm());
            let orig = z[j];
            z[j] = orig + h;
            bae_residuals_fast(&z, c, &mut fp);
            z[j] = orig - h;
            bae_residuals_fast(&z, c, &mut fm);
            z[j] = orig;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|x| -x));
        let step = jac.clone().lu().solve(&rhs)?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-8 {
            let trial: Vec<_> = z.iter().zip(step.iter()).map(|(a, s)| a + s * t).collect();
            if min_pairwise(&trial) > cfg.distinct_tol {
                bae_residuals_fast(&trial, c, &mut trial_f);
                let r = max_norm(&trial_f);
                if r.is_finite() && r < res {
                    z = trial;
                    std::mem::swap(&mut f, &mut trial_f);
                    res = r;
                    accepted = true;
                    break;
                }
            }
            t *= cfg.damping;
        }
        if !accepted || z.iter().any(|r| r.norm() > 1e6) {
            break;
        }
    }
    (res < cfg.converge_tol).then_some((z, res))
}

fn canonical(mut roots: Vec<ComplexScalar>) -> Vec<ComplexScalar> {
    // clean signed zeros so ordering does not depend on rounding noise
    for r in roots.iter_mut() {
        if r.re.abs() < 1e-13 {
            r.re = 0.0;
        }
        if r.im.abs() < 1e-13 {
            r.im = 0.0;
        }
    }
    sort_canonical(&mut roots);
    roots
}

fn cmp_root_sets(a: &[ComplexScalar], b: &[ComplexScalar]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn push_unique(sets: &mut Vec<Vec<ComplexScalar>>, roots: Vec<ComplexScalar>, tol: f64) {
    if sets.iter().all(|s| matched_distance(s, &roots) >= tol) {
        sets.push(roots);
    }
}

/// Multi-start damped Newton on the Bethe equations.
///
/// Starts are drawn from discs of radius `R/2`, `R` and `3R/2` in rotation,
/// with `R = max(seed_radius, √|p₁/p₃|)` (the modulus of the nonzero roots at
/// `n = 1`), using a seeded generator so results are reproducible. Every other
/// start is parity symmetric (`±z` pairs, plus `0` for odd `n`), matching the
/// parity the operator preserves. Converged root-sets are
/// deduplicated and returned in canonical order.
pub fn solve_bae(n: usize, c: &OdeCoefficients, cfg: &SolverConfig) -> Result<Vec<Vec<ComplexScalar>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut found: Vec<Vec<ComplexScalar>> = Vec::new();
    let scale = if c.p3.norm() > 0.0 { (c.p1.norm() / c.p3.norm()).sqrt() } else { 0.0 };
    let base = cfg.seed_radius.max(scale);
    for k in 0..cfg.seeds {
        let radius = base * 0.5 * (1 + k % 3) as f64;
        let mut draw = || {
            let r = radius * rng.random::<f64>().sqrt();
            Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
        };
        let start: Vec<ComplexScalar> = if k % 2 == 1 {
            let mut s: Vec<ComplexScalar> = (0..n / 2).flat_map(|_| {
                let z = draw();
                [z, -z]
            }).collect();
            if n % 2 == 1 {
                s.push(Complex64::new(0.0, 0.0));
            }
            s
        } else {
            (0..n).map(|_| draw()).collect()
        };
        if let Some((roots, _)) = newton(start, c, cfg) {
            if min_pairwise(&roots) > cfg.distinct_tol {
                push_unique(&mut found, canonical(roots), cfg.dedup_tol);
            }
        }
    }
    if found.is_empty() {
        return Err(Error::NoConvergence { n, seeds: cfg.seeds, best: f64::NAN });
    }
    found.sort_by(|a, b| cmp_root_sets(a, b));
    Ok(found)
}

/// Polynomial solution found by the null-space route.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceSolution {
    pub roots: Vec<ComplexScalar>,
    pub polynomial: ComplexPolynomial,
    /// `‖L[φ]‖` scaled as in [`operator_residual`].
    pub defect: f64,
    /// Smallest singular value of the stacked system over `1 + ‖system‖_F`.
    pub singular_ratio: f64,
}

/// Stacked system `[L[1] | L[z] | … | L[zⁿ]]`, one row per power of `z`.
fn operator_columns(n: usize, c: &OdeCoefficients) -> DMatrix<Complex64> {
    let rows = n + 5;
    let mut m = DMatrix::<Complex64>::zeros(rows, n + 1);
    for k in 0..=n {
        let img = apply_operator(c, &ComplexPolynomial::monomial(cx(1.0), k));
        for (r, &v) in img.coeffs().iter().enumerate() {
            m[(r, k)] = v;
        }
    }
    m
}

/// Looks for a monic degree-`n` polynomial in the kernel of `L`.
///
/// `L` is linear in the unknown lower coefficients of `φ = zⁿ + …`, so a
/// solution exists iff the stacked coefficient system is rank deficient with a
/// kernel vector whose `zⁿ` component is nonzero.
pub fn nullspace_oracle(n: usize, c: &OdeCoefficients, cfg: &SolverConfig) -> Option<NullspaceSolution> {
    let m = operator_columns(n, c);
    let fro = m.norm();
    let svd = m.svd(false, true);
    let (k_min, &s_min) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let ratio = s_min / (1.0 + fro);
    if !(ratio < cfg.nullspace_tol) {
        return None;
    }
    let v_t = svd.v_t?;
    let v: Vec<Complex64> = v_t.row(k_min).iter().map(|x| x.conj()).collect();
    let lead = v[n];
    if lead.norm() < 1e-8 * v.iter().map(|x| x.norm()).fold(0.0, f64::max) {
        return None;
    }
    let phi = ComplexPolynomial::new(v.iter().map(|x| x / lead).collect());
    let roots = canonical(polynomial_roots(&phi));
    let defect = operator_residual(c, &phi);
    Some(NullspaceSolution { roots, polynomial: phi, defect, singular_ratio: ratio })
}

/// Values of `q₀` for which `L` has a polynomial kernel of degree `n`, as the
/// eigenvalues of `−L|_{q₀=0}` on the parity-`n` polynomials of degree ≤ `n`.
///
/// Requires `q₄ = 0` and `q₂ = −n p₃` (energy from [`energy_level`]), which make
/// that subspace invariant.
pub fn kernel_q0_values(n: usize, c: &OdeCoefficients) -> Vec<ComplexScalar> {
    let base = OdeCoefficients { q0: cx(0.0), ..*c };
    let powers: Vec<usize> = (0..=n).filter(|k| (n - k).is_multiple_of(2)).collect();
    let dim = powers.len();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &k) in powers.iter().enumerate() {
        let img = apply_operator(&base, &ComplexPolynomial::monomial(cx(1.0), k));
        for (row, &r) in powers.iter().enumerate() {
            m[(row, col)] = -img.coeff(r);
        }
    }
    let eig = Schur::new(m).eigenvalues().expect("complex Schur form is triangular");
    let mut vals: Vec<_> = eig.iter().copied().collect();
    sort_canonical(&mut vals);
    vals
}

/// `Δ²` that produces a given `q₀` at fixed `α`, `E`.
pub fn delta_squared_from_q0(
    alpha: ComplexScalar,
    params: &ModelParams,
    energy: ComplexScalar,
    q0: ComplexScalar,
) -> ComplexScalar {
    let no_delta = ode_coefficients_with_delta_sq(params, alpha, energy, cx(0.0));
    (no_delta.q0 - q0) * (params.lambda * params.lambda)
}

/// Physical reading of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Physicality {
    Physical,
    ComplexEnergy,
    ComplexDeltaSquared,
    NegativeDeltaSquared,
}

impl Physicality {
    pub fn classify(energy: ComplexScalar, delta_sq: ComplexScalar, tol: f64) -> Self {
        if delta_sq.im.abs() >= tol {
            Self::ComplexDeltaSquared
        } else if delta_sq.re < 0.0 {
            Self::NegativeDeltaSquared
        } else if energy.im.abs() >= tol {
            Self::ComplexEnergy
        } else {
            Self::Physical
        }
    }

    /// Real nonnegative `Δ²`, so that a real `Δ` exists.
    pub fn has_real_delta(self) -> bool {
        matches!(self, Self::Physical | Self::ComplexEnergy)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Physical => "PHYSICAL",
            Self::ComplexEnergy => "NONPHYSICAL_COMPLEX_E",
            Self::ComplexDeltaSquared => "NONPHYSICAL_COMPLEX_DELTA_SQ",
            Self::NegativeDeltaSquared => "NONPHYSICAL_NEGATIVE_DELTA_SQ",
        }
    }
}

/// A candidate quasi-exact solution with all of its checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheState {
    pub n: usize,
    pub alpha: AlphaBranch,
    pub energy: ComplexScalar,
    pub roots: Vec<ComplexScalar>,
    pub delta_sq_required: ComplexScalar,
    pub coefficients: OdeCoefficients,
    pub bae_residual: f64,
    pub sum_constraint_residual: f64,
    pub operator_residual: f64,
    pub sum_factor: SumFactor,
    pub physicality: Physicality,
    pub verified: bool,
}

impl BetheState {
    /// `+√Re Δ²` when `Δ²` is real and nonnegative.
    pub fn delta(&self) -> Option<f64> {
        self.physicality.has_real_delta().then(|| self.delta_sq_required.re.max(0.0).sqrt())
    }

    pub fn polynomial(&self) -> ComplexPolynomial {
        ComplexPolynomial::from_roots(&self.roots)
    }

    /// Model parameters with `Δ` set from the restriction, if real.
    pub fn params(&self, base: &ModelParams) -> Option<ModelParams> {
        self.delta().map(|d| base.with_delta(d))
    }
}

/// Assembles and checks a state from its level, branch and roots.
pub fn evaluate_state(
    n: usize,
    alpha: AlphaBranch,
    params: &ModelParams,
    roots: Vec<ComplexScalar>,
    cfg: &SolverConfig,
) -> Result<BetheState> {
    let energy = energy_level(n, alpha.value, params)?;
    let delta_sq = delta_squared(n, alpha.value, params, &roots, energy)?;
    let c = ode_coefficients_with_delta_sq(params, alpha.value, energy, delta_sq);
    let bae_residual = max_norm(&bae_residuals(&roots, &c)?);
    let sum_constraint_residual = sum_constraint(&roots, &c).norm();
    let op = operator_residual(&c, &ComplexPolynomial::from_roots(&roots));
    let physicality = Physicality::classify(energy, delta_sq, cfg.physical_tol);
    let sum_factor = SumFactor::classify(&roots, &c, cfg.verify_tol);
    let verified = bae_residual < cfg.verify_tol
        && sum_constraint_residual < cfg.verify_tol
        && op < cfg.verify_tol
        && alpha.quartic_residual < crate::alpha::QUARTIC_TOL;
    Ok(BetheState {
        n,
        alpha,
        energy,
        roots,
        delta_sq_required: delta_sq,
        coefficients: c,
        bae_residual,
        sum_constraint_residual,
        operator_residual: op,
        sum_factor,
        physicality,
        verified,
    })
}

/// Every root-set for level `n` on branch `alpha` that satisfies the sum
/// constraint, from both solvers, each fully re-checked. `params.delta` is
/// ignored: the restriction determines it.
pub fn solve_states(n: usize, alpha: AlphaBranch, params: &ModelParams, cfg: &SolverConfig) -> Result<Vec<BetheState>> {
    let energy = energy_level(n, alpha.value, params)?;
    let c = ode_coefficients_with_delta_sq(params, alpha.value, energy, cx(0.0));

    let mut sets: Vec<Vec<ComplexScalar>> = Vec::new();
    if n == 0 {
        sets.push(Vec::new());
    } else {
        match solve_bae(n, &c, cfg) {
            Ok(found) => sets.extend(found),
            Err(Error::NoConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
        for q0 in kernel_q0_values(n, &c) {
            let ck = OdeCoefficients { q0, ..c };
            if let Some(sol) = nullspace_oracle(n, &ck, cfg) {
                if min_pairwise(&sol.roots) > cfg.distinct_tol {
                    push_unique(&mut sets, sol.roots, cfg.dedup_tol);
                }
            }
        }
    }

    let mut states = Vec::new();
    for roots in sets {
        if sum_constraint(&roots, &c).norm() >= cfg.verify_tol {
            continue;
        }
        states.push(evaluate_state(n, alpha, params, roots, cfg)?);
    }
    states.sort_by(|a, b| cmp_root_sets(&a.roots, &b.roots));
    Ok(states)
}

/// Verified states of level `n` whose required `Δ²` is real and nonnegative.
///
/// `branch` must be admissible.
pub fn consistency_solve(
    n: usize,
    branch: AlphaBranch,
    omega: f64,
    lambda: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<Vec<BetheState>> {
    if !branch.admissible {
        return Err(Error::InvalidParameter(format!(
            "alpha branch {} is not admissible (|alpha| = {})",
            branch.index,
            branch.value.norm()
        )));
    }
    let params = ModelParams::new(0.0, epsilon, omega, lambda)?;
    Ok(solve_states(n, branch, &params, cfg)?
        .into_iter()
        .filter(|s| s.verified && s.physicality.has_real_delta())
        .collect())
}

/// Closed-form `(E, Δ²)` for the two lowest levels, with `z₁ = 0` for `n = 1`.
pub fn closed_form_level(n: usize, alpha: ComplexScalar, params: &ModelParams) -> Result<(ComplexScalar, ComplexScalar)> {
    match n {
        0 => {
            let e = ground_state_energy(alpha, params)?;
            Ok((e, ground_delta_squared(alpha, params, e)))
        }
        1 => {
            let e = first_excited_energy(alpha, params)?;
            Ok((e, first_delta_squared(alpha, params, e, cx(0.0))))
        }
        _ => Err(Error::InvalidParameter(format!("closed forms exist for n = 0, 1 only, got {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_closed_form;
    use crate::params::LambdaRatio;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> (ModelParams, AlphaBranch) {
        let p = ModelParams::new(0.0, 0.05, 1.0, 0.2).unwrap();
        let b = alpha_closed_form(LambdaRatio::new(0.2).unwrap()).unwrap()[1];
        (p, b)
    }

    #[test]
    fn energy_zeroes_q2_plus_n_p3() {
        let (p, b) = reference();
        for n in 0..6 {
            let e = energy_level(n, b.value, &p).unwrap();
            let k = ode_coefficients_with_delta_sq(&p, b.value, e, cx(0.3));
            assert!((k.q2 + k.p3 * n as f64).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_energy_denominator() {
        let (p, _) = reference();
        assert!(matches!(energy_level(0, c(0.0, 0.0), &p), Err(Error::SingularDenominator(_))));
        // 2αλ + ω = 0
        assert!(matches!(energy_level(1, c(-2.5, 0.0), &p), Err(Error::SingularDenominator(_))));
    }

    #[test]
    fn specialized_forms_agree() {
        let (p, b) = reference();
        let e0 = energy_level(0, b.value, &p).unwrap();
        assert!((e0 - ground_state_energy(b.value, &p).unwrap()).norm() < 1e-12 * e0.norm());
        let e1 = energy_level(1, b.value, &p).unwrap();
        assert!((e1 - first_excited_energy(b.value, &p).unwrap()).norm() < 1e-12 * e1.norm());
        let d0 = delta_squared(0, b.value, &p, &[], e0).unwrap();
        assert!((d0 - ground_delta_squared(b.value, &p, e0)).norm() < 1e-12 * d0.norm());
        let z = c(0.3, -0.2);
        let d1 = delta_squared(1, b.value, &p, &[z], e1).unwrap();
        assert!((d1 - first_delta_squared(b.value, &p, e1, z)).norm() < 1e-12 * d1.norm());
    }

    #[test]
    fn delta_squared_checks_root_count() {
        let (p, b) = reference();
        assert!(delta_squared(2, b.value, &p, &[c(1.0, 0.0)], c(0.0, 0.0)).is_err());
    }

    #[test]
    fn sum_constraint_examples() {
        let (p, b) = reference();
        let k = ode_coefficients_with_delta_sq(&p, b.value, c(0.1, 0.0), cx(0.0));
        assert_eq!(sum_constraint(&[], &k), cx(0.0));
        assert_eq!(sum_constraint(&[cx(0.0)], &k), cx(0.0));
        assert!(sum_constraint(&[c(0.7, 0.2), c(-0.7, -0.2)], &k).norm() < 1e-15);
    }

    #[test]
    fn bae_trivial_cases() {
        let (p, b) = reference();
        let k = ode_coefficients_with_delta_sq(&p, b.value, c(0.1, 0.0), cx(0.0));
        assert_eq!(bae_residuals(&[], &k).unwrap(), vec![]);
        assert_eq!(bae_residuals(&[cx(0.0)], &k).unwrap(), vec![cx(0.0)]);
        assert!(bae_residuals(&[cx(1.0), cx(1.0)], &k).is_err());
    }

    #[test]
    fn fast_residuals_match_tuple_sums() {
        let (p, b) = reference();
        let k = ode_coefficients_with_delta_sq(&p, b.value, c(0.4, 0.1), cx(0.0));
        let roots = [c(0.3, 0.1), c(-1.2, 0.4), c(0.5, -0.9), c(2.0, 0.3), c(-0.4, -0.6)];
        let slow = bae_residuals(&roots, &k).unwrap();
        let mut fast = vec![cx(0.0); roots.len()];
        bae_residuals_fast(&roots, &k, &mut fast);
        for (a, b) in slow.iter().zip(&fast) {
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn bae_residual_is_pole_residue_of_operator_image() {
        // residue of L[φ]/φ at z_i equals (L[φ] − q-terms·φ)(z_i)/φ'(z_i)
        let (p, b) = reference();
        let k = ode_coefficients_with_delta_sq(&p, b.value, c(0.4, 0.1), cx(0.0));
        let roots = [c(0.3, 0.1), c(-1.2, 0.4), c(0.5, -0.9), c(2.0, 0.3)];
        let phi = ComplexPolynomial::from_roots(&roots);
        let img = apply_operator(&k, &phi);
        let dphi = phi.derivative();
        let res = bae_residuals(&roots, &k).unwrap();
        for (z, r) in roots.iter().zip(&res) {
            let expected = img.eval(*z) / dphi.eval(*z);
            // φ(z_i) = 0 kills the potential terms; image at z_i is the residue times φ'(z_i)
            assert!((expected - r).norm() < 1e-9 * (1.0 + r.norm()));
        }
    }

    #[test]
    fn solve_bae_n1_contains_origin() {
        let (p, b) = reference();
        let e = energy_level(1, b.value, &p).unwrap();
        let k = ode_coefficients_with_delta_sq(&p, b.value, e, cx(0.0));
        let sets = solve_bae(1, &k, &SolverConfig::default()).unwrap();
        assert!(sets.iter().any(|s| s[0].norm() < 1e-12));
        let other = (-k.p1 / k.p3).sqrt();
        for s in &sets {
            let z = s[0];
            assert!(z.norm() < 1e-10 || (z - other).norm() < 1e-8 || (z + other).norm() < 1e-8);
        }
        assert!(solve_bae(0, &k, &SolverConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn nullspace_low_levels() {
        let (p, b) = reference();
        let cfg = SolverConfig::default();
        // n = 0: present iff q₂ and q₀ vanish
        let e0 = energy_level(0, b.value, &p).unwrap();
        let d0 = ground_delta_squared(b.value, &p, e0);
        let k = ode_coefficients_with_delta_sq(&p, b.value, e0, d0);
        let sol = nullspace_oracle(0, &k, &cfg).unwrap();
        assert!(sol.roots.is_empty());
        assert!(nullspace_oracle(0, &k.perturbed(7, cx(1e-3)), &cfg).is_none());

        // n = 1 with the restriction: root at the origin
        let e1 = energy_level(1, b.value, &p).unwrap();
        let d1 = first_delta_squared(b.value, &p, e1, cx(0.0));
        let k = ode_coefficients_with_delta_sq(&p, b.value, e1, d1);
        let sol = nullspace_oracle(1, &k, &cfg).unwrap();
        assert!(sol.roots[0].norm() < 1e-10);
        assert!(sol.defect < 1e-10);
    }

    #[test]
    fn kernel_q0_matches_restriction() {
        let (p, b) = reference();
        for n in 0..=4 {
            let e = energy_level(n, b.value, &p).unwrap();
            let k = ode_coefficients_with_delta_sq(&p, b.value, e, cx(0.0));
            let vals = kernel_q0_values(n, &k);
            assert_eq!(vals.len(), n / 2 + 1);
            for q0 in vals {
                let ck = OdeCoefficients { q0, ..k };
                let sol = nullspace_oracle(n, &ck, &SolverConfig::default()).expect("kernel exists");
                // q₀ = −p₃Σz² − n p₁ − n(n−1) b₂
                let s2: Complex64 = sol.roots.iter().map(|z| z * z).sum();
                let nf = n as f64;
                let book = -k.p3 * s2 - k.p1 * nf - k.b2 * (nf * (nf - 1.0));
                assert!((book - q0).norm() < 1e-9 * (1.0 + q0.norm()));
                // and the Δ² restriction reproduces the same q₀
                let dsq = delta_squared(n, b.value, &p, &sol.roots, e).unwrap();
                let via = delta_squared_from_q0(b.value, &p, e, q0);
                assert!((dsq - via).norm() < 1e-9 * (1.0 + dsq.norm()));
            }
        }
    }

    #[test]
    fn states_are_verified_and_parity_symmetric() {
        let (p, b) = reference();
        let cfg = SolverConfig::default();
        for n in 0..=4 {
            let states = solve_states(n, b, &p, &cfg).unwrap();
            assert_eq!(states.len(), n / 2 + 1, "n = {n}");
            for s in &states {
                assert!(s.verified, "n = {n}: {s:?}");
                assert!(matches!(s.sum_factor, SumFactor::Empty | SumFactor::RootSum));
            }
        }
    }

    #[test]
    fn physicality_labels() {
        assert_eq!(Physicality::classify(cx(1.0), cx(0.5), 1e-8), Physicality::Physical);
        assert_eq!(Physicality::classify(c(1.0, 0.1), cx(0.5), 1e-8), Physicality::ComplexEnergy);
        assert_eq!(Physicality::classify(cx(1.0), cx(-0.5), 1e-8), Physicality::NegativeDeltaSquared);
        assert_eq!(Physicality::classify(cx(1.0), c(0.5, 0.1), 1e-8), Physicality::ComplexDeltaSquared);
    }

    #[test]
    fn negative_delta_sq_gives_no_consistent_state() {
        // Δ² < 0 on α₂ at λ = 0.2, ε = 0.05
        let (p, b) = reference();
        let e0 = energy_level(0, b.value, &p).unwrap();
        assert!(ground_delta_squared(b.value, &p, e0).re < 0.0);
        let out = consistency_solve(0, b, 1.0, 0.2, 0.05, &SolverConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn inadmissible_branch_rejected() {
        let b = alpha_closed_form(LambdaRatio::new(0.2).unwrap()).unwrap()[0];
        assert!(!b.admissible);
        assert!(consistency_solve(0, b, 1.0, 0.2, 0.05, &SolverConfig::default()).is_err());
    }
}
