//! Gauge exponents α that remove the `z⁴` potential term.
//!
//! With `Λ = λ/ω` the condition `q₄ = 0` is the quartic
//!
//! ```text
//! (16α⁴ + 4α² + 1)Λ² − 4α² + 2αΛ = 0
//! ```
//!
//! Its four roots are available in radicals through two helper values `f(Λ)`
//! (a cube root) and `h(Λ)` (a square root). The radical route uses principal
//! branches and every candidate is validated by substitution; the companion
//! matrix of the monic quartic gives an independent route to the same set.
//!
//! A branch is admissible when `|α| < 1/2`: then `exp(αz²)` times a polynomial
//! has finite Bargmann norm, since `2Re[αz²] − |z|² ≤ (2|α| − 1)|z|²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::LambdaRatio;
use crate::poly::ComplexPolynomial;
use crate::roots::{min_cost_matching, polynomial_roots};
use crate::ComplexScalar;

/// Quartic residual allowed for an emitted branch.
pub const QUARTIC_TOL: f64 = 1e-9;

/// Magnitude below which `f` or `h` counts as a branch point.
pub const BRANCH_POINT_TOL: f64 = 1e-12;

/// Reference coupling from which branch labels are continued.
pub const REFERENCE_LAMBDA: f64 = 0.2;

/// Step of the continuation path used to label branches away from the reference.
pub const CONTINUATION_STEP: f64 = 2e-3;

/// One root `α_i(Λ)` of the gauge quartic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBranch {
    /// 1-based branch label.
    pub index: usize,
    pub value: ComplexScalar,
    pub quartic_residual: f64,
    pub admissible: bool,
}

impl AlphaBranch {
    pub fn new(index: usize, value: ComplexScalar, lambda: LambdaRatio) -> Self {
        Self {
            index,
            value,
            quartic_residual: quartic_residual(value, lambda),
            admissible: admissible(value),
        }
    }
}

/// Coefficients of the gauge quartic in ascending powers of α.
pub fn quartic_polynomial(lambda: LambdaRatio) -> ComplexPolynomial {
    let l = lambda.value();
    ComplexPolynomial::from_real(&[l * l, 2.0 * l, 4.0 * l * l - 4.0, 0.0, 16.0 * l * l])
}

pub fn quartic_residual(alpha: ComplexScalar, lambda: LambdaRatio) -> f64 {
    let l = lambda.value();
    let a2 = alpha * alpha;
    ((a2 * a2 * 16.0 + a2 * 4.0 + 1.0) * (l * l) - a2 * 4.0 + alpha * (2.0 * l)).norm()
}

/// `|α| < 1/2`, strictly.
pub fn admissible(alpha: ComplexScalar) -> bool {
    alpha.norm() < 0.5
}

fn principal_sqrt_real(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

fn principal_cbrt(z: Complex64) -> Complex64 {
    let (r, theta) = z.to_polar();
    Complex64::from_polar(r.cbrt(), theta / 3.0)
}

/// The radicand whose principal cube root is `f(Λ)`.
pub fn f_radicand(lambda: LambdaRatio) -> Complex64 {
    let l2 = lambda.value().powi(2);
    let l4 = l2 * l2;
    let l6 = l4 * l2;
    let inner = 144.0 * l4 * l4 + 332.0 * l6 - 191.0 * l4 - 76.0 * l2 + 20.0;
    let disc = principal_sqrt_real(-l4 * inner);
    Complex64::new(-35.0 * l6 + 46.5 * l4 + 3.0 * l2 - 1.0, 0.0) + disc * (1.5 * 3f64.sqrt())
}

/// Principal cube root of the resolvent radicand.
pub fn f_of_lambda(lambda: LambdaRatio) -> Result<Complex64> {
    let f = principal_cbrt(f_radicand(lambda));
    if f.norm() < BRANCH_POINT_TOL {
        return Err(Error::BranchPoint { lambda: lambda.value(), what: "f(Lambda) vanishes" });
    }
    Ok(f)
}

/// `h² = 2(−2Λ²f + f² + 2f + 13Λ⁴ − 2Λ² + 1)/(Λ²f)`, principal square root.
pub fn h_of_lambda(lambda: LambdaRatio) -> Result<Complex64> {
    let f = f_of_lambda(lambda)?;
    h_from_f(lambda, f)
}

fn h_from_f(lambda: LambdaRatio, f: Complex64) -> Result<Complex64> {
    let l2 = lambda.value().powi(2);
    let h_sq = (f * (-2.0 * l2) + f * f + f * 2.0 + (13.0 * l2 * l2 - 2.0 * l2 + 1.0)) * 2.0 / (f * l2);
    let h = h_sq.sqrt();
    if h.norm() < BRANCH_POINT_TOL {
        return Err(Error::BranchPoint { lambda: lambda.value(), what: "h(Lambda) vanishes" });
    }
    Ok(h)
}

/// Closed-form roots in radicals, labelled 1–4.
///
/// `α₁,₂ = −h/(4√6) ∓ √(…)` and `α₃,₄ = +h/(4√6) ∓ √(…)`, the first label of
/// each pair taking the upper sign.
pub fn alpha_closed_form(lambda: LambdaRatio) -> Result<[AlphaBranch; 4]> {
    let l = lambda.value();
    let l2 = l * l;
    let f = f_of_lambda(lambda)?;
    let h = h_from_f(lambda, f)?;
    let sqrt6 = 6f64.sqrt();

    let shared = h * (f * (4.0 * (l2 - 1.0)) + f * f + (13.0 * l2 * l2 - 2.0 * l2 + 1.0));
    let denom = f * h * (48.0 * l2);
    let twist = f * (6.0 * sqrt6 * l);
    let root_12 = ((twist - shared) / denom).sqrt();
    let root_34 = ((-twist - shared) / denom).sqrt();
    let centre = h / (4.0 * sqrt6);

    let values = [-centre - root_12, -centre + root_12, centre - root_34, centre + root_34];
    let mut out = [AlphaBranch::new(1, values[0], lambda); 4];
    for (k, &v) in values.iter().enumerate() {
        let b = AlphaBranch::new(k + 1, v, lambda);
        if !(b.quartic_residual < QUARTIC_TOL) {
            return Err(Error::ValidationFailure { index: k + 1, residual: b.quartic_residual });
        }
        out[k] = b;
    }
    Ok(out)
}

/// Companion-matrix roots of the gauge quartic (unlabelled, canonical order).
pub fn alpha_companion(lambda: LambdaRatio) -> Vec<ComplexScalar> {
    polynomial_roots(&quartic_polynomial(lambda))
}

/// Labelled branches at `lambda`: closed form when it validates, otherwise
/// companion roots labelled by continuation.
pub fn alpha_branches(lambda: LambdaRatio) -> [AlphaBranch; 4] {
    alpha_closed_form(lambda).unwrap_or_else(|_| continued_branches(lambda))
}

/// Branches at `lambda` labelled by continuation from the closed-form labels
/// at `±REFERENCE_LAMBDA` (sign matched to `lambda`).
///
/// Labels stay glued to smooth curves through root collisions, which the
/// radical branches do not guarantee.
pub fn continued_branches(lambda: LambdaRatio) -> [AlphaBranch; 4] {
    let target = lambda.value();
    let start = REFERENCE_LAMBDA.copysign(target);
    let steps = ((target - start).abs() / CONTINUATION_STEP).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| start + (target - start) * k as f64 / steps as f64)
        .collect();
    *track_branches(&grid).last().expect("grid is nonempty")
}

/// Within a complex-conjugate pair the lower label takes `Im α ≤ 0`; matching
/// alone cannot tell the two apart right after they leave the real axis.
fn order_conjugate_pairs(b: &mut [AlphaBranch; 4], lambda: LambdaRatio) {
    for i in 0..4 {
        for j in i + 1..4 {
            let (u, v) = (b[i].value, b[j].value);
            let paired = u.im.abs() > 1e-12 && (u - v.conj()).norm() <= 1e-8 * (1.0 + u.norm());
            if paired && u.im > v.im {
                b[i] = AlphaBranch::new(i + 1, v, lambda);
                b[j] = AlphaBranch::new(j + 1, u, lambda);
            }
        }
    }
}

/// Branch values along `grid`, labelled at the first point by the closed form
/// (or companion order if that fails) and then by minimal-displacement matching
/// between consecutive points, with conjugate pairs ordered by
/// `order_conjugate_pairs`. Grid points must be nonzero.
pub fn track_branches(grid: &[f64]) -> Vec<[AlphaBranch; 4]> {
    let mut out: Vec<[AlphaBranch; 4]> = Vec::with_capacity(grid.len());
    for &l in grid {
        let lambda = LambdaRatio::new(l).expect("grid excludes zero");
        let mut next = match out.last() {
            None => match alpha_closed_form(lambda) {
                Ok(b) => b,
                Err(_) => companion_labelled(lambda),
            },
            Some(prev) => {
                let roots = alpha_companion(lambda);
                let prev_vals: Vec<_> = prev.iter().map(|b| b.value).collect();
                let perm = min_cost_matching(&prev_vals, &roots);
                let mut b = [AlphaBranch::new(1, roots[0], lambda); 4];
                for (i, &j) in perm.iter().enumerate() {
                    b[i] = AlphaBranch::new(i + 1, roots[j], lambda);
                }
                b
            }
        };
        order_conjugate_pairs(&mut next, lambda);
        out.push(next);
    }
    out
}

fn companion_labelled(lambda: LambdaRatio) -> [AlphaBranch; 4] {
    let roots = alpha_companion(lambda);
    let mut b = [AlphaBranch::new(1, roots[0], lambda); 4];
    for (k, &r) in roots.iter().enumerate() {
        b[k] = AlphaBranch::new(k + 1, r, lambda);
    }
    b
}

/// Zeros in `Λ > 0` of `144Λ⁸ + 332Λ⁶ − 191Λ⁴ − 76Λ² + 20`, where pairs of
/// roots collide.
pub fn collision_points() -> Vec<f64> {
    let p = ComplexPolynomial::from_real(&[20.0, -76.0, -191.0, 332.0, 144.0]);
    let mut pts: Vec<f64> = polynomial_roots(&p)
        .into_iter()
        .filter(|r| r.im.abs() < 1e-12 && r.re > 0.0)
        .map(|r| r.re.sqrt())
        .collect();
    pts.sort_by(f64::total_cmp);
    pts
}

/// Radial Gauss–Legendre order of the default quadrature.
pub const RADIAL_NODES: usize = 400;
/// Angular trapezoid order of the default quadrature.
pub const ANGULAR_NODES: usize = 256;

/// `(1/π)∫_{|z|≤R} |φ(z)|² exp(2Re[αz²] − |z|²) d²z` on a polar tensor grid.
pub fn normalizability_integral(alpha: ComplexScalar, phi: &ComplexPolynomial, radius: f64) -> f64 {
    normalizability_integral_with(alpha, phi, radius, RADIAL_NODES, ANGULAR_NODES)
}

pub fn normalizability_integral_with(
    alpha: ComplexScalar,
    phi: &ComplexPolynomial,
    radius: f64,
    radial: usize,
    angular: usize,
) -> f64 {
    assert!(radius > 0.0, "radius must be positive");
    let (nodes, weights) = gauss_legendre(radial);
    let dtheta = 2.0 * PI / angular as f64;
    let mut total = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let r = 0.5 * radius * (x + 1.0);
        let wr = 0.5 * radius * w * r;
        let mut ring = 0.0;
        for k in 0..angular {
            let z = Complex64::from_polar(r, k as f64 * dtheta);
            let weight = (2.0 * (alpha * z * z).re - r * r).exp();
            ring += phi.eval(z).norm_sqr() * weight;
        }
        total += wr * ring * dtheta;
    }
    total / PI
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
