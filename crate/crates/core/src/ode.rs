//! The fourth-order Bargmann-space operator and its Gaussian gauge.
//!
//! After `φ₁ = exp(αz²)φ` the scalar equation for the first spinor component
//! becomes
//!
//! ```text
//! L[φ] = φ'''' + a₁zφ''' + (b₂z² + b₀)φ'' + (p₃z³ + p₁z)φ' + (q₄z⁴ + q₂z² + q₀)φ = 0
//! ```
//!
//! All coefficients are dimensionless. The operator is applied in coefficient
//! space, so `L[φ] ≡ 0` can be checked without sampling.

use num_complex::Complex64;

use crate::params::ModelParams;
use crate::poly::ComplexPolynomial;
use crate::ComplexScalar;

/// Coefficients of the gauge-transformed operator, together with the `α` and
/// `E` they were built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeCoefficients {
    pub alpha: ComplexScalar,
    pub energy: ComplexScalar,
    pub a1: ComplexScalar,
    pub b2: ComplexScalar,
    pub b0: ComplexScalar,
    pub p3: ComplexScalar,
    pub p1: ComplexScalar,
    pub q4: ComplexScalar,
    pub q2: ComplexScalar,
    pub q0: ComplexScalar,
}

impl OdeCoefficients {
    pub fn as_array(&self) -> [ComplexScalar; 8] {
        [self.a1, self.b2, self.b0, self.p3, self.p1, self.q4, self.q2, self.q0]
    }

    pub const NAMES: [&'static str; 8] = ["a1", "b2", "b0", "p3", "p1", "q4", "q2", "q0"];

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Copy with the coefficient at `slot` (order of [`Self::NAMES`]) shifted by `delta`.
    pub fn perturbed(mut self, slot: usize, delta: ComplexScalar) -> Self {
        match slot {
            0 => self.a1 += delta,
            1 => self.b2 += delta,
            2 => self.b0 += delta,
            3 => self.p3 += delta,
            4 => self.p1 += delta,
            5 => self.q4 += delta,
            6 => self.q2 += delta,
            7 => self.q0 += delta,
            _ => panic!("coefficient slot {slot} out of range"),
        }
        self
    }
}

/// Coefficients after the gauge `exp(αz²)`, evaluated term by term.
pub fn ode_coefficients(params: &ModelParams, alpha: ComplexScalar, energy: ComplexScalar) -> OdeCoefficients {
    let delta_sq = Complex64::new(params.delta * params.delta, 0.0);
    ode_coefficients_with_delta_sq(params, alpha, energy, delta_sq)
}

/// As [`ode_coefficients`], with `Δ²` supplied directly (possibly complex)
/// instead of taken from `params.delta`.
pub fn ode_coefficients_with_delta_sq(
    params: &ModelParams,
    alpha: ComplexScalar,
    energy: ComplexScalar,
    delta_sq: ComplexScalar,
) -> OdeCoefficients {
    let ModelParams { epsilon: eps, omega: w, lambda: l, .. } = *params;
    let a = alpha;
    let e = energy;
    let a2 = a * a;
    let a3 = a2 * a;
    let l2 = l * l;
    let w2 = w * w;

    let a1 = a * 8.0;
    let b2 = a2 * 24.0 - w2 / l2 + 1.0;
    let b0 = (a * (12.0 * l) + e + 2.0 * w + eps) / l;
    let p3 = a3 * 32.0 + a * (4.0 - 4.0 * w2 / l2) + w / l;
    let p1 = (a * (4.0 * l) + w) * (a * (12.0 * l) + e - w + eps) / l2;
    let q4 = (a2 * (-4.0 * w2) + (a2 * a2 * 16.0 + a2 * 4.0 + 1.0) * l2 + a * (2.0 * l * w)) / l2;
    let q2 = ((a2 * (2.0 * eps) + a * (a * 2.0 * (a * (12.0 * l) + e) + l) + eps) * (2.0 * l)
        - a * (4.0 * w2)
        + (a * (a * (4.0 * l) + e + eps) - l) * (2.0 * w))
        / l2;
    let q0 = ((a * (a * (6.0 * l) + e + 2.0 * w) + l) * (2.0 * l) + a * (2.0 * l * eps) - delta_sq - e * e
        + eps * eps)
        / l2;

    OdeCoefficients { alpha, energy, a1, b2, b0, p3, p1, q4, q2, q0 }
}

/// Coefficients of the untransformed equation for `φ₁` (the `α = 0` gauge).
pub fn untransformed_coefficients(params: &ModelParams, energy: ComplexScalar) -> OdeCoefficients {
    let ModelParams { delta, epsilon: eps, omega: w, lambda: l } = *params;
    let e = energy;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    OdeCoefficients {
        alpha: zero,
        energy,
        a1: zero,
        b2: one * (1.0 - w * w / (l * l)),
        b0: (e + 2.0 * w + eps) / l,
        p3: one * (w / l),
        p1: (w * (e + eps) - w * w) / (l * l),
        q4: one,
        q2: one * (2.0 * (eps - w) / l),
        q0: (-e * e + 2.0 * l * l + eps * eps - delta * delta) / (l * l),
    }
}

/// `L[φ]`, exact in coefficient space.
pub fn apply_operator(c: &OdeCoefficients, phi: &ComplexPolynomial) -> ComplexPolynomial {
    let d1 = phi.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let d4 = d3.derivative();

    let terms = [
        d4,
        d3.shift(1).scale(c.a1),
        &d2.shift(2).scale(c.b2) + &d2.scale(c.b0),
        &d1.shift(3).scale(c.p3) + &d1.shift(1).scale(c.p1),
        &(&phi.shift(4).scale(c.q4) + &phi.shift(2).scale(c.q2)) + &phi.scale(c.q0),
    ];
    terms.iter().fold(ComplexPolynomial::zero(), |acc, t| &acc + t)
}

/// Largest coefficient of `p`, divided by `1 + input_scale`.
///
/// `input_scale` is the magnitude of whatever produced `p`, typically the
/// product of the largest operator coefficient and the largest coefficient of
/// the polynomial it acted on.
pub fn residual_norm(p: &ComplexPolynomial, input_scale: f64) -> f64 {
    p.max_abs() / (1.0 + input_scale)
}

/// Scale-normalized residual of `L[φ]`.
pub fn operator_residual(c: &OdeCoefficients, phi: &ComplexPolynomial) -> f64 {
    residual_norm(&apply_operator(c, phi), c.max_abs() * phi.max_abs())
}

/// `φ₁^(k)(z) / exp(αz²)` for `k = 0..=4`, with `φ₁ = exp(αz²)φ`.
///
/// With `u = 2αz`:
/// `P₁ = φ' + uφ`,
/// `P₂ = φ'' + 2uφ' + (u² + 2α)φ`,
/// `P₃ = φ''' + 3uφ'' + 3(u² + 2α)φ' + (u³ + 6αu)φ`,
/// `P₄ = φ'''' + 4uφ''' + 6(u² + 2α)φ'' + 4(u³ + 6αu)φ' + (u⁴ + 12αu² + 12α²)φ`.
pub fn gauge_derivatives(alpha: ComplexScalar, phi: &ComplexPolynomial, z: ComplexScalar) -> [ComplexScalar; 5] {
    let d: Vec<ComplexScalar> = (0..=4).map(|k| phi.nth_derivative(k).eval(z)).collect();
    let a = alpha;
    let u = a * z * 2.0;
    let u2 = u * u;
    let u3 = u2 * u;
    [
        d[0],
        d[1] + u * d[0],
        d[2] + u * d[1] * 2.0 + (u2 + a * 2.0) * d[0],
        d[3] + u * d[2] * 3.0 + (u2 + a * 2.0) * d[1] * 3.0 + (u3 + a * u * 6.0) * d[0],
        d[4] + u * d[3] * 4.0
            + (u2 + a * 2.0) * d[2] * 6.0
            + (u3 + a * u * 6.0) * d[1] * 4.0
            + (u2 * u2 + a * u2 * 12.0 + a * a * 12.0) * d[0],
    ]
}

/// Left side of the untransformed fourth-order equation at `z`, for
/// `φ₁(z) = exp(αz²)φ(z)`.
pub fn raw_residual_pointwise(
    params: &ModelParams,
    energy: ComplexScalar,
    alpha: ComplexScalar,
    phi: &ComplexPolynomial,
    z: ComplexScalar,
) -> ComplexScalar {
    let c = untransformed_coefficients(params, energy);
    let g = (alpha * z * z).exp();
    let [f0, f1, f2, _f3, f4] = gauge_derivatives(alpha, phi, z).map(|x| x * g);
    let z2 = z * z;
    f4 + (c.b2 * z2 + c.b0) * f2 + (c.p3 * z2 * z + c.p1 * z) * f1 + (c.q4 * z2 * z2 + c.q2 * z2 + c.q0) * f0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::{alpha_closed_form, quartic_residual};
    use crate::params::LambdaRatio;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
        c(rng.random_range(-r..r), rng.random_range(-r..r))
    }

    #[test]
    fn hand_evaluated_coefficients() {
        // ω=1, λ=0.2, ε=0, E=0, α=0.1
        let p = ModelParams::new(0.0, 0.0, 1.0, 0.2).unwrap();
        let k = ode_coefficients(&p, c(0.1, 0.0), c(0.0, 0.0));
        assert!((k.a1 - c(0.8, 0.0)).norm() < 1e-13);
        assert!((k.b2 - c(-23.76, 0.0)).norm() < 1e-12);
        // (12·0.1·0.2 + 0 + 2 + 0)/0.2
        assert!((k.b0 - c(11.2, 0.0)).norm() < 1e-12);
        assert!((k.p3 - c(-4.568, 0.0)).norm() < 1e-12);
        // p₁ = (0.08 + 1)(0.24 − 1)/0.04
        assert!((k.p1 - c(-20.52, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_identity_gauge() {
        let p = ModelParams::new(0.7, -0.3, 1.3, 0.25).unwrap();
        let e = c(0.4, 0.1);
        let k = ode_coefficients(&p, c(0.0, 0.0), e);
        let r = untransformed_coefficients(&p, e);
        for (x, y) in k.as_array().iter().zip(r.as_array()) {
            assert!((x - y).norm() <= 1e-14 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn q4_vanishes_on_quartic_roots() {
        let p = ModelParams::new(1.0, 0.05, 1.0, 0.2).unwrap();
        let l = LambdaRatio::new(0.2).unwrap();
        for b in alpha_closed_form(l).unwrap() {
            assert!(quartic_residual(b.value, l) < 1e-9);
            let k = ode_coefficients(&p, b.value, c(0.3, 0.0));
            assert!(k.q4.norm() < 1e-9);
        }
    }

    #[test]
    fn operator_simple_inputs() {
        let p = ModelParams::new(0.5, 0.1, 1.0, 0.3).unwrap();
        let k = ode_coefficients(&p, c(0.1, 0.02), c(0.2, 0.0));
        assert!(apply_operator(&k, &ComplexPolynomial::zero()).is_zero());
        let img = apply_operator(&k, &ComplexPolynomial::one());
        assert_eq!(img.coeff(4), k.q4);
        assert_eq!(img.coeff(2), k.q2);
        assert_eq!(img.coeff(0), k.q0);
        assert_eq!(img.coeff(1), c(0.0, 0.0));

        let k0 = OdeCoefficients { q4: c(0.0, 0.0), ..k };
        let z = ComplexPolynomial::from_real(&[0.0, 1.0]);
        let img = apply_operator(&k0, &z);
        assert_eq!(img.degree(), Some(3));
        assert!((img.coeff(3) - (k.p3 + k.q2)).norm() < 1e-15);
        assert!((img.coeff(1) - (k.p1 + k.q0)).norm() < 1e-15);
    }

    #[test]
    fn residual_norm_examples() {
        assert_eq!(residual_norm(&ComplexPolynomial::zero(), 3.0), 0.0);
        let z2 = ComplexPolynomial::monomial(c(1.0, 0.0), 2);
        assert_eq!(residual_norm(&(&z2 - &z2), 1.0), 0.0);
        assert_eq!(residual_norm(&ComplexPolynomial::from_real(&[2.0, -4.0]), 1.0), 2.0);
    }

    #[test]
    fn raw_residual_at_origin() {
        let p = ModelParams::new(0.9, 0.2, 1.0, 0.3).unwrap();
        let e = c(0.1, 0.0);
        let r = raw_residual_pointwise(&p, e, c(0.0, 0.0), &ComplexPolynomial::one(), c(0.0, 0.0));
        let expected = (2.0 * 0.09 + 0.04 - 0.01 - 0.81) / 0.09;
        assert!((r - c(expected, 0.0)).norm() < 1e-14);
        assert!(r.norm() > 0.0);

        // any α: gauge-transformed operator at the origin
        let a = c(0.13, -0.07);
        let r = raw_residual_pointwise(&p, e, a, &ComplexPolynomial::one(), c(0.0, 0.0));
        let k = ode_coefficients(&p, a, e);
        let img = apply_operator(&k, &ComplexPolynomial::one());
        assert!((r - img.eval(c(0.0, 0.0))).norm() < 1e-12);
    }

    #[test]
    fn gauge_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..20 {
            let a = rand_c(&mut rng, 0.4);
            let phi = ComplexPolynomial::new((0..5).map(|_| rand_c(&mut rng, 1.0)).collect());
            let z = rand_c(&mut rng, 1.5);
            let full = |z: Complex64, k: usize| gauge_derivatives(a, &phi, z)[k] * (a * z * z).exp();
            for k in 1..=4 {
                let fd = (full(z + h, k - 1) - full(z - h, k - 1)) / (2.0 * h);
                let exact = full(z, k);
                assert!((fd - exact).norm() <= 1e-6 * (1.0 + exact.norm()), "order {k}");
            }
        }
    }

    #[test]
    fn gauge_consistency_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = ModelParams::new(
                rng.random_range(0.0..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..2.0),
                rng.random_range(0.05..0.6),
            )
            .unwrap();
            let a = rand_c(&mut rng, 0.45);
            let e = rand_c(&mut rng, 2.0);
            let deg = rng.random_range(0..=6);
            let phi = ComplexPolynomial::new((0..=deg).map(|_| rand_c(&mut rng, 1.0)).collect());
            let img = apply_operator(&ode_coefficients(&p, a, e), &phi);
            for _ in 0..20 {
                let z = rand_c(&mut rng, 1.5);
                let raw = raw_residual_pointwise(&p, e, a, &phi, z);
                let via = (a * z * z).exp() * img.eval(z);
                assert!((raw - via).norm() <= 1e-8 * (1.0 + via.norm()));
            }
        }
    }

    #[test]
    fn degree_drops_when_q4_vanishes() {
        let p = ModelParams::new(1.0, 0.05, 1.0, 0.2).unwrap();
        let b = alpha_closed_form(LambdaRatio::new(0.2).unwrap()).unwrap();
        let mut k = ode_coefficients(&p, b[1].value, c(0.3, 0.0));
        k.q4 = c(0.0, 0.0);
        let phi = ComplexPolynomial::from_roots(&[c(0.3, 0.1), c(-1.0, 0.0), c(0.2, 0.5)]);
        assert!(apply_operator(&k, &phi).degree().unwrap() <= 5);
    }
}
