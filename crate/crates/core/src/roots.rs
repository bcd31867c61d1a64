//! Polynomial roots as companion-matrix eigenvalues.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::poly::ComplexPolynomial;
use crate::ComplexScalar;

/// Companion matrix of the monic polynomial `p / lead(p)`.
///
/// Returns `None` for constants (no roots).
pub fn companion_matrix(p: &ComplexPolynomial) -> Option<DMatrix<Complex64>> {
    let n = p.degree()?;
    if n == 0 {
        return None;
    }
    let lead = p.coeff(n);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p.coeff(i) / lead;
    }
    Some(m)
}

/// All complex roots (with multiplicity), each polished by a few Newton steps
/// on the original polynomial. Empty for constants.
pub fn polynomial_roots(p: &ComplexPolynomial) -> Vec<ComplexScalar> {
    let Some(m) = companion_matrix(p) else {
        return Vec::new();
    };
    let n = m.nrows();
    let eig = Schur::new(m)
        .eigenvalues()
        .expect("Schur form of a complex matrix is triangular");
    let dp = p.derivative();
    let mut roots: Vec<_> = (0..n).map(|i| polish(p, &dp, eig[i])).collect();
    sort_canonical(&mut roots);
    roots
}

fn polish(p: &ComplexPolynomial, dp: &ComplexPolynomial, mut z: Complex64) -> Complex64 {
    let mut best = (p.eval(z).norm(), z);
    for _ in 0..4 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        z -= p.eval(z) / d;
        let r = p.eval(z).norm();
        if !r.is_finite() {
            break;
        }
        if r < best.0 {
            best = (r, z);
        }
    }
    best.1
}

/// Sort by real part, then imaginary part.
pub fn sort_canonical(roots: &mut [ComplexScalar]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Hausdorff distance between two finite point sets in the complex plane.
pub fn hausdorff(a: &[ComplexScalar], b: &[ComplexScalar]) -> f64 {
    let directed = |x: &[ComplexScalar], y: &[ComplexScalar]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    directed(a, b).max(directed(b, a))
}

/// Minimal total displacement matching: for each element of `prev` returns the
/// index into `next` it maps to. Exhaustive over permutations, so only meant
/// for the small (≤ 6) sets used in branch tracking and root comparison.
pub fn min_cost_matching(prev: &[ComplexScalar], next: &[ComplexScalar]) -> Vec<usize> {
    assert_eq!(prev.len(), next.len());
    let n = prev.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| (prev[i] - next[j]).norm()).sum();
        if cost < best.0 {
            best = (cost, p.to_vec());
        }
    });
    best.1
}

fn permute(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Largest distance between matched elements under the optimal matching.
pub fn matched_distance(a: &[ComplexScalar], b: &[ComplexScalar]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let m = min_cost_matching(a, b);
    m.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max)
}
