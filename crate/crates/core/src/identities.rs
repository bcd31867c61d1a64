//! Symmetric sums over distinct root tuples.
//!
//! For pairwise-distinct roots `z_1..z_n`
//!
//! * `S1 = Σ_i Σ_{j≠i} 1/(z_i - z_j)` vanishes,
//! * `S2 = Σ_i Σ_{j≠i} z_i/(z_i - z_j)` equals `n(n-1)/2`,
//! * `S3 = Σ_i Σ_{ℓ≠j≠i} 1/((z_i - z_ℓ)(z_i - z_j))` vanishes,
//!
//! where the inner sums of `S3` run over ordered pairs of distinct indices.
//! These collapse the pole expansion of `L[φ]/φ` into a polynomial identity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ComplexScalar;

/// Two roots closer than this are treated as coincident.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSums {
    pub s1: ComplexScalar,
    pub s2: ComplexScalar,
    pub s3: ComplexScalar,
}

/// Fails with `DegenerateRoots` if any two roots are within `tol`.
pub fn check_distinct(roots: &[ComplexScalar], tol: f64) -> Result<()> {
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            if (roots[i] - roots[j]).norm() <= tol {
                return Err(Error::DegenerateRoots { i, j, tol });
            }
        }
    }
    Ok(())
}

pub fn symmetric_sums(roots: &[ComplexScalar]) -> Result<SymmetricSums> {
    check_distinct(roots, DEGENERACY_TOL)?;
    let zero = Complex64::new(0.0, 0.0);
    let (mut s1, mut s2, mut s3) = (zero, zero, zero);
    for (i, &zi) in roots.iter().enumerate() {
        for (j, &zj) in roots.iter().enumerate() {
            if j == i {
                continue;
            }
            let inv = (zi - zj).inv();
            s1 += inv;
            s2 += zi * inv;
            for (l, &zl) in roots.iter().enumerate() {
                if l == i || l == j {
                    continue;
                }
                s3 += inv * (zi - zl).inv();
            }
        }
    }
    Ok(SymmetricSums { s1, s2, s3 })
}
