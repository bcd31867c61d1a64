//! Truncated Fock-space oracle.
//!
//! The rotated Hamiltonian `H = Δσx + εσz + ω a†a + λσz(a†² + a²)` is
//! assembled in the basis `|m⟩⊗|s⟩`, `m = 0..=N`, `s ∈ {↑, ↓}` (σz eigenbasis),
//! ordered m-major, spin-minor: index `2m + s` with `s = 0` for ↑. Its spectrum
//! equals that of the unrotated model because the two differ by the unitary
//! `(σz + σx)/√2`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Default truncation ladder of the convergence protocol.
pub const TRUNCATION_LADDER: [usize; 3] = [40, 80, 160];

/// Coupling ratio at and beyond which the two-photon spectrum collapses.
pub const COLLAPSE_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix {
    pub truncation: usize,
    pub entries: DMatrix<f64>,
}

impl FockMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn index(m: usize, spin_down: bool) -> usize {
        2 * m + usize::from(spin_down)
    }
}

fn check_truncation(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidTruncation(n));
    }
    Ok(())
}

/// `Δσx + εσz + ω a†a + λσz(a†² + a²)` truncated at `N` bosons.
pub fn build_hamiltonian(params: &ModelParams, truncation: usize) -> Result<FockMatrix> {
    check_truncation(truncation)?;
    let n = truncation;
    let dim = 2 * (n + 1);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..=n {
        for (s, sign) in [(false, 1.0), (true, -1.0)] {
            let i = FockMatrix::index(m, s);
            h[(i, i)] = m as f64 * params.omega + sign * params.epsilon;
            if m + 2 <= n {
                let j = FockMatrix::index(m + 2, s);
                let v = sign * params.lambda * (((m + 1) * (m + 2)) as f64).sqrt();
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let (up, down) = (FockMatrix::index(m, false), FockMatrix::index(m, true));
        h[(up, down)] = params.delta;
        h[(down, up)] = params.delta;
    }
    Ok(FockMatrix { truncation, entries: h })
}

/// The unrotated form `Δσz + εσx + ω a†a + λσx(a†² + a²)` in the same basis.
pub fn build_unrotated_hamiltonian(params: &ModelParams, truncation: usize) -> Result<FockMatrix> {
    check_truncation(truncation)?;
    let n = truncation;
    let dim = 2 * (n + 1);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..=n {
        let (up, down) = (FockMatrix::index(m, false), FockMatrix::index(m, true));
        h[(up, up)] = m as f64 * params.omega + params.delta;
        h[(down, down)] = m as f64 * params.omega - params.delta;
        h[(up, down)] = params.epsilon;
        h[(down, up)] = params.epsilon;
        if m + 2 <= n {
            let v = params.lambda * (((m + 1) * (m + 2)) as f64).sqrt();
            for (a, b) in [(false, true), (true, false)] {
                let i = FockMatrix::index(m, a);
                let j = FockMatrix::index(m + 2, b);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
    }
    Ok(FockMatrix { truncation, entries: h })
}

/// Eigenvalues in ascending order.
pub fn spectrum(m: &FockMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.entries.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest `‖Mv − μv‖` over all eigenpairs.
pub fn max_eigen_residual(m: &FockMatrix) -> f64 {
    let eig = SymmetricEigen::new(m.entries.clone());
    (0..m.dim())
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (&m.entries * v - v * eig.eigenvalues[k]).norm()
        })
        .fold(0.0, f64::max)
}

/// Outcome of the truncation-ladder comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMatch {
    pub matched: bool,
    /// Eigenvalue closest to the target at the largest truncation.
    pub nearest: f64,
    pub truncation: usize,
}

fn nearest(levels: &[f64], target: f64) -> f64 {
    levels
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .expect("spectrum is nonempty")
}

/// Checks whether `energy` is a level of the truncated spectrum with the
/// default ladder `N = 40, 80, 160`.
pub fn converged_level_match(params: &ModelParams, energy: f64, tol: f64) -> Result<LevelMatch> {
    converged_level_match_with(params, energy, tol, &TRUNCATION_LADDER)
}

/// A level matches when some eigenvalue lies within `tol` of `energy` at the
/// two largest truncations and moves by less than `tol/10` between them.
pub fn converged_level_match_with(
    params: &ModelParams,
    energy: f64,
    tol: f64,
    ladder: &[usize],
) -> Result<LevelMatch> {
    if ladder.len() < 2 {
        return Err(Error::InvalidParameter("truncation ladder needs at least two entries".into()));
    }
    if !((params.lambda / params.omega).abs() < COLLAPSE_RATIO) {
        return Err(Error::InvalidParameter(format!(
            "oracle needs |lambda/omega| < {COLLAPSE_RATIO}, got {}",
            params.lambda / params.omega
        )));
    }
    let (from, to) = (ladder[ladder.len() - 2], ladder[ladder.len() - 1]);
    let near_from = nearest(&spectrum(&build_hamiltonian(params, from)?), energy);
    let near_to = nearest(&spectrum(&build_hamiltonian(params, to)?), energy);
    let shift = (near_to - near_from).abs();
    let close = (near_from - energy).abs() < tol && (near_to - energy).abs() < tol;
    if close && shift >= tol / 10.0 {
        return Err(Error::TruncationUnstable { shift, from, to });
    }
    Ok(LevelMatch { matched: close, nearest: near_to, truncation: to })
}
