//! Invariant suite behind `rabi-qes verify`.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rabi_qes::alpha::{alpha_branches, alpha_closed_form, alpha_companion, collision_points, normalizability_integral};
use rabi_qes::bethe::{bae_residuals, closed_form_level, energy_level, kernel_q0_values, nullspace_oracle, solve_bae};
use rabi_qes::fock::{build_hamiltonian, converged_level_match_with, spectrum};
use rabi_qes::identities::symmetric_sums;
use rabi_qes::ode::{
    apply_operator, ode_coefficients, ode_coefficients_with_delta_sq, raw_residual_pointwise, residual_norm,
    untransformed_coefficients, OdeCoefficients,
};
use rabi_qes::roots::{hausdorff, matched_distance};
use rabi_qes::{AlphaBranch, ComplexPolynomial, LambdaRatio, ModelParams, SolverConfig};

use crate::spec::{Grid, Mode, SweepSpec};
use crate::{commands, CliError};

/// Checks run by default, in report order.
pub const DEFAULT_CHECKS: [&str; 10] = [
    "identities",
    "alpha-oracle",
    "alpha-vieta",
    "alpha0-reduction",
    "n0-exactness",
    "n1-exactness",
    "solver-equivalence",
    "fock-lambda0",
    "normalizability",
    "alpha-residual",
];

/// Checks selectable with `--only` but not run by default.
pub const EXTRA_CHECKS: [&str; 2] = ["physics-oracle", "figure-data"];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured < threshold` (NaN fails).
    pub fn below(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), measured, threshold, passed: measured < threshold, detail }
    }
}

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x7e57_0000 + tag)
}

fn fault_slot(spec: &SweepSpec) -> Result<Option<usize>, CliError> {
    let Some(name) = &spec.inject_fault else {
        return Ok(None);
    };
    OdeCoefficients::NAMES
        .iter()
        .position(|n| n == name)
        .map(Some)
        .ok_or_else(|| CliError::Usage(format!("--inject-fault expects one of {:?}, got '{name}'", OdeCoefficients::NAMES)))
}

/// Resolves `--only` (comma separated) against the known checks.
pub fn selected_checks(spec: &SweepSpec) -> Result<Vec<&'static str>, CliError> {
    let Some(only) = &spec.only else {
        return Ok(DEFAULT_CHECKS.to_vec());
    };
    only.split(',')
        .map(str::trim)
        .map(|want| {
            DEFAULT_CHECKS
                .iter()
                .chain(&EXTRA_CHECKS)
                .find(|c| **c == want)
                .copied()
                .ok_or_else(|| CliError::Usage(format!("unknown check '{want}'")))
        })
        .collect()
}

pub fn run_checks(spec: &SweepSpec) -> Result<Vec<CheckResult>, CliError> {
    let fault = fault_slot(spec)?;
    let names = selected_checks(spec)?;
    names
        .into_iter()
        .map(|name| {
            Ok(match name {
                "identities" => check_identities(),
                "alpha-oracle" => check_alpha_oracle(),
                "alpha-residual" => check_alpha_residual(),
                "alpha-vieta" => check_alpha_vieta(),
                "alpha0-reduction" => check_alpha0_reduction(),
                "n0-exactness" => check_exactness(0, fault),
                "n1-exactness" => check_exactness(1, fault),
                "solver-equivalence" => check_solver_equivalence(spec),
                "fock-lambda0" => check_fock_lambda0(),
                "normalizability" => check_normalizability(),
                "physics-oracle" => check_physics_oracle(spec),
                "figure-data" => check_figure_data(spec)?,
                other => unreachable!("unlisted check {other}"),
            })
        })
        .collect()
}

/// Random root-set with pairwise distances at least `sep`.
pub fn separated_roots(n: usize, sep: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(n);
    while out.len() < n {
        let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if out.iter().all(|w| (w - z).norm() >= sep) {
            out.push(z);
        }
    }
    out
}

fn check_identities() -> CheckResult {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        for _ in 0..10 {
            let s = symmetric_sums(&separated_roots(n, 0.1, &mut r)).expect("separated roots");
            let pairs = (n * (n - 1) / 2) as f64;
            worst = worst.max(s.s1.norm()).max((s.s2 - pairs).norm()).max(s.s3.norm());
        }
    }
    CheckResult::below("identities", worst, 1e-10, "n = 2..10, 10 sets each".into())
}

/// Uniform Λ grid on [0.02, 1.5]; points within 1e-3 of a root collision are
/// moved just past it.
pub fn alpha_grid(count: usize) -> Vec<f64> {
    let hits = collision_points();
    (0..count)
        .map(|k| {
            let l = 0.02 + (1.5 - 0.02) * k as f64 / (count - 1) as f64;
            match hits.iter().find(|c| (l - **c).abs() <= 1e-3) {
                Some(c) => c + 1.5e-3,
                None => l,
            }
        })
        .collect()
}

fn check_alpha_oracle() -> CheckResult {
    let grid = alpha_grid(200);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for &l in &grid {
        let lambda = LambdaRatio::new(l).expect("nonzero");
        match alpha_closed_form(lambda) {
            Ok(cf) => {
                let a: Vec<_> = cf.iter().map(|b| b.value).collect();
                worst = worst.max(hausdorff(&a, &alpha_companion(lambda)));
            }
            Err(_) => failures += 1,
        }
    }
    let measured = if failures > 0 { f64::INFINITY } else { worst };
    CheckResult::below("alpha-oracle", measured, 1e-8, format!("{} Lambda values, {failures} closed-form failures", grid.len()))
}

fn check_alpha_residual() -> CheckResult {
    let grid = alpha_grid(200);
    let worst = grid
        .iter()
        .map(|&l| match alpha_closed_form(LambdaRatio::new(l).expect("nonzero")) {
            Ok(cf) => cf.iter().map(|b| b.quartic_residual).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    CheckResult::below("alpha-residual", worst, 1e-9, "closed-form quartic residual".into())
}

fn check_alpha_vieta() -> CheckResult {
    let mut worst: f64 = 0.0;
    for &l in &alpha_grid(200) {
        let Ok(cf) = alpha_closed_form(LambdaRatio::new(l).expect("nonzero")) else {
            worst = f64::INFINITY;
            continue;
        };
        let sum: Complex64 = cf.iter().map(|b| b.value).sum();
        let prod: Complex64 = cf.iter().map(|b| b.value).product();
        worst = worst.max(sum.norm()).max((prod - 1.0 / 16.0).norm());
    }
    CheckResult::below("alpha-vieta", worst, 1e-10, "sum = 0, product = 1/16".into())
}

fn check_alpha0_reduction() -> CheckResult {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = ModelParams {
            delta: r.random_range(0.0..2.0),
            epsilon: r.random_range(-2.0..2.0),
            omega: r.random_range(0.5..2.0),
            lambda: r.random_range(0.05..1.0),
        };
        let e = Complex64::new(r.random_range(-3.0..3.0), r.random_range(-1.0..1.0));
        let a = ode_coefficients(&p, cx(0.0), e).as_array();
        let b = untransformed_coefficients(&p, e).as_array();
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).norm() / y.norm().max(1.0));
        }
    }
    CheckResult::below("alpha0-reduction", worst, 1e-14, "100 random draws".into())
}

/// One accepted draw of the exactness protocol.
#[derive(Debug, Clone, Copy)]
pub struct ExactPoint {
    pub params: ModelParams,
    pub branch: AlphaBranch,
    pub energy: Complex64,
}

/// Random points (ω = 1, λ ∈ (0.05, 0.45), ε ∈ [−1, 1]) on every admissible
/// real branch where level `n` has real `Δ² ≥ 0`; `Δ` is set from it.
pub fn exactness_points(n: usize, count: usize, seed: u64) -> Vec<ExactPoint> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for _ in 0..100 * count {
        if out.len() >= count {
            break;
        }
        let lambda = r.random_range(0.05..0.45);
        let epsilon = r.random_range(-1.0..=1.0);
        let base = ModelParams { delta: 0.0, epsilon, omega: 1.0, lambda };
        for b in alpha_branches(LambdaRatio::new(lambda).expect("nonzero")) {
            if !b.admissible || b.value.im.abs() > 1e-12 || out.len() >= count {
                continue;
            }
            let Ok((e, d2)) = closed_form_level(n, b.value, &base) else { continue };
            if d2.im.abs() < 1e-12 && d2.re >= 0.0 && e.im.abs() < 1e-12 {
                out.push(ExactPoint { params: base.with_delta(d2.re.sqrt()), branch: b, energy: e });
            }
        }
    }
    out
}

/// Operator residual of `zⁿ` and the largest point-wise residual of the
/// untransformed equation at 20 random `|z| ≤ 1`.
pub fn exactness_residuals(n: usize, pt: &ExactPoint, fault: Option<usize>, seed: u64) -> (f64, f64) {
    let phi = ComplexPolynomial::monomial(cx(1.0), n);
    let mut c = ode_coefficients(&pt.params, pt.branch.value, pt.energy);
    if let Some(slot) = fault {
        c = c.perturbed(slot, cx(1e-3));
    }
    let op = residual_norm(&apply_operator(&c, &phi), c.max_abs() * phi.max_abs());
    let mut r = rng(seed);
    let mut point: f64 = 0.0;
    for _ in 0..20 {
        let z = Complex64::from_polar(r.random::<f64>().sqrt(), std::f64::consts::TAU * r.random::<f64>());
        point = point.max(raw_residual_pointwise(&pt.params, pt.energy, pt.branch.value, &phi, z).norm());
    }
    (op, point)
}

fn check_exactness(n: usize, fault: Option<usize>) -> CheckResult {
    let name = if n == 0 { "n0-exactness" } else { "n1-exactness" };
    let pts = exactness_points(n, 50, 10 + n as u64);
    let (mut op, mut point): (f64, f64) = (0.0, 0.0);
    for (k, pt) in pts.iter().enumerate() {
        let (a, b) = exactness_residuals(n, pt, fault, 1000 + k as u64);
        op = op.max(a);
        point = point.max(b);
    }
    let mut res = CheckResult::below(
        name,
        op,
        1e-10,
        format!("{} points, point-wise max {point:.3e} (limit 1e-8)", pts.len()),
    );
    res.passed &= point < 1e-8 && pts.len() == 50;
    res
}

/// Worst disagreement between the Newton and null-space routes for one level
/// at one point, and the worst Bethe residual at either solution.
pub fn solver_agreement(n: usize, params: &ModelParams, branch: AlphaBranch, cfg: &SolverConfig) -> (f64, f64, usize) {
    let energy = energy_level(n, branch.value, params).expect("regular energy");
    let c0 = ode_coefficients_with_delta_sq(params, branch.value, energy, cx(0.0));
    let newton = solve_bae(n, &c0, cfg).unwrap_or_default();
    let bae = |roots: &[Complex64], c: &OdeCoefficients| {
        bae_residuals(roots, c).map_or(f64::INFINITY, |v| v.iter().map(|x| x.norm()).fold(0.0, f64::max))
    };
    let (mut gap, mut res, mut count): (f64, f64, usize) = (0.0, 0.0, 0);
    for q0 in kernel_q0_values(n, &c0) {
        let c = OdeCoefficients { q0, ..c0 };
        let Some(sol) = nullspace_oracle(n, &c, cfg) else { continue };
        count += 1;
        let best = newton
            .iter()
            .map(|s| matched_distance(s, &sol.roots))
            .fold(f64::INFINITY, f64::min);
        let hit = newton.iter().find(|s| matched_distance(s, &sol.roots) == best);
        gap = gap.max(best);
        res = res.max(bae(&sol.roots, &c));
        if let Some(s) = hit {
            res = res.max(bae(s, &c));
        }
    }
    (gap, res, count)
}

/// Parameter sets for the solver cross-check: (ε, λ, branch index).
pub const EQUIVALENCE_POINTS: [(f64, f64, usize); 4] = [(0.05, 0.2, 2), (-0.4, 0.3, 2), (0.3, 0.25, 3), (0.7, 0.15, 3)];

fn check_solver_equivalence(spec: &SweepSpec) -> CheckResult {
    let cfg = SolverConfig { seeds: spec.seeds, ..SolverConfig::default() };
    let runs: Vec<(f64, f64, usize)> = EQUIVALENCE_POINTS
        .par_iter()
        .flat_map_iter(|&(eps, lam, k)| {
            let p = ModelParams { delta: 0.0, epsilon: eps, omega: 1.0, lambda: lam };
            let b = alpha_branches(LambdaRatio::new(lam).expect("nonzero"))[k - 1];
            let cfg = cfg.clone();
            (1..=4).map(move |n| solver_agreement(n, &p, b, &cfg))
        })
        .collect();
    let gap = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let res = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let found: usize = runs.iter().map(|r| r.2).sum();
    let mut out = CheckResult::below(
        "solver-equivalence",
        gap,
        1e-8,
        format!("{found} null-space solutions for n = 1..4; max Bethe residual {res:.3e} (limit 1e-9)"),
    );
    out.passed &= res < 1e-9 && found > 0;
    out
}

fn check_fock_lambda0() -> CheckResult {
    let p = ModelParams::new_uncoupled(0.7, 0.3, 1.0).expect("valid");
    let ev = spectrum(&build_hamiltonian(&p, 40).expect("N >= 4"));
    let gap = (p.delta * p.delta + p.epsilon * p.epsilon).sqrt();
    let mut expected: Vec<f64> = (0..=40).flat_map(|m| [m as f64 - gap, m as f64 + gap]).collect();
    expected.sort_by(f64::total_cmp);
    let worst = ev.iter().zip(&expected).take(10).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    CheckResult::below("fock-lambda0", worst, 1e-10, "lowest 10 levels at N = 40".into())
}

/// `|I(24) − I(12)|` for `|α| = 0.45` and `I(10)/I(6)` for `|α| = 0.55`.
pub fn normalizability_measures() -> (f64, f64) {
    let one = ComplexPolynomial::one();
    let a = cx(0.45);
    let change = (normalizability_integral(a, &one, 24.0) - normalizability_integral(a, &one, 12.0)).abs();
    let b = cx(0.55);
    let growth = normalizability_integral(b, &one, 10.0) / normalizability_integral(b, &one, 6.0);
    (change, growth)
}

fn check_normalizability() -> CheckResult {
    let (change, growth) = normalizability_measures();
    let mut out = CheckResult::below(
        "normalizability",
        change,
        1e-6,
        format!("|alpha| = 0.55 growth R=6 -> 10: {growth:.3e} (need > 10)"),
    );
    out.passed &= growth > 10.0;
    out
}

fn check_physics_oracle(spec: &SweepSpec) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    let mut total = 0;
    for n in [0, 1] {
        for pt in exactness_points(n, 10, 20 + n as u64) {
            total += 1;
            match converged_level_match_with(&pt.params, pt.energy.re, spec.tol_oracle, &spec.truncation) {
                Ok(m) => {
                    matched += usize::from(m.matched);
                    worst = worst.max((m.nearest - pt.energy.re).abs());
                }
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    let mut out = CheckResult::below(
        "physics-oracle",
        worst,
        spec.tol_oracle,
        format!("{matched}/{total} levels found in the truncated spectrum"),
    );
    out.passed &= total == 20 && matched == total;
    out
}

fn check_figure_data(spec: &SweepSpec) -> Result<CheckResult, CliError> {
    let mut scan = SweepSpec::new(Mode::AlphaScan);
    scan.lambda_range = Some(Grid::new(0.01, 1.0, 100)?);
    let t = commands::cmd_alpha_scan(&scan)?;
    let admissible2 = t.values("admissible2").iter().filter(|a| **a == 1.0).count();

    let mut empty = Vec::new();
    for n in [0, 1] {
        for delta in [1.0, 1.0 / 3.0, 0.25] {
            let mut s = SweepSpec::new(Mode::Sweep);
            s.n = n;
            s.delta = Some(delta);
            s.omega = 1.0;
            s.threads = spec.threads;
            let t = commands::cmd_sweep(&s)?;
            if !t.values("physical").contains(&1.0) {
                empty.push(format!("n={n} delta={delta:.4}"));
            }
        }
    }
    let measured = empty.len() as f64;
    let mut out = CheckResult::below(
        "figure-data",
        measured,
        0.5,
        format!("alpha2 admissible on {admissible2}/100 Lambda; empty loci: [{}]", empty.join("; ")),
    );
    out.passed &= admissible2 > 0;
    Ok(out)
}
