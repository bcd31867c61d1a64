use num_complex::Complex64;
use rayon::prelude::*;

use rabi_qes::alpha::{alpha_closed_form, continued_branches, quartic_residual};
use rabi_qes::bethe::{closed_form_level, solve_states};
use rabi_qes::fock::{build_hamiltonian, converged_level_match_with, spectrum, COLLAPSE_RATIO};
use rabi_qes::ode::{ode_coefficients_with_delta_sq, operator_residual};
use rabi_qes::roots::hausdorff;
use rabi_qes::{AlphaBranch, ComplexPolynomial, LambdaRatio, ModelParams, Physicality, SolverConfig};

use crate::checks::{run_checks, CheckResult};
use crate::spec::{Mode, SweepSpec, DEFAULT_ALPHA_LAMBDA, DEFAULT_SWEEP_EPSILON, DEFAULT_SWEEP_LAMBDA};
use crate::table::{complex_cells, complex_header, Cell, CsvTable};
use crate::{select_branch, CliError};

/// Residual written in place of a closed-form residual that could not be
/// evaluated (branch point of the radicals).
pub const RESIDUAL_SENTINEL: f64 = -1.0;

/// Runs the command selected by `spec.mode`. The flag is `false` when a
/// verification run had failures; the table is complete either way.
pub fn run(spec: &SweepSpec) -> Result<(CsvTable, bool), CliError> {
    let work = || match spec.mode {
        Mode::AlphaScan => cmd_alpha_scan(spec).map(|t| (t, true)),
        Mode::Solve => cmd_solve(spec).map(|t| (t, true)),
        Mode::Sweep => cmd_sweep(spec).map(|t| (t, true)),
        Mode::Oracle => cmd_oracle(spec).map(|t| (t, true)),
        Mode::Verify => cmd_verify(spec),
    };
    match spec.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn solver_config(spec: &SweepSpec) -> SolverConfig {
    SolverConfig { seeds: spec.seeds, verify_tol: spec.tol_residual, ..SolverConfig::default() }
}

fn check_ladder(spec: &SweepSpec) -> Result<(), CliError> {
    if spec.truncation.len() < 2 || spec.truncation.iter().any(|&n| n < 4) {
        return Err(CliError::Usage("--truncation needs at least two values, each >= 4".into()));
    }
    Ok(())
}

/// Branch values, admissibility and quartic residuals over a Λ grid.
pub fn cmd_alpha_scan(spec: &SweepSpec) -> Result<CsvTable, CliError> {
    let grid = spec.lambda_range.unwrap_or(DEFAULT_ALPHA_LAMBDA);
    if grid.min <= 0.0 && grid.max >= 0.0 {
        return Err(CliError::Usage(format!("Lambda grid {grid} must not contain or cross 0")));
    }
    let mut header = vec!["Lambda".to_string()];
    for k in 1..=4 {
        header.extend(complex_header(&format!("alpha{k}")));
    }
    header.extend((1..=4).map(|k| format!("admissible{k}")));
    header.extend((1..=4).map(|k| format!("residual{k}")));
    header.push("branch_point".into());
    header.push("closed_form_gap".into());

    let rows: Vec<Vec<Cell>> = grid
        .values()
        .par_iter()
        .map(|&l| {
            let lambda = LambdaRatio::new(l).expect("grid excludes zero");
            let branches = continued_branches(lambda);
            // closed-form residuals; a failing branch keeps the sentinel
            let (residuals, branch_point, gap) = match alpha_closed_form(lambda) {
                Ok(cf) => {
                    let a: Vec<_> = cf.iter().map(|b| b.value).collect();
                    let b: Vec<_> = branches.iter().map(|b| b.value).collect();
                    (cf.map(|b| b.quartic_residual), false, hausdorff(&a, &b))
                }
                Err(rabi_qes::Error::ValidationFailure { index, .. }) => {
                    let mut r = branches.map(|b| quartic_residual(b.value, lambda));
                    r[index - 1] = RESIDUAL_SENTINEL;
                    (r, true, f64::NAN)
                }
                Err(_) => ([RESIDUAL_SENTINEL; 4], true, f64::NAN),
            };
            let mut row: Vec<Cell> = vec![l.into()];
            for b in &branches {
                row.extend(complex_cells(b.value));
            }
            row.extend(branches.iter().map(|b| Cell::from(b.admissible)));
            row.extend(residuals.iter().map(|&r| Cell::from(r)));
            row.push(branch_point.into());
            row.push(gap.into());
            row
        })
        .collect();

    let mut table = CsvTable::new(header);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

/// Oracle verdict for one state: `matched`, `unmatched`, `unstable` or
/// `skipped` (no real `Δ`, complex energy, or coupling past collapse).
fn oracle_verdict(
    state: &rabi_qes::BetheState,
    params: &ModelParams,
    spec: &SweepSpec,
) -> Result<(&'static str, f64), CliError> {
    let usable = state.verified
        && state.physicality == Physicality::Physical
        && (params.lambda / params.omega).abs() < COLLAPSE_RATIO;
    let Some(p) = state.params(params).filter(|_| usable) else {
        return Ok(("skipped", f64::NAN));
    };
    match converged_level_match_with(&p, state.energy.re, spec.tol_oracle, &spec.truncation) {
        Ok(m) => Ok((if m.matched { "matched" } else { "unmatched" }, m.nearest)),
        Err(rabi_qes::Error::TruncationUnstable { .. }) => Ok(("unstable", f64::NAN)),
        Err(e) => Err(e.into()),
    }
}

/// All states of level `n` at one parameter point, fully checked.
pub fn cmd_solve(spec: &SweepSpec) -> Result<CsvTable, CliError> {
    check_ladder(spec)?;
    let params = ModelParams::new(spec.delta.unwrap_or(0.0), spec.epsilon, spec.omega, spec.lambda)?;
    let n = spec.n;
    let mut header: Vec<String> = vec!["n".into(), "branch".into()];
    header.extend(complex_header("alpha"));
    header.push("admissible".into());
    header.extend(complex_header("E"));
    header.extend(complex_header("delta_sq"));
    header.push("delta".into());
    header.push("delta_sq_gap".into());
    for k in 1..=n {
        header.extend(complex_header(&format!("z{k}")));
    }
    header.extend(
        ["bae_residual", "sum_residual", "operator_residual", "sum_factor", "physicality", "verified", "oracle", "oracle_nearest"]
            .map(String::from),
    );
    let mut table = CsvTable::new(header);

    let Some(branch) = select_branch(spec.branch, params.ratio()?) else {
        return Ok(table);
    };
    let cfg = solver_config(spec);
    for state in solve_states(n, branch, &params, &cfg)? {
        let (verdict, nearest) = oracle_verdict(&state, &params, spec)?;
        let gap = spec.delta.map_or(f64::NAN, |d| state.delta_sq_required.re - d * d);
        let mut row: Vec<Cell> = vec![n.into(), branch.index.into()];
        row.extend(complex_cells(branch.value));
        row.push(branch.admissible.into());
        row.extend(complex_cells(state.energy));
        row.extend(complex_cells(state.delta_sq_required));
        row.push(state.delta().unwrap_or(f64::NAN).into());
        row.push(gap.into());
        for z in &state.roots {
            row.extend(complex_cells(*z));
        }
        row.push(state.bae_residual.into());
        row.push(state.sum_constraint_residual.into());
        row.push(state.operator_residual.into());
        row.push(state.sum_factor.as_str().into());
        row.push(state.physicality.label().into());
        row.push(state.verified.into());
        row.push(verdict.into());
        row.push(nearest.into());
        table.push(row);
    }
    Ok(table)
}

/// One solution at one sweep grid point.
#[derive(Debug, Clone)]
struct SweepEntry {
    state: usize,
    branch: Option<AlphaBranch>,
    energy: Complex64,
    delta_sq: Complex64,
    residual: f64,
}

impl SweepEntry {
    fn missing(branch: Option<AlphaBranch>) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Self { state: 0, branch, energy: nan, delta_sq: nan, residual: f64::NAN }
    }

    fn real_delta(&self, tol: f64) -> bool {
        self.energy.im.abs() < tol && self.delta_sq.im.abs() < tol && self.delta_sq.re >= 0.0
    }
}

fn sweep_point(
    n: usize,
    branch: Option<AlphaBranch>,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Vec<SweepEntry> {
    let Some(b) = branch else {
        return vec![SweepEntry::missing(None)];
    };
    if n <= 1 {
        let Ok((energy, delta_sq)) = closed_form_level(n, b.value, params) else {
            return vec![SweepEntry::missing(branch)];
        };
        let c = ode_coefficients_with_delta_sq(params, b.value, energy, delta_sq);
        let phi = ComplexPolynomial::monomial(Complex64::new(1.0, 0.0), n);
        return vec![SweepEntry { state: 0, branch, energy, delta_sq, residual: operator_residual(&c, &phi) }];
    }
    let states: Vec<SweepEntry> = solve_states(n, b, params, cfg)
        .unwrap_or_default()
        .into_iter()
        .filter(|s| s.verified)
        .enumerate()
        .map(|(k, s)| SweepEntry {
            state: k,
            branch,
            energy: s.energy,
            delta_sq: s.delta_sq_required,
            residual: s.bae_residual.max(s.operator_residual).max(s.sum_constraint_residual),
        })
        .collect();
    if states.is_empty() {
        vec![SweepEntry::missing(branch)]
    } else {
        states
    }
}

/// Energy and required `Δ²` over a (λ, ε) grid, λ-major.
///
/// `physical` is 1 where E and `Δ²` are real with `Δ² ≥ 0`; with `--delta`
/// the point must also lie on the curve `Δ²_required = Δ²`, i.e. be the
/// closer-to-zero end of a sign change of the gap along λ or ε, or have
/// `|gap| ≤ tol_curve`.
pub fn cmd_sweep(spec: &SweepSpec) -> Result<CsvTable, CliError> {
    let lgrid = spec.lambda_range.unwrap_or(DEFAULT_SWEEP_LAMBDA);
    let egrid = spec.epsilon_range.unwrap_or(DEFAULT_SWEEP_EPSILON);
    let lambdas = lgrid.values();
    let epsilons = egrid.values();
    for &l in &lambdas {
        ModelParams::new(0.0, 0.0, spec.omega, l)?;
    }
    let cfg = solver_config(spec);
    let tol = cfg.physical_tol;

    let branches: Vec<Option<AlphaBranch>> = lambdas
        .par_iter()
        .map(|&l| select_branch(spec.branch, LambdaRatio::new(l / spec.omega).expect("nonzero")))
        .collect();
    let ne = epsilons.len();
    let points: Vec<Vec<SweepEntry>> = (0..lambdas.len() * ne)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / ne, k % ne);
            let p = ModelParams { delta: 0.0, epsilon: epsilons[j], omega: spec.omega, lambda: lambdas[i] };
            sweep_point(spec.n, branches[i], &p, &cfg)
        })
        .collect();

    let gap = |e: &SweepEntry| spec.delta.map_or(f64::NAN, |d| e.delta_sq.re - d * d);
    let neighbour = |i: usize, j: usize, state: usize| -> Option<&SweepEntry> {
        points[i * ne + j].iter().find(|e| e.state == state && e.real_delta(tol))
    };
    let on_curve = |i: usize, j: usize, e: &SweepEntry| -> bool {
        let g = gap(e);
        if g.abs() <= spec.tol_curve {
            return true;
        }
        let mut around = Vec::new();
        if i > 0 {
            around.push((i - 1, j));
        }
        if i + 1 < lambdas.len() {
            around.push((i + 1, j));
        }
        if j > 0 {
            around.push((i, j - 1));
        }
        if j + 1 < ne {
            around.push((i, j + 1));
        }
        around.into_iter().any(|(a, b)| {
            neighbour(a, b, e.state).is_some_and(|o| {
                let h = gap(o);
                g.signum() != h.signum() && g.abs() <= h.abs()
            })
        })
    };

    let mut header: Vec<String> = vec!["lambda".into(), "epsilon".into(), "state".into()];
    header.extend(complex_header("E"));
    header.extend(complex_header("delta_sq_required"));
    header.extend(["delta_sq_gap", "physical", "branch"].map(String::from));
    header.extend(complex_header("alpha"));
    header.push("residual".into());
    let mut table = CsvTable::new(header);
    for i in 0..lambdas.len() {
        for j in 0..ne {
            for e in &points[i * ne + j] {
                let physical = e.real_delta(tol) && (spec.delta.is_none() || on_curve(i, j, e));
                let alpha = e.branch.map_or(Complex64::new(f64::NAN, f64::NAN), |b| b.value);
                let mut row: Vec<Cell> = vec![lambdas[i].into(), epsilons[j].into(), e.state.into()];
                row.extend(complex_cells(e.energy));
                row.extend(complex_cells(e.delta_sq));
                row.push(gap(e).into());
                row.push(physical.into());
                row.push(e.branch.map_or(0, |b| b.index).into());
                row.extend(complex_cells(alpha));
                row.push(e.residual.into());
                table.push(row);
            }
        }
    }
    Ok(table)
}

/// Lowest levels of the truncated spectrum at each ladder truncation.
pub fn cmd_oracle(spec: &SweepSpec) -> Result<CsvTable, CliError> {
    check_ladder(spec)?;
    let delta = spec.delta.unwrap_or(1.0);
    let params = if spec.lambda == 0.0 {
        ModelParams::new_uncoupled(delta, spec.epsilon, spec.omega)?
    } else {
        ModelParams::new(delta, spec.epsilon, spec.omega, spec.lambda)?
    };
    if !((params.lambda / params.omega).abs() < COLLAPSE_RATIO) {
        return Err(CliError::Usage(format!("oracle needs |lambda/omega| < {COLLAPSE_RATIO}")));
    }
    let spectra: Vec<Vec<f64>> = spec
        .truncation
        .par_iter()
        .map(|&n| build_hamiltonian(&params, n).map(|m| spectrum(&m)))
        .collect::<Result<_, _>>()?;
    let mut header = vec!["level".to_string()];
    header.extend(spec.truncation.iter().map(|n| format!("e_N{n}")));
    header.push("shift".into());
    let mut table = CsvTable::new(header);
    let levels = spec.levels.min(spectra.iter().map(Vec::len).min().unwrap_or(0));
    for k in 0..levels {
        let mut row: Vec<Cell> = vec![k.into()];
        row.extend(spectra.iter().map(|s| Cell::from(s[k])));
        let m = spectra.len();
        row.push((spectra[m - 1][k] - spectra[m - 2][k]).abs().into());
        table.push(row);
    }
    Ok(table)
}

/// Runs the check suite; the flag is `true` when every check passed.
pub fn cmd_verify(spec: &SweepSpec) -> Result<(CsvTable, bool), CliError> {
    let results = run_checks(spec)?;
    let mut table = CsvTable::new(["check", "measured", "threshold", "verdict", "detail"]);
    for CheckResult { name, measured, threshold, passed, detail } in &results {
        table.push(vec![
            name.as_str().into(),
            (*measured).into(),
            (*threshold).into(),
            (if *passed { "pass" } else { "fail" }).into(),
            detail.as_str().into(),
        ]);
    }
    Ok((table, results.iter().all(|r| r.passed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{BranchChoice, Grid};

    fn spec(mode: Mode) -> SweepSpec {
        SweepSpec::new(mode)
    }

    #[test]
    fn alpha_scan_rows_and_residuals() {
        let mut s = spec(Mode::AlphaScan);
        s.lambda_range = Some("0.05:1.0:96".parse().unwrap());
        let t = cmd_alpha_scan(&s).unwrap();
        assert_eq!(t.rows.len(), 96);
        for k in 1..=4 {
            assert!(t.values(&format!("residual{k}")).iter().all(|r| *r < 1e-9));
        }
    }

    #[test]
    fn alpha_scan_rejects_zero() {
        let mut s = spec(Mode::AlphaScan);
        s.lambda_range = Some("-0.5:0.5:11".parse().unwrap());
        assert_eq!(cmd_alpha_scan(&s).unwrap_err().exit_code(), 2);
        s.lambda_range = Some(Grid::single(0.0));
        assert_eq!(cmd_alpha_scan(&s).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn solve_n1_contains_zero_root() {
        let mut s = spec(Mode::Solve);
        s.n = 1;
        let t = cmd_solve(&s).unwrap();
        let re = t.values("re_z1");
        let im = t.values("im_z1");
        assert!(re.iter().zip(&im).any(|(a, b)| *a == 0.0 && *b == 0.0));
    }

    #[test]
    fn solve_n0_single_row() {
        let t = cmd_solve(&spec(Mode::Solve)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.text("verified"), vec!["1"]);
        // Δ² is negative at this point, so there is no real Δ to test against
        assert_eq!(t.text("physicality"), vec!["NONPHYSICAL_NEGATIVE_DELTA_SQ"]);
        assert_eq!(t.text("oracle"), vec!["skipped"]);
    }

    #[test]
    fn solve_rejects_zero_coupling() {
        let mut s = spec(Mode::Solve);
        s.lambda = 0.0;
        assert_eq!(cmd_solve(&s).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sweep_n1_matches_closed_form() {
        let mut s = spec(Mode::Sweep);
        s.n = 1;
        s.lambda_range = Some("0.1:0.4:4".parse().unwrap());
        s.epsilon_range = Some("-1:1:5".parse().unwrap());
        let t = cmd_sweep(&s).unwrap();
        assert_eq!(t.rows.len(), 20);
        let (ls, es, re) = (t.values("lambda"), t.values("epsilon"), t.values("re_E"));
        for k in 0..t.rows.len() {
            let p = ModelParams::new(0.0, es[k], 1.0, ls[k]).unwrap();
            let b = select_branch(BranchChoice::Auto, p.ratio().unwrap()).unwrap();
            let e = rabi_qes::bethe::first_excited_energy(b.value, &p).unwrap();
            assert!((e.re - re[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_large_delta_is_never_physical() {
        let mut s = spec(Mode::Sweep);
        s.delta = Some(100.0);
        s.lambda_range = Some("0.05:0.45:5".parse().unwrap());
        s.epsilon_range = Some("-1:1:5".parse().unwrap());
        let t = cmd_sweep(&s).unwrap();
        assert!(t.values("physical").iter().all(|p| *p == 0.0));
    }

    #[test]
    fn oracle_uncoupled_levels() {
        let mut s = spec(Mode::Oracle);
        s.lambda = 0.0;
        s.delta = Some(0.6);
        s.epsilon = 0.8;
        let t = cmd_oracle(&s).unwrap();
        for (e, x) in t.values("e_N160").iter().zip([-1.0, 0.0, 1.0, 1.0]) {
            assert!((e - x).abs() < 1e-12);
        }
    }
}
