use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rabi_qes_cli::{run, BranchChoice, CliError, Grid, Mode, SweepSpec};

/// Quasi-exact solutions of the two-photon Rabi model: branch scans,
/// Bethe-ansatz levels, parameter sweeps and checks, all as CSV.
#[derive(Parser, Debug)]
#[command(name = "rabi-qes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roots of the gauge quartic over a Lambda grid.
    AlphaScan(Common),
    /// All Bethe-ansatz states of level n at one parameter point.
    Solve(Common),
    /// Energy and required Delta^2 over a (lambda, epsilon) grid.
    Sweep(Common),
    /// Run the invariant checks; exit 1 if any fails.
    Verify(Common),
    /// Lowest levels of the truncated Fock-space spectrum.
    Oracle(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    epsilon: f64,
    #[arg(long)]
    delta: Option<f64>,
    /// 1-4, or auto (alpha_2 when admissible)
    #[arg(long, default_value = "auto")]
    branch: BranchChoice,
    /// min:max:steps, or a single value
    #[arg(long, allow_hyphen_values = true)]
    lambda_range: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon_range: Option<Grid>,
    #[arg(long, default_value_t = 1e-9)]
    tol_residual: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_oracle: f64,
    /// Distance from the Delta^2 curve counted as on it
    #[arg(long, default_value_t = 1e-8)]
    tol_curve: f64,
    #[arg(long, default_value_t = 64)]
    seeds: usize,
    /// Comma-separated truncation ladder
    #[arg(long, value_delimiter = ',', default_value = "40,80,160")]
    truncation: Vec<usize>,
    /// Number of levels printed by `oracle`
    #[arg(long, default_value_t = 10)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated check names for `verify`
    #[arg(long)]
    only: Option<String>,
    /// Perturb one transformed-equation coefficient (a1, b2, b0, p3, p1, q4, q2, q0) by 1e-3
    #[arg(long)]
    inject_fault: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn into_spec(self, mode: Mode) -> (SweepSpec, Option<PathBuf>) {
        let spec = SweepSpec {
            mode,
            n: self.n,
            omega: self.omega,
            lambda: self.lambda,
            epsilon: self.epsilon,
            delta: self.delta,
            branch: self.branch,
            lambda_range: self.lambda_range,
            epsilon_range: self.epsilon_range,
            tol_residual: self.tol_residual,
            tol_oracle: self.tol_oracle,
            tol_curve: self.tol_curve,
            seeds: self.seeds,
            truncation: self.truncation,
            levels: self.levels,
            only: self.only,
            inject_fault: self.inject_fault,
            threads: self.threads,
        };
        (spec, self.out)
    }
}

fn execute(spec: &SweepSpec, out: Option<PathBuf>, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let (table, ok) = run(spec)?;
    match out {
        Some(path) => table.write(BufWriter::new(File::create(path)?))?,
        None => {
            table.write(&mut *stdout)?;
            stdout.flush()?;
        }
    }
    Ok(ok)
}

/// Parses `args`, runs the command and returns the process exit code.
fn cli_main<I, T>(args: I, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (spec, out) = match cli.command {
        Command::AlphaScan(c) => c.into_spec(Mode::AlphaScan),
        Command::Solve(c) => c.into_spec(Mode::Solve),
        Command::Sweep(c) => c.into_spec(Mode::Sweep),
        Command::Verify(c) => c.into_spec(Mode::Verify),
        Command::Oracle(c) => c.into_spec(Mode::Oracle),
    };
    match execute(&spec, out, stdout) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("verification failed");
            1
        }
        Err(e) => {
            eprintln!("rabi-qes: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    ExitCode::from(cli_main(std::env::args_os(), &mut lock))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (u8, String) {
        let mut buf = Vec::new();
        let code = cli_main(std::iter::once("rabi-qes").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).expect("utf-8"))
    }

    fn column(csv: &str, name: &str) -> Vec<String> {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
        lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
    }

    fn num(s: &str) -> f64 {
        s.parse().unwrap()
    }

    #[test]
    fn alpha_scan_one_row_per_lambda() {
        let (code, csv) = invoke(&["alpha-scan", "--lambda-range", "0.05:1.0:96"]);
        assert_eq!(code, 0);
        assert_eq!(csv.lines().count(), 97);
        assert!(csv.starts_with("Lambda,re_alpha1,im_alpha1,"));
        for k in 1..=4 {
            assert!(column(&csv, &format!("residual{k}")).iter().all(|r| num(r) < 1e-9));
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        for args in [
            &["alpha-scan", "--lambda-range", "-1:1:5"][..],
            &["alpha-scan", "--lambda-range", "1:0:5"],
            &["solve", "--lambda", "0"],
            &["sweep", "--lambda-range", "0:0.4:5"],
            &["verify", "--only", "bogus"],
            &["verify", "--inject-fault", "zz"],
            &["solve", "--branch", "7"],
            &["oracle", "--lambda", "0.5"],
            &["frobnicate"],
        ] {
            assert_eq!(invoke(args).0, 2, "{args:?}");
        }
    }

    #[test]
    fn solve_n1_reports_zero_root() {
        let (code, csv) = invoke(&["solve", "--n", "1", "--lambda", "0.3", "--epsilon=-0.2"]);
        assert_eq!(code, 0);
        let re = column(&csv, "re_z1");
        let im = column(&csv, "im_z1");
        assert!(re.iter().zip(&im).any(|(a, b)| num(a).abs() < 1e-12 && num(b).abs() < 1e-12));
        // VERIFIED rows satisfy the residual limits they claim
        let verified = column(&csv, "verified");
        for (k, v) in verified.iter().enumerate() {
            if v == "1" {
                for name in ["bae_residual", "sum_residual", "operator_residual"] {
                    assert!(num(&column(&csv, name)[k]) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sweep_identical_across_thread_counts() {
        let args = ["sweep", "--n", "2", "--lambda-range", "0.1:0.4:4", "--epsilon-range", "-1:1:3", "--delta", "0.5"];
        let (c1, one) = invoke(&[&args[..], &["--threads", "1"]].concat());
        let (c4, four) = invoke(&[&args[..], &["--threads", "4"]].concat());
        assert_eq!((c1, c4), (0, 0));
        assert_eq!(one, four);
        assert!(one.lines().count() > 12);
    }

    #[test]
    fn sweep_fixed_lambda_slice() {
        let (code, csv) = invoke(&["sweep", "--lambda-range", "0.3", "--epsilon-range", "-1:1:21"]);
        assert_eq!(code, 0);
        assert_eq!(csv.lines().count(), 22);
        assert!(column(&csv, "lambda").iter().all(|l| l == "0.3"));
    }

    #[test]
    fn verify_only_identities() {
        let (code, csv) = invoke(&["verify", "--only", "identities"]);
        assert_eq!(code, 0);
        assert_eq!(column(&csv, "verdict"), vec!["pass"]);
    }

    #[test]
    fn injected_fault_fails_verification() {
        let (code, csv) = invoke(&["verify", "--only", "n0-exactness,n1-exactness", "--inject-fault", "q0"]);
        assert_eq!(code, 1);
        assert!(column(&csv, "verdict").iter().all(|v| v == "fail"));
    }

    #[test]
    fn out_flag_writes_file() {
        let path = std::env::temp_dir().join(format!("rabi-qes-oracle-{}.csv", std::process::id()));
        let (code, printed) =
            invoke(&["oracle", "--lambda", "0.1", "--delta", "1", "--levels", "4", "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(printed.is_empty());
        let csv = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert!(csv.starts_with("level,e_N40,e_N80,e_N160,shift"));
        assert_eq!(csv.lines().count(), 5);
    }
}
