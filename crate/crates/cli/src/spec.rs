use std::fmt;
use std::str::FromStr;

use crate::CliError;

/// Inclusive uniform grid `min:max:steps`. A single value (`x` or `x:x:1`)
/// is a degenerate grid for fixed-parameter slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self, CliError> {
        if !min.is_finite() || !max.is_finite() {
            return Err(CliError::Usage("grid bounds must be finite".into()));
        }
        let degenerate = steps == 1 && min == max;
        if !degenerate && (steps < 2 || !(min < max)) {
            return Err(CliError::Usage(format!(
                "grid {min}:{max}:{steps} needs steps >= 2 and min < max (or a single value)"
            )));
        }
        Ok(Self { min, max, steps })
    }

    pub fn single(x: f64) -> Self {
        Self { min: x, max: x, steps: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.max } else { self.min + h * k as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number '{x}' in grid '{s}'")))
        };
        match parts.as_slice() {
            [x] => Ok(Grid::single(num(x)?)),
            [a, b, n] => {
                let steps = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad step count '{n}' in grid '{s}'")))?;
                Grid::new(num(a)?, num(b)?, steps)
            }
            _ => Err(CliError::Usage(format!("grid '{s}' must be 'min:max:steps' or a single value"))),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.steps)
    }
}

/// Which α branch to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchChoice {
    /// α₂ by continuation if admissible, else the smallest admissible root.
    #[default]
    Auto,
    Index(usize),
}

impl FromStr for BranchChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(Self::Auto),
            other => match other.parse::<usize>() {
                Ok(k @ 1..=4) => Ok(Self::Index(k)),
                _ => Err(CliError::Usage(format!("branch must be 1-4 or 'auto', got '{s}'"))),
            },
        }
    }
}

impl fmt::Display for BranchChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => write!(f, "auto"),
            Self::Index(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    AlphaScan,
    Solve,
    Sweep,
    Verify,
    Oracle,
}

/// Everything a command needs; built from CLI flags or directly in tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mode: Mode,
    pub n: usize,
    pub omega: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub branch: BranchChoice,
    pub lambda_range: Option<Grid>,
    pub epsilon_range: Option<Grid>,
    pub tol_residual: f64,
    pub tol_oracle: f64,
    pub tol_curve: f64,
    pub seeds: usize,
    pub truncation: Vec<usize>,
    pub levels: usize,
    pub only: Option<String>,
    pub inject_fault: Option<String>,
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            n: 0,
            omega: 1.0,
            lambda: 0.2,
            epsilon: 0.05,
            delta: None,
            branch: BranchChoice::Auto,
            lambda_range: None,
            epsilon_range: None,
            tol_residual: 1e-9,
            tol_oracle: 1e-6,
            tol_curve: 1e-8,
            seeds: 64,
            truncation: rabi_qes::fock::TRUNCATION_LADDER.to_vec(),
            levels: 10,
            only: None,
            inject_fault: None,
            threads: None,
        }
    }
}

/// Default λ grid of `sweep` (ω = 1 units).
pub const DEFAULT_SWEEP_LAMBDA: Grid = Grid { min: 0.02, max: 0.78, steps: 77 };
/// Default ε grid of `sweep`.
pub const DEFAULT_SWEEP_EPSILON: Grid = Grid { min: -3.0, max: 3.0, steps: 61 };
/// Default Λ grid of `alpha-scan`.
pub const DEFAULT_ALPHA_LAMBDA: Grid = Grid { min: 0.01, max: 1.0, steps: 100 };
