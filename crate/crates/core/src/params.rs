use crate::error::{Error, Result};

/// Physical parameters of the Hamiltonian, in units with ħ = 1.
///
/// `delta` is half the qubit level splitting, `epsilon` the bias, `omega` the
/// mode frequency and `lambda` the two-photon coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub delta: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(delta: f64, epsilon: f64, omega: f64, lambda: f64) -> Result<Self> {
        let p = Self { delta, epsilon, omega, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for the Fock oracle only; `lambda = 0` is allowed there.
    pub fn new_uncoupled(delta: f64, epsilon: f64, omega: f64) -> Result<Self> {
        let p = Self { delta, epsilon, omega, lambda: 0.0 };
        p.check_finite()?;
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_finite()?;
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.lambda == 0.0 {
            return Err(Error::InvalidParameter("lambda must be nonzero".into()));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn ratio(&self) -> Result<LambdaRatio> {
        LambdaRatio::new(self.lambda / self.omega)
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }
}

/// Dimensionless coupling `Λ = λ/ω`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LambdaRatio(f64);

impl LambdaRatio {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value == 0.0 {
            return Err(Error::InvalidParameter(format!("Lambda must be finite and nonzero, got {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}
