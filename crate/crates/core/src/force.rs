//! Force-per-mass fields `f(x) = -V'(x)/m` and classical phase points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest supported polynomial degree of `f`.
pub const MAX_POLY_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceKind {
    Free,
    /// Constant acceleration `g` (free fall).
    Uniform { g: f64 },
    /// `f(x) = -ω² x`.
    Harmonic { omega: f64 },
    /// `f(x) = Σ c_n xⁿ`.
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceField {
    #[serde(flatten)]
    pub kind: ForceKind,
    #[serde(default = "unit_mass")]
    pub mass: f64,
}

fn unit_mass() -> f64 {
    1.0
}

impl Default for ForceField {
    fn default() -> Self {
        Self::free()
    }
}

impl ForceField {
    pub fn new(kind: ForceKind, mass: f64) -> Result<Self> {
        let field = Self { kind, mass };
        field.validate()?;
        Ok(field)
    }

    pub fn free() -> Self {
        Self { kind: ForceKind::Free, mass: 1.0 }
    }

    pub fn uniform(g: f64) -> Self {
        Self { kind: ForceKind::Uniform { g }, mass: 1.0 }
    }

    pub fn harmonic(omega: f64) -> Self {
        Self { kind: ForceKind::Harmonic { omega }, mass: 1.0 }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        let finite = |name: &str, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite")))
            }
        };
        match &self.kind {
            ForceKind::Free => Ok(()),
            ForceKind::Uniform { g } => finite("g", *g),
            ForceKind::Harmonic { omega } => finite("omega", *omega),
            ForceKind::Polynomial { coeffs } => {
                if coeffs.len() > MAX_POLY_DEGREE + 1 {
                    return Err(Error::Config(format!(
                        "polynomial degree {} exceeds {MAX_POLY_DEGREE}",
                        coeffs.len() - 1
                    )));
                }
                coeffs.iter().try_for_each(|c| finite("polynomial coefficient", *c))
            }
        }
    }

    /// Force per mass.
    pub fn f(&self, x: f64) -> f64 {
        match &self.kind {
            ForceKind::Free => 0.0,
            ForceKind::Uniform { g } => *g,
            ForceKind::Harmonic { omega } => -omega * omega * x,
            ForceKind::Polynomial { coeffs } => horner(coeffs, x),
        }
    }

    /// Derivative `f'(x)`.
    pub fn df(&self, x: f64) -> f64 {
        match &self.kind {
            ForceKind::Free | ForceKind::Uniform { .. } => 0.0,
            ForceKind::Harmonic { omega } => -omega * omega,
            ForceKind::Polynomial { coeffs } => {
                let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(n, c)| n as f64 * c).collect();
                horner(&d, x)
            }
        }
    }

    /// Potential with `V(0) = 0`, so that `V' = -m f`.
    pub fn potential(&self, x: f64) -> f64 {
        let m = self.mass;
        match &self.kind {
            ForceKind::Free => 0.0,
            ForceKind::Uniform { g } => -m * g * x,
            ForceKind::Harmonic { omega } => 0.5 * m * omega * omega * x * x,
            ForceKind::Polynomial { coeffs } => {
                let mut integral = Vec::with_capacity(coeffs.len() + 1);
                integral.push(0.0);
                integral.extend(coeffs.iter().enumerate().map(|(n, c)| c / (n as f64 + 1.0)));
                -m * horner(&integral, x)
            }
        }
    }

    /// `f` is affine in `x`, so expectation values close on the classical equations.
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            ForceKind::Free | ForceKind::Uniform { .. } | ForceKind::Harmonic { .. } => true,
            ForceKind::Polynomial { coeffs } => coeffs.iter().skip(2).all(|c| *c == 0.0),
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub v: f64,
}

impl ClassicalState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}
