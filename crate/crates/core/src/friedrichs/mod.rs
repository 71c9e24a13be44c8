//! Friedrichs model: one discrete level coupled to a continuum.
//!
//! To second order in the coupling the resonance sits at
//! `z₀ = ω₀ + δω₀ − iγ₀` with
//!
//! ```text
//! δω₀ = P ∫ n(ω) λ(ω)² / (ω₀ − ω) dω,     γ₀ = π n(ω₀) λ(ω₀)²
//! ```
//!
//! The multi-excitation sectors of the Lee–Friedrichs oscillator then carry
//! poles at `n·z₀`. [`oracle`] provides an exact-diagonalization reference for
//! the single-excitation sector.

pub mod oracle;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::quadrature::{principal_value, QuadratureError, QuadratureSpec};

pub use oracle::{discretized_oracle, ArrowheadEigen, DiscretizedFriedrichs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FriedrichsError {
    #[error("form factor strength must be finite and nonnegative, got {0}")]
    NegativeStrength(f64),
    #[error("form factor support [{0}, {1}] must satisfy 0 <= lo < hi")]
    InvalidSupport(f64, f64),
    #[error("form factor width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error("density of states must be nonnegative on the support")]
    NegativeDensity,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("oracle needs at least 10 continuum modes, got {0}")]
    TooFewModes(usize),
    #[error("time grid must be nonnegative and ascending")]
    InvalidTimeGrid,
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("arrowhead eigensolver: {0}")]
    Eigensolver(String),
}

/// Profile of the coupling `λ(ω)` inside its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormFactorShape {
    /// `λ(ω) = s`
    FlatBand,
    /// `λ(ω) = s·exp(-(ω - c)² / 2w²)`
    Gaussian { center: f64, width: f64 },
    /// `λ(ω)² = s² / (1 + ((ω - c)/w)²)`
    Lorentzian { center: f64, width: f64 },
}

#[derive(Debug, Clone, Deserialize)]
struct FormFactorRepr {
    #[serde(flatten)]
    shape: FormFactorShape,
    strength: f64,
    support: [f64; 2],
}

/// Coupling form factor `λ(ω)`, zero outside `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormFactorRepr")]
pub struct FormFactor {
    #[serde(flatten)]
    shape: FormFactorShape,
    strength: f64,
    support: [f64; 2],
}

impl TryFrom<FormFactorRepr> for FormFactor {
    type Error = FriedrichsError;

    fn try_from(r: FormFactorRepr) -> Result<Self, Self::Error> {
        FormFactor::new(r.shape, r.strength, r.support[0], r.support[1])
    }
}

impl FormFactor {
    pub fn new(
        shape: FormFactorShape,
        strength: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self, FriedrichsError> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(FriedrichsError::NegativeStrength(strength));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(FriedrichsError::InvalidSupport(lo, hi));
        }
        match shape {
            FormFactorShape::Gaussian { width, .. } | FormFactorShape::Lorentzian { width, .. }
                if !(width > 0.0 && width.is_finite()) =>
            {
                return Err(FriedrichsError::InvalidWidth(width));
            }
            _ => {}
        }
        Ok(Self { shape, strength, support: [lo, hi] })
    }

    pub fn flat_band(strength: f64, lo: f64, hi: f64) -> Result<Self, FriedrichsError> {
        Self::new(FormFactorShape::FlatBand, strength, lo, hi)
    }

    pub fn shape(&self) -> FormFactorShape {
        self.shape
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support[0], self.support[1])
    }

    pub fn band_width(&self) -> f64 {
        self.support[1] - self.support[0]
    }

    /// Same profile with a different overall strength.
    pub fn with_strength(&self, strength: f64) -> Result<Self, FriedrichsError> {
        Self::new(self.shape, strength, self.support[0], self.support[1])
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.support[0] && omega <= self.support[1]
    }

    /// `λ(ω)² / s²`, the squared profile at unit strength.
    fn unit_profile_sq(&self, omega: f64) -> f64 {
        if !self.contains(omega) {
            return 0.0;
        }
        match self.shape {
            FormFactorShape::FlatBand => 1.0,
            FormFactorShape::Gaussian { center, width } => {
                let x = (omega - center) / width;
                (-x * x).exp()
            }
            FormFactorShape::Lorentzian { center, width } => {
                let x = (omega - center) / width;
                1.0 / (1.0 + x * x)
            }
        }
    }

    pub fn coupling_sq(&self, omega: f64) -> f64 {
        self.strength * self.strength * self.unit_profile_sq(omega)
    }

    pub fn coupling(&self, omega: f64) -> f64 {
        self.coupling_sq(omega).sqrt()
    }
}

/// Continuum mode density `n(ω) = scale · ω^exponent`; the default is `n ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityOfStates {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for DensityOfStates {
    fn default() -> Self {
        Self { scale: 1.0, exponent: 0.0 }
    }
}

impl DensityOfStates {
    pub fn constant(scale: f64) -> Self {
        Self { scale, exponent: 0.0 }
    }

    pub fn density(&self, omega: f64) -> f64 {
        if self.exponent == 0.0 {
            self.scale
        } else {
            self.scale * omega.powf(self.exponent)
        }
    }

    pub fn validate(&self) -> Result<(), FriedrichsError> {
        if !(self.scale.is_finite() && self.scale >= 0.0 && self.exponent.is_finite()) {
            return Err(FriedrichsError::NegativeDensity);
        }
        Ok(())
    }
}

/// Second-order resonance `z₀ = (ω₀ + δω₀) − iγ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleResult {
    pub omega0: f64,
    pub delta_omega: f64,
    pub gamma0: f64,
    pub z0: Complex64,
}

impl PoleResult {
    pub fn new(omega0: f64, delta_omega: f64, gamma0: f64) -> Self {
        Self {
            omega0,
            delta_omega,
            gamma0,
            z0: Complex64::new(omega0 + delta_omega, -gamma0),
        }
    }

    /// Wraps an already known pole position.
    pub fn from_z0(z0: Complex64) -> Self {
        Self { omega0: z0.re, delta_omega: 0.0, gamma0: -z0.im, z0 }
    }

    /// Renormalized level `ω₀′ = Re z₀`.
    pub fn omega0_prime(&self) -> f64 {
        self.z0.re
    }
}

/// Golden-rule half-width `γ₀ = π n(ω₀) λ(ω₀)²`; zero off the band.
pub fn decay_rate(ff: &FormFactor, dos: &DensityOfStates, omega0: f64) -> f64 {
    PI * dos.density(omega0) * ff.coupling_sq(omega0)
}

/// Level shift `δω₀ = P ∫ n(ω) λ(ω)² / (ω₀ − ω) dω`.
///
/// The unit-strength integral is computed and rescaled by `s²`, so the result
/// scales exactly quadratically with the coupling strength.
pub fn level_shift(
    ff: &FormFactor,
    dos: &DensityOfStates,
    omega0: f64,
    quad: &QuadratureSpec,
) -> Result<f64, FriedrichsError> {
    if ff.strength == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = ff.support();
    let unit = principal_value(
        |w| dos.density(w) * ff.unit_profile_sq(w),
        lo,
        hi,
        omega0,
        quad,
    )?;
    Ok(ff.strength * ff.strength * unit)
}

pub fn second_order_pole(
    ff: &FormFactor,
    dos: &DensityOfStates,
    omega0: f64,
    quad: &QuadratureSpec,
) -> Result<PoleResult, FriedrichsError> {
    let delta = level_shift(ff, dos, omega0, quad)?;
    Ok(PoleResult::new(omega0, delta, decay_rate(ff, dos, omega0)))
}

/// Poles of the `n`-excitation sectors, `[0, z₀, 2z₀, …, n_max·z₀]`.
pub fn sector_spectrum(pole: &PoleResult, n_max: usize) -> Vec<Complex64> {
    (0..=n_max).map(|n| pole.z0 * n as f64).collect()
}

/// `diag(0, z₀, 2z₀, …, (dim−1)z₀)`: the effective oscillator Hamiltonian
/// `ħ z₀ a†a` in units of ħ, without the zero-point term.
pub fn effective_hamiltonian_diag(pole: &PoleResult, dim: usize) -> Array2<Complex64> {
    let diag = ndarray::Array1::from_iter((0..dim).map(|n| pole.z0 * n as f64));
    Array2::from_diag(&diag)
}
