//! Catalogues of exponentially decaying modes.
//!
//! A catalogue describes a relevant expectation value as
//!
//! ```text
//! F(t) = F* + Σ_i a_i(t) · exp(-γ_i t / ħ),   a_i(t) = a_i(0) · cos(ω_i t / ħ + φ_i)
//! ```
//!
//! and derives the relaxation time `ħ/γ_min`, the amplitude-weighted effective
//! rate `γ_eff = Σ a_i(0) γ_i / Σ a_i(0)`, the decoherence time `ħ/γ_eff`, and the
//! slow/fast split that defines the preferred state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogueError {
    #[error("mode {index}: decay rate must be finite and nonnegative, got {rate}")]
    NegativeRate { index: usize, rate: f64 },
    #[error("mode {index}: non-finite amplitude, frequency or phase")]
    NonFiniteMode { index: usize },
    #[error("hbar must be finite and positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("equilibrium value must be finite, got {0}")]
    NonFiniteEquilibrium(f64),
    #[error("catalogue has no modes")]
    Empty,
    #[error("catalogue does not relax: mode {index} has zero decay rate")]
    NonRelaxing { index: usize },
    #[error("effective rate undefined: initial amplitudes sum to zero")]
    UndefinedEffectiveRate,
    #[error("effective rate {0} is not positive; decoherence time undefined")]
    NonPositiveEffectiveRate(f64),
}

/// One decaying contribution `a(0)·cos(ω t/ħ + φ)·exp(-γ t/ħ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayMode {
    #[serde(rename = "a0")]
    pub amplitude_0: f64,
    #[serde(rename = "gamma")]
    pub rate: f64,
    #[serde(rename = "omega", default)]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl DecayMode {
    /// Non-oscillating mode.
    pub fn new(amplitude_0: f64, rate: f64) -> Self {
        Self { amplitude_0, rate, frequency: 0.0, phase: 0.0 }
    }

    pub fn oscillating(amplitude_0: f64, rate: f64, frequency: f64, phase: f64) -> Self {
        Self { amplitude_0, rate, frequency, phase }
    }

    /// Oscillating prefactor `a(t)`. At `t = 0` with zero phase this is `amplitude_0`.
    pub fn amplitude(&self, t: f64, hbar: f64) -> f64 {
        if self.frequency == 0.0 && self.phase == 0.0 {
            return self.amplitude_0;
        }
        self.amplitude_0 * (self.frequency * t / hbar + self.phase).cos()
    }

    /// Full contribution `a(t)·exp(-γ t/ħ)`.
    pub fn value(&self, t: f64, hbar: f64) -> f64 {
        self.amplitude(t, hbar) * (-self.rate * t / hbar).exp()
    }

    /// Magnitude envelope `|a(0)|·exp(-γ t/ħ)`, free of oscillation zeros.
    pub fn envelope(&self, t: f64, hbar: f64) -> f64 {
        self.amplitude_0.abs() * (-self.rate * t / hbar).exp()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct CatalogueRepr {
    #[serde(default = "default_hbar")]
    hbar: f64,
    #[serde(default)]
    equilibrium: f64,
    modes: Vec<DecayMode>,
}

fn default_hbar() -> f64 {
    1.0
}

/// Ordered set of decay modes plus the equilibrium value they relax to.
///
/// Modes are kept sorted by ascending rate; ties are broken by ascending
/// frequency and then by insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogueRepr")]
pub struct ModeCatalogue {
    hbar: f64,
    #[serde(rename = "equilibrium")]
    equilibrium_value: f64,
    modes: Vec<DecayMode>,
}

impl TryFrom<CatalogueRepr> for ModeCatalogue {
    type Error = CatalogueError;

    fn try_from(repr: CatalogueRepr) -> Result<Self, Self::Error> {
        ModeCatalogue::new(repr.modes, repr.equilibrium, repr.hbar)
    }
}

impl ModeCatalogue {
    pub fn new(
        modes: Vec<DecayMode>,
        equilibrium_value: f64,
        hbar: f64,
    ) -> Result<Self, CatalogueError> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(CatalogueError::NonPositiveHbar(hbar));
        }
        if !equilibrium_value.is_finite() {
            return Err(CatalogueError::NonFiniteEquilibrium(equilibrium_value));
        }
        for (index, m) in modes.iter().enumerate() {
            if !(m.rate.is_finite() && m.rate >= 0.0) {
                return Err(CatalogueError::NegativeRate { index, rate: m.rate });
            }
            if !(m.amplitude_0.is_finite() && m.frequency.is_finite() && m.phase.is_finite()) {
                return Err(CatalogueError::NonFiniteMode { index });
            }
        }
        let mut modes = modes;
        // stable sort keeps input order among exact ties
        modes.sort_by(|a, b| {
            a.rate
                .total_cmp(&b.rate)
                .then_with(|| a.frequency.total_cmp(&b.frequency))
        });
        Ok(Self { hbar, equilibrium_value, modes })
    }

    pub fn modes(&self) -> &[DecayMode] {
        &self.modes
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn equilibrium_value(&self) -> f64 {
        self.equilibrium_value
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `F(t) = F* + Σ a_i(t)·exp(-γ_i t/ħ)`.
    pub fn evaluate_mode_sum(&self, t: f64) -> f64 {
        self.equilibrium_value + self.deviation(t)
    }

    /// `f(t) = F(t) - F*`, the decaying part alone.
    pub fn deviation(&self, t: f64) -> f64 {
        self.modes.iter().map(|m| m.value(t, self.hbar)).sum()
    }

    /// `f(0) = Σ a_i(0)`.
    pub fn initial_amplitude(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude_0).sum()
    }

    pub fn min_rate(&self) -> Result<f64, CatalogueError> {
        self.modes.first().map(|m| m.rate).ok_or(CatalogueError::Empty)
    }

    pub fn max_rate(&self) -> Result<f64, CatalogueError> {
        self.modes.last().map(|m| m.rate).ok_or(CatalogueError::Empty)
    }

    /// Rate of the second slowest mode (`γ_1`), if there is one.
    ///
    /// Kept for comparison with the "random pole distribution" estimate
    /// `t_D = ħ/γ_1`; the decoherence time proper uses [`Self::effective_rate`].
    pub fn second_rate(&self) -> Option<f64> {
        self.modes.get(1).map(|m| m.rate)
    }

    /// `t_R = ħ / min_i γ_i`.
    pub fn relaxation_time(&self) -> Result<f64, CatalogueError> {
        if self.modes.is_empty() {
            return Err(CatalogueError::Empty);
        }
        if let Some(index) = self.modes.iter().position(|m| m.rate == 0.0) {
            return Err(CatalogueError::NonRelaxing { index });
        }
        Ok(self.hbar / self.modes[0].rate)
    }

    /// `γ_eff = Σ a_i(0) γ_i / Σ a_i(0)`.
    ///
    /// Evaluated as `γ_min + Σ a_i (γ_i - γ_min) / Σ a_i`, which is
    /// algebraically identical and never rounds below `γ_min` when all
    /// amplitudes are positive.
    pub fn effective_rate(&self) -> Result<f64, CatalogueError> {
        let gamma_min = self.min_rate()?;
        let total = self.initial_amplitude();
        if total == 0.0 {
            return Err(CatalogueError::UndefinedEffectiveRate);
        }
        let excess: f64 = self
            .modes
            .iter()
            .map(|m| m.amplitude_0 * (m.rate - gamma_min))
            .sum();
        Ok(gamma_min + excess / total)
    }

    /// `t_D = ħ / γ_eff`.
    pub fn decoherence_time(&self) -> Result<f64, CatalogueError> {
        let gamma_eff = self.effective_rate()?;
        if gamma_eff <= 0.0 {
            return Err(CatalogueError::NonPositiveEffectiveRate(gamma_eff));
        }
        Ok(self.hbar / gamma_eff)
    }

    /// Partition into slow modes (`γ_i < γ_eff`) and fast modes (the rest).
    ///
    /// A mode sitting exactly on the threshold is fast.
    pub fn split_modes(&self, gamma_eff: f64) -> (ModeCatalogue, ModeCatalogue) {
        let (slow, fast): (Vec<_>, Vec<_>) =
            self.modes.iter().partition(|m| m.rate < gamma_eff);
        let with_modes = |modes: Vec<DecayMode>| ModeCatalogue {
            hbar: self.hbar,
            equilibrium_value: self.equilibrium_value,
            modes,
        };
        (with_modes(slow), with_modes(fast))
    }

    /// Single-exponential approximation `f(0)·exp(-γ_eff t/ħ)` of the decaying part.
    pub fn linearized_envelope(&self, t: f64) -> Result<f64, CatalogueError> {
        let gamma_eff = self.effective_rate()?;
        Ok(self.initial_amplitude() * (-gamma_eff * t / self.hbar).exp())
    }

    /// Samples `(t, F(t))` on the given grid.
    pub fn sample(&self, t_grid: &[f64]) -> Vec<(f64, f64)> {
        t_grid.iter().map(|&t| (t, self.evaluate_mode_sum(t))).collect()
    }
}
