//! The Omnès pendulum-in-a-bath scenario.
//!
//! An oscillator of mass `m` and frequency `ω` starts in a superposition
//! `a|α₁(0)⟩ + b|α₂(0)⟩` of two quasi-coherent states at rest, separated by
//! `L₀`. With `α₁(0) = 0` the second displacement is `α₂(0) = √(mω/2ħ)·L₀`.
//! Each Fock level decays with the ladder pole `n·z₀`, `z₀ = ω₀′ − iγ₀`.
//!
//! Times in this module follow the convention where `ħ` is absorbed into the
//! Hamiltonian: `γ₀` and `ω₀′` are rates (inverse time), `t_R = 1/γ₀` and
//! `t_D = 1/γ_eff`. `ħ` only enters through `α₂(0)`.

use ndarray::{array, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherent_states::{
    build_quasi_coherent, macroscopicity_check, overlap_direct, survival_amplitude, CoherentError,
    MacroscopicityReport, QuasiCoherentState, DEFAULT_K_LOWER,
};
use crate::fit::{fit_rate_through_origin, FitError};
use crate::friedrichs::PoleResult;

/// Samples used by [`short_time_rate_fit`].
pub const SHORT_TIME_SAMPLES: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmnesError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("superposition weights have zero norm")]
    ZeroWeights,
    #[error(
        "two-branch state is not macroscopic: |Δα| = {}, lower bound ok = {}, cutoff bound ok = {}",
        .0.delta_alpha, .0.lower_ok, .0.upper_ok
    )]
    NotMacroscopic(MacroscopicityReport),
    #[error("decoherence time undefined: gamma_eff = 0")]
    ZeroRate,
    #[error("t_max_fraction must lie in (0, 0.1], got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Coherent(#[from] CoherentError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// `α₂(0) = √(mω/2ħ)·L₀`.
pub fn alpha_from_length(m: f64, omega: f64, hbar: f64, l0: f64) -> Result<f64, OmnesError> {
    positive("m", m)?;
    positive("omega", omega)?;
    positive("hbar", hbar)?;
    nonnegative("L0", l0)?;
    Ok((m * omega / (2.0 * hbar)).sqrt() * l0)
}

fn positive(name: &'static str, value: f64) -> Result<(), OmnesError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(OmnesError::NonPositive { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<(), OmnesError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(OmnesError::Negative { name, value })
    }
}

fn default_hbar() -> f64 {
    1.0
}

fn default_k_lower() -> f64 {
    DEFAULT_K_LOWER
}

/// Raw scenario parameters as they appear in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmnesParams {
    pub m: f64,
    pub omega: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
    pub a: Complex64,
    pub b: Complex64,
    #[serde(rename = "N")]
    pub cutoff_n: usize,
    pub gamma0: f64,
    #[serde(default)]
    pub omega0p: f64,
    #[serde(default = "default_k_lower")]
    pub k_lower: f64,
}

impl OmnesParams {
    /// Takes `γ₀` and `ω₀′` from a solved pole.
    pub fn with_pole(mut self, pole: &PoleResult) -> Self {
        self.gamma0 = pole.gamma0;
        self.omega0p = pole.omega0_prime();
        self
    }
}

/// Validated scenario with both branch states built and weights normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OmnesParams", into = "OmnesParams")]
pub struct OmnesConfig {
    params: OmnesParams,
    alpha: f64,
    branch1: QuasiCoherentState,
    branch2: QuasiCoherentState,
}

impl TryFrom<OmnesParams> for OmnesConfig {
    type Error = OmnesError;

    fn try_from(params: OmnesParams) -> Result<Self, Self::Error> {
        Self::new(params)
    }
}

impl From<OmnesConfig> for OmnesParams {
    fn from(cfg: OmnesConfig) -> Self {
        cfg.params
    }
}

impl OmnesConfig {
    /// Validates the parameters and rescales `a, b` so that the truncated
    /// state `a|α₁⟩ + b|α₂⟩` has unit norm, cross overlap included.
    pub fn new(mut params: OmnesParams) -> Result<Self, OmnesError> {
        positive("L0", params.l0)?;
        nonnegative("gamma0", params.gamma0)?;
        positive("k_lower", params.k_lower)?;
        if !params.omega0p.is_finite() {
            return Err(OmnesError::Negative { name: "omega0p", value: params.omega0p });
        }
        let alpha = alpha_from_length(params.m, params.omega, params.hbar, params.l0)?;
        let branch1 = build_quasi_coherent(0.0, params.cutoff_n)?;
        let branch2 = build_quasi_coherent(alpha, params.cutoff_n)?;

        let (a, b) = (params.a, params.b);
        if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
            return Err(OmnesError::ZeroWeights);
        }
        let cross = overlap_direct(&branch1, &branch2)?;
        let norm_sq = a.norm_sqr() + b.norm_sqr() + 2.0 * (a.conj() * b).re * cross;
        if !(norm_sq > 0.0) {
            return Err(OmnesError::ZeroWeights);
        }
        let scale = norm_sq.sqrt().recip();
        params.a = a * scale;
        params.b = b * scale;
        Ok(Self { params, alpha, branch1, branch2 })
    }

    pub fn params(&self) -> &OmnesParams {
        &self.params
    }

    /// `α₂(0)`; `α₁(0)` is zero.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> (Complex64, Complex64) {
        (self.params.a, self.params.b)
    }

    pub fn gamma0(&self) -> f64 {
        self.params.gamma0
    }

    /// `z₀ = ω₀′ − iγ₀`.
    pub fn z0(&self) -> Complex64 {
        Complex64::new(self.params.omega0p, -self.params.gamma0)
    }

    /// `(mω/2ħ)·L₀² = α₂(0)²`.
    pub fn exponent_scale(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// `t_R = 1/γ₀` (infinite when `γ₀ = 0`).
    pub fn relaxation_time(&self) -> f64 {
        self.params.gamma0.recip()
    }

    pub fn macroscopicity(&self) -> MacroscopicityReport {
        macroscopicity_check(0.0, self.alpha, self.params.cutoff_n, self.params.k_lower)
    }

    /// `⟨α_i(0)|α_j(t)⟩` from the truncated branch states.
    fn evolved(&self, i: usize, j: usize, t: f64) -> Complex64 {
        let pick = |k| if k == 1 { &self.branch1 } else { &self.branch2 };
        survival_amplitude(pick(i).coeffs(), pick(j).coeffs(), self.z0(), t, 1.0)
            .expect("branch states share the cutoff")
    }
}

/// Off-diagonal part of the density matrix in the `{|α₁(0)⟩, |α₂(0)⟩}` frame.
///
/// ```text
/// ρ_ij(t) = a b* ⟨αᵢ(0)|α₁(t)⟩⟨α₂(t)|αⱼ(0)⟩ + a* b ⟨αᵢ(0)|α₂(t)⟩⟨α₁(t)|αⱼ(0)⟩
/// ```
///
/// with every overlap taken between the truncated branch states.
pub fn nd_components(cfg: &OmnesConfig, t: f64) -> Result<Array2<Complex64>, OmnesError> {
    let report = cfg.macroscopicity();
    if !report.macroscopic {
        return Err(OmnesError::NotMacroscopic(report));
    }
    let (a, b) = cfg.weights();
    let ab = a * b.conj();
    let entry = |i: usize, j: usize| {
        ab * cfg.evolved(i, 1, t) * cfg.evolved(j, 2, t).conj()
            + ab.conj() * cfg.evolved(i, 2, t) * cfg.evolved(j, 1, t).conj()
    };
    Ok(array![[entry(1, 1), entry(1, 2)], [entry(2, 1), entry(2, 2)]])
}

/// Coherent-branch factor `⟨α₁(0)|α₁(t)⟩⟨α₂(t)|α₂(0)⟩` of `ρ₁₂`, i.e. the
/// first term of [`nd_components`] divided by `a b*`. Valid for any `α₂(0)`.
pub fn decoherence_factor(cfg: &OmnesConfig, t: f64) -> Complex64 {
    cfg.evolved(1, 1, t) * cfg.evolved(2, 2, t).conj()
}

/// `|ρ₁₂(t)/ρ₁₂(0)|` in closed form.
///
/// `envelope = true`: `exp(−α²(1 − e^{−γ₀t}))`;
/// `envelope = false`: `exp(−α²(1 − e^{−γ₀t}·cos ω₀′t))`.
pub fn closed_form_nd_modulus(cfg: &OmnesConfig, t: f64, envelope: bool) -> f64 {
    let decay = (-cfg.params.gamma0 * t).exp();
    let kept = if envelope { decay } else { decay * (cfg.params.omega0p * t).cos() };
    (-cfg.exponent_scale() * (1.0 - kept)).exp()
}

/// `γ_eff = (mω/2ħ)·L₀²·γ₀`.
pub fn gamma_eff_omnes(cfg: &OmnesConfig) -> f64 {
    cfg.exponent_scale() * cfg.params.gamma0
}

/// `t_D = 1/γ_eff`.
pub fn decoherence_time_omnes(cfg: &OmnesConfig) -> Result<f64, OmnesError> {
    let rate = gamma_eff_omnes(cfg);
    if rate > 0.0 {
        Ok(rate.recip())
    } else {
        Err(OmnesError::ZeroRate)
    }
}

/// Fits `exp(−γ_fit t)` to the closed-form envelope on `[0, t_max_fraction·t_R]`.
pub fn short_time_rate_fit(cfg: &OmnesConfig, t_max_fraction: f64) -> Result<f64, OmnesError> {
    if !(t_max_fraction > 0.0 && t_max_fraction <= 0.1) {
        return Err(OmnesError::InvalidFraction(t_max_fraction));
    }
    if cfg.params.gamma0 == 0.0 {
        return Ok(0.0);
    }
    let t_max = t_max_fraction * cfg.relaxation_time();
    let last = (SHORT_TIME_SAMPLES - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..SHORT_TIME_SAMPLES)
        .map(|i| {
            let t = t_max * i as f64 / last;
            (t, closed_form_nd_modulus(cfg, t, true))
        })
        .collect();
    Ok(fit_rate_through_origin(&samples)?)
}
