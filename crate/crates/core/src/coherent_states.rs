//! Truncated ("quasi-") coherent states and their overlaps.
//!
//! A quasi-coherent state keeps the first `N + 1` Fock components of a real
//! coherent state and renormalizes:
//!
//! ```text
//! |α⟩_N = Z^{-1/2} Σ_{n≤N} αⁿ/√n! |n⟩,     Z = Σ_{k≤N} α^{2k}/k!
//! ```
//!
//! Under the effective ladder Hamiltonian each Fock component picks up
//! `exp(−i n z₀ t/ħ)`, so overlaps of evolved states are power series in
//! `exp(−i z₀ t/ħ)`. Everything is evaluated term by term in log space;
//! cutoffs up to [`MAX_CUTOFF`] are supported.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_CUTOFF: usize = 500;

/// Default `k` in the operational reading `|Δα| ≥ k` of `|Δα| ≫ 1`.
pub const DEFAULT_K_LOWER: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherentError {
    #[error("displacement must be finite and nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error("cutoff {0} exceeds the supported maximum {MAX_CUTOFF}")]
    CutoffTooLarge(usize),
    #[error("states have different cutoffs ({0} vs {1})")]
    CutoffMismatch(usize, usize),
    #[error("coefficient vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Which normalization the evolved-overlap series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `exp(−α²/2)` per state: the `N → ∞` coherent-state value.
    #[default]
    Exponential,
    /// `Z^{-1/2}` per state: the exact truncated normalization.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiCoherentState {
    alpha: f64,
    #[serde(rename = "N")]
    cutoff_n: usize,
    coeffs: Vec<Complex64>,
}

impl QuasiCoherentState {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff_n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `ln n!` for `n = 0..=max`.
fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln Z` with `Z = Σ_{k≤N} α^{2k}/k!`.
fn ln_truncated_norm(alpha: f64, cutoff_n: usize, ln_fact: &[f64]) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let la = alpha.ln();
    let terms: Vec<f64> = (0..=cutoff_n).map(|k| 2.0 * k as f64 * la - ln_fact[k]).collect();
    log_sum_exp(&terms)
}

fn check_alpha(alpha: f64) -> Result<(), CoherentError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(CoherentError::NegativeAlpha(alpha))
    }
}

pub fn build_quasi_coherent(alpha: f64, cutoff_n: usize) -> Result<QuasiCoherentState, CoherentError> {
    check_alpha(alpha)?;
    if cutoff_n > MAX_CUTOFF {
        return Err(CoherentError::CutoffTooLarge(cutoff_n));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); cutoff_n + 1];
    if alpha == 0.0 {
        coeffs[0] = Complex64::new(1.0, 0.0);
    } else {
        let ln_fact = ln_factorials(cutoff_n);
        let la = alpha.ln();
        let log_c: Vec<f64> = (0..=cutoff_n).map(|n| n as f64 * la - 0.5 * ln_fact[n]).collect();
        let half_ln_z = 0.5 * ln_truncated_norm(alpha, cutoff_n, &ln_fact);
        for (c, l) in coeffs.iter_mut().zip(&log_c) {
            *c = Complex64::new((l - half_ln_z).exp(), 0.0);
        }
    }
    Ok(QuasiCoherentState { alpha, cutoff_n, coeffs })
}

/// Exact truncated overlap `⟨α₁|α₂⟩_N` from the coefficient vectors.
pub fn overlap_direct(s1: &QuasiCoherentState, s2: &QuasiCoherentState) -> Result<f64, CoherentError> {
    if s1.cutoff_n != s2.cutoff_n {
        return Err(CoherentError::CutoffMismatch(s1.cutoff_n, s2.cutoff_n));
    }
    Ok(s1
        .coeffs
        .iter()
        .zip(&s2.coeffs)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}

/// Truncated exponential series `Σ_{n≤N} (−(α₁−α₂)²/2)ⁿ / n!`.
pub fn overlap_series(alpha1: f64, alpha2: f64, cutoff_n: usize) -> f64 {
    let x = -0.5 * (alpha1 - alpha2).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=cutoff_n {
        term *= x / n as f64;
        sum += term;
    }
    sum
}

/// Lagrange bound `((α₁−α₂)²/2)^{N+1} / (N+1)!` on the series truncation error.
pub fn remainder_bound(alpha1: f64, alpha2: f64, cutoff_n: usize) -> f64 {
    let x = 0.5 * (alpha1 - alpha2).powi(2);
    if x == 0.0 {
        return 0.0;
    }
    let m = cutoff_n + 1;
    let ln_fact: f64 = (1..=m).map(|k| (k as f64).ln()).sum();
    (m as f64 * x.ln() - ln_fact).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroscopicityReport {
    pub delta_alpha: f64,
    /// `|Δα| ≥ k_lower`: the two branches are far apart.
    pub lower_ok: bool,
    /// `|Δα| ≤ √(2(N+1))`: the cutoff resolves the separation.
    pub upper_ok: bool,
    pub macroscopic: bool,
}

pub fn macroscopicity_check(alpha1: f64, alpha2: f64, cutoff_n: usize, k_lower: f64) -> MacroscopicityReport {
    let delta_alpha = (alpha1 - alpha2).abs();
    let lower_ok = delta_alpha >= k_lower;
    let upper_ok = delta_alpha <= (2.0 * (cutoff_n as f64 + 1.0)).sqrt();
    MacroscopicityReport { delta_alpha, lower_ok, upper_ok, macroscopic: lower_ok && upper_ok }
}

/// `⟨α_bra(0)|α_ket(t)⟩` under the ladder evolution `|n⟩ → exp(−i n z₀ t/ħ)|n⟩`:
///
/// ```text
/// 𝒩 · Σ_{n≤N} (α_bra α_ket)ⁿ/n! · exp(−i z₀ t/ħ)ⁿ
/// ```
///
/// with `𝒩 = exp(−(α_bra² + α_ket²)/2)` or the truncated `(Z_bra Z_ket)^{-1/2}`.
pub fn evolved_overlap(
    alpha_bra: f64,
    alpha_ket: f64,
    z0: Complex64,
    t: f64,
    cutoff_n: usize,
    hbar: f64,
    normalization: Normalization,
) -> Complex64 {
    let ln_fact = ln_factorials(cutoff_n);
    let ln_norm = match normalization {
        Normalization::Exponential => -0.5 * (alpha_bra * alpha_bra + alpha_ket * alpha_ket),
        Normalization::Truncated => {
            -0.5 * (ln_truncated_norm(alpha_bra, cutoff_n, &ln_fact)
                + ln_truncated_norm(alpha_ket, cutoff_n, &ln_fact))
        }
    };
    let product = alpha_bra * alpha_ket;
    if product == 0.0 {
        return Complex64::new(ln_norm.exp(), 0.0);
    }
    let ln_product = product.ln();
    // exp(−i z₀ t/ħ) = exp(Im z₀ · t/ħ) · exp(−i Re z₀ · t/ħ)
    let decay = z0.im * t / hbar;
    let rotation = -z0.re * t / hbar;
    (0..=cutoff_n)
        .map(|n| {
            let nf = n as f64;
            let magnitude = (ln_norm + nf * (ln_product + decay) - ln_fact[n]).exp();
            Complex64::from_polar(magnitude, nf * rotation)
        })
        .sum()
}

/// `Σ_n ket_n · conj(bra_n) · exp(−i n z₀ t/ħ)`.
pub fn survival_amplitude(
    bra: &[Complex64],
    ket: &[Complex64],
    z0: Complex64,
    t: f64,
    hbar: f64,
) -> Result<Complex64, CoherentError> {
    if bra.len() != ket.len() {
        return Err(CoherentError::LengthMismatch(bra.len(), ket.len()));
    }
    let step = Complex64::new(0.0, -1.0) * z0 * (t / hbar);
    Ok(bra
        .iter()
        .zip(ket)
        .enumerate()
        .map(|(n, (b, k))| k * b.conj() * (step * n as f64).exp())
        .sum())
}
