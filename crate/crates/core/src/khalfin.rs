//! One- and two-pole evolution profiles with a power-law Khalfin tail, and
//! crossover detection between fast and slow contributions.
//!
//! Poles are written `z = ω − iγ/2`, so a diagonal pole term decays as
//! `exp(−γt/ħ)` and a cross term between `z_j` and `z_k` as
//! `exp(−(γ_j + γ_k)t/2ħ)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode_catalogue::{CatalogueError, DecayMode, ModeCatalogue};

pub const DEFAULT_TAIL_EXPONENT: f64 = 2.0;
pub const DEFAULT_ETA: f64 = 0.01;
/// Default search horizon in units of the slowest fast-mode lifetime.
pub const DEFAULT_HORIZON_LIFETIMES: f64 = 100.0;
const GRID_POINTS: usize = 4000;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KhalfinError {
    #[error("pole {index} must lie in the lower half-plane (gamma = {gamma})")]
    NonDecayingPole { index: usize, gamma: f64 },
    #[error("model 2 needs gamma0 <= gamma1, got gamma0 = {gamma0}, gamma1 = {gamma1}")]
    PoleOrdering { gamma0: f64, gamma1: f64 },
    #[error("invalid tail: {0}")]
    InvalidTail(&'static str),
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("eta must lie in (0, 1), got {0}")]
    InvalidEta(f64),
    #[error("slow set index {0} is out of range")]
    BadModeIndex(usize),
    #[error("search horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("fast contributions never drop below eta times the slow ones before t = {horizon}")]
    NoCrossover { horizon: f64 },
    #[error(transparent)]
    Catalogue(#[from] CatalogueError),
}

/// `C·(1 + t/τ)^{−p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailRepr", into = "TailRepr")]
pub struct KhalfinTail {
    amplitude: f64,
    onset: f64,
    exponent: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailRepr {
    amplitude: f64,
    onset: f64,
    #[serde(default = "default_exponent")]
    exponent: f64,
}

fn default_exponent() -> f64 {
    DEFAULT_TAIL_EXPONENT
}

impl TryFrom<TailRepr> for KhalfinTail {
    type Error = KhalfinError;

    fn try_from(r: TailRepr) -> Result<Self, Self::Error> {
        KhalfinTail::new(r.amplitude, r.onset, r.exponent)
    }
}

impl From<KhalfinTail> for TailRepr {
    fn from(t: KhalfinTail) -> Self {
        TailRepr { amplitude: t.amplitude, onset: t.onset, exponent: t.exponent }
    }
}

impl KhalfinTail {
    pub fn new(amplitude: f64, onset: f64, exponent: f64) -> Result<Self, KhalfinError> {
        if !amplitude.is_finite() {
            return Err(KhalfinError::InvalidTail("amplitude must be finite"));
        }
        if !(onset > 0.0 && onset.is_finite()) {
            return Err(KhalfinError::InvalidTail("onset must be positive"));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(KhalfinError::InvalidTail("exponent must be positive"));
        }
        Ok(Self { amplitude, onset, exponent })
    }

    /// Exponent 2 with onset at the relaxation time.
    pub fn with_defaults(amplitude: f64, relaxation_time: f64) -> Result<Self, KhalfinError> {
        Self::new(amplitude, relaxation_time, DEFAULT_TAIL_EXPONENT)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (1.0 + t / self.onset).powf(-self.exponent)
    }
}

/// `F(t) = F* + Σ pole terms + tail(t)` together with its table of
/// characteristic times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionProfile {
    pole_terms: ModeCatalogue,
    tail: Option<KhalfinTail>,
    characteristic_times: Vec<f64>,
}

impl EvolutionProfile {
    pub fn new(
        pole_terms: ModeCatalogue,
        tail: Option<KhalfinTail>,
        characteristic_times: Vec<f64>,
    ) -> Self {
        Self { pole_terms, tail, characteristic_times }
    }

    /// Pole terms sorted by rate; indices into [`ModeCatalogue::modes`] form
    /// the slow sets accepted by [`crossover_time`].
    pub fn pole_terms(&self) -> &ModeCatalogue {
        &self.pole_terms
    }

    pub fn tail(&self) -> Option<&KhalfinTail> {
        self.tail.as_ref()
    }

    pub fn equilibrium(&self) -> f64 {
        self.pole_terms.equilibrium_value()
    }

    pub fn hbar(&self) -> f64 {
        self.pole_terms.hbar()
    }

    /// Characteristic times of the non-equilibrium terms, in the order the
    /// model lists them; `f64::INFINITY` marks the tail.
    pub fn characteristic_times(&self) -> &[f64] {
        &self.characteristic_times
    }

    pub fn tail_value(&self, t: f64) -> f64 {
        self.tail.map_or(0.0, |tail| tail.value(t))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.pole_terms.evaluate_mode_sum(t) + self.tail_value(t)
    }

    /// Indices of the pole terms with rate strictly below `rate`.
    pub fn modes_below(&self, rate: f64) -> Vec<usize> {
        (0..self.pole_terms.len())
            .filter(|&i| self.pole_terms.modes()[i].rate < rate)
            .collect()
    }
}

fn pole_gamma(z: Complex64, index: usize) -> Result<f64, KhalfinError> {
    let gamma = -2.0 * z.im;
    if gamma > 0.0 && gamma.is_finite() && z.re.is_finite() {
        Ok(gamma)
    } else {
        Err(KhalfinError::NonDecayingPole { index, gamma })
    }
}

fn check_hbar(hbar: f64) -> Result<(), KhalfinError> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(KhalfinError::NonPositiveHbar(hbar))
    }
}

/// One pole `z₀ = ω₀ − iγ₀/2` plus a Khalfin tail.
///
/// `weights` are `[equilibrium, diagonal, cross, cross]`. The diagonal term
/// decays at `γ₀`, the two pole–continuum cross terms at `γ₀/2` and oscillate
/// at `Re z₀`. The time table is `[ħ/γ₀, 2ħ/γ₀, 2ħ/γ₀, ∞]`.
pub fn model1_profile(
    z0: Complex64,
    tail: Option<KhalfinTail>,
    weights: [f64; 4],
    hbar: f64,
) -> Result<EvolutionProfile, KhalfinError> {
    check_hbar(hbar)?;
    let gamma0 = pole_gamma(z0, 0)?;
    let [equilibrium, diagonal, cross_a, cross_b] = weights;
    let modes = vec![
        DecayMode::new(diagonal, gamma0),
        DecayMode::oscillating(cross_a, gamma0 / 2.0, z0.re, 0.0),
        DecayMode::oscillating(cross_b, gamma0 / 2.0, z0.re, 0.0),
    ];
    let pole_terms = ModeCatalogue::new(modes, equilibrium, hbar)?;
    let times = vec![hbar / gamma0, 2.0 * hbar / gamma0, 2.0 * hbar / gamma0, f64::INFINITY];
    Ok(EvolutionProfile::new(pole_terms, tail, times))
}

/// Two poles `z₀`, `z₁` with `γ₀ ≤ γ₁` and no tail.
///
/// `weights` are `[equilibrium, w₀₀, w₁₀, w₀₁, w₁₁]` with rates
/// `γ₀, (γ₀+γ₁)/2, (γ₀+γ₁)/2, γ₁`; the cross terms oscillate at
/// `Re z₁ − Re z₀`. The time table is `[ħ/γ₀, ħ/(γ₁+γ₀), ħ/(γ₁+γ₀)]`.
pub fn model2_profile(
    z0: Complex64,
    z1: Complex64,
    weights: [f64; 5],
    hbar: f64,
) -> Result<EvolutionProfile, KhalfinError> {
    check_hbar(hbar)?;
    let gamma0 = pole_gamma(z0, 0)?;
    let gamma1 = pole_gamma(z1, 1)?;
    if gamma1 < gamma0 {
        return Err(KhalfinError::PoleOrdering { gamma0, gamma1 });
    }
    if gamma1 == gamma0 {
        log::warn!("model 2 with gamma1 = gamma0 = {gamma0} degenerates to a single rate");
    }
    let [equilibrium, w00, w10, w01, w11] = weights;
    let cross_rate = 0.5 * (gamma0 + gamma1);
    let beat = z1.re - z0.re;
    let modes = vec![
        DecayMode::new(w00, gamma0),
        DecayMode::oscillating(w10, cross_rate, beat, 0.0),
        DecayMode::oscillating(w01, cross_rate, -beat, 0.0),
        DecayMode::new(w11, gamma1),
    ];
    let pole_terms = ModeCatalogue::new(modes, equilibrium, hbar)?;
    let sum = gamma1 + gamma0;
    Ok(EvolutionProfile::new(pole_terms, None, vec![hbar / gamma0, hbar / sum, hbar / sum]))
}

/// `t_R = ħ/γ₀` and `t_D = ħ/γ₁` for two poles.
pub fn model2_times(z0: Complex64, z1: Complex64, hbar: f64) -> Result<(f64, f64), KhalfinError> {
    check_hbar(hbar)?;
    Ok((hbar / pole_gamma(z0, 0)?, hbar / pole_gamma(z1, 1)?))
}

struct Envelopes<'a> {
    profile: &'a EvolutionProfile,
    slow: Vec<bool>,
}

impl Envelopes<'_> {
    /// `(fast, slow)` magnitude envelopes at `t`.
    fn at(&self, t: f64) -> (f64, f64) {
        let hbar = self.profile.hbar();
        let mut fast = 0.0;
        let mut slow = self.profile.tail_value(t).abs();
        for (mode, &is_slow) in self.profile.pole_terms.modes().iter().zip(&self.slow) {
            let e = mode.envelope(t, hbar);
            if is_slow {
                slow += e;
            } else {
                fast += e;
            }
        }
        (fast, slow)
    }
}

/// Earliest `t` with `fast(t) ≤ η·slow(t)`, using the default horizon of
/// [`DEFAULT_HORIZON_LIFETIMES`] times `ħ/γ` of the slowest fast term.
///
/// `fast(t)` sums the magnitude envelopes `|a_i|·exp(−γ_i t/ħ)` of the pole
/// terms outside `slow_set`; `slow(t)` sums those inside it plus `|tail(t)|`.
pub fn crossover_time(profile: &EvolutionProfile, slow_set: &[usize], eta: f64) -> Result<f64, KhalfinError> {
    let hbar = profile.hbar();
    let slowest_fast = (0..profile.pole_terms.len())
        .filter(|i| !slow_set.contains(i))
        .map(|i| profile.pole_terms.modes()[i].rate)
        .fold(f64::INFINITY, f64::min);
    // without a decaying fast term the horizon only bounds the scan
    let lifetime = if slowest_fast > 0.0 && slowest_fast.is_finite() { hbar / slowest_fast } else { hbar };
    let horizon = DEFAULT_HORIZON_LIFETIMES * lifetime;
    crossover_time_within(profile, slow_set, eta, horizon)
}

/// [`crossover_time`] on an explicit search horizon `[0, horizon]`.
///
/// A uniform scan locates the first sign change of `fast − η·slow`, which is
/// then refined by bisection to the resolution of `f64`.
pub fn crossover_time_within(
    profile: &EvolutionProfile,
    slow_set: &[usize],
    eta: f64,
    horizon: f64,
) -> Result<f64, KhalfinError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(KhalfinError::InvalidEta(eta));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(KhalfinError::InvalidHorizon(horizon));
    }
    let n = profile.pole_terms.len();
    let mut slow = vec![false; n];
    for &i in slow_set {
        *slow.get_mut(i).ok_or(KhalfinError::BadModeIndex(i))? = true;
    }
    let env = Envelopes { profile, slow };
    let crossed = |t: f64| {
        let (f, s) = env.at(t);
        f <= eta * s
    };

    if crossed(0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=GRID_POINTS {
        let t = horizon * k as f64 / GRID_POINTS as f64;
        if crossed(t) {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi.ok_or(KhalfinError::NoCrossover { horizon })?;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crossed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
