//! Scenario files: one JSON object with a `kind` tag, a `params` block, a
//! time grid and an optional output directory.

use std::fmt;
use std::path::{Path, PathBuf};

use decolab_core::{
    BiPartSpec, DecayMode, DensityOfStates, FormFactor, KhalfinTail, LadderScenario,
    ModeCatalogue, OmnesConfig, QuadratureSpec,
};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// One problem found in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Field path such as `params.modes[1].gamma`, or `line L, column C`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn new(location: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { location: location.into(), message: message.to_string() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Modes,
    Friedrichs,
    Omnes,
    Basis,
    Khalfin,
    Bipart,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Modes,
        ScenarioKind::Friedrichs,
        ScenarioKind::Omnes,
        ScenarioKind::Basis,
        ScenarioKind::Khalfin,
        ScenarioKind::Bipart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Modes => "modes",
            ScenarioKind::Friedrichs => "friedrichs",
            ScenarioKind::Omnes => "omnes",
            ScenarioKind::Basis => "basis",
            ScenarioKind::Khalfin => "khalfin",
            ScenarioKind::Bipart => "bipart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// First sample; defaults to 0 for linear grids and is required for log grids.
    #[serde(default)]
    pub t_min: Option<f64>,
}

impl TimeGridSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_points < 2 {
            out.push(format!("n_points must be at least 2, got {}", self.n_points));
        }
        if !self.t_max.is_finite() {
            out.push(format!("t_max must be finite, got {}", self.t_max));
        }
        match (self.spacing, self.t_min) {
            (Spacing::Log, None) => out.push("log spacing needs a positive t_min".into()),
            (Spacing::Log, Some(t0)) if !(t0 > 0.0 && t0.is_finite()) => {
                out.push(format!("log spacing needs a positive t_min, got {t0}"))
            }
            (Spacing::Linear, Some(t0)) if !(t0 >= 0.0 && t0.is_finite()) => {
                out.push(format!("t_min must be nonnegative, got {t0}"))
            }
            _ => {}
        }
        let t0 = self.t_min.unwrap_or(0.0);
        if self.t_max.is_finite() && t0.is_finite() && !(self.t_max > t0) {
            out.push(format!("grid must be strictly increasing: t_max = {} <= t_min = {t0}", self.t_max));
        }
        out
    }

    /// Sample times, first and last exactly `t_min` and `t_max`.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let last = (n - 1) as f64;
        let t0 = self.t_min.unwrap_or(0.0);
        let mut out: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..n).map(|i| t0 + (self.t_max - t0) * (i as f64 / last)).collect(),
            Spacing::Log => {
                let ratio = (self.t_max / t0).ln();
                (0..n).map(|i| t0 * (ratio * i as f64 / last).exp()).collect()
            }
        };
        out[n - 1] = self.t_max;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FriedrichsParams {
    pub form_factor: FormFactor,
    #[serde(default)]
    pub dos: DensityOfStates,
    pub omega0: f64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Continuum modes of the brute-force oracle.
    #[serde(default = "default_oracle_modes")]
    pub oracle_modes: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_oracle_modes() -> usize {
    2000
}

fn default_hbar() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    decolab_core::khalfin::DEFAULT_ETA
}

/// Pole model for a `khalfin` scenario; `z = ω − iγ/2` given as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum KhalfinModel {
    /// `weights = [equilibrium, diagonal, cross, cross]`.
    Model1 {
        z0: Complex64,
        #[serde(default)]
        tail: Option<KhalfinTail>,
        weights: [f64; 4],
    },
    /// `weights = [equilibrium, w00, w10, w01, w11]`.
    Model2 { z0: Complex64, z1: Complex64, weights: [f64; 5] },
}

/// Unknown keys are rejected by the flattened model block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhalfinParams {
    #[serde(flatten)]
    pub model: KhalfinModel,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Pole-term indices on the slow side of the crossover. Model 1 defaults
    /// to none (tail only); model 2 to the `γ₀` term.
    #[serde(default)]
    pub slow_set: Option<Vec<usize>>,
}

/// Typed parameter block, one variant per scenario kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    Modes(ModeCatalogue),
    Friedrichs(FriedrichsParams),
    Omnes(OmnesConfig),
    Basis(LadderScenario),
    Khalfin(KhalfinParams),
    Bipart(BiPartSpec),
}

impl ScenarioParams {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioParams::Modes(_) => ScenarioKind::Modes,
            ScenarioParams::Friedrichs(_) => ScenarioKind::Friedrichs,
            ScenarioParams::Omnes(_) => ScenarioKind::Omnes,
            ScenarioParams::Basis(_) => ScenarioKind::Basis,
            ScenarioParams::Khalfin(_) => ScenarioKind::Khalfin,
            ScenarioParams::Bipart(_) => ScenarioKind::Bipart,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ScenarioParams,
    pub time_grid: TimeGridSpec,
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        self.params.kind()
    }

    /// Parses and checks a config held in memory.
    pub fn from_json_str(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            vec![Diagnostic::new(format!("line {}, column {}", e.line(), e.column()), e)]
        })?;
        from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text).map_err(CliError::Config)
    }
}

/// Every violation found in the file at `path`; empty when the file is valid.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(match ScenarioConfig::from_json_str(&text) {
        Ok(_) => Vec::new(),
        Err(diagnostics) => diagnostics,
    })
}

const TOP_LEVEL_KEYS: [&str; 4] = ["kind", "params", "time_grid", "output_dir"];

fn from_value(value: Value) -> Result<ScenarioConfig, Vec<Diagnostic>> {
    let Value::Object(mut top) = value else {
        return Err(vec![Diagnostic::new("<root>", "config must be a JSON object")]);
    };
    let mut diags = Vec::new();
    for key in top.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            diags.push(Diagnostic::new(
                key.clone(),
                format!("unknown field, expected one of {}", TOP_LEVEL_KEYS.join(", ")),
            ));
        }
    }

    let kind = typed_field::<ScenarioKind>(&mut top, "kind", &mut diags);
    let time_grid = typed_field::<TimeGridSpec>(&mut top, "time_grid", &mut diags);
    if let Some(grid) = &time_grid {
        for v in grid.violations() {
            diags.push(Diagnostic::new("time_grid", v));
        }
    }
    let output_dir = match top.remove("output_dir") {
        None | Some(Value::Null) => None,
        Some(v) => parse_at::<PathBuf>(v, "output_dir", &mut diags),
    };
    let params = match (kind, top.remove("params")) {
        (_, None) => {
            diags.push(Diagnostic::new("params", "missing field"));
            None
        }
        (None, Some(_)) => None,
        (Some(kind), Some(raw)) => parse_params(kind, raw, &mut diags),
    };

    match (params, time_grid) {
        (Some(params), Some(time_grid)) if diags.is_empty() => {
            Ok(ScenarioConfig { params, time_grid, output_dir })
        }
        _ => Err(diags),
    }
}

fn typed_field<T: DeserializeOwned>(
    top: &mut Map<String, Value>,
    key: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<T> {
    match top.remove(key) {
        None => {
            diags.push(Diagnostic::new(key, "missing field"));
            None
        }
        Some(v) => parse_at(v, key, diags),
    }
}

/// Deserializes `value`, reporting failures with their path under `prefix`.
fn parse_at<T: DeserializeOwned>(value: Value, prefix: &str, diags: &mut Vec<Diagnostic>) -> Option<T> {
    match serde_path_to_error::deserialize::<_, T>(value) {
        Ok(v) => Some(v),
        Err(e) => {
            let inner = e.path().to_string();
            let location = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
            diags.push(Diagnostic::new(location, e.into_inner()));
            None
        }
    }
}

fn parse_params(kind: ScenarioKind, raw: Value, diags: &mut Vec<Diagnostic>) -> Option<ScenarioParams> {
    match kind {
        ScenarioKind::Modes => parse_modes(raw, diags).map(ScenarioParams::Modes),
        ScenarioKind::Friedrichs => {
            let p: FriedrichsParams = parse_at(raw, "params", diags)?;
            let before = diags.len();
            check_friedrichs(&p, diags);
            (diags.len() == before).then_some(ScenarioParams::Friedrichs(p))
        }
        ScenarioKind::Omnes => {
            let cfg: OmnesConfig = parse_at(raw, "params", diags)?;
            let report = cfg.macroscopicity();
            if !report.macroscopic {
                diags.push(Diagnostic::new(
                    "params",
                    decolab_core::omnes::OmnesError::NotMacroscopic(report),
                ));
                return None;
            }
            Some(ScenarioParams::Omnes(cfg))
        }
        ScenarioKind::Basis => parse_at(raw, "params", diags).map(ScenarioParams::Basis),
        ScenarioKind::Khalfin => {
            let p: KhalfinParams = parse_at(raw, "params", diags)?;
            let before = diags.len();
            check_khalfin(&p, diags);
            (diags.len() == before).then_some(ScenarioParams::Khalfin(p))
        }
        ScenarioKind::Bipart => {
            let spec: BiPartSpec = parse_at(raw, "params", diags)?;
            let violations = spec.violations();
            if violations.is_empty() {
                Some(ScenarioParams::Bipart(spec))
            } else {
                diags.extend(violations.into_iter().map(|v| Diagnostic::new("params", v)));
                None
            }
        }
    }
}

/// Parses a catalogue mode by mode so that every bad mode is reported.
fn parse_modes(raw: Value, diags: &mut Vec<Diagnostic>) -> Option<ModeCatalogue> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        #[serde(default = "default_hbar")]
        hbar: f64,
        #[serde(default)]
        equilibrium: f64,
        modes: Vec<Value>,
    }
    let raw: Raw = parse_at(raw, "params", diags)?;
    let before = diags.len();
    let mut modes = Vec::with_capacity(raw.modes.len());
    for (i, m) in raw.modes.into_iter().enumerate() {
        let location = format!("params.modes[{i}]");
        if let Some(mode) = parse_at::<DecayMode>(m, &location, diags) {
            if !(mode.rate.is_finite() && mode.rate >= 0.0) {
                diags.push(Diagnostic::new(
                    format!("{location}.gamma"),
                    format!("decay rate must be nonnegative, got {}", mode.rate),
                ));
            }
            modes.push(mode);
        }
    }
    if modes.is_empty() && diags.len() == before {
        diags.push(Diagnostic::new("params.modes", "catalogue has no modes"));
    }
    if diags.len() > before {
        return None;
    }
    match ModeCatalogue::new(modes, raw.equilibrium, raw.hbar) {
        Ok(cat) => Some(cat),
        Err(e) => {
            diags.push(Diagnostic::new("params", e));
            None
        }
    }
}

fn check_friedrichs(p: &FriedrichsParams, diags: &mut Vec<Diagnostic>) {
    if let Err(e) = p.dos.validate() {
        diags.push(Diagnostic::new("params.dos", e));
    }
    if let Err(e) = p.quadrature.validate() {
        diags.push(Diagnostic::new("params.quadrature", e));
    }
    let (lo, hi) = p.form_factor.support();
    if !(p.omega0 > lo && p.omega0 < hi) {
        diags.push(Diagnostic::new(
            "params.omega0",
            format!("must lie inside the band ({lo}, {hi}), got {}", p.omega0),
        ));
    }
    if p.oracle_modes < 10 {
        diags.push(Diagnostic::new("params.oracle_modes", format!("need at least 10, got {}", p.oracle_modes)));
    }
    if !(p.hbar > 0.0 && p.hbar.is_finite()) {
        diags.push(Diagnostic::new("params.hbar", format!("must be positive, got {}", p.hbar)));
    }
}

fn check_khalfin(p: &KhalfinParams, diags: &mut Vec<Diagnostic>) {
    if !(p.eta > 0.0 && p.eta < 1.0) {
        diags.push(Diagnostic::new("params.eta", format!("must lie in (0, 1), got {}", p.eta)));
    }
    if !(p.hbar > 0.0 && p.hbar.is_finite()) {
        diags.push(Diagnostic::new("params.hbar", format!("must be positive, got {}", p.hbar)));
    }
    let poles: Vec<(&str, Complex64)> = match &p.model {
        KhalfinModel::Model1 { z0, .. } => vec![("z0", *z0)],
        KhalfinModel::Model2 { z0, z1, .. } => vec![("z0", *z0), ("z1", *z1)],
    };
    for (name, z) in &poles {
        if !(z.im < 0.0 && z.is_finite()) {
            diags.push(Diagnostic::new(
                format!("params.{name}"),
                format!("pole must lie in the lower half-plane (decay rate -2 Im z must be positive), got {z}"),
            ));
        }
    }
    if let [(_, z0), (_, z1)] = poles[..] {
        if z1.im > z0.im {
            diags.push(Diagnostic::new(
                "params.z1",
                format!("model 2 needs gamma0 <= gamma1, got gamma0 = {}, gamma1 = {}", -2.0 * z0.im, -2.0 * z1.im),
            ));
        }
    }
    let terms = match p.model {
        KhalfinModel::Model1 { .. } => 3,
        KhalfinModel::Model2 { .. } => 4,
    };
    for &i in p.slow_set.iter().flatten() {
        if i >= terms {
            diags.push(Diagnostic::new("params.slow_set", format!("index {i} out of range (model has {terms} pole terms)")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_max: f64, n: usize, spacing: Spacing, t_min: Option<f64>) -> TimeGridSpec {
        TimeGridSpec { t_max, n_points: n, spacing, t_min }
    }

    #[test]
    fn grids() {
        let g = grid(2.0, 5, Spacing::Linear, None);
        assert!(g.violations().is_empty());
        assert_eq!(g.points(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let g = grid(100.0, 3, Spacing::Log, Some(1.0));
        let p = g.points();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 10.0).abs() < 1e-12);
        assert_eq!(p[2], 100.0);
        assert_eq!(grid(1.0, 1, Spacing::Linear, None).violations().len(), 1);
        assert_eq!(grid(1.0, 4, Spacing::Log, None).violations().len(), 1);
        assert_eq!(grid(0.0, 4, Spacing::Linear, None).violations().len(), 1);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = ScenarioConfig::from_json_str("{\n  \"kind\": \"modes\",\n  oops\n}").unwrap_err();
        assert_eq!(err.len(), 1);
        assert!(err[0].location.starts_with("line 3"), "{}", err[0]);
    }

    #[test]
    fn every_bad_mode_is_listed() {
        let text = r#"{
            "kind": "modes",
            "params": {"modes": [{"a0": 1, "gamma": -1}, {"a0": 1, "gamma": 2}, {"a0": 1, "gamma": -3}]},
            "time_grid": {"t_max": 1, "n_points": 1}
        }"#;
        let err = ScenarioConfig::from_json_str(text).unwrap_err();
        let locations: Vec<&str> = err.iter().map(|d| d.location.as_str()).collect();
        assert_eq!(locations, ["time_grid", "params.modes[0].gamma", "params.modes[2].gamma"]);
        assert!(err[1].message.contains("nonnegative"));
    }

    #[test]
    fn unknown_keys_and_missing_fields() {
        let err = ScenarioConfig::from_json_str(r#"{"kind": "nope", "extra": 1}"#).unwrap_err();
        let locations: Vec<&str> = err.iter().map(|d| d.location.as_str()).collect();
        assert_eq!(locations, ["extra", "kind", "time_grid", "params"]);
    }

    #[test]
    fn nested_paths() {
        let text = r#"{
            "kind": "omnes",
            "params": {"m": 2, "omega": 1, "L0": "ten", "a": [0.6, 0], "b": [0.8, 0], "N": 200, "gamma0": 0.01},
            "time_grid": {"t_max": 1, "n_points": 2}
        }"#;
        let err = ScenarioConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].location, "params.L0");
    }
}
