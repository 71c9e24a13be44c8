//! One runner per scenario kind. Runners compute everything in memory and
//! return [`Artifacts`]; nothing touches the filesystem here.

use decolab_core::bifriedrichs::{
    build_bipart, classicality_window, cross_independence_check, part_observable_expectation,
};
use decolab_core::friedrichs::{second_order_pole, DiscretizedFriedrichs};
use decolab_core::khalfin::{crossover_time, model1_profile, model2_profile};
use decolab_core::omnes::{
    closed_form_nd_modulus, decoherence_factor, decoherence_time_omnes, gamma_eff_omnes,
    nd_components, short_time_rate_fit,
};
use decolab_core::preferred_basis::{build_rho_p, build_rho_r, convergence_profile, DEFAULT_DEGENERACY_TOL};
use decolab_core::{
    fit_decay_rate, BiPartSpec, EvolutionProfile, LadderScenario, ModeCatalogue, OmnesConfig,
    QuadratureSpec, RateFit,
};

use crate::config::{FriedrichsParams, KhalfinModel, KhalfinParams, ScenarioConfig, ScenarioParams};
use crate::output::{Artifacts, Summary, Table};
use crate::CliError;

/// Samples used for every pole-vs-oracle rate fit.
pub const FIT_SAMPLES: usize = 401;
/// Part-2 coupling rescaling used for the independence check.
pub const INDEPENDENCE_PERTURBATION: f64 = 2.0;
/// Short-time fit window for the Omnès envelope, as a fraction of `t_R`.
pub const SHORT_TIME_FRACTION: f64 = 0.05;

pub fn execute(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let grid = cfg.time_grid.points();
    let mut artifacts = match &cfg.params {
        ScenarioParams::Modes(cat) => run_modes(cat, &grid),
        ScenarioParams::Friedrichs(p) => run_friedrichs(p, &grid)?,
        ScenarioParams::Omnes(c) => run_omnes(c, &grid)?,
        ScenarioParams::Basis(s) => run_basis(s, &grid)?,
        ScenarioParams::Khalfin(p) => run_khalfin(p, &grid)?,
        ScenarioParams::Bipart(s) => run_bipart(s, &grid)?,
    };
    artifacts.summary.text("kind", cfg.kind().name());
    artifacts.summary.int("n_points", grid.len());
    Ok(artifacts)
}

fn numerical(module: &'static str) -> impl Fn(&dyn std::fmt::Display) -> CliError {
    move |e| CliError::Numerical { module, message: e.to_string() }
}

/// `(window, fit)` on `FIT_SAMPLES` points of `[t0, t1]`.
fn fit_on_window(t0: f64, t1: f64, magnitude: impl Fn(f64) -> f64) -> Option<RateFit> {
    let last = (FIT_SAMPLES - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..FIT_SAMPLES)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / last;
            (t, magnitude(t))
        })
        .collect();
    fit_decay_rate(&samples, (t0, t1)).ok()
}

fn run_modes(cat: &ModeCatalogue, grid: &[f64]) -> Artifacts {
    let mut table = Table::new("modes.csv", &["t", "value", "deviation", "linearized"]);
    let linear_ok = cat.effective_rate().is_ok();
    for &t in grid {
        let lin = if linear_ok { cat.linearized_envelope(t).unwrap_or(f64::NAN) } else { f64::NAN };
        table.push(vec![t, cat.evaluate_mode_sum(t), cat.deviation(t), lin]);
    }

    let mut s = Summary::default();
    let gamma_eff = cat.effective_rate().ok();
    s.opt("gamma_eff", gamma_eff);
    s.opt("t_D", cat.decoherence_time().ok());
    s.opt("t_R", cat.relaxation_time().ok());
    s.opt("gamma_min", cat.min_rate().ok());
    s.opt("gamma_max", cat.max_rate().ok());
    s.num("equilibrium", cat.equilibrium_value());
    s.num("initial_amplitude", cat.initial_amplitude());
    s.int("n_modes", cat.len());
    if let Some(g) = gamma_eff {
        let (slow, fast) = cat.split_modes(g);
        s.int("n_slow", slow.len());
        s.int("n_fast", fast.len());
    }
    Artifacts { tables: vec![table], summary: s }
}

fn run_friedrichs(p: &FriedrichsParams, grid: &[f64]) -> Result<Artifacts, CliError> {
    let err = numerical("friedrichs");
    let pole = second_order_pole(&p.form_factor, &p.dos, p.omega0, &p.quadrature).map_err(|e| err(&e))?;
    let oracle = DiscretizedFriedrichs::new(&p.form_factor, &p.dos, p.omega0, p.oracle_modes).map_err(|e| err(&e))?;
    let recurrence = oracle.recurrence_time(p.hbar);
    if grid.last().is_some_and(|&t| t >= recurrence) {
        log::warn!("time grid reaches the oracle recurrence time {recurrence}; late samples revive");
    }

    let mut table = Table::new("survival.csv", &["t", "re", "im", "abs2"]);
    for &t in grid {
        let a = oracle.survival_amplitude(t, p.hbar);
        table.push(vec![t, a.re, a.im, a.norm_sqr()]);
    }

    let mut s = Summary::default();
    s.num("omega0", pole.omega0);
    s.num("delta_omega", pole.delta_omega);
    s.num("omega0_prime", pole.omega0_prime());
    s.num("gamma0", pole.gamma0);
    s.num("t_R", p.hbar / pole.gamma0);
    s.num("survival_rate_pole", 2.0 * pole.gamma0 / p.hbar);
    s.num("recurrence_time", recurrence);
    s.int("oracle_modes", p.oracle_modes);

    let (t0, t1) = (0.5 * p.hbar / pole.gamma0, 2.0 * p.hbar / pole.gamma0);
    let fit = (pole.gamma0 > 0.0 && t1 < recurrence)
        .then(|| fit_on_window(t0, t1, |t| oracle.survival_amplitude(t, p.hbar).norm()))
        .flatten();
    s.opt("survival_rate_fit", fit.map(|f| 2.0 * f.rate));
    s.opt("fit_residual_rms", fit.map(|f| f.residual_rms));
    s.opt("fit_window_start", fit.map(|_| t0));
    s.opt("fit_window_end", fit.map(|_| t1));
    Ok(Artifacts { tables: vec![table], summary: s })
}

fn run_omnes(cfg: &OmnesConfig, grid: &[f64]) -> Result<Artifacts, CliError> {
    let err = numerical("omnes");
    let rho0 = decoherence_factor(cfg, 0.0).norm();
    let mut table = Table::new(
        "coherence.csv",
        &["t", "rho12_re", "rho12_im", "rho12_abs", "ratio", "closed_form", "envelope"],
    );
    for &t in grid {
        let rho = nd_components(cfg, t).map_err(|e| err(&e))?;
        let r12 = rho[[0, 1]];
        table.push(vec![
            t,
            r12.re,
            r12.im,
            r12.norm(),
            decoherence_factor(cfg, t).norm() / rho0,
            closed_form_nd_modulus(cfg, t, false),
            closed_form_nd_modulus(cfg, t, true),
        ]);
    }

    let report = cfg.macroscopicity();
    let mut s = Summary::default();
    s.num("alpha", cfg.alpha());
    s.num("delta_alpha", report.delta_alpha);
    s.flag("macroscopic", report.macroscopic);
    s.num("gamma0", cfg.gamma0());
    s.num("omega0_prime", cfg.z0().re);
    s.num("gamma_eff", gamma_eff_omnes(cfg));
    s.num("t_R", cfg.relaxation_time());
    s.opt("t_D", decoherence_time_omnes(cfg).ok());
    s.num("gamma_fit", short_time_rate_fit(cfg, SHORT_TIME_FRACTION).map_err(|e| err(&e))?);
    Ok(Artifacts { tables: vec![table], summary: s })
}

fn run_basis(scenario: &LadderScenario, grid: &[f64]) -> Result<Artifacts, CliError> {
    let err = numerical("preferred_basis");
    let gamma_eff = scenario.effective_rate().map_err(|e| err(&e))?;
    let t_d = scenario.decoherence_time().map_err(|e| err(&e))?;
    let rows = convergence_profile(scenario, grid, DEFAULT_DEGENERACY_TOL).map_err(|e| err(&e))?;

    let mut table = Table::new("convergence.csv", &["t", "basis_distance", "offdiag_norm", "frobenius_distance"]);
    let mut frobenius = Vec::with_capacity(rows.len());
    for row in &rows {
        let rho_r = build_rho_r(scenario, row.t).map_err(|e| err(&e))?;
        let rho_p = build_rho_p(scenario, row.t, gamma_eff).map_err(|e| err(&e))?;
        let d = rho_r.frobenius_distance(&rho_p).map_err(|e| err(&e))?;
        frobenius.push((row.t, d));
        table.push(vec![row.t, row.basis_distance, row.offdiag_norm, d]);
    }

    let mut s = Summary::default();
    let catalogue = scenario.catalogue().map_err(|e| err(&e))?;
    s.num("gamma_eff", gamma_eff);
    s.num("t_D", t_d);
    s.opt("t_R", catalogue.relaxation_time().ok());
    s.int("levels", scenario.dim());
    let at_3td = convergence_profile(scenario, &[3.0 * t_d], DEFAULT_DEGENERACY_TOL).map_err(|e| err(&e))?;
    s.num("basis_distance_3t_D", at_3td[0].basis_distance);
    if let Some(last) = rows.last() {
        s.num("basis_distance_final", last.basis_distance);
        s.num("offdiag_norm_final", last.offdiag_norm);
    }
    let t_end = grid.last().copied().unwrap_or(0.0);
    let fit = fit_decay_rate(&frobenius, (t_d, t_end)).ok();
    s.opt("frobenius_rate_fit", fit.map(|f| f.rate));
    Ok(Artifacts { tables: vec![table], summary: s })
}

fn run_khalfin(p: &KhalfinParams, grid: &[f64]) -> Result<Artifacts, CliError> {
    let err = numerical("khalfin");
    let (profile, default_slow): (EvolutionProfile, Vec<usize>) = match &p.model {
        KhalfinModel::Model1 { z0, tail, weights } => {
            (model1_profile(*z0, *tail, *weights, p.hbar).map_err(|e| err(&e))?, Vec::new())
        }
        KhalfinModel::Model2 { z0, z1, weights } => {
            (model2_profile(*z0, *z1, *weights, p.hbar).map_err(|e| err(&e))?, vec![0])
        }
    };
    let slow = p.slow_set.clone().unwrap_or(default_slow);

    let mut table = Table::new("profile.csv", &["t", "value", "poles", "tail"]);
    for &t in grid {
        table.push(vec![t, profile.value(t), profile.pole_terms().deviation(t), profile.tail_value(t)]);
    }

    let mut s = Summary::default();
    for (i, &time) in profile.characteristic_times().iter().enumerate() {
        s.num(&format!("characteristic_time_{}", i + 1), time);
    }
    s.num("t_R", profile.characteristic_times()[0]);
    s.num("equilibrium", profile.equilibrium());
    s.num("eta", p.eta);
    s.opt("gamma_eff", profile.pole_terms().effective_rate().ok());
    s.opt("crossover_time", crossover_time(&profile, &slow, p.eta).ok());
    Ok(Artifacts { tables: vec![table], summary: s })
}

fn run_bipart(spec: &BiPartSpec, grid: &[f64]) -> Result<Artifacts, CliError> {
    let err = numerical("bifriedrichs");
    let model = build_bipart(spec).map_err(|e| err(&e))?;
    let quad = QuadratureSpec::default();
    let p1 = part_observable_expectation(&model, 1, grid).map_err(|e| err(&e))?;
    let p2 = part_observable_expectation(&model, 2, grid).map_err(|e| err(&e))?;

    let mut table = Table::new("parts.csv", &["t", "part1", "part2"]);
    for ((t, a), (_, b)) in p1.iter().zip(&p2) {
        table.push(vec![*t, *a, *b]);
    }

    let mut s = Summary::default();
    s.num("commutator_norm", model.commutator_norm());
    s.num("recurrence_time", model.recurrence_time());
    s.num(
        "independence_error",
        cross_independence_check(&model, INDEPENDENCE_PERTURBATION).map_err(|e| err(&e))?,
    );
    let mut t_r = [f64::NAN; 2];
    for part in [1, 2] {
        let pole = model.pole(part, &quad).map_err(|e| err(&e))?;
        let eigen = model.part(part).map_err(|e| err(&e))?.eigen();
        let (t0, t1) = (0.5 * spec.hbar / pole.gamma0, 2.0 * spec.hbar / pole.gamma0);
        let fit = (pole.gamma0 > 0.0 && t1 < model.recurrence_time())
            .then(|| fit_on_window(t0, t1, |t| eigen.survival_amplitude(t, spec.hbar).norm()))
            .flatten();
        t_r[part - 1] = spec.hbar / pole.gamma0;
        s.num(&format!("gamma0_part{part}"), pole.gamma0);
        s.num(&format!("t_R_part{part}"), t_r[part - 1]);
        s.opt(&format!("gamma_fit_part{part}"), fit.map(|f| f.rate));
    }
    let window = classicality_window(t_r[0], t_r[1]);
    s.opt("window_start", window.map(|w| w.0));
    s.opt("window_end", window.map(|w| w.1));
    Ok(Artifacts { tables: vec![table], summary: s })
}
