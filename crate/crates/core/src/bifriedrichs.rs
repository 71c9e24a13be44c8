//! Two commuting Friedrichs parts sharing one continuum.
//!
//! Level `|i⟩` couples only to its own band of the shared frequency grid, so
//! `H₁` and `H₂` act on orthogonal subspaces and commute exactly. An
//! observable of part `i` therefore only sees the pole of part `i`.
//!
//! Basis ordering of the composite single-excitation space:
//! `[|1⟩, |2⟩, |ω₀⟩, …, |ω_{K−1}⟩]`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::friedrichs::{
    second_order_pole, ArrowheadEigen, DensityOfStates, FormFactor, FriedrichsError, PoleResult,
};
use crate::quadrature::QuadratureSpec;

pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Upper band edge of the default flat-band spec in units of `b`.
pub const DEFAULT_OMEGA_MAX_FACTOR: f64 = 4.0;
const MIN_GRID: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiPartError {
    #[error("bands overlap: need a < b, got lower band ending at a = {a} and upper band starting at b = {b}")]
    OverlappingBands { a: f64, b: f64 },
    #[error("band [{lo}, {hi}] lies outside the grid [0, {omega_max}]")]
    BandOutsideGrid { lo: f64, hi: f64, omega_max: f64 },
    #[error("need at least {MIN_GRID} grid points, got {0}")]
    GridTooSmall(usize),
    #[error("part {0} has no grid points inside its band")]
    EmptyBand(usize),
    #[error("part index must be 1 or 2, got {0}")]
    BadPart(usize),
    #[error("relative commutator norm {0:e} exceeds {COMMUTATOR_TOL:e}")]
    NonCommuting(f64),
    #[error("coupling scale must be nonnegative and finite, got {0}")]
    InvalidScale(f64),
    #[error("level {0} must be finite")]
    NonFiniteLevel(usize),
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error(transparent)]
    Friedrichs(#[from] FriedrichsError),
}

/// Discrete level `Ω` and its coupling form factor; the form factor support
/// is the part's band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub level: f64,
    pub form_factor: FormFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiPartSpec {
    pub part1: PartSpec,
    pub part2: PartSpec,
    /// Grid points on `[0, omega_max]`.
    pub n_grid: usize,
    /// Top of the shared grid; defaults to the highest band edge.
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub dos: DensityOfStates,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    1.0
}

impl BiPartSpec {
    /// Flat bands `[0, a]` for part 1 and `[b, 4b]` for part 2.
    pub fn flat(
        (level1, strength1): (f64, f64),
        (level2, strength2): (f64, f64),
        a: f64,
        b: f64,
        n_grid: usize,
    ) -> Result<Self, BiPartError> {
        let omega_max = DEFAULT_OMEGA_MAX_FACTOR * b;
        Ok(Self {
            part1: PartSpec { level: level1, form_factor: FormFactor::flat_band(strength1, 0.0, a)? },
            part2: PartSpec { level: level2, form_factor: FormFactor::flat_band(strength2, b, omega_max)? },
            n_grid,
            omega_max: Some(omega_max),
            dos: DensityOfStates::default(),
            hbar: 1.0,
        })
    }

    pub fn part(&self, part: usize) -> Result<&PartSpec, BiPartError> {
        match part {
            1 => Ok(&self.part1),
            2 => Ok(&self.part2),
            other => Err(BiPartError::BadPart(other)),
        }
    }

    /// Same spec with part 2's coupling strength multiplied by `scale`.
    pub fn with_part2_scaled(&self, scale: f64) -> Result<Self, BiPartError> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(BiPartError::InvalidScale(scale));
        }
        let mut out = self.clone();
        let ff = self.part2.form_factor;
        out.part2.form_factor = ff.with_strength(ff.strength() * scale)?;
        Ok(out)
    }

    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.part1, &mut out.part2);
        out
    }

    fn grid_top(&self) -> f64 {
        self.omega_max.unwrap_or_else(|| {
            self.part1.form_factor.support().1.max(self.part2.form_factor.support().1)
        })
    }

    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<BiPartError> {
        let mut out = Vec::new();
        for (i, p) in [&self.part1, &self.part2].into_iter().enumerate() {
            if !p.level.is_finite() {
                out.push(BiPartError::NonFiniteLevel(i + 1));
            }
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            out.push(BiPartError::NonPositiveHbar(self.hbar));
        }
        if self.n_grid < MIN_GRID {
            out.push(BiPartError::GridTooSmall(self.n_grid));
        }
        let s1 = self.part1.form_factor.support();
        let s2 = self.part2.form_factor.support();
        let (lower, upper) = if s1.0 <= s2.0 { (s1, s2) } else { (s2, s1) };
        if !(lower.1 < upper.0) {
            out.push(BiPartError::OverlappingBands { a: lower.1, b: upper.0 });
        }
        let omega_max = self.grid_top();
        for (lo, hi) in [s1, s2] {
            if !(hi <= omega_max) {
                out.push(BiPartError::BandOutsideGrid { lo, hi, omega_max });
            }
        }
        if let Err(e) = self.dos.validate() {
            out.push(e.into());
        }
        out
    }
}

/// One part's single-excitation Hamiltonian restricted to its own subspace.
#[derive(Debug, Clone)]
pub struct PartModel {
    pub level: f64,
    /// Grid indices coupled to this part, ascending.
    pub band_indices: Vec<usize>,
    pub couplings: Vec<f64>,
    eigen: ArrowheadEigen,
}

impl PartModel {
    pub fn eigen(&self) -> &ArrowheadEigen {
        &self.eigen
    }
}

#[derive(Debug, Clone)]
pub struct BiPartModel {
    spec: BiPartSpec,
    grid: Vec<f64>,
    spacing: f64,
    parts: [PartModel; 2],
    commutator: f64,
}

fn build_part(spec: &PartSpec, dos: &DensityOfStates, grid: &[f64], spacing: f64, index: usize) -> Result<PartModel, BiPartError> {
    let ff = &spec.form_factor;
    let band_indices: Vec<usize> = (0..grid.len()).filter(|&j| ff.contains(grid[j])).collect();
    if band_indices.is_empty() {
        return Err(BiPartError::EmptyBand(index));
    }
    let couplings: Vec<f64> = band_indices
        .iter()
        .map(|&j| (ff.coupling_sq(grid[j]) * dos.density(grid[j]) * spacing).sqrt())
        .collect();
    let poles: Vec<f64> = band_indices.iter().map(|&j| grid[j]).collect();
    let eigen = ArrowheadEigen::new(spec.level, &poles, &couplings)?;
    Ok(PartModel { level: spec.level, band_indices, couplings, eigen })
}

/// Sparse matrix as `(row, col) → value`.
type Sparse = BTreeMap<(usize, usize), f64>;

fn part_matrix(part: &PartModel, head: usize, grid: &[f64]) -> Sparse {
    let mut m = Sparse::new();
    m.insert((head, head), part.level);
    for (&j, &g) in part.band_indices.iter().zip(&part.couplings) {
        let k = 2 + j;
        m.insert((k, k), grid[j]);
        if g != 0.0 {
            m.insert((head, k), g);
            m.insert((k, head), g);
        }
    }
    m
}

fn sparse_product(a: &Sparse, b: &Sparse) -> Sparse {
    let mut rows_b: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (&(k, j), &v) in b {
        rows_b.entry(k).or_default().push((j, v));
    }
    let mut out = Sparse::new();
    for (&(i, k), &v) in a {
        if let Some(row) = rows_b.get(&k) {
            for &(j, w) in row {
                *out.entry((i, j)).or_insert(0.0) += v * w;
            }
        }
    }
    out
}

fn sparse_frobenius(m: &Sparse) -> f64 {
    m.values().fold(0.0, |acc, v| acc + v * v).sqrt()
}

/// `‖H₁H₂ − H₂H₁‖_F / (‖H₁‖_F‖H₂‖_F)`.
fn relative_commutator(h1: &Sparse, h2: &Sparse) -> f64 {
    let mut diff = sparse_product(h1, h2);
    for (key, v) in sparse_product(h2, h1) {
        *diff.entry(key).or_insert(0.0) -= v;
    }
    let scale = sparse_frobenius(h1) * sparse_frobenius(h2);
    if scale == 0.0 {
        0.0
    } else {
        sparse_frobenius(&diff) / scale
    }
}

/// Builds both parts on the shared midpoint grid and checks that they commute.
pub fn build_bipart(spec: &BiPartSpec) -> Result<BiPartModel, BiPartError> {
    if let Some(first) = spec.violations().into_iter().next() {
        return Err(first);
    }
    let omega_max = spec.grid_top();
    let spacing = omega_max / spec.n_grid as f64;
    let grid: Vec<f64> = (0..spec.n_grid).map(|j| (j as f64 + 0.5) * spacing).collect();
    let p1 = build_part(&spec.part1, &spec.dos, &grid, spacing, 1)?;
    let p2 = build_part(&spec.part2, &spec.dos, &grid, spacing, 2)?;
    let commutator = relative_commutator(&part_matrix(&p1, 0, &grid), &part_matrix(&p2, 1, &grid));
    if commutator > COMMUTATOR_TOL {
        return Err(BiPartError::NonCommuting(commutator));
    }
    Ok(BiPartModel { spec: spec.clone(), grid, spacing, parts: [p1, p2], commutator })
}

impl BiPartModel {
    pub fn spec(&self) -> &BiPartSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Composite dimension `K + 2`.
    pub fn dim(&self) -> usize {
        self.grid.len() + 2
    }

    /// Relative commutator norm found at construction.
    pub fn commutator_norm(&self) -> f64 {
        self.commutator
    }

    pub fn part(&self, part: usize) -> Result<&PartModel, BiPartError> {
        match part {
            1 | 2 => Ok(&self.parts[part - 1]),
            other => Err(BiPartError::BadPart(other)),
        }
    }

    /// `2πħ/Δω`; part evolutions are only meaningful well before it.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spec.hbar / self.spacing
    }

    /// Second-order pole of part `part` from its own form factor.
    pub fn pole(&self, part: usize, quad: &QuadratureSpec) -> Result<PoleResult, BiPartError> {
        let p = self.spec.part(part)?;
        Ok(second_order_pole(&p.form_factor, &self.spec.dos, p.level, quad)?)
    }

    /// `exp(−iH_i t/ħ)` applied to a composite vector; identity outside the
    /// part's subspace.
    fn apply_part(&self, part: usize, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let p = &self.parts[part - 1];
        let head = part - 1;
        let mut local = Vec::with_capacity(p.band_indices.len() + 1);
        local.push(psi[head]);
        local.extend(p.band_indices.iter().map(|&j| psi[2 + j]));
        let evolved = p.eigen.propagate(&local, t, self.spec.hbar);
        let mut out = psi.to_vec();
        out[head] = evolved[0];
        for (&j, v) in p.band_indices.iter().zip(&evolved[1..]) {
            out[2 + j] = *v;
        }
        out
    }

    /// `exp(−iHt/ħ)|ψ⟩ = exp(−iH₂t/ħ) exp(−iH₁t/ħ)|ψ⟩`.
    pub fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        self.apply_part(2, &self.apply_part(1, psi, t), t)
    }
}

/// `(t, |⟨i|exp(−iH_i t/ħ)|i⟩|²)`: the level projector of part `i` under the
/// part's own evolution.
pub fn part_observable_expectation(
    model: &BiPartModel,
    part: usize,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>, BiPartError> {
    let p = model.part(part)?;
    Ok(t_grid
        .iter()
        .map(|&t| (t, p.eigen.survival_amplitude(t, model.spec.hbar).norm_sqr()))
        .collect())
}

/// `⟨1|ρ(t)|1⟩` for `ρ(0) = |1⟩⟨1|` under the full composite propagator.
fn composite_part1_expectation(model: &BiPartModel, t_grid: &[f64]) -> Vec<f64> {
    let mut psi0 = vec![Complex64::new(0.0, 0.0); model.dim()];
    psi0[0] = Complex64::new(1.0, 0.0);
    t_grid.iter().map(|&t| model.evolve(&psi0, t)[0].norm_sqr()).collect()
}

/// Default check grid: 101 points on `[0, recurrence/10]`.
pub fn default_check_grid(model: &BiPartModel) -> Vec<f64> {
    let t_max = 0.1 * model.recurrence_time();
    (0..=100).map(|k| t_max * k as f64 / 100.0).collect()
}

/// `max_t |⟨O₁⟩(t) − ⟨O₁⟩'(t)|` where `'` rescales part 2's coupling by
/// `perturb`, both evaluated with the composite propagator on
/// [`default_check_grid`].
pub fn cross_independence_check(model: &BiPartModel, perturb: f64) -> Result<f64, BiPartError> {
    cross_independence_check_on(model, perturb, &default_check_grid(model))
}

pub fn cross_independence_check_on(model: &BiPartModel, perturb: f64, t_grid: &[f64]) -> Result<f64, BiPartError> {
    let other = build_bipart(&model.spec.with_part2_scaled(perturb)?)?;
    let base = composite_part1_expectation(model, t_grid);
    let moved = composite_part1_expectation(&other, t_grid);
    Ok(base.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `(t_R1, t_R2)`, the times when part 1 has relaxed and part 2 has not;
/// `None` unless `t_R1 < t_R2`.
pub fn classicality_window(t_r1: f64, t_r2: f64) -> Option<(f64, f64)> {
    (t_r1 < t_r2).then_some((t_r1, t_r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec() -> BiPartSpec {
        BiPartSpec::flat((2.0, 0.12), (12.0, 0.06), 4.0, 6.0, 400).unwrap()
    }

    #[test]
    fn builds_and_commutes() {
        let model = build_bipart(&spec()).unwrap();
        assert_eq!(model.commutator_norm(), 0.0);
        assert_eq!(model.dim(), 402);
        let p1 = model.part(1).unwrap();
        let p2 = model.part(2).unwrap();
        assert!(p1.band_indices.iter().all(|&j| model.grid()[j] <= 4.0));
        assert!(p2.band_indices.iter().all(|&j| model.grid()[j] >= 6.0));
        assert!(model.part(3).is_err());
    }

    #[test]
    fn overlapping_bands_rejected() {
        let bad = BiPartSpec::flat((2.0, 0.1), (5.0, 0.1), 6.0, 4.0, 100);
        assert!(bad.is_err() || matches!(build_bipart(&bad.unwrap()), Err(BiPartError::OverlappingBands { .. })));
        let mut s = spec();
        s.part2.form_factor = FormFactor::flat_band(0.1, 3.0, 24.0).unwrap();
        assert!(matches!(build_bipart(&s), Err(BiPartError::OverlappingBands { a, b }) if a == 4.0 && b == 3.0));
        let mut s = spec();
        s.omega_max = Some(20.0);
        assert!(matches!(build_bipart(&s), Err(BiPartError::BandOutsideGrid { .. })));
    }

    #[test]
    fn uncoupled_part_is_static() {
        let s = spec().with_part2_scaled(0.0).unwrap();
        let model = build_bipart(&s).unwrap();
        let samples = part_observable_expectation(&model, 2, &[0.0, 5.0, 50.0]).unwrap();
        for (_, v) in samples {
            assert_relative_eq!(v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn expectation_starts_at_one() {
        let model = build_bipart(&spec()).unwrap();
        for part in [1, 2] {
            let s = part_observable_expectation(&model, part, &[0.0]).unwrap();
            assert_relative_eq!(s[0].1, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_symmetry() {
        let quad = QuadratureSpec::default();
        let model = build_bipart(&spec()).unwrap();
        let swapped = build_bipart(&spec().swapped()).unwrap();
        assert_eq!(model.pole(1, &quad).unwrap(), swapped.pole(2, &quad).unwrap());
        assert_eq!(model.pole(2, &quad).unwrap(), swapped.pole(1, &quad).unwrap());
        let grid = [0.0, 3.0, 11.0];
        assert_eq!(
            part_observable_expectation(&model, 1, &grid).unwrap(),
            part_observable_expectation(&swapped, 2, &grid).unwrap()
        );
    }

    #[test]
    fn composite_matches_part_evolution() {
        let model = build_bipart(&spec()).unwrap();
        let grid = [0.0, 1.0, 7.0, 20.0];
        let own = part_observable_expectation(&model, 1, &grid).unwrap();
        let composite = composite_part1_expectation(&model, &grid);
        for ((_, a), b) in own.iter().zip(&composite) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn independence() {
        let model = build_bipart(&spec()).unwrap();
        assert_eq!(cross_independence_check(&model, 1.0).unwrap(), 0.0);
        assert!(cross_independence_check(&model, 2.0).unwrap() <= 1e-12);
        assert!(matches!(cross_independence_check(&model, -1.0), Err(BiPartError::InvalidScale(_))));
    }

    #[test]
    fn window() {
        assert_eq!(classicality_window(1.0, 100.0), Some((1.0, 100.0)));
        assert_eq!(classicality_window(5.0, 5.0), None);
        assert_eq!(classicality_window(7.0, 5.0), None);
    }
}
