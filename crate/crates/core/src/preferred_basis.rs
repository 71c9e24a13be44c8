//! Moving preferred basis.
//!
//! A [`LadderScenario`] is a pure state over levels with complex energies
//! `E_n = ω_n − i r_n`, evolving as `c_n(t) = c_n(0)·exp(−iE_n t/ħ)`. The full
//! state gives `ρ_R(t)`; dropping every level with `r_n ≥ γ_eff` gives the
//! preferred state `ρ_P(t)`. The eigenbasis of `ρ_P(t)` is the moving
//! preferred basis, and [`convergence_profile`] tracks how fast the eigenbasis
//! of `ρ_R(t)` approaches it.

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode_catalogue::{CatalogueError, DecayMode, ModeCatalogue};
use crate::omnes::OmnesConfig;

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
pub const JACOBI_THRESHOLD: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative anti-Hermitian part accepted by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Squared state norm below which a state counts as depleted.
pub const DEPLETION_THRESHOLD: f64 = 1e-200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("matrix must be square and nonempty, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (anti-Hermitian part {0:e} relative)")]
    NotHermitian(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal norm {off:e})")]
    NotConverged { sweeps: usize, off: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("state norm {0:e} is depleted at t = {1}")]
    Depleted(f64, f64),
    #[error("scenario needs at least one level")]
    NoLevels,
    #[error("level {index}: {reason}")]
    InvalidLevel { index: usize, reason: &'static str },
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("time grid must be strictly ascending")]
    InvalidTimeGrid,
    #[error(transparent)]
    Catalogue(#[from] CatalogueError),
}

fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian matrix, typically a normalized density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Accepts a Hermitian matrix (within [`HERMITIAN_TOL`] relative) and
    /// stores its exactly Hermitian part.
    pub fn new(entries: Array2<Complex64>) -> Result<Self, BasisError> {
        let (r, c) = entries.dim();
        if r != c || r == 0 {
            return Err(BasisError::NotSquare(r, c));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(BasisError::NonFinite);
        }
        let adjoint = entries.t().mapv(|z| z.conj());
        let anti = frobenius(&(&entries - &adjoint)) / 2.0;
        let norm = frobenius(&entries);
        if anti > HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(BasisError::NotHermitian(if norm > 0.0 { anti / norm } else { anti }));
        }
        let entries = (&entries + &adjoint).mapv(|z| z * 0.5);
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn from_state(psi: &[Complex64]) -> Result<Self, BasisError> {
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() {
            return Err(BasisError::NoLevels);
        }
        if !(norm_sq > DEPLETION_THRESHOLD) || !norm_sq.is_finite() {
            return Err(BasisError::Depleted(norm_sq, f64::NAN));
        }
        Ok(Self { entries: outer(psi, psi, norm_sq.recip()) })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // ρ is Hermitian, so tr(ρ²) = Σ|ρ_ij|²
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.entries)
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<f64, BasisError> {
        if self.dim() != other.dim() {
            return Err(BasisError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(frobenius(&(&self.entries - &other.entries)))
    }
}

fn outer(left: &[Complex64], right: &[Complex64], scale: f64) -> Array2<Complex64> {
    Array2::from_shape_fn((left.len(), right.len()), |(i, j)| left[i] * right[j].conj() * scale)
}

/// Eigenvalues in descending order with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<Complex64>,
}

impl EigenBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector of `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Array2<Complex64> {
        &self.eigenvectors
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let v = &self.eigenvectors;
        let scaled = Array2::from_shape_fn(v.dim(), |(i, k)| v[[i, k]] * self.eigenvalues[k]);
        scaled.dot(&v.t().mapv(|z| z.conj()))
    }

    /// `‖V Λ V† − A‖_F`.
    pub fn reconstruction_residual(&self, rho: &DensityMatrix) -> f64 {
        frobenius(&(&self.reconstruct() - rho.entries()))
    }

    /// `‖V†V − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.t().mapv(|z| z.conj()).dot(&self.eigenvectors);
        gram.indexed_iter()
            .map(|((i, j), z)| (z - if i == j { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// `max_k ‖A v_k − λ_k v_k‖ / ‖A‖_F`.
    pub fn eigen_residual(&self, rho: &DensityMatrix) -> f64 {
        let av = rho.entries().dot(&self.eigenvectors);
        let norm = rho.frobenius_norm().max(f64::MIN_POSITIVE);
        (0..self.dim())
            .map(|k| {
                let col = &av.column(k) - &self.eigenvectors.column(k).mapv(|z| z * self.eigenvalues[k]);
                col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm
            })
            .fold(0.0, f64::max)
    }

    /// Index ranges `[start, end)` of eigenvalue clusters: consecutive
    /// eigenvalues closer than `tol` share a cluster.
    pub fn clusters(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || self.eigenvalues[k - 1] - self.eigenvalues[k] > tol {
                out.push((start, k));
                start = k;
            }
        }
        out
    }

    /// Orthogonal projector onto the span of columns `start..end`.
    pub fn projector(&self, start: usize, end: usize) -> Array2<Complex64> {
        let block = self.eigenvectors.slice(s![.., start..end]);
        block.dot(&block.t().mapv(|z| z.conj()))
    }
}

/// Cyclic complex Jacobi eigendecomposition.
///
/// Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
/// norm drops to [`JACOBI_THRESHOLD`]`·‖A‖_F`. Eigenvalues come out descending
/// (ties keep diagonal order); each eigenvector is rotated so that its
/// largest-magnitude component is real and positive.
pub fn hermitian_eigendecomposition(rho: &DensityMatrix) -> Result<EigenBasis, BasisError> {
    let n = rho.dim();
    let mut a = rho.entries().clone();
    let mut v = Array2::from_diag_elem(n, Complex64::new(1.0, 0.0));
    let target = JACOBI_THRESHOLD * rho.frobenius_norm();
    let off_norm = |a: &Array2<Complex64>| {
        a.indexed_iter()
            .filter(|((i, j), _)| i != j)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(BasisError::NotConverged { sweeps, off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let mut eigenvectors = Array2::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        let col = v.column(i);
        let mut lead = 0;
        for r in 1..n {
            if col[r].norm() > col[lead].norm() {
                lead = r;
            }
        }
        let phase = col[lead].conj() / col[lead].norm();
        for r in 0..n {
            eigenvectors[[r, k]] = col[r] * phase;
        }
        eigenvectors[[lead, k]] = Complex64::new(eigenvectors[[lead, k]].norm(), 0.0);
    }
    Ok(EigenBasis { eigenvalues: order.iter().map(|&i| diag[i]).collect(), eigenvectors })
}

/// One two-sided rotation `A ← U†AU`, `V ← VU` zeroing `a_pq`.
fn rotate(a: &mut Array2<Complex64>, v: &mut Array2<Complex64>, p: usize, q: usize) {
    let apq = a[[p, q]];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    // a_pq = r·e^{iφ}; the phase is moved onto column q, then a real rotation
    let phase = apq / r;
    let theta = (a[[q, q]].re - a[[p, p]].re) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = (t * t + 1.0).sqrt().recip();
    let s = t * c;
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    let n = a.nrows();
    for k in 0..n {
        let (akp, akq) = (a[[k, p]], a[[k, q]]);
        a[[k, p]] = akp * u_pp + akq * u_qp;
        a[[k, q]] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[[p, k]], a[[q, k]]);
        a[[p, k]] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[[q, k]] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[[p, q]] = Complex64::new(0.0, 0.0);
    a[[q, p]] = Complex64::new(0.0, 0.0);
    a[[p, p]] = Complex64::new(a[[p, p]].re, 0.0);
    a[[q, q]] = Complex64::new(a[[q, q]].re, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
        v[[k, p]] = vkp * u_pp + vkq * u_qp;
        v[[k, q]] = vkp * u_pq + vkq * u_qq;
    }
}

/// Largest cluster-matched subspace distance `‖P₁ − P₂‖_F/√2`.
///
/// Each basis is split into eigenvalue clusters with `degeneracy_tol`; only
/// cluster boundaries present in both bases are kept, so mismatched
/// structures are compared on their finest common coarsening.
pub fn basis_distance(b1: &EigenBasis, b2: &EigenBasis, degeneracy_tol: f64) -> Result<f64, BasisError> {
    if b1.dim() != b2.dim() {
        return Err(BasisError::DimensionMismatch(b1.dim(), b2.dim()));
    }
    let ends1: Vec<usize> = b1.clusters(degeneracy_tol).iter().map(|c| c.1).collect();
    let ends2: Vec<usize> = b2.clusters(degeneracy_tol).iter().map(|c| c.1).collect();
    let mut distance: f64 = 0.0;
    let mut start = 0;
    for end in ends1.into_iter().filter(|e| ends2.contains(e)) {
        let diff = &b1.projector(start, end) - &b2.projector(start, end);
        distance = distance.max(frobenius(&diff) / std::f64::consts::SQRT_2);
        start = end;
    }
    Ok(distance)
}

/// Frobenius norm of the part of `rho` that couples different eigenvalue
/// clusters of `frame`. Rotations inside a degenerate cluster leave it
/// unchanged.
pub fn block_offdiag_norm(rho: &DensityMatrix, frame: &EigenBasis, degeneracy_tol: f64) -> Result<f64, BasisError> {
    if rho.dim() != frame.dim() {
        return Err(BasisError::DimensionMismatch(rho.dim(), frame.dim()));
    }
    let v = frame.eigenvectors();
    let in_frame = v.t().mapv(|z| z.conj()).dot(rho.entries()).dot(v);
    let mut label = vec![0; frame.dim()];
    for (c, (start, end)) in frame.clusters(degeneracy_tol).into_iter().enumerate() {
        label[start..end].iter_mut().for_each(|l| *l = c);
    }
    Ok(in_frame
        .indexed_iter()
        .filter(|((i, j), _)| label[*i] != label[*j])
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// One level of a [`LadderScenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    /// Initial amplitude `c_n(0)`.
    pub c0: Complex64,
    /// `E_n = ω_n − i r_n` with `r_n ≥ 0`.
    pub energy: Complex64,
}

impl Level {
    pub fn rate(&self) -> f64 {
        -self.energy.im
    }
}

fn default_hbar() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LadderRepr {
    #[serde(default = "default_hbar")]
    hbar: f64,
    levels: Vec<Level>,
    #[serde(default = "default_true")]
    renormalize_preferred: bool,
}

/// Pure state over decaying levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderRepr")]
pub struct LadderScenario {
    hbar: f64,
    levels: Vec<Level>,
    /// `true`: ρ_P has unit trace. `false`: ρ_P keeps ρ_R's normalization.
    renormalize_preferred: bool,
}

impl TryFrom<LadderRepr> for LadderScenario {
    type Error = BasisError;

    fn try_from(r: LadderRepr) -> Result<Self, Self::Error> {
        Self::new(r.levels, r.hbar).map(|s| s.with_renormalized_preferred(r.renormalize_preferred))
    }
}

impl LadderScenario {
    /// Validates the levels and normalizes the initial amplitudes.
    pub fn new(mut levels: Vec<Level>, hbar: f64) -> Result<Self, BasisError> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(BasisError::NonPositiveHbar(hbar));
        }
        if levels.is_empty() {
            return Err(BasisError::NoLevels);
        }
        for (index, l) in levels.iter().enumerate() {
            let finite = [l.c0.re, l.c0.im, l.energy.re, l.energy.im].iter().all(|x| x.is_finite());
            if !finite {
                return Err(BasisError::InvalidLevel { index, reason: "non-finite value" });
            }
            if l.rate() < 0.0 {
                return Err(BasisError::InvalidLevel { index, reason: "decay rate -Im E must be nonnegative" });
            }
        }
        let norm_sq: f64 = levels.iter().map(|l| l.c0.norm_sqr()).sum();
        if !(norm_sq > 0.0) {
            return Err(BasisError::Depleted(norm_sq, 0.0));
        }
        let scale = norm_sq.sqrt().recip();
        levels.iter_mut().for_each(|l| l.c0 *= scale);
        Ok(Self { hbar, levels, renormalize_preferred: true })
    }

    /// Ladder `E_n = n·z₀` over the given Fock amplitudes.
    pub fn from_ladder(coeffs: &[Complex64], z0: Complex64, hbar: f64) -> Result<Self, BasisError> {
        let levels = coeffs
            .iter()
            .enumerate()
            .map(|(n, &c0)| Level { c0, energy: z0 * n as f64 })
            .collect();
        Self::new(levels, hbar)
    }

    /// The Omnès superposition `a|α₁⟩ + b|α₂⟩` on its Fock ladder.
    pub fn from_omnes(cfg: &OmnesConfig) -> Result<Self, BasisError> {
        let (a, b) = cfg.weights();
        let n = cfg.params().cutoff_n;
        let b1 = crate::coherent_states::build_quasi_coherent(0.0, n).expect("validated by OmnesConfig");
        let b2 = crate::coherent_states::build_quasi_coherent(cfg.alpha(), n).expect("validated by OmnesConfig");
        let coeffs: Vec<Complex64> =
            b1.coeffs().iter().zip(b2.coeffs()).map(|(x, y)| a * x + b * y).collect();
        Self::from_ladder(&coeffs, cfg.z0(), 1.0)
    }

    pub fn with_renormalized_preferred(mut self, renormalize: bool) -> Self {
        self.renormalize_preferred = renormalize;
        self
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// Population modes `(|c_n(0)|², r_n)` of the decaying levels; the
    /// non-decaying population is the equilibrium value.
    pub fn catalogue(&self) -> Result<ModeCatalogue, BasisError> {
        let (equilibrium, modes) = self.levels.iter().fold((0.0, Vec::new()), |(eq, mut modes), l| {
            if l.rate() > 0.0 {
                modes.push(DecayMode::new(l.c0.norm_sqr(), l.rate()));
                (eq, modes)
            } else {
                (eq + l.c0.norm_sqr(), modes)
            }
        });
        Ok(ModeCatalogue::new(modes, equilibrium, self.hbar)?)
    }

    pub fn effective_rate(&self) -> Result<f64, BasisError> {
        Ok(self.catalogue()?.effective_rate()?)
    }

    pub fn decoherence_time(&self) -> Result<f64, BasisError> {
        Ok(self.catalogue()?.decoherence_time()?)
    }

    pub fn state(&self, t: f64) -> Vec<Complex64> {
        let factor = Complex64::new(0.0, -t / self.hbar);
        self.levels.iter().map(|l| l.c0 * (factor * l.energy).exp()).collect()
    }

    /// State with every level of rate `≥ gamma_eff` removed.
    pub fn preferred_state(&self, t: f64, gamma_eff: f64) -> Vec<Complex64> {
        let mut psi = self.state(t);
        for (c, l) in psi.iter_mut().zip(&self.levels) {
            if l.rate() > 0.0 && l.rate() >= gamma_eff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        psi
    }
}

fn norm_sq(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

/// `ρ_R(t) = |Φ(t)⟩⟨Φ(t)|` with unit trace.
pub fn build_rho_r(scenario: &LadderScenario, t: f64) -> Result<DensityMatrix, BasisError> {
    let psi = scenario.state(t);
    DensityMatrix::from_state(&psi).map_err(|e| with_time(e, t))
}

/// `ρ_P(t)`: as [`build_rho_r`] with the fast levels removed.
pub fn build_rho_p(scenario: &LadderScenario, t: f64, gamma_eff: f64) -> Result<DensityMatrix, BasisError> {
    let psi = scenario.preferred_state(t, gamma_eff);
    if scenario.renormalize_preferred {
        return DensityMatrix::from_state(&psi).map_err(|e| with_time(e, t));
    }
    let full = norm_sq(&scenario.state(t));
    if !(full > DEPLETION_THRESHOLD) {
        return Err(BasisError::Depleted(full, t));
    }
    Ok(DensityMatrix { entries: outer(&psi, &psi, full.recip()) })
}

fn with_time(e: BasisError, t: f64) -> BasisError {
    match e {
        BasisError::Depleted(n, _) => BasisError::Depleted(n, t),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub basis_distance: f64,
    /// Block off-diagonal norm of `ρ_R(t)` in the eigenframe of `ρ_P(t)`.
    pub offdiag_norm: f64,
}

/// Rows `(t, basis distance, off-diagonal norm)` with `γ_eff` taken from the
/// scenario's catalogue.
pub fn convergence_profile(
    scenario: &LadderScenario,
    t_grid: &[f64],
    degeneracy_tol: f64,
) -> Result<Vec<ConvergenceRow>, BasisError> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(BasisError::InvalidTimeGrid);
    }
    let gamma_eff = scenario.effective_rate()?;
    t_grid
        .iter()
        .map(|&t| {
            let rho_r = build_rho_r(scenario, t)?;
            let rho_p = build_rho_p(scenario, t, gamma_eff)?;
            let eig_r = hermitian_eigendecomposition(&rho_r)?;
            let eig_p = hermitian_eigendecomposition(&rho_p)?;
            Ok(ConvergenceRow {
                t,
                basis_distance: basis_distance(&eig_r, &eig_p, degeneracy_tol)?,
                offdiag_norm: block_offdiag_norm(&rho_r, &eig_p, degeneracy_tol)?,
            })
        })
        .collect()
}
