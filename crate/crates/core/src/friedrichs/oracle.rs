//! Exact diagonalization of the discretized single-excitation Friedrichs model.
//!
//! On a uniform frequency grid the Hamiltonian is a real symmetric arrowhead
//! matrix
//!
//! ```text
//!     ⎡ ω₀  g₁  g₂  …  g_M ⎤
//! H = ⎢ g₁  ω₁             ⎥      g_j = λ(ω_j)·√(n(ω_j)·Δω)
//!     ⎢ ⋮        ⋱         ⎥
//!     ⎣ g_M            ω_M ⎦
//! ```
//!
//! whose eigenvalues are the roots of the secular equation
//! `λ − ω₀ − Σ g_j² / (λ − ω_j) = 0`, one per gap of the interlacing grid.
//! Roots are found by safeguarded Newton iteration in a frame shifted to the
//! nearer pole, and the couplings are then recomputed from the roots (Löwner
//! formula) so that the eigenvectors come out orthogonal to working precision.
//!
//! The grid spacing sets a recurrence time `2πħ/Δω`; survival amplitudes are
//! only meaningful well before it.

use num_complex::Complex64;

use super::{DensityOfStates, FormFactor, FriedrichsError};

const MAX_SECULAR_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy)]
struct Root {
    /// index into `poles` of the shift origin, or `None` for an unshifted root
    origin: Option<usize>,
    /// root measured from the origin
    tau: f64,
}

/// Eigendecomposition of a symmetric arrowhead matrix with head entry `head`,
/// strictly ascending diagonal `poles` and arrow `couplings`.
#[derive(Debug, Clone)]
pub struct ArrowheadEigen {
    dim: usize,
    poles: Vec<f64>,
    /// indices (into `poles`) that survived deflation
    active: Vec<usize>,
    /// recomputed couplings for the active poles
    couplings: Vec<f64>,
    roots: Vec<Root>,
    eigenvalues: Vec<f64>,
    /// squared head component of each non-deflated eigenvector
    head_weights: Vec<f64>,
}

impl ArrowheadEigen {
    pub fn new(head: f64, poles: &[f64], couplings: &[f64]) -> Result<Self, FriedrichsError> {
        if poles.len() != couplings.len() {
            return Err(FriedrichsError::Eigensolver(format!(
                "{} poles but {} couplings",
                poles.len(),
                couplings.len()
            )));
        }
        if poles.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FriedrichsError::Eigensolver(
                "diagonal entries must be strictly ascending".into(),
            ));
        }
        if !head.is_finite() || poles.iter().chain(couplings).any(|x| !x.is_finite()) {
            return Err(FriedrichsError::Eigensolver("non-finite matrix entry".into()));
        }

        let coupling_norm = couplings.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = poles
            .iter()
            .fold(head.abs(), |m, p| m.max(p.abs()))
            .max(coupling_norm)
            .max(f64::MIN_POSITIVE);
        let deflation_tol = 8.0 * f64::EPSILON * scale;
        let active: Vec<usize> = (0..poles.len())
            .filter(|&j| couplings[j].abs() > deflation_tol)
            .collect();

        let d: Vec<f64> = active.iter().map(|&j| poles[j]).collect();
        let z: Vec<f64> = active.iter().map(|&j| couplings[j]).collect();
        let z_sq: Vec<f64> = z.iter().map(|g| g * g).collect();
        let m = d.len();

        let mut roots = Vec::with_capacity(m + 1);
        if m == 0 {
            roots.push(Root { origin: None, tau: head });
        } else {
            let margin = coupling_norm + scale * 1e-8 + 1.0;
            let lower = head.min(d[0]) - margin;
            let upper = head.max(d[m - 1]) + margin;
            for k in 0..=m {
                let left = if k == 0 { None } else { Some(k - 1) };
                let right = if k == m { None } else { Some(k) };
                roots.push(secular_root(head, &d, &z_sq, left, right, lower, upper)?);
            }
        }

        let eigenvalues: Vec<f64> = roots
            .iter()
            .map(|r| match r.origin {
                Some(i) => d[i] + r.tau,
                None => r.tau,
            })
            .collect();

        // Löwner: z_i² = Π_k (λ_k − d_i) / Π_{l≠i} (d_l − d_i)
        let gap = |root: &Root, i: usize| -> f64 {
            match root.origin {
                Some(o) => root.tau - (d[i] - d[o]),
                None => root.tau - d[i],
            }
        };
        let mut couplings_hat = Vec::with_capacity(m);
        for i in 0..m {
            let mut log_mag = 0.0;
            for root in &roots {
                log_mag += gap(root, i).abs().ln();
            }
            for (l, &dl) in d.iter().enumerate() {
                if l != i {
                    log_mag -= (dl - d[i]).abs().ln();
                }
            }
            couplings_hat.push((0.5 * log_mag).exp().copysign(z[i]));
        }

        let head_weights = roots
            .iter()
            .map(|root| {
                let s: f64 = couplings_hat
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let r = g / gap(root, i);
                        r * r
                    })
                    .sum();
                1.0 / (1.0 + s)
            })
            .collect();

        Ok(Self {
            dim: poles.len() + 1,
            poles: poles.to_vec(),
            active,
            couplings: couplings_hat,
            roots,
            eigenvalues,
            head_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues coupled to the head state, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `|⟨head|k⟩|²` for each eigenvalue in [`Self::eigenvalues`].
    pub fn head_weights(&self) -> &[f64] {
        &self.head_weights
    }

    /// Full spectrum including deflated (decoupled) diagonal entries, ascending.
    pub fn full_spectrum(&self) -> Vec<f64> {
        let mut all = self.eigenvalues.clone();
        let mut is_active = vec![false; self.poles.len()];
        for &j in &self.active {
            is_active[j] = true;
        }
        all.extend(
            self.poles
                .iter()
                .zip(&is_active)
                .filter(|(_, &a)| !a)
                .map(|(&p, _)| p),
        );
        all.sort_by(f64::total_cmp);
        all
    }

    fn eigen_gap(&self, k: usize, i: usize) -> f64 {
        let root = &self.roots[k];
        let di = self.poles[self.active[i]];
        match root.origin {
            Some(o) => root.tau - (di - self.poles[self.active[o]]),
            None => root.tau - di,
        }
    }

    /// `⟨head| exp(−iHt/ħ) |head⟩`.
    pub fn survival_amplitude(&self, t: f64, hbar: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.head_weights)
            .map(|(&e, &w)| Complex64::from_polar(w, -e * t / hbar))
            .sum()
    }

    /// All components `⟨j| exp(−iHt/ħ) |head⟩`; index 0 is the head state,
    /// index `j ≥ 1` the `j`-th diagonal entry.
    pub fn evolve_head(&self, t: f64, hbar: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (k, (&e, &w)) in self.eigenvalues.iter().zip(&self.head_weights).enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t / hbar);
            out[0] += phase * w;
            // eigenvector entries: v_k(i) = v_k(0) · ẑ_i / (λ_k − d_i)
            for (i, &g) in self.couplings.iter().enumerate() {
                out[1 + self.active[i]] += phase * (w * g / self.eigen_gap(k, i));
            }
        }
        out
    }

    /// `exp(−iHt/ħ)·v` for an arbitrary vector in the same ordering as
    /// [`Self::evolve_head`].
    pub fn propagate(&self, v: &[Complex64], t: f64, hbar: f64) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "vector length must match the matrix dimension");
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut is_active = vec![false; self.poles.len()];
        for &j in &self.active {
            is_active[j] = true;
        }
        for (j, &pole) in self.poles.iter().enumerate() {
            if !is_active[j] {
                out[1 + j] = v[1 + j] * Complex64::from_polar(1.0, -pole * t / hbar);
            }
        }
        // u_k = √w_k · (1, ẑ_i/(λ_k − d_i))
        let mut u = vec![0.0; self.active.len()];
        for (k, (&e, &w)) in self.eigenvalues.iter().zip(&self.head_weights).enumerate() {
            let head = w.sqrt();
            let mut proj = v[0] * head;
            for (i, &g) in self.couplings.iter().enumerate() {
                u[i] = head * g / self.eigen_gap(k, i);
                proj += v[1 + self.active[i]] * u[i];
            }
            let c = proj * Complex64::from_polar(1.0, -e * t / hbar);
            out[0] += c * head;
            for (i, &ui) in u.iter().enumerate() {
                out[1 + self.active[i]] += c * ui;
            }
        }
        out
    }
}

/// Root of the secular function between `d[left]` and `d[right]` (either may
/// be open-ended, in which case `lower`/`upper` bound the search).
fn secular_root(
    head: f64,
    d: &[f64],
    z_sq: &[f64],
    left: Option<usize>,
    right: Option<usize>,
    lower: f64,
    upper: f64,
) -> Result<Root, FriedrichsError> {
    // Choose the shift origin as the pole nearer to the root.
    let origin = match (left, right) {
        (Some(l), Some(r)) => {
            let mid = 0.5 * (d[l] + d[r]);
            if secular(head, d, z_sq, mid) >= 0.0 {
                l
            } else {
                r
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => unreachable!("caller handles the pole-free case"),
    };
    let o = d[origin];
    let mut lo = match left {
        Some(l) => d[l] - o,
        None => lower - o,
    };
    let mut hi = match right {
        Some(r) => d[r] - o,
        None => upper - o,
    };
    let f = |tau: f64| secular_shifted(head, d, z_sq, origin, tau);

    let mut tau = 0.5 * (lo + hi);
    for _ in 0..MAX_SECULAR_ITERATIONS {
        let (value, slope) = f(tau);
        if value == 0.0 {
            return Ok(Root { origin: Some(origin), tau });
        }
        if value < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let newton = tau - value / slope;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let resolution = 2.0 * f64::EPSILON * (tau.abs().max(next.abs()));
        if (next - tau).abs() <= resolution || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(Root { origin: Some(origin), tau: next });
        }
        tau = next;
    }
    Err(FriedrichsError::Eigensolver(format!(
        "secular root near {o} did not converge in {MAX_SECULAR_ITERATIONS} iterations"
    )))
}

fn secular(head: f64, d: &[f64], z_sq: &[f64], x: f64) -> f64 {
    x - head - d.iter().zip(z_sq).map(|(&di, &zi)| zi / (x - di)).sum::<f64>()
}

/// Secular function and derivative at `x = d[origin] + tau`, with the
/// differences `x − d_i` formed as `tau − (d_i − d[origin])`.
fn secular_shifted(head: f64, d: &[f64], z_sq: &[f64], origin: usize, tau: f64) -> (f64, f64) {
    let o = d[origin];
    let mut sum = 0.0;
    let mut slope = 1.0;
    for (&di, &zi) in d.iter().zip(z_sq) {
        let delta = tau - (di - o);
        let r = zi / delta;
        sum += r;
        slope += r / delta;
    }
    (o + tau - head - sum, slope)
}

/// Discretized single-excitation Friedrichs model on a uniform midpoint grid.
#[derive(Debug, Clone)]
pub struct DiscretizedFriedrichs {
    pub omega0: f64,
    pub grid: Vec<f64>,
    pub couplings: Vec<f64>,
    pub spacing: f64,
    eigen: ArrowheadEigen,
}

impl DiscretizedFriedrichs {
    pub fn new(
        ff: &FormFactor,
        dos: &DensityOfStates,
        omega0: f64,
        n_modes: usize,
    ) -> Result<Self, FriedrichsError> {
        if n_modes < 10 {
            return Err(FriedrichsError::TooFewModes(n_modes));
        }
        dos.validate()?;
        let (lo, hi) = ff.support();
        let spacing = (hi - lo) / n_modes as f64;
        let grid: Vec<f64> = (0..n_modes).map(|j| lo + (j as f64 + 0.5) * spacing).collect();
        let couplings: Vec<f64> = grid
            .iter()
            .map(|&w| (ff.coupling_sq(w) * dos.density(w) * spacing).sqrt())
            .collect();
        let eigen = ArrowheadEigen::new(omega0, &grid, &couplings)?;
        Ok(Self { omega0, grid, couplings, spacing, eigen })
    }

    pub fn eigen(&self) -> &ArrowheadEigen {
        &self.eigen
    }

    /// Time after which the discrete grid revives the initial state.
    pub fn recurrence_time(&self, hbar: f64) -> f64 {
        2.0 * std::f64::consts::PI * hbar / self.spacing
    }

    pub fn survival_amplitude(&self, t: f64, hbar: f64) -> Complex64 {
        self.eigen.survival_amplitude(t, hbar)
    }
}

/// Survival amplitude `⟨1| exp(−iHt/ħ) |1⟩` of the discretized model on `t_grid`.
pub fn discretized_oracle(
    ff: &FormFactor,
    dos: &DensityOfStates,
    omega0: f64,
    n_modes: usize,
    t_grid: &[f64],
    hbar: f64,
) -> Result<Vec<Complex64>, FriedrichsError> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(FriedrichsError::NonPositiveHbar(hbar));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(FriedrichsError::InvalidTimeGrid);
    }
    let model = DiscretizedFriedrichs::new(ff, dos, omega0, n_modes)?;
    Ok(t_grid.iter().map(|&t| model.survival_amplitude(t, hbar)).collect())
}
