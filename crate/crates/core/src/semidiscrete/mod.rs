//! Semi-discrete optimal transport between `μ_n` and the Lebesgue measure,
//! discretized as `m²` equal-mass pixels evaluated at centers.
//!
//! The solver maximizes the concave Kantorovich dual
//!
//! ```text
//! Φ(ψ) = (1/n) Σ_i ψ_i + Σ_p (1/m²) · min_i ( d²(y_p, X_i) − ψ_i )
//! ```
//!
//! whose supergradient at `ψ` is `(1/n − mass_i)_i` for the Laguerre-cell
//! masses of the current assignment. Pixels are assigned to the argmin site,
//! ties to the lowest index. The optimal map `T_n` sends a point to its
//! cell's site; matched displacements always use the nearest image.

mod simplex;
mod solver;

pub use simplex::exact_oracle;
pub use solver::solve;

use crate::error::{Error, Result};
use crate::field::PointSample;
use crate::kernels::KernelConfig;
use crate::spectral::{self, EmpiricalModes};
use crate::torus::{dist_sq, nearest_image, Displacement, TorusPoint};
use crate::vec2::Vec2;

/// Dual weights ψ, one per sample point, normalized to mean zero.
#[derive(Debug, Clone)]
pub struct DualWeights {
    psi: Vec<f64>,
}

impl DualWeights {
    pub fn zeros(n: usize) -> DualWeights {
        DualWeights { psi: vec![0.0; n] }
    }

    pub fn from_values(mut psi: Vec<f64>) -> DualWeights {
        let mean = psi.iter().sum::<f64>() / psi.len() as f64;
        for v in &mut psi {
            *v -= mean;
        }
        DualWeights { psi }
    }

    pub fn values(&self) -> &[f64] {
        &self.psi
    }

    pub(crate) fn recenter(&mut self) {
        let mean = self.psi.iter().sum::<f64>() / self.psi.len() as f64;
        for v in &mut self.psi {
            *v -= mean;
        }
    }
}

/// Converged output of [`solve`].
#[derive(Debug, Clone)]
pub struct SemidiscreteSolution {
    pub weights: DualWeights,
    pub grid_m: usize,
    /// Site index owning each pixel, row-major over (i1, i2).
    pub assignment: Vec<u32>,
    pub cell_masses: Vec<f64>,
    /// Pixel quadrature of the squared matched displacement, `Σ_p |T(y_p) − y_p|²/m²`.
    pub cost: f64,
    /// `max_i |cell_mass_i − 1/n|`.
    pub mass_residual: f64,
    /// Dual objective at the final iterate.
    pub dual_objective: f64,
    /// Dual objective after each accepted iteration.
    pub dual_trajectory: Vec<f64>,
    pub(crate) sites: Vec<TorusPoint>,
}

impl SemidiscreteSolution {
    pub fn sites(&self) -> &[TorusPoint] {
        &self.sites
    }

    pub fn pixel_center(&self, p: usize) -> TorusPoint {
        let m = self.grid_m;
        let i1 = p / m;
        let i2 = p % m;
        TorusPoint::wrap_unchecked(
            (i1 as f64 + 0.5) / m as f64,
            (i2 as f64 + 0.5) / m as f64,
        )
    }
}

/// Evaluate the transport map: the Laguerre cell owning `y` and the geodesic
/// displacement `T_n(y) − y`.
pub fn map_apply(sol: &SemidiscreteSolution, y: TorusPoint) -> (usize, Displacement) {
    let psi = sol.weights.values();
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, site) in sol.sites.iter().enumerate() {
        let val = dist_sq(y, *site) - psi[i];
        if val < best_val {
            best_val = val;
            best = i;
        }
    }
    (best, nearest_image(sol.sites[best], y))
}

/// Pixel-quadrature transport functionals for a converged solution.
#[derive(Debug, Clone, Copy)]
pub struct TransportIntegrals {
    /// `Σ_p |T(y_p) − y_p|² / m²` — the quadrature W₂².
    pub disp_sq_mean: f64,
    /// `Σ_p |x_p − y_p − ∇f_{n,t}(x_p)|² / m²`, `x_p` the assigned site.
    pub map_poisson_err: f64,
    /// `Σ_p |T(y_p) − y_p − ∇f_{n,t}(y_p)|² / m²`.
    pub nmap_err: f64,
    /// `Σ_p (T(y_p) − y_p − ∇f_{n,t}(y_p)) · ∇f_{n,t}(y_p) / m²`.
    pub quasi_orth: f64,
    /// `Σ_p (f(T(y_p)) − f(y_p)) / m²` — the pushforward (plan) identity value.
    pub ftc_lhs: f64,
    /// `Σ_p |∇f_{n,t}(y_p)|² / m²` — grid Dirichlet quadrature.
    pub dirichlet_quad: f64,
}

/// Compute the transport functionals by one sweep over the pixel grid, with
/// `∇f` and `f` synthesized spectrally (grid) and summed at the sites.
pub fn transport_integrals(
    sol: &SemidiscreteSolution,
    sample: &PointSample,
    t: f64,
    cfg: &KernelConfig,
) -> Result<TransportIntegrals> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat time must be positive, got {t}")));
    }
    let n = sample.len();
    if sol.sites.len() != n {
        return Err(Error::invalid(
            "solution and sample have different sizes".to_string(),
        ));
    }
    let m = sol.grid_m;
    let radius = spectral::field_radius(t, cfg)?;
    let modes = EmpiricalModes::compute(sample.points(), radius);

    // Fields on the pixel-center grid.
    let mut m_synth = m;
    while 2 * radius + 1 > m_synth {
        m_synth += m;
    }
    let stride = m_synth / m;
    let f_grid = spectral::synth_grid(m_synth, radius, 0.5 * stride as f64, spectral::f_coeff(&modes, t))?;
    let g1_grid =
        spectral::synth_grid(m_synth, radius, 0.5 * stride as f64, spectral::grad_f_coeff(&modes, t, 0))?;
    let g2_grid =
        spectral::synth_grid(m_synth, radius, 0.5 * stride as f64, spectral::grad_f_coeff(&modes, t, 1))?;

    // Field values at the sites.
    let f_site: Vec<f64> = sample
        .points()
        .iter()
        .map(|x| modes.eval_f(t, *x))
        .collect();
    let g_site: Vec<Vec2> = sample
        .points()
        .iter()
        .map(|x| modes.eval_grad_f(t, *x))
        .collect();

    let inv_m2 = 1.0 / (m * m) as f64;
    let mut acc = KahanAcc::default();
    for i1 in 0..m {
        let y1 = (i1 as f64 + 0.5) / m as f64;
        for i2 in 0..m {
            let p = i1 * m + i2;
            let y2 = (i2 as f64 + 0.5) / m as f64;
            let site = sol.assignment[p] as usize;
            let y = TorusPoint::wrap_unchecked(y1, y2);
            let disp = nearest_image(sample.points()[site], y).as_vec2();
            let idx = (i1 * stride) * m_synth + i2 * stride;
            let gf = Vec2::new(g1_grid[idx], g2_grid[idx]);
            let a = disp - gf;
            let b = disp - g_site[site];
            acc.add(
                disp.norm_sq(),
                b.norm_sq(),
                a.norm_sq(),
                a.dot(gf),
                f_site[site] - f_grid[idx],
                gf.norm_sq(),
            );
        }
    }
    Ok(TransportIntegrals {
        disp_sq_mean: acc.sums[0] * inv_m2,
        map_poisson_err: acc.sums[1] * inv_m2,
        nmap_err: acc.sums[2] * inv_m2,
        quasi_orth: acc.sums[3] * inv_m2,
        ftc_lhs: acc.sums[4] * inv_m2,
        dirichlet_quad: acc.sums[5] * inv_m2,
    })
}

#[derive(Default)]
struct KahanAcc {
    sums: [f64; 6],
    comps: [f64; 6],
}

impl KahanAcc {
    fn add(&mut self, a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) {
        for (slot, v) in [a, b, c, d, e, f].into_iter().enumerate() {
            let y = v - self.comps[slot];
            let t = self.sums[slot] + y;
            self.comps[slot] = (t - self.sums[slot]) - y;
            self.sums[slot] = t;
        }
    }
}

pub(crate) fn validate_solve_args(
    n: usize,
    grid_m: usize,
    mass_tol: f64,
) -> Result<()> {
    if grid_m < 16 {
        return Err(Error::invalid(format!("grid_m must be ≥ 16, got {grid_m}")));
    }
    if !(1e-10..=1e-2).contains(&mass_tol) {
        return Err(Error::invalid(format!(
            "mass_tol must lie in [1e-10, 1e-2], got {mass_tol}"
        )));
    }
    if n > grid_m * grid_m {
        return Err(Error::invalid(format!(
            "n = {n} exceeds the number of pixels {} (infeasible)",
            grid_m * grid_m
        )));
    }
    Ok(())
}
