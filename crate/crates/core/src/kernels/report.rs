//! Deterministic kernel-inequality report.
//!
//! For each `t` in the grid, three scaled functionals whose boundedness the
//! transport estimates lean on:
//!
//! * `t · ∫ |∇q_t|⁴` — grid quadrature of the synthesized gradient field;
//! * `√t · sup_{B_{√t}} |∇q_t|` — sampled sup over the ball where the
//!   gradient peaks;
//! * `∫ |∇q_t − ∇(η_{√t} ∗ q₀)|²` — the change-of-kernel energy.
//!
//! The implicit constants are recorded, not asserted: each column should stay
//! within a bounded band (max/min ≤ 10) over the default grid `t = 4^{−k}`,
//! `k = 4..8`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::synth_grid;
use crate::torus::Displacement;
use crate::vec2::Vec2;

use super::fourier::{q_mode_coeff, radius_grad_q};
use super::mollifier::MollifiedGreenTable;
use super::{grad_q, KernelConfig};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct KernelInequalityRow {
    pub t: f64,
    /// `t · ∫ |∇q_t|⁴`
    pub fourth_moment_scaled: f64,
    /// `√t · sup_{B_{√t}} |∇q_t|`
    pub sup_scaled: f64,
    /// `∫ |∇q_t − ∇(η_{√t} ∗ q₀)|²`
    pub change_kernel_energy: f64,
}

impl KernelInequalityRow {
    pub fn csv_header() -> &'static str {
        "t,fourth_moment_scaled,sup_scaled,change_kernel_energy"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.t, self.fourth_moment_scaled, self.sup_scaled, self.change_kernel_energy
        )
    }
}

/// Default grid `t = 4^{−k}`, k = 4..8.
pub fn default_report_grid() -> Vec<f64> {
    (4..=8).map(|k| 4.0f64.powi(-k)).collect()
}

fn grad_q_coeff(t: f64, component: usize) -> impl Fn(i64, i64) -> Complex64 {
    move |k1, k2| {
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        if k_sq == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let kj = if component == 0 { k1 } else { k2 } as f64;
        // ∇q_t coefficient of e^{2πik·x}: a_k(t) · 2πi k_j
        Complex64::new(0.0, TWO_PI * kj * q_mode_coeff(t, k_sq))
    }
}

fn grid_size_for(t: f64, radius: usize) -> usize {
    // Trapezoid error for |∇q_t|⁴ decays like e^{−π² t m²}; require exponent
    // ≥ 60 and room for the synthesized mode square.
    let quartic = (60.0 / (std::f64::consts::PI.powi(2) * t)).sqrt().ceil() as usize;
    let mut m = 256;
    while m < quartic || m < 2 * radius + 2 {
        m *= 2;
    }
    m
}

pub fn kernel_inequality_report(
    t_grid: &[f64],
    cfg: &KernelConfig,
) -> Result<Vec<KernelInequalityRow>> {
    cfg.validate()?;
    for &t in t_grid {
        if !(1e-5..=0.25).contains(&t) {
            return Err(Error::invalid(format!(
                "report t-grid must lie within [1e-5, 0.25], got {t}"
            )));
        }
    }
    t_grid.iter().map(|&t| report_row(t, cfg)).collect()
}

fn report_row(t: f64, cfg: &KernelConfig) -> Result<KernelInequalityRow> {
    let radius = radius_grad_q(t, cfg)?;
    let m = grid_size_for(t, radius);
    let g1 = synth_grid(m, radius, 0.5, grad_q_coeff(t, 0))?;
    let g2 = synth_grid(m, radius, 0.5, grad_q_coeff(t, 1))?;

    let r = t.sqrt();
    let table = MollifiedGreenTable::build(r, cfg)?;
    // Smooth (Fourier) part of the mollified gradient on the same grid.
    let v1 = synth_grid(m, table.fourier_radius(), 0.5, |k1, k2| {
        match table.fourier_grad_coeff(k1, k2) {
            Some((a, _)) => Complex64::new(0.0, a),
            None => Complex64::new(0.0, 0.0),
        }
    })?;
    let v2 = synth_grid(m, table.fourier_radius(), 0.5, |k1, k2| {
        match table.fourier_grad_coeff(k1, k2) {
            Some((_, b)) => Complex64::new(0.0, b),
            None => Complex64::new(0.0, 0.0),
        }
    })?;

    let inv_m2 = 1.0 / (m * m) as f64;
    let mut fourth = 0.0;
    let mut fourth_c = 0.0;
    let mut change = 0.0;
    let mut change_c = 0.0;
    for j1 in 0..m {
        let y1 = (j1 as f64 + 0.5) / m as f64;
        for j2 in 0..m {
            let idx = j1 * m + j2;
            let gsq = g1[idx] * g1[idx] + g2[idx] * g2[idx];
            let term = gsq * gsq;
            let y = term - fourth_c;
            let s = fourth + y;
            fourth_c = (s - fourth) - y;
            fourth = s;

            // Mollified gradient = smooth part + image part.
            let y2 = (j2 as f64 + 0.5) / m as f64;
            let img = table.image_part(Displacement::from_raw(y1, y2));
            let d1 = g1[idx] - (v1[idx] + img.x1);
            let d2 = g2[idx] - (v2[idx] + img.x2);
            let term2 = d1 * d1 + d2 * d2;
            let y2k = term2 - change_c;
            let s2 = change + y2k;
            change_c = (s2 - change) - y2k;
            change = s2;
        }
    }
    let fourth_moment_scaled = t * fourth * inv_m2;
    let change_kernel_energy = change * inv_m2;

    // Sampled sup of |∇q_t| over B_{√t}: radial-angular sweep, densest near
    // the peak scale.
    let mut sup: f64 = 0.0;
    let n_rho = 48;
    let n_theta = 32;
    for i in 1..=n_rho {
        let rho = r * i as f64 / n_rho as f64;
        for j in 0..n_theta {
            let theta = TWO_PI * j as f64 / n_theta as f64;
            let x = Displacement::from_raw(rho * theta.cos(), rho * theta.sin());
            let g: Vec2 = grad_q(t, x, cfg)?;
            sup = sup.max(g.norm());
        }
    }
    let sup_scaled = t.sqrt() * sup;

    Ok(KernelInequalityRow {
        t,
        fourth_moment_scaled,
        sup_scaled,
        change_kernel_energy,
    })
}
