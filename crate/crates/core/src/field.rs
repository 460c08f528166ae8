//! The empirical measure `μ_n` and its smoothed linearization field
//! `f_{n,t}`, with `−Δ f_{n,t} = p_t ∗ (μ_n − 1)`.
//!
//! Realized through the integrated kernel: `f_{n,t}(y) = (1/n) Σ_i q_t(X_i−y)`
//! and `∇f_{n,t}(y) = (1/n) Σ_i ∇q_t(X_i−y)`. Direct summation over sample
//! points is the reference path; bulk evaluations go through [`crate::spectral`]
//! and agree with it to kernel accuracy.

use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelConfig, MollifiedGreenTable};
use crate::spectral::{self, EmpiricalModes};
use crate::torus::{nearest_image, TorusPoint};
use crate::vec2::Vec2;

/// Seeded i.i.d. uniform sample {X₁..X_n}; the empirical measure μ_n.
///
/// Regenerating from the same `(seed, replica_index)` reproduces the list
/// bit for bit: coordinates come from a ChaCha stream keyed by the seed with
/// the replica index as the stream counter, mapped to [0,1) by the fixed
/// 53-bit ldexp rule.
#[derive(Debug, Clone)]
pub struct PointSample {
    points: Vec<TorusPoint>,
    seed: u64,
    replica_index: u64,
}

impl PointSample {
    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica_index(&self) -> u64 {
        self.replica_index
    }

    /// Translated copy (wrapped); used by stationarity checks.
    pub fn translated(&self, v: Vec2) -> PointSample {
        PointSample {
            points: self.points.iter().map(|p| p.translate(v)).collect(),
            seed: self.seed,
            replica_index: self.replica_index,
        }
    }

    /// Sample with explicit points; consumers that need a non-random layout.
    pub fn from_points(points: Vec<TorusPoint>) -> Result<PointSample> {
        if points.is_empty() {
            return Err(Error::invalid("a point sample requires n ≥ 1"));
        }
        Ok(PointSample {
            points,
            seed: 0,
            replica_index: 0,
        })
    }
}

fn unit_f64(bits: u64) -> f64 {
    // 53 high bits → [0,1); deterministic across platforms.
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw `n` i.i.d. uniform torus points from the stream `(seed, replica_index)`.
pub fn sample_uniform(n: usize, seed: u64, replica_index: u64) -> Result<PointSample> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica_index);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = unit_f64(rng.next_u64());
        let x2 = unit_f64(rng.next_u64());
        points.push(TorusPoint::wrap_unchecked(x1, x2));
    }
    Ok(PointSample {
        points,
        seed,
        replica_index,
    })
}

/// The paper's scales: `r_n = n^{−1/2}` and `t_n = n^{−1} (ln n)³`.
#[derive(Debug, Clone, Copy)]
pub struct ScaleParams {
    pub n: usize,
    pub r_n: f64,
    pub r_n_sq: f64,
    pub t_n: f64,
}

impl ScaleParams {
    pub fn new(n: usize) -> ScaleParams {
        let r_n_sq = 1.0 / n as f64;
        let log_n = (n as f64).ln();
        ScaleParams {
            n,
            r_n: r_n_sq.sqrt(),
            r_n_sq,
            t_n: log_n.powi(3) / n as f64,
        }
    }
}

/// `∇f_{n,t}(y)` by direct summation of `∇q_t` over nearest images.
pub fn grad_f(sample: &PointSample, t: f64, y: TorusPoint, cfg: &KernelConfig) -> Result<Vec2> {
    let mut acc = Vec2::ZERO;
    for x in sample.points() {
        acc += kernels::grad_q(t, nearest_image(*x, y), cfg)?;
    }
    Ok(acc.scale(1.0 / sample.len() as f64))
}

/// `f_{n,t}(y)` by direct summation of `q_t`.
pub fn f_value(sample: &PointSample, t: f64, y: TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    let mut acc = 0.0;
    for x in sample.points() {
        acc += kernels::q_kernel(t, nearest_image(*x, y), cfg)?;
    }
    Ok(acc / sample.len() as f64)
}

/// `∫ |∇f_{n,t}|²`, computed through the closed mode sum; identical to the
/// pair sum `(1/n²) Σ_{ij} q_{2t}(X_i − X_j)`.
pub fn dirichlet_energy(sample: &PointSample, t: f64, cfg: &KernelConfig) -> Result<f64> {
    let radius = spectral::field_radius(2.0 * t, cfg)?;
    let modes = EmpiricalModes::compute(sample.points(), radius);
    Ok(spectral::dirichlet_energy_modes(&modes, t))
}

/// `(1/n²) Σ_{ij} q_t(X_i − X_j) = ∫ f_{n,t} d(μ_n − 1)`; equals
/// `dirichlet_energy` at time `t/2`.
pub fn pairing_value(sample: &PointSample, t: f64, cfg: &KernelConfig) -> Result<f64> {
    let radius = spectral::field_radius(t, cfg)?;
    let modes = EmpiricalModes::compute(sample.points(), radius);
    Ok(spectral::pairing_value_modes(&modes, t))
}

/// Max over the `grid_m²` uniform grid of the spectral norm of `∇²f_{n,t}`.
///
/// A lower bound for the true sup; the gap is controlled by the grid pitch
/// against the field scale `√t`, hence the resolution floor `grid_m ≥ ⌈4/√t⌉`.
pub fn hessian_sup(
    sample: &PointSample,
    t: f64,
    grid_m: usize,
    cfg: &KernelConfig,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat time must be positive, got {t}")));
    }
    let floor = (4.0 / t.sqrt()).ceil() as usize;
    if grid_m < floor {
        return Err(Error::invalid(format!(
            "grid_m = {grid_m} is below the resolution floor ⌈4/√t⌉ = {floor}"
        )));
    }
    let radius = spectral::field_radius(t, cfg)?;
    let modes = EmpiricalModes::compute(sample.points(), radius);
    // Synthesize on a multiple of grid_m that holds the mode square, then
    // take every stride-th node so the reported grid is exactly grid_m².
    let mut m_synth = grid_m;
    while 2 * radius + 1 > m_synth {
        m_synth += grid_m;
    }
    let stride = m_synth / grid_m;
    let hxx = spectral::synth_grid(m_synth, radius, 0.0, spectral::hess_f_coeff(&modes, t, 0, 0))?;
    let hxy = spectral::synth_grid(m_synth, radius, 0.0, spectral::hess_f_coeff(&modes, t, 0, 1))?;
    let hyy = spectral::synth_grid(m_synth, radius, 0.0, spectral::hess_f_coeff(&modes, t, 1, 1))?;
    let mut sup = 0.0f64;
    for j1 in (0..m_synth).step_by(stride) {
        for j2 in (0..m_synth).step_by(stride) {
            let idx = j1 * m_synth + j2;
            let norm = crate::vec2::SymMat2::new(hxx[idx], hxy[idx], hyy[idx]).spectral_norm();
            sup = sup.max(norm);
        }
    }
    Ok(sup)
}

/// `∇φ_n^r(y) = (1/n) Σ_i (η_r ∗ ∇q₀)(X_i − y)` by direct quadrature of the
/// mollified Green gradient. Reference path; for bulk use build a
/// [`MollifiedGreenTable`] and call [`mollified_field_gradient_table`].
pub fn mollified_field_gradient(
    sample: &PointSample,
    r: f64,
    y: TorusPoint,
    cfg: &KernelConfig,
) -> Result<Vec2> {
    let mut acc = Vec2::ZERO;
    for x in sample.points() {
        acc += kernels::mollified_green_gradient(r, nearest_image(*x, y), cfg)?;
    }
    Ok(acc.scale(1.0 / sample.len() as f64))
}

/// Table-accelerated `∇φ_n^r(y)`.
pub fn mollified_field_gradient_table(
    sample: &PointSample,
    table: &MollifiedGreenTable,
    y: TorusPoint,
) -> Vec2 {
    let mut acc = Vec2::ZERO;
    for x in sample.points() {
        acc += table.eval(nearest_image(*x, y));
    }
    acc.scale(1.0 / sample.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_uniform(100, 7, 3).unwrap();
        let b = sample_uniform(100, 7, 3).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert_eq!(p.x1().to_bits(), q.x1().to_bits());
            assert_eq!(p.x2().to_bits(), q.x2().to_bits());
        }
        let c = sample_uniform(100, 7, 4).unwrap();
        assert!(a
            .points()
            .iter()
            .zip(c.points())
            .any(|(p, q)| p.x1() != q.x1()));
    }

    #[test]
    fn rejects_empty_sample() {
        assert!(sample_uniform(0, 1, 0).is_err());
    }

    #[test]
    fn scale_params_basics() {
        let s = ScaleParams::new(1024);
        assert_eq!(s.r_n_sq, 1.0 / 1024.0);
        assert!((s.t_n - (1024.0f64).ln().powi(3) / 1024.0).abs() < 1e-18);
        assert!(s.t_n >= s.r_n_sq);
    }

    #[test]
    fn single_point_field_reduces_to_kernel() {
        let cfg = KernelConfig::default();
        let sample =
            PointSample::from_points(vec![TorusPoint::wrap(0.0, 0.0).unwrap()]).unwrap();
        let y = TorusPoint::wrap(0.3, 0.15).unwrap();
        let t = 0.02;
        let g = grad_f(&sample, t, y, &cfg).unwrap();
        let expect = kernels::grad_q(
            t,
            nearest_image(TorusPoint::wrap(0.0, 0.0).unwrap(), y),
            &cfg,
        )
        .unwrap();
        assert!((g - expect).norm() < 1e-14);
        let f = f_value(&sample, t, y, &cfg).unwrap();
        let fq = kernels::q_kernel(
            t,
            nearest_image(TorusPoint::wrap(0.0, 0.0).unwrap(), y),
            &cfg,
        )
        .unwrap();
        assert!((f - fq).abs() < 1e-14);
    }

    #[test]
    fn hessian_sup_enforces_resolution_floor() {
        let sample = sample_uniform(8, 1, 0).unwrap();
        let cfg = KernelConfig::default();
        assert!(hessian_sup(&sample, 1e-4, 16, &cfg).is_err());
    }
}
