//! Fourier-side evaluation: truncated mode sums with certified tail bounds.

use crate::error::{Error, Result};
use crate::torus::Displacement;
use crate::vec2::{SymMat2, Vec2};

use super::KernelConfig;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Mode coefficient of `q_t`: `e^{−4π²|k|²t} / (4π²|k|²)` for `|k|² = k_sq`.
pub(crate) fn q_mode_coeff(t: f64, k_sq: f64) -> f64 {
    (-FOUR_PI_SQ * k_sq * t).exp() / (FOUR_PI_SQ * k_sq)
}

/// Upper bound on the 1-D tail `Σ_{|j| > K} e^{−a j²}`, via `(K+i)² ≥ K² + 2Ki`.
fn theta_tail_1d(a: f64, radius: usize) -> f64 {
    let k = radius as f64;
    let z = (-2.0 * a * k).exp().min((-a * (2.0 * k + 1.0)).exp());
    if z >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * (-a * k * k).exp() * z / (1.0 - z)
}

/// Upper bound on the 2-D tail `Σ_{|k|∞ > K} e^{−a|k|²}`.
fn theta_tail_2d(a: f64, radius: usize) -> f64 {
    let inner = 2.0 + (std::f64::consts::PI / a).sqrt();
    let t1 = theta_tail_1d(a, radius);
    t1 * (2.0 * inner + t1)
}

/// Smallest radius K ≤ cap so that the tail of the mode sum, scaled by a
/// per-mode coefficient factor, stays below `target`.
fn choose_radius(
    a: f64,
    target: f64,
    cap: usize,
    coeff_factor: impl Fn(f64) -> f64,
) -> Result<usize> {
    let mut radius = 1usize;
    loop {
        let bound = theta_tail_2d(a, radius) * coeff_factor(radius as f64);
        if bound <= target {
            return Ok(radius);
        }
        if radius >= cap {
            // Report roughly how far the radius would have to grow.
            let needed = ((a * (radius as f64).powi(2) - bound.max(1e-300).ln() + target.ln())
                / a)
                .abs()
                .sqrt()
                .ceil() as usize;
            return Err(Error::Accuracy {
                needed: needed.max(cap + 1),
                cap,
            });
        }
        radius = (radius * 2).min(cap);
    }
}

pub(crate) fn radius_p(t: f64, cfg: &KernelConfig) -> Result<usize> {
    choose_radius(FOUR_PI_SQ * t, cfg.target_accuracy, cfg.max_modes, |_| 1.0)
}

pub(crate) fn radius_q(t: f64, cfg: &KernelConfig) -> Result<usize> {
    choose_radius(FOUR_PI_SQ * t, cfg.target_accuracy, cfg.max_modes, |k| {
        1.0 / (FOUR_PI_SQ * k * k)
    })
}

pub(crate) fn radius_grad_q(t: f64, cfg: &KernelConfig) -> Result<usize> {
    choose_radius(FOUR_PI_SQ * t, cfg.target_accuracy, cfg.max_modes, |k| {
        1.0 / (TWO_PI * k)
    })
}

pub(crate) fn radius_hess_q(t: f64, cfg: &KernelConfig) -> Result<usize> {
    choose_radius(FOUR_PI_SQ * t, cfg.target_accuracy, cfg.max_modes, |_| 1.0)
}

/// Radius for synthesizing `∇f_{n,t}`-type fields: the empirical transform is
/// bounded by 1, so the q-gradient coefficient bound applies mode by mode.
pub(crate) fn radius_for_field_modes(t: f64, accuracy: f64, cap: usize) -> Result<usize> {
    choose_radius(FOUR_PI_SQ * t, accuracy, cap, |k| 1.0 / (TWO_PI * k))
}

/// cos/sin tables for `2π j x`, j = 0..=radius, by angle addition.
fn trig_tables(x: f64, radius: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(radius + 1);
    let mut s = Vec::with_capacity(radius + 1);
    let (s1, c1) = (TWO_PI * x).sin_cos();
    c.push(1.0);
    s.push(0.0);
    for j in 1..=radius {
        let (cp, sp) = (c[j - 1], s[j - 1]);
        c.push(cp * c1 - sp * s1);
        s.push(sp * c1 + cp * s1);
    }
    (c, s)
}

/// `p_t(x)` as a product of 1-D theta sums (the 2-D Gaussian factorizes).
pub(super) fn heat_kernel_fourier(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<f64> {
    let radius = radius_p(t, cfg)?;
    let a = FOUR_PI_SQ * t;
    let theta = |u: f64| -> f64 {
        let mut sum = 1.0;
        for j in 1..=radius {
            sum += 2.0 * (-a * (j * j) as f64).exp() * (TWO_PI * j as f64 * u).cos();
        }
        sum
    };
    Ok(theta(x.v1()) * theta(x.v2()))
}

/// Shared 2-D mode loop: accumulates Σ_{k≠0, |k|∞≤radius} with caller-supplied
/// per-mode accumulation. Modes are folded over `k ↔ −k`.
fn mode_loop(
    x: Displacement,
    radius: usize,
    mut accumulate: impl FnMut(i64, i64, f64, f64), // (k1, k2, cos(2πk·x), sin(2πk·x))
) {
    let (c1, s1) = trig_tables(x.v1(), radius);
    let (c2, s2) = trig_tables(x.v2(), radius);
    let r = radius as i64;
    // Half lattice: k1 > 0 with any k2, plus k1 = 0 with k2 > 0. The caller
    // doubles even contributions; odd ones appear with the sign of each half.
    for k1 in 0..=r {
        let k2_start = if k1 == 0 { 1 } else { -r };
        for k2 in k2_start..=r {
            let (ca, sa) = (c1[k1 as usize], s1[k1 as usize]);
            let (cb, sb) = if k2 >= 0 {
                (c2[k2 as usize], s2[k2 as usize])
            } else {
                (c2[(-k2) as usize], -s2[(-k2) as usize])
            };
            let cos_kx = ca * cb - sa * sb;
            let sin_kx = sa * cb + ca * sb;
            accumulate(k1, k2, cos_kx, sin_kx);
        }
    }
}

pub(super) fn q_kernel_fourier(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<f64> {
    let radius = radius_q(t, cfg)?;
    Ok(q_sum_with_radius(t, x, radius))
}

pub(crate) fn q_sum_with_radius(t: f64, x: Displacement, radius: usize) -> f64 {
    let mut sum = 0.0;
    mode_loop(x, radius, |k1, k2, cos_kx, _| {
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        sum += 2.0 * q_mode_coeff(t, k_sq) * cos_kx;
    });
    sum
}

pub(super) fn grad_q_fourier(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<Vec2> {
    let radius = radius_grad_q(t, cfg)?;
    Ok(grad_q_sum_with_radius(t, x, radius))
}

pub(crate) fn grad_q_sum_with_radius(t: f64, x: Displacement, radius: usize) -> Vec2 {
    let mut g = Vec2::ZERO;
    mode_loop(x, radius, |k1, k2, _, sin_kx| {
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        let w = -2.0 * TWO_PI * q_mode_coeff(t, k_sq) * sin_kx;
        g.x1 += w * k1 as f64;
        g.x2 += w * k2 as f64;
    });
    g
}

pub(super) fn hess_q_fourier(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<SymMat2> {
    let radius = radius_hess_q(t, cfg)?;
    let mut h = SymMat2::default();
    mode_loop(x, radius, |k1, k2, cos_kx, _| {
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        let w = -2.0 * FOUR_PI_SQ * q_mode_coeff(t, k_sq) * cos_kx;
        h.xx += w * (k1 * k1) as f64;
        h.xy += w * (k1 * k2) as f64;
        h.yy += w * (k2 * k2) as f64;
    });
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_bound_is_an_upper_bound() {
        for &a in &[0.05, 0.5, 3.0] {
            for &radius in &[2usize, 5, 12] {
                let mut exact = 0.0;
                let r = radius as i64;
                for k1 in -200i64..=200 {
                    for k2 in -200i64..=200 {
                        if k1.abs().max(k2.abs()) > r {
                            exact += (-a * ((k1 * k1 + k2 * k2) as f64)).exp();
                        }
                    }
                }
                let bound = theta_tail_2d(a, radius);
                assert!(bound >= exact, "a={a} K={radius}: bound {bound} < {exact}");
            }
        }
    }

    #[test]
    fn chooser_errors_when_cap_too_small() {
        let cfg = KernelConfig {
            max_modes: 4,
            ..KernelConfig::default()
        };
        match radius_p(1e-6, &cfg) {
            Err(Error::Accuracy { needed, cap }) => {
                assert_eq!(cap, 4);
                assert!(needed > 4);
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn trig_tables_match_direct() {
        let (c, s) = trig_tables(0.3173, 40);
        for j in 0..=40 {
            let arg = TWO_PI * j as f64 * 0.3173;
            assert!((c[j] - arg.cos()).abs() < 1e-12);
            assert!((s[j] - arg.sin()).abs() < 1e-12);
        }
    }
}
