//! Image-sum and Ewald-split evaluation for small heat times.

use crate::error::Result;
use crate::torus::Displacement;
use crate::vec2::{SymMat2, Vec2};

use super::expint::exp1;
use super::fourier;
use super::KernelConfig;

const PI: f64 = std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * PI;
const TWO_PI: f64 = 2.0 * PI;

/// Image shells |m|∞ = j, j = 1..=max, accumulating a per-shell bound of the
/// form `8j · w((j − 1/2)²)` until it drops below `target`. Returns the
/// number of shells to include.
fn choose_image_radius(target: f64, weight: impl Fn(f64) -> f64) -> usize {
    let mut total_radius = 1usize;
    let mut j = 1usize;
    loop {
        let r_min = j as f64 - 0.5;
        let shell = 8.0 * j as f64 * weight(r_min * r_min);
        if shell < target {
            return total_radius.max(j.saturating_sub(1)).max(1);
        }
        total_radius = j + 1;
        j += 1;
        if j > 200 {
            return total_radius;
        }
    }
}

fn for_each_image(x: Displacement, radius: usize, mut f: impl FnMut(f64, f64, f64)) {
    let r = radius as i64;
    for m1 in -r..=r {
        for m2 in -r..=r {
            let u1 = x.v1() + m1 as f64;
            let u2 = x.v2() + m2 as f64;
            f(u1, u2, u1 * u1 + u2 * u2);
        }
    }
}

/// `p_t(x)` by the Gaussian image sum, factorized over coordinates.
pub(super) fn heat_kernel_image(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<f64> {
    let inv4t = 1.0 / (4.0 * t);
    // 1-D factor (1/√(4πt)) Σ_m e^{−(u+m)²/4t}; choose the 1-D image radius so
    // the 2-D product error stays below target_accuracy.
    let target = cfg.target_accuracy * FOUR_PI * t / 4.0;
    let mut radius = 1usize;
    while radius < 60 {
        let r_min = radius as f64 - 0.5;
        if 2.0 * (radius as f64 + 1.0) * (-inv4t * r_min * r_min).exp() < target {
            break;
        }
        radius += 1;
    }
    let norm = 1.0 / (4.0 * PI * t).sqrt();
    let factor = |u: f64| -> f64 {
        let mut sum = 0.0;
        for m in -(radius as i64)..=(radius as i64) {
            let v = u + m as f64;
            sum += (-inv4t * v * v).exp();
        }
        norm * sum
    };
    Ok(factor(x.v1()) * factor(x.v2()))
}

/// `q_t(x)` via the Ewald split (see module docs in `kernels`).
pub(super) fn q_kernel_ewald(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<f64> {
    let sigma = cfg.ewald_sigma;
    let half = 0.5 * cfg.target_accuracy;
    let fourier_cfg = KernelConfig {
        target_accuracy: half,
        ..*cfg
    };
    let smooth = fourier::q_kernel_fourier(t + sigma, x, &fourier_cfg)?;

    let a = 1.0 / (4.0 * t);
    let b = 1.0 / (4.0 * (t + sigma));
    // Shell term bound: (1/4π) E1(B r²) ≤ (1/4π) e^{−Br²}/(Br²).
    let radius = choose_image_radius(half, |r_sq| {
        (-b * r_sq).exp() / (FOUR_PI * b * r_sq)
    });
    let mut images = 0.0;
    for_each_image(x, radius, |_, _, r_sq| {
        if r_sq == 0.0 {
            images += ((t + sigma) / t).ln() / FOUR_PI;
        } else {
            let e_b = exp1(b * r_sq);
            let e_a = exp1(a * r_sq);
            images += (e_b - e_a) / FOUR_PI;
        }
    });
    Ok(smooth - sigma + images)
}

/// Image-correction profile for the q gradient: `G(r²)` with
/// `∇q_t = ∇q_{t+σ} + Σ_m (x+m) G(|x+m|²)`.
fn grad_profile(a: f64, b: f64, r_sq: f64) -> f64 {
    if a * r_sq < 3e-4 {
        // Series in u = r²: (B−A) + (A²−B²)u/2 − (A³−B³)u²/6, over 2π.
        let u = r_sq;
        ((b - a) + 0.5 * (a * a - b * b) * u - (a * a * a - b * b * b) * u * u / 6.0) / TWO_PI
    } else {
        // e^{−Ar²} − e^{−Br²} = e^{−Br²}·expm1(−(A−B)r²)
        let diff = (-b * r_sq).exp() * (-(a - b) * r_sq).exp_m1();
        diff / (TWO_PI * r_sq)
    }
}

/// Derivative dG/d(r²), used by the Hessian.
fn grad_profile_deriv(a: f64, b: f64, r_sq: f64) -> f64 {
    if a * r_sq < 3e-4 {
        let u = r_sq;
        (0.5 * (a * a - b * b) - (a * a * a - b * b * b) * u / 3.0
            + (a * a * a * a - b * b * b * b) * u * u / 8.0)
            / TWO_PI
    } else {
        let ea = (-a * r_sq).exp();
        let eb = (-b * r_sq).exp();
        (((-a * ea + b * eb) * r_sq) - (ea - eb)) / (TWO_PI * r_sq * r_sq)
    }
}

pub(super) fn grad_q_ewald(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<Vec2> {
    let sigma = cfg.ewald_sigma;
    let half = 0.5 * cfg.target_accuracy;
    let fourier_cfg = KernelConfig {
        target_accuracy: half,
        ..*cfg
    };
    let mut g = fourier::grad_q_fourier(t + sigma, x, &fourier_cfg)?;

    let a = 1.0 / (4.0 * t);
    let b = 1.0 / (4.0 * (t + sigma));
    // |(x+m) G| ≤ e^{−Br²}/(2πr).
    let radius = choose_image_radius(half, |r_sq| {
        (-b * r_sq).exp() / (TWO_PI * r_sq.sqrt())
    });
    for_each_image(x, radius, |u1, u2, r_sq| {
        if r_sq > 0.0 {
            let w = grad_profile(a, b, r_sq);
            g.x1 += u1 * w;
            g.x2 += u2 * w;
        }
    });
    Ok(g)
}

pub(super) fn hess_q_ewald(t: f64, x: Displacement, cfg: &KernelConfig) -> Result<SymMat2> {
    let sigma = cfg.ewald_sigma;
    let half = 0.5 * cfg.target_accuracy;
    let fourier_cfg = KernelConfig {
        target_accuracy: half,
        ..*cfg
    };
    let mut h = fourier::hess_q_fourier(t + sigma, x, &fourier_cfg)?;

    let a = 1.0 / (4.0 * t);
    let b = 1.0 / (4.0 * (t + sigma));
    // Entry bound: |G| + 2|G'|r² ≲ e^{−Br²}(B/π + 2/(2πr²)).
    let radius = choose_image_radius(half, |r_sq| {
        (-b * r_sq).exp() * (b / PI + 1.0 / (PI * r_sq))
    });
    for_each_image(x, radius, |u1, u2, r_sq| {
        let g = grad_profile(a, b, r_sq);
        let dg = grad_profile_deriv(a, b, r_sq);
        h.xx += g + 2.0 * dg * u1 * u1;
        h.xy += 2.0 * dg * u1 * u2;
        h.yy += g + 2.0 * dg * u2 * u2;
    });
    Ok(h)
}

/// `∇q₀(x)`: Fourier tail at time σ plus image Gaussians.
pub(super) fn green_gradient_ewald(x: Displacement, cfg: &KernelConfig) -> Result<Vec2> {
    let sigma = cfg.ewald_sigma;
    let half = 0.5 * cfg.target_accuracy;
    let fourier_cfg = KernelConfig {
        target_accuracy: half,
        ..*cfg
    };
    let mut g = fourier::grad_q_fourier(sigma, x, &fourier_cfg)?;

    let b = 1.0 / (4.0 * sigma);
    let radius = choose_image_radius(half, |r_sq| {
        (-b * r_sq).exp() / (TWO_PI * r_sq.sqrt())
    });
    for_each_image(x, radius, |u1, u2, r_sq| {
        if r_sq > 0.0 {
            let w = -(-b * r_sq).exp() / (TWO_PI * r_sq);
            g.x1 += u1 * w;
            g.x2 += u2 * w;
        }
    });
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_series_matches_formula_at_threshold() {
        let t = 0.05;
        let sigma = 1.0 / (4.0 * PI * PI);
        let a = 1.0 / (4.0 * t);
        let b = 1.0 / (4.0 * (t + sigma));
        // Straddle the series/formula switch.
        for &r_sq in &[1e-5, 5e-5, 6.1e-5, 1e-4, 1e-3] {
            let u = r_sq;
            let exact = ((-a * u).exp() - (-b * u).exp()) / (TWO_PI * u);
            let got = grad_profile(a, b, u);
            assert!(
                (got - exact).abs() < 1e-12 * (1.0 + exact.abs()),
                "r_sq={r_sq}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn profile_deriv_matches_finite_difference() {
        let t = 0.02;
        let sigma = 1.0 / (4.0 * PI * PI);
        let a = 1.0 / (4.0 * t);
        let b = 1.0 / (4.0 * (t + sigma));
        for &r_sq in &[1e-3, 0.01, 0.1, 0.5] {
            let h = 1e-7 * r_sq;
            let fd = (grad_profile(a, b, r_sq + h) - grad_profile(a, b, r_sq - h)) / (2.0 * h);
            let got = grad_profile_deriv(a, b, r_sq);
            assert!(
                ((fd - got) / got.abs().max(1e-12)).abs() < 1e-5,
                "r_sq={r_sq}: fd {fd} vs {got}"
            );
        }
    }
}
