//! Geometry of the flat torus 𝕋₁ = (ℝ/ℤ)².
//!
//! Points live in the half-open square [0,1)²; differences are reduced to
//! the nearest periodic image in [−1/2, 1/2)², so the Euclidean norm of a
//! [`Displacement`] is the geodesic distance. Ties at ±1/2 resolve toward
//! −1/2, which makes [`nearest_image`] a function rather than a relation.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// A point of the unit torus with both coordinates in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

/// Nearest-image difference of two torus points; components in [−1/2, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    v1: f64,
    v2: f64,
}

fn reduce_mod_one(x: f64) -> f64 {
    let mut r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if r >= 1.0 {
        r -= 1.0;
    }
    r
}

/// Reduce a raw coordinate difference into [−1/2, 1/2), ties toward −1/2.
fn reduce_half_open(d: f64) -> f64 {
    let mut r = d - (d + 0.5).floor();
    if r < -0.5 {
        r += 1.0;
    }
    if r >= 0.5 {
        r -= 1.0;
    }
    r
}

impl TorusPoint {
    /// Wrap a raw 2-vector onto the torus, reducing each coordinate mod 1.
    pub fn wrap(x1: f64, x2: f64) -> Result<TorusPoint> {
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::invalid(format!(
                "torus point coordinates must be finite, got ({x1}, {x2})"
            )));
        }
        Ok(TorusPoint {
            x1: reduce_mod_one(x1),
            x2: reduce_mod_one(x2),
        })
    }

    /// Wrap without validity check; intended for coordinates already known finite.
    pub(crate) fn wrap_unchecked(x1: f64, x2: f64) -> TorusPoint {
        TorusPoint {
            x1: reduce_mod_one(x1),
            x2: reduce_mod_one(x2),
        }
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    /// Translate by a raw vector, wrapping back onto the torus.
    pub fn translate(&self, v: Vec2) -> TorusPoint {
        TorusPoint::wrap_unchecked(self.x1 + v.x1, self.x2 + v.x2)
    }
}

impl Displacement {
    pub fn v1(&self) -> f64 {
        self.v1
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    /// Build from raw components, reducing into [−1/2, 1/2).
    pub fn from_raw(v1: f64, v2: f64) -> Displacement {
        Displacement {
            v1: reduce_half_open(v1),
            v2: reduce_half_open(v2),
        }
    }

    pub fn as_vec2(&self) -> Vec2 {
        Vec2::new(self.v1, self.v2)
    }

    pub fn norm_sq(&self) -> f64 {
        self.v1 * self.v1 + self.v2 * self.v2
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// The representative of a − b (mod ℤ²) with minimal Euclidean norm.
pub fn nearest_image(a: TorusPoint, b: TorusPoint) -> Displacement {
    Displacement::from_raw(a.x1 - b.x1, a.x2 - b.x2)
}

/// Squared geodesic distance, |nearest_image(a, b)|².
pub fn dist_sq(a: TorusPoint, b: TorusPoint) -> f64 {
    nearest_image(a, b).norm_sq()
}

/// Membership in the open geodesic ball B_r(center); requires 0 < r ≤ 1/2.
pub fn in_ball(p: TorusPoint, center: TorusPoint, r: f64) -> Result<bool> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::invalid(format!(
            "ball radius must lie in (0, 1/2], got {r}"
        )));
    }
    Ok(dist_sq(p, center) < r * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_reduces_mod_one() {
        let p = TorusPoint::wrap(1.25, -0.5).unwrap();
        assert_eq!((p.x1(), p.x2()), (0.25, 0.5));
        let p = TorusPoint::wrap(0.0, 0.0).unwrap();
        assert_eq!((p.x1(), p.x2()), (0.0, 0.0));
        let p = TorusPoint::wrap(3.0, -2.0).unwrap();
        assert_eq!((p.x1(), p.x2()), (0.0, 0.0));
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(TorusPoint::wrap(f64::NAN, 0.0).is_err());
        assert!(TorusPoint::wrap(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_tiny_negative_stays_in_range() {
        let p = TorusPoint::wrap(-1e-18, 0.0).unwrap();
        assert!(p.x1() < 1.0 && p.x1() >= 0.0);
    }

    #[test]
    fn nearest_image_wraps_across_boundary() {
        let a = TorusPoint::wrap(0.9, 0.5).unwrap();
        let b = TorusPoint::wrap(0.1, 0.5).unwrap();
        let d = nearest_image(a, b);
        assert!((d.v1() + 0.2).abs() < 1e-15);
        assert_eq!(d.v2(), 0.0);
    }

    #[test]
    fn nearest_image_identity() {
        let a = TorusPoint::wrap(0.3, 0.7).unwrap();
        let d = nearest_image(a, a);
        assert_eq!((d.v1(), d.v2()), (0.0, 0.0));
    }

    #[test]
    fn half_tie_resolves_to_negative() {
        let a = TorusPoint::wrap(0.75, 0.0).unwrap();
        let b = TorusPoint::wrap(0.25, 0.0).unwrap();
        let d = nearest_image(a, b);
        assert_eq!(d.v1(), -0.5);
        let d = nearest_image(b, a);
        assert_eq!(d.v1(), -0.5);
    }

    #[test]
    fn dist_sq_corner_and_wrap() {
        let o = TorusPoint::wrap(0.0, 0.0).unwrap();
        let c = TorusPoint::wrap(0.5, 0.5).unwrap();
        assert!((dist_sq(o, c) - 0.5).abs() < 1e-15);
        let a = TorusPoint::wrap(0.9, 0.0).unwrap();
        let b = TorusPoint::wrap(0.1, 0.0).unwrap();
        assert!((dist_sq(a, b) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn in_ball_wraps_and_validates() {
        let center = TorusPoint::wrap(0.0, 0.0).unwrap();
        let p = TorusPoint::wrap(0.95, 0.0).unwrap();
        assert!(in_ball(p, center, 0.1).unwrap());
        assert!(in_ball(center, center, 0.1).unwrap());
        assert!(in_ball(p, center, 0.0).is_err());
        assert!(in_ball(p, center, 0.6).is_err());
    }
}
