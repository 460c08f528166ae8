//! Numerical laboratory for the optimal matching problem on the unit flat torus.
//!
//! The crate provides four layers:
//!
//! * [`torus`] — geometry of `(ℝ/ℤ)²`: wrapped points, nearest-image
//!   displacements, geodesic distance.
//! * [`kernels`] — the periodic heat kernel `p_t`, its time integral
//!   `q_t = ∫_t^∞ (p_s − 1) ds`, gradients, Hessians and the `t = 0`
//!   Green-function limit, evaluated with certified truncation error via
//!   dual Fourier/image-sum representations and Ewald splitting.
//! * [`field`] and [`semidiscrete`] — the smoothed linearization field
//!   `f_{n,t}` of an empirical measure and a semi-discrete transport solver
//!   on a pixel grid, with an exact transportation-simplex oracle.
//! * [`experiments`] — seeded Monte Carlo estimators for matching cost,
//!   displacement error, quasi-orthogonality and the supporting kernel
//!   lemmas, plus least-squares rate fitting.

pub mod error;
pub mod experiments;
pub mod field;
pub mod kernels;
pub mod semidiscrete;
pub mod spectral;
pub mod torus;
pub mod vec2;

pub use error::{Error, Result};
pub use torus::{Displacement, TorusPoint};
pub use vec2::Vec2;
