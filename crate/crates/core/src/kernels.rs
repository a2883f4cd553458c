//! Poisson and conjugate kernels of the unit circle.
//!
//! `P_r(φ) = (1 - r²) / (r² + 1 - 2r cos φ)` and
//! `K_r(φ) = r sin φ / (r² + 1 - 2r cos φ)`, valid for `r < 1` and `r > 1`.
//! The Cartesian-point variants evaluate the same kernels for
//! `x = r e^{iφ}` against a boundary point `y = e^{iτ}`, which is what the
//! disk solvers integrate.

use crate::geometry::{reduce_angle, Point, Vec2};
use thiserror::Error;

/// Squared distance to the singular point below which evaluation is refused.
pub const SINGULARITY_GUARD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel is singular at r = {r}, phi = {phi}")]
    Singular { r: f64, phi: f64 },
    #[error("invalid kernel radius {0}: must be finite and non-negative")]
    InvalidRadius(f64),
}

/// Polar evaluation point of a kernel, angle already reduced to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    r: f64,
    phi: f64,
}

impl KernelPoint {
    pub fn new(r: f64, phi: f64) -> Result<Self, KernelError> {
        if !r.is_finite() || r < 0.0 {
            return Err(KernelError::InvalidRadius(r));
        }
        let phi = reduce_angle(phi);
        if denominator(r, phi) < SINGULARITY_GUARD {
            return Err(KernelError::Singular { r, phi });
        }
        Ok(Self { r, phi })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// `r² + 1 - 2r cos φ`, written as `(r-1)² + 4r sin²(φ/2)` to avoid cancellation.
#[inline]
fn denominator(r: f64, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    (r - 1.0) * (r - 1.0) + 4.0 * r * s * s
}

pub fn eval_poisson(p: KernelPoint) -> f64 {
    (1.0 - p.r * p.r) / denominator(p.r, p.phi)
}

pub fn eval_conjugate(p: KernelPoint) -> f64 {
    p.r * p.phi.sin() / denominator(p.r, p.phi)
}

/// Cartesian gradient of `P` at `x = r e^{iφ}` against the boundary point at angle 0.
pub fn eval_poisson_grad_xy(p: KernelPoint) -> Vec2 {
    let x = Vec2::new(p.r * p.phi.cos(), p.r * p.phi.sin());
    poisson_grad_unchecked(&x, &Vec2::new(1.0, 0.0), denominator(p.r, p.phi))
}

#[inline]
fn poisson_grad_unchecked(x: &Point, y: &Point, dist2: f64) -> Vec2 {
    let one_minus = 1.0 - x.norm_squared();
    (x * (dist2 + one_minus) - y * one_minus) * (-2.0 / (dist2 * dist2))
}

fn checked_dist2(x: &Point, y: &Point) -> Result<f64, KernelError> {
    let d2 = (x - y).norm_squared();
    if d2 < SINGULARITY_GUARD {
        return Err(KernelError::Singular { r: x.norm(), phi: y.y.atan2(y.x) - x.y.atan2(x.x) });
    }
    Ok(d2)
}

/// `P` at an arbitrary point `x` against the unit-circle point `y`.
pub fn poisson_at(x: &Point, y: &Point) -> Result<f64, KernelError> {
    Ok((1.0 - x.norm_squared()) / checked_dist2(x, y)?)
}

/// Gradient in `x` of `(1 - |x|²)/|x - y|²`.
pub fn poisson_grad_at(x: &Point, y: &Point) -> Result<Vec2, KernelError> {
    let d2 = checked_dist2(x, y)?;
    Ok(poisson_grad_unchecked(x, y, d2))
}

/// Conjugate kernel `(x₁y₂ - x₂y₁)/|x - y|²`, i.e. `K_r(τ - φ)` for `y = e^{iτ}`.
pub fn conjugate_at(x: &Point, y: &Point) -> Result<f64, KernelError> {
    let d2 = checked_dist2(x, y)?;
    Ok((x.x * y.y - x.y * y.x) / d2)
}

/// Gradient in `x` of the conjugate kernel.
pub fn conjugate_grad_at(x: &Point, y: &Point) -> Result<Vec2, KernelError> {
    let d2 = checked_dist2(x, y)?;
    let cross = x.x * y.y - x.y * y.x;
    let lin = Vec2::new(y.y, -y.x) / d2;
    Ok(lin - (x - y) * (2.0 * cross / (d2 * d2)))
}
