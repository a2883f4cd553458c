//! Planar primitives shared by every module.
//!
//! Points and gradients are `nalgebra` 2-vectors; holomorphic quantities are
//! handled as `Complex64` and converted at the boundary of each routine.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type Point = Vector2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

#[inline]
pub fn point(x: f64, y: f64) -> Point {
    Vector2::new(x, y)
}

#[inline]
pub fn polar(r: f64, phi: f64) -> Point {
    Vector2::new(r * phi.cos(), r * phi.sin())
}

#[inline]
pub fn to_complex(p: &Point) -> Complex64 {
    Complex64::new(p.x, p.y)
}

#[inline]
pub fn from_complex(z: Complex64) -> Point {
    Vector2::new(z.re, z.im)
}

/// Reduces an angle to `(-π, π]`.
pub fn reduce_angle(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = phi % two_pi;
    if t <= -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

/// Gradient of `Re F` given `F'`: `(Re F', -Im F')`.
#[inline]
pub fn gradient_of_real_part(dz: Complex64) -> Vec2 {
    Vector2::new(dz.re, -dz.im)
}

/// Hessian of `Re F` given `F''`.
#[inline]
pub fn hessian_of_real_part(d2z: Complex64) -> Mat2 {
    Matrix2::new(d2z.re, -d2z.im, -d2z.im, -d2z.re)
}

/// Uniform periodic nodes `τ_j = -π + 2πj/n`.
pub fn periodic_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_reduction_lands_in_half_open_interval() {
        for k in -5..=5 {
            let t = reduce_angle(0.3 + 2.0 * PI * k as f64);
            assert!((t - 0.3).abs() < 1e-12);
        }
        assert_eq!(reduce_angle(PI), PI);
        assert!((reduce_angle(-PI) - PI).abs() < 1e-15);
        assert!((reduce_angle(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn real_part_derivatives_of_z_squared() {
        // F = z², u = x² - y²
        let z = Complex64::new(0.3, -0.7);
        let g = gradient_of_real_part(2.0 * z);
        assert!((g.x - 0.6).abs() < 1e-15 && (g.y - 1.4).abs() < 1e-15);
        let h = hessian_of_real_part(Complex64::new(2.0, 0.0));
        assert_eq!(h, Matrix2::new(2.0, 0.0, 0.0, -2.0));
    }
}
