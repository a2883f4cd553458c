//! Circle inversion, the fundamental solution and the Neumann Green's function
//! of the exterior of `B_R`.
//!
//! `G_N(x, y) = Φ(y - x) - φˣ(y)` with
//! `φˣ(y) = (1/2π) log|y - x*| - |y|²/(4πR²)`.

use crate::boundary_data::PeriodicFunction;
use crate::geometry::{polar, Point, Vec2};
use std::f64::consts::PI;
use thiserror::Error;

const POINT_GUARD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreensError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("point is singular for this operation")]
    Singular,
    #[error("pole |x| = {0} must lie outside the reference circle")]
    PoleInside(f64),
    #[error("support ({0}, {1}) must satisfy R <= inner < outer")]
    BadSupport(f64, f64),
}

/// Which way the supplied Neumann trace is differentiated on `|y| = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normal {
    /// `ν = y/R`, pointing out of `B_R`.
    AwayFromCentre,
    /// `ν = -y/R`, the outward normal of the exterior domain.
    TowardCentre,
}

impl Normal {
    fn sign(self) -> f64 {
        match self {
            Normal::AwayFromCentre => 1.0,
            Normal::TowardCentre => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensContext {
    radius: f64,
}

/// `Φ(x) = -log|x| / 2π`.
pub fn eval_phi_fund(x: &Point) -> Result<f64, GreensError> {
    let n2 = x.norm_squared();
    if n2 < POINT_GUARD {
        return Err(GreensError::Singular);
    }
    Ok(-n2.ln() / (4.0 * PI))
}

/// `DΦ(x) = -x / (2π|x|²)`.
pub fn grad_phi_fund(x: &Point) -> Result<Vec2, GreensError> {
    let n2 = x.norm_squared();
    if n2 < POINT_GUARD {
        return Err(GreensError::Singular);
    }
    Ok(-x / (2.0 * PI * n2))
}

impl GreensContext {
    pub fn new(radius: f64) -> Result<Self, GreensError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GreensError::BadRadius(radius));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `x* = R² x / |x|²`.
    pub fn invert(&self, x: &Point) -> Result<Point, GreensError> {
        let n2 = x.norm_squared();
        if n2 < POINT_GUARD {
            return Err(GreensError::Singular);
        }
        Ok(x * (self.radius * self.radius / n2))
    }

    /// Constant `k` in `-Δφˣ = k`.
    pub fn source_constant(&self) -> f64 {
        1.0 / (PI * self.radius * self.radius)
    }

    fn pole(&self, x: &Point) -> Result<Point, GreensError> {
        if x.norm() <= self.radius {
            return Err(GreensError::PoleInside(x.norm()));
        }
        self.invert(x)
    }

    pub fn eval_phi_corrector(&self, x: &Point, y: &Point) -> Result<f64, GreensError> {
        let xs = self.pole(x)?;
        let d2 = (y - xs).norm_squared();
        if d2 < POINT_GUARD {
            return Err(GreensError::Singular);
        }
        Ok(d2.ln() / (4.0 * PI) - y.norm_squared() / (4.0 * PI * self.radius * self.radius))
    }

    /// Gradient in `y` of `φˣ`.
    pub fn grad_phi_corrector(&self, x: &Point, y: &Point) -> Result<Vec2, GreensError> {
        let xs = self.pole(x)?;
        let d = y - xs;
        let d2 = d.norm_squared();
        if d2 < POINT_GUARD {
            return Err(GreensError::Singular);
        }
        Ok(d / (2.0 * PI * d2) - y / (2.0 * PI * self.radius * self.radius))
    }

    /// `G_N(x, y) = Φ(y - x) - φˣ(y)`.
    pub fn eval_greens_neumann(&self, x: &Point, y: &Point) -> Result<f64, GreensError> {
        Ok(eval_phi_fund(&(y - x))? - self.eval_phi_corrector(x, y)?)
    }

    /// Gradient in `y` of `G_N(x, y)`.
    pub fn grad_greens_neumann(&self, x: &Point, y: &Point) -> Result<Vec2, GreensError> {
        Ok(grad_phi_fund(&(y - x))? - self.grad_phi_corrector(x, y)?)
    }

    /// `∂Φ(y - x)/∂ν` and `∂φˣ/∂ν` at `y` on `|y| = R`, with `ν = y/R`.
    pub fn boundary_normal_derivatives(&self, x: &Point, y: &Point) -> Result<(f64, f64), GreensError> {
        let nu = y / y.norm();
        Ok((grad_phi_fund(&(y - x))?.dot(&nu), self.grad_phi_corrector(x, y)?.dot(&nu)))
    }

    /// `∫_{|y|=R} g(θ) G_N(x, y) dS(y)` by the trapezoid rule on the datum's nodes.
    ///
    /// For zero-mean `g` this is harmonic in `|x| > R` with `-∂u/∂r = g` on the circle.
    pub fn single_layer(&self, g: &PeriodicFunction, x: &Point) -> Result<f64, GreensError> {
        let w = 2.0 * PI * self.radius / g.len() as f64;
        let mut acc = 0.0;
        for (t, v) in g.nodes().iter().zip(g.samples()) {
            acc += v * self.eval_greens_neumann(x, &polar(self.radius, *t))?;
        }
        Ok(acc * w)
    }

    /// Gradient in `x` of [`GreensContext::single_layer`].
    ///
    /// On the circle `G_N(x, y) = -(1/π) log|x - y| + c(x)` and the `c(x)` term
    /// integrates to zero against zero-mean data, so the kernel derivative is
    /// taken from the log term.
    pub fn single_layer_gradient(&self, g: &PeriodicFunction, x: &Point) -> Result<Vec2, GreensError> {
        let w = 2.0 * PI * self.radius / g.len() as f64;
        let mut acc = Vec2::zeros();
        for (t, v) in g.nodes().iter().zip(g.samples()) {
            let d = x - polar(self.radius, *t);
            let d2 = d.norm_squared();
            if d2 < POINT_GUARD {
                return Err(GreensError::Singular);
            }
            acc += d * (*v / d2);
        }
        Ok(acc * (-w / PI))
    }

    /// `-∫_{∂B_R} ∂u/∂ν G_N dS - ∫ Δu G_N dy` at `x`, i.e. `u(x)` up to the additive constant.
    ///
    /// `trace` holds `∂u/∂ν` on `|y| = R` under the given `normal`. `laplacian`
    /// is `Δu` supported in `inner < |y| < outer`; it is integrated with the
    /// midpoint rule on an `(nr, ntheta)` polar grid.
    pub fn representation(
        &self,
        x: &Point,
        trace: &PeriodicFunction,
        normal: Normal,
        laplacian: impl Fn(&Point) -> f64,
        support: (f64, f64),
        grid: (usize, usize),
    ) -> Result<f64, GreensError> {
        let (inner, outer) = support;
        if !(inner >= self.radius && outer > inner) {
            return Err(GreensError::BadSupport(inner, outer));
        }
        let boundary = normal.sign() * self.single_layer(trace, x)?;
        let (nr, nt) = grid;
        let dr = (outer - inner) / nr as f64;
        let dt = 2.0 * PI / nt as f64;
        let mut volume = 0.0;
        for i in 0..nr {
            let rho = inner + (i as f64 + 0.5) * dr;
            for j in 0..nt {
                let y = polar(rho, -PI + (j as f64 + 0.5) * dt);
                let f = laplacian(&y);
                if f != 0.0 {
                    volume += f * self.eval_greens_neumann(x, &y)? * rho;
                }
            }
        }
        Ok(-boundary - volume * dr * dt)
    }

    /// Five-point Laplacian of `φˣ` at `y` with step `h`.
    pub fn corrector_discrete_laplacian(&self, x: &Point, y: &Point, h: f64) -> Result<f64, GreensError> {
        let f = |p: Point| self.eval_phi_corrector(x, &p);
        let c = f(*y)?;
        let s = f(y + Vec2::new(h, 0.0))?
            + f(y - Vec2::new(h, 0.0))?
            + f(y + Vec2::new(0.0, h))?
            + f(y - Vec2::new(0.0, h))?;
        Ok((s - 4.0 * c) / (h * h))
    }
}

/// `C^∞` radial cutoff equal to 1 for `ρ ≤ a` and 0 for `ρ ≥ b`, with its first two radial derivatives.
pub fn smooth_cutoff(rho: f64, a: f64, b: f64) -> (f64, f64, f64) {
    if rho <= a {
        return (1.0, 0.0, 0.0);
    }
    if rho >= b {
        return (0.0, 0.0, 0.0);
    }
    let l = b - a;
    let t = (rho - a) / l;
    let f = |t: f64| (-1.0 / t).exp();
    let f1 = |t: f64| f(t) / (t * t);
    let f2 = |t: f64| f(t) * (1.0 / t.powi(4) - 2.0 / t.powi(3));
    // s(t) = B/(A+B) falls from 1 to 0, A = f(t), B = f(1-t)
    let (a0, b0) = (f(t), f(1.0 - t));
    let (a1, b1) = (f1(t), -f1(1.0 - t));
    let (a2, b2) = (f2(t), f2(1.0 - t));
    let sum = a0 + b0;
    let num = b1 * a0 - b0 * a1;
    let s = b0 / sum;
    let s1 = num / (sum * sum);
    let num1 = b2 * a0 - b0 * a2;
    let s2 = (num1 * sum - 2.0 * num * (a1 + b1)) / (sum * sum * sum);
    (s, s1 / l, s2 / (l * l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_outside(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
        polar(rng.random_range(lo..hi), rng.random_range(-PI..PI))
    }

    #[test]
    fn inversion_examples() {
        let c = GreensContext::new(1.0).unwrap();
        assert_eq!(c.invert(&point(2.0, 0.0)).unwrap(), point(0.5, 0.0));
        assert!(c.invert(&point(0.0, 0.0)).is_err());
        let c = GreensContext::new(1.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = random_outside(&mut rng, 0.1, 5.0);
            let xs = c.invert(&x).unwrap();
            assert!((xs.norm() * x.norm() - 1.7 * 1.7).abs() < 1e-13);
            assert!((c.invert(&xs).unwrap() - x).norm() < 1e-13 * x.norm().max(1.0));
            let on = polar(1.7, rng.random_range(-PI..PI));
            assert!((c.invert(&on).unwrap() - on).norm() < 1e-15);
        }
        assert!(GreensContext::new(0.0).is_err());
    }

    #[test]
    fn fundamental_solution_examples() {
        assert_eq!(eval_phi_fund(&point(0.0, 1.0)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((eval_phi_fund(&point(e, 0.0)).unwrap() + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((eval_phi_fund(&polar(3.0, 0.4)).unwrap() - eval_phi_fund(&polar(3.0, -2.0)).unwrap()).abs() < 1e-15);
        assert!(eval_phi_fund(&point(0.0, 0.0)).is_err());
        let x = point(0.3, 1.1);
        let y = point(-0.2, 0.4);
        assert_eq!(eval_phi_fund(&(y - x)).unwrap(), eval_phi_fund(&(x - y)).unwrap());
    }

    #[test]
    fn corrector_point_value() {
        let c = GreensContext::new(1.0).unwrap();
        let v = c.eval_phi_corrector(&point(2.0, 0.0), &point(0.0, 1.0)).unwrap();
        let exact = 1.25f64.sqrt().ln() / (2.0 * PI) - 1.0 / (4.0 * PI);
        assert!((v - exact).abs() < 1e-15);
        assert!(c.eval_phi_corrector(&point(2.0, 0.0), &point(0.5, 0.0)).is_err());
        assert!(matches!(c.eval_phi_corrector(&point(0.5, 0.0), &point(2.0, 0.0)), Err(GreensError::PoleInside(_))));
    }

    #[test]
    fn log_reflection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &r in &[0.5, 1.0, 2.0] {
            let c = GreensContext::new(r).unwrap();
            for _ in 0..300 {
                let x = random_outside(&mut rng, 1.01 * r, 4.0 * r);
                let y = random_outside(&mut rng, 1.01 * r, 4.0 * r);
                let lhs = (y - c.invert(&x).unwrap()).norm().ln();
                let rhs = (c.invert(&y).unwrap() - x).norm().ln() + y.norm().ln() - x.norm().ln();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corrector_matches_fundamental_flux_on_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &r in &[0.5, 1.0, 3.0] {
            let c = GreensContext::new(r).unwrap();
            for _ in 0..20 {
                let x = random_outside(&mut rng, 1.01 * r, 2.0 * r);
                for j in 0..256 {
                    let y = polar(r, -PI + 2.0 * PI * j as f64 / 256.0);
                    let (a, b) = c.boundary_normal_derivatives(&x, &y).unwrap();
                    assert!((a - b).abs() <= 1e-8, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn corrector_laplacian_is_constant_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &r in &[0.5, 1.0, 2.0, 5.0] {
            let c = GreensContext::new(r).unwrap();
            let k = c.source_constant();
            let x = random_outside(&mut rng, 1.1 * r, 2.0 * r);
            let y = random_outside(&mut rng, 1.1 * r, 2.0 * r);
            let h = 1e-2 * r;
            let e1 = (c.corrector_discrete_laplacian(&x, &y, h).unwrap() + k).abs();
            let e2 = (c.corrector_discrete_laplacian(&x, &y, h / 2.0).unwrap() + k).abs();
            assert!(e1 * r * r < 1e-3);
            // the |y|² part is exact, so the error is the O(h²) term of the log part
            assert!(e2 < 0.4 * e1 || e1 * r * r < 1e-9, "{e1} {e2}");
        }
    }

    #[test]
    fn single_layer_single_modes() {
        // ∫ cos nθ G_N dS = (R/n)(R/ρ)^n cos nφ
        let r = 1.5;
        let c = GreensContext::new(r).unwrap();
        for n in 1..=4usize {
            let mut cos = vec![0.0; n + 1];
            cos[n] = 1.0;
            let g = PeriodicFunction::from_trig_poly(&cos, &[], 512).unwrap();
            for &(rho, phi) in &[(1.7, 0.3), (2.5, -1.2), (4.0, 2.9)] {
                let x = polar(rho, phi);
                let exact = r / n as f64 * (r / rho).powi(n as i32) * (n as f64 * phi).cos();
                assert!((c.single_layer(&g, &x).unwrap() - exact).abs() < 1e-10);
                let dr = -(n as f64) * exact / rho;
                let grad = c.single_layer_gradient(&g, &x).unwrap();
                assert!((grad.dot(&(x / rho)) - dr).abs() < 1e-10);
            }
            // -∂u/∂r → g as ρ → R⁺
            let g2 = PeriodicFunction::from_trig_poly(&cos, &[], 4096).unwrap();
            for &phi in &[0.0, 1.0, -2.0] {
                let x = polar(r * 1.002, phi);
                let dn = -c.single_layer_gradient(&g2, &x).unwrap().dot(&(x / x.norm()));
                assert!((dn - (n as f64 * phi).cos()).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let (a, b) = (1.2, 1.5);
        let h = 1e-5;
        for &rho in &[1.21, 1.3, 1.35, 1.45, 1.49] {
            let (_, d1, d2) = smooth_cutoff(rho, a, b);
            let f = |t: f64| smooth_cutoff(t, a, b).0;
            let fd1 = (f(rho + h) - f(rho - h)) / (2.0 * h);
            let fd2 = (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((d2 - fd2).abs() < 1e-3 * d2.abs().max(1.0));
        }
        assert_eq!(smooth_cutoff(1.1, a, b), (1.0, 0.0, 0.0));
        assert_eq!(smooth_cutoff(1.6, a, b), (0.0, 0.0, 0.0));
    }

    #[test]
    fn representation_reconstructs_harmonic_field() {
        let (r, d) = (1.0, 0.5);
        let c = GreensContext::new(r).unwrap();
        let (a, b) = (r + d / 3.0, r + 2.0 * d / 3.0);
        // v = Re z² = ρ² cos 2θ, ∂v/∂ρ = 2ρ cos 2θ
        let trace = PeriodicFunction::from_fn(512, |t| 2.0 * r * (2.0 * t).cos()).unwrap();
        let lap = |y: &Point| {
            let rho = y.norm();
            let (_, z1, z2) = smooth_cutoff(rho, a, b);
            if z1 == 0.0 && z2 == 0.0 {
                return 0.0;
            }
            let cos2 = (y.x * y.x - y.y * y.y) / (rho * rho);
            // Δ(ζv) = v Δζ + 2 ∂ρζ ∂ρv for radial ζ and harmonic v
            rho * rho * cos2 * (z2 + z1 / rho) + 2.0 * z1 * 2.0 * rho * cos2
        };
        let pts = [polar(1.05, 0.0), polar(1.08, 1.0), polar(1.1, -2.3), polar(1.06, 2.8), polar(1.11, -0.7)];
        let rep: Vec<f64> = pts
            .iter()
            .map(|x| c.representation(x, &trace, Normal::AwayFromCentre, lap, (a, b), (256, 512)).unwrap())
            .collect();
        let v = |x: &Point| x.x * x.x - x.y * x.y;
        let offset = rep[0] - v(&pts[0]);
        for (x, u) in pts.iter().zip(&rep) {
            assert!((u - offset - v(x)).abs() <= 1e-6, "{}", u - offset - v(x));
        }
        // the opposite orientation flips the boundary term
        let flipped = trace.scaled(-1.0);
        let alt = c.representation(&pts[1], &flipped, Normal::TowardCentre, lap, (a, b), (256, 512)).unwrap();
        assert!((alt - rep[1]).abs() < 1e-12);
    }
}
