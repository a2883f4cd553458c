//! Explicit Dirichlet and Neumann solutions on the unit disk and its exterior.
//!
//! Every boundary integral is the uniform trapezoid rule on the datum's own
//! nodes. Convolutions follow the displayed integrals, e.g.
//! `(1/π) K_r * g (φ) = (1/π) ∫ K_r(τ - φ) g(τ) dτ`.
//!
//! Quadrature error for a band-limited datum of bandwidth `m` at radius `r`
//! behaves like `ρ^(N - m)` with `ρ = min(r, 1/r)`; radii in
//! `(ACCURATE_RADIUS, 1/ACCURATE_RADIUS)` are evaluated but flagged by
//! [`accuracy_warning`].

use crate::boundary_data::PeriodicFunction;
use crate::field::HarmonicField;
use crate::geometry::{
    from_complex, gradient_of_real_part, hessian_of_real_part, polar, to_complex, Mat2, Point, Vec2,
};
use crate::kernels::{self, KernelError};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub const ACCURATE_RADIUS: f64 = 0.99;

/// Mean tolerance for Neumann data (scaled by `max(1, ‖g‖∞)`).
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Polar grid used to pin the Neumann additive constant: `(radial, angular)`.
pub const AVERAGE_GRID: (usize, usize) = (128, 256);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiskError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("radius {r} outside the admissible range for the {side:?} problem")]
    OutOfRange { r: f64, side: Side },
    #[error("relation formula has a 1/r factor and is undefined at r = 0")]
    Origin,
    #[error("Neumann datum has mean {0}; the problem is not solvable")]
    NonzeroMean(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// True when `r` lies in the band near the unit circle where trapezoid accuracy degrades.
pub fn accuracy_warning(r: f64) -> bool {
    r > ACCURATE_RADIUS && r < 1.0 / ACCURATE_RADIUS
}

fn check_interior(r: f64) -> Result<(), DiskError> {
    if !(0.0..1.0).contains(&r) {
        return Err(DiskError::OutOfRange { r, side: Side::Interior });
    }
    Ok(())
}

fn check_zero_mean(g: &PeriodicFunction) -> Result<(), DiskError> {
    if g.mean().abs() > ZERO_MEAN_TOL * g.sup_norm().max(1.0) {
        return Err(DiskError::NonzeroMean(g.mean()));
    }
    Ok(())
}

fn boundary_points(n: usize) -> impl Iterator<Item = Point> {
    (0..n).map(move |j| polar(1.0, -PI + 2.0 * PI * j as f64 / n as f64))
}

/// `(1/2π) P_r * g (φ)` by the trapezoid rule; any `r ≠ 1`.
pub fn poisson_convolution(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    let x = polar(r, phi);
    let mut acc = 0.0;
    for (y, v) in boundary_points(g.len()).zip(g.samples()) {
        acc += kernels::poisson_at(&x, &y)? * v;
    }
    Ok(acc / g.len() as f64)
}

/// `(1/π) K_r * g (φ)` by the trapezoid rule; any `r ≠ 1`.
pub fn conjugate_convolution(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    let x = polar(r, phi);
    let mut acc = 0.0;
    for (y, v) in boundary_points(g.len()).zip(g.samples()) {
        acc += kernels::conjugate_at(&x, &y)? * v;
    }
    Ok(2.0 * acc / g.len() as f64)
}

/// Harmonic extension of `g` into the disk.
pub fn eval_dirichlet(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    check_interior(r)?;
    poisson_convolution(g, r, phi)
}

/// `(1 - r²)/(2π) ∫ g(τ)/|x - y|² dτ` for `r > 1`; its trace at `r → 1⁺` is `-g`.
pub fn eval_exterior_extension(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(DiskError::OutOfRange { r, side: Side::Exterior });
    }
    poisson_convolution(g, r, phi)
}

/// Exterior Dirichlet solution with trace `+g`.
pub fn eval_exterior_dirichlet(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    Ok(-eval_exterior_extension(g, r, phi)?)
}

/// `ω = (1/π) K_r * g`: the zero-average Neumann solution for the datum `g'`.
pub fn eval_omega(g: &PeriodicFunction, r: f64, phi: f64) -> Result<f64, DiskError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(DiskError::OutOfRange { r, side: Side::Interior });
    }
    conjugate_convolution(g, r, phi)
}

/// Zero-average Neumann solution of the disk, `w = -(1/π) ∫ log|x - y| g dτ - c`.
///
/// The constant `c` is the area average of the log layer on the
/// [`AVERAGE_GRID`] polar grid (midpoint in `r²`, uniform in `φ`).
#[derive(Debug, Clone)]
pub struct NeumannDisk {
    datum: PeriodicFunction,
    nodes: Vec<Point>,
    constant: f64,
}

impl NeumannDisk {
    pub fn new(g: &PeriodicFunction) -> Result<Self, DiskError> {
        check_zero_mean(g)?;
        let mut out = Self { datum: g.clone(), nodes: boundary_points(g.len()).collect(), constant: 0.0 };
        let (nr, nphi) = AVERAGE_GRID;
        let mut sum = 0.0;
        for i in 0..nr {
            let r = ((i as f64 + 0.5) / nr as f64).sqrt();
            for j in 0..nphi {
                let phi = -PI + 2.0 * PI * (j as f64 + 0.5) / nphi as f64;
                sum += out.log_layer(&polar(r, phi));
            }
        }
        out.constant = sum / (nr * nphi) as f64;
        Ok(out)
    }

    fn log_layer(&self, x: &Point) -> f64 {
        let mut acc = 0.0;
        for (y, v) in self.nodes.iter().zip(self.datum.samples()) {
            acc += (x - y).norm_squared().ln() * v;
        }
        // -(1/π)(2π/N) Σ log|x-y| g, with log|·| = ½ log|·|²
        -acc / self.datum.len() as f64
    }

    pub fn datum(&self) -> &PeriodicFunction {
        &self.datum
    }

    /// Additive constant removed from the log layer.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn value(&self, x: &Point) -> Result<f64, DiskError> {
        let r = x.norm();
        check_interior(r)?;
        for y in &self.nodes {
            if (x - y).norm_squared() < kernels::SINGULARITY_GUARD {
                return Err(KernelError::Singular { r, phi: x.y.atan2(x.x) }.into());
            }
        }
        Ok(self.log_layer(x) - self.constant)
    }

    /// `Dw = -(1/π) ∫ g (x - y)/|x - y|² dτ`.
    pub fn gradient(&self, x: &Point) -> Result<Vec2, DiskError> {
        grad_neumann_direct(&self.datum, x)
    }
}

pub fn eval_neumann(g: &PeriodicFunction, x: &Point) -> Result<f64, DiskError> {
    NeumannDisk::new(g)?.value(x)
}

/// Gradient of the Dirichlet solution from the relation formula
/// `Du = -(1/r)((1/π)K_r*g') e^{iφ} + (1/r)((1/2π)P_r*g') e^{i(φ+π/2)}`.
pub fn grad_dirichlet(g: &PeriodicFunction, r: f64, phi: f64) -> Result<Vec2, DiskError> {
    check_interior(r)?;
    if r == 0.0 {
        return Err(DiskError::Origin);
    }
    let gp = g.tangential_derivative();
    let k = conjugate_convolution(&gp, r, phi)?;
    let p = poisson_convolution(&gp, r, phi)?;
    let e = Complex64::new(0.0, phi).exp();
    let du = (-k * e + p * Complex64::i() * e) / r;
    Ok(from_complex(du))
}

/// Gradient of the Neumann solution from the relation formula
/// `Dw = (1/r)((1/2π)P_r*g) e^{iφ} + (1/r)((1/π)K_r*g) e^{i(φ+π/2)}`.
pub fn grad_neumann(g: &PeriodicFunction, r: f64, phi: f64) -> Result<Vec2, DiskError> {
    check_interior(r)?;
    check_zero_mean(g)?;
    if r == 0.0 {
        return Err(DiskError::Origin);
    }
    let p = poisson_convolution(g, r, phi)?;
    let k = conjugate_convolution(g, r, phi)?;
    let e = Complex64::new(0.0, phi).exp();
    Ok(from_complex((p * e + k * Complex64::i() * e) / r))
}

/// `(1/2π) ∫ D_x P(x, y) g dτ`, the kernel-derivative route; valid at `x = 0` and outside.
pub fn grad_dirichlet_direct(g: &PeriodicFunction, x: &Point) -> Result<Vec2, DiskError> {
    let mut acc = Vec2::zeros();
    for (y, v) in boundary_points(g.len()).zip(g.samples()) {
        acc += kernels::poisson_grad_at(x, &y)? * *v;
    }
    Ok(acc / g.len() as f64)
}

/// `Dω` from the derivative of the conjugate kernel.
pub fn grad_omega_direct(g: &PeriodicFunction, x: &Point) -> Result<Vec2, DiskError> {
    let mut acc = Vec2::zeros();
    for (y, v) in boundary_points(g.len()).zip(g.samples()) {
        acc += kernels::conjugate_grad_at(x, &y)? * *v;
    }
    Ok(acc * (2.0 / g.len() as f64))
}

/// `-(1/π) ∫ g (x - y)/|x - y|² dτ`.
pub fn grad_neumann_direct(g: &PeriodicFunction, x: &Point) -> Result<Vec2, DiskError> {
    let mut acc = Vec2::zeros();
    for (y, v) in boundary_points(g.len()).zip(g.samples()) {
        let d = x - y;
        let d2 = d.norm_squared();
        if d2 < kernels::SINGULARITY_GUARD {
            return Err(KernelError::Singular { r: x.norm(), phi: x.y.atan2(x.x) }.into());
        }
        acc += d * (*v / d2);
    }
    Ok(acc * (-2.0 / g.len() as f64))
}

/// `max |Du - i·Dω| / (1 + |Du|)` over the points, where `Du` comes from the
/// relation formula and `Dω` from the conjugate-kernel derivative.
pub fn rotation_identity_residual(g: &PeriodicFunction, points: &[(f64, f64)]) -> Result<f64, DiskError> {
    let mut worst = 0.0f64;
    for &(r, phi) in points {
        let du = grad_dirichlet(g, r, phi)?;
        let dw = grad_omega_direct(g, &polar(r, phi))?;
        let rotated = Vec2::new(-dw.y, dw.x);
        worst = worst.max((du - rotated).norm() / (1.0 + du.norm()));
    }
    Ok(worst)
}

/// Schwarz integral `(1/2π) ∫ (e^{iτ} + z)/(e^{iτ} - z) g(τ) dτ`, normalized to
/// vanishing imaginary part at `z = 0`.
pub fn schwarz_integral(g: &PeriodicFunction, z: Complex64) -> Result<Complex64, DiskError> {
    check_interior(z.norm())?;
    let f = |z: Complex64| -> Result<Complex64, DiskError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (y, v) in boundary_points(g.len()).zip(g.samples()) {
            let y = to_complex(&y);
            if (y - z).norm_sqr() < kernels::SINGULARITY_GUARD {
                return Err(KernelError::Singular { r: z.norm(), phi: z.arg() }.into());
            }
            acc += (y + z) / (y - z) * v;
        }
        Ok(acc / g.len() as f64)
    };
    let at_origin = f(Complex64::new(0.0, 0.0))?.im;
    Ok(f(z)? - Complex64::new(0.0, at_origin))
}

/// Hessian of the Dirichlet solution from the relation formulas applied to
/// `g'` and `g''`.
///
/// With `S(h) = (1/2π)P_r*h - i (1/π)K_r*h`, the holomorphic `f` with
/// `Re f = u` satisfies `z f'(z) = -i S(g')` and
/// `f''(z) = (i S(g') - S(g'')) / z²`; the Cartesian Hessian is
/// `[[Re f'', -Im f''], [-Im f'', -Re f'']]`.
pub fn hessian_dirichlet(g: &PeriodicFunction, r: f64, phi: f64) -> Result<Mat2, DiskError> {
    check_interior(r)?;
    if r == 0.0 {
        return Err(DiskError::Origin);
    }
    let g1 = g.tangential_derivative();
    let g2 = g1.tangential_derivative();
    let s = |h: &PeriodicFunction| -> Result<Complex64, DiskError> {
        Ok(Complex64::new(poisson_convolution(h, r, phi)?, -conjugate_convolution(h, r, phi)?))
    };
    let z = Complex64::from_polar(r, phi);
    let f2 = (Complex64::i() * s(&g1)? - s(&g2)?) / (z * z);
    Ok(hessian_of_real_part(f2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskKind {
    /// `u = g` on the circle.
    Dirichlet,
    /// `∂w/∂ν = g`, zero area average in the interior case.
    NeumannZeroAvg,
    /// `∂ω/∂ν = g'`, `ω = (1/π) K_r * g`.
    NeumannOfDerivative,
}

/// A disk solution as a [`HarmonicField`].
///
/// Values and derivatives come from the complex form of each kernel sum
/// (Schwarz kernel for `u` and `ω`, complex logarithm for `w`), so the field can
/// be evaluated at the origin and on either side of the circle.
#[derive(Debug, Clone)]
pub struct DiskField {
    kind: DiskKind,
    side: Side,
    datum: PeriodicFunction,
    nodes: Vec<Complex64>,
    constant: f64,
}

impl DiskField {
    pub fn new(kind: DiskKind, datum: PeriodicFunction, side: Side) -> Result<Self, DiskError> {
        let nodes = boundary_points(datum.len()).map(|p| to_complex(&p)).collect();
        let mut constant = 0.0;
        if kind == DiskKind::NeumannZeroAvg {
            check_zero_mean(&datum)?;
            if side == Side::Interior {
                constant = NeumannDisk::new(&datum)?.constant();
            }
        }
        if kind == DiskKind::NeumannOfDerivative && side == Side::Interior {
            // ω is odd-kernel based and has zero average by construction
            constant = 0.0;
        }
        Ok(Self { kind, side, datum, nodes, constant })
    }

    pub fn kind(&self) -> DiskKind {
        self.kind
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn datum(&self) -> &PeriodicFunction {
        &self.datum
    }

    /// Holomorphic potential `F` and its first two derivatives, `Re F` being the field.
    fn potential(&self, x: &Point) -> [Complex64; 3] {
        let z = to_complex(x);
        let n = self.datum.len() as f64;
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        match self.kind {
            DiskKind::Dirichlet | DiskKind::NeumannOfDerivative => {
                for (y, v) in self.nodes.iter().zip(self.datum.samples()) {
                    let d = y - z;
                    acc[0] += (y + z) / d * v;
                    acc[1] += 2.0 * y / (d * d) * v;
                    acc[2] += 4.0 * y / (d * d * d) * v;
                }
                let scale = match (self.kind, self.side) {
                    (DiskKind::Dirichlet, Side::Interior) => Complex64::new(1.0 / n, 0.0),
                    (DiskKind::Dirichlet, Side::Exterior) => Complex64::new(-1.0 / n, 0.0),
                    // ω = -Im f = Re(i f)
                    _ => Complex64::new(0.0, 1.0 / n),
                };
                acc.iter_mut().for_each(|a| *a *= scale);
            }
            DiskKind::NeumannZeroAvg => {
                for (y, v) in self.nodes.iter().zip(self.datum.samples()) {
                    let d = z - y;
                    acc[0] += d.ln() * v;
                    acc[1] += v / d;
                    acc[2] -= v / (d * d);
                }
                acc.iter_mut().for_each(|a| *a *= -2.0 / n);
            }
        }
        acc
    }
}

impl HarmonicField for DiskField {
    fn value(&self, x: &Point) -> f64 {
        self.potential(x)[0].re - self.constant
    }

    fn gradient(&self, x: &Point) -> Vec2 {
        gradient_of_real_part(self.potential(x)[1])
    }

    fn hessian(&self, x: &Point) -> Mat2 {
        hessian_of_real_part(self.potential(x)[2])
    }
}
