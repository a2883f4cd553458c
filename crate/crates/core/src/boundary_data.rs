//! 2π-periodic boundary data.
//!
//! A [`PeriodicFunction`] keeps uniform samples at `τ_j = -π + 2πj/N` together
//! with the half spectrum `c_0, …, c_{N/2}` of its trigonometric interpolant,
//! so tangential derivatives are exact for band-limited data.

use crate::geometry::periodic_nodes;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

pub const MIN_SAMPLES: usize = 16;

/// Tolerance (relative to the largest component flux scale) for the flux balance.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("sample count {0} must be even and at least {MIN_SAMPLES}")]
    BadSampleCount(usize),
    #[error("{samples} samples alias mode {mode}; need at least {needed}")]
    Aliasing { samples: usize, mode: usize, needed: usize },
    #[error("Hölder exponent {0} outside (0, 1)")]
    BadExponent(f64),
    #[error("radius {0} must be positive")]
    BadRadius(f64),
    #[error("non-finite sample value")]
    NonFinite,
    #[error("Neumann data incompatible: outer flux {outer} vs hole flux {holes}")]
    Incompatible { outer: f64, holes: f64 },
    #[error("expected {expected} hole data, got {got}")]
    HoleCountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunction {
    samples: Vec<f64>,
    /// `coeffs[m]` for `m = 0..=N/2`; the Nyquist entry is split evenly between `±N/2`.
    coeffs: Vec<Complex64>,
}

fn check_len(n: usize) -> Result<(), BoundaryError> {
    if n < MIN_SAMPLES || n % 2 != 0 {
        return Err(BoundaryError::BadSampleCount(n));
    }
    Ok(())
}

impl PeriodicFunction {
    /// Builds the function from uniform samples, computing the spectrum by FFT.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self, BoundaryError> {
        let n = samples.len();
        check_len(n)?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(BoundaryError::NonFinite);
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let inv_n = 1.0 / n as f64;
        let mut coeffs: Vec<Complex64> = (0..=n / 2)
            .map(|m| {
                // nodes start at -π, so e^{-imτ_j} carries an extra (-1)^m
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                buf[m] * (sign * inv_n)
            })
            .collect();
        coeffs[0].im = 0.0;
        let nyq = coeffs[n / 2].re;
        coeffs[n / 2] = Complex64::new(0.5 * nyq, 0.0);
        Ok(Self { samples, coeffs })
    }

    /// Samples `f` at the `n` uniform nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, BoundaryError> {
        check_len(n)?;
        Self::from_samples(periodic_nodes(n).into_iter().map(f).collect())
    }

    /// `g(τ) = Σ_k cos_coeffs[k] cos kτ + Σ_k sin_coeffs[k] sin kτ`.
    ///
    /// Both arrays are indexed by mode, so `sin_coeffs[0]` multiplies `sin 0 = 0`
    /// and is ignored. The spectrum is set directly from the inputs.
    pub fn from_trig_poly(cos_coeffs: &[f64], sin_coeffs: &[f64], n: usize) -> Result<Self, BoundaryError> {
        check_len(n)?;
        let top = cos_coeffs.len().max(sin_coeffs.len()).saturating_sub(1);
        if n < 2 * top + 2 {
            return Err(BoundaryError::Aliasing { samples: n, mode: top, needed: 2 * top + 2 });
        }
        if cos_coeffs.iter().chain(sin_coeffs).any(|v| !v.is_finite()) {
            return Err(BoundaryError::NonFinite);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
        for (m, c) in coeffs.iter_mut().enumerate().take(top + 1) {
            let a = cos_coeffs.get(m).copied().unwrap_or(0.0);
            let b = sin_coeffs.get(m).copied().unwrap_or(0.0);
            *c = if m == 0 { Complex64::new(a, 0.0) } else { Complex64::new(0.5 * a, -0.5 * b) };
        }
        let samples = periodic_nodes(n)
            .into_iter()
            .map(|t| {
                let mut v = 0.0;
                for (k, a) in cos_coeffs.iter().enumerate() {
                    v += a * (k as f64 * t).cos();
                }
                for (k, b) in sin_coeffs.iter().enumerate().skip(1) {
                    v += b * (k as f64 * t).sin();
                }
                v
            })
            .collect();
        Ok(Self { samples, coeffs })
    }

    fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        let n = 2 * (coeffs.len() - 1);
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (m, c) in coeffs.iter().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = c * sign;
            if m == 0 {
                spec[0] = c;
            } else if m == n / 2 {
                spec[m] = c + c.conj();
            } else {
                spec[m] = c;
                spec[n - m] = c.conj();
            }
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        let samples = spec.iter().map(|z| z.re).collect();
        Self { samples, coeffs }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn nodes(&self) -> Vec<f64> {
        periodic_nodes(self.len())
    }

    /// Fourier coefficient of mode `m`, `|m| ≤ N/2`; zero beyond.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let k = m.unsigned_abs() as usize;
        match self.coeffs.get(k) {
            Some(c) if m >= 0 => *c,
            Some(c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Highest mode with a coefficient above `tol`.
    pub fn bandwidth(&self, tol: f64) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() > tol).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `∫_{-π}^{π} g dτ`.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.mean()
    }

    /// Largest sample magnitude.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trigonometric interpolant at an arbitrary angle.
    pub fn eval_at(&self, tau: f64) -> f64 {
        let base = Complex64::new(0.0, tau).exp();
        let mut w = base;
        let mut acc = 0.0;
        for c in &self.coeffs[1..] {
            acc += (c * w).re;
            w *= base;
        }
        self.coeffs[0].re + 2.0 * acc
    }

    /// Spectral derivative in the angle: mode `m` times `i m`, Nyquist dropped.
    pub fn tangential_derivative(&self) -> Self {
        let last = self.coeffs.len() - 1;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| if m == last { Complex64::new(0.0, 0.0) } else { c * Complex64::new(0.0, m as f64) })
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// Same function on a finer grid; exact for the stored interpolant.
    pub fn resample(&self, n: usize) -> Result<Self, BoundaryError> {
        check_len(n)?;
        if n < self.len() {
            let top = self.bandwidth(0.0);
            if n < 2 * top + 2 {
                return Err(BoundaryError::Aliasing { samples: n, mode: top, needed: 2 * top + 2 });
            }
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
        for (m, c) in self.coeffs.iter().enumerate().take(n / 2 + 1) {
            coeffs[m] = *c;
        }
        Ok(Self::from_coeffs(coeffs))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * s).collect(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn plus_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v += c);
        out.coeffs[0].re += c;
        out
    }

    /// Pointwise sum; both functions must share the sample count.
    pub fn add(&self, other: &Self) -> Result<Self, BoundaryError> {
        if self.len() != other.len() {
            return Err(BoundaryError::BadSampleCount(other.len()));
        }
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Hölder seminorm of `g` on the circle of the given radius, chordal distance.
///
/// Exhaustive over sample pairs, so it is a lower bound of the continuum value
/// that can only grow under refinement.
pub fn holder_seminorm_circle(g: &PeriodicFunction, alpha: f64, radius: f64) -> Result<f64, BoundaryError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundaryError::BadExponent(alpha));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(BoundaryError::BadRadius(radius));
    }
    let n = g.len();
    let s = g.samples();
    // chord depends only on the index offset
    let inv_dist: Vec<f64> = (0..n)
        .map(|o| if o == 0 { 0.0 } else { (2.0 * radius * (PI * o as f64 / n as f64).sin()).powf(-alpha) })
        .collect();
    let mut best = 0.0f64;
    for j in 0..n {
        for k in (j + 1)..n {
            let q = (s[j] - s[k]).abs() * inv_dist[k - j];
            if q > best {
                best = q;
            }
        }
    }
    Ok(best)
}

/// Neumann data on `∂E`, each component parametrized by its own boundary angle.
///
/// Every component stores the derivative along the radial direction of its
/// own circle (away from the circle's centre), which makes the flux balance
/// read `r₀ ∫ g₀ = Σ r_k ∫ g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannData {
    pub outer: PeriodicFunction,
    pub holes: Vec<PeriodicFunction>,
}

impl NeumannData {
    /// Validates the flux balance for the given outer and hole radii.
    pub fn new(
        outer: PeriodicFunction,
        holes: Vec<PeriodicFunction>,
        outer_radius: f64,
        hole_radii: &[f64],
    ) -> Result<Self, BoundaryError> {
        if holes.len() != hole_radii.len() {
            return Err(BoundaryError::HoleCountMismatch { expected: hole_radii.len(), got: holes.len() });
        }
        let data = Self { outer, holes };
        let (o, h) = data.fluxes(outer_radius, hole_radii);
        let scale = std::iter::once(o.abs())
            .chain(data.holes.iter().zip(hole_radii).map(|(g, r)| 2.0 * PI * r * g.sup_norm()))
            .chain(std::iter::once(2.0 * PI * outer_radius * data.outer.sup_norm()))
            .fold(1e-300, f64::max);
        if (o - h).abs() > COMPATIBILITY_TOL * scale {
            return Err(BoundaryError::Incompatible { outer: o, holes: h });
        }
        Ok(data)
    }

    /// Shifts the outer datum by a constant so the flux balance holds exactly.
    pub fn balanced(
        outer: PeriodicFunction,
        holes: Vec<PeriodicFunction>,
        outer_radius: f64,
        hole_radii: &[f64],
    ) -> Result<Self, BoundaryError> {
        if holes.len() != hole_radii.len() {
            return Err(BoundaryError::HoleCountMismatch { expected: hole_radii.len(), got: holes.len() });
        }
        let hole_flux: f64 = holes.iter().zip(hole_radii).map(|(g, r)| r * g.integral()).sum();
        let shift = (hole_flux - outer_radius * outer.integral()) / (2.0 * PI * outer_radius);
        Self::new(outer.plus_constant(shift), holes, outer_radius, hole_radii)
    }

    /// `(r₀ ∫ g₀, Σ r_k ∫ g_k)`.
    pub fn fluxes(&self, outer_radius: f64, hole_radii: &[f64]) -> (f64, f64) {
        let h = self.holes.iter().zip(hole_radii).map(|(g, r)| r * g.integral()).sum();
        (outer_radius * self.outer.integral(), h)
    }

    pub fn components(&self) -> impl Iterator<Item = &PeriodicFunction> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn sup_norm(&self) -> f64 {
        self.components().fold(0.0, |m, g| m.max(g.sup_norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct DFT, independent of the FFT path.
    fn dft_oracle(samples: &[f64], m: i64) -> Complex64 {
        let n = samples.len();
        periodic_nodes(n)
            .iter()
            .zip(samples)
            .map(|(t, v)| Complex64::new(0.0, -(m as f64) * t).exp() * v)
            .sum::<Complex64>()
            / n as f64
    }

    #[test]
    fn constant_zero_polynomial() {
        let g = PeriodicFunction::from_trig_poly(&[0.0], &[], 16).unwrap();
        assert!(g.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_sample_at_zero() {
        let g = PeriodicFunction::from_trig_poly(&[0.0, 1.0], &[], 64).unwrap();
        // τ = 0 is node 32
        assert!((g.samples()[32] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cos3_spectrum_matches_dft_oracle() {
        let g = PeriodicFunction::from_trig_poly(&[0.0, 0.0, 0.0, 1.0], &[], 32).unwrap();
        for m in -16i64..=16 {
            let oracle = dft_oracle(g.samples(), m);
            let expect = if m.abs() == 3 { 0.5 } else { 0.0 };
            assert!((oracle.norm() - expect).abs() < 1e-14, "mode {m}");
            if m.abs() < 16 {
                assert!((g.coeff(m) - oracle).norm() < 1e-14, "mode {m}");
            }
        }
    }

    #[test]
    fn aliasing_and_size_errors() {
        assert!(matches!(PeriodicFunction::from_trig_poly(&[0.0; 10], &[], 16), Err(BoundaryError::Aliasing { .. })));
        assert!(PeriodicFunction::from_trig_poly(&[0.0; 8], &[], 16).is_ok());
        assert!(matches!(PeriodicFunction::from_samples(vec![0.0; 15]), Err(BoundaryError::BadSampleCount(15))));
        assert!(matches!(PeriodicFunction::from_samples(vec![0.0; 8]), Err(BoundaryError::BadSampleCount(8))));
    }

    #[test]
    fn samples_and_spectrum_are_consistent() {
        let g = PeriodicFunction::from_trig_poly(&[0.3, -1.0, 0.2, 0.0, 0.7], &[0.0, 0.5, 0.0, -0.25], 64).unwrap();
        let h = PeriodicFunction::from_samples(g.samples().to_vec()).unwrap();
        for m in 0..=32 {
            assert!((g.coeff(m) - h.coeff(m)).norm() < 1e-14);
        }
        let back = PeriodicFunction::from_coeffs(g.coeffs.clone());
        for (a, b) in back.samples().iter().zip(g.samples()) {
            assert!((a - b).abs() < 1e-13);
        }
        for &t in &[0.1f64, -2.0, 3.0] {
            let exact =
                0.3 - t.cos() + 0.2 * (2.0 * t).cos() + 0.7 * (4.0 * t).cos() + 0.5 * t.sin() - 0.25 * (3.0 * t).sin();
            assert!((g.eval_at(t) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn nyquist_mode_roundtrips_through_samples() {
        let n = 16;
        let g = PeriodicFunction::from_fn(n, |t| (8.0 * t).cos()).unwrap();
        let back = PeriodicFunction::from_coeffs(g.coeffs.clone());
        for (a, b) in back.samples().iter().zip(g.samples()) {
            assert!((a - b).abs() < 1e-13);
        }
        // its spectral derivative is dropped
        assert!(g.tangential_derivative().sup_norm() < 1e-13);
    }

    #[test]
    fn derivative_examples() {
        let c = PeriodicFunction::from_trig_poly(&[2.5], &[], 32).unwrap();
        assert!(c.tangential_derivative().sup_norm() < 1e-15);

        let g = PeriodicFunction::from_trig_poly(&[0.0, 1.0], &[], 32).unwrap();
        let d = g.tangential_derivative();
        for (t, v) in g.nodes().iter().zip(d.samples()) {
            assert!((v + t.sin()).abs() < 1e-14);
        }

        let g = PeriodicFunction::from_trig_poly(&[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 0.0, 0.0, 0.5], 64).unwrap();
        let d = g.tangential_derivative();
        let err = g
            .nodes()
            .iter()
            .zip(d.samples())
            .map(|(t, v)| (v - (-3.0 * (3.0 * t).sin() + 2.5 * (5.0 * t).cos())).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn second_derivative_multiplies_by_minus_m_squared() {
        let g = PeriodicFunction::from_trig_poly(&[0.1, 0.4, -0.3, 0.2], &[0.0, 0.8, 0.1], 32).unwrap();
        let dd = g.tangential_derivative().tangential_derivative();
        for m in 0..16i64 {
            assert!((dd.coeff(m) + g.coeff(m) * (m * m) as f64).norm() < 1e-12);
        }
    }

    #[test]
    fn holder_on_constant_is_zero() {
        let g = PeriodicFunction::from_trig_poly(&[4.0], &[], 32).unwrap();
        assert_eq!(holder_seminorm_circle(&g, 0.5, 1.0).unwrap(), 0.0);
    }

    /// Brute force over an arbitrary fine grid of angles, not tied to the sample layout.
    fn holder_cos_oracle(alpha: f64, m: usize) -> f64 {
        let mut best = 0.0f64;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            for k in (j + 1)..m {
                let b = 2.0 * PI * k as f64 / m as f64;
                let chord = ((a.cos() - b.cos()).powi(2) + (a.sin() - b.sin()).powi(2)).sqrt();
                best = best.max((a.cos() - b.cos()).abs() / chord.powf(alpha));
            }
        }
        best
    }

    #[test]
    fn holder_of_cosine_matches_brute_force() {
        let oracle = holder_cos_oracle(0.5, 4096);
        // attained by antipodal pairs: 2 / 2^{1/2}
        assert!((oracle - 2f64.sqrt()).abs() < 1e-9, "{oracle}");
        let g = PeriodicFunction::from_trig_poly(&[0.0, 1.0], &[], 256).unwrap();
        let est = holder_seminorm_circle(&g, 0.5, 1.0).unwrap();
        assert!((est - oracle).abs() < 1e-9, "{est} vs {oracle}");
    }

    #[test]
    fn holder_radius_scaling_and_monotone_refinement() {
        let g = PeriodicFunction::from_trig_poly(&[0.0, 0.3, 0.0, 1.0], &[0.0, 0.0, 0.6], 64).unwrap();
        let a = holder_seminorm_circle(&g, 0.3, 1.0).unwrap();
        let b = holder_seminorm_circle(&g, 0.3, 2.0).unwrap();
        assert!((b - a * 2f64.powf(-0.3)).abs() < 1e-12);
        let fine = holder_seminorm_circle(&g.resample(128).unwrap(), 0.3, 1.0).unwrap();
        assert!(fine >= a - 1e-12);
        assert!(holder_seminorm_circle(&g, 0.0, 1.0).is_err());
        assert!(holder_seminorm_circle(&g, 1.0, 1.0).is_err());
        assert!(holder_seminorm_circle(&g, 0.5, 0.0).is_err());
    }

    #[test]
    fn neumann_data_flux_balance() {
        let outer = PeriodicFunction::from_trig_poly(&[0.0, 1.0], &[], 32).unwrap();
        let hole = PeriodicFunction::from_trig_poly(&[0.5, 0.2], &[], 32).unwrap();
        assert!(matches!(
            NeumannData::new(outer.clone(), vec![hole.clone()], 2.0, &[0.5]),
            Err(BoundaryError::Incompatible { .. })
        ));
        let data = NeumannData::balanced(outer, vec![hole], 2.0, &[0.5]).unwrap();
        // r₀ ∫ g₀ = r₁ ∫ g₁ → mean shift 0.5·0.5/2
        assert!((data.outer.mean() - 0.125).abs() < 1e-15);
        let (o, h) = data.fluxes(2.0, &[0.5]);
        assert!((o - h).abs() < 1e-12);
        assert!(matches!(
            NeumannData::new(data.outer.clone(), vec![], 2.0, &[0.5]),
            Err(BoundaryError::HoleCountMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn band_limited_roundtrip(cs in proptest::collection::vec(-1.0f64..1.0, 1..9),
                                      ss in proptest::collection::vec(-1.0f64..1.0, 0..9)) {
                let g = PeriodicFunction::from_trig_poly(&cs, &ss, 32).unwrap();
                let h = PeriodicFunction::from_samples(g.samples().to_vec()).unwrap();
                for m in 0..16i64 {
                    prop_assert!((g.coeff(m) - h.coeff(m)).norm() < 1e-12);
                    prop_assert!((g.coeff(-m) - g.coeff(m).conj()).norm() == 0.0);
                }
            }

            #[test]
            fn holder_symmetric_under_negation(cs in proptest::collection::vec(-1.0f64..1.0, 1..6), alpha in 0.05f64..0.95) {
                let g = PeriodicFunction::from_trig_poly(&cs, &[], 32).unwrap();
                let a = holder_seminorm_circle(&g, alpha, 1.0).unwrap();
                let b = holder_seminorm_circle(&g.scaled(-1.0), alpha, 1.0).unwrap();
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
