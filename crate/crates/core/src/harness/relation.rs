//! Gradient relation formulas against finite differences of the value evaluators.

use super::config::{Config, TrigSpec};
use super::{Check, HarnessError, Report};
use crate::disk::{eval_dirichlet, grad_dirichlet, grad_neumann, rotation_identity_residual, NeumannDisk};
use crate::geometry::{polar, Point, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `count` trigonometric polynomials of random degree in `1..=degree`, coefficients uniform in `[-1, 1]`.
pub fn random_trig_data(seed: u64, count: usize, degree: usize) -> Vec<TrigSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let deg = rng.random_range(1..=degree.max(1));
            TrigSpec {
                cos: (0..=deg).map(|_| rng.random_range(-1.0..=1.0)).collect(),
                sin: (0..=deg).map(|m| if m == 0 { 0.0 } else { rng.random_range(-1.0..=1.0) }).collect(),
            }
        })
        .collect()
}

fn rel(a: Vec2, b: Vec2) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn central_diff(f: impl Fn(&Point) -> f64, x: &Point, h: f64) -> Result<Vec2, HarnessError> {
    let fx = |p: Point| -> Result<f64, HarnessError> {
        let v = f(&p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(HarnessError::Solver(format!("non-finite value at ({}, {})", p.x, p.y)))
        }
    };
    Ok(Vec2::new(
        (fx(x + Vec2::new(h, 0.0))? - fx(x - Vec2::new(h, 0.0))?) / (2.0 * h),
        (fx(x + Vec2::new(0.0, h))? - fx(x - Vec2::new(0.0, h))?) / (2.0 * h),
    ))
}

fn solver(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Solver(e.to_string())
}

/// Per datum: worst relative error of both gradient formulas against central
/// differences, and the worst rotation residual `Du - i Dω`.
pub fn run_verify_relation(cfg: &Config) -> Result<Report, HarnessError> {
    let rc = &cfg.relation;
    let mut data = rc.data.clone();
    data.extend(random_trig_data(cfg.seed, rc.random_data, rc.degree));
    let mut report = Report::new(format!("relation formulas: {} data, {} points each", data.len(), rc.points));
    if data.is_empty() {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let pts: Vec<(f64, f64)> =
        (0..rc.points).map(|_| (rng.random_range(rc.r_range[0]..=rc.r_range[1]), rng.random_range(-PI..PI))).collect();
    let h = rc.fd_step;
    for (i, spec) in data.iter().enumerate() {
        let g = spec.sample(rc.samples)?;
        let g0 = g.plus_constant(-g.mean());
        let neumann = NeumannDisk::new(&g0).map_err(solver)?;
        let (mut e_d, mut e_n) = (0.0f64, 0.0f64);
        for &(r, phi) in &pts {
            let x = polar(r, phi);
            let fd = central_diff(|p| eval_dirichlet(&g, p.norm(), p.y.atan2(p.x)).unwrap_or(f64::NAN), &x, h)?;
            e_d = e_d.max(rel(fd, grad_dirichlet(&g, r, phi).map_err(solver)?));
            let fd = central_diff(|p| neumann.value(p).unwrap_or(f64::NAN), &x, h)?;
            e_n = e_n.max(rel(fd, grad_neumann(&g0, r, phi).map_err(solver)?));
        }
        let rot = rotation_identity_residual(&g, &pts).map_err(solver)?;
        report.push(Check::new(format!("datum {i}: Dirichlet gradient vs FD"), e_d, rc.tol));
        report.push(Check::new(format!("datum {i}: Neumann gradient vs FD"), e_n, rc.tol));
        report.push(Check::new(format!("datum {i}: rotation Du = i Dw"), rot, rc.rotation_tol));
    }
    Ok(report)
}
