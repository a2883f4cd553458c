//! Disks with circular holes: geometry checks, the constants `C_P(E)` and
//! `B(E)`, and a circular-harmonics Neumann solver.

use crate::boundary_data::NeumannData;
use crate::field::HarmonicField;
use crate::geometry::{gradient_of_real_part, hessian_of_real_part, polar, to_complex, Mat2, Point, Vec2};
use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use thiserror::Error;

/// Relative slack allowed when a separation hypothesis holds with equality.
const GEOMETRY_SLACK: f64 = 1e-12;

/// Largest accepted condition number of the scaled collocation matrix.
pub const CONDITION_LIMIT: f64 = 1e13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HoledError {
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("geometry fails the separation hypotheses for d = {d} (largest admissible d = {max_d})")]
    Separation { d: f64, max_d: f64 },
    #[error("grid step {h} too coarse; need h <= d/4 = {limit}")]
    GridTooCoarse { h: f64, limit: f64 },
    #[error("masked grid is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("masked grid has only {0} cells")]
    TooFewCells(usize),
    #[error("inverse iteration did not converge")]
    NoConvergence,
    #[error("Poincaré constant must be positive, got {0}")]
    BadPoincare(f64),
    #[error("need nodes_per_circle >= 4M + 4 = {need}, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("data has {got} hole components, domain has {expected}")]
    HoleCountMismatch { expected: usize, got: usize },
    #[error("incompatible data: outer flux {outer}, hole flux {holes}")]
    Incompatible { outer: f64, holes: f64 },
    #[error("collocation matrix condition {0:e} exceeds the limit")]
    IllConditioned(f64),
    #[error("point at distance {0} from the boundary is not strictly inside E")]
    OutsideDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub centre: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(centre: Point, radius: f64) -> Self {
        Self { centre, radius }
    }

    pub fn point_at(&self, theta: f64) -> Point {
        self.centre + polar(self.radius, theta)
    }
}

/// `E = B(z₀, r₀) \ ∪ closed B(z_k, r_k)` with separation scale `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoledDomain {
    outer: Circle,
    holes: Vec<Circle>,
    d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryReport {
    /// `r_k ≥ d` for every hole.
    pub holes_large_enough: bool,
    /// `B(z_k, r_k + d) ⊂ B(z₀, r₀)`.
    pub holes_inside: bool,
    /// Pairwise gap between holes at least `2d`.
    pub holes_separated: bool,
    /// `r₀ ≥ 2d`.
    pub outer_large_enough: bool,
    /// Largest `d` for which every hypothesis holds.
    pub max_d: f64,
}

impl GeometryReport {
    pub fn passed(&self) -> bool {
        self.holes_large_enough && self.holes_inside && self.holes_separated && self.outer_large_enough
    }
}

fn le(a: f64, b: f64, scale: f64) -> bool {
    a <= b + GEOMETRY_SLACK * scale
}

/// Checks the separation hypotheses by closed-form distances.
pub fn validate_geometry(dom: &HoledDomain) -> GeometryReport {
    let (z0, r0, d) = (dom.outer.centre, dom.outer.radius, dom.d);
    let scale = r0;
    let mut rep = GeometryReport {
        holes_large_enough: true,
        holes_inside: true,
        holes_separated: true,
        outer_large_enough: le(2.0 * d, r0, scale),
        max_d: r0 / 2.0,
    };
    for (i, h) in dom.holes.iter().enumerate() {
        rep.holes_large_enough &= le(d, h.radius, scale);
        let margin = r0 - (h.centre - z0).norm() - h.radius;
        rep.holes_inside &= le(d, margin, scale);
        rep.max_d = rep.max_d.min(h.radius).min(margin);
        for o in &dom.holes[i + 1..] {
            let gap = (h.centre - o.centre).norm() - h.radius - o.radius;
            rep.holes_separated &= le(2.0 * d, gap, scale);
            rep.max_d = rep.max_d.min(gap / 2.0);
        }
    }
    rep
}

impl HoledDomain {
    /// Builds the domain; only positivity and finiteness are checked here,
    /// the separation hypotheses are reported by [`validate_geometry`].
    pub fn new(outer: Circle, holes: Vec<Circle>, d: f64) -> Result<Self, HoledError> {
        let finite = |c: &Circle| c.centre.x.is_finite() && c.centre.y.is_finite() && c.radius.is_finite();
        if !finite(&outer) || holes.iter().any(|c| !finite(c)) {
            return Err(HoledError::BadGeometry("non-finite centre or radius".into()));
        }
        if outer.radius <= 0.0 || holes.iter().any(|c| c.radius <= 0.0) {
            return Err(HoledError::BadGeometry("radii must be positive".into()));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(HoledError::BadGeometry(format!("separation scale d = {d} must be positive")));
        }
        Ok(Self { outer, holes, d })
    }

    /// Like [`HoledDomain::new`] but also requires the separation hypotheses.
    pub fn validated(outer: Circle, holes: Vec<Circle>, d: f64) -> Result<Self, HoledError> {
        let dom = Self::new(outer, holes, d)?;
        let rep = validate_geometry(&dom);
        if !rep.passed() {
            return Err(HoledError::Separation { d, max_d: rep.max_d });
        }
        Ok(dom)
    }

    pub fn outer(&self) -> &Circle {
        &self.outer
    }

    pub fn holes(&self) -> &[Circle] {
        &self.holes
    }

    pub fn n(&self) -> usize {
        self.holes.len()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn r0(&self) -> f64 {
        self.outer.radius
    }

    pub fn z0(&self) -> Point {
        self.outer.centre
    }

    pub fn hole_radii(&self) -> Vec<f64> {
        self.holes.iter().map(|h| h.radius).collect()
    }

    /// `|E| = π(r₀² - Σ r_k²)`.
    pub fn area(&self) -> f64 {
        PI * (self.outer.radius.powi(2) - self.holes.iter().map(|h| h.radius * h.radius).sum::<f64>())
    }

    /// Signed distance to `∂E`, positive inside `E`.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        self.holes
            .iter()
            .map(|h| (x - h.centre).norm() - h.radius)
            .fold(self.outer.radius - (x - self.outer.centre).norm(), f64::min)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.boundary_distance(x) > 0.0
    }

    /// Copy with every length multiplied by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        let c = |c: &Circle| Circle::new(c.centre * s, c.radius * s);
        Self { outer: c(&self.outer), holes: self.holes.iter().map(c).collect(), d: self.d * s }
    }

    /// Quadrature nodes and weights for `∫_E`, built on rays from `z₀`.
    ///
    /// Each ray is cut exactly at the hole circles and integrated with
    /// `n_radial` Gauss–Legendre nodes per segment. The angle is split at every
    /// tangency direction and each piece uses `n_angular` Gauss–Legendre nodes
    /// after the substitution `θ = a + (b - a)(3s² - 2s³)`, which absorbs the
    /// square-root behaviour of the segment ends at tangencies.
    pub fn area_quadrature(&self, n_angular: usize, n_radial: usize) -> Vec<(Point, f64)> {
        let z0 = self.outer.centre;
        let mut cuts = vec![-PI, PI];
        for h in &self.holes {
            let v = h.centre - z0;
            let dist = v.norm();
            if dist > h.radius {
                let base = v.y.atan2(v.x);
                let half = (h.radius / dist).asin();
                for t in [base - half, base + half] {
                    cuts.push(crate::geometry::reduce_angle(t));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let ga = GaussLegendre::new(NonZeroUsize::new(n_angular.max(1)).unwrap());
        let gr = GaussLegendre::new(NonZeroUsize::new(n_radial.max(1)).unwrap());
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 1e-15 {
                continue;
            }
            for (s, ws) in ga.iter() {
                let s = 0.5 * (s + 1.0);
                let theta = a + (b - a) * s * s * (3.0 - 2.0 * s);
                let jac = (b - a) * 6.0 * s * (1.0 - s) * 0.5 * ws;
                let dir = Vec2::new(theta.cos(), theta.sin());
                for (lo, hi) in self.ray_segments(&dir) {
                    for (t, wt) in gr.iter() {
                        let rho = lo + (hi - lo) * 0.5 * (t + 1.0);
                        out.push((z0 + dir * rho, jac * wt * 0.5 * (hi - lo) * rho));
                    }
                }
            }
        }
        out
    }

    /// Parameter intervals of the ray `z₀ + ρ dir`, `0 ≤ ρ ≤ r₀`, lying in `E`.
    fn ray_segments(&self, dir: &Vec2) -> Vec<(f64, f64)> {
        let z0 = self.outer.centre;
        let mut removed: Vec<(f64, f64)> = Vec::new();
        for h in &self.holes {
            let v = h.centre - z0;
            let b = v.dot(dir);
            let disc = b * b - (v.norm_squared() - h.radius * h.radius);
            if disc > 0.0 {
                let s = disc.sqrt();
                let (lo, hi) = ((b - s).max(0.0), (b + s).min(self.outer.radius));
                if hi > lo {
                    removed.push((lo, hi));
                }
            }
        }
        removed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut segs = Vec::new();
        let mut start = 0.0;
        for (lo, hi) in removed {
            if lo > start {
                segs.push((start, lo));
            }
            start = start.max(hi);
        }
        if self.outer.radius > start {
            segs.push((start, self.outer.radius));
        }
        segs
    }
}

/// Poincaré constant estimate with the diagnostics of the grid it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareEstimate {
    pub value: f64,
    pub eigenvalue: f64,
    pub cells: usize,
    pub iterations: usize,
}

struct MaskedGrid {
    /// Neighbour indices, `u32::MAX` when absent.
    nbrs: Vec<[u32; 4]>,
    inv_h2: f64,
    centres: Vec<Point>,
}

impl MaskedGrid {
    fn build(dom: &HoledDomain, h: f64) -> Self {
        let z0 = dom.outer.centre;
        let r0 = dom.outer.radius;
        let n = (2.0 * r0 / h).ceil() as usize;
        let origin = z0 - Vec2::new(0.5 * n as f64 * h, 0.5 * n as f64 * h);
        let mut index = vec![u32::MAX; n * n];
        let mut centres = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let c = origin + Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if dom.contains(&c) {
                    index[i * n + j] = centres.len() as u32;
                    centres.push(c);
                }
            }
        }
        let mut nbrs = vec![[u32::MAX; 4]; centres.len()];
        for i in 0..n {
            for j in 0..n {
                let k = index[i * n + j];
                if k == u32::MAX {
                    continue;
                }
                let at = |a: usize, b: usize| index[a * n + b];
                let e = &mut nbrs[k as usize];
                if i > 0 {
                    e[0] = at(i - 1, j);
                }
                if i + 1 < n {
                    e[1] = at(i + 1, j);
                }
                if j > 0 {
                    e[2] = at(i, j - 1);
                }
                if j + 1 < n {
                    e[3] = at(i, j + 1);
                }
            }
        }
        Self { nbrs, inv_h2: 1.0 / (h * h), centres }
    }

    fn len(&self) -> usize {
        self.nbrs.len()
    }

    fn components(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(k) = queue.pop_front() {
                for &m in &self.nbrs[k] {
                    if m != u32::MAX && !seen[m as usize] {
                        seen[m as usize] = true;
                        queue.push_back(m as usize);
                    }
                }
            }
        }
        count
    }

    /// Graph Laplacian with natural (Neumann) boundary: only edges between masked cells.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (k, e) in self.nbrs.iter().enumerate() {
            let mut acc = 0.0;
            for &m in e {
                if m != u32::MAX {
                    acc += x[k] - x[m as usize];
                }
            }
            out[k] = acc * self.inv_h2;
        }
    }
}

const BLOCK: usize = 4;

/// Modified Gram-Schmidt on mean-zero copies of the vectors.
fn orthonormalize(vs: &mut [Vec<f64>]) {
    for i in 0..vs.len() {
        remove_mean(&mut vs[i]);
        for j in 0..i {
            let (done, rest) = vs.split_at_mut(i);
            let c = dot(&rest[0], &done[j]);
            rest[0].iter_mut().zip(&done[j]).for_each(|(a, b)| *a -= c * b);
        }
        let n = dot(&vs[i], &vs[i]).sqrt();
        vs[i].iter_mut().for_each(|a| *a /= n);
    }
}

fn remove_mean(x: &mut [f64]) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for `L x = b` on the mean-zero subspace, warm-started from `x`.
fn cg_solve(grid: &MaskedGrid, b: &[f64], x: &mut [f64], tol: f64) {
    let n = b.len();
    let mut ax = vec![0.0; n];
    grid.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    remove_mean(&mut r);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * dot(b, b);
    let mut ap = vec![0.0; n];
    for _ in 0..20 * n {
        if rr <= stop {
            break;
        }
        grid.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        remove_mean(&mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    remove_mean(x);
}

/// `C_P(E) ≈ 1/√λ₁` from the masked cell-centred Neumann Laplacian with step `grid_h`.
pub fn estimate_poincare(dom: &HoledDomain, grid_h: f64) -> Result<PoincareEstimate, HoledError> {
    let limit = dom.d / 4.0;
    if !(grid_h > 0.0) || grid_h > limit * (1.0 + GEOMETRY_SLACK) {
        return Err(HoledError::GridTooCoarse { h: grid_h, limit });
    }
    let grid = MaskedGrid::build(dom, grid_h);
    if grid.len() < 16 {
        return Err(HoledError::TooFewCells(grid.len()));
    }
    let components = grid.components();
    if components != 1 {
        return Err(HoledError::Disconnected { components });
    }
    let z0 = dom.outer.centre;
    let seeds: [fn(f64, f64) -> f64; BLOCK] = [|x, _| x, |_, y| y, |x, y| x * y, |x, y| x * x - y * y];
    let mut basis: Vec<Vec<f64>> =
        seeds.iter().map(|f| grid.centres.iter().map(|c| f(c.x - z0.x, c.y - z0.y)).collect()).collect();
    orthonormalize(&mut basis);
    let mut solves: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; BLOCK];
    let mut lv = vec![0.0; grid.len()];
    let mut lambda = f64::INFINITY;
    for it in 1..=200 {
        for (v, w) in basis.iter().zip(solves.iter_mut()) {
            cg_solve(&grid, v, w, 1e-11);
        }
        let mut next = solves.clone();
        orthonormalize(&mut next);
        // Rayleigh-Ritz on the block
        let lw: Vec<Vec<f64>> = next
            .iter()
            .map(|w| {
                grid.apply(w, &mut lv);
                lv.clone()
            })
            .collect();
        let h = DMatrix::from_fn(BLOCK, BLOCK, |i, j| 0.5 * (dot(&next[i], &lw[j]) + dot(&next[j], &lw[i])));
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..BLOCK).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        for (slot, &col) in order.iter().enumerate() {
            let mut v = vec![0.0; grid.len()];
            for (i, w) in next.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                v.iter_mut().zip(w).for_each(|(a, b)| *a += c * b);
            }
            basis[slot] = v;
        }
        let rq = eig.eigenvalues[order[0]];
        let done = (rq - lambda).abs() <= 1e-10 * rq;
        lambda = rq;
        // warm starts: L⁻¹ v ≈ v/θ for each Ritz pair
        for (slot, &col) in order.iter().enumerate() {
            let theta = eig.eigenvalues[col];
            solves[slot] = basis[slot].iter().map(|x| x / theta).collect();
        }
        if done {
            return Ok(PoincareEstimate {
                value: 1.0 / lambda.sqrt(),
                eigenvalue: lambda,
                cells: grid.len(),
                iterations: it,
            });
        }
    }
    Err(HoledError::NoConvergence)
}

/// `B(E)`, with `degenerate` set when `n = 0` and the value is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BConstant {
    pub value: f64,
    pub degenerate: bool,
}

pub fn constant_b(dom: &HoledDomain, c_p: f64) -> Result<BConstant, HoledError> {
    if !(c_p > 0.0 && c_p.is_finite()) {
        return Err(HoledError::BadPoincare(c_p));
    }
    if dom.n() == 0 {
        return Ok(BConstant { value: 0.0, degenerate: true });
    }
    let d = dom.d;
    let value = dom.area().sqrt() * c_p * (c_p / d.sqrt() + d.sqrt()) * (dom.n() as f64).sqrt() * dom.r0().sqrt();
    Ok(BConstant { value, degenerate: false })
}

/// Multipole expansion attached to one hole.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleExpansion {
    pub circle: Circle,
    /// Strength `a` of `a log|x - z_k|`.
    pub log_strength: f64,
    /// Coefficients of `(r_k/(x - z_k))^m`, `m = 1..=M`.
    pub coeffs: Vec<Complex64>,
}

/// `u = Re[Σ c_m ((x - z₀)/r₀)^m] + Σ_k (a_k log|x - z_k| + Re Σ c_{k,m} (r_k/(x - z_k))^m) + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicAnsatz {
    domain: HoledDomain,
    interior: Vec<Complex64>,
    holes: Vec<HoleExpansion>,
    constant: f64,
    residual: f64,
    condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Value(f64),
    Gradient(Vec2),
    Hessian(Mat2),
}

impl HarmonicAnsatz {
    /// The zero field on `domain` with truncation order `m`.
    pub fn zero(domain: &HoledDomain, m: usize) -> Self {
        let holes = domain
            .holes
            .iter()
            .map(|c| HoleExpansion { circle: *c, log_strength: 0.0, coeffs: vec![Complex64::new(0.0, 0.0); m] })
            .collect();
        Self {
            domain: domain.clone(),
            interior: vec![Complex64::new(0.0, 0.0); m],
            holes,
            constant: 0.0,
            residual: 0.0,
            condition: 1.0,
        }
    }

    /// Builds an ansatz from unscaled coefficients: `interior[m-1]` multiplies
    /// `(x - z₀)^m` and `holes[k].1[m-1]` multiplies `(x - z_k)^{-m}`.
    pub fn from_unscaled(
        domain: &HoledDomain,
        interior: &[Complex64],
        holes: &[(f64, Vec<Complex64>)],
        constant: f64,
    ) -> Result<Self, HoledError> {
        if holes.len() != domain.n() {
            return Err(HoledError::HoleCountMismatch { expected: domain.n(), got: holes.len() });
        }
        let r0 = domain.r0();
        let interior = interior.iter().enumerate().map(|(i, c)| c * r0.powi(i as i32 + 1)).collect();
        let holes = domain
            .holes
            .iter()
            .zip(holes)
            .map(|(c, (a, co))| HoleExpansion {
                circle: *c,
                log_strength: *a,
                coeffs: co.iter().enumerate().map(|(i, v)| v / c.radius.powi(i as i32 + 1)).collect(),
            })
            .collect();
        Ok(Self { domain: domain.clone(), interior, holes, constant, residual: 0.0, condition: 1.0 })
    }

    pub fn domain(&self) -> &HoledDomain {
        &self.domain
    }

    pub fn order(&self) -> usize {
        self.interior.len()
    }

    /// Coefficients of `((x - z₀)/r₀)^m`.
    pub fn interior_coeffs(&self) -> &[Complex64] {
        &self.interior
    }

    pub fn hole_expansions(&self) -> &[HoleExpansion] {
        &self.holes
    }

    /// Coefficient of `(x - z₀)^m`, `m ≥ 1`.
    pub fn interior_coeff_unscaled(&self, m: usize) -> Complex64 {
        self.interior[m - 1] / self.domain.r0().powi(m as i32)
    }

    /// Coefficient of `(x - z_k)^{-m}`, `m ≥ 1`, hole index `k` from 0.
    pub fn hole_coeff_unscaled(&self, k: usize, m: usize) -> Complex64 {
        let h = &self.holes[k];
        h.coeffs[m - 1] * h.circle.radius.powi(m as i32)
    }

    pub fn log_strengths(&self) -> Vec<f64> {
        self.holes.iter().map(|h| h.log_strength).collect()
    }

    /// Additive constant making the area average vanish.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Sup of the collocation residual.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Condition number of the column-scaled collocation matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `F`, `F'`, `F''` of the holomorphic part; `Re F + c` is the field.
    fn potential(&self, x: &Point) -> [Complex64; 3] {
        let z = to_complex(x);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [zero; 3];
        let r0 = self.domain.r0();
        let zeta = (z - to_complex(&self.domain.z0())) / r0;
        // Horner-free accumulation with running powers
        let mut pm2 = zero; // ζ^{m-2}
        let mut pm1 = Complex64::new(1.0, 0.0); // ζ^{m-1}
        for (i, c) in self.interior.iter().enumerate() {
            let m = (i + 1) as f64;
            out[0] += c * pm1 * zeta;
            out[1] += c * m * pm1 / r0;
            out[2] += c * m * (m - 1.0) * pm2 / (r0 * r0);
            pm2 = pm1;
            pm1 *= zeta;
        }
        for h in &self.holes {
            let w = z - to_complex(&h.circle.centre);
            let rk = h.circle.radius;
            out[0] += h.log_strength * w.ln();
            out[1] += h.log_strength / w;
            out[2] -= h.log_strength / (w * w);
            let q = rk / w;
            let mut qm = q;
            for (i, c) in h.coeffs.iter().enumerate() {
                let m = (i + 1) as f64;
                out[0] += c * qm;
                out[1] -= c * m * qm / w;
                out[2] += c * m * (m + 1.0) * qm / (w * w);
                qm *= q;
            }
        }
        out
    }

    /// Value (order 0), gradient (1) or Hessian (2) at a point strictly inside `E`.
    pub fn eval(&self, x: &Point, order: u8) -> Result<Evaluation, HoledError> {
        let dist = self.domain.boundary_distance(x);
        if !(dist > 1e-9) {
            return Err(HoledError::OutsideDomain(dist));
        }
        let f = self.potential(x);
        Ok(match order {
            0 => Evaluation::Value(f[0].re + self.constant),
            1 => Evaluation::Gradient(gradient_of_real_part(f[1])),
            _ => Evaluation::Hessian(hessian_of_real_part(f[2])),
        })
    }

    /// Derivative along the radial direction of `circle`, at its point of angle `theta`.
    pub fn radial_derivative(&self, circle: &Circle, theta: f64) -> f64 {
        let n = Complex64::from_polar(1.0, theta);
        (self.potential(&circle.point_at(theta))[1] * n).re
    }

    /// Sup over `nodes` uniform nodes per circle of the mismatch with `data`.
    pub fn boundary_residual(&self, data: &NeumannData, nodes: usize) -> f64 {
        let mut worst = 0.0f64;
        let comps = std::iter::once((&self.domain.outer, &data.outer)).chain(self.domain.holes.iter().zip(&data.holes));
        for (c, g) in comps {
            for j in 0..nodes {
                let t = -PI + 2.0 * PI * j as f64 / nodes as f64;
                worst = worst.max((self.radial_derivative(c, t) - g.eval_at(t)).abs());
            }
        }
        worst
    }

    /// `∫_E (u - c)` by Green's identity with `ψ = |x - z₀|²/4`, spectrally accurate on the circles.
    fn area_integral_without_constant(&self, nodes: usize) -> f64 {
        let z0 = self.domain.z0();
        let mut total = 0.0;
        let w = 2.0 * PI / nodes as f64;
        let circles = std::iter::once((&self.domain.outer, 1.0)).chain(self.domain.holes.iter().map(|c| (c, -1.0)));
        for (c, orient) in circles {
            for j in 0..nodes {
                let t = -PI + 2.0 * PI * j as f64 / nodes as f64;
                let x = c.point_at(t);
                let n = Vec2::new(t.cos(), t.sin()) * orient;
                let f = self.potential(&x);
                let grad = gradient_of_real_part(f[1]);
                let rel = x - z0;
                let psi = 0.25 * rel.norm_squared();
                let dpsi = 0.5 * rel.dot(&n);
                total += (f[0].re * dpsi - psi * grad.dot(&n)) * c.radius * w;
            }
        }
        total
    }
}

impl HarmonicField for HarmonicAnsatz {
    fn value(&self, x: &Point) -> f64 {
        self.potential(x)[0].re + self.constant
    }

    fn gradient(&self, x: &Point) -> Vec2 {
        gradient_of_real_part(self.potential(x)[1])
    }

    fn hessian(&self, x: &Point) -> Mat2 {
        hessian_of_real_part(self.potential(x)[2])
    }
}

/// Least-squares circular-harmonics solution of `Δu = 0` in `E` with the given Neumann data.
///
/// Data follow the [`NeumannData`] convention: each component is the derivative
/// along the radial direction of its own circle.
pub fn solve_neumann_holed(
    dom: &HoledDomain,
    data: &NeumannData,
    m: usize,
    nodes_per_circle: usize,
) -> Result<HarmonicAnsatz, HoledError> {
    let rep = validate_geometry(dom);
    if !rep.passed() {
        return Err(HoledError::Separation { d: dom.d, max_d: rep.max_d });
    }
    if data.holes.len() != dom.n() {
        return Err(HoledError::HoleCountMismatch { expected: dom.n(), got: data.holes.len() });
    }
    let need = 4 * m + 4;
    if nodes_per_circle < need {
        return Err(HoledError::TooFewNodes { need, got: nodes_per_circle });
    }
    let radii = dom.hole_radii();
    NeumannData::new(data.outer.clone(), data.holes.clone(), dom.r0(), &radii).map_err(|_| {
        let (o, h) = data.fluxes(dom.r0(), &radii);
        HoledError::Incompatible { outer: o, holes: h }
    })?;

    let mut ansatz = HarmonicAnsatz::zero(dom, m);
    for (h, g) in ansatz.holes.iter_mut().zip(&data.holes) {
        h.log_strength = h.circle.radius * g.integral() / (2.0 * PI);
    }

    let circles: Vec<(Circle, &crate::boundary_data::PeriodicFunction)> =
        std::iter::once((dom.outer, &data.outer)).chain(dom.holes.iter().copied().zip(&data.holes)).collect();
    let rows = circles.len() * nodes_per_circle;
    let cols = 2 * m * (1 + dom.n());
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    let z0 = to_complex(&dom.z0());
    let r0 = dom.r0();
    for (ci, (c, g)) in circles.iter().enumerate() {
        for j in 0..nodes_per_circle {
            let row = ci * nodes_per_circle + j;
            let t = -PI + 2.0 * PI * j as f64 / nodes_per_circle as f64;
            let n = Complex64::from_polar(1.0, t);
            let z = to_complex(&c.point_at(t));
            b[row] = g.eval_at(t) - ansatz.radial_derivative(c, t);
            // column pairs (Re c, Im c) contribute Re(c φ' n) = Re c Re(φ'n) - Im c Im(φ'n)
            let mut put = |col: usize, dphi: Complex64| {
                let v = dphi * n;
                a[(row, col)] = v.re;
                a[(row, col + 1)] = -v.im;
            };
            let zeta = (z - z0) / r0;
            let mut p = Complex64::new(1.0, 0.0);
            for k in 1..=m {
                put(2 * (k - 1), k as f64 * p / r0);
                p *= zeta;
            }
            for (hi, h) in dom.holes.iter().enumerate() {
                let w = z - to_complex(&h.centre);
                let q = h.radius / w;
                let mut qm = q;
                let base = 2 * m * (hi + 1);
                for k in 1..=m {
                    put(base + 2 * (k - 1), -(k as f64) * qm / w);
                    qm *= q;
                }
            }
        }
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).amax().max(1e-300)).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let sv = a.singular_values();
    let condition = if cols == 0 { 1.0 } else { sv.max() / sv.min() };
    if !(condition <= CONDITION_LIMIT) {
        return Err(HoledError::IllConditioned(condition));
    }
    let x = if cols == 0 {
        DVector::zeros(0)
    } else {
        let qr = a.clone().qr();
        let qtb = qr.q().transpose() * &b;
        qr.r().solve_upper_triangular(&qtb).ok_or(HoledError::IllConditioned(f64::INFINITY))?
    };
    let residual = if rows == 0 { 0.0 } else { (&a * &x - &b).amax() };
    let coef = |j: usize| Complex64::new(x[j] / scales[j], x[j + 1] / scales[j + 1]);
    for k in 0..m {
        ansatz.interior[k] = coef(2 * k);
    }
    for hi in 0..dom.n() {
        for k in 0..m {
            ansatz.holes[hi].coeffs[k] = coef(2 * m * (hi + 1) + 2 * k);
        }
    }
    ansatz.residual = residual;
    ansatz.condition = condition;
    let quad_nodes = (4 * nodes_per_circle).max(256);
    ansatz.constant = -ansatz.area_integral_without_constant(quad_nodes) / dom.area();
    Ok(ansatz)
}
