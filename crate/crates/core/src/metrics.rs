//! Empirical norms and seminorms of sampled fields, and direct checks of the
//! trace inequality, the L¹ bound and interior derivative estimates.
//!
//! Every supremum is a grid maximum, hence a lower bound for the continuum value.

use crate::boundary_data::NeumannData;
use crate::field::HarmonicField;
use crate::geometry::{polar, Mat2, Point, Vec2};
use crate::holed::{Circle, HarmonicAnsatz, HoledDomain};
use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use thiserror::Error;

/// Sample count up to which Hölder quotients use every pair.
pub const EXHAUSTIVE_PAIRS: usize = 2048;

/// Seed of the far-pair generator.
pub const HOLDER_SEED: u64 = 0x484f_4c44;

/// Near pairs are those within this many median nearest-neighbour spacings.
pub const NEAR_SPACINGS: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty sample")]
    Empty,
    #[error("need at least two samples")]
    TooFewSamples,
    #[error("Hölder exponent {0} outside (0, 1)")]
    BadExponent(f64),
    #[error("need 0 < rho1 < rho2, got ({0}, {1})")]
    BadAnnulus(f64, f64),
    #[error("test field has angular modes up to {modes}; {nodes} nodes cannot resolve its square")]
    Unresolved { modes: usize, nodes: usize },
    #[error("probe ball B({x:?}, {d}) leaves the domain")]
    ProbeOutside { x: (f64, f64), d: f64 },
    #[error("derivative order {0} not in 0..=2")]
    BadOrder(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Union of every collar and the interior.
    Whole,
    /// `B(z_k, r_k + d/3) \ B(z_k, r_k)`.
    HoleCollar(usize),
    /// `B(z₀, r₀) \ B(z₀, r₀ - d/3)`.
    OuterCollar,
    /// Points at distance at least `d/3` from `∂E`.
    Interior,
}

/// Sampling resolution of the region grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub collar_radial: usize,
    pub collar_angular: usize,
    /// Interior step is `d / interior_divisor`.
    pub interior_divisor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { collar_radial: 64, collar_angular: 256, interior_divisor: 8.0 }
    }
}

/// Values and derivatives of a field at the points of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub region: Region,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec2>,
    pub hessians: Vec<Mat2>,
    /// Largest grid spacing used.
    pub resolution: f64,
}

impl SampledField {
    pub fn from_field<F: HarmonicField + Sync>(field: &F, points: Vec<Point>, region: Region, resolution: f64) -> Self {
        let evals: Vec<(f64, Vec2, Mat2)> =
            points.par_iter().map(|p| (field.value(p), field.gradient(p), field.hessian(p))).collect();
        let mut out = Self {
            region,
            points,
            values: Vec::with_capacity(evals.len()),
            gradients: Vec::with_capacity(evals.len()),
            hessians: Vec::with_capacity(evals.len()),
            resolution,
        };
        for (v, g, h) in evals {
            out.values.push(v);
            out.gradients.push(g);
            out.hessians.push(h);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn diff(&self, order: u8, i: usize, j: usize) -> f64 {
        match order {
            0 => (self.values[i] - self.values[j]).abs(),
            1 => (self.gradients[i] - self.gradients[j]).norm(),
            _ => (self.hessians[i] - self.hessians[j]).norm(),
        }
    }

    fn magnitude(&self, order: u8, i: usize) -> f64 {
        match order {
            0 => self.values[i].abs(),
            1 => self.gradients[i].norm(),
            _ => self.hessians[i].norm(),
        }
    }
}

fn collar_points(c: &Circle, inner: f64, outer: f64, grid: &GridSpec) -> Vec<Point> {
    let mut pts = Vec::with_capacity(grid.collar_radial * grid.collar_angular);
    let dr = (outer - inner) / grid.collar_radial as f64;
    for i in 0..grid.collar_radial {
        let rho = inner + (i as f64 + 0.5) * dr;
        for j in 0..grid.collar_angular {
            let t = -PI + 2.0 * PI * j as f64 / grid.collar_angular as f64;
            pts.push(c.centre + polar(rho, t));
        }
    }
    pts
}

/// Sample points of a region together with its grid resolution.
pub fn region_points(dom: &HoledDomain, region: Region, grid: &GridSpec) -> (Vec<Point>, f64) {
    let d = dom.d();
    let width = d / 3.0;
    let collar_res = |r: f64| (width / grid.collar_radial as f64).max(2.0 * PI * r / grid.collar_angular as f64);
    match region {
        Region::HoleCollar(k) => {
            let c = dom.holes()[k];
            (collar_points(&c, c.radius, c.radius + width, grid), collar_res(c.radius + width))
        }
        Region::OuterCollar => {
            let c = *dom.outer();
            (collar_points(&c, c.radius - width, c.radius, grid), collar_res(c.radius))
        }
        Region::Interior => {
            let h = d / grid.interior_divisor;
            let r0 = dom.r0();
            let n = (2.0 * r0 / h).ceil() as usize;
            let origin = dom.z0() - Vec2::new(0.5 * n as f64 * h, 0.5 * n as f64 * h);
            let mut pts = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let p = origin + Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                    if dom.boundary_distance(&p) >= width {
                        pts.push(p);
                    }
                }
            }
            (pts, h)
        }
        Region::Whole => {
            let mut pts = Vec::new();
            let mut res = 0.0f64;
            let parts = std::iter::once(Region::OuterCollar)
                .chain((0..dom.n()).map(Region::HoleCollar))
                .chain(std::iter::once(Region::Interior));
            for r in parts {
                let (p, h) = region_points(dom, r, grid);
                pts.extend(p);
                res = res.max(h);
            }
            (pts, res)
        }
    }
}

pub fn sample_region<F: HarmonicField + Sync>(
    field: &F,
    dom: &HoledDomain,
    region: Region,
    grid: &GridSpec,
) -> SampledField {
    let (pts, res) = region_points(dom, region, grid);
    SampledField::from_field(field, pts, region, res)
}

fn check_order(order: u8) -> Result<(), MetricsError> {
    if order > 2 {
        return Err(MetricsError::BadOrder(order));
    }
    Ok(())
}

/// Largest pointwise magnitude (absolute value, Euclidean or Frobenius norm).
pub fn sup_norm(f: &SampledField, order: u8) -> Result<f64, MetricsError> {
    check_order(order)?;
    if f.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok((0..f.len()).map(|i| f.magnitude(order, i)).fold(0.0, f64::max))
}

/// Bucket grid over the sample points.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<u32>>,
}

impl Buckets {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, map }
    }

    fn key(p: &Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices in the cells within `ring` cells of `p`.
    fn around(&self, p: &Point, ring: i64) -> impl Iterator<Item = u32> + '_ {
        let (a, b) = Self::key(p, self.cell);
        (-ring..=ring)
            .flat_map(move |i| (-ring..=ring).map(move |j| (a + i, b + j)))
            .filter_map(move |k| self.map.get(&k))
            .flatten()
            .copied()
    }
}

fn median_nn_spacing(points: &[Point]) -> f64 {
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).norm().max(1e-300);
    let cell = (((hi.x - lo.x) * (hi.y - lo.y)).max(span * span * 1e-6) / points.len() as f64).sqrt().max(1e-300);
    let buckets = Buckets::new(points, cell);
    let mut nn: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut best = f64::INFINITY;
            let mut ring = 1;
            loop {
                for j in buckets.around(p, ring) {
                    if j as usize != i {
                        best = best.min((points[j as usize] - p).norm());
                    }
                }
                if best <= (ring as f64) * cell || (ring as f64) * cell > 2.0 * span {
                    return best;
                }
                ring += 1;
            }
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}

/// `max |f(x_i) - f(x_j)| / |x_i - x_j|^α` over the pair strategy.
///
/// Every pair when the sample has at most [`EXHAUSTIVE_PAIRS`] points.
/// Otherwise all pairs closer than [`NEAR_SPACINGS`] median nearest-neighbour
/// spacings plus `EXHAUSTIVE_PAIRS²` random pairs drawn from [`HOLDER_SEED`].
fn holder_over_pairs(points: &[Point], alpha: f64, diff: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let n = points.len();
    let q = |i: usize, j: usize| {
        let dist = (points[i] - points[j]).norm();
        if dist > 0.0 {
            diff(i, j) / dist.powf(alpha)
        } else {
            0.0
        }
    };
    if n <= EXHAUSTIVE_PAIRS {
        return (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| q(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
    }
    let radius = NEAR_SPACINGS * median_nn_spacing(points);
    let buckets = Buckets::new(points, radius);
    let near = (0..n)
        .into_par_iter()
        .map(|i| {
            buckets
                .around(&points[i], 1)
                .filter(|&j| (j as usize) > i && (points[j as usize] - points[i]).norm() <= radius)
                .map(|j| q(i, j as usize))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let chunks = 64u64;
    let per_chunk = (EXHAUSTIVE_PAIRS * EXHAUSTIVE_PAIRS) as u64 / chunks;
    let far = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED.wrapping_add(c));
            (0..per_chunk).map(|_| q(rng.random_range(0..n), rng.random_range(0..n))).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    near.max(far)
}

/// Hölder seminorm `[D^order f]_{0,α}` over the sample with Euclidean distance.
pub fn holder_seminorm_region(f: &SampledField, alpha: f64, order: u8) -> Result<f64, MetricsError> {
    check_order(order)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::BadExponent(alpha));
    }
    if f.len() < 2 {
        return Err(MetricsError::TooFewSamples);
    }
    Ok(holder_over_pairs(&f.points, alpha, |i, j| f.diff(order, i, j)))
}

/// Measured `‖Du‖∞`, `[Du]_{0,α}`, `‖D²u‖∞`, `[D²u]_{0,α}` over a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub du_sup: f64,
    pub du_hold: f64,
    pub d2u_sup: f64,
    pub d2u_hold: f64,
    pub samples: usize,
    pub resolution: f64,
}

pub fn field_norms(f: &SampledField, alpha: f64) -> Result<FieldNorms, MetricsError> {
    Ok(FieldNorms {
        du_sup: sup_norm(f, 1)?,
        du_hold: holder_seminorm_region(f, alpha, 1)?,
        d2u_sup: sup_norm(f, 2)?,
        d2u_hold: holder_seminorm_region(f, alpha, 2)?,
        samples: f.len(),
        resolution: f.resolution,
    })
}

/// `‖g‖∞`, `[g]_{0,α}`, `‖g'‖∞`, `[g']_{0,α}` on `∂E`, with `g'` the arc-length derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatumNorms {
    pub g_sup: f64,
    pub g_hold: f64,
    pub gp_sup: f64,
    pub gp_hold: f64,
}

/// Datum norms with chordal distances over the union of all boundary circles,
/// so pairs on different components count too.
pub fn datum_norms(dom: &HoledDomain, data: &NeumannData, alpha: f64) -> Result<DatumNorms, MetricsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::BadExponent(alpha));
    }
    let circles = std::iter::once(dom.outer()).chain(dom.holes().iter());
    let mut pts = Vec::new();
    let mut g = Vec::new();
    let mut gp = Vec::new();
    for (c, datum) in circles.zip(data.components()) {
        let der = datum.tangential_derivative();
        for (k, t) in datum.nodes().into_iter().enumerate() {
            pts.push(c.point_at(t));
            g.push(datum.samples()[k]);
            gp.push(der.samples()[k] / c.radius);
        }
    }
    if pts.len() < 2 {
        return Err(MetricsError::TooFewSamples);
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(DatumNorms {
        g_sup: sup(&g),
        g_hold: holder_over_pairs(&pts, alpha, |i, j| (g[i] - g[j]).abs()),
        gp_sup: sup(&gp),
        gp_hold: holder_over_pairs(&pts, alpha, |i, j| (gp[i] - gp[j]).abs()),
    })
}

/// `φ(r, θ) = Σ_m a_m(r) cos mθ + b_m(r) sin mθ` with polynomial `a_m`, `b_m`
/// (coefficients in increasing powers of `r`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTestField {
    pub cos_polys: Vec<Vec<f64>>,
    pub sin_polys: Vec<Vec<f64>>,
}

fn poly(c: &[f64], r: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for a in c.iter().rev() {
        dv = dv * r + v;
        v = v * r + a;
    }
    (v, dv)
}

impl TraceTestField {
    pub fn max_mode(&self) -> usize {
        self.cos_polys.len().max(self.sin_polys.len()).saturating_sub(1)
    }

    pub fn max_degree(&self) -> usize {
        self.cos_polys.iter().chain(&self.sin_polys).map(|p| p.len()).max().unwrap_or(0).saturating_sub(1)
    }

    /// `(φ, ∂φ/∂r, ∂φ/∂θ)`.
    pub fn eval(&self, r: f64, theta: f64) -> (f64, f64, f64) {
        let (mut v, mut vr, mut vt) = (0.0, 0.0, 0.0);
        for (m, c) in self.cos_polys.iter().enumerate() {
            let (p, dp) = poly(c, r);
            let (s, co) = (m as f64 * theta).sin_cos();
            v += p * co;
            vr += dp * co;
            vt -= m as f64 * p * s;
        }
        for (m, c) in self.sin_polys.iter().enumerate() {
            let (p, dp) = poly(c, r);
            let (s, co) = (m as f64 * theta).sin_cos();
            v += p * s;
            vr += dp * s;
            vt += m as f64 * p * co;
        }
        (v, vr, vt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Inner,
    Outer,
}

/// `(∮_{∂B_ρ} φ² dS, (8/(ρ₂-ρ₁)) ∫ φ² + 4(ρ₂-ρ₁) ∫ |Dφ|²)` over `ρ₁ < |x| < ρ₂`,
/// with `ρ` the radius selected by `side`.
pub fn check_trace_inequality(
    rho1: f64,
    rho2: f64,
    phi: &TraceTestField,
    side: TraceSide,
) -> Result<(f64, f64), MetricsError> {
    let nodes = (4 * phi.max_mode() + 4, phi.max_degree() + 24);
    check_trace_inequality_with_nodes(rho1, rho2, phi, side, nodes)
}

/// As [`check_trace_inequality`] with explicit `(angular, radial)` node counts.
pub fn check_trace_inequality_with_nodes(
    rho1: f64,
    rho2: f64,
    phi: &TraceTestField,
    side: TraceSide,
    nodes: (usize, usize),
) -> Result<(f64, f64), MetricsError> {
    if !(rho1 > 0.0 && rho2 > rho1 && rho2.is_finite()) {
        return Err(MetricsError::BadAnnulus(rho1, rho2));
    }
    let (nt, nr) = nodes;
    // φ² carries modes up to 2M; the trapezoid rule is exact below nt
    if nt <= 2 * phi.max_mode() {
        return Err(MetricsError::Unresolved { modes: 2 * phi.max_mode(), nodes: nt });
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(nr.max(1)).unwrap());
    let w_t = 2.0 * PI / nt as f64;
    let thetas: Vec<f64> = (0..nt).map(|j| -PI + j as f64 * w_t).collect();
    let rho = match side {
        TraceSide::Inner => rho1,
        TraceSide::Outer => rho2,
    };
    let lhs: f64 = thetas.iter().map(|&t| phi.eval(rho, t).0.powi(2)).sum::<f64>() * w_t * rho;
    let (mut l2, mut h1) = (0.0, 0.0);
    for (x, w) in gl.iter() {
        let r = 0.5 * (rho2 - rho1) * (x + 1.0) + rho1;
        let wr = w * 0.5 * (rho2 - rho1) * r * w_t;
        for &t in &thetas {
            let (v, vr, vt) = phi.eval(r, t);
            l2 += v * v * wr;
            h1 += (vr * vr + vt * vt / (r * r)) * wr;
        }
    }
    let width = rho2 - rho1;
    Ok((lhs, 8.0 / width * l2 + 4.0 * width * h1))
}

/// Result of the L¹ check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Check {
    pub l1: f64,
    pub ratio: f64,
    /// Set when `‖g‖∞ = 0` (ratio reported as 0) or `B = 0` (ratio undefined, reported as NaN).
    pub flagged: bool,
}

/// Quadrature nodes used by [`check_l1_bound`] per angular piece and radial segment.
pub const L1_NODES: (usize, usize) = (96, 32);

/// `‖u‖_{L¹(E)} / (B ‖g‖∞)`, the integral taken with [`HoledDomain::area_quadrature`].
pub fn check_l1_bound(dom: &HoledDomain, data: &NeumannData, a: &HarmonicAnsatz, b: f64) -> L1Check {
    let g = data.sup_norm();
    if g == 0.0 {
        return L1Check { l1: 0.0, ratio: 0.0, flagged: true };
    }
    let q = dom.area_quadrature(L1_NODES.0, L1_NODES.1);
    let terms: Vec<f64> = q.par_iter().map(|(p, w)| a.value(p).abs() * w).collect();
    let l1: f64 = terms.iter().sum();
    if b == 0.0 {
        return L1Check { l1, ratio: f64::NAN, flagged: true };
    }
    L1Check { l1, ratio: l1 / (b * g), flagged: false }
}

/// Grid used for the probe balls: `(radial, angular)`.
pub const PROBE_GRID: (usize, usize) = (32, 256);

/// `max_x ‖D^β v‖_{L∞(B(x,d/2))} d^{2+|β|} / ‖v‖_{L¹(B(x,d))}` over the probes.
pub fn check_interior_estimate<F: HarmonicField>(
    v: &F,
    dom: &HoledDomain,
    probes: &[Point],
    d: f64,
    order: u8,
) -> Result<f64, MetricsError> {
    check_order(order)?;
    if probes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (nr, nt) = PROBE_GRID;
    let gl = GaussLegendre::new(NonZeroUsize::new(nr).unwrap());
    let w_t = 2.0 * PI / nt as f64;
    let mut worst = 0.0f64;
    for x in probes {
        if dom.boundary_distance(x) < d * (1.0 - 1e-12) {
            return Err(MetricsError::ProbeOutside { x: (x.x, x.y), d });
        }
        let mut l1 = 0.0;
        for (s, w) in gl.iter() {
            let r = 0.5 * d * (s + 1.0);
            for j in 0..nt {
                let p = x + polar(r, -PI + (j as f64 + 0.5) * w_t);
                l1 += v.value(&p).abs() * w * 0.5 * d * r * w_t;
            }
        }
        let mag = |p: &Point| match order {
            0 => v.value(p).abs(),
            1 => v.gradient(p).norm(),
            _ => v.hessian(p).norm(),
        };
        let mut sup = mag(x);
        for i in 1..=nr {
            let r = 0.5 * d * i as f64 / nr as f64;
            for j in 0..nt {
                sup = sup.max(mag(&(x + polar(r, -PI + 2.0 * PI * j as f64 / nt as f64))));
            }
        }
        worst = worst.max(sup * d.powi(2 + order as i32) / l1);
    }
    Ok(worst)
}
