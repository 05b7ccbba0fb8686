//! Removing the normal crossings of a polynomial curve by passing to a
//! nearby level set of its defining polynomial.
//!
//! The image of `X = (X₁, X₂)` is cut out by `P₀ = Res_z(X₁ − ζ, X₂ − ξ)`.
//! Nodes of the image are the critical points of `P₀` on `{P₀ = 0}`; for
//! small `λ ≠ 0` the level set `{P₀ = λ}` is smooth and stays close to the
//! image away from the nodes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convex::{directed_hausdorff, ConvexBody};
use crate::curve::{AnalyticMap, Series};
use crate::error::{Error, Result};
use crate::geometry::{hermitian, PointC2};

const TAU: f64 = std::f64::consts::TAU;

/// Largest component degree accepted by [`implicitize`].
pub const MAX_COMPONENT_DEGREE: usize = 12;
/// Relative tolerance of `P₀(X(z)) = 0`.
pub const VANISH_TOL: f64 = 1e-8;
pub const VANISH_SAMPLES: usize = 1000;
/// Gradient floor for a regular level.
pub const REGULAR_TOL: f64 = 1e-6;

/// `P(ζ, ξ) = Σ c[i][j] ζ^i ξ^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BivariatePolynomial {
    coeffs: Vec<Vec<Complex64>>,
}

/// Value, gradient and Hessian at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub grad: [Complex64; 2],
    pub hessian: [[Complex64; 2]; 2],
}

impl Jet {
    pub fn grad_norm(&self) -> f64 {
        (self.grad[0].norm_sqr() + self.grad[1].norm_sqr()).sqrt()
    }

    pub fn hessian_det(&self) -> Complex64 {
        self.hessian[0][0] * self.hessian[1][1] - self.hessian[0][1] * self.hessian[1][0]
    }
}

impl BivariatePolynomial {
    /// Rows are powers of `ζ`, columns powers of `ξ`.
    pub fn new(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        let cols = coeffs.first().map_or(0, Vec::len);
        if cols == 0 || coeffs.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("coefficient matrix must be rectangular and non-empty".into()));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        if coeffs.iter().flatten().all(|c| c.norm() == 0.0) {
            return Err(Error::Invalid("zero polynomial".into()));
        }
        Ok(BivariatePolynomial { coeffs })
    }

    /// From `(i, j, c)` triples.
    pub fn from_terms(terms: &[(usize, usize, Complex64)]) -> Result<Self> {
        let di = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let dj = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut c = vec![vec![Complex64::new(0.0, 0.0); dj + 1]; di + 1];
        for &(i, j, v) in terms {
            c[i][j] += v;
        }
        BivariatePolynomial::new(c)
    }

    /// Degrees in `ζ` and `ξ`.
    pub fn degrees(&self) -> (usize, usize) {
        (self.coeffs.len() - 1, self.coeffs[0].len() - 1)
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs.get(i).and_then(|r| r.get(j)).copied().unwrap_or_default()
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn eval(&self, q: PointC2) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for row in self.coeffs.iter().rev() {
            let mut r = Complex64::new(0.0, 0.0);
            for c in row.iter().rev() {
                r = r * q.z2 + c;
            }
            acc = acc * q.z1 + r;
        }
        acc
    }

    pub fn jet(&self, q: PointC2) -> Jet {
        let zero = Complex64::new(0.0, 0.0);
        // Powers with derivative factors.
        let pows = |x: Complex64, n: usize| {
            let mut p = vec![Complex64::new(1.0, 0.0); n + 1];
            for k in 1..=n {
                p[k] = p[k - 1] * x;
            }
            p
        };
        let (di, dj) = self.degrees();
        let (a, b) = (pows(q.z1, di), pows(q.z2, dj));
        let d = |p: &[Complex64], k: usize, order: usize| -> Complex64 {
            match order {
                0 => p[k],
                1 if k >= 1 => p[k - 1] * k as f64,
                2 if k >= 2 => p[k - 2] * (k * (k - 1)) as f64,
                _ => zero,
            }
        };
        let mut jet = Jet { value: zero, grad: [zero; 2], hessian: [[zero; 2]; 2] };
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.norm() == 0.0 {
                    continue;
                }
                jet.value += c * d(&a, i, 0) * d(&b, j, 0);
                jet.grad[0] += c * d(&a, i, 1) * d(&b, j, 0);
                jet.grad[1] += c * d(&a, i, 0) * d(&b, j, 1);
                jet.hessian[0][0] += c * d(&a, i, 2) * d(&b, j, 0);
                jet.hessian[0][1] += c * d(&a, i, 1) * d(&b, j, 1);
                jet.hessian[1][1] += c * d(&a, i, 0) * d(&b, j, 2);
            }
        }
        jet.hessian[1][0] = jet.hessian[0][1];
        jet
    }

    /// `Σ |c_ij| |ζ|^i |ξ|^j`, the natural size for relative tolerances at `q`.
    pub fn magnitude(&self, q: PointC2) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                acc += c.norm() * q.z1.norm().powi(i as i32) * q.z2.norm().powi(j as i32);
            }
        }
        acc
    }

    /// Coefficients in `ξ` of `P(ζ, ·)`.
    pub fn slice_zeta(&self, zeta: Complex64) -> Vec<Complex64> {
        let (_, dj) = self.degrees();
        (0..=dj)
            .map(|j| self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, row| acc * zeta + row[j]))
            .collect()
    }

    /// Coefficients in `ζ` of `P(·, ξ)`.
    pub fn slice_xi(&self, xi: Complex64) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .map(|row| row.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * xi + c))
            .collect()
    }

    /// Drops coefficients below `1e-12` of the largest and divides by the
    /// leading one (highest total degree, then highest `ζ` power).
    pub fn normalized(&self) -> Result<Self> {
        let big = self.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        let mut c = self.coeffs.clone();
        for x in c.iter_mut().flatten() {
            if x.norm() <= 1e-12 * big {
                *x = Complex64::new(0.0, 0.0);
            }
        }
        let mut lead: Option<(usize, usize)> = None;
        for (i, row) in c.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if x.norm() > 0.0 && lead.map_or(true, |(a, b)| (i + j, i) > (a + b, a)) {
                    lead = Some((i, j));
                }
            }
        }
        let (li, lj) = lead.ok_or(Error::Invalid("zero polynomial".into()))?;
        let l = c[li][lj];
        let di = c.iter().rposition(|r| r.iter().any(|x| x.norm() > 0.0)).unwrap_or(0);
        let dj = (0..c[0].len()).rev().find(|&j| c.iter().any(|r| r[j].norm() > 0.0)).unwrap_or(0);
        let trimmed = c[..=di].iter().map(|r| r[..=dj].iter().map(|x| x / l).collect()).collect();
        BivariatePolynomial::new(trimmed)
    }
}

/// Monomial coefficients in `z` of a polynomial component, trailing zeros removed.
fn monomial_coeffs(s: &Series) -> Result<Vec<Complex64>> {
    let m = s.rescaled(1.0);
    if m.low < 0 {
        return Err(Error::Invalid("component has negative powers".into()));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); m.low as usize];
    c.extend(m.coeffs);
    let big = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    while c.len() > 1 && c[c.len() - 1].norm() <= 1e-14 * big {
        c.pop();
    }
    if c.is_empty() {
        c.push(Complex64::new(0.0, 0.0));
    }
    Ok(c)
}

/// Sylvester resultant of `f = Σ f_k z^k` and `g = Σ g_k z^k`.
pub fn sylvester_resultant(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let (m, n) = (f.len() - 1, g.len() - 1);
    let size = m + n;
    if size == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    for r in 0..n {
        for (k, c) in f.iter().rev().enumerate() {
            s[(r, r + k)] = *c;
        }
    }
    for r in 0..m {
        for (k, c) in g.iter().rev().enumerate() {
            s[(n + r, r + k)] = *c;
        }
    }
    s.determinant()
}

/// `P₀ = Res_z(X₁(z) − ζ, X₂(z) − ξ)`, normalized, with a sampled vanishing check.
pub fn implicitize(x: &AnalyticMap) -> Result<BivariatePolynomial> {
    let a = monomial_coeffs(&x.x1)?;
    let b = monomial_coeffs(&x.x2)?;
    let (n1, n2) = (a.len() - 1, b.len() - 1);
    if n1 > MAX_COMPONENT_DEGREE || n2 > MAX_COMPONENT_DEGREE {
        return Err(Error::Invalid(format!("degrees ({n1}, {n2}) above the cap {MAX_COMPONENT_DEGREE}")));
    }
    // Degree of the resultant: n2 in ζ, n1 in ξ. Interpolate on circles sized to the image.
    let rim = AnalyticMap::circle_params(x.domain.outer_radius(), 64);
    let size = |f: &dyn Fn(Complex64) -> Complex64| rim.iter().map(|z| f(*z).norm()).fold(0.0, f64::max).max(1e-3);
    let rz = size(&|z| x.x1.value(z));
    let rx = size(&|z| x.x2.value(z));
    let (mz, mx) = (n2 + 1, n1 + 1);
    let mut vals = vec![vec![Complex64::new(0.0, 0.0); mx]; mz];
    for (k, row) in vals.iter_mut().enumerate() {
        let zeta = Complex64::from_polar(rz, TAU * k as f64 / mz as f64);
        for (l, v) in row.iter_mut().enumerate() {
            let xi = Complex64::from_polar(rx, TAU * l as f64 / mx as f64);
            let mut f = a.clone();
            f[0] -= zeta;
            let mut g = b.clone();
            g[0] -= xi;
            *v = sylvester_resultant(&f, &g);
        }
    }
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); mx]; mz];
    for (i, row) in coeffs.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, vr) in vals.iter().enumerate() {
                for (l, v) in vr.iter().enumerate() {
                    let t = TAU * ((i * k) as f64 / mz as f64 + (j * l) as f64 / mx as f64);
                    acc += v * Complex64::from_polar(1.0, -t);
                }
            }
            *c = acc / (mz * mx) as f64 / (rz.powi(i as i32) * rx.powi(j as i32));
        }
    }
    if coeffs.iter().flatten().all(|c| !(c.norm() > 0.0)) {
        return Err(Error::verification("implicitize", "resultant vanishes identically"));
    }
    let p = BivariatePolynomial::new(coeffs)
        .map_err(|_| Error::verification("implicitize", "degenerate resultant"))?
        .normalized()
        .map_err(|_| Error::verification("implicitize", "resultant vanishes identically"))?;
    let r = x.domain.outer_radius();
    let side = (VANISH_SAMPLES as f64).sqrt().ceil() as usize;
    for k in 0..VANISH_SAMPLES {
        let z = Complex64::from_polar(
            r * ((k / side) as f64 + 0.5) / side as f64,
            TAU * (k % side) as f64 / side as f64 + 0.37 * (k / side) as f64,
        );
        let q = x.eval(z);
        let v = p.eval(q).norm();
        if v > VANISH_TOL * p.magnitude(q).max(1.0) {
            return Err(Error::verification("implicitize", format!("|P(X({z}))| = {v:.3e}")));
        }
    }
    Ok(p)
}

/// Real coordinate box `[lo_k, hi_k]` of a convex body.
fn bounding_box(region: &ConvexBody) -> [[f64; 2]; 4] {
    let mut b = [[0.0; 2]; 4];
    for (k, slot) in b.iter_mut().enumerate() {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let e = PointC2::from_reals(e);
        *slot = [-region.support(-e), region.support(e)];
    }
    b
}

/// Common zero of `P`, `P_ζ`, `P_ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub q: PointC2,
    pub value: Complex64,
    pub det_hessian: Complex64,
    pub grad_residual: f64,
}

/// Outcome of [`critical_points`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    /// Seed clusters where Newton stalled near a critical point of `∇P`.
    pub warnings: Vec<String>,
}

/// Seeds per real axis in [`critical_points`].
pub const CRITICAL_SEEDS: usize = 9;

/// Newton on `∇P = 0` from a grid of seeds, screened by `|P| ≈ 0`.
pub fn critical_points(p: &BivariatePolynomial, region: &ConvexBody) -> Result<CriticalSearch> {
    critical_points_with(p, region, CRITICAL_SEEDS)
}

pub fn critical_points_with(p: &BivariatePolynomial, region: &ConvexBody, seeds: usize) -> Result<CriticalSearch> {
    if seeds < 2 {
        return Err(Error::Invalid("at least two seeds per axis".into()));
    }
    let bx = bounding_box(region);
    let at = |k: usize, i: usize| bx[k][0] + (bx[k][1] - bx[k][0]) * i as f64 / (seeds - 1) as f64;
    let mut out = CriticalSearch::default();
    let mut stalled: Vec<PointC2> = Vec::new();
    for idx in 0..seeds.pow(4) {
        let ix = [idx % seeds, (idx / seeds) % seeds, (idx / seeds / seeds) % seeds, idx / seeds.pow(3)];
        let mut q = PointC2::from_reals([at(0, ix[0]), at(1, ix[1]), at(2, ix[2]), at(3, ix[3])]);
        if region.gauge(q) > 1.0 {
            continue;
        }
        let mut converged = false;
        for _ in 0..60 {
            let j = p.jet(q);
            let scale = p.magnitude(q).max(1.0);
            if j.grad_norm() <= 1e-13 * scale {
                converged = true;
                break;
            }
            let det = j.hessian_det();
            if det.norm() < 1e-300 {
                break;
            }
            let h = j.hessian;
            let d1 = (h[1][1] * j.grad[0] - h[0][1] * j.grad[1]) / det;
            let d2 = (h[0][0] * j.grad[1] - h[1][0] * j.grad[0]) / det;
            q = PointC2::new(q.z1 - d1, q.z2 - d2);
            if !q.is_finite() || q.norm() > 1e6 {
                break;
            }
        }
        if !q.is_finite() || region.gauge(q) > 1.0 + 1e-9 {
            continue;
        }
        let j = p.jet(q);
        let scale = p.magnitude(q).max(1.0);
        if !converged {
            converged = j.grad_norm() <= 1e-10 * scale;
        }
        if !converged {
            if j.grad_norm() < 1e-4 * scale && stalled.iter().all(|s| (*s - q).norm() > 1e-3) {
                stalled.push(q);
            }
            continue;
        }
        if j.value.norm() > VANISH_TOL * scale {
            continue;
        }
        if out.points.iter().any(|c| (c.q - q).norm() < 1e-8) {
            continue;
        }
        out.points.push(CriticalPoint { q, value: j.value, det_hessian: j.hessian_det(), grad_residual: j.grad_norm() });
    }
    for s in stalled {
        if out.points.iter().all(|c| (c.q - s).norm() > 1e-3) {
            out.warnings.push(format!("Newton stalled near ({:.4}, {:.4})", s.z1, s.z2));
        }
    }
    out.points.sort_by(|a, b| a.q.to_reals().partial_cmp(&b.q.to_reals()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

/// Roots of `Σ c_k t^k` via the companion matrix.
pub fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let big = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let Some(n) = c.iter().rposition(|x| x.norm() > 1e-14 * big) else { return vec![] };
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// Sampling controls for [`level_shift_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelOptions {
    /// Grid points per real axis of each slice plane.
    pub slices: usize,
    /// Intermediate levels of the continuation from `{P = 0}`.
    pub continuation_steps: usize,
    /// Largest number of tracked points.
    pub tracked: usize,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions { slices: 61, continuation_steps: 4, tracked: 1500 }
    }
}

impl LevelOptions {
    pub fn halved(&self) -> Self {
        LevelOptions { slices: (self.slices / 2) | 1, ..*self }
    }
}

/// Samples of `{P = λ} ∩ region`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelCurve {
    pub lambda: Complex64,
    pub points: Vec<PointC2>,
    /// `(start on {P = 0}, end on {P = λ})` pairs from the continuation.
    pub tracks: Vec<[PointC2; 2]>,
    pub min_grad: f64,
    /// Critical points of `P` with value `λ` inside the region.
    pub critical_on_level: usize,
    pub regular: bool,
}

/// `{P = λ}` sampled by slices, regular when `∇P` stays away from zero on it.
pub fn level_shift(p: &BivariatePolynomial, lambda: Complex64, region: &ConvexBody) -> Result<LevelCurve> {
    level_shift_with(p, lambda, region, LevelOptions::default())
}

pub fn level_shift_with(
    p: &BivariatePolynomial,
    lambda: Complex64,
    region: &ConvexBody,
    opts: LevelOptions,
) -> Result<LevelCurve> {
    let mut points = slice_samples(p, lambda, region, opts.slices);
    let tracks = if lambda.norm() > 0.0 {
        let zero_set = slice_samples(p, Complex64::new(0.0, 0.0), region, opts.slices);
        continue_level(p, &zero_set, lambda, region, opts)?
    } else {
        vec![]
    };
    points.extend(tracks.iter().map(|t| t[1]));
    let crit = critical_points(p, region)?;
    let mut critical_on_level = 0;
    for c in &crit.points {
        if (p.eval(c.q) - lambda).norm() <= VANISH_TOL * p.magnitude(c.q).max(1.0) {
            critical_on_level += 1;
            points.push(c.q);
        }
    }
    if points.is_empty() {
        return Err(Error::Continuation(format!("no samples of the level {lambda}")));
    }
    let min_grad = points.iter().map(|q| p.jet(*q).grad_norm()).fold(f64::INFINITY, f64::min);
    let regular = critical_on_level == 0 && min_grad > REGULAR_TOL;
    Ok(LevelCurve { lambda, points, tracks, min_grad, critical_on_level, regular })
}

/// Roots of `P(ζ, ·) = λ` over a `ζ` grid and of `P(·, ξ) = λ` over a `ξ` grid.
fn slice_samples(p: &BivariatePolynomial, lambda: Complex64, region: &ConvexBody, n: usize) -> Vec<PointC2> {
    let bx = bounding_box(region);
    let n = n.max(3);
    let at = |k: usize, i: usize| bx[k][0] + (bx[k][1] - bx[k][0]) * i as f64 / (n - 1) as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let zeta = Complex64::new(at(0, i), at(1, k));
            let mut c = p.slice_zeta(zeta);
            c[0] -= lambda;
            for xi in poly_roots(&c) {
                out.push(PointC2::new(zeta, xi));
            }
            let xi = Complex64::new(at(2, i), at(3, k));
            let mut c = p.slice_xi(xi);
            c[0] -= lambda;
            for zeta in poly_roots(&c) {
                out.push(PointC2::new(zeta, xi));
            }
        }
    }
    out.retain(|q| q.is_finite() && region.gauge(*q) <= 1.0);
    out
}

/// Minimal-norm Newton onto `{P = level}`.
fn project(p: &BivariatePolynomial, mut q: PointC2, level: Complex64) -> Option<PointC2> {
    for _ in 0..40 {
        let j = p.jet(q);
        let r = j.value - level;
        if r.norm() <= 1e-13 * p.magnitude(q).max(1.0) {
            return Some(q);
        }
        let g2 = j.grad[0].norm_sqr() + j.grad[1].norm_sqr();
        if g2 < 1e-300 {
            return None;
        }
        q = PointC2::new(q.z1 - r * j.grad[0].conj() / g2, q.z2 - r * j.grad[1].conj() / g2);
    }
    None
}

/// Tracks a subsample of `{P = 0}` through `P = tλ`, `t = 1/K … 1`.
fn continue_level(
    p: &BivariatePolynomial,
    zero_set: &[PointC2],
    lambda: Complex64,
    region: &ConvexBody,
    opts: LevelOptions,
) -> Result<Vec<[PointC2; 2]>> {
    let stride = (zero_set.len() / opts.tracked.max(1)).max(1);
    let steps = opts.continuation_steps.max(1);
    let mut tracks = Vec::new();
    let (mut tried, mut lost) = (0usize, 0usize);
    for &start in zero_set.iter().step_by(stride) {
        tried += 1;
        let mut q = start;
        let mut ok = true;
        for s in 1..=steps {
            match project(p, q, lambda * (s as f64 / steps as f64)) {
                Some(next) => q = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            lost += 1;
        } else if region.gauge(q) <= 1.0 {
            tracks.push([start, q]);
        }
    }
    if tried > 0 && 2 * lost > tried {
        return Err(Error::Continuation(format!("{lost} of {tried} tracks lost")));
    }
    Ok(tracks)
}

/// Hausdorff distances between two sampled curves clipped to `region`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    /// Symmetric distance.
    pub hausdorff: f64,
    /// `sup` over the shifted curve of the distance to the original one.
    pub shifted_to_original: f64,
    pub original_to_shifted: f64,
}

/// Symmetric Hausdorff distance of the clipped samples.
pub fn proximity_check(c_lambda: &[PointC2], c0: &[PointC2], region: &ConvexBody) -> Result<f64> {
    Ok(proximity(c_lambda, c0, region)?.hausdorff)
}

pub fn proximity(c_lambda: &[PointC2], c0: &[PointC2], region: &ConvexBody) -> Result<Proximity> {
    let clip = |c: &[PointC2]| c.iter().copied().filter(|q| region.gauge(*q) <= 1.0).collect::<Vec<_>>();
    let (a, b) = (clip(c_lambda), clip(c0));
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("clipped curve samples"));
    }
    let ab = directed_hausdorff(&a, &b);
    let ba = directed_hausdorff(&b, &a);
    Ok(Proximity { hausdorff: ab.max(ba), shifted_to_original: ab, original_to_shifted: ba })
}

/// One row of a λ sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub regular: bool,
    pub min_grad: f64,
    pub hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Largest λ that is regular with proximity within `eps`.
    pub chosen: Option<f64>,
    pub eps: f64,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }
}

/// Dyadic sweep `λ = λ₀, λ₀/2, …` (`count` values).
pub fn lambda_sweep(
    p: &BivariatePolynomial,
    region: &ConvexBody,
    lambda0: f64,
    count: usize,
    eps: f64,
    opts: LevelOptions,
) -> Result<SweepReport> {
    let zero = level_shift_with(p, Complex64::new(0.0, 0.0), region, opts)?;
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = lambda0 / 2f64.powi(k as i32);
        let c = level_shift_with(p, Complex64::new(lambda, 0.0), region, opts)?;
        let hausdorff = proximity_check(&c.points, &zero.points, region)?;
        entries.push(SweepEntry { lambda, regular: c.regular, min_grad: c.min_grad, hausdorff });
    }
    let chosen = entries.iter().find(|e| e.regular && e.hausdorff <= eps).map(|e| e.lambda);
    Ok(SweepReport { entries, chosen, eps })
}

/// Nearest-point correspondence between `{P = 0}` and `{P = λ}` away from
/// the critical points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub pairs: usize,
    pub max_offset: f64,
    /// Largest sine of the angle between the complex tangent lines.
    pub max_tangent_defect: f64,
    /// Smallest `|q_i − q_j| / |p_i − p_j|` over distinct pairs.
    pub min_ratio: f64,
    pub injective: bool,
}

fn tangent(p: &BivariatePolynomial, q: PointC2) -> Option<PointC2> {
    let j = p.jet(q);
    PointC2::new(-j.grad[1], j.grad[0]).normalized().ok()
}

/// Checks the tracks of `curve` whose start lies farther than `exclusion`
/// from every critical point of `P`.
pub fn correspondence(
    p: &BivariatePolynomial,
    curve: &LevelCurve,
    critical: &[CriticalPoint],
    exclusion: f64,
) -> Result<Correspondence> {
    let kept: Vec<&[PointC2; 2]> =
        curve.tracks.iter().filter(|t| critical.iter().all(|c| (t[0] - c.q).norm() > exclusion)).collect();
    if kept.is_empty() {
        return Err(Error::Empty("tracks outside the exclusion"));
    }
    let mut out = Correspondence { pairs: kept.len(), max_offset: 0.0, max_tangent_defect: 0.0, min_ratio: f64::INFINITY, injective: true };
    for t in &kept {
        out.max_offset = out.max_offset.max((t[1] - t[0]).norm());
        let (a, b) = (tangent(p, t[0]), tangent(p, t[1]));
        let defect = match (a, b) {
            (Some(a), Some(b)) => (1.0 - hermitian(a, b).norm_sqr()).max(0.0).sqrt(),
            _ => 1.0,
        };
        out.max_tangent_defect = out.max_tangent_defect.max(defect);
    }
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            let d0 = (kept[i][0] - kept[j][0]).norm();
            if d0 < 1e-12 {
                continue;
            }
            out.min_ratio = out.min_ratio.min((kept[i][1] - kept[j][1]).norm() / d0);
        }
    }
    out.injective = out.min_ratio > 0.5;
    Ok(out)
}

/// CSV with columns `re1, im1, re2, im2`.
pub fn points_csv(points: &[PointC2]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["re1", "im1", "re2", "im2"]).map_err(|e| Error::Io(e.to_string()))?;
    for q in points {
        w.serialize(q.to_reals()).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// CSV with columns `re1, im1, re2, im2, det_re, det_im`.
pub fn critical_csv(points: &[CriticalPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["re1", "im1", "re2", "im2", "det_re", "det_im"]).map_err(|e| Error::Io(e.to_string()))?;
    for c in points {
        let r = c.q.to_reals();
        w.serialize([r[0], r[1], r[2], r[3], c.det_hessian.re, c.det_hessian.im]).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::double_points;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zeta_xi() -> BivariatePolynomial {
        BivariatePolynomial::from_terms(&[(1, 1, c(1., 0.))]).unwrap()
    }

    fn nodal() -> AnalyticMap {
        AnalyticMap::polynomial(1.6, vec![c(0., 0.), c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(-1., 0.), c(0., 0.), c(1., 0.)])
            .unwrap()
    }

    fn ball(r: f64) -> ConvexBody {
        ConvexBody::centered_ball(r).unwrap()
    }

    fn assert_poly(p: &BivariatePolynomial, terms: &[(usize, usize, f64)]) {
        let (di, dj) = p.degrees();
        for i in 0..=di.max(4) {
            for j in 0..=dj.max(4) {
                let want = terms.iter().find(|t| t.0 == i && t.1 == j).map_or(0.0, |t| t.2);
                assert!((p.coeff(i, j) - c(want, 0.)).norm() < 1e-10, "coefficient ({i},{j}) = {}", p.coeff(i, j));
            }
        }
    }

    #[test]
    fn resultant_of_linear_factors() {
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let r = sylvester_resultant(&[-a, c(1., 0.)], &[-b, c(1., 0.)]);
        assert!((r - (a - b)).norm() < 1e-14);
        // Res(z² − 1, z − 2) = g(1)·g(−1) = (−1)(−3).
        let r = sylvester_resultant(&[c(-1., 0.), c(0., 0.), c(1., 0.)], &[c(-2., 0.), c(1., 0.)]);
        assert!((r - c(3., 0.)).norm() < 1e-13);
    }

    #[test]
    fn implicit_equations_of_simple_curves() {
        let flat = AnalyticMap::flat_disc(1.0).unwrap();
        assert_poly(&implicitize(&flat).unwrap(), &[(0, 1, 1.0)]);
        let parabola = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert_poly(&implicitize(&parabola).unwrap(), &[(2, 0, 1.0), (0, 1, -1.0)]);
        // ξ² = ζ(ζ − 1)² for (z², z³ − z).
        let p = implicitize(&nodal()).unwrap();
        assert_poly(&p, &[(3, 0, 1.0), (2, 0, -2.0), (1, 0, 1.0), (0, 2, -1.0)]);
    }

    #[test]
    fn implicitize_rejects_high_degree() {
        let big = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(1., 0.)], vec![c(0.01, 0.); 14]).unwrap();
        assert!(implicitize(&big).is_err());
    }

    #[test]
    fn critical_points_of_model_polynomials() {
        let s = critical_points(&zeta_xi(), &ball(1.0)).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!(s.points[0].q.norm() < 1e-12);
        assert!((s.points[0].det_hessian - c(-1., 0.)).norm() < 1e-12);
        let j = zeta_xi().jet(PointC2::ZERO);
        assert_eq!(j.hessian, [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]);
        let parabola = BivariatePolynomial::from_terms(&[(0, 1, c(1., 0.)), (2, 0, c(-1., 0.))]).unwrap();
        assert!(critical_points(&parabola, &ball(2.0)).unwrap().points.is_empty());
    }

    #[test]
    fn node_of_the_cubic_matches_the_double_point() {
        let x = nodal();
        let p = implicitize(&x).unwrap();
        let s = critical_points(&p, &ball(2.0)).unwrap();
        assert_eq!(s.points.len(), 1, "{:?}", s.points);
        let node = s.points[0];
        assert!((node.q - PointC2::new(c(1., 0.), c(0., 0.))).norm() < 1e-9);
        assert!((node.det_hessian - c(-4., 0.)).norm() < 1e-8);
        let dps = double_points(&x, 1e-10).unwrap();
        assert_eq!(dps.len(), 1);
        assert!(dps[0].normal_crossing);
        assert!((dps[0].w - node.q).norm() < 1e-6);
    }

    #[test]
    fn shifted_hyperbola_is_regular() {
        let lambda = 0.01;
        let curve = level_shift(&zeta_xi(), c(lambda, 0.), &ball(1.0)).unwrap();
        assert!(curve.regular);
        let exact = (2.0 * lambda).sqrt();
        assert!(curve.min_grad >= exact * (1.0 - 1e-9));
        assert!(curve.min_grad < exact * 1.05, "{}", curve.min_grad);
        for q in &curve.points {
            assert!((q.z1 * q.z2 - c(lambda, 0.)).norm() < 1e-10);
        }
        let zero = level_shift(&zeta_xi(), c(0., 0.), &ball(1.0)).unwrap();
        assert!(!zero.regular);
        assert_eq!(zero.critical_on_level, 1);
    }

    #[test]
    fn shifted_cubic_is_regular() {
        let p = implicitize(&nodal()).unwrap();
        let curve = level_shift(&p, c(1e-3, 0.), &ball(2.0)).unwrap();
        assert!(curve.regular && curve.min_grad > REGULAR_TOL);
        assert!(!level_shift(&p, c(0., 0.), &ball(2.0)).unwrap().regular);
    }

    #[test]
    fn proximity_scales_like_root_lambda() {
        let region = ball(1.0);
        let p = zeta_xi();
        let zero = level_shift(&p, c(0., 0.), &region).unwrap();
        assert_eq!(proximity_check(&zero.points, &zero.points, &region).unwrap(), 0.0);
        let mut last = f64::INFINITY;
        let mut values = vec![];
        for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
            let curve = level_shift(&p, c(lambda, 0.), &region).unwrap();
            let pr = proximity(&curve.points, &zero.points, &region).unwrap();
            // Farthest shifted point: |ζ| = |ξ| = √λ. Farthest original point: the origin.
            // The default slices resolve the waist down to λ = 1e-3.
            if lambda >= 1e-3 {
                assert!((pr.shifted_to_original / lambda.sqrt() - 1.0).abs() < 0.1, "{lambda}: {pr:?}");
                assert!((pr.hausdorff / (2.0 * lambda).sqrt() - 1.0).abs() < 0.1, "{lambda}: {pr:?}");
            }
            assert!(pr.hausdorff < last);
            last = pr.hausdorff;
            values.push(pr.hausdorff);
        }
        let fine = LevelOptions { slices: 241, ..LevelOptions::default() };
        let zero_fine = level_shift_with(&p, c(0., 0.), &region, fine).unwrap();
        let tiny = level_shift_with(&p, c(1e-4, 0.), &region, fine).unwrap();
        let pr = proximity(&tiny.points, &zero_fine.points, &region).unwrap();
        assert!((pr.hausdorff / 2e-4f64.sqrt() - 1.0).abs() < 0.1, "{pr:?}");
        let half = level_shift(&p, c(5e-3, 0.), &region).unwrap();
        let h = proximity_check(&half.points, &zero.points, &region).unwrap();
        assert!((values[1] / h / 2f64.sqrt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn tracks_follow_the_curve_away_from_the_node() {
        let p = implicitize(&nodal()).unwrap();
        let region = ball(2.0);
        let curve = level_shift(&p, c(1e-4, 0.), &region).unwrap();
        let crit = critical_points(&p, &region).unwrap().points;
        let cor = correspondence(&p, &curve, &crit, 0.3).unwrap();
        assert!(cor.pairs > 100);
        assert!(cor.injective, "{cor:?}");
        assert!(cor.max_offset < 1e-3 && cor.max_tangent_defect < 1e-2, "{cor:?}");
    }

    #[test]
    fn sweep_picks_the_largest_admissible_lambda() {
        let opts = LevelOptions { slices: 31, ..LevelOptions::default() };
        let rep = lambda_sweep(&zeta_xi(), &ball(1.0), 0.08, 5, 0.25, opts).unwrap();
        assert_eq!(rep.entries.len(), 5);
        let first_ok = rep.entries.iter().find(|e| e.hausdorff <= 0.25).unwrap().lambda;
        assert_eq!(rep.chosen, Some(first_ok));
        assert!(rep.to_json().contains("\"min_grad\""));
    }

    #[test]
    fn roots_and_csv() {
        let mut r = poly_roots(&[c(-1., 0.), c(0., 0.), c(1., 0.)]);
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] + 1.0).norm() < 1e-12 && (r[1] - 1.0).norm() < 1e-12);
        assert!(poly_roots(&[c(2., 0.)]).is_empty());
        let s = points_csv(&[PointC2::ZERO]).unwrap();
        assert_eq!(s.lines().next(), Some("re1,im1,re2,im2"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn normalization_uses_the_leading_term() {
        let p = BivariatePolynomial::from_terms(&[(0, 1, c(0., 2.)), (2, 0, c(0., -2.)), (1, 0, c(1e-15, 0.))]).unwrap();
        assert_poly(&p.normalized().unwrap(), &[(2, 0, 1.0), (0, 1, -1.0)]);
        assert!(BivariatePolynomial::new(vec![vec![c(0., 0.)]]).is_err());
        assert!(BivariatePolynomial::new(vec![vec![c(1., 0.)], vec![]]).is_err());
    }
}
