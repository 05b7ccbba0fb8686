//! Holomorphic maps from discs and annuli into C².

use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::geometry::{hermitian, PointC2};
use crate::net::TangentNet;

const TAU: f64 = std::f64::consts::TAU;

/// Parameter domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Domain {
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Domain::Disc { radius } => radius,
            Domain::Annulus { outer, .. } => outer,
        }
    }

    /// Closed-domain membership with slack `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        let r = z.norm();
        match *self {
            Domain::Disc { radius } => r <= radius + tol,
            Domain::Annulus { inner, outer } => r >= inner - tol && r <= outer + tol,
        }
    }

    pub fn boundary_radii(&self) -> Vec<f64> {
        match *self {
            Domain::Disc { radius } => vec![radius],
            Domain::Annulus { inner, outer } => vec![inner, outer],
        }
    }

    /// Polar grid including the boundary circles (and the centre for discs).
    pub fn polar_grid(&self, nr: usize, nt: usize) -> Vec<Complex64> {
        let (r0, r1) = match *self {
            Domain::Disc { radius } => (0.0, radius),
            Domain::Annulus { inner, outer } => (inner, outer),
        };
        let mut out = Vec::new();
        if r0 == 0.0 {
            out.push(Complex64::new(0.0, 0.0));
        }
        for i in 0..=nr {
            let r = r0 + (r1 - r0) * i as f64 / nr as f64;
            if r == 0.0 {
                continue;
            }
            for k in 0..nt {
                out.push(Complex64::from_polar(r, TAU * k as f64 / nt as f64));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Disc { radius } => radius > 0.0 && radius.is_finite(),
            Domain::Annulus { inner, outer } => inner > 0.0 && outer > inner && outer.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("domain {self:?}")))
        }
    }
}

/// `Σ c_k (z/scale)^(low+k)`: a power or Laurent series in a scaled variable.
///
/// With `recurrence` set, `coeffs` refer instead to the polynomials `q_k`
/// generated by the stored Hessenberg recurrence (and `low` is 0).
/// `parts` are further summands, each in its own basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub scale: f64,
    pub low: i32,
    pub coeffs: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<Recurrence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<Series>,
}

/// `q_0 = q0`, `h_{k+1,k} q_{k+1} = w q_k − Σ_{j≤k} h_{j,k} q_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub q0: f64,
    /// Column `k` holds `h_{0,k}, …, h_{k+1,k}`.
    pub h: Vec<Vec<Complex64>>,
}

impl Recurrence {
    /// Values and `w`-derivatives of `q_0 … q_n`.
    fn eval(&self, w: Complex64, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut q = Vec::with_capacity(n + 1);
        let mut dq = Vec::with_capacity(n + 1);
        q.push(Complex64::new(self.q0, 0.0));
        dq.push(zero);
        for k in 0..n {
            let col = &self.h[k];
            let (mut v, mut d) = (w * q[k], q[k] + w * dq[k]);
            for j in 0..=k {
                v -= col[j] * q[j];
                d -= col[j] * dq[j];
            }
            q.push(v / col[k + 1]);
            dq.push(d / col[k + 1]);
        }
        (q, dq)
    }

    /// Monomial coefficients of each `q_k` (may amplify rounding errors).
    pub fn monomials(&self, n: usize) -> Vec<Vec<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![vec![Complex64::new(self.q0, 0.0)]];
        for k in 0..n {
            let col = &self.h[k];
            let mut c = vec![zero; k + 2];
            for (j, x) in out[k].iter().enumerate() {
                c[j + 1] += x;
            }
            for j in 0..=k {
                for (m, x) in out[j].iter().enumerate() {
                    c[m] -= col[j] * x;
                }
            }
            for x in c.iter_mut() {
                *x /= col[k + 1];
            }
            out.push(c);
        }
        out
    }
}

impl Series {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Series { scale: 1.0, low: 0, coeffs, recurrence: None, parts: vec![] }
    }

    pub fn zero() -> Self {
        Series::polynomial(vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Series::polynomial(vec![c])
    }

    /// Highest exponent.
    pub fn degree(&self) -> i32 {
        self.parts.iter().map(Series::degree).fold(self.low + self.coeffs.len() as i32 - 1, i32::max)
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        if self.recurrence.is_some() || !self.parts.is_empty() {
            return self.value_deriv(z).0;
        }
        let w = z / self.scale;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        if self.low != 0 {
            acc *= w.powi(self.low);
        }
        acc
    }

    /// Value and complex derivative with respect to `z`.
    pub fn value_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let (mut v, mut d) = self.own_value_deriv(z);
        for p in &self.parts {
            let (pv, pd) = p.value_deriv(z);
            v += pv;
            d += pd;
        }
        (v, d)
    }

    fn own_value_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let w = z / self.scale;
        let zero = Complex64::new(0.0, 0.0);
        if let Some(rec) = &self.recurrence {
            if self.coeffs.is_empty() {
                return (zero, zero);
            }
            let (q, dq) = rec.eval(w, self.coeffs.len() - 1);
            let v: Complex64 = self.coeffs.iter().zip(&q).map(|(c, x)| c * x).sum();
            let d: Complex64 = self.coeffs.iter().zip(&dq).map(|(c, x)| c * x).sum();
            return (v, d / self.scale);
        }
        let (mut p, mut dp) = (zero, zero);
        for c in self.coeffs.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        if self.low == 0 {
            return (p, dp / self.scale);
        }
        let wl = w.powi(self.low);
        let v = p * wl;
        let d = dp * wl + p * (self.low as f64) * w.powi(self.low - 1);
        (v, d / self.scale)
    }

    pub fn is_finite(&self) -> bool {
        let rec_ok = self
            .recurrence
            .as_ref()
            .map(|r| r.q0.is_finite() && r.h.len() + 1 >= self.coeffs.len() && r.h.iter().flatten().all(|c| c.is_finite()))
            .unwrap_or(true);
        rec_ok
            && self.scale.is_finite()
            && self.scale > 0.0
            && self.coeffs.iter().all(|c| c.is_finite())
            && self.parts.iter().all(Series::is_finite)
    }

    /// Plain power-series form in the same scaled variable.
    pub fn to_monomial(&self) -> Series {
        if !self.parts.is_empty() {
            let mut acc = Series { parts: vec![], ..self.clone() }.to_monomial();
            for p in &self.parts {
                let q = p.to_monomial().rescaled(acc.scale);
                let low = acc.low.min(q.low);
                let n = (acc.degree().max(q.degree()) - low + 1).max(0) as usize;
                let mut c = vec![Complex64::new(0.0, 0.0); n];
                for (k, x) in acc.coeffs.iter().enumerate() {
                    c[(acc.low - low) as usize + k] += x;
                }
                for (k, x) in q.coeffs.iter().enumerate() {
                    c[(q.low - low) as usize + k] += x;
                }
                acc = Series { scale: acc.scale, low, coeffs: c, recurrence: None, parts: vec![] };
            }
            return acc;
        }
        let Some(rec) = &self.recurrence else { return self.clone() };
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        if n > 0 {
            for (k, qk) in rec.monomials(n - 1).iter().enumerate() {
                for (j, x) in qk.iter().enumerate() {
                    out[j] += self.coeffs[k] * x;
                }
            }
        }
        Series { scale: self.scale, low: 0, coeffs: out, recurrence: None, parts: vec![] }
    }

    /// Re-expressed in the variable `z/new_scale` (power-series form).
    pub fn rescaled(&self, new_scale: f64) -> Self {
        let m = self.to_monomial();
        let f = new_scale / m.scale;
        let coeffs = m
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * f.powi(m.low + k as i32))
            .collect();
        Series { scale: new_scale, low: m.low, coeffs, recurrence: None, parts: vec![] }
    }

    /// `a·self + b·other`. Summands in a common basis are merged; others are
    /// kept as separate parts, so no basis conversion takes place.
    pub fn lincomb(&self, a: Complex64, other: &Series, b: Complex64) -> Result<Series> {
        let mut pieces: Vec<Series> = Vec::new();
        for (s, f) in [(self, a), (other, b)] {
            for piece in s.flatten() {
                let scaled: Vec<Complex64> = piece.coeffs.iter().map(|c| c * f).collect();
                match pieces.iter_mut().find(|p| p.same_basis(&piece)) {
                    Some(p) => {
                        if p.coeffs.len() < scaled.len() {
                            p.coeffs.resize(scaled.len(), Complex64::new(0.0, 0.0));
                        }
                        for (k, c) in scaled.into_iter().enumerate() {
                            p.coeffs[k] += c;
                        }
                    }
                    None => pieces.push(Series { coeffs: scaled, ..piece }),
                }
            }
        }
        let mut it = pieces.into_iter();
        let mut head = it.next().unwrap_or_else(Series::zero);
        head.parts = it.collect();
        Ok(head)
    }

    /// Power-series form in `z/radius` computed from samples on `|z| = radius`.
    ///
    /// Stable whenever the series is modest on that circle, unlike
    /// [`Series::to_monomial`]. Returns the series and the largest sampled modulus.
    pub fn sampled_monomial(&self, radius: f64) -> (Series, f64) {
        let n = (self.degree().max(0) as usize) + 1;
        let m = (2 * n).next_power_of_two().max(16);
        let vals: Vec<Complex64> = (0..m).map(|j| self.value(Complex64::from_polar(radius, TAU * j as f64 / m as f64))).collect();
        let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let coeffs = (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in vals.iter().enumerate() {
                    acc += v * Complex64::from_polar(1.0, -TAU * ((j * k) % m) as f64 / m as f64);
                }
                acc / m as f64
            })
            .collect();
        (Series { scale: radius, low: 0, coeffs, recurrence: None, parts: vec![] }, peak)
    }

    /// Every summand as a parts-free series.
    pub fn flatten(&self) -> Vec<Series> {
        let mut out = vec![Series { parts: vec![], ..self.clone() }];
        for p in &self.parts {
            out.extend(p.flatten());
        }
        out
    }

    fn same_basis(&self, other: &Series) -> bool {
        self.scale == other.scale && self.low == other.low && self.recurrence == other.recurrence
    }
}

/// Minimum accepted speed `‖X′‖` on the immersion grid.
pub const IMMERSION_TOL: f64 = 1e-9;

/// A holomorphic map `X = (X₁, X₂)` on a closed disc or annulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyticMap {
    pub domain: Domain,
    pub x1: Series,
    pub x2: Series,
    /// Minimum of `‖X′‖` over the certification grid.
    pub min_speed: f64,
    /// Power-series proxy used for evaluation when the stored form is slow.
    #[serde(skip)]
    fast: Option<Arc<Proxy>>,
}

/// Pointwise agreement, relative to `max(1, |value|)`, required of a proxy layer.
const PROXY_TOL: f64 = 1e-6;
/// Ratio between consecutive proxy radii.
const PROXY_RATIO: f64 = 0.85;
/// Innermost proxy radius as a fraction of the outer radius.
const PROXY_FLOOR: f64 = 0.1;

/// Power-series expansions sampled on nested circles `radii[0] > radii[1] > …`.
/// Layer `i` serves `radii[i+1] < |z| ≤ radii[i]`; `None` falls back to the
/// stored form.
#[derive(Clone, Debug)]
struct Proxy {
    radii: Vec<f64>,
    layers: Vec<Option<[Series; 2]>>,
}

impl Proxy {
    fn layer(&self, z: Complex64) -> Option<&[Series; 2]> {
        let r = z.norm();
        let i = self.radii.iter().rposition(|&ri| r <= ri * (1.0 + 1e-12)).unwrap_or(0);
        self.layers[i].as_ref()
    }
}

impl AnalyticMap {
    /// Checks finiteness and the immersion condition on a polar grid.
    pub fn new(domain: Domain, x1: Series, x2: Series) -> Result<Self> {
        AnalyticMap::certified(domain, x1, x2, None)
    }

    fn certified(domain: Domain, x1: Series, x2: Series, fast: Option<Arc<Proxy>>) -> Result<Self> {
        domain.validate()?;
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::Invalid("non-finite coefficients".into()));
        }
        let mut map = AnalyticMap { domain, x1, x2, min_speed: 0.0, fast };
        if map.fast.is_none() {
            map.fast = map.build_proxy();
        }
        let speed = domain
            .polar_grid(48, 96)
            .into_iter()
            .map(|z| map.deriv(z).norm())
            .fold(f64::INFINITY, f64::min);
        if !(speed > IMMERSION_TOL) {
            return Err(Error::NotImmersion(speed));
        }
        map.min_speed = speed;
        Ok(map)
    }

    /// Polynomial map on the disc of radius `radius`.
    pub fn polynomial(radius: f64, c1: Vec<Complex64>, c2: Vec<Complex64>) -> Result<Self> {
        AnalyticMap::new(Domain::Disc { radius }, Series::polynomial(c1), Series::polynomial(c2))
    }

    /// `X(z) = (z, 0)` on the disc of radius `radius`.
    pub fn flat_disc(radius: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        AnalyticMap::polynomial(radius, vec![zero, one], vec![])
    }

    fn build_proxy(&self) -> Option<Arc<Proxy>> {
        let Domain::Disc { radius } = self.domain else { return None };
        let pieces: Vec<Series> = self.x1.flatten().into_iter().chain(self.x2.flatten()).collect();
        if pieces.iter().all(|p| p.recurrence.is_none()) || pieces.iter().any(|p| p.low < 0) {
            return None;
        }
        let mut radii = vec![radius];
        while radii[radii.len() - 1] * PROXY_RATIO > PROXY_FLOOR * radius {
            radii.push(radii[radii.len() - 1] * PROXY_RATIO);
        }
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= PROXY_TOL * b.norm().max(1.0);
        let mut layers = Vec::with_capacity(radii.len());
        for (i, &r) in radii.iter().enumerate() {
            let lo = radii.get(i + 1).copied().unwrap_or(0.0);
            let (p1, _) = self.x1.sampled_monomial(r);
            let (p2, _) = self.x2.sampled_monomial(r);
            let ok = (0..=4).all(|j| {
                let rho = lo + (r - lo) * j as f64 / 4.0;
                (0..24).all(|k| {
                    let z = Complex64::from_polar(rho, TAU * (k as f64 + 0.5 * j as f64) / 24.0);
                    let ((v1, d1), (e1, f1)) = (p1.value_deriv(z), self.x1.value_deriv(z));
                    let ((v2, d2), (e2, f2)) = (p2.value_deriv(z), self.x2.value_deriv(z));
                    close(v1, e1) && close(v2, e2) && close(d1, f1) && close(d2, f2)
                })
            });
            layers.push(ok.then_some([p1, p2]));
        }
        layers.iter().any(Option::is_some).then(|| Arc::new(Proxy { radii, layers }))
    }

    fn parts(&self, z: Complex64) -> (&Series, &Series) {
        match self.fast.as_ref().and_then(|f| f.layer(z)) {
            Some(f) => (&f[0], &f[1]),
            None => (&self.x1, &self.x2),
        }
    }

    pub fn eval(&self, z: Complex64) -> PointC2 {
        let (a, b) = self.parts(z);
        PointC2::new(a.value(z), b.value(z))
    }

    pub fn deriv(&self, z: Complex64) -> PointC2 {
        let (a, b) = self.parts(z);
        PointC2::new(a.value_deriv(z).1, b.value_deriv(z).1)
    }

    pub fn eval_deriv(&self, z: Complex64) -> (PointC2, PointC2) {
        let (x1, x2) = self.parts(z);
        let (a, da) = x1.value_deriv(z);
        let (b, db) = x2.value_deriv(z);
        (PointC2::new(a, b), PointC2::new(da, db))
    }

    pub fn degree(&self) -> i32 {
        self.x1.degree().max(self.x2.degree())
    }

    /// Parameters on a boundary circle of radius `r`, `n` equally spaced.
    pub fn circle_params(r: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(r, TAU * k as f64 / n as f64)).collect()
    }

    /// Same map with a different domain (no re-certification of coefficients).
    ///
    /// A disc inside the current disc keeps the evaluation proxy.
    pub fn restricted(&self, domain: Domain) -> Result<Self> {
        let fast = match (self.domain, domain) {
            (Domain::Disc { radius: a }, Domain::Disc { radius: b }) if b <= a => self.fast.clone(),
            _ => None,
        };
        AnalyticMap::certified(domain, self.x1.clone(), self.x2.clone(), fast)
    }
}

/// CSV with columns `param_re, param_im, re1, im1, re2, im2`.
pub fn samples_csv(x: &AnalyticMap, params: &[Complex64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["param_re", "param_im", "re1", "im1", "re2", "im2"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for z in params {
        let p = x.eval(*z);
        let row = [z.re, z.im, p.z1.re, p.z1.im, p.z2.re, p.z2.im];
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// C¹ distance `max(‖f−g‖, ‖f′−g′‖)` over the samples `k`.
pub fn c1_distance(f: &AnalyticMap, g: &AnalyticMap, k: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in k {
        if !f.domain.contains(*z, 1e-12) || !g.domain.contains(*z, 1e-12) {
            return Err(Error::DomainMismatch(format!("sample {z} outside the domain")));
        }
        let (a, da) = f.eval_deriv(*z);
        let (b, db) = g.eval_deriv(*z);
        worst = worst.max((a - b).norm()).max((da - db).norm());
    }
    Ok(worst)
}

/// A path in the parameter domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamPath {
    Polyline(Vec<Complex64>),
    /// Circular arc `center + radius·e^{it}`, `t` from `start` to `end`.
    Arc { center: Complex64, radius: f64, start: f64, end: f64 },
}

impl ParamPath {
    fn point(&self, seg: usize, t: f64) -> (Complex64, Complex64) {
        match self {
            ParamPath::Polyline(v) => (v[seg] + (v[seg + 1] - v[seg]) * t, v[seg + 1] - v[seg]),
            ParamPath::Arc { center, radius, start, end } => {
                let th = start + (end - start) * t;
                let e = Complex64::from_polar(*radius, th);
                (center + e, e * Complex64::i() * (end - start))
            }
        }
    }

    fn segments(&self) -> usize {
        match self {
            ParamPath::Polyline(v) => v.len().saturating_sub(1),
            ParamPath::Arc { .. } => 1,
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1)
}

/// Euclidean length of `X∘path` by adaptive quadrature of `‖X′‖·|dz|`.
pub fn image_length(x: &AnalyticMap, path: &ParamPath) -> Result<f64> {
    let mut total = 0.0;
    for s in 0..path.segments() {
        for k in 0..=16 {
            let z = path.point(s, k as f64 / 16.0).0;
            if !x.domain.contains(z, 1e-12) {
                return Err(Error::DomainMismatch(format!("path point {z} outside the domain")));
            }
        }
        let f = |t: f64| {
            let (z, dz) = path.point(s, t);
            x.deriv(z).norm() * dz.norm()
        };
        total += adaptive_simpson(&f, 0.0, 1.0, f(0.0), f(0.5), f(1.0), 1e-12, 40);
    }
    Ok(total)
}

/// A self-intersection of the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublePoint {
    pub w: PointC2,
    pub p: Complex64,
    pub q: Complex64,
    pub normal_crossing: bool,
}

impl DoublePoint {
    /// Recomputes the classification from the derivatives.
    pub fn classify(x: &AnalyticMap, p: Complex64, q: Complex64) -> bool {
        let (a, b) = (x.deriv(p), x.deriv(q));
        let det = (a.z1 * b.z2 - a.z2 * b.z1).norm();
        det > 1e-8 * a.norm() * b.norm()
    }
}

/// Grid size of the double-point search.
pub const DOUBLE_POINT_GRID: usize = 200;

fn lex_less(a: Complex64, b: Complex64) -> bool {
    (a.re, a.im) < (b.re, b.im)
}

/// Complex Newton for `X(P) = X(Q)`.
fn refine_pair(x: &AnalyticMap, mut p: Complex64, mut q: Complex64) -> Option<(Complex64, Complex64, f64)> {
    let mut res = (x.eval(p) - x.eval(q)).norm();
    for _ in 0..60 {
        if res < 1e-15 {
            break;
        }
        let (xp, dp) = x.eval_deriv(p);
        let (xq, dq) = x.eval_deriv(q);
        let f = xp - xq;
        // [dp  −dq] (δp, δq)ᵀ = −f
        let det = -dp.z1 * dq.z2 + dq.z1 * dp.z2;
        if det.norm() < 1e-300 {
            return None;
        }
        let rhs1 = -f.z1;
        let rhs2 = -f.z2;
        let dpp = (rhs1 * (-dq.z2) - (-dq.z1) * rhs2) / det;
        let dqq = (dp.z1 * rhs2 - dp.z2 * rhs1) / det;
        let mut lam = 1.0;
        loop {
            let (np, nq) = (p + dpp * lam, q + dqq * lam);
            let nr = (x.eval(np) - x.eval(nq)).norm();
            if nr < res || lam < 1e-6 {
                p = np;
                q = nq;
                res = nr;
                break;
            }
            lam *= 0.5;
        }
    }
    Some((p, q, res))
}

/// Whether the coincidence at `(p, q)` extends to a neighbourhood.
fn coincidence_is_open(x: &AnalyticMap, p: Complex64, q: Complex64) -> bool {
    let (dp, dq) = (x.deriv(p), x.deriv(q));
    let r = 1e-3;
    (0..4).all(|k| {
        let pk = p + Complex64::from_polar(r, TAU * (k as f64 + 0.25) / 4.0);
        if !x.domain.contains(pk, 0.0) {
            return true;
        }
        let target = x.eval(pk);
        let mut qk = q + hermitian(dp * (pk - p), dq) / dq.norm_sqr();
        // Gauss-Newton for the overdetermined X(q) = target.
        for _ in 0..30 {
            let (v, d) = x.eval_deriv(qk);
            qk -= hermitian(v - target, d) / d.norm_sqr();
        }
        (x.eval(qk) - target).norm() < 1e-10
    })
}

/// All parameter pairs with coinciding images, `P` before `Q` in lexicographic order.
pub fn double_points(x: &AnalyticMap, tol: f64) -> Result<Vec<DoublePoint>> {
    let n = DOUBLE_POINT_GRID;
    let r = x.domain.outer_radius();
    let h = 2.0 * r / (n - 1) as f64;
    let mut params = Vec::new();
    let mut images = Vec::new();
    let mut speeds = Vec::new();
    let mut lmax = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(-r + h * i as f64, -r + h * j as f64);
            if x.domain.contains(z, 0.0) {
                let (v, d) = x.eval_deriv(z);
                lmax = lmax.max(d.norm());
                speeds.push(d.norm().max(x.min_speed));
                params.push(z);
                images.push(v);
            }
        }
    }
    let rc = 1.5 * h * lmax.max(1e-12);
    // Pairs closer than the local injectivity scale are neighbours, not crossings.
    let separation = |a: usize, b: usize| 2.0 * rc / speeds[a].min(speeds[b]);
    let key = |p: PointC2| -> [i64; 4] {
        let v = p.to_reals();
        [0, 1, 2, 3].map(|k| (v[k] / rc).floor() as i64)
    };
    let mut cells: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    for (k, p) in images.iter().enumerate() {
        cells.entry(key(*p)).or_default().push(k);
    }
    let mut found: Vec<DoublePoint> = Vec::new();
    let mut cell_keys: Vec<&[i64; 4]> = cells.keys().collect();
    cell_keys.sort();
    for c in cell_keys {
        for &a in &cells[c] {
            for off in 0..81 {
                let d = [off % 3, (off / 3) % 3, (off / 9) % 3, off / 27].map(|t| t as i64 - 1);
                let nk = [c[0] + d[0], c[1] + d[1], c[2] + d[2], c[3] + d[3]];
                let Some(list) = cells.get(&nk) else { continue };
                for &b in list {
                    if b <= a
                        || (params[a] - params[b]).norm() < separation(a, b)
                        || images[a].distance(images[b]) > rc
                    {
                        continue;
                    }
                    let (pa, pb) = (params[a], params[b]);
                    let near_known = found.iter().any(|f| {
                        ((f.p - pa).norm() < 3.0 * h && (f.q - pb).norm() < 3.0 * h)
                            || ((f.q - pa).norm() < 3.0 * h && (f.p - pb).norm() < 3.0 * h)
                    });
                    if near_known {
                        continue;
                    }
                    let Some((p, q, res)) = refine_pair(x, pa, pb) else { continue };
                    if res > tol
                        || !x.domain.contains(p, 1e-12)
                        || !x.domain.contains(q, 1e-12)
                        || (p - q).norm() < 1e-6
                    {
                        continue;
                    }
                    if coincidence_is_open(x, p, q) {
                        return Err(Error::NotGeneric(format!("coincidence at ({p}, {q}) is not isolated")));
                    }
                    let (p, q) = if lex_less(p, q) { (p, q) } else { (q, p) };
                    let dup = found
                        .iter()
                        .any(|f| (f.p - p).norm() < 1e-7 && (f.q - q).norm() < 1e-7);
                    if !dup {
                        found.push(DoublePoint {
                            w: x.eval(p),
                            p,
                            q,
                            normal_crossing: DoublePoint::classify(x, p, q),
                        });
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| (a.p.re, a.p.im, a.q.re, a.q.im).partial_cmp(&(b.p.re, b.p.im, b.q.re, b.q.im)).unwrap());
    Ok(found)
}

#[derive(Copy, Clone, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// Simpson estimate of the image length of the straight parameter segment `[a, b]`.
fn segment_length(x: &AnalyticMap, a: Complex64, b: Complex64) -> f64 {
    let s = |z: Complex64| x.deriv(z).norm();
    (b - a).norm() * (s(a) + 4.0 * s(0.5 * (a + b)) + s(b)) / 6.0
}

fn stencil() -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            if (a, b) != (0, 0) && gcd(a.unsigned_abs(), b.unsigned_abs()) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Shortest path in the image between `X(p)` and `X(q)` on an `n × n` parameter grid.
///
/// With `glue`, preimages of each double point are joined by a zero-length edge.
pub fn graph_distance(x: &AnalyticMap, p: Complex64, q: Complex64, n: usize, glue: bool) -> Result<f64> {
    for z in [p, q] {
        if !x.domain.contains(z, 1e-12) {
            return Err(Error::DomainMismatch(format!("parameter {z} outside the domain")));
        }
    }
    let r = x.domain.outer_radius();
    let n = n.max(8);
    let h = 2.0 * r / (n - 1) as f64;
    let mut index = vec![usize::MAX; n * n];
    let mut nodes: Vec<Complex64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(-r + h * i as f64, -r + h * j as f64);
            if x.domain.contains(z, 0.0) {
                index[i * n + j] = nodes.len();
                nodes.push(z);
            }
        }
    }
    let grid_count = nodes.len();
    let mut extra_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); grid_count];
    let inside_segment = |a: Complex64, b: Complex64| {
        (0..=4).all(|k| x.domain.contains(a + (b - a) * (k as f64 / 4.0), 1e-12))
    };
    let attach = |z: Complex64, nodes: &mut Vec<Complex64>, extra: &mut Vec<Vec<(usize, f64)>>| -> usize {
        let id = nodes.len();
        nodes.push(z);
        extra.push(Vec::new());
        let ci = ((z.re + r) / h).round() as i64;
        let cj = ((z.im + r) / h).round() as i64;
        for di in -3..=3 {
            for dj in -3..=3 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i >= n as i64 || j >= n as i64 {
                    continue;
                }
                let g = index[i as usize * n + j as usize];
                if g == usize::MAX || !inside_segment(z, nodes[g]) {
                    continue;
                }
                let w = segment_length(x, z, nodes[g]);
                extra[id].push((g, w));
                extra[g].push((id, w));
            }
        }
        id
    };
    let src = attach(p, &mut nodes, &mut extra_edges);
    let dst = attach(q, &mut nodes, &mut extra_edges);
    if glue {
        for dp in double_points(x, 1e-10)? {
            let a = attach(dp.p, &mut nodes, &mut extra_edges);
            let b = attach(dp.q, &mut nodes, &mut extra_edges);
            extra_edges[a].push((b, 0.0));
            extra_edges[b].push((a, 0.0));
        }
    }
    let st = stencil();
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        if u == dst {
            return Ok(du);
        }
        let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Item>| {
            if du + w < dist[v] {
                dist[v] = du + w;
                heap.push(Item(du + w, v));
            }
        };
        if u < grid_count {
            let z = nodes[u];
            let i = ((z.re + r) / h).round() as i64;
            let j = ((z.im + r) / h).round() as i64;
            for &(a, b) in &st {
                let (ii, jj) = (i + a, j + b);
                if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                    continue;
                }
                let v = index[ii as usize * n + jj as usize];
                if v == usize::MAX || !inside_segment(z, nodes[v]) {
                    continue;
                }
                relax(v, segment_length(x, z, nodes[v]), &mut heap);
            }
        }
        for &(v, w) in &extra_edges[u] {
            relax(v, w, &mut heap);
        }
    }
    Err(Error::Unreachable)
}

/// Image pseudo-distance (glued at double points).
pub fn image_distance(x: &AnalyticMap, p: Complex64, q: Complex64, n: usize) -> Result<f64> {
    graph_distance(x, p, q, n, true)
}

/// Intrinsic distance on the parameter domain (no gluing).
pub fn intrinsic_distance(x: &AnalyticMap, p: Complex64, q: Complex64, n: usize) -> Result<f64> {
    graph_distance(x, p, q, n, false)
}

/// Default threshold for [`transversal_boundary`].
pub const TRANSVERSAL_TOL: f64 = 1e-6;

/// Samples per boundary circle used by boundary checks.
pub const BOUNDARY_SAMPLES: usize = 720;

/// True iff the boundary image meets `Fr D` transversally at every sample.
///
/// The complex tangent line `span{X′, iX′}` lies in `T_p Fr D` exactly when
/// `⟨⟨X′, ν⟩⟩ = 0`, so the test is `|⟨⟨X′, ν⟩⟩|/‖X′‖ > tol`.
pub fn transversal_boundary(x: &AnalyticMap, d: &ConvexBody, tol: f64) -> Result<bool> {
    let mut ok = true;
    for r in x.domain.boundary_radii() {
        for z in AnalyticMap::circle_params(r, BOUNDARY_SAMPLES) {
            let (p, dp) = x.eval_deriv(z);
            let nu = d.outward_normal(p)?;
            if hermitian(dp, nu).norm() / dp.norm() <= tol {
                ok = false;
            }
        }
    }
    Ok(ok)
}

/// Partition of one boundary circle into arcs assigned to net slabs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CirclePartition {
    pub radius: f64,
    /// Junction angles `θ_0 < … < θ_{J−1}`; arc `j` runs from `θ_j` to `θ_{j+1}` (cyclically).
    pub junctions: Vec<f64>,
    /// Skeleton index assigned to each arc.
    pub assigned: Vec<usize>,
}

impl CirclePartition {
    pub fn arc_count(&self) -> usize {
        self.junctions.len()
    }

    /// Junction parameter `Q_j`.
    pub fn junction(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius, self.junctions[j % self.arc_count()])
    }

    /// Angular interval of arc `j`.
    pub fn arc_interval(&self, j: usize) -> (f64, f64) {
        let a = self.junctions[j];
        let b = if j + 1 < self.arc_count() { self.junctions[j + 1] } else { self.junctions[0] + TAU };
        (a, b)
    }

    pub fn arc_params(&self, j: usize, n: usize) -> Vec<Complex64> {
        let (a, b) = self.arc_interval(j);
        (0..=n)
            .map(|k| Complex64::from_polar(self.radius, a + (b - a) * k as f64 / n as f64))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub circles: Vec<CirclePartition>,
}

/// Samples per arc in partition checks.
pub const ARC_SAMPLES: usize = 32;

/// Junction rotations tried for each arc count.
pub const PHASES: usize = 8;

/// Largest number of arcs per circle tried by [`split_boundary`].
pub const MAX_ARCS: usize = 1 << 14;

fn in_d_delta(d: &ConvexBody, delta: f64, p: PointC2) -> bool {
    d.signed_distance(p) < delta
}

/// Splits each boundary circle into `J ≥ 3` arcs whose images lie in one slab and in `D_δ`.
pub fn split_boundary(x: &AnalyticMap, net: &TangentNet, d: &ConvexBody, delta: f64) -> Result<BoundaryPartition> {
    split_boundary_with(x, net, d, delta, 3)
}

/// As [`split_boundary`], starting the arc count at `min_arcs` (at least 3).
///
/// For each arc count the junction rotation with the largest slab margin wins.
pub fn split_boundary_with(
    x: &AnalyticMap,
    net: &TangentNet,
    d: &ConvexBody,
    delta: f64,
    min_arcs: usize,
) -> Result<BoundaryPartition> {
    if net.is_empty() {
        return Err(Error::Empty("net skeleton"));
    }
    for r in x.domain.boundary_radii() {
        for z in AnalyticMap::circle_params(r, BOUNDARY_SAMPLES) {
            let p = x.eval(z);
            if !net.contains(p) || !in_d_delta(d, delta, p) {
                return Err(Error::verification("boundary hypothesis", format!("X({z}) = {p:?} is not in T ∩ D_δ")));
            }
        }
    }
    let mut circles = Vec::new();
    for r in x.domain.boundary_radii() {
        let mut j_count = min_arcs.max(3);
        let part = loop {
            if j_count > MAX_ARCS {
                return Err(Error::verification(
                    "boundary split",
                    format!("no slab assignment with at most {MAX_ARCS} arcs on |z| = {r}"),
                ));
            }
            let mut chosen: Option<(f64, CirclePartition)> = None;
            for phase in 0..PHASES {
                let shift = TAU * phase as f64 / (PHASES * j_count) as f64;
                let junctions: Vec<f64> = (0..j_count).map(|k| shift + TAU * k as f64 / j_count as f64).collect();
                let mut part = CirclePartition { radius: r, junctions, assigned: vec![] };
                let mut margin = f64::INFINITY;
                for j in 0..j_count {
                    let imgs: Vec<PointC2> = part.arc_params(j, ARC_SAMPLES).iter().map(|z| x.eval(*z)).collect();
                    let best = (0..net.len())
                        .map(|i| {
                            let s = net.slab(i);
                            let m = imgs.iter().map(|q| s.halfwidth - s.offset(*q).abs()).fold(f64::INFINITY, f64::min);
                            (i, m)
                        })
                        .max_by(|a, b| a.1.total_cmp(&b.1));
                    match best {
                        Some((i, m)) if m > 0.0 => {
                            part.assigned.push(i);
                            margin = margin.min(m);
                        }
                        _ => {
                            margin = f64::NEG_INFINITY;
                            break;
                        }
                    }
                }
                if margin > 0.0 && chosen.as_ref().map_or(true, |c| margin > c.0) {
                    chosen = Some((margin, part));
                }
            }
            if let Some((_, part)) = chosen {
                break part;
            }
            j_count *= 2;
        };
        circles.push(part);
    }
    let out = BoundaryPartition { circles };
    validate_partition(x, net, d, delta, &out)?;
    Ok(out)
}

/// Checks coverage, shared endpoints, disjointness and slab containment.
pub fn validate_partition(
    x: &AnalyticMap,
    net: &TangentNet,
    d: &ConvexBody,
    delta: f64,
    part: &BoundaryPartition,
) -> Result<()> {
    let fail = |detail: String| Err(Error::verification("boundary partition", detail));
    if part.circles.len() != x.domain.boundary_radii().len() {
        return fail("circle count differs from the domain".into());
    }
    for c in &part.circles {
        let j = c.arc_count();
        if j < 3 || c.assigned.len() != j {
            return fail(format!("{j} arcs"));
        }
        if c.junctions.windows(2).any(|w| w[1] <= w[0]) || c.junctions[j - 1] - c.junctions[0] >= TAU {
            return fail("junctions not strictly increasing within one turn".into());
        }
        for k in 0..j {
            let slab = net.slab(c.assigned[k]);
            for z in c.arc_params(k, ARC_SAMPLES) {
                let p = x.eval(z);
                if !slab.contains(p) || !in_d_delta(d, delta, p) {
                    return fail(format!("arc {k}: X({z}) outside its slab or D_δ"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointC2;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn nodal() -> AnalyticMap {
        AnalyticMap::polynomial(1.5, vec![c(0., 0.), c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(-1., 0.), c(0., 0.), c(1., 0.)]).unwrap()
    }

    #[test]
    fn proxy_matches_stored_form() {
        use crate::approx::{runge_fit, CompactSet, CompactaSpec, FitOptions, Norm, PiecewiseTarget, SetTarget, TargetFn};
        let spec = CompactaSpec {
            sets: vec![CompactSet::disc(c(0., 0.), 1.0, 96), CompactSet::disc(c(2.5, 0.), 0.3, 48)],
            connected_complement: true,
        };
        let target = PiecewiseTarget {
            sets: vec![
                SetTarget { func: TargetFn::Constant(c(0., 0.)), norm: Norm::C1 },
                SetTarget { func: TargetFn::Constant(c(2.0, 1.0)), norm: Norm::C0 },
            ],
        };
        let (phi, _) = runge_fit(&spec, &target, FitOptions { degree: 50, scale: Some(3.0) }).unwrap();
        let x1 = Series::polynomial(vec![c(0., 0.), c(1., 0.)]);
        let map = AnalyticMap::new(Domain::Disc { radius: 3.0 }, x1, phi.clone()).unwrap();
        assert!(map.fast.is_some());
        for z in (Domain::Disc { radius: 3.0 }).polar_grid(13, 37) {
            let (v, d) = phi.value_deriv(z);
            let (p, q) = map.eval_deriv(z);
            assert!((p.z2 - v).norm() <= 1e-6 * v.norm().max(1.0), "{z}");
            assert!((q.z2 - d).norm() <= 1e-6 * d.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn c1_examples() {
        let f = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(1., 0.)]).unwrap();
        let g = AnalyticMap::polynomial(1.0, vec![], vec![c(0., 0.), c(1., 0.)]).unwrap();
        let k = Domain::Disc { radius: 1.0 }.polar_grid(10, 64);
        assert_eq!(c1_distance(&f, &f, &k).unwrap(), 0.0);
        assert!((c1_distance(&f, &g, &k).unwrap() - 2.0).abs() < 1e-12);
        let h = AnalyticMap::polynomial(1.0, vec![c(0.3, 0.4)], vec![c(0., 0.), c(1., 0.)]).unwrap();
        assert!((c1_distance(&h, &g, &k).unwrap() - 0.5).abs() < 1e-12);
        let other = AnalyticMap::polynomial(2.0, vec![], vec![c(0., 0.), c(1., 0.)]).unwrap();
        assert_eq!(c1_distance(&other, &g, &k).unwrap(), 0.0);
        let wide = Domain::Disc { radius: 2.0 }.polar_grid(10, 64);
        assert!(c1_distance(&other, &g, &wide).is_err());
    }

    #[test]
    fn length_examples() {
        let x = AnalyticMap::flat_disc(1.0).unwrap();
        let seg = ParamPath::Polyline(vec![c(0., 0.), c(1., 0.)]);
        assert!((image_length(&x, &seg).unwrap() - 1.0).abs() < 1e-12);
        let circ = ParamPath::Arc { center: c(0., 0.), radius: 1.0, start: 0.0, end: TAU };
        assert!((image_length(&x, &circ).unwrap() - TAU).abs() < 1e-10);
        let sq = AnalyticMap::new(
            Domain::Annulus { inner: 0.5, outer: 2.0 },
            Series::polynomial(vec![c(0., 0.), c(0., 0.), c(1., 0.)]),
            Series::zero(),
        )
        .unwrap();
        let seg = ParamPath::Polyline(vec![c(0.5, 0.), c(1., 0.)]);
        assert!((image_length(&sq, &seg).unwrap() - 0.75).abs() < 1e-12);
        let out = ParamPath::Polyline(vec![c(0., 0.), c(3., 0.)]);
        assert!(image_length(&x, &out).is_err());
    }

    #[test]
    fn squaring_map_is_rejected() {
        let r = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(0., 0.), c(1., 0.)], vec![]);
        assert!(matches!(r, Err(Error::NotImmersion(_))));
    }

    #[test]
    fn laurent_derivative() {
        let s = Series { scale: 2.0, low: -2, coeffs: vec![c(1., 0.), c(0., 0.), c(0., 0.), c(3., 1.)], recurrence: None, parts: vec![] };
        let z = c(0.7, -0.4);
        let (v, d) = s.value_deriv(z);
        let w = z / 2.0;
        assert!((v - (w.powi(-2) + c(3., 1.) * w)).norm() < 1e-12);
        let want = (-2.0 * w.powi(-3) + c(3., 1.)) / 2.0;
        assert!((d - want).norm() < 1e-12);
        let r = s.rescaled(0.5);
        assert!((r.value(z) - v).norm() < 1e-12);
    }

    #[test]
    fn double_point_examples() {
        assert!(double_points(&AnalyticMap::flat_disc(1.0).unwrap(), 1e-10).unwrap().is_empty());
        let dps = double_points(&nodal(), 1e-10).unwrap();
        assert_eq!(dps.len(), 1);
        let d = dps[0];
        assert!((d.p - c(-1., 0.)).norm() < 1e-9 && (d.q - c(1., 0.)).norm() < 1e-9);
        assert!(d.w.distance(PointC2::new(c(1., 0.), c(0., 0.))) < 1e-9);
        assert!(d.normal_crossing);
    }

    #[test]
    fn double_cover_is_not_generic() {
        let x = AnalyticMap::new(
            Domain::Annulus { inner: 0.5, outer: 1.0 },
            Series::polynomial(vec![c(0., 0.), c(0., 0.), c(1., 0.)]),
            Series::polynomial(vec![c(0., 0.), c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        )
        .unwrap();
        assert!(matches!(double_points(&x, 1e-10), Err(Error::NotGeneric(_))));
    }

    #[test]
    fn distance_examples() {
        let x = AnalyticMap::flat_disc(1.0).unwrap();
        let (p, q) = (c(-0.6, 0.1), c(0.5, 0.4));
        let v = image_distance(&x, p, q, 81).unwrap();
        assert!((v - (p - q).norm()).abs() < 0.01 * (p - q).norm(), "{v}");
        let n = nodal();
        assert!(image_distance(&n, c(-1., 0.), c(1., 0.), 61).unwrap() < 1e-9);
        let glued = image_distance(&n, c(0.99, 0.), c(-0.99, 0.), 81).unwrap();
        let plain = intrinsic_distance(&n, c(0.99, 0.), c(-0.99, 0.), 81).unwrap();
        assert!(glued < plain, "{glued} {plain}");
    }

    #[test]
    fn transversality_examples() {
        let ball = ConvexBody::centered_ball(1.0).unwrap();
        assert!(transversal_boundary(&AnalyticMap::flat_disc(1.0).unwrap(), &ball, TRANSVERSAL_TOL).unwrap());
        assert!(transversal_boundary(&AnalyticMap::flat_disc(0.5).unwrap(), &ball, TRANSVERSAL_TOL).is_err());
        // A tiny cap in the complex line z₂ = const is tangent to the sphere to first order.
        let e = 1e-8;
        let cap = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(e, 0.)], vec![c((1.0 - e * e).sqrt(), 0.)]).unwrap();
        assert!(!transversal_boundary(&cap, &ball, TRANSVERSAL_TOL).unwrap());
    }

    fn equatorial_net(k: usize, radius: f64) -> TangentNet {
        let ball = ConvexBody::centered_ball(1.0).unwrap();
        let skel = (0..k)
            .map(|j| PointC2::new(Complex64::from_polar(1.0, TAU * j as f64 / k as f64), c(0., 0.)))
            .collect();
        TangentNet::new(&ball, skel, radius).unwrap()
    }

    #[test]
    fn split_examples() {
        let ball = ConvexBody::centered_ball(1.0).unwrap();
        let delta = 0.05;
        let x = AnalyticMap::flat_disc(1.0 - delta).unwrap();
        let net = equatorial_net(12, 0.2);
        let part = split_boundary(&x, &net, &ball, delta).unwrap();
        assert!(part.circles[0].arc_count() >= 3);
        validate_partition(&x, &net, &ball, delta, &part).unwrap();
        assert!(split_boundary(&x, &equatorial_net(12, 0.01), &ball, delta).is_err());
        // Three slabs of radius 0.6 each contain a third of the circle of radius 0.95.
        let three = equatorial_net(3, 0.6);
        let part = split_boundary(&x, &three, &ball, delta).unwrap();
        assert_eq!(part.circles[0].arc_count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn length_refinement_invariant(a in -0.7f64..0.7, b in -0.7f64..0.7, k in 1usize..6) {
            let x = nodal();
            let (p, q) = (c(a, b), c(b, -a));
            let coarse = image_length(&x, &ParamPath::Polyline(vec![p, q])).unwrap();
            let pts = (0..=k).map(|i| p + (q - p) * (i as f64 / k as f64)).collect();
            let fine = image_length(&x, &ParamPath::Polyline(pts)).unwrap();
            prop_assert!((coarse - fine).abs() < 1e-9);
        }

        #[test]
        fn gluing_never_increases_distance(a in -1.2f64..1.2, b in -1.2f64..1.2) {
            let x = nodal();
            let (p, q) = (c(a, 0.1), c(b, -0.2));
            let glued = image_distance(&x, p, q, 41).unwrap();
            let plain = intrinsic_distance(&x, p, q, 41).unwrap();
            prop_assert!(glued <= plain + 1e-12);
        }
    }
}
