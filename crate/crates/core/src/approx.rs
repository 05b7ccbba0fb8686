//! Polynomial fits standing in for Runge and Mergelyan approximation.
//!
//! Fits are weighted least squares in a basis orthogonalized against the
//! sample inner product. Every fit reports the errors it actually achieved;
//! nothing here promises that a budget is met.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{AnalyticMap, Domain, Recurrence, Series};
use crate::error::{Error, Result};
use crate::geometry::PointC2;

const TAU: f64 = std::f64::consts::TAU;

/// One compact set, given by samples (boundary samples for filled sets).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactSet {
    pub samples: Vec<Complex64>,
    /// Samples are the ordered boundary of a filled region.
    pub filled: bool,
}

impl CompactSet {
    pub fn disc(center: Complex64, radius: f64, n: usize) -> Self {
        let samples = (0..n).map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / n as f64)).collect();
        CompactSet { samples, filled: true }
    }

    /// Boundary of `{r0 ≤ |z| ≤ r1, t0 ≤ arg z ≤ t1}`, counter-clockwise.
    pub fn polar_rect(r0: f64, r1: f64, t0: f64, t1: f64, n_side: usize) -> Self {
        let mut s = Vec::new();
        let n = n_side.max(2);
        for k in 0..n {
            s.push(Complex64::from_polar(r0 + (r1 - r0) * k as f64 / n as f64, t0));
        }
        for k in 0..n {
            s.push(Complex64::from_polar(r1, t0 + (t1 - t0) * k as f64 / n as f64));
        }
        for k in 0..n {
            s.push(Complex64::from_polar(r1 - (r1 - r0) * k as f64 / n as f64, t1));
        }
        for k in 0..n {
            s.push(Complex64::from_polar(r0, t1 - (t1 - t0) * k as f64 / n as f64));
        }
        CompactSet { samples: s, filled: true }
    }

    /// An arc given by its samples.
    pub fn curve(samples: Vec<Complex64>) -> Self {
        CompactSet { samples, filled: false }
    }

    /// Quadrature-like weights: half the distance to the two neighbours.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.samples.len();
        (0..n)
            .map(|i| {
                let prev = if i > 0 { Some(self.samples[i - 1]) } else if self.filled { Some(self.samples[n - 1]) } else { None };
                let next = if i + 1 < n { Some(self.samples[i + 1]) } else if self.filled { Some(self.samples[0]) } else { None };
                let a = prev.map(|p| (p - self.samples[i]).norm()).unwrap_or(0.0);
                let b = next.map(|p| (p - self.samples[i]).norm()).unwrap_or(0.0);
                (0.5 * (a + b)).max(1e-12)
            })
            .collect()
    }

    /// Even-odd point-in-polygon for filled sets.
    pub fn encloses(&self, z: Complex64) -> bool {
        if !self.filled {
            return false;
        }
        let n = self.samples.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (self.samples[i], self.samples[(i + 1) % n]);
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if z.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Disjoint compacta with the caller's connected-complement declaration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactaSpec {
    pub sets: Vec<CompactSet>,
    pub connected_complement: bool,
}

/// Minimum samples per component.
pub const MIN_SAMPLES: usize = 16;

impl CompactaSpec {
    /// Smallest distance between samples of different sets; errors on overlap.
    pub fn check(&self) -> Result<f64> {
        if !self.connected_complement {
            return Err(Error::Invalid("compacta must have connected complement".into()));
        }
        let mut gap = f64::INFINITY;
        for (i, a) in self.sets.iter().enumerate() {
            if a.samples.len() < MIN_SAMPLES {
                return Err(Error::Invalid(format!("set {i} has {} samples", a.samples.len())));
            }
            for b in &self.sets[i + 1..] {
                for p in &a.samples {
                    if b.encloses(*p) {
                        return Err(Error::Overlap(0.0));
                    }
                    for q in &b.samples {
                        gap = gap.min((p - q).norm());
                    }
                }
                if b.samples.iter().any(|q| a.encloses(*q)) {
                    return Err(Error::Overlap(0.0));
                }
            }
        }
        if gap <= 0.0 {
            return Err(Error::Overlap(gap));
        }
        Ok(gap)
    }
}

/// Target function on one set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TargetFn {
    Constant(Complex64),
    Series(Series),
    /// Values (and optionally derivatives) at the set's samples.
    Samples { values: Vec<Complex64>, derivs: Option<Vec<Complex64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    C0,
    C1,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetTarget {
    pub func: TargetFn,
    pub norm: Norm,
}

impl SetTarget {
    fn value_deriv(&self, k: usize, z: Complex64) -> Result<(Complex64, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.func {
            TargetFn::Constant(c) => Ok((*c, zero)),
            TargetFn::Series(s) => Ok(s.value_deriv(z)),
            TargetFn::Samples { values, derivs } => {
                let v = *values.get(k).ok_or_else(|| Error::Invalid("target sample count".into()))?;
                let d = match derivs {
                    Some(d) => *d.get(k).ok_or_else(|| Error::Invalid("target derivative count".into()))?,
                    None if self.norm == Norm::C1 => {
                        return Err(Error::Invalid("C1 target without derivatives".into()));
                    }
                    None => zero,
                };
                Ok((v, d))
            }
        }
    }
}

/// One target per set, in order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PiecewiseTarget {
    pub sets: Vec<SetTarget>,
}

/// Achieved sup errors on one set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetError {
    pub c0: f64,
    pub c1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub per_set: Vec<SetError>,
    pub degree: usize,
    /// Condition number of the weighted least-squares matrix.
    pub condition_estimate: f64,
    /// Largest monomial coefficient norm among the orthonormal basis polynomials.
    pub basis_growth: f64,
    /// Weighted root-sum-square residual.
    pub residual: f64,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Largest accepted condition estimate.
pub const MAX_CONDITION: f64 = 1e13;

/// Variable normalization `w = z / scale` used by fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub degree: usize,
    /// `None`: the largest sample modulus.
    pub scale: Option<f64>,
}

/// Weighted least-squares polynomial over the compacta.
pub fn runge_fit(spec: &CompactaSpec, target: &PiecewiseTarget, opts: FitOptions) -> Result<(Series, FitReport)> {
    spec.check()?;
    fit_core(spec, target, opts)
}

/// The fit itself, without the disjointness test (Mergelyan arcs touch the disc).
fn fit_core(spec: &CompactaSpec, target: &PiecewiseTarget, opts: FitOptions) -> Result<(Series, FitReport)> {
    if target.sets.len() != spec.sets.len() {
        return Err(Error::Invalid("one target per compact set required".into()));
    }
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for set in &spec.sets {
        pts.extend_from_slice(&set.samples);
        wts.extend(set.weights());
    }
    if pts.is_empty() {
        return Err(Error::Empty("compacta"));
    }
    let scale = opts
        .scale
        .unwrap_or_else(|| pts.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .max(1e-12);
    let w: Vec<Complex64> = pts.iter().map(|z| z / scale).collect();
    let basis = arnoldi(&w, &wts, opts.degree)?;

    let mut rows_q: Vec<Vec<Complex64>> = Vec::new();
    let mut rhs: Vec<Complex64> = Vec::new();
    let mut offset = 0;
    for (set, t) in spec.sets.iter().zip(&target.sets) {
        for (k, z) in set.samples.iter().enumerate() {
            let i = offset + k;
            let sw = wts[i].sqrt();
            let (v, d) = t.value_deriv(k, *z)?;
            rows_q.push(basis.q.iter().map(|col| col[i] * sw).collect());
            rhs.push(v * sw);
            if t.norm == Norm::C1 {
                rows_q.push(basis.dq.iter().map(|col| col[i] * sw).collect());
                rhs.push(d * scale * sw);
            }
        }
        offset += set.samples.len();
    }
    let ncol = opts.degree + 1;
    let a = DMatrix::from_fn(rows_q.len(), ncol, |r, c| rows_q[r][c]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let sol = svd.solve(&b, 1e-14 * smax).map_err(|e| Error::Invalid(e.to_string()))?;
    let residual = (&a * &sol - &b).norm();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let coeffs: Vec<Complex64> = sol.iter().copied().collect();
    let recurrence = Some(Recurrence { q0: basis.q0, h: basis.h });
    let series = Series { scale, low: 0, coeffs, recurrence, parts: vec![] };
    let per_set = set_errors(&series, spec, target)?;
    Ok((series, FitReport { per_set, degree: opts.degree, condition_estimate: cond, basis_growth: basis.growth, residual }))
}

fn set_errors(s: &Series, spec: &CompactaSpec, target: &PiecewiseTarget) -> Result<Vec<SetError>> {
    let mut out = Vec::new();
    for (set, t) in spec.sets.iter().zip(&target.sets) {
        let (mut c0, mut d1) = (0.0f64, 0.0f64);
        for (k, z) in set.samples.iter().enumerate() {
            let (v, d) = s.value_deriv(*z);
            let (tv, td) = t.value_deriv(k, *z)?;
            c0 = c0.max((v - tv).norm());
            if t.norm == Norm::C1 {
                d1 = d1.max((d - td).norm());
            }
        }
        out.push(SetError { c0, c1: c0.max(d1) });
    }
    Ok(out)
}

struct Basis {
    /// Basis values per column at the sample points.
    q: Vec<Vec<Complex64>>,
    /// Basis derivatives in `w`.
    dq: Vec<Vec<Complex64>>,
    q0: f64,
    h: Vec<Vec<Complex64>>,
    growth: f64,
}

/// Weighted Arnoldi with one re-orthogonalization pass.
fn arnoldi(w: &[Complex64], wts: &[f64], degree: usize) -> Result<Basis> {
    let n = w.len();
    let zero = Complex64::new(0.0, 0.0);
    let ip = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        (0..n).map(|i| a[i] * b[i].conj() * wts[i]).sum()
    };
    let total: f64 = wts.iter().sum();
    let q0 = Complex64::new(1.0 / total.sqrt(), 0.0);
    let mut q = vec![vec![q0; n]];
    let mut dq = vec![vec![zero; n]];
    let mut hess = Vec::with_capacity(degree);
    for k in 0..degree {
        let mut v: Vec<Complex64> = (0..n).map(|i| w[i] * q[k][i]).collect();
        let mut h = vec![zero; k + 1];
        for _ in 0..2 {
            for j in 0..=k {
                let c = ip(&v, &q[j]);
                h[j] += c;
                for i in 0..n {
                    v[i] -= c * q[j][i];
                }
            }
        }
        let hn = ip(&v, &v).re.sqrt();
        if !(hn > 1e-300) {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let qn: Vec<Complex64> = v.iter().map(|x| x / hn).collect();
        let dn: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = q[k][i] + w[i] * dq[k][i];
                for j in 0..=k {
                    s -= h[j] * dq[j][i];
                }
                s / hn
            })
            .collect();
        h.push(Complex64::new(hn, 0.0));
        hess.push(h);
        q.push(qn);
        dq.push(dn);
    }
    let rec = Recurrence { q0: q0.re, h: hess };
    let growth = rec
        .monomials(degree)
        .iter()
        .map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        * total.sqrt();
    Ok(Basis { q, dq, q0: rec.q0, h: rec.h, growth: growth.max(1.0) })
}

/// A curve target outside the disc: parameter samples with prescribed image points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcTarget {
    pub params: Vec<Complex64>,
    pub values: Vec<PointC2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergelyanReport {
    /// C¹ distance to `X` on the inner disc (sampled on a polar grid).
    pub disc_c1: f64,
    /// C⁰ error along each arc.
    pub arc_c0: Vec<f64>,
    pub budget: f64,
    pub exceeded: bool,
    pub degree: usize,
    pub fits: [FitReport; 2],
}

/// Fits one polynomial map on the disc of radius `outer` that stays C¹-close
/// to `x` on its own disc and follows each arc target in C⁰.
pub fn mergelyan_extend(
    x: &AnalyticMap,
    arcs: &[ArcTarget],
    outer: f64,
    budget: f64,
    degree: usize,
) -> Result<(AnalyticMap, MergelyanReport)> {
    let Domain::Disc { radius: rho } = x.domain else {
        return Err(Error::DomainMismatch("mergelyan_extend needs a disc".into()));
    };
    if !(outer > rho) {
        return Err(Error::Invalid(format!("outer radius {outer} must exceed {rho}")));
    }
    for a in arcs {
        if a.params.len() != a.values.len() || a.params.is_empty() {
            return Err(Error::Invalid("arc target lengths".into()));
        }
        if a.params.iter().any(|z| z.norm() > outer * (1.0 + 1e-12)) {
            return Err(Error::DomainMismatch("arc leaves the outer disc".into()));
        }
    }
    let n_circle = 256.max(4 * degree);
    let circle = CompactSet::disc(Complex64::new(0.0, 0.0), rho, n_circle);
    let mut sets = vec![circle.clone()];
    let mut t1 = vec![];
    let mut t2 = vec![];
    let (mut v1, mut d1, mut v2, mut d2) = (vec![], vec![], vec![], vec![]);
    for z in &circle.samples {
        let (p, dp) = x.eval_deriv(*z);
        v1.push(p.z1);
        d1.push(dp.z1);
        v2.push(p.z2);
        d2.push(dp.z2);
    }
    t1.push(SetTarget { func: TargetFn::Samples { values: v1, derivs: Some(d1) }, norm: Norm::C1 });
    t2.push(SetTarget { func: TargetFn::Samples { values: v2, derivs: Some(d2) }, norm: Norm::C1 });
    for a in arcs {
        // Only the part outside the closed inner disc is a separate compact piece.
        let keep: Vec<usize> = (0..a.params.len()).filter(|&k| a.params[k].norm() > rho * (1.0 + 1e-9)).collect();
        if keep.is_empty() {
            continue;
        }
        let mut samples: Vec<Complex64> = keep.iter().map(|&k| a.params[k]).collect();
        let mut vals: Vec<PointC2> = keep.iter().map(|&k| a.values[k]).collect();
        while samples.len() < MIN_SAMPLES {
            // Densify by midpoint insertion, interpolating values linearly.
            let mut s2 = vec![samples[0]];
            let mut w2 = vec![vals[0]];
            for k in 1..samples.len() {
                s2.push(0.5 * (samples[k - 1] + samples[k]));
                w2.push((vals[k - 1] + vals[k]) * 0.5);
                s2.push(samples[k]);
                w2.push(vals[k]);
            }
            if s2.len() == samples.len() {
                return Err(Error::Invalid("arc target has a single sample".into()));
            }
            samples = s2;
            vals = w2;
        }
        sets.push(CompactSet::curve(samples));
        t1.push(SetTarget { func: TargetFn::Samples { values: vals.iter().map(|v| v.z1).collect(), derivs: None }, norm: Norm::C0 });
        t2.push(SetTarget { func: TargetFn::Samples { values: vals.iter().map(|v| v.z2).collect(), derivs: None }, norm: Norm::C0 });
    }
    // Arcs start on the inner circle, so test disjointness away from it.
    let spec = CompactaSpec { sets, connected_complement: true };
    check_arcs_disjoint(&spec, rho)?;
    let opts = FitOptions { degree, scale: Some(outer) };
    let (s1, r1) = fit_core(&spec, &PiecewiseTarget { sets: t1 }, opts)?;
    let (s2, r2) = fit_core(&spec, &PiecewiseTarget { sets: t2 }, opts)?;
    let y = AnalyticMap::new(Domain::Disc { radius: outer }, s1, s2)?;
    let grid = x.domain.polar_grid(24, n_circle);
    let mut disc_c1 = 0.0f64;
    for z in &grid {
        let (a, da) = x.eval_deriv(*z);
        let (b, db) = y.eval_deriv(*z);
        disc_c1 = disc_c1.max((a - b).norm()).max((da - db).norm());
    }
    let arc_c0 = arcs
        .iter()
        .map(|a| a.params.iter().zip(&a.values).map(|(z, v)| y.eval(*z).distance(*v)).fold(0.0, f64::max))
        .collect();
    let exceeded = !(disc_c1 < budget);
    let report = MergelyanReport { disc_c1, arc_c0, budget, exceeded, degree, fits: [r1, r2] };
    Ok((y, report))
}

fn check_arcs_disjoint(spec: &CompactaSpec, rho: f64) -> Result<()> {
    for (i, a) in spec.sets.iter().enumerate().skip(1) {
        for b in spec.sets.iter().skip(i + 1) {
            for p in &a.samples {
                for q in &b.samples {
                    if (p - q).norm() < 1e-9 && p.norm() > rho * (1.0 + 1e-6) {
                        return Err(Error::Overlap((p - q).norm()));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Tiny seeded random perturbation of the coefficients (general-position nudge).
pub fn nudge(s: &Series, size: f64, seed: u64) -> Series {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = s
        .coeffs
        .iter()
        .map(|c| c + Complex64::new(rng.gen_range(-size..size), rng.gen_range(-size..size)))
        .collect();
    Series { coeffs, ..s.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_discs() -> (CompactaSpec, PiecewiseTarget) {
        let spec = CompactaSpec {
            sets: vec![CompactSet::disc(c(0., 0.), 0.5, 128), CompactSet::disc(c(2., 0.), 0.3, 128)],
            connected_complement: true,
        };
        let target = PiecewiseTarget {
            sets: vec![
                SetTarget { func: TargetFn::Constant(c(0., 0.)), norm: Norm::C1 },
                SetTarget { func: TargetFn::Constant(c(5., 0.)), norm: Norm::C0 },
            ],
        };
        (spec, target)
    }

    fn worst(r: &FitReport) -> f64 {
        r.per_set.iter().map(|e| e.c1).fold(0.0, f64::max)
    }

    #[test]
    fn exact_polynomial_is_reproduced() {
        let p = Series::polynomial(vec![c(1., 2.), c(-0.5, 0.), c(0., 0.3), c(0.2, -0.1)]);
        let spec = CompactaSpec { sets: vec![CompactSet::disc(c(0.2, 0.), 1.0, 64)], connected_complement: true };
        let t = PiecewiseTarget { sets: vec![SetTarget { func: TargetFn::Series(p.clone()), norm: Norm::C1 }] };
        let (s, r) = runge_fit(&spec, &t, FitOptions { degree: 6, scale: None }).unwrap();
        assert!(worst(&r) < 1e-10, "{r:?}");
        assert!((s.value(c(0.3, 0.1)) - p.value(c(0.3, 0.1))).norm() < 1e-10);
    }

    #[test]
    fn runge_two_discs_decay() {
        let (spec, t) = two_discs();
        let e = |d: usize| worst(&runge_fit(&spec, &t, FitOptions { degree: d, scale: None }).unwrap().1);
        let (e20, e40, e80) = (e(20), e(40), e(80));
        assert!(e80 < e40 && e40 < e20, "{e20} {e40} {e80}");
        assert!(e40 * 10.0 <= e20, "{e20} {e40}");
    }

    #[test]
    fn single_set_fit() {
        let spec = CompactaSpec { sets: vec![CompactSet::disc(c(0., 0.), 0.5, 64)], connected_complement: true };
        let exp = Series::polynomial((0..30).map(|k| c(1.0 / (1..=k).map(|i| i as f64).product::<f64>(), 0.)).collect());
        let t = PiecewiseTarget { sets: vec![SetTarget { func: TargetFn::Series(exp), norm: Norm::C1 }] };
        let (_, r) = runge_fit(&spec, &t, FitOptions { degree: 12, scale: None }).unwrap();
        assert!(worst(&r) < 1e-8);
    }

    #[test]
    fn overlap_and_flags_rejected() {
        let (mut spec, t) = two_discs();
        spec.sets[1] = CompactSet::disc(c(0.1, 0.), 0.3, 64);
        assert!(matches!(runge_fit(&spec, &t, FitOptions { degree: 4, scale: None }), Err(Error::Overlap(_))));
        let (mut spec, t) = two_discs();
        spec.connected_complement = false;
        assert!(runge_fit(&spec, &t, FitOptions { degree: 4, scale: None }).is_err());
    }

    #[test]
    fn report_json_shape() {
        let (spec, t) = two_discs();
        let (_, r) = runge_fit(&spec, &t, FitOptions { degree: 8, scale: None }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["per_set"][1]["c0"].is_number());
        assert_eq!(v["degree"], 8);
        assert!(v["condition_estimate"].as_f64().unwrap() >= 1.0);
    }

    #[test]
    fn mergelyan_continuation_is_exact() {
        let x = AnalyticMap::polynomial(1.0, vec![c(0., 0.), c(1., 0.), c(0.1, 0.)], vec![c(0., 0.), c(0., 0.), c(0., 0.), c(0.2, 0.)]).unwrap();
        let arcs: Vec<ArcTarget> = (0..3)
            .map(|j| {
                let dir = Complex64::from_polar(1.0, 2.0 * j as f64);
                let params: Vec<Complex64> = (0..40).map(|k| dir * (1.0 + k as f64 / 39.0)).collect();
                let values = params.iter().map(|z| x.eval(*z)).collect();
                ArcTarget { params, values }
            })
            .collect();
        let (y, r) = mergelyan_extend(&x, &arcs, 2.0, 1e-6, 8).unwrap();
        assert!(r.disc_c1 < 1e-10 && r.arc_c0.iter().all(|e| *e < 1e-10), "{r:?}");
        assert!(!r.exceeded);
        assert_eq!(y.domain, Domain::Disc { radius: 2.0 });
        let (_, r0) = mergelyan_extend(&x, &arcs, 2.0, 0.0, 8).unwrap();
        assert!(r0.exceeded);
    }

    #[test]
    fn mergelyan_segment_error_decreases() {
        let x = AnalyticMap::flat_disc(1.0).unwrap();
        let v = PointC2::new(c(0., 0.), c(1., 0.));
        let params: Vec<Complex64> = (0..60).map(|k| c(1.0 + k as f64 / 59.0, 0.)).collect();
        let values = params.iter().map(|z| x.eval(c(1., 0.)) + v * (z.re - 1.0)).collect();
        let arcs = vec![ArcTarget { params, values }];
        let err = |d: usize| mergelyan_extend(&x, &arcs, 2.0, 1.0, d).unwrap().1.arc_c0[0];
        let (e10, e30) = (err(10), err(30));
        assert!(e30 < e10, "{e10} {e30}");
        let bad = vec![ArcTarget { params: vec![c(3., 0.)], values: vec![PointC2::ZERO] }];
        assert!(mergelyan_extend(&x, &bad, 2.0, 1.0, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn residual_monotone_in_degree(d in 2usize..30, shift in 1.5f64..3.0) {
            let (mut spec, t) = two_discs();
            spec.sets[1] = CompactSet::disc(c(shift, 0.), 0.3, 128);
            let r1 = runge_fit(&spec, &t, FitOptions { degree: d, scale: None }).unwrap().1;
            let r2 = runge_fit(&spec, &t, FitOptions { degree: d + 1, scale: None }).unwrap().1;
            prop_assert!(r2.residual <= r1.residual * (1.0 + 1e-9) + 1e-13);
        }

        #[test]
        fn reported_c1_bounds_derivative_error(d in 2usize..25) {
            let (spec, t) = two_discs();
            let (s, r) = runge_fit(&spec, &t, FitOptions { degree: d, scale: None }).unwrap();
            for z in &spec.sets[0].samples {
                prop_assert!(s.value_deriv(*z).1.norm() <= r.per_set[0].c1 + 1e-12);
            }
        }
    }
}
