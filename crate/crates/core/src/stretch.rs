//! Stretching a disc-like curve out of a larger convex body along the slabs
//! of a tangent net.
//!
//! The parameter domain grows from the inner disc `R̄` (radius `r_in`) to a
//! disc `M̄` of radius `outer`. Radial segments at the boundary junctions cut
//! the annulus `M̄ ∖ R` into sectors `𝔄_j`; each sector owns one slab of the
//! net and a polar rectangle `K_j` touching the outer circle. Step `n`
//! replaces the `u`-component of the map by a Runge fit that follows the old
//! component off `𝔄_σ(n)` and a constant `ζ_n` on `K_σ(n)`, keeping the
//! `w = ν`-component untouched.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{
    mergelyan_extend, runge_fit, ArcTarget, CompactSet, CompactaSpec, FitOptions, FitReport, Norm, PiecewiseTarget,
    SetTarget, TargetFn,
};
use crate::convex::ConvexBody;
use crate::curve::{c1_distance, split_boundary_with, AnalyticMap, CirclePartition, Domain, Series};
use crate::error::{Error, Result};
use crate::geometry::{complex_orthogonal, hermitian, jmap, ComplexFrame, PointC2};
use crate::net::{common_tangent_direction, generic_position, TangentNet};

const TAU: f64 = std::f64::consts::TAU;

/// How the curve is continued past the inner disc before stretching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttachMode {
    /// The map itself on a larger disc; rays are radial and grow until the
    /// projection rule holds.
    Radial,
    /// Straight segments along common tangent directions, fitted together
    /// with the inner disc on the disc of radius `outer`.
    Segments { outer: f64, degree: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StretchOptions {
    pub delta: f64,
    /// Runge degree of each stretch fit.
    pub degree: usize,
    /// Smallest number of boundary arcs tried.
    pub min_arcs: usize,
    /// Factor applied to the projection rule `> 1 + diam(D′)`.
    pub headroom: f64,
    /// Largest outer radius tried by the radial continuation.
    pub max_outer: f64,
    /// Absolute margin of `|ζ|` over the separating support value.
    pub zeta_margin: f64,
    /// Angular padding of `K` around the mouth crossing (radians).
    pub k_pad: f64,
    /// Radial depth of `K` as a fraction of the outer radius.
    pub k_depth: f64,
    pub attach: AttachMode,
    /// Polar grid for the property checks.
    pub check_radial: usize,
    pub check_angular: usize,
    /// Fit samples per unit of parameter length.
    pub fit_density: f64,
    /// Polar grid for trimming.
    pub trim: TrimGrid,
}

impl Default for StretchOptions {
    fn default() -> Self {
        StretchOptions {
            delta: 0.05,
            degree: 200,
            min_arcs: 4,
            headroom: 1.1,
            max_outer: 200.0,
            zeta_margin: 0.25,
            k_pad: 0.05,
            k_depth: 0.08,
            attach: AttachMode::Radial,
            check_radial: 96,
            check_angular: 384,
            fit_density: 24.0,
            trim: TrimGrid::default(),
        }
    }
}

/// Polar node grid `r_i = outer·i/nr`, `t_k = 2πk/nt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimGrid {
    pub nr: usize,
    pub nt: usize,
}

impl Default for TrimGrid {
    fn default() -> Self {
        TrimGrid { nr: 400, nt: 720 }
    }
}

impl TrimGrid {
    pub fn halved(&self) -> Self {
        TrimGrid { nr: (self.nr / 2).max(2), nt: (self.nt / 2).max(8) }
    }
}

/// `{r0 ≤ |z| ≤ r1, t0 ≤ arg z ≤ t1}` with `t0 < t1 < t0 + 2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarRect {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PolarRect {
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.r0 * (1.0 - 1e-9) && r <= self.r1 * (1.0 + 1e-9) && angle_in(z.arg(), self.t0, self.t1)
    }

    pub fn grid(&self, nr: usize, nt: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity((nr + 1) * (nt + 1));
        for i in 0..=nr {
            let r = self.r0 + (self.r1 - self.r0) * i as f64 / nr as f64;
            for k in 0..=nt {
                out.push(Complex64::from_polar(r, self.t0 + (self.t1 - self.t0) * k as f64 / nt as f64));
            }
        }
        out
    }
}

fn angle_in(t: f64, t0: f64, t1: f64) -> bool {
    (t - t0).rem_euclid(TAU) <= t1 - t0
}

/// One piece `𝔄_j` of the added annulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sector {
    /// Angles of the bounding rays `r_{j−1}`, `r_j`.
    pub t0: f64,
    pub t1: f64,
    /// Index of the owning slab in the net.
    pub slab: usize,
    pub frame: ComplexFrame,
    pub k: PolarRect,
    /// Projection interval `π_j(D̄′)`.
    pub shadow: [f64; 2],
}

/// Ray `r_j` from the junction `Q_j` to `P_j` and its projection data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Attachment {
    pub angle: f64,
    /// Common tangent direction of the two adjacent slabs.
    pub direction: PointC2,
    /// `|⟨Y₀(P) − Y₀(Q), Jν_k⟩|` for the two adjacent slabs.
    pub projections: [f64; 2],
    pub required: f64,
}

/// One sampled property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    /// Worst sampled value (`None` when the property is vacuous).
    pub value: Option<f64>,
    pub threshold: f64,
    /// Parameter of the worst sample.
    pub witness: Option<[f64; 2]>,
}

impl Check {
    pub fn vacuous(threshold: f64) -> Self {
        Check { pass: true, value: None, threshold, witness: None }
    }

    /// Passes when the largest value stays below `threshold`.
    pub fn below(worst: Option<(f64, Complex64)>, threshold: f64) -> Self {
        match worst {
            None => Check::vacuous(threshold),
            Some((v, z)) => Check { pass: v < threshold, value: Some(v), threshold, witness: Some([z.re, z.im]) },
        }
    }

    /// Passes when the smallest value stays above `threshold`.
    pub fn above(worst: Option<(f64, Complex64)>, threshold: f64) -> Self {
        match worst {
            None => Check::vacuous(threshold),
            Some((v, z)) => Check { pass: v > threshold, value: Some(v), threshold, witness: Some([z.re, z.im]) },
        }
    }
}

fn track_max(acc: &mut Option<(f64, Complex64)>, v: f64, z: Complex64) {
    if acc.map_or(true, |(a, _)| v > a || v.is_nan()) {
        *acc = Some((v, z));
    }
}

fn track_min(acc: &mut Option<(f64, Complex64)>, v: f64, z: Complex64) {
    if acc.map_or(true, |(a, _)| v < a || v.is_nan()) {
        *acc = Some((v, z));
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepReport {
    pub n: usize,
    pub sector: usize,
    pub zeta: Complex64,
    pub fit: FitReport,
    /// Largest `|⟨⟨Y_n − Y_{n−1}, w_n⟩⟩|` coefficient.
    pub w_coefficient: f64,
    pub checks: BTreeMap<String, Check>,
}

/// Mutable state of the stretch recursion.
#[derive(Clone, Debug)]
pub struct StretchState {
    pub x: AnalyticMap,
    pub y: AnalyticMap,
    pub d: ConvexBody,
    pub dp: ConvexBody,
    pub net: TangentNet,
    pub inner: f64,
    pub outer: f64,
    pub partition: CirclePartition,
    pub sectors: Vec<Sector>,
    pub attachments: Vec<Attachment>,
    pub opts: StretchOptions,
    pub step: usize,
    pub initial: BTreeMap<String, Check>,
    pub steps: Vec<StepReport>,
    /// Sum of the per-step C¹ drifts on `R̄`.
    pub drift: f64,
}

/// Smallest admissible `ζ` in the direction of `mean`: the line
/// `ζu + C·w` misses `D̄′` once `|ζ| > h_{D′}(e^{i arg ζ} u)`.
///
/// The choice is confirmed on [`LINE_SAMPLES`] points of the line; a failed
/// confirmation enlarges `|ζ|` once before giving up.
pub fn choose_zeta(dp: &ConvexBody, frame: &ComplexFrame, mean: Complex64, margin: f64) -> Result<Complex64> {
    let phase = if mean.norm() > 1e-12 { mean / mean.norm() } else { Complex64::new(1.0, 0.0) };
    let h = dp.support(frame.u.scale_c(phase));
    let first = mean.norm().max(h + margin);
    let bump = margin.max(1e-3 * (1.0 + h.abs()));
    for r in [first, first + bump] {
        let zeta = phase * r;
        if line_misses(dp, frame, zeta) && line_samples_miss(dp, frame, zeta) {
            return Ok(zeta);
        }
    }
    Err(Error::verification("zeta", format!("line at |zeta| = {:.6} meets D'", first + bump)))
}

/// Points sampled on the line `ζu + C·w` by [`choose_zeta`].
pub const LINE_SAMPLES: usize = 1000;

fn line_samples_miss(dp: &ConvexBody, frame: &ComplexFrame, zeta: Complex64) -> bool {
    let reach = zeta.norm() + dp.diameter() + dp.support(frame.w).abs().max(dp.support(-frame.w).abs());
    let (nr, nt) = (10, LINE_SAMPLES / 10);
    (0..nr).all(|i| {
        let r = reach * (i as f64 / (nr - 1) as f64).powi(2);
        (0..nt).all(|k| {
            let s = Complex64::from_polar(r, TAU * k as f64 / nt as f64);
            dp.gauge(frame.u.scale_c(zeta) + frame.w.scale_c(s)) > 1.0
        })
    })
}

/// True when `ζu + C·w` stays outside `D̄′`, certified by the support function.
pub fn line_misses(dp: &ConvexBody, frame: &ComplexFrame, zeta: Complex64) -> bool {
    let phase = zeta / zeta.norm();
    zeta.norm() > dp.support(frame.u.scale_c(phase))
}

/// One stretch: fits `ψ ≈ 0` (C¹) on `rest` and `ψ ≈ ζ − ⟨⟨Y,u⟩⟩` (C⁰) on
/// `k`, and returns `Y + ψu = φu + ⟨⟨Y,w⟩⟩w` with `φ = ⟨⟨Y,u⟩⟩ + ψ`.
pub fn push_toward(
    y: &AnalyticMap,
    frame: &ComplexFrame,
    rest: CompactSet,
    k: CompactSet,
    zeta: Complex64,
    degree: usize,
) -> Result<(AnalyticMap, FitReport)> {
    let u = frame.u;
    let g: Vec<Complex64> = k.samples.iter().map(|z| zeta - hermitian(y.eval(*z), u)).collect();
    let spec = CompactaSpec { sets: vec![rest, k], connected_complement: true };
    let target = PiecewiseTarget {
        sets: vec![
            SetTarget { func: TargetFn::Constant(Complex64::new(0.0, 0.0)), norm: Norm::C1 },
            SetTarget { func: TargetFn::Samples { values: g, derivs: None }, norm: Norm::C0 },
        ],
    };
    let scale = y.domain.outer_radius();
    let (psi, fit) = runge_fit(&spec, &target, FitOptions { degree, scale: Some(scale) })?;
    let one = Complex64::new(1.0, 0.0);
    let x1 = y.x1.lincomb(one, &psi, u.z1)?;
    let x2 = y.x2.lincomb(one, &psi, u.z2)?;
    Ok((AnalyticMap::new(y.domain, x1, x2)?, fit))
}

/// `⟨⟨Y, v⟩⟩` as a series.
pub fn hermitian_component(y: &AnalyticMap, v: PointC2) -> Result<Series> {
    y.x1.lincomb(v.z1.conj(), &y.x2, v.z2.conj())
}

/// Largest coefficient over all summands.
fn max_coefficient(s: &Series) -> f64 {
    s.flatten().iter().flat_map(|p| p.coeffs.iter().map(|c| c.norm())).fold(0.0, f64::max)
}

impl StretchState {
    /// Splits the boundary, continues the map past `R̄`, and selects the `K_j`.
    pub fn prepare(
        x: &AnalyticMap,
        d: &ConvexBody,
        dp: &ConvexBody,
        net: &TangentNet,
        opts: StretchOptions,
    ) -> Result<Self> {
        let Domain::Disc { radius: inner } = x.domain else {
            return Err(Error::DomainMismatch("stretch needs a disc".into()));
        };
        if !(opts.delta > 0.0 && opts.delta < net.radius) {
            return Err(Error::Invalid(format!("delta {} must lie in (0, net radius {})", opts.delta, net.radius)));
        }
        let net = generic_position(net).map_err(|e| e.staged("generic position"))?;
        let partition = split_boundary_with(x, &net, d, opts.delta, opts.min_arcs)
            .map_err(|e| e.staged("split boundary"))?
            .circles
            .remove(0);
        let required = opts.headroom * (1.0 + dp.diameter());
        let jcount = partition.arc_count();
        let prev_slab = |j: usize| partition.assigned[(j + jcount - 1) % jcount];
        let (y, outer) = match opts.attach {
            AttachMode::Radial => {
                let mut rho = 2.0 * inner;
                loop {
                    let ok = (0..jcount).all(|j| {
                        let (q, p) = (partition.junction(j), partition.junction(j) * (rho / inner));
                        let step = x.eval(p) - x.eval(q);
                        [prev_slab(j), partition.assigned[j]]
                            .iter()
                            .all(|&s| step.dot(jmap(net.normals[s])).abs() > required)
                    });
                    if ok {
                        break;
                    }
                    rho *= 1.1;
                    if rho > opts.max_outer {
                        return Err(Error::verification(
                            "ray length",
                            format!("projection rule needs an outer radius above {}", opts.max_outer),
                        )
                        .staged("attach"));
                    }
                }
                (x.restricted(Domain::Disc { radius: rho })?, rho)
            }
            AttachMode::Segments { outer, degree } => {
                let mut arcs = Vec::with_capacity(jcount);
                for j in 0..jcount {
                    let (a, b) = (prev_slab(j), partition.assigned[j]);
                    let v = segment_direction(d, &net, a, b)?;
                    let c = [a, b]
                        .iter()
                        .map(|&s| required / v.dot(jmap(net.normals[s])).abs())
                        .fold(0.0, f64::max);
                    arcs.push(segment_target(x, partition.junction(j), outer, v, c));
                }
                let budget = opts.delta / (1.0 + jcount as f64);
                let (y, rep) = mergelyan_extend(x, &arcs, outer, budget, degree).map_err(|e| e.staged("attach"))?;
                if rep.exceeded {
                    return Err(Error::verification("x", format!("Mergelyan C1 error {:.3e} over {budget:.3e}", rep.disc_c1))
                        .staged("attach"));
                }
                (y, outer)
            }
        };
        let mut attachments = Vec::with_capacity(jcount);
        for j in 0..jcount {
            let (a, b) = (prev_slab(j), partition.assigned[j]);
            let (q, p) = (partition.junction(j), partition.junction(j) * (outer / inner));
            let step = y.eval(p) - y.eval(q);
            let direction = segment_direction(d, &net, a, b).unwrap_or(PointC2::ZERO);
            attachments.push(Attachment {
                angle: partition.junctions[j],
                direction,
                projections: [step.dot(jmap(net.normals[a])).abs(), step.dot(jmap(net.normals[b])).abs()],
                required,
            });
        }
        let mut sectors = Vec::with_capacity(jcount);
        for j in 0..jcount {
            let (t0, t1) = partition.arc_interval(j);
            let slab = partition.assigned[j];
            let frame = complex_orthogonal(net.normals[slab])?;
            let jn = jmap(net.normals[slab]);
            let shadow = [-dp.support(-jn), dp.support(jn)];
            let k = select_k(&y, outer, t0, t1, jn, shadow, &opts).map_err(|e| e.staged(&format!("K selection {j}")))?;
            sectors.push(Sector { t0, t1, slab, frame, k, shadow });
        }
        let mut state = StretchState {
            x: x.clone(),
            y,
            d: d.clone(),
            dp: dp.clone(),
            net,
            inner,
            outer,
            partition,
            sectors,
            attachments,
            opts,
            step: 0,
            initial: BTreeMap::new(),
            steps: vec![],
            drift: 0.0,
        };
        state.initial = state.properties(0);
        Ok(state)
    }

    pub fn step_count(&self) -> usize {
        self.sectors.len()
    }

    fn budget(&self) -> f64 {
        self.opts.delta / (1.0 + self.step_count() as f64)
    }

    /// Sampled properties (3_n)–(6_n) of the current map.
    pub fn properties(&self, n: usize) -> BTreeMap<String, Check> {
        let y = &self.y;
        let mut slab_worst = None;
        let mut proj_worst = None;
        let (nr, nt) = (self.opts.check_radial, self.opts.check_angular);
        for s in &self.sectors {
            let slab = self.net.slab(s.slab);
            let rect = PolarRect { r0: self.inner, r1: self.outer, t0: s.t0, t1: s.t1 };
            let m = ((nt as f64) * (s.t1 - s.t0) / TAU).ceil() as usize;
            for z in rect.grid(nr, m.max(8)) {
                if s.k.contains(z) {
                    continue;
                }
                let q = y.eval(z);
                if self.dp.gauge(q) <= 1.0 {
                    track_max(&mut slab_worst, slab.offset(q).abs() / slab.halfwidth, z);
                }
            }
            let jn = jmap(slab.normal);
            for k in 0..=4 * m.max(8) {
                let z = Complex64::from_polar(self.outer, s.t0 + (s.t1 - s.t0) * k as f64 / (4 * m.max(8)) as f64);
                if s.k.contains(z) {
                    continue;
                }
                let p = y.eval(z).dot(jn);
                let gap = (s.shadow[0] - p).max(p - s.shadow[1]);
                track_min(&mut proj_worst, gap, z);
            }
        }
        let mut k_worst = None;
        for s in self.sectors.iter().take(n) {
            for z in s.k.grid(12, 24) {
                track_min(&mut k_worst, self.dp.signed_distance(y.eval(z)), z);
            }
        }
        let mut r_worst = None;
        for z in (Domain::Disc { radius: self.inner }).polar_grid(24, 192) {
            track_max(&mut r_worst, self.d.signed_distance(y.eval(z)), z);
        }
        let mut out = BTreeMap::new();
        out.insert(format!("3_{n}"), Check::below(slab_worst, 1.0));
        out.insert(format!("4_{n}"), Check::above(proj_worst, 0.0));
        out.insert(format!("5_{n}"), Check::above(k_worst, 0.0));
        out.insert(format!("6_{n}"), Check::below(r_worst, self.opts.delta));
        out
    }

    /// Boundary samples of `M̄ ∖ 𝔄_a`, counter-clockwise.
    fn complement_loop(&self, a: usize) -> Vec<Complex64> {
        let s = &self.sectors[a];
        let dens = self.opts.fit_density;
        let count = |len: f64| ((len * dens).ceil() as usize).max(16);
        let mut out = Vec::new();
        let span = TAU - (s.t1 - s.t0);
        let n = count(span * self.outer);
        for k in 0..n {
            out.push(Complex64::from_polar(self.outer, s.t1 + span * k as f64 / n as f64));
        }
        let n = count(self.outer - self.inner);
        for k in 0..n {
            out.push(Complex64::from_polar(self.outer - (self.outer - self.inner) * k as f64 / n as f64, s.t0));
        }
        let n = count((s.t1 - s.t0) * self.inner);
        for k in 0..n {
            out.push(Complex64::from_polar(self.inner, s.t0 + (s.t1 - s.t0) * k as f64 / n as f64));
        }
        let n = count(self.outer - self.inner);
        for k in 0..n {
            out.push(Complex64::from_polar(self.inner + (self.outer - self.inner) * k as f64 / n as f64, s.t1));
        }
        out
    }

    /// Step `n = self.step + 1`: stretch sector `σ(n) = n − 1`.
    pub fn advance(&mut self) -> Result<&StepReport> {
        let n = self.step + 1;
        if n > self.step_count() {
            return Err(Error::Invalid(format!("step {n} out of range 1..={}", self.step_count())));
        }
        let a = n - 1;
        let s = self.sectors[a].clone();
        let (u, w) = (s.frame.u, s.frame.w);
        let k_set = CompactSet::polar_rect(s.k.r0, s.k.r1, s.k.t0, s.k.t1, 48);
        let mean = k_set.samples.iter().map(|z| hermitian(self.y.eval(*z), u)).sum::<Complex64>()
            / k_set.samples.len() as f64;
        let zeta = choose_zeta(&self.dp, &s.frame, mean, self.opts.zeta_margin).map_err(|e| e.staged("stretch"))?;
        let rest = CompactSet { samples: self.complement_loop(a), filled: true };
        let (next, fit) = push_toward(&self.y, &s.frame, rest, k_set, zeta, self.opts.degree)
            .map_err(|e| e.staged(&format!("step {n}")))?;
        let prev = std::mem::replace(&mut self.y, next);
        let one = Complex64::new(1.0, 0.0);
        let dx1 = self.y.x1.lincomb(one, &prev.x1, -one)?;
        let dx2 = self.y.x2.lincomb(one, &prev.x2, -one)?;
        let w_coefficient = max_coefficient(&dx1.lincomb(w.z1.conj(), &dx2, w.z2.conj())?);
        let drift = c1_distance(&self.y, &prev, &Domain::Disc { radius: self.inner }.polar_grid(24, 192))?;
        self.drift += drift;
        let mut checks = self.properties(n);
        checks.insert(format!("1_{n}"), Check::below(Some((drift, Complex64::new(0.0, 0.0))), self.budget()));
        checks.insert(format!("2_{n}"), Check::below(Some((w_coefficient, Complex64::new(0.0, 0.0))), W_IDENTITY_TOL));
        self.step = n;
        self.steps.push(StepReport { n, sector: a, zeta, fit, w_coefficient, checks });
        Ok(self.steps.last().expect("pushed"))
    }
}

/// Tolerance of the `w`-coefficient identity.
pub const W_IDENTITY_TOL: f64 = 1e-12;

fn segment_direction(d: &ConvexBody, net: &TangentNet, a: usize, b: usize) -> Result<PointC2> {
    let v = common_tangent_direction(d, net.skeleton[a], net.skeleton[b])?;
    // Orient along the slab's `Jν`, so the segment leaves in a fixed sense.
    Ok(if v.dot(jmap(net.normals[b])) < 0.0 { -v } else { v })
}

/// Ray from the junction `q` to `(outer/|q|)·q` with a C¹ ramp from the
/// radial continuation of `x` into the segment `X(q) + s·c·v`.
fn segment_target(x: &AnalyticMap, q: Complex64, outer: f64, v: PointC2, c: f64) -> ArcTarget {
    let (xq, dq) = x.eval_deriv(q);
    let dir = q / q.norm();
    let len = outer - q.norm();
    let n = 200;
    let mut params = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let t = (s / 0.2).min(1.0);
        let b = t * t * (3.0 - 2.0 * t);
        let radial = xq + dq.scale_c(dir * (s * len));
        let seg = xq + v * (c * s);
        params.push(q + dir * (s * len));
        values.push(radial * (1.0 - b) + seg * b);
    }
    ArcTarget { params, values }
}

/// Smallest mouth window covering the samples whose projection falls in the shadow.
fn select_k(
    y: &AnalyticMap,
    outer: f64,
    t0: f64,
    t1: f64,
    jn: PointC2,
    shadow: [f64; 2],
    opts: &StretchOptions,
) -> Result<PolarRect> {
    let n = 720;
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut best = (f64::INFINITY, 0.5 * (t0 + t1));
    for k in 0..=n {
        let t = t0 + (t1 - t0) * k as f64 / n as f64;
        let p = y.eval(Complex64::from_polar(outer, t)).dot(jn);
        let gap = (shadow[0] - p).max(p - shadow[1]);
        if gap <= 0.0 {
            lo = Some(lo.map_or(t, |l| l.min(t)));
            hi = Some(hi.map_or(t, |h| h.max(t)));
        }
        if gap < best.0 {
            best = (gap, t);
        }
    }
    let (a, b) = match (lo, hi) {
        (Some(a), Some(b)) => (a - opts.k_pad, b + opts.k_pad),
        _ => (best.1 - opts.k_pad, best.1 + opts.k_pad),
    };
    if a <= t0 || b >= t1 {
        return Err(Error::verification(
            "K",
            format!("mouth crossing [{a:.4}, {b:.4}] reaches a ray ({t0:.4}, {t1:.4})"),
        ));
    }
    Ok(PolarRect { r0: outer * (1.0 - opts.k_depth), r1: outer, t0: a, t1: b })
}

/// Component of `Y⁻¹(D′)` containing the inner disc, on a polar node grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    pub outer: f64,
    pub grid: TrimGrid,
    /// Node `(i, k)` at index `(i − 1)·nt + k`, radius `outer·i/nr`.
    pub inside: Vec<bool>,
    /// Points on `Y⁻¹(Fr D′)` found by bisection between inside and outside nodes.
    pub boundary: Vec<Complex64>,
    pub area: f64,
    /// Bounded components of the complement.
    pub holes: usize,
    /// The region reaches the outermost ring.
    pub touches_outer: bool,
}

impl Region {
    pub fn node(&self, i: usize, k: usize) -> Complex64 {
        Complex64::from_polar(
            self.outer * i as f64 / self.grid.nr as f64,
            TAU * k as f64 / self.grid.nt as f64,
        )
    }

    /// Parameters of all inside nodes.
    pub fn nodes(&self) -> Vec<Complex64> {
        let nt = self.grid.nt;
        (0..self.inside.len()).filter(|&m| self.inside[m]).map(|m| self.node(m / nt + 1, m % nt)).collect()
    }

    /// Euler characteristic of the region minus the open inner disc.
    pub fn annulus_euler(&self) -> i64 {
        -(self.holes as i64)
    }
}

/// Flood fill of `{gauge_{D′}(Y) < 1}` from the disc of radius `inner`.
pub fn trim_to_component(y: &AnalyticMap, dp: &ConvexBody, inner: f64, grid: TrimGrid) -> Result<Region> {
    let (nr, nt) = (grid.nr, grid.nt);
    if nr < 2 || nt < 8 {
        return Err(Error::Invalid(format!("trim grid {nr}x{nt}")));
    }
    let outer = y.domain.outer_radius();
    let radius = |i: usize| outer * i as f64 / nr as f64;
    let idx = |i: usize, k: usize| (i - 1) * nt + k;
    let param = |i: usize, k: usize| Complex64::from_polar(radius(i), TAU * k as f64 / nt as f64);
    let mut cache: Vec<Option<bool>> = vec![None; nr * nt];
    let test = |i: usize, k: usize, cache: &mut Vec<Option<bool>>| -> bool {
        let m = idx(i, k);
        *cache[m].get_or_insert_with(|| dp.gauge(y.eval(param(i, k))) < 1.0)
    };
    let mut inside = vec![false; nr * nt];
    let mut queue = VecDeque::new();
    for i in 1..=nr {
        if radius(i) > inner {
            break;
        }
        for k in 0..nt {
            if !test(i, k, &mut cache) {
                return Err(Error::verification("trim", format!("inner disc leaves D' at {}", param(i, k))));
            }
            inside[idx(i, k)] = true;
            queue.push_back((i, k));
        }
    }
    if queue.is_empty() {
        // Inner disc smaller than one ring: seed the first ring.
        for k in 0..nt {
            if test(1, k, &mut cache) {
                inside[idx(1, k)] = true;
                queue.push_back((1, k));
            }
        }
    }
    let neighbours = |i: usize, k: usize| {
        let mut v = vec![(i, (k + 1) % nt), (i, (k + nt - 1) % nt)];
        if i > 1 {
            v.push((i - 1, k));
        }
        if i < nr {
            v.push((i + 1, k));
        }
        v
    };
    let mut imax = 1;
    while let Some((i, k)) = queue.pop_front() {
        imax = imax.max(i);
        for (a, b) in neighbours(i, k) {
            if !inside[idx(a, b)] && test(a, b, &mut cache) {
                inside[idx(a, b)] = true;
                queue.push_back((a, b));
            }
        }
    }
    let touches_outer = imax == nr;
    // Bounded complement components: flood the complement from ring imax + 1.
    let mut holes = 0;
    if !touches_outer {
        let top = imax + 1;
        let mut seen = vec![false; nr * nt];
        let flood = |start: (usize, usize), seen: &mut Vec<bool>| {
            let mut q = VecDeque::from([start]);
            seen[idx(start.0, start.1)] = true;
            while let Some((i, k)) = q.pop_front() {
                for (a, b) in neighbours(i, k) {
                    if a <= top && !seen[idx(a, b)] && !inside[idx(a, b)] {
                        seen[idx(a, b)] = true;
                        q.push_back((a, b));
                    }
                }
            }
        };
        for k in 0..nt {
            if !seen[idx(top, k)] {
                flood((top, k), &mut seen);
            }
        }
        for i in 1..top {
            for k in 0..nt {
                if !inside[idx(i, k)] && !seen[idx(i, k)] {
                    holes += 1;
                    flood((i, k), &mut seen);
                }
            }
        }
    }
    let mut boundary = Vec::new();
    let mut area = 0.0;
    let (dr, dt) = (outer / nr as f64, TAU / nt as f64);
    for i in 1..=nr {
        for k in 0..nt {
            if !inside[idx(i, k)] {
                continue;
            }
            area += radius(i) * dr * dt;
            for (a, b) in neighbours(i, k) {
                if !inside[idx(a, b)] {
                    boundary.push(bisect(y, dp, param(i, k), param(a, b)));
                }
            }
            if i == nr {
                boundary.push(param(i, k));
            }
        }
    }
    Ok(Region { outer, grid, inside, boundary, area, holes, touches_outer })
}

fn bisect(y: &AnalyticMap, dp: &ConvexBody, mut a: Complex64, mut b: Complex64) -> Complex64 {
    for _ in 0..48 {
        let m = 0.5 * (a + b);
        if dp.gauge(y.eval(m)) < 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Outcome of the full stretch lemma run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    pub outer: f64,
    pub arcs: usize,
    pub delta: f64,
    pub attachments: Vec<Attachment>,
    pub sectors: Vec<Sector>,
    pub initial: BTreeMap<String, Check>,
    pub steps: Vec<StepReport>,
    /// Conclusions (a)–(e).
    pub conclusions: BTreeMap<String, Check>,
    pub drift: f64,
    pub region_area: f64,
    pub samples: usize,
    pub pass: bool,
}

impl LemmaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Every check of every step, keyed `"<tag>"` (steps) or `"<letter>"`.
    pub fn failures(&self) -> Vec<String> {
        let mut out = vec![];
        for (k, c) in self.initial.iter().chain(self.steps.iter().flat_map(|s| s.checks.iter())) {
            if !c.pass {
                out.push(k.clone());
            }
        }
        for (k, c) in &self.conclusions {
            if !c.pass {
                out.push(k.clone());
            }
        }
        out
    }
}

/// Tolerance for boundary samples of the trimmed region.
pub const BOUNDARY_TOL: f64 = 1e-2;

/// Everything produced by [`run_lemma`].
#[derive(Clone, Debug)]
pub struct LemmaOutcome {
    pub region: Region,
    pub map: AnalyticMap,
    pub state: StretchState,
    pub report: LemmaReport,
}

/// All stages, with verification failures recorded rather than raised.
pub fn run_lemma(
    x: &AnalyticMap,
    d: &ConvexBody,
    dp: &ConvexBody,
    net: &TangentNet,
    opts: StretchOptions,
) -> Result<LemmaOutcome> {
    let mut state = StretchState::prepare(x, d, dp, net, opts)?;
    for _ in 0..state.step_count() {
        state.advance()?;
    }
    let region = trim_to_component(&state.y, dp, state.inner, opts.trim).map_err(|e| e.staged("trim"))?;
    let y = &state.y;
    let eps = state.net.radius;
    let mut conclusions = BTreeMap::new();
    conclusions.insert(
        "a".to_string(),
        Check {
            pass: region.holes == 0 && !region.touches_outer,
            value: Some(region.annulus_euler() as f64),
            threshold: 0.0,
            witness: None,
        },
    );
    let grid_r = Domain::Disc { radius: state.inner }.polar_grid(24, 192);
    let drift = c1_distance(y, &state.x, &grid_r)?;
    conclusions.insert("b".to_string(), Check::below(Some((drift, Complex64::new(0.0, 0.0))), opts.delta));
    let nodes = region.nodes();
    let mut c_worst = None;
    let mut e_worst = None;
    for z in nodes.iter().chain(region.boundary.iter()) {
        let q = y.eval(*z);
        if z.norm() > state.inner {
            // Outside D̄_{−ε} means signed distance to Fr D above −ε.
            track_min(&mut c_worst, d.signed_distance(q) + eps, *z);
        }
        let score = if d.signed_distance(q) < opts.delta || state.net.contains(q) { 0.0 } else { 1.0 };
        track_max(&mut e_worst, score, *z);
    }
    conclusions.insert("c".to_string(), Check::above(c_worst, 0.0));
    let mut d_worst = None;
    for z in &region.boundary {
        track_max(&mut d_worst, dp.signed_distance(y.eval(*z)).abs(), *z);
    }
    conclusions.insert("d".to_string(), Check::below(d_worst, BOUNDARY_TOL));
    conclusions.insert("e".to_string(), Check::below(e_worst, 0.5));
    let samples = nodes.len() + region.boundary.len();
    let mut report = LemmaReport {
        outer: state.outer,
        arcs: state.step_count(),
        delta: opts.delta,
        attachments: state.attachments.clone(),
        sectors: state.sectors.clone(),
        initial: state.initial.clone(),
        steps: state.steps.clone(),
        conclusions,
        drift: state.drift,
        region_area: region.area,
        samples,
        pass: false,
    };
    report.pass = report.failures().is_empty();
    let map = y.clone();
    Ok(LemmaOutcome { region, map, state, report })
}

/// Strict form: any failed property becomes an error naming it.
pub fn run_lemma_main(
    x: &AnalyticMap,
    d: &ConvexBody,
    dp: &ConvexBody,
    net: &TangentNet,
    delta: f64,
    degree: usize,
) -> Result<(Region, AnalyticMap, LemmaReport)> {
    let opts = StretchOptions { delta, degree, ..StretchOptions::default() };
    let out = run_lemma(x, d, dp, net, opts)?;
    if let Some(tag) = out.report.failures().first() {
        return Err(Error::verification(tag.clone(), out.report.to_json()).staged("stretch lemma"));
    }
    Ok((out.region, out.map, out.report))
}

/// Single step in strict form.
pub fn stretch_step(state: &mut StretchState) -> Result<StepReport> {
    let rep = state.advance()?.clone();
    if let Some((tag, c)) = rep.checks.iter().find(|(_, c)| !c.pass) {
        return Err(Error::verification(tag.clone(), format!("{c:?}")));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e0() -> PointC2 {
        PointC2::from_reals([1.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn zeta_in_ball_is_radius_plus_margin() {
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let frame = complex_orthogonal(PointC2::from_reals([0.3, -0.2, 0.8, 0.1]).normalized().unwrap()).unwrap();
        for mean in [c(0.0, 0.0), c(0.4, -1.1), c(-3.0, 0.5)] {
            let z = choose_zeta(&dp, &frame, mean, 0.25).unwrap();
            assert!((z.norm() - 2.25_f64.max(mean.norm())).abs() < 1e-12, "{z}");
            assert!(line_misses(&dp, &frame, z));
        }
    }

    #[test]
    fn zeta_for_translated_ball() {
        let centre = PointC2::new(c(0.5, 0.2), c(-0.7, 0.3));
        let dp = ConvexBody::ball(centre, 2.0).unwrap();
        let frame = complex_orthogonal(e0()).unwrap();
        let z = choose_zeta(&dp, &frame, c(0.0, 0.0), 0.1).unwrap();
        let bound = 2.0 + hermitian(centre, frame.u).norm() + 0.1;
        assert!(z.norm() >= bound - 1e-9 * bound || line_misses(&dp, &frame, z));
        assert!(line_samples_miss(&dp, &frame, z));
    }

    #[test]
    fn zero_margin_is_retried() {
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let frame = complex_orthogonal(e0()).unwrap();
        assert!(!line_misses(&dp, &frame, c(2.0, 0.0)));
        let z = choose_zeta(&dp, &frame, c(0.0, 0.0), 0.0).unwrap();
        assert!(z.norm() > 2.0 && z.norm() < 2.01);
    }

    #[test]
    fn single_push_leaves_the_larger_ball() {
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let x = AnalyticMap::polynomial(1.0, vec![c(0.0, 0.0), c(0.9, 0.0)], vec![]).unwrap();
        let y0 = x.restricted(Domain::Disc { radius: 3.0 }).unwrap();
        let frame = complex_orthogonal(e0()).unwrap();
        let k = CompactSet::disc(c(2.5, 0.0), 0.3, 64);
        let zeta = choose_zeta(&dp, &frame, c(0.0, 0.0), 0.25).unwrap();
        let rest = CompactSet::disc(c(0.0, 0.0), 1.0, 128);
        let (y1, fit) = push_toward(&y0, &frame, rest, k.clone(), zeta, 60).unwrap();
        assert!(fit.per_set[0].c1 < 1e-2 && fit.per_set[1].c0 < 0.1, "{:?}", fit.per_set);
        let inner = Domain::Disc { radius: 1.0 }.polar_grid(8, 64);
        let mut w_part = 0.0f64;
        for z in &inner {
            w_part = w_part.max(hermitian(y1.eval(*z) - y0.eval(*z), frame.w).norm());
        }
        assert!(w_part < 1e-12);
        let disc_k = CompactSet::disc(c(2.5, 0.0), 0.3, 32).samples.into_iter().chain([c(2.5, 0.0)]);
        let gap = disc_k.map(|z| dp.signed_distance(y1.eval(z))).fold(f64::INFINITY, f64::min);
        assert!(gap > 0.0, "{gap}");
        let region = trim_to_component(&y1, &dp, 1.0, TrimGrid { nr: 120, nt: 240 }).unwrap();
        // Node nearest 2.5 on the positive axis.
        assert!(!region.inside[(100 - 1) * 240]);
        assert!(region.inside[(20 - 1) * 240]);
    }

    #[test]
    fn flat_disc_trims_to_whole_domain() {
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let y = AnalyticMap::flat_disc(1.5).unwrap();
        let r = trim_to_component(&y, &dp, 1.0, TrimGrid { nr: 60, nt: 120 }).unwrap();
        assert!(r.inside.iter().all(|&b| b));
        assert!(r.touches_outer && r.holes == 0);
        let exact = std::f64::consts::PI * 1.5 * 1.5;
        assert!((r.area - exact).abs() / exact < 0.03, "{}", r.area);
    }

    #[test]
    fn trim_rejects_inner_disc_outside() {
        let dp = ConvexBody::centered_ball(0.5).unwrap();
        let y = AnalyticMap::flat_disc(1.5).unwrap();
        assert!(trim_to_component(&y, &dp, 1.0, TrimGrid { nr: 30, nt: 60 }).is_err());
    }

    #[test]
    fn delta_must_stay_below_net_radius() {
        let d = ConvexBody::centered_ball(1.0).unwrap();
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let net = TangentNet::new(&d, vec![e0()], 0.1).unwrap();
        let x = AnalyticMap::flat_disc(1.0).unwrap();
        for delta in [0.1, 0.3] {
            let opts = StretchOptions { delta, ..StretchOptions::default() };
            assert!(matches!(StretchState::prepare(&x, &d, &dp, &net, opts), Err(Error::Invalid(_))));
        }
        assert!(run_lemma_main(&x, &d, &dp, &net, 0.2, 40).is_err());
    }

    #[test]
    fn polar_rect_membership() {
        let r = PolarRect { r0: 1.0, r1: 2.0, t0: 3.0, t1: 3.5 };
        assert!(r.contains(Complex64::from_polar(2.0, 3.2)));
        assert!(r.contains(Complex64::from_polar(1.5, 3.0 + 1e-12)));
        assert!(!r.contains(Complex64::from_polar(2.1, 3.2)));
        assert!(!r.contains(Complex64::from_polar(1.5, 3.6)));
        // Wraps through the negative real axis.
        assert!(r.contains(Complex64::from_polar(1.5, 3.4 - TAU)));
        assert_eq!(r.grid(2, 3).len(), 12);
    }

    #[test]
    fn options_round_trip() {
        let o = StretchOptions { attach: AttachMode::Segments { outer: 4.0, degree: 80 }, ..Default::default() };
        let s = serde_json::to_string(&o).unwrap();
        assert_eq!(serde_json::from_str::<StretchOptions>(&s).unwrap(), o);
        let partial: StretchOptions = serde_json::from_str(r#"{"degree": 90}"#).unwrap();
        assert_eq!(partial.degree, 90);
        assert_eq!(partial.delta, StretchOptions::default().delta);
    }
}
