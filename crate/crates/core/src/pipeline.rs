//! Finite-depth driver for the exhaustion recursion.
//!
//! Each iteration builds a tangent net between consecutive bodies, runs the
//! stretch lemma, optionally desingularizes, and verifies four sampled
//! properties before the iteration's `dee − ε` enters the completeness budget.
//! Any stage failure halts the run and the partial report is returned.

use std::collections::{BTreeMap, BinaryHeap};
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::nudge;
use crate::convex::{dee, dist_pair, refine_pair, BodySpec, ConvexBody, PairMetrics};
use crate::curve::{c1_distance, double_points, samples_csv, AnalyticMap, DoublePoint, Domain};
use crate::desing::{critical_points, implicitize, lambda_sweep, points_csv, LevelOptions, MAX_COMPONENT_DEGREE};
use crate::error::{Error, Result};
use crate::net::{
    analytic_lower_bound, build_net, hopf_skeleton, min_path_length, BoundaryArc, BoundaryArcSet, Resolution,
    TangentNet,
};
use crate::stretch::{run_lemma, trim_to_component, Check, Region, StretchOptions, TrimGrid, BOUNDARY_TOL};

/// Version tag written into every report.
pub const REPORT_SCHEMA: &str = "complete-curves/run-report/1";

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "CCURVES_OUT";

/// Output root when neither a flag, the config nor the environment names one.
pub const DEFAULT_OUT: &str = "ccurves-out";

/// Samples of the boundary curve handed to the net construction.
pub const ARC_SAMPLES: usize = 720;

/// Tolerance for double points stored in the report.
pub const DOUBLE_POINT_TOL: f64 = 1e-10;

/// Fixed waiver for the 1-form comparison.
pub const ONE_FORM_WAIVER: &str =
    "one-form ratio: every domain is planar and carries dz, so the ratio of consecutive forms is identically 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Embedded,
    Immersed,
}

/// Exhaustion by nested bodies `D⁰ ⋐ D¹ ⋐ …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExhaustionSpec {
    Bodies { bodies: Vec<BodySpec> },
    /// Centered balls.
    Balls { radii: Vec<f64> },
    /// The refined chain between two bodies, optionally closed by the outer one.
    Refined {
        inner: BodySpec,
        outer: BodySpec,
        #[serde(default)]
        include_outer: bool,
    },
}

impl ExhaustionSpec {
    pub fn build(&self) -> Result<Vec<ConvexBody>> {
        match self {
            ExhaustionSpec::Bodies { bodies } => bodies.iter().map(BodySpec::build).collect(),
            ExhaustionSpec::Balls { radii } => radii.iter().map(|&r| ConvexBody::centered_ball(r)).collect(),
            ExhaustionSpec::Refined { inner, outer, include_outer } => {
                let (a, b) = (inner.build()?, outer.build()?);
                let mut bodies = refine_pair(&a, &b)?.bodies;
                if *include_outer {
                    bodies.push(b);
                }
                Ok(bodies)
            }
        }
    }
}

/// Initial curve; coefficients are `[re, im]` pairs from degree zero up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    FlatDisc { radius: f64 },
    Polynomial { radius: f64, x1: Vec<[f64; 2]>, x2: Vec<[f64; 2]> },
}

impl CurveSpec {
    pub fn build(&self) -> Result<AnalyticMap> {
        match self {
            CurveSpec::FlatDisc { radius } => AnalyticMap::flat_disc(*radius),
            CurveSpec::Polynomial { radius, x1, x2 } => {
                let c = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
                AnalyticMap::polynomial(*radius, c(x1), c(x2))
            }
        }
    }
}

/// Net used by each iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetSpec {
    /// Arclength net of radius `ε_m < ε_n` along the boundary curve.
    Lemma,
    /// Fixed skeleton `(cos η e^{iθ}, sin η e^{iφ})` on each body.
    Hopf { eta: f64, phases: Vec<[f64; 2]>, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Resolutions {
    pub oracle: Resolution,
    pub trim: TrimGrid,
}

impl Default for Resolutions {
    fn default() -> Self {
        Resolutions { oracle: Resolution::default(), trim: TrimGrid::default() }
    }
}

impl Resolutions {
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(8);
        Resolutions { oracle: self.oracle.scaled(factor), trim: TrimGrid { nr: s(self.trim.nr), nt: s(self.trim.nt) } }
    }
}

/// Parameters of the desingularization sweep and of the `desing` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesingConfig {
    /// Terms `[i, j, re, im]` of `Σ c ζ^i ξ^j`; the curve is implicitized when absent.
    pub terms: Option<Vec<[f64; 4]>>,
    pub lambda0: f64,
    pub count: usize,
    pub eps: f64,
    pub region_radius: f64,
}

impl Default for DesingConfig {
    fn default() -> Self {
        DesingConfig { terms: None, lambda0: 0.1, count: 6, eps: 0.2, region_radius: 1.0 }
    }
}

/// Structured-text run description (TOML).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub exhaustion: ExhaustionSpec,
    pub curve: CurveSpec,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// `ε` of the first iteration.
    pub eps0: f64,
    /// `ε_n / ε_{n−1}`, below one half.
    #[serde(default = "default_ratio")]
    pub eps_ratio: f64,
    /// `δ_n = delta_fraction · ε_n`.
    #[serde(default = "default_delta_fraction")]
    pub delta_fraction: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_net")]
    pub net: NetSpec,
    #[serde(default)]
    pub stretch: StretchOptions,
    /// Largest net handed to the stretch lemma.
    #[serde(default = "default_max_slabs")]
    pub max_slabs: usize,
    #[serde(default)]
    pub resolution: Resolutions,
    #[serde(default)]
    pub desing: DesingConfig,
    /// Target of the `exhaust` command.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Size of the seeded coefficient perturbation of the initial curve.
    #[serde(default)]
    pub nudge: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_name() -> String {
    "run".into()
}
fn default_depth() -> usize {
    1
}
fn default_ratio() -> f64 {
    0.45
}
fn default_delta_fraction() -> f64 {
    0.25
}
fn default_mode() -> Mode {
    Mode::Immersed
}
fn default_net() -> NetSpec {
    NetSpec::Lemma
}
fn default_max_slabs() -> usize {
    64
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the bodies and the initial curve and checks the `ε` hypothesis.
    pub fn prepare(&self) -> Result<(Vec<ConvexBody>, AnalyticMap)> {
        let bodies = self.exhaustion.build().map_err(|e| Error::Config(format!("exhaustion: {e}")))?;
        if bodies.len() < self.depth + 1 {
            return Err(Error::Config(format!("depth {} needs {} bodies, got {}", self.depth, self.depth + 1, bodies.len())));
        }
        if !(self.eps_ratio > 0.0 && self.eps_ratio < 0.5) {
            return Err(Error::Config(format!("eps_ratio {} must lie in (0, 1/2)", self.eps_ratio)));
        }
        if !(self.delta_fraction > 0.0 && self.delta_fraction <= 1.0) {
            return Err(Error::Config(format!("delta_fraction {} must lie in (0, 1]", self.delta_fraction)));
        }
        let d0 = &bodies[0];
        let outer = bodies.last().expect("nonempty");
        let kappa = d0.kappa_max().map_err(|e| Error::Config(format!("first body: {e}")))?;
        let room = if bodies.len() > 1 { dist_pair(d0, outer)? } else { f64::INFINITY };
        let cap = room.min(1.0 / kappa);
        if !(self.eps0 > 0.0 && self.eps0 < cap) {
            return Err(Error::Config(format!("eps0 {} must lie in (0, {cap})", self.eps0)));
        }
        let mut curve = self.curve.build().map_err(|e| Error::Config(format!("curve: {e}")))?;
        if self.nudge > 0.0 {
            let x1 = nudge(&curve.x1, self.nudge, self.seed);
            let x2 = nudge(&curve.x2, self.nudge, self.seed.wrapping_add(1));
            curve = AnalyticMap::new(curve.domain, x1, x2)?;
        }
        Ok((bodies, curve))
    }

    /// Output directory: explicit value, then the environment root, then the default root.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(p) = &self.out {
            return p.clone();
        }
        let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        root.join(&self.name)
    }
}

/// `ε_n = ε₀·ratio^{n−1}` for `n = 1..=depth`.
pub fn eps_schedule(eps0: f64, ratio: f64, depth: usize) -> Vec<f64> {
    (0..depth).map(|k| eps0 * ratio.powi(k as i32)).collect()
}

/// Strict halving and `Σ ε_n < 2ε₁`.
pub fn schedule_ok(schedule: &[f64]) -> bool {
    let halving = schedule.windows(2).all(|w| w[1] < w[0] / 2.0);
    let sum: f64 = schedule.iter().sum();
    halving && schedule.first().map_or(true, |&e| sum < 2.0 * e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSummary {
    pub slabs: usize,
    pub radius: f64,
    /// Lower bound from the net construction (arclength nets only).
    pub bound: Option<f64>,
    pub oracle: Option<f64>,
    pub oracle_slack: f64,
    pub oracle_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchSummary {
    pub pass: bool,
    pub outer: f64,
    pub arcs: usize,
    pub drift: f64,
    pub samples: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesingSummary {
    pub applied: bool,
    pub degree: i32,
    pub critical_points: usize,
    pub chosen_lambda: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub n: usize,
    pub inner: BodySpec,
    pub outer: BodySpec,
    pub metrics: PairMetrics,
    pub eps: f64,
    pub delta: f64,
    pub mode: Mode,
    pub net: Option<NetSummary>,
    pub stretch: Option<StretchSummary>,
    pub desing: Option<DesingSummary>,
    /// Keys `D_n`, `E_n`, `F_n`, `G_n`.
    pub checks: BTreeMap<String, Check>,
    /// Shortest image path across the new annulus.
    pub length: Option<f64>,
    pub length_slack: f64,
    /// Radius of the disc carried into the next iteration.
    pub next_radius: Option<f64>,
    /// Largest distance of that disc's boundary image from the outer frontier.
    pub boundary_defect: Option<f64>,
    pub double_points: Option<Vec<DoublePoint>>,
    pub accepted: bool,
    /// Budget after this iteration.
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halt {
    pub iteration: usize,
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub name: String,
    pub seed: u64,
    pub mode: Mode,
    pub depth: usize,
    pub schedule: Vec<f64>,
    pub schedule_ok: bool,
    pub eps_sum: f64,
    pub initial_radius: f64,
    pub waivers: Vec<String>,
    pub iterations: Vec<IterationReport>,
    /// `Σ (dee_k − ε_k)` over accepted iterations.
    pub budget: f64,
    pub halted: Option<Halt>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Config(format!("report schema {} (expected {REPORT_SCHEMA})", r.schema)));
        }
        Ok(r)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &IterationReport> {
        self.iterations.iter().filter(|i| i.accepted)
    }

    /// Recomputed `Σ (dee − ε)`; equals `budget` exactly.
    pub fn ledger(&self) -> f64 {
        self.accepted().fold(0.0, |s, i| s + (i.metrics.dee - i.eps))
    }

    pub fn pass(&self) -> bool {
        self.halted.is_none() && self.schedule_ok && self.iterations.iter().all(|i| i.accepted)
    }
}

/// The report with the final map and its region.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub curve: AnalyticMap,
    pub regions: Vec<Region>,
    pub paths: Vec<Vec<crate::geometry::PointC2>>,
}

fn body_spec(b: &ConvexBody) -> BodySpec {
    b.to_spec().unwrap_or(BodySpec::Ball { center: b.center.to_reals(), radius: f64::NAN })
}

/// Boundary curve of `x` pushed radially onto `Fr d`.
fn boundary_arcs(x: &AnalyticMap, d: &ConvexBody) -> Result<BoundaryArcSet> {
    let r = x.domain.outer_radius();
    let pts = AnalyticMap::circle_params(r, ARC_SAMPLES)
        .into_iter()
        .map(|z| d.boundary_point(x.eval(z) - d.center))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryArcSet { arcs: vec![BoundaryArc::new(d, pts, true)?] })
}

/// Net of one iteration between `d` and `dp`.
pub fn iteration_net(spec: &NetSpec, x: &AnalyticMap, d: &ConvexBody, dp: &ConvexBody, eps: f64) -> Result<TangentNet> {
    match spec {
        NetSpec::Lemma => build_net(&boundary_arcs(x, d)?, d, dp, eps),
        NetSpec::Hopf { eta, phases, radius } => {
            let th: Vec<(f64, f64)> = phases.iter().map(|p| (p[0], p[1])).collect();
            TangentNet::new(d, hopf_skeleton(d, *eta, &th)?, *radius)
        }
    }
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

/// Shortest image path on the region grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMeasure {
    pub length: f64,
    /// Largest image step from a terminal node to the region's edge.
    pub slack: f64,
    /// Double points joined by a shortcut.
    pub glued: usize,
}

/// Image length of the shortest grid path from the disc `|z| ≤ inner` to the
/// edge of `region`, with optional shortcuts through double points.
pub fn annulus_length(y: &AnalyticMap, region: &Region, inner: f64, glue: &[DoublePoint]) -> Result<PathMeasure> {
    let (nr, nt) = (region.grid.nr, region.grid.nt);
    let idx = |i: usize, k: usize| (i - 1) * nt + k;
    let count = nr * nt;
    let mut image = vec![None; count];
    for i in 1..=nr {
        for k in 0..nt {
            if region.inside[idx(i, k)] {
                image[idx(i, k)] = Some(y.eval(region.node(i, k)));
            }
        }
    }
    let neighbours = |i: usize, k: usize| {
        let mut v = Vec::with_capacity(8);
        for di in [-1i64, 0, 1] {
            for dk in [-1i64, 0, 1] {
                if (di, dk) == (0, 0) {
                    continue;
                }
                let a = i as i64 + di;
                if a < 1 || a > nr as i64 {
                    continue;
                }
                v.push((a as usize, ((k as i64 + dk).rem_euclid(nt as i64)) as usize));
            }
        }
        v
    };
    let dr = region.outer / nr as f64;
    let mut dist = vec![f64::INFINITY; count];
    let mut heap = BinaryHeap::new();
    let first = if dr > inner { 1 } else { (inner / dr).floor() as usize };
    for i in 1..=first.min(nr) {
        for k in 0..nt {
            if region.inside[idx(i, k)] {
                dist[idx(i, k)] = 0.0;
                heap.push(Item(0.0, idx(i, k)));
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::Empty("region nodes in the inner disc"));
    }
    let nearest = |z: Complex64| -> Option<usize> {
        let i = (z.norm() / dr).round().clamp(1.0, nr as f64) as usize;
        let k = ((z.arg().rem_euclid(std::f64::consts::TAU)) / std::f64::consts::TAU * nt as f64).round() as usize % nt;
        region.inside[idx(i, k)].then_some(idx(i, k))
    };
    let mut shortcuts: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut glued = 0;
    for dp in glue {
        let (Some(a), Some(b)) = (nearest(dp.p), nearest(dp.q)) else { continue };
        let (ia, ib) = (image[a].expect("inside"), image[b].expect("inside"));
        let w = ia.distance(dp.w) + dp.w.distance(ib);
        shortcuts.entry(a).or_default().push((b, w));
        shortcuts.entry(b).or_default().push((a, w));
        glued += 1;
    }
    let mut best: Option<(f64, f64)> = None;
    while let Some(Item(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        let (i, k) = (u / nt + 1, u % nt);
        let iu = image[u].expect("inside");
        let mut edge = if i == nr { Some(0.0) } else { None };
        for (a, b) in neighbours(i, k) {
            let v = idx(a, b);
            match image[v] {
                Some(iv) => {
                    let nd = du + iu.distance(iv);
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Item(nd, v));
                    }
                }
                None => {
                    let step = iu.distance(y.eval(region.node(a, b)));
                    edge = Some(edge.map_or(step, |e: f64| e.min(step)));
                }
            }
        }
        if let Some(list) = shortcuts.get(&u) {
            for &(v, w) in list {
                if du + w < dist[v] {
                    dist[v] = du + w;
                    heap.push(Item(du + w, v));
                }
            }
        }
        if let Some(step) = edge {
            if best.map_or(true, |(b, _)| du < b) {
                best = Some((du, step));
            }
        }
    }
    let (length, slack) = best.ok_or(Error::Unreachable)?;
    Ok(PathMeasure { length, slack, glued })
}

/// Runs the recursion and returns the report with the final map.
pub fn run_recursion_full(config: &RunConfig) -> Result<RunOutcome> {
    let (bodies, mut x) = config.prepare()?;
    let schedule = eps_schedule(config.eps0, config.eps_ratio, config.depth);
    let mut report = RunReport {
        schema: REPORT_SCHEMA.into(),
        name: config.name.clone(),
        seed: config.seed,
        mode: config.mode,
        depth: config.depth,
        schedule_ok: schedule_ok(&schedule),
        eps_sum: schedule.iter().sum(),
        schedule: schedule.clone(),
        initial_radius: x.domain.outer_radius(),
        waivers: vec![ONE_FORM_WAIVER.into()],
        iterations: vec![],
        budget: 0.0,
        halted: None,
        artifacts: vec![],
    };
    let mut regions = vec![];
    let mut paths = vec![];
    let mut mode = config.mode;
    for n in 1..=config.depth {
        let (d, dp) = (&bodies[n - 1], &bodies[n]);
        let eps = schedule[n - 1];
        let delta = eps * config.delta_fraction;
        let halt = |report: &mut RunReport, stage: &str, e: Error| {
            report.halted = Some(Halt { iteration: n, stage: stage.into(), message: e.to_string() });
        };
        let metrics = match dee(d, dp) {
            Ok(m) => m,
            Err(e) => {
                halt(&mut report, "metrics", e);
                break;
            }
        };
        let mut it = IterationReport {
            n,
            inner: body_spec(d),
            outer: body_spec(dp),
            metrics,
            eps,
            delta,
            mode,
            net: None,
            stretch: None,
            desing: None,
            checks: BTreeMap::new(),
            length: None,
            length_slack: 0.0,
            next_radius: None,
            boundary_defect: None,
            double_points: None,
            accepted: false,
            budget: report.budget,
        };
        let net = match iteration_net(&config.net, &x, d, dp, eps) {
            Ok(net) => net,
            Err(e) => {
                report.iterations.push(it);
                halt(&mut report, "net", e);
                break;
            }
        };
        let oracle = min_path_length(&net, d, dp, &config.resolution.oracle);
        let bound = if net.build.is_some() { analytic_lower_bound(&net, d, dp).ok() } else { None };
        let (oracle_min, oracle_slack, oracle_nodes, path) = match oracle {
            Ok(o) => (o.min_length, o.slack, o.nodes, o.path),
            Err(_) => (None, 0.0, 0, vec![]),
        };
        paths.push(path);
        it.net = Some(NetSummary {
            slabs: net.len(),
            radius: net.radius,
            bound,
            oracle: oracle_min,
            oracle_slack,
            oracle_nodes,
        });
        if net.len() > config.max_slabs {
            report.iterations.push(it);
            let e = Error::Invalid(format!("net has {} slabs, above the stretch cap {}", net.len(), config.max_slabs));
            halt(&mut report, "stretch", e);
            break;
        }
        let opts = StretchOptions { delta, trim: config.resolution.trim, ..config.stretch };
        let out = match run_lemma(&x, d, dp, &net, opts) {
            Ok(out) => out,
            Err(e) => {
                report.iterations.push(it);
                halt(&mut report, "stretch", e);
                break;
            }
        };
        let failures = out.report.failures();
        it.stretch = Some(StretchSummary {
            pass: out.report.pass,
            outer: out.report.outer,
            arcs: out.report.arcs,
            drift: out.report.drift,
            samples: out.report.samples,
            failures: failures.clone(),
        });
        if !out.report.pass {
            report.iterations.push(it);
            halt(&mut report, "stretch", Error::verification(failures.join(","), "stretch properties failed"));
            break;
        }
        let y = &out.map;
        let region = &out.region;
        let inner = x.domain.outer_radius();
        let zero = Complex64::new(0.0, 0.0);
        let c1 = c1_distance(y, &x, &x.domain.polar_grid(24, 192))?;
        it.checks.insert(format!("D_{n}"), Check::below(Some((c1, zero)), eps));
        let mut e_worst: Option<(f64, Complex64)> = None;
        for z in &region.boundary {
            let v = dp.signed_distance(y.eval(*z)).abs();
            if e_worst.map_or(true, |(a, _)| v > a) {
                e_worst = Some((v, *z));
            }
        }
        it.checks.insert(format!("E_{n}"), Check::below(e_worst, BOUNDARY_TOL));
        let mut f_worst: Option<(f64, Complex64)> = None;
        for z in region.nodes().into_iter().chain(region.boundary.iter().copied()) {
            if z.norm() <= inner {
                continue;
            }
            let v = d.signed_distance(y.eval(z)) + eps;
            if f_worst.map_or(true, |(a, _)| v < a) {
                f_worst = Some((v, z));
            }
        }
        it.checks.insert(format!("F_{n}"), Check::above(f_worst, 0.0));
        match annulus_length(y, region, inner, &[]) {
            Ok(m) => {
                it.length = Some(m.length);
                it.length_slack = m.slack;
                let g = Check { pass: m.length >= metrics.dee - eps, value: Some(m.length), threshold: metrics.dee - eps, witness: None };
                it.checks.insert(format!("G_{n}"), g);
            }
            Err(e) => {
                it.checks.insert(format!("G_{n}"), Check { pass: false, value: None, threshold: metrics.dee - eps, witness: None });
                report.waivers.push(format!("iteration {n}: annulus length unavailable ({e})"));
            }
        }
        let radius = region
            .boundary
            .iter()
            .map(|z| z.norm())
            .filter(|&r| r < region.outer * (1.0 - 1e-12))
            .fold(region.outer, f64::min)
            * (1.0 - 1e-9);
        let next = match y.restricted(Domain::Disc { radius }) {
            Ok(m) => m,
            Err(e) => {
                report.iterations.push(it);
                halt(&mut report, "restrict", e);
                break;
            }
        };
        it.next_radius = Some(radius);
        it.boundary_defect = Some(
            AnalyticMap::circle_params(radius, ARC_SAMPLES)
                .iter()
                .map(|z| dp.signed_distance(next.eval(*z)).abs())
                .fold(0.0, f64::max),
        );
        if mode == Mode::Embedded {
            it.desing = Some(desingularize(&next, dp, eps, &config.desing));
            if !it.desing.as_ref().map_or(false, |s| s.applied) {
                report.waivers.push(format!(
                    "iteration {n}: degree {} exceeds the desingularization cap {MAX_COMPONENT_DEGREE}; continuing immersed",
                    next.degree()
                ));
                mode = Mode::Immersed;
                it.mode = mode;
            }
        }
        if mode == Mode::Immersed {
            match double_points(&next, DOUBLE_POINT_TOL) {
                Ok(v) => it.double_points = Some(v),
                Err(e) => report.waivers.push(format!("iteration {n}: double points unavailable ({e})")),
            }
        }
        it.accepted = it.checks.values().all(|c| c.pass);
        if it.accepted {
            report.budget += metrics.dee - eps;
        }
        it.budget = report.budget;
        let accepted = it.accepted;
        let failed: Vec<String> = it.checks.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.clone()).collect();
        report.iterations.push(it);
        regions.push(out.region.clone());
        x = next;
        if !accepted {
            halt(&mut report, "verify", Error::verification(failed.join(","), "iteration properties failed"));
            break;
        }
    }
    Ok(RunOutcome { report, curve: x, regions, paths })
}

/// Runs the recursion; the report records any halt.
pub fn run_recursion(config: &RunConfig) -> Result<RunReport> {
    run_recursion_full(config).map(|o| o.report)
}

fn desingularize(x: &AnalyticMap, region: &ConvexBody, eps: f64, cfg: &DesingConfig) -> DesingSummary {
    let degree = x.degree();
    let mut s = DesingSummary { applied: false, degree, critical_points: 0, chosen_lambda: None, note: String::new() };
    if degree < 0 || degree as usize > MAX_COMPONENT_DEGREE {
        s.note = "waived".into();
        return s;
    }
    let run = || -> Result<(usize, Option<f64>)> {
        let p = implicitize(x)?;
        let crit = critical_points(&p, region)?;
        let sweep = lambda_sweep(&p, region, cfg.lambda0, cfg.count, eps, LevelOptions::default())?;
        Ok((crit.points.len(), sweep.chosen))
    };
    match run() {
        Ok((c, l)) => {
            s.applied = true;
            s.critical_points = c;
            s.chosen_lambda = l;
            s.note = if l.is_some() { "regular level found".into() } else { "no admissible level".into() };
        }
        Err(e) => s.note = e.to_string(),
    }
    s
}

/// Measured image-glued distance against the budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub measured: f64,
    pub intrinsic: f64,
    pub ledger: f64,
    pub slack: f64,
    pub glued: usize,
    pub pass: bool,
}

/// Shortest glued image path from the initial disc to the final boundary,
/// compared with `Σ (dee − ε)`.
pub fn image_completeness_audit(curve: &AnalyticMap, report: &RunReport, grid: TrimGrid) -> Result<Audit> {
    let Some(last) = report.accepted().last() else {
        return Ok(Audit { measured: 0.0, intrinsic: 0.0, ledger: 0.0, slack: 0.0, glued: 0, pass: true });
    };
    let outer = last.outer.build()?;
    let glue: &[DoublePoint] = match last.mode {
        Mode::Embedded => &[],
        Mode::Immersed => last.double_points.as_deref().ok_or(Error::Invalid("missing double-point data".into()))?,
    };
    let region = trim_to_component(curve, &outer, report.initial_radius, grid)?;
    let glued = annulus_length(curve, &region, report.initial_radius, glue)?;
    let plain = annulus_length(curve, &region, report.initial_radius, &[])?;
    let ledger = report.ledger();
    let slack = glued.slack + report.accepted().map(|i| i.length_slack).sum::<f64>();
    Ok(Audit {
        measured: glued.length,
        intrinsic: plain.length,
        ledger,
        slack,
        glued: glued.glued,
        pass: glued.length >= ledger - slack,
    })
}

/// Writes the report, the final map and plot data; returns the file names.
pub fn write_artifacts(outcome: &mut RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut names = vec![];
    let curve_json = serde_json::to_string(&outcome.curve).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("curve.json"), curve_json)?;
    names.push("curve.json".to_string());
    let grid = outcome.curve.domain.polar_grid(24, 96);
    fs::write(dir.join("curve_samples.csv"), samples_csv(&outcome.curve, &grid)?)?;
    names.push("curve_samples.csv".to_string());
    for (k, path) in outcome.paths.iter().enumerate() {
        let name = format!("oracle_path_{}.csv", k + 1);
        fs::write(dir.join(&name), points_csv(path)?)?;
        names.push(name);
    }
    names.push("report.json".to_string());
    outcome.report.artifacts = names;
    fs::write(dir.join("report.json"), outcome.report.to_json())?;
    Ok(())
}

/// Reads `curve.json` written by [`write_artifacts`].
pub fn load_curve(path: &Path) -> Result<AnalyticMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let raw: AnalyticMap = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    AnalyticMap::new(raw.domain, raw.x1, raw.x2)
}

/// Polynomial from `[i, j, re, im]` terms.
pub fn terms_polynomial(terms: &[[f64; 4]]) -> Result<crate::desing::BivariatePolynomial> {
    let t: Vec<(usize, usize, Complex64)> =
        terms.iter().map(|t| (t[0] as usize, t[1] as usize, Complex64::new(t[2], t[3]))).collect();
    crate::desing::BivariatePolynomial::from_terms(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALLS12: &str = r#"
name = "balls12"
eps0 = 0.1
depth = 1
[exhaustion]
kind = "balls"
radii = [1.0, 2.0]
[curve]
kind = "flat_disc"
radius = 1.0
"#;

    #[test]
    fn config_round_trip() {
        let c = RunConfig::from_toml(BALLS12).unwrap();
        assert_eq!(c.mode, Mode::Immersed);
        assert_eq!(c.net, NetSpec::Lemma);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn eps_above_curvature_radius_is_rejected() {
        let mut c = RunConfig::from_toml(BALLS12).unwrap();
        c.eps0 = 1.0;
        assert!(matches!(c.prepare(), Err(Error::Config(_))));
        c.eps0 = 0.999;
        assert!(c.prepare().is_ok());
    }

    #[test]
    fn ratio_must_halve() {
        let mut c = RunConfig::from_toml(BALLS12).unwrap();
        c.eps_ratio = 0.5;
        assert!(matches!(c.prepare(), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_halves_and_sums_below_twice_first() {
        let s = eps_schedule(0.1, 0.45, 6);
        assert!(schedule_ok(&s));
        assert!((s[2] - 0.1 * 0.45 * 0.45).abs() < 1e-15);
        assert!(!schedule_ok(&[0.1, 0.05]));
    }

    #[test]
    fn depth_zero_gives_empty_budget_and_zero_audit() {
        let mut c = RunConfig::from_toml(BALLS12).unwrap();
        c.depth = 0;
        let out = run_recursion_full(&c).unwrap();
        assert!(out.report.pass());
        assert_eq!(out.report.budget, 0.0);
        let a = image_completeness_audit(&out.curve, &out.report, TrimGrid { nr: 40, nt: 80 }).unwrap();
        assert_eq!(a.measured, 0.0);
        assert!(a.pass);
    }

    #[test]
    fn refined_exhaustion_has_chain_bodies() {
        let spec = ExhaustionSpec::Refined {
            inner: BodySpec::Ball { center: [0.0; 4], radius: 1.0 },
            outer: BodySpec::Ball { center: [0.0; 4], radius: 2.0 },
            include_outer: true,
        };
        let b = spec.build().unwrap();
        assert_eq!(b.len(), 6);
        assert!((b[1].circumradius() - 1.607927).abs() < 1e-5);
    }

    #[test]
    fn flat_annulus_length_is_radial() {
        let y = AnalyticMap::flat_disc(3.0).unwrap();
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let region = trim_to_component(&y, &dp, 1.0, TrimGrid { nr: 120, nt: 256 }).unwrap();
        let m = annulus_length(&y, &region, 1.0, &[]).unwrap();
        assert!((m.length - 1.0).abs() < 0.05, "{m:?}");
        assert!(m.slack < 0.05);
    }

    /// `X(z) = ((z−p)(z−q), z(z−p)(z−q))` glues `p = 0.3` to `q = 0.95`.
    fn planted() -> AnalyticMap {
        let c = |r: f64| Complex64::new(r, 0.0);
        let (p, q) = (0.3, 0.95);
        AnalyticMap::polynomial(1.0, vec![c(p * q), c(-(p + q)), c(1.0)], vec![c(0.0), c(p * q), c(-(p + q)), c(1.0)])
            .unwrap()
    }

    #[test]
    fn glued_crossing_shortens_the_annulus() {
        let y = planted();
        let dps = double_points(&y, DOUBLE_POINT_TOL).unwrap();
        assert_eq!(dps.len(), 1);
        assert!(dps[0].normal_crossing);
        let big = ConvexBody::centered_ball(10.0).unwrap();
        let region = trim_to_component(&y, &big, 0.1, TrimGrid { nr: 100, nt: 256 }).unwrap();
        let plain = annulus_length(&y, &region, 0.1, &[]).unwrap();
        let glued = annulus_length(&y, &region, 0.1, &dps).unwrap();
        assert_eq!(glued.glued, 1);
        assert!(glued.length < plain.length - 0.05, "{glued:?} {plain:?}");
    }

    #[test]
    fn embedding_audit_matches_intrinsic() {
        let y = AnalyticMap::flat_disc(3.0).unwrap();
        let dp = ConvexBody::centered_ball(2.0).unwrap();
        let region = trim_to_component(&y, &dp, 1.0, TrimGrid { nr: 60, nt: 128 }).unwrap();
        let a = annulus_length(&y, &region, 1.0, &[]).unwrap();
        let b = annulus_length(&y, &region, 1.0, &double_points(&y, DOUBLE_POINT_TOL).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lemma_net_above_cap_halts_with_partial_report() {
        let mut c = RunConfig::from_toml(BALLS12).unwrap();
        c.max_slabs = 8;
        let r = run_recursion(&c).unwrap();
        let h = r.halted.as_ref().unwrap();
        assert_eq!(h.stage, "stretch");
        assert_eq!(r.iterations.len(), 1);
        let net = r.iterations[0].net.as_ref().unwrap();
        assert!(net.slabs > 8);
        assert!(net.oracle.unwrap() >= net.bound.unwrap() - net.oracle_slack);
        assert_eq!(r.budget, 0.0);
        assert!(!r.pass());
    }

    #[test]
    fn report_json_round_trip() {
        let mut c = RunConfig::from_toml(BALLS12).unwrap();
        c.depth = 0;
        let r = run_recursion(&c).unwrap();
        let back = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(RunReport::from_json(&r.to_json().replace(REPORT_SCHEMA, "other/0")).is_err());
    }
}
