//! Tangent nets: ε-neighbourhoods of finitely many tangent hyperplanes.
//!
//! Besides the net itself this module builds nets with a quantitative
//! radius rule, repairs skeletons into generic position, and measures the
//! shortest path through a net with a visibility-graph oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convex::{dee, ConvexBody, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{hermitian, jmap, real_complement_basis, PointC2};

/// A thickened tangent hyperplane `{q : |⟨q − p, ν⟩| < ε}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub base: PointC2,
    pub normal: PointC2,
    pub halfwidth: f64,
}

impl Slab {
    pub fn offset(&self, q: PointC2) -> f64 {
        (q - self.base).dot(self.normal)
    }

    pub fn contains(&self, q: PointC2) -> bool {
        self.offset(q).abs() < self.halfwidth
    }

    /// Projection onto `span_R(Jν)`, relative to the base point.
    pub fn j_projection(&self, q: PointC2) -> f64 {
        q.dot(jmap(self.normal))
    }
}

/// Parameters recorded by [`build_net`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetBuild {
    pub m: usize,
    pub mu: usize,
    pub big_l: f64,
    pub eps_m: f64,
    pub eps: f64,
    pub d0: f64,
    pub kappa0: f64,
}

/// A tangent net of radius `radius` over `body`.
#[derive(Clone, Debug)]
pub struct TangentNet {
    pub body: ConvexBody,
    pub skeleton: Vec<PointC2>,
    pub normals: Vec<PointC2>,
    pub radius: f64,
    pub build: Option<NetBuild>,
}

impl TangentNet {
    /// Net with the given skeleton; every point must lie on the boundary.
    pub fn new(body: &ConvexBody, skeleton: Vec<PointC2>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Invalid(format!("net radius {radius}")));
        }
        let mut normals = Vec::with_capacity(skeleton.len());
        for p in &skeleton {
            normals.push(body.outward_normal(*p)?);
        }
        Ok(TangentNet { body: body.clone(), skeleton, normals, radius, build: None })
    }

    pub fn len(&self) -> usize {
        self.skeleton.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skeleton.is_empty()
    }

    pub fn slab(&self, i: usize) -> Slab {
        Slab { base: self.skeleton[i], normal: self.normals[i], halfwidth: self.radius }
    }

    pub fn slabs(&self) -> Vec<Slab> {
        (0..self.len()).map(|i| self.slab(i)).collect()
    }

    /// Index of the slab with the smallest offset, and that offset.
    pub fn nearest_slab(&self, q: PointC2) -> Option<(usize, f64)> {
        (0..self.len())
            .map(|i| (i, self.slab(i).offset(q).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn contains(&self, q: PointC2) -> bool {
        self.nearest_slab(q).map(|(_, d)| d < self.radius).unwrap_or(false)
    }
}

/// Distance from `q` to the union of the net's tangent hyperplanes.
pub fn net_distance(net: &TangentNet, q: PointC2) -> Result<f64> {
    net.nearest_slab(q).map(|(_, d)| d).ok_or(Error::Empty("net skeleton"))
}

/// A sampled arc (or closed curve) on a body boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub samples: Vec<PointC2>,
    pub cumlen: Vec<f64>,
    pub closed: bool,
}

impl BoundaryArc {
    pub fn new(body: &ConvexBody, mut samples: Vec<PointC2>, closed: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Empty("arc samples"));
        }
        for p in &samples {
            let r = (body.gauge(*p) - 1.0).abs();
            if r > BOUNDARY_TOL {
                return Err(Error::OffBoundary(r));
            }
        }
        if closed {
            samples.push(samples[0]);
        }
        let mut cumlen = vec![0.0];
        for w in samples.windows(2) {
            cumlen.push(cumlen.last().unwrap() + w[0].distance(w[1]));
        }
        Ok(BoundaryArc { samples, cumlen, closed })
    }

    /// Radial image on the boundary of the planar direction curve `cos t·a + sin t·b`.
    pub fn circle(body: &ConvexBody, a: PointC2, b: PointC2, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                body.boundary_point(a * t.cos() + b * t.sin())
            })
            .collect::<Result<Vec<_>>>()?;
        BoundaryArc::new(body, pts, true)
    }

    pub fn length(&self) -> f64 {
        *self.cumlen.last().unwrap()
    }

    /// Point at arclength `s`, by linear interpolation of the sample table.
    pub fn at_length(&self, s: f64) -> PointC2 {
        let s = s.clamp(0.0, self.length());
        let k = match self.cumlen.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => return self.samples[k],
            Err(k) => k.max(1),
        };
        let (s0, s1) = (self.cumlen[k - 1], self.cumlen[k]);
        let t = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        self.samples[k - 1] + (self.samples[k] - self.samples[k - 1]) * t
    }
}

/// A finite family of boundary arcs with `μ` and `𝔏 = 1 + max length`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryArcSet {
    pub arcs: Vec<BoundaryArc>,
}

impl BoundaryArcSet {
    pub fn mu(&self) -> usize {
        self.arcs.len()
    }

    pub fn big_l(&self) -> f64 {
        1.0 + self.arcs.iter().map(|a| a.length()).fold(0.0, f64::max)
    }
}

/// `(1/κ₀)(1 − cos(𝔏κ₀/m))`.
pub fn eps_m(big_l: f64, kappa0: f64, m: usize) -> f64 {
    (1.0 - (big_l * kappa0 / m as f64).cos()) / kappa0
}

/// The term `4(mμ+1)ε_m / sqrt((d₀κ₀+1)² − 1)`.
pub fn g_term(m: usize, mu: usize, eps_m: f64, d0: f64, kappa0: f64) -> f64 {
    4.0 * (m * mu + 1) as f64 * eps_m / ((d0 * kappa0 + 1.0).powi(2) - 1.0).sqrt()
}

/// Upper limit of the linear scan for `m`.
pub const MAX_M: usize = 10_000_000;

/// Smallest `m` for which the net of radius `ε_m` meets the radius condition.
pub fn smallest_m(big_l: f64, mu: usize, d0: f64, kappa0: f64, eps: f64) -> Result<usize> {
    // ε_m uses an angle, so tiny m can wrap around; the scan starts at 1 anyway.
    for m in 1..MAX_M {
        let e = eps_m(big_l, kappa0, m);
        if e.max(g_term(m, mu, e, d0, kappa0)) < eps {
            return Ok(m);
        }
    }
    Err(Error::Invalid("no admissible m below the scan limit".into()))
}

/// Builds the net with skeleton splitting each arc into `m` equal pieces.
pub fn build_net(a: &BoundaryArcSet, d: &ConvexBody, dp: &ConvexBody, eps: f64) -> Result<TangentNet> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps = {eps}")));
    }
    if a.arcs.is_empty() {
        return Err(Error::Empty("arc set"));
    }
    for arc in &a.arcs {
        for p in &arc.samples {
            let r = (d.gauge(*p) - 1.0).abs();
            if r > BOUNDARY_TOL {
                return Err(Error::OffBoundary(r));
            }
        }
    }
    let metrics = dee(d, dp)?;
    let (d0, kappa0) = (metrics.dist, metrics.kappa);
    let big_l = a.big_l();
    let mu = a.mu();
    let m = smallest_m(big_l, mu, d0, kappa0, eps)?;
    let em = eps_m(big_l, kappa0, m);
    let mut skeleton = Vec::with_capacity(m * mu);
    for arc in &a.arcs {
        let len = arc.length();
        for j in 0..m {
            let s = (j as f64 + 0.5) * len / m as f64;
            // Interpolated samples leave the surface slightly; push back radially.
            skeleton.push(d.boundary_point(arc.at_length(s) - d.center)?);
        }
    }
    let mut net = TangentNet::new(d, skeleton, em)?;
    net.build = Some(NetBuild { m, mu, big_l, eps_m: em, eps, d0, kappa0 });
    Ok(net)
}

/// True iff every arc sample lies in a slab whose base is within `𝔏/m`.
pub fn covers(net: &TangentNet, a: &BoundaryArcSet) -> Result<bool> {
    for arc in &a.arcs {
        for p in &arc.samples {
            let r = (net.body.gauge(*p) - 1.0).abs();
            if r > BOUNDARY_TOL {
                return Err(Error::DomainMismatch("arc sample not on the net's body".into()));
            }
        }
    }
    let reach = net.build.map(|b| b.big_l / b.m as f64).unwrap_or(f64::INFINITY);
    for arc in &a.arcs {
        for q in &arc.samples {
            let ok = (0..net.len()).any(|i| {
                let s = net.slab(i);
                // The chord bounds the intrinsic distance from below.
                s.contains(*q) && s.base.distance(*q) < reach
            });
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `|det[ν₁ ν₂]|` of the complex 2×2 matrix; zero iff complex-collinear.
pub fn complex_det(n1: PointC2, n2: PointC2) -> f64 {
    (n1.z1 * n2.z2 - n1.z2 * n2.z1).norm()
}

/// Threshold on [`complex_det`] for generic position.
pub const GENERIC_TOL: f64 = 1e-6;

/// Perturbs skeleton points along the boundary until no two normals are complex-collinear.
pub fn generic_position(net: &TangentNet) -> Result<TangentNet> {
    let mut out = net.clone();
    let n = out.len();
    for j in 0..n {
        let bad = |out: &TangentNet, nj: PointC2| {
            (0..j).any(|i| complex_det(out.normals[i], nj) <= GENERIC_TOL)
        };
        if !bad(&out, out.normals[j]) {
            continue;
        }
        let p = out.skeleton[j];
        let basis = real_complement_basis(out.normals[j]);
        let mut fixed = false;
        'search: for k in 0..40 {
            let step = 1e-3 * 1.5f64.powi(k);
            for b in basis {
                for sign in [1.0, -1.0] {
                    let q = out.body.boundary_point(p + b * (sign * step) - out.body.center)?;
                    let nq = out.body.outward_normal(q)?;
                    if !bad(&out, nq) {
                        out.skeleton[j] = q;
                        out.normals[j] = nq;
                        fixed = true;
                        break 'search;
                    }
                }
            }
        }
        if !fixed {
            return Err(Error::DegenerateSkeleton);
        }
    }
    Ok(out)
}

/// Unit `v` tangent at both points, maximizing `min_k |⟨⟨v, ν_k⟩⟩|`.
pub fn common_tangent_direction(d: &ConvexBody, p1: PointC2, p2: PointC2) -> Result<PointC2> {
    let n1 = d.outward_normal(p1)?;
    let n2 = d.outward_normal(p2)?;
    if (n1 - n2).norm() < 1e-12 {
        return Ok(canonical_sign(jmap(n1)));
    }
    if complex_det(n1, n2) <= GENERIC_TOL {
        return Err(Error::DegenerateDirection);
    }
    // Orthonormal basis of {v : ⟨v,ν₁⟩ = ⟨v,ν₂⟩ = 0}.
    let e2 = (n2 - n1 * n2.dot(n1)).normalized()?;
    let b = real_complement_basis(n1);
    let mut plane: Vec<PointC2> = Vec::new();
    for v in b {
        let mut w = v - e2 * v.dot(e2);
        for u in &plane {
            w = w - *u * w.dot(*u);
        }
        if w.norm() > 1e-8 {
            plane.push(w.normalized()?);
        }
        if plane.len() == 2 {
            break;
        }
    }
    let (a, bb) = (plane[0], plane[1]);
    let score = |t: f64| {
        let v = a * t.cos() + bb * t.sin();
        hermitian(v, n1).norm().min(hermitian(v, n2).norm())
    };
    let steps = 3600;
    let mut best = (0.0, f64::MIN);
    for k in 0..steps {
        let t = std::f64::consts::PI * k as f64 / steps as f64;
        let s = score(t);
        if s > best.1 {
            best = (t, s);
        }
    }
    // Golden-section polish on the bracketing interval.
    let h = std::f64::consts::PI / steps as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - gr * (hi - lo);
        let x2 = lo + gr * (hi - lo);
        if score(x1) > score(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = a * t.cos() + bb * t.sin();
    if v.dot(n1).abs() > 1e-12 || v.dot(n2).abs() > 1e-12 {
        return Err(Error::DegenerateDirection);
    }
    Ok(canonical_sign(v))
}

fn canonical_sign(v: PointC2) -> PointC2 {
    for x in v.to_reals() {
        if x.abs() > 1e-12 {
            return if x < 0.0 { -v } else { v };
        }
    }
    v
}

/// `f(t) = (t²κ₀ − t)/sqrt(t²κ₀² − 1)`, defined for `t > 1/κ₀`.
pub fn f_helper(t: f64, kappa0: f64) -> f64 {
    (t * t * kappa0 - t) / (t * t * kappa0 * kappa0 - 1.0).sqrt()
}

/// Certified lower bound `d(D, Fr D′) − 4(mμ+1)ε_m/sqrt((d₀κ₀+1)²−1)`.
pub fn analytic_lower_bound(net: &TangentNet, d: &ConvexBody, dp: &ConvexBody) -> Result<f64> {
    let b = net.build.ok_or_else(|| Error::Invalid("net was not produced by build_net".into()))?;
    let m = dee(d, dp)?;
    Ok(m.dee - g_term(b.m, b.mu, b.eps_m, m.dist, m.kappa))
}

/// Sampling density of the path oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Directions sampled on each slab's trace of the outer boundary (per offset layer).
    pub sink_dirs: usize,
    /// Rings and points per ring on each slab's trace of the inner boundary.
    pub cap_rings: usize,
    pub cap_points: usize,
    /// Grid spacing on slab-intersection seams.
    pub seam_spacing: f64,
    /// Number of nearest slabs (by normal angle) paired with each slab.
    pub neighbors: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { sink_dirs: 64, cap_rings: 2, cap_points: 8, seam_spacing: 0.3, neighbors: 2 }
    }
}

impl Resolution {
    /// Uniformly finer (`factor > 1`) or coarser sampling.
    pub fn scaled(&self, factor: f64) -> Self {
        Resolution {
            sink_dirs: ((self.sink_dirs as f64) * factor * factor).ceil() as usize,
            cap_rings: self.cap_rings,
            cap_points: ((self.cap_points as f64) * factor).ceil() as usize,
            seam_spacing: self.seam_spacing / factor,
            neighbors: self.neighbors,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Source,
    Sink,
    Seam,
}

/// Result of the shortest-path oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    /// `None` when no sink is reachable.
    pub min_length: Option<f64>,
    pub slack: f64,
    pub nodes: usize,
    pub path: Vec<PointC2>,
    /// Best `(source node, sink node, length)` per slab that reached a sink.
    pub pairs: Vec<(usize, usize, f64)>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over groups of mutually visible nodes.
///
/// Every pair of nodes sharing a group is joined by a straight edge. Returns
/// distances, predecessors and the settled target (first popped target).
pub fn group_dijkstra(
    points: &[PointC2],
    groups: &[Vec<usize>],
    node_groups: &[Vec<usize>],
    sources: &[usize],
    is_target: &dyn Fn(usize) -> bool,
) -> (Vec<f64>, Vec<usize>, Option<usize>) {
    let n = points.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        prev[s] = s;
        heap.push(HeapItem { dist: 0.0, node: s });
    }
    while let Some(HeapItem { dist: du, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if is_target(u) {
            return (dist, prev, Some(u));
        }
        for &g in &node_groups[u] {
            for &v in &groups[g] {
                if done[v] {
                    continue;
                }
                let nd = du + points[u].distance(points[v]);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
    }
    (dist, prev, None)
}

/// Shortest polygonal path through `net ∩ D̄′` from `Fr D` to `Fr D′`.
///
/// Each slab meets `D̄′` in a convex set, so nodes sharing a slab see each
/// other along straight edges inside the net. Graph paths are admissible
/// curves, hence the value over-approximates the continuous infimum; the
/// reported slack sums the sampling spacings along the winning path.
pub fn min_path_length(
    net: &TangentNet,
    d: &ConvexBody,
    dp: &ConvexBody,
    res: &Resolution,
) -> Result<OracleResult> {
    let empty = OracleResult { min_length: None, slack: 0.0, nodes: 0, path: vec![], pairs: vec![] };
    if net.is_empty() {
        return Ok(empty);
    }
    let eps = net.radius;
    let ns = net.len();
    let mut points: Vec<PointC2> = Vec::new();
    let mut kinds: Vec<NodeKind> = Vec::new();
    let mut node_groups: Vec<Vec<usize>> = Vec::new();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); ns];
    let mut spacing = vec![0.0f64; ns];
    let mut cap_spacing = vec![0.0f64; ns];
    let push = |p: PointC2, k: NodeKind, gs: Vec<usize>, pts: &mut Vec<PointC2>,
                    kinds: &mut Vec<NodeKind>, ng: &mut Vec<Vec<usize>>, groups: &mut Vec<Vec<usize>>| {
        let id = pts.len();
        pts.push(p);
        kinds.push(k);
        for &g in &gs {
            groups[g].push(id);
        }
        ng.push(gs);
    };
    let offsets = [-eps, 0.0, eps];
    let sink_cover = covering_angle(res.sink_dirs);
    let cap_cover = covering_angle(res.cap_points);
    for i in 0..ns {
        let s = net.slab(i);
        let basis = real_complement_basis(s.normal);
        // Sources: trace of Fr D in the slab, a cap around the base point.
        let cap = cap_radius(d, &s);
        cap_spacing[i] = cap;
        push(s.base, NodeKind::Source, vec![i], &mut points, &mut kinds, &mut node_groups, &mut groups);
        for ring in 1..=res.cap_rings {
            let r = cap * ring as f64 / res.cap_rings as f64;
            for t in fib_s2(res.cap_points) {
                let dir = basis[0] * t[0] + basis[1] * t[1] + basis[2] * t[2];
                let q = d.boundary_point(s.base + dir * r - d.center)?;
                if s.offset(q).abs() <= eps {
                    push(q, NodeKind::Source, vec![i], &mut points, &mut kinds, &mut node_groups, &mut groups);
                }
            }
        }
        // Sinks: trace of Fr D′ on three offset layers of the slab.
        let dirs = fib_s2(res.sink_dirs);
        for off in offsets {
            let origin = s.base + s.normal * off;
            if !dp.contains(origin) {
                continue;
            }
            for t in &dirs {
                let dir = basis[0] * t[0] + basis[1] * t[1] + basis[2] * t[2];
                let r = chord_exit(dp, origin, dir);
                push(origin + dir * r, NodeKind::Sink, vec![i], &mut points, &mut kinds, &mut node_groups, &mut groups);
            }
        }
        let r_sink = chord_exit(dp, s.base, basis[0]);
        spacing[i] = r_sink * chord(sink_cover);
    }
    // Seams: grids on the 2-planes where pairs of nearby hyperplanes meet.
    let mut pairs = std::collections::BTreeSet::new();
    for i in 0..ns {
        let mut near: Vec<(f64, usize)> = (0..ns)
            .filter(|&j| j != i)
            .map(|j| (-net.normals[i].dot(net.normals[j]), j))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in near.iter().take(res.neighbors) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let reach = dp.circumradius() + dp.center.distance(d.center);
    for &(i, j) in &pairs {
        let (si, sj) = (net.slab(i), net.slab(j));
        let corners = [(0.0, 0.0), (-eps, -eps), (eps, eps), (-eps, eps), (eps, -eps)];
        let layers: &[(f64, f64)] = if eps > 1e-3 { &corners } else { &corners[..1] };
        for &(oi, oj) in layers {
            let Some((x0, e1, e2)) = seam_plane(&si, &sj, oi, oj) else { continue };
            let h = res.seam_spacing;
            let kmax = (reach / h).ceil() as i64;
            for a in -kmax..=kmax {
                for b in -kmax..=kmax {
                    let q = x0 + e1 * (a as f64 * h) + e2 * (b as f64 * h);
                    if dp.gauge(q) > 1.0 || d.gauge(q) < 1.0 - 2.0 * eps {
                        continue;
                    }
                    push(q, NodeKind::Seam, vec![i, j], &mut points, &mut kinds, &mut node_groups, &mut groups);
                }
            }
        }
    }
    let sources: Vec<usize> = (0..points.len()).filter(|&k| kinds[k] == NodeKind::Source).collect();
    let is_sink = |k: usize| kinds[k] == NodeKind::Sink;
    let (dist, prev, hit) = group_dijkstra(&points, &groups, &node_groups, &sources, &is_sink);
    let Some(t) = hit else {
        return Ok(OracleResult { nodes: points.len(), ..empty });
    };
    let mut path = vec![t];
    let mut cur = t;
    while prev[cur] != cur {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    let src_slab = node_groups[path[0]][0];
    let sink_slab = node_groups[t][0];
    let seams = path.iter().filter(|&&k| kinds[k] == NodeKind::Seam).count();
    let cap = cap_spacing[src_slab];
    let slack = cap * (1.0 / res.cap_rings as f64 + chord(cap_cover))
        + spacing[sink_slab]
        + seams as f64 * res.seam_spacing * std::f64::consts::FRAC_1_SQRT_2;
    let mut best_pairs = Vec::new();
    for i in 0..ns {
        let best = groups[i]
            .iter()
            .filter(|&&k| kinds[k] == NodeKind::Sink && dist[k].is_finite())
            .min_by(|&&a, &&b| dist[a].total_cmp(&dist[b]));
        if let Some(&k) = best {
            let mut src = k;
            while prev[src] != src {
                src = prev[src];
            }
            best_pairs.push((src, k, dist[k]));
        }
    }
    Ok(OracleResult {
        min_length: Some(dist[t]),
        slack,
        nodes: points.len(),
        path: path.iter().map(|&k| points[k]).collect(),
        pairs: best_pairs,
    })
}

/// Geodesic-ish radius of the cap `Fr D ∩ slab` around the base point.
fn cap_radius(d: &ConvexBody, s: &Slab) -> f64 {
    let basis = real_complement_basis(s.normal);
    let mut r_min = f64::INFINITY;
    for b in basis {
        for sign in [1.0, -1.0] {
            let dir = b * sign;
            let inside = |r: f64| {
                d.boundary_point(s.base + dir * r - d.center)
                    .map(|q| s.offset(q).abs() <= s.halfwidth)
                    .unwrap_or(false)
            };
            let (mut lo, mut hi) = (0.0, (8.0 * s.halfwidth).sqrt().max(1e-9));
            while inside(hi) && hi < 1e3 {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            r_min = r_min.min(lo);
        }
    }
    r_min
}

/// Distance along `dir` from an interior point `origin` to the boundary of `body`.
pub fn chord_exit(body: &ConvexBody, origin: PointC2, dir: PointC2) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while body.contains(origin + dir * hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if body.contains(origin + dir * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Base point and orthonormal basis of `{⟨x,νᵢ⟩ = cᵢ + oᵢ, ⟨x,νⱼ⟩ = cⱼ + oⱼ}`.
fn seam_plane(si: &Slab, sj: &Slab, oi: f64, oj: f64) -> Option<(PointC2, PointC2, PointC2)> {
    let (a, b) = (si.normal, sj.normal);
    let g = a.dot(b);
    let det = 1.0 - g * g;
    if det < 1e-12 {
        return None;
    }
    let ci = si.base.dot(a) + oi;
    let cj = sj.base.dot(b) + oj;
    let x = (ci - g * cj) / det;
    let y = (cj - g * ci) / det;
    let x0 = a * x + b * y;
    let e = (b - a * g).normalized().ok()?;
    let mut basis = Vec::new();
    for v in real_complement_basis(a) {
        let mut w = v - e * v.dot(e);
        for u in &basis {
            w = w - *u * w.dot(*u);
        }
        if w.norm() > 1e-8 {
            basis.push(w.normalized().ok()?);
        }
        if basis.len() == 2 {
            break;
        }
    }
    Some((x0, basis[0], basis[1]))
}

fn chord(angle: f64) -> f64 {
    2.0 * (0.5 * angle).sin()
}

/// Largest angle from a dense probe set to the nearest of `fib_s2(n)`.
pub fn covering_angle(n: usize) -> f64 {
    let pts = fib_s2(n);
    fib_s2(20_000)
        .iter()
        .map(|q| {
            pts.iter()
                .map(|p| (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0).acos())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Quasi-uniform points on S² (Fibonacci spiral).
pub fn fib_s2(n: usize) -> Vec<[f64; 3]> {
    let ga = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = ga * k as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Skeleton point on the unit-sphere-like boundary in Hopf coordinates.
pub fn hopf_skeleton(body: &ConvexBody, eta: f64, thetas: &[(f64, f64)]) -> Result<Vec<PointC2>> {
    thetas
        .iter()
        .map(|&(a, b)| {
            body.boundary_point(PointC2::new(
                Complex64::from_polar(eta.cos(), a),
                Complex64::from_polar(eta.sin(), b),
            ))
        })
        .collect()
}
