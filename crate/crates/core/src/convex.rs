//! Bounded regular strictly convex bodies in R⁴ ≅ C².
//!
//! Bodies answer gauge, closest-point, normal, curvature and support
//! queries. On top of those sit the pair metrics (`dist`, `κ`, `d`), the
//! Hausdorff distance of point clouds, and the refinement of nested pairs
//! into chains whose `d`-values sum to at least one.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{real_complement_basis, sphere_s3_samples, PointC2};

/// Tolerance for "point lies on the boundary" checks (gauge residual).
pub const BOUNDARY_TOL: f64 = 1e-7;

/// A smooth convex function whose negative sublevel set is the body.
pub trait ConvexFunction: Send + Sync {
    fn value(&self, x: PointC2) -> f64;
    fn gradient(&self, x: PointC2) -> Vector4<f64>;
    fn hessian(&self, x: PointC2) -> Matrix4<f64>;
    /// Serializable description, if the function belongs to a known family.
    fn spec(&self) -> Option<LevelSetSpec> {
        None
    }
}

/// Serializable level-set families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LevelSetSpec {
    /// `Σ (yᵢ/aᵢ)² + c Σ (yᵢ/aᵢ)⁴ − 1`, with `y = x − center`.
    Quartic { axes: [f64; 4], quartic: f64 },
}

/// Axis-aligned quartic perturbation of an ellipsoid.
#[derive(Clone, Debug)]
pub struct QuarticLevelSet {
    pub center: PointC2,
    pub axes: [f64; 4],
    pub quartic: f64,
}

impl ConvexFunction for QuarticLevelSet {
    fn value(&self, x: PointC2) -> f64 {
        let y = (x - self.center).to_reals();
        let mut s = -1.0;
        for i in 0..4 {
            let t = y[i] / self.axes[i];
            s += t * t + self.quartic * t.powi(4);
        }
        s
    }

    fn gradient(&self, x: PointC2) -> Vector4<f64> {
        let y = (x - self.center).to_reals();
        Vector4::from_fn(|i, _| {
            let a = self.axes[i];
            let t = y[i] / a;
            (2.0 * t + 4.0 * self.quartic * t.powi(3)) / a
        })
    }

    fn hessian(&self, x: PointC2) -> Matrix4<f64> {
        let y = (x - self.center).to_reals();
        Matrix4::from_fn(|i, j| {
            if i != j {
                return 0.0;
            }
            let a = self.axes[i];
            let t = y[i] / a;
            (2.0 + 12.0 * self.quartic * t * t) / (a * a)
        })
    }

    fn spec(&self) -> Option<LevelSetSpec> {
        Some(LevelSetSpec::Quartic { axes: self.axes, quartic: self.quartic })
    }
}

/// Shape data of a body.
#[derive(Clone)]
pub enum Shape {
    Ball { radius: f64 },
    /// Semi-axes with an orthonormal frame; column `i` of `frame` is axis `i`.
    Ellipsoid { axes: [f64; 4], frame: Matrix4<f64> },
    LevelSet { func: Arc<dyn ConvexFunction> },
    /// Outer (or inner) parallel body of `base` at signed distance `offset`.
    Parallel { base: Box<ConvexBody>, offset: f64 },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { radius } => write!(f, "Ball({radius})"),
            Shape::Ellipsoid { axes, .. } => write!(f, "Ellipsoid({axes:?})"),
            Shape::LevelSet { .. } => write!(f, "LevelSet"),
            Shape::Parallel { base, offset } => write!(f, "Parallel({base:?}, {offset})"),
        }
    }
}

/// A bounded regular strictly convex domain with a distinguished interior point.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    pub center: PointC2,
    pub shape: Shape,
}

/// Closest boundary point with its outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFoot {
    pub point: PointC2,
    pub normal: PointC2,
    /// Signed distance of the query point (negative inside).
    pub signed_distance: f64,
}

impl ConvexBody {
    pub fn ball(center: PointC2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return Err(Error::Invalid(format!("ball radius {radius}")));
        }
        Ok(ConvexBody { center, shape: Shape::Ball { radius } })
    }

    pub fn centered_ball(radius: f64) -> Result<Self> {
        Self::ball(PointC2::ZERO, radius)
    }

    pub fn ellipsoid(center: PointC2, axes: [f64; 4], frame: Matrix4<f64>) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Invalid(format!("ellipsoid axes {axes:?}")));
        }
        let defect = (frame.transpose() * frame - Matrix4::identity()).abs().max();
        if defect > 1e-10 {
            return Err(Error::Invalid(format!("frame not orthonormal ({defect:.2e})")));
        }
        Ok(ConvexBody { center, shape: Shape::Ellipsoid { axes, frame } })
    }

    pub fn axis_ellipsoid(center: PointC2, axes: [f64; 4]) -> Result<Self> {
        Self::ellipsoid(center, axes, Matrix4::identity())
    }

    /// Body `{F < 0}`; `center` must satisfy `F(center) < 0`.
    pub fn level_set(center: PointC2, func: Arc<dyn ConvexFunction>) -> Result<Self> {
        if !(func.value(center) < 0.0) {
            return Err(Error::Invalid("level-set center is not interior".into()));
        }
        let body = ConvexBody { center, shape: Shape::LevelSet { func } };
        // Regularity and strict convexity are certified at samples only.
        for p in body.boundary_samples(256) {
            let g = body.defining_gradient(p);
            if g.norm() < 1e-12 {
                return Err(Error::Invalid("vanishing gradient on boundary".into()));
            }
            let k = body.principal_curvatures(p)?;
            if k[0] <= 0.0 {
                return Err(Error::NotStrictlyConvex(k[0]));
            }
        }
        Ok(body)
    }

    pub fn quartic(center: PointC2, axes: [f64; 4], quartic: f64) -> Result<Self> {
        if quartic < 0.0 || axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Invalid("quartic parameters".into()));
        }
        Self::level_set(center, Arc::new(QuarticLevelSet { center, axes, quartic }))
    }

    /// Radius `s > 0` with `center + s·dir` on the boundary (`dir` unit).
    pub fn radial(&self, dir: PointC2) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * dir.to_vector();
                let s: f64 = (0..4).map(|i| (y[i] / axes[i]).powi(2)).sum();
                1.0 / s.sqrt()
            }
            Shape::LevelSet { func } => {
                let f = |s: f64| func.value(self.center + dir * s);
                ray_root(f, 1.0)
            }
            Shape::Parallel { base, offset } => {
                let t = *offset;
                let f = |s: f64| base.signed_distance(self.center + dir * s) - t;
                ray_root(f, base.radial(dir).max(1e-3))
            }
        }
    }

    /// Boundary point in the direction `dir` from the center.
    pub fn boundary_point(&self, dir: PointC2) -> Result<PointC2> {
        let d = dir.normalized()?;
        Ok(self.center + d * self.radial(d))
    }

    /// Minkowski gauge with respect to the center.
    pub fn gauge(&self, q: PointC2) -> f64 {
        let v = q - self.center;
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        n / self.radial(v * (1.0 / n))
    }

    /// Strict interior membership.
    pub fn contains(&self, q: PointC2) -> bool {
        match &self.shape {
            Shape::Parallel { base, offset } => base.signed_distance(q) < *offset,
            _ => self.gauge(q) < 1.0,
        }
    }

    /// Quasi-uniform boundary samples (S³ directions pushed through the gauge).
    pub fn boundary_samples(&self, n: usize) -> Vec<PointC2> {
        sphere_s3_samples(n)
            .into_iter()
            .map(|d| self.center + d * self.radial(d))
            .collect()
    }

    /// Closest boundary point, outward normal there, and signed distance.
    pub fn closest(&self, q: PointC2) -> BoundaryFoot {
        match &self.shape {
            Shape::Ball { radius } => {
                let v = q - self.center;
                let n = v.norm();
                let normal = if n > 0.0 {
                    v * (1.0 / n)
                } else {
                    PointC2::from_reals([1.0, 0.0, 0.0, 0.0])
                };
                BoundaryFoot {
                    point: self.center + normal * *radius,
                    normal,
                    signed_distance: n - radius,
                }
            }
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * (q - self.center).to_vector();
                let (x, sd) = ellipsoid_closest(axes, &y);
                let g = Vector4::from_fn(|i, _| x[i] / (axes[i] * axes[i]));
                let n = frame * g.normalize();
                BoundaryFoot {
                    point: self.center + PointC2::from_vector(&(frame * x)),
                    normal: PointC2::from_vector(&n),
                    signed_distance: sd,
                }
            }
            Shape::LevelSet { func } => self.levelset_closest(func.as_ref(), q),
            Shape::Parallel { base, offset } => {
                let f = base.closest(q);
                BoundaryFoot {
                    point: f.point + f.normal * *offset,
                    normal: f.normal,
                    signed_distance: f.signed_distance - offset,
                }
            }
        }
    }

    pub fn signed_distance(&self, q: PointC2) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => (q - self.center).norm() - radius,
            _ => self.closest(q).signed_distance,
        }
    }

    fn levelset_closest(&self, func: &dyn ConvexFunction, q: PointC2) -> BoundaryFoot {
        type V5 = SVector<f64, 5>;
        type M5 = SMatrix<f64, 5, 5>;
        let v = q - self.center;
        let dir = if v.norm() > 1e-14 {
            v * (1.0 / v.norm())
        } else {
            PointC2::from_reals([1.0, 0.0, 0.0, 0.0])
        };
        // Seed from the nearest of a coarse set of radial boundary points.
        let mut x = (self.center + dir * self.radial(dir)).to_vector();
        let qv = q.to_vector();
        for d in sphere_s3_samples(128) {
            let cand = (self.center + d * self.radial(d)).to_vector();
            if (cand - qv).norm_squared() < (x - qv).norm_squared() {
                x = cand;
            }
        }
        // Tangential descent with radial retraction; the distance decreases monotonically.
        let mut step = 1.0;
        let mut dcur = (x - qv).norm();
        for _ in 0..400 {
            let n = func.gradient(PointC2::from_vector(&x)).normalize();
            let v = qv - x;
            let t = v - n * n.dot(&v);
            if t.norm() < 1e-13 || step < 1e-14 {
                break;
            }
            let cand = PointC2::from_vector(&(x + t * step));
            let xn = (self.center + (cand - self.center).normalized().unwrap_or(cand)
                * self.radial((cand - self.center).normalized().unwrap_or(cand)))
            .to_vector();
            let dn = (xn - qv).norm();
            if dn < dcur {
                x = xn;
                dcur = dn;
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.5;
            }
        }
        let x_descent = x;
        let g0 = func.gradient(PointC2::from_vector(&x));
        let mut lam = -(qv - x).dot(&g0) / g0.norm_squared();
        let residual = |x: &Vector4<f64>, lam: f64| -> V5 {
            let p = PointC2::from_vector(x);
            let g = func.gradient(p);
            let r = x - qv + g * lam;
            V5::new(r[0], r[1], r[2], r[3], func.value(p))
        };
        let mut r = residual(&x, lam);
        for _ in 0..60 {
            if r.norm() < 1e-14 {
                break;
            }
            let p = PointC2::from_vector(&x);
            let g = func.gradient(p);
            let h = func.hessian(p);
            let mut jac = M5::zeros();
            let top = Matrix4::identity() + h * lam;
            for i in 0..4 {
                for j in 0..4 {
                    jac[(i, j)] = top[(i, j)];
                }
                jac[(i, 4)] = g[i];
                jac[(4, i)] = g[i];
            }
            let Some(step) = jac.lu().solve(&(-r)) else { break };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let xn = x + step.fixed_rows::<4>(0) * alpha;
                let ln = lam + step[4] * alpha;
                let rn = residual(&xn, ln);
                if rn.norm() < r.norm() {
                    x = xn;
                    lam = ln;
                    r = rn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if (x - qv).norm() > dcur + 1e-12 {
            x = x_descent;
        }
        // Snap onto the surface radially to remove the residual in F.
        let p0 = PointC2::from_vector(&x);
        let point = self.boundary_point(p0 - self.center).unwrap_or(p0);
        let normal = PointC2::from_vector(&func.gradient(point).normalize());
        let d = q.distance(point);
        let inside = func.value(q) < 0.0;
        BoundaryFoot { point, normal, signed_distance: if inside { -d } else { d } }
    }

    /// Gradient of a defining function at `p` (any positive multiple of the normal).
    fn defining_gradient(&self, p: PointC2) -> Vector4<f64> {
        match &self.shape {
            Shape::LevelSet { func } => func.gradient(p),
            _ => self.closest(p).normal.to_vector(),
        }
    }

    /// Outward unit normal at a boundary point.
    pub fn outward_normal(&self, p: PointC2) -> Result<PointC2> {
        let r = (self.gauge(p) - 1.0).abs();
        if r > BOUNDARY_TOL {
            return Err(Error::OffBoundary(r));
        }
        Ok(self.normal_unchecked(p))
    }

    /// Outward unit normal at the boundary foot of `p` (no boundary check).
    pub fn normal_unchecked(&self, p: PointC2) -> PointC2 {
        match &self.shape {
            Shape::Ball { .. } => (p - self.center).normalized().unwrap_or(p),
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * (p - self.center).to_vector();
                let g = Vector4::from_fn(|i, _| y[i] / (axes[i] * axes[i]));
                PointC2::from_vector(&(frame * g.normalize()))
            }
            Shape::LevelSet { func } => PointC2::from_vector(&func.gradient(p).normalize()),
            Shape::Parallel { .. } => self.closest(p).normal,
        }
    }

    /// Principal curvatures (ascending) at a boundary point, w.r.t. the inner normal.
    pub fn principal_curvatures(&self, p: PointC2) -> Result<[f64; 3]> {
        match &self.shape {
            Shape::Ball { radius } => Ok([1.0 / radius; 3]),
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * (p - self.center).to_vector();
                let g = Vector4::from_fn(|i, _| 2.0 * y[i] / (axes[i] * axes[i]));
                let h = Matrix4::from_fn(|i, j| {
                    if i == j {
                        2.0 / (axes[i] * axes[i])
                    } else {
                        0.0
                    }
                });
                Ok(shape_operator_eigs(&g, &h))
            }
            Shape::LevelSet { func } => Ok(shape_operator_eigs(&func.gradient(p), &func.hessian(p))),
            Shape::Parallel { base, offset } => {
                let foot = base.closest(p);
                let k = base.principal_curvatures(foot.point)?;
                let mut out = [0.0; 3];
                for i in 0..3 {
                    let den = 1.0 + offset * k[i];
                    if den <= 0.0 {
                        return Err(Error::ParallelDegenerate { t: *offset, limit: -1.0 / k[i] });
                    }
                    out[i] = k[i] / den;
                }
                Ok(out)
            }
        }
    }

    /// Maximum principal curvature `κ(D)`.
    ///
    /// Balls, ellipsoids and their parallel bodies use closed forms; level
    /// sets use boundary sampling with two local refinement rounds.
    pub fn kappa_max(&self) -> Result<f64> {
        match &self.shape {
            Shape::Ball { radius } => Ok(1.0 / radius),
            Shape::Ellipsoid { axes, .. } => {
                let amax = axes.iter().cloned().fold(f64::MIN, f64::max);
                let amin = axes.iter().cloned().fold(f64::MAX, f64::min);
                Ok(amax / (amin * amin))
            }
            Shape::Parallel { base, offset } => {
                let k = base.kappa_max()?;
                let den = 1.0 + offset * k;
                if den <= 0.0 {
                    return Err(Error::ParallelDegenerate { t: *offset, limit: -1.0 / k });
                }
                Ok(k / den)
            }
            Shape::LevelSet { .. } => self.sampled_kappa_max(4096),
        }
    }

    /// Sampled supremum of the largest principal curvature, refined locally.
    pub fn sampled_kappa_max(&self, n: usize) -> Result<f64> {
        let dirs = sphere_s3_samples(n);
        let mut scored = Vec::with_capacity(n);
        for d in &dirs {
            let p = self.center + *d * self.radial(*d);
            let k = self.principal_curvatures(p)?;
            if k[0] <= 0.0 {
                return Err(Error::NotStrictlyConvex(k[0]));
            }
            scored.push((k[2], *d));
        }
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let f = |d: PointC2| -> f64 {
            let p = self.center + d * self.radial(d);
            self.principal_curvatures(p).map(|k| -k[2]).unwrap_or(f64::INFINITY)
        };
        let starts: Vec<PointC2> = scored.iter().take(4).map(|s| s.1).collect();
        // Two refinement rounds: coarse pattern search then a fine one.
        let (u, _) = minimize_on_sphere(&f, &starts, 0.2, 1e-5);
        let (_, v) = minimize_on_sphere(&f, &[u], 1e-3, 1e-9);
        Ok((-v).max(scored[0].0))
    }

    /// Support function `h(u) = max_{x ∈ D̄} ⟨x, u⟩`.
    pub fn support(&self, u: PointC2) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => self.center.dot(u) + radius * u.norm(),
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * u.to_vector();
                let s: f64 = (0..4).map(|i| (axes[i] * y[i]).powi(2)).sum();
                self.center.dot(u) + s.sqrt()
            }
            Shape::LevelSet { func } => self.levelset_support_point(func.as_ref(), u).dot(u),
            Shape::Parallel { base, offset } => base.support(u) + offset * u.norm(),
        }
    }

    /// Boundary point with outward normal `u`.
    pub fn support_point(&self, u: PointC2) -> Result<PointC2> {
        let u = u.normalized()?;
        Ok(match &self.shape {
            Shape::Ball { radius } => self.center + u * *radius,
            Shape::Ellipsoid { axes, frame } => {
                let y = frame.transpose() * u.to_vector();
                let s: f64 = (0..4).map(|i| (axes[i] * y[i]).powi(2)).sum::<f64>().sqrt();
                let x = Vector4::from_fn(|i, _| axes[i] * axes[i] * y[i] / s);
                self.center + PointC2::from_vector(&(frame * x))
            }
            Shape::LevelSet { func } => self.levelset_support_point(func.as_ref(), u),
            Shape::Parallel { base, offset } => base.support_point(u)? + u * *offset,
        })
    }

    fn levelset_support_point(&self, func: &dyn ConvexFunction, u: PointC2) -> PointC2 {
        // Newton on ∇F(x) = μu, F(x) = 0.
        type V5 = SVector<f64, 5>;
        type M5 = SMatrix<f64, 5, 5>;
        let un = u.normalized().unwrap_or(u);
        let uv = un.to_vector();
        let mut x = (self.center + un * self.radial(un)).to_vector();
        let mut mu = func.gradient(PointC2::from_vector(&x)).dot(&uv);
        let residual = |x: &Vector4<f64>, mu: f64| -> V5 {
            let p = PointC2::from_vector(x);
            let r = func.gradient(p) - uv * mu;
            V5::new(r[0], r[1], r[2], r[3], func.value(p))
        };
        let mut r = residual(&x, mu);
        for _ in 0..60 {
            if r.norm() < 1e-14 {
                break;
            }
            let p = PointC2::from_vector(&x);
            let g = func.gradient(p);
            let h = func.hessian(p);
            let mut jac = M5::zeros();
            for i in 0..4 {
                for j in 0..4 {
                    jac[(i, j)] = h[(i, j)];
                }
                jac[(i, 4)] = -uv[i];
                jac[(4, i)] = g[i];
            }
            let Some(step) = jac.lu().solve(&(-r)) else { break };
            let mut alpha = 1.0;
            let mut ok = false;
            for _ in 0..30 {
                let xn = x + step.fixed_rows::<4>(0) * alpha;
                let mn = mu + step[4] * alpha;
                let rn = residual(&xn, mn);
                if rn.norm() < r.norm() {
                    x = xn;
                    mu = mn;
                    r = rn;
                    ok = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !ok {
                break;
            }
        }
        PointC2::from_vector(&x)
    }

    /// Parallel body at signed distance `t`.
    pub fn parallel_body(&self, t: f64) -> Result<ConvexBody> {
        let k = self.kappa_max()?;
        if t <= -1.0 / k {
            return Err(Error::ParallelDegenerate { t, limit: -1.0 / k });
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        Ok(match &self.shape {
            Shape::Ball { radius } => ConvexBody::ball(self.center, radius + t)?,
            Shape::Parallel { base, offset } => ConvexBody {
                center: self.center,
                shape: Shape::Parallel { base: base.clone(), offset: offset + t },
            },
            _ => ConvexBody {
                center: self.center,
                shape: Shape::Parallel { base: Box::new(self.clone()), offset: t },
            },
        })
    }

    /// Bounding radius about the center (max of the radial function, sampled for general bodies).
    pub fn circumradius(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Ellipsoid { axes, .. } => axes.iter().cloned().fold(0.0, f64::max),
            Shape::Parallel { base, offset } => base.circumradius() + offset.max(0.0),
            Shape::LevelSet { .. } => sphere_s3_samples(2048)
                .into_iter()
                .map(|d| self.radial(d))
                .fold(0.0, f64::max),
        }
    }

    /// Diameter (`max_u h(u) + h(−u)`), sampled and refined for general bodies.
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => 2.0 * radius,
            Shape::Ellipsoid { axes, .. } => 2.0 * axes.iter().cloned().fold(0.0, f64::max),
            _ => {
                let f = |u: PointC2| -(self.support(u) + self.support(-u));
                let dirs = sphere_s3_samples(1024);
                let mut best: Vec<(f64, PointC2)> = dirs.iter().map(|d| (f(*d), *d)).collect();
                best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let starts: Vec<PointC2> = best.iter().take(3).map(|b| b.1).collect();
                -minimize_on_sphere(&f, &starts, 0.1, 1e-10).1
            }
        }
    }

    /// Serializable description of the body.
    pub fn to_spec(&self) -> Result<BodySpec> {
        Ok(match &self.shape {
            Shape::Ball { radius } => BodySpec::Ball { center: self.center.to_reals(), radius: *radius },
            Shape::Ellipsoid { axes, frame } => BodySpec::Ellipsoid {
                center: self.center.to_reals(),
                axes: *axes,
                frame: Some(std::array::from_fn(|i| std::array::from_fn(|r| frame[(r, i)]))),
            },
            Shape::LevelSet { func } => {
                let spec = func.spec().ok_or_else(|| {
                    Error::Invalid("level-set function has no serializable description".into())
                })?;
                BodySpec::LevelSet { center: self.center.to_reals(), function: spec }
            }
            Shape::Parallel { base, offset } => {
                BodySpec::Parallel { base: Box::new(base.to_spec()?), offset: *offset }
            }
        })
    }
}

/// Structured-text description of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodySpec {
    Ball {
        center: [f64; 4],
        radius: f64,
    },
    Ellipsoid {
        center: [f64; 4],
        axes: [f64; 4],
        /// Axis directions as rows; identity when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame: Option<[[f64; 4]; 4]>,
    },
    LevelSet {
        center: [f64; 4],
        function: LevelSetSpec,
    },
    Parallel {
        base: Box<BodySpec>,
        offset: f64,
    },
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Ball { center, radius } => ConvexBody::ball(PointC2::from_reals(*center), *radius),
            BodySpec::Ellipsoid { center, axes, frame } => {
                let m = match frame {
                    Some(rows) => Matrix4::from_fn(|r, c| rows[c][r]),
                    None => Matrix4::identity(),
                };
                ConvexBody::ellipsoid(PointC2::from_reals(*center), *axes, m)
            }
            BodySpec::LevelSet { center, function } => match function {
                LevelSetSpec::Quartic { axes, quartic } => {
                    ConvexBody::quartic(PointC2::from_reals(*center), *axes, *quartic)
                }
            },
            BodySpec::Parallel { base, offset } => base.build()?.parallel_body(*offset),
        }
    }
}

/// Root of `f(s) = 0` for `s > 0`, with `f(0) < 0` and `f` eventually positive.
fn ray_root(f: impl Fn(f64) -> f64, guess: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = guess.max(1e-6);
    let mut grow = 0;
    while f(hi) <= 0.0 && grow < 200 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
    }
    // Bisection to full precision; the functions are cheap.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closest point on the axis-aligned ellipsoid `Σ (xᵢ/aᵢ)² = 1` to `y`, and signed distance.
fn ellipsoid_closest(axes: &[f64; 4], y: &Vector4<f64>) -> (Vector4<f64>, f64) {
    let s: f64 = (0..4).map(|i| (y[i] / axes[i]).powi(2)).sum();
    let inside = s < 1.0;
    if (s - 1.0).abs() < 1e-15 {
        return (*y, 0.0);
    }
    // x_i = a_i² y_i / (a_i² + t); g(t) = Σ (a_i y_i/(a_i² + t))² − 1 is decreasing.
    let g = |t: f64| -> f64 {
        (0..4).map(|i| (axes[i] * y[i] / (axes[i] * axes[i] + t)).powi(2)).sum::<f64>() - 1.0
    };
    let amin2 = axes.iter().map(|a| a * a).fold(f64::MAX, f64::min);
    let (mut lo, mut hi) = if inside { (-amin2, 0.0) } else { (0.0, 1.0) };
    if !inside {
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
    }
    if inside && g(lo * (1.0 - 1e-15)) <= 0.0 {
        // Medial-axis degenerate case: the root sits at t = −a_k².
        let k = (0..4)
            .min_by(|&a, &b| axes[a].partial_cmp(&axes[b]).unwrap())
            .unwrap();
        let t = -amin2;
        let mut x = Vector4::zeros();
        let mut acc = 0.0;
        for i in 0..4 {
            if i != k {
                x[i] = axes[i] * axes[i] * y[i] / (axes[i] * axes[i] + t);
                acc += (x[i] / axes[i]).powi(2);
            }
        }
        x[k] = axes[k] * (1.0 - acc).max(0.0).sqrt() * if y[k] < 0.0 { -1.0 } else { 1.0 };
        let d = (x - y).norm();
        return (x, -d);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let x = Vector4::from_fn(|i, _| axes[i] * axes[i] * y[i] / (axes[i] * axes[i] + t));
    let d = (x - y).norm();
    (x, if inside { -d } else { d })
}

/// Eigenvalues of the shape operator `P H P / |g|` on the tangent space, ascending.
fn shape_operator_eigs(g: &Vector4<f64>, h: &Matrix4<f64>) -> [f64; 3] {
    let gn = g.norm();
    let n = PointC2::from_vector(&(g / gn));
    let b = real_complement_basis(n);
    let bv: Vec<Vector4<f64>> = b.iter().map(|p| p.to_vector()).collect();
    let m = Matrix3::from_fn(|i, j| bv[i].dot(&(h * bv[j])) / gn);
    let eig = m.symmetric_eigen();
    let mut e = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Derivative-free minimization of `f` over the unit sphere S³.
///
/// Compass search in the tangent space with step halving, from each start;
/// returns the best point and value.
pub fn minimize_on_sphere(
    f: &dyn Fn(PointC2) -> f64,
    starts: &[PointC2],
    step0: f64,
    tol: f64,
) -> (PointC2, f64) {
    let mut best = (starts[0], f(starts[0]));
    for &s in starts {
        let mut u = s.normalized().unwrap_or(s);
        let mut fu = f(u);
        let mut step = step0;
        while step > tol {
            let mut improved = false;
            for b in real_complement_basis(u) {
                for sign in [1.0, -1.0] {
                    let cand = (u + b * (sign * step)).normalized().unwrap_or(u);
                    let fc = f(cand);
                    if fc < fu {
                        u = cand;
                        fu = fc;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fu < best.1 {
            best = (u, fu);
        }
    }
    best
}

/// Distance, curvature and d-value of a nested pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub dist: f64,
    pub kappa: f64,
    pub dee: f64,
}

/// `(dist + 1/κ)·sqrt(dist/(dist + 2/κ))`.
pub fn dee_formula(dist: f64, kappa: f64) -> f64 {
    (dist + 1.0 / kappa) * (dist / (dist + 2.0 / kappa)).sqrt()
}

/// Number of S³ directions used by the sampled stage of [`dist_pair`].
pub const DIST_SAMPLES: usize = 4096;

/// `dist(D̄, Fr D′)` for `D ⋐ D′`.
///
/// Computed as `min_u h_{D′}(u) − h_D(u)` over sampled unit directions,
/// polished by a local compass search. For convex bodies this equals the
/// largest `t` with `D + tB ⊂ D′`.
pub fn dist_pair(d: &ConvexBody, dp: &ConvexBody) -> Result<f64> {
    if let (Shape::Ball { radius: r }, Shape::Ball { radius: rp }) = (&d.shape, &dp.shape) {
        let v = rp - r - d.center.distance(dp.center);
        if !(v > 0.0) {
            return Err(Error::Containment(format!("balls not nested (gap {v:.3e})")));
        }
        return Ok(v);
    }
    for p in d.boundary_samples(1024) {
        if !dp.contains(p) {
            return Err(Error::Containment("inner boundary sample outside outer body".into()));
        }
    }
    let f = |u: PointC2| dp.support(u) - d.support(u);
    let mut scored: Vec<(f64, PointC2)> =
        sphere_s3_samples(DIST_SAMPLES).into_iter().map(|u| (f(u), u)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let starts: Vec<PointC2> = scored.iter().take(4).map(|s| s.1).collect();
    let (_, v) = minimize_on_sphere(&f, &starts, 0.05, 1e-9);
    let v = v.min(scored[0].0);
    if !(v > 0.0) {
        return Err(Error::Containment(format!("bodies not nested (gap {v:.3e})")));
    }
    Ok(v)
}

/// `dist`, `κ(D)` and `d(D, Fr D′)`.
pub fn dee(d: &ConvexBody, dp: &ConvexBody) -> Result<PairMetrics> {
    let dist = dist_pair(d, dp)?;
    let kappa = d.kappa_max()?;
    Ok(PairMetrics { dist, kappa, dee: dee_formula(dist, kappa) })
}

/// Symmetric Hausdorff distance of two finite point clouds.
pub fn hausdorff(k: &[PointC2], o: &[PointC2]) -> Result<f64> {
    if k.is_empty() || o.is_empty() {
        return Err(Error::Empty("hausdorff point cloud"));
    }
    Ok(directed_hausdorff(k, o).max(directed_hausdorff(o, k)))
}

/// `sup_{a∈A} inf_{b∈B} |a − b|`, with the usual early-break pruning.
pub fn directed_hausdorff(a: &[PointC2], b: &[PointC2]) -> f64 {
    let mut cmax = 0.0f64;
    for p in a {
        let mut cmin = f64::INFINITY;
        for q in b {
            let d = (*p - *q).norm_sqr();
            if d < cmin {
                cmin = d;
                if cmin <= cmax {
                    break;
                }
            }
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    cmax.sqrt()
}

/// Refined chain between two nested bodies.
#[derive(Clone, Debug)]
pub struct RefinedChain {
    /// `C^{0}, …, C^{m}`; the outer body is not included.
    pub bodies: Vec<ConvexBody>,
    pub m: usize,
    pub dist: f64,
    pub kappa: f64,
    pub threshold: f64,
    /// `d_a` for `a = 0..=m` (`d_0 = 0`).
    pub offsets: Vec<f64>,
}

/// Right-hand side of the harmonic-sum condition.
pub fn harmonic_threshold(dist: f64, kappa: f64) -> f64 {
    ((6.0 * dist * kappa * kappa + 2.0 * PI * PI * kappa) / (6.0 * dist)).sqrt()
}

/// Smallest `m` with `Σ_{a ≤ m} 1/a ≥ threshold`.
pub fn harmonic_index(threshold: f64) -> usize {
    let mut s = 0.0;
    let mut m = 0usize;
    while s < threshold {
        m += 1;
        s += 1.0 / m as f64;
    }
    m.max(1)
}

/// Offset `d·(6/π²)·Σ_{h ≤ a} 1/h²`.
pub fn chain_offset(dist: f64, a: usize) -> f64 {
    let s: f64 = (1..=a).map(|h| 1.0 / (h * h) as f64).sum();
    dist * 6.0 / (PI * PI) * s
}

/// Inserts outer parallel bodies between `cj ⋐ cj1` so that the chain's
/// consecutive `d`-values sum to at least one.
pub fn refine_pair(cj: &ConvexBody, cj1: &ConvexBody) -> Result<RefinedChain> {
    let dist = dist_pair(cj, cj1)?;
    let kappa = cj.kappa_max()?;
    let threshold = harmonic_threshold(dist, kappa);
    let m = harmonic_index(threshold);
    let mut bodies = vec![cj.clone()];
    let mut offsets = vec![0.0];
    for a in 1..=m {
        let da = chain_offset(dist, a);
        bodies.push(cj.parallel_body(da)?);
        offsets.push(da);
    }
    Ok(RefinedChain { bodies, m, dist, kappa, threshold, offsets })
}

/// Closed-form metrics of consecutive chain members (exact for parallel bodies).
pub fn chain_metrics(chain: &RefinedChain) -> Vec<PairMetrics> {
    (0..chain.m)
        .map(|a| {
            let dist = chain.offsets[a + 1] - chain.offsets[a];
            let kappa = chain.kappa / (1.0 + chain.offsets[a] * chain.kappa);
            PairMetrics { dist, kappa, dee: dee_formula(dist, kappa) }
        })
        .collect()
}

/// Nested sequence of bodies with running `d`-sum.
#[derive(Clone, Debug)]
pub struct DProperSequence {
    pub bodies: Vec<ConvexBody>,
    pub metrics: Vec<PairMetrics>,
    pub running: Vec<f64>,
    pub target: f64,
    pub success: bool,
    /// Number of refined pairs consumed.
    pub chains: usize,
}

impl DProperSequence {
    pub fn total(&self) -> f64 {
        self.running.last().copied().unwrap_or(0.0)
    }
}

/// Interleaves refined chains of a nested exhaustion until the running
/// `d`-sum reaches `target`.
pub fn d_proper_sequence(exhaustion: &[ConvexBody], target: f64) -> Result<DProperSequence> {
    if exhaustion.len() < 2 {
        return Err(Error::Invalid("exhaustion needs at least two bodies".into()));
    }
    let mut seq = DProperSequence {
        bodies: vec![exhaustion[0].clone()],
        metrics: vec![],
        running: vec![],
        target,
        success: target <= 0.0,
        chains: 0,
    };
    let mut sum = 0.0;
    'outer: for pair in exhaustion.windows(2) {
        let chain = refine_pair(&pair[0], &pair[1])?;
        seq.chains += 1;
        let mut members: Vec<ConvexBody> = chain.bodies[1..].to_vec();
        members.push(pair[1].clone());
        let mut inner = chain.bodies[0].clone();
        for (idx, outer) in members.into_iter().enumerate() {
            let pm = if idx < chain.m {
                chain_metrics(&chain)[idx]
            } else {
                dee(&inner, &outer)?
            };
            sum += pm.dee;
            seq.metrics.push(pm);
            seq.running.push(sum);
            seq.bodies.push(outer.clone());
            inner = outer;
            if sum >= target {
                seq.success = true;
                break 'outer;
            }
        }
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn e1() -> PointC2 {
        PointC2::from_reals([1.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn ball_normal_and_curvature() {
        let b = ConvexBody::centered_ball(2.0).unwrap();
        let n = b.outward_normal(PointC2::from_reals([2.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((n - e1()).norm() < 1e-15);
        assert_eq!(b.kappa_max().unwrap(), 0.5);
        assert!(b.outward_normal(PointC2::ZERO).is_err());
    }

    #[test]
    fn ellipsoid_tip_normal() {
        let e = ConvexBody::axis_ellipsoid(PointC2::ZERO, [2.0, 1.0, 1.0, 1.0]).unwrap();
        let n = e.outward_normal(PointC2::from_reals([2.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((n - e1()).norm() < 1e-14);
        assert_eq!(e.kappa_max().unwrap(), 2.0);
    }

    #[test]
    fn parallel_ball_is_ball() {
        let b = ConvexBody::centered_ball(1.0).unwrap();
        match b.parallel_body(0.5).unwrap().shape {
            Shape::Ball { radius } => assert_eq!(radius, 1.5),
            _ => panic!("expected ball"),
        }
        assert!(b.parallel_body(-1.0).is_err());
    }

    #[test]
    fn ellipsoid_closest_point_outside_and_inside() {
        let e = ConvexBody::axis_ellipsoid(PointC2::ZERO, [3.0, 2.0, 1.5, 1.0]).unwrap();
        for q in [[4.0, 1.0, -0.5, 0.2], [0.3, 0.2, 0.1, -0.1], [0.0, 0.0, 0.0, 0.0]] {
            let q = PointC2::from_reals(q);
            let f = e.closest(q);
            assert!((e.gauge(f.point) - 1.0).abs() < 1e-12);
            // q − p is parallel to the normal at p.
            let v = q - f.point;
            let par = v - f.normal * v.dot(f.normal);
            assert!(par.norm() < 1e-9, "{par:?}");
            assert!((v.norm() - f.signed_distance.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn levelset_queries_agree_with_ellipsoid_when_quartic_vanishes() {
        let axes = [2.0, 1.5, 1.2, 1.0];
        let e = ConvexBody::axis_ellipsoid(PointC2::ZERO, axes).unwrap();
        let l = ConvexBody::quartic(PointC2::ZERO, axes, 0.0).unwrap();
        for u in sphere_s3_samples(40) {
            assert!((e.radial(u) - l.radial(u)).abs() < 1e-12);
            assert!((e.support(u) - l.support(u)).abs() < 1e-10);
            let q = u * 3.0;
            assert!((e.signed_distance(q) - l.signed_distance(q)).abs() < 1e-9);
        }
        assert!((l.kappa_max().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn parallel_of_ellipsoid_distance() {
        let e = ConvexBody::axis_ellipsoid(PointC2::ZERO, [2.0, 1.0, 1.0, 1.0]).unwrap();
        let p = e.parallel_body(0.3).unwrap();
        let d = dist_pair(&e, &p).unwrap();
        assert!((d - 0.3).abs() < 1e-6, "{d}");
        let inner = e.parallel_body(-0.2).unwrap();
        let d = dist_pair(&inner, &e).unwrap();
        assert!((d - 0.2).abs() < 1e-6, "{d}");
    }

    #[test]
    fn dist_pair_translated_ball() {
        let d = ConvexBody::centered_ball(1.0).unwrap();
        let dp = ConvexBody::ball(PointC2::from_reals([0.5, 0.0, 0.0, 0.0]), 3.0).unwrap();
        assert!((dist_pair(&d, &dp).unwrap() - 1.5).abs() < 1e-12);
        assert!(dist_pair(&dp, &d).is_err());
    }

    #[test]
    fn dee_balls() {
        let m = dee(&ConvexBody::centered_ball(1.0).unwrap(), &ConvexBody::centered_ball(2.0).unwrap())
            .unwrap();
        assert!((m.dee - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(m.dee > m.dist);
    }

    #[test]
    fn hausdorff_examples() {
        let o = vec![PointC2::ZERO];
        let seg: Vec<PointC2> = (0..=100)
            .map(|k| PointC2::new(Complex64::new(k as f64 / 100.0, 0.0), Complex64::new(0.0, 0.0)))
            .collect();
        assert!((hausdorff(&o, &seg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hausdorff(&seg, &seg).unwrap(), 0.0);
        assert!(hausdorff(&[], &seg).is_err());
    }

    #[test]
    fn refine_unit_pair() {
        let c = refine_pair(&ConvexBody::centered_ball(1.0).unwrap(), &ConvexBody::centered_ball(2.0).unwrap())
            .unwrap();
        assert_eq!(c.m, 4);
        assert!((c.threshold - (1.0 + PI * PI / 3.0).sqrt()).abs() < 1e-12);
        let s: f64 = chain_metrics(&c).iter().map(|m| m.dee).sum();
        assert!(s >= 1.0);
    }

    #[test]
    fn dproper_needs_two_bodies() {
        assert!(d_proper_sequence(&[ConvexBody::centered_ball(1.0).unwrap()], 1.0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let e = ConvexBody::axis_ellipsoid(PointC2::from_reals([0.1, 0.2, 0.3, 0.4]), [2.0, 1.0, 1.0, 0.7])
            .unwrap()
            .parallel_body(0.25)
            .unwrap();
        let s = e.to_spec().unwrap();
        let txt = toml::to_string(&s).unwrap();
        let back: BodySpec = toml::from_str(&txt).unwrap();
        assert_eq!(back, s);
    }
}
