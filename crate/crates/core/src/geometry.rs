//! Linear algebra of C² viewed as R⁴.
//!
//! A [`PointC2`] is a pair `(ζ, ξ)` of complex numbers. The real inner
//! product is the real part of the Hermitian form, and the complex
//! structure `J` is multiplication by `i`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// A point (or vector) of C², stored as two complex coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PointC2 {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl PointC2 {
    pub const ZERO: PointC2 = PointC2 {
        z1: Complex64::new(0.0, 0.0),
        z2: Complex64::new(0.0, 0.0),
    };

    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        PointC2 { z1, z2 }
    }

    /// Builds a point from `(re₁, im₁, re₂, im₂)`.
    pub fn from_reals(r: [f64; 4]) -> Self {
        PointC2 {
            z1: Complex64::new(r[0], r[1]),
            z2: Complex64::new(r[2], r[3]),
        }
    }

    pub fn to_reals(self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.to_reals())
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        PointC2::from_reals([v[0], v[1], v[2], v[3]])
    }

    /// Euclidean inner product of R⁴.
    pub fn dot(self, other: PointC2) -> f64 {
        hermitian(self, other).re
    }

    pub fn norm_sqr(self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(self * (1.0 / n))
    }

    pub fn distance(self, other: PointC2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.to_reals().iter().all(|x| x.is_finite())
    }

    pub fn scale_c(self, c: Complex64) -> Self {
        PointC2 { z1: self.z1 * c, z2: self.z2 * c }
    }
}

impl Add for PointC2 {
    type Output = PointC2;
    fn add(self, o: PointC2) -> PointC2 {
        PointC2 { z1: self.z1 + o.z1, z2: self.z2 + o.z2 }
    }
}

impl AddAssign for PointC2 {
    fn add_assign(&mut self, o: PointC2) {
        self.z1 += o.z1;
        self.z2 += o.z2;
    }
}

impl Sub for PointC2 {
    type Output = PointC2;
    fn sub(self, o: PointC2) -> PointC2 {
        PointC2 { z1: self.z1 - o.z1, z2: self.z2 - o.z2 }
    }
}

impl SubAssign for PointC2 {
    fn sub_assign(&mut self, o: PointC2) {
        self.z1 -= o.z1;
        self.z2 -= o.z2;
    }
}

impl Neg for PointC2 {
    type Output = PointC2;
    fn neg(self) -> PointC2 {
        PointC2 { z1: -self.z1, z2: -self.z2 }
    }
}

impl Mul<f64> for PointC2 {
    type Output = PointC2;
    fn mul(self, s: f64) -> PointC2 {
        PointC2 { z1: self.z1 * s, z2: self.z2 * s }
    }
}

impl Mul<Complex64> for PointC2 {
    type Output = PointC2;
    fn mul(self, c: Complex64) -> PointC2 {
        self.scale_c(c)
    }
}

/// Hermitian product `Σ pᵢ q̄ᵢ`.
pub fn hermitian(p: PointC2, q: PointC2) -> Complex64 {
    p.z1 * q.z1.conj() + p.z2 * q.z2.conj()
}

/// The complex structure: multiplication by `i`.
pub fn jmap(p: PointC2) -> PointC2 {
    p.scale_c(Complex64::i())
}

/// Orthonormal complex frame `(w, u)` with `u ⟂ w` for the Hermitian form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrame {
    pub w: PointC2,
    pub u: PointC2,
}

impl ComplexFrame {
    /// Largest deviation from the frame identities.
    pub fn defect(&self) -> f64 {
        let a = (hermitian(self.u, self.u) - 1.0).norm();
        let b = (hermitian(self.w, self.w) - 1.0).norm();
        let c = hermitian(self.u, self.w).norm();
        a.max(b).max(c)
    }

    /// Coordinates of `p` in the frame: `p = a·u + b·w`.
    pub fn coords(&self, p: PointC2) -> (Complex64, Complex64) {
        (hermitian(p, self.u), hermitian(p, self.w))
    }
}

/// Frame whose `w` is `p/‖p‖` and whose `u` spans the complex complement.
///
/// `u` is obtained deterministically from the standard basis vector that is
/// farthest from `span_C(w)`, projected and normalized.
pub fn complex_orthogonal(p: PointC2) -> Result<ComplexFrame> {
    if !p.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    let w = p.normalized()?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let e1 = PointC2::new(one, zero);
    let e2 = PointC2::new(zero, one);
    // |<<e_k, w>>| small means e_k is far from span_C(w).
    let e = if w.z1.norm() <= w.z2.norm() { e1 } else { e2 };
    let mut u = e - w.scale_c(hermitian(e, w));
    // One re-orthogonalization pass keeps the defect at rounding level.
    u = u - w.scale_c(hermitian(u, w));
    let u = u.normalized()?;
    Ok(ComplexFrame { w, u })
}

/// Quasi-uniform deterministic sample of the unit sphere S³.
///
/// Uses Hopf coordinates `(cos η e^{iα}, sin η e^{iβ})` with `sin²η`
/// uniform, driven by a Kronecker sequence.
pub fn sphere_s3_samples(n: usize) -> Vec<PointC2> {
    // Generalized golden ratio for three dimensions.
    let g = 1.220_744_084_605_759_5_f64;
    let a = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|k| {
            let k = k as f64 + 0.5;
            let s = (k * a[0]).fract();
            let alpha = tau * (k * a[1]).fract();
            let beta = tau * (k * a[2]).fract();
            let (c, sn) = ((1.0 - s).sqrt(), s.sqrt());
            PointC2::new(
                Complex64::from_polar(c, alpha),
                Complex64::from_polar(sn, beta),
            )
        })
        .collect()
}

/// Point of S³ in Hopf coordinates.
pub fn hopf_point(eta: f64, alpha: f64, beta: f64) -> PointC2 {
    PointC2::new(
        Complex64::from_polar(eta.cos(), alpha),
        Complex64::from_polar(eta.sin(), beta),
    )
}

/// Orthonormal basis (real) of the orthogonal complement of a unit vector in R⁴.
pub fn real_complement_basis(n: PointC2) -> [PointC2; 3] {
    let nv = n.to_vector();
    let mut basis: Vec<Vector4<f64>> = Vec::with_capacity(3);
    let mut cands: Vec<(f64, usize)> = (0..4).map(|i| (nv[i].abs(), i)).collect();
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for &(_, i) in &cands {
        if basis.len() == 3 {
            break;
        }
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        for _ in 0..2 {
            v -= nv * nv.dot(&v);
            for b in &basis {
                v -= b * b.dot(&v);
            }
        }
        let len = v.norm();
        if len > 1e-6 {
            basis.push(v / len);
        }
    }
    [
        PointC2::from_vector(&basis[0]),
        PointC2::from_vector(&basis[1]),
        PointC2::from_vector(&basis[2]),
    ]
}

/// Point on segment `[a, b]` at parameter `t ∈ [0, 1]`.
pub fn lerp(a: PointC2, b: PointC2, t: f64) -> PointC2 {
    a + (b - a) * t
}

/// Distance from `q` to the segment `[a, b]`.
pub fn segment_distance(q: PointC2, a: PointC2, b: PointC2) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return q.distance(a);
    }
    let t = ((q - a).dot(d) / l2).clamp(0.0, 1.0);
    q.distance(lerp(a, b, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_examples() {
        let e1 = PointC2::new(c(1., 0.), c(0., 0.));
        let e2 = PointC2::new(c(0., 0.), c(1., 0.));
        assert_eq!(hermitian(e1, e2), c(0., 0.));
        let ie1 = PointC2::new(c(0., 1.), c(0., 0.));
        assert_eq!(hermitian(ie1, e1), c(0., 1.));
        let p = PointC2::new(c(1., 0.), c(2., 0.));
        let q = PointC2::new(c(3., 0.), c(0., 4.));
        assert_eq!(hermitian(p, q), c(3., -8.));
    }

    #[test]
    fn jmap_examples() {
        let e1 = PointC2::new(c(1., 0.), c(0., 0.));
        assert_eq!(jmap(e1), PointC2::new(c(0., 1.), c(0., 0.)));
    }

    #[test]
    fn complement_of_axes() {
        let f = complex_orthogonal(PointC2::new(c(1., 0.), c(0., 0.))).unwrap();
        assert!(f.u.z1.norm() < 1e-15 && (f.u.z2.norm() - 1.0).abs() < 1e-15);
        let f = complex_orthogonal(PointC2::new(c(0., 0.), c(1., 0.))).unwrap();
        assert!(f.u.z2.norm() < 1e-15 && (f.u.z1.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        assert_eq!(complex_orthogonal(PointC2::ZERO), Err(Error::DegenerateDirection));
    }

    #[test]
    fn s3_samples_are_unit() {
        for p in sphere_s3_samples(500) {
            assert!((p.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let n = PointC2::from_reals([0.3, -0.5, 0.1, 0.8]).normalized().unwrap();
        let b = real_complement_basis(n);
        for i in 0..3 {
            assert!(b[i].dot(n).abs() < 1e-14);
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].dot(b[j]) - want).abs() < 1e-14);
            }
        }
    }

    fn pt() -> impl Strategy<Value = PointC2> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(PointC2::from_reals)
    }

    proptest! {
        #[test]
        fn hermitian_is_conjugate_symmetric(p in pt(), q in pt()) {
            let a = hermitian(p, q);
            let b = hermitian(q, p).conj();
            prop_assert!((a - b).norm() < 1e-12);
        }

        #[test]
        fn real_part_is_dot(p in pt(), q in pt()) {
            let r = p.to_reals();
            let s = q.to_reals();
            let d: f64 = (0..4).map(|i| r[i] * s[i]).sum();
            prop_assert!((hermitian(p, q).re - d).abs() < 1e-12);
        }

        #[test]
        fn j_squared_is_minus_identity(p in pt()) {
            prop_assert!((jmap(jmap(p)) + p).norm() < 1e-12);
            prop_assert!(hermitian(jmap(p), p).re.abs() < 1e-12);
        }

        #[test]
        fn frames_satisfy_invariants(p in pt()) {
            prop_assume!(p.norm() > 1e-6);
            let f = complex_orthogonal(p).unwrap();
            prop_assert!(f.defect() < IDENTITY_TOL);
        }
    }
}
