//! Real or complex scalars and 2×2 matrices over them.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub trait Field:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn cos(self) -> Self;
    fn sin(self) -> Self;
    fn exp(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn is_zero(self) -> bool;

    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
    fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }
}

impl Field for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Field for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Row-major [[a, b], [c, d]].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2<T = f64> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Field> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::from_f64(1.0), T::from_f64(0.0));
        Mat2::new(o, z, z, o)
    }

    pub fn zero() -> Self {
        let z = T::from_f64(0.0);
        Mat2::new(z, z, z, z)
    }

    /// S = [[0, 1], [1, 0]].
    pub fn swap() -> Self {
        let (o, z) = (T::from_f64(1.0), T::from_f64(0.0));
        Mat2::new(z, o, o, z)
    }

    /// The rank-one projection [[1, 0], [0, 0]].
    pub fn proj() -> Self {
        let (o, z) = (T::from_f64(1.0), T::from_f64(0.0));
        Mat2::new(o, z, z, z)
    }

    pub fn from_real(m: &Mat2<f64>) -> Self {
        Mat2::new(T::from_f64(m.a), T::from_f64(m.b), T::from_f64(m.c), T::from_f64(m.d))
    }

    pub fn mul(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn add(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn scale(&self, s: T) -> Mat2<T> {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_f64(&self, s: f64) -> Mat2<T> {
        self.scale(T::from_f64(s))
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// M† = [[d, −b], [−c, a]], so that M†M = det(M)·1.
    pub fn quasi_inverse(&self) -> Mat2<T> {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn inverse(&self) -> Option<Mat2<T>> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        let q = self.quasi_inverse();
        Some(Mat2::new(q.a / det, q.b / det, q.c / det, q.d / det))
    }

    /// S⁻¹MS.
    pub fn swap_conj(&self) -> Mat2<T> {
        Mat2::new(self.d, self.c, self.b, self.a)
    }

    pub fn transpose(&self) -> Mat2<T> {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn frob_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    pub fn frob(&self) -> f64 {
        self.frob_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn apply(&self, y: [T; 2]) -> [T; 2] {
        [self.a * y[0] + self.b * y[1], self.c * y[0] + self.d * y[1]]
    }
}

impl Mat2<f64> {
    /// e^{σS} = cosh σ·1 + sinh σ·S.
    pub fn exp_swap(sigma: f64) -> Mat2<f64> {
        let (c, s) = (sigma.cosh(), sigma.sinh());
        Mat2::new(c, s, s, c)
    }

    pub fn rotation(theta: f64) -> Mat2<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        Mat2::new(c, -s, s, c)
    }

    /// log(s_min/s_max) given log|det| and the Frobenius norm, both on the same scale.
    pub fn log_sv_ratio(frob: f64, log_abs_det: f64) -> f64 {
        let f2 = frob * frob;
        let log_d = log_abs_det;
        // s_max² = (F + sqrt(F² − 4D²))/2, with D² tiny relative to F² in the regimes of interest
        let ratio = (2.0 * log_d - 2.0 * f2.ln()).exp();
        let smax2 = 0.5 * f2 * (1.0 + (1.0 - 4.0 * ratio).max(0.0).sqrt());
        log_d - smax2.ln()
    }
}

/// Power-of-two rescaling keeps long products finite without touching mantissas.
pub(crate) fn pow2_rescale<T: Field>(m: &mut Mat2<T>, exp2: &mut i64) {
    let mx = m.max_abs();
    if !(mx > 1e-120 && mx < 1e120) && mx > 0.0 && mx.is_finite() {
        let e = mx.log2().round() as i64;
        *m = m.scale_f64((2.0f64).powi(-e as i32));
        *exp2 += e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasi_inverse_identity() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let q = m.quasi_inverse();
        assert_eq!(q, Mat2::new(4.0, -2.0, -3.0, 1.0));
        assert_eq!(q.mul(&m), Mat2::identity().scale(-2.0));
        assert_eq!(Mat2::<f64>::identity().quasi_inverse(), Mat2::identity());
    }

    #[test]
    fn exp_swap_is_group() {
        let p = Mat2::exp_swap(0.3).mul(&Mat2::exp_swap(-0.3));
        assert!(p.sub(&Mat2::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn sv_ratio_matches_direct() {
        let m = Mat2::new(3.0, 1.0, 0.5, 2.0);
        let f = m.frob();
        let det: f64 = m.det();
        // singular values from the eigenvalues of MᵀM
        let mtm = m.transpose().mul(&m);
        let tr = mtm.trace();
        let disc = (tr * tr - 4.0 * mtm.det()).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        let direct = 0.5 * (l2 / l1).ln();
        assert!((Mat2::log_sv_ratio(f, det.abs().ln()) - direct).abs() < 1e-12);
    }
}
