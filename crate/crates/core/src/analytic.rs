//! Truncated Taylor series at 0 with the weighted ℓ¹ norm Σ|c_k| r^k, matrix-valued
//! series and pairs of them on two disks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::golden::ALPHA;
use crate::scalar::{Field, Mat2};
use crate::{Error, Result};

/// Default disk radii (r_B, r_A).
pub const DEFAULT_RADII: (f64, f64) = (0.4, 0.6);
pub const DEFAULT_DEGREE: usize = 64;

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorSeries {
    pub radius: f64,
    pub coeffs: Vec<f64>,
}

impl TaylorSeries {
    pub fn new(coeffs: Vec<f64>, radius: f64) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        TaylorSeries { radius, coeffs }
    }

    pub fn zeros(degree: usize, radius: f64) -> Self {
        TaylorSeries::new(vec![0.0; degree + 1], radius)
    }

    pub fn constant(c: f64, degree: usize, radius: f64) -> Self {
        let mut s = TaylorSeries::zeros(degree, radius);
        s.coeffs[0] = c;
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn norm(&self) -> f64 {
        ts_norm(self)
    }

    pub fn eval<T: Field>(&self, x: T) -> T {
        let mut acc = T::from_f64(0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + T::from_f64(c);
        }
        acc
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        TaylorSeries::new(self.coeffs.clone(), radius)
    }

    pub fn add(&self, o: &TaylorSeries) -> TaylorSeries {
        let n = self.coeffs.len().max(o.coeffs.len());
        let c = (0..n)
            .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + o.coeffs.get(k).unwrap_or(&0.0))
            .collect();
        TaylorSeries::new(c, self.radius)
    }

    pub fn sub(&self, o: &TaylorSeries) -> TaylorSeries {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> TaylorSeries {
        TaylorSeries::new(self.coeffs.iter().map(|c| c * s).collect(), self.radius)
    }

    /// f(−x).
    pub fn reflect(&self) -> TaylorSeries {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
            .collect();
        TaylorSeries::new(c, self.radius)
    }

    pub fn even_part(&self) -> TaylorSeries {
        self.add(&self.reflect()).scale(0.5)
    }

    /// ‖tail above N/2‖ / ‖f‖.
    pub fn tail_fraction(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            return 0.0;
        }
        let half = self.degree() / 2;
        let mut rk = 1.0;
        let mut tail = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > half {
                tail += c.abs() * rk;
            }
            rk *= self.radius;
        }
        tail / n
    }

    /// Coefficients of an entire (or large-disk analytic) function from samples on the circle
    /// |z| = sample_radius, by a discrete Cauchy integral.
    pub fn from_analytic(
        f: impl Fn(Complex64) -> Complex64,
        degree: usize,
        radius: f64,
        sample_radius: f64,
    ) -> TaylorSeries {
        let m = (4 * (degree + 1)).next_power_of_two();
        let samples: Vec<Complex64> = (0..m)
            .map(|j| f(Complex64::from_polar(sample_radius, 2.0 * PI * j as f64 / m as f64)))
            .collect();
        let mut c = vec![0.0; degree + 1];
        let mut rk = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -2.0 * PI * (k * j % m) as f64 / m as f64);
            }
            *ck = acc.re / (m as f64 * rk);
            rk *= sample_radius;
        }
        TaylorSeries::new(c, radius)
    }

    /// Taylor coefficients of x ↦ cos(ω(s + x)).
    pub fn cos_shifted(omega: f64, s: f64, degree: usize, radius: f64) -> TaylorSeries {
        let (cs, ss) = ((omega * s).cos(), (omega * s).sin());
        let mut c = vec![0.0; degree + 1];
        let mut p = 1.0;
        for (j, cj) in c.iter_mut().enumerate() {
            if j > 0 {
                p *= omega / j as f64;
            }
            // d^j/dx^j cos(ω(s+x)) at 0 = ω^j cos(ωs + jπ/2)
            *cj = p * match j % 4 {
                0 => cs,
                1 => -ss,
                2 => -cs,
                _ => ss,
            };
        }
        TaylorSeries::new(c, radius)
    }
}

pub fn ts_norm(f: &TaylorSeries) -> f64 {
    let mut rk = 1.0;
    let mut s = 0.0;
    for c in &f.coeffs {
        s += c.abs() * rk;
        rk *= f.radius;
    }
    s
}

/// Cauchy product truncated at the larger of the two degrees.
pub fn ts_multiply(f: &TaylorSeries, g: &TaylorSeries) -> Result<TaylorSeries> {
    if (f.radius - g.radius).abs() > DOMAIN_SLACK * f.radius.max(1.0) {
        return Err(Error::Domain(format!("radius mismatch {} vs {}", f.radius, g.radius)));
    }
    let n = f.degree().max(g.degree());
    let mut c = vec![0.0; n + 1];
    for (i, &fi) in f.coeffs.iter().enumerate() {
        if fi == 0.0 {
            continue;
        }
        for (j, &gj) in g.coeffs.iter().enumerate().take(n + 1 - i) {
            c[i + j] += fi * gj;
        }
    }
    Ok(TaylorSeries::new(c, f.radius))
}

/// Series of x ↦ f(scale·x + shift) on the disk of radius `out_radius`.
pub fn ts_affine_compose(f: &TaylorSeries, scale: f64, shift: f64, out_radius: f64) -> Result<TaylorSeries> {
    if scale.abs() * out_radius + shift.abs() > f.radius * (1.0 + DOMAIN_SLACK) {
        return Err(Error::DiskEscape);
    }
    let n = f.degree();
    // Horner in the polynomial ring: acc ← acc·(scale·x + shift) + c_k
    let mut acc = vec![0.0; n + 1];
    let mut tmp = vec![0.0; n + 1];
    for &ck in f.coeffs.iter().rev() {
        tmp.iter_mut().for_each(|t| *t = 0.0);
        for j in 0..=n {
            let v = acc[j];
            if v == 0.0 {
                continue;
            }
            tmp[j] += v * shift;
            if j < n {
                tmp[j + 1] += v * scale;
            }
        }
        tmp[0] += ck;
        std::mem::swap(&mut acc, &mut tmp);
    }
    Ok(TaylorSeries::new(acc, out_radius))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSeries {
    pub a: TaylorSeries,
    pub b: TaylorSeries,
    pub c: TaylorSeries,
    pub d: TaylorSeries,
}

impl MatrixSeries {
    pub fn new(a: TaylorSeries, b: TaylorSeries, c: TaylorSeries, d: TaylorSeries) -> Self {
        MatrixSeries { a, b, c, d }
    }

    pub fn constant(m: &Mat2<f64>, degree: usize, radius: f64) -> Self {
        let k = |v| TaylorSeries::constant(v, degree, radius);
        MatrixSeries::new(k(m.a), k(m.b), k(m.c), k(m.d))
    }

    /// s(x)·M for a scalar series s and a constant matrix M.
    pub fn rank1(s: &TaylorSeries, m: &Mat2<f64>) -> Self {
        MatrixSeries::new(s.scale(m.a), s.scale(m.b), s.scale(m.c), s.scale(m.d))
    }

    pub fn radius(&self) -> f64 {
        self.a.radius
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    pub fn norm(&self) -> f64 {
        self.a.norm() + self.b.norm() + self.c.norm() + self.d.norm()
    }

    pub fn eval<T: Field>(&self, x: T) -> Mat2<T> {
        Mat2::new(self.a.eval(x), self.b.eval(x), self.c.eval(x), self.d.eval(x))
    }

    pub fn map(&self, f: impl Fn(&TaylorSeries) -> TaylorSeries) -> MatrixSeries {
        MatrixSeries::new(f(&self.a), f(&self.b), f(&self.c), f(&self.d))
    }

    pub fn try_map(&self, f: impl Fn(&TaylorSeries) -> Result<TaylorSeries>) -> Result<MatrixSeries> {
        Ok(MatrixSeries::new(f(&self.a)?, f(&self.b)?, f(&self.c)?, f(&self.d)?))
    }

    pub fn scale(&self, s: f64) -> MatrixSeries {
        self.map(|e| e.scale(s))
    }

    pub fn add(&self, o: &MatrixSeries) -> MatrixSeries {
        MatrixSeries::new(self.a.add(&o.a), self.b.add(&o.b), self.c.add(&o.c), self.d.add(&o.d))
    }

    pub fn sub(&self, o: &MatrixSeries) -> MatrixSeries {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &MatrixSeries) -> Result<MatrixSeries> {
        let m = ts_multiply;
        Ok(MatrixSeries::new(
            m(&self.a, &o.a)?.add(&m(&self.b, &o.c)?),
            m(&self.a, &o.b)?.add(&m(&self.b, &o.d)?),
            m(&self.c, &o.a)?.add(&m(&self.d, &o.c)?),
            m(&self.c, &o.b)?.add(&m(&self.d, &o.d)?),
        ))
    }

    pub fn quasi_inverse(&self) -> MatrixSeries {
        MatrixSeries::new(self.d.clone(), self.b.scale(-1.0), self.c.scale(-1.0), self.a.clone())
    }

    pub fn det(&self) -> Result<TaylorSeries> {
        Ok(ts_multiply(&self.a, &self.d)?.sub(&ts_multiply(&self.b, &self.c)?))
    }

    /// L⁻¹ M L for a constant invertible L.
    pub fn conj(&self, l: &Mat2<f64>) -> MatrixSeries {
        let li = l.inverse().expect("conjugating matrix must be invertible");
        let lhs = |p: f64, q: f64, r: f64, s: f64| {
            // p·a + q·b + r·c + s·d entrywise combination
            self.a.scale(p).add(&self.b.scale(q)).add(&self.c.scale(r)).add(&self.d.scale(s))
        };
        // (L⁻¹ M L)_{ij} = Σ_{kl} li_{ik} m_{kl} l_{lj}
        let e = |i: (f64, f64), j: (f64, f64)| lhs(i.0 * j.0, i.0 * j.1, i.1 * j.0, i.1 * j.1);
        let (r0, r1) = ((li.a, li.b), (li.c, li.d));
        let (c0, c1) = ((l.a, l.c), (l.b, l.d));
        MatrixSeries::new(e(r0, c0), e(r0, c1), e(r1, c0), e(r1, c1))
    }

    pub fn affine_compose(&self, scale: f64, shift: f64, out_radius: f64) -> Result<MatrixSeries> {
        self.try_map(|e| ts_affine_compose(e, scale, shift, out_radius))
    }

    pub fn tail_fraction(&self) -> f64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|e| e.tail_fraction())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient deviation from the reversible subspace, weighted by r^k.
    pub fn reversibility_defect(&self) -> f64 {
        let odd = |s: &TaylorSeries| s.sub(&s.reflect()).scale(0.5).norm();
        // b(x) + c(−x) should vanish
        odd(&self.a) + odd(&self.d) + self.b.add(&self.c.reflect()).norm()
    }

    pub fn is_reversible(&self, tol: f64) -> bool {
        self.reversibility_defect() <= tol
    }
}

/// Nearest reversible element: even parts of a, d; b(x) = −c(−x) enforced by averaging.
pub fn reversible_project(m: &MatrixSeries) -> MatrixSeries {
    let b = m.b.sub(&m.c.reflect()).scale(0.5);
    let c = m.c.sub(&m.b.reflect()).scale(0.5);
    MatrixSeries::new(m.a.even_part(), b, c, m.d.even_part())
}

/// Strict domain condition on (r_B, r_A).
pub fn check_radii(r_b: f64, r_a: f64) -> Result<()> {
    let a3 = ALPHA * ALPHA * ALPHA;
    let a2 = ALPHA * ALPHA;
    let ok = r_b > ALPHA / 2.0
        && r_a > 0.5
        && a3 * r_a + a2 / 2.0 < r_b
        && r_b < r_a / a3 - 0.5 / ALPHA;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("radii ({r_b}, {r_a}) violate the domain condition")))
    }
}

/// Symmetric factors (B∘, A∘) on the disks of radii (r_B, r_A).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairH {
    pub b: MatrixSeries,
    pub a: MatrixSeries,
}

impl PairH {
    pub fn new(b: MatrixSeries, a: MatrixSeries) -> Result<Self> {
        check_radii(b.radius(), a.radius())?;
        Ok(PairH { b, a })
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.b.radius(), self.a.radius())
    }

    pub fn norm(&self) -> f64 {
        self.b.norm() + self.a.norm()
    }

    pub fn sub(&self, o: &PairH) -> PairH {
        PairH { b: self.b.sub(&o.b), a: self.a.sub(&o.a) }
    }

    pub fn scale(&self, sb: f64, sa: f64) -> PairH {
        PairH { b: self.b.scale(sb), a: self.a.scale(sa) }
    }

    pub fn reversibility_defect(&self) -> f64 {
        self.b.reversibility_defect() + self.a.reversibility_defect()
    }

    pub fn tail_fraction(&self) -> f64 {
        self.b.tail_fraction().max(self.a.tail_fraction())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[f64], r: f64) -> TaylorSeries {
        TaylorSeries::new(c.to_vec(), r)
    }

    #[test]
    fn sampled_coefficients() {
        let f = TaylorSeries::from_analytic(|z| (z * 3.0).exp(), 40, 0.6, 1.5);
        let mut fact = 1.0;
        for (k, c) in f.coeffs.iter().enumerate() {
            if k > 0 {
                fact *= 3.0 / k as f64;
            }
            assert!((c - fact).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn norm_examples() {
        assert!((s(&[0.0, 0.0, 1.0], 0.5).norm() - 0.25).abs() < 1e-15);
        assert_eq!(s(&[3.0], 7.0).norm(), 3.0);
        assert_eq!(s(&[1.0, 1.0], 2.0).norm(), 3.0);
    }

    #[test]
    fn multiply_examples() {
        let p = ts_multiply(&s(&[1.0, 1.0, 0.0], 1.0), &s(&[1.0, -1.0, 0.0], 1.0)).unwrap();
        assert_eq!(p.coeffs, vec![1.0, 0.0, -1.0]);
        let f = s(&[0.3, -1.2, 0.7], 0.9);
        assert_eq!(ts_multiply(&f, &s(&[1.0, 0.0, 0.0], 0.9)).unwrap(), f);
        assert!(ts_multiply(&f, &s(&[1.0], 0.5)).is_err());
    }

    #[test]
    fn compose_examples() {
        let f = s(&[0.0, 0.0, 1.0], 3.0);
        let g = ts_affine_compose(&f, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(g.coeffs, vec![1.0, 4.0, 4.0]);
        let h = s(&[0.5, -0.25, 2.0], 1.0);
        assert_eq!(ts_affine_compose(&h, 1.0, 0.0, 1.0).unwrap().coeffs, h.coeffs);
        assert!(matches!(ts_affine_compose(&h, 1.0, 0.5, 1.0), Err(Error::DiskEscape)));
    }

    #[test]
    fn compose_cosine() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let f = TaylorSeries::cos_shifted(two_pi, 0.0, 40, 0.6);
        let a3 = ALPHA.powi(3);
        let shift = (1.0 - ALPHA) / 2.0;
        let g = ts_affine_compose(&f, a3, shift, 0.4).unwrap();
        let x = 0.3;
        let direct = (two_pi * (a3 * x + shift)).cos();
        assert!((g.eval(x) - direct).abs() < 1e-10);
    }

    #[test]
    fn project_examples() {
        let z = |r| TaylorSeries::zeros(3, r);
        let x = s(&[0.0, 1.0, 0.0, 0.0], 0.5);
        let m = MatrixSeries::new(x.clone(), z(0.5), z(0.5), z(0.5));
        assert_eq!(reversible_project(&m).a.norm(), 0.0);
        let m = MatrixSeries::new(z(0.5), x.clone(), z(0.5), z(0.5));
        let p = reversible_project(&m);
        assert_eq!(p.b.coeffs, vec![0.0, 0.5, 0.0, 0.0]);
        assert_eq!(p.c.coeffs, vec![0.0, 0.5, 0.0, 0.0]);
        assert_eq!(reversible_project(&p), p);
        assert!(p.is_reversible(0.0));
    }

    #[test]
    fn conj_matches_pointwise() {
        let m = MatrixSeries::new(
            s(&[1.0, 0.2], 0.5),
            s(&[0.3, -0.1], 0.5),
            s(&[-0.7, 0.4], 0.5),
            s(&[2.0, 0.0], 0.5),
        );
        let l = Mat2::exp_swap(0.37);
        let c = m.conj(&l);
        let x = 0.21;
        let direct = l.inverse().unwrap().mul(&m.eval(x)).mul(&l);
        assert!(c.eval(x).sub(&direct).max_abs() < 1e-14);
    }

    #[test]
    fn radii_condition() {
        assert!(check_radii(0.4, 0.6).is_ok());
        assert!(check_radii(ALPHA / 2.0, 0.5).is_err());
        assert!(check_radii(0.2, 0.6).is_err());
    }
}
