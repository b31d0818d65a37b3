//! Skew products G = (ω, A) over x ↦ x + ω with 2×2 factors: log-scaled transfer
//! products, Lyapunov exponents, rotation numbers and reversibility.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::{MatrixSeries, TaylorSeries};
use crate::golden::{frac_mul, ALPHA, ALPHA_LO};
use crate::scalar::{pow2_rescale, Field, Mat2};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// One-periodic potential Σ_k c_k cos(2πkx) + s_k sin(2πkx), k ≥ 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    /// v(x) = −2cos(2πx).
    #[default]
    Cosine,
    Trig { cos: Vec<f64>, sin: Vec<f64> },
}

impl Potential {
    pub fn eval<T: Field>(&self, x: T) -> T {
        match self {
            Potential::Cosine => (x.scale(TWO_PI)).cos().scale(-2.0),
            Potential::Trig { cos, sin } => {
                let mut acc = T::from_f64(0.0);
                for (k, c) in cos.iter().enumerate() {
                    acc = acc + x.scale(TWO_PI * (k + 1) as f64).cos().scale(*c);
                }
                for (k, s) in sin.iter().enumerate() {
                    acc = acc + x.scale(TWO_PI * (k + 1) as f64).sin().scale(*s);
                }
                acc
            }
        }
    }

    /// Taylor coefficients of x ↦ v(s + x).
    pub fn taylor(&self, s: f64, degree: usize, radius: f64) -> TaylorSeries {
        let cos_k = |k: usize| TaylorSeries::cos_shifted(TWO_PI * k as f64, s, degree, radius);
        match self {
            Potential::Cosine => cos_k(1).scale(-2.0),
            Potential::Trig { cos, sin } => {
                let mut acc = TaylorSeries::zeros(degree, radius);
                for (k, c) in cos.iter().enumerate() {
                    acc = acc.add(&cos_k(k + 1).scale(*c));
                }
                for (k, sn) in sin.iter().enumerate() {
                    // sin(θ) = cos(θ − π/2)
                    let w = TWO_PI * (k + 1) as f64;
                    let t = TaylorSeries::cos_shifted(w, s - 0.25 / (k + 1) as f64, degree, radius);
                    acc = acc.add(&t.scale(*sn));
                }
                acc
            }
        }
    }

    /// Lebesgue measure of {x ∈ T : v(x) ≤ e}.
    pub fn sublevel_measure(&self, e: f64) -> f64 {
        match self {
            Potential::Cosine => {
                if e <= -2.0 {
                    0.0
                } else if e >= 2.0 {
                    1.0
                } else {
                    (-e / 2.0).acos() / PI
                }
            }
            Potential::Trig { .. } => {
                let m = 1 << 16;
                let count = (0..m)
                    .filter(|&i| self.eval((i as f64 + 0.5) / m as f64) <= e)
                    .count();
                count as f64 / m as f64
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarFn {
    Constant(f64),
    /// −ε − 2cos(2πx).
    Cosine { eps: f64 },
    Series(TaylorSeries),
}

impl ScalarFn {
    /// 4 sin(π(x − ρ)) sin(π(x + ρ)) = 2cos(2πρ) − 2cos(2πx).
    pub fn sine_pair(rho: f64) -> ScalarFn {
        ScalarFn::Cosine { eps: -2.0 * (TWO_PI * rho).cos() }
    }

    pub fn eval<T: Field>(&self, x: T) -> T {
        match self {
            ScalarFn::Constant(c) => T::from_f64(*c),
            ScalarFn::Cosine { eps } => x.scale(TWO_PI).cos().scale(-2.0) - T::from_f64(*eps),
            ScalarFn::Series(s) => s.eval(x),
        }
    }

    fn is_periodic(&self) -> bool {
        !matches!(self, ScalarFn::Series(_))
    }

    pub fn taylor(&self, degree: usize, radius: f64) -> TaylorSeries {
        match self {
            ScalarFn::Constant(c) => TaylorSeries::constant(*c, degree, radius),
            ScalarFn::Cosine { eps } => Potential::Cosine
                .taylor(0.0, degree, radius)
                .sub(&TaylorSeries::constant(*eps, degree, radius)),
            ScalarFn::Series(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FactorFunction {
    /// [[λ v(t + x) − E, −1], [1, 0]].
    Schrodinger { lambda: f64, energy: f64, t: f64, potential: Potential },
    /// [[v(t + x) − ε, −δ], [δ, 0]].
    ScaledSchrodinger { delta: f64, eps: f64, t: f64, potential: Potential },
    /// s(x)·M.
    Rank1Scalar { scalar: ScalarFn, matrix: Mat2<f64> },
    TaylorMatrix(MatrixSeries),
    Constant(Mat2<f64>),
}

impl FactorFunction {
    pub fn eval<T: Field>(&self, x: T) -> Mat2<T> {
        let z = T::from_f64(0.0);
        match self {
            FactorFunction::Schrodinger { lambda, energy, t, potential } => {
                let v = potential.eval(x + T::from_f64(*t));
                Mat2::new(v.scale(*lambda) - T::from_f64(*energy), T::from_f64(-1.0), T::from_f64(1.0), z)
            }
            FactorFunction::ScaledSchrodinger { delta, eps, t, potential } => {
                let v = potential.eval(x + T::from_f64(*t));
                Mat2::new(v - T::from_f64(*eps), T::from_f64(-delta), T::from_f64(*delta), z)
            }
            FactorFunction::Rank1Scalar { scalar, matrix } => {
                Mat2::from_real(matrix).scale(scalar.eval(x))
            }
            FactorFunction::TaylorMatrix(m) => m.eval(x),
            FactorFunction::Constant(m) => Mat2::from_real(m),
        }
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            FactorFunction::Rank1Scalar { scalar, .. } => scalar.is_periodic(),
            FactorFunction::TaylorMatrix(_) => false,
            _ => true,
        }
    }

    /// det A when it does not depend on x.
    pub fn constant_det(&self) -> Option<f64> {
        match self {
            FactorFunction::Schrodinger { .. } => Some(1.0),
            FactorFunction::ScaledSchrodinger { delta, .. } => Some(delta * delta),
            FactorFunction::Rank1Scalar { matrix, .. } if matrix.det() == 0.0 => Some(0.0),
            FactorFunction::Constant(m) => Some(m.det()),
            _ => None,
        }
    }

    fn has_sign_semantics(&self) -> bool {
        matches!(
            self,
            FactorFunction::Schrodinger { .. }
                | FactorFunction::ScaledSchrodinger { .. }
                | FactorFunction::Rank1Scalar { .. }
        )
    }
}

/// G = (ω, A). When `symmetric` is set, `factor` stores A∘ and A(x) = A∘(x + ω/2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewProduct {
    pub frequency: f64,
    /// Low-order correction of the frequency (double-double).
    pub frequency_lo: f64,
    pub factor: FactorFunction,
    pub symmetric: bool,
}

impl SkewProduct {
    pub fn new(frequency: f64, factor: FactorFunction) -> Self {
        SkewProduct { frequency, frequency_lo: 0.0, factor, symmetric: false }
    }

    pub fn golden(factor: FactorFunction) -> Self {
        SkewProduct { frequency: ALPHA, frequency_lo: ALPHA_LO, factor, symmetric: false }
    }

    pub fn golden_symmetric(factor: FactorFunction) -> Self {
        SkewProduct { symmetric: true, ..SkewProduct::golden(factor) }
    }

    /// Almost Mathieu factor with phase t = α/2.
    pub fn am(lambda: f64, energy: f64) -> Self {
        SkewProduct::golden(FactorFunction::Schrodinger {
            lambda,
            energy,
            t: ALPHA / 2.0,
            potential: Potential::Cosine,
        })
    }

    pub fn am_with_phase(lambda: f64, energy: f64, t: f64) -> Self {
        SkewProduct::golden(FactorFunction::Schrodinger { lambda, energy, t, potential: Potential::Cosine })
    }

    /// AM factor divided by λ = 1/δ with E = λε, phase t = α/2.
    pub fn scaled_am(delta: f64, eps: f64) -> Self {
        SkewProduct::golden(FactorFunction::ScaledSchrodinger {
            delta,
            eps,
            t: ALPHA / 2.0,
            potential: Potential::Cosine,
        })
    }

    /// Symmetric factor a∘(x)·[[1,0],[0,0]] with a∘(x) = −ε − 2cos(2πx).
    pub fn limit_scalar(eps: f64) -> Self {
        SkewProduct::golden_symmetric(FactorFunction::Rank1Scalar {
            scalar: ScalarFn::Cosine { eps },
            matrix: Mat2::proj(),
        })
    }

    pub fn constant(frequency: f64, m: Mat2<f64>) -> Self {
        SkewProduct::new(frequency, FactorFunction::Constant(m))
    }

    /// A∘(x + m·ω/2), with the shift reduced mod 1 in double-double when A is periodic.
    pub fn sym_shifted<T: Field>(&self, m: i64, x: T) -> Mat2<T> {
        let m = if self.symmetric { m } else { m - 1 };
        let (h, hl) = (self.frequency / 2.0, self.frequency_lo / 2.0);
        let s = if self.factor.is_periodic() {
            frac_mul(m, h, hl)
        } else {
            m as f64 * h + m as f64 * hl
        };
        self.factor.eval(T::from_f64(s) + x)
    }

    pub fn sym_at<T: Field>(&self, x: T) -> Mat2<T> {
        self.sym_shifted(0, x)
    }

    pub fn plain_at<T: Field>(&self, x: T) -> Mat2<T> {
        self.sym_shifted(1, x)
    }
}

/// Log-scaled matrix: value = e^{log_scale}·m with ‖m‖_F = 1 (or m = 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<T: Field> {
    pub m: Mat2<T>,
    pub log_scale: f64,
}

impl<T: Field> Scaled<T> {
    pub fn from_parts(mut m: Mat2<T>, mut exp2: i64) -> Self {
        let f = m.frob();
        if f == 0.0 || !f.is_finite() {
            return Scaled { m, log_scale: if f == 0.0 { f64::NEG_INFINITY } else { f64::NAN } };
        }
        // guard against overflow in frob for extreme entries
        pow2_rescale(&mut m, &mut exp2);
        let f = m.frob();
        Scaled { m: m.scale_f64(1.0 / f), log_scale: f.ln() + exp2 as f64 * std::f64::consts::LN_2 }
    }

    pub fn value(&self) -> Mat2<T> {
        self.m.scale_f64(self.log_scale.exp())
    }

    pub fn quasi_inverse(&self) -> Self {
        Scaled { m: self.m.quasi_inverse(), log_scale: self.log_scale }
    }
}

/// Ordered product F(count−1)···F(1)F(0) with power-of-two rescaling.
pub fn run_product<T: Field>(count: u64, mut f: impl FnMut(u64) -> Result<Mat2<T>>) -> Result<Scaled<T>> {
    let mut m = Mat2::identity();
    let mut e = 0i64;
    for j in 0..count {
        m = f(j)?.mul(&m);
        pow2_rescale(&mut m, &mut e);
    }
    Ok(Scaled::from_parts(m, e))
}

/// A^{*q}(x) = A(x + (q−1)ω)···A(x); for q < 0 the factors A(x − jω)⁻¹, j = 1..|q|.
pub fn product<T: Field>(g: &SkewProduct, q: i64, x: T) -> Result<Scaled<T>> {
    if q >= 0 {
        run_product(q as u64, |j| Ok(g.sym_shifted(2 * j as i64 + 1, x)))
    } else {
        run_product(q.unsigned_abs(), |j| {
            g.sym_shifted(-2 * (j as i64 + 1) + 1, x).inverse().ok_or(Error::NonInvertible)
        })
    }
}

/// A^{*q}∘(x) = A^{*q}(x − qω/2).
pub fn symmetric_product<T: Field>(g: &SkewProduct, q: i64, x: T) -> Result<Scaled<T>> {
    if q >= 0 {
        run_product(q as u64, |j| Ok(g.sym_shifted(2 * j as i64 - q + 1, x)))
    } else {
        let n = q.unsigned_abs() as i64;
        run_product(n as u64, |j| {
            g.sym_shifted(n - 2 * j as i64 - 1, x).inverse().ok_or(Error::NonInvertible)
        })
    }
}

/// A^{*q}∘(x) for q ≥ 0 and its quasi-inverse for q < 0.
pub fn symmetric_product_qi<T: Field>(g: &SkewProduct, q: i64, x: T) -> Result<Scaled<T>> {
    let p = symmetric_product(g, q.abs(), x)?;
    Ok(if q < 0 { p.quasi_inverse() } else { p })
}

pub fn lyapunov(g: &SkewProduct, n: u64, x0: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("lyapunov needs N >= 1".into()));
    }
    Ok(product(g, n as i64, x0)?.log_scale / n as f64)
}

/// Mean over `samples` equally spaced starting points.
pub fn lyapunov_averaged(g: &SkewProduct, n: u64, samples: usize) -> Result<f64> {
    let samples = samples.max(1);
    let mut s = 0.0;
    for i in 0..samples {
        s += lyapunov(g, n, i as f64 / samples as f64)?;
    }
    Ok(s / samples as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationCount {
    /// 2·Rot_N: sign changes plus one if the last component vanished.
    pub half_units: u64,
    pub n: u64,
}

impl RotationCount {
    pub fn value(&self) -> f64 {
        self.half_units as f64 / (2.0 * self.n as f64)
    }
}

/// Where the orbit of symmetric factors starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitStart {
    /// x = ((1 − N)/2)·ω.
    Centered,
    At(f64),
}

fn start_index(start: OrbitStart, n: u64) -> (f64, i64) {
    match start {
        OrbitStart::Centered => (0.0, 1 - n as i64),
        OrbitStart::At(x) => (x, 0),
    }
}

/// Rot_N/N from sign changes of the first component of A∘(x_k)···A∘(x_1)y0,
/// x_k = start + (k − 1)ω.
pub fn rotation_sign_count(g: &SkewProduct, n: u64, y0: [f64; 2], start: OrbitStart) -> Result<RotationCount> {
    if !g.factor.has_sign_semantics() {
        return Err(Error::Domain("factor kind has no sign-counting semantics".into()));
    }
    if n == 0 {
        return Err(Error::Domain("rotation needs N >= 1".into()));
    }
    if let FactorFunction::Rank1Scalar { matrix, .. } = &g.factor {
        let v = matrix.apply(y0);
        if v[0] == 0.0 && v[1] == 0.0 {
            return Err(Error::Domain("rank-one matrix annihilates y0".into()));
        }
    }
    let (x, m0) = start_index(start, n);
    let mut y = y0;
    let mut last_sign = 0i8;
    let mut changes = 0u64;
    for k in 0..n {
        let a = g.sym_shifted(m0 + 2 * k as i64, x);
        y = a.apply(y);
        let mx = y[0].abs().max(y[1].abs());
        if mx > 1e120 || (mx < 1e-120 && mx > 0.0) {
            let s = (2.0f64).powi(-(mx.log2().round() as i32));
            y = [y[0] * s, y[1] * s];
        }
        let u = y[0];
        if u != 0.0 {
            let s = if u > 0.0 { 1 } else { -1 };
            if last_sign != 0 && s != last_sign {
                changes += 1;
            }
            last_sign = s;
        }
    }
    let half_units = changes + u64::from(y[0] == 0.0);
    Ok(RotationCount { half_units, n })
}

fn wrap_2pi(t: f64) -> f64 {
    let r = t.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Σ_N/N mod 1 from the continuous angle lift, with g(x, 0) ∈ [0, 2π).
pub fn rotation_lift(g: &SkewProduct, n: u64, y0: [f64; 2], start: OrbitStart) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("rotation needs N >= 1".into()));
    }
    let (x, m0) = start_index(start, n);
    let norm0 = y0[0].hypot(y0[1]);
    if norm0 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut t = wrap_2pi(y0[1].atan2(y0[0]));
    let mut sigma = 0.0;
    for k in 0..n {
        let a = g.sym_shifted(m0 + 2 * k as i64, x);
        if a.det() <= 0.0 {
            return Err(Error::Domain("rotation lift needs det > 0 on the orbit".into()));
        }
        let e1 = a.apply([1.0, 0.0]);
        let v = a.apply([t.cos(), t.sin()]);
        if (e1[0] == 0.0 && e1[1] == 0.0) || (v[0] == 0.0 && v[1] == 0.0) {
            return Err(Error::ZeroVector);
        }
        let tau0 = e1[1].atan2(e1[0]);
        let tau = v[1].atan2(v[0]);
        let gx = wrap_2pi(tau0) + wrap_2pi(tau - tau0) - t;
        sigma += gx;
        t = wrap_2pi(t + gx);
    }
    Ok((sigma / (TWO_PI * n as f64)).rem_euclid(1.0))
}

/// max over the grid of ‖S⁻¹A∘(x)S − A∘(−x)†‖ compared to `tol`.
pub fn reversibility_defect(g: &SkewProduct, grid: usize) -> f64 {
    let grid = grid.max(2);
    (0..grid)
        .map(|i| {
            let x = -0.5 + i as f64 / (grid - 1) as f64;
            let lhs = g.sym_at(x).swap_conj();
            let rhs = g.sym_at(-x).quasi_inverse();
            lhs.sub(&rhs).max_abs()
        })
        .fold(0.0, f64::max)
}

pub fn is_reversible(g: &SkewProduct, grid: usize, tol: f64) -> bool {
    reversibility_defect(g, grid) < tol
}

/// Taylor data of A∘ at 0 on a disk of the given radius.
pub fn factor_series(g: &SkewProduct, degree: usize, radius: f64) -> Result<MatrixSeries> {
    let offset = if g.symmetric { 0.0 } else { -g.frequency / 2.0 };
    let k = |v: f64| TaylorSeries::constant(v, degree, radius);
    Ok(match &g.factor {
        FactorFunction::Schrodinger { lambda, energy, t, potential } => {
            let v = potential.taylor(t + offset, degree, radius).scale(*lambda).sub(&k(*energy));
            MatrixSeries::new(v, k(-1.0), k(1.0), k(0.0))
        }
        FactorFunction::ScaledSchrodinger { delta, eps, t, potential } => {
            let v = potential.taylor(t + offset, degree, radius).sub(&k(*eps));
            MatrixSeries::new(v, k(-delta), k(*delta), k(0.0))
        }
        FactorFunction::Rank1Scalar { scalar, matrix } => {
            if offset != 0.0 {
                return Err(Error::Domain("series of shifted rank-one factors is not supported".into()));
            }
            MatrixSeries::rank1(&scalar.taylor(degree, radius), matrix)
        }
        FactorFunction::TaylorMatrix(m) => {
            if offset != 0.0 {
                return Err(Error::Domain("series of shifted Taylor factors is not supported".into()));
            }
            m.clone()
        }
        FactorFunction::Constant(m) => MatrixSeries::constant(m, degree, radius),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn product_one_and_two() {
        let g = SkewProduct::am(2.0, 0.3);
        let x = 0.17;
        let p1 = product(&g, 1, x).unwrap();
        let a = g.plain_at(x);
        assert!(p1.value().sub(&a).max_abs() < 1e-14);
        assert!((p1.log_scale - a.frob().ln()).abs() < 1e-14);
        let p2 = product(&g, 2, x).unwrap();
        let direct = g.plain_at(x + ALPHA).mul(&a);
        assert!(p2.value().sub(&direct).max_abs() < 1e-13);
    }

    #[test]
    fn negative_product_cancels() {
        let g = SkewProduct::am(2.0, 0.0);
        let x = 0.4;
        let fwd = product(&g, 1, x).unwrap().value();
        let back = product(&g, -1, x + ALPHA).unwrap().value();
        assert!(back.mul(&fwd).sub(&Mat2::identity()).max_abs() < 1e-12);
    }

    #[test]
    fn symmetric_factor_is_shift() {
        let g = SkewProduct::am(3.0, 0.5);
        let x = 0.123;
        let p = symmetric_product(&g, 1, x).unwrap().value();
        let direct = g.factor.eval(x - ALPHA / 2.0);
        assert!(p.sub(&direct).max_abs() < 1e-13);
    }

    #[test]
    fn complex_evaluation_agrees_on_reals() {
        let g = SkewProduct::scaled_am(0.2, 0.1);
        let r = symmetric_product(&g, 13, 0.05).unwrap();
        let c = symmetric_product(&g, 13, Complex64::new(0.05, 0.0)).unwrap();
        assert!((r.log_scale - c.log_scale).abs() < 1e-12);
        assert!((r.m.a - c.m.a.re).abs() < 1e-12);
    }

    #[test]
    fn diagonal_lyapunov() {
        let e = std::f64::consts::E;
        let g = SkewProduct::constant(ALPHA, Mat2::new(e, 0.0, 0.0, 1.0 / e));
        assert!((lyapunov(&g, 100, 0.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rigid_rotation_lift() {
        let theta = 0.1234;
        let g = SkewProduct::constant(ALPHA, Mat2::rotation(TWO_PI * theta));
        let r = rotation_lift(&g, 50, [1.0, 0.0], OrbitStart::Centered).unwrap();
        assert!((r - theta).abs() < 1e-12);
    }

    #[test]
    fn sign_count_rejects_constant() {
        let g = SkewProduct::constant(ALPHA, Mat2::identity());
        assert!(rotation_sign_count(&g, 10, [1.0, 0.0], OrbitStart::Centered).is_err());
    }

    #[test]
    fn reversibility_examples() {
        assert!(is_reversible(&SkewProduct::am(3.0, 0.2), 101, 1e-10));
        assert!(!is_reversible(&SkewProduct::am_with_phase(3.0, 0.2, 0.1), 101, 1e-6));
        assert!(is_reversible(&SkewProduct::limit_scalar(0.3), 101, 1e-12));
    }

    #[test]
    fn series_matches_factor() {
        let g = SkewProduct::scaled_am(0.2, 0.07);
        let s = factor_series(&g, 64, 0.6).unwrap();
        for &x in &[-0.5, -0.1, 0.3, 0.55] {
            assert!(s.eval(x).sub(&g.sym_at(x)).max_abs() < 1e-12);
        }
        let h = SkewProduct::am(3.0, 0.5);
        let s = factor_series(&h, 64, 0.6).unwrap();
        assert!(s.eval(0.2).sub(&h.sym_at(0.2)).max_abs() < 1e-11);
    }

    #[test]
    fn trig_potential_matches_cosine() {
        let p = Potential::Trig { cos: vec![-2.0], sin: vec![0.0, 0.5] };
        let x = 0.37;
        let direct = -2.0 * (TWO_PI * x).cos() + 0.5 * (2.0 * TWO_PI * x).sin();
        assert!((p.eval(x) - direct).abs() < 1e-14);
        let t = p.taylor(0.1, 64, 0.6);
        let direct = -2.0 * (TWO_PI * 0.3).cos() + 0.5 * (2.0 * TWO_PI * 0.3).sin();
        assert!((t.eval(0.2) - direct).abs() < 1e-11);
    }
}
