//! Exact arithmetic in Q[α], α = (√5 − 1)/2, plus Fibonacci and Pisano helpers
//! and the classification of periodic rotation numbers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// α in double precision.
pub const ALPHA: f64 = 0.6180339887498949;
/// α − ALPHA, so that ALPHA + ALPHA_LO carries about 32 digits.
pub const ALPHA_LO: f64 = -5.432115203682506e-17;

/// The element a + bα of Q[α].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GoldenNumber {
    pub a: BigRational,
    pub b: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl GoldenNumber {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        GoldenNumber { a, b }
    }

    /// (n_a/d_a) + (n_b/d_b)·α.
    pub fn from_ratios(n_a: i64, d_a: i64, n_b: i64, d_b: i64) -> Self {
        GoldenNumber::new(rat(n_a, d_a), rat(n_b, d_b))
    }

    pub fn from_int(n: i64) -> Self {
        GoldenNumber::from_ratios(n, 1, 0, 1)
    }

    pub fn rational(n: i64, d: i64) -> Self {
        GoldenNumber::from_ratios(n, d, 0, 1)
    }

    pub fn zero() -> Self {
        GoldenNumber::from_int(0)
    }

    pub fn one() -> Self {
        GoldenNumber::from_int(1)
    }

    pub fn alpha() -> Self {
        GoldenNumber::from_ratios(0, 1, 1, 1)
    }

    /// α⁻¹ = 1 + α.
    pub fn alpha_inv() -> Self {
        GoldenNumber::from_ratios(1, 1, 1, 1)
    }

    /// α⁻³ = 3 + 2α.
    pub fn alpha_inv3() -> Self {
        GoldenNumber::from_ratios(3, 1, 2, 1)
    }

    /// α² = 1 − α.
    pub fn alpha_sq() -> Self {
        GoldenNumber::from_ratios(1, 1, -1, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * ALPHA + b * ALPHA_LO
    }

    /// Exact sign of a + bα.
    pub fn sign(&self) -> i32 {
        golden_sign(self)
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Galois norm (a + bα)(a + bα') = a² − ab − b², with α' = −1 − α.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.a * &self.b - &self.b * &self.b
    }

    pub fn recip(&self) -> Result<Self, Error> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::Domain("division by zero in Q[alpha]".into()));
        }
        Ok(GoldenNumber::new((&self.a - &self.b) / &n, -(&self.b) / &n))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        GoldenNumber::new(&self.a * r, &self.b * r)
    }

    /// Least common denominator of both coefficients.
    pub fn common_denominator(&self) -> BigInt {
        self.a.denom().lcm(self.b.denom())
    }
}

impl Default for GoldenNumber {
    fn default() -> Self {
        GoldenNumber::zero()
    }
}

pub fn golden_add(x: &GoldenNumber, y: &GoldenNumber) -> GoldenNumber {
    GoldenNumber::new(&x.a + &y.a, &x.b + &y.b)
}

pub fn golden_mul(x: &GoldenNumber, y: &GoldenNumber) -> GoldenNumber {
    let bb = &x.b * &y.b;
    GoldenNumber::new(&x.a * &y.a + &bb, &x.a * &y.b + &y.a * &x.b - bb)
}

/// Sign of a + bα without floating point: 2(a + bα) = (2a − b) + b√5.
pub fn golden_sign(x: &GoldenNumber) -> i32 {
    let s = BigRational::from_integer(BigInt::from(2)) * &x.a - &x.b;
    let b = &x.b;
    let ss = s.signum();
    let sb = b.signum();
    let s_sgn = if ss.is_zero() { 0 } else if ss.is_positive() { 1 } else { -1 };
    let b_sgn = if sb.is_zero() { 0 } else if sb.is_positive() { 1 } else { -1 };
    if s_sgn >= 0 && b_sgn >= 0 {
        return if s_sgn == 0 && b_sgn == 0 { 0 } else { 1 };
    }
    if s_sgn <= 0 && b_sgn <= 0 {
        return -1;
    }
    let lhs = &s * &s;
    let rhs = BigRational::from_integer(BigInt::from(5)) * b * b;
    // never equal: √5 is irrational
    let s_dominates = lhs > rhs;
    if s_dominates {
        s_sgn
    } else {
        b_sgn
    }
}

impl Add for GoldenNumber {
    type Output = GoldenNumber;
    fn add(self, o: GoldenNumber) -> GoldenNumber {
        golden_add(&self, &o)
    }
}
impl<'a> Add<&'a GoldenNumber> for &'a GoldenNumber {
    type Output = GoldenNumber;
    fn add(self, o: &GoldenNumber) -> GoldenNumber {
        golden_add(self, o)
    }
}
impl Sub for GoldenNumber {
    type Output = GoldenNumber;
    fn sub(self, o: GoldenNumber) -> GoldenNumber {
        GoldenNumber::new(self.a - o.a, self.b - o.b)
    }
}
impl<'a> Sub<&'a GoldenNumber> for &'a GoldenNumber {
    type Output = GoldenNumber;
    fn sub(self, o: &GoldenNumber) -> GoldenNumber {
        GoldenNumber::new(&self.a - &o.a, &self.b - &o.b)
    }
}
impl Neg for GoldenNumber {
    type Output = GoldenNumber;
    fn neg(self) -> GoldenNumber {
        GoldenNumber::new(-self.a, -self.b)
    }
}
impl Mul for GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, o: GoldenNumber) -> GoldenNumber {
        golden_mul(&self, &o)
    }
}
impl<'a> Mul<&'a GoldenNumber> for &'a GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, o: &GoldenNumber) -> GoldenNumber {
        golden_mul(self, o)
    }
}
impl Div for GoldenNumber {
    type Output = GoldenNumber;
    /// Panics on division by zero; use `recip` for a checked version.
    fn div(self, o: GoldenNumber) -> GoldenNumber {
        golden_mul(&self, &o.recip().expect("division by zero in Q[alpha]"))
    }
}

impl PartialOrd for GoldenNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for GoldenNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        match golden_sign(&(self - other)) {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GoldenNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", fmt_rat(&self.a));
        }
        let bpart = format!("{}*a", fmt_rat(&self.b.abs()));
        if self.a.is_zero() {
            if self.b.is_negative() {
                write!(f, "-{}", bpart)
            } else {
                write!(f, "{}", bpart)
            }
        } else {
            let op = if self.b.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}", fmt_rat(&self.a), op, bpart)
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let bad = || Error::Parse(format!("bad rational '{}'", s));
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

impl FromStr for GoldenNumber {
    type Err = Error;

    /// Accepts sums of terms `p/q` and `p/q*a` (or `a`, `-a`), e.g. `1/4`, `w/v+u/v*a`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        let mut terms: Vec<String> = Vec::new();
        let mut cur = String::new();
        for (i, c) in compact.chars().enumerate() {
            if (c == '+' || c == '-') && i > 0 {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        terms.push(cur);
        let mut out = GoldenNumber::zero();
        for t in terms {
            let (neg, body) = match t.strip_prefix('-') {
                Some(r) => (true, r),
                None => (false, t.strip_prefix('+').unwrap_or(&t)),
            };
            let (coef, is_alpha) = if let Some(c) = body.strip_suffix("*a") {
                (parse_rational(c)?, true)
            } else if body == "a" {
                (BigRational::one(), true)
            } else if let Some(c) = body.strip_suffix('a') {
                (parse_rational(c)?, true)
            } else {
                (parse_rational(body)?, false)
            };
            let coef = if neg { -coef } else { coef };
            if is_alpha {
                out.b += coef;
            } else {
                out.a += coef;
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct GoldenRepr {
    a: String,
    b: String,
}

impl Serialize for GoldenNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GoldenRepr { a: fmt_rat(&self.a), b: fmt_rat(&self.b) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GoldenNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GoldenRepr::deserialize(d)?;
        let a = parse_rational(&r.a).map_err(serde::de::Error::custom)?;
        let b = parse_rational(&r.b).map_err(serde::de::Error::custom)?;
        Ok(GoldenNumber::new(a, b))
    }
}

/// p_k with p_0 = 0, p_1 = p_2 = 1; q_k = p_{k+1}.
pub fn fibonacci(k: u32) -> BigInt {
    let (mut x, mut y) = (BigInt::zero(), BigInt::one());
    for _ in 0..k {
        let z = &x + &y;
        x = std::mem::replace(&mut y, z);
    }
    x
}

/// p_k as u64; panics past p_93.
pub fn fib_u64(k: u32) -> u64 {
    fibonacci(k).to_u64().expect("Fibonacci number exceeds u64")
}

/// Least ℓ with p_{k+ℓ} ≡ p_k (mod v) for all k.
pub fn pisano_period(v: u64) -> Result<u64, Error> {
    if v < 2 {
        return Err(Error::Domain("pisano_period needs v >= 2".into()));
    }
    let (mut x, mut y) = (0u64, 1u64);
    let mut k = 0u64;
    loop {
        let z = (x + y) % v;
        x = y;
        y = z;
        k += 1;
        if x == 0 && y == 1 {
            return Ok(k);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum RotationClass {
    PositivePeriodic { u: BigInt, v: BigInt, w: BigInt },
    /// ρ < 0 with ρ + 1/2 positive periodic; (u, v, w) describe ρ + 1/2.
    NegativePeriodic { u: BigInt, v: BigInt, w: BigInt },
    SpecialGap,
    Other,
}

/// Canonical (u, v, w) with ρ = w/v + (u/v)α, v the least common denominator.
pub fn canonical_uvw(rho: &GoldenNumber) -> (BigInt, BigInt, BigInt) {
    let v = rho.common_denominator();
    let w = (&rho.a * BigRational::from_integer(v.clone())).to_integer();
    let u = (&rho.b * BigRational::from_integer(v.clone())).to_integer();
    (u, v, w)
}

fn is_special(rho: &GoldenNumber) -> bool {
    let half = GoldenNumber::rational(1, 2);
    let half_alpha = GoldenNumber::from_ratios(0, 1, 1, 2);
    rho.is_zero() || *rho == half || *rho == half_alpha
}

fn positive_test(rho: &GoldenNumber) -> Option<(BigInt, BigInt, BigInt)> {
    let (u, v, w) = canonical_uvw(rho);
    if v <= BigInt::from(2) {
        return None;
    }
    // |u/v − (w/v)α| ≤ 1/2
    let t = GoldenNumber::new(rho.b.clone(), -rho.a.clone());
    let half = GoldenNumber::rational(1, 2);
    if t.abs() <= half {
        Some((u, v, w))
    } else {
        None
    }
}

pub fn classify_rotation_number(rho: &GoldenNumber) -> Result<RotationClass, Error> {
    let half = GoldenNumber::rational(1, 2);
    if *rho > half || *rho < -half.clone() {
        return Err(Error::Domain(format!("rotation number {} outside [-1/2, 1/2]", rho)));
    }
    if rho.sign() >= 0 {
        if is_special(rho) {
            return Ok(RotationClass::SpecialGap);
        }
        return Ok(match positive_test(rho) {
            Some((u, v, w)) => RotationClass::PositivePeriodic { u, v, w },
            None => RotationClass::Other,
        });
    }
    let shifted = rho + &half;
    if is_special(&shifted) {
        return Ok(RotationClass::SpecialGap);
    }
    Ok(match positive_test(&shifted) {
        Some((u, v, w)) => RotationClass::NegativePeriodic { u, v, w },
        None => RotationClass::Other,
    })
}

/// jα − round(jα) accurate to a few 1e-16 for |j| < 2^53, via a split α.
pub fn frac_mul_alpha(j: i64) -> f64 {
    frac_mul(j, ALPHA, ALPHA_LO)
}

/// j·(hi + lo) reduced to [−1/2, 1/2], using an exact product of the high part.
pub fn frac_mul(j: i64, hi: f64, lo: f64) -> f64 {
    let jf = j as f64;
    let p = jf * hi;
    let e = jf.mul_add(hi, -p);
    let r = p - p.round();
    let t = r + (e + jf * lo);
    t - t.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GoldenNumber {
        s.parse().unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(g("1") + g("a"), g("1+a"));
        assert_eq!(g("1/2-1/2*a") + g("-1/2+1/2*a"), GoldenNumber::zero());
        let two_a = g("a") + g("a");
        assert_eq!(two_a, g("2*a"));
        assert!((two_a.to_f64() - (5f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn mul_examples() {
        let a = GoldenNumber::alpha();
        assert_eq!(&a * &a, g("1-a"));
        assert_eq!(&a * &g("1+a"), GoldenNumber::one());
        let inv3 = g("1+a") * g("1+a") * g("1+a");
        assert_eq!(inv3, g("3+2a"));
        assert!((inv3.to_f64() - 4.2360679775).abs() < 1e-9);
    }

    #[test]
    fn sign_examples() {
        assert_eq!(golden_sign(&GoldenNumber::zero()), 0);
        assert_eq!(golden_sign(&g("1-a")), 1);
        assert_eq!(golden_sign(&g("a-1/2")), 1);
        assert_eq!(golden_sign(&g("1/2-a")), -1);
        assert_eq!(golden_sign(&g("-3-2a")), -1);
    }

    #[test]
    fn fibonacci_values() {
        assert_eq!(fibonacci(1), BigInt::from(1));
        assert_eq!(fibonacci(2), BigInt::from(1));
        assert_eq!(fibonacci(6), BigInt::from(8));
        assert_eq!(fibonacci(24), BigInt::from(46368));
        assert_eq!(fib_u64(36), 14930352);
    }

    #[test]
    fn pisano_values() {
        assert_eq!(pisano_period(2).unwrap(), 3);
        assert_eq!(pisano_period(4).unwrap(), 6);
        assert_eq!(pisano_period(10).unwrap(), 60);
        assert!(pisano_period(1).is_err());
    }

    #[test]
    fn classify_examples() {
        match classify_rotation_number(&g("1/4")).unwrap() {
            RotationClass::PositivePeriodic { u, v, w } => {
                assert_eq!((u, v, w), (BigInt::from(0), BigInt::from(4), BigInt::from(1)));
            }
            c => panic!("unexpected {:?}", c),
        }
        assert_eq!(classify_rotation_number(&g("1/2*a")).unwrap(), RotationClass::SpecialGap);
        assert_eq!(classify_rotation_number(&g("1/2")).unwrap(), RotationClass::SpecialGap);
        assert_eq!(classify_rotation_number(&g("0")).unwrap(), RotationClass::SpecialGap);
        assert_eq!(classify_rotation_number(&g("1/2-1/2*a")).unwrap(), RotationClass::Other);
        assert!(matches!(
            classify_rotation_number(&g("-1/4")).unwrap(),
            RotationClass::NegativePeriodic { .. }
        ));
        assert!(classify_rotation_number(&g("3/4")).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(g("1/5+2/5*a"), GoldenNumber::from_ratios(1, 5, 2, 5));
        assert_eq!(g("-a"), GoldenNumber::from_ratios(0, 1, -1, 1));
        assert_eq!(g("3+2a").to_string(), "3+2*a");
        assert_eq!(g("1/2-1/2*a").to_string(), "1/2-1/2*a");
        assert!("1/0".parse::<GoldenNumber>().is_err());
        assert!("x".parse::<GoldenNumber>().is_err());
    }

    #[test]
    fn json_shape() {
        let x = g("1/2-3/4*a");
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"a":"1/2","b":"-3/4"}"#);
        let y: GoldenNumber = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn reciprocal() {
        let x = g("2-3/7*a");
        assert_eq!(&x * &x.recip().unwrap(), GoldenNumber::one());
        assert!(GoldenNumber::zero().recip().is_err());
    }

    #[test]
    fn frac_mul_accuracy() {
        // reference values from a 60-digit evaluation
        let cases = [
            (10_000_000i64, -0.112501051517954131656343618822796908),
            (24_157_817, 0.0000000185121691873052143967361116863),
            (-12_345_677, -0.000127835579897858975530668100262913),
        ];
        for (j, exact) in cases {
            assert!((frac_mul_alpha(j) - exact).abs() < 2e-16, "{j}");
        }
    }
}
