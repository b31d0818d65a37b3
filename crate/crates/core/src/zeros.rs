//! Exact zero-set dynamics of renormalized pairs in Q[α].

use std::cmp::Ordering;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::golden::{classify_rotation_number, RotationClass};
use crate::{Error, GoldenNumber, Result};

/// Relative float gap above which the f64 images decide the order on their own.
const FLOAT_SEPARATION: f64 = 1e-9;

fn cmp_exact(x: &(f64, GoldenNumber), y: &(f64, GoldenNumber)) -> Ordering {
    let d = x.0 - y.0;
    if d.abs() > FLOAT_SEPARATION * (1.0 + x.0.abs().max(y.0.abs())) {
        return if d < 0.0 { Ordering::Less } else { Ordering::Greater };
    }
    x.1.cmp(&y.1)
}

/// A finite set of distinct points of Q[α], sorted increasingly.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZeroSet {
    points: Vec<GoldenNumber>,
}

impl ZeroSet {
    pub fn new(points: impl IntoIterator<Item = GoldenNumber>) -> Self {
        let mut keyed: Vec<(f64, GoldenNumber)> = points.into_iter().map(|p| (p.to_f64(), p)).collect();
        keyed.sort_by(cmp_exact);
        keyed.dedup_by(|x, y| x.1 == y.1);
        ZeroSet { points: keyed.into_iter().map(|(_, p)| p).collect() }
    }

    pub fn empty() -> Self {
        ZeroSet::default()
    }

    pub fn points(&self) -> &[GoldenNumber] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, z: &GoldenNumber) -> bool {
        let key = (z.to_f64(), z.clone());
        self.points
            .binary_search_by(|p| cmp_exact(&(p.to_f64(), p.clone()), &key))
            .is_ok()
    }

    pub fn is_subset(&self, other: &ZeroSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn union(&self, other: &ZeroSet) -> ZeroSet {
        ZeroSet::new(self.points.iter().chain(other.points.iter()).cloned())
    }

    pub fn neg(&self) -> ZeroSet {
        ZeroSet { points: self.points.iter().rev().map(|p| -p.clone()).collect() }
    }

    /// Z ∪ −Z.
    pub fn symmetrized(&self) -> ZeroSet {
        self.union(&self.neg())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.points.iter().map(GoldenNumber::to_f64).collect()
    }
}

/// Z ∩ [−r, r], closed at both ends.
pub fn window(z: &ZeroSet, r: &GoldenNumber) -> ZeroSet {
    let lo = -r.clone();
    ZeroSet { points: z.points.iter().filter(|p| **p >= lo && *p <= r).cloned().collect() }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPair {
    #[serde(rename = "B")]
    pub b: ZeroSet,
    #[serde(rename = "A")]
    pub a: ZeroSet,
    pub step_count: u64,
}

struct Shifts {
    inv3: GoldenNumber,
    half_sq: GoldenNumber,
    sq: GoldenNumber,
}

impl Shifts {
    fn new() -> Self {
        Shifts {
            inv3: GoldenNumber::alpha_inv3(),
            half_sq: GoldenNumber::from_ratios(1, 2, -1, 2),
            sq: GoldenNumber::alpha_sq(),
        }
    }
}

fn images(p: &ZeroPair, s: &Shifts, keep: impl Fn(&GoldenNumber) -> bool) -> ZeroPair {
    let scale = |z: GoldenNumber| &s.inv3 * &z;
    let mut nb = Vec::new();
    let mut na = Vec::new();
    for z in p.b.points() {
        nb.push(scale(z.clone()));
        na.push(scale(z - &s.half_sq));
        na.push(scale(z + &s.half_sq));
    }
    for z in p.a.points() {
        nb.push(scale(z - &s.half_sq));
        nb.push(scale(z + &s.half_sq));
        na.push(scale(z - &s.sq));
        na.push(scale(z.clone()));
        na.push(scale(z + &s.sq));
    }
    ZeroPair {
        b: ZeroSet::new(nb.into_iter().filter(|z| keep(z))),
        a: ZeroSet::new(na.into_iter().filter(|z| keep(z))),
        step_count: p.step_count + 1,
    }
}

/// B̃ = α⁻³(B ∪ (A ± α²/2)), Ã = α⁻³((B ± α²/2) ∪ (A − α²) ∪ A ∪ (A + α²)).
pub fn zero_step(p: &ZeroPair) -> ZeroPair {
    images(p, &Shifts::new(), |_| true)
}

/// zero_step followed by restriction to [−w, w]. For w > 1/2 the affine maps push every point
/// outside [−w, w] further out, so the restriction commutes with the dynamics.
pub fn zero_step_pruned(p: &ZeroPair, w: &GoldenNumber) -> ZeroPair {
    let lo = -w.clone();
    images(p, &Shifts::new(), |z| *z >= lo && z <= w)
}

/// Consecutive differences.
pub fn gaps(z: &ZeroSet) -> Result<Vec<GoldenNumber>> {
    if z.len() < 2 {
        return Err(Error::Domain("gaps need at least two points".into()));
    }
    Ok(z.points.windows(2).map(|w| &w[1] - &w[0]).collect())
}

/// Default super-window α⁻³/2 + 2.
pub fn default_super_window() -> GoldenNumber {
    GoldenNumber::from_ratios(3, 2, 1, 1) + GoldenNumber::from_int(2)
}

/// The lift {ρ} + Z restricted to [−w, w]: zeros of x ↦ sin(π(x − ρ)).
pub fn lifted_seed(rho: &GoldenNumber, w: &GoldenNumber) -> ZeroPair {
    let wf = w.to_f64().ceil() as i64 + 1;
    let lo = -w.clone();
    let a = (-wf..=wf)
        .map(|m| rho + &GoldenNumber::from_int(m))
        .filter(|z| *z >= lo && z <= w);
    ZeroPair { b: ZeroSet::empty(), a: ZeroSet::new(a), step_count: 0 }
}

/// Runs the dynamics from the lifted seed, pruned to [−w, w], recording windowed sets.
pub struct ZeroOrbit {
    pub state: ZeroPair,
    w: GoldenNumber,
}

impl ZeroOrbit {
    pub fn new(rho: &GoldenNumber, w: &GoldenNumber) -> Result<Self> {
        if *w <= GoldenNumber::rational(1, 2) {
            return Err(Error::Domain("super-window must exceed 1/2".into()));
        }
        Ok(ZeroOrbit { state: lifted_seed(rho, w), w: w.clone() })
    }

    pub fn advance(&mut self) {
        self.state = zero_step_pruned(&self.state, &self.w);
    }

    pub fn windowed(&self, r: &GoldenNumber) -> (ZeroSet, ZeroSet) {
        (window(&self.state.a, r), window(&self.state.b, r))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub n: u64,
    /// First step of the periodic regime.
    pub onset: u64,
    #[serde(rename = "orbitA")]
    pub orbit_a: Vec<ZeroSet>,
    #[serde(rename = "orbitB")]
    pub orbit_b: Vec<ZeroSet>,
}

/// Least n > 0 for which k ↦ (𝓐ₖ(1/2), 𝓑ₖ(1/2)) is periodic, seeded from B = {}, A = {ρ} + Z.
/// The detected period is confirmed over one more full period before it is returned.
pub fn run_until_periodic(rho: &GoldenNumber, max_steps: u64) -> Result<PeriodicOrbit> {
    run_until_periodic_in(rho, max_steps, &default_super_window())
}

pub fn run_until_periodic_in(rho: &GoldenNumber, max_steps: u64, w: &GoldenNumber) -> Result<PeriodicOrbit> {
    match classify_rotation_number(rho)? {
        RotationClass::PositivePeriodic { .. } => {}
        other => {
            return Err(Error::Domain(format!("rotation number {} is not positive periodic ({:?})", rho, other)))
        }
    }
    let half = GoldenNumber::rational(1, 2);
    let mut orbit = ZeroOrbit::new(rho, w)?;
    let mut states: Vec<(ZeroSet, ZeroSet)> = vec![orbit.windowed(&half)];
    let mut candidate: Option<(u64, u64)> = None;
    for k in 1..=max_steps {
        orbit.advance();
        states.push(orbit.windowed(&half));
        let k = k as usize;
        if let Some((onset, n)) = candidate {
            if states[k] != states[k - n as usize] {
                candidate = None;
            } else if k as u64 >= onset + 3 * n {
                let (orbit_a, orbit_b) = states.into_iter().unzip();
                return Ok(PeriodicOrbit { n, onset, orbit_a, orbit_b });
            }
        }
        if candidate.is_none() {
            if let Some(j) = (0..k).find(|&j| states[j] == states[k]) {
                candidate = Some((j as u64, (k - j) as u64));
            }
        }
    }
    Err(Error::PeriodNotFound)
}

/// Fibonacci congruences p_{3n−1} ≡ 1 and p_{3n} ≡ 0 (mod v).
pub fn congruences_hold(n: u64, v: &BigInt) -> bool {
    let k = (3 * n) as u32;
    let p_prev = crate::golden::fibonacci(k - 1) % v;
    let p = crate::golden::fibonacci(k) % v;
    p_prev == BigInt::from(1) % v && p == BigInt::from(0)
}

/// α^{−k} as an element of Z[α].
pub fn alpha_inv_pow(k: u32) -> GoldenNumber {
    let mut r = GoldenNumber::one();
    let inv = GoldenNumber::alpha_inv();
    for _ in 0..k {
        r = &r * &inv;
    }
    r
}

/// Limit semi-zero sets: the sets 𝓐′_t = 𝓐_{tn} ∩ [−r_t/2, r_t/2], r_t = α^{−3nt}, grow
/// monotonically in t; the last block is returned restricted to [−R, R].
pub fn limit_zero_sets(rho: &GoldenNumber, n: u64, t_max: u64, window_radius: &GoldenNumber) -> Result<ZeroPair> {
    if n == 0 {
        return Err(Error::Domain("period must be positive".into()));
    }
    let half_period = |t: u64| alpha_inv_pow((3 * n * t) as u32) * GoldenNumber::rational(1, 2);
    let last = half_period(t_max);
    if *window_radius > last {
        return Err(Error::Domain(format!(
            "window {} exceeds the half-period {} reached after {} blocks",
            window_radius,
            last.to_f64(),
            t_max
        )));
    }
    let w = last + GoldenNumber::from_int(2);
    let mut orbit = ZeroOrbit::new(rho, &w)?;
    let mut prev = orbit.windowed(&half_period(0));
    for t in 1..=t_max {
        for _ in 0..n {
            orbit.advance();
        }
        let cur = orbit.windowed(&half_period(t));
        if !prev.0.is_subset(&cur.0) || !prev.1.is_subset(&cur.1) {
            return Err(Error::Monotonicity);
        }
        prev = cur;
    }
    Ok(ZeroPair {
        a: window(&prev.0, window_radius),
        b: window(&prev.1, window_radius),
        step_count: n * t_max,
    })
}
