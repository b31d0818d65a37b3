//! The δ → 0 Schrödinger limit and the curve ε(δ) on which the rotation number of the
//! scaled family is pinned to a periodic value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::DEFAULT_DEGREE;
use crate::cocycle::{rotation_sign_count, OrbitStart, Potential, SkewProduct};
use crate::golden::{fib_u64, RotationClass};
use crate::rg::{direct_residual, iterate, pair_from_skew, LChoice, Normalization, RgOptions};
use crate::zeros::run_until_periodic;
use crate::{Error, GoldenNumber, Result};

/// Measure of {x : v(x) ≤ ε}, the integrated density of states of the δ → 0 limit.
pub fn ids_limit(eps: f64, potential: &Potential) -> f64 {
    potential.sublevel_measure(eps)
}

/// Rotation number of the limit factor −ε − 2cos(2πx).
pub fn limit_rotation(eps: f64) -> Result<f64> {
    if !(-2.0..=2.0).contains(&eps) {
        return Err(Error::Domain(format!("epsilon {eps} outside [-2, 2]")));
    }
    Ok((-eps / 2.0).acos() / (2.0 * PI))
}

/// Rotation and 𝔨 = 2·rot of the limit factor measured by sign counting over n factors.
pub fn limit_rotation_measured(eps: f64, n: u64) -> Result<(f64, f64)> {
    let g = SkewProduct::limit_scalar(eps);
    let r = rotation_sign_count(&g, n, [1.0, 0.0], OrbitStart::Centered)?.value();
    Ok((r, 2.0 * r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Rotation numbers are measured at N = p_{fib_index}, checked at p_{fib_index − 2}.
    pub fib_index: u32,
    pub delta_max: f64,
    /// Extra room beyond the ±2δ sandwich when seeding the bracket.
    pub margin: f64,
    /// Renormalization depth of the residual used inside a rotation plateau.
    pub refine_depth: u32,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { fib_index: 26, delta_max: 0.5, margin: 0.01, refine_depth: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub epsilon: f64,
    pub rho_target: GoldenNumber,
    /// |rot_N − ρ| at the accepted ε; bounded below by the half-unit resolution 1/(4N).
    pub residual: f64,
    pub bracket: (f64, f64),
    /// Width of the ε-interval on which the measured rotation equals ρ to resolution.
    pub plateau_width: f64,
}

struct RotationProbe {
    delta: f64,
    rho: f64,
    n: u64,
}

impl RotationProbe {
    fn rot(&self, eps: f64, n: u64) -> Result<f64> {
        Ok(rotation_sign_count(&SkewProduct::scaled_am(self.delta, eps), n, [1.0, 0.0], OrbitStart::Centered)?.value())
    }

    /// −1 below ρ, 0 within one half-unit, +1 above.
    fn side(&self, eps: f64) -> Result<i8> {
        let d = self.rot(eps, self.n)? - self.rho;
        let band = 1.0 / self.n as f64;
        Ok(if d < -band {
            -1
        } else if d > band {
            1
        } else {
            0
        })
    }
}

/// Last point of `lo..hi` where `pred` is false, by bisection to width `tol`; `pred(lo)` must
/// be false and `pred(hi)` true.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<(f64, f64)> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

pub fn period_of(rho: &GoldenNumber) -> Result<u32> {
    match crate::golden::classify_rotation_number(rho)? {
        RotationClass::PositivePeriodic { .. } => {}
        _ => return Err(Error::Domain(format!("{rho} is not a positive periodic rotation number"))),
    }
    Ok(run_until_periodic(rho, 64)?.n as u32)
}

/// ε(δ) for the scaled AM family. Bisection on the measured rotation number locates the
/// plateau where it equals ρ; inside a plateau wider than `tol` the sign change of the
/// stable-manifold residual picks the crossing.
pub fn critical_curve(rho: &GoldenNumber, delta: f64, tol: f64, opts: &CurveOptions) -> Result<CurvePoint> {
    if !(0.0..opts.delta_max).contains(&delta) {
        return Err(Error::Domain(format!("delta {delta} outside [0, {})", opts.delta_max)));
    }
    if tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n_period = period_of(rho)?;
    let r = rho.to_f64();
    let eps0 = -2.0 * (2.0 * PI * r).cos();
    let probe = RotationProbe { delta, rho: r, n: fib_u64(opts.fib_index) };
    let w = 2.0 * delta + opts.margin;
    let (lo, hi) = (eps0 - w, eps0 + w);
    if probe.side(lo)? != -1 || probe.side(hi)? != 1 {
        return Err(Error::NoCrossing);
    }
    // the rotation number is nondecreasing in ε; check it on a coarse grid of the bracket
    let grid: Vec<f64> = (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
    let mut prev = f64::NEG_INFINITY;
    for &e in &grid {
        let v = probe.rot(e, probe.n)?;
        if v < prev - 1.0 / probe.n as f64 {
            return Err(Error::Domain(format!("measured rotation not monotone in epsilon near {e}")));
        }
        prev = v;
    }
    let (_, left) = bisect(lo, hi, tol, |e| Ok(probe.side(e)? >= 0))?;
    let (right, _) = bisect(left, hi, tol, |e| Ok(probe.side(e)? > 0))?;
    let plateau_width = (right - left).max(0.0);
    let (mut blo, mut bhi) = (left - tol / 2.0, right.max(left) + tol / 2.0);
    // word length q_{3nk} ≤ q_31 keeps the residual cheap; long periods skip the refinement
    let k = opts.refine_depth.min(10 / n_period);
    if plateau_width > tol && (delta == 0.0 || k > 0) {
        let res = |e: f64| -> Result<f64> {
            if delta == 0.0 {
                // the limit factor a∘ at ρ
                Ok(-e - 2.0 * (2.0 * PI * r).cos())
            } else {
                direct_residual(&SkewProduct::scaled_am(delta, e), n_period, k, r)
            }
        };
        let (rl, rr) = (res(left)?, res(right)?);
        if rl.signum() != rr.signum() {
            let sl = rl.signum();
            let (a, b) = bisect(left, right, tol, |e| Ok(res(e)?.signum() != sl))?;
            blo = a;
            bhi = b;
        } else {
            blo = left;
            bhi = right;
        }
    }
    let epsilon = 0.5 * (blo + bhi);
    let residual = (probe.rot(epsilon, probe.n)? - r).abs();
    let n0 = fib_u64(opts.fib_index - 2);
    let check = (probe.rot(epsilon, n0)? - r).abs();
    if check > 1.0 / n0 as f64 {
        return Err(Error::Domain(format!("rotation at N = {n0} disagrees with the target by {check:.3e}")));
    }
    Ok(CurvePoint {
        delta,
        epsilon,
        rho_target: rho.clone(),
        residual,
        bracket: (blo, bhi),
        plateau_width,
    })
}

/// Entry a of the k-times renormalized A∘ of the scaled family at ρ, from the series iteration.
pub fn stable_manifold_residual(delta: f64, eps: f64, rho: &GoldenNumber, k: u32) -> Result<f64> {
    let n = period_of(rho)?;
    let g = SkewProduct::scaled_am(delta, eps);
    let p0 = pair_from_skew(&g, DEFAULT_DEGREE, crate::analytic::DEFAULT_RADII)?;
    let opts = RgOptions { n, l_choice: LChoice::SPower, normalization: Normalization::NormScaling, target_b0: 1.0 };
    let (_, state) = iterate(&p0, k, &opts)?;
    Ok(state.pair.a.eval(rho.to_f64()).a)
}

/// Root of the series residual in ε by bisection on [lo, hi].
pub fn residual_root(delta: f64, rho: &GoldenNumber, k: u32, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |e: f64| stable_manifold_residual(delta, e, rho, k);
    let sl = f(lo)?.signum();
    if f(hi)?.signum() == sl {
        return Err(Error::NoCrossing);
    }
    let (a, b) = bisect(lo, hi, tol, |e| Ok(f(e)?.signum() != sl))?;
    Ok(0.5 * (a + b))
}

/// Whether the measured rotation at (δ, ε) lies between the limit rotations at ε ∓ 2δ.
pub fn sandwich_holds(delta: f64, eps: f64, n: u64) -> Result<bool> {
    let g = SkewProduct::scaled_am(delta, eps);
    let r = rotation_sign_count(&g, n, [1.0, 0.0], OrbitStart::Centered)?.value();
    let lo = limit_rotation((eps - 2.0 * delta).clamp(-2.0, 2.0))?;
    let hi = limit_rotation((eps + 2.0 * delta).clamp(-2.0, 2.0))?;
    let slack = 1.0 / n as f64;
    Ok(r >= lo - slack && r <= hi + slack)
}
