use proptest::prelude::*;

use skewrg::analytic::{ts_multiply, MatrixSeries, TaylorSeries, DEFAULT_RADII};
use skewrg::cocycle::{rotation_sign_count, OrbitStart, SkewProduct};
use skewrg::golden::{classify_rotation_number, fib_u64, fibonacci, golden_sign, RotationClass};
use skewrg::limit::{LimitProduct, TailModel};
use skewrg::rg::{pair_from_skew, r3_step, r3n_scalar};
use skewrg::scalar::Mat2;
use skewrg::zeros::{default_super_window, ZeroOrbit, ZeroSet};
use skewrg::GoldenNumber;

fn golden() -> impl Strategy<Value = GoldenNumber> {
    (-60i64..60, 1i64..30, -60i64..60, 1i64..30).prop_map(|(a, b, c, d)| GoldenNumber::from_ratios(a, b, c, d))
}

fn series(radius: f64) -> impl Strategy<Value = TaylorSeries> {
    prop::collection::vec(-3.0f64..3.0, 1..12).prop_map(move |c| TaylorSeries::new(c, radius))
}

proptest! {
    #[test]
    fn ring_laws(x in golden(), y in golden(), z in golden()) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
    }

    #[test]
    fn reciprocal_is_exact(x in golden()) {
        prop_assume!(!x.is_zero());
        prop_assert_eq!(&x * &x.recip().unwrap(), GoldenNumber::one());
    }

    #[test]
    fn sign_matches_float_value(x in golden()) {
        let f = x.to_f64();
        prop_assume!(f.abs() > 1e-9);
        prop_assert_eq!(golden_sign(&x), if f > 0.0 { 1 } else { -1 });
    }

    #[test]
    fn order_matches_difference_sign(x in golden(), y in golden()) {
        let d = golden_sign(&(&x - &y));
        prop_assert_eq!(x.cmp(&y), d.cmp(&0));
    }

    #[test]
    fn text_and_json_round_trip(x in golden()) {
        let back: GoldenNumber = x.to_string().parse().unwrap();
        prop_assert_eq!(&back, &x);
        let j = serde_json::to_string(&x).unwrap();
        let back: GoldenNumber = serde_json::from_str(&j).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), j);
    }

    #[test]
    fn fibonacci_recurrence(k in 2u32..80) {
        prop_assert_eq!(fibonacci(k), fibonacci(k - 1) + fibonacci(k - 2));
        prop_assert_eq!(fibonacci(k), num_bigint::BigInt::from(fib_u64(k)));
    }

    #[test]
    fn norm_is_submultiplicative(f in series(0.7), g in series(0.7)) {
        let fg = ts_multiply(&f, &g).unwrap();
        prop_assert!(fg.norm() <= f.norm() * g.norm() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn series_evaluation_bounded_by_norm(f in series(0.5), t in -1.0f64..1.0) {
        prop_assert!(f.eval(0.5 * t).abs() <= f.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn matrix_norm_is_submultiplicative(e in prop::collection::vec(series(0.6), 8)) {
        let m = MatrixSeries::new(e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone());
        let n = MatrixSeries::new(e[4].clone(), e[5].clone(), e[6].clone(), e[7].clone());
        prop_assert!(m.mul(&n).unwrap().norm() <= m.norm() * n.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn quasi_inverse_gives_determinant(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
        let m = Mat2::new(a, b, c, d);
        let p = m.quasi_inverse().mul(&m);
        let det = m.det();
        let scale = 1.0 + m.frob() * m.frob();
        prop_assert!((p.a - det).abs() < 1e-12 * scale && (p.d - det).abs() < 1e-12 * scale);
        prop_assert!(p.b.abs() < 1e-12 * scale && p.c.abs() < 1e-12 * scale);
        prop_assert_eq!(m.quasi_inverse().quasi_inverse(), m);
    }

    #[test]
    fn renormalization_preserves_reversibility(delta in 0.05f64..0.5, eps in -0.5f64..0.5) {
        let g = SkewProduct::scaled_am(delta, eps);
        let p = pair_from_skew(&g, 32, DEFAULT_RADII).unwrap();
        prop_assert!(p.reversibility_defect() < 1e-12 * (1.0 + p.norm()));
        let q = r3_step(&p).unwrap();
        prop_assert!(q.reversibility_defect() < 1e-9 * q.norm());
    }

    #[test]
    fn scalar_step_preserves_evenness(eps in -1.5f64..1.5, x in -0.5f64..0.5) {
        let b = |_t: f64| 1.0;
        let a = move |t: f64| -eps - 2.0 * (2.0 * std::f64::consts::PI * t).cos();
        let (bp, ap) = r3n_scalar(&b, &a, 1, x);
        let (bm, am) = r3n_scalar(&b, &a, 1, -x);
        prop_assert!((bp - bm).abs() <= 1e-12 * (1.0 + bp.abs()));
        prop_assert!((ap - am).abs() <= 1e-12 * (1.0 + ap.abs()));
    }

    #[test]
    fn rotation_is_monotone_in_energy(lambda in 0.5f64..4.0, e in -3.0f64..3.0, de in 0.0f64..1.0) {
        let n = fib_u64(16);
        let r = |e: f64| rotation_sign_count(&SkewProduct::am(lambda, e), n, [1.0, 0.0], OrbitStart::Centered).unwrap().value();
        let (lo, hi) = (r(e), r(e + de));
        prop_assert!((0.0..=0.5 + 1.0 / n as f64).contains(&lo));
        // E enters the diagonal as −E, so raising E can only add sign changes
        prop_assert!(hi >= lo - 1.0 / n as f64);
    }

    #[test]
    fn zero_sets_are_symmetric_after_symmetrizing(xs in prop::collection::vec(golden(), 0..10)) {
        let z = ZeroSet::new(xs).symmetrized();
        prop_assert_eq!(z.neg(), z.clone());
        let j = serde_json::to_string(&z).unwrap();
        prop_assert_eq!(serde_json::from_str::<ZeroSet>(&j).unwrap(), z);
    }

    #[test]
    fn limit_products_are_even(zs in prop::collection::vec(1u32..200, 1..20), x in -3.0f64..3.0) {
        let zeros: Vec<GoldenNumber> = zs.iter().map(|&k| GoldenNumber::rational(k as i64, 7)).collect();
        let f = LimitProduct::new(zeros, 30.0, 1.0, TailModel { s2: 1e-3, s4: 1e-6 });
        prop_assert!((f.evaluate(x) - f.evaluate(-x)).abs() <= 1e-12 * (1.0 + f.evaluate(x).abs()));
    }
}

proptest! {
    // most (w, u, v) fall outside the positive periodic class
    #![proptest_config(ProptestConfig { cases: 128, max_global_rejects: 20000, ..ProptestConfig::default() })]

    #[test]
    fn half_window_holds_at_most_one_zero(w in -6i64..7, u in -6i64..7, v in 3i64..13) {
        let rho = GoldenNumber::from_ratios(w, v, u, v);
        let class = classify_rotation_number(&rho);
        prop_assume!(matches!(class, Ok(RotationClass::PositivePeriodic { .. })));
        let mut orbit = ZeroOrbit::new(&rho, &default_super_window()).unwrap();
        let half = GoldenNumber::rational(1, 2);
        for _ in 0..6 {
            let (a, b) = orbit.windowed(&half);
            prop_assert!(a.len() <= 1 && b.len() <= 1);
            orbit.advance();
        }
    }
}
