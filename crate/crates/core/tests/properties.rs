use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use commonness::counting::{self, ExactFunction};
use commonness::exactpoly::{self, ExactPoly, QSqrt2, SignOutcome};
use commonness::{GroupFunction, LinearSystem};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn prime() -> impl Strategy<Value = u32> {
    prop_oneof![Just(3u32), Just(5), Just(7)]
}

/// A small system with at most two rows and its field size.
fn system() -> impl Strategy<Value = LinearSystem> {
    (prop_oneof![Just(3u64), Just(5)], 1usize..=2, 3usize..=6)
        .prop_flat_map(|(p, rows, t)| {
            proptest::collection::vec(proptest::collection::vec(0..p as i64, t), rows)
                .prop_map(move |m| LinearSystem::new(p, &m))
        })
        .prop_filter_map("invalid system", Result::ok)
}

fn values(p: u32, n: u32) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..=1.0f64, (p as usize).pow(n))
}

fn qsqrt2() -> impl Strategy<Value = QSqrt2> {
    (-40i64..=40, 1i64..=12, -40i64..=40, 1i64..=12)
        .prop_map(|(a, b, c, d)| QSqrt2::new(rat(a, b), rat(c, d)))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn kernel_points_solve_the_system(s in system(), seed in any::<u64>()) {
        let p = s.p();
        let y: Vec<u32> = (0..s.dim()).map(|i| ((seed >> (3 * i)) % p as u64) as u32).collect();
        let x = s.kernel_point(&y);
        prop_assert_eq!(x.len(), s.vars());
        prop_assert!(s.is_solution(&x));
    }

    #[test]
    fn parseval(p in prime(), n in 1u32..=2, seed in any::<u64>()) {
        let mut st = seed;
        let f = GroupFunction::from_fn(p, n, |_| {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (st >> 11) as f64 / (1u64 << 53) as f64
        }).unwrap();
        let energy = f.dft().energy();
        prop_assert!((energy - f.mean_square()).abs() < 1e-12);
    }

    #[test]
    fn dft_is_linear_and_conjugate_symmetric(
        p in prime(),
        (a, b) in (-2.0..2.0f64, -2.0..2.0f64),
        seed in any::<u64>(),
    ) {
        let mut st = seed;
        let mut next = move || {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1);
            (st >> 11) as f64 / (1u64 << 53) as f64
        };
        let f = GroupFunction::from_fn(p, 2, |_| next()).unwrap();
        let g = GroupFunction::from_fn(p, 2, |_| next()).unwrap();
        let (ff, gg) = (f.dft(), g.dft());
        let combo = f.combine(a, &g, b).unwrap().dft();
        for h in 0..f.len() {
            let want = ff.get(h) * a + gg.get(h) * b;
            prop_assert!((combo.get(h) - want).norm() < 1e-12);
            let neg = f.neg_index(h);
            prop_assert!((ff.get(neg) - ff.get(h).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_matches_brute(s in system(), seed in any::<u64>()) {
        let p = s.p();
        prop_assume!((p as f64).powi(s.dim() as i32) <= 5e3);
        let mut st = seed;
        let vals: Vec<BigRational> = (0..p as usize)
            .map(|_| {
                st = st.wrapping_mul(6364136223846793005).wrapping_add(1);
                rat(((st >> 33) % 9) as i64, 8)
            })
            .collect();
        let f = ExactFunction::new(p, 1, vals).unwrap();
        let exact = counting::t_brute(&s, &f).unwrap().to_f64().unwrap();
        let fourier = counting::t_fourier(&s, &f.to_f64()).unwrap();
        prop_assert!((exact - fourier).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn free_variables_multiply_by_the_mean(vals in values(3, 1), l in 0usize..4) {
        let s = LinearSystem::preset("ap3", 3).unwrap();
        let f = GroupFunction::new(3, 1, vals).unwrap();
        let base = counting::t_fourier(&s, &f).unwrap();
        let wide = counting::t_fourier(&s.add_free_variables(l), &f).unwrap();
        prop_assert!((wide - base * f.mean().powi(l as i32)).abs() < 1e-12);
    }

    #[test]
    fn phi_factors_into_its_blocks(vals in values(3, 2)) {
        let f = GroupFunction::new(3, 2, vals).unwrap();
        let phi = LinearSystem::preset("phi", 3).unwrap();
        let a4 = LinearSystem::preset("a4", 3).unwrap();
        let a5 = LinearSystem::preset("a5", 3).unwrap();
        let whole = counting::t_fourier(&phi, &f).unwrap();
        let blocks = counting::t_fourier(&a4, &f).unwrap() * counting::t_fourier(&a5, &f).unwrap();
        prop_assert!((whole - blocks).abs() < 1e-14);
        prop_assert!((counting::t_product(&phi, &f).unwrap() - whole).abs() < 1e-14);
    }

    #[test]
    fn spectral_sup_bounded_by_variance(vals in values(3, 2)) {
        let f = GroupFunction::new(3, 2, vals).unwrap();
        let a = f.mean();
        let sup = f.centered().spectral_sup().unwrap();
        prop_assert!(sup * sup <= a * (1.0 - a) / 2.0 + 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences(vals in values(3, 1)) {
        let s = LinearSystem::preset("phi", 3).unwrap();
        let f = GroupFunction::new(3, 1, vals).unwrap();
        let grad = counting::t_gradient(&s, &f).unwrap();
        let h = 1e-6;
        for i in 0..f.len() {
            let mut up = f.values().to_vec();
            let mut down = up.clone();
            up[i] += h;
            down[i] -= h;
            let tu = counting::t_fourier(&s, &GroupFunction::new(3, 1, up).unwrap()).unwrap();
            let td = counting::t_fourier(&s, &GroupFunction::new(3, 1, down).unwrap()).unwrap();
            // the gradient is taken against the uniform measure
            let fd = f.len() as f64 * (tu - td) / (2.0 * h);
            prop_assert!((fd - grad.values()[i]).abs() < 1e-7, "{} vs {}", fd, grad.values()[i]);
        }
    }

    #[test]
    fn qsqrt2_field_axioms(x in qsqrt2(), y in qsqrt2(), z in qsqrt2()) {
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&x - &x, QSqrt2::zero());
        if let Some(inv) = x.checked_inv() {
            prop_assert_eq!(&x * &inv, QSqrt2::one());
        } else {
            prop_assert!(x.is_zero());
        }
    }

    #[test]
    fn an_sign_agrees_with_floats(x in qsqrt2()) {
        let v = x.to_f64();
        let s = exactpoly::an_sign(&x);
        if v.abs() > 1e-9 {
            prop_assert_eq!(s, if v > 0.0 { 1 } else { -1 });
        }
        prop_assert_eq!(s == 0, x.is_zero());
    }

    #[test]
    fn sturm_counts_match_known_roots(
        roots in proptest::collection::btree_set((-30i64..=30, 0i64..=2), 1..5),
        (lo, hi) in (-40i64..=0, 1i64..=40),
    ) {
        // roots r = a/8 + b sqrt2/8
        let mut p = ExactPoly::one();
        let mut inside = 0;
        for &(a, b) in &roots {
            let r = QSqrt2::new(rat(a, 8), rat(b, 8));
            let v = r.to_f64();
            if v >= lo as f64 / 8.0 && v <= hi as f64 / 8.0 {
                inside += 1;
            }
            p = &p * &(&ExactPoly::x() - &ExactPoly::constant(r));
        }
        let (lo, hi) = (rat(lo, 8), rat(hi, 8));
        let (outcome, cert) = exactpoly::sturm_sign_on_interval(&p, &lo, &hi).unwrap();
        prop_assert!(cert.verified);
        match outcome {
            SignOutcome::HasRoot => prop_assert!(inside > 0),
            _ => prop_assert_eq!(inside, 0),
        }
        let chain = exactpoly::SturmChain::new(&p).unwrap();
        prop_assert_eq!(chain.count_closed(&lo, &hi), inside);
    }

    #[test]
    fn certificates_replay(a in 1i64..20, b in 1i64..20) {
        // (x - a/b)^2 + 1/b is positive everywhere
        let r = rat(a, b);
        let p = &ExactPoly::root_power(&r, 2) + &ExactPoly::constant(QSqrt2::rational(rat(1, b)));
        let (outcome, cert) = exactpoly::sturm_sign_on_interval(&p, &rat(-5, 1), &rat(25, 1)).unwrap();
        prop_assert_eq!(outcome, SignOutcome::StrictlyPositive);
        prop_assert!(cert.check().is_ok());
        let json = serde_json::to_string(&cert).unwrap();
        let back: exactpoly::Certificate = serde_json::from_str(&json).unwrap();
        prop_assert!(back.check().is_ok());
    }
}

#[test]
fn coset_indicator_of_phi_has_no_solutions() {
    let phi = LinearSystem::preset("phi", 3).unwrap();
    let f = GroupFunction::coset_indicator(3, 2, 1, 2).unwrap();
    assert!(counting::t_fourier(&phi, &f).unwrap().abs() < 1e-15);
    let exact = ExactFunction::from_decimal(&f).unwrap();
    assert!(counting::t_brute(&phi, &exact).unwrap().is_zero());
}

#[test]
fn spectrum_of_constant_is_a_point_mass() {
    let f = GroupFunction::constant(5, 2, 0.3).unwrap();
    let s = f.dft();
    assert!((s.get(0) - Complex64::new(0.3, 0.0)).norm() < 1e-15);
    assert!((1..f.len()).all(|h| s.get(h).norm() < 1e-15));
}
