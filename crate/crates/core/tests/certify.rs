use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use commonness::certify;
use commonness::exactpoly::{Certificate, Witness};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn box_check_fails_just_above_c1() {
    let (c1, certs) = certify::derive_c1().unwrap();
    assert!(certs.iter().all(|c| c.verified));
    let (ok, cert) = certify::box_check(&(&c1 + rat(1, 10))).unwrap();
    assert!(!ok);
    assert!(cert.verified);
    match &cert.witness {
        Witness::Counterexample(w) => assert!(w.value.is_negative()),
        other => panic!("expected a counterexample, got {other:?}"),
    }
}

#[test]
fn box_check_holds_below_c1() {
    let (c1, _) = certify::derive_c1().unwrap();
    let (ok, cert) = certify::box_check(&(c1 / BigRational::from_integer(2.into()))).unwrap();
    assert!(ok && cert.verified);
}

#[test]
fn degenerate_c2_gives_trivial_box() {
    let local = certify::derive_c2_c3_c4(Some(BigRational::zero())).unwrap();
    assert!(local.c2.is_zero());
    assert!(local.certificates.iter().all(|c| c.verified));
    assert!(!local.c3.is_negative());
}

#[test]
fn c0_is_positive_and_certified() {
    let (c0, cert) = certify::derive_c0().unwrap();
    assert!(c0.is_positive());
    assert!(cert.verified && cert.check().is_ok());
}

#[test]
fn lemma_certificates_survive_serialization() {
    for cert in certify::verify_lemma_suite().unwrap() {
        let json = serde_json::to_string(&cert).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert!(back.check().is_ok(), "{}", back.claim);
    }
}

#[test]
fn tampered_certificate_is_rejected() {
    let mut cert = certify::factorization_identity().unwrap();
    if let Witness::Identity(w) = &mut cert.witness {
        let n = w.rhs[0].nvars();
        w.rhs.push(commonness::exactpoly::MultiPoly::constant(n, rat(2, 1)));
    }
    assert!(cert.check().is_err());
}

#[test]
fn convexity_certificates_for_small_and_large_exponents() {
    for k in [2, 9, 33, 34, 1001] {
        let cert = certify::convexity_certificate(k).unwrap();
        assert!(cert.verified, "k = {k}");
    }
}

#[test]
fn alon_defect_at_l0_is_nonnegative_on_samples() {
    use commonness::counting::{self, Property};
    use commonness::{GroupFunction, LinearSystem};
    use rand::{Rng, SeedableRng};

    let ledger = certify::derive_constants().unwrap();
    let phi = LinearSystem::preset("phi", 3).unwrap();
    let prop = Property::Alon { l: ledger.l0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    for i in 0..1000 {
        let n = 1 + i % 2;
        let f = GroupFunction::from_fn(3, n, |_| rng.gen()).unwrap();
        let r = counting::defect(&phi, &f, prop).unwrap();
        assert!(r.value >= -1e-9, "defect {} at mean {}", r.value, f.mean());
        let normalized = r.normalized.unwrap();
        assert!(normalized.is_nan() || normalized >= -1e-9, "normalized {normalized}");
    }
}
