use num_bigint::BigInt;
use num_traits::Zero;
use prpoint_core::exact::{rat, Rat};
use prpoint_core::padic::{sqrt_mod_p, PadicElement, PadicError};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rat {
    rat(n, d)
}

/// Independent oracle: a rational x is ≡ y modulo p^k iff v_p(x − y) ≥ k.
fn congruent(x: &Rat, y: &Rat, p: u64, k: i64) -> bool {
    let d = x - y;
    if d.is_zero() {
        return true;
    }
    prpoint_core::exact::rat_valuation(&d, p).unwrap() >= k
}

#[test]
fn rational_embedding_round_trip() {
    let x = PadicElement::from_rat(7, &q(-22, 49), 6);
    assert_eq!(x.valuation(), Some(q(-2, 1)));
    assert!(congruent(&x.to_rat(), &q(-22, 49), 7, 6));
}

#[test]
fn field_operations_match_rationals() {
    let p = 5;
    let a = q(17, 3);
    let b = q(-4, 25);
    let x = PadicElement::from_rat(p, &a, 12);
    let y = PadicElement::from_rat(p, &b, 12);
    assert!(congruent(&x.add(&y).to_rat(), &(&a + &b), p, 12));
    assert!(congruent(&x.mul(&y).to_rat(), &(&a * &b), p, 10));
    let quot = x.div(&y).unwrap();
    assert!(congruent(&quot.to_rat(), &(&a / &b), p, quot.precision_ticks()));
    // relative precision is preserved under division
    assert_eq!(quot.precision_ticks(), 2 + 12);
}

#[test]
fn multiplication_precision_rule() {
    let x = PadicElement::from_rat(3, &q(9, 1), 5); // v = 2
    let y = PadicElement::from_rat(3, &q(1, 3), 4); // v = -1
    assert_eq!(x.mul(&y).precision_ticks(), -1 + 5);
}

#[test]
fn indistinguishable_zero_division() {
    let z = PadicElement::from_rat(5, &q(125, 1), 3);
    assert!(z.is_zero());
    let one = PadicElement::one(5, 10);
    assert_eq!(one.div(&z), Err(PadicError::DivisionByIndistinguishableZero));
}

#[test]
fn pi_squares_to_minus_p() {
    let pi = PadicElement::pi(7, 20);
    let sq = pi.mul(&pi);
    let minus_p = PadicElement::from_int(7, -7, 10).to_ramified();
    assert!(sq.agrees_with(&minus_p));
    assert_eq!(pi.valuation(), Some(q(1, 2)));
}

#[test]
fn frobenius_root_identity() {
    // (1 - 1/π)(1 + 1/π) = 1 + 1/p since π² = −p
    for p in [3u64, 5, 17] {
        let pi = PadicElement::pi(p, 30);
        let one = PadicElement::one(p, 30).to_ramified();
        let inv = pi.inverse().unwrap();
        let lhs = one.sub(&inv).mul(&one.add(&inv));
        let rhs = PadicElement::from_rat(p, &q(p as i64 + 1, p as i64), 14);
        assert!(lhs.agrees_with(&rhs), "p = {p}: {lhs} vs {rhs}");
    }
}

#[test]
fn ramified_division_by_conjugate_norm() {
    let p = 5;
    let x = PadicElement::from_rat_pair(p, &q(2, 1), &q(3, 1), 24);
    let y = PadicElement::from_rat_pair(p, &q(1, 5), &q(-1, 1), 24);
    let z = x.div(&y).unwrap();
    assert!(z.mul(&y).agrees_with(&x));
}

#[test]
fn galois_conjugation_fixes_base_field() {
    let x = PadicElement::from_rat_pair(11, &q(3, 2), &q(0, 1), 16);
    assert!(x.galois_conjugate().unwrap().agrees_with(&x));
    let pi = PadicElement::pi(11, 16);
    assert!(pi.galois_conjugate().unwrap().agrees_with(&pi.neg()));
    assert!(x.coerce_to_qp().is_ok());
    assert!(pi.coerce_to_qp().is_err());
}

#[test]
fn square_roots() {
    let p = 7;
    let x = PadicElement::from_rat(p, &q(2 * 49, 1), 14);
    let (r, s) = x.sqrt().unwrap();
    assert!(r.mul(&r).agrees_with(&x));
    assert!(r.add(&s).is_zero());
    assert_eq!(r.valuation(), Some(q(1, 1)));
    assert_eq!(
        PadicElement::from_int(p, 7, 10).sqrt().unwrap_err(),
        PadicError::OddValuation("1".into())
    );
    assert_eq!(PadicElement::from_int(p, 3, 10).sqrt().unwrap_err(), PadicError::NonResidue);
}

#[test]
fn square_root_in_ramified_field() {
    let p = 5;
    // π² · 6 has a root π·√6 with √6 ∈ Z_5
    let pi = PadicElement::pi(p, 30);
    let six = PadicElement::from_int(p, 6, 20).to_ramified();
    let x = pi.mul(&pi).mul(&six);
    let (r, _) = x.sqrt().unwrap();
    assert!(r.mul(&r).agrees_with(&x));
}

#[test]
fn iwasawa_log_values() {
    let p = 5;
    // log(1 + p) by direct rational partial sums
    let n = 10;
    let l = PadicElement::from_int(p, 1 + p as i64, n).iwasawa_log().unwrap();
    let mut partial = Rat::zero();
    let z = Rat::from_integer(BigInt::from(p));
    let mut zk = Rat::from_integer(BigInt::from(1));
    for k in 1..40 {
        zk = &zk * &z;
        let term = &zk / Rat::from_integer(BigInt::from(k));
        partial = if k % 2 == 1 { partial + term } else { partial - term };
    }
    assert!(congruent(&l.to_rat(), &partial, p, n));
    // roots of unity have logarithm zero
    let w = PadicElement::teichmuller(p, 2, n);
    assert!(w.iwasawa_log().unwrap().is_zero());
    assert_eq!(PadicElement::from_int(p, 5, n).iwasawa_log(), Err(PadicError::NotAUnit));
}

#[test]
fn json_round_trip() {
    let x = PadicElement::from_rat_pair(17, &q(3, 17), &q(-5, 1), 13);
    let s = serde_json::to_string(&x).unwrap();
    let y: PadicElement = serde_json::from_str(&s).unwrap();
    assert_eq!(x, y);
    let z = PadicElement::from_rat(17, &q(2, 289), 4);
    let v: serde_json::Value = serde_json::to_value(&z).unwrap();
    assert_eq!(v["valuation"], "-2");
    assert_eq!(v["precision"], "4");
    assert_eq!(v["digits"][0], 2);
}

#[test]
fn residue_square_roots() {
    for p in [3u64, 5, 13, 17, 101] {
        for a in 0..p {
            if let Some(r) = sqrt_mod_p(a, p) {
                assert_eq!(r * r % p, a);
            } else {
                assert!((0..p).all(|r| r * r % p != a));
            }
        }
    }
}

proptest! {
    #[test]
    fn log_is_additive(a in 1i64..2000, b in 1i64..2000) {
        let p = 7u64;
        prop_assume!(a % 7 != 0 && b % 7 != 0);
        let n = 8;
        let x = PadicElement::from_int(p, a, n);
        let y = PadicElement::from_int(p, b, n);
        let lhs = x.mul(&y).iwasawa_log().unwrap();
        let rhs = x.iwasawa_log().unwrap().add(&y.iwasawa_log().unwrap());
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn ring_laws_in_ramified_field(a in -500i64..500, b in -500i64..500, c in -500i64..500, d in -500i64..500) {
        let p = 3u64;
        let x = PadicElement::from_rat_pair(p, &q(a, 1), &q(b, 1), 20);
        let y = PadicElement::from_rat_pair(p, &q(c, 1), &q(d, 1), 20);
        prop_assert!(x.mul(&y).agrees_with(&y.mul(&x)));
        let s = x.add(&y);
        prop_assert!(s.mul(&s).agrees_with(&x.mul(&x).add(&x.mul(&y).mul_int(2)).add(&y.mul(&y))));
        if !y.is_zero() {
            prop_assert!(x.div(&y).unwrap().mul(&y).agrees_with(&x));
        }
        let conj_norm = x.mul(&x.galois_conjugate().unwrap());
        prop_assert!(conj_norm.coerce_to_qp().is_ok());
    }

    #[test]
    fn serialization_round_trips(a in -10000i64..10000, b in 1i64..10000, prec in 1i64..20) {
        let x = PadicElement::from_rat(5, &q(a, b), prec);
        let s = serde_json::to_string(&x).unwrap();
        let y: PadicElement = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(x, y);
    }
}
