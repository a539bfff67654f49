use std::sync::Arc;

use proptest::prelude::*;
use relcover::field::{field_create, ArithOp, Field, FieldElement, FieldError, FieldTower};

/// Independent arithmetic for a degree-2 extension of a prime field:
/// (a0 + a1 x)(b0 + b1 x) reduced by x^2 = -(m1 x + m0).
struct QuadOracle {
    p: u32,
    m0: u32,
    m1: u32,
}

impl QuadOracle {
    fn of(f: &Field) -> Self {
        let m = f.modulus();
        assert_eq!(m.len(), 3, "monic quadratic");
        Self {
            p: f.characteristic(),
            m0: m[0],
            m1: m[1],
        }
    }

    fn split(&self, x: u32) -> (u32, u32) {
        (x % self.p, x / self.p)
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        let ((a0, a1), (b0, b1)) = (self.split(a), self.split(b));
        (a0 + b0) % self.p + self.p * ((a1 + b1) % self.p)
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let p = self.p;
        let ((a0, a1), (b0, b1)) = (self.split(a), self.split(b));
        let c0 = a0 * b0 % p;
        let c1 = (a0 * b1 + a1 * b0) % p;
        let c2 = a1 * b1 % p;
        let r0 = (c0 + p * p - c2 * self.m0 % p) % p;
        let r1 = (c1 + p * p - c2 * self.m1 % p) % p;
        r0 + p * r1
    }
}

/// Smallest monic irreducible quadratic, coefficients compared low degree first.
fn quadratic_irreducible_oracle(p: u32) -> Vec<u32> {
    for c0 in 0..p {
        for c1 in 0..p {
            if (0..p).all(|x| (x * x + c1 * x + c0) % p != 0) {
                return vec![c0, c1, 1];
            }
        }
    }
    unreachable!("irreducible quadratics exist over every prime field")
}

#[test]
fn moduli_match_brute_force() {
    for p in [2u32, 3, 5, 7, 11] {
        let f = field_create(p, 2).unwrap();
        assert_eq!(
            f.modulus(),
            quadratic_irreducible_oracle(p).as_slice(),
            "p={p}"
        );
    }
    assert_eq!(field_create(2, 2).unwrap().modulus(), &[1, 1, 1]);
    assert_eq!(field_create(3, 2).unwrap().modulus(), &[1, 0, 1]);
}

#[test]
fn gf4_omega_squared() {
    let f = field_create(2, 2).unwrap();
    // omega is index 2 (coefficients (0,1)); omega^2 = omega + 1 = index 3
    assert_eq!(f.mul(2, 2), 3);
    assert_eq!(f.conjugate(2).unwrap(), 3);
}

#[test]
fn creation_errors() {
    assert!(matches!(field_create(4, 1), Err(FieldError::NotPrime(_))));
    assert!(matches!(field_create(2, 0), Err(FieldError::ZeroDegree)));
    assert!(matches!(field_create(2, 17), Err(FieldError::TooLarge(_))));
    assert!(field_create(2, 16).is_ok());
}

#[test]
fn element_errors() {
    let a = field_create(3, 1).unwrap();
    let b = field_create(5, 1).unwrap();
    let x = FieldElement::new(&a, 1).unwrap();
    let y = FieldElement::new(&b, 1).unwrap();
    assert!(matches!(
        x.apply(ArithOp::Add, &y),
        Err(FieldError::Mismatch)
    ));
    let zero = FieldElement::new(&a, 0).unwrap();
    assert!(matches!(
        x.apply(ArithOp::Div, &zero),
        Err(FieldError::DivisionByZero)
    ));
    assert!(FieldElement::new(&a, 3).is_err());
    assert!(x.conjugate().is_err());
}

#[test]
fn special_scalar_rule() {
    for q in [2u32, 4, 8] {
        let t = FieldTower::new(q).unwrap();
        assert_eq!(t.ext.special_scalar().unwrap(), 1);
    }
    for q in [3u32, 5, 9] {
        let t = FieldTower::new(q).unwrap();
        let f = &t.ext;
        let eps = f.special_scalar().unwrap();
        let first = f
            .elements()
            .find(|&e| e != 0 && f.pow(e, q as u64) == f.neg(e))
            .unwrap();
        assert_eq!(eps, first, "q={q}");
    }
}

fn arb_pair(order: u32) -> impl Strategy<Value = (u32, u32)> {
    (0..order, 0..order)
}

proptest! {
    #[test]
    fn gf_p2_matches_oracle(p in prop::sample::select(vec![2u32, 3, 5, 7]), seed in any::<u64>()) {
        let f = field_create(p, 2).unwrap();
        let o = QuadOracle::of(&f);
        let n = f.order();
        let a = (seed % n as u64) as u32;
        let b = ((seed / n as u64) % n as u64) as u32;
        prop_assert_eq!(f.add(a, b), o.add(a, b));
        prop_assert_eq!(f.mul(a, b), o.mul(a, b));
    }

    #[test]
    fn tower_field_axioms(q in prop::sample::select(vec![2u32, 3, 4, 5, 8, 9]), (a, b) in arb_pair(81), c in 0u32..81) {
        let t = FieldTower::new(q).unwrap();
        let f: &Arc<Field> = &t.ext;
        let n = f.order();
        let (a, b, c) = (a % n, b % n, c % n);
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), 0);
        if a != 0 {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        // conjugation: involutive automorphism fixing exactly the subfield
        let ca = f.conjugate(a).unwrap();
        prop_assert_eq!(f.conjugate(ca).unwrap(), a);
        prop_assert_eq!(f.conjugate(f.mul(a, b)).unwrap(), f.mul(ca, f.conjugate(b).unwrap()));
        prop_assert_eq!(ca == a, a < q);
        prop_assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
    }

    #[test]
    fn embedding_is_homomorphism(q in prop::sample::select(vec![2u32, 3, 4, 5, 7, 9]), a in 0u32..9, b in 0u32..9) {
        let t = FieldTower::new(q).unwrap();
        let (a, b) = (a % q, b % q);
        let e = |x| t.ext.embed_subfield(x).unwrap();
        prop_assert_eq!(e(t.sub.add(a, b)), t.ext.add(e(a), e(b)));
        prop_assert_eq!(e(t.sub.mul(a, b)), t.ext.mul(e(a), e(b)));
        prop_assert_eq!(t.ext.coefficients(e(a))[1], 0);
    }
}

#[test]
fn fixed_field_sizes() {
    for q in [2u32, 3, 4, 5] {
        let t = FieldTower::new(q).unwrap();
        let fixed = t
            .ext
            .elements()
            .filter(|&x| t.ext.conjugate(x).unwrap() == x)
            .count();
        assert_eq!(fixed as u32, q);
    }
}
