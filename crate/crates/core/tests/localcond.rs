use proptest::prelude::*;
use towerforge::localcond::*;
use towerforge::Error;

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Number of `x` in `F_q^×` with `x^e = 1`, for prime `q`.
fn roots_of_unity(e: u64, q: u64) -> u64 {
    (1..q)
        .filter(|&x| {
            let mut y = 1;
            for _ in 0..e {
                y = y * x % q;
            }
            y == 1
        })
        .count() as u64
}

/// Largest divisor of `n` whose prime factors all divide `e`.
fn n_prime_oracle(e: u64, n: u64) -> u64 {
    (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .filter(|&d| (2..=d).filter(|&l| d % l == 0 && is_prime(l)).all(|l| e.is_multiple_of(l)))
        .max()
        .unwrap()
}

#[test]
fn property_p_matches_roots_of_unity() {
    for q in (2..60u64).filter(|&q| is_prime(q)) {
        for e in 1..20u64 {
            if e % q == 0 {
                continue;
            }
            let d = LocalExtensionDatum::new(e, q, true, 1).unwrap();
            // F_q^× contains all e-th roots of unity exactly when e | q − 1.
            assert_eq!(property_p(&d).unwrap(), roots_of_unity(e, q) == e, "e={e} q={q}");
        }
    }
}

#[test]
fn solvability_matches_divisor_scan() {
    for q in (2..40u64).filter(|&q| is_prime(q)) {
        for e in 2..12u64 {
            if e % q == 0 {
                continue;
            }
            for n in 1..30u64 {
                assert_eq!(n_prime(e, n), n_prime_oracle(e, n));
                let d = LocalExtensionDatum::new(e, q, true, n).unwrap();
                let expect = roots_of_unity(n_prime_oracle(e, n) * e, q) == n_prime_oracle(e, n) * e;
                assert_eq!(tame_solvability_criterion(&d).unwrap(), expect, "e={e} q={q} n={n}");
            }
        }
    }
}

#[test]
fn unramified_and_wild_data() {
    for q in [2u64, 4, 8, 9, 25, 27] {
        let d = LocalExtensionDatum::new(1, q, true, 6).unwrap();
        assert!(property_p(&d).unwrap());
        assert!(tame_solvability_criterion(&d).unwrap());
    }
    let wild = LocalExtensionDatum::new(3, 9, false, 1).unwrap();
    assert!(!property_p(&wild).unwrap());
    assert!(matches!(tame_solvability_criterion(&wild), Err(Error::NotApplicable(_))));
    assert!(LocalExtensionDatum::new(3, 9, true, 1).is_err());
    assert!(LocalExtensionDatum::new(2, 12, true, 1).is_err());
    assert!(LocalExtensionDatum::new(1, 7, false, 1).is_err());
}

fn prime_power(q: u64) -> Option<u64> {
    let p = (2..=q).find(|l| q.is_multiple_of(*l))?;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
    }
    (r == 1).then_some(p)
}

fn valuation(mut n: u64, l: u64) -> u32 {
    let mut v = 0;
    while n.is_multiple_of(l) {
        n /= l;
        v += 1;
    }
    v
}

#[test]
fn base_change_scan() {
    let qs: Vec<(u64, u64)> = (2..=10_000u64).filter_map(|q| prime_power(q).map(|p| (q, p))).collect();
    let mut checked = 0u64;
    for e in 1..=100u64 {
        for &(q, p) in &qs {
            if e % p == 0 || (q - 1) % e != 0 {
                continue;
            }
            let d = LocalExtensionDatum::new(e, q, true, 1).unwrap();
            assert!(property_p(&d).unwrap());
            for growth in [1u64, 2, 3, 5, 7] {
                if q.checked_pow(growth as u32).is_none() {
                    continue;
                }
                let up = property_p_base_change(&d, growth).unwrap();
                assert_eq!(up.e, e);
                assert!(property_p(&up).unwrap(), "e={e} q={q} growth={growth}");
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn solvability_with_n_equal_e_is_square_divisibility() {
    for q in (3..2_000u64).filter(|&q| prime_power(q).is_some()) {
        let p = prime_power(q).unwrap();
        for e in 2..=64u64 {
            let Some(l) = prime_power(e) else { continue };
            if l == p {
                continue;
            }
            let d = LocalExtensionDatum::new(e, q, true, e).unwrap();
            let by_valuation = valuation(q - 1, l) >= 2 * valuation(e, l);
            assert_eq!(tame_solvability_criterion(&d).unwrap(), by_valuation, "e={e} q={q}");
        }
    }
}

proptest! {
    #[test]
    fn base_change_preserves_property_p(e in 1u64..12, q in prop::sample::select(vec![3u64, 5, 7, 9, 11, 13, 25, 49]), growth in prop::sample::select(vec![1u64, 2, 3, 5])) {
        let p = (2..=q).find(|l| q % l == 0).unwrap();
        prop_assume!(e % p != 0);
        let d = LocalExtensionDatum::new(e, q, true, 1).unwrap();
        prop_assume!(property_p(&d).unwrap());
        let up = property_p_base_change(&d, growth).unwrap();
        prop_assert_eq!(up.q, q.pow(growth as u32));
        prop_assert!(property_p(&up).unwrap());
    }

    #[test]
    fn solvability_implies_property_p(e in 1u64..12, q in prop::sample::select(vec![5u64, 7, 13, 25, 37, 49, 61]), n in 1u64..50) {
        let p = (2..=q).find(|l| q % l == 0).unwrap();
        prop_assume!(e % p != 0);
        let d = LocalExtensionDatum::new(e, q, true, n).unwrap();
        if tame_solvability_criterion(&d).unwrap() {
            prop_assert!(property_p(&d).unwrap());
        }
        let plain = LocalExtensionDatum::new(e, q, true, 1).unwrap();
        prop_assert_eq!(tame_solvability_criterion(&plain).unwrap(), property_p(&plain).unwrap());
    }
}
