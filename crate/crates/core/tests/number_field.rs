use std::path::PathBuf;

use eigvar::intmat;
use eigvar::number_field::*;
use eigvar::padic::PadicInt;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> NumberFieldData {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    load_field(path).unwrap()
}

#[test]
fn all_fixtures_load() {
    for (name, d, h) in [("q", 1, 1), ("q_i", 2, 1), ("q_sqrt2", 2, 1), ("q_sqrt_m23", 2, 3), ("cubic", 3, 1)] {
        let k = fixture(name);
        assert_eq!(k.degree(), d, "{name}");
        assert_eq!(k.class_number, h, "{name}");
    }
}

#[test]
fn smallest_split_primes() {
    let first = |name: &str| split_prime_search(&fixture(name), 500)[0];
    assert_eq!(first("q"), 3);
    assert_eq!(first("q_i"), 5);
    assert_eq!(first("q_sqrt2"), 7);
    assert_eq!(first("q_sqrt_m23"), 3);
    let cubic = first("cubic");
    // brute-force: x^3 - x - 1 has three distinct roots mod p
    let roots = (0..cubic as i64).filter(|&x| (x * x * x - x - 1).rem_euclid(cubic as i64) == 0).count();
    assert_eq!(roots, 3);
    assert_eq!(cubic, 59);
}

#[test]
fn ray_class_order_of_q_sqrt_m23_matches_form_count() {
    // reduced forms of discriminant -23: (1,1,6), (2,1,3), (2,-1,3)
    let mut forms = 0;
    for a in 1..=3i64 {
        for b in -a + 1..=a {
            for c in a..=12i64 {
                if b * b - 4 * a * c == -23 && !(c == a && b < 0) {
                    forms += 1;
                }
            }
        }
    }
    assert_eq!(forms, 3);
    let k = fixture("q_sqrt_m23");
    assert_eq!(ray_class_order(&k, &TameLevel::trivial()).unwrap(), forms);
}

#[test]
fn gamma_generators_map_to_one() {
    for name in ["q", "q_i", "q_sqrt2", "q_sqrt_m23", "cubic"] {
        let k = fixture(name);
        let signs: Vec<usize> = (0..k.r1).collect();
        for m in [1u64, 3, 4, 5, 8] {
            let level = TameLevel::new(m, signs.clone());
            let g = gamma_u(&k, &level).unwrap();
            for row in &g.generators {
                let u = k.unit_from_exponents(row).unwrap();
                let mb = BigInt::from(m);
                let one = k.one();
                for (c, e) in u.coords.iter().zip(&one.coords) {
                    assert_eq!(num_integer::Integer::mod_floor(&(c - e), &mb), BigInt::from(0), "{name} m={m}");
                }
                for &s in &level.signs {
                    assert!(k.real_embedding(&u, s) > 0.0, "{name} m={m} place {s}");
                }
            }
        }
    }
}

#[test]
fn ray_class_order_invariant_under_unit_basis_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["q_sqrt2", "cubic"] {
        let k = fixture(name);
        let eps = k.fundamental_units[0].clone();
        let signs: Vec<usize> = (0..k.r1).collect();
        for _ in 0..5 {
            // ε ↦ ζ^a ε^{±1} generates the same unit group
            let a = rng.gen_range(0..2);
            let inv = rng.gen_bool(0.5);
            let mut new_eps = if inv { k.inverse_unit(&eps).unwrap() } else { eps.clone() };
            if a == 1 {
                new_eps = k.mul(&new_eps, &k.torsion_generator);
            }
            let mut k2 = k.clone();
            k2.fundamental_units = vec![new_eps];
            for m in [1u64, 3, 5, 7] {
                let level = TameLevel::new(m, signs.clone());
                assert_eq!(ray_class_order(&k, &level).unwrap(), ray_class_order(&k2, &level).unwrap());
            }
        }
    }
}

#[test]
fn unit_embeddings_have_norm_pm_one() {
    for (name, p) in [("q_sqrt2", 7u64), ("cubic", 59), ("q_i", 5)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 40).unwrap();
        for u in k.unit_generators() {
            let prod = embed(&u, &sp).into_iter().fold(PadicInt::one(&sp.ctx), |a, b| a * b);
            let minus = PadicInt::from_i64(&sp.ctx, -1);
            assert!(prod.is_one() || prod == minus, "{name}");
        }
    }
}

#[test]
fn unit_inverse_is_inverse() {
    let k = fixture("cubic");
    let u = k.fundamental_units[0].clone();
    let inv = k.inverse_unit(&u).unwrap();
    assert_eq!(k.mul(&u, &inv), k.one());
    assert_eq!(intmat::determinant(&k.multiplication_matrix(&inv)).magnitude().to_string(), "1");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn embed_is_multiplicative(a in proptest::collection::vec(-50i64..50, 3), b in proptest::collection::vec(-50i64..50, 3)) {
        let k = fixture("cubic");
        let sp = hensel_embeddings(&k, 59, 30).unwrap();
        let x = FieldElement::from_i64(&a);
        let y = FieldElement::from_i64(&b);
        let lhs = embed(&k.mul(&x, &y), &sp);
        let rhs: Vec<PadicInt> = embed(&x, &sp).iter().zip(embed(&y, &sp)).map(|(u, v)| u * &v).collect();
        prop_assert_eq!(lhs, rhs);
        let prod = embed(&x, &sp).into_iter().fold(PadicInt::one(&sp.ctx), |a, b| a * b);
        prop_assert_eq!(prod, PadicInt::from_bigint(&sp.ctx, &k.norm(&x)));
    }
}
