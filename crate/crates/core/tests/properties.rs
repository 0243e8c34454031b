mod common;

use common::*;
use eigvar::demos::{finite_quotient_order, CyclotomicInt, GroupRingElement, PGroup};
use eigvar::eigenvariety::{eig_report, eig_report_with_gamma, in_weight_space, leopoldt_defect, report_lattice, unit_log_lattice};
use eigvar::intmat;
use eigvar::number_field::{gamma_u, hensel_embeddings, GammaU, TameLevel};
use eigvar::padic::{PadicContext, PadicInt};
use eigvar::weight_space::*;
use eigvar::zp_linalg::{default_slack, smith_structure, ZpMatrix};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: &PadicInt, b: &PadicInt, digits: u32) -> bool {
    let d = a - b;
    d.is_zero() || d.valuation() >= digits
}

#[test]
fn eval_weight_is_a_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &p in &[3u64, 5, 7] {
        let ctx = PadicContext::new(p, 30).unwrap();
        let s = ctx.series_loss_bound();
        for _ in 0..20 {
            let n = random_exponents(&mut rng, 2, 30);
            let (k, _) = random_locally_algebraic(&mut rng, &ctx, &n, 2);
            let k = k.mul(&random_analytic(&mut rng, &ctx, 2));
            let x: Vec<PadicInt> = (0..2).map(|_| random_unit(&mut rng, &ctx)).collect();
            let y: Vec<PadicInt> = (0..2).map(|_| random_unit(&mut rng, &ctx)).collect();
            let xy: Vec<PadicInt> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
            let lhs = eval_weight(&k, &xy).unwrap();
            let rhs = eval_weight(&k, &x).unwrap().mul(&eval_weight(&k, &y).unwrap());
            assert_eq!(lhs.zeta_exp, rhs.zeta_exp);
            assert!(close(&lhs.principal, &rhs.principal, 30 - s));
        }
    }
}

#[test]
fn weight_group_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ctx = PadicContext::new(5, 30).unwrap();
    for _ in 0..30 {
        let k1 = random_analytic(&mut rng, &ctx, 3).mul(&random_finite(&mut rng, &ctx, 3, 2));
        let k2 = random_analytic(&mut rng, &ctx, 3).mul(&random_finite(&mut rng, &ctx, 3, 2));
        let x: Vec<PadicInt> = (0..3).map(|_| random_unit(&mut rng, &ctx)).collect();
        let lhs = eval_weight(&k1.mul(&k2), &x).unwrap();
        let rhs = eval_weight(&k1, &x).unwrap().mul(&eval_weight(&k2, &x).unwrap());
        assert_eq!(lhs.zeta_exp, rhs.zeta_exp);
        assert!(close(&lhs.principal, &rhs.principal, 30 - ctx.series_loss_bound()));
    }
}

#[test]
fn algebraic_weight_against_direct_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ctx = PadicContext::new(7, 25).unwrap();
    for _ in 0..30 {
        let n = random_exponents(&mut rng, 2, 12);
        let x: Vec<PadicInt> = (0..2).map(|_| random_unit(&mut rng, &ctx)).collect();
        let direct = x.iter().zip(&n).fold(PadicInt::one(&ctx), |acc, (xi, ni)| acc * xi.pow_signed(ni).unwrap());
        let v = eval_weight(&algebraic_weight(&ctx, &n), &x).unwrap();
        assert_eq!(v.to_padic().unwrap(), direct);
    }
    // n = (1, 0) at embed(θ) is σ_1(θ)
    let k = fixture("q_sqrt2");
    let sp = hensel_embeddings(&k, 7, 25).unwrap();
    let x = eigvar::number_field::embed(&k.theta(), &sp);
    let v = eval_weight(&algebraic_weight_i64(&sp.ctx, &[1, 0]), &x).unwrap();
    assert_eq!(v, CharValue::from_unit(&sp.roots[0]).unwrap());
}

#[test]
fn classify_inverts_algebraic_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ctx = PadicContext::new(5, 40).unwrap();
    let b = default_bound(&ctx);
    for _ in 0..50 {
        let n = random_exponents(&mut rng, 3, 100_000);
        let cl = classify(&algebraic_weight(&ctx, &n), &b, default_slack(40)).unwrap();
        assert_eq!(cl.kind, WeightKind::Algebraic);
        assert_eq!(cl.n.unwrap(), n);
    }
}

#[test]
fn random_analytic_weights_are_not_algebraic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ctx = PadicContext::new(5, 40).unwrap();
    let b = default_bound(&ctx);
    let hits = (0..100)
        .filter(|_| classify(&random_analytic(&mut rng, &ctx, 2), &b, 10).unwrap().n.is_some())
        .count();
    assert_eq!(hits, 0);
}

#[test]
fn conductor_by_restriction_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ctx = PadicContext::new(3, 20).unwrap();
    for _ in 0..40 {
        let eps = random_finite(&mut rng, &ctx, 2, 3);
        assert_eq!(conductor_of_finite(&eps), conductor_by_restriction(&eps));
    }
}

#[test]
fn norm_one_logs_have_full_rank() {
    let ctx = PadicContext::new(5, 30).unwrap();
    for d in 2..=4 {
        let basis = norm_one_basis(&ctx, d);
        let rows: Vec<Vec<PadicInt>> = basis.vectors.iter().map(|u| u.iter().map(|x| x.log().unwrap()).collect()).collect();
        let m = ZpMatrix::from_rows(&ctx, d, rows).unwrap();
        assert_eq!(smith_structure(&m, 5).rank(), d - 1);
    }
}

#[test]
fn even_norm_powers_are_trivial_on_units() {
    for (name, p) in [("q_sqrt2", 7u64), ("cubic", 59), ("q_i", 5)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 30).unwrap();
        let d = k.degree();
        let units: Vec<Vec<PadicInt>> = k.unit_generators().iter().map(|u| eigvar::number_field::embed(u, &sp)).collect();
        assert!(is_trivial_on(&algebraic_weight_i64(&sp.ctx, &vec![2; d]), &units, 5).unwrap());
        assert!(is_trivial_on(&Weight::trivial(&sp.ctx, d), &units, 5).unwrap());
    }
    let k = fixture("q_sqrt2");
    let sp = hensel_embeddings(&k, 7, 30).unwrap();
    let eps = eigvar::number_field::embed(&k.fundamental_units[0], &sp);
    let v = eval_weight(&algebraic_weight_i64(&sp.ctx, &[1, 1]), &eps).unwrap();
    assert_eq!(v.zeta_exp, num_rational::BigRational::new(1.into(), 2.into()));
}

/// Characters of `Q(U)` trivial on `(1 + p^r)^d`, counted by brute force, against the Smith
/// form count.
#[test]
fn finite_quotient_counting() {
    for (name, p, m, r) in [("q_i", 5u64, 1u64, 2u32), ("q_sqrt2", 7, 1, 1), ("q", 5, 1, 3), ("q_i", 5, 3, 1), ("q_sqrt2", 7, 3, 2)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 20).unwrap();
        let level = TameLevel::new(m, vec![]);
        let gamma = gamma_u(&k, &level).unwrap();
        let lattice = unit_log_lattice(&k, &sp, &gamma.generators).unwrap();
        let ctx = &sp.ctx;
        let d = k.degree();
        let pk = p.pow(r - 1);
        let per_coord = (p - 1) * pk;
        let mut count = 0u64;
        for code in 0..per_coord.pow(d as u32) {
            let mut c = code;
            let mut a = Vec::new();
            let mut phi = Vec::new();
            for _ in 0..d {
                let x = c % per_coord;
                c /= per_coord;
                a.push(x % (p - 1));
                let num = BigInt::from(x / (p - 1));
                phi.push(CharValue::new(num_rational::BigRational::new(num, BigInt::from(pk)), PadicInt::one(ctx)).unwrap());
            }
            let chi = Weight::new(ctx, a, phi).unwrap();
            if in_weight_space(&chi, &lattice, 5).unwrap() {
                count += 1;
            }
        }
        let order = finite_quotient_order(&k, &sp, &level, r).unwrap();
        assert_eq!(BigInt::from(count), order, "{name} m={m} r={r}");
    }
}

#[test]
fn finite_quotient_orders_grow_and_complement_the_image() {
    for (name, p) in [("q_i", 5u64), ("q_sqrt2", 7), ("cubic", 59)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 20).unwrap();
        let level = TameLevel::trivial();
        let d = k.degree() as u32;
        let mut prev = BigInt::zero();
        for r in 1..=3u32 {
            let order = finite_quotient_order(&k, &sp, &level, r).unwrap();
            assert!(order >= prev);
            prev = order.clone();
            // image of the units in (Z_p^×/(1+p^r))^d, by brute-force closure
            let gamma = gamma_u(&k, &level).unwrap();
            let lattice = unit_log_lattice(&k, &sp, &gamma.generators).unwrap();
            let modulus = BigInt::from(p).pow(r);
            let reduce = |v: &[PadicInt]| -> Vec<BigInt> { v.iter().map(|x| BigInt::from(x.residue().clone()) % &modulus).collect() };
            let mut seen = std::collections::HashSet::new();
            let one: Vec<BigInt> = vec![BigInt::one(); d as usize];
            seen.insert(one.clone());
            let mut frontier = vec![one];
            let gens: Vec<Vec<BigInt>> = lattice.images.iter().map(|g| reduce(g)).collect();
            while let Some(x) = frontier.pop() {
                for g in &gens {
                    let y: Vec<BigInt> = x.iter().zip(g).map(|(a, b)| a * b % &modulus).collect();
                    if seen.insert(y.clone()) {
                        frontier.push(y);
                    }
                }
            }
            let total = BigInt::from((p - 1) * p.pow(r - 1)).pow(d);
            assert_eq!(order * BigInt::from(seen.len()), total, "{name} r={r}");
        }
    }
}

#[test]
fn dimension_formula_across_levels() {
    for (name, p) in [("q", 5u64), ("q_i", 5), ("q_sqrt2", 7), ("cubic", 59), ("q_sqrt_m23", 3)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 40).unwrap();
        let all_signs: Vec<usize> = (0..k.r1).collect();
        for (m, signs) in [(1u64, vec![]), (4, vec![]), (2, all_signs.clone()), (8, all_signs)] {
            let rep = eig_report(&k, &sp, &TameLevel::new(m, signs), 10).unwrap();
            assert_eq!(rep.quotient.free_rank, 1 + k.r2 + rep.leopoldt.defect, "{name} m={m}");
            assert_eq!(rep.leopoldt.defect, 0);
        }
    }
}

#[test]
fn leopoldt_defect_is_zero_without_free_units() {
    for (name, p) in [("q", 3u64), ("q_i", 13), ("q_sqrt_m23", 13)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 12).unwrap();
        let l = leopoldt_defect(&k, &sp, 3).unwrap();
        assert_eq!((l.unit_rank, l.defect), (0, 0));
    }
}

#[test]
fn report_invariant_under_generator_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, p, m) in [("q_sqrt2", 7u64, 3u64), ("cubic", 59, 4), ("q_i", 5, 3)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 40).unwrap();
        let level = TameLevel::new(m, vec![]);
        let rep = eig_report(&k, &sp, &level, 10).unwrap();
        let gens = &rep.gamma_u.generators;
        for _ in 0..5 {
            // random unimodular row operations, plus a redundant product row
            let mut rows = gens.clone();
            for _ in 0..4 {
                if rows.len() < 2 {
                    break;
                }
                let i = rng.gen_range(0..rows.len());
                let j = (i + 1 + rng.gen_range(0..rows.len() - 1)) % rows.len();
                let c = BigInt::from(rng.gen_range(-3i64..=3));
                let src = rows[j].clone();
                for (x, y) in rows[i].iter_mut().zip(&src) {
                    *x += &c * y;
                }
            }
            let extra: Vec<BigInt> = rows[0].iter().zip(rows.last().unwrap()).map(|(a, b)| a + b).collect();
            rows.push(extra);
            let g2 = GammaU { generators: rows, index: rep.gamma_u.index };
            let rep2 = eig_report_with_gamma(&k, &sp, &level, &g2, 10).unwrap();
            assert_eq!(rep2.quotient.free_rank, rep.quotient.free_rank);
            assert_eq!(rep2.quotient.torsion_orders, rep.quotient.torsion_orders);
            assert_eq!(rep2.dimension, rep.dimension);
            assert_eq!(rep2.ray_class_order, rep.ray_class_order);
            assert_eq!(rep2.finite_quotient_orders, rep.finite_quotient_orders);
        }
        assert_eq!(intmat::hermite_rows(gens), *gens);
    }
}

#[test]
fn accepted_locally_algebraic_weights_lie_on_the_rigid_locus() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, p) in [("q_sqrt2", 7u64), ("cubic", 59)] {
        let k = fixture(name);
        let sp = hensel_embeddings(&k, p, 40).unwrap();
        let rep = eig_report(&k, &sp, &TameLevel::trivial(), 10).unwrap();
        let lattice = report_lattice(&k, &sp, &rep).unwrap();
        let basis = norm_one_basis(&sp.ctx, k.degree());
        let mut accepted = 0;
        for _ in 0..100 {
            let n = if rng.gen_bool(0.5) {
                vec![BigInt::from(rng.gen_range(-50i64..=50)); k.degree()]
            } else {
                random_exponents(&mut rng, k.degree(), 50)
            };
            let (kappa, _) = random_locally_algebraic(&mut rng, &sp.ctx, &n, 2);
            // even parallel weights are always in W(U); mix them in so the cubic sees hits
            let kappa = if rng.gen_bool(0.3) {
                algebraic_weight(&sp.ctx, &vec![BigInt::from(2 * rng.gen_range(-20i64..=20)); k.degree()])
            } else {
                kappa
            };
            if in_weight_space(&kappa, &lattice, 10).unwrap() {
                accepted += 1;
                for v in rigid_locus_values(&kappa, &basis).unwrap() {
                    assert!(v.is_zero() || v.valuation() >= 30, "{name}");
                }
            }
        }
        assert!(accepted > 0, "{name}");
    }
}

#[test]
fn character_orthogonality() {
    for g in [PGroup { p: 3, exponents: vec![1, 2] }, PGroup { p: 5, exponents: vec![1] }, PGroup { p: 3, exponents: vec![] }] {
        let order = g.order();
        let all_ones = GroupRingElement { group: g.clone(), coeffs: vec![BigInt::one(); order as usize] };
        for c in 0..order {
            let chi = g.element(c);
            let sum = all_ones.character_value(&chi);
            let expected = if chi.iter().all(|&x| x == 0) {
                CyclotomicInt::from_int(g.p, g.level(), BigInt::from(order))
            } else {
                CyclotomicInt::from_int(g.p, g.level(), BigInt::zero())
            };
            assert_eq!(sum, expected);
        }
    }
}

#[test]
fn torsion_identity_holds_exactly() {
    for (p, n) in [(3u64, 1u32), (3, 2), (3, 3), (5, 1), (5, 2), (7, 1), (7, 2)] {
        let z = CyclotomicInt::zeta(p, n);
        assert_eq!(z.pow(p.pow(n)), CyclotomicInt::one(p, n));
        if n > 0 {
            assert_ne!(z.pow(p.pow(n - 1)), CyclotomicInt::one(p, n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn teichmuller_is_multiplicative(a in 1u64..1_000_000, b in 1u64..1_000_000, pi in 0usize..3) {
        let p = [3u64, 5, 7][pi];
        prop_assume!(a % p != 0 && b % p != 0);
        let ctx = PadicContext::new(p, 40).unwrap();
        let x = PadicInt::from_i64(&ctx, a as i64);
        let y = PadicInt::from_i64(&ctx, b as i64);
        prop_assert_eq!((&x * &y).teichmuller().unwrap(), x.teichmuller().unwrap() * y.teichmuller().unwrap());
    }

    #[test]
    fn weight_json_roundtrip(a in proptest::collection::vec(0u64..6, 3), k in 0u32..3, c in 0u64..49, e in -20i64..20) {
        let ctx = PadicContext::new(7, 20).unwrap();
        let zeta = CharValue::new(num_rational::BigRational::new(BigInt::from(c % 7u64.pow(k)), BigInt::from(7u64.pow(k))), generator(&ctx).pow_signed(&BigInt::from(e)).unwrap()).unwrap();
        let w = Weight::new(&ctx, a, vec![zeta, CharValue::identity(&ctx), CharValue::identity(&ctx)]).unwrap();
        let back: Weight = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        prop_assert_eq!(back, w);
    }
}
