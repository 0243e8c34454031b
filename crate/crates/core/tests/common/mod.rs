#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use eigvar::number_field::{load_field, NumberFieldData};
use eigvar::padic::{PadicContext, PadicInt};
use eigvar::weight_space::{algebraic_weight, generator, CharValue, Weight};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

pub fn fixture(name: &str) -> NumberFieldData {
    load_field(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)).unwrap()
}

pub fn random_residue<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>) -> PadicInt {
    let bytes: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
    PadicInt::from_biguint(ctx, BigUint::from_bytes_le(&bytes))
}

pub fn random_unit<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>) -> PadicInt {
    loop {
        let x = random_residue(rng, ctx);
        if x.is_unit() {
            return x;
        }
    }
}

/// `1 + p·(random)`.
pub fn random_principal<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>) -> PadicInt {
    let x = random_residue(rng, ctx);
    PadicInt::one(ctx) + x * PadicInt::from_i64(ctx, ctx.p() as i64)
}

/// Finite-order weight with Teichmüller exponents `a` and `g ↦ ζ_(p^k)^c`, `k <= max_k`.
pub fn random_finite<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>, d: usize, max_k: u32) -> Weight {
    let p = ctx.p();
    let a = (0..d).map(|_| rng.gen_range(0..p - 1)).collect();
    let phi = (0..d)
        .map(|_| {
            let k = rng.gen_range(0..=max_k);
            let den = BigInt::from(p).pow(k);
            let num = if k == 0 { BigInt::zero() } else { BigInt::from(rng.gen_range(0..p.pow(k))) };
            CharValue::new(BigRational::new(num, den), PadicInt::one(ctx)).unwrap()
        })
        .collect();
    Weight::new(ctx, a, phi).unwrap()
}

pub fn random_exponents<R: Rng>(rng: &mut R, d: usize, bound: i64) -> Vec<BigInt> {
    (0..d).map(|_| BigInt::from(rng.gen_range(-bound..=bound))).collect()
}

pub fn random_locally_algebraic<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>, n: &[BigInt], max_k: u32) -> (Weight, Weight) {
    let eps = random_finite(rng, ctx, n.len(), max_k);
    (algebraic_weight(ctx, n).mul(&eps), eps)
}

/// Weight with independent random principal parts and no finite part.
pub fn random_analytic<R: Rng>(rng: &mut R, ctx: &Arc<PadicContext>, d: usize) -> Weight {
    let phi = (0..d).map(|_| CharValue::new(BigRational::zero(), random_principal(rng, ctx)).unwrap()).collect();
    Weight::new(ctx, vec![0; d], phi).unwrap()
}

/// `g^(p^(r-1))` in coordinate `i` (generator of `1 + p^r Z_p`), or `ω(root)` for `r = 0`.
pub fn level_generators(ctx: &Arc<PadicContext>, d: usize, r: u32) -> Vec<Vec<PadicInt>> {
    let p = ctx.p();
    let mut gens = Vec::new();
    let mut local = Vec::new();
    if r == 0 {
        let root = eigvar::weight_space::primitive_root(p);
        local.push(PadicInt::from_i64(ctx, root as i64).teichmuller().unwrap());
        local.push(generator(ctx));
    } else {
        local.push(generator(ctx).pow(p.pow(r - 1)));
    }
    for i in 0..d {
        for x in &local {
            let mut v = vec![PadicInt::one(ctx); d];
            v[i] = x.clone();
            gens.push(v);
        }
    }
    gens
}

/// Least `r` with `ε` trivial on `(1 + p^r Z_p)^d` (`r = 0`: all of `(Z_p^×)^d`).
pub fn conductor_by_restriction(eps: &Weight) -> u32 {
    let ctx = eps.ctx().clone();
    for r in 0..ctx.precision() {
        let trivial = level_generators(&ctx, eps.d(), r)
            .iter()
            .all(|x| eigvar::weight_space::eval_weight(eps, x).unwrap().is_identity());
        if trivial {
            return r;
        }
    }
    unreachable!("finite-order weight")
}

/// Determinant by cofactor expansion (small matrices only).
pub fn det_cofactor(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = BigInt::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..].iter().map(|row| [&row[..j], &row[j + 1..]].concat()).collect();
        let term = &m[0][j] * det_cofactor(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<usize>> = subsets(n - 1, k - 1).into_iter().map(|mut s| {
        s.push(n - 1);
        s
    }).collect();
    with.extend(subsets(n - 1, k));
    with
}

fn vp(x: &BigInt, p: u64) -> u32 {
    let pb = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    while (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

/// `p`-adic valuations of the Smith invariants of an integer matrix from determinantal
/// divisors `d_k = gcd of k×k minors`: `v(s_k) = v(d_k) - v(d_(k-1))`, capped at `cap`;
/// invariants beyond the rank are `cap`.
pub fn smith_valuations_oracle(m: &[Vec<BigInt>], p: u64, cap: u32) -> Vec<u32> {
    let rows = m.len();
    let cols = m[0].len();
    let mut out = Vec::new();
    let mut prev: Option<u32> = Some(0);
    for k in 1..=rows.min(cols) {
        let mut min_v: Option<u32> = None;
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let sub: Vec<Vec<BigInt>> = rs.iter().map(|&i| cs.iter().map(|&j| m[i][j].clone()).collect()).collect();
                let det = det_cofactor(&sub);
                if !det.is_zero() {
                    let v = vp(&det, p);
                    min_v = Some(min_v.map_or(v, |a: u32| a.min(v)));
                }
            }
        }
        let val = match (min_v, prev) {
            (Some(v), Some(pv)) => (v - pv).min(cap),
            _ => cap,
        };
        out.push(val);
        prev = min_v;
    }
    out
}
