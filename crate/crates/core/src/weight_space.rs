//! Weights: continuous characters of `(Z_p^×)^d`, with values in the symbolic group
//! `μ_∞ × (1 + pZ_p)`.
//!
//! A unit `x` of `Z_p` is written `x = ω(r)^ind · g^t` with `r` the least primitive root
//! mod `p` and `g = 1 + p`. A weight is fixed by `a_i ∈ Z/(p-1)` (the image of `ω(r)` is
//! `ζ_(p-1)^(a_i)`) and `φ_i`, the image of `g`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{PadicContext, PadicError, PadicInt};
use crate::zp_linalg::{integer_reconstruct_at, LinalgError};

#[derive(Debug, Error)]
pub enum WeightError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("coordinate {0} is not a unit")]
    NonUnit(usize),
    #[error("dimension mismatch: weight has d = {expected}, input has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid weight: {0}")]
    Invalid(String),
    #[error("precision insufficient: {0}")]
    Precision(#[from] LinalgError),
    #[error("weight is not locally algebraic at precision")]
    NotLocallyAlgebraic,
}

/// Least primitive root mod an odd prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut n = p - 1;
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            factors.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    (2..p)
        .find(|&r| factors.iter().all(|&q| mod_pow(r, (p - 1) / q, p) != 1))
        .unwrap_or(1)
}

fn mod_pow(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u128;
    let mut b128 = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b128 % m as u128;
        }
        b128 = b128 * b128 % m as u128;
        e >>= 1;
    }
    r as u64
}

/// `ind` with `ω(x) = ω(r)^ind`, `r` the least primitive root.
pub fn teichmuller_index(x: &PadicInt) -> Result<u64, WeightError> {
    if !x.is_unit() {
        return Err(PadicError::NonUnit(x.valuation()).into());
    }
    let p = x.ctx().p();
    let target = (x.residue() % p).to_u64().expect("reduced mod p");
    let r = primitive_root(p);
    let mut acc = 1u64;
    for k in 0..p - 1 {
        if acc == target {
            return Ok(k);
        }
        acc = (acc as u128 * r as u128 % p as u128) as u64;
    }
    unreachable!("primitive root generates (Z/p)^×")
}

/// `log(x) / p`, an element of `Z_p` known modulo `p^(N-1)`.
fn log_over_p(x: &PadicInt) -> Result<PadicInt, PadicError> {
    let l = x.log()?;
    let q = l.residue() / x.ctx().p();
    Ok(PadicInt::from_biguint(x.ctx(), q))
}

/// `t = log(x) / log(1 + p)`, known modulo `p^(N-1)`.
pub fn log_coordinate(x: &PadicInt) -> Result<PadicInt, PadicError> {
    let ctx = x.ctx();
    let g = generator(ctx);
    Ok(log_over_p(x)? * log_over_p(&g)?.invert()?)
}

/// The topological generator `1 + p` of the principal units.
pub fn generator(ctx: &Arc<PadicContext>) -> PadicInt {
    PadicInt::from_i64(ctx, 1 + ctx.p() as i64)
}

fn frac_mod_one(q: &BigRational) -> BigRational {
    q - BigRational::from_integer(q.floor().to_integer())
}

/// Exponent of the `p`-part of a denominator, or `None` if the denominator is not a power of `p`.
fn p_power_exponent(den: &BigInt, p: u64) -> Option<u32> {
    let mut d = den.clone();
    let pb = BigInt::from(p);
    let mut k = 0;
    while (&d % &pb).is_zero() {
        d /= &pb;
        k += 1;
    }
    d.is_one().then_some(k)
}

/// A value `exp(2πi·zeta_exp) · principal` of a character.
#[derive(Clone, PartialEq, Eq)]
pub struct CharValue {
    /// In `[0, 1)`.
    pub zeta_exp: BigRational,
    /// `≡ 1 mod p`.
    pub principal: PadicInt,
}

impl fmt::Debug for CharValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ζ^{}, {})", self.zeta_exp, self.principal)
    }
}

impl CharValue {
    pub fn new(zeta_exp: BigRational, principal: PadicInt) -> Result<Self, WeightError> {
        if !principal.is_principal() {
            return Err(PadicError::NotPrincipal.into());
        }
        Ok(CharValue { zeta_exp: frac_mod_one(&zeta_exp), principal })
    }

    pub fn identity(ctx: &Arc<PadicContext>) -> Self {
        CharValue { zeta_exp: BigRational::zero(), principal: PadicInt::one(ctx) }
    }

    /// `x = ω(x)·⟨x⟩`, with `ω(x) = ω(r)^ind` read as `ζ_(p-1)^ind`.
    pub fn from_unit(x: &PadicInt) -> Result<Self, WeightError> {
        let p = x.ctx().p();
        let ind = teichmuller_index(x)?;
        let omega = x.teichmuller()?;
        Ok(CharValue {
            zeta_exp: BigRational::new(BigInt::from(ind), BigInt::from(p - 1)),
            principal: x * &omega.invert()?,
        })
    }

    /// The `p`-adic number this value stands for, if its root of unity lies in `μ_(p-1)`.
    pub fn to_padic(&self) -> Option<PadicInt> {
        let ctx = self.principal.ctx();
        let p = ctx.p();
        let scaled = &self.zeta_exp * BigRational::from_integer(BigInt::from(p - 1));
        if !scaled.is_integer() {
            return None;
        }
        let k = scaled.to_integer().to_u64()?;
        let w = PadicInt::from_i64(ctx, primitive_root(p) as i64).teichmuller().ok()?;
        Some(w.pow(k) * &self.principal)
    }

    pub fn mul(&self, other: &CharValue) -> CharValue {
        CharValue {
            zeta_exp: frac_mod_one(&(&self.zeta_exp + &other.zeta_exp)),
            principal: &self.principal * &other.principal,
        }
    }

    pub fn inverse(&self) -> CharValue {
        CharValue {
            zeta_exp: frac_mod_one(&-&self.zeta_exp),
            principal: self.principal.invert().expect("principal unit"),
        }
    }

    pub fn pow(&self, e: &BigInt) -> CharValue {
        CharValue {
            zeta_exp: frac_mod_one(&(&self.zeta_exp * BigRational::from_integer(e.clone()))),
            principal: self.principal.pow_signed(e).expect("principal unit"),
        }
    }

    /// Log of the principal part; the root of unity is killed.
    pub fn log(&self) -> PadicInt {
        self.principal.log().expect("principal unit")
    }

    pub fn is_identity(&self) -> bool {
        self.zeta_exp.is_zero() && self.principal.is_one()
    }

    /// Trivial root of unity and `principal ≡ 1 mod p^threshold`.
    pub fn is_identity_at(&self, threshold: u32) -> bool {
        self.zeta_exp.is_zero() && principal_trivial_at(&self.principal, threshold)
    }
}

fn principal_trivial_at(x: &PadicInt, threshold: u32) -> bool {
    let d = x - &PadicInt::one(x.ctx());
    d.is_zero() || d.valuation() >= threshold
}

/// A continuous character of `(Z_p^×)^d`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "WeightRecord", into = "WeightRecord")]
pub struct Weight {
    ctx: Arc<PadicContext>,
    /// Exponents of the Teichmüller part, in `[0, p-1)`.
    pub a: Vec<u64>,
    /// Images of `g = 1 + p`; root-of-unity parts have `p`-power order.
    pub phi: Vec<CharValue>,
}

impl Weight {
    pub fn new(ctx: &Arc<PadicContext>, a: Vec<u64>, phi: Vec<CharValue>) -> Result<Self, WeightError> {
        if a.len() != phi.len() {
            return Err(WeightError::Dimension { expected: a.len(), got: phi.len() });
        }
        let p = ctx.p();
        for v in &phi {
            if v.principal.ctx() != ctx {
                return Err(PadicError::ContextMismatch(v.principal.ctx().p(), v.principal.ctx().precision(), p, ctx.precision()).into());
            }
            match p_power_exponent(v.zeta_exp.denom(), p) {
                Some(k) if k < ctx.precision() => {}
                Some(_) => return Err(WeightError::Invalid("root-of-unity order exceeds the precision".into())),
                None => {
                    return Err(WeightError::Invalid(format!(
                        "image of 1+p has root of unity exp(2πi·{}) of order not a power of {p}",
                        v.zeta_exp
                    )))
                }
            }
            if !v.principal.is_principal() {
                return Err(PadicError::NotPrincipal.into());
            }
        }
        let a = a.into_iter().map(|x| x % (p - 1)).collect();
        Ok(Weight { ctx: ctx.clone(), a, phi })
    }

    pub fn trivial(ctx: &Arc<PadicContext>, d: usize) -> Self {
        Weight { ctx: ctx.clone(), a: vec![0; d], phi: vec![CharValue::identity(ctx); d] }
    }

    pub fn ctx(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        let m = self.ctx.p() - 1;
        Weight {
            ctx: self.ctx.clone(),
            a: self.a.iter().zip(&other.a).map(|(x, y)| (x + y) % m).collect(),
            phi: self.phi.iter().zip(&other.phi).map(|(x, y)| x.mul(y)).collect(),
        }
    }

    pub fn inverse(&self) -> Weight {
        let m = self.ctx.p() - 1;
        Weight {
            ctx: self.ctx.clone(),
            a: self.a.iter().map(|x| (m - x) % m).collect(),
            phi: self.phi.iter().map(CharValue::inverse).collect(),
        }
    }

    /// Finite-order part is trivial and principal parts agree mod `p^threshold`.
    pub fn eq_at(&self, other: &Weight, threshold: u32) -> bool {
        let q = self.mul(&other.inverse());
        q.a.iter().all(|&x| x == 0) && q.phi.iter().all(|v| v.is_identity_at(threshold))
    }

    /// All `φ_i` are roots of unity (principal part 1 at `threshold`).
    pub fn is_finite_order_at(&self, threshold: u32) -> bool {
        self.phi.iter().all(|v| principal_trivial_at(&v.principal, threshold))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightRecord {
    pub p: u64,
    pub precision: u32,
    pub d: usize,
    pub coords: Vec<CoordRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoordRecord {
    pub a: u64,
    #[serde(with = "crate::util::big_str")]
    pub zeta_num: BigInt,
    #[serde(with = "crate::util::big_str")]
    pub zeta_den: BigInt,
    /// Residue of the principal part mod `p^N`, decimal.
    #[serde(with = "crate::util::big_str")]
    pub principal: BigInt,
}

impl From<Weight> for WeightRecord {
    fn from(w: Weight) -> Self {
        WeightRecord {
            p: w.ctx.p(),
            precision: w.ctx.precision(),
            d: w.d(),
            coords: w
                .a
                .iter()
                .zip(&w.phi)
                .map(|(&a, v)| CoordRecord {
                    a,
                    zeta_num: v.zeta_exp.numer().clone(),
                    zeta_den: v.zeta_exp.denom().clone(),
                    principal: BigInt::from(v.principal.residue().clone()),
                })
                .collect(),
        }
    }
}

impl TryFrom<WeightRecord> for Weight {
    type Error = WeightError;

    fn try_from(r: WeightRecord) -> Result<Self, Self::Error> {
        let ctx = PadicContext::new(r.p, r.precision)?;
        if r.coords.len() != r.d {
            return Err(WeightError::Dimension { expected: r.d, got: r.coords.len() });
        }
        let mut a = Vec::new();
        let mut phi = Vec::new();
        for c in r.coords {
            if c.zeta_den.is_zero() {
                return Err(WeightError::Invalid("zero denominator".into()));
            }
            a.push(c.a);
            phi.push(CharValue::new(BigRational::new(c.zeta_num, c.zeta_den), PadicInt::from_bigint(&ctx, &c.principal))?);
        }
        Weight::new(&ctx, a, phi)
    }
}

/// `κ(x) = ∏_i ζ_(p-1)^(a_i·ind(x_i)) · φ_i^(t_i)` with `t_i = log x_i / log g`.
pub fn eval_weight(kappa: &Weight, x: &[PadicInt]) -> Result<CharValue, WeightError> {
    if x.len() != kappa.d() {
        return Err(WeightError::Dimension { expected: kappa.d(), got: x.len() });
    }
    let ctx = &kappa.ctx;
    let p = ctx.p();
    let mut acc = CharValue::identity(ctx);
    for (i, xi) in x.iter().enumerate() {
        if xi.ctx() != ctx {
            return Err(PadicError::ContextMismatch(xi.ctx().p(), xi.ctx().precision(), p, ctx.precision()).into());
        }
        if !xi.is_unit() {
            return Err(WeightError::NonUnit(i));
        }
        let ind = teichmuller_index(xi)?;
        let t = log_coordinate(xi)?;
        let phi = &kappa.phi[i];
        // t is known mod p^(N-1); zeta parts have order p^k with k < N
        let t_int = BigInt::from(t.residue().clone());
        let zeta = BigRational::new(BigInt::from(kappa.a[i] * ind), BigInt::from(p - 1))
            + &phi.zeta_exp * BigRational::from_integer(t_int);
        let principal = phi.principal.zp_power(&t)?;
        acc = acc.mul(&CharValue { zeta_exp: frac_mod_one(&zeta), principal });
    }
    Ok(acc)
}

/// `x ↦ ∏_i σ_i(x)^(n_i)`.
pub fn algebraic_weight(ctx: &Arc<PadicContext>, n: &[BigInt]) -> Weight {
    let m = BigInt::from(ctx.p() - 1);
    let g = generator(ctx);
    Weight {
        ctx: ctx.clone(),
        a: n.iter().map(|k| k.mod_floor(&m).to_u64().unwrap()).collect(),
        phi: n
            .iter()
            .map(|k| CharValue { zeta_exp: BigRational::zero(), principal: g.pow_signed(k).expect("unit") })
            .collect(),
    }
}

pub fn algebraic_weight_i64(ctx: &Arc<PadicContext>, n: &[i64]) -> Weight {
    algebraic_weight(ctx, &n.iter().map(|&k| BigInt::from(k)).collect::<Vec<_>>())
}

pub fn is_parallel(kappa: &Weight) -> bool {
    kappa.a.windows(2).all(|w| w[0] == w[1]) && kappa.phi.windows(2).all(|w| w[0] == w[1])
}

pub fn is_locally_parallel(kappa: &Weight) -> bool {
    let logs: Vec<PadicInt> = kappa.phi.iter().map(CharValue::log).collect();
    logs.windows(2).all(|w| w[0] == w[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Algebraic,
    LocallyAlgebraic,
    LocallyParallelOnly,
    NonAlgebraicAtPrecision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: WeightKind,
    #[serde(with = "crate::util::opt_big_vec_str")]
    pub n: Option<Vec<BigInt>>,
    pub epsilon: Option<Weight>,
    pub conductor: Option<u32>,
    #[serde(with = "crate::util::big_str")]
    pub bound: BigInt,
    pub precision: u32,
    pub slack: u32,
}

/// `p^⌊N/3⌋`.
pub fn default_bound(ctx: &PadicContext) -> BigInt {
    BigInt::from(ctx.p_pow(ctx.precision() / 3))
}

/// Digits of `log_coordinate` that are trusted when `slack` digits are reserved.
fn reading_precision(ctx: &PadicContext, slack: u32) -> u32 {
    ctx.precision().saturating_sub(slack).min(ctx.precision() - 1)
}

/// Factor `κ = ε · algebraic_weight(n)` with `|n_i| <= bound`, if possible at precision.
pub fn classify(kappa: &Weight, bound: &BigInt, slack: u32) -> Result<Classification, WeightError> {
    let ctx = &kappa.ctx;
    let prec = reading_precision(ctx, slack);
    let threshold = ctx.precision().saturating_sub(slack);
    let g = generator(ctx);
    let lg = log_over_p(&g)?.invert()?;
    let mut n = Vec::with_capacity(kappa.d());
    let mut failed = false;
    for v in &kappa.phi {
        let s = log_over_p(&v.principal)? * &lg;
        match integer_reconstruct_at(&s, bound, prec)? {
            Some(k) => n.push(k),
            None => failed = true,
        }
    }
    let base = Classification {
        kind: WeightKind::NonAlgebraicAtPrecision,
        n: None,
        epsilon: None,
        conductor: None,
        bound: bound.clone(),
        precision: ctx.precision(),
        slack,
    };
    if failed {
        let kind = if is_locally_parallel(kappa) {
            WeightKind::LocallyParallelOnly
        } else {
            WeightKind::NonAlgebraicAtPrecision
        };
        return Ok(Classification { kind, ..base });
    }
    let eps_raw = kappa.mul(&algebraic_weight(ctx, &n).inverse());
    if !eps_raw.is_finite_order_at(threshold) {
        return Ok(base);
    }
    let epsilon = Weight {
        ctx: ctx.clone(),
        a: eps_raw.a.clone(),
        phi: eps_raw.phi.iter().map(|v| CharValue { zeta_exp: v.zeta_exp.clone(), principal: PadicInt::one(ctx) }).collect(),
    };
    let c = conductor_of_finite(&epsilon);
    let kind = if c == 0 { WeightKind::Algebraic } else { WeightKind::LocallyAlgebraic };
    Ok(Classification { kind, n: Some(n), epsilon: Some(epsilon), conductor: Some(c), ..base })
}

/// Conductor exponent of a finite-order weight: per coordinate 0 if trivial, 1 if only the
/// Teichmüller part is nontrivial, `k + 1` if the image of `g` has exact order `p^k > 1`.
pub fn conductor_of_finite(eps: &Weight) -> u32 {
    let p = eps.ctx.p();
    eps.a
        .iter()
        .zip(&eps.phi)
        .map(|(&a, v)| {
            let k = p_power_exponent(v.zeta_exp.denom(), p).unwrap_or(0);
            if k > 0 {
                k + 1
            } else if a != 0 {
                1
            } else {
                0
            }
        })
        .max()
        .unwrap_or(0)
}

pub fn conductor(kappa: &Weight, bound: &BigInt, slack: u32) -> Result<u32, WeightError> {
    match classify(kappa, bound, slack)? {
        Classification { conductor: Some(c), .. } => Ok(c),
        _ => Err(WeightError::NotLocallyAlgebraic),
    }
}

/// Basis `u_j = (…, g, g^(-1), …)` of the torsion-free part of the norm-one units.
#[derive(Clone, Debug)]
pub struct NormOneBasis {
    pub vectors: Vec<Vec<PadicInt>>,
}

/// Empty for `d = 1`: the norm-one subgroup of `Z_p^×` is torsion.
pub fn norm_one_basis(ctx: &Arc<PadicContext>, d: usize) -> NormOneBasis {
    let g = generator(ctx);
    let g_inv = g.invert().expect("unit");
    let vectors = (0..d.saturating_sub(1))
        .map(|j| {
            let mut v = vec![PadicInt::one(ctx); d];
            v[j] = g.clone();
            v[j + 1] = g_inv.clone();
            v
        })
        .collect();
    NormOneBasis { vectors }
}

/// `(log κ(u_j))_j`.
pub fn rigid_locus_values(kappa: &Weight, basis: &NormOneBasis) -> Result<Vec<PadicInt>, WeightError> {
    basis.vectors.iter().map(|u| Ok(eval_weight(kappa, u)?.log())).collect()
}

/// `κ(γ) = 1` (at precision `N - slack`) for every `γ`.
pub fn is_trivial_on(kappa: &Weight, gens: &[Vec<PadicInt>], slack: u32) -> Result<bool, WeightError> {
    let threshold = kappa.ctx.precision().saturating_sub(slack);
    for g in gens {
        if !eval_weight(kappa, g)?.is_identity_at(threshold) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, n: u32) -> Arc<PadicContext> {
        PadicContext::new(p, n).unwrap()
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&k| BigInt::from(k)).collect()
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(primitive_root(3), 2);
        assert_eq!(primitive_root(5), 2);
        assert_eq!(primitive_root(7), 3);
        assert_eq!(primitive_root(59), 2);
    }

    #[test]
    fn trivial_weight_evaluates_to_identity() {
        let c = ctx(5, 20);
        let k = Weight::trivial(&c, 2);
        let x = vec![PadicInt::from_i64(&c, 7), PadicInt::from_i64(&c, 13)];
        assert!(eval_weight(&k, &x).unwrap().is_identity());
    }

    #[test]
    fn algebraic_weight_matches_direct_power() {
        let c = ctx(7, 20);
        let n = [3i64, -2];
        let k = algebraic_weight_i64(&c, &n);
        let x = vec![PadicInt::from_i64(&c, 10), PadicInt::from_i64(&c, 1234)];
        let v = eval_weight(&k, &x).unwrap();
        let direct = x[0].pow(3) * x[1].invert().unwrap().pow(2);
        assert_eq!(v.to_padic().unwrap(), direct);
        assert_eq!(v, CharValue::from_unit(&direct).unwrap());
    }

    #[test]
    fn parallel_predicates() {
        let c = ctx(5, 20);
        let k = algebraic_weight_i64(&c, &[2, 2]);
        assert!(is_parallel(&k) && is_locally_parallel(&k));
        let eps = Weight::new(&c, vec![1, 3], vec![CharValue::identity(&c); 2]).unwrap();
        let t = k.mul(&eps);
        assert!(!is_parallel(&t) && is_locally_parallel(&t));
        let k2 = algebraic_weight_i64(&c, &[1, 2]);
        assert!(!is_parallel(&k2) && !is_locally_parallel(&k2));
    }

    #[test]
    fn classify_roundtrip_and_twist() {
        let c = ctx(5, 40);
        let b = default_bound(&c);
        let cl = classify(&algebraic_weight_i64(&c, &[3, -1]), &b, 10).unwrap();
        assert_eq!(cl.kind, WeightKind::Algebraic);
        assert_eq!(cl.n, Some(big(&[3, -1])));
        assert_eq!(cl.conductor, Some(0));

        let g = generator(&c);
        let phi1 = CharValue::new(BigRational::new(1.into(), 5.into()), g.pow(2)).unwrap();
        let k = Weight::new(&c, vec![2, 0], vec![phi1, CharValue::identity(&c)]).unwrap();
        let cl = classify(&k, &b, 10).unwrap();
        assert_eq!(cl.kind, WeightKind::LocallyAlgebraic);
        assert_eq!(cl.n.as_ref().unwrap()[0], BigInt::from(2));
        assert_eq!(cl.conductor, Some(2));
        let eps = cl.epsilon.unwrap();
        assert_eq!(eps.phi[0].zeta_exp, BigRational::new(1.into(), 5.into()));
    }

    #[test]
    fn random_principal_part_is_not_algebraic() {
        let c = ctx(5, 40);
        let u = PadicInt::from_bigint(&c, &"1234567890123456789012345678".parse::<BigInt>().unwrap()) * PadicInt::from_i64(&c, 5)
            + PadicInt::one(&c);
        let k = Weight::new(&c, vec![0], vec![CharValue::new(BigRational::zero(), u).unwrap()]).unwrap();
        let cl = classify(&k, &default_bound(&c), 10).unwrap();
        assert_ne!(cl.kind, WeightKind::Algebraic);
        assert!(cl.n.is_none());
    }

    #[test]
    fn classify_rejects_oversized_bound() {
        let c = ctx(5, 12);
        let k = Weight::trivial(&c, 1);
        let b = BigInt::from(5u32).pow(10);
        assert!(matches!(classify(&k, &b, 3), Err(WeightError::Precision(_))));
    }

    #[test]
    fn conductor_cases() {
        let c = ctx(5, 20);
        assert_eq!(conductor_of_finite(&Weight::trivial(&c, 2)), 0);
        let teich = Weight::new(&c, vec![1, 0], vec![CharValue::identity(&c); 2]).unwrap();
        assert_eq!(conductor_of_finite(&teich), 1);
        let zeta = CharValue::new(BigRational::new(2.into(), 25.into()), PadicInt::one(&c)).unwrap();
        let w = Weight::new(&c, vec![0, 0], vec![CharValue::identity(&c), zeta]).unwrap();
        assert_eq!(conductor_of_finite(&w), 3);
    }

    #[test]
    fn norm_one_basis_shapes() {
        let c = ctx(5, 20);
        let b = norm_one_basis(&c, 3);
        assert_eq!(b.vectors.len(), 2);
        for u in &b.vectors {
            let prod = u.iter().fold(PadicInt::one(&c), |a, x| a * x);
            assert!(prod.is_one());
        }
        assert!(norm_one_basis(&c, 1).vectors.is_empty());
    }

    #[test]
    fn parallel_weights_vanish_on_rigid_locus() {
        let c = ctx(5, 30);
        let b = norm_one_basis(&c, 2);
        let vals = rigid_locus_values(&algebraic_weight_i64(&c, &[7, 7]), &b).unwrap();
        assert!(vals.iter().all(PadicInt::is_zero));
        let vals = rigid_locus_values(&algebraic_weight_i64(&c, &[7, 6]), &b).unwrap();
        assert!(!vals[0].is_zero());
    }

    #[test]
    fn weight_serialization_roundtrip() {
        let c = ctx(7, 25);
        let zeta = CharValue::new(BigRational::new(3.into(), 49.into()), generator(&c).pow(5)).unwrap();
        let k = Weight::new(&c, vec![4, 1], vec![zeta, CharValue::identity(&c)]).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: Weight = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        let bad = s.replace("\"zeta_den\":\"49\"", "\"zeta_den\":\"6\"");
        assert!(serde_json::from_str::<Weight>(&bad).is_err());
    }
}
