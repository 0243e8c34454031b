//! Fixed absolute precision arithmetic in `Z_p` for odd primes.
//!
//! Every element is an integer residue modulo `p^N`. There is no relative
//! precision tracking: an element whose residue is zero is "known zero",
//! meaning it is indistinguishable from 0 at the working precision.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("precision N = {0} is too small (need N >= 2)")]
    InvalidPrecision(u32),
    #[error("context mismatch: (p={0}, N={1}) vs (p={2}, N={3})")]
    ContextMismatch(u64, u32, u64, u32),
    #[error("element of valuation {0} is not a unit")]
    NonUnit(u32),
    #[error("element is not a principal unit (not congruent to 1 mod p)")]
    NotPrincipal,
    #[error("exponential needs an argument of positive valuation")]
    ExpDiverges,
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The prime `p` and absolute precision `N` shared by a family of elements.
#[derive(Debug)]
pub struct PadicContext {
    p: u64,
    precision: u32,
    p_big: BigUint,
    modulus: BigUint,
}

impl PartialEq for PadicContext {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.precision == other.precision
    }
}

impl Eq for PadicContext {}

impl PadicContext {
    pub fn new(p: u64, precision: u32) -> Result<Arc<Self>, PadicError> {
        if p < 3 || !is_prime_u64(p) {
            return Err(PadicError::InvalidPrime(p));
        }
        if precision < 2 {
            return Err(PadicError::InvalidPrecision(precision));
        }
        let p_big = BigUint::from(p);
        let modulus = p_big.pow(precision);
        Ok(Arc::new(PadicContext { p, precision, p_big, modulus }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `p^N`.
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn p_pow(&self, k: u32) -> BigUint {
        self.p_big.pow(k)
    }

    /// Context for the same prime at a lower (or higher) precision.
    pub fn with_precision(&self, precision: u32) -> Result<Arc<Self>, PadicError> {
        PadicContext::new(self.p, precision)
    }

    /// Documented precision loss `s = ceil(log_p N) + 1` of the log/exp series.
    pub fn series_loss_bound(&self) -> u32 {
        ceil_log(self.p, self.precision as u64) + 1
    }

    fn same(a: &Arc<Self>, b: &Arc<Self>) -> Result<(), PadicError> {
        if Arc::ptr_eq(a, b) || **a == **b {
            Ok(())
        } else {
            Err(PadicError::ContextMismatch(a.p, a.precision, b.p, b.precision))
        }
    }
}

pub(crate) fn floor_log(p: u64, n: u64) -> u32 {
    let mut k = 0;
    let mut acc = p;
    while acc <= n {
        k += 1;
        match acc.checked_mul(p) {
            Some(v) => acc = v,
            None => break,
        }
    }
    k
}

pub(crate) fn ceil_log(p: u64, n: u64) -> u32 {
    let mut k = 0;
    let mut acc: u64 = 1;
    while acc < n {
        k += 1;
        acc = acc.saturating_mul(p);
    }
    k
}

pub(crate) fn vp_u64(p: u64, mut n: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// The arithmetic operations exposed through [`PadicInt::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// An element of `Z_p` known modulo `p^N`.
#[derive(Clone)]
pub struct PadicInt {
    ctx: Arc<PadicContext>,
    residue: BigUint,
}

impl PartialEq for PadicInt {
    fn eq(&self, other: &Self) -> bool {
        *self.ctx == *other.ctx && self.residue == other.residue
    }
}

impl Eq for PadicInt {}

impl fmt::Debug for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.residue, self.ctx.p, self.ctx.precision)
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

impl PadicInt {
    pub fn from_biguint(ctx: &Arc<PadicContext>, n: BigUint) -> Self {
        PadicInt { residue: n % &ctx.modulus, ctx: ctx.clone() }
    }

    pub fn from_bigint(ctx: &Arc<PadicContext>, n: &BigInt) -> Self {
        let m = BigInt::from_biguint(Sign::Plus, ctx.modulus.clone());
        let r = n.mod_floor(&m);
        PadicInt { residue: r.to_biguint().expect("mod_floor is nonnegative"), ctx: ctx.clone() }
    }

    pub fn from_i64(ctx: &Arc<PadicContext>, n: i64) -> Self {
        Self::from_bigint(ctx, &BigInt::from(n))
    }

    pub fn zero(ctx: &Arc<PadicContext>) -> Self {
        PadicInt { residue: BigUint::zero(), ctx: ctx.clone() }
    }

    pub fn one(ctx: &Arc<PadicContext>) -> Self {
        PadicInt { residue: BigUint::one(), ctx: ctx.clone() }
    }

    pub fn ctx(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    /// Known-zero flag: true when the element is 0 modulo `p^N`.
    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.residue.is_one()
    }

    pub fn valuation(&self) -> u32 {
        if self.residue.is_zero() {
            return self.ctx.precision;
        }
        let mut v = 0;
        let mut r = self.residue.clone();
        let p = &self.ctx.p_big;
        loop {
            let (q, rem) = r.div_rem(p);
            if !rem.is_zero() {
                return v;
            }
            r = q;
            v += 1;
        }
    }

    pub fn is_unit(&self) -> bool {
        !(&self.residue % &self.ctx.p_big).is_zero()
    }

    pub fn is_principal(&self) -> bool {
        (&self.residue % &self.ctx.p_big).is_one()
    }

    /// The symmetric lift in `(-p^N/2, p^N/2]`.
    pub fn to_signed(&self) -> BigInt {
        let r = BigInt::from(self.residue.clone());
        let m = BigInt::from(self.ctx.modulus.clone());
        if &r * 2 > m {
            r - m
        } else {
            r
        }
    }

    /// Reduces to (or, when raising precision, lifts the residue into) another context
    /// for the same prime.
    pub fn with_context(&self, ctx: &Arc<PadicContext>) -> Result<Self, PadicError> {
        if ctx.p != self.ctx.p {
            return Err(PadicError::ContextMismatch(self.ctx.p, self.ctx.precision, ctx.p, ctx.precision));
        }
        Ok(PadicInt::from_biguint(ctx, self.residue.clone()))
    }

    /// Checked arithmetic; errors on context mismatch.
    pub fn arith(&self, other: &PadicInt, op: ArithOp) -> Result<PadicInt, PadicError> {
        PadicContext::same(&self.ctx, &other.ctx)?;
        let m = &self.ctx.modulus;
        let residue = match op {
            ArithOp::Add => (&self.residue + &other.residue) % m,
            ArithOp::Sub => (&self.residue + m - &other.residue) % m,
            ArithOp::Mul => (&self.residue * &other.residue) % m,
        };
        Ok(PadicInt { residue, ctx: self.ctx.clone() })
    }

    pub fn pow(&self, e: u64) -> PadicInt {
        PadicInt { residue: self.residue.modpow(&BigUint::from(e), &self.ctx.modulus), ctx: self.ctx.clone() }
    }

    pub fn pow_big(&self, e: &BigUint) -> PadicInt {
        PadicInt { residue: self.residue.modpow(e, &self.ctx.modulus), ctx: self.ctx.clone() }
    }

    /// Integer power; negative exponents need a unit.
    pub fn pow_signed(&self, e: &BigInt) -> Result<PadicInt, PadicError> {
        let mag = e.magnitude();
        if e.sign() == Sign::Minus {
            Ok(self.invert()?.pow_big(mag))
        } else {
            Ok(self.pow_big(mag))
        }
    }

    pub fn scale_u64(&self, k: u64) -> PadicInt {
        PadicInt::from_biguint(&self.ctx, &self.residue * k)
    }

    pub fn invert(&self) -> Result<PadicInt, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NonUnit(self.valuation()));
        }
        let inv = self
            .residue
            .modinv(&self.ctx.modulus)
            .expect("units are invertible modulo p^N");
        Ok(PadicInt { residue: inv, ctx: self.ctx.clone() })
    }

    /// Exact quotient `self / divisor` when `v(self) >= v(divisor)`.
    ///
    /// The quotient is only determined modulo `p^(N - v(divisor))`; the returned
    /// representative `q` satisfies `q * divisor == self` exactly modulo `p^N`.
    pub fn div_exact(&self, divisor: &PadicInt) -> Option<PadicInt> {
        let v = divisor.valuation();
        if self.is_zero() {
            return Some(PadicInt::zero(&self.ctx));
        }
        if divisor.is_zero() || self.valuation() < v {
            return None;
        }
        let pv = self.ctx.p_pow(v);
        let num = &self.residue / &pv;
        let unit = &divisor.residue / &pv;
        let inv = unit.modinv(&self.ctx.modulus).expect("unit part is invertible");
        Some(PadicInt::from_biguint(&self.ctx, num * inv))
    }

    /// Teichmüller representative: the `(p-1)`-st root of unity congruent to `self` mod `p`.
    pub fn teichmuller(&self) -> Result<PadicInt, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NonUnit(self.valuation()));
        }
        let p = BigUint::from(self.ctx.p);
        let m = &self.ctx.modulus;
        let mut y = self.residue.clone();
        for _ in 0..=self.ctx.precision {
            let next = y.modpow(&p, m);
            if next == y {
                break;
            }
            y = next;
        }
        Ok(PadicInt { residue: y, ctx: self.ctx.clone() })
    }

    /// Iwasawa-branch logarithm: the log of the principal part `x / ω(x)`, so roots of
    /// unity map to 0. The result has valuation at least 1.
    pub fn log(&self) -> Result<PadicInt, PadicError> {
        let omega = self.teichmuller()?;
        let principal = self * &omega.invert()?;
        Ok(log_principal(&principal))
    }

    /// `exp(y)` for `v(y) >= 1`.
    pub fn exp(&self) -> Result<PadicInt, PadicError> {
        if self.is_zero() {
            return Ok(PadicInt::one(&self.ctx));
        }
        if self.valuation() == 0 {
            return Err(PadicError::ExpDiverges);
        }
        Ok(exp_series(self))
    }

    /// `self^t := exp(t log self)` for a principal unit `self` and `t` in `Z_p`.
    pub fn zp_power(&self, t: &PadicInt) -> Result<PadicInt, PadicError> {
        PadicContext::same(&self.ctx, &t.ctx)?;
        if !self.is_principal() {
            return Err(PadicError::NotPrincipal);
        }
        let l = log_principal(self);
        (t * &l).exp()
    }
}

/// `log(1 + z)` for `z = u - 1` of positive valuation.
///
/// With `z = p w`, the k-th term is `(-1)^(k+1) p^(k - v_p(k)) w^k / k'` where `k'` is the
/// unit part of `k`; these are integers mod `p^N` so nothing is lost to division.
fn log_principal(u: &PadicInt) -> PadicInt {
    let ctx = &u.ctx;
    let n = ctx.precision as u64;
    let m = &ctx.modulus;
    let p = ctx.p;
    let z = (&u.residue + m - 1u32) % m;
    if z.is_zero() {
        return PadicInt::zero(ctx);
    }
    let w = &z / &ctx.p_big;
    let mut wk = BigUint::one();
    let mut acc = BigUint::zero();
    let mut k: u64 = 1;
    // k - floor(log_p k) is nondecreasing, so once it reaches N every later term vanishes.
    loop {
        if k.saturating_sub(floor_log(p, k) as u64) >= n {
            break;
        }
        wk = (&wk * &w) % m;
        let v = vp_u64(p, k);
        let e = k - v as u64;
        if e < n {
            let unit = k / p.pow(v);
            let inv = BigUint::from(unit).modinv(m).expect("unit part of k");
            let term = (ctx.p_pow(e as u32) * &wk % m) * inv % m;
            if k % 2 == 1 {
                acc = (acc + term) % m;
            } else {
                acc = (acc + m - term) % m;
            }
        }
        k += 1;
    }
    PadicInt { residue: acc, ctx: ctx.clone() }
}

/// `exp(y)` with `y = p w`; the k-th term is `p^(k - v_p(k!)) w^k / (k!)'`.
fn exp_series(y: &PadicInt) -> PadicInt {
    let ctx = &y.ctx;
    let n = ctx.precision as u64;
    let m = &ctx.modulus;
    let p = ctx.p;
    let w = &y.residue / &ctx.p_big;
    let mut wk = BigUint::one();
    let mut inv_fact_unit = BigUint::one();
    let mut v_fact: u64 = 0;
    let mut acc = BigUint::one();
    let mut k: u64 = 1;
    // v_p(k!) <= (k-1)/(p-1), so k - (k-1)/(p-1) is a nondecreasing lower bound for the
    // valuation of the k-th term.
    loop {
        if k - (k - 1) / (p - 1) >= n {
            break;
        }
        wk = (&wk * &w) % m;
        let v = vp_u64(p, k);
        v_fact += v as u64;
        let unit = k / p.pow(v);
        let inv = BigUint::from(unit).modinv(m).expect("unit part of k");
        inv_fact_unit = (inv_fact_unit * inv) % m;
        let e = k - v_fact;
        if e < n {
            let term = (ctx.p_pow(e as u32) * &wk % m) * &inv_fact_unit % m;
            acc = (acc + term) % m;
        }
        k += 1;
    }
    PadicInt { residue: acc, ctx: ctx.clone() }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $op:expr) => {
        impl<'a> $tr<&'a PadicInt> for &'a PadicInt {
            type Output = PadicInt;
            fn $method(self, rhs: &'a PadicInt) -> PadicInt {
                self.arith(rhs, $op).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<PadicInt> for PadicInt {
            type Output = PadicInt;
            fn $method(self, rhs: PadicInt) -> PadicInt {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a PadicInt> for PadicInt {
            type Output = PadicInt;
            fn $method(self, rhs: &'a PadicInt) -> PadicInt {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, ArithOp::Add);
forward_binop!(Sub, sub, ArithOp::Sub);
forward_binop!(Mul, mul, ArithOp::Mul);

impl Neg for &PadicInt {
    type Output = PadicInt;
    fn neg(self) -> PadicInt {
        PadicInt::zero(&self.ctx) - self
    }
}

impl Neg for PadicInt {
    type Output = PadicInt;
    fn neg(self) -> PadicInt {
        -&self
    }
}

/// Residue of a small value, handy in tests and reports.
pub fn residue_u64(x: &PadicInt) -> Option<u64> {
    x.residue.to_u64()
}
