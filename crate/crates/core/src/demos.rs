//! Two small witnesses for formal versus rigid closedness on the unit disc and on weight
//! space: torsion points `T = ζ - 1` satisfy `log(1 + T) = 0`, yet no nonzero group-ring
//! element vanishes under every finite-order character.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigenvariety::{finite_quotient_order_of, unit_log_lattice, EigError};
use crate::number_field::{gamma_u, NumberFieldData, SplitPrimeData, TameLevel};
use crate::padic::{ceil_log, is_prime_u64};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("p = {0} must be an odd prime")]
    InvalidPrime(u64),
    #[error("{terms} terms is fewer than φ(p^n) = {phi}")]
    TooFewTerms { terms: u64, phi: u64 },
    #[error("tail bound {bound} is negative for {terms} terms; use more terms")]
    NegativeBound { bound: i64, terms: u64 },
    #[error("group of order {0} exceeds the bound 3^6")]
    GroupTooLarge(u64),
    #[error(transparent)]
    Eig(#[from] EigError),
}

fn phi_degree(p: u64, n: u32) -> usize {
    if n == 0 {
        1
    } else {
        ((p - 1) * p.pow(n - 1)) as usize
    }
}

/// `Φ_(p^n)`, low degree first.
fn cyclotomic_poly(p: u64, n: u32) -> Vec<BigInt> {
    if n == 0 {
        return vec![-BigInt::one(), BigInt::one()];
    }
    let step = p.pow(n - 1) as usize;
    let mut f = vec![BigInt::zero(); (p as usize - 1) * step + 1];
    for j in 0..p as usize {
        f[j * step] = BigInt::one();
    }
    f
}

fn reduce_monic<T>(mut a: Vec<T>, f: &[BigInt]) -> Vec<T>
where
    T: Clone + Zero + for<'a> std::ops::SubAssign<&'a T> + for<'a> std::ops::Mul<&'a BigInt, Output = T>,
{
    let d = f.len() - 1;
    for k in (d..a.len()).rev() {
        let c = std::mem::replace(&mut a[k], T::zero());
        if c.is_zero() {
            continue;
        }
        for j in 0..d {
            let t = c.clone() * &f[j];
            a[k - d + j] -= &t;
        }
    }
    a.resize(d, T::zero());
    a
}

/// An element of `Z[ζ_(p^n)] = Z[x]/Φ_(p^n)`, coefficients in the basis `1, x, …, x^(φ-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclotomicInt {
    pub p: u64,
    pub n: u32,
    pub coeffs: Vec<BigInt>,
}

impl CyclotomicInt {
    /// Reduces an arbitrary polynomial in `x`.
    pub fn from_poly(p: u64, n: u32, poly: Vec<BigInt>) -> Self {
        let coeffs = reduce_monic(poly, &cyclotomic_poly(p, n));
        CyclotomicInt { p, n, coeffs }
    }

    pub fn from_int(p: u64, n: u32, c: BigInt) -> Self {
        Self::from_poly(p, n, vec![c])
    }

    pub fn one(p: u64, n: u32) -> Self {
        Self::from_int(p, n, BigInt::one())
    }

    pub fn zeta(p: u64, n: u32) -> Self {
        Self::from_poly(p, n, vec![BigInt::zero(), BigInt::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        CyclotomicInt { coeffs, ..*self }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        CyclotomicInt { coeffs, ..*self }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut prod = vec![BigInt::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                prod[i + j] += a * b;
            }
        }
        Self::from_poly(self.p, self.n, prod)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut result = Self::one(self.p, self.n);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        result
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitDiscReport {
    pub p: u64,
    pub n: u32,
    pub terms: u64,
    /// `(1 + T)^(p^n) = 1` in `Z[x]/Φ_(p^n)`.
    pub torsion_identity: bool,
    /// Valuation of the truncated log, normalised so `v(p) = 1`; `None` when it is zero.
    pub valuation: Option<String>,
    pub tail_bound: i64,
    pub bound_met: bool,
}

fn vp_bigint(x: &BigInt, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    while (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

/// Checks that `T = ζ_(p^n) - 1` is a zero of the truncated log series to the precision the
/// tail `Σ_(k>K) T^k/k` allows: `⌊(K+1)/φ⌋ - ⌈log_p K⌉`.
///
/// The series is summed in `Q[T]/E(T)`, `E(T) = Φ_(p^n)(1 + T)` Eisenstein, so `T` is a
/// uniformiser of `Z_p[ζ]` and the valuation of `Σ c_j T^j` is `min_j v_p(c_j) + j/φ`.
pub fn unit_disc_torsion_check(p: u64, n: u32, terms: u64) -> Result<UnitDiscReport, DemoError> {
    if p < 3 || !is_prime_u64(p) {
        return Err(DemoError::InvalidPrime(p));
    }
    let zeta = CyclotomicInt::zeta(p, n);
    let torsion_identity = zeta.pow(p.pow(n)) == CyclotomicInt::one(p, n);
    if n == 0 {
        return Ok(UnitDiscReport { p, n, terms, torsion_identity, valuation: None, tail_bound: 0, bound_met: true });
    }
    let phi = phi_degree(p, n);
    if terms < phi as u64 {
        return Err(DemoError::TooFewTerms { terms, phi: phi as u64 });
    }
    let tail_bound = ((terms + 1) / phi as u64) as i64 - ceil_log(p, terms) as i64;
    if tail_bound < 0 {
        return Err(DemoError::NegativeBound { bound: tail_bound, terms });
    }
    // E(T) = Φ(1 + T): substitute x = 1 + T
    let cyc = cyclotomic_poly(p, n);
    let mut e_poly = vec![BigInt::zero(); cyc.len()];
    let mut binom_row = vec![BigInt::one()];
    for (k, c) in cyc.iter().enumerate() {
        if k > 0 {
            let mut next = vec![BigInt::one(); k + 1];
            for j in 1..k {
                next[j] = &binom_row[j - 1] + &binom_row[j];
            }
            binom_row = next;
        }
        if !c.is_zero() {
            for (j, b) in binom_row.iter().enumerate() {
                e_poly[j] += c * b;
            }
        }
    }
    let mut t_pow = vec![BigInt::one()];
    let mut sum = vec![BigRational::zero(); phi];
    for k in 1..=terms {
        t_pow.insert(0, BigInt::zero());
        t_pow = reduce_monic(t_pow, &e_poly);
        let sign = if k % 2 == 1 { BigInt::one() } else { -BigInt::one() };
        for (s, c) in sum.iter_mut().zip(&t_pow) {
            if !c.is_zero() {
                *s += BigRational::new(c * &sign, BigInt::from(k));
            }
        }
    }
    let valuation = sum
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| {
            let v = vp_bigint(c.numer(), p) - vp_bigint(c.denom(), p);
            BigRational::new(BigInt::from(v * phi as i64 + j as i64), BigInt::from(phi))
        })
        .min();
    let bound_met = valuation.as_ref().is_none_or(|v| *v >= BigRational::from_integer(BigInt::from(tail_bound)));
    Ok(UnitDiscReport {
        p,
        n,
        terms,
        torsion_identity,
        valuation: valuation.map(|v| v.to_string()),
        tail_bound,
        bound_met,
    })
}

/// `∏_k Z/p^(e_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PGroup {
    pub p: u64,
    pub exponents: Vec<u32>,
}

impl PGroup {
    pub fn order(&self) -> u64 {
        self.exponents.iter().map(|&e| self.p.pow(e)).product()
    }

    /// `E` with exponent of the group `p^E`.
    pub fn level(&self) -> u32 {
        self.exponents.iter().copied().max().unwrap_or(0)
    }

    /// Element with mixed-radix index `idx`, first factor fastest.
    pub fn element(&self, mut idx: u64) -> Vec<u64> {
        self.exponents
            .iter()
            .map(|&e| {
                let m = self.p.pow(e);
                let (q, r) = idx.div_rem(&m);
                idx = q;
                r
            })
            .collect()
    }

    /// `⟨c, g⟩` with `χ_c(g) = ζ_(p^E)^⟨c, g⟩`.
    pub fn pairing(&self, c: &[u64], g: &[u64]) -> u64 {
        let top = self.p.pow(self.level());
        self.exponents
            .iter()
            .zip(c.iter().zip(g))
            .map(|(&e, (&a, &b))| a * b % self.p.pow(e) * self.p.pow(self.level() - e))
            .sum::<u64>()
            % top
    }
}

/// `Σ_g c_g [g]` in `Z[G]`, dense in the order of [`PGroup::element`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingElement {
    pub group: PGroup,
    pub coeffs: Vec<BigInt>,
}

impl GroupRingElement {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// `χ_c(x) = Σ_g x_g ζ^⟨c, g⟩`, exactly.
    pub fn character_value(&self, c: &[u64]) -> CyclotomicInt {
        let g = &self.group;
        let level = g.level();
        let top = g.p.pow(level) as usize;
        let mut bins = vec![BigInt::zero(); top];
        for (idx, coef) in self.coeffs.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            bins[g.pairing(c, &g.element(idx as u64)) as usize] += coef;
        }
        CyclotomicInt::from_poly(g.p, level, bins)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalDensityReport {
    pub group: PGroup,
    pub trials: usize,
    pub passed: usize,
    pub seed: u64,
}

impl FormalDensityReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Desk bound on `|G|`.
pub const MAX_GROUP_ORDER: u64 = 729;

/// Random nonzero elements of `Z[G]`, each checked to have some nonzero character value.
pub fn formal_density_check(group: &PGroup, trials: usize, seed: u64) -> Result<FormalDensityReport, DemoError> {
    if group.p < 2 || !is_prime_u64(group.p) {
        return Err(DemoError::InvalidPrime(group.p));
    }
    let order = group.order();
    if order > MAX_GROUP_ORDER {
        return Err(DemoError::GroupTooLarge(order));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for _ in 0..trials {
        let x = loop {
            let coeffs: Vec<BigInt> = (0..order)
                .map(|_| if rng.gen_bool(0.3) { BigInt::from(rng.gen_range(-5i64..=5)) } else { BigInt::zero() })
                .collect();
            let x = GroupRingElement { group: group.clone(), coeffs };
            if !x.is_zero() {
                break x;
            }
        };
        if (0..order).any(|c| !x.character_value(&group.element(c)).is_zero()) {
            passed += 1;
        }
    }
    Ok(FormalDensityReport { group: group.clone(), trials, passed, seed })
}

/// `|(Z_p^× / (1 + p^r))^d / image of closure(Γ(U))|`, by an integer Smith form.
pub fn finite_quotient_order(field: &NumberFieldData, sp: &SplitPrimeData, level: &TameLevel, r: u32) -> Result<BigInt, DemoError> {
    let gamma = gamma_u(field, level).map_err(EigError::from)?;
    let lattice = unit_log_lattice(field, sp, &gamma.generators)?;
    Ok(finite_quotient_order_of(&lattice, field.degree(), r)?)
}
