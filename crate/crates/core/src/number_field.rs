//! Monogenic number fields `K = Q[x]/(f)`, totally split primes and their embeddings
//! into `Z_p`, and the congruence unit subgroup `Γ(U)` of a rational tame level.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat;
use crate::padic::{is_prime_u64, PadicContext, PadicError, PadicInt};

/// Residue rings `O_K/m` are enumerated element by element up to this many elements.
pub const DEFAULT_RESIDUE_RING_BOUND: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum NumberFieldError {
    #[error("malformed field file: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant violated [{check}]: {detail}")]
    Invariant { check: &'static str, detail: String },
    #[error("p = {0} is not totally split in K (or divides disc f)")]
    NotSplit(u64),
    #[error("tame level: {0}")]
    Level(String),
    #[error("residue ring O_K/{m} has {size} elements, above the enumeration bound {bound}")]
    TooLarge { m: u64, size: u128, bound: u64 },
    #[error(transparent)]
    Padic(#[from] PadicError),
}

fn invariant(check: &'static str, detail: impl Into<String>) -> NumberFieldError {
    NumberFieldError::Invariant { check, detail: detail.into() }
}

/// An element of `Z[θ]`, coordinates in the power basis `1, θ, …, θ^(d-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub coords: Vec<BigInt>,
}

impl FieldElement {
    pub fn from_i64(coords: &[i64]) -> Self {
        FieldElement { coords: coords.iter().map(|&c| BigInt::from(c)).collect() }
    }
}

/// On-disk fixture layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldFixture {
    pub label: String,
    /// Integer coefficients of `f`, low degree first.
    pub poly: Vec<i64>,
    pub r1: usize,
    pub r2: usize,
    pub torsion: TorsionFixture,
    pub fundamental_units: Vec<Vec<i64>>,
    pub class_number: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorsionFixture {
    pub order: u64,
    pub element: Vec<i64>,
}

/// A validated monogenic number field.
#[derive(Clone, Debug)]
pub struct NumberFieldData {
    pub label: String,
    /// Monic defining polynomial, low degree first.
    pub poly: Vec<BigInt>,
    pub r1: usize,
    pub r2: usize,
    pub torsion_order: u64,
    pub torsion_generator: FieldElement,
    pub fundamental_units: Vec<FieldElement>,
    pub class_number: u64,
    discriminant: BigInt,
    real_roots: Vec<f64>,
}

impl NumberFieldData {
    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn unit_rank(&self) -> usize {
        self.r1 + self.r2 - 1
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    /// Real roots of `f`, ascending; real place `i` is `θ ↦ real_roots[i]`.
    pub fn real_roots(&self) -> &[f64] {
        &self.real_roots
    }

    pub fn one(&self) -> FieldElement {
        let mut c = vec![BigInt::zero(); self.degree()];
        c[0] = BigInt::one();
        FieldElement { coords: c }
    }

    pub fn theta(&self) -> FieldElement {
        let d = self.degree();
        if d == 1 {
            // θ is the root of x - c, i.e. the integer -f(0)
            return FieldElement { coords: vec![-self.poly[0].clone()] };
        }
        let mut c = vec![BigInt::zero(); d];
        c[1] = BigInt::one();
        FieldElement { coords: c }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let d = self.degree();
        let mut prod = vec![BigInt::zero(); 2 * d - 1];
        for (i, x) in a.coords.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coords.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        reduce_mod_monic(&mut prod, &self.poly);
        prod.truncate(d);
        FieldElement { coords: prod }
    }

    pub fn pow(&self, a: &FieldElement, e: u64) -> FieldElement {
        let mut result = self.one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Matrix of multiplication by `a` in the power basis (column j = a·θ^j).
    pub fn multiplication_matrix(&self, a: &FieldElement) -> intmat::IntMatrix {
        let d = self.degree();
        let mut cols = Vec::with_capacity(d);
        let mut basis = self.one();
        let theta = self.theta();
        for _ in 0..d {
            cols.push(self.mul(a, &basis).coords);
            basis = self.mul(&basis, &theta);
        }
        (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect()
    }

    pub fn norm(&self, a: &FieldElement) -> BigInt {
        intmat::determinant(&self.multiplication_matrix(a))
    }

    /// Inverse of a unit of `Z[θ]`.
    pub fn inverse_unit(&self, u: &FieldElement) -> Result<FieldElement, NumberFieldError> {
        let n = self.norm(u);
        if !n.abs().is_one() {
            return Err(invariant("unit norm", format!("{:?} has norm {n}", u.coords)));
        }
        let inv = intmat::inverse_unimodular(&self.multiplication_matrix(u));
        Ok(FieldElement { coords: inv.iter().map(|row| row[0].clone()).collect() })
    }

    /// `ζ^e0 · ∏ ε_j^e_j` for an exponent vector over (torsion generator, fundamental units).
    pub fn unit_from_exponents(&self, exps: &[BigInt]) -> Result<FieldElement, NumberFieldError> {
        let gens = self.unit_generators();
        if exps.len() != gens.len() {
            return Err(NumberFieldError::Level("exponent vector has the wrong length".into()));
        }
        let mut acc = self.one();
        for (g, e) in gens.iter().zip(exps) {
            let base = if e.is_negative() { self.inverse_unit(g)? } else { g.clone() };
            let mag = e.magnitude().to_u64().ok_or_else(|| NumberFieldError::Level("exponent too large".into()))?;
            acc = self.mul(&acc, &self.pow(&base, mag));
        }
        Ok(acc)
    }

    /// Torsion generator followed by the fundamental units.
    pub fn unit_generators(&self) -> Vec<FieldElement> {
        let mut g = vec![self.torsion_generator.clone()];
        g.extend(self.fundamental_units.iter().cloned());
        g
    }

    /// Value of `a` at the real place `i`.
    pub fn real_embedding(&self, a: &FieldElement, place: usize) -> f64 {
        let r = self.real_roots[place];
        a.coords.iter().rev().fold(0.0, |acc, c| acc * r + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn from_fixture(fx: FieldFixture) -> Result<Self, NumberFieldError> {
        if fx.poly.len() < 2 {
            return Err(invariant("degree", "defining polynomial must have degree >= 1"));
        }
        if *fx.poly.last().unwrap() != 1 {
            return Err(invariant("monic", "defining polynomial must be monic"));
        }
        let poly: Vec<BigInt> = fx.poly.iter().map(|&c| BigInt::from(c)).collect();
        let d = poly.len() - 1;
        if fx.r1 + 2 * fx.r2 != d {
            return Err(invariant("signature", format!("r1 + 2 r2 = {} but degree is {d}", fx.r1 + 2 * fx.r2)));
        }
        if d >= 2 {
            if let Some(r) = rational_root(&fx.poly) {
                return Err(invariant("irreducibility screen", format!("f has the rational root {r}")));
            }
        }
        let real_roots = real_roots(&fx.poly);
        if real_roots.len() != fx.r1 {
            return Err(invariant(
                "signature",
                format!("f has {} real roots but r1 = {}", real_roots.len(), fx.r1),
            ));
        }
        let check_len = |c: &[i64], what: &str| -> Result<FieldElement, NumberFieldError> {
            if c.is_empty() || c.len() > d {
                return Err(NumberFieldError::Malformed(format!("{what} must have 1..={d} coefficients")));
            }
            let mut v: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
            v.resize(d, BigInt::zero());
            Ok(FieldElement { coords: v })
        };
        let torsion_generator = check_len(&fx.torsion.element, "torsion element")?;
        let fundamental_units = fx
            .fundamental_units
            .iter()
            .map(|u| check_len(u, "fundamental unit"))
            .collect::<Result<Vec<_>, _>>()?;
        if fx.class_number == 0 {
            return Err(invariant("class number", "class number must be positive"));
        }
        if fx.torsion.order == 0 || fx.torsion.order % 2 == 1 {
            return Err(invariant("torsion order", format!("w = {} must be even and positive", fx.torsion.order)));
        }
        let discriminant = discriminant(&poly);
        let field = NumberFieldData {
            label: fx.label,
            poly,
            r1: fx.r1,
            r2: fx.r2,
            torsion_order: fx.torsion.order,
            torsion_generator,
            fundamental_units,
            class_number: fx.class_number,
            discriminant,
            real_roots,
        };
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<(), NumberFieldError> {
        if self.fundamental_units.len() != self.unit_rank() {
            return Err(invariant(
                "unit count",
                format!("{} fundamental units listed, unit rank r1 + r2 - 1 = {}", self.fundamental_units.len(), self.unit_rank()),
            ));
        }
        for u in &self.fundamental_units {
            let n = self.norm(u);
            if !n.abs().is_one() {
                return Err(invariant("unit norm", format!("{:?} has norm {n}, not ±1", u.coords)));
            }
        }
        let w = self.torsion_order;
        let z = &self.torsion_generator;
        if self.pow(z, w) != self.one() {
            return Err(invariant("torsion order", format!("torsion generator does not satisfy ζ^{w} = 1")));
        }
        for q in prime_factors(w) {
            if self.pow(z, w / q) == self.one() {
                return Err(invariant("torsion order", format!("torsion generator has order dividing {}", w / q)));
            }
        }
        if self.degree() == 2 && self.r2 == 1 {
            let disc = self.discriminant.to_i64().ok_or_else(|| invariant("class number", "discriminant too large"))?;
            let h = reduced_form_count(disc);
            if h != self.class_number {
                return Err(invariant(
                    "class number",
                    format!("{h} reduced forms of discriminant {disc}, fixture says h = {}", self.class_number),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, NumberFieldError> {
        let fx: FieldFixture = serde_json::from_str(s).map_err(|e| NumberFieldError::Malformed(e.to_string()))?;
        Self::from_fixture(fx)
    }

    pub fn fixture(&self) -> FieldFixture {
        let small = |c: &FieldElement| c.coords.iter().map(|x| x.to_i64().unwrap_or(0)).collect::<Vec<_>>();
        FieldFixture {
            label: self.label.clone(),
            poly: self.poly.iter().map(|x| x.to_i64().unwrap_or(0)).collect(),
            r1: self.r1,
            r2: self.r2,
            torsion: TorsionFixture { order: self.torsion_order, element: small(&self.torsion_generator) },
            fundamental_units: self.fundamental_units.iter().map(small).collect(),
            class_number: self.class_number,
        }
    }
}

/// Summary of a loaded field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub label: String,
    pub degree: usize,
    pub r1: usize,
    pub r2: usize,
    #[serde(with = "crate::util::big_str")]
    pub discriminant: BigInt,
    pub class_number: u64,
    pub torsion_order: u64,
    pub unit_rank: usize,
    #[serde(with = "crate::util::big_vec_str")]
    pub unit_norms: Vec<BigInt>,
    pub real_roots: Vec<f64>,
    pub split_prime_limit: u64,
    pub split_primes: Vec<u64>,
}

pub fn field_info(field: &NumberFieldData, limit: u64) -> FieldInfo {
    FieldInfo {
        label: field.label.clone(),
        degree: field.degree(),
        r1: field.r1,
        r2: field.r2,
        discriminant: field.discriminant.clone(),
        class_number: field.class_number,
        torsion_order: field.torsion_order,
        unit_rank: field.unit_rank(),
        unit_norms: field.fundamental_units.iter().map(|u| field.norm(u)).collect(),
        real_roots: field.real_roots.clone(),
        split_prime_limit: limit,
        split_primes: split_prime_search(field, limit),
    }
}

/// Loads and validates a field fixture. A path without extension also tries `.json`.
pub fn load_field(path: impl AsRef<Path>) -> Result<NumberFieldData, NumberFieldError> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if path.extension().is_none() => {
            std::fs::read_to_string(path.with_extension("json")).map_err(|_| NumberFieldError::Io(e))?
        }
        Err(e) => return Err(e.into()),
    };
    NumberFieldData::from_json_str(&text)
}

fn reduce_mod_monic(prod: &mut Vec<BigInt>, f: &[BigInt]) {
    let d = f.len() - 1;
    for k in (d..prod.len()).rev() {
        let c = std::mem::take(&mut prod[k]);
        if c.is_zero() {
            continue;
        }
        for j in 0..d {
            prod[k - d + j] -= &c * &f[j];
        }
    }
}

/// Number of reduced primitive positive definite forms `ax² + bxy + cy²` of discriminant `disc < 0`.
pub fn reduced_form_count(disc: i64) -> u64 {
    let mut count = 0;
    let mut a = 1i64;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            if a.gcd(&b).gcd(&c) == 1 {
                count += 1;
            }
        }
        a += 1;
    }
    count
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn rational_root(poly: &[i64]) -> Option<i64> {
    // monic: rational roots are integer divisors of the constant term
    let c0 = poly[0];
    if c0 == 0 {
        return Some(0);
    }
    let eval = |x: i64| poly.iter().rev().fold(BigInt::zero(), |acc, &c| acc * x + c);
    let a = c0.unsigned_abs();
    (1..=a).filter(|k| a % k == 0).flat_map(|k| [k as i64, -(k as i64)]).find(|&r| eval(r).is_zero())
}

/// Real roots of an integer polynomial (Durand–Kerner), ascending.
fn real_roots(poly: &[i64]) -> Vec<f64> {
    let d = poly.len() - 1;
    let lead = poly[d] as f64;
    let coeffs: Vec<f64> = poly.iter().map(|&c| c as f64 / lead).collect();
    if d == 1 {
        return vec![-coeffs[0]];
    }
    let eval = |z: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..d {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    let mut real: Vec<f64> =
        roots.iter().filter(|z| z.im.abs() < 1e-7 * (1.0 + z.re.abs())).map(|z| z.re).collect();
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    real
}

/// Discriminant of a monic polynomial via the Sylvester resultant `Res(f, f')`.
fn discriminant(f: &[BigInt]) -> BigInt {
    let d = f.len() - 1;
    if d == 1 {
        return BigInt::one();
    }
    let df: Vec<BigInt> = (1..=d).map(|i| &f[i] * BigInt::from(i)).collect();
    let n = 2 * d - 1;
    let mut syl = vec![vec![BigInt::zero(); n]; n];
    // rows: d-1 shifts of f (degree d), d shifts of f' (degree d-1); coefficients high first
    for r in 0..d - 1 {
        for (k, c) in f.iter().rev().enumerate() {
            syl[r][r + k] = c.clone();
        }
    }
    for r in 0..d {
        for (k, c) in df.iter().rev().enumerate() {
            syl[d - 1 + r][r + k] = c.clone();
        }
    }
    let res = intmat::determinant(&syl);
    if (d * (d - 1) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

// --- polynomials over F_p -------------------------------------------------------------

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_mod_p(f: &[BigInt], p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    trim(f.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect())
}

fn pmulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u128 + x as u128 * y as u128) % p as u128) as u64;
        }
    }
    prem(prod, f, p)
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(p as i128));
    e.x.mod_floor(&(p as i128)) as u64
}

/// Remainder of `a` modulo `b` over F_p.
fn prem(a: Vec<u64>, b: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a);
    let db = b.len() - 1;
    let inv_lead = inv_mod(b[db], p);
    while a.len() > db {
        let top = a.len() - 1;
        let c = (a[top] as u128 * inv_lead as u128 % p as u128) as u64;
        if c != 0 {
            for j in 0..=db {
                let idx = top - db + j;
                let sub = (c as u128 * b[j] as u128 % p as u128) as u64;
                a[idx] = (a[idx] + p - sub) % p;
            }
        }
        a = trim(a);
    }
    a
}

fn pgcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    a = trim(a);
    b = trim(b);
    while !b.is_empty() {
        let r = prem(a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Degree of `gcd(x^p - x, f)` over F_p: the number of distinct roots of `f` mod p.
fn distinct_root_count(f: &[BigInt], p: u64) -> usize {
    let fp = poly_mod_p(f, p);
    if fp.len() <= 1 {
        return 0;
    }
    let mut result = vec![1u64];
    let mut base = prem(vec![0, 1], &fp, p);
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = pmulmod(&result, &base, &fp, p);
        }
        base = pmulmod(&base, &base, &fp, p);
        e >>= 1;
    }
    let mut xp_minus_x = result;
    xp_minus_x.resize(xp_minus_x.len().max(2), 0);
    xp_minus_x[1] = (xp_minus_x[1] + p - 1) % p;
    let g = pgcd(fp, xp_minus_x, p);
    g.len().saturating_sub(1)
}

/// Odd primes `p <= limit`, `p ∤ disc f`, with `f` splitting into distinct linear factors mod p.
pub fn split_prime_search(field: &NumberFieldData, limit: u64) -> Vec<u64> {
    let d = field.degree();
    (3..=limit)
        .filter(|&p| is_prime_u64(p))
        .filter(|&p| !(field.discriminant() % BigInt::from(p)).is_zero())
        .filter(|&p| distinct_root_count(&field.poly, p) == d)
        .collect()
}

/// The `d` embeddings `K → Q_p` at a totally split prime, as roots of `f` in `Z/p^N`.
#[derive(Clone, Debug)]
pub struct SplitPrimeData {
    pub ctx: Arc<PadicContext>,
    /// Roots ordered by their residue mod p.
    pub roots: Vec<PadicInt>,
}

impl SplitPrimeData {
    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }
}

fn eval_padic(f: &[BigInt], x: &PadicInt) -> PadicInt {
    let ctx = x.ctx();
    f.iter().rev().fold(PadicInt::zero(ctx), |acc, c| acc * x + PadicInt::from_bigint(ctx, c))
}

pub fn hensel_embeddings(field: &NumberFieldData, p: u64, precision: u32) -> Result<SplitPrimeData, NumberFieldError> {
    let ctx = PadicContext::new(p, precision)?;
    if (field.discriminant() % BigInt::from(p)).is_zero() {
        return Err(NumberFieldError::NotSplit(p));
    }
    let d = field.degree();
    let fp = poly_mod_p(&field.poly, p);
    let eval_mod = |x: u64| fp.iter().rev().fold(0u128, |acc, &c| (acc * x as u128 + c as u128) % p as u128);
    let roots_mod_p: Vec<u64> = (0..p).filter(|&x| eval_mod(x) == 0).collect();
    if roots_mod_p.len() != d {
        return Err(NumberFieldError::NotSplit(p));
    }
    let df: Vec<BigInt> = (1..=d).map(|i| &field.poly[i] * BigInt::from(i)).collect();
    let mut roots = Vec::with_capacity(d);
    for r in roots_mod_p {
        let mut x = PadicInt::from_i64(&ctx, r as i64);
        // Newton: precision doubles each step
        for _ in 0..=(u32::BITS - precision.leading_zeros()) + 1 {
            let fx = eval_padic(&field.poly, &x);
            if fx.is_zero() {
                break;
            }
            let dfx = eval_padic(&df, &x);
            x = &x - &(fx * dfx.invert().map_err(|_| NumberFieldError::NotSplit(p))?);
        }
        if !eval_padic(&field.poly, &x).is_zero() {
            return Err(NumberFieldError::NotSplit(p));
        }
        roots.push(x);
    }
    Ok(SplitPrimeData { ctx, roots })
}

/// `(σ_1(x), …, σ_d(x))` in `Z/p^N`.
pub fn embed(x: &FieldElement, sp: &SplitPrimeData) -> Vec<PadicInt> {
    sp.roots
        .iter()
        .map(|theta| {
            x.coords
                .iter()
                .rev()
                .fold(PadicInt::zero(&sp.ctx), |acc, c| acc * theta + PadicInt::from_bigint(&sp.ctx, c))
        })
        .collect()
}

/// Rational congruence level `m` plus positivity at selected real places.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TameLevel {
    pub modulus: u64,
    /// Indices into [`NumberFieldData::real_roots`].
    pub signs: Vec<usize>,
}

impl TameLevel {
    pub fn new(modulus: u64, signs: Vec<usize>) -> Self {
        let mut signs = signs;
        signs.sort_unstable();
        signs.dedup();
        TameLevel { modulus, signs }
    }

    pub fn trivial() -> Self {
        TameLevel { modulus: 1, signs: Vec::new() }
    }

    pub fn check(&self, field: &NumberFieldData, p: Option<u64>) -> Result<(), NumberFieldError> {
        if self.modulus == 0 {
            return Err(NumberFieldError::Level("modulus m must be positive".into()));
        }
        if let Some(p) = p {
            if self.modulus % p == 0 {
                return Err(NumberFieldError::Level(format!("gcd(m, p) != 1 for m = {}, p = {p}", self.modulus)));
            }
        }
        if let Some(&s) = self.signs.iter().find(|&&s| s >= field.r1) {
            return Err(NumberFieldError::Level(format!("sign place {s} but K has {} real places", field.r1)));
        }
        Ok(())
    }
}

/// Element of `(O_K/m)^× × {±1}^signs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct RayElement {
    residue: Vec<i64>,
    negative: Vec<bool>,
}

struct ResidueRing<'a> {
    field: &'a NumberFieldData,
    m: i64,
    poly: Vec<i64>,
}

impl<'a> ResidueRing<'a> {
    fn new(field: &'a NumberFieldData, m: u64) -> Self {
        let mb = BigInt::from(m);
        let poly = field.poly.iter().map(|c| c.mod_floor(&mb).to_i64().unwrap()).collect();
        ResidueRing { field, m: m as i64, poly }
    }

    fn reduce(&self, x: &FieldElement) -> Vec<i64> {
        let mb = BigInt::from(self.m);
        x.coords.iter().map(|c| c.mod_floor(&mb).to_i64().unwrap()).collect()
    }

    fn mul(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        let d = self.field.degree();
        let m = self.m as i128;
        let mut prod = vec![0i128; 2 * d - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as i128 * y as i128) % m;
            }
        }
        for k in (d..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for j in 0..d {
                prod[k - d + j] = (prod[k - d + j] - c * self.poly[j] as i128).rem_euclid(m);
            }
        }
        prod.truncate(d);
        prod.into_iter().map(|x| x.rem_euclid(m) as i64).collect()
    }

    fn size(&self) -> u128 {
        (self.m as u128).pow(self.field.degree() as u32)
    }

    fn unit_count(&self) -> u64 {
        let d = self.field.degree();
        let m = self.m;
        let mut count = 0;
        let mut x = vec![0i64; d];
        loop {
            let fe = FieldElement { coords: x.iter().map(|&c| BigInt::from(c)).collect() };
            let det = intmat::determinant(&self.field.multiplication_matrix(&fe));
            if det.gcd(&BigInt::from(m)).is_one() {
                count += 1;
            }
            // odometer over (Z/m)^d
            let mut k = 0;
            loop {
                if k == d {
                    return count;
                }
                x[k] += 1;
                if x[k] < m {
                    break;
                }
                x[k] = 0;
                k += 1;
            }
        }
    }
}

/// `Γ(U)` as exponent vectors over (torsion generator, fundamental units).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaU {
    /// Hermite basis of `{e ∈ Z^(1+r) : ζ^e0 ∏ ε_j^e_j ∈ Γ(U)}`.
    #[serde(with = "crate::util::big_mat_str")]
    pub generators: Vec<Vec<BigInt>>,
    /// `[O_K^× : Γ(U)]`, the order of the image of the units in `(O_K/m)^× × {±1}^signs`.
    pub index: u64,
}

/// Kernel of the unit group in `(O_K/m)^× × {±1}^signs`.
///
/// The image subgroup is closed one generator at a time: `g_j` has order `o_j` modulo the
/// subgroup generated by `g_0 … g_(j-1)`, and `g_j^o_j` is expressed in the earlier
/// generators. These relations form a triangular basis of the kernel lattice, and the
/// index is `∏ o_j`.
pub fn gamma_u(field: &NumberFieldData, level: &TameLevel) -> Result<GammaU, NumberFieldError> {
    gamma_u_bounded(field, level, DEFAULT_RESIDUE_RING_BOUND)
}

pub fn gamma_u_bounded(field: &NumberFieldData, level: &TameLevel, bound: u64) -> Result<GammaU, NumberFieldError> {
    level.check(field, None)?;
    let ring = ResidueRing::new(field, level.modulus);
    if ring.size() > bound as u128 {
        return Err(NumberFieldError::TooLarge { m: level.modulus, size: ring.size(), bound });
    }
    let gens = field.unit_generators();
    let k = gens.len();
    let images: Vec<RayElement> = gens
        .iter()
        .map(|g| RayElement {
            residue: ring.reduce(g),
            negative: level.signs.iter().map(|&s| field.real_embedding(g, s) < 0.0).collect(),
        })
        .collect();
    let mul = |a: &RayElement, b: &RayElement| RayElement {
        residue: ring.mul(&a.residue, &b.residue),
        negative: a.negative.iter().zip(&b.negative).map(|(x, y)| x ^ y).collect(),
    };
    let identity = RayElement { residue: ring.reduce(&field.one()), negative: vec![false; level.signs.len()] };

    let mut subgroup: HashMap<RayElement, Vec<i64>> = HashMap::new();
    subgroup.insert(identity, vec![0; k]);
    let mut relations: Vec<Vec<BigInt>> = Vec::with_capacity(k);
    let mut index: u64 = 1;
    for (j, g) in images.iter().enumerate() {
        let mut cur = g.clone();
        let mut order: i64 = 1;
        while !subgroup.contains_key(&cur) {
            cur = mul(&cur, g);
            order += 1;
        }
        let mut rel: Vec<BigInt> = subgroup[&cur].iter().map(|&x| BigInt::from(-x)).collect();
        rel[j] += order;
        relations.push(rel);
        if order > 1 {
            let old: Vec<(RayElement, Vec<i64>)> = subgroup.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
            for (h, v) in old {
                let mut x = h;
                for s in 1..order {
                    x = mul(&x, g);
                    let mut vec = v.clone();
                    vec[j] += s;
                    subgroup.insert(x.clone(), vec);
                }
            }
        }
        index *= order as u64;
    }
    Ok(GammaU { generators: intmat::hermite_rows(&relations), index })
}

/// `|(O_K/m)^×|`, by enumeration.
pub fn residue_unit_count(field: &NumberFieldData, m: u64) -> Result<u64, NumberFieldError> {
    if m == 0 {
        return Err(NumberFieldError::Level("modulus m must be positive".into()));
    }
    let ring = ResidueRing::new(field, m);
    if ring.size() > DEFAULT_RESIDUE_RING_BOUND as u128 {
        return Err(NumberFieldError::TooLarge { m, size: ring.size(), bound: DEFAULT_RESIDUE_RING_BOUND });
    }
    Ok(ring.unit_count())
}

/// `h · |(O_K/m)^×| · 2^|signs| / [O_K^× : Γ(U)]`.
pub fn ray_class_order(field: &NumberFieldData, level: &TameLevel) -> Result<u64, NumberFieldError> {
    let gamma = gamma_u(field, level)?;
    ray_class_order_with(field, level, &gamma)
}

pub fn ray_class_order_with(field: &NumberFieldData, level: &TameLevel, gamma: &GammaU) -> Result<u64, NumberFieldError> {
    let units = residue_unit_count(field, level.modulus)?;
    let num = field.class_number as u128 * units as u128 * (1u128 << level.signs.len());
    if num % gamma.index as u128 != 0 {
        return Err(invariant(
            "ray class order",
            format!("h·|(O/m)^×|·2^s = {num} is not divisible by the unit index {}", gamma.index),
        ));
    }
    Ok((num / gamma.index as u128) as u64)
}
