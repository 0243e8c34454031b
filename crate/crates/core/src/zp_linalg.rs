//! Linear algebra over `Z/p^N` with minimal-valuation pivoting.
//!
//! `Z/p^N` cannot tell a true relation from one of valuation `>= N`, so every rank
//! statement here is "rank at precision N with slack s": a divisor of valuation
//! `>= N - s` counts as zero.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::{self, IntMatrix};
use crate::padic::{PadicContext, PadicInt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("bound {bound} too large for precision p^{precision} (need 2B+1 < p^N)")]
    BoundTooLarge { bound: BigInt, precision: u32 },
    #[error("lattice basis is not saturated at precision {0}")]
    NotSaturated(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Default slack `ceil(N/4)`.
pub fn default_slack(precision: u32) -> u32 {
    precision.div_ceil(4)
}

/// Dense row-major matrix over `Z/p^N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZpMatrix {
    ctx: Arc<PadicContext>,
    rows: usize,
    cols: usize,
    entries: Vec<PadicInt>,
}

impl ZpMatrix {
    pub fn new(ctx: &Arc<PadicContext>, rows: usize, cols: usize, entries: Vec<PadicInt>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        if entries.iter().any(|e| **e.ctx() != **ctx) {
            return Err(LinalgError::Dimension("entries from a different context".into()));
        }
        Ok(ZpMatrix { ctx: ctx.clone(), rows, cols, entries })
    }

    pub fn from_rows(ctx: &Arc<PadicContext>, cols: usize, rows: Vec<Vec<PadicInt>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Self::new(ctx, n, cols, rows.into_iter().flatten().collect())
    }

    pub fn from_i64(ctx: &Arc<PadicContext>, rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let entries = rows.iter().flat_map(|r| r.iter().map(|&x| PadicInt::from_i64(ctx, x))).collect();
        ZpMatrix { ctx: ctx.clone(), rows: rows.len(), cols, entries }
    }

    pub fn zeros(ctx: &Arc<PadicContext>, rows: usize, cols: usize) -> Self {
        ZpMatrix { ctx: ctx.clone(), rows, cols, entries: vec![PadicInt::zero(ctx); rows * cols] }
    }

    pub fn identity(ctx: &Arc<PadicContext>, n: usize) -> Self {
        let mut m = Self::zeros(ctx, n, n);
        for i in 0..n {
            m.entries[i * n + i] = PadicInt::one(ctx);
        }
        m
    }

    pub fn ctx(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &PadicInt {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[PadicInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<PadicInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(PadicInt::is_zero)
    }

    pub fn mul(&self, other: &ZpMatrix) -> Result<ZpMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = PadicInt::zero(&self.ctx);
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                out.push(acc);
            }
        }
        ZpMatrix::new(&self.ctx, self.rows, other.cols, out)
    }

    /// `M v` for a column vector `v`.
    pub fn apply(&self, v: &[PadicInt]) -> Vec<PadicInt> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(PadicInt::zero(&self.ctx), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn transpose(&self) -> ZpMatrix {
        let mut out = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j).clone());
            }
        }
        ZpMatrix { ctx: self.ctx.clone(), rows: self.cols, cols: self.rows, entries: out }
    }
}

fn axpy(target: &mut [PadicInt], q: &PadicInt, source: &[PadicInt]) {
    for (t, s) in target.iter_mut().zip(source) {
        *t = &*t - &(q * s);
    }
}

fn scale(row: &mut [PadicInt], q: &PadicInt) {
    for x in row.iter_mut() {
        *x = &*x * q;
    }
}

/// Howell form `H = T M` together with the pivot data used for membership tests.
#[derive(Clone, Debug)]
pub struct HowellForm {
    pub h: ZpMatrix,
    pub transform: ZpMatrix,
    /// `(column, valuation)` of each row's pivot; the pivot entry is exactly `p^valuation`.
    pub pivots: Vec<(usize, u32)>,
}

impl HowellForm {
    /// Reduces `v` against the rows of `H`. Returns the remainder, which is zero exactly
    /// when `v` lies in the row span.
    pub fn reduce(&self, v: &[PadicInt]) -> Vec<PadicInt> {
        let mut v = v.to_vec();
        for (i, &(col, a)) in self.pivots.iter().enumerate() {
            if v[col].is_zero() || v[col].valuation() < a {
                continue;
            }
            let q = v[col].div_exact(self.h.get(i, col)).expect("valuation checked");
            axpy(&mut v, &q, self.h.row(i));
        }
        v
    }

    pub fn contains(&self, v: &[PadicInt]) -> bool {
        self.reduce(v).iter().all(PadicInt::is_zero)
    }

    pub fn pivot_valuations(&self) -> Vec<u32> {
        self.pivots.iter().map(|&(_, a)| a).collect()
    }
}

/// Canonical Howell form over `Z/p^N`.
///
/// Column by column, the minimal-valuation entry is moved up and normalised to `p^a`;
/// when `a > 0` the row `p^(N-a) * pivot` (which vanishes in the pivot column) is fed
/// back so that the span of the rows with a given number of leading zeros is generated
/// by the rows of `H` with that many leading zeros.
pub fn howell_form(m: &ZpMatrix) -> HowellForm {
    let ctx = m.ctx.clone();
    let n = ctx.precision();
    let (rows, cols) = (m.rows, m.cols);
    let mut work: Vec<Vec<PadicInt>> = (0..rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.extend((0..rows).map(|j| if i == j { PadicInt::one(&ctx) } else { PadicInt::zero(&ctx) }));
            r
        })
        .collect();
    let mut result: Vec<(usize, u32, Vec<PadicInt>)> = Vec::new();
    for col in 0..cols {
        let best = work
            .iter()
            .enumerate()
            .filter(|(_, r)| !r[col].is_zero())
            .min_by_key(|(_, r)| r[col].valuation())
            .map(|(i, _)| i);
        let Some(idx) = best else { continue };
        let mut pivot = work.swap_remove(idx);
        let a = pivot[col].valuation();
        let pa = PadicInt::from_biguint(&ctx, ctx.p_pow(a));
        let unit = pivot[col].div_exact(&pa).expect("pivot has valuation a");
        scale(&mut pivot, &unit.invert().expect("unit part"));
        for r in work.iter_mut() {
            if !r[col].is_zero() {
                let q = r[col].div_exact(&pivot[col]).expect("pivot valuation is minimal");
                axpy(r, &q, &pivot);
            }
        }
        if a > 0 {
            let k = PadicInt::from_biguint(&ctx, ctx.p_pow(n - a));
            let extra: Vec<PadicInt> = pivot.iter().map(|x| x * &k).collect();
            work.push(extra);
        }
        work.retain(|r| r[..cols].iter().any(|x| !x.is_zero()));
        result.push((col, a, pivot));
    }
    // reduce entries above each pivot into [0, p^a)
    for i in 0..result.len() {
        let (col, a) = (result[i].0, result[i].1);
        let pa = ctx.p_pow(a);
        let pivot_row = result[i].2.clone();
        for j in 0..i {
            let q = result[j].2[col].residue() / &pa;
            if !q.is_zero() {
                axpy(&mut result[j].2, &PadicInt::from_biguint(&ctx, q), &pivot_row);
            }
        }
    }
    let pivots = result.iter().map(|(c, a, _)| (*c, *a)).collect();
    let h_rows: Vec<Vec<PadicInt>> = result.iter().map(|(_, _, r)| r[..cols].to_vec()).collect();
    let t_rows: Vec<Vec<PadicInt>> = result.iter().map(|(_, _, r)| r[cols..].to_vec()).collect();
    HowellForm {
        h: ZpMatrix::from_rows(&ctx, cols, h_rows).expect("well-formed"),
        transform: ZpMatrix::from_rows(&ctx, rows, t_rows).expect("well-formed"),
        pivots,
    }
}

/// Elementary divisor valuations of a matrix over `Z/p^N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmithStructure {
    /// `a_1 <= ... <= a_r`, `r = min(rows, cols)`; `N` marks an entry that is 0 mod `p^N`.
    pub valuations: Vec<u32>,
    pub precision: u32,
    pub slack: u32,
}

impl SmithStructure {
    pub fn threshold(&self) -> u32 {
        self.precision.saturating_sub(self.slack)
    }

    pub fn is_zero_at_precision(&self, a: u32) -> bool {
        a >= self.threshold()
    }

    /// Number of divisors that are nonzero at precision: the rank at precision N with slack s.
    pub fn rank(&self) -> usize {
        self.valuations.iter().filter(|&&a| !self.is_zero_at_precision(a)).count()
    }

    /// Largest nonzero-at-precision valuation, i.e. the divisor closest to the threshold.
    pub fn max_nonzero_valuation(&self) -> Option<u32> {
        self.valuations.iter().copied().filter(|&a| !self.is_zero_at_precision(a)).max()
    }
}

/// Smith decomposition `left * M * right = diag(p^a_i)` with the transforms.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub valuations: Vec<u32>,
    pub left: ZpMatrix,
    pub right: ZpMatrix,
}

pub fn smith_decomposition(m: &ZpMatrix) -> SmithDecomposition {
    let ctx = m.ctx.clone();
    let n = ctx.precision();
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.to_rows();
    let mut left = ZpMatrix::identity(&ctx, rows).to_rows();
    // right is stored transposed so column operations become row operations
    let mut right_t = ZpMatrix::identity(&ctx, cols).to_rows();
    let r = rows.min(cols);
    let mut valuations = Vec::with_capacity(r);
    for k in 0..r {
        let mut best: Option<(usize, usize, u32)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                if !x.is_zero() {
                    let v = x.valuation();
                    if best.map_or(true, |(_, _, bv)| v < bv) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((bi, bj, v)) = best else {
            valuations.extend(std::iter::repeat(n).take(r - k));
            break;
        };
        a.swap(k, bi);
        left.swap(k, bi);
        for row in a.iter_mut() {
            row.swap(k, bj);
        }
        right_t.swap(k, bj);
        let pa = PadicInt::from_biguint(&ctx, ctx.p_pow(v));
        let unit_inv = a[k][k].div_exact(&pa).expect("valuation v").invert().expect("unit");
        scale(&mut a[k], &unit_inv);
        scale(&mut left[k], &unit_inv);
        let pivot_row = a[k].clone();
        let pivot_left = left[k].clone();
        for i in k + 1..rows {
            if !a[i][k].is_zero() {
                let q = a[i][k].div_exact(&pa).expect("pivot valuation is minimal");
                axpy(&mut a[i], &q, &pivot_row);
                axpy(&mut left[i], &q, &pivot_left);
            }
        }
        for j in k + 1..cols {
            if !a[k][j].is_zero() {
                let q = a[k][j].div_exact(&pa).expect("pivot valuation is minimal");
                // column j -= q * column k; only row k is nonzero in column k now
                a[k][j] = PadicInt::zero(&ctx);
                let src = right_t[k].clone();
                axpy(&mut right_t[j], &q, &src);
            }
        }
        valuations.push(v);
    }
    let left = ZpMatrix::from_rows(&ctx, rows, left).expect("well-formed");
    let right = ZpMatrix::from_rows(&ctx, cols, right_t).expect("well-formed").transpose();
    SmithDecomposition { valuations, left, right }
}

pub fn smith_structure(m: &ZpMatrix, slack: u32) -> SmithStructure {
    SmithStructure { valuations: smith_decomposition(m).valuations, precision: m.ctx.precision(), slack }
}

/// A family of vectors in `Z_p^d` known at the precision of `ctx`.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    pub ctx: Arc<PadicContext>,
    pub dim: usize,
    pub vectors: Vec<Vec<PadicInt>>,
    pub saturated: bool,
}

impl LatticeBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn full(ctx: &Arc<PadicContext>, dim: usize) -> Self {
        LatticeBasis { ctx: ctx.clone(), dim, vectors: ZpMatrix::identity(ctx, dim).to_rows(), saturated: true }
    }
}

/// Saturated basis of `{v : M v ≡ 0 mod p^(N - slack)}`.
///
/// With `left * M * right = D`, the kernel is spanned by the columns of `right` whose
/// divisor is zero at precision. Those columns are part of a basis of `Z_p^cols`, so the
/// result is saturated.
pub fn kernel_lattice(m: &ZpMatrix, slack: u32) -> LatticeBasis {
    let dec = smith_decomposition(m);
    let structure = SmithStructure { valuations: dec.valuations.clone(), precision: m.ctx.precision(), slack };
    let rank = structure.rank();
    let vectors = (rank..m.cols).map(|j| (0..m.cols).map(|i| dec.right.get(i, j).clone()).collect()).collect();
    LatticeBasis { ctx: m.ctx.clone(), dim: m.cols, vectors, saturated: true }
}

/// Finitely generated `Z_p`-module (and, for its finite part, abelian group) read at precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    pub p: u64,
    pub free_rank: usize,
    /// Invariant factors of the finite part, each dividing the next.
    #[serde(with = "crate::util::big_vec_str")]
    pub torsion_orders: Vec<BigInt>,
    /// Valuations of the `p`-adic divisors the free rank and `p`-torsion were read from.
    pub divisor_valuations: Vec<u32>,
    pub precision: u32,
    pub slack: u32,
}

impl GroupStructure {
    pub fn torsion_order(&self) -> BigInt {
        self.torsion_orders.iter().fold(BigInt::one(), |acc, t| acc * t)
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion_orders.is_empty()
    }
}

/// A generator of a subgroup of `Z_p^d × ∏ Z/t_k`.
#[derive(Clone, Debug)]
pub struct SubgroupGenerator {
    pub free: Vec<PadicInt>,
    pub torsion: Vec<BigInt>,
}

/// Merges invariant factor lists of two groups of coprime order.
fn merge_coprime(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    let pad = |xs: &[BigInt]| {
        let mut v = vec![BigInt::one(); n - xs.len()];
        v.extend_from_slice(xs);
        v
    };
    pad(a).into_iter().zip(pad(b)).map(|(x, y)| x * y).filter(|x| !x.is_one()).collect()
}

/// Structure of `(Z_p^d × ∏ Z/t_k) / closure⟨gens⟩`.
///
/// The prime-to-`p` part of the torsion is handled by an exact integer Smith form; the
/// free part together with the `p`-primary torsion by a Smith form over `Z/p^N`.
pub fn quotient_structure(
    ctx: &Arc<PadicContext>,
    gens: &[SubgroupGenerator],
    ambient_rank: usize,
    ambient_torsion: &[u64],
    slack: u32,
) -> Result<GroupStructure, LinalgError> {
    let p = ctx.p();
    let n = ctx.precision();
    for g in gens {
        if g.free.len() != ambient_rank || g.torsion.len() != ambient_torsion.len() {
            return Err(LinalgError::Dimension("generator does not live in the ambient group".into()));
        }
    }
    let mut p_exps = Vec::new();
    let mut coprime = Vec::new();
    for &t in ambient_torsion {
        let mut t2 = t;
        let mut e = 0u32;
        while t2 % p == 0 {
            t2 /= p;
            e += 1;
        }
        p_exps.push(e);
        coprime.push(t2);
    }

    // prime-to-p part
    let cp_cols: Vec<usize> = (0..coprime.len()).filter(|&k| coprime[k] > 1).collect();
    let mut int_rows: IntMatrix = Vec::new();
    for g in gens {
        int_rows.push(cp_cols.iter().map(|&k| g.torsion[k].mod_floor(&BigInt::from(coprime[k]))).collect());
    }
    for (idx, &k) in cp_cols.iter().enumerate() {
        let mut row = vec![BigInt::zero(); cp_cols.len()];
        row[idx] = BigInt::from(coprime[k]);
        int_rows.push(row);
    }
    let coprime_invariants = intmat::cokernel_invariants(&int_rows, cp_cols.len());

    // p-primary part, read over Z/p^N
    let pt_cols: Vec<usize> = (0..p_exps.len()).filter(|&k| p_exps[k] > 0).collect();
    let width = ambient_rank + pt_cols.len();
    let mut rows: Vec<Vec<PadicInt>> = Vec::new();
    for g in gens {
        let mut row = g.free.clone();
        row.extend(pt_cols.iter().map(|&k| PadicInt::from_bigint(ctx, &g.torsion[k])));
        rows.push(row);
    }
    for (idx, &k) in pt_cols.iter().enumerate() {
        let mut row = vec![PadicInt::zero(ctx); width];
        row[ambient_rank + idx] = PadicInt::from_biguint(ctx, ctx.p_pow(p_exps[k]));
        rows.push(row);
    }
    let m = ZpMatrix::from_rows(ctx, width, rows)?;
    let mut valuations = smith_decomposition(&m).valuations;
    valuations.extend(std::iter::repeat(n).take(width - valuations.len()));
    let threshold = n.saturating_sub(slack);
    let free_rank = valuations.iter().filter(|&&a| a >= threshold).count();
    let p_invariants: Vec<BigInt> = valuations
        .iter()
        .filter(|&&a| a >= 1 && a < threshold)
        .map(|&a| BigInt::from(p).pow(a))
        .collect();
    let mut p_sorted = p_invariants;
    p_sorted.sort();
    Ok(GroupStructure {
        p,
        free_rank,
        torsion_orders: merge_coprime(&coprime_invariants, &p_sorted),
        divisor_valuations: valuations,
        precision: n,
        slack,
    })
}

/// The unique `n` with `|n| <= bound` and `n ≡ x mod p^N`, if any.
pub fn integer_reconstruct(x: &PadicInt, bound: &BigInt) -> Result<Option<BigInt>, LinalgError> {
    integer_reconstruct_at(x, bound, x.ctx().precision())
}

/// As [`integer_reconstruct`], reading `x` only modulo `p^precision`.
pub fn integer_reconstruct_at(x: &PadicInt, bound: &BigInt, precision: u32) -> Result<Option<BigInt>, LinalgError> {
    let modulus = BigInt::from(x.ctx().p_pow(precision));
    if bound * 2 + 1 >= modulus {
        return Err(LinalgError::BoundTooLarge { bound: bound.clone(), precision });
    }
    let r = BigInt::from(x.residue().clone()).mod_floor(&modulus);
    if &r <= bound {
        Ok(Some(r))
    } else if &modulus - &r <= *bound {
        Ok(Some(r - modulus))
    } else {
        Ok(None)
    }
}

/// Rows reduced to echelon form with unit pivots (pivot columns chosen freely).
/// Returns `(pivot columns, rows)` or `None` if no unit pivot exists at some step.
fn unit_pivot_echelon(vectors: &[Vec<PadicInt>], dim: usize) -> Option<(Vec<usize>, Vec<Vec<PadicInt>>)> {
    let mut rows = vectors.to_vec();
    let mut pivots = Vec::new();
    for k in 0..rows.len() {
        let (i, j) = (k..rows.len()).find_map(|i| (0..dim).find(|&j| rows[i][j].is_unit()).map(|j| (i, j)))?;
        rows.swap(k, i);
        let inv = rows[k][j].invert().expect("unit");
        scale(&mut rows[k], &inv);
        let pivot = rows[k].clone();
        for (i2, r) in rows.iter_mut().enumerate() {
            if i2 != k && !r[j].is_zero() {
                let q = r[j].clone();
                axpy(r, &q, &pivot);
            }
        }
        pivots.push(j);
    }
    Some((pivots, rows))
}

/// Integer points of a saturated `Z_p`-lattice: the vectors of sup-norm `<= bound` in an
/// LLL-reduced basis of `{n ∈ Z^d : n mod p^precision ∈ lattice}`, returned as a Hermite
/// basis.
pub fn integer_points(basis: &LatticeBasis, precision: u32, bound: &BigInt) -> Result<IntMatrix, LinalgError> {
    let ctx = basis.ctx.with_precision(precision).map_err(|e| LinalgError::Dimension(e.to_string()))?;
    let modulus = BigInt::from(ctx.modulus().clone());
    if bound * 2 + 1 >= modulus {
        return Err(LinalgError::BoundTooLarge { bound: bound.clone(), precision });
    }
    let d = basis.dim;
    if basis.vectors.is_empty() {
        return Ok(Vec::new());
    }
    let reduced: Vec<Vec<PadicInt>> = basis
        .vectors
        .iter()
        .map(|v| v.iter().map(|x| x.with_context(&ctx).expect("same prime")).collect())
        .collect();
    let (pivots, rows) = unit_pivot_echelon(&reduced, d).ok_or(LinalgError::NotSaturated(precision))?;
    let mut lattice: IntMatrix = rows.iter().map(|r| r.iter().map(|x| BigInt::from(x.residue().clone())).collect()).collect();
    for j in (0..d).filter(|j| !pivots.contains(j)) {
        let mut row = vec![BigInt::zero(); d];
        row[j] = modulus.clone();
        lattice.push(row);
    }
    let reduced = intmat::lll_reduce(&lattice);
    let short: IntMatrix = reduced
        .into_iter()
        .filter(|v| v.iter().all(|x| num_traits::Signed::abs(x) <= *bound))
        .collect();
    if short.is_empty() {
        return Ok(Vec::new());
    }
    Ok(intmat::hermite_rows(&short))
}

/// `p^e` as a residue, for callers building relation rows.
pub fn p_power(ctx: &Arc<PadicContext>, e: u32) -> PadicInt {
    PadicInt::from_biguint(ctx, ctx.p_pow(e))
}
