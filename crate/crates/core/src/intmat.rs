//! Exact integer matrices: Smith and Hermite normal forms, determinants, LLL.
//!
//! Rows are `Vec<BigInt>`; a matrix is a slice of rows. Everything here is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn from_i64(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(BigInt::zero(), |acc, k| acc + &row[k] * &b[k][j]))
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Result of [`smith_form`]: `left * A * right = diag`.
#[derive(Debug, Clone)]
pub struct IntSmithForm {
    /// Diagonal entries (nonnegative, each dividing the next), length `min(rows, cols)`.
    pub diagonal: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

impl IntSmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }
}

fn swap_cols(m: &mut IntMatrix, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn add_row_multiple(m: &mut IntMatrix, target: usize, source: usize, k: &BigInt) {
    if k.is_zero() {
        return;
    }
    let src = m[source].clone();
    for (t, s) in m[target].iter_mut().zip(src.iter()) {
        *t += k * s;
    }
}

fn add_col_multiple(m: &mut IntMatrix, target: usize, source: usize, k: &BigInt) {
    if k.is_zero() {
        return;
    }
    for row in m.iter_mut() {
        let s = row[source].clone();
        row[target] += k * s;
    }
}

pub fn smith_form(a: &IntMatrix) -> IntSmithForm {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.clone();
    let mut left = identity(rows);
    let mut right = identity(cols);
    let n = rows.min(cols);
    for t in 0..n {
        loop {
            // smallest nonzero entry of the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !m[i][j].is_zero()
                        && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return finish(m, left, right, n);
            };
            m.swap(t, bi);
            left.swap(t, bi);
            swap_cols(&mut m, t, bj);
            swap_cols(&mut right, t, bj);

            let mut dirty = false;
            for i in t + 1..rows {
                let q = m[i][t].div_floor(&m[t][t]);
                add_row_multiple(&mut m, i, t, &-q.clone());
                add_row_multiple(&mut left, i, t, &-q);
                dirty |= !m[i][t].is_zero();
            }
            for j in t + 1..cols {
                let q = m[t][j].div_floor(&m[t][t]);
                add_col_multiple(&mut m, j, t, &-q.clone());
                add_col_multiple(&mut right, j, t, &-q);
                dirty |= !m[t][j].is_zero();
            }
            if dirty {
                continue;
            }
            // pivot must divide the whole trailing block
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !(&m[i][j] % &m[t][t]).is_zero());
            match offender {
                Some((i, _)) => {
                    add_row_multiple(&mut m, t, i, &BigInt::one());
                    add_row_multiple(&mut left, t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if m[t][t].is_negative() {
            for x in m[t].iter_mut() {
                *x = -x.clone();
            }
            for x in left[t].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    finish(m, left, right, n)
}

fn finish(m: IntMatrix, left: IntMatrix, right: IntMatrix, n: usize) -> IntSmithForm {
    let diagonal = (0..n).map(|i| m[i][i].clone()).collect();
    IntSmithForm { diagonal, left, right }
}

/// Order of the finite group `Z^cols / rowspan(a)`, or `None` if it is infinite.
pub fn cokernel_order(a: &IntMatrix, cols: usize) -> Option<BigInt> {
    if cols == 0 {
        return Some(BigInt::one());
    }
    let snf = smith_form(a);
    if snf.rank() < cols {
        return None;
    }
    Some(snf.diagonal.iter().fold(BigInt::one(), |acc, d| acc * d))
}

/// Invariant factors `> 1` of `Z^cols / rowspan(a)` (assumed finite).
pub fn cokernel_invariants(a: &IntMatrix, cols: usize) -> Vec<BigInt> {
    if cols == 0 {
        return Vec::new();
    }
    smith_form(a).diagonal.into_iter().filter(|d| !d.is_one()).collect()
}

/// Row-style Hermite normal form: a canonical basis of the row span.
pub fn hermite_rows(a: &IntMatrix) -> IntMatrix {
    if a.is_empty() {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut m = a.clone();
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        // gcd-combine the column into row r
        for i in r + 1..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let e = m[r][c].extended_gcd(&m[i][c]);
            let (g, x, y) = (e.gcd, e.x, e.y);
            let a_r = &m[r][c] / &g;
            let a_i = &m[i][c] / &g;
            let row_r = m[r].clone();
            let row_i = m[i].clone();
            m[r] = row_r.iter().zip(&row_i).map(|(u, v)| &x * u + &y * v).collect();
            m[i] = row_r.iter().zip(&row_i).map(|(u, v)| &a_r * v - &a_i * u).collect();
        }
        if m[r][c].is_zero() {
            continue;
        }
        if m[r][c].is_negative() {
            for x in m[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let q = m[i][c].div_floor(&m[r][c]);
            add_row_multiple(&mut m, i, r, &-q);
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    m
}

/// Saturation `span_Q(rows) ∩ Z^d` of a lattice given by generating rows.
pub fn saturate(a: &IntMatrix) -> IntMatrix {
    if a.is_empty() {
        return Vec::new();
    }
    let snf = smith_form(a);
    let rank = snf.rank();
    // a = L^-1 D R^-1, so the rows of R^-1 for the first `rank` coordinates span the saturation.
    let rinv = inverse_unimodular(&snf.right);
    hermite_rows(&rinv[..rank].to_vec())
}

/// Inverse of a unimodular matrix by exact rational Gauss–Jordan.
pub fn inverse_unimodular(m: &IntMatrix) -> IntMatrix {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row.iter().map(|x| BigRational::from_integer(x.clone())).collect();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| !a[i][c].is_zero()).expect("matrix is invertible");
        a.swap(c, piv);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let src = a[c].clone();
                for (t, s) in a[i].iter_mut().zip(src.iter()) {
                    *t -= &f * s;
                }
            }
        }
    }
    a.into_iter()
        .map(|row| {
            row[n..]
                .iter()
                .map(|x| {
                    assert!(x.is_integer(), "matrix is not unimodular");
                    x.to_integer()
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Exact LLL reduction (δ = 3/4) of linearly independent rows.
pub fn lll_reduce(basis: &IntMatrix) -> IntMatrix {
    let mut b = basis.clone();
    let n = b.len();
    if n == 0 {
        return b;
    }
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let gram_schmidt = |b: &IntMatrix| -> (Vec<Vec<BigRational>>, Vec<Vec<BigRational>>) {
        let rows: Vec<Vec<BigRational>> =
            b.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
        let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        let mut mu = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            let mut v = rows[i].clone();
            for j in 0..i {
                let bj = dot(&star[j], &star[j]);
                mu[i][j] = dot(&rows[i], &star[j]) / bj;
                for (t, s) in v.iter_mut().zip(&star[j]) {
                    *t -= &mu[i][j] * s;
                }
            }
            star.push(v);
        }
        (star, mu)
    };
    let (mut star, mut mu) = gram_schmidt(&b);
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            if mu[k][j].abs() > half {
                let q = mu[k][j].round().to_integer();
                let src = b[j].clone();
                for (t, s) in b[k].iter_mut().zip(&src) {
                    *t -= &q * s;
                }
                let (s2, m2) = gram_schmidt(&b);
                star = s2;
                mu = m2;
            }
        }
        let lhs = dot(&star[k], &star[k]);
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * dot(&star[k - 1], &star[k - 1]);
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            let (s2, m2) = gram_schmidt(&b);
            star = s2;
            mu = m2;
            k = k.max(2) - 1;
        }
    }
    b
}
