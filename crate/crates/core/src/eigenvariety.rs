//! The GL₁ eigenvariety of tame level `U` at a totally split prime: the closure of `Γ(U)`
//! in `O_{K,p}^× = (Z_p^×)^d`, the quotient `Q(U)`, its dimension `1 + r2 + δ`, the
//! admissible infinity types, and classification of points.
//!
//! A unit of `Z_p` has coordinates `(ind, t)` in `Z/(p-1) × Z_p` (see [`crate::weight_space`]).
//! The closure of a finitely generated subgroup is the subgroup of `μ_(p-1)^d` generated by
//! the `ind` parts times the `Z_p`-span of the `t` parts.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::{self, IntMatrix};
use crate::number_field::{embed, gamma_u, ray_class_order_with, GammaU, NumberFieldData, NumberFieldError, SplitPrimeData, TameLevel};
use crate::padic::{PadicContext, PadicError, PadicInt};
use crate::weight_space::{self, Classification, Weight, WeightError};
use crate::zp_linalg::{
    integer_points, kernel_lattice, quotient_structure, smith_structure, GroupStructure, LinalgError, SubgroupGenerator,
    ZpMatrix,
};

#[derive(Debug, Error)]
pub enum EigError {
    #[error(transparent)]
    Field(#[from] NumberFieldError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("rank mismatch: Q(U) has free rank {free_rank}, expected 1 + r2 + δ = {expected}")]
    RankMismatch { free_rank: usize, expected: usize },
    #[error("weight is not trivial on the closure of Γ(U), so it is not in W(U)")]
    NotInWU,
    #[error("level r must be between 1 and N")]
    BadLevel,
}

/// Images of a family of global units in `O_{K,p}^×`, in `(ind, t, log)` coordinates.
#[derive(Clone, Debug)]
pub struct UnitLogLattice {
    /// Exponent vectors over (torsion generator, fundamental units), one per row.
    pub exponents: IntMatrix,
    /// `(σ_1(u_j), …, σ_d(u_j))` at precision `N`.
    pub images: Vec<Vec<PadicInt>>,
    /// `log σ_i(u_j)`, valuation `>= 1`.
    pub logs: Vec<Vec<PadicInt>>,
    /// `t_i(u_j) = log σ_i(u_j) / log(1 + p)` at precision `N - 1`.
    pub coords: Vec<Vec<PadicInt>>,
    /// Teichmüller indices of `σ_i(u_j)`.
    pub teichmuller: Vec<Vec<u64>>,
    /// Context of [`Self::coords`].
    pub coord_ctx: Arc<PadicContext>,
}

impl UnitLogLattice {
    pub fn rows(&self) -> usize {
        self.exponents.len()
    }

    pub fn dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }

    /// The `t` matrix (rows = units) over `Z/p^(N-1)`.
    pub fn coord_matrix(&self, d: usize) -> ZpMatrix {
        ZpMatrix::from_rows(&self.coord_ctx, d, self.coords.clone()).expect("rectangular")
    }

    pub fn closure_generators(&self) -> &[Vec<PadicInt>] {
        &self.images
    }
}

/// `M[j][i] = log σ_i(u_j)` for `u_j = ζ^(e_j0) ∏ ε_k^(e_jk)`.
pub fn unit_log_lattice(field: &NumberFieldData, sp: &SplitPrimeData, exponents: &IntMatrix) -> Result<UnitLogLattice, EigError> {
    let ctx = &sp.ctx;
    let coord_ctx = ctx.with_precision(ctx.precision() - 1)?;
    let base: Vec<Vec<PadicInt>> = field.unit_generators().iter().map(|u| embed(u, sp)).collect();
    let d = field.degree();
    let mut images = Vec::with_capacity(exponents.len());
    for row in exponents {
        let mut img = vec![PadicInt::one(ctx); d];
        for (e, b) in row.iter().zip(&base) {
            if e.is_zero() {
                continue;
            }
            for i in 0..d {
                img[i] = &img[i] * &b[i].pow_signed(e)?;
            }
        }
        images.push(img);
    }
    let mut logs = Vec::new();
    let mut coords = Vec::new();
    let mut teichmuller = Vec::new();
    for img in &images {
        logs.push(img.iter().map(PadicInt::log).collect::<Result<Vec<_>, _>>()?);
        coords.push(
            img.iter()
                .map(|x| weight_space::log_coordinate(x).and_then(|t| t.with_context(&coord_ctx)))
                .collect::<Result<Vec<_>, _>>()?,
        );
        teichmuller.push(img.iter().map(weight_space::teichmuller_index).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(UnitLogLattice { exponents: exponents.clone(), images, logs, coords, teichmuller, coord_ctx })
}

/// Exponent vectors of the full unit group (identity rows).
pub fn full_unit_exponents(field: &NumberFieldData) -> IntMatrix {
    intmat::identity(1 + field.fundamental_units.len())
}

/// Rank drop of the log image of the global units, read at precision.
///
/// A positive value only says that some combination of logs vanishes to `N - 1 - slack`
/// digits; it never certifies a failure of Leopoldt's conjecture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeopoldtDefect {
    pub unit_rank: usize,
    pub log_rank: usize,
    pub defect: usize,
    /// Valuations of the Smith divisors of the `t` matrix of the fundamental units.
    pub divisor_valuations: Vec<u32>,
    /// Divisors at or above this valuation count as zero.
    pub threshold: u32,
    /// Largest valuation among the divisors counted as nonzero.
    pub max_pivot_valuation: Option<u32>,
    pub precision: u32,
    pub slack: u32,
}

pub fn leopoldt_defect(field: &NumberFieldData, sp: &SplitPrimeData, slack: u32) -> Result<LeopoldtDefect, EigError> {
    let r = field.unit_rank();
    let d = field.degree();
    let coord_ctx = sp.ctx.with_precision(sp.ctx.precision() - 1)?;
    if r == 0 {
        return Ok(LeopoldtDefect {
            unit_rank: 0,
            log_rank: 0,
            defect: 0,
            divisor_valuations: Vec::new(),
            threshold: coord_ctx.precision().saturating_sub(slack),
            max_pivot_valuation: None,
            precision: coord_ctx.precision(),
            slack,
        });
    }
    let exps: IntMatrix = (1..=r)
        .map(|j| (0..=r).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let lat = unit_log_lattice(field, sp, &exps)?;
    let s = smith_structure(&lat.coord_matrix(d), slack);
    let rank = s.rank();
    Ok(LeopoldtDefect {
        unit_rank: r,
        log_rank: rank,
        defect: r - rank,
        divisor_valuations: s.valuations.clone(),
        threshold: s.threshold(),
        max_pivot_valuation: s.max_nonzero_valuation(),
        precision: s.precision,
        slack,
    })
}

/// Structure of `Q(U) = (μ_(p-1) × Z_p)^d / closure(Γ(U))`.
pub fn quotient_qu(lattice: &UnitLogLattice, d: usize, slack: u32) -> Result<GroupStructure, EigError> {
    let p = lattice.coord_ctx.p();
    let gens: Vec<SubgroupGenerator> = lattice
        .coords
        .iter()
        .zip(&lattice.teichmuller)
        .map(|(t, ind)| SubgroupGenerator { free: t.clone(), torsion: ind.iter().map(|&k| BigInt::from(k)).collect() })
        .collect();
    Ok(quotient_structure(&lattice.coord_ctx, &gens, d, &vec![p - 1; d], slack)?)
}

/// Order of `(Z_p^× / (1 + p^r Z_p))^d` modulo the image of the closure of the lattice.
pub fn finite_quotient_order_of(lattice: &UnitLogLattice, d: usize, r: u32) -> Result<BigInt, EigError> {
    if r == 0 || r > lattice.coord_ctx.precision() + 1 {
        return Err(EigError::BadLevel);
    }
    let p = lattice.coord_ctx.p();
    let pk = BigInt::from(p).pow(r - 1);
    let cols = 2 * d;
    let mut rows: IntMatrix = Vec::new();
    for (t, ind) in lattice.coords.iter().zip(&lattice.teichmuller) {
        let mut row = Vec::with_capacity(cols);
        row.extend(ind.iter().map(|&k| BigInt::from(k)));
        row.extend(t.iter().map(|x| BigInt::from(x.residue().clone()) % &pk));
        rows.push(row);
    }
    for i in 0..d {
        let mut row = vec![BigInt::zero(); cols];
        row[i] = BigInt::from(p - 1);
        rows.push(row);
        let mut row = vec![BigInt::zero(); cols];
        row[d + i] = pk.clone();
        rows.push(row);
    }
    Ok(intmat::cokernel_order(&rows, cols).expect("finite by construction"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteQuotientOrder {
    pub r: u32,
    #[serde(with = "crate::util::big_str")]
    pub order: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigReport {
    pub field: String,
    pub p: u64,
    pub precision: u32,
    pub slack: u32,
    pub level: TameLevel,
    pub gamma_u: GammaU,
    pub quotient: GroupStructure,
    pub leopoldt: LeopoldtDefect,
    pub dimension: usize,
    pub ray_class_order: u64,
    pub finite_quotient_orders: Vec<FiniteQuotientOrder>,
}

/// Levels `r` whose finite quotient orders go into the report.
pub const REPORT_LEVELS: [u32; 3] = [1, 2, 3];

pub fn eig_report(field: &NumberFieldData, sp: &SplitPrimeData, level: &TameLevel, slack: u32) -> Result<EigReport, EigError> {
    level.check(field, Some(sp.p()))?;
    let gamma = gamma_u(field, level)?;
    eig_report_with_gamma(field, sp, level, &gamma, slack)
}

/// As [`eig_report`] with a caller-supplied generating set of `Γ(U)`.
pub fn eig_report_with_gamma(
    field: &NumberFieldData,
    sp: &SplitPrimeData,
    level: &TameLevel,
    gamma: &GammaU,
    slack: u32,
) -> Result<EigReport, EigError> {
    level.check(field, Some(sp.p()))?;
    let d = field.degree();
    let lattice = unit_log_lattice(field, sp, &gamma.generators)?;
    let quotient = quotient_qu(&lattice, d, slack)?;
    let leopoldt = leopoldt_defect(field, sp, slack)?;
    let dimension = 1 + field.r2 + leopoldt.defect;
    if quotient.free_rank != dimension {
        return Err(EigError::RankMismatch { free_rank: quotient.free_rank, expected: dimension });
    }
    let ray = ray_class_order_with(field, level, gamma)?;
    let finite_quotient_orders = REPORT_LEVELS
        .iter()
        .map(|&r| Ok(FiniteQuotientOrder { r, order: finite_quotient_order_of(&lattice, d, r)? }))
        .collect::<Result<Vec<_>, EigError>>()?;
    Ok(EigReport {
        field: field.label.clone(),
        p: sp.p(),
        precision: sp.ctx.precision(),
        slack,
        level: level.clone(),
        gamma_u: gamma.clone(),
        quotient,
        leopoldt,
        dimension,
        ray_class_order: ray,
        finite_quotient_orders,
    })
}

/// Integer infinity types `n` with `∏ σ_i(u)^(n_i)` a root of unity for every unit `u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfinityTypeLattice {
    /// Hermite basis of the integer points of sup-norm at most `bound`.
    #[serde(with = "crate::util::big_mat_str")]
    pub basis: IntMatrix,
    /// Rank of the saturated `Z_p` kernel the integer points were read from.
    pub zp_kernel_rank: usize,
    pub contains_parallel: bool,
    /// The lattice is exactly `Z·(1, …, 1)`.
    pub weil_parallel: bool,
    #[serde(with = "crate::util::big_str")]
    pub bound: BigInt,
    pub precision: u32,
    pub slack: u32,
}

impl InfinityTypeLattice {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_full(&self) -> bool {
        let d = self.basis.first().map_or(0, Vec::len);
        d > 0 && self.basis == intmat::identity(d)
    }
}

pub fn infinity_type_lattice(
    field: &NumberFieldData,
    sp: &SplitPrimeData,
    bound: &BigInt,
    slack: u32,
) -> Result<InfinityTypeLattice, EigError> {
    let d = field.degree();
    let lattice = unit_log_lattice(field, sp, &full_unit_exponents(field))?;
    let m = lattice.coord_matrix(d);
    let kernel = kernel_lattice(&m, slack);
    let read = lattice.coord_ctx.precision().saturating_sub(slack);
    let basis = integer_points(&kernel, read, bound)?;
    let ones = vec![BigInt::one(); d];
    let contains_parallel = in_integer_span(&basis, &ones);
    let weil_parallel = basis == vec![ones];
    Ok(InfinityTypeLattice {
        basis,
        zp_kernel_rank: kernel.rank(),
        contains_parallel,
        weil_parallel,
        bound: bound.clone(),
        precision: lattice.coord_ctx.precision(),
        slack,
    })
}

fn in_integer_span(basis: &IntMatrix, v: &[BigInt]) -> bool {
    if basis.is_empty() {
        return v.iter().all(Zero::is_zero);
    }
    let mut rows = basis.clone();
    rows.push(v.to_vec());
    intmat::hermite_rows(&rows) == intmat::hermite_rows(basis)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClassification {
    pub classification: Classification,
    pub parallel: bool,
    pub locally_parallel: bool,
    /// Points of `E(U)` above the weight: every character of `Q(U)` extends to `H(U)` in
    /// `ray_class_order` ways.
    pub lift_count: u64,
}

/// `κ` is trivial on the closure of `Γ(U)`.
pub fn in_weight_space(kappa: &Weight, lattice: &UnitLogLattice, slack: u32) -> Result<bool, EigError> {
    Ok(weight_space::is_trivial_on(kappa, lattice.closure_generators(), slack)?)
}

pub fn classify_point(
    kappa: &Weight,
    lattice: &UnitLogLattice,
    report: &EigReport,
    bound: &BigInt,
) -> Result<PointClassification, EigError> {
    if !in_weight_space(kappa, lattice, report.slack)? {
        return Err(EigError::NotInWU);
    }
    let classification = weight_space::classify(kappa, bound, report.slack)?;
    Ok(PointClassification {
        classification,
        parallel: weight_space::is_parallel(kappa),
        locally_parallel: weight_space::is_locally_parallel(kappa),
        lift_count: report.ray_class_order,
    })
}

/// Lattice of the `Γ(U)` generators recorded in a report.
pub fn report_lattice(field: &NumberFieldData, sp: &SplitPrimeData, report: &EigReport) -> Result<UnitLogLattice, EigError> {
    unit_log_lattice(field, sp, &report.gamma_u.generators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_field::hensel_embeddings;
    use crate::weight_space::{algebraic_weight_i64, WeightKind};

    const Q: &str = r#"{"label":"Q","poly":[-1,1],"r1":1,"r2":0,"torsion":{"order":2,"element":[-1]},"fundamental_units":[],"class_number":1}"#;
    const QI: &str = r#"{"label":"Q(i)","poly":[1,0,1],"r1":0,"r2":1,"torsion":{"order":4,"element":[0,1]},"fundamental_units":[],"class_number":1}"#;
    const QSQRT2: &str = r#"{"label":"Q(sqrt2)","poly":[-2,0,1],"r1":2,"r2":0,"torsion":{"order":2,"element":[-1,0]},"fundamental_units":[[1,1]],"class_number":1}"#;

    fn setup(json: &str, p: u64, n: u32) -> (NumberFieldData, SplitPrimeData) {
        let k = NumberFieldData::from_json_str(json).unwrap();
        let sp = hensel_embeddings(&k, p, n).unwrap();
        (k, sp)
    }

    #[test]
    fn q_report() {
        let (k, sp) = setup(Q, 5, 40);
        let rep = eig_report(&k, &sp, &TameLevel::trivial(), 10).unwrap();
        assert_eq!(rep.dimension, 1);
        assert_eq!(rep.quotient.free_rank, 1);
        // (Z/4) modulo the image of -1, which has index 2
        assert_eq!(rep.quotient.torsion_orders, vec![BigInt::from(2)]);
        assert_eq!(rep.finite_quotient_orders[0].order, BigInt::from(2));
        let rep4 = eig_report(&k, &sp, &TameLevel::new(4, vec![]), 10).unwrap();
        assert_eq!(rep4.quotient.torsion_orders, vec![BigInt::from(4)]);
    }

    #[test]
    fn qi_report() {
        let (k, sp) = setup(QI, 5, 40);
        let rep = eig_report(&k, &sp, &TameLevel::trivial(), 10).unwrap();
        assert_eq!(rep.dimension, 2);
        assert_eq!(rep.leopoldt.defect, 0);
        assert_eq!(rep.finite_quotient_orders[0].order, BigInt::from(4));
        let lat = unit_log_lattice(&k, &sp, &rep.gamma_u.generators).unwrap();
        assert!(lat.logs.iter().flatten().all(PadicInt::is_zero));
    }

    #[test]
    fn qsqrt2_log_row_sums_to_zero() {
        let (k, sp) = setup(QSQRT2, 7, 40);
        let lat = unit_log_lattice(&k, &sp, &full_unit_exponents(&k)).unwrap();
        let row = &lat.logs[1];
        assert!((&row[0] + &row[1]).is_zero());
        assert!(!row[0].is_zero());
        let rep = eig_report(&k, &sp, &TameLevel::trivial(), 10).unwrap();
        assert_eq!(rep.dimension, 1);
        assert_eq!(rep.leopoldt.defect, 0);
    }

    #[test]
    fn infinity_types() {
        let b = BigInt::from(7u32).pow(10);
        let (k, sp) = setup(QSQRT2, 7, 40);
        let lat = infinity_type_lattice(&k, &sp, &b, 10).unwrap();
        assert!(lat.weil_parallel);
        let (k, sp) = setup(QI, 5, 40);
        let lat = infinity_type_lattice(&k, &sp, &BigInt::from(5u32).pow(10), 10).unwrap();
        assert!(lat.is_full());
        assert!(lat.contains_parallel && !lat.weil_parallel);
    }

    #[test]
    fn point_classification() {
        let (k, sp) = setup(QSQRT2, 7, 40);
        let rep = eig_report(&k, &sp, &TameLevel::trivial(), 10).unwrap();
        let lat = report_lattice(&k, &sp, &rep).unwrap();
        let b = BigInt::from(7u32).pow(10);
        let c = &sp.ctx;
        let pt = classify_point(&algebraic_weight_i64(c, &[2, 2]), &lat, &rep, &b).unwrap();
        assert_eq!(pt.classification.kind, WeightKind::Algebraic);
        assert!(pt.parallel);
        assert_eq!(pt.lift_count, rep.ray_class_order);
        assert!(matches!(classify_point(&algebraic_weight_i64(c, &[1, 1]), &lat, &rep, &b), Err(EigError::NotInWU)));
    }
}
