use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use eigvar::demos::{self, DemoError, PGroup};
use eigvar::eigenvariety::{self, EigError, FiniteQuotientOrder};
use eigvar::number_field::{self, NumberFieldData, NumberFieldError, SplitPrimeData, TameLevel};
use eigvar::padic::{PadicContext, PadicError};
use eigvar::weight_space::{self, Weight, WeightError};
use eigvar::zp_linalg::{default_slack, GroupStructure, LinalgError};

const EXIT_INVARIANT: u8 = 2;
const EXIT_PRECISION: u8 = 3;
const EXIT_INPUT: u8 = 4;

/// Largest prime tried by `--p auto`.
const AUTO_PRIME_LIMIT: u64 = 10_000;

#[derive(Parser)]
#[command(name = "eigvar", version, about = "p-adic weight spaces and GL(1) eigenvarieties of number fields")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Opts {
    /// Field fixture (JSON; the .json extension may be omitted).
    #[arg(long, global = true)]
    field: Option<PathBuf>,
    /// Prime, or "auto" for the smallest totally split odd prime.
    #[arg(long, global = true, default_value = "auto")]
    p: String,
    #[arg(long, global = true, default_value_t = 40)]
    precision: u32,
    /// Digits reserved against precision loss (default ⌈N/4⌉).
    #[arg(long, global = true)]
    slack: Option<u32>,
    /// Rational tame level m, coprime to p.
    #[arg(long, global = true, default_value_t = 1)]
    modulus: u64,
    /// Real places (0-based, ascending roots) where positivity is imposed.
    #[arg(long, global = true, value_delimiter = ',')]
    signs: Vec<usize>,
    /// Reconstruction bound B for integer exponents.
    #[arg(long, global = true)]
    bound: Option<BigInt>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Signature, discriminant, unit checks and split primes of a field.
    FieldInfo {
        /// Field fixture (alternative to --field).
        path: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        limit: u64,
    },
    /// Totally split odd primes up to a limit.
    SplitPrimes {
        #[arg(long, default_value_t = 200)]
        limit: u64,
    },
    /// Structure of Q(U), Leopoldt defect at precision, and the dimension of E(U).
    Eigenvariety,
    /// Weight classification, rigid-locus values, or W(U) membership.
    Weight {
        #[arg(value_enum)]
        action: WeightAction,
        /// Weight file (JSON); its p and precision are used.
        weight: PathBuf,
    },
    /// Lattice of admissible infinity types and the parallelism check.
    InfinityTypes,
    /// Exact checks: torsion of the unit disc, formal density of group rings.
    #[command(subcommand)]
    Demo(Demo),
    /// Orders of the finite quotients (Z_p^×/(1+p^r))^d / closure(Γ(U)).
    QuotientOrders {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        levels: Vec<u32>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightAction {
    Classify,
    RigidLocus,
    Membership,
}

#[derive(Subcommand)]
enum Demo {
    /// Torsion point ζ - 1 of the unit disc against the truncated logarithm.
    UnitDisc {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 60)]
        terms: u64,
    },
    /// Random group-ring elements against all characters of a finite p-group.
    FormalDensity {
        /// Exponents e_k of G = ∏ Z/p^(e_k).
        #[arg(long, value_delimiter = ',', required = true)]
        exponents: Vec<u32>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn input_error(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(TaggedMarker(EXIT_INPUT)).context(e.into().to_string())
}

/// Carries an explicit exit code through an error chain.
#[derive(Debug)]
struct TaggedMarker(u8);

impl std::fmt::Display for TaggedMarker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit code {}", self.0)
    }
}

impl std::error::Error for TaggedMarker {}

fn code_padic(e: &PadicError) -> u8 {
    match e {
        PadicError::InvalidPrime(_) | PadicError::InvalidPrecision(_) => EXIT_INPUT,
        PadicError::ExpDiverges | PadicError::NotPrincipal | PadicError::NonUnit(_) => EXIT_INPUT,
        PadicError::ContextMismatch(..) => EXIT_INVARIANT,
    }
}

fn code_linalg(e: &LinalgError) -> u8 {
    match e {
        LinalgError::BoundTooLarge { .. } | LinalgError::NotSaturated(_) => EXIT_PRECISION,
        LinalgError::Dimension(_) => EXIT_INVARIANT,
    }
}

fn code_field(e: &NumberFieldError) -> u8 {
    match e {
        NumberFieldError::Invariant { .. } => EXIT_INVARIANT,
        NumberFieldError::Padic(p) => code_padic(p),
        _ => EXIT_INPUT,
    }
}

fn code_weight(e: &WeightError) -> u8 {
    match e {
        WeightError::Padic(p) => code_padic(p),
        WeightError::Precision(l) => code_linalg(l),
        WeightError::NotLocallyAlgebraic => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

fn code_eig(e: &EigError) -> u8 {
    match e {
        EigError::Field(f) => code_field(f),
        EigError::Weight(w) => code_weight(w),
        EigError::Linalg(l) => code_linalg(l),
        EigError::Padic(p) => code_padic(p),
        EigError::RankMismatch { .. } => EXIT_INVARIANT,
        EigError::NotInWU => EXIT_INVARIANT,
        EigError::BadLevel => EXIT_INPUT,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(m) = cause.downcast_ref::<TaggedMarker>() {
            return m.0;
        }
        if let Some(e) = cause.downcast_ref::<EigError>() {
            return code_eig(e);
        }
        if let Some(e) = cause.downcast_ref::<NumberFieldError>() {
            return code_field(e);
        }
        if let Some(e) = cause.downcast_ref::<WeightError>() {
            return code_weight(e);
        }
        if let Some(e) = cause.downcast_ref::<LinalgError>() {
            return code_linalg(e);
        }
        if let Some(e) = cause.downcast_ref::<PadicError>() {
            return code_padic(e);
        }
        if let Some(e) = cause.downcast_ref::<DemoError>() {
            return match e {
                DemoError::Eig(inner) => code_eig(inner),
                _ => EXIT_INPUT,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_INPUT;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn load(opts: &Opts, positional: Option<&Path>) -> Result<NumberFieldData> {
    let path = positional
        .or(opts.field.as_deref())
        .ok_or_else(|| input_error(anyhow!("no field given; pass --field <fixture>")))?;
    number_field::load_field(path).with_context(|| format!("loading {}", path.display()))
}

fn slack(opts: &Opts, precision: u32) -> u32 {
    opts.slack.unwrap_or_else(|| default_slack(precision))
}

fn choose_prime(opts: &Opts, field: &NumberFieldData) -> Result<u64> {
    if opts.p == "auto" {
        return number_field::split_prime_search(field, AUTO_PRIME_LIMIT)
            .into_iter()
            .find(|p| opts.modulus % p != 0)
            .ok_or_else(|| input_error(anyhow!("no totally split prime below {AUTO_PRIME_LIMIT}")));
    }
    opts.p.parse().map_err(|_| input_error(anyhow!("--p must be a prime or \"auto\", got {:?}", opts.p)))
}

fn split_data(opts: &Opts, field: &NumberFieldData, precision: u32) -> Result<SplitPrimeData> {
    let p = choose_prime(opts, field)?;
    Ok(number_field::hensel_embeddings(field, p, precision)?)
}

fn level(opts: &Opts) -> TameLevel {
    TameLevel::new(opts.modulus, opts.signs.clone())
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Text => print!("{}", text()),
    }
    Ok(())
}

fn show_group(g: &GroupStructure) -> String {
    let mut parts = Vec::new();
    if g.free_rank > 0 {
        parts.push(format!("Z_{}^{}", g.p, g.free_rank));
    }
    parts.extend(g.torsion_orders.iter().map(|t| format!("Z/{t}")));
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" x ")
    }
}

fn run(cli: Cli) -> Result<()> {
    let opts = cli.opts;
    match cli.command {
        Command::FieldInfo { path, limit } => cmd_field_info(&opts, path.as_deref(), limit),
        Command::SplitPrimes { limit } => {
            let field = load(&opts, None)?;
            let primes = number_field::split_prime_search(&field, limit);
            emit(opts.format, &primes, || {
                let list: Vec<String> = primes.iter().map(u64::to_string).collect();
                format!("{}\n", list.join(" "))
            })
        }
        Command::Eigenvariety => cmd_eigenvariety(&opts),
        Command::Weight { action, weight } => cmd_weight(&opts, action, &weight),
        Command::InfinityTypes => cmd_infinity_types(&opts),
        Command::Demo(demo) => cmd_demo(&opts, demo),
        Command::QuotientOrders { levels } => cmd_quotient_orders(&opts, &levels),
    }
}

fn cmd_field_info(opts: &Opts, path: Option<&Path>, limit: u64) -> Result<()> {
    let field = load(opts, path)?;
    let info = number_field::field_info(&field, limit);
    emit(opts.format, &info, || {
        let norms: Vec<String> = info.unit_norms.iter().map(BigInt::to_string).collect();
        let primes: Vec<String> = info.split_primes.iter().map(u64::to_string).collect();
        format!(
            "field           {}\ndegree          {}\nsignature       r1 = {}, r2 = {}\ndiscriminant    {}\nclass number    {}\ntorsion order   {}\nunit rank       {}\nunit norms      [{}]\nsplit primes    {} (up to {})\n",
            info.label,
            info.degree,
            info.r1,
            info.r2,
            info.discriminant,
            info.class_number,
            info.torsion_order,
            info.unit_rank,
            norms.join(", "),
            primes.join(" "),
            info.split_prime_limit
        )
    })
}

fn cmd_eigenvariety(opts: &Opts) -> Result<()> {
    let field = load(opts, None)?;
    let sp = split_data(opts, &field, opts.precision)?;
    let s = slack(opts, opts.precision);
    let report = eigenvariety::eig_report(&field, &sp, &level(opts), s)?;
    emit(opts.format, &report, || {
        let l = &report.leopoldt;
        let orders: Vec<String> = report.finite_quotient_orders.iter().map(|o| format!("r={}: {}", o.r, o.order)).collect();
        format!(
            "field             {}\np                 {}\nprecision         N = {}, slack = {}\ntame level        m = {}, signs = {:?}\n[O_K^x : Γ(U)]    {}\nQ(U)              {}\nQ(U) divisors     {:?} (zero at >= {})\nLeopoldt defect   δ_N = {} (unit rank {}, log rank {}, largest pivot valuation {}, threshold {})\ndimension         {}\nray class order   {}\nfinite quotients  {}\n",
            report.field,
            report.p,
            report.precision,
            report.slack,
            report.level.modulus,
            report.level.signs,
            report.gamma_u.index,
            show_group(&report.quotient),
            report.quotient.divisor_valuations,
            report.quotient.precision.saturating_sub(report.quotient.slack),
            l.defect,
            l.unit_rank,
            l.log_rank,
            l.max_pivot_valuation.map_or("-".into(), |v| v.to_string()),
            l.threshold,
            report.dimension,
            report.ray_class_order,
            orders.join(", ")
        )
    })
}

#[derive(Serialize, Deserialize)]
struct RigidLocusReport {
    p: u64,
    precision: u32,
    slack: u32,
    /// Residues of `log κ(u_j)`.
    values: Vec<String>,
    /// `None` for a value that is zero mod `p^N`.
    valuations: Vec<Option<u32>>,
    threshold: u32,
    on_locus: bool,
}

#[derive(Serialize, Deserialize)]
struct MembershipReport {
    field: String,
    p: u64,
    precision: u32,
    slack: u32,
    level: TameLevel,
    in_wu: bool,
    point: Option<eigenvariety::PointClassification>,
}

fn load_weight(path: &Path) -> Result<Weight> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| input_error(anyhow!("weight file {}: {e}", path.display())))
}

fn cmd_weight(opts: &Opts, action: WeightAction, path: &Path) -> Result<()> {
    let kappa = load_weight(path)?;
    let ctx = kappa.ctx().clone();
    if opts.p != "auto" && opts.p != ctx.p().to_string() {
        return Err(input_error(anyhow!("--p {} disagrees with the weight file (p = {})", opts.p, ctx.p())));
    }
    let n = ctx.precision();
    let s = slack(opts, n);
    let bound = opts.bound.clone().unwrap_or_else(|| weight_space::default_bound(&ctx));
    match action {
        WeightAction::Classify => {
            let cl = weight_space::classify(&kappa, &bound, s)?;
            emit(opts.format, &cl, || {
                let n_text = cl.n.as_ref().map_or("-".into(), |v| {
                    v.iter().map(BigInt::to_string).collect::<Vec<_>>().join(", ")
                });
                format!(
                    "kind        {:?}\nn           {}\nconductor   {}\nbound       {}\nprecision   N = {}, slack = {}\n",
                    cl.kind,
                    n_text,
                    cl.conductor.map_or("-".into(), |c| c.to_string()),
                    cl.bound,
                    cl.precision,
                    cl.slack
                )
            })
        }
        WeightAction::RigidLocus => {
            if kappa.d() == 1 {
                eprintln!("warning: d = 1, the norm-one subgroup is torsion and the basis is empty");
            }
            let basis = weight_space::norm_one_basis(&ctx, kappa.d());
            let vals = weight_space::rigid_locus_values(&kappa, &basis)?;
            let threshold = n.saturating_sub(s);
            let valuations: Vec<Option<u32>> = vals.iter().map(|v| (!v.is_zero()).then(|| v.valuation())).collect();
            let report = RigidLocusReport {
                p: ctx.p(),
                precision: n,
                slack: s,
                values: vals.iter().map(|v| v.residue().to_string()).collect(),
                on_locus: valuations.iter().all(|v| v.is_none_or(|a| a >= threshold)),
                valuations,
                threshold,
            };
            emit(opts.format, &report, || {
                let vs: Vec<String> = report.valuations.iter().map(|v| v.map_or("inf".into(), |a| a.to_string())).collect();
                format!(
                    "valuations  [{}]\nthreshold   {}\non locus    {}\n",
                    vs.join(", "),
                    report.threshold,
                    report.on_locus
                )
            })
        }
        WeightAction::Membership => {
            let field = load(opts, None)?;
            if field.degree() != kappa.d() {
                return Err(input_error(anyhow!("weight has d = {} but the field has degree {}", kappa.d(), field.degree())));
            }
            let sp = number_field::hensel_embeddings(&field, ctx.p(), n)?;
            let lvl = level(opts);
            let report = eigenvariety::eig_report(&field, &sp, &lvl, s)?;
            let lattice = eigenvariety::report_lattice(&field, &sp, &report)?;
            let in_wu = eigenvariety::in_weight_space(&kappa, &lattice, s)?;
            let point = if in_wu { Some(eigenvariety::classify_point(&kappa, &lattice, &report, &bound)?) } else { None };
            let out = MembershipReport { field: field.label.clone(), p: ctx.p(), precision: n, slack: s, level: lvl, in_wu, point };
            emit(opts.format, &out, || {
                let mut t = format!("in W(U)     {}\n", out.in_wu);
                if let Some(pt) = &out.point {
                    t += &format!(
                        "kind        {:?}\nparallel    {}\nconductor   {}\nlifts       {}\n",
                        pt.classification.kind,
                        pt.parallel,
                        pt.classification.conductor.map_or("-".into(), |c| c.to_string()),
                        pt.lift_count
                    );
                }
                t
            })
        }
    }
}

fn cmd_infinity_types(opts: &Opts) -> Result<()> {
    let field = load(opts, None)?;
    let sp = split_data(opts, &field, opts.precision)?;
    let s = slack(opts, opts.precision);
    let bound = opts.bound.clone().unwrap_or_else(|| BigInt::from(sp.ctx.p_pow(opts.precision / 4)));
    let lat = eigenvariety::infinity_type_lattice(&field, &sp, &bound, s)?;
    emit(opts.format, &lat, || {
        let rows: Vec<String> = lat
            .basis
            .iter()
            .map(|r| format!("({})", r.iter().map(BigInt::to_string).collect::<Vec<_>>().join(", ")))
            .collect();
        format!(
            "basis             {}\nrank              {}\nZ_p kernel rank   {}\ncontains (1..1)   {}\nparallel only     {}\nprecision         N = {}, slack = {}, bound = {}\n",
            rows.join(" "),
            lat.rank(),
            lat.zp_kernel_rank,
            lat.contains_parallel,
            lat.weil_parallel,
            lat.precision,
            lat.slack,
            lat.bound
        )
    })
}

fn demo_prime(opts: &Opts) -> Result<u64> {
    if opts.p == "auto" {
        return Err(input_error(anyhow!("demos need an explicit --p")));
    }
    opts.p.parse().map_err(|_| input_error(anyhow!("--p must be a prime, got {:?}", opts.p)))
}

fn cmd_demo(opts: &Opts, demo: Demo) -> Result<()> {
    let p = demo_prime(opts)?;
    PadicContext::new(p, 2)?;
    match demo {
        Demo::UnitDisc { n, terms } => {
            let r = demos::unit_disc_torsion_check(p, n, terms)?;
            emit(opts.format, &r, || {
                format!(
                    "(1+T)^(p^n) = 1   {}\nvaluation         {}\ntail bound        {}\nbound met         {}\n",
                    r.torsion_identity,
                    r.valuation.clone().unwrap_or_else(|| "inf".into()),
                    r.tail_bound,
                    r.bound_met
                )
            })
        }
        Demo::FormalDensity { exponents, trials, seed } => {
            let g = PGroup { p, exponents };
            let r = demos::formal_density_check(&g, trials, seed)?;
            emit(opts.format, &r, || format!("group order   {}\npassed        {}/{}\n", r.group.order(), r.passed, r.trials))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuotientOrdersReport {
    field: String,
    p: u64,
    precision: u32,
    level: TameLevel,
    orders: Vec<FiniteQuotientOrder>,
}

fn cmd_quotient_orders(opts: &Opts, levels: &[u32]) -> Result<()> {
    let field = load(opts, None)?;
    let sp = split_data(opts, &field, opts.precision)?;
    let lvl = level(opts);
    lvl.check(&field, Some(sp.p()))?;
    let mut orders = Vec::new();
    for &r in levels {
        if r == 0 {
            return Err(input_error(anyhow!("levels must be >= 1")));
        }
        orders.push(FiniteQuotientOrder { r, order: demos::finite_quotient_order(&field, &sp, &lvl, r)? });
    }
    let report = QuotientOrdersReport { field: field.label.clone(), p: sp.p(), precision: opts.precision, level: lvl, orders };
    emit(opts.format, &report, || {
        report.orders.iter().map(|o| format!("r = {}: {}\n", o.r, o.order)).collect()
    })
}
