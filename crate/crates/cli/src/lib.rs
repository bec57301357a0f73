//! Argument handling and command dispatch for the `prpoint` binary.

pub mod output;

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{rngs::StdRng, Rng, SeedableRng};

use prpoint_core::archlfun::{gross_zagier_constant, l_value, real_period, terms_for_tolerance};
use prpoint_core::crystalline::{eigen_data, kedlaya_frobenius};
use prpoint_core::elliptic::{CurveData, CurveInput, CurvePoint};
use prpoint_core::exact::{is_prime, parse_rat, prime_factors, primes_up_to, rat, rat_to_string};
use prpoint_core::modsym::{format_value, ManinSpace, PlusSymbol, DEFAULT_HECKE_BOUND};
use prpoint_core::padic::PadicElement;
use prpoint_core::padiclfun::{frobenius_root, l_series, mazur_tate, RootChoice};
use prpoint_core::recover::{recover, verify_supersingular_identity, RecoverConfig};

use output::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_NOT_A_SQUARE: i32 = 2;
pub const EXIT_RECONSTRUCTION_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Largest p^{n+1} for which `theta` prints every coefficient.
const THETA_PRINT_LIMIT: u64 = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "prpoint", version, about = "p-adic L-functions at supersingular primes and point recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Curve as "a1,a2,a3,a4,a6;N" or a JSON object {"a": [...], "N": N, "generator": ["x", "y"]}
    #[arg(long, global = true)]
    pub curve: Option<String>,
    /// File holding a curve in either accepted format
    #[arg(long = "curve-file", global = true)]
    pub curve_file: Option<PathBuf>,
    #[arg(long = "p", global = true)]
    pub p: Option<u64>,
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// p-adic precision in digits (Frobenius matrix and logarithms)
    #[arg(long, global = true)]
    pub prec: Option<i64>,
    /// Term count: a_p bound, number of T-coefficients, or number of sampled cusps
    #[arg(long, global = true)]
    pub terms: Option<usize>,
    /// Generator as "x,y" with rational coordinates
    #[arg(long, global = true)]
    pub gen: Option<String>,
    /// Tail bound for the archimedean L-series (capped at 1e-10)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, env = "PRPOINT_THREADS")]
    pub threads: Option<usize>,
    /// Seed for sampled cusps
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Stabilizing root for plseries
    #[arg(long, global = true, value_enum, default_value_t = RootArg::Alpha)]
    pub root: RootArg,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Invariants, bad and supersingular primes, and C(E) when a generator is given
    CurveInfo,
    /// Traces of Frobenius a_p
    Ap,
    /// Plus modular symbol summary and sampled values
    Modsym,
    /// Mazur–Tate element θ_n
    Theta,
    /// Stabilized p-adic L-series
    Plseries,
    /// Kedlaya Frobenius matrix and eigen-data
    Frobenius,
    /// Point recovery report
    Recover,
    /// Point recovery followed by the identity check
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootArg {
    Alpha,
    Beta,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

type Outcome = Result<(String, i32), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

/// Parses `argv` (including the program name), runs the command and writes
/// its output. Returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Domain(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_DOMAIN
        }
    }
}

fn load_curve(cli: &Cli) -> Result<(CurveData, Option<CurvePoint>), Failure> {
    let text = match (&cli.curve, &cli.curve_file) {
        (Some(s), None) => s.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?,
        (Some(_), Some(_)) => return Err(usage("give only one of --curve and --curve-file")),
        (None, None) => return Err(usage("a curve is required (--curve or --curve-file)")),
    };
    let input = CurveInput::from_str(&text).map_err(|e| usage(e.to_string()))?;
    let gen = match &cli.gen {
        None => input.generator,
        Some(g) => {
            let (x, y) = g.split_once(',').ok_or_else(|| usage(format!("--gen expects \"x,y\", got {g:?}")))?;
            let x = parse_rat(x.trim()).map_err(|e| usage(format!("--gen x: {e}")))?;
            let y = parse_rat(y.trim()).map_err(|e| usage(format!("--gen y: {e}")))?;
            Some(input.curve.point(x, y).map_err(|e| usage(e.to_string()))?)
        }
    };
    Ok((input.curve, gen))
}

fn require_p(cli: &Cli, curve: &CurveData) -> Result<u64, Failure> {
    let p = cli.p.ok_or_else(|| usage("--p is required"))?;
    if p < 5 {
        return Err(usage(format!("--p must be at least 5, got {p}")));
    }
    if !is_prime(p) {
        return Err(usage(format!("--p {p} is not prime")));
    }
    if curve.conductor().is_multiple_of(p) {
        return Err(usage(format!("p = {p} divides the conductor {}", curve.conductor())));
    }
    Ok(p)
}

fn require_depth(cli: &Cli, default: u32) -> Result<u32, Failure> {
    let d = cli.depth.unwrap_or(default);
    if d < 1 {
        return Err(usage("--depth must be at least 1"));
    }
    Ok(d)
}

fn emit<T: serde::Serialize>(cli: &Cli, value: &T, table: String) -> String {
    if cli.json {
        let mut s = serde_json::to_string_pretty(value).expect("serializable output");
        s.push('\n');
        s
    } else {
        table
    }
}

fn run(cli: &Cli) -> Outcome {
    let (curve, gen) = load_curve(cli)?;
    match cli.command {
        Command::CurveInfo => curve_info(cli, &curve, gen.as_ref()),
        Command::Ap => ap(cli, &curve),
        Command::Modsym => modsym(cli, &curve),
        Command::Theta => theta(cli, &curve),
        Command::Plseries => plseries(cli, &curve),
        Command::Frobenius => frobenius(cli, &curve, gen.as_ref()),
        Command::Recover | Command::Verify => recover_cmd(cli, &curve, gen.as_ref()),
    }
}

fn curve_info(cli: &Cli, curve: &CurveData, gen: Option<&CurvePoint>) -> Outcome {
    let bad_primes: Vec<BadPrime> = prime_factors(curve.conductor())
        .into_iter()
        .map(|p| BadPrime { p, reduction: curve.reduction_type(p).to_string() })
        .collect();
    let generator = match gen {
        None => None,
        Some(g) => {
            let c = gross_zagier_constant(curve, g).map_err(domain)?;
            let [x, y] = g.to_strings().ok_or_else(|| usage("generator is the point at infinity"))?;
            Some(GeneratorInfo {
                x,
                y,
                height: c.height,
                l_derivative: c.l_derivative,
                omega_plus: c.omega_plus,
                c_e: rat_to_string(&c.value),
                c_e_float: c.float_value,
                c_e_residual: c.float_residual,
                non_integral: c.non_integral,
            })
        }
    };
    let tol = cli.tol.unwrap_or(1e-12);
    if tol.is_nan() || tol <= 0.0 {
        return Err(usage("--tol must be positive"));
    }
    let series_terms = terms_for_tolerance(curve.conductor(), tol.min(1e-10));
    // with the wrong sign the two-sided series is visibly nonzero
    let odd = l_value(curve, series_terms, -1).map_err(domain)?;
    let (root_number, l1) = if odd.value.abs() < 1e-6 {
        (-1, 0.0)
    } else {
        (1, l_value(curve, series_terms, 1).map_err(domain)?.value)
    };
    let info = CurveInfo {
        schema: schema_tag("curve-info"),
        coefficients: curve.coefficients(),
        conductor: curve.conductor(),
        discriminant: curve.discriminant().to_string(),
        c4: curve.c4().to_string(),
        c6: curve.c6().to_string(),
        bad_primes,
        supersingular_primes: curve.supersingular_primes(5, 100),
        omega_plus: real_period(curve).omega_plus,
        root_number,
        l_value: l1,
        series_terms,
        generator,
    };
    let mut t = String::new();
    let _ = writeln!(t, "curve          {:?}", info.coefficients);
    let _ = writeln!(t, "conductor      {}", info.conductor);
    let _ = writeln!(t, "discriminant   {}", info.discriminant);
    let _ = writeln!(t, "c4, c6         {}, {}", info.c4, info.c6);
    for b in &info.bad_primes {
        let _ = writeln!(t, "bad prime      {} ({})", b.p, b.reduction);
    }
    let _ = writeln!(t, "supersingular  {:?} (5 <= p <= 100)", info.supersingular_primes);
    let _ = writeln!(t, "Omega+         {:.15}", info.omega_plus);
    let _ = writeln!(t, "root number    {:+}", info.root_number);
    let _ = writeln!(t, "L(E,1)         {:.15} ({} terms)", info.l_value, info.series_terms);
    if let Some(g) = &info.generator {
        let _ = writeln!(t, "generator      ({}, {})", g.x, g.y);
        let _ = writeln!(t, "height         {:.12}", g.height);
        let _ = writeln!(t, "L'(E,1)        {:.15}", g.l_derivative);
        let _ = writeln!(t, "C(E)           {} (float {:.10}, residual {:.1e})", g.c_e, g.c_e_float, g.c_e_residual);
    }
    Ok((emit(cli, &info, t), EXIT_OK))
}

fn ap(cli: &Cli, curve: &CurveData) -> Outcome {
    let primes = match cli.p {
        Some(p) => {
            if !is_prime(p) {
                return Err(usage(format!("--p {p} is not prime")));
            }
            vec![p]
        }
        None => primes_up_to(cli.terms.unwrap_or(50) as u64),
    };
    let values: Vec<ApEntry> = primes
        .into_iter()
        .map(|p| ApEntry { p, ap: curve.local_trace(p), reduction: curve.reduction_type(p).to_string() })
        .collect();
    let mut t = String::new();
    if values.len() == 1 {
        let _ = writeln!(t, "{}", values[0].ap);
    } else {
        for v in &values {
            let _ = writeln!(t, "{:>5} {:>5}  {}", v.p, v.ap, v.reduction);
        }
    }
    let list = ApList { schema: schema_tag("ap"), conductor: curve.conductor(), values };
    Ok((emit(cli, &list, t), EXIT_OK))
}

fn plus_symbol(curve: &CurveData) -> Result<PlusSymbol, Failure> {
    PlusSymbol::new(ManinSpace::new(curve.conductor()), curve, DEFAULT_HECKE_BOUND).map_err(domain)
}

fn modsym(cli: &Cli, curve: &CurveData) -> Outcome {
    let phi = plus_symbol(curve)?;
    let mut rng = StdRng::seed_from_u64(cli.seed);
    let mut cusps = vec![rat(0, 1)];
    for _ in 0..cli.terms.unwrap_or(8) {
        let q: i64 = rng.gen_range(1..=200);
        let a: i64 = rng.gen_range(0..q);
        cusps.push(rat(a, q));
    }
    let samples: Vec<CuspValue> = cusps
        .iter()
        .map(|r| CuspValue { cusp: rat_to_string(r), value: format_value(&phi.eval_cusp(r)) })
        .collect();
    let m = ModSym {
        schema: schema_tag("modsym"),
        level: curve.conductor(),
        dimension: phi.space().dimension(),
        generators: phi.space().num_generators(),
        denominator: phi.denominator(),
        seed: cli.seed,
        samples,
    };
    let mut t = String::new();
    let _ = writeln!(t, "level        {}", m.level);
    let _ = writeln!(t, "dimension    {}", m.dimension);
    let _ = writeln!(t, "denominator  {}", m.denominator);
    for s in &m.samples {
        let _ = writeln!(t, "[{}]+ = {}", s.cusp, s.value);
    }
    Ok((emit(cli, &m, t), EXIT_OK))
}

fn theta(cli: &Cli, curve: &CurveData) -> Outcome {
    let p = require_p(cli, curve)?;
    let depth = require_depth(cli, 1)?;
    let modulus = p.checked_pow(depth + 1).filter(|&m| m <= THETA_PRINT_LIMIT);
    let Some(modulus) = modulus else {
        return Err(usage(format!("p^(depth+1) exceeds {THETA_PRINT_LIMIT}; use plseries for deep levels")));
    };
    let phi = plus_symbol(curve)?;
    let th = mazur_tate(&phi, p, depth).map_err(domain)?;
    let coefficients: Vec<ThetaEntry> = (1..modulus)
        .filter(|a| a % p != 0)
        .map(|a| ThetaEntry { a, value: rat_to_string(&th.coefficient(a)) })
        .collect();
    let mut t = String::new();
    let _ = writeln!(t, "theta_{depth} at p = {p} over (Z/{modulus})^x");
    for c in &coefficients {
        let _ = writeln!(t, "{:>8}  {}", c.a, c.value);
    }
    let out = Theta { schema: schema_tag("theta"), p, depth, modulus, coefficients };
    Ok((emit(cli, &out, t), EXIT_OK))
}

fn plseries(cli: &Cli, curve: &CurveData) -> Outcome {
    let p = require_p(cli, curve)?;
    let depth = require_depth(cli, 3)?;
    let terms = cli.terms.unwrap_or(3).max(2);
    let ap = curve.ap(p).map_err(domain)?;
    let choice = match cli.root {
        RootArg::Alpha => RootChoice::Alpha,
        RootArg::Beta => RootChoice::Beta,
    };
    let prec = cli.prec.unwrap_or(depth as i64 + 20);
    let root = frobenius_root(p, ap, choice, prec).map_err(domain)?;
    let phi = plus_symbol(curve)?;
    let s = l_series(&phi, p, depth, &root, terms).map_err(domain)?;
    let out = PlSeries {
        schema: schema_tag("plseries"),
        p,
        depth,
        ap,
        root: choice,
        vanishing: s.order_of_vanishing(),
        derivative: s.derivative_at_triv(),
        coefficients: s.coeffs.clone(),
    };
    let mut t = String::new();
    let _ = writeln!(t, "p = {p}, depth {depth}, a_p = {ap}, root {choice:?}");
    for (k, c) in out.coefficients.iter().enumerate() {
        let _ = writeln!(t, "T^{k}: {c}");
    }
    let _ = writeln!(t, "order at T=0: {:?}", out.vanishing);
    let _ = writeln!(t, "L'(1) = {}", out.derivative);
    Ok((emit(cli, &out, t), EXIT_OK))
}

fn frobenius(cli: &Cli, curve: &CurveData, gen: Option<&CurvePoint>) -> Outcome {
    let p = require_p(cli, curve)?;
    let m = cli.prec.unwrap_or(6);
    if m < 1 {
        return Err(usage("--prec must be positive"));
    }
    let f = kedlaya_frobenius(curve, p, m).map_err(domain)?;
    let trace = f.trace();
    let det = f.det();
    let eigen = match (f.ap, gen) {
        (0, Some(g)) => {
            let c = gross_zagier_constant(curve, g).map_err(domain)?;
            let d = eigen_data(&f, &c).map_err(domain)?;
            Some(Eigen {
                alpha: d.alpha,
                beta: d.beta,
                omega_alpha: d.omega_alpha,
                omega_beta: d.omega_beta,
                omega_star: d.omega_star,
                pairing: d.pairing,
                c_e: rat_to_string(&c.value),
                delta: d.delta,
            })
        }
        _ => None,
    };
    let out = Frobenius {
        schema: schema_tag("frobenius"),
        p,
        precision: m,
        ap: f.ap,
        short_model: [f.a.to_string(), f.b.to_string()],
        u: rat_to_string(&f.u),
        trace_matches_ap: trace.agrees_with(&PadicElement::from_int(p, f.ap, m)),
        det_matches_p: det.agrees_with(&PadicElement::from_int(p, p as i64, m)),
        matrix: f.matrix.clone(),
        trace,
        det,
        eigen,
    };
    let mut t = String::new();
    let _ = writeln!(t, "short model    y^2 = x^3 + ({})x + ({}),  omega_min = {}*dx/y", out.short_model[0], out.short_model[1], out.u);
    let _ = writeln!(t, "F on {{dx/y, x dx/y}} (columns are images), to O({p}^{m}):");
    for row in &out.matrix {
        let _ = writeln!(t, "  [ {}   {} ]", row[0], row[1]);
    }
    let _ = writeln!(t, "trace = {}  (a_p = {}: {})", out.trace, out.ap, if out.trace_matches_ap { "ok" } else { "MISMATCH" });
    let _ = writeln!(t, "det   = {}  (p: {})", out.det, if out.det_matches_p { "ok" } else { "MISMATCH" });
    if let Some(e) = &out.eigen {
        let _ = writeln!(t, "[w_beta, w_alpha] = {}", e.pairing);
        let _ = writeln!(t, "C(E) = {}, delta_E = {}", e.c_e, e.delta);
    }
    Ok((emit(cli, &out, t), EXIT_OK))
}

fn recover_cmd(cli: &Cli, curve: &CurveData, gen: Option<&CurvePoint>) -> Outcome {
    let p = require_p(cli, curve)?;
    let gen = gen.ok_or_else(|| usage("--gen is required for recover and verify"))?;
    let depth = require_depth(cli, 5)?;
    let prec = cli.prec.unwrap_or((depth as i64 + 4).max(8));
    if prec < depth as i64 + 4 {
        return Err(usage(format!("--prec must be at least depth + 4 = {}", depth + 4)));
    }
    let cfg = RecoverConfig { depth, frobenius_precision: prec, hecke_bound: DEFAULT_HECKE_BOUND };
    let pipeline = match recover(curve, gen, p, cfg) {
        Ok(pl) => pl,
        Err(e) => return Err(domain(e)),
    };
    let report = pipeline.report;
    let code = match report.status() {
        0 => EXIT_OK,
        2 => EXIT_NOT_A_SQUARE,
        _ => EXIT_RECONSTRUCTION_FAILED,
    };
    let mut t = report_table(&report);
    if cli.command == Command::Verify {
        let verdict = verify_supersingular_identity(&report);
        let _ = writeln!(t, "verdict        {verdict:?}");
        let out = Verify { schema: schema_tag("verify"), report, verdict };
        return Ok((emit(cli, &out, t), code));
    }
    let out = Recover { schema: schema_tag("recover"), report };
    Ok((emit(cli, &out, t), code))
}

fn report_table(r: &prpoint_core::recover::RecoveryReport) -> String {
    let opt = |q: &Option<prpoint_core::exact::Rat>| q.as_ref().map(rat_to_string).unwrap_or_else(|| "-".into());
    let mut t = String::new();
    let i = &r.inputs;
    let _ = writeln!(t, "curve          {:?} N = {}", i.curve, i.conductor);
    let _ = writeln!(t, "generator      ({}, {})", i.generator[0], i.generator[1]);
    let _ = writeln!(t, "p, depth       {}, {}", i.p, i.depth);
    let _ = writeln!(t, "L'_alpha       {}", r.l_alpha);
    let _ = writeln!(t, "L'_beta        {}", r.l_beta);
    let _ = writeln!(t, "C(E)           {}", rat_to_string(&r.c_e));
    let _ = writeln!(t, "delta_E        {}", r.delta);
    let _ = writeln!(t, "A              {}", r.a_value.as_ref().map(|a| a.to_string()).unwrap_or_else(|| r.a_full.to_string()));
    let _ = writeln!(t, "pi-part of A   {}", opt(&r.a_pi_valuation));
    let _ = writeln!(t, "log_E(gen)     {}", r.log_gen);
    let _ = writeln!(t, "A/log(gen)^2   {}", opt(&r.observed_ratio));
    if let Some(f) = &r.fit {
        let _ = writeln!(t, "sign           {}", f.sign);
        let _ = writeln!(t, "ell            +/- {}", f.ell_plus);
        let _ = writeln!(t, "lambda digits  {}", f.relative_digits);
        let _ = writeln!(t, "lambda         {}", f.lambda.as_ref().map(|q| format!("+/- {}", rat_to_string(q))).unwrap_or_else(|| "not certified".into()));
        let _ = writeln!(t, "candidate      {}", f.candidate.as_ref().map(|q| format!("+/- {}", rat_to_string(q))).unwrap_or_else(|| "-".into()));
        let _ = writeln!(t, "residual v     {}", opt(&f.residual_valuation));
    }
    let fl = &r.flags;
    let _ = writeln!(
        t,
        "flags          rational={} square={} reconstructed={} exact={}",
        fl.a_rational, fl.a_square, fl.lambda_reconstructed, fl.exact_multiple_check
    );
    if let Some(msg) = &r.failure {
        let _ = writeln!(t, "failure        {msg}");
    }
    t
}
