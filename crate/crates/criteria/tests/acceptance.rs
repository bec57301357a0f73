//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use prpoint_core::archlfun::{gross_zagier_constant, l_value, real_period, terms_for_tolerance, GZ_MAX_DENOMINATOR, GZ_TOLERANCE};
use prpoint_core::crystalline::{kedlaya_frobenius, pair};
use prpoint_core::elliptic::CurveData;
use prpoint_core::exact::{rat, rat_int, rat_to_string, Rat};
use prpoint_core::modsym::{ManinSpace, PlusSymbol, DEFAULT_HECKE_BOUND};
use prpoint_core::padic::PadicElement;
use prpoint_core::padiclfun::{frobenius_root, l_series, mazur_tate, RootChoice, Vanishing};
use prpoint_core::recover::{euler_product, pi_part_valuation, recover, verify_supersingular_identity, RecoverConfig, RecoveryReport, Verdict};
use prpoint_criteria::{Fixture, Outcome, E37A, E65A, RANK_ONE};

const DEPTH: u32 = 5;

fn plus_symbol(curve: &CurveData) -> PlusSymbol {
    PlusSymbol::new(ManinSpace::new(curve.conductor()), curve, DEFAULT_HECKE_BOUND).expect("plus symbol")
}

fn small(q: &Rat, bound: i64) -> bool {
    let num = Rat::from_integer(q.numer().clone());
    let den = Rat::from_integer(q.denom().clone());
    num < rat_int(bound) && num > rat_int(-bound) && den < rat_int(bound)
}

fn show(q: &Option<Rat>) -> String {
    q.as_ref().map(rat_to_string).unwrap_or_else(|| "none".into())
}

fn run_recoveries() -> Vec<(Fixture, Result<RecoveryReport, String>)> {
    RANK_ONE
        .iter()
        .map(|fx| {
            let e = fx.curve();
            let g = fx.generator(&e);
            let cfg = RecoverConfig { depth: DEPTH, ..RecoverConfig::default() };
            (*fx, recover(&e, &g, fx.p, cfg).map(|pl| pl.report).map_err(|err| err.to_string()))
        })
        .collect()
}

fn end_to_end(reports: &[(Fixture, Result<RecoveryReport, String>)]) -> Outcome {
    let need = rat_int(DEPTH as i64 - 1);
    let mut passed = Vec::new();
    let mut notes = Vec::new();
    for (fx, r) in reports {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                notes.push(format!("{} p={}: error {e}", fx.label, fx.p));
                continue;
            }
        };
        let Some(fit) = &r.fit else {
            notes.push(format!("{} p={}: {}", fx.label, fx.p, r.failure.clone().unwrap_or_default()));
            continue;
        };
        let certified = fit.lambda.as_ref().is_some_and(|l| small(l, 1000));
        let residual_ok = fit.residual_valuation.as_ref().is_some_and(|v| *v >= need);
        if certified && residual_ok {
            passed.push(fx.label);
        }
        notes.push(format!(
            "{} p={}: lambda {} candidate +/-{} residual v={} (need {})",
            fx.label,
            fx.p,
            show(&fit.lambda),
            show(&fit.candidate.as_ref().map(|q| if *q < rat_int(0) { -q.clone() } else { q.clone() })),
            show(&fit.residual_valuation),
            rat_to_string(&need)
        ));
    }
    let pass = passed.len() >= 2 && passed.contains(&E37A.label);
    Outcome::new(pass, notes.join("; "))
}

fn euler_factor() -> Outcome {
    let mut bad = Vec::new();
    for p in [5u64, 7, 11, 13] {
        let prod = euler_product(p, 40);
        let (even, odd) = prod.to_rat_pair();
        let want = rat_int(1) + rat(1, p as i64);
        if even != want || odd != rat_int(0) {
            bad.push(format!("p={p}: {prod}"));
        }
    }
    if bad.is_empty() {
        Outcome::new(true, "(1-1/alpha)(1-1/beta) = 1+1/p as exact rationals for p = 5, 7, 11, 13")
    } else {
        Outcome::new(false, bad.join("; "))
    }
}

fn rank_zero() -> Outcome {
    let e = CurveData::new([0, -1, 1, -10, -20], 11).expect("11a");
    let phi = plus_symbol(&e);
    let phi0 = phi.eval_cusp(&rat_int(0));
    // archimedean oracle for Φ(0) = L(E,1)/Ω+
    let terms = terms_for_tolerance(11, 1e-12);
    let numeric = l_value(&e, terms, 1).map(|v| v.value / real_period(&e).omega_plus);
    let arch_ok = numeric.as_ref().is_ok_and(|x| (x - prpoint_core::exact::rat_to_f64(&phi0)).abs() < 1e-8);
    let mut notes = vec![format!("11a Phi(0) = {} (L/Omega = {:.10})", rat_to_string(&phi0), numeric.unwrap_or(f64::NAN))];
    let mut pass = arch_ok;
    for (p, depth) in [(19u64, 3u32), (29, 2)] {
        let ap = e.ap(p).expect("good prime");
        let mut values = Vec::new();
        for choice in [RootChoice::Alpha, RootChoice::Beta] {
            let root = frobenius_root(p, ap, choice, 40).expect("supersingular root");
            let s = l_series(&phi, p, depth, &root, 2).expect("series");
            let one = PadicElement::from_int(p, 1, 80);
            let f = one.sub(&root.inverse().expect("unit"));
            let want = f.mul(&f).mul_rat(&phi0);
            pass &= s.value_at_zero().agrees_with(&want) && s.value_at_zero().precision_ticks() >= 8;
            values.push(s.value_at_zero().clone());
        }
        let conj = values[0].galois_conjugate().is_ok_and(|c| c.agrees_with(&values[1]));
        pass &= conj && !values[0].agrees_with(&values[1]);
        notes.push(format!("p={p}: L_alpha(0) matches to {} digits, conjugate={conj}", rat_to_string(&values[0].precision())));
    }
    Outcome::new(pass, notes.join("; "))
}

fn rank_one(reports: &[(Fixture, Result<RecoveryReport, String>)]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (fx, r) in reports {
        match r {
            Ok(r) => {
                let ok = r.vanishing_alpha == Vanishing::Exactly(1) && r.vanishing_beta == Vanishing::Exactly(1);
                pass &= ok;
                notes.push(format!("{} p={}: orders {:?}/{:?}, L'_alpha = {}", fx.label, fx.p, r.vanishing_alpha, r.vanishing_beta, r.l_alpha));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{}: {e}", fx.label));
            }
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn kedlaya() -> Outcome {
    let curves = [
        CurveData::new([0, 0, 1, -1, 0], 37),
        CurveData::new([0, -1, 1, -10, -20], 11),
        CurveData::new([0, 1, 1, 0, 0], 43),
        CurveData::new([0, 1, 1, -2, 0], 389),
        CurveData::new([1, 0, 1, 4, -6], 14),
    ];
    let m = 6;
    let (mut checked, mut failed) = (0, Vec::new());
    for e in curves.into_iter().map(|c| c.expect("fixture")) {
        for p in [5u64, 7, 11, 13] {
            if e.conductor() % p == 0 {
                continue;
            }
            let f = match kedlaya_frobenius(&e, p, m) {
                Ok(f) => f,
                Err(err) => {
                    failed.push(format!("N={} p={p}: {err}", e.conductor()));
                    continue;
                }
            };
            let ap = PadicElement::from_int(p, e.ap(p).expect("good prime"), m);
            let trace_ok = f.trace().agrees_with(&ap) && f.trace().precision_ticks() >= m;
            let det_ok = f.det().agrees_with(&PadicElement::from_int(p, p as i64, m + 1));
            let basis = |i: usize| {
                let mut v = [PadicElement::zero(p, 20), PadicElement::zero(p, 20)];
                v[i] = PadicElement::one(p, 20);
                v
            };
            let cup = pair(&f.apply(&basis(0)), &f.apply(&basis(1)));
            let cup_ok = cup.agrees_with(&pair(&basis(0), &basis(1)).mul_int(p as i64)) && cup.precision_ticks() >= m;
            if !(trace_ok && det_ok && cup_ok) {
                failed.push(format!("N={} p={p}: trace {} det {} cup {}", e.conductor(), f.trace(), f.det(), cup));
            }
            checked += 1;
        }
    }
    let pass = failed.is_empty() && checked >= 16;
    let detail = if failed.is_empty() {
        format!("{checked} (curve, p) pairs over 5 curves: trace = a_p, det = p, [Fx,Fy] = p[x,y] mod p^{m}")
    } else {
        failed.join("; ")
    };
    Outcome::new(pass, detail)
}

fn pi_part(reports: &[(Fixture, Result<RecoveryReport, String>)]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (fx, r) in reports {
        let Ok(r) = r else {
            pass = false;
            continue;
        };
        let prec = r.a_full.precision();
        let v = pi_part_valuation(&r.a_full);
        let ok = v.as_ref().is_none_or(|v| *v >= prec.clone() - rat_int(1));
        pass &= ok;
        let shown = v.map(|v| rat_to_string(&v)).unwrap_or_else(|| "zero to precision".into());
        notes.push(format!("{}: v(pi-part) {} at precision {}", fx.label, shown, rat_to_string(&prec)));
    }
    Outcome::new(pass, notes.join("; "))
}

fn norm_relation() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for (coeffs, n_level, p) in [([0, 0, 1, -1, 0], 37u64, 17u64), ([0, -1, 1, -10, -20], 11, 19)] {
        let e = CurveData::new(coeffs, n_level).expect("fixture");
        let phi = plus_symbol(&e);
        let phi0 = phi.eval_cusp(&rat_int(0));
        for n in 1..=3u32 {
            let top = mazur_tate(&phi, p, n).expect("theta");
            let proj = top.project();
            let low = (n >= 2).then(|| mazur_tate(&phi, p, n - 2).expect("theta"));
            for b in (1..proj.modulus()).filter(|b| b % p != 0) {
                let rhs = match &low {
                    Some(t) => -t.coefficient(b % t.modulus()),
                    None => -phi0.clone(),
                };
                checked += 1;
                if proj.coefficient(b) != rhs {
                    failures.push(format!("N={n_level} p={p} n={n} b={b}"));
                }
            }
        }
    }
    if failures.is_empty() {
        Outcome::new(true, format!("proj(theta_n) = -theta_(n-2) exactly at {checked} residues (37a p=17, 11a p=19, n = 1..3)"))
    } else {
        Outcome::new(false, failures.into_iter().take(5).collect::<Vec<_>>().join("; "))
    }
}

fn gross_zagier() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let max_den = rat_int(GZ_MAX_DENOMINATOR as i64);
    for fx in RANK_ONE.iter().chain([&E65A]) {
        let e = fx.curve();
        let g = fx.generator(&e);
        let Ok(c) = gross_zagier_constant(&e, &g) else {
            pass = false;
            notes.push(format!("{}: no constant", fx.label));
            continue;
        };
        let den_ok = Rat::from_integer(c.value.denom().clone()) <= max_den;
        let neg_ok = gross_zagier_constant(&e, &e.neg(&g)).is_ok_and(|m| m.value == c.value);
        // the 65a fixture has 2-torsion at (0, 0); the others have trivial torsion
        let torsion = [e.point(rat_int(0), rat_int(0)).ok()]
            .into_iter()
            .flatten()
            .filter(|t| e.is_torsion(t) && !t.is_infinity());
        let mut tors_ok = true;
        let mut tors_count = 0;
        for t in torsion {
            tors_count += 1;
            tors_ok &= gross_zagier_constant(&e, &e.add(&g, &t)).is_ok_and(|m| m.value == c.value);
        }
        let ok = den_ok && c.float_residual < GZ_TOLERANCE && neg_ok && tors_ok;
        pass &= ok;
        notes.push(format!(
            "{}: C = {} residual {:.1e} (-gen ok={neg_ok}, +torsion checked {tors_count} ok={tors_ok})",
            fx.label,
            rat_to_string(&c.value),
            c.float_residual
        ));
    }
    pass &= notes.iter().any(|n| n.contains("checked 1 ok=true"));
    Outcome::new(pass, notes.join("; "))
}

fn formal_group() -> Outcome {
    let e = E37A.curve();
    let order = 20;
    let log = e.formal_log(order);
    let exp = log.exp();
    // exp(log(t)) truncated at t^21
    let n = order + 1;
    let mul = |a: &[Rat], b: &[Rat]| {
        let mut out = vec![rat_int(0); n];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(n - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut composed = vec![rat_int(0); n];
    let mut power = vec![rat_int(0); n];
    power[0] = rat_int(1);
    for c in exp.iter().skip(1) {
        power = mul(&power, &log.coeffs[..n]);
        for (acc, x) in composed.iter_mut().zip(&power) {
            *acc += c * x;
        }
    }
    let identity = composed.iter().enumerate().all(|(i, c)| *c == if i == 1 { rat_int(1) } else { rat_int(0) });

    let g = E37A.generator(&e);
    let q = e.point(rat_int(1), rat_int(0)).expect("(1,0) on 37a");
    let mut hom = true;
    let mut mult = true;
    // the multiplier p^extra inflates heights quadratically, so keep p small
    for p in [5u64, 7] {
        let prec = 8;
        let lg = e.padic_log_point(&g, p, prec).expect("log");
        let lq = e.padic_log_point(&q, p, prec).expect("log");
        let lsum = e.padic_log_point(&e.add(&g, &q), p, prec).expect("log");
        hom &= lsum.agrees_with(&lg.add(&lq));
        for k in 2..=4 {
            hom &= e.padic_log_point(&e.mul(&g, k), p, prec).is_ok_and(|l| l.agrees_with(&lg.mul_int(k)));
        }
        for extra in 1..=(if p == 5 { 2 } else { 1 }) {
            mult &= e.padic_log_point_with_multiplier(&g, p, prec, extra).is_ok_and(|l| l.agrees_with(&lg));
        }
    }
    Outcome::new(
        identity && hom && mult,
        format!("exp(log t) = t + O(t^21): {identity}; log(P+Q) = log P + log Q at p = 5, 7: {hom}; multiplier independence: {mult}"),
    )
}

fn verify_constant(reports: &[(Fixture, Result<RecoveryReport, String>)]) -> Outcome {
    let mut constants = Vec::new();
    let mut notes = Vec::new();
    for (fx, r) in reports {
        let Ok(r) = r else { continue };
        match verify_supersingular_identity(r) {
            Verdict::PassExact { constant } | Verdict::Pass { constant } => {
                notes.push(format!("{}: constant {}", fx.label, rat_to_string(&constant)));
                constants.push(constant);
            }
            other => notes.push(format!(
                "{}: {:?} (A/log(gen)^2 = {})",
                fx.label,
                other,
                show(&r.observed_ratio)
            )),
        }
    }
    let pass = constants.len() >= 2 && constants.windows(2).all(|w| w[0] == w[1]);
    if constants.is_empty() {
        notes.insert(0, "no fixture passes verify".into());
    }
    Outcome::new(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let reports = run_recoveries();
    let checks: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("end-to-end recovery at depth 5", &|| end_to_end(&reports)),
        ("Euler factor identity", &euler_factor),
        ("rank-0 interpolation and conjugacy", &rank_zero),
        ("rank-1 vanishing", &|| rank_one(&reports)),
        ("Kedlaya trace, determinant and cup product", &kedlaya),
        ("rationality of A", &|| pi_part(&reports)),
        ("supersingular norm relation", &norm_relation),
        ("Gross-Zagier constant", &gross_zagier),
        ("formal group logarithm", &formal_group),
        ("verify constant", &|| verify_constant(&reports)),
    ];
    let mut failures = 0;
    for (i, (title, check)) in checks.iter().enumerate() {
        let outcome = check();
        println!("{}", outcome.line(i + 1, title));
        failures += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} passed, {failures} failed in {:.1}s",
        checks.len() - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
