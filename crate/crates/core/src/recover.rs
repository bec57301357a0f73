//! Point recovery at a supersingular prime: the square-root argument built
//! from the two stabilized p-adic L-series, its square root as log_E(P), and
//! identification of P as λ·gen.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archlfun::{gross_zagier_constant, ArchError, GZConstant};
use crate::crystalline::{eigen_data, kedlaya_frobenius, CrystallineError, EigenData};
use crate::elliptic::{CurveData, CurvePoint, EllipticError};
use crate::exact::{rat_int, rational_reconstruct, Rat};
use crate::modsym::{ManinSpace, ModSymError, PlusSymbol, DEFAULT_HECKE_BOUND};
use crate::padic::{PadicElement, PadicError};
use crate::padiclfun::{frobenius_root, moments, PlFunError, RootChoice, Vanishing};

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error("p = {p} is ordinary for this curve (a_p = {ap}); recovery is only defined at supersingular primes")]
    NotSupersingular { p: u64, ap: i64 },
    #[error("the square-root argument has a nonzero pi-part of valuation {valuation} at precision {precision}")]
    NotRational { valuation: String, precision: String },
    #[error("neither A nor -A is a square in Q_p (A = {0})")]
    NotASquare(String),
    #[error("lambda is not recognizably rational at the achieved precision (digits {digits})")]
    ReconstructionFailed { digits: String },
    #[error("the L-series vanishes to order >= {0} at T = 0 through all computed terms")]
    NoDerivative(usize),
    #[error("the L-series does not vanish at T = 0; the analytic rank is 0")]
    RankZero,
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    ModSym(#[from] ModSymError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    PlFun(#[from] PlFunError),
    #[error(transparent)]
    Crystalline(#[from] CrystallineError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// Guard digits for certified reconstruction: 2 + ⌈log_p 100⌉.
pub fn guard_digits(p: u64) -> i64 {
    let mut k = 0;
    let mut acc = 1u64;
    while acc < 100 {
        acc *= p;
        k += 1;
    }
    2 + k
}

/// A = δ·((1−1/α)^{−2}L_α − (1−1/β)^{−2}L_β), coerced to Q_p.
pub fn sqrt_argument(
    delta: &PadicElement,
    l_alpha: &PadicElement,
    l_beta: &PadicElement,
    alpha: &PadicElement,
) -> Result<PadicElement, RecoverError> {
    let p = alpha.prime();
    let beta = alpha.galois_conjugate()?;
    let one = PadicElement::one(p, alpha.precision_ticks() + 8).to_ramified();
    let euler = |r: &PadicElement| -> Result<PadicElement, PadicError> {
        let f = one.sub(&r.inverse()?);
        f.mul(&f).inverse()
    };
    let bracket = euler(alpha)?.mul(l_alpha).sub(&euler(&beta)?.mul(l_beta));
    let a = delta.mul(&bracket);
    let odd = a.pi_coordinate();
    if !odd.is_zero() {
        let v = odd.valuation_ticks().unwrap();
        // v(π-part) must reach the achieved precision less one digit
        if v < a.precision_ticks() - 2 {
            return Err(RecoverError::NotRational {
                valuation: crate::exact::rat_to_string(&Rat::new(v.into(), 2.into())),
                precision: crate::exact::rat_to_string(&a.precision()),
            });
        }
    }
    Ok(a.even_part().coerce_to_qp()?)
}

/// π-part valuation of A in digits, or None when it is indistinguishable from 0.
pub fn pi_part_valuation(a_ramified: &PadicElement) -> Option<Rat> {
    a_ramified.pi_coordinate().valuation()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub a_rational: bool,
    pub a_square: bool,
    pub lambda_reconstructed: bool,
    pub exact_multiple_check: bool,
}

/// Outcome of identifying √(±A) as λ·log_E(gen).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    /// +1 when √A is used, −1 when √(−A) is (the α/β labeling is convention).
    pub sign: i8,
    pub ell_plus: PadicElement,
    pub ell_minus: PadicElement,
    /// Digits of λ known relative to its valuation.
    pub relative_digits: i64,
    /// Certified λ (guarded bound), up to the sign of the square root.
    #[serde(with = "opt_rat")]
    pub lambda: Option<Rat>,
    /// Smallest-height rational consistent with the digits; not a certificate.
    #[serde(with = "opt_rat")]
    pub candidate: Option<Rat>,
    /// v(v·ℓ − u·log gen) for the certified or candidate λ = u/v, in digits.
    #[serde(with = "opt_rat")]
    pub residual_valuation: Option<Rat>,
}

mod opt_rat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&crate::exact::rat_to_string(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| crate::exact::parse_rat(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

/// u/v with |u|, v ≤ bound and u/v ≡ x mod p^k, for a unit x.
fn reconstruct_unit(x: &PadicElement, k: i64, bound: &BigInt) -> Option<Rat> {
    if k <= 0 || bound < &BigInt::one() {
        return None;
    }
    let p = x.prime();
    let modulus = num_traits::pow(BigInt::from(p), k as usize);
    let r = x.to_rat();
    let inv = crate::exact::mod_inverse(r.denom(), &modulus)?;
    let residue = (r.numer() * inv) % &modulus;
    rational_reconstruct(&residue, &modulus, bound).ok()
}

fn pow_p_rat(p: u64, k: i64) -> Rat {
    let m = num_traits::pow(BigInt::from(p), k.unsigned_abs() as usize);
    if k >= 0 { Rat::from_integer(m) } else { Rat::new(BigInt::one(), m) }
}

/// λ with ℓ = λ·log_gen, reconstructed from the digits of ℓ/log_gen.
fn fit_lambda(ell: &PadicElement, log_gen: &PadicElement, p: u64) -> (i64, Option<Rat>, Option<Rat>) {
    let Ok(ratio) = ell.div(log_gen) else {
        return (0, None, None);
    };
    let Some(v) = ratio.valuation_ticks() else {
        return (0, None, None);
    };
    let v = v / ratio.ramification() as i64;
    let scale = pow_p_rat(p, v);
    let unit = ratio.mul_rat(&pow_p_rat(p, -v));
    let r = unit.relative_precision_ticks() / unit.ramification() as i64;
    let pr = BigInt::from(p);
    let guarded_exp = r / 2 - guard_digits(p);
    let guarded = if guarded_exp >= 1 {
        reconstruct_unit(&unit, r, &num_traits::pow(pr.clone(), guarded_exp as usize)).map(|q| q * &scale)
    } else {
        None
    };
    let wang = (num_traits::pow(pr, r.max(0) as usize) / 2u32).sqrt();
    let candidate = reconstruct_unit(&unit, r, &wang).map(|q| q * &scale);
    (r, guarded, candidate)
}

/// Smallest-height rational matching A / log_gen² to its known digits.
pub fn observed_ratio(a: &PadicElement, log_gen: &PadicElement) -> Option<Rat> {
    let ratio = a.div(&log_gen.mul(log_gen)).ok()?;
    let v = ratio.valuation_ticks()?;
    let unit = ratio.mul_rat(&pow_p_rat(a.prime(), -v));
    let r = unit.relative_precision_ticks();
    let wang = (num_traits::pow(BigInt::from(a.prime()), r.max(0) as usize) / 2u32).sqrt();
    reconstruct_unit(&unit, r, &wang).map(|q| q * pow_p_rat(a.prime(), v))
}

/// Square roots of ±A as logarithms, both signs tried; λ = ℓ/log_E(gen).
pub fn recover_lambda(a: &PadicElement, log_gen: &PadicElement) -> Result<LambdaFit, RecoverError> {
    let p = a.prime();
    let mut fits = Vec::new();
    for sign in [1i8, -1] {
        let arg = if sign == 1 { a.clone() } else { a.neg() };
        let Ok((ell, minus)) = arg.sqrt() else { continue };
        let (r, lambda, candidate) = fit_lambda(&ell, log_gen, p);
        let chosen = lambda.clone().or_else(|| candidate.clone());
        let residual = chosen.as_ref().and_then(|q| {
            let diff = ell
                .mul_rat(&rat_int(q.denom().to_i64()?))
                .sub(&log_gen.mul_rat(&Rat::from_integer(q.numer().clone())));
            Some(diff.valuation().unwrap_or_else(|| diff.precision()))
        });
        fits.push(LambdaFit { sign, ell_plus: ell, ell_minus: minus, relative_digits: r, lambda, candidate, residual_valuation: residual });
    }
    if fits.is_empty() {
        return Err(RecoverError::NotASquare(a.to_string()));
    }
    // certified fits first, then the candidate of smaller height
    let height = |f: &LambdaFit| {
        let key = f.lambda.as_ref().or(f.candidate.as_ref());
        let cert = if f.lambda.is_some() { 0 } else { 1 };
        let h = key.map(|q| q.numer().abs().max(q.denom().clone())).unwrap_or_else(|| BigInt::from(u64::MAX));
        (cert, h)
    };
    fits.sort_by_key(height);
    Ok(fits.swap_remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryInputs {
    pub curve: [i64; 5],
    pub conductor: u64,
    pub generator: [String; 2],
    pub p: u64,
    pub depth: u32,
    pub frobenius_precision: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub inputs: RecoveryInputs,
    pub l_alpha: PadicElement,
    pub l_beta: PadicElement,
    pub vanishing_alpha: Vanishing,
    pub vanishing_beta: Vanishing,
    pub pairing: PadicElement,
    pub delta: PadicElement,
    #[serde(with = "crate::exact::rat_serde")]
    pub c_e: Rat,
    /// A in Q(π) before coercion, kept to report its π-part.
    pub a_full: PadicElement,
    pub a_value: Option<PadicElement>,
    #[serde(with = "opt_rat")]
    pub a_pi_valuation: Option<Rat>,
    pub log_gen: PadicElement,
    pub fit: Option<LambdaFit>,
    /// A / log_E(gen)², identified as a small rational when the digits allow;
    /// this is λ² up to the labeling sign and measures the overall normalization.
    #[serde(with = "opt_rat")]
    pub observed_ratio: Option<Rat>,
    pub flags: Flags,
    /// Set when a step failed; the report is still emitted with what was computed.
    pub failure: Option<String>,
}

/// Knobs for [`recover`]; the defaults are desk-scale.
#[derive(Debug, Clone, Copy)]
pub struct RecoverConfig {
    pub depth: u32,
    pub frobenius_precision: i64,
    pub hecke_bound: u64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig { depth: 5, frobenius_precision: 8, hecke_bound: DEFAULT_HECKE_BOUND }
    }
}

pub struct Pipeline {
    pub eigen: EigenData,
    pub gz: GZConstant,
    pub report: RecoveryReport,
}

fn first_derivative(order: Vanishing) -> Result<(), RecoverError> {
    match order {
        Vanishing::Exactly(0) => Err(RecoverError::RankZero),
        Vanishing::Exactly(_) => Ok(()),
        Vanishing::AtLeast(k) => Err(RecoverError::NoDerivative(k)),
    }
}

/// Runs every stage and returns the report; hard errors (bad input, rank 0,
/// ordinary p) are returned as `Err`, while NotASquare and failed
/// reconstruction are recorded in the report.
pub fn recover(curve: &CurveData, gen: &CurvePoint, p: u64, cfg: RecoverConfig) -> Result<Pipeline, RecoverError> {
    let ap = curve.ap(p)?;
    if ap != 0 {
        return Err(RecoverError::NotSupersingular { p, ap });
    }
    if curve.is_torsion(gen) {
        return Err(RecoverError::Elliptic(EllipticError::TorsionPoint));
    }
    let frob_prec = cfg.frobenius_precision.max(cfg.depth as i64 + 4);
    let ((series, frob), (gz, log_gen)) = rayon::join(
        || {
            rayon::join(
                || -> Result<_, RecoverError> {
                    let phi = PlusSymbol::new(ManinSpace::new(curve.conductor()), curve, cfg.hecke_bound)?;
                    Ok(moments(&phi, p, cfg.depth, 3)?)
                },
                || kedlaya_frobenius(curve, p, frob_prec),
            )
        },
        || (gross_zagier_constant(curve, gen), curve.padic_log_point(gen, p, frob_prec)),
    );
    let series = series?;
    let frob = frob?;
    let gz = gz?;
    let log_gen = log_gen?;
    let root_prec = 2 * frob_prec + cfg.depth as i64 + 8;
    let alpha = frobenius_root(p, ap, RootChoice::Alpha, root_prec)?;
    let beta = frobenius_root(p, ap, RootChoice::Beta, root_prec)?;
    let s_alpha = series.stabilize(&alpha)?;
    let s_beta = series.stabilize(&beta)?;
    first_derivative(s_alpha.order_of_vanishing())
        .or_else(|_| first_derivative(s_beta.order_of_vanishing()))?;
    let l_alpha = s_alpha.derivative_at_triv();
    let l_beta = s_beta.derivative_at_triv();
    let eigen = eigen_data(&frob, &gz)?;

    let [generator_x, generator_y] = gen.to_strings().ok_or(EllipticError::TorsionPoint)?;
    let inputs = RecoveryInputs {
        curve: curve.coefficients(),
        conductor: curve.conductor(),
        generator: [generator_x, generator_y],
        p,
        depth: cfg.depth,
        frobenius_precision: frob_prec,
    };
    let euler = |r: &PadicElement| {
        let one = PadicElement::one(p, root_prec).to_ramified();
        let f = one.sub(&r.inverse().unwrap());
        f.mul(&f).inverse().unwrap()
    };
    let a_full = eigen.delta.mul(&euler(&alpha).mul(&l_alpha).sub(&euler(&beta).mul(&l_beta)));
    let mut report = RecoveryReport {
        inputs,
        l_alpha: l_alpha.clone(),
        l_beta: l_beta.clone(),
        vanishing_alpha: s_alpha.order_of_vanishing(),
        vanishing_beta: s_beta.order_of_vanishing(),
        pairing: eigen.pairing.clone(),
        delta: eigen.delta.clone(),
        c_e: gz.value.clone(),
        a_pi_valuation: pi_part_valuation(&a_full),
        a_full,
        a_value: None,
        log_gen: log_gen.clone(),
        fit: None,
        observed_ratio: None,
        flags: Flags { a_rational: false, a_square: false, lambda_reconstructed: false, exact_multiple_check: false },
        failure: None,
    };
    let a = match sqrt_argument(&eigen.delta, &l_alpha, &l_beta, &alpha) {
        Ok(a) => a,
        Err(e) => {
            report.failure = Some(e.to_string());
            return Ok(Pipeline { eigen, gz, report });
        }
    };
    report.flags.a_rational = true;
    report.a_value = Some(a.clone());
    report.observed_ratio = observed_ratio(&a, &log_gen);
    match recover_lambda(&a, &log_gen) {
        Ok(fit) => {
            report.flags.a_square = true;
            report.flags.lambda_reconstructed = fit.lambda.is_some();
            report.flags.exact_multiple_check = fit.lambda.is_some()
                && fit.residual_valuation.as_ref().is_some_and(|v| {
                    *v >= fit.ell_plus.precision().min(log_gen.precision())
                });
            if fit.lambda.is_none() {
                report.failure = Some(
                    RecoverError::ReconstructionFailed { digits: format!("{}", fit.ell_plus) }.to_string(),
                );
            }
            report.fit = Some(fit);
        }
        Err(e) => report.failure = Some(e.to_string()),
    }
    Ok(Pipeline { eigen, gz, report })
}

impl RecoveryReport {
    /// Exit status class: 0 when λ is certified, 2 for NotASquare, 3 otherwise.
    pub fn status(&self) -> i32 {
        if self.flags.lambda_reconstructed {
            0
        } else if self.flags.a_rational && !self.flags.a_square {
            2
        } else {
            3
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    PassExact {
        #[serde(with = "crate::exact::rat_serde")]
        constant: Rat,
    },
    Pass {
        #[serde(with = "crate::exact::rat_serde")]
        constant: Rat,
    },
    Fail {
        reason: String,
    },
    Skipped {
        reason: String,
    },
}

/// The observed constant A / (λ·log_E gen)², with its value and the
/// comparison −(1+1/p)·C(E) times that constant for the report.
pub fn verify_supersingular_identity(report: &RecoveryReport) -> Verdict {
    let (Some(fit), Some(a)) = (&report.fit, &report.a_value) else {
        return Verdict::Skipped { reason: report.failure.clone().unwrap_or_else(|| "no square root".into()) };
    };
    let Some(lambda) = &fit.lambda else {
        return Verdict::Skipped { reason: "lambda not certified".into() };
    };
    let signed = if fit.sign == 1 { a.clone() } else { a.neg() };
    let lg = report.log_gen.mul_rat(lambda);
    let Ok(ratio) = signed.div(&lg.mul(&lg)) else {
        return Verdict::Fail { reason: "log of lambda*gen indistinguishable from 0".into() };
    };
    let digits = ratio.relative_precision_ticks();
    let bound = BigInt::from(999);
    match reconstruct_unit(&ratio, digits, &bound) {
        Some(c) if c.is_one() => Verdict::PassExact { constant: c },
        Some(c) => Verdict::Pass { constant: c },
        None => Verdict::Fail { reason: format!("constant {ratio} is not a small rational") },
    }
}

/// (1 − 1/α)(1 − 1/β) for the roots ±π, which equals 1 + 1/p.
pub fn euler_product(p: u64, prec_ticks: i64) -> PadicElement {
    let alpha = PadicElement::pi(p, prec_ticks);
    let beta = alpha.neg();
    let one = PadicElement::one(p, prec_ticks).to_ramified();
    one.sub(&alpha.inverse().unwrap()).mul(&one.sub(&beta.inverse().unwrap()))
}
