//! Mazur–Tate elements and the p-adic L-series obtained by stabilizing them
//! with a root of X² − a_p X + p.
//!
//! The measure of a + p^{n+1}Z_p is α^{−(n+1)}[a/p^{n+1}]⁺ − α^{−(n+2)}[a/p^n]⁺.
//! Integrating (1+T)^{log_γ⟨x⟩} with γ = 1 + p over Z_p^× at level n+1 gives
//! a polynomial in T whose constant term is exact and whose higher
//! coefficients converge as the depth grows.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat, rat_int, Rat};
use crate::modsym::PlusSymbol;
use crate::padic::{PadicElement, PadicError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlFunError {
    #[error("root does not satisfy X^2 - a_p X + p to working precision")]
    RootMismatch,
    #[error("p = {0} divides the level")]
    BadPrime(u64),
    #[error("the critical-slope root at an ordinary prime loses all precision")]
    CriticalSlope,
    #[error("depth {depth} at p = {p} exceeds the supported range")]
    TooDeep { p: u64, depth: u32 },
    #[error(transparent)]
    Padic(#[from] PadicError),
}

fn pow_u64(p: u64, k: u32) -> u64 {
    p.checked_pow(k).expect("p^k overflows u64")
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// θ_n = Σ_{a ∈ (Z/p^{n+1})^×} [a/p^{n+1}]⁺·[a], stored as D·coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MazurTateElement {
    pub p: u64,
    pub depth: u32,
    pub denominator: i64,
    /// Indexed by a ∈ [0, p^{n+1}); zero at non-units.
    pub scaled: Vec<i64>,
}

impl MazurTateElement {
    pub fn modulus(&self) -> u64 {
        pow_u64(self.p, self.depth + 1)
    }

    pub fn coefficient(&self, a: u64) -> Rat {
        let m = self.modulus();
        rat(self.scaled[(a % m) as usize], self.denominator)
    }

    /// Image under (Z/p^{n+1})^× → (Z/p^n)^× as D-scaled sums (no renormalization).
    pub fn project(&self) -> MazurTateElement {
        assert!(self.depth >= 1, "cannot project below depth 0");
        let m = pow_u64(self.p, self.depth);
        let mut out = vec![0i64; m as usize];
        for (a, v) in self.scaled.iter().enumerate() {
            out[a % m as usize] += v;
        }
        MazurTateElement { p: self.p, depth: self.depth - 1, denominator: self.denominator, scaled: out }
    }
}

pub fn mazur_tate(phi: &PlusSymbol, p: u64, depth: u32) -> Result<MazurTateElement, PlFunError> {
    if phi.space().level().is_multiple_of(p) {
        return Err(PlFunError::BadPrime(p));
    }
    let m = pow_u64(p, depth + 1);
    if m > 50_000_000 {
        return Err(PlFunError::TooDeep { p, depth });
    }
    let scaled: Vec<i64> = (0..m)
        .into_par_iter()
        .map(|a| if a % p == 0 { 0 } else { phi.eval_scaled(a as i64, m as i64) })
        .collect();
    Ok(MazurTateElement { p, depth, denominator: phi.denominator(), scaled })
}

/// Sums over a ∈ (Z/p^{n+1})^× grouped by j with ⟨a⟩ ≡ γ^j, γ = 1 + p:
/// `level` holds Σ D[a/p^{n+1}]⁺ and `lower` holds Σ D[a/p^n]⁺.
struct Aggregates {
    level: Vec<i64>,
    lower: Vec<i64>,
}

fn aggregate(phi: &PlusSymbol, p: u64, depth: u32) -> Aggregates {
    let m = pow_u64(p, depth + 1);
    let mlow = pow_u64(p, depth);
    let teich: Vec<u64> = (1..p).map(|r| powmod(r, mlow, m)).collect();
    let lower_table: Vec<i64> = (0..mlow)
        .into_par_iter()
        .map(|b| if b % p == 0 && mlow > 1 { 0 } else { phi.eval_scaled(b as i64, mlow as i64) })
        .collect();
    let gamma = (1 + p) % m;
    let chunk = 4096u64;
    let pieces: Vec<(u64, Vec<i64>, Vec<i64>)> = (0..mlow.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(mlow);
            let mut g = powmod(gamma, start, m);
            let mut lv = Vec::with_capacity((end - start) as usize);
            let mut lw = Vec::with_capacity((end - start) as usize);
            for _ in start..end {
                let (mut s1, mut s2) = (0i64, 0i64);
                for &w in &teich {
                    let a = mulmod(w, g, m);
                    s1 += phi.eval_scaled(a as i64, m as i64);
                    s2 += lower_table[(a % mlow) as usize];
                }
                lv.push(s1);
                lw.push(s2);
                g = mulmod(g, gamma, m);
            }
            (start, lv, lw)
        })
        .collect();
    let mut level = vec![0i64; mlow as usize];
    let mut lower = vec![0i64; mlow as usize];
    for (start, lv, lw) in pieces {
        let s = start as usize;
        level[s..s + lv.len()].copy_from_slice(&lv);
        lower[s..s + lw.len()].copy_from_slice(&lw);
    }
    Aggregates { level, lower }
}

/// Σ_j A[j]·C(j, k) for k < terms, exactly.
fn binomial_moments(a: &[i64], terms: usize) -> Vec<BigInt> {
    let partial: Vec<Vec<BigInt>> = a
        .par_chunks(8192)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = vec![BigInt::zero(); terms];
            let base = c * 8192;
            for (i, &v) in chunk.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                let j = (base + i) as i128;
                let mut binom: i128 = 1;
                for (k, slot) in acc.iter_mut().enumerate() {
                    if k > 0 {
                        binom = binom * (j - k as i128 + 1) / k as i128;
                    }
                    if binom == 0 {
                        break;
                    }
                    *slot += BigInt::from(binom) * v;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![BigInt::zero(); terms];
    for part in partial {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    out
}

/// Which root of X² − a_p X + p a series is stabilized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootChoice {
    Alpha,
    Beta,
}

/// Frobenius root used for stabilization: ±π for a_p = 0, the unit root otherwise.
pub fn frobenius_root(p: u64, ap: i64, choice: RootChoice, prec: i64) -> Result<PadicElement, PlFunError> {
    if ap == 0 {
        let pi = PadicElement::pi(p, 2 * prec);
        return Ok(match choice {
            RootChoice::Alpha => pi,
            RootChoice::Beta => pi.neg(),
        });
    }
    if ap.rem_euclid(p as i64) == 0 {
        return Err(PlFunError::RootMismatch);
    }
    if choice == RootChoice::Beta {
        return Err(PlFunError::CriticalSlope);
    }
    let disc = PadicElement::from_int(p, ap * ap - 4 * p as i64, prec + 2);
    let (r, s) = disc.sqrt()?;
    let a = PadicElement::from_int(p, ap, prec + 2);
    let half = rat(1, 2);
    let cand = a.add(&r).mul_rat(&half);
    let unit = if cand.valuation_ticks() == Some(0) { cand } else { a.add(&s).mul_rat(&half) };
    Ok(unit.with_precision(prec))
}

fn check_root(root: &PadicElement, ap: i64) -> Result<(), PlFunError> {
    let p = root.prime();
    let lhs = root.mul(root).sub(&root.mul_int(ap)).add(&PadicElement::from_int(p, p as i64, 4096));
    if lhs.is_zero() {
        Ok(())
    } else {
        Err(PlFunError::RootMismatch)
    }
}

/// A p-adic L-series truncated to its first few T-coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PadicLSeries {
    pub p: u64,
    pub depth: u32,
    pub ap: i64,
    pub root: PadicElement,
    /// Coefficients of T^0, T^1, …; T^0 is exact up to the working precision.
    pub coeffs: Vec<PadicElement>,
}

/// Absolute precision in ticks of the T^k coefficient at the given depth,
/// for a measure stabilized by a root of valuation 1/2 (supersingular) or
/// 0 (ordinary).
pub fn coefficient_precision(p: u64, depth: u32, k: usize, supersingular: bool, denom_val: i64) -> i64 {
    let n = depth as i64;
    let log_k = if k <= 1 { 0 } else { (k as f64).log(p as f64).floor() as i64 };
    if supersingular {
        // half-digit ticks: the Riemann sum is good to n − ⌊log_p k⌋ digits before
        // multiplying by α^{−(n+2)}, which costs (n+2)/2 digits
        2 * (n - log_k) - (n + 2) - 2 * denom_val
    } else {
        n - log_k - denom_val
    }
}

/// Exact moments Σ_a D[a/p^{n+1}]⁺·C(j(a), k) and Σ_a D[a/p^n]⁺·C(j(a), k);
/// they do not depend on the root, so both stabilizations can share them.
#[derive(Debug, Clone)]
pub struct MazurTateMoments {
    pub p: u64,
    pub depth: u32,
    pub ap: i64,
    pub denominator: i64,
    level: Vec<BigInt>,
    lower: Vec<BigInt>,
}

pub fn moments(phi: &PlusSymbol, p: u64, depth: u32, terms: usize) -> Result<MazurTateMoments, PlFunError> {
    if phi.space().level().is_multiple_of(p) {
        return Err(PlFunError::BadPrime(p));
    }
    if pow_u64(p, depth + 1) > MAX_MODULUS {
        return Err(PlFunError::TooDeep { p, depth });
    }
    let ap = phi.curve().ap(p).expect("good prime");
    let agg = aggregate(phi, p, depth);
    Ok(MazurTateMoments {
        p,
        depth,
        ap,
        denominator: phi.denominator(),
        level: binomial_moments(&agg.level, terms),
        lower: binomial_moments(&agg.lower, terms),
    })
}

/// Largest p^{n+1} accepted; the sums cost one modular-symbol evaluation per unit.
pub const MAX_MODULUS: u64 = 1_000_000_000;

impl MazurTateMoments {
    pub fn stabilize(&self, root: &PadicElement) -> Result<PadicLSeries, PlFunError> {
        check_root(root, self.ap)?;
        Ok(assemble(self.p, self.depth, self.ap, root, self.denominator, &self.level, &self.lower))
    }
}

/// Stabilized series from Mazur–Tate data computed on the fly.
pub fn l_series(
    phi: &PlusSymbol,
    p: u64,
    depth: u32,
    root: &PadicElement,
    terms: usize,
) -> Result<PadicLSeries, PlFunError> {
    let ap = phi.curve().ap(p).map_err(|_| PlFunError::BadPrime(p))?;
    check_root(root, ap)?;
    moments(phi, p, depth, terms)?.stabilize(root)
}

/// Stabilized series from a materialized θ_n; `theta_prev_values(b)` is the
/// coefficient of θ_{n−1} at b mod p^n (the constant Φ(0) when n = 0).
pub fn stabilize(
    theta: &MazurTateElement,
    theta_prev_values: impl Fn(u64) -> Rat,
    ap: i64,
    root: &PadicElement,
    terms: usize,
) -> Result<PadicLSeries, PlFunError> {
    check_root(root, ap)?;
    let p = theta.p;
    let m = theta.modulus();
    let mlow = m / p;
    let d = theta.denominator;
    let gamma = (1 + p) % m;
    let teich: Vec<u64> = (1..p).map(|r| powmod(r, mlow, m)).collect();
    let mut level = vec![0i64; mlow as usize];
    let mut lower = vec![0i64; mlow as usize];
    let mut g = 1 % m;
    for j in 0..mlow as usize {
        for &w in &teich {
            let a = mulmod(w, g, m);
            level[j] += theta.scaled[a as usize];
            let prev = theta_prev_values(a % mlow) * rat_int(d);
            lower[j] += prev.to_integer().to_i64().expect("shared denominator");
        }
        g = mulmod(g, gamma, m);
    }
    let s1 = binomial_moments(&level, terms);
    let s2 = binomial_moments(&lower, terms);
    Ok(assemble(p, theta.depth, ap, root, d, &s1, &s2))
}

fn assemble(p: u64, depth: u32, ap: i64, root: &PadicElement, d: i64, s1: &[BigInt], s2: &[BigInt]) -> PadicLSeries {
    let supersingular = root.ramification() == 2;
    let n = depth as i64;
    let dval = crate::exact::int_valuation(&BigInt::from(d), p).unwrap_or(0) as i64;
    let ticks = if supersingular { 2 } else { 1 };
    // the root is only known to its own precision; everything else here is exact
    let work = root.precision_ticks() + ticks * (n + 4);
    let inv = root.inverse().expect("root is nonzero");
    let inv_pow = inv.pow(depth + 1);
    let dinv = Rat::new(BigInt::from(1), BigInt::from(d));
    let coeffs = s1
        .iter()
        .zip(s2)
        .enumerate()
        .map(|(k, (a, b))| {
            let a = PadicElement::from_rat(p, &(Rat::from_integer(a.clone()) * &dinv), work);
            let b = PadicElement::from_rat(p, &(Rat::from_integer(b.clone()) * &dinv), work);
            let v = inv_pow.mul(&a.sub(&b.mul(&inv)));
            if k == 0 {
                v
            } else {
                v.with_precision(coefficient_precision(p, depth, k, supersingular, dval))
            }
        })
        .collect();
    PadicLSeries { p, depth, ap, root: root.clone(), coeffs }
}

impl PadicLSeries {
    pub fn value_at_zero(&self) -> &PadicElement {
        &self.coeffs[0]
    }

    /// F'(0)·log_p(1+p): the derivative in s at s = 1 under T = (1+p)^{s−1} − 1.
    pub fn derivative_at_triv(&self) -> PadicElement {
        let c1 = &self.coeffs[1];
        let prec = c1.precision_ticks() / c1.ramification() as i64 + 4;
        let log_gamma = PadicElement::from_int(self.p, 1 + self.p as i64, prec.max(4))
            .iwasawa_log()
            .expect("1 + p is a unit");
        c1.mul(&log_gamma)
    }

    /// Evaluates the truncated polynomial at T = t.
    pub fn eval(&self, t: &PadicElement) -> PadicElement {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(t).add(c);
        }
        acc
    }

    pub fn order_of_vanishing(&self) -> Vanishing {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(k) => Vanishing::Exactly(k),
            None => Vanishing::AtLeast(self.coeffs.len()),
        }
    }
}

/// Order of vanishing at T = 0, or a lower bound when every computed
/// coefficient is indistinguishable from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "kebab-case")]
pub enum Vanishing {
    Exactly(usize),
    AtLeast(usize),
}
