//! Elliptic curves over Q in long Weierstrass form: the group law, point
//! counting, reduction types, the formal group and p-adic point logarithms.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int_valuation, parse_rat, prime_factors, rat_int, rat_to_string, rat_valuation, Rat};
use crate::padic::PadicElement;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EllipticError {
    #[error("singular Weierstrass equation (discriminant 0)")]
    SingularCurve,
    #[error("conductor {conductor} has prime factor {prime} not dividing the discriminant")]
    ConductorMismatch { conductor: u64, prime: u64 },
    #[error("point ({0}) is not on the curve")]
    PointNotOnCurve(String),
    #[error("p = {0} is a prime of bad reduction")]
    BadReductionPrime(u64),
    #[error("point has finite order")]
    TorsionPoint,
    #[error("cannot parse curve: {0}")]
    Parse(String),
}

/// A Weierstrass model y² + a1xy + a3y = x³ + a2x² + a4x + a6 with its conductor.
#[derive(Clone, PartialEq, Eq)]
pub struct CurveData {
    a: [i64; 5],
    conductor: u64,
    b2: BigInt,
    b4: BigInt,
    b6: BigInt,
    b8: BigInt,
    c4: BigInt,
    c6: BigInt,
    disc: BigInt,
}

impl CurveData {
    pub fn new(a: [i64; 5], conductor: u64) -> Result<Self, EllipticError> {
        let [a1, a2, a3, a4, a6] = a.map(BigInt::from);
        let b2 = &a1 * &a1 + 4 * &a2;
        let b4 = 2 * &a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + 4 * &a6;
        let b8 = &a1 * &a1 * &a6 + 4 * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        let c4 = &b2 * &b2 - 24 * &b4;
        let b2_cubed: BigInt = &b2 * &b2 * &b2;
        let c6 = -b2_cubed + 36 * &b2 * &b4 - 216 * &b6;
        let b2sq_b8: BigInt = &b2 * &b2 * &b8;
        let disc: BigInt = -b2sq_b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6;
        if disc.is_zero() {
            return Err(EllipticError::SingularCurve);
        }
        if conductor == 0 {
            return Err(EllipticError::Parse("conductor must be positive".into()));
        }
        for q in prime_factors(conductor) {
            if !(&disc % q).is_zero() {
                return Err(EllipticError::ConductorMismatch { conductor, prime: q });
            }
        }
        Ok(CurveData { a, conductor, b2, b4, b6, b8, c4, c6, disc })
    }

    pub fn coefficients(&self) -> [i64; 5] {
        self.a
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    pub fn c4(&self) -> &BigInt {
        &self.c4
    }

    pub fn c6(&self) -> &BigInt {
        &self.c6
    }

    /// The invariants b2, b4, b6, b8.
    pub fn b_invariants(&self) -> [&BigInt; 4] {
        [&self.b2, &self.b4, &self.b6, &self.b8]
    }

    fn ar(&self, i: usize) -> Rat {
        rat_int(self.a[i])
    }

    pub fn contains(&self, x: &Rat, y: &Rat) -> bool {
        let [a1, a2, a3, a4, a6] = [0, 1, 2, 3, 4].map(|i| self.ar(i));
        let lhs = y * y + &a1 * x * y + &a3 * y;
        let rhs = x * x * x + &a2 * x * x + &a4 * x + &a6;
        lhs == rhs
    }

    pub fn point(&self, x: Rat, y: Rat) -> Result<CurvePoint, EllipticError> {
        if !self.contains(&x, &y) {
            return Err(EllipticError::PointNotOnCurve(format!(
                "{}, {}",
                rat_to_string(&x),
                rat_to_string(&y)
            )));
        }
        Ok(CurvePoint::Affine { x, y })
    }

    pub fn neg(&self, p: &CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine {
                x: x.clone(),
                y: -y - self.ar(0) * x - self.ar(2),
            },
        }
    }

    /// Chord-tangent addition.
    pub fn add(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        let (x1, y1, x2, y2) = match (p, q) {
            (CurvePoint::Infinity, _) => return q.clone(),
            (_, CurvePoint::Infinity) => return p.clone(),
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let [a1, a2, a3, a4, a6] = [0, 1, 2, 3, 4].map(|i| self.ar(i));
        let (lambda, nu) = if x1 == x2 {
            let denom = y1 + y2 + &a1 * x2 + &a3;
            if denom.is_zero() {
                return CurvePoint::Infinity;
            }
            let d = rat_int(2) * y1 + &a1 * x1 + &a3;
            let lambda = (rat_int(3) * x1 * x1 + rat_int(2) * &a2 * x1 + &a4 - &a1 * y1) / &d;
            let nu = (-(x1 * x1 * x1) + &a4 * x1 + rat_int(2) * &a6 - &a3 * y1) / &d;
            (lambda, nu)
        } else {
            let dx = x2 - x1;
            ((y2 - y1) / &dx, (y1 * x2 - y2 * x1) / &dx)
        };
        let x3 = &lambda * &lambda + &a1 * &lambda - &a2 - x1 - x2;
        let y3 = -(&lambda + &a1) * &x3 - &nu - &a3;
        CurvePoint::Affine { x: x3, y: y3 }
    }

    /// n·P by double-and-add (negative n allowed).
    pub fn mul(&self, p: &CurvePoint, n: i64) -> CurvePoint {
        let mut base = if n < 0 { self.neg(p) } else { p.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = CurvePoint::Infinity;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &base);
            }
            base = self.add(&base, &base);
            k >>= 1;
        }
        acc
    }

    /// True iff P has order at most 12.
    pub fn is_torsion(&self, p: &CurvePoint) -> bool {
        let mut q = p.clone();
        for _ in 1..=12 {
            if q.is_infinity() {
                return true;
            }
            q = self.add(&q, p);
        }
        false
    }

    /// Number of projective points on the reduction mod p of this model
    /// (singular reductions included).
    pub fn count_points_mod(&self, p: u64) -> u64 {
        let red = |v: i64| v.rem_euclid(p as i64) as u64;
        let [a1, a2, a3, a4, a6] = self.a.map(red);
        let affine = if p == 2 {
            let mut n = 0;
            for x in 0..2u64 {
                for y in 0..2u64 {
                    let lhs = y * y + a1 * x * y + a3 * y;
                    let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                    if (lhs + rhs) % 2 == 0 {
                        n += 1;
                    }
                }
            }
            n
        } else {
            let mut chi = vec![-1i64; p as usize];
            chi[0] = 0;
            for r in 1..p {
                chi[((r * r) % p) as usize] = 1;
            }
            let mut n: i64 = 0;
            for x in 0..p {
                // (2y + a1x + a3)² = 4(x³ + a2x² + a4x + a6) + (a1x + a3)²
                let f = (((x * x % p) * x + a2 * (x * x % p) + a4 * x + a6) % p) * 4 % p;
                let h = (a1 * x + a3) % p;
                let d = (f + h * h) % p;
                n += 1 + chi[d as usize];
            }
            n as u64
        };
        affine + 1
    }

    /// p + 1 − #E(F_p) for any prime; at bad primes of a minimal model this
    /// is 1, −1 or 0 according to split, non-split or additive reduction.
    pub fn local_trace(&self, p: u64) -> i64 {
        p as i64 + 1 - self.count_points_mod(p) as i64
    }

    pub fn ap(&self, p: u64) -> Result<i64, EllipticError> {
        if self.conductor.is_multiple_of(p) {
            return Err(EllipticError::BadReductionPrime(p));
        }
        Ok(self.local_trace(p))
    }

    pub fn reduction_type(&self, p: u64) -> ReductionType {
        let vn = int_valuation(&BigInt::from(self.conductor), p).unwrap_or(0);
        match vn {
            0 => {
                if self.local_trace(p).rem_euclid(p as i64) == 0 {
                    ReductionType::GoodSupersingular
                } else {
                    ReductionType::GoodOrdinary
                }
            }
            1 => ReductionType::Multiplicative,
            _ => ReductionType::Additive,
        }
    }

    /// Good primes in [lo, hi] with a_p = 0.
    pub fn supersingular_primes(&self, lo: u64, hi: u64) -> Vec<u64> {
        crate::exact::primes_up_to(hi)
            .into_iter()
            .filter(|&p| p >= lo && !self.conductor.is_multiple_of(p) && self.local_trace(p) == 0)
            .collect()
    }

    /// Power series w(t) = −1/y in the parameter t = −x/y, to O(t^{order+1}).
    pub fn formal_w(&self, order: usize) -> Vec<Rat> {
        let [a1, a2, a3, a4, a6] = [0, 1, 2, 3, 4].map(|i| self.ar(i));
        let n = order + 1;
        // w = t³ + a1 t w + a2 t² w + a3 w² + a4 t w² + a6 w³; each pass fixes one more coefficient
        let mut w = vec![Rat::zero(); n];
        if n > 3 {
            w[3] = Rat::one();
        }
        for _ in 0..n {
            let w2 = series_mul(&w, &w, n);
            let w3 = series_mul(&w2, &w, n);
            let mut next = vec![Rat::zero(); n];
            if n > 3 {
                next[3] = Rat::one();
            }
            for k in 0..n {
                let mut v = next[k].clone();
                if k >= 1 {
                    v += &a1 * &w[k - 1] + &a4 * &w2[k - 1];
                }
                if k >= 2 {
                    v += &a2 * &w[k - 2];
                }
                v += &a3 * &w2[k] + &a6 * &w3[k];
                next[k] = v;
            }
            if next == w {
                break;
            }
            w = next;
        }
        w
    }

    /// Expansion of the invariant differential dx/(2y + a1x + a3) as f(t)dt,
    /// returned as the coefficients of f to O(t^order).
    pub fn invariant_differential(&self, order: usize) -> Vec<Rat> {
        let n = order + 1;
        let w = self.formal_w(n + 3);
        // W = w/t³ is a unit series
        let big_w: Vec<Rat> = (0..n + 1).map(|k| w[k + 3].clone()).collect();
        let dw: Vec<Rat> = (0..n + 1)
            .map(|k| {
                if k + 1 < big_w.len() {
                    &big_w[k + 1] * rat_int(k as i64 + 1)
                } else {
                    Rat::zero()
                }
            })
            .collect();
        // numerator −2W − tW'
        let mut num = vec![Rat::zero(); n];
        for k in 0..n {
            num[k] = rat_int(-2) * &big_w[k];
            if k >= 1 {
                num[k] -= &dw[k - 1];
            }
        }
        // denominator W(−2 + a1 t + a3 t³ W)
        let mut inner = vec![Rat::zero(); n];
        inner[0] = rat_int(-2);
        if n > 1 {
            inner[1] += self.ar(0);
        }
        for k in 3..n {
            inner[k] += self.ar(2) * &big_w[k - 3];
        }
        let den = series_mul(&big_w[..n], &inner, n);
        let f = series_mul(&num, &series_inverse(&den, n), n);
        f[..order].to_vec()
    }

    /// Formal logarithm λ(t) = ∫ ω truncated at t^order.
    pub fn formal_log(&self, order: usize) -> FormalLog {
        assert!(order >= 2, "truncation order must be at least 2");
        let f = self.invariant_differential(order);
        let mut coeffs = vec![Rat::zero(); order + 1];
        for (k, c) in f.iter().enumerate() {
            coeffs[k + 1] = c / rat_int(k as i64 + 1);
        }
        FormalLog { order, coeffs }
    }

    /// Formal-group parameter t = −x/y of an affine point.
    pub fn parameter(p: &CurvePoint) -> Option<Rat> {
        match p {
            CurvePoint::Infinity => Some(Rat::zero()),
            CurvePoint::Affine { x, y } => {
                if y.is_zero() {
                    None
                } else {
                    Some(-x / y)
                }
            }
        }
    }

    /// log_E(P) in Q_p to absolute precision `prec`, via λ(t(mP))/m with
    /// m = #E(F_p)·p^extra.
    pub fn padic_log_point_with_multiplier(
        &self,
        pt: &CurvePoint,
        p: u64,
        prec: i64,
        extra: u32,
    ) -> Result<PadicElement, EllipticError> {
        if self.conductor.is_multiple_of(p) {
            return Err(EllipticError::BadReductionPrime(p));
        }
        if self.is_torsion(pt) {
            return Err(EllipticError::TorsionPoint);
        }
        let m = self.count_points_mod(p) as i64 * (p as i64).pow(extra);
        let q = self.mul(pt, m);
        let t = Self::parameter(&q).expect("point in the formal group has y ≠ 0");
        let vt = rat_valuation(&t, p).expect("non-torsion multiple is not O");
        assert!(vt >= 1, "multiple of the point does not reduce to O");
        let vm = int_valuation(&BigInt::from(m), p).unwrap() as i64;
        let work = prec + vm + 2;
        // terms c_j t^j with j·v(t) − log_p(j) ≥ work are invisible
        let mut order = 2usize;
        while (order as i64 + 1) * vt - ilog(order as u64 + 1, p) < work + 1 {
            order += 1;
        }
        let log = self.formal_log(order);
        let tp = PadicElement::from_rat(p, &t, work + 8);
        let mut acc = PadicElement::zero(p, work + 8);
        let mut tk = PadicElement::one(p, work + 8);
        for k in 1..=order {
            tk = tk.mul(&tp);
            let c = &log.coeffs[k];
            if !c.is_zero() {
                acc = acc.add(&tk.mul_rat(c));
            }
        }
        let m_p = PadicElement::from_int(p, m, work + 8);
        Ok(acc.with_precision(work).div(&m_p).expect("m ≠ 0").with_precision(prec))
    }

    pub fn padic_log_point(&self, pt: &CurvePoint, p: u64, prec: i64) -> Result<PadicElement, EllipticError> {
        self.padic_log_point_with_multiplier(pt, p, prec, 0)
    }
}

fn ilog(n: u64, p: u64) -> i64 {
    let mut k = 0;
    let mut v = p;
    while v <= n {
        k += 1;
        v *= p;
    }
    k
}

impl fmt::Debug for CurveData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CurveData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = self.a;
        write!(f, "{a1},{a2},{a3},{a4},{a6};{}", self.conductor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionType {
    GoodOrdinary,
    GoodSupersingular,
    Multiplicative,
    Additive,
}

impl fmt::Display for ReductionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionType::GoodOrdinary => "good-ordinary",
            ReductionType::GoodSupersingular => "good-supersingular",
            ReductionType::Multiplicative => "multiplicative",
            ReductionType::Additive => "additive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurvePoint {
    Infinity,
    Affine { x: Rat, y: Rat },
}

impl CurvePoint {
    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    /// `["x", "y"]` as rational strings, or `null` for the point at infinity.
    pub fn to_strings(&self) -> Option<[String; 2]> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine { x, y } => Some([rat_to_string(x), rat_to_string(y)]),
        }
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Infinity => f.write_str("O"),
            CurvePoint::Affine { x, y } => write!(f, "({}, {})", rat_to_string(x), rat_to_string(y)),
        }
    }
}

/// Truncated formal logarithm; `coeffs[k]` is the coefficient of t^k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalLog {
    pub order: usize,
    pub coeffs: Vec<Rat>,
}

impl FormalLog {
    /// Compositional inverse exp(s), coefficients of s^0..s^order.
    ///
    /// Lagrange inversion: [s^n] exp = (1/n)·[t^{n−1}] (t/λ(t))^n.
    pub fn exp(&self) -> Vec<Rat> {
        let n = self.order + 1;
        let shifted: Vec<Rat> = (0..n).map(|k| self.coeffs.get(k + 1).cloned().unwrap_or_else(Rat::zero)).collect();
        let g = series_inverse(&shifted, n);
        let mut out = vec![Rat::zero(); n];
        let mut gk = vec![Rat::zero(); n];
        gk[0] = Rat::one();
        for k in 1..n {
            gk = series_mul(&gk, &g, n);
            out[k] = &gk[k - 1] / rat_int(k as i64);
        }
        out
    }

    /// Evaluates the truncated series at a rational.
    pub fn eval(&self, t: &Rat) -> Rat {
        self.coeffs.iter().rev().fold(Rat::zero(), |acc, c| acc * t + c)
    }
}

pub(crate) fn series_mul(a: &[Rat], b: &[Rat], n: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

pub(crate) fn series_inverse(a: &[Rat], n: usize) -> Vec<Rat> {
    assert!(!a[0].is_zero(), "series with zero constant term is not invertible");
    let mut out = vec![Rat::zero(); n];
    out[0] = a[0].recip();
    for k in 1..n {
        let mut s = Rat::zero();
        for j in 1..=k.min(a.len() - 1) {
            s += &a[j] * &out[k - j];
        }
        out[k] = -s * &out[0];
    }
    out
}

/// Curve input with an optional generator, as read from the command line or a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveInput {
    pub curve: CurveData,
    pub generator: Option<CurvePoint>,
}

#[derive(Deserialize)]
struct CurveJson {
    a: [i64; 5],
    #[serde(rename = "N")]
    n: u64,
    generator: Option<[String; 2]>,
}

impl FromStr for CurveInput {
    type Err = EllipticError;

    /// Accepts `"a1,a2,a3,a4,a6;N"` or `{"a":[..],"N":N,"generator":["x","y"]}`.
    fn from_str(s: &str) -> Result<Self, EllipticError> {
        let s = s.trim();
        let perr = |m: String| EllipticError::Parse(m);
        if s.starts_with('{') {
            let j: CurveJson = serde_json::from_str(s).map_err(|e| perr(e.to_string()))?;
            let curve = CurveData::new(j.a, j.n)?;
            let generator = match j.generator {
                None => None,
                Some([x, y]) => {
                    let x = parse_rat(&x).map_err(|e| perr(e.to_string()))?;
                    let y = parse_rat(&y).map_err(|e| perr(e.to_string()))?;
                    Some(curve.point(x, y)?)
                }
            };
            return Ok(CurveInput { curve, generator });
        }
        let (coeffs, n) = s
            .split_once(';')
            .ok_or_else(|| perr(format!("expected \"a1,a2,a3,a4,a6;N\", got {s:?}")))?;
        let a: Vec<i64> = coeffs
            .split(',')
            .map(|c| c.trim().parse::<i64>().map_err(|e| perr(format!("{c:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        let a: [i64; 5] = a
            .try_into()
            .map_err(|_| perr("expected five coefficients".into()))?;
        let n = n.trim().parse::<u64>().map_err(|e| perr(format!("conductor: {e}")))?;
        Ok(CurveInput { curve: CurveData::new(a, n)?, generator: None })
    }
}

/// Naive logarithmic height of the x-coordinate, log max(|num|, |den|).
pub fn naive_height(p: &CurvePoint) -> f64 {
    match p {
        CurvePoint::Infinity => 0.0,
        CurvePoint::Affine { x, .. } => {
            let big = if x.numer().abs() > *x.denom() { x.numer().abs() } else { x.denom().clone() };
            bigint_ln(&big)
        }
    }
}

/// Natural logarithm of a positive big integer.
pub fn bigint_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}
