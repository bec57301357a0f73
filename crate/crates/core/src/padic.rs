//! Capped absolute precision arithmetic in Q_p and in the ramified quadratic
//! extension Q_p(π), π² = −p.
//!
//! An element is stored as `p^shift · (c0 + c1·π)` with integer coordinates
//! reduced modulo the power of p that the absolute precision allows. Precision
//! is counted in units of 1/e (p-adic digits for e = 1, π-adic digits for
//! e = 2); the public API reports valuations and precisions as rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int_valuation, mod_inverse, parse_rat, rat_to_string, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("division by an element indistinguishable from zero")]
    DivisionByIndistinguishableZero,
    #[error("valuation {0} is odd; no square root in this field")]
    OddValuation(String),
    #[error("unit part is not a square modulo p")]
    NonResidue,
    #[error("argument is not a p-adic unit")]
    NotAUnit,
    #[error("mismatched primes {0} and {1}")]
    PrimeMismatch(u64, u64),
    #[error("element has a nonzero π-coordinate (valuation {0}); not in Q_p")]
    NotInBaseField(String),
    #[error("operation requires e = {0}")]
    WrongRamification(u8),
    #[error("malformed serialized element: {0}")]
    Malformed(String),
}

fn floor_half(n: i64) -> i64 {
    n.div_euclid(2)
}

fn ceil_half(n: i64) -> i64 {
    -(-n).div_euclid(2)
}

fn pow_p(p: u64, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    BigInt::from(p).pow(k as u32)
}

/// Element of Q_p (e = 1) or Q_p(π) with π² = −p (e = 2), known modulo π^prec.
#[derive(Clone, PartialEq, Eq)]
pub struct PadicElement {
    p: u64,
    e: u8,
    c: [BigInt; 2],
    shift: i64,
    prec: i64,
}

impl PadicElement {
    fn raw(p: u64, e: u8, c0: BigInt, c1: BigInt, shift: i64, prec: i64) -> Self {
        assert!(e == 1 || e == 2, "ramification index must be 1 or 2");
        assert!(p >= 3, "p must be odd");
        PadicElement {
            p,
            e,
            c: [c0, c1],
            shift,
            prec,
        }
        .normalize()
    }

    /// Coordinate exponent caps: coordinate i is known modulo p^caps[i].
    fn caps(&self) -> [i64; 2] {
        if self.e == 1 {
            [self.prec, i64::MIN]
        } else {
            [ceil_half(self.prec), floor_half(self.prec)]
        }
    }

    fn normalize(mut self) -> Self {
        let caps = self.caps();
        for i in 0..2 {
            if i >= self.e as usize {
                self.c[i] = BigInt::zero();
                continue;
            }
            let k = caps[i] - self.shift;
            if k <= 0 {
                self.c[i] = BigInt::zero();
            } else {
                self.c[i] = self.c[i].mod_floor(&pow_p(self.p, k));
            }
        }
        let k = self
            .c
            .iter()
            .filter_map(|x| int_valuation(x, self.p))
            .min();
        match k {
            None => self.shift = 0,
            Some(k) if k > 0 => {
                let d = pow_p(self.p, k as i64);
                for x in self.c.iter_mut() {
                    *x = &*x / &d;
                }
                self.shift += k as i64;
            }
            _ => {}
        }
        self
    }

    /// Zero known modulo p^prec (e = 1).
    pub fn zero(p: u64, prec: i64) -> Self {
        Self::raw(p, 1, BigInt::zero(), BigInt::zero(), 0, prec)
    }

    pub fn one(p: u64, prec: i64) -> Self {
        Self::from_int(p, 1, prec)
    }

    pub fn from_int(p: u64, n: i64, prec: i64) -> Self {
        Self::from_bigint(p, &BigInt::from(n), prec)
    }

    pub fn from_bigint(p: u64, n: &BigInt, prec: i64) -> Self {
        Self::raw(p, 1, n.clone(), BigInt::zero(), 0, prec)
    }

    /// Image of a rational in Q_p with absolute precision `prec`.
    pub fn from_rat(p: u64, q: &Rat, prec: i64) -> Self {
        let (c, shift) = Self::rat_coordinate(p, q, prec);
        Self::raw(p, 1, c, BigInt::zero(), shift, prec)
    }

    /// `a + b·π` in Q_p(π) with absolute precision `prec_half` half-digits.
    pub fn from_rat_pair(p: u64, a: &Rat, b: &Rat, prec_half: i64) -> Self {
        let cap0 = ceil_half(prec_half);
        let cap1 = floor_half(prec_half);
        let (ca, sa) = Self::rat_coordinate(p, a, cap0);
        let (cb, sb) = Self::rat_coordinate(p, b, cap1.max(cap0));
        let s = sa.min(sb);
        let c0 = ca * pow_p(p, sa - s);
        let c1 = cb * pow_p(p, sb - s);
        Self::raw(p, 2, c0, c1, s, prec_half)
    }

    /// Integer representative and exponent of a rational to `cap` digits.
    fn rat_coordinate(p: u64, q: &Rat, cap: i64) -> (BigInt, i64) {
        if q.is_zero() {
            return (BigInt::zero(), 0);
        }
        let vn = int_valuation(q.numer(), p).unwrap() as i64;
        let vd = int_valuation(q.denom(), p).unwrap_or(0) as i64;
        let v = vn - vd;
        let k = (cap - v).max(1);
        let m = pow_p(p, k);
        let num = q.numer() / pow_p(p, vn);
        let den = q.denom() / pow_p(p, vd);
        let inv = mod_inverse(&den, &m).expect("unit denominator");
        ((num * inv).mod_floor(&m), v)
    }

    /// The uniformizer π of Q_p(π), known to `prec_half` half-digits.
    pub fn pi(p: u64, prec_half: i64) -> Self {
        Self::raw(p, 2, BigInt::zero(), BigInt::one(), 0, prec_half)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn ramification(&self) -> u8 {
        self.e
    }

    /// Absolute precision in units of 1/e.
    pub fn precision_ticks(&self) -> i64 {
        self.prec
    }

    /// Absolute precision as a rational (in p-adic digits).
    pub fn precision(&self) -> Rat {
        Rat::new(BigInt::from(self.prec), BigInt::from(self.e))
    }

    /// Valuation in units of 1/e, or `None` when indistinguishable from zero.
    pub fn valuation_ticks(&self) -> Option<i64> {
        (0..self.e as usize)
            .filter_map(|i| {
                int_valuation(&self.c[i], self.p)
                    .map(|v| self.e as i64 * (self.shift + v as i64) + i as i64)
            })
            .min()
    }

    pub fn valuation(&self) -> Option<Rat> {
        self.valuation_ticks()
            .map(|v| Rat::new(BigInt::from(v), BigInt::from(self.e)))
    }

    /// Valuation in ticks, or the precision when indistinguishable from zero.
    fn val_or_prec(&self) -> i64 {
        self.valuation_ticks().unwrap_or(self.prec)
    }

    pub fn is_zero(&self) -> bool {
        self.valuation_ticks().is_none()
    }

    pub fn relative_precision_ticks(&self) -> i64 {
        self.prec - self.val_or_prec()
    }

    /// Coordinates `(a, b)` with value `a + b·π`, as rationals (representatives).
    pub fn to_rat_pair(&self) -> (Rat, Rat) {
        let scale = |c: &BigInt| -> Rat {
            if self.shift >= 0 {
                Rat::from_integer(c * pow_p(self.p, self.shift))
            } else {
                Rat::new(c.clone(), pow_p(self.p, -self.shift))
            }
        };
        (scale(&self.c[0]), scale(&self.c[1]))
    }

    /// Rational representative of an element of Q_p.
    pub fn to_rat(&self) -> Rat {
        self.to_rat_pair().0
    }

    /// Lowers the absolute precision to at most `prec` ticks.
    pub fn with_precision(&self, prec: i64) -> Self {
        let mut x = self.clone();
        x.prec = x.prec.min(prec);
        x.normalize()
    }

    /// Treats the stored representative as exact to `prec` ticks (may raise precision).
    pub fn lift_to_precision(&self, prec: i64) -> Self {
        let mut x = self.clone();
        x.prec = prec;
        x.normalize()
    }

    /// Embeds an element of Q_p into Q_p(π).
    pub fn to_ramified(&self) -> Self {
        if self.e == 2 {
            return self.clone();
        }
        Self::raw(
            self.p,
            2,
            self.c[0].clone(),
            BigInt::zero(),
            self.shift,
            2 * self.prec,
        )
    }

    /// The Q_p coordinate of an element of Q_p(π) (its "even part").
    pub fn even_part(&self) -> Self {
        if self.e == 1 {
            return self.clone();
        }
        Self::raw(
            self.p,
            1,
            self.c[0].clone(),
            BigInt::zero(),
            self.shift,
            self.caps()[0],
        )
    }

    /// The π-coordinate b of `a + b·π`, as an element of Q_p.
    pub fn pi_coordinate(&self) -> Self {
        if self.e == 1 {
            return Self::zero(self.p, self.prec);
        }
        Self::raw(
            self.p,
            1,
            self.c[1].clone(),
            BigInt::zero(),
            self.shift,
            self.caps()[1],
        )
    }

    /// Returns the element as a member of Q_p, failing when its π-coordinate
    /// is distinguishable from zero.
    pub fn coerce_to_qp(&self) -> Result<Self, PadicError> {
        if self.e == 1 {
            return Ok(self.clone());
        }
        let b = self.pi_coordinate();
        if let Some(v) = b.valuation() {
            return Err(PadicError::NotInBaseField(rat_to_string(&v)));
        }
        Ok(self.even_part())
    }

    fn unify(&self, other: &Self) -> (Self, Self) {
        assert_eq!(self.p, other.p, "p-adic elements over different primes");
        match (self.e, other.e) {
            (1, 2) => (self.to_ramified(), other.clone()),
            (2, 1) => (self.clone(), other.to_ramified()),
            _ => (self.clone(), other.clone()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (x, y) = self.unify(other);
        let s = x.shift.min(y.shift);
        let sx = pow_p(x.p, x.shift - s);
        let sy = pow_p(x.p, y.shift - s);
        Self::raw(
            x.p,
            x.e,
            &x.c[0] * &sx + &y.c[0] * &sy,
            &x.c[1] * &sx + &y.c[1] * &sy,
            s,
            x.prec.min(y.prec),
        )
    }

    pub fn neg(&self) -> Self {
        Self::raw(
            self.p,
            self.e,
            -&self.c[0],
            -&self.c[1],
            self.shift,
            self.prec,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (x, y) = self.unify(other);
        let prec = (x.val_or_prec() + y.prec).min(y.val_or_prec() + x.prec);
        let p = BigInt::from(x.p);
        let c0 = &x.c[0] * &y.c[0] - &p * &x.c[1] * &y.c[1];
        let c1 = &x.c[0] * &y.c[1] + &x.c[1] * &y.c[0];
        Self::raw(x.p, x.e, c0, c1, x.shift + y.shift, prec)
    }

    pub fn mul_int(&self, n: i64) -> Self {
        self.mul(&Self::from_int(self.p, n, self.prec.max(0) + 64))
    }

    pub fn mul_rat(&self, q: &Rat) -> Self {
        let v = crate::exact::rat_valuation(q, self.p).unwrap_or(0);
        let extra = self.prec.abs() + v.abs() * 2 + 64;
        self.mul(&Self::from_rat(self.p, q, extra))
    }

    pub fn inverse(&self) -> Result<Self, PadicError> {
        let v = self
            .valuation_ticks()
            .ok_or(PadicError::DivisionByIndistinguishableZero)?;
        let new_prec = self.prec - 2 * v;
        let p = BigInt::from(self.p);
        if self.e == 1 {
            let m = pow_p(self.p, (self.prec - v).max(1) + 1);
            let inv = mod_inverse(&self.c[0], &m).expect("unit part");
            return Ok(Self::raw(self.p, 1, inv, BigInt::zero(), -self.shift, new_prec));
        }
        let norm = &self.c[0] * &self.c[0] + &p * &self.c[1] * &self.c[1];
        let nv = int_valuation(&norm, self.p).expect("nonzero norm") as i64;
        let unit = &norm / pow_p(self.p, nv);
        let m = pow_p(self.p, (self.prec - v).max(1) + 2);
        let inv = mod_inverse(&unit, &m).expect("unit norm");
        Ok(Self::raw(
            self.p,
            2,
            &self.c[0] * &inv,
            -&self.c[1] * &inv,
            -self.shift - nv,
            new_prec,
        ))
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.p, self.prec.max(0) + 64);
        if self.e == 2 {
            acc = acc.to_ramified();
        }
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Image under π ↦ −π.
    pub fn galois_conjugate(&self) -> Result<Self, PadicError> {
        if self.e != 2 {
            return Err(PadicError::WrongRamification(2));
        }
        Ok(Self::raw(
            self.p,
            2,
            self.c[0].clone(),
            -&self.c[1],
            self.shift,
            self.prec,
        ))
    }

    /// `self == other` to the smaller of the two precisions.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Residue of the unit part modulo p (e = 1 coordinate).
    fn unit_residue(&self) -> u64 {
        (self.c[0].mod_floor(&BigInt::from(self.p)))
            .to_u64()
            .unwrap()
    }

    /// Teichmüller representative of the residue of a unit, to `prec` digits.
    pub fn teichmuller(p: u64, residue: u64, prec: i64) -> Self {
        let m = pow_p(p, prec.max(1));
        let mut x = BigInt::from(residue).mod_floor(&m);
        // x ↦ x^p converges to the root of unity, gaining one digit per step
        for _ in 0..prec.max(1) {
            x = x.modpow(&BigInt::from(p), &m);
        }
        Self::from_bigint(p, &x, prec)
    }

    /// Iwasawa logarithm (log p = 0, log of roots of unity = 0) of a unit of Q_p.
    pub fn iwasawa_log(&self) -> Result<Self, PadicError> {
        if self.e != 1 {
            return Err(PadicError::WrongRamification(1));
        }
        if self.valuation_ticks() != Some(0) {
            return Err(PadicError::NotAUnit);
        }
        let p = self.p;
        let n = self.prec;
        // u^(p-1) is a principal unit with the same logarithm times (p-1)
        let guard = 4 + (64 - (n.max(1) as u64).leading_zeros()) as i64;
        let work = n + guard;
        let u = self.lift_to_precision(work);
        let z = u.pow((p - 1) as u32).sub(&Self::one(p, work));
        let mut sum = Self::zero(p, work);
        let mut zk = Self::one(p, work);
        // v(z^k / k) >= k - log_p(k), so terms beyond this bound are invisible
        let mut kmax: i64 = 1;
        while kmax - ((kmax as f64).ln() / (p as f64).ln()).floor() as i64 <= work {
            kmax += 1;
        }
        for k in 1..=kmax {
            zk = zk.mul(&z);
            if zk.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let term = zk.mul_rat(&Rat::new(BigInt::from(sign), BigInt::from(k)));
            sum = sum.add(&term.lift_to_precision(work));
        }
        let inv = Rat::new(BigInt::one(), BigInt::from(p - 1));
        Ok(sum.mul_rat(&inv).with_precision(n))
    }

    /// Both square roots `(r, −r)`; requires p odd and an even valuation with
    /// a square residue of the unit part.
    pub fn sqrt(&self) -> Result<(Self, Self), PadicError> {
        let p = self.p;
        let Some(v) = self.valuation_ticks() else {
            // square root of an indistinguishable zero: zero to half precision
            let z = Self::raw(p, self.e, BigInt::zero(), BigInt::zero(), 0, floor_half(self.prec));
            return Ok((z.clone(), z));
        };
        if v % 2 != 0 {
            return Err(PadicError::OddValuation(rat_to_string(&self.valuation().unwrap())));
        }
        let half = v / 2;
        // unit u with self = uniformizer^v · u
        let unif = if self.e == 1 {
            Self::from_int(p, p as i64, self.prec + 64)
        } else {
            Self::pi(p, self.prec + 64)
        };
        let unif_half = unif.pow(half.unsigned_abs() as u32);
        let unif_half = if half < 0 { unif_half.inverse()? } else { unif_half };
        let unif_v = unif_half.mul(&unif_half);
        let u = self.div(&unif_v)?;
        let rel = u.prec;
        let r0 = sqrt_mod_p(u.unit_residue(), p).ok_or(PadicError::NonResidue)?;
        let work = rel + 4;
        let u = u.lift_to_precision(work);
        let mut r = Self::from_int(p, r0 as i64, work);
        if self.e == 2 {
            r = r.to_ramified();
        }
        let half_rat = Rat::new(BigInt::one(), BigInt::from(2));
        let mut steps = 0;
        loop {
            let next = r.add(&u.div(&r)?).mul_rat(&half_rat).lift_to_precision(work);
            let done = next.agrees_with(&r);
            r = next;
            steps += 1;
            if done || steps > 200 {
                break;
            }
        }
        let root = r.mul(&unif_half).with_precision(half + rel);
        Ok((root.clone(), root.neg()))
    }

    /// Base-p digits of the unit part (interleaved with the π-coordinate for
    /// e = 2): the value is `p^⌊v⌋ · Σ_i (a_i + b_i·π) p^i`.
    pub fn digits(&self) -> Vec<u64> {
        let Some(_) = self.valuation_ticks() else {
            return Vec::new();
        };
        let caps = self.caps();
        let len = (0..self.e as usize)
            .map(|i| (caps[i] - self.shift).max(0))
            .max()
            .unwrap_or(0);
        let pb = BigInt::from(self.p);
        let mut coords: Vec<BigInt> = self.c[..self.e as usize].to_vec();
        let mut out = Vec::new();
        for _ in 0..len {
            for c in coords.iter_mut() {
                let (q, r) = c.div_mod_floor(&pb);
                out.push(r.to_u64().unwrap());
                *c = q;
            }
        }
        out
    }

    fn from_digits(p: u64, e: u8, shift: i64, digits: &[u64], prec: i64) -> Self {
        let e_us = e as usize;
        let mut c = [BigInt::zero(), BigInt::zero()];
        let pb = BigInt::from(p);
        for (k, chunk) in digits.chunks(e_us).enumerate() {
            let w = pb.pow(k as u32);
            for (i, d) in chunk.iter().enumerate() {
                c[i] += &w * BigInt::from(*d);
            }
        }
        let [c0, c1] = c;
        Self::raw(p, e, c0, c1, shift, prec)
    }
}

/// Square root of a residue modulo an odd prime, if one exists.
pub fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    let pb = BigInt::from(p);
    let legendre = BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &pb);
    if !legendre.is_one() {
        return None;
    }
    if p % 4 == 3 {
        let r = BigInt::from(a).modpow(&BigInt::from((p + 1) / 4), &pb);
        return r.to_u64();
    }
    (1..p).find(|&r| (r as u128 * r as u128) % p as u128 == a as u128)
}

impl fmt::Debug for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_rat_pair();
        let prec = rat_to_string(&self.precision());
        if self.e == 1 {
            write!(f, "{} + O({}^{})", rat_to_string(&a), self.p, prec)
        } else {
            write!(
                f,
                "{} + ({})*pi + O({}^{})",
                rat_to_string(&a),
                rat_to_string(&b),
                self.p,
                prec
            )
        }
    }
}

/// Wire form: `{ p, e, valuation: "num/den" | null, digits, precision: "num/den" }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicJson {
    pub p: u64,
    pub e: u8,
    pub valuation: Option<String>,
    pub digits: Vec<u64>,
    pub precision: String,
}

impl From<&PadicElement> for PadicJson {
    fn from(x: &PadicElement) -> Self {
        PadicJson {
            p: x.p,
            e: x.e,
            valuation: x.valuation().map(|v| rat_to_string(&v)),
            digits: x.digits(),
            precision: rat_to_string(&x.precision()),
        }
    }
}

impl TryFrom<PadicJson> for PadicElement {
    type Error = PadicError;
    fn try_from(j: PadicJson) -> Result<Self, PadicError> {
        let bad = |m: &str| PadicError::Malformed(m.to_string());
        if j.e != 1 && j.e != 2 {
            return Err(bad("e must be 1 or 2"));
        }
        let to_ticks = |s: &str| -> Result<i64, PadicError> {
            let q = parse_rat(s).map_err(|_| bad("bad rational"))? * Rat::from_integer(BigInt::from(j.e));
            if !q.is_integer() {
                return Err(bad("value not in (1/e)Z"));
            }
            q.to_integer().to_i64().ok_or_else(|| bad("out of range"))
        };
        let prec = to_ticks(&j.precision)?;
        match &j.valuation {
            None => Ok(PadicElement::raw(j.p, j.e, BigInt::zero(), BigInt::zero(), 0, prec)),
            Some(v) => {
                let vt = to_ticks(v)?;
                let shift = Integer::div_floor(&vt, &(j.e as i64));
                let x = PadicElement::from_digits(j.p, j.e, shift, &j.digits, prec);
                if x.valuation_ticks() != Some(vt) {
                    return Err(bad("digits inconsistent with valuation"));
                }
                Ok(x)
            }
        }
    }
}

impl Serialize for PadicElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PadicJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = PadicJson::deserialize(d)?;
        PadicElement::try_from(j).map_err(serde::de::Error::custom)
    }
}
