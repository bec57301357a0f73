//! Exact integer and rational arithmetic: dense linear algebra over Q,
//! continued fractions and rational reconstruction.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational number in lowest terms with a positive denominator.
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("no rational u/v with |u|, v <= {bound} reduces to the given residue")]
    NoReconstruction { bound: BigInt },
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats a rational as `"num/den"` (or just `"num"` for integers).
pub fn rat_to_string(q: &Rat) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat, ExactError> {
    let s = s.trim();
    let err = || ExactError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| err())?)),
    }
}

/// Serde adapter storing a [`Rat`] as a `"num/den"` string.
pub mod rat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// p-adic valuation of a nonzero integer. Returns `None` for zero.
pub fn int_valuation(n: &BigInt, p: u64) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn rat_valuation(q: &Rat, p: u64) -> Option<i64> {
    let vn = int_valuation(q.numer(), p)? as i64;
    let vd = int_valuation(q.denom(), p).unwrap_or(0) as i64;
    Some(vn - vd)
}

/// Modular inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Lowest common multiple of the denominators of a slice of rationals.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| is_prime(k)).collect()
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}


/// Dense matrix over Q stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            entries: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        QMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| rat_int(x)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `v^T * M` for a row vector `v`.
    pub fn vec_mul(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.rows, v.len(), "dimension mismatch");
        let mut out = vec![Rat::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, a) in self.row(i).iter().enumerate() {
                if !a.is_zero() {
                    out[j] += vi * a;
                }
            }
        }
        out
    }

    pub fn sub_scalar_identity(&self, c: &Rat) -> QMatrix {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] -= c;
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn rank(&self) -> usize {
        self.cols - kernel_basis(self).len()
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.entries[i * self.cols + j]
    }
}

/// Integer row-echelon form by fraction-free (Bareiss) elimination.
/// Returns the echelon rows (integer entries) and their pivot columns.
fn bareiss_echelon(m: &QMatrix) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    let cols = m.cols;
    let mut a: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|i| {
            let row = m.row(i);
            let den = common_denominator(row);
            row.iter()
                .map(|q| q.numer() * (&den / q.denom()))
                .collect::<Vec<_>>()
        })
        .filter(|r: &Vec<BigInt>| r.iter().any(|x| !x.is_zero()))
        .collect();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r >= a.len() {
            break;
        }
        // smallest nonzero pivot keeps coefficients small
        let Some(pr) = (r..a.len())
            .filter(|&i| !a[i][c].is_zero())
            .min_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()))
        else {
            continue;
        };
        a.swap(r, pr);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let piv = pivot_row[c].clone();
        for row in bottom.iter_mut() {
            let f = row[c].clone();
            if f.is_zero() {
                for x in row[c..].iter_mut() {
                    *x = (&*x * &piv) / &prev;
                }
                continue;
            }
            for j in c..cols {
                row[j] = (&row[j] * &piv - &f * &pivot_row[j]) / &prev;
            }
        }
        prev = piv;
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    // divide each row by its content to keep later back-substitution cheap
    for row in a.iter_mut() {
        let g = row.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_zero() && !g.is_one() {
            for x in row.iter_mut() {
                *x = &*x / &g;
            }
        }
    }
    (a, pivots)
}

/// Reduced row echelon form over Q. Returns the nonzero rows and pivot columns.
pub fn rref(m: &QMatrix) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let (ech, pivots) = bareiss_echelon(m);
    let mut rows: Vec<Vec<Rat>> = ech
        .into_iter()
        .map(|r| r.into_iter().map(Rat::from_integer).collect())
        .collect();
    for (i, &c) in pivots.iter().enumerate().rev() {
        let inv = rows[i][c].recip();
        for x in rows[i].iter_mut() {
            *x *= &inv;
        }
        let (upper, rest) = rows.split_at_mut(i);
        let pivot_row = &rest[0];
        for row in upper.iter_mut() {
            let f = row[c].clone();
            if f.is_zero() {
                continue;
            }
            for (x, y) in row.iter_mut().zip(pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
    }
    (rows, pivots)
}

/// A basis of the right kernel `{v : M v = 0}`.
pub fn kernel_basis(m: &QMatrix) -> Vec<Vec<Rat>> {
    let (rows, pivots) = rref(m);
    let mut is_pivot = vec![false; m.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..m.cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![Rat::zero(); m.cols];
            v[f] = Rat::one();
            for (row, &c) in rows.iter().zip(&pivots) {
                v[c] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Recovers `u/v` from `x ≡ u/v (mod modulus)` with `|u|, v <= bound`.
///
/// The answer is unique when `2 * bound^2 < modulus`; outside that regime
/// the first pair found by the half-extended Euclidean algorithm is returned.
pub fn rational_reconstruct(x: &BigInt, modulus: &BigInt, bound: &BigInt) -> Result<Rat, ExactError> {
    let fail = || ExactError::NoReconstruction {
        bound: bound.clone(),
    };
    let (mut r0, mut r1) = (modulus.clone(), x.mod_floor(modulus));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > *bound {
        let (q, r) = r0.div_rem(&r1);
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if t1.is_zero() || t1.abs() > *bound || !t1.gcd(modulus).is_one() {
        return Err(fail());
    }
    let (u, v) = if t1.sign() == Sign::Minus {
        (-r1, -t1)
    } else {
        (r1, t1)
    };
    Ok(Rat::new(u, v))
}

/// Continued-fraction partial quotients of `q` (floor convention).
pub fn contfrac(q: &Rat) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut n, mut d) = (q.numer().clone(), q.denom().clone());
    loop {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a);
        if r.is_zero() {
            return out;
        }
        n = std::mem::replace(&mut d, r);
    }
}

/// All convergents of the continued fraction of `q`, ending with `q` itself.
pub fn contfrac_convergents(q: &Rat) -> Vec<Rat> {
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    contfrac(q)
        .into_iter()
        .map(|a| {
            let p2 = &a * &p0 + &p1;
            let q2 = &a * &q0 + &q1;
            p1 = std::mem::replace(&mut p0, p2.clone());
            q1 = std::mem::replace(&mut q0, q2.clone());
            Rat::new(p2, q2)
        })
        .collect()
}

/// Best continued-fraction approximation to a float with denominator at most
/// `max_den`, accepted only when it lies within `tol` of `x`.
/// Returns the rational and its absolute residual.
pub fn reconstruct_float(x: f64, max_den: u64, tol: f64) -> Option<(Rat, f64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut y = x;
    let mut best: Option<(Rat, f64)> = None;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let (hn, kn) = (a as i128 * h + h_prev, a as i128 * k + k_prev);
        if kn > max_den as i128 {
            break;
        }
        let res = (hn as f64 / kn as f64 - x).abs();
        if res <= tol && best.as_ref().is_none_or(|(_, r)| res < *r) {
            best = Some((rat(hn as i64, kn as i64), res));
        }
        (h_prev, h, k_prev, k) = (h, hn, k, kn);
        let frac = y - a;
        if frac.abs() < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    best
}

pub fn rat_to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
