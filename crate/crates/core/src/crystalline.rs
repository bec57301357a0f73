//! Frobenius on H¹_dR of y² = x³ + Ax + B at a good prime by Kedlaya's
//! algorithm, and the eigen-decomposition used for point recovery.
//!
//! The reduction runs in fixed absolute precision without per-operation
//! loss tracking (that tracking charges every p | 2j−1 along the degree
//! chain and ends up far too pessimistic). Instead the whole computation is
//! repeated with a longer series truncation and more working digits, and
//! only digits on which the two runs agree are reported.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::join;
use serde::Serialize;
use thiserror::Error;

use crate::archlfun::GZConstant;
use crate::elliptic::CurveData;
use crate::exact::{int_valuation, mod_inverse, rat, rat_int, rat_valuation, QMatrix, Rat};
use crate::padic::{PadicElement, PadicError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrystallineError {
    #[error("p = {0} is not a good prime >= 5 for this model")]
    BadPrime(u64),
    #[error("precision {requested} not reached (stable to {reached} digits)")]
    PrecisionExhausted { requested: i64, reached: i64 },
    #[error("omega is a Frobenius eigenvector")]
    DegenerateDecomposition,
    #[error("eigen-decomposition needs a_p = 0, got {0}")]
    NotSupersingular(i64),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// p^v·c known modulo p^w (absolute).
#[derive(Clone, Debug)]
struct Fx {
    c: BigInt,
    v: i64,
}

struct Ctx {
    p: u64,
    w: i64,
    pows: Vec<BigInt>,
}

impl Ctx {
    fn new(p: u64, w: i64) -> Self {
        let mut pows = vec![BigInt::one()];
        let pb = BigInt::from(p);
        for _ in 0..(3 * w + 8) {
            let next = pows.last().unwrap() * &pb;
            pows.push(next);
        }
        Ctx { p, w, pows }
    }

    fn pw(&self, k: i64) -> BigInt {
        match self.pows.get(k as usize) {
            Some(x) => x.clone(),
            None => num_traits::pow(BigInt::from(self.p), k as usize),
        }
    }

    fn zero() -> Fx {
        Fx { c: BigInt::zero(), v: 0 }
    }

    fn fix(&self, c: BigInt, v: i64) -> Fx {
        let k = self.w - v;
        if k <= 0 {
            return Self::zero();
        }
        Fx { c: c.mod_floor(&self.pw(k)), v }
    }

    fn from_int(&self, c: &BigInt) -> Fx {
        self.fix(c.clone(), 0)
    }

    fn from_rat(&self, q: &Rat) -> Fx {
        self.scale(&Fx { c: BigInt::one(), v: 0 }, q)
    }

    fn add(&self, a: &Fx, b: &Fx) -> Fx {
        if a.c.is_zero() {
            return b.clone();
        }
        if b.c.is_zero() {
            return a.clone();
        }
        let v = a.v.min(b.v);
        let c = &a.c * self.pw(a.v - v) + &b.c * self.pw(b.v - v);
        self.fix(c, v)
    }

    fn sub(&self, a: &Fx, b: &Fx) -> Fx {
        self.add(a, &Fx { c: -&b.c, v: b.v })
    }

    fn mul(&self, a: &Fx, b: &Fx) -> Fx {
        if a.c.is_zero() || b.c.is_zero() {
            return Self::zero();
        }
        self.fix(&a.c * &b.c, a.v + b.v)
    }

    fn scale(&self, a: &Fx, q: &Rat) -> Fx {
        if a.c.is_zero() || q.is_zero() {
            return Self::zero();
        }
        let k = rat_valuation(q, self.p).unwrap();
        let pk = self.pw(k.abs());
        let (n, d) = if k >= 0 {
            (q.numer() / &pk, q.denom().clone())
        } else {
            (q.numer().clone(), q.denom() / &pk)
        };
        let v = a.v + k;
        let modulus = self.pw((self.w - v).max(1));
        let dinv = mod_inverse(&d, &modulus).expect("unit denominator");
        self.fix(&a.c * n * dinv, v)
    }

    fn to_rat(&self, a: &Fx) -> Rat {
        if a.v >= 0 {
            Rat::from_integer(&a.c * self.pw(a.v))
        } else {
            Rat::new(a.c.clone(), self.pw(-a.v))
        }
    }
}

fn poly_mul_mod(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out.iter_mut().for_each(|c| *c = c.mod_floor(m));
    out
}

/// Quotient and remainder of `r` by the monic cubic x³ + Ax + B.
fn divmod_cubic(ctx: &Ctx, r: &[Fx], a: &Fx, b: &Fx) -> (Vec<Fx>, [Fx; 3]) {
    let mut r = r.to_vec();
    if r.len() < 3 {
        r.resize(3, Ctx::zero());
    }
    let mut q = vec![Ctx::zero(); r.len().saturating_sub(3).max(1)];
    for j in (3..r.len()).rev() {
        let t = r[j].clone();
        if t.c.is_zero() {
            continue;
        }
        q[j - 3] = t.clone();
        r[j - 2] = ctx.sub(&r[j - 2], &ctx.mul(&t, a));
        r[j - 3] = ctx.sub(&r[j - 3], &ctx.mul(&t, b));
        r[j] = Ctx::zero();
    }
    (q, [r[0].clone(), r[1].clone(), r[2].clone()])
}

/// Multiplication in Z_p[x]/(x³ + Ax + B) of two remainders.
fn mul_mod_cubic(ctx: &Ctx, x: &[Fx; 3], y: &[Fx; 3], a: &Fx, b: &Fx) -> [Fx; 3] {
    let mut prod = vec![Ctx::zero(); 5];
    for i in 0..3 {
        for j in 0..3 {
            prod[i + j] = ctx.add(&prod[i + j], &ctx.mul(&x[i], &y[j]));
        }
    }
    divmod_cubic(ctx, &prod, a, b).1
}

/// Inverse of Q' = 3x² + A modulo Q = x³ + Ax + B, exactly over Q.
fn derivative_inverse(a: &BigInt, b: &BigInt) -> [Rat; 3] {
    // columns: x^i·Q' mod Q for i = 0, 1, 2
    let (ar, br) = (Rat::from_integer(a.clone()), Rat::from_integer(b.clone()));
    let cols = [
        [ar.clone(), rat_int(0), rat_int(3)],
        [-rat_int(3) * &br, -rat_int(2) * &ar, rat_int(0)],
        [rat_int(0), -rat_int(3) * &br, -rat_int(2) * &ar],
    ];
    let aug: Vec<Vec<Rat>> = (0..3)
        .map(|r| {
            let mut row: Vec<Rat> = (0..3).map(|c| cols[c][r].clone()).collect();
            row.push(if r == 0 { rat_int(1) } else { rat_int(0) });
            row
        })
        .collect();
    let (red, pivots) = crate::exact::rref(&QMatrix::from_rows(aug));
    assert_eq!(pivots, vec![0, 1, 2], "Q' is invertible modulo Q");
    [red[0][3].clone(), red[1][3].clone(), red[2][3].clone()]
}

/// Matrix of p-power Frobenius on {dx/y, x·dx/y} with columns the images,
/// computed with `terms` series terms at `w` absolute digits.
fn kedlaya_raw(p: u64, a: &BigInt, b: &BigInt, terms: usize, w: i64) -> [[Rat; 2]; 2] {
    let ctx = Ctx::new(p, w);
    let modulus = ctx.pw(w);
    let pu = p as usize;
    // E = Q(x^p) − Q(x)^p
    let q: Vec<BigInt> = vec![b.clone(), a.clone(), BigInt::zero(), BigInt::one()];
    let mut qp = vec![BigInt::one()];
    for _ in 0..p {
        qp = poly_mul_mod(&qp, &q, &modulus);
    }
    let mut e = qp.iter().map(|c| (-c).mod_floor(&modulus)).collect::<Vec<_>>();
    for (i, c) in q.iter().enumerate() {
        e[i * pu] = (&e[i * pu] + c).mod_floor(&modulus);
    }
    let mut e_pows = vec![vec![BigInt::one()]];
    for k in 1..terms {
        let next = poly_mul_mod(&e_pows[k - 1], &e, &modulus);
        e_pows.push(next);
    }
    // binom(−1/2, k)
    let mut ck = vec![rat_int(1)];
    for k in 1..terms as i64 {
        let prev = ck.last().unwrap().clone();
        ck.push(prev * rat(-(2 * k - 1), 2 * k));
    }
    let af = ctx.from_int(a);
    let bf = ctx.from_int(b);
    let ginv = derivative_inverse(a, b).map(|g| ctx.from_rat(&g));

    let reduce = |i: usize| -> [Rat; 2] {
        let shift = pu * (i + 1) - 1;
        let max_s = pu * (2 * terms - 1);
        // pole order s ↦ numerator polynomial; s runs over odd values
        let mut forms: Vec<Vec<Fx>> = vec![Vec::new(); max_s + 1];
        for k in 0..terms {
            let s = pu * (2 * k + 1);
            let coef = rat_int(p as i64) * &ck[k];
            let mut poly = vec![Ctx::zero(); shift + e_pows[k].len()];
            for (j, c) in e_pows[k].iter().enumerate() {
                poly[shift + j] = ctx.scale(&ctx.from_int(c), &coef);
            }
            forms[s] = poly;
        }
        let mut s = max_s;
        while s >= 3 {
            let r = std::mem::take(&mut forms[s]);
            if !r.is_empty() {
                let (quot, rem) = divmod_cubic(&ctx, &r, &af, &bf);
                let v = mul_mod_cubic(&ctx, &rem, &ginv, &af, &bf);
                // V·Q' = V·(3x² + A), degree ≤ 4
                let mut vq = vec![Ctx::zero(); 5];
                for (j, vj) in v.iter().enumerate() {
                    vq[j] = ctx.add(&vq[j], &ctx.mul(vj, &af));
                    vq[j + 2] = ctx.add(&vq[j + 2], &ctx.scale(vj, &rat_int(3)));
                }
                let (q2, _) = divmod_cubic(&ctx, &vq, &af, &bf);
                let factor = rat(2, s as i64 - 2);
                let target = &mut forms[s - 2];
                let len = quot.len().max(q2.len()).max(2);
                if target.len() < len {
                    target.resize(len, Ctx::zero());
                }
                for (j, c) in quot.iter().enumerate() {
                    target[j] = ctx.add(&target[j], c);
                }
                for (j, c) in q2.iter().enumerate() {
                    target[j] = ctx.sub(&target[j], c);
                }
                // (2/(s−2))·V'
                target[0] = ctx.add(&target[0], &ctx.scale(&v[1], &factor));
                target[1] = ctx.add(&target[1], &ctx.scale(&v[2], &(factor.clone() * rat_int(2))));
            }
            s -= 2;
        }
        let mut r = std::mem::take(&mut forms[1]);
        r.resize(r.len().max(2), Ctx::zero());
        for j in (2..r.len()).rev() {
            let t = r[j].clone();
            if t.c.is_zero() {
                continue;
            }
            let jj = j as i64;
            let t_a = ctx.scale(&ctx.mul(&t, &af), &rat(2 * jj - 3, 2 * jj - 1));
            r[j - 2] = ctx.sub(&r[j - 2], &t_a);
            if j >= 3 {
                let t_b = ctx.scale(&ctx.mul(&t, &bf), &rat(2 * (jj - 2), 2 * jj - 1));
                r[j - 3] = ctx.sub(&r[j - 3], &t_b);
            }
        }
        [ctx.to_rat(&r[0]), ctx.to_rat(&r[1])]
    };
    let (f_omega, f_eta) = join(|| reduce(0), || reduce(1));
    [
        [f_omega[0].clone(), f_eta[0].clone()],
        [f_omega[1].clone(), f_eta[1].clone()],
    ]
}

fn agreement(p: u64, x: &Rat, y: &Rat) -> i64 {
    let d = x - y;
    rat_valuation(&d, p).unwrap_or(i64::MAX)
}

fn ceil_log(p: u64, x: u64) -> i64 {
    let mut k = 0;
    let mut acc = 1u64;
    while acc < x {
        acc = acc.saturating_mul(p);
        k += 1;
    }
    k
}

/// Frobenius matrix on a short model, stable to `m` digits, as rationals
/// whose p-adic expansions carry the answer.
pub fn frobenius_on_short_model(
    p: u64,
    a: &BigInt,
    b: &BigInt,
    m: i64,
) -> Result<[[PadicElement; 2]; 2], CrystallineError> {
    let disc: BigInt = BigInt::from(4) * a * a * a + BigInt::from(27) * b * b;
    if p < 5 || (&disc % BigInt::from(p)).is_zero() {
        return Err(CrystallineError::BadPrime(p));
    }
    let terms = (m + 2 + ceil_log(p, 6 * p * (m as u64 + 8))) as usize;
    let w = m + 2 * ceil_log(p, 6 * p * terms as u64) + 6;
    let (lo, hi) = join(
        || kedlaya_raw(p, a, b, terms, w),
        || kedlaya_raw(p, a, b, terms + 3, w + 4),
    );
    let mut reached = i64::MAX;
    for i in 0..2 {
        for j in 0..2 {
            reached = reached.min(agreement(p, &lo[i][j], &hi[i][j]));
        }
    }
    if reached < m {
        return Err(CrystallineError::PrecisionExhausted { requested: m, reached });
    }
    Ok(hi.map(|row| row.map(|x| PadicElement::from_rat(p, &x, m))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrobeniusData {
    pub p: u64,
    pub precision: i64,
    pub ap: i64,
    pub a: BigInt,
    pub b: BigInt,
    /// ω_min = u·dx/y on the short model.
    #[serde(with = "crate::exact::rat_serde")]
    pub u: Rat,
    /// Column j holds the image of the j-th basis element of {dx/y, x·dx/y}.
    pub matrix: [[PadicElement; 2]; 2],
}

/// Short model Y² = X³ − 27c4·X − 54c6 with X = 36x + 3b2, Y = 108(2y + a1x + a3),
/// so the Néron differential is 3·dX/Y.
pub fn short_model(curve: &CurveData) -> (BigInt, BigInt, Rat) {
    (-BigInt::from(27) * curve.c4(), -BigInt::from(54) * curve.c6(), rat_int(3))
}

pub fn kedlaya_frobenius(curve: &CurveData, p: u64, m: i64) -> Result<FrobeniusData, CrystallineError> {
    if p < 5 || curve.conductor().is_multiple_of(p) || int_valuation(curve.discriminant(), p).unwrap_or(0) > 0 {
        return Err(CrystallineError::BadPrime(p));
    }
    let ap = curve.ap(p).map_err(|_| CrystallineError::BadPrime(p))?;
    let (a, b, u) = short_model(curve);
    let matrix = frobenius_on_short_model(p, &a, &b, m)?;
    Ok(FrobeniusData { p, precision: m, ap, a, b, u, matrix })
}

impl FrobeniusData {
    pub fn trace(&self) -> PadicElement {
        self.matrix[0][0].add(&self.matrix[1][1])
    }

    pub fn det(&self) -> PadicElement {
        self.matrix[0][0].mul(&self.matrix[1][1]).sub(&self.matrix[0][1].mul(&self.matrix[1][0]))
    }

    pub fn apply(&self, x: &[PadicElement; 2]) -> [PadicElement; 2] {
        let m = &self.matrix;
        [m[0][0].mul(&x[0]).add(&m[0][1].mul(&x[1])), m[1][0].mul(&x[0]).add(&m[1][1].mul(&x[1]))]
    }
}

/// Cup product on {ω, η} normalized by [ω, η] = 1.
pub fn pairing_matrix() -> [[Rat; 2]; 2] {
    [[rat_int(0), rat_int(1)], [rat_int(-1), rat_int(0)]]
}

pub fn pair(x: &[PadicElement; 2], y: &[PadicElement; 2]) -> PadicElement {
    x[0].mul(&y[1]).sub(&x[1].mul(&y[0]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenData {
    pub alpha: PadicElement,
    pub beta: PadicElement,
    pub omega_cris: [PadicElement; 2],
    /// Component on which φ = F/p acts by 1/α.
    pub omega_alpha: [PadicElement; 2],
    pub omega_beta: [PadicElement; 2],
    pub omega_star: [PadicElement; 2],
    /// [ω_β, ω_α]
    pub pairing: PadicElement,
    pub delta: PadicElement,
}

pub fn eigen_data(frob: &FrobeniusData, c_e: &GZConstant) -> Result<EigenData, CrystallineError> {
    if frob.ap != 0 {
        return Err(CrystallineError::NotSupersingular(frob.ap));
    }
    let p = frob.p;
    let ticks = 2 * frob.precision;
    let alpha = PadicElement::pi(p, ticks + 8);
    let beta = alpha.neg();
    let ram = |x: &PadicElement| x.to_ramified();
    let uu = PadicElement::from_rat(p, &frob.u, frob.precision + 8).to_ramified();
    let zero = PadicElement::zero(p, frob.precision + 8).to_ramified();
    let omega_cris = [uu.clone(), zero.clone()];
    let m = frob.matrix.clone().map(|row| row.map(|x| ram(&x)));
    let f_omega = [m[0][0].mul(&uu), m[1][0].mul(&uu)];
    // component in ker(F − β): (F − α)ω / (β − α)
    let denom = beta.sub(&alpha).inverse()?;
    let omega_alpha = [
        f_omega[0].sub(&alpha.mul(&omega_cris[0])).mul(&denom),
        f_omega[1].sub(&alpha.mul(&omega_cris[1])).mul(&denom),
    ];
    let omega_beta = [omega_cris[0].sub(&omega_alpha[0]), omega_cris[1].sub(&omega_alpha[1])];
    if omega_alpha.iter().all(|x| x.is_zero()) || omega_beta.iter().all(|x| x.is_zero()) {
        return Err(CrystallineError::DegenerateDecomposition);
    }
    let omega_star = [zero, uu.inverse()?];
    let pairing = pair(&omega_beta, &omega_alpha);
    let delta = pairing.mul_rat(&(rat_int(1) / &c_e.value));
    Ok(EigenData { alpha, beta, omega_cris, omega_alpha, omega_beta, omega_star, pairing, delta })
}

impl EigenData {
    /// Even (Q_p) part of the pairing; zero to precision when a_p = 0.
    pub fn pairing_even_part(&self) -> PadicElement {
        self.pairing.even_part()
    }
}
