//! Archimedean data in double precision: Dirichlet coefficients, L(E,1) and
//! L'(E,1), the real period, Néron–Tate heights and the Gross–Zagier constant.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::elliptic::{bigint_ln, CurveData, CurvePoint};
use crate::exact::{prime_factors, rat_to_f64, reconstruct_float, Rat};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArchError {
    #[error("{terms} terms leave a tail bound of {bound:e}")]
    InsufficientTerms { terms: usize, bound: f64 },
    #[error("point has finite order")]
    TorsionPoint,
    #[error("coordinates of the point exceed {0} bits")]
    CoordinateOverflow(u64),
    #[error("ratio {value} does not reconstruct as a rational with denominator <= {max_den} (residual {residual:e})")]
    ReconstructionFailed { value: f64, max_den: u64, residual: f64 },
}

/// Coefficients a_1..a_B of the L-series; index 0 is unused and set to 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnList {
    pub bound: usize,
    pub coeffs: Vec<i64>,
}

impl AnList {
    pub fn get(&self, n: usize) -> i64 {
        self.coeffs[n]
    }
}

pub fn anlist(curve: &CurveData, bound: usize) -> AnList {
    let mut spf = vec![0usize; bound + 1];
    for i in 2..=bound {
        if spf[i] == 0 {
            let mut j = i;
            while j <= bound {
                if spf[j] == 0 {
                    spf[j] = i;
                }
                j += i;
            }
        }
    }
    let mut a = vec![0i64; bound + 1];
    if bound >= 1 {
        a[1] = 1;
    }
    for n in 2..=bound {
        let p = spf[n];
        let mut m = n;
        let mut k = 0;
        while m % p == 0 {
            m /= p;
            k += 1;
        }
        if m > 1 {
            a[n] = a[m] * a[n / m];
            continue;
        }
        // n = p^k
        let ap = curve.local_trace(p as u64);
        a[n] = if k == 1 {
            ap
        } else if curve.conductor().is_multiple_of(p as u64) {
            ap * a[n / p]
        } else {
            ap * a[n / p] - p as i64 * a[n / (p * p)]
        };
    }
    AnList { bound, coeffs: a }
}

/// Exponential integral E₁(x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument");
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // e^{-x} / (x + 1 − 1²/(x + 3 − 2²/(x + 5 − ...))), evaluated from the tail
        let mut tail = 0.0;
        for k in (1..80).rev() {
            let kf = k as f64;
            tail = kf * kf / (x + 2.0 * kf + 1.0 - tail);
        }
        (-x).exp() / (x + 1.0 - tail)
    }
}

/// A truncated series value with the bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

fn tail_bound(conductor: u64, terms: usize) -> f64 {
    let r = (-2.0 * PI / (conductor as f64).sqrt()).exp();
    2.0 * r.powi(terms as i32 + 1) / (1.0 - r)
}

/// Number of terms for which the geometric tail bound drops below `tol`.
pub fn terms_for_tolerance(conductor: u64, tol: f64) -> usize {
    let mut b = 16;
    while tail_bound(conductor, b) > tol {
        b += 16;
    }
    b
}

fn checked(conductor: u64, terms: usize, value: f64) -> Result<SeriesValue, ArchError> {
    let bound = tail_bound(conductor, terms);
    if bound > 1e-10 {
        return Err(ArchError::InsufficientTerms { terms, bound });
    }
    Ok(SeriesValue { value, tail_bound: bound, terms })
}

/// L(E,1) = F(x) + w·F(1/x) with F(x) = Σ (a_n/n) e^{−2πnx/√N}, at x = 6/5.
///
/// The identity holds for every x > 0 when w is the true sign, so with the
/// wrong sign the result is visibly nonzero while with w = −1 it cancels to 0.
pub fn l_value(curve: &CurveData, terms: usize, sign: i8) -> Result<SeriesValue, ArchError> {
    let x = 1.2;
    let a = anlist(curve, terms);
    let s = 2.0 * PI / (curve.conductor() as f64).sqrt();
    let f = |scale: f64| -> f64 {
        (1..=terms)
            .rev()
            .map(|n| a.get(n) as f64 / n as f64 * (-s * scale * n as f64).exp())
            .sum()
    };
    let value = f(x) + sign as f64 * f(1.0 / x);
    // the slower of the two series controls the tail
    let slow = (curve.conductor() as f64 * x * x).round() as u64;
    checked(slow, terms, value)
}

/// L'(E,1) = 2 Σ (a_n/n) E₁(2πn/√N), valid when the sign is −1.
pub fn l_derivative(curve: &CurveData, terms: usize) -> Result<SeriesValue, ArchError> {
    let a = anlist(curve, terms);
    let s = 2.0 * PI / (curve.conductor() as f64).sqrt();
    let v: f64 = (1..=terms)
        .rev()
        .map(|n| a.get(n) as f64 / n as f64 * exp_integral_e1(s * n as f64))
        .sum();
    checked(curve.conductor(), terms, 2.0 * v)
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (an, bn) = ((a + b) / 2.0, (a * b).sqrt());
        a = an;
        b = bn;
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
    }
    a
}

/// Real roots of 4x³ + b2x² + 2b4x + b6 (descending) and, for a single real
/// root, the complex pair as (re, im).
fn two_torsion_roots(curve: &CurveData) -> (Vec<f64>, Option<(f64, f64)>) {
    let [b2, b4, b6, _] = curve.b_invariants().map(|b| b.to_f64().unwrap());
    let f = |x: f64| ((4.0 * x + b2) * x + 2.0 * b4) * x + b6;
    let df = |x: f64| (12.0 * x + 2.0 * b2) * x + 2.0 * b4;
    // the largest real root lies below the Cauchy bound
    let bound = 1.0 + [b2 / 4.0, b4 / 2.0, b6 / 4.0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let polish = |mut x: f64| {
        for _ in 0..4 {
            let d = df(x);
            if d != 0.0 {
                x -= f(x) / d;
            }
        }
        x
    };
    // bisection lands on some real root; deflate (x − e)(4x² + px + q)
    let e = polish(0.5 * (lo + hi));
    let p = b2 + 4.0 * e;
    let q = 2.0 * b4 + p * e;
    let disc = p * p - 16.0 * q;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let mut v = vec![e, polish((-p + s) / 8.0), polish((-p - s) / 8.0)];
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        (v, None)
    } else {
        (vec![e], Some((-p / 8.0, (-disc).sqrt() / 8.0)))
    }
}

/// Ω⁺: the least positive real period, doubled when E(R) has two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealPeriod {
    pub omega_plus: f64,
    pub components: u8,
}

pub fn real_period(curve: &CurveData) -> RealPeriod {
    let (roots, pair) = two_torsion_roots(curve);
    match pair {
        None => {
            let (e1, e2, e3) = (roots[0], roots[1], roots[2]);
            let w = PI / agm((e1 - e3).sqrt(), (e1 - e2).sqrt());
            RealPeriod { omega_plus: 2.0 * w, components: 2 }
        }
        Some((re, im)) => {
            let e1 = roots[0];
            // |e1 − e2| with e2 = re + i·im
            let r = ((e1 - re).powi(2) + im * im).sqrt();
            let w = 2.0 * PI / agm(2.0 * r.sqrt(), (2.0 * r + 2.0 * (e1 - re)).sqrt());
            RealPeriod { omega_plus: w, components: 1 }
        }
    }
}

/// Ω⁺ by a second route: trigonometric roots when Δ > 0, and the
/// coefficient-only AGM bracketing when Δ < 0. Used as a cross-check.
pub fn real_period_alt(curve: &CurveData) -> f64 {
    let [b2, b4, b6, _] = curve.b_invariants().map(|b| b.to_f64().unwrap());
    if curve.discriminant().sign() == num_bigint::Sign::Plus {
        // depressed cubic in x = u − b2/12: u³ + pu + q with p < 0
        let (a, b, c) = (b2 / 4.0, b4 / 2.0, b6 / 4.0);
        let p = b - a * a / 3.0;
        let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        let mut r: Vec<f64> = (0..3)
            .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() - a / 3.0)
            .collect();
        r.sort_by(|x, y| y.partial_cmp(x).unwrap());
        2.0 * PI / agm((r[0] - r[2]).sqrt(), (r[0] - r[1]).sqrt())
    } else {
        let (roots, _) = two_torsion_roots(curve);
        let e1 = roots[0];
        let a = 3.0 * e1 + b2 / 4.0;
        let b = (3.0 * e1 * e1 + b2 / 2.0 * e1 + b4 / 2.0).sqrt();
        let _ = b6;
        2.0 * PI / agm(2.0 * b.sqrt(), (2.0 * b + a).sqrt())
    }
}

/// A height estimate with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Height {
    pub value: f64,
    pub error_bound: f64,
}

/// The smallest m ≤ 240 such that mP is non-singular modulo every prime of
/// bad reduction.
fn good_reduction_multiplier(curve: &CurveData, pt: &CurvePoint) -> i64 {
    let bad = prime_factors(curve.conductor());
    let [a1, a2, a3, a4, _] = curve.coefficients().map(BigInt::from);
    let singular_mod = |q: &CurvePoint, p: u64| -> bool {
        let CurvePoint::Affine { x, y } = q else { return false };
        if (x.denom() % p).is_zero() {
            return false;
        }
        let m = BigInt::from(p);
        let red = |r: &Rat| -> BigInt {
            let inv = crate::exact::mod_inverse(r.denom(), &m).unwrap();
            (r.numer() * inv) % &m
        };
        let (xr, yr) = (red(x), red(y));
        let dy: BigInt = (2 * &yr + &a1 * &xr + &a3) % &m;
        let dx: BigInt = (3 * &xr * &xr + 2 * &a2 * &xr + &a4 - &a1 * &yr) % &m;
        dy.is_zero() && dx.is_zero()
    };
    let mut m = 1i64;
    for p in bad {
        let mut k = 1i64;
        while k <= 240 && singular_mod(&curve.mul(pt, m * k), p) {
            k += 1;
        }
        m *= k;
    }
    m
}

/// Archimedean local height by Tate's series, with x translated so that all
/// real points have x ≥ 1 and z never approaches 0.
fn archimedean_local_height(curve: &CurveData, x0: f64, terms: usize) -> (f64, f64) {
    let (roots, _) = two_torsion_roots(curve);
    let emin = roots.iter().cloned().fold(f64::INFINITY, f64::min);
    let r = emin.floor() - 1.0;
    let [b2, b4, b6, b8] = curve.b_invariants().map(|b| b.to_f64().unwrap());
    let b2t = b2 + 12.0 * r;
    let b4t = b4 + r * b2 + 6.0 * r * r;
    let b6t = b6 + 2.0 * r * b4 + r * r * b2 + 4.0 * r * r * r;
    let b8t = b8 + 3.0 * r * b6 + 3.0 * r * r * b4 + r * r * r * b2 + 3.0 * r.powi(4);
    let x = x0 - r;
    let mut t = 1.0 / x;
    let mut sum = 0.0;
    let mut scale = 1.0;
    let mut max_log = 0.0f64;
    for _ in 0..terms {
        let w = 4.0 * t + b2t * t * t + 2.0 * b4t * t.powi(3) + b6t * t.powi(4);
        let z = 1.0 - b4t * t * t - 2.0 * b6t * t.powi(3) - b8t * t.powi(4);
        let lz = z.abs().ln();
        max_log = max_log.max(lz.abs());
        sum += scale * lz;
        scale /= 4.0;
        t = w / z;
    }
    let value = 0.5 * x.ln() + sum / 8.0;
    // remaining terms are bounded by the largest |log z| seen times a geometric tail
    let bound = max_log.max(1.0) * scale / 8.0 * 4.0 / 3.0;
    (value, bound)
}

/// Canonical height normalized as lim h(x(2^k P))/4^k with h(a/b) = log max(|a|, |b|).
pub fn neron_tate_height(curve: &CurveData, pt: &CurvePoint, terms: usize) -> Result<Height, ArchError> {
    if curve.is_torsion(pt) {
        return Err(ArchError::TorsionPoint);
    }
    let m = good_reduction_multiplier(curve, pt);
    let q = curve.mul(pt, m);
    let CurvePoint::Affine { x, .. } = &q else { unreachable!("non-torsion") };
    let (lambda, bound) = archimedean_local_height(curve, rat_to_f64(x), terms);
    let value = 2.0 * lambda + bigint_ln(x.denom());
    let m2 = (m * m) as f64;
    Ok(Height { value: value / m2, error_bound: 2.0 * bound / m2 + 1e-13 })
}

/// The naive doubling estimate h(x(2^k P))/4^k; an independent oracle for
/// the canonical height, accurate to O(4^{−k}).
pub fn doubling_height(curve: &CurveData, pt: &CurvePoint, k: u32, max_bits: u64) -> Result<f64, ArchError> {
    let mut q = pt.clone();
    for _ in 0..k {
        q = curve.add(&q, &q);
        if let CurvePoint::Affine { x, .. } = &q {
            if x.numer().bits().max(x.denom().bits()) > max_bits {
                return Err(ArchError::CoordinateOverflow(max_bits));
            }
        }
    }
    Ok(crate::elliptic::naive_height(&q) / 4f64.powi(k as i32))
}

/// C(E) = (L'(E,1)/Ω⁺)/ĥ(P) together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GZConstant {
    #[serde(with = "crate::exact::rat_serde")]
    pub value: Rat,
    pub float_value: f64,
    pub float_residual: f64,
    pub l_derivative: f64,
    pub omega_plus: f64,
    pub height: f64,
    /// Set when the value is not an integer: either the point is a proper
    /// multiple of a generator or E(Q) has torsion.
    pub non_integral: bool,
}

pub const GZ_MAX_DENOMINATOR: u64 = 100;
pub const GZ_TOLERANCE: f64 = 1e-6;

pub fn gross_zagier_constant(curve: &CurveData, gen: &CurvePoint) -> Result<GZConstant, ArchError> {
    let terms = terms_for_tolerance(curve.conductor(), 1e-16).max(500);
    let ld = l_derivative(curve, terms)?;
    let omega = real_period(curve).omega_plus;
    let h = neron_tate_height(curve, gen, 40)?;
    let ratio = ld.value / omega / h.value;
    let (value, residual) = reconstruct_float(ratio, GZ_MAX_DENOMINATOR, GZ_TOLERANCE).ok_or(
        ArchError::ReconstructionFailed { value: ratio, max_den: GZ_MAX_DENOMINATOR, residual: f64::NAN },
    )?;
    Ok(GZConstant {
        non_integral: !value.is_integer(),
        value,
        float_value: ratio,
        float_residual: residual,
        l_derivative: ld.value,
        omega_plus: omega,
        height: h.value,
    })
}
