//! Weight-2 modular symbols for Γ₀(N) in the Manin-symbol presentation.
//!
//! A Manin symbol (c:d) ∈ P¹(Z/N) stands for the path g{0, ∞} = {b/d, a/c}
//! where g = [[a, b], [c, d]] ∈ SL₂(Z). Functionals on the quotient by the
//! two- and three-term relations are what the rest of the crate evaluates.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::archlfun::{anlist, real_period};
use crate::elliptic::CurveData;
use crate::exact::{common_denominator, kernel_basis, rat_int, rat_to_string, reconstruct_float, rref, QMatrix, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModSymError {
    #[error("T_{0} needs a prime not dividing the level")]
    BadLevelPrime(u64),
    #[error("curve conductor {curve} differs from the level {level}")]
    LevelMismatch { curve: u64, level: u64 },
    #[error("Hecke operators up to {bound} leave a {dimension}-dimensional eigenspace")]
    EigenlineNotIsolated { bound: u64, dimension: usize },
    #[error("numeric ratio {ratio} at cusp {cusp} does not reconstruct as a small rational")]
    NormalizationMismatch { cusp: String, ratio: f64 },
}

/// Canonical representatives of P¹(Z/N) with a dense lookup table.
#[derive(Debug, Clone)]
pub struct P1List {
    n: u64,
    reps: Vec<(u64, u64)>,
    lookup: Vec<u32>,
}

impl P1List {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1, "level must be positive");
        let units: Vec<u64> = (0..n).filter(|&u| n == 1 || u.gcd(&n) == 1).collect();
        let mut lookup = vec![u32::MAX; (n * n) as usize];
        let mut reps = Vec::new();
        for c in 0..n {
            for d in 0..n {
                if c.gcd(&d).gcd(&n) != 1 || lookup[(c * n + d) as usize] != u32::MAX {
                    continue;
                }
                let idx = reps.len() as u32;
                reps.push((c, d));
                for &u in &units {
                    lookup[((u * c % n) * n + u * d % n) as usize] = idx;
                }
            }
        }
        P1List { n, reps, lookup }
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, i: usize) -> (u64, u64) {
        self.reps[i]
    }

    /// Index of the class of (c : d); panics if gcd(c, d, N) ≠ 1.
    #[inline]
    pub fn index(&self, c: i64, d: i64) -> usize {
        let n = self.n as i64;
        let k = (c.rem_euclid(n) * n + d.rem_euclid(n)) as usize;
        let idx = self.lookup[k];
        debug_assert!(idx != u32::MAX, "({c}:{d}) is not in P1(Z/{n})");
        idx as usize
    }

    fn index_big(&self, c: &BigInt, d: &BigInt) -> usize {
        let n = BigInt::from(self.n);
        self.index(c.mod_floor(&n).to_i64().unwrap(), d.mod_floor(&n).to_i64().unwrap())
    }
}

/// Heilbronn matrices [x1, x2, y1, y2] of determinant ℓ, acting on the right
/// by (c, d) ↦ (c·x1 + d·y1, c·x2 + d·y2).
pub fn heilbronn(l: i64) -> Vec<[i64; 4]> {
    let mut out = vec![[1, 0, 0, l]];
    for r in (-((l - 1) / 2))..=(l / 2) {
        let (mut x1, mut x2, mut y1, mut y2) = (l, -r, 0i64, 1i64);
        let (mut a, mut b) = (-l, r);
        out.push([x1, x2, y1, y2]);
        while b != 0 {
            let q = round_div(a, b);
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push([x1, x2, y1, y2]);
        }
    }
    out
}

/// Nearest integer to a/b, halves rounded away from zero.
fn round_div(a: i64, b: i64) -> i64 {
    let (q, r) = (a.div_euclid(b), a.rem_euclid(b));
    // a/b = q + r/b with 0 ≤ r < |b|
    let b_abs = b.abs();
    if 2 * r > b_abs || (2 * r == b_abs && (a < 0) != (b < 0)) {
        if b > 0 {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// The quotient of the free Q-space on P¹(Z/N) by the Manin relations.
#[derive(Debug, Clone)]
pub struct ManinSpace {
    level: u64,
    p1: P1List,
    /// Each generator expressed in the quotient basis.
    coords: Vec<Vec<Rat>>,
    /// A generator representing each basis vector.
    basis: Vec<usize>,
}

impl ManinSpace {
    pub fn new(level: u64) -> Self {
        let p1 = P1List::new(level);
        let n = p1.len();
        let s_of = |i: usize| {
            let (c, d) = p1.rep(i);
            p1.index(d as i64, -(c as i64))
        };
        let t_of = |i: usize| {
            let (c, d) = p1.rep(i);
            p1.index(d as i64, -(c as i64) - d as i64)
        };
        // two-term relations x = −xS pair generators up; fixed points vanish
        let mut reduced: Vec<Option<(usize, i64)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut free_count = 0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let j = s_of(i);
            done[i] = true;
            done[j] = true;
            if j != i {
                reduced[i] = Some((free_count, 1));
                reduced[j] = Some((free_count, -1));
                free_count += 1;
            }
        }
        // three-term relations on the reduced generators
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let orbit = [i, t_of(i), t_of(t_of(i))];
            let mut row = vec![Rat::zero(); free_count];
            for &g in &orbit {
                seen[g] = true;
                if let Some((k, s)) = reduced[g] {
                    row[k] += rat_int(s);
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
        let (echelon, pivots) = if rows.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            rref(&QMatrix::from_rows(rows))
        };
        let free: Vec<usize> = (0..free_count).filter(|k| !pivots.contains(k)).collect();
        let dim = free.len();
        let mut red_coords = vec![vec![Rat::zero(); dim]; free_count];
        for (pos, &k) in free.iter().enumerate() {
            red_coords[k][pos] = Rat::one();
        }
        for (r, &pc) in pivots.iter().enumerate() {
            for (pos, &k) in free.iter().enumerate() {
                red_coords[pc][pos] = -echelon[r][k].clone();
            }
        }
        let coords: Vec<Vec<Rat>> = reduced
            .iter()
            .map(|r| match r {
                None => vec![Rat::zero(); dim],
                Some((k, s)) => red_coords[*k].iter().map(|x| x * rat_int(*s)).collect(),
            })
            .collect();
        let basis = free
            .iter()
            .map(|&k| (0..n).find(|&i| reduced[i] == Some((k, 1))).unwrap())
            .collect();
        ManinSpace { level, p1, coords, basis }
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn p1(&self) -> &P1List {
        &self.p1
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn num_generators(&self) -> usize {
        self.p1.len()
    }

    /// Expression of the generator with index `i` in the quotient basis.
    pub fn coordinates(&self, i: usize) -> &[Rat] {
        &self.coords[i]
    }

    /// Manin symbols (c:d) standing for the basis vectors.
    pub fn basis_symbols(&self) -> Vec<(u64, u64)> {
        self.basis.iter().map(|&i| self.p1.rep(i)).collect()
    }

    fn image_matrix(&self, image: impl Fn(u64, u64) -> Vec<usize>) -> QMatrix {
        let dim = self.dimension();
        let mut m = QMatrix::zeros(dim, dim);
        for (j, &g) in self.basis.iter().enumerate() {
            let (c, d) = self.p1.rep(g);
            for idx in image(c, d) {
                for (k, v) in self.coords[idx].iter().enumerate() {
                    if !v.is_zero() {
                        m[(j, k)] += v;
                    }
                }
            }
        }
        m
    }

    /// Matrix of T_ℓ: row j holds the coordinates of T_ℓ applied to basis vector j.
    pub fn hecke_matrix(&self, l: u64) -> Result<QMatrix, ModSymError> {
        if self.level.is_multiple_of(l) || !crate::exact::is_prime(l) {
            return Err(ModSymError::BadLevelPrime(l));
        }
        let hs = heilbronn(l as i64);
        Ok(self.image_matrix(|c, d| {
            let (c, d) = (c as i64, d as i64);
            hs.iter()
                .map(|h| self.p1.index(c * h[0] + d * h[2], c * h[1] + d * h[3]))
                .collect()
        }))
    }

    /// Matrix of the star involution (c:d) ↦ (−c:d).
    pub fn star_matrix(&self) -> QMatrix {
        self.image_matrix(|c, d| vec![self.p1.index(-(c as i64), d as i64)])
    }
}

/// How the rational functional was tied to the period integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationRecord {
    pub cusp: String,
    pub numeric: f64,
    #[serde(with = "crate::exact::rat_serde")]
    pub raw_value: Rat,
    #[serde(with = "crate::exact::rat_serde")]
    pub scalar: Rat,
    pub residual: f64,
    pub omega_plus: f64,
    pub cusps_checked: usize,
}

/// The plus modular symbol r ↦ [r]⁺ of an elliptic curve.
#[derive(Debug, Clone)]
pub struct PlusSymbol {
    space: ManinSpace,
    curve: CurveData,
    values: Vec<Rat>,
    denominator: i64,
    scaled: Vec<i64>,
    pub normalization: NormalizationRecord,
}

pub const DEFAULT_HECKE_BOUND: u64 = 50;

/// Re F(x + iy) with F(z) = Σ (a_n/n) e^{2πinz}.
fn re_f(a: &[i64], x: f64, y: f64) -> f64 {
    (1..a.len())
        .rev()
        .map(|n| {
            let nf = n as f64;
            a[n] as f64 / nf * (-2.0 * PI * nf * y).exp() * (2.0 * PI * nf * x).cos()
        })
        .sum()
}

/// [a/q]⁺·Ω⁺ for N | q, via a γ ∈ Γ₀(N) with γ(∞) = a/q.
fn numeric_symbol(an: &[i64], a: i64, q: i64) -> f64 {
    let d = crate::exact::mod_inverse(&BigInt::from(a), &BigInt::from(q))
        .unwrap()
        .to_i64()
        .unwrap();
    let y = 1.0 / q as f64;
    re_f(an, a as f64 / q as f64, y) - re_f(an, -(d as f64) / q as f64, y)
}

impl PlusSymbol {
    pub fn new(space: ManinSpace, curve: &CurveData, hecke_bound: u64) -> Result<Self, ModSymError> {
        if curve.conductor() != space.level() {
            return Err(ModSymError::LevelMismatch { curve: curve.conductor(), level: space.level() });
        }
        let dim = space.dimension();
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        let push_rows = |rows: &mut Vec<Vec<Rat>>, m: QMatrix| {
            for i in 0..m.rows() {
                rows.push(m.row(i).to_vec());
            }
        };
        // φ is a column vector: (M − λ)φ = 0 for M with rows T(b_j)
        push_rows(&mut rows, space.star_matrix().sub_scalar_identity(&Rat::one()));
        let mut kernel = if dim == 0 { Vec::new() } else { kernel_basis(&QMatrix::from_rows(rows.clone())) };
        for l in crate::exact::primes_up_to(hecke_bound) {
            if kernel.len() <= 1 {
                break;
            }
            if space.level().is_multiple_of(l) {
                continue;
            }
            let al = curve.ap(l).expect("good prime");
            let t = space.hecke_matrix(l)?;
            push_rows(&mut rows, t.sub_scalar_identity(&rat_int(al)));
            kernel = kernel_basis(&QMatrix::from_rows(rows.clone()));
        }
        if kernel.len() != 1 {
            return Err(ModSymError::EigenlineNotIsolated { bound: hecke_bound, dimension: kernel.len() });
        }
        let phi = &kernel[0];
        let mut raw: Vec<Rat> = (0..space.num_generators())
            .map(|i| space.coordinates(i).iter().zip(phi).map(|(a, b)| a * b).sum())
            .collect();
        // primitive integral scaling
        let den = common_denominator(raw.iter());
        let mut g = BigInt::zero();
        for v in raw.iter_mut() {
            *v = &*v * Rat::from_integer(den.clone());
            g = g.gcd(v.numer());
        }
        if !g.is_zero() {
            for v in raw.iter_mut() {
                *v = &*v / Rat::from_integer(g.clone());
            }
        }
        let mut sym = PlusSymbol {
            space,
            curve: curve.clone(),
            values: raw,
            denominator: 1,
            scaled: Vec::new(),
            normalization: NormalizationRecord {
                cusp: String::new(),
                numeric: 0.0,
                raw_value: Rat::zero(),
                scalar: Rat::one(),
                residual: 0.0,
                omega_plus: 0.0,
                cusps_checked: 0,
            },
        };
        sym.refresh_scaled();
        sym.normalize()?;
        Ok(sym)
    }

    fn refresh_scaled(&mut self) {
        let den = common_denominator(self.values.iter());
        self.denominator = den.to_i64().expect("denominator fits in i64");
        self.scaled = self
            .values
            .iter()
            .map(|v| (v * Rat::from_integer(den.clone())).to_integer().to_i64().expect("value fits in i64"))
            .collect();
    }

    /// Pins the scalar against numerically integrated periods at cusps a/q with N | q.
    fn normalize(&mut self) -> Result<(), ModSymError> {
        let n = self.space.level() as i64;
        let omega = real_period(&self.curve).omega_plus;
        let mut samples: Vec<(i64, i64, Rat, f64)> = Vec::new();
        let mut an_cache: Option<(i64, Vec<i64>)> = None;
        for mult in 1..=4i64 {
            let q = n * mult;
            let terms = (7.0 * q as f64).ceil() as usize + 20;
            let an = match &an_cache {
                Some((t, a)) if *t as usize >= terms => a.clone(),
                _ => {
                    let a = anlist(&self.curve, terms).coeffs;
                    an_cache = Some((terms as i64, a.clone()));
                    a
                }
            };
            for a in 1..q {
                if a.gcd(&q) != 1 {
                    continue;
                }
                let raw = self.eval_cusp(&Rat::new(BigInt::from(a), BigInt::from(q)));
                let num = numeric_symbol(&an[..terms.min(an.len())], a, q) / omega;
                samples.push((a, q, raw, num));
                if samples.len() >= 12 {
                    break;
                }
            }
            if samples.iter().any(|s| !s.2.is_zero()) && samples.len() >= 6 {
                break;
            }
        }
        let best = samples
            .iter()
            .filter(|s| !s.2.is_zero())
            .max_by(|x, y| x.2.abs().cmp(&y.2.abs()))
            .cloned();
        let Some((a, q, raw, num)) = best else {
            return Err(ModSymError::NormalizationMismatch { cusp: "none".into(), ratio: f64::NAN });
        };
        let ratio = num / crate::exact::rat_to_f64(&raw);
        let cusp = format!("{a}/{q}");
        let (scalar, residual) = reconstruct_float(ratio, 10_000, 1e-8)
            .ok_or(ModSymError::NormalizationMismatch { cusp: cusp.clone(), ratio })?;
        for (sa, sq, sraw, snum) in &samples {
            let predicted = crate::exact::rat_to_f64(&(sraw * &scalar));
            if (predicted - snum).abs() > 1e-6 {
                return Err(ModSymError::NormalizationMismatch { cusp: format!("{sa}/{sq}"), ratio: snum / predicted });
            }
        }
        for v in self.values.iter_mut() {
            *v = &*v * &scalar;
        }
        self.refresh_scaled();
        self.normalization = NormalizationRecord {
            cusp,
            numeric: num,
            raw_value: raw,
            scalar,
            residual,
            omega_plus: omega,
            cusps_checked: samples.len(),
        };
        Ok(())
    }

    pub fn space(&self) -> &ManinSpace {
        &self.space
    }

    pub fn curve(&self) -> &CurveData {
        &self.curve
    }

    /// Value of the functional on the generator with the given P¹ index.
    pub fn generator_value(&self, i: usize) -> &Rat {
        &self.values[i]
    }

    /// Common denominator D of all values; `eval_scaled` returns D·[r]⁺.
    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    /// [r]⁺ for an arbitrary rational r via Manin's continued-fraction trick:
    /// {∞, r} = Σ_k (q_k : (−1)^{k−1} q_{k−1}) over the convergent denominators.
    pub fn eval_cusp(&self, r: &Rat) -> Rat {
        let p1 = self.space.p1();
        let (mut x, mut y) = (r.numer().clone(), r.denom().clone());
        let mut acc = self.values[p1.index(1, 0)].clone();
        let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::one());
        let mut sign = BigInt::one();
        let mut rem = x.mod_floor(&y);
        while !rem.is_zero() {
            x = std::mem::replace(&mut y, rem);
            let q_next = x.div_floor(&y) * &q_cur + &q_prev;
            acc += &self.values[p1.index_big(&q_next, &(&sign * &q_cur))];
            sign = -sign;
            q_prev = std::mem::replace(&mut q_cur, q_next);
            rem = x.mod_floor(&y);
        }
        acc
    }

    /// D·[a/q]⁺ in machine integers; the hot path of Mazur–Tate sums.
    pub fn eval_scaled(&self, a: i64, q: i64) -> i64 {
        let p1 = self.space.p1();
        let (mut x, mut y) = (a, q);
        let mut acc = self.scaled[p1.index(1, 0)];
        let (mut q_prev, mut q_cur) = (0i64, 1i64);
        let mut sign = 1i64;
        let mut rem = x.rem_euclid(y);
        while rem != 0 {
            x = y;
            y = rem;
            let q_next = x.div_euclid(y) * q_cur + q_prev;
            acc += self.scaled[p1.index(q_next, sign * q_cur)];
            sign = -sign;
            q_prev = q_cur;
            q_cur = q_next;
            rem = x.rem_euclid(y);
        }
        acc
    }
}

/// Rational string of a value, for reports.
pub fn format_value(v: &Rat) -> String {
    rat_to_string(v)
}
