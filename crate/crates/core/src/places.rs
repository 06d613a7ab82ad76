//! Absolute values on ℚ, escape radii, and the good-place certificate for
//! a family with a marked point.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::family::ParamFamily;
use crate::padic::valuation;
use crate::poly::{rational_to_f64, LamPoly, RatPoly, Rational};

/// A place of ℚ: the archimedean absolute value or a p-adic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Place {
    Arch,
    Prime { p: u64 },
}

impl Place {
    /// Product-formula multiplicity `N_v`; always 1 over ℚ.
    pub fn multiplicity(&self) -> u32 {
        1
    }
}

/// `|α|_v`: a float at the archimedean place, an exact valuation at a
/// finite one (`None` is the infinite valuation of 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbsValue {
    Arch(f64),
    PAdic { p: u64, valuation: Option<i64> },
}

impl AbsValue {
    pub fn to_f64(&self) -> f64 {
        match *self {
            AbsValue::Arch(x) => x,
            AbsValue::PAdic { valuation: None, .. } => 0.0,
            AbsValue::PAdic { p, valuation: Some(v) } => (p as f64).powi(-(v as i32)),
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            AbsValue::Arch(x) => x.ln(),
            AbsValue::PAdic { valuation: None, .. } => f64::NEG_INFINITY,
            AbsValue::PAdic { p, valuation: Some(v) } => -(v as f64) * (p as f64).ln(),
        }
    }
}

pub fn abs_value(place: Place, alpha: &Rational) -> AbsValue {
    match place {
        Place::Arch => AbsValue::Arch(rational_to_f64(&alpha.abs())),
        Place::Prime { p } => AbsValue::PAdic { p, valuation: valuation(alpha, &BigInt::from(p)) },
    }
}

/// Prime factorization of `|n|` as `(p, exponent)` pairs, ascending.
pub fn factorize(n: &BigInt) -> Vec<(u64, u32)> {
    let mut n = n.abs();
    let mut out: Vec<(u64, u32)> = Vec::new();
    if n.is_zero() {
        return out;
    }
    let push = |p: u64, out: &mut Vec<(u64, u32)>| match out.iter_mut().find(|(q, _)| *q == p) {
        Some(e) => e.1 += 1,
        None => out.push((p, 1)),
    };
    for p in 2u64..1000 {
        let bp = BigInt::from(p);
        while (&n % &bp).is_zero() {
            n /= &bp;
            push(p, &mut out);
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            let p = m.to_u64().expect("prime factor larger than 64 bits");
            push(p, &mut out);
            continue;
        }
        let f = pollard_rho(&m);
        stack.push(&m / &f);
        stack.push(f);
    }
    out.sort_unstable();
    out
}

fn is_probable_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if *n < two {
        return false;
    }
    let bases = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    for &b in &bases {
        if *n == BigInt::from(b) {
            return true;
        }
        if (n % b).is_zero() {
            return false;
        }
    }
    let n1: BigInt = n - 1u32;
    let mut d = n1.clone();
    let mut s = 0;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'outer: for &b in &bases {
        let mut x = BigInt::from(b).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigInt) -> BigInt {
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut x = BigInt::from(2);
        let mut y = x.clone();
        let mut d = BigInt::one();
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            d = (&x - &y).abs().gcd(n);
        }
        if &d != n {
            return d;
        }
        c += 1;
    }
}

/// Primes dividing the numerator or denominator of `alpha`.
pub fn prime_support(alpha: &Rational) -> Vec<u64> {
    let mut s: BTreeSet<u64> = factorize(alpha.numer()).into_iter().map(|(p, _)| p).collect();
    s.extend(factorize(alpha.denom()).into_iter().map(|(p, _)| p));
    s.into_iter().collect()
}

/// `Σ_v N_v log|α|_v` over `{∞} ∪ {p | num·den}`, computed from exact
/// valuations; the finite part is an exact integer combination of `log p`.
/// Returns `(archimedean term, finite terms as (p, -v_p))`.
pub fn product_formula_terms(alpha: &Rational) -> (f64, Vec<(u64, i64)>) {
    let arch = abs_value(Place::Arch, alpha).ln();
    let finite = prime_support(alpha)
        .into_iter()
        .map(|p| (p, -valuation(alpha, &BigInt::from(p)).expect("nonzero")))
        .collect();
    (arch, finite)
}

/// Escape radius `r_v`: archimedean as a float, p-adic as `log_p r_v`.
#[derive(Debug, Clone, PartialEq)]
pub enum EscapeRadius {
    Arch(f64),
    PAdic { p: u64, log_p: Rational },
}

impl EscapeRadius {
    pub fn to_f64(&self) -> f64 {
        match self {
            EscapeRadius::Arch(r) => *r,
            EscapeRadius::PAdic { p, log_p } => (*p as f64).powf(rational_to_f64(log_p)),
        }
    }
}

/// `r_v = max(|a_d|^{-1/(d-1)}, max_{i<d} |a_i/a_d|^{1/(d-i)})`.
///
/// Panics if `deg f < 2`.
pub fn escape_radius(f: &RatPoly, place: Place) -> EscapeRadius {
    let d = f.degree().finite().filter(|&d| d >= 2).expect("escape radius needs degree >= 2");
    let ad = f.lead();
    match place {
        Place::Arch => {
            let ad_abs = rational_to_f64(&ad.abs());
            let mut r = ad_abs.powf(-1.0 / (d - 1) as f64);
            for i in 0..d {
                let ai = rational_to_f64(&f.coeff(i).abs());
                if ai > 0.0 {
                    r = r.max((ai / ad_abs).powf(1.0 / (d - i) as f64));
                }
            }
            EscapeRadius::Arch(r)
        }
        Place::Prime { p } => EscapeRadius::PAdic { p, log_p: log_escape_radius(f, p) },
    }
}

/// `log_p r_v` as an exact rational.
pub fn log_escape_radius(f: &RatPoly, p: u64) -> Rational {
    let d = f.degree_or_zero();
    let bp = BigInt::from(p);
    let vd = valuation(&f.lead(), &bp).expect("nonzero leading coefficient");
    let mut best = Rational::new(BigInt::from(vd), BigInt::from(d as i64 - 1));
    for i in 0..d {
        if let Some(vi) = valuation(&f.coeff(i), &bp) {
            let cand = Rational::new(BigInt::from(vd - vi), BigInt::from((d - i) as i64));
            if cand > best {
                best = cand;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BadReason {
    NonIntegralCoefficient,
    LeadingCoefficientNotUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodPlaceReport {
    pub place: Place,
    pub is_good: bool,
    pub reasons: Vec<BadReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodPlaces {
    /// One report per prime dividing some numerator or denominator of the
    /// coefficient data.
    pub reports: Vec<GoodPlaceReport>,
    /// Every prime not listed divides no coefficient numerator or
    /// denominator, hence is good.
    pub certificate: String,
}

impl GoodPlaces {
    pub fn bad_primes(&self) -> Vec<u64> {
        self.reports
            .iter()
            .filter(|r| !r.is_good)
            .filter_map(|r| match r.place {
                Place::Prime { p } => Some(p),
                Place::Arch => None,
            })
            .collect()
    }
}

/// Classifies the finite places for `(F, c)`. At a good prime every
/// coefficient of the `c_i` and of `c` is p-integral and `|q_m|_p = 1`, so
/// the p-adic generalized Mandelbrot set is the closed unit disk.
pub fn good_places(f: &ParamFamily, c: &LamPoly) -> GoodPlaces {
    let all: Vec<&Rational> = f
        .coeffs()
        .iter()
        .flat_map(|ci| ci.coeffs().iter())
        .chain(c.coeffs().iter())
        .filter(|a| !a.is_zero())
        .collect();
    let mut primes = BTreeSet::new();
    for a in &all {
        primes.extend(prime_support(a));
    }
    let q = c.lead();
    let reports = primes
        .into_iter()
        .map(|p| {
            let bp = BigInt::from(p);
            let mut reasons = Vec::new();
            if all.iter().any(|a| valuation(a, &bp).unwrap() < 0) {
                reasons.push(BadReason::NonIntegralCoefficient);
            }
            if valuation(&q, &bp).is_some_and(|v| v != 0) {
                reasons.push(BadReason::LeadingCoefficientNotUnit);
            }
            GoodPlaceReport { place: Place::Prime { p }, is_good: reasons.is_empty(), reasons }
        })
        .collect();
    GoodPlaces {
        reports,
        certificate: "all primes not listed divide no coefficient numerator or denominator: \
                      coefficients are integral and the leading coefficient of c is a unit"
            .to_string(),
    }
}

/// Primes at which `f` may have bad reduction or `x` is non-integral:
/// divisors of denominators of `x` and of the coefficients, and of the
/// numerator of the leading coefficient. Everywhere else the orbit of `x`
/// stays integral.
pub fn relevant_primes(f: &RatPoly, x: &Rational) -> Vec<u64> {
    let mut s = BTreeSet::new();
    for a in f.coeffs() {
        s.extend(factorize(a.denom()).into_iter().map(|(p, _)| p));
    }
    s.extend(factorize(f.lead().numer()).into_iter().map(|(p, _)| p));
    s.extend(factorize(x.denom()).into_iter().map(|(p, _)| p));
    s.into_iter().collect()
}
