//! Exact univariate polynomials over the rationals, plus a small
//! complex-float polynomial used by the numerical paths.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Degree of a polynomial. The zero polynomial has degree `MinusInfinity`,
/// which orders below every finite degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    MinusInfinity,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::MinusInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::MinusInfinity => write!(f, "-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// Dense polynomial with rational coefficients; `coeffs[i]` multiplies `x^i`.
///
/// The highest stored coefficient is always nonzero, so the zero
/// polynomial is the empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RatPoly {
    coeffs: Vec<Rational>,
}

/// Polynomial in the family parameter λ. Same representation as [`RatPoly`].
pub type LamPoly = RatPoly;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Nearest double to a rational, safe for numerators and denominators of
/// any size.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let (m, e) = big_ratio_mantissa(q.numer(), q.denom());
    m * 2f64.powi(e.clamp(-1100, 1100) as i32)
}

/// Returns `(m, e)` with `num/den ≈ m · 2^e`, `|m|` in `[0.5, 2)`.
fn big_ratio_mantissa(num: &BigInt, den: &BigInt) -> (f64, i64) {
    let (mn, en) = big_mantissa(num);
    let (md, ed) = big_mantissa(den);
    (mn / md, en - ed)
}

/// Splits a big integer as `m · 2^e` with `|m|` in `[0.5, 1)`.
pub fn big_mantissa(x: &BigInt) -> (f64, i64) {
    if x.is_zero() {
        return (0.0, 0);
    }
    let bits = x.bits() as i64;
    let shift = bits - 60;
    let top = if shift > 0 { x >> (shift as usize) } else { x << ((-shift) as usize) };
    let m = top.to_f64().unwrap_or(0.0) / 2f64.powi(60);
    (m, bits)
}

/// Exact dyadic rational equal to a finite double.
pub fn f64_to_rational(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Integer numerators over a common denominator.
    fn integer_form(&self) -> (Vec<BigInt>, BigInt) {
        let den = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = self.coeffs.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        (nums, den)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Degree {
        match self.coeffs.len() {
            0 => Degree::MinusInfinity,
            n => Degree::Finite(n - 1),
        }
    }

    /// Finite degree, with the zero polynomial mapped to 0. Only for places
    /// where the distinction is irrelevant (loop bounds, sizes).
    pub fn degree_or_zero(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `self(inner(x))` by Horner's scheme.
    pub fn compose(&self, inner: &RatPoly) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + rational_to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * int(i as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let inv = self.lead().recip();
        self.scale(&inv)
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree_or_zero();
        let lead_inv = divisor.lead().recip();
        let mut rem = self.coeffs.clone();
        if rem.len() < divisor.coeffs.len() {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] * &lead_inv;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Square-free decomposition (Yun): returns `(factor, multiplicity)`
    /// pairs of pairwise coprime square-free monic factors whose product,
    /// with multiplicities, equals the monic part of `self`. Constant
    /// factors are omitted.
    pub fn squarefree_decomposition(&self) -> Vec<(RatPoly, usize)> {
        if self.degree_or_zero() == 0 {
            return Vec::new();
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.div_rem(&a0).0;
        let mut c = df.div_rem(&a0).0;
        let mut d = &c - &b.derivative();
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree_or_zero() > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            if b.degree_or_zero() == 0 {
                break;
            }
            c = d.div_rem(&a).0;
            d = &c - &b.derivative();
            i += 1;
        }
        out
    }

    /// Integer coefficients of the primitive polynomial with the same roots
    /// (denominators cleared, content removed, positive leading coefficient).
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        if self.is_zero() {
            return Vec::new();
        }
        let lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if ints.last().is_some_and(|c| c.is_negative()) { -1 } else { 1 };
        let g = g * sign;
        for c in ints.iter_mut() {
            *c = &*c / &g;
        }
        ints
    }

    pub fn to_cpoly(&self) -> CPoly {
        CPoly::new(
            self.coeffs
                .iter()
                .map(|c| Complex64::new(rational_to_f64(c), 0.0))
                .collect(),
        )
    }

    pub fn display_with(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else if mag.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{mag}*{mono}"));
            }
        }
        out
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("x"))
    }
}

impl Add for &RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RatPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RatPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &RatPoly) -> RatPoly {
        if self.is_zero() || rhs.is_zero() {
            return RatPoly::zero();
        }
        let (a, da) = self.integer_form();
        let (b, db) = rhs.integer_form();
        let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        let den = da * db;
        RatPoly::new(out.into_iter().map(|n| Rational::new(n, den.clone())).collect())
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatPoly {
            type Output = RatPoly;
            fn $m(self, rhs: RatPoly) -> RatPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Complex-float polynomial, `coeffs[i]` multiplies `z^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    coeffs: Vec<Complex64>,
}

impl CPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Degree {
        match self.coeffs.len() {
            0 => Degree::MinusInfinity,
            n => Degree::Finite(n - 1),
        }
    }

    pub fn degree_or_zero(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Σ_{i<d} |a_i / a_d| · |z|^{i-d}: the relative size of the non-leading
    /// part of the polynomial at `z`.
    #[inline]
    pub fn tail_ratio(&self, abs_z: f64) -> f64 {
        let d = self.degree_or_zero();
        let lead = self.lead().norm();
        let inv = 1.0 / abs_z;
        let mut acc = 0.0;
        let mut pw = 1.0;
        for i in (0..d).rev() {
            pw *= inv;
            acc += self.coeffs[i].norm() / lead * pw;
        }
        acc
    }
}

/// Orders rationals by absolute value; handy for picking extremal
/// coefficients.
pub fn cmp_abs(a: &Rational, b: &Rational) -> Ordering {
    a.abs().cmp(&b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_has_minus_infinity_degree() {
        assert_eq!(RatPoly::zero().degree(), Degree::MinusInfinity);
        assert!(Degree::MinusInfinity < Degree::Finite(0));
        assert_eq!(RatPoly::from_ints(&[1, 0, 0]).degree(), Degree::Finite(0));
    }

    #[test]
    fn compose_and_eval() {
        // (x^2 + 1)(x + 2) = x^2 + 4x + 5
        let f = RatPoly::from_ints(&[1, 0, 1]);
        let g = RatPoly::from_ints(&[2, 1]);
        assert_eq!(f.compose(&g), RatPoly::from_ints(&[5, 4, 1]));
        assert_eq!(f.eval(&int(3)), int(10));
    }

    #[test]
    fn division_and_gcd() {
        let a = RatPoly::from_ints(&[-1, 0, 1]); // x^2 - 1
        let b = RatPoly::from_ints(&[1, 1]); // x + 1
        let (q, r) = a.div_rem(&b);
        assert_eq!(q, RatPoly::from_ints(&[-1, 1]));
        assert!(r.is_zero());
        let c = RatPoly::from_ints(&[2, 3, 1]); // (x+1)(x+2)
        assert_eq!(a.gcd(&c), b);
    }

    #[test]
    fn yun_recovers_multiplicities() {
        // x^3 (x + 2) (x - 1)^2
        let x = RatPoly::x();
        let p = &(&x.pow(3) * &RatPoly::from_ints(&[2, 1])) * &RatPoly::from_ints(&[-1, 1]).pow(2);
        let mut parts = p.squarefree_decomposition();
        parts.sort_by_key(|(_, m)| *m);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], (RatPoly::from_ints(&[2, 1]), 1));
        assert_eq!(parts[1], (RatPoly::from_ints(&[-1, 1]), 2));
        assert_eq!(parts[2], (x.pow(1), 3));
    }

    #[test]
    fn primitive_part_clears_denominators() {
        let p = RatPoly::new(vec![rat(1, 2), rat(-3, 4), rat(1, 4)]);
        let ints: Vec<i64> = p.primitive_integer().iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(ints, vec![2, -3, 1]);
    }

    #[test]
    fn huge_rational_to_float() {
        let big = Rational::from_integer(BigInt::from(10).pow(400));
        let q = &big / (&big * int(3));
        assert!((rational_to_f64(&q) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(rational_to_f64(&rat(-3, 2)), -1.5);
    }

    #[test]
    fn display_uses_variable_name() {
        let p = RatPoly::new(vec![int(1), int(0), rat(-1, 2)]);
        assert_eq!(p.display_with("l"), "-1/2*l^2 + 1");
    }
}
