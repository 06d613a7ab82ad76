//! One-parameter families `f_λ(x) = x^d + Σ_{i≤d-2} c_i(λ) x^i`, their
//! decomposition `P(x) + Σ_j Q_j(x) λ^{m_j}`, normal-form conjugation of a
//! single polynomial, and the symbolic parameter iterates
//! `g_{c,n}(λ) = f_λ^n(c(λ))`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parse::{parse_bipoly, BiPoly};
use crate::poly::{int, rational_to_f64, CPoly, Degree, LamPoly, RatPoly, Rational};

/// Default ceiling on the λ-degree of symbolic iterates.
pub const DEFAULT_DEGREE_CAP: u128 = 1_000_000;

/// One `Q_j(x) λ^{m_j}` term of a family decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyTerm {
    pub m: usize,
    pub q: RatPoly,
    /// Degree of `q` in `x`; at most `d - 2`.
    pub e: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamFamily {
    d: usize,
    c: Vec<LamPoly>,
    p: RatPoly,
    terms: Vec<FamilyTerm>,
}

impl ParamFamily {
    /// Builds the family from `c_0..c_{d-2}` (see [`decompose_family`]).
    pub fn new(d: usize, c: Vec<LamPoly>) -> Result<Self> {
        decompose_family(c, d)
    }

    /// Parses a family such as `x^2 + l` or `x^3 + (2*l^2+1) + l*x`. The
    /// text must already be in normal form.
    pub fn parse(src: &str) -> Result<Self> {
        Self::from_bipoly(&parse_bipoly(src)?)
    }

    pub fn from_bipoly(b: &BiPoly) -> Result<Self> {
        let d = b
            .x_degree()
            .ok_or_else(|| Error::NotNormalForm("zero polynomial".into()))?;
        if d < 2 {
            return Err(Error::DegreeTooSmall(d));
        }
        if b.0[d] != LamPoly::one() {
            return Err(Error::NotNormalForm(format!(
                "leading coefficient is {}, expected 1",
                b.0[d].display_with("l")
            )));
        }
        if !b.0[d - 1].is_zero() {
            return Err(Error::NotNormalForm(format!(
                "coefficient of x^{} is {}, expected 0",
                d - 1,
                b.0[d - 1].display_with("l")
            )));
        }
        Self::new(d, b.0[..d - 1].to_vec())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `c_0(λ), …, c_{d-2}(λ)`.
    pub fn coeffs(&self) -> &[LamPoly] {
        &self.c
    }

    pub fn p(&self) -> &RatPoly {
        &self.p
    }

    pub fn terms(&self) -> &[FamilyTerm] {
        &self.terms
    }

    pub fn r(&self) -> usize {
        self.terms.len()
    }

    /// Largest exponent `m_r`, or 0 for a constant family.
    pub fn m_r(&self) -> usize {
        self.terms.last().map_or(0, |t| t.m)
    }

    pub fn is_constant_family(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficients `c_0..c_{d-2}` rebuilt from `P` and the `Q_j`.
    pub fn reassemble(&self) -> Vec<LamPoly> {
        (0..self.d - 1)
            .map(|i| {
                let mut coeffs = vec![self.p.coeff(i)];
                for t in &self.terms {
                    if coeffs.len() <= t.m {
                        coeffs.resize(t.m + 1, Rational::zero());
                    }
                    coeffs[t.m] += t.q.coeff(i);
                }
                LamPoly::new(coeffs)
            })
            .collect()
    }

    /// The fiber `f_λ` at a rational parameter.
    pub fn specialize(&self, lambda: &Rational) -> RatPoly {
        let mut coeffs: Vec<Rational> = self.c.iter().map(|c| c.eval(lambda)).collect();
        coeffs.push(Rational::zero());
        coeffs.push(Rational::one());
        RatPoly::new(coeffs)
    }

    /// The fiber `f_λ` at a complex parameter.
    pub fn specialize_complex(&self, lambda: Complex64) -> CPoly {
        let mut coeffs: Vec<Complex64> = self.c.iter().map(|c| c.eval_complex(lambda)).collect();
        coeffs.push(Complex64::new(0.0, 0.0));
        coeffs.push(Complex64::new(1.0, 0.0));
        CPoly::new(coeffs)
    }

    /// `f_λ(x)` by Horner evaluation, exactly.
    pub fn eval(&self, lambda: &Rational, x: &Rational) -> Rational {
        let mut acc = Rational::one();
        for i in (0..self.d).rev() {
            acc = acc * x;
            if i < self.d - 1 {
                acc += self.c[i].eval(lambda);
            }
        }
        acc
    }

    pub fn eval_complex(&self, lambda: Complex64, x: Complex64) -> Complex64 {
        self.specialize_complex(lambda).eval(x)
    }

    /// `f_λ(g(λ))` as a polynomial in λ.
    pub fn apply(&self, g: &LamPoly) -> LamPoly {
        let mut acc = LamPoly::one();
        for i in (0..self.d).rev() {
            acc = &acc * g;
            if i < self.d - 1 {
                acc = &acc + &self.c[i];
            }
        }
        acc
    }

    /// Text form in the parse grammar.
    pub fn to_text(&self) -> String {
        let mut parts = vec![format!("x^{}", self.d)];
        for (i, c) in self.c.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "*x".to_string(),
                _ => format!("*x^{i}"),
            };
            parts.push(format!("({}){mono}", c.display_with("l")));
        }
        parts.join(" + ")
    }
}

/// Splits `x^d + Σ c_i(λ) x^i` into `P(x) + Σ_j Q_j(x) λ^{m_j}`.
pub fn decompose_family(c: Vec<LamPoly>, d: usize) -> Result<ParamFamily> {
    if d < 2 {
        return Err(Error::DegreeTooSmall(d));
    }
    if c.len() != d - 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} coefficient polynomials c_0..c_{}, got {}",
            d - 1,
            d - 2,
            c.len()
        )));
    }
    let mut p: Vec<Rational> = c.iter().map(|ci| ci.coeff(0)).collect();
    p.push(Rational::zero());
    p.push(Rational::one());
    let exponents: BTreeSet<usize> = c
        .iter()
        .flat_map(|ci| {
            ci.coeffs()
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, a)| !a.is_zero())
                .map(|(k, _)| k)
        })
        .collect();
    let terms = exponents
        .into_iter()
        .map(|m| {
            let q = RatPoly::new(c.iter().map(|ci| ci.coeff(m)).collect());
            let e = q.degree_or_zero();
            FamilyTerm { m, q, e }
        })
        .collect();
    Ok(ParamFamily { d, c, p: RatPoly::new(p), terms })
}

/// Affine change of variable `δ(x) = a·x + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub a: Rational,
    pub b: Rational,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap { a: Rational::one(), b: Rational::zero() }
    }

    pub fn as_poly(&self) -> RatPoly {
        RatPoly::new(vec![self.b.clone(), self.a.clone()])
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.a.recip();
        AffineMap { b: -(&self.b * &inv), a: inv }
    }
}

/// Outcome of [`normalize_polynomial`].
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    /// `g = δ⁻¹ ∘ f ∘ δ` exactly, with `g` monic and centered.
    Exact { g: RatPoly, delta: AffineMap },
    /// The scale `a = c_d^{-1/(d-1)}` is irrational. `delta.a` is a rational
    /// approximation with 117 significant bits (64 beyond double precision),
    /// `a_f64` its double value, and `g` the exact conjugate under that
    /// approximate map; its leading coefficient is only close to 1.
    Inexact { g: RatPoly, delta: AffineMap, a_f64: f64 },
}

impl Normalization {
    pub fn g(&self) -> &RatPoly {
        match self {
            Normalization::Exact { g, .. } | Normalization::Inexact { g, .. } => g,
        }
    }

    pub fn delta(&self) -> &AffineMap {
        match self {
            Normalization::Exact { delta, .. } | Normalization::Inexact { delta, .. } => delta,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Normalization::Exact { .. })
    }
}

const INEXACT_BITS: u32 = 117;

/// Conjugates `f` to normal form via `δ(x) = c_d^{-1/(d-1)} x - c_{d-1}/(d c_d)`.
pub fn normalize_polynomial(f: &RatPoly) -> Result<Normalization> {
    let d = match f.degree() {
        Degree::Finite(d) if d >= 2 => d,
        Degree::Finite(d) => return Err(Error::DegreeTooSmall(d)),
        Degree::MinusInfinity => return Err(Error::DegreeTooSmall(0)),
    };
    let cd = f.lead();
    let k = (d - 1) as u32;
    let b = -(f.coeff(d - 1) / (&cd * int(d as i64)));

    // a^k = 1/c_d
    let target = cd.recip();
    if target.is_negative() && k % 2 == 0 {
        return Err(Error::NonRealScaling(cd.to_string()));
    }
    let neg = target.is_negative();
    let mag = target.abs();
    let exact_root = exact_kth_root(&mag, k);
    let (a, exact) = match exact_root {
        Some(r) => (r, true),
        None => (approx_kth_root(&mag, k, INEXACT_BITS), false),
    };
    let a = if neg { -a } else { a };
    let delta = AffineMap { a, b };
    let g = delta.inverse().as_poly().compose(&f.compose(&delta.as_poly()));
    if exact {
        Ok(Normalization::Exact { g, delta })
    } else {
        let a_f64 = rational_to_f64(&delta.a);
        Ok(Normalization::Inexact { g, delta, a_f64 })
    }
}

fn exact_kth_root(q: &Rational, k: u32) -> Option<Rational> {
    let rn = q.numer().nth_root(k);
    let rd = q.denom().nth_root(k);
    if rn.pow(k) == *q.numer() && rd.pow(k) == *q.denom() {
        Some(Rational::new(rn, rd))
    } else {
        None
    }
}

/// `floor(q^{1/k} · 2^bits) / 2^bits` for positive `q`.
fn approx_kth_root(q: &Rational, k: u32, bits: u32) -> Rational {
    let scale = BigInt::one() << (bits as usize * k as usize);
    let inner = (q.numer() * scale) / q.denom();
    Rational::new(inner.nth_root(k), BigInt::one() << bits as usize)
}

/// Checks the marked-point hypothesis `m = deg c ≥ m_r` (and `m ≥ 1` for a
/// constant family). Returns `(m, q_m)` when it holds.
pub fn marked_hypothesis(f: &ParamFamily, c: &LamPoly) -> Result<(usize, Rational)> {
    let m = c
        .degree()
        .finite()
        .ok_or_else(|| Error::HypothesisFailed("marked point c is the zero polynomial".into()))?;
    if m < f.m_r() {
        return Err(Error::HypothesisFailed(format!(
            "hypothesis (ii) fails: deg c = {m} < m_r = {}",
            f.m_r()
        )));
    }
    if f.is_constant_family() && m == 0 {
        return Err(Error::HypothesisFailed(
            "constant family requires a nonconstant marked point".into(),
        ));
    }
    Ok((m, c.lead()))
}

/// λ-degree bound for `g_{c,n}`: `max(deg c, m_r) · d^n`.
pub fn predicted_degree(f: &ParamFamily, c: &LamPoly, n: u32) -> Option<u128> {
    let base = c.degree_or_zero().max(f.m_r()).max(1) as u128;
    (f.d() as u128).checked_pow(n)?.checked_mul(base)
}

/// `g_{c,n}(λ) = f_λ^n(c(λ))` with the default degree cap.
pub fn iterate_param(f: &ParamFamily, c: &LamPoly, n: u32) -> Result<LamPoly> {
    iterate_param_capped(f, c, n, DEFAULT_DEGREE_CAP)
}

pub fn iterate_param_capped(f: &ParamFamily, c: &LamPoly, n: u32, cap: u128) -> Result<LamPoly> {
    Ok(param_orbit(f, c, n, cap)?.pop().expect("orbit has n + 1 entries"))
}

/// `[g_{c,0}, …, g_{c,n}]`.
pub fn param_orbit(f: &ParamFamily, c: &LamPoly, n: u32, cap: u128) -> Result<Vec<LamPoly>> {
    let predicted = predicted_degree(f, c, n).unwrap_or(u128::MAX);
    if predicted > cap {
        return Err(Error::DegreeCapExceeded { predicted, cap });
    }
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(c.clone());
    for _ in 0..n {
        let next = f.apply(out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeLawReport {
    pub n: u32,
    pub expected_deg: Option<u128>,
    pub actual_deg: Option<usize>,
    pub expected_lead: Option<String>,
    pub actual_lead: String,
    /// `None` when the hypothesis holds, otherwise the failure message.
    pub hypothesis: Option<String>,
    pub pass: bool,
}

/// Compares `deg g_{c,n}` and its leading coefficient with `m·d^n` and
/// `q_m^{d^n}`.
pub fn check_degree_law(f: &ParamFamily, c: &LamPoly, n: u32) -> Result<DegreeLawReport> {
    let g = iterate_param(f, c, n)?;
    let actual_deg = g.degree().finite();
    let actual_lead = g.lead().to_string();
    match marked_hypothesis(f, c) {
        Err(Error::HypothesisFailed(msg)) => Ok(DegreeLawReport {
            n,
            expected_deg: None,
            actual_deg,
            expected_lead: None,
            actual_lead,
            hypothesis: Some(msg),
            pass: false,
        }),
        Err(e) => Err(e),
        Ok((m, q)) => {
            let dn = (f.d() as u128).pow(n);
            let expected_deg = m as u128 * dn;
            let expected_lead = pow_rational(&q, dn as u64);
            let pass = actual_deg.map(|a| a as u128) == Some(expected_deg) && g.lead() == expected_lead;
            Ok(DegreeLawReport {
                n,
                expected_deg: Some(expected_deg),
                actual_deg,
                expected_lead: Some(expected_lead.to_string()),
                actual_lead,
                hypothesis: None,
                pass,
            })
        }
    }
}

pub fn pow_rational(q: &Rational, mut e: u64) -> Rational {
    let mut base = q.clone();
    let mut acc = Rational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_lampoly;
    use crate::poly::rat;

    fn lp(s: &str) -> LamPoly {
        parse_lampoly(s).unwrap()
    }

    #[test]
    fn normalize_examples() {
        // Composition oracle: δ^{-1}(f(δ(x))) with δ(x) = x - 3/2 gives x^2 + 1/4.
        let n = normalize_polynomial(&RatPoly::from_ints(&[1, 3, 1])).unwrap();
        assert!(n.is_exact());
        assert_eq!(n.g(), &RatPoly::new(vec![rat(1, 4), int(0), int(1)]));
        assert_eq!(n.delta(), &AffineMap { a: int(1), b: rat(-3, 2) });

        let n = normalize_polynomial(&RatPoly::from_ints(&[0, 0, 0, 1])).unwrap();
        assert_eq!(n.g(), &RatPoly::from_ints(&[0, 0, 0, 1]));
        assert_eq!(n.delta(), &AffineMap::identity());

        let n = normalize_polynomial(&RatPoly::from_ints(&[1, 4, 2])).unwrap();
        assert_eq!(n.g(), &RatPoly::from_ints(&[0, 0, 1]));
        assert_eq!(n.delta(), &AffineMap { a: rat(1, 2), b: int(-1) });
    }

    #[test]
    fn normalize_errors_and_inexact() {
        assert_eq!(normalize_polynomial(&RatPoly::from_ints(&[1, 1])), Err(Error::DegreeTooSmall(1)));
        assert!(matches!(
            normalize_polynomial(&RatPoly::from_ints(&[0, 0, 0, -1])),
            Err(Error::NonRealScaling(_))
        ));
        // 2x^3: a = 2^{-1/2} is irrational.
        let n = normalize_polynomial(&RatPoly::from_ints(&[0, 1, 0, 2])).unwrap();
        match &n {
            Normalization::Inexact { g, a_f64, .. } => {
                assert!((a_f64 - 0.5f64.sqrt()).abs() < 1e-16);
                assert!((rational_to_f64(&g.lead()) - 1.0).abs() < 1e-30);
                assert!(g.coeff(2).is_zero());
            }
            _ => panic!("expected inexact normalization"),
        }
        // Negative leading coefficient with an odd root stays exact.
        let n = normalize_polynomial(&RatPoly::from_ints(&[0, 0, -1])).unwrap();
        assert_eq!(n.g(), &RatPoly::from_ints(&[0, 0, 1]));
    }

    #[test]
    fn decompose_examples() {
        let f = ParamFamily::new(2, vec![lp("l")]).unwrap();
        assert_eq!(f.p(), &RatPoly::from_ints(&[0, 0, 1]));
        assert_eq!(f.r(), 1);
        assert_eq!(f.terms()[0], FamilyTerm { m: 1, q: RatPoly::one(), e: 0 });

        let f = ParamFamily::new(3, vec![lp("2*l^2+1"), lp("l")]).unwrap();
        assert_eq!(f.p(), &RatPoly::from_ints(&[1, 0, 0, 1]));
        assert_eq!(f.terms()[0], FamilyTerm { m: 1, q: RatPoly::x(), e: 1 });
        assert_eq!(f.terms()[1], FamilyTerm { m: 2, q: RatPoly::from_ints(&[2]), e: 0 });
        assert_eq!(f.reassemble(), f.coeffs());

        let f = ParamFamily::new(2, vec![lp("5")]).unwrap();
        assert_eq!(f.r(), 0);
        assert_eq!(f.p(), &RatPoly::from_ints(&[5, 0, 1]));
    }

    #[test]
    fn parse_requires_normal_form() {
        assert!(ParamFamily::parse("x^2 + l").is_ok());
        assert!(matches!(ParamFamily::parse("x^2 + x + l"), Err(Error::NotNormalForm(_))));
        assert!(matches!(ParamFamily::parse("2*x^2 + l"), Err(Error::NotNormalForm(_))));
        assert!(matches!(ParamFamily::parse("x + l"), Err(Error::DegreeTooSmall(1))));
        let f = ParamFamily::parse("x^3 + (2*l^2+1) + l*x").unwrap();
        assert_eq!(ParamFamily::parse(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn eval_examples() {
        let f = ParamFamily::parse("x^2 + l").unwrap();
        assert_eq!(f.eval(&int(1), &int(2)), int(5));
        assert_eq!(f.eval(&int(-1), &int(0)), int(-1));
        let g = ParamFamily::parse("x^3 + 1 + l*x").unwrap();
        assert_eq!(g.eval(&int(2), &int(1)), int(4));
        let z = g.eval_complex(Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0));
        assert_eq!(z, Complex64::new(4.0, 0.0));
    }

    #[test]
    fn iterate_examples() {
        let f = ParamFamily::parse("x^2 + l").unwrap();
        let c = lp("l");
        assert_eq!(iterate_param(&f, &c, 0).unwrap(), c);
        assert_eq!(iterate_param(&f, &c, 1).unwrap(), lp("l^2 + l"));
        assert_eq!(iterate_param(&f, &c, 2).unwrap(), lp("l^4 + 2*l^3 + l^2 + l"));
    }

    #[test]
    fn degree_cap_guard() {
        let f = ParamFamily::parse("x^2 + l").unwrap();
        let err = iterate_param(&f, &lp("l"), 20).unwrap_err();
        assert_eq!(err, Error::DegreeCapExceeded { predicted: 1 << 20, cap: DEFAULT_DEGREE_CAP });
        assert!(iterate_param_capped(&f, &lp("l"), 3, 7).is_err());
    }

    #[test]
    fn degree_law_examples() {
        let f = ParamFamily::parse("x^2 + l").unwrap();
        let r = check_degree_law(&f, &lp("l"), 3).unwrap();
        assert!(r.pass);
        assert_eq!(r.expected_deg, Some(8));
        assert_eq!(r.actual_lead, "1");

        let r = check_degree_law(&f, &lp("3*l^2"), 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.actual_deg, Some(8));
        assert_eq!(r.actual_lead, "81");

        let g = ParamFamily::parse("x^3 + l^2*x").unwrap();
        let r = check_degree_law(&g, &lp("l"), 1).unwrap();
        assert!(!r.pass);
        assert!(r.hypothesis.unwrap().contains("hypothesis (ii) fails"));
    }
}
