//! Simultaneous root finding with exact residual certification.
//!
//! Roots of a rational polynomial are approximated by the Aberth–Ehrlich
//! iteration in double precision on each square-free factor, then polished
//! by Newton steps whose values `P(z)` and `P'(z)` are computed exactly at
//! the dyadic point `z`. For a square-free `P` of degree `n` there is a root
//! within `n·|P(z)|/|P'(z)|` of `z`, which is reported as the error radius.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{big_mantissa, rational_to_f64, CPoly, RatPoly};

pub const DEFAULT_MAX_ITER: usize = 500;
const POLISH_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct AberthResult {
    pub roots: Vec<Complex64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
}

impl AberthResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Upper bound on the moduli of the roots (Fujiwara).
pub fn root_bound(p: &CPoly) -> f64 {
    let n = p.degree_or_zero();
    let lead = p.lead().norm();
    let mut b: f64 = 0.0;
    for (i, c) in p.coeffs()[..n].iter().enumerate() {
        let k = (n - i) as f64;
        let mut t = (c.norm() / lead).powf(1.0 / k);
        if i == 0 {
            t *= 0.5f64.powf(1.0 / k);
        }
        b = b.max(t);
    }
    2.0 * b
}

/// Aberth–Ehrlich iteration on all roots of `p` at once.
pub fn aberth(p: &CPoly, max_iter: usize) -> AberthResult {
    let n = p.degree_or_zero();
    if n == 0 {
        return AberthResult { roots: Vec::new(), converged: Vec::new(), iterations: 0 };
    }
    let dp = p.derivative();
    let abs_coeffs = CPoly::new(p.coeffs().iter().map(|c| Complex64::new(c.norm(), 0.0)).collect());
    let r = root_bound(p).max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r, TAU * k as f64 / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut all = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let zk = z[k];
            let pv = p.eval(zk);
            let noise = 8.0 * f64::EPSILON * abs_coeffs.eval(Complex64::new(zk.norm(), 0.0)).re;
            if pv.norm() <= noise {
                done[k] = true;
                continue;
            }
            all = false;
            let w = pv / dp.eval(zk);
            let s: Complex64 = (0..n).filter(|&j| j != k).map(|j| (zk - z[j]).inv()).sum();
            let step = w / (Complex64::one() - w * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[k] = zk - step;
                if step.norm() <= 2.0 * f64::EPSILON * z[k].norm() {
                    done[k] = true;
                }
            }
        }
        if all {
            break;
        }
    }
    AberthResult { roots: z, converged: done, iterations }
}

/// A dyadic complex number `(re + i·im)/2^shift` with integer parts.
struct Dyadic {
    re: BigInt,
    im: BigInt,
    shift: u64,
}

fn decode(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    (BigInt::from(mant) * sign, e)
}

impl Dyadic {
    fn from_complex(z: Complex64) -> Self {
        let (mr, er) = decode(z.re);
        let (mi, ei) = decode(z.im);
        let e = er.min(ei).min(0);
        let re = mr << (er - e) as usize;
        let im = mi << (ei - e) as usize;
        Dyadic { re, im, shift: (-e) as u64 }
    }
}

/// `value · 2^exp` with the mantissa part in ordinary range.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    value: Complex64,
    exp: i64,
}

impl Scaled {
    fn from_big(re: &BigInt, im: &BigInt, exp: i64) -> Self {
        let bits = re.bits().max(im.bits()) as i64;
        let drop = (bits - 60).max(0);
        let conv = |x: &BigInt| {
            let (m, e) = big_mantissa(&(x.abs() >> drop as usize));
            let v = m * 2f64.powi(e as i32);
            if x.is_negative() {
                -v
            } else {
                v
            }
        };
        Scaled { value: Complex64::new(conv(re), conv(im)), exp: exp + drop }
    }

    fn norm(&self) -> f64 {
        self.value.norm() * 2f64.powf(self.exp as f64)
    }

    fn div(&self, other: &Scaled) -> Complex64 {
        (self.value / other.value) * 2f64.powf((self.exp - other.exp) as f64)
    }

    fn is_zero(&self) -> bool {
        self.value == Complex64::new(0.0, 0.0)
    }
}

/// Exact evaluation of an integer polynomial at a dyadic point, returned
/// rounded once at the end.
fn eval_exact(coeffs: &[BigInt], z: &Dyadic) -> Scaled {
    let n = coeffs.len() - 1;
    let s = z.shift as usize;
    // Homogeneous Horner: Σ c_i (re + i im)^i (2^s)^(n-i), divided by 2^(s n).
    let mut ar = coeffs[n].clone();
    let mut ai = BigInt::zero();
    for i in (0..n).rev() {
        let nr = &ar * &z.re - &ai * &z.im;
        let ni = &ar * &z.im + &ai * &z.re;
        ar = nr + (&coeffs[i] << (s * (n - i)));
        ai = ni;
    }
    Scaled::from_big(&ar, &ai, -((s * n) as i64))
}

fn derivative_ints(coeffs: &[BigInt]) -> Vec<BigInt> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect()
}

/// `|P(z)|` computed exactly and rounded once.
pub fn exact_abs_at(p: &RatPoly, z: Complex64) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    let ints = p.primitive_integer();
    // primitive_integer scales by a positive rational; undo it via the lead.
    let scale = rational_to_f64(&p.lead()).abs() / big_to_f64(&ints[ints.len() - 1]).abs();
    eval_exact(&ints, &Dyadic::from_complex(z)).norm() * scale
}

fn big_to_f64(x: &BigInt) -> f64 {
    let (m, e) = big_mantissa(&x.abs());
    m * 2f64.powf(e as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedRoot {
    pub z: Complex64,
    /// A root of the square-free factor lies within this distance of `z`.
    pub radius: f64,
    pub multiplicity: usize,
    pub converged: bool,
}

/// All roots of an exact polynomial, grouped by multiplicity.
pub fn roots_exact(p: &RatPoly, max_iter: usize) -> Vec<CertifiedRoot> {
    let mut out = Vec::new();
    for (factor, mult) in p.squarefree_decomposition() {
        let deg = factor.degree_or_zero();
        if deg == 0 {
            continue;
        }
        let ints = factor.primitive_integer();
        let dints = derivative_ints(&ints);
        let approx = aberth(&factor.monic().to_cpoly(), max_iter);
        for (z0, conv) in approx.roots.into_iter().zip(approx.converged) {
            let (z, radius) = polish(&ints, &dints, deg, z0);
            out.push(CertifiedRoot { z, radius, multiplicity: mult, converged: conv && radius.is_finite() });
        }
    }
    out
}

fn radius_at(ints: &[BigInt], dints: &[BigInt], deg: usize, z: Complex64) -> (f64, Scaled, Scaled) {
    let dz = Dyadic::from_complex(z);
    let pv = eval_exact(ints, &dz);
    let dv = eval_exact(dints, &dz);
    let r = if pv.is_zero() {
        0.0
    } else if dv.is_zero() {
        f64::INFINITY
    } else {
        // deg·|P|/|P'| with a little headroom for the final roundings.
        deg as f64 * pv.div(&dv).norm() * (1.0 + 8.0 * f64::EPSILON)
    };
    (r, pv, dv)
}

fn polish(ints: &[BigInt], dints: &[BigInt], deg: usize, z0: Complex64) -> (Complex64, f64) {
    let (mut best_r, mut pv, mut dv) = radius_at(ints, dints, deg, z0);
    let mut best = z0;
    let mut z = z0;
    for _ in 0..POLISH_STEPS {
        if best_r == 0.0 || dv.is_zero() {
            break;
        }
        let next = z - pv.div(&dv);
        if !next.re.is_finite() || !next.im.is_finite() || next == z {
            break;
        }
        z = next;
        let (r, p2, d2) = radius_at(ints, dints, deg, z);
        pv = p2;
        dv = d2;
        if r < best_r {
            best_r = r;
            best = z;
        }
    }
    (best, best_r)
}

/// Roots of a complex-float polynomial, failing if any root does not
/// converge within `max_iter` sweeps.
pub fn roots_complex(p: &CPoly, max_iter: usize) -> Result<Vec<Complex64>> {
    let r = aberth(p, max_iter);
    if !r.all_converged() {
        return Err(Error::RootsNotConverged { iterations: r.iterations });
    }
    Ok(r.roots)
}
