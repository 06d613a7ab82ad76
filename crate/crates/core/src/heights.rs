//! Local and global canonical heights of a single polynomial.
//!
//! The archimedean height is the escape rate `lim log⁺|f^n(x)| / d^n`.
//! Once an iterate reaches the trap radius
//! `R = max(1, 2·Σ_{i<d}|a_i/a_d|, (4/|a_d|)^{1/(d-1)})` every later iterate
//! at least doubles in size and `|f(z)/(a_d z^d) - 1| ≤ ε(|z|) ≤ 1/2`, so the
//! remainder of the limit is bounded by a geometric series in `ε`.
//!
//! Finite places are handled in p-adic arithmetic with tracked precision;
//! the result is an exact rational multiple of `log p`.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::ParamFamily;
use crate::padic::{valuation, PAdicField, Qp};
use crate::places::{log_escape_radius, relevant_primes};
use crate::poly::{int, rational_to_f64, CPoly, RatPoly, Rational};

pub const DEFAULT_ITER_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightOptions {
    pub iter_cap: usize,
}

impl Default for HeightOptions {
    fn default() -> Self {
        HeightOptions { iter_cap: DEFAULT_ITER_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    /// The orbit entered the trap region; the value is certified.
    Escaped,
    /// The floating-point orbit closed up into an exact cycle; the value is 0
    /// and the bound certifies the height is at most `tol`.
    Periodic,
    /// The orbit stayed small long enough to certify a height of at most
    /// `tol`; the value is 0.
    Trapped,
    /// No certificate within the iteration cap; the value is 0 and the bound
    /// is the best upper bound found.
    Inconclusive,
}

/// A height or Green's-function value in natural-log units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub error_bound: f64,
    pub escaped: bool,
    pub iterations_used: usize,
    #[serde(skip)]
    pub status: OrbitStatus,
}

impl GreenValue {
    pub fn is_inconclusive(&self) -> bool {
        self.status == OrbitStatus::Inconclusive
    }

    /// Upper bound on the true value.
    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    /// Divides value and bound by a positive factor.
    pub fn scaled(self, factor: f64) -> GreenValue {
        GreenValue { value: self.value / factor, error_bound: self.error_bound / factor, ..self }
    }
}

/// Precomputed constants for the archimedean escape test of one polynomial.
#[derive(Debug, Clone)]
pub struct EscapeData {
    pub d: usize,
    pub lead_abs: f64,
    pub trap_radius: f64,
    /// `|a_i|`, used to bound rounding error along the orbit.
    pub coeff_abs: Vec<f64>,
}

impl EscapeData {
    pub fn new(f: &CPoly) -> Self {
        let d = f.degree_or_zero();
        let lead_abs = f.lead().norm();
        let s: f64 = f.coeffs()[..d].iter().map(|a| a.norm()).sum::<f64>() / lead_abs;
        let trap_radius = 1f64.max(2.0 * s).max((4.0 / lead_abs).powf(1.0 / (d - 1) as f64));
        let coeff_abs = f.coeffs().iter().map(|a| a.norm()).collect();
        EscapeData { d, lead_abs, trap_radius, coeff_abs }
    }

    pub fn lead_term(&self) -> f64 {
        self.lead_abs.ln() / (self.d - 1) as f64
    }

    /// Upper bound on `ĥ(w) / dn` over `|w| ≤ r`. `G` is subharmonic, so the
    /// maximum over the disc of radius `ρ = max(r, R)` sits on its boundary,
    /// where `ĥ(w) ≤ log|w| + log|a_d|/(d−1) + (8/3) ε(ρ)/d`.
    fn upper_bound(&self, f: &CPoly, r: f64, dn: f64) -> f64 {
        let rho = r.max(self.trap_radius);
        let d = self.d as f64;
        let u = (rho.ln() + self.lead_term() + (8.0 / 3.0) * f.tail_ratio(rho) / d) / dn;
        u.max(0.0) * (1.0 + 8.0 * f64::EPSILON)
    }

    /// Bound on `|f(w) − fl(f(z))|` over `|w − z| ≤ e`: the spread
    /// `Σ |a_i| ((|z|+e)^i − |z|^i)`, summed without cancellation, plus the
    /// rounding of a Horner evaluation.
    fn propagate(&self, az: f64, e: f64) -> f64 {
        let u = az + e;
        let mut upow = 1.0;
        let mut s = 0.0;
        let mut spread = 0.0;
        let mut zpow = 1.0;
        let mut size = self.coeff_abs[0];
        for a in &self.coeff_abs[1..] {
            // s_i = Σ_{k<i} u^k |z|^{i-1-k}
            s = upow + az * s;
            upow *= u;
            zpow *= az;
            spread += a * s;
            size += a * zpow;
        }
        (e * spread + 4.0 * self.d as f64 * f64::EPSILON * size) * (1.0 + 8.0 * f64::EPSILON)
    }
}

fn validate(f: &CPoly, tol: f64) -> Result<()> {
    if f.degree_or_zero() < 2 {
        return Err(Error::DegreeTooSmall(f.degree_or_zero()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Archimedean local canonical height `ĥ_{f,∞}(x)`.
pub fn local_height_arch(f: &CPoly, x: Complex64, tol: f64) -> Result<GreenValue> {
    local_height_arch_with(f, x, tol, HeightOptions::default())
}

pub fn local_height_arch_with(f: &CPoly, x: Complex64, tol: f64, opts: HeightOptions) -> Result<GreenValue> {
    validate(f, tol)?;
    Ok(escape_rate(f, &EscapeData::new(f), x, tol, opts))
}

/// Escape-rate kernel shared by heights, Green's functions and renders.
///
/// Alongside the floating-point orbit `z_n` it carries a radius `e_n` with
/// `|f^n(x) − z_n| ≤ e_n`, so the reported bound covers rounding as well as
/// the truncated tail.
pub fn escape_rate(f: &CPoly, data: &EscapeData, x: Complex64, tol: f64, opts: HeightOptions) -> GreenValue {
    escape_rate_near(f, data, x, 0.0, tol, opts)
}

/// As [`escape_rate`] for a starting point known only to `|x_true − x| ≤ e0`.
pub fn escape_rate_near(f: &CPoly, data: &EscapeData, x: Complex64, e0: f64, tol: f64, opts: HeightOptions) -> GreenValue {
    let trap = data.trap_radius;
    let d = data.d as f64;
    // Numerator of the height bound for |w| ≤ 2R, using ε(R) ≤ 1/2.
    let inner = (2.0 * trap).ln() + data.lead_term().max(0.0) + 4.0 / 3.0;
    let mut best = data.upper_bound(f, x.norm() + e0, 1.0);
    let mut z = x;
    let mut e = e0;
    let mut dn = 1.0;
    let mut cycled = false;
    // Brent cycle detection on exact bit patterns.
    let mut tortoise = z;
    let mut power = 1usize;
    let mut lam = 0usize;
    let mut n = 0;
    loop {
        let az = z.norm();
        if az >= trap {
            return finish_escape(f, data, z, e, n, tol, best);
        }
        let reach = az + e;
        let numerator = if reach <= 2.0 * trap { inner } else { reach.ln() + data.lead_term().max(0.0) + 4.0 / 3.0 };
        if numerator <= tol * dn || n.is_power_of_two() {
            let u = data.upper_bound(f, reach, dn);
            best = best.min(u);
            if u <= tol {
                let status = if cycled { OrbitStatus::Periodic } else { OrbitStatus::Trapped };
                return GreenValue { value: 0.0, error_bound: u, escaped: false, iterations_used: n, status };
            }
        }
        if !cycled && n > 0 && z == tortoise {
            cycled = true;
        }
        if n == opts.iter_cap || !e.is_finite() {
            break;
        }
        lam += 1;
        if lam == power {
            tortoise = z;
            power *= 2;
            lam = 0;
        }
        e = data.propagate(az, e);
        z = f.eval(z);
        dn *= d;
        n += 1;
    }
    GreenValue { value: 0.0, error_bound: best, escaped: false, iterations_used: n, status: OrbitStatus::Inconclusive }
}

fn finish_escape(f: &CPoly, data: &EscapeData, mut z: Complex64, mut e: f64, mut n: usize, tol: f64, best: f64) -> GreenValue {
    let d = data.d as f64;
    let lead_term = data.lead_term();
    let max_log2 = 900.0;
    loop {
        let az = z.norm();
        let next_log2 = d * az.log2() + data.lead_abs.log2().max(0.0) + 2.0;
        let overflow = next_log2 > max_log2;
        // The true iterate lies in |w − z| ≤ e. Certify only once that disc
        // sits outside the trap radius and is small relative to |z|.
        if az - e >= data.trap_radius && e <= 0.5 * az {
            let eps = f.tail_ratio(az - e);
            let tail = (8.0 / 3.0) * eps / d.powi(n as i32 + 1);
            if tail <= 0.5 * tol || overflow {
                let dn = d.powi(n as i32);
                let value = ((az.ln() + lead_term) / dn).max(0.0);
                let log_err = -(-e / az).ln_1p() / dn;
                let rounding = 64.0 * f64::EPSILON * (1.0 + value);
                return GreenValue {
                    value,
                    error_bound: tail + log_err + rounding,
                    escaped: true,
                    iterations_used: n,
                    status: OrbitStatus::Escaped,
                };
            }
        } else if e > 0.5 * az || overflow {
            // Rounding has swamped the orbit; only the bound survives.
            let upper = data.upper_bound(f, az + e, d.powi(n as i32));
            return GreenValue {
                value: 0.0,
                error_bound: upper.min(best),
                escaped: false,
                iterations_used: n,
                status: OrbitStatus::Inconclusive,
            };
        }
        e = data.propagate(az, e);
        z = f.eval(z);
        n += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundedCertificate {
    /// The rational orbit repeated exactly.
    Preperiodic,
    /// The orbit entered a ball `|x|_p ≤ p^radius_exp` mapped into itself.
    InvariantBall { radius_exp: i64 },
    /// The p-adic enclosure of the orbit became periodic while staying
    /// within the escape radius.
    EnclosureCycle,
    /// The ball `|y − x|_p ≤ p^-start_exp` was carried by `f` into a ball of
    /// its own forward orbit after `steps` steps.
    BallOrbit { start_exp: i64, steps: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NonArchStatus {
    /// `|f^step(x)|_p > r_p`; the closed form was applied there.
    Escaped { step: usize },
    Bounded { certificate: BoundedCertificate },
}

/// `ĥ_{f,p}(x) = coefficient · log p`, exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonArchHeight {
    pub p: u64,
    #[serde(serialize_with = "ser_rational")]
    pub coefficient: Rational,
    pub status: NonArchStatus,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl NonArchHeight {
    pub fn value(&self) -> f64 {
        rational_to_f64(&self.coefficient) * (self.p as f64).ln()
    }
}

const PADIC_START_PREC: i64 = 32;
const PADIC_MAX_PREC: i64 = 4096;
const PADIC_STEP_CAP: usize = 100_000;
const EXACT_BITS_CAP: u64 = 4096;

/// Local canonical height at the prime `p` of a rational point under a
/// polynomial with rational coefficients.
pub fn local_height_nonarch(f: &RatPoly, x: &Rational, p: u64) -> Result<NonArchHeight> {
    let d = f.degree().finite().filter(|&d| d >= 2).ok_or(Error::DegreeTooSmall(f.degree_or_zero()))?;
    let bp = BigInt::from(p);
    let vd = valuation(&f.lead(), &bp).expect("nonzero leading coefficient");
    let log_r = log_escape_radius(f, p);
    let lead_term = Rational::new(BigInt::from(vd), BigInt::from(d as i64 - 1));
    let escaped = |v: i64, step: usize| {
        // ĥ(x) = ĥ(x_step)/d^step and ĥ(y) = log|y|_p + log|a_d|_p/(d-1) beyond r_p.
        let dn = num_traits::pow(BigInt::from(d as u64), step);
        let coefficient = (int(-v) - &lead_term) / Rational::from_integer(dn);
        NonArchHeight { p, coefficient, status: NonArchStatus::Escaped { step } }
    };
    let bounded = |certificate| NonArchHeight {
        p,
        coefficient: Rational::zero(),
        status: NonArchStatus::Bounded { certificate },
    };

    if let Some(h) = exact_orbit_probe(f, x, &bp, &log_r, &escaped) {
        return Ok(h.unwrap_or_else(|| bounded(BoundedCertificate::Preperiodic)));
    }

    if let Some(h) = ball_orbit(f, x, &bp, &log_r, &escaped) {
        return Ok(h.unwrap_or_else(|(start_exp, steps)| bounded(BoundedCertificate::BallOrbit { start_exp, steps })));
    }

    let field = PAdicField::new(p);
    let coeff_vals: Vec<Option<i64>> = f.coeffs().iter().map(|a| valuation(a, &bp)).collect();
    let mut prec = PADIC_START_PREC;
    // v(x) < -log_r  <=>  |x|_p > r_p
    let escapes = |v: i64| int(v) < -&log_r;
    while prec <= PADIC_MAX_PREC {
        let coeffs: Vec<Qp> = f.coeffs().iter().map(|a| field.from_rational(a, prec)).collect();
        let mut z = field.from_rational(x, prec);
        let mut seen: HashSet<Qp> = HashSet::new();
        let mut undecided = false;
        for step in 0..PADIC_STEP_CAP {
            match &z {
                Qp::Val { v, .. } if escapes(*v) => return Ok(escaped(*v, step)),
                Qp::Small { prec: pz } if escapes(*pz) => {
                    undecided = true;
                    break;
                }
                _ => {}
            }
            if let Some(j) = invariant_ball(&coeff_vals, z.val_lower()) {
                return Ok(bounded(BoundedCertificate::InvariantBall { radius_exp: j }));
            }
            if !seen.insert(z.clone()) {
                return Ok(bounded(BoundedCertificate::EnclosureCycle));
            }
            let mut acc = coeffs[d].clone();
            for a in coeffs[..d].iter().rev() {
                acc = field.add(&field.mul(&acc, &z), a);
            }
            z = acc;
        }
        if !undecided {
            break;
        }
        if prec == PADIC_MAX_PREC {
            break;
        }
        prec *= 2;
    }
    Err(Error::PAdicUndecided { precision: prec })
}

const BALL_STEP_CAP: usize = 512;

/// Representative of the ball `|y − q|_p ≤ p^-j` with small numerator and a
/// pure power of `p` as denominator.
fn ball_center(q: &Rational, p: &BigInt, j: i64) -> Rational {
    let Some(v) = valuation(q, p) else { return Rational::zero() };
    if v >= j {
        return Rational::zero();
    }
    let field = PAdicField::new(p.to_u64().expect("small prime"));
    match field.from_rational(q, j) {
        Qp::Val { v, u, .. } => {
            let pv = Rational::from_integer(num_traits::pow(p.clone(), v.unsigned_abs() as usize));
            let u = Rational::from_integer(u);
            if v >= 0 { u * pv } else { u / pv }
        }
        Qp::Small { .. } => Rational::zero(),
    }
}

/// Follows the image balls `f(D(c, p^-j)) ⊆ D(f(c), p^-j')` with
/// `j' = min_{i≥1} v(b_i) + i·j`, `b_i` the Taylor coefficients of `f` at
/// `c`. Radii never drop below the starting radius, so only finitely many
/// balls can occur and each run ends in a repeat or an ambiguous ball.
/// Returns `Ok(h)` when every ball point escapes at the same step,
/// `Err((start_exp, steps))` when a ball lands inside an earlier ball of its
/// own orbit, and `None` when no starting radius decides.
fn ball_orbit(
    f: &RatPoly,
    x: &Rational,
    p: &BigInt,
    log_r: &Rational,
    escaped: &dyn Fn(i64, usize) -> NonArchHeight,
) -> Option<std::result::Result<NonArchHeight, (i64, usize)>> {
    let low = (-log_r).ceil().to_integer().to_i64().unwrap_or(0);
    let d = f.degree_or_zero();
    let base = low.max(valuation(x, p).unwrap_or(low));
    let pu = p.to_u64().expect("small prime");
    let mut starts: Vec<i64> = [0i64, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32].iter().map(|k| base + k).collect();
    starts.insert(0, low);
    starts.dedup();
    'start: for j0 in starts {
        let mut balls: Vec<(Rational, i64)> = vec![(ball_center(x, p, j0), j0)];
        for step in 0..BALL_STEP_CAP {
            let (c, j) = balls.last().unwrap().clone();
            match valuation(&c, p) {
                Some(v) if v < j => {
                    if int(v) < -log_r {
                        return Some(Ok(escaped(v, step)));
                    }
                }
                _ if int(j) < -log_r => continue 'start,
                _ => {}
            }
            if balls[..step].iter().any(|(ci, ji)| j >= *ji && valuation(&(&c - ci), p).is_none_or(|w| w >= *ji)) {
                return Some(Err((j0, step)));
            }
            // f(c + p^j t) − f(c) over t ∈ Z_p.
            let taylor = f.compose(&RatPoly::new(vec![c.clone(), Rational::one()]));
            let mut shifted = vec![Rational::zero()];
            shifted.extend((1..=d).map(|i| taylor.coeff(i) * p_pow(p, i as i64 * j)));
            let j_next = min_valuation_on_zp(&RatPoly::new(shifted), p, pu, 16)
                .expect("nonconstant polynomial")
                .min(j0);
            balls.push((ball_center(&taylor.coeff(0), p, j_next), j_next));
        }
    }
    None
}

fn p_pow(p: &BigInt, e: i64) -> Rational {
    let m = Rational::from_integer(num_traits::pow(p.clone(), e.unsigned_abs() as usize));
    if e >= 0 { m } else { m.recip() }
}

/// `min_{t ∈ Z_p} v(h(t))`, or a lower bound for it once `depth` runs out.
/// The content is exact unless the reduction vanishes on all of `F_p`, in
/// which case each residue class is examined separately.
fn min_valuation_on_zp(h: &RatPoly, p: &BigInt, pu: u64, depth: u32) -> Option<i64> {
    let c0 = h.coeffs().iter().filter_map(|a| valuation(a, p)).min()?;
    let g = h.scale(&p_pow(p, -c0));
    if (g.degree_or_zero() as u64) < pu || depth == 0 {
        return Some(c0);
    }
    let residues: Vec<Rational> = (0..pu).map(|a| int(a as i64)).collect();
    if residues.iter().any(|a| valuation(&g.eval(a), p) == Some(0)) {
        return Some(c0);
    }
    let step = p_pow(p, 1);
    residues
        .iter()
        .filter_map(|a| min_valuation_on_zp(&g.compose(&RatPoly::new(vec![a.clone(), step.clone()])), p, pu, depth - 1))
        .min()
        .map(|m| c0 + m)
}

/// Exact rational iteration while the numbers stay small. Returns
/// `Some(Some(h))` on escape, `Some(None)` on exact repetition, `None` if
/// undecided before the size cap.
fn exact_orbit_probe(
    f: &RatPoly,
    x: &Rational,
    p: &BigInt,
    log_r: &Rational,
    escaped: &dyn Fn(i64, usize) -> NonArchHeight,
) -> Option<Option<NonArchHeight>> {
    let mut seen: HashMap<Rational, usize> = HashMap::new();
    let mut z = x.clone();
    for step in 0.. {
        if let Some(v) = valuation(&z, p) {
            if int(v) < -log_r {
                return Some(Some(escaped(v, step)));
            }
        }
        if seen.insert(z.clone(), step).is_some() {
            return Some(None);
        }
        if z.numer().bits() + z.denom().bits() > EXACT_BITS_CAP {
            return None;
        }
        z = f.eval(&z);
    }
    unreachable!()
}

/// Smallest `j ≥ -v_lower` such that the ball `|x|_p ≤ p^j` is mapped into
/// itself, i.e. `v(a_i) ≥ (i-1)·j` for every nonzero coefficient.
fn invariant_ball(coeff_vals: &[Option<i64>], v_lower: i64) -> Option<i64> {
    let d = coeff_vals.len() - 1;
    // i = 1 needs a unit-or-better linear coefficient, i ≥ 2 caps j from
    // above and i = 0 bounds it from below.
    if coeff_vals[1].is_some_and(|v| v < 0) {
        return None;
    }
    let j_max = (2..=d)
        .filter_map(|i| coeff_vals[i].map(|v| v.div_euclid(i as i64 - 1)))
        .min()?;
    let j_lo = match coeff_vals[0] {
        Some(v0) => (-v_lower).max(-v0),
        None => (-v_lower).max(j_max.min(0)),
    };
    (j_lo <= j_max).then_some(j_lo)
}

/// Global canonical height as the sum of local heights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalHeight {
    pub total: f64,
    pub error_bound: f64,
    pub arch: GreenValue,
    pub finite: Vec<NonArchHeight>,
}

/// `ĥ_f(x)` for `f` over ℚ and rational `x`. Only primes returned by
/// [`relevant_primes`] can contribute; the orbit is integral elsewhere.
pub fn global_height_poly(f: &RatPoly, x: &Rational, tol: f64) -> Result<GlobalHeight> {
    let cf = f.to_cpoly();
    validate(&cf, tol)?;
    let arch = if is_preperiodic_exact(f, x) {
        GreenValue { value: 0.0, error_bound: 0.0, escaped: false, iterations_used: 0, status: OrbitStatus::Periodic }
    } else {
        let x0 = rational_to_f64(x);
        escape_rate_near(&cf, &EscapeData::new(&cf), Complex64::new(x0, 0.0), x0.abs() * f64::EPSILON, tol, HeightOptions::default())
    };
    let finite = relevant_primes(f, x)
        .into_iter()
        .map(|p| local_height_nonarch(f, x, p))
        .collect::<Result<Vec<_>>>()?;
    let total = arch.value + finite.iter().map(NonArchHeight::value).sum::<f64>();
    let error_bound = arch.error_bound + 4.0 * f64::EPSILON * total.abs();
    Ok(GlobalHeight { total, error_bound, arch, finite })
}

/// Exact orbit repetition while the iterates stay below the size cap.
fn is_preperiodic_exact(f: &RatPoly, x: &Rational) -> bool {
    let mut seen = HashSet::new();
    let mut z = x.clone();
    while z.numer().bits() + z.denom().bits() <= EXACT_BITS_CAP {
        if !seen.insert(z.clone()) {
            return true;
        }
        z = f.eval(&z);
    }
    false
}

/// `ĥ_{f_λ}(x)` for a family fiber at rational `λ`.
pub fn global_height(family: &ParamFamily, lambda: &Rational, x: &Rational, tol: f64) -> Result<GlobalHeight> {
    global_height_poly(&family.specialize(lambda), x, tol)
}

/// Standard logarithmic Weil height of a rational.
pub fn weil_height(x: &Rational) -> f64 {
    let n = x.numer().abs();
    let m = if n > *x.denom() { n } else { x.denom().clone() };
    let (mant, e) = crate::poly::big_mantissa(&m);
    mant.ln() + e as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalEquationReport {
    pub image: GreenValue,
    pub scaled: GreenValue,
    pub difference: f64,
    pub pass: bool,
}

/// Compares `ĥ(f(x))` with `d·ĥ(x)` from two independent runs.
pub fn check_functional_equation(f: &CPoly, x: Complex64, tol: f64) -> Result<FunctionalEquationReport> {
    let d = f.degree_or_zero() as f64;
    let image = local_height_arch(f, f.eval(x), tol)?;
    let base = local_height_arch(f, x, tol)?;
    let scaled = GreenValue { value: base.value * d, error_bound: base.error_bound * d, ..base };
    let difference = (image.value - scaled.value).abs();
    let pass = difference <= image.error_bound + scaled.error_bound;
    Ok(FunctionalEquationReport { image, scaled, difference, pass })
}

/// Exact p-adic valuation of `x` as an `i64`, for callers outside this module.
pub fn padic_valuation(x: &Rational, p: u64) -> Option<i64> {
    valuation(x, &BigInt::from(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Independent oracle: log|f^n(x)|/2^n in plain double precision for the
    /// largest n before overflow.
    fn naive_escape_rate(f: impl Fn(f64) -> f64, x: f64, d: f64) -> f64 {
        let mut z = x;
        let mut best = 0.0;
        for n in 0..40 {
            if !z.is_finite() || z.abs() > 1e150 {
                break;
            }
            best = z.abs().ln() / d.powi(n);
            z = f(z);
        }
        best
    }

    #[test]
    fn arch_examples() {
        let sq = CPoly::from_real(&[0.0, 0.0, 1.0]);
        let h = local_height_arch(&sq, c(2.0), 1e-12).unwrap();
        assert!((h.value - 2f64.ln()).abs() <= 1e-12 && h.escaped);

        let m1 = CPoly::from_real(&[-1.0, 0.0, 1.0]);
        let h = local_height_arch(&m1, c(0.0), 1e-12).unwrap();
        assert_eq!(h.value, 0.0);
        assert_eq!(h.status, OrbitStatus::Periodic);

        let p2 = CPoly::from_real(&[2.0, 0.0, 1.0]);
        let h = local_height_arch(&p2, c(2.0), 1e-12).unwrap();
        let oracle = naive_escape_rate(|z| z * z + 2.0, 2.0, 2.0);
        assert!((oracle - 0.909_5).abs() < 1e-4);
        assert!((h.value - oracle).abs() < 1e-12, "{} vs {}", h.value, oracle);
        assert!(h.error_bound <= 1e-12);
    }

    #[test]
    fn arch_rejects_bad_input() {
        let lin = CPoly::from_real(&[1.0, 1.0]);
        assert!(local_height_arch(&lin, c(0.0), 1e-8).is_err());
        let sq = CPoly::from_real(&[0.0, 0.0, 1.0]);
        assert!(local_height_arch(&sq, c(0.0), 0.0).is_err());
    }

    #[test]
    fn inconclusive_is_flagged() {
        // z -> z^2 on the unit circle at an irrational angle never cycles exactly
        // in floating point within a short cap.
        let sq = CPoly::from_real(&[0.0, 0.0, 1.0]);
        let z = Complex64::from_polar(1.0, 1.0);
        let h = local_height_arch_with(&sq, z, 1e-8, HeightOptions { iter_cap: 10 }).unwrap();
        assert!(h.is_inconclusive());
        // Best bound after 8 squarings: the trap radius is 4 and ε vanishes,
        // so log 4 / 2^8.
        assert!((h.error_bound - 4f64.ln() / 256.0).abs() < 1e-12, "{}", h.error_bound);
        assert!(!h.escaped && h.value == 0.0);
        // Given enough steps the same orbit is certified below tol.
        let h = local_height_arch(&sq, z, 1e-8).unwrap();
        assert_eq!(h.status, OrbitStatus::Trapped);
        assert!(h.error_bound <= 1e-8);
    }

    #[test]
    fn rounding_near_a_repelling_fixed_point_is_not_certified_as_escape() {
        // 8/3 maps onto the repelling fixed point -8/3 of x^2 - 88/9; the
        // float orbit drifts away, so an escape must not be reported with a
        // tight bound.
        let f = CPoly::from_real(&[-88.0 / 9.0, 0.0, 1.0]);
        let h = local_height_arch(&f, c(8.0 / 3.0), 1e-10).unwrap();
        assert!(h.value - h.error_bound <= 0.0, "{h:?}");
        let exact = global_height_poly(&RatPoly::new(vec![rat(-88, 9), int(0), int(1)]), &rat(8, 3), 1e-10).unwrap();
        assert_eq!(exact.total, 0.0);
    }

    #[test]
    fn nonarch_examples() {
        let sq = RatPoly::from_ints(&[0, 0, 1]);
        let h = local_height_nonarch(&sq, &rat(1, 3), 3).unwrap();
        assert_eq!(h.coefficient, int(1));
        assert_eq!(h.status, NonArchStatus::Escaped { step: 0 });

        let f = RatPoly::from_ints(&[1, 0, 1]);
        let h = local_height_nonarch(&f, &int(7), 7).unwrap();
        assert_eq!(h.coefficient, int(0));

        let g = RatPoly::from_ints(&[4, 0, 1]);
        let h = local_height_nonarch(&g, &rat(1, 2), 2).unwrap();
        assert_eq!(h.coefficient, int(1));
    }

    #[test]
    fn nonarch_growing_integral_orbit_is_certified_bounded() {
        // x^2 + 1 from 7 grows archimedeanly but stays 7-integral.
        let f = RatPoly::from_ints(&[1, 0, 1]);
        let h = local_height_nonarch(&f, &int(7), 7).unwrap();
        assert!(matches!(h.status, NonArchStatus::Bounded { .. }));
    }

    #[test]
    fn nonarch_bad_reduction() {
        // f = (x^2 - x)/2 at p = 2 has r_2 = 1, so x = 1/2 escapes at once:
        // ĥ(1/2) = log 2 + log 2 = 2 log 2, and ĥ(f(1/2)) = ĥ(-1/8) = 4 log 2.
        let f = RatPoly::new(vec![int(0), rat(-1, 2), rat(1, 2)]);
        let h = local_height_nonarch(&f, &rat(1, 2), 2).unwrap();
        assert_eq!(h.coefficient, int(2));
        let h1 = local_height_nonarch(&f, &rat(-1, 8), 2).unwrap();
        assert_eq!(h1.coefficient, int(4));
        // The fixed point 3 of f stays put.
        let h = local_height_nonarch(&f, &int(3), 2).unwrap();
        assert_eq!(h.coefficient, int(0));
    }

    #[test]
    fn nonarch_repelling_orbit_is_certified_by_balls() {
        // With y = 2x the map becomes 5/6 y^2 - y - 3/2, which sends odd y to
        // odd y. So 1/2 + Z_2 is invariant while f expands by 2 on it.
        let f = RatPoly::new(vec![rat(-3, 4), int(-1), rat(5, 3)]);
        for x in [rat(-5, 2), rat(9, 2), rat(1, 6)] {
            let h = local_height_nonarch(&f, &x, 2).unwrap();
            assert_eq!(h.coefficient, int(0), "x = {x}");
            assert!(matches!(h.status, NonArchStatus::Bounded { .. }));
        }
        // Even y escapes, and the functional equation holds exactly.
        let x = int(1);
        let h = local_height_nonarch(&f, &x, 2).unwrap();
        let h1 = local_height_nonarch(&f, &f.eval(&x), 2).unwrap();
        assert!(h.coefficient > int(0));
        assert_eq!(h1.coefficient, &h.coefficient * int(2));
    }

    #[test]
    fn global_examples() {
        let fam = ParamFamily::parse("x^2 + l").unwrap();
        let h = global_height(&fam, &int(0), &int(1), 1e-10).unwrap();
        assert_eq!(h.total, 0.0);
        let h = global_height(&fam, &int(0), &int(2), 1e-10).unwrap();
        assert!((h.total - 2f64.ln()).abs() < 1e-10);
        let h = global_height(&fam, &int(2), &int(2), 1e-10).unwrap();
        assert!((h.total - 0.909_569_610_122_235_6).abs() < 1e-9);
        assert!(h.finite.iter().all(|f| f.coefficient.is_zero()));
    }

    #[test]
    fn functional_equation_examples() {
        let p2 = CPoly::from_real(&[2.0, 0.0, 1.0]);
        assert!(check_functional_equation(&p2, c(2.0), 1e-10).unwrap().pass);
        let sq = CPoly::from_real(&[0.0, 0.0, 1.0]);
        let r = check_functional_equation(&sq, c(3.0), 1e-12).unwrap();
        assert!(r.pass && (r.image.value - 9f64.ln()).abs() < 1e-12);
        let m1 = CPoly::from_real(&[-1.0, 0.0, 1.0]);
        let r = check_functional_equation(&m1, c(0.0), 1e-12).unwrap();
        assert!(r.pass && r.image.value == 0.0 && r.scaled.value == 0.0);
    }

    #[test]
    fn weil_height_of_rationals() {
        assert!((weil_height(&rat(-7, 3)) - 7f64.ln()).abs() < 1e-15);
        assert_eq!(weil_height(&int(1)), 0.0);
    }
}
