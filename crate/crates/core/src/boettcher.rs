//! Green's function, critical radius and Böttcher coordinate of a fiber.
//!
//! For a monic `f` of degree `d`, write `f(z) = z^d (1 + u(z))` with
//! `|u(z)| ≤ ε(|z|) = Σ_{i<d} |a_i| |z|^{i-d}`. On the disk complement
//! `|z| ≥ ρ` where `ε(ρ) ≤ 1/2` and `ρ^{d-1}(1 - ε(ρ)) ≥ 1`, the map sends the
//! region into itself and every factor `f(z_n)/z_n^d` lies in the disk of
//! radius 1/2 around 1. The product
//!
//! ```text
//! φ(z) = z · Π_{n≥0} (f(z_n) / z_n^d)^{1/d^{n+1}}
//! ```
//!
//! then converges with principal roots taken factor by factor, and the
//! truncation error after `N` factors is at most `2 ε(|z_N|) / (d^N (d-1))`
//! in the logarithm.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{marked_hypothesis, ParamFamily};
use crate::heights::{local_height_arch, GreenValue};
use crate::poly::{rational_to_f64, CPoly, LamPoly};
use crate::roots::{aberth, DEFAULT_MAX_ITER};

/// Green's function of the filled Julia set of `f`.
pub fn green_fiber(f: &CPoly, z: Complex64, tol: f64) -> Result<GreenValue> {
    local_height_arch(f, z, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalData {
    pub critical_points: Vec<Complex64>,
    /// `|f'(ζ)|` at each reported critical point.
    pub residuals: Vec<f64>,
    pub green: Vec<GreenValue>,
    #[serde(rename = "R_lambda")]
    pub r_lambda: f64,
    /// Bound on `|R_λ − r_lambda|` induced by the Green's-function bounds.
    pub error_bound: f64,
}

/// `R = max_{f'(ζ)=0} exp(G(ζ))`.
pub fn critical_radius(f: &CPoly, tol: f64) -> Result<CriticalData> {
    let d = f.degree_or_zero();
    if d < 2 {
        return Err(Error::DegreeTooSmall(d));
    }
    let df = f.derivative();
    let approx = aberth(&df, DEFAULT_MAX_ITER);
    if !approx.all_converged() {
        return Err(Error::RootsNotConverged { iterations: approx.iterations });
    }
    let critical_points = approx.roots;
    let residuals = critical_points.iter().map(|&z| df.eval(z).norm()).collect();
    let green = critical_points
        .iter()
        .map(|&z| green_fiber(f, z, tol))
        .collect::<Result<Vec<_>>>()?;
    let best = green
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .copied()
        .expect("degree ≥ 2 has a critical point");
    let r_lambda = best.value.exp().max(1.0);
    let error_bound = r_lambda * best.error_bound.exp_m1();
    Ok(CriticalData { critical_points, residuals, green, r_lambda, error_bound })
}

/// Smallest `ρ` with `ε(ρ) ≤ 1/2` and `ρ^{d-1}(1 - ε(ρ)) ≥ 1`, up to a
/// relative margin of `2^-40` on the safe side.
pub fn bottcher_threshold(f: &CPoly) -> f64 {
    let d = f.degree_or_zero() as i32;
    let ok = |r: f64| {
        let e = f.tail_ratio(r);
        e <= 0.5 && r.powi(d - 1) * (1.0 - e) >= 1.0
    };
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if ok(lo) && lo < 1.0 {
        // ε is decreasing and ρ^{d-1}(1-ε) is increasing, so shrink until failure.
        while lo > 1e-300 && ok(lo) {
            hi = lo;
            lo /= 2.0;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi * (1.0 + 2f64.powi(-40))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BottcherEval {
    pub value: Complex64,
    pub factors_used: usize,
    /// Bound on `|φ(z) − value|`.
    pub error_bound: f64,
    /// Bound on `|log|φ(z)| − log|value||`.
    pub log_error_bound: f64,
}

fn require_monic(f: &CPoly) -> Result<usize> {
    let d = f.degree_or_zero();
    if d < 2 {
        return Err(Error::DegreeTooSmall(d));
    }
    if f.lead() != Complex64::new(1.0, 0.0) {
        return Err(Error::InvalidInput("Böttcher coordinate requires a monic polynomial".into()));
    }
    Ok(d)
}

/// Böttcher coordinate `φ(z)` by the infinite product.
pub fn bottcher_product(f: &CPoly, z: Complex64, tol: f64) -> Result<BottcherEval> {
    let d = require_monic(f)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let rho = bottcher_threshold(f);
    if !(z.norm() > rho) {
        return Err(Error::OutsideCertifiedDomain(format!(
            "|z| = {} does not exceed the certified threshold {rho}",
            z.norm()
        )));
    }
    let df = d as f64;
    let mut zn = z;
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut weight = 1.0 / df;
    let mut n = 0usize;
    let target = 0.25 * tol / z.norm().max(1.0);
    loop {
        let az = zn.norm();
        // Remaining tail from factor n on.
        let tail = 2.0 * f.tail_ratio(az) * weight * df / (df - 1.0);
        if tail <= target || tail < 1e-20 || df * az.log2() > 1000.0 || n >= 10_000 {
            let rel_round = 16.0 * f64::EPSILON * (n as f64 + 2.0);
            let log_error = tail + rel_round;
            let value = z * log_sum.exp();
            return Ok(BottcherEval {
                value,
                factors_used: n,
                error_bound: value.norm() * log_error.exp_m1(),
                log_error_bound: log_error,
            });
        }
        let next = f.eval(zn);
        let factor = next / zn.powu(d as u32);
        log_sum += factor.ln() * weight;
        zn = next;
        weight /= df;
        n += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeGrid {
    /// Probe radii `10^t` for `t` in `[min_exp, max_exp]`.
    pub min_exp: f64,
    pub max_exp: f64,
    pub per_decade: usize,
    pub angles: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { min_exp: 0.0, max_exp: 6.0, per_decade: 4, angles: 8 }
    }
}

impl ProbeGrid {
    pub fn radii(&self) -> Vec<f64> {
        let steps = ((self.max_exp - self.min_exp) * self.per_decade as f64).round().max(0.0) as usize;
        (0..=steps)
            .map(|i| 10f64.powf(self.min_exp + i as f64 / self.per_decade.max(1) as f64))
            .collect()
    }

    pub fn points(&self, radius: f64) -> Vec<Complex64> {
        (0..self.angles.max(1))
            .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.5) / self.angles.max(1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdProbe {
    pub lambda: Complex64,
    pub c_abs: f64,
    pub r_lambda: f64,
    pub bottcher_threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Probe-grid estimate of the radius beyond which `c(λ)` lies in the
    /// Böttcher domain with margin 2. Not a proof.
    pub c0_estimate: f64,
    pub estimate_only: bool,
    pub alpha: f64,
    pub m: usize,
    pub m_r: usize,
    /// `m_i / (d - e_i)` for each λ-term of the family.
    pub exponents: Vec<f64>,
    pub probes: Vec<ThresholdProbe>,
}

/// Sweeps `|λ|` on a log grid and returns the smallest probed radius from
/// which every larger probe satisfies `|c(λ)| > 2 R_λ` and lies beyond the
/// product threshold.
pub fn analyticity_threshold(family: &ParamFamily, c: &LamPoly, grid: &ProbeGrid, tol: f64) -> Result<ThresholdReport> {
    let (m, _) = marked_hypothesis(family, c)?;
    let d = family.d() as f64;
    let exponents: Vec<f64> = family.terms().iter().map(|t| t.m as f64 / (d - t.e as f64)).collect();
    let alpha = exponents.iter().copied().fold(0.0, f64::max);
    let mut probes = Vec::new();
    let radii = grid.radii();
    let mut radius_ok = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut all = true;
        for lambda in grid.points(r) {
            let f = family.specialize_complex(lambda);
            let cz = c.eval_complex(lambda);
            let crit = critical_radius(&f, tol)?;
            let rho = bottcher_threshold(&f);
            let pass = !crit.green.iter().any(GreenValue::is_inconclusive)
                && cz.norm() > 2.0 * (crit.r_lambda + crit.error_bound)
                && cz.norm() > rho;
            all &= pass;
            probes.push(ThresholdProbe {
                lambda,
                c_abs: cz.norm(),
                r_lambda: crit.r_lambda,
                bottcher_threshold: rho,
                pass,
            });
        }
        radius_ok.push(all);
    }
    if !radius_ok.last().copied().unwrap_or(false) {
        let bad = probes.iter().rev().find(|p| !p.pass).map(|p| p.lambda).unwrap_or_default();
        return Err(Error::CertificationFailed(format!(
            "c(λ) is not in the Böttcher domain at λ = {bad} on the largest probe circle"
        )));
    }
    let first_good_suffix = radius_ok.iter().rposition(|ok| !ok).map_or(0, |i| i + 1);
    Ok(ThresholdReport {
        c0_estimate: radii[first_good_suffix],
        estimate_only: true,
        alpha,
        m,
        m_r: family.m_r(),
        exponents,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticSample {
    pub lambda: Complex64,
    pub phi: Complex64,
    pub leading: Complex64,
    pub deviation: f64,
    /// `deviation / |λ|^{m-1}`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub m: usize,
    pub q_m: f64,
    pub fitted_c: f64,
    pub samples: Vec<AsymptoticSample>,
    pub pass: bool,
}

/// Tests `φ_λ(c(λ)) = q_m λ^m + O(λ^{m-1})` on large samples. The fitted
/// constant is the largest scaled deviation; the check passes when the scaled
/// deviation at the largest sample does not exceed twice that at the smallest.
pub fn check_asymptotic(family: &ParamFamily, c: &LamPoly, samples: &[Complex64], tol: f64) -> Result<AsymptoticReport> {
    let (m, q) = marked_hypothesis(family, c)?;
    let qf = rational_to_f64(&q);
    let mut out = Vec::with_capacity(samples.len());
    for &lambda in samples {
        let f = family.specialize_complex(lambda);
        let cz = c.eval_complex(lambda);
        let phi = bottcher_product(&f, cz, tol)?.value;
        let leading = lambda.powu(m as u32) * qf;
        let deviation = (phi - leading).norm();
        let scaled = deviation / lambda.norm().powi(m as i32 - 1);
        out.push(AsymptoticSample { lambda, phi, leading, deviation, scaled });
    }
    out.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
    let fitted_c = out.iter().map(|s| s.scaled).fold(0.0, f64::max);
    let pass = match (out.first(), out.last()) {
        (Some(a), Some(b)) => {
            out.iter().all(|s| s.scaled.is_finite()) && b.scaled <= 2.0 * a.scaled + 1e-9 * fitted_c.max(1.0)
        }
        _ => false,
    };
    Ok(AsymptoticReport { m, q_m: qf, fitted_c, samples: out, pass })
}
