//! Generalized Mandelbrot sets `M_c = {λ : c(λ) has bounded f_λ-orbit}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{marked_hypothesis, ParamFamily};
use crate::heights::{escape_rate_near, EscapeData, GreenValue, HeightOptions, OrbitStatus};
use crate::poly::{rational_to_f64, LamPoly};

/// Parameter-space Green's function `G_c(λ) = ĥ_{f_λ,∞}(c(λ)) / m`.
pub fn param_green(family: &ParamFamily, c: &LamPoly, lambda: Complex64, tol: f64) -> Result<GreenValue> {
    param_green_with(family, c, lambda, tol, HeightOptions::default())
}

pub fn param_green_with(
    family: &ParamFamily,
    c: &LamPoly,
    lambda: Complex64,
    tol: f64,
    opts: HeightOptions,
) -> Result<GreenValue> {
    let (m, _) = marked_hypothesis(family, c)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(green_unchecked(family, c, m, lambda, tol, opts))
}

fn green_unchecked(family: &ParamFamily, c: &LamPoly, m: usize, lambda: Complex64, tol: f64, opts: HeightOptions) -> GreenValue {
    let f = family.specialize_complex(lambda);
    let data = EscapeData::new(&f);
    let mf = m as f64;
    let size: f64 = c.coeffs().iter().rev().fold(0.0, |acc, q| acc * lambda.norm() + rational_to_f64(q).abs());
    let e0 = 2.0 * c.coeffs().len() as f64 * f64::EPSILON * size;
    escape_rate_near(&f, &data, c.eval_complex(lambda), e0, tol * mf, opts).scaled(mf)
}

/// Smallest radius (up to bisection accuracy, rounded outward) beyond which
/// every `λ` is certified outside `M_c` without iterating.
///
/// With `s = |λ|`, `|c(λ)| ≥ L(s) = |q_m| s^m − Σ_{j<m} |q_j| s^j` and
/// `|c_i(λ)| ≤ U_i(s) = Σ_j |c_{ij}| s^j`. If `L(s) > 3 max_i U_i(s)^{1/(d-i)}`
/// and `L(s) > 2^{1/(d-1)}`, the orbit of `c(λ)` grows monotonically to
/// infinity. Both sides divided by `s^m` are monotone, so the condition
/// persists for all larger `s`.
pub fn outer_radius(family: &ParamFamily, c: &LamPoly) -> Result<f64> {
    let (m, _) = marked_hypothesis(family, c)?;
    let d = family.d();
    let cq: Vec<f64> = c.coeffs().iter().map(|q| rational_to_f64(q).abs()).collect();
    let ci: Vec<Vec<f64>> = family
        .coeffs()
        .iter()
        .map(|p| p.coeffs().iter().map(|q| rational_to_f64(q).abs()).collect())
        .collect();
    let poly_abs = |cs: &[f64], s: f64| cs.iter().rev().fold(0.0, |acc, c| acc * s + c);
    let ok = |s: f64| {
        let lower = cq[m] * s.powi(m as i32) - poly_abs(&cq[..m], s);
        let rhs = ci
            .iter()
            .enumerate()
            .map(|(i, cs)| 3.0 * poly_abs(cs, s).powf(1.0 / (d - i) as f64))
            .fold(2f64.powf(1.0 / (d - 1) as f64), f64::max);
        lower > rhs * (1.0 + 1e-12)
    };
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::CertificationFailed("no finite outer radius found".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Membership {
    /// The orbit of `c(λ)` closed up into a cycle.
    Inside { green: GreenValue },
    /// Escape was witnessed; `via_outer_bound` marks the radius shortcut.
    Outside { green: GreenValue, via_outer_bound: bool },
    Inconclusive { green: GreenValue },
}

impl Membership {
    pub fn green(&self) -> &GreenValue {
        match self {
            Membership::Inside { green } | Membership::Outside { green, .. } | Membership::Inconclusive { green } => green,
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Membership::Outside { .. })
    }
}

pub fn membership(family: &ParamFamily, c: &LamPoly, lambda: Complex64, tol: f64) -> Result<Membership> {
    let green = param_green(family, c, lambda, tol)?;
    if lambda.norm() >= outer_radius(family, c)? {
        return Ok(Membership::Outside { green, via_outer_bound: true });
    }
    Ok(match green.status {
        OrbitStatus::Escaped => Membership::Outside { green, via_outer_bound: false },
        OrbitStatus::Periodic => Membership::Inside { green },
        OrbitStatus::Trapped | OrbitStatus::Inconclusive => Membership::Inconclusive { green },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub const CLASSICAL: Window = Window { x_min: -2.5, x_max: 1.0, y_min: -1.25, y_max: 1.25 };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("empty window [{x_min},{x_max}]x[{y_min},{y_max}]")));
        }
        Ok(Window { x_min, x_max, y_min, y_max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub tol: f64,
    /// Row-major, row 0 at `y_max`.
    pub cells: Vec<GreenValue>,
}

impl ParamGrid {
    /// Center of cell `(i, j)`, column `i`, row `j`.
    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        cell_center(&Window { x_min: self.x_min, x_max: self.x_max, y_min: self.y_min, y_max: self.y_max }, self.nx, self.ny, i, j)
    }

    pub fn cell(&self, i: usize, j: usize) -> &GreenValue {
        &self.cells[j * self.nx + i]
    }
}

fn cell_center(w: &Window, nx: usize, ny: usize, i: usize, j: usize) -> Complex64 {
    let dx = (w.x_max - w.x_min) / nx as f64;
    let dy = (w.y_max - w.y_min) / ny as f64;
    Complex64::new(w.x_min + (i as f64 + 0.5) * dx, w.y_max - (j as f64 + 0.5) * dy)
}

/// What to render: a window, a pixel count and the per-cell evaluation
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenderSpec {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub tol: f64,
    pub opts: HeightOptions,
}

/// Evaluates `G_c` at every cell center on the current rayon pool.
pub fn render_grid(family: &ParamFamily, c: &LamPoly, spec: &RenderSpec) -> Result<ParamGrid> {
    let RenderSpec { window, nx, ny, tol, opts } = *spec;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput("grid needs nx, ny ≥ 1".into()));
    }
    let (m, _) = marked_hypothesis(family, c)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let cells: Vec<GreenValue> = (0..nx * ny)
        .into_par_iter()
        .map(|k| green_unchecked(family, c, m, cell_center(&window, nx, ny, k % nx, k / nx), tol, opts))
        .collect();
    Ok(ParamGrid { x_min: window.x_min, x_max: window.x_max, y_min: window.y_min, y_max: window.y_max, nx, ny, tol, cells })
}

/// Runs [`render_grid`] on a dedicated pool of `threads` workers.
pub fn render_grid_threads(family: &ParamFamily, c: &LamPoly, spec: &RenderSpec, threads: usize) -> Result<ParamGrid> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| render_grid(family, c, spec))
}

fn flag(g: &GreenValue) -> &'static str {
    match g.status {
        OrbitStatus::Escaped => "escaped",
        OrbitStatus::Periodic => "bounded",
        OrbitStatus::Trapped => "trapped",
        OrbitStatus::Inconclusive => "inconclusive",
    }
}

/// `x,y,G,error,flag` with one row per cell.
pub fn grid_csv(grid: &ParamGrid) -> String {
    let mut out = String::from("x,y,G,error,flag\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.center(i, j);
            let g = grid.cell(i, j);
            out.push_str(&format!("{},{},{},{},{}\n", z.re, z.im, g.value, g.error_bound, flag(g)));
        }
    }
    out
}

/// Largest cell value; the default grey-scale cap.
pub fn default_g_cap(grid: &ParamGrid) -> f64 {
    let m = grid.cells.iter().map(|g| g.value).fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

pub fn pixel(g: f64, g_cap: f64) -> u8 {
    (255.0 * (g / g_cap).min(1.0).max(0.0)).round() as u8
}

/// Binary 8-bit PGM, pixel `round(255·min(1, G/G_cap))`.
pub fn grid_pgm(grid: &ParamGrid, g_cap: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    out.extend(grid.cells.iter().map(|g| pixel(g.value, g_cap)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMetadata {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub tol: f64,
    pub g_cap: f64,
    pub pixel_mapping: &'static str,
    pub escaped: usize,
    pub bounded: usize,
    pub trapped: usize,
    pub inconclusive: usize,
    pub inconclusive_rendering: &'static str,
}

pub fn grid_metadata(grid: &ParamGrid, g_cap: f64) -> GridMetadata {
    let count = |s: OrbitStatus| grid.cells.iter().filter(|g| g.status == s).count();
    GridMetadata {
        window: Window { x_min: grid.x_min, x_max: grid.x_max, y_min: grid.y_min, y_max: grid.y_max },
        nx: grid.nx,
        ny: grid.ny,
        tol: grid.tol,
        g_cap,
        pixel_mapping: "round(255*min(1,G/g_cap))",
        escaped: count(OrbitStatus::Escaped),
        bounded: count(OrbitStatus::Periodic),
        trapped: count(OrbitStatus::Trapped),
        inconclusive: count(OrbitStatus::Inconclusive),
        inconclusive_rendering: "trapped and inconclusive cells render as inside (G = 0), flagged in CSV",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityFit {
    pub gamma_est: f64,
    #[serde(rename = "V_est")]
    pub v_est: f64,
    pub closed_form_gamma: f64,
    pub residual: f64,
    pub sample_radii: Vec<f64>,
    /// Mean of `G_c(λ) − log|λ|` on each circle.
    pub circle_means: Vec<f64>,
    pub pass: bool,
}

/// Circle means of `G_c(λ) − log|λ|` on large circles. The function is
/// harmonic outside `M_c` including at infinity, where it equals
/// `log|q_m|/m`, so each mean estimates `V` directly.
pub fn capacity_estimate(
    family: &ParamFamily,
    c: &LamPoly,
    radii: &[f64],
    samples_per_circle: usize,
    tol: f64,
) -> Result<CapacityFit> {
    let (m, q) = marked_hypothesis(family, c)?;
    if radii.is_empty() || samples_per_circle == 0 {
        return Err(Error::InvalidInput("need at least one radius and one sample".into()));
    }
    let r_out = outer_radius(family, c)?;
    if let Some(r) = radii.iter().find(|&&r| !(r >= r_out)) {
        return Err(Error::OutsideCertifiedDomain(format!("radius {r} is below the certified outer radius {r_out}")));
    }
    let n = samples_per_circle;
    let mut circle_means = Vec::with_capacity(radii.len());
    let mut max_err: f64 = 0.0;
    for &r in radii {
        let vals: Vec<GreenValue> = (0..n)
            .into_par_iter()
            .map(|k| {
                let lambda = Complex64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64);
                green_unchecked(family, c, m, lambda, tol, HeightOptions::default())
            })
            .collect();
        let mean = vals.iter().map(|g| g.value - r.ln()).sum::<f64>() / n as f64;
        max_err = vals.iter().map(|g| g.error_bound).fold(max_err, f64::max);
        circle_means.push(mean);
    }
    let v_est = circle_means.iter().sum::<f64>() / circle_means.len() as f64;
    let spread = circle_means.iter().fold(0.0f64, |acc, v| acc.max((v - v_est).abs()));
    let residual = spread + max_err;
    let gamma_est = (-v_est).exp();
    let closed_form_gamma = (-rational_to_f64(&q).abs().ln() / m as f64).exp();
    let pass = (gamma_est - closed_form_gamma).abs() <= (10.0 * tol).max(residual);
    Ok(CapacityFit { gamma_est, v_est, closed_form_gamma, residual, sample_radii: radii.to_vec(), circle_means, pass })
}
