//! Preperiodic parameters: exact relations, their roots, and diagnostics
//! built on them (boundary clustering, equidistribution of potentials,
//! adelic heights and the shared-orbit experiment).

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{marked_hypothesis, param_orbit, ParamFamily, DEFAULT_DEGREE_CAP};
use crate::heights::{global_height_poly, local_height_arch, local_height_nonarch, GreenValue};
use crate::mandelbrot::{membership, param_green};
use crate::padic::valuation;
use crate::places::{good_places, prime_support};
use crate::poly::{rational_to_f64, LamPoly, RatPoly, Rational};
use crate::roots::{exact_abs_at, roots_exact, DEFAULT_MAX_ITER};

/// `g_{c,n} − g_{c,k}`, whose roots are the parameters with
/// `f_λ^n(c(λ)) = f_λ^k(c(λ))`.
pub fn prep_equation(family: &ParamFamily, c: &LamPoly, n: u32, k: u32) -> Result<LamPoly> {
    prep_equation_capped(family, c, n, k, DEFAULT_DEGREE_CAP)
}

pub fn prep_equation_capped(family: &ParamFamily, c: &LamPoly, n: u32, k: u32, cap: u128) -> Result<LamPoly> {
    if k >= n {
        return Err(Error::InvalidInput(format!("relation needs k < n, got n = {n}, k = {k}")));
    }
    marked_hypothesis(family, c)?;
    let orbit = param_orbit(family, c, n, cap)?;
    Ok(&orbit[n as usize] - &orbit[k as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepSolution {
    pub n: u32,
    pub k: u32,
    #[serde(rename = "lambda")]
    pub lambda_approx: Complex64,
    /// `|g_{c,n}(λ) − g_{c,k}(λ)|` evaluated exactly at `lambda_approx`.
    pub residual: f64,
    /// A root of the square-free part lies within this distance.
    pub error_radius: f64,
    pub multiplicity_hint: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationCount {
    pub n: u32,
    pub k: u32,
    pub degree: usize,
    /// Roots counted with multiplicity.
    pub roots_found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepRoots {
    pub solutions: Vec<PrepSolution>,
    pub relations: Vec<RelationCount>,
}

impl PrepRoots {
    pub fn lambdas(&self) -> Vec<Complex64> {
        self.solutions.iter().map(|s| s.lambda_approx).collect()
    }
}

fn merge_radius(a: f64, b: f64, z: Complex64) -> f64 {
    10.0 * a.max(b).max(4.0 * f64::EPSILON * z.norm().max(1.0))
}

/// Roots of every relation `(n, k)` with `0 ≤ k < n ≤ max_n`, merged across
/// relations. A root is attributed to the lexicographically smallest
/// `(n, k)` in which it appears.
pub fn prep_roots(family: &ParamFamily, c: &LamPoly, max_n: u32) -> Result<PrepRoots> {
    prep_roots_capped(family, c, max_n, DEFAULT_DEGREE_CAP)
}

pub fn prep_roots_capped(family: &ParamFamily, c: &LamPoly, max_n: u32, cap: u128) -> Result<PrepRoots> {
    marked_hypothesis(family, c)?;
    let orbit = param_orbit(family, c, max_n, cap)?;
    let pairs: Vec<(u32, u32)> = (1..=max_n).flat_map(|n| (0..n).map(move |k| (n, k))).collect();
    let per_pair: Vec<(RelationCount, Vec<PrepSolution>)> = pairs
        .par_iter()
        .map(|&(n, k)| {
            let p = &orbit[n as usize] - &orbit[k as usize];
            let roots = roots_exact(&p, DEFAULT_MAX_ITER);
            let sols: Vec<PrepSolution> = roots
                .iter()
                .map(|r| PrepSolution {
                    n,
                    k,
                    lambda_approx: r.z,
                    residual: exact_abs_at(&p, r.z),
                    error_radius: r.radius,
                    multiplicity_hint: r.multiplicity,
                    converged: r.converged,
                })
                .collect();
            let count = RelationCount {
                n,
                k,
                degree: p.degree_or_zero(),
                roots_found: roots.iter().map(|r| r.multiplicity).sum(),
            };
            (count, sols)
        })
        .collect();
    let mut solutions: Vec<PrepSolution> = Vec::new();
    let mut relations = Vec::with_capacity(per_pair.len());
    for (count, sols) in per_pair {
        relations.push(count);
        for s in sols {
            let dup = solutions.iter().any(|t| {
                (t.lambda_approx - s.lambda_approx).norm() <= merge_radius(t.error_radius, s.error_radius, s.lambda_approx)
            });
            if !dup {
                solutions.push(s);
            }
        }
    }
    Ok(PrepRoots { solutions, relations })
}

/// `n,k,re,im,residual` rows.
pub fn prep_csv(solutions: &[PrepSolution]) -> String {
    let mut out = String::from("n,k,re,im,residual\n");
    for s in solutions {
        out.push_str(&format!("{},{},{},{},{}\n", s.n, s.k, s.lambda_approx.re, s.lambda_approx.im, s.residual));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDistance {
    pub n: u32,
    pub new_roots: usize,
    /// Mean distance from a root first seen at level `n` to the roots of
    /// lower levels.
    pub mean_distance: f64,
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub green: Vec<f64>,
    pub max_g: f64,
    pub bound: f64,
    pub pass: bool,
    /// Counts of level distances by decade: `histogram[i]` covers
    /// `[10^-(i+1), 10^-i)`, the last bin everything smaller.
    pub histogram: Vec<usize>,
    pub levels: Vec<LevelDistance>,
}

pub const DEFAULT_CLUSTER_SLACK: f64 = 100.0;

/// Evaluates `G_c` at each solution. Preperiodic parameters lie in `M_c`, so
/// every value must stay below `slack · tol`.
pub fn boundary_clustering(
    family: &ParamFamily,
    c: &LamPoly,
    solutions: &[PrepSolution],
    tol: f64,
    slack: f64,
) -> Result<ClusterReport> {
    let green = solutions
        .par_iter()
        .map(|s| param_green(family, c, s.lambda_approx, tol).map(|g| g.upper()))
        .collect::<Result<Vec<f64>>>()?;
    let max_g = green.iter().copied().fold(0.0, f64::max);
    let bound = slack * tol;
    let mut histogram = vec![0usize; 17];
    let mut levels = Vec::new();
    let max_n = solutions.iter().map(|s| s.n).max().unwrap_or(0);
    for n in 2..=max_n {
        let lower: Vec<Complex64> = solutions.iter().filter(|s| s.n < n).map(|s| s.lambda_approx).collect();
        let dists: Vec<f64> = solutions
            .iter()
            .filter(|s| s.n == n)
            .map(|s| lower.iter().map(|z| (z - s.lambda_approx).norm()).fold(f64::INFINITY, f64::min))
            .filter(|d| d.is_finite())
            .collect();
        if dists.is_empty() {
            continue;
        }
        for &d in &dists {
            let bin = if d >= 1.0 { 0 } else { ((-d.log10()).floor() as usize).min(16) };
            histogram[bin] += 1;
        }
        levels.push(LevelDistance {
            n,
            new_roots: dists.len(),
            mean_distance: dists.iter().sum::<f64>() / dists.len() as f64,
            min_distance: dists.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    Ok(ClusterReport { green, max_g, bound, pass: max_g <= bound, histogram, levels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialLevel {
    pub n: u32,
    pub roots: usize,
    /// Mean of `log|w − λ|` over roots of relation `(n, n−1)`, with multiplicity.
    pub potential: f64,
    /// The same mean from `log|P(w)|` and the leading coefficient.
    pub exact_potential: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistReport {
    pub w: Complex64,
    pub green_w: GreenValue,
    /// `log|q_m| / m`.
    pub v: f64,
    pub limit_prediction: f64,
    pub potential_per_n: Vec<PotentialLevel>,
    pub strictly_decreasing: bool,
    pub pass: bool,
}

/// Logarithmic potential of the roots of `(n, n−1)` at an exterior point
/// `w`, against the limit `G_c(w) − log|q_m|/m`.
pub fn equidist_potential(family: &ParamFamily, c: &LamPoly, max_n: u32, w: Complex64, tol: f64) -> Result<EquidistReport> {
    let (m, q) = marked_hypothesis(family, c)?;
    if !membership(family, c, w, tol)?.is_outside() {
        return Err(Error::InvalidInput(format!("w = {w} is not certified outside M_c")));
    }
    let green_w = param_green(family, c, w, tol)?;
    let v = rational_to_f64(&q).abs().ln() / m as f64;
    let limit_prediction = green_w.value - v;
    let orbit = param_orbit(family, c, max_n, DEFAULT_DEGREE_CAP)?;
    let potential_per_n: Vec<PotentialLevel> = (1..=max_n)
        .into_par_iter()
        .map(|n| {
            let p = &orbit[n as usize] - &orbit[n as usize - 1];
            let roots = roots_exact(&p, DEFAULT_MAX_ITER);
            let total: usize = roots.iter().map(|r| r.multiplicity).sum();
            let potential =
                roots.iter().map(|r| r.multiplicity as f64 * (w - r.z).norm().ln()).sum::<f64>() / total as f64;
            let exact_potential = exact_log_potential(&p, w);
            PotentialLevel { n, roots: total, potential, exact_potential, error: (potential - limit_prediction).abs() }
        })
        .collect();
    let errs: Vec<f64> = potential_per_n.iter().filter(|l| l.n >= 2).map(|l| l.error).collect();
    let strictly_decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = strictly_decreasing && errs.last().is_some_and(|&e| e <= 0.05);
    Ok(EquidistReport { w, green_w, v, limit_prediction, potential_per_n, strictly_decreasing, pass })
}

/// `(log|P(w)| − log|lead P|) / deg P` with `P(w)` evaluated exactly.
fn exact_log_potential(p: &RatPoly, w: Complex64) -> f64 {
    let deg = p.degree_or_zero() as f64;
    let lead = rational_to_f64(&p.lead()).abs();
    (exact_abs_at(p, w).ln() - lead.ln()) / deg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMethod {
    /// `G_{c,p}(λ) = log|λ|_p` at a good place with `|λ|_p > 1`.
    ClosedForm,
    /// `ĥ_{f_λ,p}(c(λ)) / m` by p-adic iteration at a bad place.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteContribution {
    pub p: u64,
    /// The contribution is `coefficient · log p`.
    pub coefficient: String,
    pub value: f64,
    pub method: ContributionMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdelicHeightReport {
    pub lambda: String,
    pub m: usize,
    pub finite_contribs: Vec<FiniteContribution>,
    pub arch_contrib: GreenValue,
    pub total: f64,
    /// `ĥ_{f_λ}(c(λ)) / m` from the global-height routine.
    pub crosscheck: f64,
    pub difference: f64,
    pub pass: bool,
}

/// Height of the rational parameter `λ` relative to `M_c`.
pub fn adelic_height(family: &ParamFamily, c: &LamPoly, lambda: &Rational, tol: f64) -> Result<AdelicHeightReport> {
    let (m, _) = marked_hypothesis(family, c)?;
    let mq = Rational::from_integer(m.into());
    let f = family.specialize(lambda);
    let x = c.eval(lambda);
    let arch_contrib = local_height_arch(&f.to_cpoly(), Complex64::new(rational_to_f64(&x), 0.0), tol * m as f64)?
        .scaled(m as f64);

    let bad = good_places(family, c).bad_primes();
    let mut primes: Vec<u64> = bad.clone();
    for p in prime_support(lambda) {
        let v = valuation(lambda, &p.into()).unwrap_or(0);
        if v < 0 && !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let mut finite_contribs = Vec::new();
    for p in primes {
        let (coefficient, method) = if bad.contains(&p) {
            (local_height_nonarch(&f, &x, p)?.coefficient / &mq, ContributionMethod::Dynamic)
        } else {
            let v = valuation(lambda, &p.into()).expect("λ ≠ 0 here");
            (Rational::from_integer((-v).into()), ContributionMethod::ClosedForm)
        };
        if coefficient.is_zero() && method == ContributionMethod::Dynamic {
            continue;
        }
        finite_contribs.push(FiniteContribution {
            p,
            value: rational_to_f64(&coefficient) * (p as f64).ln(),
            coefficient: coefficient.to_string(),
            method,
        });
    }
    let total = arch_contrib.value + finite_contribs.iter().map(|c| c.value).sum::<f64>();
    let crosscheck = global_height_poly(&f, &x, tol * m as f64)?.total / m as f64;
    let difference = (total - crosscheck).abs();
    let pass = difference <= 1e-8 + arch_contrib.error_bound;
    Ok(AdelicHeightReport {
        lambda: lambda.to_string(),
        m,
        finite_contribs,
        arch_contrib,
        total,
        crosscheck,
        difference,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateHeightReport {
    pub conjugates: Vec<Complex64>,
    pub green: Vec<GreenValue>,
    /// Mean of `G_c` over the conjugates; finite places are not included.
    pub archimedean_mean: f64,
    pub partial: bool,
}

/// Archimedean part of the adelic height of an algebraic parameter given by
/// its minimal polynomial over ℚ.
pub fn adelic_height_archimedean(family: &ParamFamily, c: &LamPoly, minimal_poly: &RatPoly, tol: f64) -> Result<ConjugateHeightReport> {
    if minimal_poly.degree_or_zero() == 0 {
        return Err(Error::InvalidInput("minimal polynomial must be nonconstant".into()));
    }
    let roots = roots_exact(minimal_poly, DEFAULT_MAX_ITER);
    if roots.iter().any(|r| !r.converged) {
        return Err(Error::RootsNotConverged { iterations: DEFAULT_MAX_ITER });
    }
    let conjugates: Vec<Complex64> = roots.iter().map(|r| r.z).collect();
    let green = conjugates
        .iter()
        .map(|&z| param_green(family, c, z, tol))
        .collect::<Result<Vec<_>>>()?;
    let archimedean_mean = green.iter().map(|g| g.value).sum::<f64>() / green.len() as f64;
    Ok(ConjugateHeightReport { conjugates, green, archimedean_mean, partial: true })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub deg_a: Option<usize>,
    pub deg_b: Option<usize>,
    pub lead_a: String,
    pub lead_b: String,
    /// Same degree and leading coefficient for `g_{a,k}` and `g_{b,ℓ}`.
    pub condition_i: bool,
    /// `deg a, deg b ≥ m_r`.
    pub condition_ii: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionLevel {
    pub max_n: u32,
    pub count_a: usize,
    pub count_b: usize,
    pub shared: usize,
    pub shared_lambdas: Vec<Complex64>,
    pub sets_equal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HypothesisFailed,
    /// Identity holds and the two preperiodic sets coincide at every level.
    IdentityTrueSetsEqual,
    /// Identity holds and the shared set grew at three consecutive levels.
    IdentityTrueGrowing,
    /// Identity fails and the shared set stopped growing.
    IdentityFalseStable,
    /// The observed pattern does not match the dichotomy.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharedPrepReport {
    pub hypothesis_check: HypothesisCheck,
    pub identity: bool,
    pub intersection: Vec<IntersectionLevel>,
    pub verdict: Verdict,
}

fn pair_up(a: &[Complex64], b: &[Complex64], tol: f64) -> Vec<Complex64> {
    let mut used = vec![false; b.len()];
    let mut shared = Vec::new();
    for &z in a {
        if let Some(j) = (0..b.len()).find(|&j| !used[j] && (b[j] - z).norm() <= tol) {
            used[j] = true;
            shared.push(z);
        }
    }
    shared
}

/// Compares `Prep(a)` and `Prep(b)` level by level, together with the exact
/// identity `g_{a,k} = g_{b,ℓ}`.
pub fn shared_prep_experiment(
    family: &ParamFamily,
    a: &LamPoly,
    b: &LamPoly,
    k: u32,
    l: u32,
    max_n: u32,
    pair_tol: f64,
) -> Result<SharedPrepReport> {
    let ga = param_orbit(family, a, k, DEFAULT_DEGREE_CAP)?.pop().expect("orbit");
    let gb = param_orbit(family, b, l, DEFAULT_DEGREE_CAP)?.pop().expect("orbit");
    let hyp_a = marked_hypothesis(family, a);
    let hyp_b = marked_hypothesis(family, b);
    let condition_i = ga.degree() == gb.degree() && ga.lead() == gb.lead();
    let condition_ii = hyp_a.is_ok() && hyp_b.is_ok();
    let message = match (&hyp_a, &hyp_b) {
        (Err(e), _) | (_, Err(e)) => Some(format!("{e}")),
        _ if !condition_i => Some(format!(
            "hypothesis (i) fails: g_a,{k} has degree {} and leading coefficient {}, g_b,{l} has degree {} and leading coefficient {}",
            ga.degree(),
            ga.lead(),
            gb.degree(),
            gb.lead()
        )),
        _ => None,
    };
    let hypothesis_check = HypothesisCheck {
        deg_a: ga.degree().finite(),
        deg_b: gb.degree().finite(),
        lead_a: ga.lead().to_string(),
        lead_b: gb.lead().to_string(),
        condition_i,
        condition_ii,
        message,
    };
    let identity = ga == gb;
    if !(condition_i && condition_ii) {
        return Ok(SharedPrepReport { hypothesis_check, identity, intersection: Vec::new(), verdict: Verdict::HypothesisFailed });
    }
    let mut intersection = Vec::new();
    for n in 1..=max_n {
        let ra = prep_roots(family, a, n)?.lambdas();
        let rb = prep_roots(family, b, n)?.lambdas();
        let shared_lambdas = pair_up(&ra, &rb, pair_tol);
        let sets_equal = ra.len() == rb.len() && shared_lambdas.len() == ra.len();
        intersection.push(IntersectionLevel {
            max_n: n,
            count_a: ra.len(),
            count_b: rb.len(),
            shared: shared_lambdas.len(),
            shared_lambdas,
            sets_equal,
        });
    }
    let counts: Vec<usize> = intersection.iter().map(|l| l.shared).collect();
    let growing = counts.len() >= 4 && counts[counts.len() - 4..].windows(2).all(|w| w[1] > w[0]);
    let stable = counts.len() >= 2 && counts[counts.len() - 1] == counts[counts.len() - 2];
    let all_equal = intersection.iter().all(|l| l.sets_equal);
    let verdict = match (identity, all_equal, growing, stable) {
        (true, true, _, _) => Verdict::IdentityTrueSetsEqual,
        (true, false, true, _) => Verdict::IdentityTrueGrowing,
        (false, _, false, true) => Verdict::IdentityFalseStable,
        _ => Verdict::Inconsistent,
    };
    Ok(SharedPrepReport { hypothesis_check, identity, intersection, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    fn classical() -> (ParamFamily, LamPoly) {
        (ParamFamily::parse("x^2 + l").unwrap(), LamPoly::x())
    }

    fn near(v: &[Complex64], z: f64) -> bool {
        v.iter().any(|w| (w - Complex64::new(z, 0.0)).norm() < 1e-12)
    }

    #[test]
    fn prep_equation_examples() {
        let (f, c) = classical();
        assert_eq!(prep_equation(&f, &c, 1, 0).unwrap(), RatPoly::from_ints(&[0, 0, 1]));
        // (λ²+λ)² = λ² (λ+1)²
        assert_eq!(prep_equation(&f, &c, 2, 0).unwrap(), RatPoly::from_ints(&[0, 0, 1, 2, 1]));
        assert!(prep_equation(&f, &c, 2, 2).is_err());
    }

    #[test]
    fn prep_roots_classical() {
        let (f, c) = classical();
        let r = prep_roots(&f, &c, 2).unwrap();
        let l = r.lambdas();
        assert!(near(&l, 0.0) && near(&l, -1.0) && near(&l, -2.0));
        let zero = r.solutions.iter().find(|s| s.lambda_approx == Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!((zero.n, zero.k), (1, 0));
        let m2 = r.solutions.iter().find(|s| s.lambda_approx == Complex64::new(-2.0, 0.0)).unwrap();
        assert_eq!((m2.n, m2.k), (2, 1));
        for rel in &r.relations {
            assert_eq!(rel.degree, 1 << rel.n);
            assert_eq!(rel.roots_found, rel.degree);
        }
        let csv = prep_csv(&r.solutions);
        assert!(csv.starts_with("n,k,re,im,residual\n"));
    }

    #[test]
    fn prep_roots_rejects_constant_marked_point() {
        let (f, _) = classical();
        assert!(matches!(prep_roots(&f, &LamPoly::one(), 2), Err(Error::HypothesisFailed(_))));
    }

    #[test]
    fn constant_family_roots_of_unity() {
        let f = ParamFamily::parse("x^2").unwrap();
        let r = prep_roots(&f, &LamPoly::x(), 3).unwrap();
        for s in &r.solutions {
            let z = s.lambda_approx;
            assert!(z.norm() < 1e-12 || (z.norm() - 1.0).abs() < 1e-12);
        }
        // λ^8 = λ^{2^k}: 0 plus the roots of unity of orders dividing 8 - 2^k.
        assert!(r.solutions.len() >= 8);
    }

    #[test]
    fn clustering_and_negative_control() {
        let (f, c) = classical();
        let r = prep_roots(&f, &c, 3).unwrap();
        let rep = boundary_clustering(&f, &c, &r.solutions, 1e-8, DEFAULT_CLUSTER_SLACK).unwrap();
        assert!(rep.pass && rep.max_g <= 1e-6, "{}", rep.max_g);
        let mut bad = r.solutions[0].clone();
        bad.lambda_approx = Complex64::new(1.0, 0.0);
        let rep = boundary_clustering(&f, &c, &[bad], 1e-8, DEFAULT_CLUSTER_SLACK).unwrap();
        assert!(!rep.pass && (rep.max_g - 0.407_354_522_739_48).abs() < 1e-6);
    }

    #[test]
    fn equidistribution_classical() {
        let (f, c) = classical();
        let rep = equidist_potential(&f, &c, 4, Complex64::new(3.0, 0.0), 1e-10).unwrap();
        for l in &rep.potential_per_n {
            assert!((l.potential - l.exact_potential).abs() < 1e-9);
        }
        assert!(rep.strictly_decreasing);
        assert!(equidist_potential(&f, &c, 2, Complex64::new(0.0, 0.0), 1e-10).is_err());
    }

    #[test]
    fn equidistribution_half_lambda_uses_log2() {
        let f = ParamFamily::parse("x^2 + l").unwrap();
        let c = LamPoly::monomial(rat(1, 2), 1);
        let rep = equidist_potential(&f, &c, 4, Complex64::new(20.0, 0.0), 1e-10).unwrap();
        assert!((rep.v + 2f64.ln()).abs() < 1e-15);
        assert!(rep.potential_per_n.last().unwrap().error < 0.01);
    }

    #[test]
    fn adelic_examples() {
        let (f, c) = classical();
        let r = adelic_height(&f, &c, &int(0), 1e-10).unwrap();
        assert_eq!(r.total, 0.0);
        let r = adelic_height(&f, &c, &int(2), 1e-10).unwrap();
        assert!((r.total - 0.909_569_610_122_235_6).abs() < 1e-9 && r.finite_contribs.is_empty());
        let r = adelic_height(&f, &c, &rat(1, 2), 1e-10).unwrap();
        assert_eq!(r.finite_contribs.len(), 1);
        assert_eq!(r.finite_contribs[0].p, 2);
        assert_eq!(r.finite_contribs[0].coefficient, "1");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn conjugate_mode_is_partial() {
        let (f, c) = classical();
        // λ² + 1: both conjugates ±i lie in M (0 → i → i−1 → −i → i−1 ...).
        let rep = adelic_height_archimedean(&f, &c, &RatPoly::from_ints(&[1, 0, 1]), 1e-10).unwrap();
        assert!(rep.partial && rep.archimedean_mean < 1e-8);
    }

    #[test]
    fn shared_prep_examples() {
        let (f, _) = classical();
        let a = RatPoly::from_ints(&[1, 1]);
        let rep = shared_prep_experiment(&f, &a, &a, 0, 0, 3, 1e-6).unwrap();
        assert!(rep.identity && rep.verdict == Verdict::IdentityTrueSetsEqual);

        let b = RatPoly::from_ints(&[4, 1]);
        let rep = shared_prep_experiment(&f, &a, &b, 0, 0, 3, 1e-6).unwrap();
        assert!(!rep.identity);
        assert_eq!(rep.verdict, Verdict::IdentityFalseStable);

        let c2 = RatPoly::from_ints(&[0, 1, 1]);
        let rep = shared_prep_experiment(&f, &LamPoly::x(), &c2, 0, 0, 2, 1e-6).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisFailed);
        assert!(!rep.hypothesis_check.condition_i);
    }
}
