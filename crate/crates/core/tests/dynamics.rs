use dynmand::boettcher::{analyticity_threshold, bottcher_product, bottcher_threshold, check_asymptotic, green_fiber, ProbeGrid};
use dynmand::family::ParamFamily;
use dynmand::heights::HeightOptions;
use dynmand::mandelbrot::{
    capacity_estimate, grid_csv, membership, outer_radius, param_green, render_grid_threads, Membership, RenderSpec, Window,
};
use dynmand::poly::{int, rat};
use dynmand::prep::{adelic_height, prep_roots, shared_prep_experiment, ContributionMethod, Verdict};
use dynmand::{CPoly, LamPoly, RatPoly};
use num_complex::Complex64;

fn classical() -> (ParamFamily, LamPoly) {
    (ParamFamily::parse("x^2 + l").unwrap(), LamPoly::x())
}

#[test]
fn bottcher_conjugates_to_power_map() {
    let f = CPoly::new(vec![Complex64::new(0.3, -1.1), Complex64::new(-0.5, 0.25), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let rho = bottcher_threshold(&f);
    for k in 0..12 {
        let z = Complex64::from_polar(4.0 * rho + 1.0, 0.37 + k as f64 * 0.5);
        let phi = bottcher_product(&f, z, 1e-13).unwrap().value;
        let phi_fz = bottcher_product(&f, f.eval(z), 1e-13).unwrap().value;
        let rel = (phi_fz - phi.powu(3)).norm() / phi_fz.norm();
        assert!(rel < 1e-10, "z = {z}: {rel}");
        let g = green_fiber(&f, z, 1e-13).unwrap();
        assert!((phi.norm().ln() - g.value).abs() < 1e-10);
    }
}

#[test]
fn bottcher_is_tangent_to_identity_at_infinity() {
    let f = CPoly::from_real(&[-0.75, 0.0, 1.0]);
    let mut prev = f64::INFINITY;
    for r in [1e2, 1e3, 1e4, 1e5] {
        let z = Complex64::new(0.0, r);
        let dev = (bottcher_product(&f, z, 1e-14).unwrap().value / z - 1.0).norm();
        assert!(dev < prev);
        prev = dev;
    }
    assert!(prev < 1e-9);
}

#[test]
fn bottcher_rejects_non_monic() {
    let f = CPoly::from_real(&[0.0, 0.0, 2.0]);
    assert!(bottcher_product(&f, Complex64::new(10.0, 0.0), 1e-10).is_err());
}

#[test]
fn green_of_marked_point_grows_like_log() {
    let (fam, c) = classical();
    let samples: Vec<Complex64> = [1e2, 1e3, 1e4].iter().map(|&r| Complex64::from_polar(r, 0.7)).collect();
    let rep = check_asymptotic(&fam, &c, &samples, 1e-12).unwrap();
    assert!(rep.pass, "{rep:?}");
    for r in [1e3, 1e6] {
        let g = param_green(&fam, &c, Complex64::new(-r, 0.0), 1e-12).unwrap();
        assert!((g.value - r.ln()).abs() < 2.0 / r, "{r}: {}", g.value);
    }
}

#[test]
fn threshold_estimate_is_labelled() {
    let (fam, c) = classical();
    let rep = analyticity_threshold(&fam, &c, &ProbeGrid::default(), 1e-10).unwrap();
    assert!(rep.estimate_only);
    assert!(rep.c0_estimate.is_finite() && rep.c0_estimate > 0.0);
}

#[test]
fn classical_membership_examples() {
    let (fam, c) = classical();
    assert!(matches!(membership(&fam, &c, Complex64::new(-1.0, 0.0), 1e-10).unwrap(), Membership::Inside { .. }));
    assert!(matches!(membership(&fam, &c, Complex64::new(0.0, 0.0), 1e-10).unwrap(), Membership::Inside { .. }));
    match membership(&fam, &c, Complex64::new(1.0, 0.0), 1e-10).unwrap() {
        Membership::Outside { green, via_outer_bound } => {
            assert!(!via_outer_bound);
            // mpmath escape-rate oracle at 50 digits.
            assert!((green.value - 0.407_354_522_739_480_0).abs() < 1e-10);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        membership(&fam, &c, Complex64::new(10.0, 0.0), 1e-10).unwrap(),
        Membership::Outside { via_outer_bound: true, .. }
    ));
    let r = outer_radius(&fam, &c).unwrap();
    assert!(r >= 2.0 && r <= 9.0 + 1e-9, "{r}");
}

#[test]
fn capacity_of_cubic_family() {
    let fam = ParamFamily::parse("x^3 + l*x + 1").unwrap();
    let c = LamPoly::monomial(rat(1, 4), 1);
    let fit = capacity_estimate(&fam, &c, &[1e3, 1e4, 1e5], 64, 1e-12).unwrap();
    assert!((fit.gamma_est - 4.0).abs() < 1e-3, "{fit:?}");
    assert!(capacity_estimate(&fam, &c, &[1.0], 64, 1e-12).is_err());
}

#[test]
fn root_counts_follow_the_degree_law() {
    for (src, c, d) in [("x^2 + l", LamPoly::x(), 2usize), ("x^3 + l", LamPoly::x(), 3)] {
        let fam = ParamFamily::parse(src).unwrap();
        let roots = prep_roots(&fam, &c, 3).unwrap();
        for rel in &roots.relations {
            assert_eq!(rel.degree, d.pow(rel.n), "{src} ({}, {})", rel.n, rel.k);
            assert_eq!(rel.roots_found, rel.degree);
        }
    }
}

#[test]
fn shared_prep_stabilises_for_distinct_orbits() {
    // λ = -2 and λ = -3 make both 1 + λ and 4 + λ preperiodic, and nothing
    // else is shared; the intersection stops growing.
    let fam = ParamFamily::parse("x^2 + l").unwrap();
    let rep = shared_prep_experiment(&fam, &RatPoly::from_ints(&[1, 1]), &RatPoly::from_ints(&[4, 1]), 0, 0, 4, 1e-6).unwrap();
    assert!(!rep.identity);
    let last = rep.intersection.last().unwrap();
    let mut shared: Vec<f64> = last.shared_lambdas.iter().map(|z| z.re).collect();
    shared.sort_by(f64::total_cmp);
    assert_eq!(shared.len(), 2);
    assert!((shared[0] + 3.0).abs() < 1e-9 && (shared[1] + 2.0).abs() < 1e-9);
    assert!(last.shared_lambdas.iter().all(|z| z.im.abs() < 1e-9));
    assert_eq!(rep.verdict, Verdict::IdentityFalseStable);
}

#[test]
fn adelic_height_of_half() {
    let (fam, c) = classical();
    let rep = adelic_height(&fam, &c, &rat(1, 2), 1e-12).unwrap();
    assert!(rep.pass);
    let two = rep.finite_contribs.iter().find(|t| t.p == 2).unwrap();
    assert_eq!(two.coefficient, "1");
    assert_eq!(two.method, ContributionMethod::ClosedForm);
    let rep = adelic_height(&fam, &c, &int(-2), 1e-12).unwrap();
    assert!(rep.total.abs() <= 1e-12);
}

#[test]
fn renders_agree_across_thread_counts() {
    let (fam, c) = classical();
    let spec = RenderSpec { window: Window::CLASSICAL, nx: 48, ny: 36, tol: 1e-8, opts: HeightOptions::default() };
    let base = grid_csv(&render_grid_threads(&fam, &c, &spec, 1).unwrap());
    for threads in [2, 3, 8] {
        assert_eq!(grid_csv(&render_grid_threads(&fam, &c, &spec, threads).unwrap()), base);
    }
}
