use dynmand::family::{check_degree_law, param_orbit, ParamFamily, DEFAULT_DEGREE_CAP};
use dynmand::heights::{check_functional_equation, global_height_poly, local_height_nonarch, weil_height, NonArchStatus};
use dynmand::padic::valuation;
use dynmand::places::{log_escape_radius, product_formula_terms};
use dynmand::poly::{int, rat};
use dynmand::{CPoly, LamPoly, RatPoly, Rational};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=9).prop_map(|(n, d)| rat(n, d))
}

fn nonzero_rat() -> impl Strategy<Value = Rational> {
    small_rat().prop_filter("nonzero", |q| !q.is_zero())
}

fn lampoly(max_deg: usize) -> impl Strategy<Value = LamPoly> {
    prop::collection::vec(small_rat(), 1..=max_deg + 1).prop_map(RatPoly::new)
}

/// A normal-form family with a marked point of degree at least `max(m_r, 1)`.
fn family_and_point() -> impl Strategy<Value = (ParamFamily, LamPoly)> {
    (2usize..=3)
        .prop_flat_map(|d| prop::collection::vec(lampoly(2), d - 1))
        .prop_flat_map(|coeffs| {
            let fam = ParamFamily::new(coeffs.len() + 1, coeffs).unwrap();
            let lo = fam.m_r().max(1);
            let point = (lo..=lo + 1).prop_flat_map(|m| {
                (prop::collection::vec(small_rat(), m), nonzero_rat()).prop_map(|(mut c, lead)| {
                    c.push(lead);
                    RatPoly::new(c)
                })
            });
            (Just(fam), point)
        })
}

fn real_poly(d: usize) -> impl Strategy<Value = CPoly> {
    (prop::collection::vec(-3.0f64..3.0, d), prop::sample::select(vec![-2.0, -1.0, 0.5, 1.0, 3.0]))
        .prop_map(|(mut c, lead)| {
            c.push(lead);
            CPoly::from_real(&c)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_law_holds((fam, c) in family_and_point(), n in 0u32..=2) {
        let report = check_degree_law(&fam, &c, n).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }

    #[test]
    fn specialization_commutes_with_iteration((fam, c) in family_and_point(), lambda in small_rat()) {
        let orbit = param_orbit(&fam, &c, 2, DEFAULT_DEGREE_CAP).unwrap();
        let f = fam.specialize(&lambda);
        let mut x = c.eval(&lambda);
        for g in &orbit {
            prop_assert_eq!(g.eval(&lambda), x.clone());
            x = f.eval(&x);
        }
    }

    #[test]
    fn relations_divide_their_successors((fam, c) in family_and_point()) {
        let orbit = param_orbit(&fam, &c, 3, DEFAULT_DEGREE_CAP).unwrap();
        for (n, k) in [(2usize, 1usize), (3, 1), (3, 2)] {
            let hi = &orbit[n] - &orbit[k];
            let lo = &orbit[n - 1] - &orbit[k - 1];
            prop_assert!(hi.div_rem(&lo).1.is_zero(), "({n}, {k})");
        }
    }

    #[test]
    fn product_formula(alpha in nonzero_rat(), beta in nonzero_rat()) {
        let x = alpha * beta.pow(5);
        let (arch, finite) = product_formula_terms(&x);
        let total = arch + finite.iter().map(|&(p, e)| e as f64 * (p as f64).ln()).sum::<f64>();
        prop_assert!(total.abs() <= 1e-12, "{total}");
    }

    #[test]
    fn fixed_point_preimages_have_zero_height(t in small_rat()) {
        // x^2 + t - t^2 fixes t and sends -t to t.
        let f = RatPoly::new(vec![&t - &t * &t, int(0), int(1)]);
        let h = global_height_poly(&f, &(-&t), 1e-10).unwrap();
        prop_assert!(h.total.abs() <= 1e-10);
        prop_assert!(h.finite.iter().all(|l| l.coefficient.is_zero()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weil_height_of_power_maps(x in small_rat(), d in 2usize..=3) {
        let f = RatPoly::monomial(int(1), d);
        let h = global_height_poly(&f, &x, 1e-12).unwrap();
        prop_assert!((h.total - weil_height(&x)).abs() <= 1e-10, "{} vs {}", h.total, weil_height(&x));
    }

    #[test]
    fn functional_equation_quadratic(f in real_poly(2), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let r = check_functional_equation(&f, Complex64::new(re, im), 1e-10).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn functional_equation_cubic(f in real_poly(3), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let r = check_functional_equation(&f, Complex64::new(re, im), 1e-10).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Decided heights agree with exact rational iteration: a bounded orbit
    /// never crosses the escape radius, and an escaped one reproduces the
    /// same coefficient from every later iterate.
    #[test]
    fn nonarch_agrees_with_exact_iteration(
        coeffs in prop::collection::vec(small_rat(), 2..=3),
        lead in nonzero_rat(),
        x in small_rat(),
        p in prop::sample::select(vec![2u64, 3, 5, 7]),
    ) {
        let mut coeffs = coeffs;
        coeffs.push(lead);
        let f = RatPoly::new(coeffs);
        let Ok(h) = local_height_nonarch(&f, &x, p) else { return Ok(()) };
        prop_assert!(h.coefficient >= Rational::zero());
        let bp = BigInt::from(p);
        let bound = -log_escape_radius(&f, p);
        let d = Rational::from_integer(f.degree_or_zero().into());
        let lead_term = Rational::from_integer(valuation(&f.lead(), &bp).unwrap().into()) / (&d - Rational::one());
        let mut z = x.clone();
        let mut dn = Rational::one();
        for n in 0..7usize {
            if z.numer().bits() + z.denom().bits() > 8192 {
                break;
            }
            let v = valuation(&z, &bp);
            let escapes = v.is_some_and(|v| Rational::from_integer(v.into()) < bound);
            match &h.status {
                NonArchStatus::Bounded { .. } => prop_assert!(!escapes, "{f} at {x}, p = {p}, step {n}"),
                NonArchStatus::Escaped { step } if n >= *step => {
                    prop_assert!(escapes);
                    let value = (Rational::from_integer((-v.unwrap()).into()) - &lead_term) / &dn;
                    prop_assert_eq!(&value, &h.coefficient);
                }
                NonArchStatus::Escaped { .. } => prop_assert!(!escapes),
            }
            z = f.eval(&z);
            dn *= &d;
        }
    }
}
