use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use pharm::analytic::{
    annulus_decay_constant, kelvin, mu_eval, radial_eval, radial_grad, sup_bound_constant, PExponents, RadialProfile,
};
use pharm::discretization::{
    gradient, integrate, integrate_boundary, AnnularMesh2D, AnnulusSamples, Circle, Discretization, RadialGrid,
    ScalarField,
};
use pharm::radial_bvp::{boundary_residual, shoot_radial, solve_radial, BoundaryLaw, FarField, RadialBvp};
use pharm::verification::{
    bound_check, classify_dichotomy, sign_condition_check, DichotomyThresholds, DichotomyVerdict,
};

fn p_values() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), Just(4.0), 1.1f64..6.0]
}

fn exps() -> impl Strategy<Value = PExponents> {
    (p_values(), 2u32..=4).prop_map(|(p, d)| PExponents::new(p, d).unwrap())
}

/// Composite Simpson rule, kept separate from the library's Gauss rules.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mu_is_strictly_monotone(e in exps(), r1 in 0.01f64..1e4, f in 1.001f64..100.0) {
        let r2 = r1 * f;
        let (a, b) = (mu_eval(&e, r1).unwrap(), mu_eval(&e, r2).unwrap());
        if e.p() < e.d() as f64 {
            prop_assert!(b < a);
        } else {
            prop_assert!(b > a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mu_vanishes_at_infinity_below_the_critical_exponent(p in 1.05f64..1.95, d in 2u32..=4) {
        let e = PExponents::new(p, d).unwrap();
        let v = mu_eval(&e, 1e6).unwrap();
        let far = mu_eval(&e, 1e12).unwrap();
        // r^κ with κ < 0: positive, below μ(1) = 1, squaring when r squares
        prop_assert!(v > 0.0 && v < 1.0);
        prop_assert!((v - 1e6f64.powf(e.kappa())).abs() <= 1e-12 * v);
        prop_assert!((far - v * v).abs() <= 1e-10 * v * v);
    }

    #[test]
    fn radial_gradient_matches_finite_differences(
        e in exps(), c in -3.0f64..3.0, r in 0.5f64..20.0, phi in 0.0f64..(2.0 * PI)
    ) {
        // the offset does not enter the gradient and would only add cancellation
        let prof = RadialProfile::new(0.0, c, e);
        let d = e.d() as usize;
        let mut x = vec![0.0; d];
        x[0] = r * phi.cos();
        x[1] = r * phi.sin();
        let g = radial_grad(&prof, &x).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 0..d {
            let h = 1e-5 * r;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let norm_of = |y: &[f64]| y.iter().map(|c| c * c).sum::<f64>().sqrt();
            let fd = (radial_eval(&prof, norm_of(&xp)).unwrap() - radial_eval(&prof, norm_of(&xm)).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * norm.max(1e-12) + 1e-12, "k={} fd={} g={}", k, fd, g[k]);
        }
    }

    #[test]
    fn decay_constant_is_positive_and_matches_quadrature(e in exps()) {
        let c2 = annulus_decay_constant(&e);
        prop_assert!(c2 > 0.0);
        let (p, d, k) = (e.p(), e.d() as f64, e.kappa());
        let r: f64 = 1.7;
        let integral = simpson(|s| s.powf(p * k + d - 1.0), r, 2.0 * r, 2000);
        let oracle = integral / r.powf(p) / r.powf(k);
        prop_assert!((c2 - oracle).abs() <= 1e-8 * oracle, "{} vs {}", c2, oracle);
    }

    #[test]
    fn kelvin_is_an_involution(
        x in prop::array::uniform3(-5.0f64..5.0), a in prop::array::uniform3(-2.0f64..2.0)
    ) {
        prop_assume!(x.iter().map(|c| c * c).sum::<f64>() > 1e-4);
        let v = move |y: &[f64]| Ok(a[0] * y[0] + a[1] * y[1] * y[1] + a[2] * (y[2] + 1.0).exp());
        let kv = kelvin(v, 3).unwrap();
        let kkv = kelvin(kv, 3).unwrap();
        let direct = v(&x).unwrap();
        prop_assert!((kkv(&x).unwrap() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn kelvin_preserves_harmonicity(x in prop::array::uniform3(0.5f64..2.0)) {
        // K[x₁] = x₁/|x|³; the 7-point Laplacian error is O(h²)
        let k = kelvin(|y: &[f64]| Ok(y[0]), 3).unwrap();
        let lap = |h: f64| {
            let mut s = -6.0 * k(&x).unwrap();
            for axis in 0..3 {
                for sgn in [-1.0, 1.0] {
                    let mut y = x;
                    y[axis] += sgn * h;
                    s += k(&y).unwrap();
                }
            }
            s / (h * h)
        };
        let (l1, l2) = (lap(1e-2).abs(), lap(5e-3).abs());
        prop_assert!(l1 < 1e-2, "{}", l1);
        prop_assert!(l2 < 0.3 * l1 + 1e-6, "{} {}", l1, l2);
    }

    #[test]
    fn classifier_is_scale_equivariant(
        b in -10.0f64..10.0, amp in 0.1f64..5.0, c in 1.0f64..5.0, lambda in 0.01f64..100.0
    ) {
        let e = PExponents::new(2.0, 2).unwrap();
        let radii = vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let t = DichotomyThresholds::default();
        let scaled = |f: &dyn Fn(f64) -> f64, s: f64| {
            AnnulusSamples::from_values(radii.clone(), radii.iter().map(|&r| s * f(r)).collect()).unwrap()
        };
        let limit = move |r: f64| b + amp / r;
        let growth = move |r: f64| c * r.ln() + 1.0 / r;
        match (
            classify_dichotomy(&scaled(&limit, 1.0), &e, t),
            classify_dichotomy(&scaled(&limit, lambda), &e, t),
        ) {
            (DichotomyVerdict::ConstantLimit(x), DichotomyVerdict::ConstantLimit(y)) => {
                prop_assert!((y - lambda * x).abs() <= 1e-9 * (lambda * x).abs().max(lambda));
            }
            other => prop_assert!(false, "{:?}", other),
        }
        match (
            classify_dichotomy(&scaled(&growth, 1.0), &e, t),
            classify_dichotomy(&scaled(&growth, lambda), &e, t),
        ) {
            (
                DichotomyVerdict::FundamentalGrowth { c: c1, sign: s1 },
                DichotomyVerdict::FundamentalGrowth { c: c2, sign: s2 },
            ) => {
                prop_assert_eq!(s1, s2);
                prop_assert!((c2 - lambda * c1).abs() <= 1e-9 * lambda * c1);
            }
            (DichotomyVerdict::Undetermined(_), DichotomyVerdict::Undetermined(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn robin_power_satisfies_the_sign_condition(alpha in 0.0f64..10.0, p in 1.1f64..6.0,
        v in prop::collection::vec(-100.0f64..100.0, 1..50)) {
        let law = BoundaryLaw::RobinPower { alpha };
        prop_assert!(sign_condition_check(&law, p, &v).holds);
    }

    #[test]
    fn robin_with_zero_far_field_is_trivial(alpha in 0.01f64..10.0, p in 1.1f64..1.99, d in 2u32..=4, r_in in 0.1f64..5.0) {
        let e = PExponents::new(p, d).unwrap();
        let bvp = RadialBvp::new(r_in, BoundaryLaw::RobinPower { alpha }, FarField::Limit(0.0), e).unwrap();
        let prof = solve_radial(&bvp).unwrap();
        prop_assert_eq!((prof.offset, prof.coefficient), (0.0, 0.0));
    }

    #[test]
    fn robin_residual_has_a_unique_sign_change(
        alpha in 0.1f64..5.0, b_inf in -3.0f64..3.0, p in 1.2f64..1.9, d in 2u32..=3
    ) {
        let e = PExponents::new(p, d).unwrap();
        let law = BoundaryLaw::RobinPower { alpha };
        let bvp = RadialBvp::new(1.0, law.clone(), FarField::Limit(b_inf), e).unwrap();
        let sol = solve_radial(&bvp).unwrap();
        let res = |c: f64| boundary_residual(&RadialProfile::new(b_inf, c, e), &law, 1.0).unwrap();
        let cs: Vec<f64> = (-40..=40).map(|k| sol.coefficient + 0.1 * k as f64).collect();
        let vals: Vec<f64> = cs.iter().map(|&c| res(c)).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] > w[0]), "residual is not increasing");
        prop_assert!(vals[0] < 0.0 && vals[vals.len() - 1] > 0.0);
        prop_assert!(res(sol.coefficient).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_data_order_is_preserved(g1 in -3.0f64..3.0, dg in 0.01f64..3.0, e in exps(), r_out in 2.0f64..50.0) {
        let far = FarField::OuterDirichlet { radius: r_out, value: 0.5 };
        let solve = |g: f64| solve_radial(&RadialBvp::new(1.0, BoundaryLaw::DirichletValue(g), far, e).unwrap()).unwrap();
        let (v1, v2) = (solve(g1), solve(g1 + dg));
        for k in 0..=50 {
            let r = 1.0 + (r_out - 1.0) * k as f64 / 50.0;
            prop_assert!(v1.eval(r).unwrap() <= v2.eval(r).unwrap() + 1e-12);
        }
    }

    #[test]
    fn bounded_fields_stay_below_the_sup_bound(
        a in -2.0f64..2.0, amp in 0.0f64..2.0, k in 1u32..4, p in 2.0f64..4.0
    ) {
        // fields with |v - a| <= amp on an annulus; p >= d = 2
        let e = PExponents::new(p, 2).unwrap();
        let m = Arc::new(AnnularMesh2D::new(1.0, 16.0, 25, 32, 1.1).unwrap());
        let f = ScalarField::from_fn(m.clone(), |x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            a + amp * (k as f64 * x[1].atan2(x[0])).sin() / r
        }).unwrap();
        let sup = f.values().iter().fold(0.0f64, |s, v| s.max((v - a).abs()));
        let bc = bound_check(m.as_ref(), &f, a, &e, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        for (r, v) in bc.radii.iter().zip(&bc.values) {
            let bound = sup_bound_constant(&e, sup, *r).unwrap();
            prop_assert!(*v <= bound * (1.0 + 1e-9) + 1e-300, "r={} {} > {}", r, v, bound);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closed_form_matches_shooting(
        p in prop_oneof![Just(1.5), Just(2.0), Just(3.0), Just(4.0)],
        d in 2u32..=3,
        law_kind in 0usize..3,
        g in -2.0f64..2.0,
        alpha in 0.1f64..3.0,
        far_value in -2.0f64..2.0,
        r_in in 0.5f64..2.0,
        r_ratio in 2.0f64..20.0,
    ) {
        let e = PExponents::new(p, d).unwrap();
        let law = match law_kind {
            0 => BoundaryLaw::DirichletValue(g),
            1 => BoundaryLaw::RobinPower { alpha },
            _ => BoundaryLaw::NeumannZero,
        };
        let r_out = r_in * r_ratio;
        // bounded far fields need p < d unless the law admits a constant
        let far = if p < d as f64 {
            FarField::Limit(far_value)
        } else {
            FarField::OuterDirichlet { radius: r_out, value: far_value }
        };
        let bvp = RadialBvp::new(r_in, law, far, e).unwrap();
        let prof = solve_radial(&bvp).unwrap();
        let grid = RadialGrid::geometric(d, r_in, r_out, 40, 1.05).unwrap();
        let shot = shoot_radial(&bvp, &grid).unwrap();
        let diff = grid
            .radii()
            .iter()
            .zip(&shot)
            .map(|(r, s)| (prof.eval(*r).unwrap() - s).abs())
            .fold(0.0, f64::max);
        prop_assert!(diff <= 1e-8, "max diff {}", diff);
    }
}

#[test]
fn cell_gradients_converge_at_second_order() {
    let f = |x: [f64; 2]| (0.7 * x[0]).sin() * (0.5 * x[1]).cos();
    let df = |x: [f64; 2]| {
        [
            0.7 * (0.7 * x[0]).cos() * (0.5 * x[1]).cos(),
            -0.5 * (0.7 * x[0]).sin() * (0.5 * x[1]).sin(),
        ]
    };
    let err = |n_r: usize, n_t: usize| {
        let m = Arc::new(AnnularMesh2D::new(1.0, 3.0, n_r, n_t, 1.0).unwrap());
        let field = ScalarField::from_fn(m.clone(), f).unwrap();
        let g = gradient(m.as_ref(), field.values());
        let centres = m.cell_centers();
        let mut s = 0.0;
        for (c, gh) in centres.iter().zip(&g) {
            let exact = df(c.position);
            s += c.weight * ((gh[0] - exact[0]).powi(2) + (gh[1] - exact[1]).powi(2));
        }
        s.sqrt()
    };
    let (e1, e2, e3) = (err(9, 32), err(17, 64), err(33, 128));
    let (r1, r2) = ((e1 / e2).log2(), (e2 / e3).log2());
    assert!(r1 >= 1.9 && r2 >= 1.9, "rates {r1} {r2} (errors {e1} {e2} {e3})");
}

#[test]
fn divergence_theorem_on_the_annulus() {
    // F = (x³, y), div F = 3x² + 1
    let m = AnnularMesh2D::new(1.0, 3.0, 9, 128, 1.1).unwrap();
    let volume = integrate(&m, |s| 3.0 * s.position[0].powi(2) + 1.0);
    let flux = |x: [f64; 2]| (x[0].powi(4) + x[1] * x[1]) / (x[0] * x[0] + x[1] * x[1]).sqrt();
    let outer = integrate_boundary(&m, Circle::Outer, |_, x, _| flux(x));
    let inner = integrate_boundary(&m, Circle::Inner, |_, x, _| flux(x));
    let exact = 0.75 * PI * (3f64.powi(4) - 1.0) + PI * (9.0 - 1.0);
    assert!((volume - exact).abs() < 1e-9 * exact, "{volume} vs {exact}");
    assert!(
        (outer - inner - exact).abs() < 1e-9 * exact,
        "{} vs {exact}",
        outer - inner
    );
}
