use num_complex::Complex64;
use proptest::prelude::*;
use twomode::closedform::{self, BranchState};
use twomode::model::{quadratic_form, rhs, rhs_isochronous};
use twomode::verify::{is_well_conditioned, Draw};
use twomode::{IsochronousParams, ModelParams, State};

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn params() -> impl Strategy<Value = ModelParams> {
    (complex(), complex(), complex(), complex())
        .prop_filter_map("zero coefficients", |(a1, a2, b1, b2)| ModelParams::new(a1, a2, b1, b2).ok())
}

fn state() -> impl Strategy<Value = State> {
    (complex(), complex()).prop_map(|(x1, x2)| State::new(x1, x2))
}

fn draw() -> impl Strategy<Value = Draw> {
    (params(), state())
        .prop_map(|(params, x0)| Draw { params, x0 })
        .prop_filter("ill-conditioned", is_well_conditioned)
}

fn rel(a: State, b: State) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rhs_is_homogeneous_of_degree_minus_one(d in draw(), lambda in complex()) {
        prop_assume!(lambda.norm() > 0.1);
        let f = rhs(&d.params, &d.x0).unwrap();
        let g = rhs(&d.params, &(d.x0 * lambda)).unwrap();
        prop_assert!(rel(g * lambda, f) < 1e-12);
    }

    #[test]
    fn quadratic_form_swap_symmetry(p in params(), s in state()) {
        let q = quadratic_form(&p, &s);
        let q_swapped = quadratic_form(&p.swapped(), &s.swapped());
        prop_assert!((q - q_swapped).norm() <= 1e-12 * (1.0 + q.norm()));
    }

    #[test]
    fn isochronous_rhs_adds_rotation(d in draw(), omega in -3.0..3.0f64) {
        prop_assume!(omega.abs() > 1e-3);
        let iso = IsochronousParams::new(d.params, omega).unwrap();
        let diff = rhs_isochronous(&iso, &d.x0).unwrap() - rhs(&d.params, &d.x0).unwrap();
        let expected = d.x0 * Complex64::new(0.0, omega);
        prop_assert!((diff - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn closed_form_starts_at_x0(d in draw()) {
        let sol = closedform::solve_ivp(&d.params, d.x0).unwrap();
        let (x, _) = sol.eval(Complex64::new(0.0, 0.0), &BranchState::fresh()).unwrap();
        prop_assert!(rel(x, d.x0) < 1e-12);
    }

    #[test]
    fn continued_roots_square_to_radicands(d in draw(), t_end in 0.05..2.0f64) {
        let sol = closedform::solve_ivp(&d.params, d.x0).unwrap();
        let times: Vec<f64> = (1..=20).map(|j| t_end * j as f64 / 20.0).collect();
        let walk = sol.walk_real(&times).unwrap();
        for s in &walk.samples {
            for m in 0..2 {
                let radicand = 1.0 + sol.rates[m] * s.param;
                let w = s.branch.w[m];
                prop_assert!((w * w - radicand).norm() <= 1e-10 * (1.0 + radicand.norm()));
            }
        }
    }

    #[test]
    fn closed_form_solves_the_system(d in draw()) {
        let sol = closedform::solve_ivp(&d.params, d.x0).unwrap();
        let horizon = sol.singularity_times().first().map_or(1.0, |t| t.min(2.0) * 0.5);
        let grid = twomode::verify::uniform_grid(horizon, 10);
        prop_assert!(twomode::verify::residual_of(&sol, &grid).unwrap() < 1e-9);
    }
}
