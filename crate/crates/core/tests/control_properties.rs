use anthracnose::pde::{build_grid, GridSpec, ScalarField, TensorSpec};
use anthracnose::pde_control::{
    control_gradient, eval_cost_jt3, integrate_riccati, linearize, simulate_controlled_pde, simulate_linearized_closed_loop,
    solve_adjoint_pde, AlphaField, LinearizationPoint, PdeCostSpec,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// From `P(0) = 0` the Riccati flow is nondecreasing in the Loewner order.
    #[test]
    fn riccati_from_zero_is_monotone(
        n in 1usize..6,
        d in 0.01f64..1.0,
        alpha in 0.1f64..3.0,
        eps in 0.2f64..3.0,
        k1 in 0.1f64..5.0,
    ) {
        let (g, a) = build_grid(&GridSpec::line(1.0, n), &TensorSpec::Isotropic(d)).unwrap();
        let al = ScalarField::constant(&g, alpha);
        let lin = linearize(&al, &LinearizationPoint::new(ScalarField::constant(&g, eps)).unwrap(), 0.6, &g, &a).unwrap();
        let cost = PdeCostSpec::uniform(&g, k1, 0.0).unwrap();
        let path = integrate_riccati(&lin, &cost, 1.0, 1e-2).unwrap();
        for w in path.states.windows(2) {
            let diff = &w[1].p - &w[0].p;
            let min = diff.symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-10, "P decreased by {min}");
        }
    }
}

/// The closed-loop LQR cost is no larger than the cost with `v ≡ 0`.
#[test]
fn lqr_beats_zero_shifted_control() {
    let (g, a) = build_grid(&GridSpec::line(1.0, 6), &TensorSpec::Isotropic(0.1)).unwrap();
    let al = ScalarField::from_fn(&g, |x| 0.5 + x[0]);
    let lin = linearize(&al, &LinearizationPoint::new(ScalarField::constant(&g, 1.0)).unwrap(), 0.6, &g, &a).unwrap();
    let cost = PdeCostSpec::uniform(&g, 0.5, 1.0).unwrap();
    let th0 = ScalarField::from_fn(&g, |x| 0.2 + x[0]);
    let path = integrate_riccati(&lin, &cost, 1.0, 1e-3).unwrap();
    let closed = simulate_linearized_closed_loop(&lin, &path, &cost, &g, &th0, 1e-3).unwrap();
    // a vanishing gain gives v ≈ 0
    let zero_cost = PdeCostSpec::uniform(&g, 1e12, 1.0).unwrap();
    let open = simulate_linearized_closed_loop(&lin, &path, &zero_cost, &g, &th0, 1e-3).unwrap();
    let open_cost = eval_cost_jt3(&open.theta, &open.v, &cost, &g, 1e-3).unwrap();
    assert!(closed.cost < open_cost, "{} vs {}", closed.cost, open_cost);
}

/// Discrete adjoint gradient against central differences of the discrete cost.
#[test]
fn discrete_gradient_matches_finite_differences() {
    let (g, a) = build_grid(&GridSpec::line(1.0, 5), &TensorSpec::Isotropic(0.05)).unwrap();
    let alpha = AlphaField::Static(ScalarField::from_fn(&g, |x| 1.0 + x[0]));
    let cost = PdeCostSpec::uniform(&g, 0.3, 1.0).unwrap();
    let th0 = ScalarField::from_fn(&g, |x| 0.3 + 0.4 * x[0]);
    let (t_end, dt, theta1) = (0.2, 0.02, 0.6);
    let steps = 11;
    let u: Vec<ScalarField> = (0..steps)
        .map(|k| ScalarField::from_fn(&g, |x| 0.2 + 0.5 * x[0] * (k as f64 / 10.0)))
        .collect();
    let j = |u: &[ScalarField]| {
        let th = simulate_controlled_pde(&th0, &g, &a, &alpha, u, theta1, t_end, dt).unwrap();
        eval_cost_jt3(&th, u, &cost, &g, dt).unwrap()
    };
    let th = simulate_controlled_pde(&th0, &g, &a, &alpha, &u, theta1, t_end, dt).unwrap();
    let p = solve_adjoint_pde(&th, &u, &alpha, &cost, &g, &a, theta1, t_end, dt).unwrap();
    let grad = control_gradient(&th, &u, &p, &alpha, &cost, &g, theta1, t_end, dt).unwrap();
    let h = 1e-6;
    for k in [0, 1, 5, 10] {
        for i in [0, 2, 4] {
            let mut up = u.clone();
            let mut dn = u.clone();
            let mut vu = up[k].values().to_vec();
            vu[i] += h;
            up[k] = vu.into();
            let mut vd = dn[k].values().to_vec();
            vd[i] -= h;
            dn[k] = vd.into();
            let fd = (j(&up) - j(&dn)) / (2.0 * h);
            let an = grad[k][i];
            assert!((fd - an).abs() <= 1e-6 * (1.0 + fd.abs()), "k={k} i={i}: fd {fd} vs adjoint {an}");
        }
    }
}
