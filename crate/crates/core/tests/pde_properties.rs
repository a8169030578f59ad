use anthracnose::pde::{
    assemble_operator, bound_constants, build_grid, integrate_pde, step_implicit, verify_bounds, GridSpec, Reaction,
    ScalarField, TensorSpec,
};
use proptest::prelude::*;

fn tensor() -> impl Strategy<Value = TensorSpec> {
    prop_oneof![
        (0.01f64..2.0).prop_map(TensorSpec::Isotropic),
        (0.01f64..2.0, 0.01f64..2.0).prop_map(|(a, b)| TensorSpec::Diagonal(vec![a, b])),
        (0.1f64..2.0, 0.1f64..2.0, -0.9f64..0.9).prop_map(|(a, b, r)| {
            let c = r * (a * b).sqrt();
            TensorSpec::Full([[a, c], [c, b]])
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn implicit_system_is_m_matrix_and_positive(
        nx in 1usize..8, ny in 1usize..8,
        lx in 0.5f64..3.0, ly in 0.5f64..3.0,
        a in tensor(),
        alpha in prop::collection::vec(0.0f64..3.0, 64),
        u in prop::collection::vec(0.0f64..1.0, 64),
        theta in prop::collection::vec(0.0f64..2.0, 64),
        theta1 in 0.0f64..0.95,
        dt in 1e-4f64..1.0,
    ) {
        let (g, d) = build_grid(&GridSpec::rectangle(lx, ly, nx, ny), &a).unwrap();
        let n = g.cell_count();
        let alpha = ScalarField::new(alpha[..n].to_vec());
        let u = ScalarField::new(u[..n].to_vec());
        let l = assemble_operator(&g, &d, &alpha, &u, theta1, Reaction::Full).unwrap();
        prop_assert!(l.matrix().is_symmetric(1e-12));
        let sys = l.matrix().shifted(1.0, dt);
        prop_assert!(sys.has_m_matrix_sign_pattern());
        let th = ScalarField::new(theta[..n].to_vec());
        let next = step_implicit(&th, &l, &alpha, dt).unwrap();
        prop_assert!(next.min() >= -1e-12);
    }

    #[test]
    fn pure_diffusion_conserves_mass(
        n in 2usize..40,
        d in 0.01f64..1.0,
        theta in prop::collection::vec(0.0f64..1.0, 40),
        dt in 1e-3f64..0.5,
    ) {
        let (g, a) = build_grid(&GridSpec::line(1.0, n), &TensorSpec::Isotropic(d)).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &zero, &zero, 0.6, Reaction::Full).unwrap();
        let th = ScalarField::new(theta[..n].to_vec());
        let next = step_implicit(&th, &l, &zero, dt).unwrap();
        prop_assert!((next.integral(&g) - th.integral(&g)).abs() < 1e-10);
        prop_assert!(next.max() <= th.max() + 1e-12 && next.min() >= th.min() - 1e-12);
    }

    #[test]
    fn bounds_hold_for_constant_coefficients(
        alpha in 0.1f64..3.0,
        u in 0.0f64..1.0,
        theta1 in 0.05f64..0.9,
        d in 0.001f64..0.5,
        theta in prop::collection::vec(0.0f64..1.5, 16),
    ) {
        let (g, a) = build_grid(&GridSpec::line(1.0, 16), &TensorSpec::Isotropic(d)).unwrap();
        let al = ScalarField::constant(&g, alpha);
        let uf = ScalarField::constant(&g, u);
        let th0 = ScalarField::new(theta);
        let l = assemble_operator(&g, &a, &al, &uf, theta1, Reaction::Full).unwrap();
        let path = integrate_pde(&th0, &l, &al, 1.0, 1e-2).unwrap();
        let bc = bound_constants(&th0, &uf, theta1).unwrap();
        let rep = verify_bounds(&path, &bc.rho, &al, bc.m, bc.big_m);
        prop_assert!(rep.holds(1e-10), "{rep:?}");
    }
}
