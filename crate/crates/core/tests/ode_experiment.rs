use anthracnose::host::{ControlSignal, ModelParams, Rate, SeasonalForcing};
use anthracnose::ode_control::{cost_of_control, shoot_p0, CostSpec, TerminalCost};

fn setup() -> (ModelParams, CostSpec) {
    let alpha = Rate::Seasonal(SeasonalForcing::new(4.0, 0.75, 0.2).unwrap());
    (
        ModelParams::new(0.6, 0.5, 1.0, alpha),
        CostSpec::new(1.0, TerminalCost::Linear(1.0)).unwrap(),
    )
}

#[test]
fn optimal_control_beats_constant_controls() {
    let (p, c) = setup();
    for theta0 in [0.2, 0.5] {
        let sol = shoot_p0(theta0, &p, &c, 1.0, 1e-3, 1e-10).unwrap();
        assert!(sol.residual.abs() < 1e-8);
        let j0 = cost_of_control(&p, &c, &ControlSignal::constant(0.0, 0.0, 1.0).unwrap(), theta0, 1.0, 1e-3).unwrap();
        let j1 = cost_of_control(&p, &c, &ControlSignal::constant(1.0, 0.0, 1.0).unwrap(), theta0, 1.0, 1e-3).unwrap();
        assert!(sol.cost <= j0.min(j1), "J* = {}, J0 = {j0}, J1 = {j1}", sol.cost);
        // the optimal path re-evaluated as an open-loop control gives the same cost
        let again = cost_of_control(&p, &c, &sol.control, theta0, 1.0, 1e-3).unwrap();
        assert!((again - sol.cost).abs() < 1e-3);
    }
}
