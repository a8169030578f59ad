//! Mode dispatch and output files.
//!
//! Every run writes `costs.csv` (`strategy,cost` with rows `controlled`,
//! `u0`, `u1`) and `report.json`. Per-mode files:
//!
//! | mode | file | columns |
//! |------|------|---------|
//! | `simulate-ode` | `trajectory.csv` | `t, theta, v, v_r, u, alpha` |
//! | `optimize-ode`, `forecast` | `trajectory.csv` | `t, theta, v, v_r, u, p, alpha` |
//! | | `baseline.csv` | `t, theta_u0, theta_u1` |
//! | `forecast` | `forecast.csv` | `t, T, W, H, alpha` |
//! | `simulate-pde` | `snapshots.csv` | `t, cell, value` |
//! | | `summary.csv` | `t, mean, min, max` |
//! | | `final.csv`, `equilibrium.csv` | `cell, x[, y], value` |
//! | `riccati-pde` | `snapshots.csv`, `control.csv` | `t, cell, value` |
//! | | `summary.csv` | `t, mean_theta, mean_u, clamped_fraction` |
//! | | `riccati.csv` | `t, trace, min_eigenvalue, max_eigenvalue` |
//! | `sweep-pde` | `snapshots.csv`, `control.csv`, `adjoint.csv` | `t, cell, value` |
//! | | `summary.csv` | `t, mean_theta, mean_u` |
//! | | `convergence.csv` | `iteration, cost` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use anthracnose::host::{check_region, integrate_ode, ControlSignal, HostState, ModelParams};
use anthracnose::io::{fmt_num, write_field_csv, write_path_csv, write_riccati_diagnostics, write_table};
use anthracnose::ode_control::{cost_of_control, shoot_p0, simulate_theta, CostSpec};
use anthracnose::pde::{
    assemble_operator, bound_constants, principal_eigenvalue, solve_equilibrium, verify_bounds, FieldPath, Reaction,
    ScalarField,
};
use anthracnose::pde_control::{
    eval_cost_jt3, forward_backward_sweep, integrate_riccati, linearize, simulate_controlled_pde,
    simulate_linearized_closed_loop, simulate_riccati_pde, AlphaField,
};

use crate::config::{Mode, OdeSetup, PdeSetup, Prepared, ScenarioConfig, Setup};
use crate::error::CliError;

/// Shooting tolerance on `|p(T) − f′(θ(T))|`.
pub const SHOOTING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostTriple {
    pub controlled: f64,
    pub u0: f64,
    pub u1: f64,
}

impl CostTriple {
    pub fn dominates(&self, tol: f64) -> bool {
        self.controlled <= self.u0.min(self.u1) + tol
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub costs: CostTriple,
    pub diagnostics: BTreeMap<String, Value>,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

fn io_err(e: anthracnose::Error) -> CliError {
    match e {
        anthracnose::Error::Io(m) => CliError::Io(m),
        other => CliError::Io(other.to_string()),
    }
}

/// Runs a validated scenario and writes its outputs into `out_dir`.
pub fn execute(prepared: &Prepared, out_dir: &Path) -> Result<RunReport, CliError> {
    let cfg = &prepared.config;
    let mut out = Outputs::new(out_dir)?;
    let mut diag = BTreeMap::new();
    info!("running `{}` ({:?}) into {}", cfg.name, cfg.mode, out_dir.display());
    let costs = match &prepared.setup {
        Setup::Ode(s) => run_ode(cfg, s, &mut out, &mut diag)?,
        Setup::Pde(s) => run_pde(cfg, s, &mut out, &mut diag)?,
    };
    let mut body = String::from("strategy,cost\n");
    for (name, v) in [("controlled", costs.controlled), ("u0", costs.u0), ("u1", costs.u1)] {
        let _ = writeln!(body, "{name},{}", fmt_num(v));
    }
    out.text("costs.csv", &body)?;
    out.files.push("report.json".into());
    let report = RunReport {
        scenario: cfg.clone(),
        costs,
        diagnostics: diag,
        files: out.files.clone(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(out.dir.join("report.json"), json + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", out.dir.display())))?;
    Ok(report)
}

fn constant_costs(
    params: &ModelParams,
    cost: &CostSpec,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<(f64, f64), CliError> {
    let c0 = ControlSignal::constant(0.0, 0.0, t_end)?;
    let c1 = ControlSignal::constant(1.0, 0.0, t_end)?;
    Ok((
        cost_of_control(params, cost, &c0, theta0, t_end, dt)?,
        cost_of_control(params, cost, &c1, theta0, t_end, dt)?,
    ))
}

fn region_diagnostics(states: &[HostState], params: &ModelParams, diag: &mut BTreeMap<String, Value>) {
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    for s in states {
        for c in check_region(s, params).constraints {
            let e = worst.entry(c.name).or_insert(f64::INFINITY);
            *e = e.min(c.slack);
        }
    }
    diag.insert("min_constraint_slack".into(), json!(worst));
}

fn run_ode(
    cfg: &ScenarioConfig,
    s: &OdeSetup,
    out: &mut Outputs,
    diag: &mut BTreeMap<String, Value>,
) -> Result<CostTriple, CliError> {
    let (t_end, dt) = (cfg.t_end, cfg.dt);
    let (u0, u1) = constant_costs(&s.params, &s.cost, s.x0.theta, t_end, dt)?;
    let alpha_at = |t: f64, th: f64| s.params.alpha.eval(t, th);
    let controlled = if cfg.mode == Mode::SimulateOde {
        let traj = integrate_ode(&s.params, &s.control, s.x0, 0.0, t_end, dt)?;
        let rows = traj.times.iter().zip(&traj.states).map(|(&t, x)| {
            vec![t, x.theta, x.v, x.v_r, s.control.eval(t), alpha_at(t, x.theta)]
        });
        write_table(&out.path("trajectory.csv"), &["t", "theta", "v", "v_r", "u", "alpha"], rows).map_err(io_err)?;
        region_diagnostics(&traj.states, &s.params, diag);
        diag.insert("theta_final".into(), json!(traj.last().theta));
        cost_of_control(&s.params, &s.cost, &s.control, s.x0.theta, t_end, dt)?
    } else {
        let sol = shoot_p0(s.x0.theta, &s.params, &s.cost, t_end, dt, SHOOTING_TOL)?;
        let traj = integrate_ode(&s.params, &sol.control, s.x0, 0.0, t_end, dt)?;
        let rows = (0..sol.times.len()).map(|i| {
            let x = traj.states[i];
            vec![
                sol.times[i],
                sol.theta_path[i],
                x.v,
                x.v_r,
                sol.control.values()[i],
                sol.adjoint_path[i],
                sol.alpha_path[i],
            ]
        });
        write_table(
            &out.path("trajectory.csv"),
            &["t", "theta", "v", "v_r", "u", "p", "alpha"],
            rows,
        )
        .map_err(io_err)?;
        let c0 = ControlSignal::constant(0.0, 0.0, t_end)?;
        let c1 = ControlSignal::constant(1.0, 0.0, t_end)?;
        let (times, th0) = simulate_theta(&s.params, &c0, s.x0.theta, t_end, dt)?;
        let (_, th1) = simulate_theta(&s.params, &c1, s.x0.theta, t_end, dt)?;
        let rows = (0..times.len()).map(|i| vec![times[i], th0[i], th1[i]]);
        write_table(&out.path("baseline.csv"), &["t", "theta_u0", "theta_u1"], rows).map_err(io_err)?;
        region_diagnostics(&traj.states, &s.params, diag);
        diag.insert("p0".into(), json!(sol.p0));
        diag.insert("shooting_residual".into(), json!(sol.residual));
        diag.insert("shooting_iterations".into(), json!(sol.iterations));
        diag.insert("theta_final".into(), json!(sol.theta_path.last()));
        diag.insert("theta_final_u0".into(), json!(th0.last()));
        let u = sol.control.values();
        let (imax, umax) = u
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        diag.insert("u_max".into(), json!(umax));
        diag.insert("u_argmax_t".into(), json!(sol.times[imax]));
        if let (Mode::Forecast, Some(weather)) = (cfg.mode, &s.weather) {
            let rows = weather
                .iter()
                .map(|w| vec![w.t, w.temperature, w.wetness, w.humidity, alpha_at(w.t, 0.0)]);
            write_table(&out.path("forecast.csv"), &["t", "T", "W", "H", "alpha"], rows).map_err(io_err)?;
        }
        sol.cost
    };
    let costs = CostTriple { controlled, u0, u1 };
    if cfg.mode != Mode::SimulateOde {
        diag.insert("dominates_constant_controls".into(), json!(costs.dominates(1e-12)));
    }
    Ok(costs)
}

/// Indices `round(i·last/count)` for `i = 0..=count`, deduplicated.
fn snapshot_indices(len: usize, count: usize) -> Vec<usize> {
    let last = len - 1;
    let mut idx: Vec<usize> = (0..=count)
        .map(|i| ((i as f64) * last as f64 / count as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn write_snapshots(
    out: &mut Outputs,
    name: &str,
    times: &[f64],
    fields: &[ScalarField],
    idx: &[usize],
) -> Result<(), CliError> {
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let f: Vec<ScalarField> = idx.iter().map(|&i| fields[i].clone()).collect();
    write_path_csv(&out.path(name), &t, &f).map_err(io_err)
}

fn mean(f: &ScalarField) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

fn constant_pde_costs(s: &PdeSetup, t_end: f64, dt: f64) -> Result<(f64, f64), CliError> {
    let cost_for = |value: f64| -> Result<f64, CliError> {
        let (steps, h) = anthracnose::integrate::step_count(0.0, t_end, dt)?;
        let u = vec![ScalarField::constant(&s.grid, value); steps + 1];
        let th = simulate_controlled_pde(&s.theta0, &s.grid, &s.diffusion, &s.alpha, &u, s.theta1, t_end, dt)?;
        Ok(eval_cost_jt3(&th, &u, &s.cost, &s.grid, h)?)
    };
    Ok((cost_for(0.0)?, cost_for(1.0)?))
}

fn run_pde(
    cfg: &ScenarioConfig,
    s: &PdeSetup,
    out: &mut Outputs,
    diag: &mut BTreeMap<String, Value>,
) -> Result<CostTriple, CliError> {
    let (t_end, dt) = (cfg.t_end, cfg.dt);
    let (u0, u1) = constant_pde_costs(s, t_end, dt)?;
    diag.insert("cells".into(), json!(s.grid.cell_count()));
    let controlled = match cfg.mode {
        Mode::SimulatePde => simulate_pde(s, t_end, dt, out, diag)?,
        Mode::RiccatiPde => riccati_pde(s, t_end, dt, out, diag)?,
        Mode::SweepPde => sweep_pde(s, t_end, dt, out, diag)?,
        _ => unreachable!("ODE modes are dispatched separately"),
    };
    Ok(CostTriple { controlled, u0, u1 })
}

fn simulate_pde(
    s: &PdeSetup,
    t_end: f64,
    dt: f64,
    out: &mut Outputs,
    diag: &mut BTreeMap<String, Value>,
) -> Result<f64, CliError> {
    let (steps, h) = anthracnose::integrate::step_count(0.0, t_end, dt)?;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let u = vec![s.u.clone(); steps + 1];
    let theta = simulate_controlled_pde(&s.theta0, &s.grid, &s.diffusion, &s.alpha, &u, s.theta1, t_end, dt)?;
    let idx = snapshot_indices(times.len(), s.snapshots);
    write_snapshots(out, "snapshots.csv", &times, &theta, &idx)?;
    let rows = times.iter().zip(&theta).map(|(&t, f)| vec![t, mean(f), f.min(), f.max()]);
    write_table(&out.path("summary.csv"), &["t", "mean", "min", "max"], rows).map_err(io_err)?;
    let last = theta.last().expect("nonempty");
    write_field_csv(&out.path("final.csv"), &s.grid, last).map_err(io_err)?;
    if let AlphaField::Static(alpha) = &s.alpha {
        let l = assemble_operator(&s.grid, &s.diffusion, alpha, &s.u, s.theta1, Reaction::Full)?;
        let eig = principal_eigenvalue(&l)?;
        diag.insert("principal_eigenvalue".into(), json!(eig.value));
        diag.insert("asymptotically_stable".into(), json!(eig.asymptotically_stable()));
        if alpha.iter().any(|&a| a > 0.0) {
            let eq = solve_equilibrium(&l, alpha)?;
            diag.insert("equilibrium_distance".into(), json!(last.max_abs_diff(&eq)));
            write_field_csv(&out.path("equilibrium.csv"), &s.grid, &eq).map_err(io_err)?;
        }
        let bc = bound_constants(&s.theta0, &s.u, s.theta1)?;
        let path = FieldPath {
            times: times.clone(),
            fields: theta.clone(),
        };
        let rep = verify_bounds(&path, &bc.rho, alpha, bc.m, bc.big_m);
        diag.insert(
            "bounds".into(),
            json!({
                "m": rep.m,
                "M": rep.big_m,
                "worst_lower_slack": rep.worst_lower_slack,
                "worst_upper_slack": rep.worst_upper_slack,
                "hold": rep.holds(1e-8),
            }),
        );
    }
    let (_, h) = anthracnose::integrate::step_count(0.0, t_end, dt)?;
    Ok(eval_cost_jt3(&theta, &u, &s.cost, &s.grid, h)?)
}

fn riccati_pde(
    s: &PdeSetup,
    t_end: f64,
    dt: f64,
    out: &mut Outputs,
    diag: &mut BTreeMap<String, Value>,
) -> Result<f64, CliError> {
    let eps = s.epsilon.as_ref().expect("validated at parse time");
    let lin = linearize(&s.alpha.at(0.0), eps, s.theta1, &s.grid, &s.diffusion)?;
    let path = integrate_riccati(&lin, &s.cost, t_end, dt)?;
    let run = simulate_riccati_pde(&s.theta0, &s.grid, &s.diffusion, &s.alpha, &lin, &path, &s.cost, dt)?;
    let idx = snapshot_indices(run.times.len(), s.snapshots);
    write_snapshots(out, "snapshots.csv", &run.times, &run.theta, &idx)?;
    write_snapshots(out, "control.csv", &run.times, &run.u, &idx)?;
    let rows = (0..run.times.len()).map(|k| {
        vec![
            run.times[k],
            mean(&run.theta[k]),
            mean(&run.u[k]),
            run.clamped_fraction[k],
        ]
    });
    write_table(
        &out.path("summary.csv"),
        &["t", "mean_theta", "mean_u", "clamped_fraction"],
        rows,
    )
    .map_err(io_err)?;
    write_riccati_diagnostics(&out.path("riccati.csv"), &path.diagnostics()).map_err(io_err)?;
    let lin_loop = simulate_linearized_closed_loop(&lin, &path, &s.cost, &s.grid, &s.theta0, dt)?;
    diag.insert("linearized_cost".into(), json!(lin_loop.cost));
    let clamped = run.clamped_fraction.iter().filter(|&&c| c > 0.0).count();
    diag.insert("clamped_steps".into(), json!(clamped));
    let p_final = path.states.last().expect("nonempty");
    diag.insert("riccati_trace_at_horizon".into(), json!(p_final.p.trace()));
    Ok(run.cost)
}

fn sweep_pde(
    s: &PdeSetup,
    t_end: f64,
    dt: f64,
    out: &mut Outputs,
    diag: &mut BTreeMap<String, Value>,
) -> Result<f64, CliError> {
    let r = forward_backward_sweep(
        &s.theta0,
        &s.grid,
        &s.diffusion,
        &s.alpha,
        &s.cost,
        s.theta1,
        t_end,
        dt,
        &s.sweep,
    )?;
    let idx = snapshot_indices(r.times.len(), s.snapshots);
    write_snapshots(out, "snapshots.csv", &r.times, &r.theta, &idx)?;
    write_snapshots(out, "control.csv", &r.times, &r.u, &idx)?;
    write_snapshots(out, "adjoint.csv", &r.times, &r.p, &idx)?;
    let rows = (0..r.times.len()).map(|k| vec![r.times[k], mean(&r.theta[k]), mean(&r.u[k])]);
    write_table(&out.path("summary.csv"), &["t", "mean_theta", "mean_u"], rows).map_err(io_err)?;
    let rows = r.cost_history.iter().enumerate().map(|(i, &c)| vec![i as f64, c]);
    write_table(&out.path("convergence.csv"), &["iteration", "cost"], rows).map_err(io_err)?;
    diag.insert("sweep_iterations".into(), json!(r.iterations));
    diag.insert("sweep_final_change".into(), json!(r.final_change));
    Ok(r.cost())
}
