use log::debug;
use nalgebra::{DMatrix, DVector};

use super::{eval_cost_jt3, time_grid, AlphaField, Linearization, PdeCostSpec};
use crate::error::{Error, Result};
use crate::pde::{assemble_operator, DiffusionField, ImplicitStepper, Reaction, ScalarField, SpatialGrid};

/// Dense `P` limits Riccati runs to this many cells.
pub const MAX_RICCATI_CELLS: usize = 256;

const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiState {
    pub t: f64,
    pub p: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiDiagnostics {
    pub t: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Forward solution of `Ṗ = £₁P + P£₁ − P B K⁻¹ B P + I`, `P(0) = diag(k₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiPath {
    pub states: Vec<RiccatiState>,
}

impl RiccatiPath {
    pub fn horizon(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    /// `P(s)` by linear interpolation between samples, clamped to the path.
    pub fn at(&self, s: f64) -> DMatrix<f64> {
        let st = &self.states;
        if s <= st[0].t {
            return st[0].p.clone();
        }
        if s >= self.horizon() {
            return st[st.len() - 1].p.clone();
        }
        let i = st.partition_point(|x| x.t <= s) - 1;
        let w = (s - st[i].t) / (st[i + 1].t - st[i].t);
        &st[i].p * (1.0 - w) + &st[i + 1].p * w
    }

    pub fn diagnostics(&self) -> Vec<RiccatiDiagnostics> {
        self.states
            .iter()
            .map(|s| {
                let eig = s.p.clone().symmetric_eigen().eigenvalues;
                RiccatiDiagnostics {
                    t: s.t,
                    trace: s.p.trace(),
                    min_eigenvalue: eig.min(),
                    max_eigenvalue: eig.max(),
                }
            })
            .collect()
    }
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let t = p.transpose();
    *p += t;
    *p *= 0.5;
}

/// RK4 with automatic substepping; `P` is symmetrized after every substep.
pub fn integrate_riccati(lin: &Linearization, cost: &PdeCostSpec, t_end: f64, dt: f64) -> Result<RiccatiPath> {
    let n = lin.l1.dim();
    if n > MAX_RICCATI_CELLS {
        return Err(Error::param(
            "grid",
            format!("{n} cells exceed the dense Riccati limit of {MAX_RICCATI_CELLS}"),
        ));
    }
    cost.validate(n)?;
    if !lin.l1.matrix().is_symmetric(1e-12) {
        return Err(Error::param("operator", "Riccati integration requires a symmetric linearized operator"));
    }
    let (times, h) = time_grid(t_end, dt)?;
    let a: DMatrix<f64> = -lin.l1.matrix().to_dense();
    let s = DVector::from_iterator(n, (0..n).map(|i| lin.b[i] * lin.b[i] / cost.k1[i]));
    let gersh = (0..n).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s_max = s.max();
    let rhs = |p: &DMatrix<f64>| -> DMatrix<f64> {
        let ap = &a * p;
        let mut ps = p.clone();
        for j in 0..n {
            ps.column_mut(j).scale_mut(s[j]);
        }
        let mut out = &ap + ap.transpose() - &ps * p;
        for i in 0..n {
            out[(i, i)] += 1.0;
        }
        out
    };
    let mut p = DMatrix::from_diagonal(&DVector::from_iterator(n, cost.k2.iter().copied()));
    let mut states = vec![RiccatiState { t: 0.0, p: p.clone() }];
    for &t_next in &times[1..] {
        let rate = 2.0 * gersh + 2.0 * s_max * p.norm();
        let sub = ((h * rate / 2.5).ceil() as usize).max(1);
        let hs = h / sub as f64;
        for _ in 0..sub {
            let k1 = rhs(&p);
            let k2 = rhs(&(&p + &k1 * (0.5 * hs)));
            let k3 = rhs(&(&p + &k2 * (0.5 * hs)));
            let k4 = rhs(&(&p + &k3 * hs));
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (hs / 6.0);
            symmetrize(&mut p);
        }
        let norm = p.norm();
        if !(norm <= BLOW_UP) {
            return Err(Error::RiccatiBlowUp { t: t_next, norm });
        }
        states.push(RiccatiState { t: t_next, p: p.clone() });
    }
    Ok(RiccatiPath { states })
}

/// Feedback before and after clamping to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackEval {
    pub raw: ScalarField,
    pub clamped: ScalarField,
    pub clamped_fraction: f64,
}

/// `u(t) = K⁻¹ B P(T − t) θ(t) + 1/(εθ₁)`, clamped to `[0, 1]`.
pub fn riccati_feedback(
    path: &RiccatiPath,
    theta: &ScalarField,
    t: f64,
    lin: &Linearization,
    cost: &PdeCostSpec,
) -> Result<FeedbackEval> {
    let n = lin.b.len();
    theta.check_len(n)?;
    let p = path.at(path.horizon() - t);
    let pt = &p * DVector::from_column_slice(theta);
    let offset = lin.control_offset();
    let raw: Vec<f64> = (0..n).map(|i| lin.b[i] * pt[i] / cost.k1[i] + offset[i]).collect();
    let clamped: Vec<f64> = raw.iter().map(|u| u.clamp(0.0, 1.0)).collect();
    let hits = raw.iter().filter(|u| !(0.0..=1.0).contains(*u)).count();
    let clamped_fraction = hits as f64 / n as f64;
    if hits > 0 {
        debug!("riccati feedback clamped in {hits}/{n} cells at t = {t}");
    }
    Ok(FeedbackEval {
        raw: raw.into(),
        clamped: clamped.into(),
        clamped_fraction,
    })
}

/// Closed loop of the linearized system in the shifted control `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClosedLoop {
    pub times: Vec<f64>,
    pub theta: Vec<ScalarField>,
    pub v: Vec<ScalarField>,
    /// `∫∫ (θ² + k₁v²) + ∫ k₂θ(T)²`.
    pub cost: f64,
}

/// Implicit Euler on `θ' = −(L₁ + B K⁻¹ B P(T−t)) θ`.
pub fn simulate_linearized_closed_loop(
    lin: &Linearization,
    path: &RiccatiPath,
    cost: &PdeCostSpec,
    grid: &SpatialGrid,
    theta0: &ScalarField,
    dt: f64,
) -> Result<LinearClosedLoop> {
    let n = lin.b.len();
    theta0.check_len(n)?;
    let t_end = path.horizon();
    let (times, h) = time_grid(t_end, dt)?;
    let l1 = lin.l1.matrix().to_dense();
    let gain = |t: f64| -> DMatrix<f64> {
        let mut k = path.at(t_end - t);
        for i in 0..n {
            k.row_mut(i).scale_mut(lin.b[i] / cost.k1[i]);
        }
        k
    };
    let mut theta = vec![theta0.clone()];
    let v_of = |t: f64, th: &ScalarField| -> ScalarField {
        let v = gain(t) * DVector::from_column_slice(th);
        v.as_slice().to_vec().into()
    };
    let mut v = vec![v_of(0.0, theta0)];
    for &t in &times[1..] {
        let k = gain(t);
        let mut m = &l1 * h;
        for i in 0..n {
            m[(i, i)] += 1.0;
            for j in 0..n {
                m[(i, j)] += h * lin.b[i] * k[(i, j)];
            }
        }
        let prev = DVector::from_column_slice(theta.last().expect("nonempty"));
        let next = m.lu().solve(&prev).ok_or(Error::Singular("closed-loop step matrix"))?;
        let next: ScalarField = next.as_slice().to_vec().into();
        v.push(v_of(t, &next));
        theta.push(next);
    }
    let cost_value = eval_cost_jt3(&theta, &v, cost, grid, h)?;
    Ok(LinearClosedLoop {
        times,
        theta,
        v,
        cost: cost_value,
    })
}

/// Nonlinear model driven by the clamped Riccati feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiPdeRun {
    pub times: Vec<f64>,
    pub theta: Vec<ScalarField>,
    pub u: Vec<ScalarField>,
    pub clamped_fraction: Vec<f64>,
    pub cost: f64,
}

/// Steps the full model with `u` evaluated from the previous state.
#[allow(clippy::too_many_arguments)]
pub fn simulate_riccati_pde(
    theta0: &ScalarField,
    grid: &SpatialGrid,
    a: &DiffusionField,
    alpha: &AlphaField,
    lin: &Linearization,
    path: &RiccatiPath,
    cost: &PdeCostSpec,
    dt: f64,
) -> Result<RiccatiPdeRun> {
    let (times, h) = time_grid(path.horizon(), dt)?;
    let first = riccati_feedback(path, theta0, 0.0, lin, cost)?;
    let mut theta = vec![theta0.clone()];
    let mut u = vec![first.clamped];
    let mut clamped_fraction = vec![first.clamped_fraction];
    for &t in &times[1..] {
        let al = alpha.at(t);
        let l = assemble_operator(grid, a, &al, u.last().expect("nonempty"), lin.theta1, Reaction::Full)?;
        let next = ImplicitStepper::new(&l, h)?.step(theta.last().expect("nonempty"), &al)?;
        let fb = riccati_feedback(path, &next, t, lin, cost)?;
        theta.push(next);
        u.push(fb.clamped);
        clamped_fraction.push(fb.clamped_fraction);
    }
    let cost_value = eval_cost_jt3(&theta, &u, cost, grid, h)?;
    Ok(RiccatiPdeRun {
        times,
        theta,
        u,
        clamped_fraction,
        cost: cost_value,
    })
}
