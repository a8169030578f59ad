use super::{FieldPath, ScalarField};
use crate::error::{Error, Result};

/// `m = inf θ₀`, `M = max{sup θ₀, sup (1 − θ₁u)}` and `rho = 1/(1 − θ₁u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub m: f64,
    pub big_m: f64,
    pub rho: ScalarField,
}

/// Bounds are taken over the whole grid.
pub fn bound_constants(theta0: &ScalarField, u: &ScalarField, theta1: f64) -> Result<BoundConstants> {
    u.check_len(theta0.len())?;
    let mut rho = Vec::with_capacity(u.len());
    let mut sup_balance = f64::NEG_INFINITY;
    for &ui in u.iter() {
        let d = 1.0 - theta1 * ui;
        if d <= 0.0 {
            return Err(Error::DivisionGuard {
                t: 0.0,
                what: "1 - theta1*u vanished in bound constants",
            });
        }
        sup_balance = sup_balance.max(d);
        rho.push(1.0 / d);
    }
    Ok(BoundConstants {
        m: theta0.min(),
        big_m: theta0.max().max(sup_balance),
        rho: ScalarField::new(rho),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub m: f64,
    pub big_m: f64,
    pub rho: ScalarField,
    /// `min (e^{t·rho·α} θ − m)` over the path.
    pub worst_lower_slack: f64,
    /// `min (M − θ)` over the path.
    pub worst_upper_slack: f64,
    /// `(sample, cell)` where each worst slack occurs.
    pub worst_lower_at: (usize, usize),
    pub worst_upper_at: (usize, usize),
}

impl BoundsReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_lower_slack >= -tol && self.worst_upper_slack >= -tol
    }
}

/// Evaluates both bound inequalities along `path`.
pub fn verify_bounds(path: &FieldPath, rho: &ScalarField, alpha: &ScalarField, m: f64, big_m: f64) -> BoundsReport {
    let mut lower = (f64::INFINITY, (0, 0));
    let mut upper = (f64::INFINITY, (0, 0));
    for (k, (t, field)) in path.times.iter().zip(&path.fields).enumerate() {
        for (i, &th) in field.iter().enumerate() {
            let lo = (t * rho[i] * alpha[i]).exp() * th - m;
            if lo < lower.0 {
                lower = (lo, (k, i));
            }
            let up = big_m - th;
            if up < upper.0 {
                upper = (up, (k, i));
            }
        }
    }
    BoundsReport {
        m,
        big_m,
        rho: rho.clone(),
        worst_lower_slack: lower.0,
        worst_upper_slack: upper.0,
        worst_lower_at: lower.1,
        worst_upper_at: upper.1,
    }
}
