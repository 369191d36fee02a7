//! Search for the slot partitioning factor that maximizes the JSP or
//! minimizes the peak age.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoi::{paoi_np_closed_form, paoi_p_closed_form};
use crate::error::{Error, Result};
use crate::jsp::{jsp_lower_bound, jsp_monte_carlo, jsp_upper_bound, select_regime};
use crate::model::NetworkConfig;
use crate::quadrature::QuadratureSpec;

/// Seed of the short Monte Carlo run that picks the harvester regime.
pub const REGIME_SEED: u64 = 0;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    MaxJspLower,
    MaxJspUpper,
    MaxJspMonteCarlo { trials: u64, seed: u64 },
    MinPaoiNpUpper,
    MinPaoiPUpper,
}

impl ObjectiveKind {
    pub fn maximizes(&self) -> bool {
        !matches!(self, ObjectiveKind::MinPaoiNpUpper | ObjectiveKind::MinPaoiPUpper)
    }
}

/// An objective over `xi` with every other parameter taken from `cfg`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiObjective {
    pub kind: ObjectiveKind,
    pub cfg: NetworkConfig,
    pub spec: QuadratureSpec,
}

impl XiObjective {
    pub fn new(kind: ObjectiveKind, cfg: NetworkConfig) -> Self {
        XiObjective {
            kind,
            cfg,
            spec: QuadratureSpec::default(),
        }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("xi must lie in (0, 1), got {xi}")));
    }
    Ok(())
}

/// Raw objective value at `xi`: a probability for JSP kinds, slots for
/// peak-age kinds (which take the lower bound as the success probability).
pub fn evaluate_objective(obj: &XiObjective, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let cfg = obj.cfg.with_xi(xi);
    let regime = select_regime(&cfg, REGIME_SEED)?;
    let lower = || jsp_lower_bound(&cfg, regime, &obj.spec).map(|e| e.value);
    match obj.kind {
        ObjectiveKind::MaxJspLower => lower(),
        ObjectiveKind::MaxJspUpper => jsp_upper_bound(&cfg, regime, &obj.spec).map(|e| e.value),
        ObjectiveKind::MaxJspMonteCarlo { trials, seed } => jsp_monte_carlo(&cfg, trials, seed).map(|e| e.value),
        ObjectiveKind::MinPaoiNpUpper => paoi_np_closed_form(lower()?, cfg.p_a),
        ObjectiveKind::MinPaoiPUpper => paoi_p_closed_form(lower()?, cfg.p_a),
    }
}

/// Objective mapped so that larger is better; an infinite age scores `-inf`.
pub fn objective_score(obj: &XiObjective, xi: f64) -> Result<f64> {
    match evaluate_objective(obj, xi) {
        Ok(v) if obj.kind.maximizes() => Ok(v),
        Ok(v) => Ok(-v),
        Err(Error::InfiniteAge { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarOptimum {
    pub x: f64,
    /// Score at `x` (larger is better).
    pub score: f64,
    /// Coarse grid as `(x, score)` pairs.
    pub grid: Vec<(f64, f64)>,
    pub evaluations: usize,
}

/// Coarse grid points `step, 2 step, ...` up to `1 - step`.
pub fn xi_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step + 1e-9).floor() as usize;
    (1..n)
        .map(|i| i as f64 * step)
        .filter(|&x| x <= 1.0 - step + 1e-12)
        .collect()
}

/// Maximizes `score` over `(0, 1)`: a grid scan with spacing `grid_step`,
/// then golden-section search within one step of the best grid point down to
/// width `refine_tol`. Returns the best point evaluated, so the result is
/// never worse than the grid optimum.
pub fn optimize_scalar<F>(score: F, grid_step: f64, refine_tol: f64) -> Result<ScalarOptimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Domain(format!("grid_step must lie in (0, 0.1], got {grid_step}")));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::Domain(format!("refine_tol must be > 0, got {refine_tol}")));
    }
    let xs = xi_grid(grid_step);
    let scores: Vec<f64> = xs.par_iter().map(|&x| score(x)).collect::<Result<_>>()?;
    let grid: Vec<(f64, f64)> = xs.iter().copied().zip(scores.iter().copied()).collect();
    let (mut best_x, mut best) = grid[0];
    for &(x, s) in &grid[1..] {
        if s > best {
            best_x = x;
            best = s;
        }
    }
    let lowest = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if !(best > lowest) {
        return Err(Error::DegenerateObjective(format!(
            "objective is flat ({best}) across {} grid points",
            grid.len()
        )));
    }
    let mut evaluations = grid.len();
    let edge = 1e-9;
    let mut a = (best_x - grid_step).max(edge);
    let mut b = (best_x + grid_step).min(1.0 - edge);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = score(c)?;
    let mut fd = score(d)?;
    evaluations += 2;
    let mut consider = |x: f64, s: f64| {
        if s > best {
            best = s;
            best_x = x;
        }
    };
    consider(c, fc);
    consider(d, fd);
    while b - a > refine_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = score(c)?;
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = score(d)?;
            consider(d, fd);
        }
        evaluations += 1;
    }
    Ok(ScalarOptimum {
        x: best_x,
        score: best,
        grid,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiOptimum {
    pub xi_star: f64,
    /// Raw objective value at `xi_star`.
    pub value: f64,
    pub evaluations: usize,
}

/// Optimal slot partitioning factor for `obj`.
pub fn optimize_xi(obj: &XiObjective, grid_step: f64, refine_tol: f64) -> Result<XiOptimum> {
    let opt = optimize_scalar(|xi| objective_score(obj, xi), grid_step, refine_tol)?;
    let value = if obj.kind.maximizes() { opt.score } else { -opt.score };
    Ok(XiOptimum {
        xi_star: opt.x,
        value,
        evaluations: opt.evaluations,
    })
}
