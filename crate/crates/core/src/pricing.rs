//! Interference pricing: a fixed-point iteration on posited interference
//! levels `i_hat` and prices `lambda = df/di`, each step solving the convex
//! best response `min_Q f(Q, i_hat) + lambda^T f_i(Q)`.

use serde::Serialize;

use crate::convexcore::{self, ConvexSubproblem, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{
    cost_gradient_i, interference_map, objective, ConstraintSet, CovariancePoint, InterferenceMap, NetworkInstance,
    UtilitySpec,
};

#[derive(Debug, Clone)]
pub struct PricingOptions {
    pub eps_lambda: f64,
    pub eps_i: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Weight of the new value in `new = (1 - theta) old + theta target`.
    pub damping: f64,
    pub solver: SolverOptions,
    pub record_trace: bool,
}

impl Default for PricingOptions {
    fn default() -> Self {
        Self {
            eps_lambda: 1e-6,
            eps_i: 1e-6,
            max_inner: 200,
            max_outer: 100,
            damping: 1.0,
            solver: SolverOptions::default(),
            record_trace: false,
        }
    }
}

/// The iterated triple.
#[derive(Debug, Clone)]
pub struct PricingState {
    pub lambda: Vec<f64>,
    pub i_hat: Vec<f64>,
    pub q: CovariancePoint,
    pub outer: usize,
    pub inner: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PricingTraceRecord {
    pub outer: usize,
    pub inner: usize,
    /// `f(Q*, f_i(Q*))`.
    pub cost: f64,
    pub i_residual: f64,
    pub lambda_residual: f64,
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Final iterate if converged, otherwise the best one seen.
    pub q: CovariancePoint,
    pub cost: f64,
    pub converged: bool,
    pub state: PricingState,
    /// Step-3 solves performed.
    pub solves: usize,
    pub trace: Vec<PricingTraceRecord>,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    norm(a.iter().zip(b).map(|(x, y)| x - y))
}

fn best_response(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    i_hat: &[f64],
    lambda: &[f64],
    solver: &SolverOptions,
) -> Result<convexcore::SolveResult> {
    let sub = ConvexSubproblem::new(inst, util, cons, i_hat.to_vec()).with_prices(lambda.to_vec());
    let r = convexcore::solve(&sub, solver)?;
    match r.status {
        SolveStatus::Infeasible => Err(Error::Solver("pricing best response reported an empty feasible set".into())),
        _ if r.q.is_none() => Err(Error::Solver("pricing best response returned no point".into())),
        SolveStatus::MaxIter => {
            log::warn!("pricing best response hit the solver iteration cap");
            Ok(r)
        }
        SolveStatus::Optimal => Ok(r),
    }
}

fn check_vectors(root: &InterferenceMap, lambda0: &[f64], i0: &[f64]) -> Result<()> {
    let l = root.len();
    if lambda0.len() != l || i0.len() != l {
        return Err(Error::Dimension(format!(
            "pricing needs {l} prices and interference levels, got {} and {}",
            lambda0.len(),
            i0.len()
        )));
    }
    if lambda0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Validation("initial prices must be finite and non-negative".into()));
    }
    if i0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("initial interference must be finite".into()));
    }
    Ok(())
}

/// Runs the pricing iteration from `(lambda0, i0)`; `i0` is clamped into
/// the root box.
pub fn run_pricing(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    root: &InterferenceMap,
    lambda0: &[f64],
    i0: &[f64],
    opts: &PricingOptions,
) -> Result<PricingResult> {
    check_vectors(root, lambda0, i0)?;
    if !(opts.eps_lambda > 0.0 && opts.eps_i > 0.0) {
        return Err(Error::Validation("pricing tolerances must be positive".into()));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Validation(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let theta = opts.damping;
    let mut lambda = lambda0.to_vec();
    let mut i_hat = root.project(i0);
    let mut trace = Vec::new();
    let mut solves = 0;
    let mut best: Option<(f64, CovariancePoint)> = None;
    let mut converged = false;
    let mut q = CovariancePoint::zeros(inst);
    let mut outer = 0;
    let mut inner_total = 0;

    'outer: while outer < opts.max_outer {
        outer += 1;
        let mut inner = 0;
        let grad = loop {
            inner += 1;
            inner_total += 1;
            let r = best_response(inst, util, cons, &i_hat, &lambda, &opts.solver)?;
            solves += 1;
            q = r.q.expect("checked by best_response");
            let fi = interference_map(inst, &q)?;
            let cost = objective(inst, util, &q)?;
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, q.clone()));
            }
            let i_res = distance(&i_hat, &fi);
            let grad = cost_gradient_i(inst, util, &q, &i_hat)?;
            if opts.record_trace {
                trace.push(PricingTraceRecord {
                    outer,
                    inner,
                    cost,
                    i_residual: i_res,
                    lambda_residual: distance(&lambda, &grad),
                });
            }
            if i_res > opts.eps_i && inner < opts.max_inner {
                let target: Vec<f64> = i_hat.iter().zip(&fi).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
                i_hat = root.project(&target);
                continue;
            }
            if i_res > opts.eps_i {
                log::debug!("pricing inner loop hit its cap at outer iteration {outer}");
            }
            break (grad, i_res);
        };
        let (grad, i_res) = grad;
        let l_res = distance(&lambda, &grad);
        if l_res <= opts.eps_lambda {
            converged = i_res <= opts.eps_i;
            break 'outer;
        }
        lambda = lambda.iter().zip(&grad).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
    }

    let state = PricingState {
        lambda,
        i_hat,
        q: q.clone(),
        outer,
        inner: inner_total,
    };
    let (cost, q) = if converged {
        (objective(inst, util, &q)?, q)
    } else {
        log::warn!("pricing did not converge within {} outer iterations", opts.max_outer);
        best.expect("at least one best response")
    };
    Ok(PricingResult {
        q,
        cost,
        converged,
        state,
        solves,
        trace,
    })
}

/// The three residual blocks of a pricing stationary point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KktBreakdown {
    /// Suboptimality of `Q` for the best-response problem at `(i_hat, lambda)`.
    pub stationarity: f64,
    /// `||i_hat - f_i(Q)||`.
    pub interference: f64,
    /// `||lambda - df/di(Q, i_hat)||`.
    pub price: f64,
}

impl KktBreakdown {
    pub fn norm(&self) -> f64 {
        norm([self.stationarity, self.interference, self.price].into_iter())
    }
}

pub fn kkt_breakdown(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    q: &CovariancePoint,
    i_hat: &[f64],
    lambda: &[f64],
    solver: &SolverOptions,
) -> Result<KktBreakdown> {
    let sub = ConvexSubproblem::new(inst, util, cons, i_hat.to_vec()).with_prices(lambda.to_vec());
    let at_q = sub.objective_value(q)?;
    let r = best_response(inst, util, cons, i_hat, lambda, solver)?;
    let fi = interference_map(inst, q)?;
    let grad = cost_gradient_i(inst, util, q, i_hat)?;
    Ok(KktBreakdown {
        stationarity: (at_q - r.objective).max(0.0),
        interference: distance(i_hat, &fi),
        price: distance(lambda, &grad),
    })
}

/// Euclidean norm of the stacked residual blocks of [`kkt_breakdown`].
pub fn kkt_residual(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    q: &CovariancePoint,
    i_hat: &[f64],
    lambda: &[f64],
    solver: &SolverOptions,
) -> Result<f64> {
    Ok(kkt_breakdown(inst, util, cons, q, i_hat, lambda, solver)?.norm())
}
