//! Branch and bound over the space of interference levels.
//!
//! Each rectangle `[a, b]` of interference vectors is bounded by the convex
//! problem `min f(Q, a)` subject to `a <= f_i(Q) <= b`; its minimizer gives
//! the upper bound `f(Q*, f_i(Q*))`. Rectangles are refined best-first by
//! bisecting their longest (normalized) edge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::Serialize;

use crate::convexcore::{self, ConvexSubproblem, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::model::instance::eigenvalues_desc;
use crate::model::{interference_box, objective, ConstraintSet, CovariancePoint, InterferenceMap, NetworkInstance, UtilitySpec};

/// Normalized edges below this are treated as zero.
pub const MIN_EDGE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BbOptions {
    /// Absolute optimality gap on the cost, in nats.
    pub epsilon: f64,
    /// Budget on bounded rectangles, root included.
    pub max_nodes: usize,
    pub solver: SolverOptions,
    /// Bound sibling rectangles concurrently.
    pub parallel: bool,
    pub record_trace: bool,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_nodes: 50_000,
            solver: SolverOptions::default(),
            parallel: false,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rectangle {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `+inf` for empty rectangles.
    pub lb: f64,
    pub ub: f64,
    pub candidate: Option<CovariancePoint>,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            id: 0,
            parent: None,
            depth: 0,
            lower,
            upper,
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            candidate: None,
        }
    }

    /// Index and length of the longest edge after dividing by `scale`;
    /// the lowest index wins ties.
    pub fn longest_edge(&self, scale: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for m in 0..self.lower.len() {
            let e = normalized_edge(self.upper[m] - self.lower[m], scale[m]);
            if e > best.1 {
                best = (m, e);
            }
        }
        best
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, i: &[f64], tol: f64) -> bool {
        i.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&a, &b))| x >= a - tol && x <= b + tol)
    }
}

fn normalized_edge(edge: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        edge / scale
    } else {
        0.0
    }
}

/// Bisects the longest normalized edge at its midpoint. `None` when every
/// normalized edge is below [`MIN_EDGE`].
pub fn branch(rect: &Rectangle, scale: &[f64]) -> Option<(Rectangle, Rectangle)> {
    let (m, e) = rect.longest_edge(scale);
    if !(e >= MIN_EDGE) {
        return None;
    }
    let mid = 0.5 * (rect.lower[m] + rect.upper[m]);
    let child = |lower: Vec<f64>, upper: Vec<f64>| Rectangle {
        id: 0,
        parent: Some(rect.id),
        depth: rect.depth + 1,
        lower,
        upper,
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        candidate: None,
    };
    let mut left_upper = rect.upper.clone();
    left_upper[m] = mid;
    let mut right_lower = rect.lower.clone();
    right_lower[m] = mid;
    Some((child(rect.lower.clone(), left_upper), child(right_lower, rect.upper.clone())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Solved,
    Empty,
    /// Solver stopped early; the parent's bound was inherited.
    Fallback,
}

#[derive(Debug, Clone)]
pub struct BoundOutcome {
    pub lb: f64,
    pub ub: f64,
    pub candidate: Option<CovariancePoint>,
    pub status: BoundStatus,
    pub iterations: usize,
}

/// Bounds the rectangle `[lower, upper]`. `fallback` is used as the lower
/// bound if the solver does not converge.
pub fn bound_box(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    lower: &[f64],
    upper: &[f64],
    solver: &SolverOptions,
    fallback: f64,
) -> Result<BoundOutcome> {
    let sub = ConvexSubproblem::new(inst, util, cons, lower.to_vec()).with_box(lower.to_vec(), upper.to_vec());
    let r = convexcore::solve(&sub, solver)?;
    let iterations = r.iterations + r.phase1_iterations;
    let ub_of = |q: &Option<CovariancePoint>| -> Result<f64> {
        match q {
            Some(q) if cons.is_feasible(q, solver.tol_feas) => objective(inst, util, q),
            _ => Ok(f64::INFINITY),
        }
    };
    Ok(match r.status {
        SolveStatus::Optimal => BoundOutcome {
            lb: r.lower_bound,
            ub: ub_of(&r.q)?,
            candidate: r.q,
            status: BoundStatus::Solved,
            iterations,
        },
        SolveStatus::Infeasible => BoundOutcome {
            lb: f64::INFINITY,
            ub: f64::INFINITY,
            candidate: None,
            status: BoundStatus::Empty,
            iterations,
        },
        SolveStatus::MaxIter => {
            log::warn!("bounding solver hit its iteration cap; inheriting the parent bound {fallback}");
            BoundOutcome {
                lb: fallback,
                ub: ub_of(&r.q)?,
                candidate: r.q,
                status: BoundStatus::Fallback,
                iterations,
            }
        }
    })
}

/// Bounds `rect` in place.
pub fn bound(
    rect: &mut Rectangle,
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    solver: &SolverOptions,
    parent_lb: f64,
) -> Result<BoundStatus> {
    let out = bound_box(inst, util, cons, &rect.lower, &rect.upper, solver, parent_lb)?;
    rect.lb = out.lb;
    rect.ub = out.ub;
    rect.candidate = out.candidate;
    Ok(out.status)
}

struct Live {
    rect: Rectangle,
    edge: f64,
    seq: usize,
}

impl PartialEq for Live {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Live {}

impl PartialOrd for Live {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Live {
    // max-heap order: "greater" is selected first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .rect
            .lb
            .total_cmp(&self.rect.lb)
            .then(self.edge.total_cmp(&other.edge))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Live rectangles ordered for best-first selection, plus the incumbent.
pub struct Partition {
    heap: BinaryHeap<Live>,
    scale: Vec<f64>,
    seq: usize,
    pub incumbent: Option<CovariancePoint>,
    pub upper: f64,
    /// Smallest lower bound among discarded or unbranchable rectangles.
    pub floor: f64,
}

impl Partition {
    /// `scale` holds the root box edge lengths used to normalize edges.
    pub fn new(scale: Vec<f64>) -> Self {
        Self {
            heap: BinaryHeap::new(),
            scale,
            seq: 0,
            incumbent: None,
            upper: f64::INFINITY,
            floor: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn insert(&mut self, rect: Rectangle) {
        let edge = rect.longest_edge(&self.scale).1;
        self.heap.push(Live {
            rect,
            edge,
            seq: self.seq,
        });
        self.seq += 1;
    }

    /// A live rectangle of minimal lower bound; ties go to the longer
    /// normalized edge, then to the earliest inserted.
    pub fn select(&mut self) -> Option<Rectangle> {
        self.heap.pop().map(|l| l.rect)
    }

    pub fn peek_lb(&self) -> Option<f64> {
        self.heap.peek().map(|l| l.rect.lb)
    }

    /// Global lower bound: smallest live or retired lower bound, capped by
    /// the incumbent.
    pub fn lower(&self) -> f64 {
        self.peek_lb().unwrap_or(f64::INFINITY).min(self.floor).min(self.upper)
    }

    /// Offers a candidate; returns true if it became the incumbent.
    pub fn offer(&mut self, ub: f64, q: &Option<CovariancePoint>) -> bool {
        if ub < self.upper {
            if let Some(q) = q {
                self.upper = ub;
                self.incumbent = Some(q.clone());
                return true;
            }
        }
        false
    }

    pub fn retire(&mut self, lb: f64) {
        self.floor = self.floor.min(lb);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub node: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lb: f64,
    pub ub: f64,
    pub parent_lb: f64,
    pub status: BoundStatus,
    pub global_lower: f64,
    pub global_upper: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BbStats {
    pub nodes_bounded: usize,
    pub nodes_pruned: usize,
    pub nodes_empty: usize,
    pub fallbacks: usize,
    pub unbranchable: usize,
    pub branchings: usize,
    pub solver_iterations: usize,
    pub max_depth: usize,
    pub seconds: f64,
    /// Incumbent blocks whose second eigenvalue exceeds `1e-4 * trace`.
    pub rank_one_violations: usize,
}

#[derive(Debug, Clone)]
pub struct BbResult {
    pub q_best: Option<CovariancePoint>,
    pub cost_best: f64,
    pub lower_final: f64,
    pub upper_final: f64,
    pub gap: f64,
    pub converged: bool,
    pub root_box: InterferenceMap,
    pub stats: BbStats,
    /// `(L_t, U_t)` after every iteration, root first.
    pub history: Vec<(f64, f64)>,
    pub trace: Vec<TraceRecord>,
}

impl BbResult {
    /// `gap / max(1, |U|)`.
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.upper_final.abs().max(1.0)
    }

    pub fn budget_exhausted(&self) -> bool {
        !self.converged
    }
}

/// Runs branch and bound from the root box computed by
/// [`interference_box`].
pub fn run_bb(inst: &NetworkInstance, util: &UtilitySpec, cons: &ConstraintSet, opts: &BbOptions) -> Result<BbResult> {
    let root = interference_box(inst, cons, &opts.solver)?;
    run_bb_with_box(inst, util, cons, root, opts)
}

fn count_rank_violations(q: &CovariancePoint) -> usize {
    q.blocks()
        .iter()
        .filter(|b| {
            let ev = eigenvalues_desc(b);
            let trace: f64 = ev.iter().sum();
            ev.len() > 1 && trace > 0.0 && ev[1] > 1e-4 * trace
        })
        .count()
}

pub fn run_bb_with_box(
    inst: &NetworkInstance,
    util: &UtilitySpec,
    cons: &ConstraintSet,
    root_box: InterferenceMap,
    opts: &BbOptions,
) -> Result<BbResult> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Validation(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    if opts.max_nodes == 0 {
        return Err(Error::Validation("max_nodes must be positive".into()));
    }
    let start = Instant::now();
    let mut stats = BbStats::default();
    let mut trace = Vec::new();
    let mut history = Vec::new();
    let mut partition = Partition::new(root_box.upper.clone());
    let mut next_id = 0;

    let mut root = Rectangle::new(root_box.lower(), root_box.upper.clone());
    root.id = next_id;
    next_id += 1;
    let mut pending = vec![(root, f64::NEG_INFINITY)];

    let mut converged = false;
    loop {
        // bound the freshly created rectangles
        let outcomes: Vec<Result<BoundOutcome>> = if opts.parallel && pending.len() > 1 {
            use rayon::prelude::*;
            pending
                .par_iter()
                .map(|(r, plb)| bound_box(inst, util, cons, &r.lower, &r.upper, &opts.solver, *plb))
                .collect()
        } else {
            pending
                .iter()
                .map(|(r, plb)| bound_box(inst, util, cons, &r.lower, &r.upper, &opts.solver, *plb))
                .collect()
        };
        for ((mut rect, parent_lb), out) in pending.drain(..).zip(outcomes) {
            let out = out?;
            stats.nodes_bounded += 1;
            stats.solver_iterations += out.iterations;
            stats.max_depth = stats.max_depth.max(rect.depth);
            match out.status {
                BoundStatus::Empty => stats.nodes_empty += 1,
                BoundStatus::Fallback => stats.fallbacks += 1,
                BoundStatus::Solved => {}
            }
            rect.lb = out.lb;
            rect.ub = out.ub;
            rect.candidate = out.candidate;
            partition.offer(rect.ub, &rect.candidate);
            if opts.record_trace {
                trace.push(TraceRecord {
                    node: rect.id,
                    parent: rect.parent,
                    depth: rect.depth,
                    lower: rect.lower.clone(),
                    upper: rect.upper.clone(),
                    lb: rect.lb,
                    ub: rect.ub,
                    parent_lb,
                    status: out.status,
                    global_lower: f64::NAN,
                    global_upper: partition.upper,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            if out.status == BoundStatus::Empty {
                continue;
            }
            if rect.lb >= partition.upper - opts.epsilon {
                stats.nodes_pruned += 1;
                partition.retire(rect.lb);
            } else {
                partition.insert(rect);
            }
        }

        // discard live rectangles made redundant by a better incumbent
        while let Some(lb) = partition.peek_lb() {
            if lb >= partition.upper - opts.epsilon {
                let r = partition.select().expect("peeked");
                stats.nodes_pruned += 1;
                partition.retire(r.lb);
            } else {
                break;
            }
        }
        let lower = partition.lower();
        history.push((lower, partition.upper));
        if let Some(last) = trace.last_mut() {
            last.global_lower = lower;
        }
        if partition.upper - lower <= opts.epsilon || partition.is_empty() {
            converged = partition.upper.is_finite() && partition.upper - lower <= opts.epsilon;
            break;
        }
        if stats.nodes_bounded + 2 > opts.max_nodes {
            break;
        }
        let parent = partition.select().expect("non-empty partition");
        match branch(&parent, &root_box.upper) {
            Some((mut a, mut b)) => {
                stats.branchings += 1;
                a.id = next_id;
                b.id = next_id + 1;
                next_id += 2;
                pending.push((a, parent.lb));
                pending.push((b, parent.lb));
            }
            None => {
                stats.unbranchable += 1;
                partition.retire(parent.lb);
            }
        }
    }

    let lower = partition.lower();
    let upper = partition.upper;
    if let Some(q) = &partition.incumbent {
        stats.rank_one_violations = count_rank_violations(q);
        if stats.rank_one_violations > 0 {
            log::warn!(
                "incumbent has {} covariance block(s) that are not numerically rank one",
                stats.rank_one_violations
            );
        }
    }
    stats.seconds = start.elapsed().as_secs_f64();
    if !converged {
        log::warn!(
            "branch and bound stopped with gap {:.3e} after {} nodes",
            upper - lower,
            stats.nodes_bounded
        );
    }
    Ok(BbResult {
        q_best: partition.incumbent,
        cost_best: upper,
        lower_final: lower,
        upper_final: upper,
        gap: upper - lower,
        converged,
        root_box,
        stats,
        history,
        trace,
    })
}
