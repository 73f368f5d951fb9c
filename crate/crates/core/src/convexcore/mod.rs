//! Convex engine: the bounding problem over one interference box and the
//! pricing best response, both solved by a log-barrier Newton method on the
//! real parametrization of the covariance blocks.

pub mod barrier;
mod hermitian;
mod objectives;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub use barrier::{
    find_interior, minimize, AffineForm, AffinePsd, BarrierOutcome, BarrierProblem, BarrierSettings, BarrierStatus,
    HookEvent, InteriorSearch, LinearObjective, Objective, PsdTerm,
};
pub use hermitian::HermitianLayout;
pub use objectives::{NegLogDet, RateObjective, Restricted, UserTerm};

use crate::error::{Error, Result};
use crate::model::instance::outer;
use crate::model::{interference_map, ConstraintSet, CovariancePoint, NetworkInstance, UtilitySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target duality gap of the barrier path.
    pub tol_kkt: f64,
    pub tol_feas: f64,
    /// Newton steps over all barrier stages.
    pub max_iter: usize,
    pub mu0: f64,
    pub mu_factor: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_kkt: 1e-8,
            tol_feas: 1e-9,
            max_iter: 2000,
            mu0: 1.0,
            mu_factor: 0.1,
            armijo: 0.3,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

impl SolverOptions {
    pub fn barrier_settings(&self) -> BarrierSettings {
        BarrierSettings {
            tol_gap: self.tol_kkt,
            mu0: self.mu0,
            mu_factor: self.mu_factor,
            max_iter: self.max_iter,
            armijo: self.armijo,
            backtrack: self.backtrack,
            max_backtracks: self.max_backtracks,
            center_tol: 1e-6,
            final_center_tol: 1e-12,
        }
    }
}

/// `min_Q f(Q, i_fix) + lambda^T f_i(Q)` over the constraint set, optionally
/// restricted to `b_lo <= f_i(Q) <= b_hi`.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem<'a> {
    pub instance: &'a NetworkInstance,
    pub utility: &'a UtilitySpec,
    pub constraints: &'a ConstraintSet,
    pub interference: Vec<f64>,
    pub prices: Option<Vec<f64>>,
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub initial: Option<CovariancePoint>,
}

impl<'a> ConvexSubproblem<'a> {
    pub fn new(
        instance: &'a NetworkInstance,
        utility: &'a UtilitySpec,
        constraints: &'a ConstraintSet,
        interference: Vec<f64>,
    ) -> Self {
        Self {
            instance,
            utility,
            constraints,
            interference,
            prices: None,
            bounds: None,
            initial: None,
        }
    }

    pub fn with_prices(mut self, prices: Vec<f64>) -> Self {
        self.prices = Some(prices);
        self
    }

    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.bounds = Some((lower, upper));
        self
    }

    pub fn with_initial(mut self, q: CovariancePoint) -> Self {
        self.initial = Some(q);
        self
    }

    fn validate(&self) -> Result<()> {
        let inst = self.instance;
        let l = inst.links();
        crate::model::interference::check_utility(inst, self.utility)?;
        if self.interference.len() != l {
            return Err(Error::Dimension(format!(
                "fixed interference has length {}, expected {l}",
                self.interference.len()
            )));
        }
        if self.interference.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation("fixed interference must be finite and non-negative".into()));
        }
        if let Some(p) = &self.prices {
            if p.len() != l {
                return Err(Error::Dimension(format!("prices have length {}, expected {l}", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("prices must be finite".into()));
            }
        }
        if let Some((lo, hi)) = &self.bounds {
            if lo.len() != l || hi.len() != l {
                return Err(Error::Dimension(format!(
                    "interference box has lengths {}/{}, expected {l}",
                    lo.len(),
                    hi.len()
                )));
            }
            for m in 0..l {
                if !(lo[m].is_finite() && hi[m].is_finite() && lo[m] <= hi[m]) {
                    return Err(Error::Validation(format!(
                        "interference box component {m}: [{}, {}] is not an interval",
                        lo[m], hi[m]
                    )));
                }
            }
        }
        if let Some(q) = &self.initial {
            q.check_shape(inst)?;
        }
        Ok(())
    }

    /// `f(Q, i_fix) + lambda^T f_i(Q)` evaluated directly.
    pub fn objective_value(&self, q: &CovariancePoint) -> Result<f64> {
        self.validate()?;
        let mut v = crate::model::cost(self.instance, self.utility, q, &self.interference)?;
        if let Some(p) = &self.prices {
            let i = interference_map(self.instance, q)?;
            v += p.iter().zip(&i).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(v)
    }

    /// Gradient of [`Self::objective_value`] in the real parametrization of
    /// [`HermitianLayout::for_instance`].
    pub fn objective_gradient(&self, q: &CovariancePoint) -> Result<Vec<f64>> {
        self.validate()?;
        q.check_shape(self.instance)?;
        let forms = Forms::new(self.instance, self.constraints);
        let obj = forms.objective(self);
        let x = forms.layout.pack(q);
        let mut g = vec![0.0; x.len()];
        let mut h = DMatrix::zeros(x.len(), x.len());
        obj.accumulate(&x, &mut g, &mut h);
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Minimizer; `None` when infeasible or when no interior point was found.
    pub q: Option<CovariancePoint>,
    /// Objective at `q` (`+inf` when infeasible).
    pub objective: f64,
    /// Certified lower bound `objective - gap`.
    pub lower_bound: f64,
    pub status: SolveStatus,
    /// `max(gap, newton decrement)`.
    pub kkt_residual: f64,
    /// Half squared Newton decrement at the returned point.
    pub stationarity: f64,
    /// Duality-gap estimate `theta * mu`.
    pub gap: f64,
    /// Largest constraint violation at `q`, relative to the budgets.
    pub feasibility_violation: f64,
    pub iterations: usize,
    pub phase1_iterations: usize,
    /// Positive optimal auxiliary slack when phase one proves infeasibility.
    pub infeasibility_certificate: Option<f64>,
}

impl SolveResult {
    fn infeasible(certificate: f64, phase1_iterations: usize) -> Self {
        Self {
            q: None,
            objective: f64::INFINITY,
            lower_bound: f64::INFINITY,
            status: SolveStatus::Infeasible,
            kkt_residual: 0.0,
            stationarity: 0.0,
            gap: 0.0,
            feasibility_violation: 0.0,
            iterations: 0,
            phase1_iterations,
            infeasibility_certificate: Some(certificate),
        }
    }

    fn undetermined(phase1_iterations: usize) -> Self {
        Self {
            q: None,
            objective: f64::NAN,
            lower_bound: f64::NAN,
            status: SolveStatus::MaxIter,
            kkt_residual: f64::INFINITY,
            stationarity: f64::INFINITY,
            gap: f64::INFINITY,
            feasibility_violation: f64::NAN,
            iterations: 0,
            phase1_iterations,
            infeasibility_certificate: None,
        }
    }
}

/// Affine data of one instance in the real parametrization.
struct Forms {
    layout: HermitianLayout,
    signal: Vec<AffineForm>,
    interference: Vec<AffineForm>,
    /// `usage - budget`, one per constraint.
    power: Vec<AffineForm>,
}

impl Forms {
    fn new(inst: &NetworkInstance, cons: &ConstraintSet) -> Self {
        let layout = HermitianLayout::for_instance(inst);
        let n = layout.len();
        let (k_users, lc) = (inst.users(), inst.carriers());
        let mut signal = Vec::with_capacity(inst.links());
        let mut interference = Vec::with_capacity(inst.links());
        for k in 0..k_users {
            for l in 0..lc {
                signal.push(layout.trace_form(inst.link(k, l), &outer(inst.channel(k, k, l))));
                let parts: Vec<AffineForm> = (0..k_users)
                    .filter(|&j| j != k)
                    .map(|j| layout.trace_form(inst.link(j, l), &outer(inst.channel(j, k, l))))
                    .collect();
                interference.push(AffineForm::combine(n, parts.iter().map(|f| (f, 1.0))));
            }
        }
        let power = cons
            .constraints()
            .iter()
            .map(|c| {
                let parts: Vec<AffineForm> = c
                    .weights
                    .iter()
                    .enumerate()
                    .filter_map(|(link, a)| a.as_ref().map(|a| layout.trace_form(link, a)))
                    .collect();
                let mut f = AffineForm::combine(n, parts.iter().map(|f| (f, 1.0)));
                f.constant = -c.budget;
                f
            })
            .collect();
        Self {
            layout,
            signal,
            interference,
            power,
        }
    }

    fn psd_blocks(&self) -> Vec<AffinePsd> {
        (0..self.layout.blocks())
            .map(|b| {
                let d = self.layout.dim(b);
                AffinePsd {
                    dim: d,
                    constant: crate::model::CMat::zeros(d, d),
                    terms: self.layout.basis(b),
                }
            })
            .collect()
    }

    fn objective(&self, sub: &ConvexSubproblem) -> RateObjective {
        let inst = sub.instance;
        let users = (0..inst.users())
            .map(|k| UserTerm {
                weight: sub.utility.weight(k),
                links: (0..inst.carriers())
                    .map(|l| {
                        let m = inst.link(k, l);
                        (self.signal[m].clone(), inst.noise(k, l) + sub.interference[m])
                    })
                    .collect(),
            })
            .collect();
        let penalty = sub.prices.as_ref().map(|p| {
            AffineForm::combine(self.layout.len(), self.interference.iter().zip(p).map(|(f, &w)| (f, w)))
        });
        RateObjective {
            utility: sub.utility.clone(),
            users,
            penalty,
        }
    }
}

/// Feasible-set barrier problem, possibly restricted to an affine subspace.
struct Compiled {
    prob: BarrierProblem,
    /// `x = x0 + Z y` when equalities were eliminated.
    restriction: Option<(DVector<f64>, DMatrix<f64>)>,
    /// Start point in the (possibly reduced) coordinates.
    start: Vec<f64>,
    /// Scale of the start point `delta * I`.
    delta: f64,
}

enum Compilation {
    Ready(Compiled),
    Empty(f64),
}

fn zero_width(lo: f64, hi: f64) -> bool {
    hi - lo <= 1e-12 * (1.0 + hi.abs())
}

/// Interior scale `delta` such that `delta * I` uses at most a thousandth of
/// every budget.
fn start_scale(cons: &ConstraintSet) -> Result<f64> {
    let mut delta = f64::INFINITY;
    for (ell, c) in cons.constraints().iter().enumerate() {
        let usage = cons.identity_usage(ell);
        if usage <= 0.0 {
            continue;
        }
        if c.budget <= 0.0 {
            return Err(Error::Precondition(format!(
                "constraint {ell} has zero budget: the feasible set has no interior"
            )));
        }
        delta = delta.min(1e-3 * c.budget / usage);
    }
    Ok(delta)
}

fn restrict(prob: &BarrierProblem, x0: &DVector<f64>, z: &DMatrix<f64>) -> BarrierProblem {
    let n = prob.n;
    let nr = z.ncols();
    let x0s = x0.as_slice();
    let ineq = prob
        .ineq
        .iter()
        .map(|g| {
            let a = DVector::from_vec(g.to_dense(n));
            let reduced = z.transpose() * a;
            AffineForm::from_dense(reduced.as_slice(), g.eval(x0s))
        })
        .collect();
    let psd = prob
        .psd
        .iter()
        .map(|b| {
            let d = b.dim;
            let mut constant = b.eval(x0s);
            // tidy rounding so the constant stays exactly Hermitian
            constant = (&constant + constant.adjoint()) * Complex64::new(0.5, 0.0);
            let mut terms = Vec::new();
            for q in 0..nr {
                let mut m = crate::model::CMat::zeros(d, d);
                let mut any = false;
                for t in &b.terms {
                    let w = z[(t.var, q)];
                    if w.abs() <= 1e-15 {
                        continue;
                    }
                    any = true;
                    for &(r, c, e) in &t.entries {
                        m[(r, c)] += e * w;
                    }
                }
                if !any {
                    continue;
                }
                let entries = (0..d)
                    .flat_map(|r| (0..d).map(move |c| (r, c)))
                    .filter(|&(r, c)| m[(r, c)] != Complex64::new(0.0, 0.0))
                    .map(|(r, c)| (r, c, m[(r, c)]))
                    .collect();
                terms.push(PsdTerm { var: q, entries });
            }
            AffinePsd { dim: d, constant, terms }
        })
        .collect();
    BarrierProblem { n: nr, psd, ineq }
}

/// Particular solution and null-space basis of `A x = b`.
fn affine_subspace(rows: &[AffineForm], targets: &[f64], n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let dense: Vec<Vec<f64>> = rows.iter().map(|f| f.to_dense(n)).collect();
    let a = DMatrix::from_fn(rows.len(), n, |r, c| dense[r][c]);
    let b = DVector::from_iterator(rows.len(), rows.iter().zip(targets).map(|(f, t)| t - f.constant));
    let aat = &a * a.transpose();
    let x0 = a.transpose() * aat.clone().cholesky().map_or_else(|| aat.pseudo_inverse(1e-14).unwrap() * &b, |c| c.solve(&b));
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-12 * scale).collect();
    let z = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    (x0, z)
}

fn compile(sub: &ConvexSubproblem, forms: &Forms) -> Result<Compilation> {
    let n = forms.layout.len();
    let mut prob = BarrierProblem {
        n,
        psd: forms.psd_blocks(),
        ineq: forms.power.clone(),
    };
    let mut eq_rows = Vec::new();
    let mut eq_targets = Vec::new();
    if let Some((lo, hi)) = &sub.bounds {
        for (m, f) in forms.interference.iter().enumerate() {
            let (lo, hi) = (lo[m], hi[m]);
            if f.is_linear_zero() {
                // interference identically zero
                if lo > 0.0 {
                    return Ok(Compilation::Empty(lo));
                }
                continue;
            }
            if zero_width(lo, hi) {
                eq_rows.push(f.clone());
                eq_targets.push(0.5 * (lo + hi));
                continue;
            }
            let mut upper = f.clone();
            upper.constant -= hi;
            prob.ineq.push(upper);
            if lo > 0.0 {
                let mut lower = f.scaled(-1.0);
                lower.constant += lo;
                prob.ineq.push(lower);
            }
        }
    }
    let delta = start_scale(sub.constraints)?;
    let mut start = forms
        .layout
        .pack(&CovariancePoint::scaled_identity(sub.instance, delta));
    if let Some(q) = &sub.initial {
        // a warm start is used only if it is comfortably interior
        let x = forms.layout.pack(q);
        if eq_rows.is_empty() && prob.barrier_value(&x).is_some() && prob.min_slack(&x) >= delta * 1e-3 {
            start = x;
        }
    }
    if eq_rows.is_empty() {
        return Ok(Compilation::Ready(Compiled {
            prob,
            restriction: None,
            start,
            delta,
        }));
    }
    let (x0, z) = affine_subspace(&eq_rows, &eq_targets, n);
    let reduced = restrict(&prob, &x0, &z);
    let y0 = z.transpose() * (DVector::from_vec(start) - &x0);
    Ok(Compilation::Ready(Compiled {
        prob: reduced,
        restriction: Some((x0, z)),
        start: y0.as_slice().to_vec(),
        delta,
    }))
}

/// Phase-one search on a compiled problem. Rows are normalized so that the
/// common slack is measured in eigenvalue units of the covariance blocks.
fn interior_point(c: &Compiled, opts: &SolverOptions) -> (InteriorSearch, usize) {
    if c.prob.barrier_value(&c.start).is_some() {
        return (
            InteriorSearch::Feasible {
                y: c.start.clone(),
                iterations: 0,
            },
            0,
        );
    }
    let mut normalized = c.prob.clone();
    for g in &mut normalized.ineq {
        let s = g.max_abs_coeff();
        if s > 0.0 {
            *g = g.scaled(1.0 / s);
        }
    }
    let out = find_interior(&normalized, &c.start, 1.0, 1e-10, 0.5 * c.delta, &opts.barrier_settings());
    let it = match &out {
        InteriorSearch::Feasible { iterations, .. }
        | InteriorSearch::Infeasible { iterations, .. }
        | InteriorSearch::Undetermined { iterations, .. } => *iterations,
    };
    (out, it)
}

/// Minimizes the subproblem objective.
pub fn solve(sub: &ConvexSubproblem, opts: &SolverOptions) -> Result<SolveResult> {
    sub.validate()?;
    let forms = Forms::new(sub.instance, sub.constraints);
    let compiled = match compile(sub, &forms)? {
        Compilation::Ready(c) => c,
        Compilation::Empty(cert) => return Ok(SolveResult::infeasible(cert, 0)),
    };
    let (search, p1_iters) = interior_point(&compiled, opts);
    let y0 = match search {
        InteriorSearch::Feasible { y, .. } => y,
        InteriorSearch::Infeasible { certificate, .. } => {
            return Ok(SolveResult::infeasible(certificate.max(f64::MIN_POSITIVE), p1_iters))
        }
        InteriorSearch::Undetermined { .. } => return Ok(SolveResult::undetermined(p1_iters)),
    };
    let objective = forms.objective(sub);
    let settings = opts.barrier_settings();
    let (x, out) = match &compiled.restriction {
        None => {
            let out = minimize(&compiled.prob, &objective, y0, &settings, |_| false);
            (out.y.clone(), out)
        }
        Some((x0, z)) => {
            let r = Restricted {
                inner: &objective,
                x0: x0.clone(),
                z: z.clone(),
            };
            let out = minimize(&compiled.prob, &r, y0, &settings, |_| false);
            (r.lift(&out.y), out)
        }
    };
    let q = forms.layout.unpack(sub.instance, &x);
    let value = objective.value(&x).unwrap_or(f64::NAN);
    let mut violation = sub
        .constraints
        .constraints()
        .iter()
        .map(|c| (c.usage(&q) - c.budget) / (1.0 + c.budget))
        .fold(0.0, f64::max);
    if let Some((lo, hi)) = &sub.bounds {
        let i = interference_map(sub.instance, &q)?;
        for m in 0..i.len() {
            violation = violation
                .max((i[m] - hi[m]) / (1.0 + hi[m]))
                .max((lo[m] - i[m]) / (1.0 + lo[m]));
        }
    }
    let status = match out.status {
        BarrierStatus::Converged if value.is_finite() => SolveStatus::Optimal,
        _ => SolveStatus::MaxIter,
    };
    Ok(SolveResult {
        q: Some(q),
        objective: value,
        lower_bound: value - out.gap,
        status,
        kkt_residual: out.gap.max(out.decrement),
        stationarity: out.decrement,
        gap: out.gap,
        feasibility_violation: violation,
        iterations: out.iterations,
        phase1_iterations: p1_iters,
        infeasibility_certificate: None,
    })
}

#[derive(Debug, Clone)]
pub enum Phase1Outcome {
    /// A strictly feasible point.
    Feasible(CovariancePoint),
    Infeasible { certificate: f64 },
    Undetermined,
}

/// Finds a strictly feasible point of the subproblem's constraints or
/// certifies that none exists.
pub fn phase1(sub: &ConvexSubproblem, opts: &SolverOptions) -> Result<Phase1Outcome> {
    sub.validate()?;
    let forms = Forms::new(sub.instance, sub.constraints);
    let compiled = match compile(sub, &forms)? {
        Compilation::Ready(c) => c,
        Compilation::Empty(cert) => return Ok(Phase1Outcome::Infeasible { certificate: cert }),
    };
    Ok(match interior_point(&compiled, opts).0 {
        InteriorSearch::Feasible { y, .. } => {
            let x = match &compiled.restriction {
                None => y,
                Some((x0, z)) => (x0 + z * DVector::from_vec(y)).as_slice().to_vec(),
            };
            Phase1Outcome::Feasible(forms.layout.unpack(sub.instance, &x))
        }
        InteriorSearch::Infeasible { certificate, .. } => Phase1Outcome::Infeasible {
            certificate: certificate.max(f64::MIN_POSITIVE),
        },
        InteriorSearch::Undetermined { .. } => Phase1Outcome::Undetermined,
    })
}

/// Upper bound on the maximum of interference component `m` over the
/// feasible set (optimal value plus the barrier's duality gap).
pub fn maximize_linear(inst: &NetworkInstance, cons: &ConstraintSet, m: usize, opts: &SolverOptions) -> Result<f64> {
    if m >= inst.links() {
        return Err(Error::Dimension(format!("component {m} out of range for {} links", inst.links())));
    }
    let forms = Forms::new(inst, cons);
    let form = &forms.interference[m];
    if form.is_linear_zero() {
        return Ok(0.0);
    }
    let prob = BarrierProblem {
        n: forms.layout.len(),
        psd: forms.psd_blocks(),
        ineq: forms.power.clone(),
    };
    let delta = start_scale(cons)?;
    let start = forms.layout.pack(&CovariancePoint::scaled_identity(inst, delta));
    let out = minimize(&prob, &LinearObjective(form.scaled(-1.0)), start, &opts.barrier_settings(), |_| false);
    if out.status != BarrierStatus::Converged {
        return Err(Error::Solver(format!(
            "maximizing interference component {m} stopped after {} iterations",
            out.iterations
        )));
    }
    Ok((-out.objective + out.gap).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        cost, generate, interference_box, objective, quad_form, CVec, GeneratorSpec, Topology,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_user(h: Vec<Complex64>, p: f64) -> (NetworkInstance, ConstraintSet, UtilitySpec) {
        let n = h.len();
        let inst = NetworkInstance::new(vec![n], 1, Topology::Broadcast, vec![CVec::from_vec(h)], vec![1.0]).unwrap();
        let cons = ConstraintSet::sum_power(&inst, p).unwrap();
        (inst, cons, UtilitySpec::sum_rate(1))
    }

    #[test]
    fn single_user_mrt() {
        let h = vec![c(0.3, -1.2), c(0.8, 0.1), c(-0.5, 0.4)];
        let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let (inst, cons, util) = single_user(h, 2.0);
        let sub = ConvexSubproblem::new(&inst, &util, &cons, vec![0.0]);
        let r = solve(&sub, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let expected = -(1.0 + 2.0 * norm2).ln();
        assert!((r.objective - expected).abs() < 1e-8, "{} vs {expected}", r.objective);
        assert!(r.lower_bound <= expected + 1e-12);
        let q = r.q.unwrap();
        let ev = crate::model::instance::eigenvalues_desc(q.block(0, 0));
        assert!(ev[1] < 1e-6 * ev[0], "{ev:?}");
    }

    fn two_by_two(seed: u64) -> crate::model::Scenario {
        generate(&GeneratorSpec {
            seed,
            users: 2,
            antennas: 2,
            carriers: 1,
            topology: Topology::Interference,
            power: 10.0,
        })
        .unwrap()
    }

    #[test]
    fn lower_box_above_i_max_is_infeasible() {
        let s = two_by_two(5);
        let opts = SolverOptions::default();
        let m0 = interference_box(&s.instance, &s.constraints, &opts).unwrap();
        let mut lo = vec![0.0; 2];
        lo[1] = m0.upper[1] * 1.01;
        let mut hi = m0.upper.clone();
        hi[1] = lo[1] * 2.0;
        let sub = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, lo.clone()).with_box(lo, hi);
        let r = solve(&sub, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.infeasibility_certificate.unwrap() > 0.0);
    }

    #[test]
    fn zero_cross_channel_lower_bound_is_empty() {
        let h = |v: f64| CVec::from_vec(vec![c(v, 0.0)]);
        let inst = NetworkInstance::new(vec![1, 1], 1, Topology::Interference, vec![h(1.0), h(0.0), h(0.0), h(1.0)], vec![1.0, 1.0]).unwrap();
        let cons = ConstraintSet::per_user_power(&inst, &[1.0, 1.0]).unwrap();
        let util = UtilitySpec::sum_rate(2);
        let sub = ConvexSubproblem::new(&inst, &util, &cons, vec![0.1, 0.0]).with_box(vec![0.1, 0.0], vec![1.0, 1.0]);
        assert!(matches!(phase1(&sub, &SolverOptions::default()).unwrap(), Phase1Outcome::Infeasible { .. }));
    }

    #[test]
    fn nested_box_phase_one_point_is_inside() {
        let s = two_by_two(11);
        let opts = SolverOptions::default();
        let m0 = interference_box(&s.instance, &s.constraints, &opts).unwrap();
        let lo: Vec<f64> = m0.upper.iter().map(|u| 0.3 * u).collect();
        let hi: Vec<f64> = m0.upper.iter().map(|u| 0.4 * u).collect();
        let sub = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, lo.clone()).with_box(lo.clone(), hi.clone());
        match phase1(&sub, &opts).unwrap() {
            Phase1Outcome::Feasible(q) => {
                let i = interference_map(&s.instance, &q).unwrap();
                for m in 0..2 {
                    assert!(i[m] > lo[m] && i[m] < hi[m], "{i:?}");
                }
                assert!(s.constraints.is_feasible(&q, 0.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_width_box_uses_equality() {
        let s = two_by_two(2);
        let opts = SolverOptions::default();
        let q = CovariancePoint::scaled_identity(&s.instance, 1.0);
        let i_star = interference_map(&s.instance, &q).unwrap();
        let sub = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, i_star.clone())
            .with_box(i_star.clone(), i_star.clone());
        let r = solve(&sub, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let qs = r.q.unwrap();
        let i = interference_map(&s.instance, &qs).unwrap();
        for m in 0..2 {
            assert!((i[m] - i_star[m]).abs() < 1e-9 * (1.0 + i_star[m]), "{i:?} vs {i_star:?}");
        }
        let ub = objective(&s.instance, &s.utility, &qs).unwrap();
        assert!((ub - r.objective).abs() < 1e-8);
        assert!(r.objective <= cost(&s.instance, &s.utility, &q, &i_star).unwrap() + 1e-12);
    }

    #[test]
    fn interference_box_matches_rank_one_alignment() {
        // sum power: the largest interference at receiver 1 aims all power
        // of transmitter 0 along h_01
        let h01 = vec![c(0.5, 1.0), c(-0.7, 0.2)];
        let ch = vec![
            CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]),
            CVec::from_vec(h01.clone()),
            CVec::from_vec(vec![c(0.3, 0.0), c(0.1, 0.4)]),
            CVec::from_vec(vec![c(0.9, 0.0), c(0.2, 0.0)]),
        ];
        let inst = NetworkInstance::new(vec![2, 2], 1, Topology::Interference, ch, vec![1.0, 1.0]).unwrap();
        let cons = ConstraintSet::sum_power(&inst, 3.0).unwrap();
        let m0 = interference_box(&inst, &cons, &SolverOptions::default()).unwrap();
        let h = CVec::from_vec(h01);
        let n2 = h.norm_squared();
        let q = crate::model::instance::outer(&h) * Complex64::new(3.0 / n2, 0.0);
        let achieved = quad_form(&h, &q);
        assert!((achieved - 3.0 * n2).abs() < 1e-12);
        assert!(m0.upper[1] >= achieved);
        assert!(m0.upper[1] <= achieved * (1.0 + 1e-6) + 1e-7);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let s = two_by_two(21);
        let q = {
            let mut q = CovariancePoint::scaled_identity(&s.instance, 0.7);
            q.block_mut(1, 0)[(0, 1)] = c(0.2, -0.1);
            q.block_mut(1, 0)[(1, 0)] = c(0.2, 0.1);
            q
        };
        let sub = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, vec![0.4, 1.3]).with_prices(vec![0.2, 0.05]);
        let g = sub.objective_gradient(&q).unwrap();
        let layout = HermitianLayout::for_instance(&s.instance);
        let x = layout.pack(&q);
        for p in 0..x.len() {
            let h = 1e-6 * (1.0 + x[p].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[p] += h;
            xm[p] -= h;
            let fp = sub.objective_value(&layout.unpack(&s.instance, &xp)).unwrap();
            let fm = sub.objective_value(&layout.unpack(&s.instance, &xm)).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g[p]).abs() <= 1e-6 * (1.0 + g[p].abs()), "{p}: {fd} vs {}", g[p]);
        }
    }
}
