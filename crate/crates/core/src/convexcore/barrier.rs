//! Logarithmic-barrier Newton engine over affine data.
//!
//! Problems have the form
//!
//! ```text
//! minimize    f(y)
//! subject to  M_b(y) = C_b + sum_p y_p E_{b,p}  is positive definite
//!             g_i(y) = a_i . y + c_i < 0
//! ```
//!
//! with `f` smooth and convex. Each stage minimizes `f + mu * phi` with
//! `phi = -sum log det M_b - sum log(-g_i)` by damped Newton, then divides
//! `mu` by ten; `theta * mu` bounds the duality gap of a centered point,
//! where `theta` is the barrier degree.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::model::CMat;

/// Sparse affine function `val . y[idx] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn new(idx: Vec<usize>, val: Vec<f64>, constant: f64) -> Self {
        debug_assert_eq!(idx.len(), val.len());
        Self { idx, val, constant }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            idx: Vec::new(),
            val: Vec::new(),
            constant: c,
        }
    }

    /// Builds a form from a dense coefficient vector, dropping exact zeros.
    pub fn from_dense(dense: &[f64], constant: f64) -> Self {
        let (idx, val) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self { idx, val, constant }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.constant + self.idx.iter().zip(&self.val).map(|(&i, &v)| v * y[i]).sum::<f64>()
    }

    /// Linear part only.
    pub fn dot(&self, y: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, &v)| v * y[i]).sum()
    }

    pub fn add_to_dense(&self, out: &mut [f64], scale: f64) {
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i] += scale * v;
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.add_to_dense(&mut out, 1.0);
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_linear_zero(&self) -> bool {
        self.val.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            idx: self.idx.clone(),
            val: self.val.iter().map(|v| v * s).collect(),
            constant: self.constant * s,
        }
    }

    /// `sum_t scale_t * form_t` as a single form over `n` variables.
    pub fn combine<'a>(n: usize, parts: impl IntoIterator<Item = (&'a AffineForm, f64)>) -> Self {
        let mut dense = vec![0.0; n];
        let mut constant = 0.0;
        for (f, s) in parts {
            f.add_to_dense(&mut dense, s);
            constant += s * f.constant;
        }
        Self::from_dense(&dense, constant)
    }

    /// Adds `scale * a a^T` to `hess`.
    pub(crate) fn rank_one(&self, scale: f64, hess: &mut DMatrix<f64>) {
        for (&i, &vi) in self.idx.iter().zip(&self.val) {
            let s = scale * vi;
            for (&j, &vj) in self.idx.iter().zip(&self.val) {
                hess[(i, j)] += s * vj;
            }
        }
    }
}

/// One variable's contribution `y_var * E` to an affine Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdTerm {
    pub var: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

/// Affine Hermitian matrix `constant + sum_t y[t.var] * E_t`, constrained
/// to be positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePsd {
    pub dim: usize,
    pub constant: CMat,
    pub terms: Vec<PsdTerm>,
}

impl AffinePsd {
    pub fn eval(&self, y: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for t in &self.terms {
            let v = y[t.var];
            if v != 0.0 {
                for &(a, b, e) in &t.entries {
                    m[(a, b)] += e * v;
                }
            }
        }
        m
    }
}

/// Smooth convex objective with analytic derivatives.
pub trait Objective {
    /// `None` outside the objective's domain.
    fn value(&self, y: &[f64]) -> Option<f64>;
    /// Adds the gradient and Hessian at `y` to `grad` and `hess`.
    fn accumulate(&self, y: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>);
}

/// A linear objective `form(y)`.
pub struct LinearObjective(pub AffineForm);

impl Objective for LinearObjective {
    fn value(&self, y: &[f64]) -> Option<f64> {
        Some(self.0.eval(y))
    }

    fn accumulate(&self, _y: &[f64], grad: &mut [f64], _hess: &mut DMatrix<f64>) {
        self.0.add_to_dense(grad, 1.0);
    }
}

#[derive(Debug, Clone, Default)]
pub struct BarrierProblem {
    pub n: usize,
    pub psd: Vec<AffinePsd>,
    /// Strict inequalities `form(y) < 0`.
    pub ineq: Vec<AffineForm>,
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless every pivot is
/// strictly positive.
fn hermitian_cholesky(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / djj;
        }
    }
    Some(l)
}

fn log_det_of_factor(l: &CMat) -> f64 {
    (0..l.nrows()).map(|d| 2.0 * l[(d, d)].re.ln()).sum()
}

fn log_det_and_inverse(m: CMat) -> Option<(f64, CMat)> {
    let l = hermitian_cholesky(&m)?;
    let n = l.nrows();
    // L^{-1} by forward substitution, then W = L^{-H} L^{-1}
    let mut li = CMat::zeros(n, n);
    for c in 0..n {
        li[(c, c)] = Complex64::new(1.0 / l[(c, c)].re, 0.0);
        for r in c + 1..n {
            let mut v = Complex64::new(0.0, 0.0);
            for k in c..r {
                v -= l[(r, k)] * li[(k, c)];
            }
            li[(r, c)] = v / l[(r, r)].re;
        }
    }
    let w = li.adjoint() * &li;
    Some((log_det_of_factor(&l), w))
}

fn log_det(m: CMat) -> Option<f64> {
    hermitian_cholesky(&m).map(|l| log_det_of_factor(&l))
}

impl BarrierProblem {
    /// Barrier degree: duality gap at a centered point is `degree * mu`.
    pub fn degree(&self) -> f64 {
        (self.psd.iter().map(|b| b.dim).sum::<usize>() + self.ineq.len()) as f64
    }

    /// `phi(y)`, or `None` when `y` is not strictly feasible.
    pub fn barrier_value(&self, y: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for g in &self.ineq {
            let slack = -g.eval(y);
            if !(slack > 0.0) {
                return None;
            }
            total -= slack.ln();
        }
        for b in &self.psd {
            total -= log_det(b.eval(y))?;
        }
        Some(total)
    }

    /// Adds `scale * grad phi` and `scale * hess phi`.
    pub fn accumulate(&self, y: &[f64], scale: f64, grad: &mut [f64], hess: &mut DMatrix<f64>) -> Option<()> {
        for g in &self.ineq {
            let slack = -g.eval(y);
            if !(slack > 0.0) {
                return None;
            }
            g.add_to_dense(grad, scale / slack);
            g.rank_one(scale / (slack * slack), hess);
        }
        for b in &self.psd {
            let (_, w) = log_det_and_inverse(b.eval(y))?;
            let n = b.dim;
            let mut wew = CMat::zeros(n, n);
            for (tp, p) in b.terms.iter().enumerate() {
                // grad: -Tr(W E_p)
                let mut tr = Complex64::new(0.0, 0.0);
                for &(a, c, e) in &p.entries {
                    tr += e * w[(c, a)];
                }
                grad[p.var] -= scale * tr.re;
                // W E_p W
                wew.fill(Complex64::new(0.0, 0.0));
                for &(a, c, e) in &p.entries {
                    for r in 0..n {
                        let wra = w[(r, a)] * e;
                        for s in 0..n {
                            wew[(r, s)] += wra * w[(c, s)];
                        }
                    }
                }
                for q in &b.terms[tp..] {
                    let mut h = Complex64::new(0.0, 0.0);
                    for &(a, c, e) in &q.entries {
                        h += e * wew[(c, a)];
                    }
                    let v = scale * h.re;
                    hess[(p.var, q.var)] += v;
                    if q.var != p.var {
                        hess[(q.var, p.var)] += v;
                    }
                }
            }
        }
        Some(())
    }

    /// Smallest slack: the minimum over `-g_i(y)` and the smallest
    /// eigenvalue of every PSD block.
    pub fn min_slack(&self, y: &[f64]) -> f64 {
        let scalar = self.ineq.iter().map(|g| -g.eval(y)).fold(f64::INFINITY, f64::min);
        let psd = self
            .psd
            .iter()
            .map(|b| crate::model::instance::min_eigenvalue(&b.eval(y)))
            .fold(f64::INFINITY, f64::min);
        scalar.min(psd)
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSettings {
    /// Stop once `degree * mu` falls below this.
    pub tol_gap: f64,
    pub mu0: f64,
    pub mu_factor: f64,
    /// Newton-step budget over all stages.
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Centering tolerance on `lambda^2 / 2` for intermediate stages.
    pub center_tol: f64,
    /// Centering tolerance on `lambda^2 / 2` for the last stage.
    pub final_center_tol: f64,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            mu0: 1.0,
            mu_factor: 0.1,
            max_iter: 1000,
            armijo: 0.3,
            backtrack: 0.5,
            max_backtracks: 60,
            center_tol: 1e-6,
            final_center_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierStatus {
    Converged,
    MaxIter,
    /// A hook requested termination.
    Stopped,
}

#[derive(Debug, Clone)]
pub struct BarrierOutcome {
    pub y: Vec<f64>,
    pub objective: f64,
    pub mu: f64,
    /// `degree * mu` at the last completed stage.
    pub gap: f64,
    /// `lambda^2 / 2` of the last Newton system.
    pub decrement: f64,
    pub iterations: usize,
    pub status: BarrierStatus,
}

/// Event passed to the stage hook.
pub struct HookEvent<'a> {
    pub y: &'a [f64],
    pub objective: f64,
    pub mu: f64,
    pub degree: f64,
    /// True at the end of a centering stage.
    pub centered: bool,
}

struct Eval {
    psi: f64,
    grad: Vec<f64>,
    hess: DMatrix<f64>,
}

fn psi_value<O: Objective>(prob: &BarrierProblem, obj: &O, y: &[f64], mu: f64) -> Option<f64> {
    let b = prob.barrier_value(y)?;
    let f = obj.value(y)?;
    let v = f + mu * b;
    v.is_finite().then_some(v)
}

fn evaluate<O: Objective>(prob: &BarrierProblem, obj: &O, y: &[f64], mu: f64) -> Option<Eval> {
    let n = prob.n;
    let psi = psi_value(prob, obj, y, mu)?;
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    obj.accumulate(y, &mut grad, &mut hess);
    prob.accumulate(y, mu, &mut grad, &mut hess)?;
    Some(Eval { psi, grad, hess })
}

/// Solves `H d = -g`, regularizing the diagonal if `H` is numerically
/// indefinite.
fn newton_direction(hess: &DMatrix<f64>, grad: &[f64]) -> Option<DVector<f64>> {
    let n = grad.len();
    let rhs = DVector::from_iterator(n, grad.iter().map(|g| -g));
    let diag_max = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..n {
                h[(i, i)] += reg;
            }
        }
        if let Some(ch) = Cholesky::new(h) {
            let d = ch.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-14 * diag_max } else { reg * 100.0 };
    }
    None
}

/// Runs the barrier method from the strictly feasible point `y0`.
///
/// `hook` is called after each Newton step and after each centering stage;
/// returning `true` stops the run with [`BarrierStatus::Stopped`].
pub fn minimize<O: Objective>(
    prob: &BarrierProblem,
    obj: &O,
    y0: Vec<f64>,
    settings: &BarrierSettings,
    mut hook: impl FnMut(&HookEvent) -> bool,
) -> BarrierOutcome {
    let degree = prob.degree().max(1.0);
    let mut y = y0;
    let mut mu = settings.mu0;
    let mut iterations = 0;
    let mut decrement: f64;
    let finish = |y: Vec<f64>, mu: f64, decrement: f64, iterations: usize, status: BarrierStatus| {
        let objective = obj.value(&y).unwrap_or(f64::NAN);
        BarrierOutcome {
            y,
            objective,
            mu,
            gap: degree * mu,
            decrement,
            iterations,
            status,
        }
    };
    loop {
        let last_stage = degree * mu <= settings.tol_gap;
        let center_tol = if last_stage {
            settings.final_center_tol
        } else {
            settings.center_tol
        };
        loop {
            let Some(ev) = evaluate(prob, obj, &y, mu) else {
                // only reachable if y0 was not strictly feasible
                return finish(y, mu, f64::INFINITY, iterations, BarrierStatus::MaxIter);
            };
            let Some(dir) = newton_direction(&ev.hess, &ev.grad) else {
                decrement = f64::INFINITY;
                break;
            };
            let slope: f64 = dir.iter().zip(&ev.grad).map(|(d, g)| d * g).sum();
            decrement = -0.5 * slope;
            if decrement <= center_tol {
                break;
            }
            if iterations >= settings.max_iter {
                return finish(y, mu, decrement, iterations, BarrierStatus::MaxIter);
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..settings.max_backtracks {
                let trial: Vec<f64> = y.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
                if let Some(v) = psi_value(prob, obj, &trial, mu) {
                    if v <= ev.psi + settings.armijo * t * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                t *= settings.backtrack;
            }
            iterations += 1;
            let Some(next) = accepted else {
                // no progress possible at working precision
                break;
            };
            y = next;
            let objective = obj.value(&y).unwrap_or(f64::NAN);
            if hook(&HookEvent {
                y: &y,
                objective,
                mu,
                degree,
                centered: false,
            }) {
                return finish(y, mu, decrement, iterations, BarrierStatus::Stopped);
            }
        }
        let objective = obj.value(&y).unwrap_or(f64::NAN);
        if hook(&HookEvent {
            y: &y,
            objective,
            mu,
            degree,
            centered: true,
        }) {
            return finish(y, mu, decrement, iterations, BarrierStatus::Stopped);
        }
        if last_stage {
            return finish(y, mu, decrement, iterations, BarrierStatus::Converged);
        }
        mu *= settings.mu_factor;
    }
}

/// Result of the auxiliary-slack feasibility search.
#[derive(Debug, Clone)]
pub enum InteriorSearch {
    /// A point with every slack at least `margin`.
    Feasible { y: Vec<f64>, iterations: usize },
    /// The minimal common violation is positive (or not below `-margin`).
    Infeasible { certificate: f64, iterations: usize },
    Undetermined { best: f64, iterations: usize },
}

/// Phase one: minimizes `s` subject to `M_b(y) + s * psd_scale * I > 0`
/// and `g_i(y) < s`. A negative optimum yields a strictly feasible `y`;
/// a positive lower bound on it certifies infeasibility.
///
/// The search stops early once every slack reaches `comfortable`.
pub fn find_interior(
    prob: &BarrierProblem,
    y0: &[f64],
    psd_scale: f64,
    margin: f64,
    comfortable: f64,
    settings: &BarrierSettings,
) -> InteriorSearch {
    let n = prob.n;
    let s_var = n;
    let mut aug = BarrierProblem {
        n: n + 1,
        psd: prob.psd.clone(),
        ineq: prob.ineq.clone(),
    };
    for b in &mut aug.psd {
        b.terms.push(PsdTerm {
            var: s_var,
            entries: (0..b.dim).map(|a| (a, a, Complex64::new(psd_scale, 0.0))).collect(),
        });
    }
    for g in &mut aug.ineq {
        g.idx.push(s_var);
        g.val.push(-1.0);
    }
    let worst = -prob.min_slack_scaled(y0, psd_scale);
    let s0 = worst + 1.0 + worst.abs();
    let mut start = y0.to_vec();
    start.push(s0);
    let objective = LinearObjective(AffineForm::new(vec![s_var], vec![1.0], 0.0));

    let early = comfortable.max(margin);
    let mut verdict: Option<bool> = None;
    let out = minimize(&aug, &objective, start, settings, |ev| {
        let s = ev.y[s_var];
        let gap = ev.degree * ev.mu;
        if s <= -early || (ev.centered && s < -margin && -s >= gap) {
            verdict = Some(true);
            return true;
        }
        if ev.centered && s - gap > -margin {
            verdict = Some(false);
            return true;
        }
        false
    });
    let s = out.y[s_var];
    match (verdict, out.status) {
        (Some(true), _) => InteriorSearch::Feasible {
            y: out.y[..n].to_vec(),
            iterations: out.iterations,
        },
        (Some(false), _) => InteriorSearch::Infeasible {
            certificate: s - out.gap,
            iterations: out.iterations,
        },
        (None, BarrierStatus::Converged) => {
            if s < -margin {
                InteriorSearch::Feasible {
                    y: out.y[..n].to_vec(),
                    iterations: out.iterations,
                }
            } else {
                InteriorSearch::Infeasible {
                    certificate: s,
                    iterations: out.iterations,
                }
            }
        }
        _ => InteriorSearch::Undetermined {
            best: s,
            iterations: out.iterations,
        },
    }
}

impl BarrierProblem {
    fn min_slack_scaled(&self, y: &[f64], psd_scale: f64) -> f64 {
        let scalar = self.ineq.iter().map(|g| -g.eval(y)).fold(f64::INFINITY, f64::min);
        let psd = self
            .psd
            .iter()
            .map(|b| crate::model::instance::min_eigenvalue(&b.eval(y)) / psd_scale)
            .fold(f64::INFINITY, f64::min);
        scalar.min(psd)
    }

    /// True when every slack of `y` is at least `margin`, with PSD
    /// eigenvalues measured in units of `psd_scale`.
    pub fn is_interior(&self, y: &[f64], psd_scale: f64, margin: f64) -> bool {
        self.min_slack_scaled(y, psd_scale) >= margin
    }
}
