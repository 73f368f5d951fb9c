
use super::instance::{min_eigenvalue, CMat, CovariancePoint, NetworkInstance};
use crate::error::{Error, Result};

/// One generalized power constraint `sum_{k,l} Tr(A_kl Q_kl) <= P`.
///
/// `weights` holds one optional PSD matrix per link (`k * L_C + l`); `None`
/// means the link does not take part in the constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConstraint {
    pub weights: Vec<Option<CMat>>,
    pub budget: f64,
}

impl PowerConstraint {
    pub fn usage(&self, q: &CovariancePoint) -> f64 {
        self.weights
            .iter()
            .zip(q.blocks())
            .filter_map(|(a, b)| a.as_ref().map(|a| (a * b).trace().re))
            .sum()
    }
}

/// Closed convex set of covariance points cut out by PSD-weighted budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    constraints: Vec<PowerConstraint>,
}

impl ConstraintSet {
    pub fn new(inst: &NetworkInstance, constraints: Vec<PowerConstraint>) -> Result<Self> {
        let set = Self { constraints };
        set.validate(inst)?;
        Ok(set)
    }

    /// `Tr(sum_{k,l} Q_kl) <= total`.
    pub fn sum_power(inst: &NetworkInstance, total: f64) -> Result<Self> {
        let weights = (0..inst.links())
            .map(|link| {
                let n = inst.antennas(link / inst.carriers());
                Some(CMat::identity(n, n))
            })
            .collect();
        Self::new(inst, vec![PowerConstraint { weights, budget: total }])
    }

    /// `Tr(sum_l Q_kl) <= budgets[k]` for every user.
    pub fn per_user_power(inst: &NetworkInstance, budgets: &[f64]) -> Result<Self> {
        if budgets.len() != inst.users() {
            return Err(Error::Dimension(format!(
                "{} per-user budgets for {} users",
                budgets.len(),
                inst.users()
            )));
        }
        let constraints = budgets
            .iter()
            .enumerate()
            .map(|(k, &p)| PowerConstraint {
                weights: (0..inst.links())
                    .map(|link| {
                        (link / inst.carriers() == k).then(|| {
                            let n = inst.antennas(k);
                            CMat::identity(n, n)
                        })
                    })
                    .collect(),
                budget: p,
            })
            .collect();
        Self::new(inst, constraints)
    }

    pub fn constraints(&self) -> &[PowerConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Same weights with every budget multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            constraints: self
                .constraints
                .iter()
                .map(|c| PowerConstraint {
                    weights: c.weights.clone(),
                    budget: c.budget * factor,
                })
                .collect(),
        }
    }

    /// Largest `usage - budget` over all constraints.
    pub fn max_violation(&self, q: &CovariancePoint) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.usage(q) - c.budget)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, q: &CovariancePoint, tol: f64) -> bool {
        self.constraints
            .iter()
            .all(|c| c.usage(q) <= c.budget + tol * (1.0 + c.budget))
    }

    /// Checks PSD weights, non-negative budgets, and the structural
    /// boundedness rule: for every link the summed weights restricted to
    /// that link must be positive definite.
    pub fn validate(&self, inst: &NetworkInstance) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::Unbounded("no power constraints".into()));
        }
        for (ell, c) in self.constraints.iter().enumerate() {
            if !(c.budget >= 0.0 && c.budget.is_finite()) {
                return Err(Error::Validation(format!(
                    "constraint {ell}: budget must be finite and non-negative, got {}",
                    c.budget
                )));
            }
            if c.weights.len() != inst.links() {
                return Err(Error::Dimension(format!(
                    "constraint {ell}: {} weight slots for {} links",
                    c.weights.len(),
                    inst.links()
                )));
            }
            for (link, a) in c.weights.iter().enumerate() {
                let Some(a) = a else { continue };
                let n = inst.antennas(link / inst.carriers());
                if a.nrows() != n || a.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "constraint {ell}: weight for link {link} is {}x{}, expected {n}x{n}",
                        a.nrows(),
                        a.ncols()
                    )));
                }
                let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let skew = (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if skew > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Validation(format!(
                        "constraint {ell}: weight for link {link} is not Hermitian"
                    )));
                }
                if min_eigenvalue(a) < -1e-9 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Validation(format!(
                        "constraint {ell}: weight for link {link} is not PSD"
                    )));
                }
            }
        }
        for link in 0..inst.links() {
            let n = inst.antennas(link / inst.carriers());
            let mut sum = CMat::zeros(n, n);
            for c in &self.constraints {
                if let Some(a) = &c.weights[link] {
                    sum += a;
                }
            }
            let trace: f64 = (0..n).map(|a| sum[(a, a)].re).sum();
            if trace <= 0.0 || min_eigenvalue(&sum) <= 1e-12 * trace {
                return Err(Error::Unbounded(format!(
                    "link {link} (user {}, carrier {}) has antenna directions no constraint covers",
                    link / inst.carriers(),
                    link % inst.carriers()
                )));
            }
        }
        Ok(())
    }

    /// Trace-weight sum `sum_{k,l} Tr(A_kl)` of one constraint, i.e. its
    /// usage at `Q = I`.
    pub fn identity_usage(&self, ell: usize) -> f64 {
        self.constraints[ell]
            .weights
            .iter()
            .flatten()
            .map(|a| a.trace().re)
            .sum()
    }
}
