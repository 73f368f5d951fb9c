use serde::{Deserialize, Serialize};

use super::constraints::ConstraintSet;
use super::instance::{quad_form, CovariancePoint, NetworkInstance};
use super::utility::UtilitySpec;
use crate::convexcore::{self, SolverOptions};
use crate::error::{Error, Result};

/// Inflation applied to each maximized interference component so that the
/// optimum sits strictly inside the root box despite solver tolerance.
pub const BOX_INFLATION: f64 = 1e-6;

/// Received interference `sum_{j != k} h_jkl Q_jl h_jkl^H` for every link.
pub fn interference_map(inst: &NetworkInstance, q: &CovariancePoint) -> Result<Vec<f64>> {
    q.check_shape(inst)?;
    let users = inst.users();
    let mut out = vec![0.0; inst.links()];
    for k in 0..users {
        for l in 0..inst.carriers() {
            out[inst.link(k, l)] = (0..users)
                .filter(|&j| j != k)
                .map(|j| quad_form(inst.channel(j, k, l), q.block(j, l)))
                .sum();
        }
    }
    Ok(out)
}

/// Desired-signal powers `h_kkl Q_kl h_kkl^H`.
pub fn signal_powers(inst: &NetworkInstance, q: &CovariancePoint) -> Result<Vec<f64>> {
    q.check_shape(inst)?;
    let mut out = vec![0.0; inst.links()];
    for k in 0..inst.users() {
        for l in 0..inst.carriers() {
            out[inst.link(k, l)] = quad_form(inst.channel(k, k, l), q.block(k, l));
        }
    }
    Ok(out)
}

fn check_interference(inst: &NetworkInstance, i: &[f64]) -> Result<()> {
    if i.len() != inst.links() {
        return Err(Error::Dimension(format!(
            "interference vector has length {}, expected {}",
            i.len(),
            inst.links()
        )));
    }
    Ok(())
}

/// Per-user rates in nats when the receivers see interference `i` instead
/// of `f_i(Q)`.
pub fn rates_with_interference(inst: &NetworkInstance, q: &CovariancePoint, i: &[f64]) -> Result<Vec<f64>> {
    check_interference(inst, i)?;
    let s = signal_powers(inst, q)?;
    Ok((0..inst.users())
        .map(|k| {
            (0..inst.carriers())
                .map(|l| {
                    let m = inst.link(k, l);
                    (s[m] / (inst.noise(k, l) + i[m])).ln_1p()
                })
                .sum()
        })
        .collect())
}

/// Per-user achievable rates (nats) treating interference as noise.
pub fn rates(inst: &NetworkInstance, q: &CovariancePoint) -> Result<Vec<f64>> {
    let i = interference_map(inst, q)?;
    rates_with_interference(inst, q, &i)
}

/// Decoupled cost `f(Q, i) = -sum_k w_k f_alpha(r_k(Q, i))`.
pub fn cost(inst: &NetworkInstance, util: &UtilitySpec, q: &CovariancePoint, i: &[f64]) -> Result<f64> {
    check_utility(inst, util)?;
    let r = rates_with_interference(inst, q, i)?;
    Ok(r.iter()
        .enumerate()
        .map(|(k, &rk)| -util.weight(k) * util.fair(rk))
        .sum())
}

/// The original objective `f(Q, f_i(Q))`.
pub fn objective(inst: &NetworkInstance, util: &UtilitySpec, q: &CovariancePoint) -> Result<f64> {
    let i = interference_map(inst, q)?;
    cost(inst, util, q, &i)
}

/// Gradient of [`cost`] with respect to the interference vector.
///
/// Component `(k, l)` is `w_k f_alpha'(r_k) S / ((s2 + i)(s2 + i + S))`,
/// which is non-negative: the cost is monotone increasing in `i`.
pub fn cost_gradient_i(inst: &NetworkInstance, util: &UtilitySpec, q: &CovariancePoint, i: &[f64]) -> Result<Vec<f64>> {
    check_utility(inst, util)?;
    let r = rates_with_interference(inst, q, i)?;
    let s = signal_powers(inst, q)?;
    let mut grad = vec![0.0; inst.links()];
    for k in 0..inst.users() {
        let scale = util.weight(k) * util.fair_derivative(r[k]);
        for l in 0..inst.carriers() {
            let m = inst.link(k, l);
            if s[m] == 0.0 {
                continue;
            }
            let d = inst.noise(k, l) + i[m];
            grad[m] = scale * s[m] / (d * (d + s[m]));
        }
    }
    Ok(grad)
}

pub(crate) fn check_utility(inst: &NetworkInstance, util: &UtilitySpec) -> Result<()> {
    if util.weights().len() != inst.users() {
        return Err(Error::Dimension(format!(
            "utility has {} weights for {} users",
            util.weights().len(),
            inst.users()
        )));
    }
    Ok(())
}

/// Layout of the interference vector and its root box `M_0 = [0, i_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMap {
    pub users: usize,
    pub carriers: usize,
    pub upper: Vec<f64>,
}

impl InterferenceMap {
    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn lower(&self) -> Vec<f64> {
        vec![0.0; self.upper.len()]
    }

    /// `(receiver, carrier)` of a flat component index.
    pub fn component(&self, m: usize) -> (usize, usize) {
        (m / self.carriers, m % self.carriers)
    }

    pub fn contains(&self, i: &[f64], tol: f64) -> bool {
        i.len() == self.upper.len()
            && i
                .iter()
                .zip(&self.upper)
                .all(|(&x, &u)| x >= -tol && x <= u + tol * (1.0 + u))
    }

    /// Componentwise clamp into `M_0`.
    pub fn project(&self, i: &[f64]) -> Vec<f64> {
        i.iter().zip(&self.upper).map(|(&x, &u)| x.clamp(0.0, u)).collect()
    }
}

/// Computes the root box by maximizing every interference component over
/// the feasible set and inflating the maxima by `1 + BOX_INFLATION`.
pub fn interference_box(inst: &NetworkInstance, cons: &ConstraintSet, opts: &SolverOptions) -> Result<InterferenceMap> {
    cons.validate(inst)?;
    let mut upper = Vec::with_capacity(inst.links());
    for m in 0..inst.links() {
        let max = convexcore::maximize_linear(inst, cons, m, opts)?;
        upper.push(max * (1.0 + BOX_INFLATION));
    }
    Ok(InterferenceMap {
        users: inst.users(),
        carriers: inst.carriers(),
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance::{CMat, CVec, Topology};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_pair() -> NetworkInstance {
        // h_11 = 1, h_12 = 1, h_21 = 0.5, h_22 = 2
        let ch = vec![
            CVec::from_vec(vec![c(1.0)]),
            CVec::from_vec(vec![c(1.0)]),
            CVec::from_vec(vec![c(0.5)]),
            CVec::from_vec(vec![c(2.0)]),
        ];
        NetworkInstance::new(vec![1, 1], 1, Topology::Interference, ch, vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_covariance_gives_zero_interference_and_rates() {
        let inst = scalar_pair();
        let q = CovariancePoint::zeros(&inst);
        assert_eq!(interference_map(&inst, &q).unwrap(), vec![0.0, 0.0]);
        assert_eq!(rates(&inst, &q).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_quadratic_form() {
        let inst = scalar_pair();
        let q = CovariancePoint::from_blocks(&inst, vec![CMat::from_element(1, 1, c(2.0)), CMat::zeros(1, 1)]).unwrap();
        let i = interference_map(&inst, &q).unwrap();
        assert_eq!(i[1], 2.0);
        assert_eq!(i[0], 0.0);
    }

    #[test]
    fn single_user_rate_is_ln2() {
        let inst = NetworkInstance::new(vec![1], 1, Topology::Interference, vec![CVec::from_vec(vec![c(1.0)])], vec![1.0]).unwrap();
        let q = CovariancePoint::from_blocks(&inst, vec![CMat::from_element(1, 1, c(1.0))]).unwrap();
        let r = rates(&inst, &q).unwrap();
        assert!((r[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(interference_map(&inst, &q).unwrap(), vec![0.0]);
        let util = UtilitySpec::sum_rate(1);
        assert!((cost(&inst, &util, &q, &[0.0]).unwrap() + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_without_signal() {
        let inst = scalar_pair();
        let q = CovariancePoint::from_blocks(&inst, vec![CMat::zeros(1, 1), CMat::from_element(1, 1, c(1.0))]).unwrap();
        let g = cost_gradient_i(&inst, &UtilitySpec::sum_rate(2), &q, &[0.3, 0.2]).unwrap();
        assert_eq!(g[0], 0.0);
        assert!(g[1] > 0.0);
    }

    #[test]
    fn cost_rejects_wrong_length() {
        let inst = scalar_pair();
        let q = CovariancePoint::zeros(&inst);
        assert!(cost(&inst, &UtilitySpec::sum_rate(2), &q, &[0.0]).is_err());
        assert!(cost(&inst, &UtilitySpec::sum_rate(3), &q, &[0.0, 0.0]).is_err());
    }
}
