use nalgebra::{DMatrix, DVector};

use super::barrier::{AffineForm, AffinePsd, BarrierProblem, Objective};
use crate::model::UtilitySpec;

/// One user's share of the decoupled cost: `-w f_alpha(sum_l ln(1 + S_l / d_l))`
/// with `S_l` affine in the variables and `d_l` fixed.
#[derive(Debug, Clone)]
pub struct UserTerm {
    pub weight: f64,
    pub links: Vec<(AffineForm, f64)>,
}

/// `f(Q, i_fix) + penalty(Q)` in the real parametrization.
#[derive(Debug, Clone)]
pub struct RateObjective {
    pub utility: UtilitySpec,
    pub users: Vec<UserTerm>,
    pub penalty: Option<AffineForm>,
}

impl RateObjective {
    fn user_rate(&self, u: &UserTerm, y: &[f64]) -> Option<f64> {
        let mut r = 0.0;
        for (s, d) in &u.links {
            let x = s.eval(y) / d;
            if !(x > -1.0) {
                return None;
            }
            r += x.ln_1p();
        }
        Some(r)
    }
}

impl Objective for RateObjective {
    fn value(&self, y: &[f64]) -> Option<f64> {
        let mut total = self.penalty.as_ref().map_or(0.0, |p| p.eval(y));
        for u in &self.users {
            let r = self.user_rate(u, y)?;
            total -= u.weight * self.utility.fair(r);
        }
        Some(total)
    }

    fn accumulate(&self, y: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) {
        if let Some(p) = &self.penalty {
            p.add_to_dense(grad, 1.0);
        }
        let n = grad.len();
        for u in &self.users {
            let Some(r) = self.user_rate(u, y) else { continue };
            let f1 = self.utility.fair_derivative(r);
            let f2 = self.utility.fair_second_derivative(r);
            if f1 == 0.0 && f2 == 0.0 {
                continue;
            }
            // dr/dy = sum_l a_l / (d_l + S_l)
            let mut dr = vec![0.0; n];
            for (s, d) in &u.links {
                let denom = d + s.eval(y);
                s.add_to_dense(&mut dr, 1.0 / denom);
                // -w f' * d2r = w f' * sum_l a_l a_l^T / (d_l + S_l)^2
                s.rank_one(u.weight * f1 / (denom * denom), hess);
            }
            for (g, v) in grad.iter_mut().zip(&dr) {
                *g -= u.weight * f1 * v;
            }
            if f2 != 0.0 {
                let support: Vec<usize> = (0..n).filter(|&i| dr[i] != 0.0).collect();
                for &i in &support {
                    let s = -u.weight * f2 * dr[i];
                    for &j in &support {
                        hess[(i, j)] += s * dr[j];
                    }
                }
            }
        }
    }
}

/// `-ln det M(y)` for an affine Hermitian `M`, i.e. the PSD barrier of a
/// single block used as an objective.
pub struct NegLogDet(BarrierProblem);

impl NegLogDet {
    pub fn new(n: usize, block: AffinePsd) -> Self {
        Self(BarrierProblem {
            n,
            psd: vec![block],
            ineq: Vec::new(),
        })
    }
}

impl Objective for NegLogDet {
    fn value(&self, y: &[f64]) -> Option<f64> {
        self.0.barrier_value(y)
    }

    fn accumulate(&self, y: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) {
        self.0.accumulate(y, 1.0, grad, hess);
    }
}

/// An objective composed with the affine map `x = x0 + Z y`.
pub struct Restricted<'a, O> {
    pub inner: &'a O,
    pub x0: DVector<f64>,
    pub z: DMatrix<f64>,
}

impl<O> Restricted<'_, O> {
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(y);
        (&self.x0 + &self.z * y).as_slice().to_vec()
    }
}

impl<O: Objective> Objective for Restricted<'_, O> {
    fn value(&self, y: &[f64]) -> Option<f64> {
        self.inner.value(&self.lift(y))
    }

    fn accumulate(&self, y: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) {
        let x = self.lift(y);
        let n = x.len();
        let mut gx = vec![0.0; n];
        let mut hx = DMatrix::zeros(n, n);
        self.inner.accumulate(&x, &mut gx, &mut hx);
        let gy = self.z.transpose() * DVector::from_vec(gx);
        let hy = self.z.transpose() * hx * &self.z;
        for (g, v) in grad.iter_mut().zip(gy.iter()) {
            *g += v;
        }
        *hess += hy;
    }
}
