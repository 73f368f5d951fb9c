use crate::error::{Error, Result};

/// Rates below this many nats are clamped before evaluating `f_alpha` when
/// `alpha >= 1`, so that `log 0` and `0^(1-alpha)` never occur.
pub const RATE_FLOOR: f64 = 1e-12;

/// Alpha-fair utility `sum_k w_k f_alpha(r_k)`.
///
/// `alpha = 0` is weighted sum rate, `alpha = 1` proportional fairness.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySpec {
    alpha: f64,
    weights: Vec<f64>,
}

impl UtilitySpec {
    pub fn new(alpha: f64, weights: Vec<f64>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha must be >= 0, got {alpha}")));
        }
        if weights.is_empty() {
            return Err(Error::Validation("utility needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Validation(format!("weights must be positive, got {w}")));
        }
        Ok(Self { alpha, weights })
    }

    /// Unweighted sum rate for `users` users.
    pub fn sum_rate(users: usize) -> Self {
        Self {
            alpha: 0.0,
            weights: vec![1.0; users],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn is_sum_rate(&self) -> bool {
        self.alpha == 0.0
    }

    fn clamp(&self, r: f64) -> (f64, bool) {
        if self.alpha >= 1.0 && r < RATE_FLOOR {
            (RATE_FLOOR, true)
        } else {
            (r, false)
        }
    }

    /// `f_alpha(r)`.
    pub fn fair(&self, r: f64) -> f64 {
        let (r, _) = self.clamp(r);
        if self.alpha == 0.0 {
            r
        } else if self.alpha == 1.0 {
            r.ln()
        } else {
            r.powf(1.0 - self.alpha) / (1.0 - self.alpha)
        }
    }

    /// `f_alpha'(r)`; zero below the rate floor where the clamp is flat.
    pub fn fair_derivative(&self, r: f64) -> f64 {
        let (r, clamped) = self.clamp(r);
        if clamped {
            0.0
        } else if self.alpha == 0.0 {
            1.0
        } else {
            r.powf(-self.alpha)
        }
    }

    /// `f_alpha''(r)`.
    pub fn fair_second_derivative(&self, r: f64) -> f64 {
        let (r, clamped) = self.clamp(r);
        if clamped || self.alpha == 0.0 {
            0.0
        } else {
            -self.alpha * r.powf(-self.alpha - 1.0)
        }
    }
}
