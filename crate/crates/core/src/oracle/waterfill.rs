//! Closed-form sum-rate optimum of a decoupled network: maximum-ratio
//! transmission on every link and waterfilling of each power budget over
//! the links it covers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::instance::outer;
use crate::model::{objective, CMat, ConstraintSet, CovariancePoint, NetworkInstance, UtilitySpec};

#[derive(Debug, Clone)]
pub struct WaterfillResult {
    pub q: CovariancePoint,
    pub cost: f64,
    /// Water level `1 / nu` of every constraint.
    pub levels: Vec<f64>,
    pub powers: Vec<f64>,
}

fn is_identity(a: &CMat) -> bool {
    a.is_square() && (a - CMat::identity(a.nrows(), a.ncols())).iter().all(|z| z.norm() <= 1e-12)
}

/// Powers `max(0, w_t mu - 1 / g_t)` summing to `budget`, found by
/// bisection on the level `mu`.
fn waterfill(weights: &[f64], gains: &[f64], budget: f64) -> (f64, Vec<f64>) {
    let fill = |mu: f64| -> Vec<f64> {
        weights
            .iter()
            .zip(gains)
            .map(|(w, g)| if *g > 0.0 { (w * mu - 1.0 / g).max(0.0) } else { 0.0 })
            .collect()
    };
    let total = |mu: f64| fill(mu).iter().sum::<f64>();
    if gains.iter().all(|g| *g <= 0.0) {
        return (0.0, vec![0.0; gains.len()]);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while total(hi) < budget {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut p = fill(hi);
    // remove the bisection residue so the budget holds exactly
    let s: f64 = p.iter().sum();
    if s > budget {
        p.iter_mut().for_each(|x| *x *= budget / s);
    }
    (hi, p)
}

/// Sum-rate optimum of a network without cross coupling whose constraints
/// are unweighted power budgets over disjoint sets of links.
pub fn waterfilling_decoupled(inst: &NetworkInstance, util: &UtilitySpec, cons: &ConstraintSet) -> Result<WaterfillResult> {
    if !inst.is_decoupled() {
        return Err(Error::Precondition("waterfilling needs all cross channels to be zero".into()));
    }
    if !util.is_sum_rate() {
        return Err(Error::Precondition("waterfilling needs the weighted sum-rate utility (alpha = 0)".into()));
    }
    let links = inst.links();
    let mut owner = vec![None; links];
    for (ell, c) in cons.constraints().iter().enumerate() {
        for (link, a) in c.weights.iter().enumerate() {
            let Some(a) = a else { continue };
            if !is_identity(a) {
                return Err(Error::Precondition(format!("constraint {ell} has a non-identity weight on link {link}")));
            }
            if owner[link].replace(ell).is_some() {
                return Err(Error::Precondition(format!("link {link} appears in more than one constraint")));
            }
        }
    }
    let mut blocks: Vec<CMat> = (0..links)
        .map(|link| {
            let n = inst.antennas(link / inst.carriers());
            CMat::zeros(n, n)
        })
        .collect();
    let mut powers = vec![0.0; links];
    let mut levels = Vec::with_capacity(cons.len());
    for (ell, c) in cons.constraints().iter().enumerate() {
        let members: Vec<usize> = (0..links).filter(|&t| owner[t] == Some(ell)).collect();
        let weights: Vec<f64> = members.iter().map(|&t| util.weight(t / inst.carriers())).collect();
        let gains: Vec<f64> = members
            .iter()
            .map(|&t| {
                let (k, l) = (t / inst.carriers(), t % inst.carriers());
                inst.channel(k, k, l).norm_squared() / inst.noise(k, l)
            })
            .collect();
        let (mu, p) = waterfill(&weights, &gains, c.budget);
        levels.push(mu);
        for (&t, &pt) in members.iter().zip(&p) {
            powers[t] = pt;
            let (k, l) = (t / inst.carriers(), t % inst.carriers());
            let h = inst.channel(k, k, l);
            let hn = h.norm();
            if pt > 0.0 && hn > 0.0 {
                blocks[t] = outer(h) * Complex64::new(pt / (hn * hn), 0.0);
            }
        }
    }
    let q = CovariancePoint::from_blocks(inst, blocks)?;
    let cost = objective(inst, util, &q)?;
    Ok(WaterfillResult { q, cost, levels, powers })
}
