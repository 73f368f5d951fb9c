//! Sum capacity of the MISO broadcast channel through its dual
//! multiple-access channel: `max ln det(I + sum_k q_k g_k^H g_k)` over
//! `q >= 0`, `sum q <= P`, with `g_k = h_k / sigma_k`.

use num_complex::Complex64;

use crate::convexcore::{minimize, AffineForm, AffinePsd, BarrierProblem, BarrierStatus, NegLogDet, PsdTerm, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{CMat, ConstraintSet, NetworkInstance, Topology};

#[derive(Debug, Clone)]
pub struct DpcResult {
    /// Sum capacity in nats.
    pub capacity: f64,
    /// Optimal dual uplink powers.
    pub powers: Vec<f64>,
    /// Duality gap bound of the returned point.
    pub gap: f64,
}

/// Single sum-power budget of a broadcast constraint set.
fn sum_power_budget(inst: &NetworkInstance, cons: &ConstraintSet) -> Option<f64> {
    let [c] = cons.constraints() else { return None };
    let all_identity = c.weights.iter().all(|a| {
        a.as_ref()
            .is_some_and(|a| (a - CMat::identity(a.nrows(), a.ncols())).iter().all(|z| z.norm() <= 1e-12))
    });
    (all_identity && c.weights.len() == inst.links()).then_some(c.budget)
}

pub fn dpc_sum_capacity(inst: &NetworkInstance, cons: &ConstraintSet, opts: &SolverOptions) -> Result<DpcResult> {
    if inst.topology() != Topology::Broadcast || inst.carriers() != 1 {
        return Err(Error::Precondition("DPC capacity needs a single-carrier broadcast instance".into()));
    }
    let budget = sum_power_budget(inst, cons)
        .ok_or_else(|| Error::Precondition("DPC capacity needs a single sum-power constraint".into()))?;
    let k_users = inst.users();
    let n = inst.antennas(0);
    let terms = (0..k_users)
        .map(|k| {
            let g = inst.channel(0, k, 0);
            let s = 1.0 / inst.noise(k, 0);
            let entries = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| (a, b, g[a].conj() * g[b] * Complex64::new(s, 0.0)))
                .collect();
            PsdTerm { var: k, entries }
        })
        .collect();
    let logdet = NegLogDet::new(
        k_users,
        AffinePsd {
            dim: n,
            constant: CMat::identity(n, n),
            terms,
        },
    );
    let mut ineq: Vec<AffineForm> = (0..k_users).map(|k| AffineForm::new(vec![k], vec![-1.0], 0.0)).collect();
    ineq.push(AffineForm::new((0..k_users).collect(), vec![1.0; k_users], -budget));
    let prob = BarrierProblem {
        n: k_users,
        psd: Vec::new(),
        ineq,
    };
    let y0 = vec![budget / (2.0 * k_users as f64); k_users];
    let out = minimize(&prob, &logdet, y0, &opts.barrier_settings(), |_| false);
    if out.status == BarrierStatus::MaxIter {
        return Err(Error::Solver("DPC dual problem hit the iteration cap".into()));
    }
    Ok(DpcResult {
        capacity: -out.objective,
        powers: out.y,
        gap: out.gap,
    })
}
