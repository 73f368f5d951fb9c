#![allow(dead_code)]

use miso_bb::model::{
    generate, CMat, CVec, ConstraintSet, CovariancePoint, GeneratorSpec, NetworkInstance, Scenario, Topology, UtilitySpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario(seed: u64, users: usize, antennas: usize, carriers: usize, topology: Topology, power: f64) -> Scenario {
    generate(&GeneratorSpec {
        seed,
        users,
        antennas,
        carriers,
        topology,
        power,
    })
    .expect("generator accepts these dimensions")
}

/// Seeded IC instance with every cross channel set to zero.
pub fn decoupled(seed: u64, users: usize, antennas: usize, carriers: usize, power: f64) -> Scenario {
    let base = scenario(seed, users, antennas, carriers, Topology::Interference, power);
    let inst = &base.instance;
    let mut channels = Vec::new();
    for j in 0..users {
        for k in 0..users {
            for l in 0..carriers {
                let h = inst.channel(j, k, l);
                channels.push(if j == k { h.clone() } else { CVec::zeros(h.len()) });
            }
        }
    }
    let instance = NetworkInstance::new(
        vec![antennas; users],
        carriers,
        Topology::Interference,
        channels,
        inst.noise_powers().to_vec(),
    )
    .unwrap();
    let constraints = ConstraintSet::per_user_power(&instance, &vec![power; users]).unwrap();
    Scenario::new(instance, constraints, UtilitySpec::sum_rate(users)).unwrap()
}

/// Random PSD point scaled onto the boundary of the constraint set times
/// `fill`.
pub fn random_feasible(rng: &mut ChaCha8Rng, inst: &NetworkInstance, cons: &ConstraintSet, fill: f64) -> CovariancePoint {
    let blocks: Vec<CMat> = (0..inst.links())
        .map(|link| {
            let n = inst.antennas(link / inst.carriers());
            let rank = rng.random_range(1..=n);
            let g = CMat::from_fn(n, rank, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            &g * g.adjoint()
        })
        .collect();
    let q = CovariancePoint::from_blocks(inst, blocks).unwrap();
    let worst = cons
        .constraints()
        .iter()
        .map(|c| c.usage(&q) / c.budget)
        .fold(0.0, f64::max);
    q.scaled(fill / worst)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
