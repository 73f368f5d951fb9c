use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use num_complex::Complex64;

use super::constraints::ConstraintSet;
use super::instance::{CVec, NetworkInstance, Topology};
use super::io::Scenario;
use super::utility::UtilitySpec;
use crate::error::{Error, Result};

/// Parameters of the seeded random instance generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub users: usize,
    /// Antennas per transmitter (the base station for a broadcast channel).
    pub antennas: usize,
    pub carriers: usize,
    pub topology: Topology,
    /// Sum-power budget (BC) or per-user budget (IC), with unit noise.
    pub power: f64,
}

/// Draws a unit-variance circularly-symmetric complex Gaussian vector.
pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_iterator(
        n,
        (0..n).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        }),
    )
}

/// Broadcast channel as an interference channel with replicated channels
/// and a single sum-power constraint `Tr(sum Q_kl) <= p_tot`.
///
/// `channels[k * L_C + l]` is the channel from the base station to
/// receiver `k` on carrier `l`.
pub fn make_bc(
    users: usize,
    antennas: usize,
    carriers: usize,
    channels: &[CVec],
    noise: Vec<f64>,
    p_tot: f64,
) -> Result<(NetworkInstance, ConstraintSet)> {
    if channels.len() != users * carriers {
        return Err(Error::Dimension(format!(
            "broadcast needs {} channel vectors, got {}",
            users * carriers,
            channels.len()
        )));
    }
    let mut full = Vec::with_capacity(users * users * carriers);
    for _j in 0..users {
        for k in 0..users {
            for l in 0..carriers {
                full.push(channels[k * carriers + l].clone());
            }
        }
    }
    let inst = NetworkInstance::new(vec![antennas; users], carriers, Topology::Broadcast, full, noise)?;
    let cons = ConstraintSet::sum_power(&inst, p_tot)?;
    Ok((inst, cons))
}

/// Deterministic random scenario with unit noise and unit weights.
pub fn generate(spec: &GeneratorSpec) -> Result<Scenario> {
    if spec.users == 0 || spec.antennas == 0 || spec.carriers == 0 {
        return Err(Error::Validation("K, N and L_C must be positive".into()));
    }
    if !(spec.power > 0.0 && spec.power.is_finite()) {
        return Err(Error::Validation(format!("power must be positive, got {}", spec.power)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (k, n, lc) = (spec.users, spec.antennas, spec.carriers);
    let noise = vec![1.0; k * lc];
    let (instance, constraints) = match spec.topology {
        Topology::Broadcast => {
            let channels: Vec<CVec> = (0..k * lc).map(|_| gaussian_vector(&mut rng, n)).collect();
            make_bc(k, n, lc, &channels, noise, spec.power)?
        }
        Topology::Interference => {
            let channels: Vec<CVec> = (0..k * k * lc).map(|_| gaussian_vector(&mut rng, n)).collect();
            let inst = NetworkInstance::new(vec![n; k], lc, Topology::Interference, channels, noise)?;
            let cons = ConstraintSet::per_user_power(&inst, &vec![spec.power; k])?;
            (inst, cons)
        }
    };
    let mut s = Scenario::new(instance, constraints, UtilitySpec::sum_rate(k))?;
    s.seed = Some(spec.seed);
    Ok(s)
}
