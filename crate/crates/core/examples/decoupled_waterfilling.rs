//! Without cross channels the problem separates: each link uses MRT and the
//! budgets are waterfilled over carriers. Branch and bound and pricing
//! recover the same point.

use miso_bb::bb::{run_bb, BbOptions};
use miso_bb::model::{
    generate, interference_box, CVec, ConstraintSet, GeneratorSpec, NetworkInstance, Scenario, Topology, UtilitySpec,
};
use miso_bb::oracle::waterfilling_decoupled;
use miso_bb::pricing::{run_pricing, PricingOptions};

fn main() -> miso_bb::Result<()> {
    let (users, carriers) = (2, 3);
    let coupled = generate(&GeneratorSpec {
        seed: 21,
        users,
        antennas: 2,
        carriers,
        topology: Topology::Interference,
        power: 4.0,
    })?;
    let mut channels = Vec::new();
    for j in 0..users {
        for k in 0..users {
            for l in 0..carriers {
                let h = coupled.instance.channel(j, k, l);
                channels.push(if j == k { h.clone() } else { CVec::zeros(h.len()) });
            }
        }
    }
    let inst = NetworkInstance::new(vec![2; users], carriers, Topology::Interference, channels, vec![1.0; users * carriers])?;
    let cons = ConstraintSet::per_user_power(&inst, &[4.0, 4.0])?;
    let s = Scenario::new(inst, cons, UtilitySpec::sum_rate(users))?;

    let w = waterfilling_decoupled(&s.instance, &s.utility, &s.constraints)?;
    println!("waterfilling: cost {:.9}, levels {:?}", w.cost, w.levels);
    println!("  powers per (user, carrier): {:?}", w.powers.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>());

    let bb = run_bb(&s.instance, &s.utility, &s.constraints, &BbOptions::default())?;
    println!("branch and bound: cost {:.9} after {} node(s)", bb.upper_final, bb.stats.nodes_bounded);

    let opts = PricingOptions::default();
    let root = interference_box(&s.instance, &s.constraints, &opts.solver)?;
    let p = run_pricing(&s.instance, &s.utility, &s.constraints, &root, &vec![1e-5; root.len()], &vec![1.0; root.len()], &opts)?;
    println!("pricing: cost {:.9}, converged {}", p.cost, p.converged);
    Ok(())
}
