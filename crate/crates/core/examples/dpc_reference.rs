//! Linear precoding against the dirty-paper-coding sum capacity of the same
//! broadcast channel.

use std::f64::consts::LN_2;

use miso_bb::bb::{run_bb, BbOptions};
use miso_bb::convexcore::SolverOptions;
use miso_bb::model::{generate, GeneratorSpec, Topology};
use miso_bb::oracle::dpc_sum_capacity;
use miso_bb::sweep::at_power;

fn main() -> miso_bb::Result<()> {
    let base = generate(&GeneratorSpec {
        seed: 3,
        users: 3,
        antennas: 2,
        carriers: 1,
        topology: Topology::Broadcast,
        power: 1.0,
    })?;
    let opts = BbOptions {
        max_nodes: 2000,
        ..BbOptions::default()
    };
    for db in [0.0, 10.0, 20.0, 30.0] {
        let s = at_power(&base, db);
        let dpc = dpc_sum_capacity(&s.instance, &s.constraints, &SolverOptions::default())?;
        let bb = run_bb(&s.instance, &s.utility, &s.constraints, &opts)?;
        println!(
            "{db:>4} dB: DPC {:7.3}  linear {:7.3} (bound {:7.3}{})  dual powers {:?}",
            dpc.capacity / LN_2,
            -bb.upper_final / LN_2,
            -bb.lower_final / LN_2,
            if bb.converged { "" } else { ", budget hit" },
            dpc.powers.iter().map(|p| (p * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }
    Ok(())
}
