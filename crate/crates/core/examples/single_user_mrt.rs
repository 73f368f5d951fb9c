//! A single user sees no interference, so branch and bound closes the gap
//! at the root and matches maximum-ratio transmission.

use miso_bb::bb::{run_bb, BbOptions};
use miso_bb::model::{generate, rates, GeneratorSpec, Topology};

fn main() -> miso_bb::Result<()> {
    for antennas in [1, 2, 4] {
        let s = generate(&GeneratorSpec {
            seed: 11,
            users: 1,
            antennas,
            carriers: 1,
            topology: Topology::Broadcast,
            power: 10.0,
        })?;
        let r = run_bb(&s.instance, &s.utility, &s.constraints, &BbOptions::default())?;
        let q = r.q_best.as_ref().expect("feasible");
        let h = s.instance.channel(0, 0, 0);
        let mrt = (1.0 + 10.0 * h.norm_squared()).ln();
        println!(
            "N = {antennas}: rate {:.9} nats, MRT {:.9} nats, nodes {}, gap {:.1e}",
            rates(&s.instance, q)?[0],
            mrt,
            r.stats.nodes_bounded,
            r.gap
        );
    }
    Ok(())
}
