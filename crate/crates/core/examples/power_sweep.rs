//! Sum rate versus transmit power for every algorithm, as CSV.

use miso_bb::bb::BbOptions;
use miso_bb::model::{generate, GeneratorSpec, Topology};
use miso_bb::sweep::{run_sweep, SweepAlgorithm, SweepSpec};

fn main() -> miso_bb::Result<()> {
    let base = generate(&GeneratorSpec {
        seed: 2,
        users: 2,
        antennas: 2,
        carriers: 1,
        topology: Topology::Broadcast,
        power: 1.0,
    })?;
    let spec = SweepSpec {
        bb: BbOptions {
            max_nodes: 5000,
            ..BbOptions::default()
        },
        ..SweepSpec::new(
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            vec![
                SweepAlgorithm::Bb,
                SweepAlgorithm::Pricing { lambda0: 1e-5 },
                SweepAlgorithm::Pricing { lambda0: 1.0 },
                SweepAlgorithm::Dpc,
                SweepAlgorithm::Grid,
            ],
        )
    };
    let table = run_sweep(&base, &spec)?;
    print!("{}", table.to_csv());
    Ok(())
}
