//! Interference pricing on a four-user broadcast channel from the two
//! standard starting prices. The fixed point it lands on depends on the
//! start, and neither need be the global optimum.

use std::f64::consts::LN_2;

use miso_bb::model::{generate, interference_box, GeneratorSpec, Topology};
use miso_bb::pricing::{run_pricing, PricingOptions};
use miso_bb::sweep::at_power;

fn main() -> miso_bb::Result<()> {
    let base = generate(&GeneratorSpec {
        seed: 1,
        users: 4,
        antennas: 4,
        carriers: 1,
        topology: Topology::Broadcast,
        power: 1.0,
    })?;
    let opts = PricingOptions::default();
    println!("{:>5} {:>14} {:>14}", "dB", "lambda0=1e-5", "lambda0=1");
    for db in [5.0, 15.0, 25.0, 35.0] {
        let s = at_power(&base, db);
        let root = interference_box(&s.instance, &s.constraints, &opts.solver)?;
        let l = root.len();
        let mut line = format!("{db:>5}");
        for lambda0 in [1e-5, 1.0] {
            let r = run_pricing(&s.instance, &s.utility, &s.constraints, &root, &vec![lambda0; l], &vec![1.0; l], &opts)?;
            let mark = if r.converged { ' ' } else { '*' };
            line.push_str(&format!(" {:>13.3}{mark}", -r.cost / LN_2));
        }
        println!("{line}");
    }
    println!("(bits per channel use; * = not converged)");
    Ok(())
}
