//! Global optimum of a two-user MISO interference channel, checked against
//! the exhaustive rank-one grid.

use std::f64::consts::LN_2;

use miso_bb::bb::{run_bb, BbOptions};
use miso_bb::model::{generate, rates, GeneratorSpec, Topology};
use miso_bb::oracle::{grid_search, GridSpec};

fn main() -> miso_bb::Result<()> {
    let s = generate(&GeneratorSpec {
        seed: 4,
        users: 2,
        antennas: 2,
        carriers: 1,
        topology: Topology::Interference,
        power: 10.0,
    })?;
    let opts = BbOptions {
        record_trace: true,
        ..BbOptions::default()
    };
    let r = run_bb(&s.instance, &s.utility, &s.constraints, &opts)?;
    println!(
        "branch and bound: L = {:.6}, U = {:.6}, {} nodes, depth {}, {:.2} s",
        r.lower_final, r.upper_final, r.stats.nodes_bounded, r.stats.max_depth, r.stats.seconds
    );
    let per_user = rates(&s.instance, r.q_best.as_ref().expect("feasible"))?;
    println!("rates: {:.4} and {:.4} bits", per_user[0] / LN_2, per_user[1] / LN_2);

    // how the global bounds closed in
    let step = (r.history.len() / 8).max(1);
    for (n, (l, u)) in r.history.iter().enumerate().step_by(step) {
        println!("  node {n:6}: L = {l:.5}  U = {u:.5}");
    }

    let g = grid_search(&s.instance, &s.utility, &s.constraints, &GridSpec::default())?;
    println!(
        "grid oracle: {:.6} (resolution bound {:.1e}, {} points)",
        g.cost_best, g.resolution_bound, g.points_evaluated
    );
    assert!(r.lower_final <= g.cost_best && g.cost_best <= r.upper_final + g.resolution_bound);
    Ok(())
}
