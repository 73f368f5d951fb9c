use miso_bb::model::{generate, GeneratorSpec, Topology};
use miso_bb::oracle::{grid_search, GridSpec};

fn main() -> miso_bb::Result<()> {
    let s = generate(&GeneratorSpec {
        seed: 9,
        users: 2,
        antennas: 2,
        carriers: 1,
        topology: Topology::Interference,
        power: 10.0,
    })?;
    for resolution in [8, 16, 32] {
        let g = grid_search(&s.instance, &s.utility, &s.constraints, &GridSpec::coarse(resolution))?;
        println!(
            "coarse {resolution:>2}: cost {:.6}, resolution bound {:.2e}, {} points",
            g.cost_best, g.resolution_bound, g.points_evaluated
        );
    }
    let g = grid_search(&s.instance, &s.utility, &s.constraints, &GridSpec::default())?;
    println!("refined:   cost {:.6}, resolution bound {:.2e}, {} points", g.cost_best, g.resolution_bound, g.points_evaluated);

    let big = generate(&GeneratorSpec {
        seed: 9,
        users: 3,
        antennas: 2,
        carriers: 1,
        topology: Topology::Interference,
        power: 10.0,
    })?;
    match grid_search(&big.instance, &big.utility, &big.constraints, &GridSpec::default()) {
        Err(e) => println!("three users: {e}"),
        Ok(_) => unreachable!("three users exceed the caps"),
    }
    Ok(())
}
