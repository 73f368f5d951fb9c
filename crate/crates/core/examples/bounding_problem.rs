//! One bounding problem by hand: minimize the cost with the interference
//! fixed at the lower corner of a box, subject to staying inside the box.

use miso_bb::convexcore::{phase1, solve, ConvexSubproblem, Phase1Outcome, SolverOptions};
use miso_bb::model::{generate, interference_box, interference_map, objective, GeneratorSpec, Topology};

fn main() -> miso_bb::Result<()> {
    let s = generate(&GeneratorSpec {
        seed: 5,
        users: 2,
        antennas: 2,
        carriers: 1,
        topology: Topology::Interference,
        power: 10.0,
    })?;
    let opts = SolverOptions::default();
    let root = interference_box(&s.instance, &s.constraints, &opts)?;
    println!("root box: [0, {:?}]", root.upper);

    let lower: Vec<f64> = root.upper.iter().map(|u| 0.25 * u).collect();
    let upper: Vec<f64> = root.upper.iter().map(|u| 0.5 * u).collect();
    let sub = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, lower.clone()).with_box(lower, upper);
    if let Phase1Outcome::Feasible(q) = phase1(&sub, &opts)? {
        println!("strictly feasible start with interference {:?}", interference_map(&s.instance, &q)?);
    }
    let r = solve(&sub, &opts)?;
    let q = r.q.as_ref().expect("box is not empty");
    println!(
        "status {:?}: lower bound {:.6}, achieved cost {:.6}, {} Newton steps (+{} phase one)",
        r.status,
        r.lower_bound,
        objective(&s.instance, &s.utility, q)?,
        r.iterations,
        r.phase1_iterations
    );

    let empty = ConvexSubproblem::new(&s.instance, &s.utility, &s.constraints, vec![0.0, 0.0])
        .with_box(root.upper.iter().map(|u| 1.1 * u).collect(), root.upper.iter().map(|u| 1.2 * u).collect());
    let r = solve(&empty, &opts)?;
    println!("box above the reachable set: {:?}, certificate {:?}", r.status, r.infeasibility_certificate);
    Ok(())
}
