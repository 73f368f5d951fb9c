//! Building an instance by hand, adding a per-antenna constraint and
//! round-tripping it through the JSON file format.

use miso_bb::model::{
    CMat, CVec, ConstraintSet, NetworkInstance, PowerConstraint, Scenario, Topology, UtilitySpec,
};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() -> miso_bb::Result<()> {
    // two users, two antennas each, one carrier; channels ordered by
    // transmitter, then receiver
    let channels = vec![
        CVec::from_vec(vec![c(1.0, 0.2), c(-0.4, 0.9)]),
        CVec::from_vec(vec![c(0.3, -0.1), c(0.2, 0.2)]),
        CVec::from_vec(vec![c(0.1, 0.4), c(-0.3, 0.0)]),
        CVec::from_vec(vec![c(0.8, -0.7), c(0.5, 0.5)]),
    ];
    let inst = NetworkInstance::new(vec![2, 2], 1, Topology::Interference, channels, vec![1.0, 0.5])?;

    // per-user budgets plus a cap on the first antenna of user 0
    let mut set = ConstraintSet::per_user_power(&inst, &[2.0, 2.0])?.constraints().to_vec();
    let mut first = CMat::zeros(2, 2);
    first[(0, 0)] = c(1.0, 0.0);
    set.push(PowerConstraint {
        weights: vec![Some(first), None],
        budget: 0.5,
    });
    let cons = ConstraintSet::new(&inst, set)?;
    let s = Scenario::new(inst, cons, UtilitySpec::new(1.0, vec![1.0, 2.0])?)?;

    let text = s.to_json();
    println!("{text}");
    let back = Scenario::from_json(&text)?;
    assert_eq!(back.to_json(), text);

    match Scenario::from_json("{\n  \"users\": 2,\n  \"antennas\": [2, oops]\n}") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
