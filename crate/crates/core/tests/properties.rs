mod common;

use common::{random_feasible, rng, scenario};
use miso_bb::bb::{bound_box, branch, Rectangle};
use miso_bb::convexcore::SolverOptions;
use miso_bb::model::{
    cost, interference_box, interference_map, objective, rates_with_interference, CovariancePoint, Scenario, Topology,
    UtilitySpec,
};
use miso_bb::oracle::{grid_search, GridSpec};
use proptest::prelude::*;

fn topology(bc: bool) -> Topology {
    if bc {
        Topology::Broadcast
    } else {
        Topology::Interference
    }
}

fn setup(seed: u64, users: usize, antennas: usize, carriers: usize, bc: bool) -> (Scenario, CovariancePoint, CovariancePoint) {
    let s = scenario(seed, users, antennas, carriers, topology(bc), 4.0);
    let mut r = rng(seed ^ 0x5eed);
    let a = random_feasible(&mut r, &s.instance, &s.constraints, 1.0);
    let b = random_feasible(&mut r, &s.instance, &s.constraints, 0.6);
    (s, a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interference_is_affine_and_nonnegative(
        seed in 0u64..10_000, users in 1usize..4, antennas in 1usize..4, carriers in 1usize..3, bc: bool, t in 0.0f64..1.0,
    ) {
        let (s, a, b) = setup(seed, users, antennas, carriers, bc);
        let ia = interference_map(&s.instance, &a).unwrap();
        let ib = interference_map(&s.instance, &b).unwrap();
        let mix = interference_map(&s.instance, &a.convex_combination(&b, t)).unwrap();
        for m in 0..mix.len() {
            let expected = t * ia[m] + (1.0 - t) * ib[m];
            prop_assert!((mix[m] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            prop_assert!(ia[m] >= 0.0 && mix[m] >= 0.0);
        }
    }

    #[test]
    fn feasible_interference_stays_in_root_box(
        seed in 0u64..10_000, users in 1usize..4, antennas in 1usize..3, bc: bool,
    ) {
        let (s, a, _) = setup(seed, users, antennas, 1, bc);
        let root = interference_box(&s.instance, &s.constraints, &SolverOptions::default()).unwrap();
        let i = interference_map(&s.instance, &a).unwrap();
        prop_assert!(root.contains(&i, 1e-7), "{i:?} outside {:?}", root.upper);
    }

    #[test]
    fn cost_is_monotone_in_interference(
        seed in 0u64..10_000, users in 1usize..4, antennas in 1usize..3, carriers in 1usize..3,
        alpha in prop::sample::select(vec![0.0, 0.5, 1.0, 2.0]), bump in 1e-3f64..5.0, which in 0usize..6,
    ) {
        let (s, a, _) = setup(seed, users, antennas, carriers, false);
        let util = UtilitySpec::new(alpha, vec![1.0; users]).unwrap();
        let i = interference_map(&s.instance, &a).unwrap();
        let mut j = i.clone();
        let m = which % j.len();
        j[m] += bump;
        let before = cost(&s.instance, &util, &a, &i).unwrap();
        let after = cost(&s.instance, &util, &a, &j).unwrap();
        prop_assert!(after >= before - 1e-14);
        // strict whenever the bumped link carries signal
        let r0 = rates_with_interference(&s.instance, &a, &i).unwrap();
        if r0[m / carriers] > 1e-9 {
            let signal = miso_bb::model::signal_powers(&s.instance, &a).unwrap()[m];
            if signal > 1e-9 {
                prop_assert!(after > before);
            }
        }
    }

    #[test]
    fn cost_is_convex_in_q_for_fixed_interference(
        seed in 0u64..10_000, users in 1usize..4, antennas in 1usize..3, carriers in 1usize..3,
        alpha in prop::sample::select(vec![0.0, 0.5, 1.0, 3.0]), t in 0.0f64..1.0,
    ) {
        let (s, a, b) = setup(seed, users, antennas, carriers, true);
        let util = UtilitySpec::new(alpha, vec![1.0; users]).unwrap();
        let i = interference_map(&s.instance, &a.convex_combination(&b, 0.5)).unwrap();
        let fa = cost(&s.instance, &util, &a, &i).unwrap();
        let fb = cost(&s.instance, &util, &b, &i).unwrap();
        let fm = cost(&s.instance, &util, &a.convex_combination(&b, t), &i).unwrap();
        prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-12 * (1.0 + fa.abs() + fb.abs()));
    }

    #[test]
    fn cost_at_own_interference_is_the_objective(
        seed in 0u64..10_000, users in 1usize..4, antennas in 1usize..3, carriers in 1usize..3, bc: bool,
    ) {
        let (s, a, _) = setup(seed, users, antennas, carriers, bc);
        let i = interference_map(&s.instance, &a).unwrap();
        let c = cost(&s.instance, &s.utility, &a, &i).unwrap();
        let o = objective(&s.instance, &s.utility, &a).unwrap();
        prop_assert_eq!(c, o);
    }

    #[test]
    fn bisection_halves_the_box(
        lower in prop::collection::vec(0.0f64..1.0, 1..6), widths in prop::collection::vec(0.0f64..3.0, 6),
        scale in prop::collection::vec(0.1f64..10.0, 6),
    ) {
        let upper: Vec<f64> = lower.iter().zip(&widths).map(|(l, w)| l + w).collect();
        let scale = &scale[..lower.len()];
        let rect = Rectangle::new(lower.clone(), upper.clone());
        match branch(&rect, scale) {
            None => prop_assert!(widths[..lower.len()].iter().zip(scale).all(|(w, s)| w / s <= 1e-12)),
            Some((a, b)) => {
                prop_assert!((a.volume() + b.volume() - rect.volume()).abs() <= 1e-12 * (1.0 + rect.volume()));
                for m in 0..lower.len() {
                    prop_assert_eq!(a.lower[m], lower[m]);
                    prop_assert_eq!(b.upper[m], upper[m]);
                    prop_assert!(a.upper[m] == b.lower[m] || (a.upper[m] == upper[m] && b.lower[m] == lower[m]));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_are_nested(
        seed in 0u64..10_000, bc: bool, cuts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2),
    ) {
        let s = scenario(seed, 2, 2, 1, topology(bc), 5.0);
        let opts = SolverOptions::default();
        let root = interference_box(&s.instance, &s.constraints, &opts).unwrap();
        let (mut lo, mut hi) = (root.lower(), root.upper.clone());
        let parent = bound_box(&s.instance, &s.utility, &s.constraints, &lo, &hi, &opts, f64::NEG_INFINITY).unwrap();
        for (m, (a, b)) in cuts.iter().enumerate() {
            let (a, b) = (a.min(*b), a.max(*b));
            lo[m] = a * root.upper[m];
            hi[m] = b * root.upper[m];
        }
        let child = bound_box(&s.instance, &s.utility, &s.constraints, &lo, &hi, &opts, parent.lb).unwrap();
        prop_assert!(child.lb >= parent.lb - 2e-8, "{} < {}", child.lb, parent.lb);
        prop_assert!(parent.ub >= parent.lb - 2e-8);
    }
}

#[test]
fn doubling_grid_resolution_never_hurts() {
    for seed in 0..4 {
        let s = scenario(seed, 2, 2, 1, Topology::Interference, 3.0);
        let mut spec = GridSpec::coarse(8);
        let mut last = f64::INFINITY;
        for _ in 0..3 {
            let g = grid_search(&s.instance, &s.utility, &s.constraints, &spec).unwrap();
            assert!(g.cost_best <= last + 1e-12, "seed {seed}: {} after {last}", g.cost_best);
            last = g.cost_best;
            spec = spec.doubled();
        }
    }
}

#[test]
fn generator_is_deterministic() {
    let a = scenario(77, 3, 2, 2, Topology::Interference, 2.0).to_json();
    let b = scenario(77, 3, 2, 2, Topology::Interference, 2.0).to_json();
    let c = scenario(78, 3, 2, 2, Topology::Interference, 2.0).to_json();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
