//! Network instances, constraint sets, utilities and the interference map.

pub mod constraints;
pub mod generate;
pub mod instance;
pub mod interference;
pub mod io;
pub mod utility;

pub use constraints::{ConstraintSet, PowerConstraint};
pub use generate::{generate, make_bc, GeneratorSpec};
pub use instance::{quad_form, CMat, CVec, CovariancePoint, NetworkInstance, Topology};
pub use interference::{
    cost, cost_gradient_i, interference_box, interference_map, objective, rates, rates_with_interference,
    signal_powers, InterferenceMap,
};
pub use io::{InstanceFile, Scenario};
pub use utility::{UtilitySpec, RATE_FLOOR};
