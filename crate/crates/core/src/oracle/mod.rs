//! Reference solutions: exhaustive rank-one grid search, decoupled
//! waterfilling and the DPC sum capacity of a broadcast channel.

pub mod dpc;
pub mod grid;
pub mod waterfill;

pub use dpc::{dpc_sum_capacity, DpcResult};
pub use grid::{grid_search, GridResult, GridSpec};
pub use waterfill::{waterfilling_decoupled, WaterfillResult};
