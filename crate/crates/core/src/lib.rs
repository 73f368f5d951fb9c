pub mod bb;
pub mod cli;
pub mod convexcore;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod sweep;

pub use error::{Error, Result};
