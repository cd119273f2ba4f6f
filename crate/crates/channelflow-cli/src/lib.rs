//! Library surface of the command-line front end (scenario schema, runner,
//! plots), shared with the acceptance suite.

pub mod plots;
pub mod runner;
pub mod scenario;
