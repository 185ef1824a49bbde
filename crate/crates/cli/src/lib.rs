//! IO companion of the exact local-resolution toolkit: polynomial text
//! grammar, JSON and DOT reports, and the command-line front end.

pub mod format;
pub mod report;
pub mod run;

pub use run::{run, Outcome};
