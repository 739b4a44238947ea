//! IO companion to the `swarmform` core: scenario file format, trajectory
//! CSV and summary writers, and the verification suite drivers behind the
//! command-line interface.

pub mod format;
pub mod output;
pub mod verify;
