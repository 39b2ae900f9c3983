//! Host-side tooling around `chrcp_core`: loading source files, JSON reports,
//! step traces and the parallel soundness fuzzer behind the `chrcp` binary.

pub mod files;
pub mod fuzz;
pub mod report;
pub mod trace;
