//! Batch experiment driver for the lamplighter embedding toolkit: graph
//! family generators, seeded experiment orchestration, and machine-readable
//! reports.

pub mod config;
pub mod report;
pub mod runner;
