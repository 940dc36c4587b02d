//! Verification harness for the `flagbeta` crate: quadrature oracles,
//! identity suites, JSON reports and sample files.

pub mod config;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod samples_io;
pub mod suites;
