//! Library surface of the workbench, shared by the binary and the test
//! suites: configuration schema, output writers and reproduction targets.

pub mod config;
pub mod output;
pub mod reproduce;
