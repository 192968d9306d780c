pub mod codec;
pub mod config;
pub mod report;
pub mod suites;
