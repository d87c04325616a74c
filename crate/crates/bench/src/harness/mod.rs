pub mod config;
pub mod metrics;
pub mod records;
pub mod runner;
pub mod seeds;
