pub mod envgen;
pub mod grid;
pub mod pgm;
pub mod instructions;
pub mod planner;
pub mod metrics;
pub mod costnet;
pub mod dataset;
pub mod bench;
