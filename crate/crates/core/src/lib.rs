pub mod graphs;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod stepper;
pub mod sweep;
pub mod verification;
pub mod cli;
pub mod config;
