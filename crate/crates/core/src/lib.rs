//! Formal testing toolkit for learning-enabled cyber-physical systems.

pub mod abstraction;
pub mod cli;
pub mod config;
pub mod dsl;
pub mod fuzz;
pub mod lstar;
pub mod llm;
pub mod ltl;
pub mod monitor;
pub mod sat;
pub mod sim;
