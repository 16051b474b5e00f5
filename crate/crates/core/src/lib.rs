pub mod controlled;
pub mod diffusion;
pub mod equation;
pub mod fbm;
pub mod harness;
pub mod integral;
pub mod lift;
pub mod solver;
pub mod spectrum;
pub mod cocycle;
