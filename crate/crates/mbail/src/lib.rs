//! Tabular imitation-learning laboratory.
//!
//! The crate provides exact finite-horizon MDP machinery, a model-based
//! adversarial imitation learner, behavioral-cloning and online-IL baselines
//! on a stochastic GridWorld, and numerical certifiers for a family of hard
//! instances used to study sample-complexity lower bounds.

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod envs;
pub mod error;
pub mod harness;
pub mod learner;
pub mod mdp;

pub use error::{Error, Result};
