//! Concrete environments and combinatorial constructions.

pub mod gridworld;
pub mod hard_instance;
pub mod packing;
