//! NN-HW co-design over a sparsely valid configurable-accelerator space.
//!
//! The crate is organized around an analytical accelerator cost model
//! ([`accel`]), a supernet-style NN search space ([`nnspace`]), a minimal
//! reverse-mode autodiff engine ([`gradcore`]), surrogate models trained
//! against the cost model ([`surrogates`]), RL hardware optimizers
//! ([`rlopt`]), and the co-design loops plus baselines ([`codesign`]).

pub mod accel;
pub mod codesign;
pub mod gradcore;
pub mod nnspace;
pub mod rlopt;
pub mod surrogates;

pub use accel::{HwConfig, HwSpace, LayerWorkload, PerfReport};
pub use nnspace::{ArchDistribution, Architecture, ChoiceId, SupernetSpec};
