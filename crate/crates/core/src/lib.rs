//! Bounded episodic-control memories for reinforcement learning.
//!
//! - [`memory`]: per-action k-NN value tables with LRU, REW, SUR, online
//!   k-means and dynamic online k-means storage strategies.
//! - [`agent`]: the model-free episodic control agent and its training loop.
//! - [`envs`]: CartPole, Acrobot, two gridworlds and a drifting 2D stream.
//! - [`harness`]: multi-seed experiments, CSV output and final-score tables.
//! - [`analysis`]: streaming-memory coverage study with batch k-means and KDE.

pub mod agent;
pub mod analysis;
pub mod envs;
pub mod harness;
pub mod memory;
