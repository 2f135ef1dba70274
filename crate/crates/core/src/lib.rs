//! Simulation and learning core for a mobile robot that blows scattered
//! objects into a receptacle.
//!
//! The crate is `no_std` (it only needs `alloc`) so the whole pipeline from
//! physics to Q-learning is plain deterministic computation. File formats,
//! configuration and the command line live in the `blowsim` crate.
//!
//! Layout:
//! - [`sim`]: 2D world, blower particles, movement primitives, rewards.
//! - [`mapping`]: ray-cast sensing, map fusion, distance fields, egocentric state.
//! - [`action`]: spatial action maps and their decoding into primitives.
//! - [`nn`]: the fully convolutional Q-network with hand-written gradients.
//! - [`dqn`]: replay, double-DQN targets, exploration, target sync.
//! - [`multifreq`]: interleaved subpolicies and reward accumulation.
//! - [`episode`]: per-episode reward assembly and termination.
//! - [`agent`]: environment wrapper, trainer loop and evaluation rollouts.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod action;
pub mod agent;
pub mod dqn;
pub mod episode;
pub mod grid;
pub mod mapping;
pub mod math;
pub mod multifreq;
pub mod nn;
pub mod seed;
pub mod sim;

mod error;

pub use error::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;
