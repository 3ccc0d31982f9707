//! Two-time conditional currents and flow-line trajectories in 1+1 dimensions.

pub mod currents;
pub mod entanglement;
pub mod mechanics;
pub mod output;
pub mod spacetime;
pub mod scenario;
pub mod states;
pub mod trajectories;

#[cfg(test)]
pub(crate) mod oracles;
