//! Movable-antenna upward coverage simulator.
//!
//! A base-station array whose elements can move inside small boxes (and whose
//! mount can tilt) serves a single-antenna UAV over a Rician channel. For each
//! voxel of the airspace the element placement is searched with a hybrid
//! particle-swarm / simulated-annealing optimizer, the transmit beam is set by
//! maximum ratio transmission, and the voxel counts as covered when the best
//! SNR clears the threshold.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod seeds;

pub use beamforming::{mrt, received_snr, uniform_beam, BeamVector, SnrResult};
pub use channel::{channel_vector, sample_paths, ChannelParams, ChannelVector, Path, PathSet};
pub use coverage::{
    calibrate_noise, compare_schemes, evaluate_voxel, make_grid, run_coverage, Comparison,
    CoverageMap, Region, Scenario, Scheme, SchemeDelta, VoxelGrid, VoxelRecord,
};
pub use error::{Error, Result};
pub use geometry::{ArrayConfig, MovementRegion, TiltAngle, Vec3};
pub use optimizer::{optimize, LinkBudget, PsoParams, SearchSpace, SwarmResult};
