//! Simulation and exact computation for the asymmetric simple exclusion
//! process (ASEP) on a segment with one open boundary.
//!
//! Particles hop right at rate 1 and left at rate `q` under the exclusion
//! rule; site 1 exchanges particles with a reservoir at rates `alpha` (in)
//! and `gamma` (out). The crate provides:
//!
//! - event-driven simulation of the single-species, multi-species, fully
//!   colored, and half-space processes, with a shared-clock coupling engine
//!   ([`sim`]);
//! - the type-BC Hecke algebra picture: exact sparse algebra over the
//!   hyperoctahedral group, Mallows elements, the anti-involution
//!   ([`perm`], [`hecke`]);
//! - exact transient and stationary analysis on `{0,1}^N`: generator
//!   matrices, uniformization, two independent stationary constructions,
//!   total-variation profiles, and the Hecke-module expectation
//!   ([`exact`]);
//! - Monte Carlo experiments for current fluctuations, hitting profiles,
//!   Mallows tails, mixing times, and the duality check ([`experiments`]);
//! - Tracy-Widom GOE/GSE reference tables computed from Airy-kernel
//!   Fredholm determinants ([`tw`]), consumed at runtime as plain
//!   two-column files ([`params::CdfTable`]).

pub mod checks;
pub mod config;
pub mod exact;
pub mod experiments;
pub mod hecke;
pub mod params;
pub mod perm;
pub mod rng;
pub mod sim;
pub mod tw;

pub use config::{ColoredConfig, Config, Distribution, Species};
pub use params::{ModelParams, Phase, PhaseInfo, ReferenceCdf};
pub use perm::SignedPermutation;
