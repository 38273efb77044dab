//! Numerical laboratory for the parabolic Anderson model with a randomly
//! displaced lattice potential.
//!
//! The potential is `V(x) = Σ_q u(x - q - ξ_q)` where `q` runs over `ℤ^d`,
//! `u` is a bounded radial profile with a power tail, and the displacements
//! `ξ_q` are i.i.d. lattice vectors with stretched-exponential weights.
//! The crate provides the pieces needed to study the total mass
//! `v(t; x₀) = E_{x₀}[exp(-∫₀ᵗ V(B_s) ds)]` of the associated heat equation
//! at desk scale:
//!
//! * [`model`]: parameters, the single-site profile, displacement sampling,
//!   and (scaled) potential evaluation with certified truncation bounds.
//! * [`domain`]: unions of axis-aligned grid cells and their meshes.
//! * [`spectral`]: Dirichlet discretization of `-½Δ + V`, principal
//!   eigenpairs, and Crank-Nicolson semigroup evolution.
//! * [`coarse`]: dyadic density classification of point clouds, rarefied
//!   sets, lattice animals, and enumeration of trap-clearing configurations.
//! * [`variational`]: the scaled eigenvalue-plus-displacement-cost
//!   functional and its minimizers.
//! * [`asymptotics`]: closed-form and quadrature-defined constants for the
//!   predicted moment decay rates.
//! * [`feynman_kac`]: Monte Carlo estimation of quenched masses, annealed
//!   moments, and intermittency ratios.

// Input guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0` they
// also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod coarse;
pub mod domain;
mod error;
pub mod feynman_kac;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
