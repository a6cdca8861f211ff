//! Co-design of transmit beamforming and per-element radiation patterns for a
//! pattern-reconfigurable reflecting surface serving a multiuser downlink.
//!
//! The crate is organized around the pipeline used by the experiment runner:
//!
//! * [`sph`] — complex spherical harmonics, quadrature, pattern synthesis and
//!   fitting under the per-element energy constraint `‖ω‖² = 4π`.
//! * [`channel`] — multipath geometry sampling, array steering, and the
//!   factorized channel form `H = Ω^H A`, `h_k = Ω^H b_k`.
//! * [`power`] — closed-form received-power analysis for point-to-point
//!   reflect-assisted links (passive beamforming vs. position vs. pattern
//!   reconfigurability) with brute-force verification hooks.
//! * [`beamforming`] — weighted sum-rate beamforming via the MMSE surrogate,
//!   its quadratic model, and a dual bisection on the power constraint.
//! * [`manifold`] / [`pattern`] — Riemannian conjugate gradient on the product
//!   of spheres, specialized to harmonic-coefficient banks.
//! * [`solver`] — the alternating co-design loop plus ZF and fixed-pattern
//!   passive-beamforming baselines.
//! * [`config`] / [`experiments`] — scenario files, sweeps, and CSV output.
//!
//! Monte-Carlo batches run on rayon when the `parallel` feature (default) is
//! enabled; disabling it leaves a purely sequential build with the same API.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifold;
pub mod parallel;
pub mod pattern;
pub mod power;
pub mod solver;
pub mod sph;

pub use error::{Error, Result};
