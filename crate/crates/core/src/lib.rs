//! Shooting-method construction of rotationally symmetric f-minimal tori.
//!
//! A rotation hypersurface is described by its profile curve `(x(t), r(t))`
//! in arc length, with `theta` the tangent angle. Shooting from `(0, R)`
//! horizontally and bisecting `R` until the curve becomes vertical exactly
//! on the `r`-axis gives a half-profile that closes up by reflection.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in a separate crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod math;
mod roots;

pub mod geometry;
pub mod integrate;
pub mod profile_ode;
pub mod shooting;
pub mod weight;

pub use integrate::{
    integrate, Direction, EventHit, EventKind, EventSpec, IntegrateError, IntegratorOptions,
    Terminal, Trajectory, TruncationReason,
};
pub use profile_ode::{ProblemParams, ProfileState};
pub use shooting::{
    find_horizontal_point, find_torus, shoot, Classification, ShootError, ShotOutcome,
    TorusSettings, TorusSolution,
};
pub use weight::{WeightError, WeightFunction};
