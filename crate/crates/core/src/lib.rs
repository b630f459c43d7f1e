//! Numerical core for phenotype-structured populations in a fast periodic
//! environment: cell-problem orbits, effective fitness, the viscous
//! Hamilton-Jacobi simulation, its constrained limit and long-time states.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cell;
pub mod direct;
pub mod error;
pub mod esd;
pub mod grid;
pub mod hjlimit;
pub mod model;
pub mod numerics;
pub mod point;
pub mod scheme;

pub use cell::{EffectiveFitness, Fitness};
pub use error::{Error, Result};
pub use grid::TraitGrid;
pub use model::{presets, GrowthModel, InitialDatum};
pub use point::{SymMatrix, TraitPoint};
