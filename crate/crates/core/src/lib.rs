//! A desk-scale laboratory for large deviations of empirical means of lattice
//! random fields.
//!
//! * [`lattice`]: boxes in Z^d and the gapped sub-box partition.
//! * [`fields`]: samplers for i.i.d., Markov, and Ising fields with their
//!   declared decoupling and local-control parameters and exact oracles.
//! * [`convex`]: gauges, discrete conjugation, subadditive sequences.
//! * [`estimators`]: entropy and pressure estimators plus inequality checks.
//! * [`expcli`]: config-driven experiment runner behind the `ldlab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod estimators;
pub mod expcli;
pub mod fields;
pub mod lattice;
pub mod numeric;
pub mod rng;
