//! Simulation toolkit for a universal quantum cloning machine built from three
//! transmon qubits sharing a bus resonator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod numkit;
pub mod protocol;
pub mod tomography;

pub use error::{Error, Result};
