// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod analysis;
pub mod attribution;
pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
