// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist analysis and learned hardware Trojan insertion.

pub mod error;
pub mod features;
pub mod harness;
pub mod insert;
pub mod ml;
pub mod validate;
pub mod netlist;

pub use error::{Error, Result};
