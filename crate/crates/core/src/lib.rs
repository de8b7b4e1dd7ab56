// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod cpd;
pub mod env;
pub mod error;
pub mod harness;
pub mod kl;
pub mod policies;
pub mod statcheck;

pub use error::{Error, Result};
