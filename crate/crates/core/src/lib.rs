#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chaos;
pub mod couplings;
pub mod distances;
pub mod error;
pub mod experiments;
pub mod hermite;
pub mod linalg;
pub mod malliavin;
pub mod mc;
pub mod quad;
pub mod special;
pub mod stein;

pub use error::{Error, Result};
