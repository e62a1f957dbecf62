#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod continuity;
pub mod corpus;
pub mod directsum;
pub mod domain;
pub mod error;
pub mod io;
pub(crate) mod linalg;
pub mod lp;
pub mod oracle;
pub mod p1;
pub mod par;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
