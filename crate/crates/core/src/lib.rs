#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numeric;

pub use error::{ImError, Result};
pub mod applications;
pub mod association;
pub mod belief;
pub mod cli;
pub mod prs;
pub mod score_balance;
pub mod validity;
