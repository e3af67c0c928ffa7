//! Numerical experiments on the operational Jacob's ladder `phi_1` of the
//! Riemann zeta function: the Hardy-Littlewood integral, mean-value node
//! vectors, factorization identities and their crossbred hybrids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod factorization;
pub mod hybrid;
pub mod ladder;
pub mod quadrature;
pub mod report;
pub mod zeta;

#[cfg(test)]
mod test_support;

pub use config::LabConfig;
pub use error::{LabError, Result};
