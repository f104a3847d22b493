//! Sequential geosteering decisions under geological uncertainty.
//!
//! Two synthetic reservoirs ([`env::Env1`], [`env::Env2`]) are drilled by
//! interchangeable agents: a one-stage greedy optimizer, a dynamic program
//! over a discretized belief state, tabular Q-learning and a deep Q-network.
//! The [`harness`] module trains, evaluates and compares them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agents;
pub mod bayes;
pub mod env;
pub mod error;
pub mod geomodel;
pub mod harness;
pub mod neural;
pub mod rng;

pub use error::{Error, Result};
