//! Look-ahead tree policies with a learned node scorer.
//!
//! At every decision step a search tree is grown from the current state by
//! repeatedly expanding the open leaf with the highest score, until a fixed
//! number of expansions has been spent. The policy then plays the first action
//! on the path to the node with the best discounted return. Node scores come
//! from a linear function of node features whose weights are tuned offline by
//! derivative-free optimization of the closed-loop return.
//!
//! Modules:
//! - [`mdp`]: deterministic generative models and the benchmark domains.
//! - [`tree`]: budgeted best-first tree construction and action selection.
//! - [`optimize`]: cross-entropy method, (1+1)-ES and GP optimization.
//! - [`harness`]: receding-horizon evaluation, campaigns and budget sweeps.
//! - [`config`], [`artifacts`], [`cli`]: the experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod optimize;
pub mod tree;

pub use error::{Error, Result};
pub use mdp::{ActionId, Domain, GenerativeModel, StateVector};
pub use tree::{act, build_tree, select_action, BaselineKind, LookaheadTree, Scorer, ScoringParameters};
