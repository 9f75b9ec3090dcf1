//! Shallow parsing of natural-language questions into entity and relation
//! mentions, trained by policy gradient from a delayed reward computed against
//! each question's formal query, and a trigram-index linker that maps the
//! predicted mentions onto knowledge-graph entries.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: tokenizer, dataset / knowledge-base / embedding loaders and a
//!   seeded toy corpus generator.
//! - [`similarity`]: Levenshtein, embedding cosine and their linear blend.
//! - [`mdp`]: the labeling environment (states, transitions, phrase grouping,
//!   delayed reward, discounted returns).
//! - [`policy`]: the three-layer policy network, rollouts and REINFORCE.
//! - [`linker`]: trigram inverted indices, candidate retrieval, one-hop
//!   relation expansion and ranking.
//! - [`eval`]: accuracy, MRR and coverage metrics.
//! - [`cli`]: the command implementations behind the `qparse` binary.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod linker;
pub mod mdp;
pub mod policy;
pub mod similarity;

pub use error::{Error, Result};
