//! Attribute-augmented gated graph neural network for session-based
//! next-item recommendation.
//!
//! The crate covers the whole pipeline: parsing session logs and item
//! attributes ([`data`]) into on-disk dataset bundles ([`bundle`]), scoring
//! attributes by how concentrated their values are within sessions
//! ([`attribute_score`]), building per-session item and attribute graphs
//! ([`graph`]), the network itself ([`model`]) on top of a small
//! reverse-mode autodiff engine ([`tensor`]), training ([`train`]), ranking
//! metrics and non-neural baselines ([`eval`]), and synthetic corpora with
//! known structure ([`synthetic`]).

pub mod attribute_score;
pub mod bundle;
pub mod data;
pub mod eval;
pub mod graph;
pub mod model;
pub mod synthetic;
pub mod tensor;
pub mod train;
