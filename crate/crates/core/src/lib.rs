//! Forced-symmetric rigidity of group-labelled quotient multigraphs.
//!
//! A gain graph is a multigraph whose edges carry elements of a symmetry
//! group `Γ ≤ Isom(R^d)` relative to a designated orientation. It is the
//! quotient of a symmetric bar-joint framework by the group action; the
//! orbit rigidity matrix decides whether the lifted framework admits a
//! non-trivial symmetry-preserving infinitesimal flex.
//!
//! The crate provides:
//!
//! * symmetry groups with exact element arithmetic and their affine
//!   isometry representations ([`groups`]),
//! * gain graphs, covering-graph lifts and gain-map enumeration ([`gain`]),
//! * count-matroid sparsity checks and the spanning-tree / map-graph
//!   decompositions used by the constructive algorithms ([`sparsity`]),
//! * the orbit rigidity matrix and randomized rank testing ([`rigidity`]),
//! * constructive gain assignments for plane groups, translation groups,
//!   dense point groups, plus the probability-targeting graph generators
//!   ([`constructions`]),
//! * exact and Monte-Carlo computation of the fraction of gain maps that
//!   lift to rigid frameworks ([`probability`]),
//! * a JSON document schema and SVG rendering ([`document`], [`render`]).

pub mod constructions;
pub mod document;
pub mod gain;
pub mod graph;
pub mod groups;
pub mod probability;
pub mod render;
pub mod rigidity;
pub mod sparsity;

mod error;

pub use error::{Error, Result};
