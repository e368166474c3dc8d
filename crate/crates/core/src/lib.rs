//! Executable loose semantics for object-oriented modeling documents.
//!
//! Documents (object models, state transition diagrams, message sequence
//! charts and informal text) each denote a set of finite system traces. The
//! crate checks satisfaction of a trace against documents, enumerates the
//! bounded universe of traces, decides refinement, redundancy and
//! consistency within bounds, simulates lifecycles, and keeps a development
//! graph of checked transformations.

pub mod checker;
pub mod devgraph;
pub mod doc;
pub mod model;
pub mod semantics;
pub mod sl;
pub mod syntax;
