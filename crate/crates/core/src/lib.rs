//! Story model, `.story` DSL, analyzer, traversal runtime and bundle format
//! for Narralive mobile storytelling experiences.

pub mod analyzer;
pub mod bundle;
pub mod diagnostic;
pub mod edit;
pub mod geo;
pub mod model;
pub mod runtime;
pub mod script;
#[cfg(feature = "testing")]
pub mod testing;

pub use diagnostic::{Diagnostic, Severity};
pub use model::*;
