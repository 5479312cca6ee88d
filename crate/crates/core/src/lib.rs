//! Ontology embedding in two spaces. The extensional space places
//! instances as points and concepts as axis-aligned ellipsoids; the
//! intensional space gives each concept a free vector that instances reach
//! through a bridge map. Both are trained jointly with margin-ranking
//! losses and evaluated by triple classification and link prediction.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod extensional;
pub mod intensional;
pub mod linalg;
pub mod ontology;
pub mod synthetic;
pub mod training;

pub use error::{Error, ErrorCategory, Result};
pub use training::{ModelState, TrainingConfig};
