//! Knowledge and hope for byzantine agents: KH models, public and private hope
//! updates with factual change, model checking, and translation of the dynamic
//! language into the static one.

pub mod checker;
pub mod cli;
pub mod formula;
pub mod gen;
pub mod interchange;
pub mod iso;
pub mod kripke;
pub mod partition;
pub mod scenarios;
pub mod translate;
pub mod update;

pub use checker::{eval, extension, find_countermodel, valid_in_model, EvalContext, EvalError, SearchBounds};
pub use formula::{complexity, parse, DerivedForm, Formula, Printer, UpdateRegistry};
pub use kripke::{validate, AgentId, KripkeModel, PropId, RawModel, Signature, WorldId};
pub use translate::{translate, Translation};
pub use update::{apply_public, compose, embed_public, product, PointedUpdate, ProductModel, UpdateModel};
