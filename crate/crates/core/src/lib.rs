//! Cross-lingual question answering over a knowledge base, cast as reading
//! comprehension: link topic entities, extract a subgraph, verbalize it into
//! a passage, and pick the answer span.
//!
//! Numeric kernels (fuzzy matching, similarity, metrics) are generic over
//! [`num::Real`]; the pipeline itself runs in [`Score`].

pub mod eval;
pub mod kb;
pub mod linker;
pub mod num;
pub mod passage;
pub mod reader;
pub mod remote;
pub mod subgraph;
pub mod text;
pub mod verbalizer;

/// Scalar used for scores and metrics throughout the pipeline.
pub type Score = f64;
/// Single-precision score, for callers that store many of them.
pub type Score32 = f32;

pub use eval::{EvalError, EvalReport, PipelineConfig, Question};
pub use kb::{KbError, KbId, KbObject, KnowledgeBase, Triple};
pub use passage::{CandidateSpan, Passage};
pub use reader::Prediction;
pub use subgraph::Subgraph;
pub use verbalizer::VerbalizedUnit;
