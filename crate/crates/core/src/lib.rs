//! Graph auto-encoders with linear and relu encoders, feature/graph
//! misalignment, and constructive checks of what each encoder can express.

pub mod alignment;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod synth;
pub mod theory;

pub use alignment::MisalignmentReport;
pub use eval::{NodeScoring, TaskScores};
pub use experiment::{MetricsRecord, RunSpec};
pub use graph::{DiffusionMatrix, Graph, SplitPlan, Task};
pub use linalg::{DenseMatrix, SparseMatrix};
pub use model::{Embedding, EncoderParams, FeatureInput, TrainConfig, TrainOutcome, Variant};
pub use synth::SynthConfig;
pub use theory::{CheckReport, Verdict};
