//! Dense-matrix graph neural networks: GraphSAGE, GCN and MLP node classifiers
//! trained with Adam on softmax cross-entropy.

pub mod adam;
pub mod layers;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use layers::{GraphStructure, LayerOp, LayerParams};
pub use loss::{softmax, softmax_cross_entropy};
pub use matrix::DenseMatrix;
pub use metrics::{compute_metrics, confusion_matrix, format_report, Metrics};
pub use model::{argmax_rows, graph_inputs, Model, ModelConfig, ModelKind, Preset};
pub use train::{train, train_count, train_on, train_with, EpochRecord, TrainConfig, TrainHistory};
