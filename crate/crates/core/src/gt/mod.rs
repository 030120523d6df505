//! Graph transformer regressor: local multi-head attention over bonded
//! neighbors, mean-pooled readout and a task head, trained with hand-written
//! reverse-mode gradients in double precision.

mod checkpoint;
mod featurize;
mod gradcheck;
mod loss;
mod model;
pub mod tensor;
mod train;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, model_from_checkpoint, save_checkpoint};
pub use featurize::{featurize_graph, GraphBatch, GraphInput, ELEMENT_SLOTS, NODE_FEATURES};
pub use gradcheck::{grad_check, grad_check_with, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use loss::masked_multitask_loss;
pub use model::{ForwardCache, GtConfig, GtModel, GtWeights, LayerWeights};
pub use train::{
    batch_loss_and_grad, evaluate_loss, stratified_split, train_gt, Adam, EarlyStopping, EpochRecord,
    StopDecision, StopReason, TaskData, TaskStandardizer, TrainingLog,
};

#[derive(Debug, thiserror::Error)]
pub enum GtError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("batch has no observed targets")]
    EmptyBatch,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Eval-mode predictions for every molecule of a batch, one row per molecule.
pub fn gt_forward(model: &GtModel, batch: &GraphBatch) -> Result<Vec<Vec<f64>>, GtError> {
    if batch.node_features.len() != batch.neighbor_lists.len() * model.n_features {
        return Err(GtError::DimensionMismatch(format!(
            "batch node features are not {} wide",
            model.n_features
        )));
    }
    (0..batch.len()).map(|b| model.predict(&batch.graph(b))).collect()
}
