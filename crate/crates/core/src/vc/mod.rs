//! Voice conversion: speaker embeddings, the variational conversion model,
//! the Lombard/neutral style classifier, losses, training and checkpoints.

mod checkpoint;
mod classifier;
mod data;
mod embedding;
mod losses;
mod model;
mod train;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, CheckpointMeta, CHECKPOINT_VERSION, KIND_CLASSIFIER, KIND_VC,
};
pub use classifier::{classify_style, StyleClassifier};
pub use data::{rows_to_mat, Batch, MelNorm, TrainingExample};
pub use embedding::{
    centroid_embedding, export_embeddings, import_embeddings, EmbeddingProvider, SpeakerEmbedding, SpeakerTable,
    EMBEDDING_DIM,
};
pub use losses::{
    kl_loss, l1_reconstruction_loss, style_reconstruction_loss, style_target, LossBundle, BETA_KL, LAMBDA_S,
};
pub use model::{ConditioningMode, LatentSeq, ModelConfig, VcModel};
pub use train::{
    forward_reconstruct, train_style_classifier, train_vc, ClassifierTrainConfig, Forward, StepRecord, TrainLog,
    VcTrainConfig,
};
