//! Contrastive bi-encoder over specification and circuit text.

pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod optim;
pub mod probe;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use loss::{contrastive_loss, representation_regularizer, similarity_matrix};
pub use model::{CnmlModel, EncoderConfig, EncoderKind, EncoderParams, Modality, ModelConfig};
pub use optim::{AdamW, AdamWConfig, Schedule};
pub use probe::{finetune_classifier, labeled_pairs, ClassMetrics, LabeledPair, Probe, ProbeConfig, ProbeError};
pub use tape::{Grads, Tape, Var};
pub use tensor::Mat;
pub use train::{gradients, train, train_from, Gradients, Precision, StepLog, TrainConfig, TrainError, TrainOutcome};
pub use vocab::{tokenize, Tokens, Vocab};
