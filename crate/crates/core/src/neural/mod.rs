//! Trainable CNN and LSTM text classifiers over pretrained word embeddings.

mod embeddings;
mod gradcheck;
mod model;
mod optim;
mod search;
mod train;

pub use embeddings::{load_embeddings, EmbeddingMatrix, OovPolicy};
pub use gradcheck::{central_difference, gradient_check, relative_error, GradCheckReport};
pub use model::{
    Architecture, Classifier, EncoderConfig, EncoderKind, Grads, Prepared, Tensor,
    DEFAULT_CNN_CHANNELS, DEFAULT_MAX_SEQUENCE_LENGTH, LSTM_HIDDEN_DIMS, OOV, PAD,
};
pub use optim::{clip_global_norm, global_norm, Adam};
pub use search::{
    random_search, read_trials, select_best, validation_accuracies, write_trials, SearchSpace,
    TrialConfig, TrialRecord, TrialStatus,
};
pub use train::{
    accuracy, fit, label_of, predict_all, prepare_all, side_of, train, train_classifier,
    train_pairwise, TrainConfig, TrainedModel, TrainingExample, TrainingReport,
};
