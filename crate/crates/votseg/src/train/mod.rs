//! Joint training of the scoring heads, tagger and corpus adversary.

mod config;
mod crossval;
mod objective;
mod optim;
mod trainer;

pub use config::TrainConfig;
pub use crossval::{cross_validate, Fold, FoldReport};
pub use objective::{
    utterance_loss, utterance_loss_and_grad, LossBundle, ObjectiveOptions, TrainingExample,
};
pub use optim::{sampling_weights, zero_grad, Adagrad, EarlyStopping};
pub use trainer::{model_version, predict_utterances, train, EpochRecord, TrainOutcome};
