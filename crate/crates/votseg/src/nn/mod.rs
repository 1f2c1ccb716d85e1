//! Bidirectional LSTM feature function, boundary heads, and the tagger and
//! adversary branches, all with hand-written backward passes in `f64`.

pub mod branch;
pub mod encoder;
pub mod heads;
pub(crate) mod init;
pub mod lstm;
mod model;

pub use branch::{select_type, softmax, AdversaryNet, ClassifierNet, TaggerNet, BRANCH_WIDTH};
pub use encoder::{summary_backward, BiLayer, EncoderCache, EncoderParams, FrameEmbeddings};
pub use heads::{score_frames, HeadParams, Heads};
pub use lstm::LstmParams;
pub use model::{Model, ModelConfig, ModelParams, Prediction, MODEL_FORMAT, MODEL_FORMAT_VERSION};
