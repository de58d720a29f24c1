//! Long-form speech transcription engine.
//!
//! The chain is segmentation → filtering → recognition, followed by an
//! optional uncertainty stage that compares the base transcript against
//! an additional model, a time-stretched rerun, or the recognizer's own
//! token scores. Every model sits behind a backend trait; deterministic
//! mocks ship with the crate and real models are reached through the
//! line-delimited JSON adapter protocol in [`adapter`].

pub mod adapter;
pub mod alignment;
pub mod audio;
pub mod backend;
pub mod filtering;
pub mod metrics;
pub mod pipeline;
pub mod recognition;
pub mod segmentation;
pub mod text;
pub mod uncertainty;

pub use alignment::{DiffOp, EditScript, OpKind};
pub use audio::AudioBuffer;
pub use backend::BackendError;
pub use recognition::{TokenPiece, Transcription, Word};
pub use segmentation::{Chunk, FrameProbSeries, SpeechSegment};
pub use uncertainty::{MaskMethod, UncertaintyMask};
