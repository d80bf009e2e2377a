//! Two-microphone audio zooming.
//!
//! The crate enhances a source arriving broadside to a two-microphone array
//! and suppresses interference from other directions. Two beamformers are
//! provided, a per-bin MPDR (Capon) beamformer with diagonal loading and a
//! Griffiths-Jim canceller whose adaptive branch runs a frequency-domain
//! block LMS filter. Either is followed by a block-thresholding post-filter
//! that attenuates time-frequency sub-blocks dominated by residual
//! interference.
//!
//! Around the enhancement chain sit a far-field mixture simulator and an
//! evaluation harness (output SINR, normalized MSE) so that the whole chain
//! can be measured against ground-truth source images.
//!
//! All processing is offline and operates on whole buffers. File formats and
//! the command-line front end live in the companion `audiozoom` crate.

// Comparisons are written so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod blockthresh;
pub mod conv;
pub mod error;
pub mod gjbf;
pub mod metrics;
pub mod mpdr;
pub mod pipeline;
pub mod simulate;
pub mod stft;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
pub use stft::{istft, stft, Spectrogram, StftParams, Window};
