//! Far-field two-microphone mixture synthesis.
//!
//! Sources are plane waves in the plane of the array. Each source is delayed
//! per microphone by its time difference of arrival, optionally convolved
//! with a sparse echo tail, scaled to a requested signal-to-interference
//! ratio and summed with independent white sensor noise. Ground-truth images
//! of every component are returned alongside the mixture.

mod delay;
mod geometry;
mod mixture;
mod speech;

pub use delay::{fractional_delay, fractional_delay_with, DelayKernel, DEFAULT_DELAY_TAPS};
pub use geometry::{steering_vector, ArrayGeometry, DEFAULT_SOUND_SPEED};
pub use mixture::{
    default_scene, echo_taps_for_t60, synthesize_mixture, EchoTap, Mixture, MixtureSpec,
    SourceRole, SourceSpec, DEFAULT_INTERFERER_AZIMUTH, DEFAULT_SENSOR_SNR_DB, DEFAULT_SPACING_M,
};
pub use speech::synthetic_speech;
