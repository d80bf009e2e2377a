//! Block-thresholding post-filter.
//!
//! The beamformer output `Z` is modelled as target plus residual
//! interference. The residual variance of every coefficient is estimated from
//! how far each microphone spectrum is from `Z`. The time-frequency plane is
//! cut into macro-blocks; every macro-block is split into equal-area
//! sub-blocks of one of several shapes, from long-and-thin in time to
//! tall-and-thin in frequency, and the split that best isolates high-SNR
//! structure is kept. Each sub-block then gets one gain from its average
//! a-priori SNR, `a = 1 - 1 / (zeta + 1)`.

mod partition;
mod threshold;
mod variance;

pub use partition::{enumerate_partitions, Region, Tiling};
pub use threshold::{
    apply_block_threshold, attenuation_factor, block_snr, choose_partition, BlockGrid,
    BlockThresholdOutput, BlockThresholdParams, MacroBlockChoice, PartitionChoice, ZETA_CAP,
};
pub use variance::{residual_variance, VarianceMap};
