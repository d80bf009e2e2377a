use crate::error::{Error, Result};

/// Rectangle of time-frequency cells: frames `frame0..frame0 + frames`,
/// bins `bin0..bin0 + bins`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub frame0: usize,
    pub bin0: usize,
    pub frames: usize,
    pub bins: usize,
}

impl Region {
    pub fn new(frame0: usize, bin0: usize, frames: usize, bins: usize) -> Self {
        Self {
            frame0,
            bin0,
            frames,
            bins,
        }
    }

    pub fn cells(&self) -> usize {
        self.frames * self.bins
    }

    pub fn contains(&self, frame: usize, bin: usize) -> bool {
        (self.frame0..self.frame0 + self.frames).contains(&frame)
            && (self.bin0..self.bin0 + self.bins).contains(&bin)
    }
}

/// Split of a `macro_frames x macro_bins` macro-block into equal sub-blocks.
///
/// The nominal sub-block is `2^(h-v)` frames by `2^v` bins. A nominal extent
/// longer than the macro-block is clipped to it, so `v = 0` in an 8-frame
/// macro-block gives 8x1 sub-blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tiling {
    pub v: u32,
    pub h: u32,
    pub macro_frames: usize,
    pub macro_bins: usize,
    pub sub_frames: usize,
    pub sub_bins: usize,
}

impl Tiling {
    /// Nominal `(frames, bins)` of a sub-block before clipping.
    pub fn nominal_shape(&self) -> (usize, usize) {
        (1 << (self.h - self.v), 1 << self.v)
    }

    pub fn sub_block_count(&self) -> usize {
        (self.macro_frames / self.sub_frames) * (self.macro_bins / self.sub_bins)
    }

    /// Sub-blocks of the macro-block whose top-left cell is `(frame0, bin0)`,
    /// frame group by frame group.
    pub fn sub_blocks(&self, frame0: usize, bin0: usize) -> impl Iterator<Item = Region> + '_ {
        let per_row = self.macro_bins / self.sub_bins;
        (0..self.sub_block_count()).map(move |i| {
            Region::new(
                frame0 + (i / per_row) * self.sub_frames,
                bin0 + (i % per_row) * self.sub_bins,
                self.sub_frames,
                self.sub_bins,
            )
        })
    }
}

/// Every feasible sub-block split of a `macro_frames x macro_bins` block, in
/// increasing `v`.
pub fn enumerate_partitions(macro_frames: usize, macro_bins: usize, h: u32) -> Result<Vec<Tiling>> {
    let incompatible = Error::IncompatibleMacroBlock {
        rows: macro_frames,
        cols: macro_bins,
        h,
    };
    if h >= usize::BITS - 1 || macro_frames * macro_bins < (1usize << h) {
        return Err(incompatible);
    }
    let tilings: Vec<Tiling> = (0..=h)
        .filter_map(|v| {
            let sub_frames = (1usize << (h - v)).min(macro_frames);
            let sub_bins = (1usize << v).min(macro_bins);
            let fits =
                macro_frames.is_multiple_of(sub_frames) && macro_bins.is_multiple_of(sub_bins);
            fits.then_some(Tiling {
                v,
                h,
                macro_frames,
                macro_bins,
                sub_frames,
                sub_bins,
            })
        })
        .collect();
    if tilings.is_empty() {
        return Err(incompatible);
    }
    Ok(tilings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coverage(t: &Tiling) -> Vec<usize> {
        let mut count = vec![0; t.macro_frames * t.macro_bins];
        for r in t.sub_blocks(0, 0) {
            for f in r.frame0..r.frame0 + r.frames {
                for b in r.bin0..r.bin0 + r.bins {
                    count[f * t.macro_bins + b] += 1;
                }
            }
        }
        count
    }

    #[test]
    fn four_by_four_h2() {
        let t = enumerate_partitions(4, 4, 2).unwrap();
        let shapes: Vec<_> = t.iter().map(|t| (t.sub_frames, t.sub_bins)).collect();
        assert_eq!(shapes, vec![(4, 1), (2, 2), (1, 4)]);
        for tiling in &t {
            let area: usize = tiling.sub_blocks(0, 0).map(|r| r.cells()).sum();
            assert_eq!(area, 16);
            assert!(coverage(tiling).iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn clipped_shapes() {
        let t = enumerate_partitions(8, 16, 4).unwrap();
        let nominal: Vec<_> = t.iter().map(|t| t.nominal_shape()).collect();
        assert_eq!(nominal, vec![(16, 1), (8, 2), (4, 4), (2, 8), (1, 16)]);
        assert_eq!((t[0].sub_frames, t[0].sub_bins), (8, 1));
        for tiling in &t {
            assert!(coverage(tiling).iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn incompatible_blocks() {
        assert!(enumerate_partitions(2, 2, 3).is_err());
        assert!(enumerate_partitions(0, 4, 0).is_err());
        // 4-frame extents neither fit nor clip evenly into 6
        let t = enumerate_partitions(6, 6, 2).unwrap();
        assert_eq!(t.iter().map(|t| t.v).collect::<Vec<_>>(), vec![1]);
        assert!(enumerate_partitions(3, 3, 1).is_err());
    }

    #[test]
    fn single_cell_always_works() {
        assert_eq!(enumerate_partitions(1, 1, 0).unwrap().len(), 1);
        assert_eq!(enumerate_partitions(3, 5, 0).unwrap().len(), 1);
    }
}
