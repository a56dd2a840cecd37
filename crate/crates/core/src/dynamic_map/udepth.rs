//! U-depth map: a column-wise histogram of a depth image over depth bins.
//! Viewed top-down it exposes obstacle widths and thicknesses directly.

use crate::depth::DepthImage;
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct UDepthMap<T: Real> {
    pub bin_width: T,
    pub n_bins: usize,
    pub width: usize,
    /// `counts[b * width + u]` = number of pixels in image column `u` whose
    /// depth falls in `[b*bin_width, (b+1)*bin_width)`.
    pub counts: Vec<u32>,
}

impl<T: Real> UDepthMap<T> {
    #[inline]
    pub fn at(&self, bin: usize, u: usize) -> u32 {
        self.counts[bin * self.width + u]
    }

    pub fn column_sum(&self, u: usize) -> u32 {
        (0..self.n_bins).map(|b| self.at(b, u)).sum()
    }

    /// Depth at the middle of a bin.
    pub fn bin_center(&self, bin: usize) -> T {
        (T::of(bin as f64) + T::of(0.5)) * self.bin_width
    }
}

/// Histograms valid pixels (depth in `[min_range, max_range)`) per column.
pub fn build_udepth<T: Real>(
    depth: &DepthImage<T>,
    bin_width: T,
    min_range: T,
    max_range: T,
) -> UDepthMap<T> {
    assert!(bin_width > T::zero());
    let n_bins = (max_range / bin_width).ceil().as_f64() as usize;
    let mut counts = vec![0u32; n_bins * depth.width];
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.at(u, v);
            if d < min_range || d >= max_range || d <= T::zero() {
                continue;
            }
            let bin = (d / bin_width).floor().as_f64() as usize;
            if bin < n_bins {
                counts[bin * depth.width + u] += 1;
            }
        }
    }
    UDepthMap { bin_width, n_bins, width: depth.width, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_image(w: usize, h: usize, d: f64) -> DepthImage<f64> {
        let mut img = DepthImage::new(w, h);
        img.depths.fill(d);
        img
    }

    #[test]
    fn uniform_depth_fills_one_bin() {
        let img = uniform_image(16, 12, 3.0);
        let ud = build_udepth(&img, 1.0, 0.3, 6.0);
        for u in 0..16 {
            assert_eq!(ud.at(3, u), 12);
            assert_eq!(ud.column_sum(u), 12);
        }
    }

    #[test]
    fn split_image_populates_two_bins() {
        let mut img = DepthImage::new(16, 10);
        for v in 0..10 {
            for u in 0..16 {
                img.set(u, v, if u < 8 { 2.0 } else { 5.0 });
            }
        }
        let ud = build_udepth(&img, 1.0, 0.3, 6.0);
        for u in 0..8 {
            assert_eq!(ud.at(2, u), 10);
            assert_eq!(ud.at(5, u), 0);
        }
        for u in 8..16 {
            assert_eq!(ud.at(2, u), 0);
            assert_eq!(ud.at(5, u), 10);
        }
    }

    #[test]
    fn counts_match_independent_recount() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut img = DepthImage::new(24, 18);
        for v in 0..18 {
            for u in 0..24 {
                // mix of valid, invalid, and out-of-range depths
                let d = match rng.gen_range(0..4) {
                    0 => 0.0,
                    1 => rng.gen_range(6.0..9.0),
                    _ => rng.gen_range(0.3..6.0),
                };
                img.set(u, v, d);
            }
        }
        let bw = 0.5;
        let ud = build_udepth(&img, bw, 0.3, 6.0);
        for b in 0..ud.n_bins {
            for u in 0..24 {
                let mut expect = 0u32;
                for v in 0..18 {
                    let d = img.at(u, v);
                    if d >= 0.3 && d < 6.0 && d >= b as f64 * bw && d < (b + 1) as f64 * bw {
                        expect += 1;
                    }
                }
                assert_eq!(ud.at(b, u), expect, "bin {b} column {u}");
            }
        }
    }

    #[test]
    fn column_sums_count_valid_pixels() {
        let mut img = uniform_image(8, 8, 4.0);
        img.set(3, 2, 0.0);
        img.set(3, 5, 7.0);
        let ud = build_udepth(&img, 0.5, 0.3, 6.0);
        assert_eq!(ud.column_sum(3), 6);
        assert_eq!(ud.column_sum(0), 8);
    }
}
