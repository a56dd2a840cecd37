//! Depth image container shared between the simulator (producer) and the
//! dynamic map (consumer). Invalid pixels are stored as 0.

use std::io::Write;
use std::path::Path;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage<T: Real> {
    pub width: usize,
    pub height: usize,
    /// Row-major z-depths in meters; 0 marks an invalid pixel.
    pub depths: Vec<T>,
}

impl<T: Real> DepthImage<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, depths: vec![T::zero(); width * height] }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> T {
        self.depths[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: T) {
        self.depths[v * self.width + u] = d;
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.at(u, v) > T::zero()
    }

    /// Writes the image as a grayscale PFM file (debug export).
    pub fn write_pfm(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "Pf\n{} {}\n-1.0\n", self.width, self.height)?;
        // PFM stores rows bottom-to-top.
        for v in (0..self.height).rev() {
            for u in 0..self.width {
                let d = self.at(u, v).as_f64() as f32;
                f.write_all(&d.to_le_bytes())?;
            }
        }
        Ok(())
    }
}
