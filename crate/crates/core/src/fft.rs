//! Unnormalized n-dimensional FFT on row-major buffers, built from rustfft
//! 1-D transforms applied axis by axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Per-axis 1-D plans for a fixed shape.
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&l| planner.plan_fft_forward(l)).collect(),
            inverse: shape.iter().map(|&l| planner.plan_fft_inverse(l)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place transform. The inverse is not scaled by `1/len`.
    pub fn process(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.len(), "buffer does not match FFT shape");
        let total = data.len();
        let mut scratch = Vec::new();
        for axis in (0..self.shape.len()).rev() {
            let l = self.shape[axis];
            if l == 1 {
                continue;
            }
            let plan = match dir {
                Direction::Forward => &self.forward[axis],
                Direction::Inverse => &self.inverse[axis],
            };
            let lanes = total / l;
            let chunk = l * (lanes / 64).max(1);
            let stride: usize = self.shape[axis + 1..].iter().product();
            if stride == 1 {
                par::for_each_chunk_mut(data, chunk, |c| plan.process(c));
                continue;
            }
            // Gather lanes contiguously, transform, scatter back.
            scratch.resize(total, Complex64::new(0.0, 0.0));
            let block = l * stride;
            for (outer, src) in data.chunks(block).enumerate() {
                for inner in 0..stride {
                    let dst = &mut scratch[(outer * stride + inner) * l..][..l];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d = src[j * stride + inner];
                    }
                }
            }
            par::for_each_chunk_mut(&mut scratch, chunk, |c| plan.process(c));
            for (outer, dst) in data.chunks_mut(block).enumerate() {
                for inner in 0..stride {
                    let src = &scratch[(outer * stride + inner) * l..][..l];
                    for (j, s) in src.iter().enumerate() {
                        dst[j * stride + inner] = *s;
                    }
                }
            }
        }
    }
}
