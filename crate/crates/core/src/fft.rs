use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Unnormalized forward/inverse transforms over the cells of a 1D or 2D grid.
pub(crate) struct GridFft {
    shape: [usize; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl GridFft {
    pub fn new(grid: &Grid) -> Self {
        let shape = grid.shape();
        let mut planner = FftPlanner::new();
        let fwd = [planner.plan_fft_forward(shape[0]), planner.plan_fft_forward(shape[1])];
        let inv = [planner.plan_fft_inverse(shape[0]), planner.plan_fft_inverse(shape[1])];
        Self { shape, fwd, inv }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, &self.fwd);
    }

    /// Inverse transform including the 1/N normalization.
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, &self.inv);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Transform along axis 1 only (rows), unnormalized.
    pub fn forward_axis1(&self, data: &mut [C64]) {
        if self.shape[1] > 1 {
            self.fwd[1].process(data);
        }
    }

    pub fn inverse_axis1(&self, data: &mut [C64]) {
        if self.shape[1] > 1 {
            self.inv[1].process(data);
            let scale = 1.0 / self.shape[1] as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }

    fn apply(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [n0, n1] = self.shape;
        if n1 > 1 {
            // rows are contiguous; rustfft processes consecutive chunks
            plans[1].process(data);
        }
        if n0 > 1 {
            if n1 == 1 {
                plans[0].process(data);
            } else {
                let mut column = vec![C64::new(0.0, 0.0); n0];
                for j in 0..n1 {
                    for i in 0..n0 {
                        column[i] = data[i * n1 + j];
                    }
                    plans[0].process(&mut column);
                    for i in 0..n0 {
                        data[i * n1 + j] = column[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let g = Grid::plane([4.0, 3.0], [8, 4]).unwrap();
        let fft = GridFft::new(&g);
        let orig: Vec<C64> = (0..32).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
