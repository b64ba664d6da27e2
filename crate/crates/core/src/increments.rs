//! Reproducible Gaussian increments.
//!
//! Every path owns a ChaCha8 stream keyed by `(master_seed, path_index)`:
//! the seed selects the key and the path index selects the 64-bit stream id.
//! A path therefore sees the same normals no matter which worker simulates it
//! or in which order paths are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Standard normal pairs `(Z_k, Z⊥_k)`, `k = 1..=n`, together with the step
/// sizes needed to turn them into Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementStream {
    master_seed: u64,
    path_index: u64,
    z: Vec<f64>,
    z_perp: Vec<f64>,
    sqrt_steps: Vec<f64>,
}

impl IncrementStream {
    /// Draw the stream for one path. Normals are drawn alternately
    /// `Z_1, Z⊥_1, Z_2, Z⊥_2, ...`.
    pub fn sample(master_seed: u64, path_index: u64, grid: &TimeGrid) -> Self {
        let n = grid.steps();
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(path_index);
        let mut z = Vec::with_capacity(n);
        let mut z_perp = Vec::with_capacity(n);
        for _ in 0..n {
            z.push(rng.sample::<f64, _>(StandardNormal));
            z_perp.push(rng.sample::<f64, _>(StandardNormal));
        }
        Self {
            master_seed,
            path_index,
            z,
            z_perp,
            sqrt_steps: sqrt_steps(grid),
        }
    }

    /// Build a stream from explicit normals, e.g. for hand-checked cases or
    /// deliberately biased negative controls.
    pub fn from_normals(grid: &TimeGrid, z: Vec<f64>, z_perp: Vec<f64>) -> Result<Self> {
        let n = grid.steps();
        if z.len() != n || z_perp.len() != n {
            return Err(Error::GridMismatch(format!(
                "expected {n} normals per component, got {} and {}",
                z.len(),
                z_perp.len()
            )));
        }
        Ok(Self {
            master_seed: 0,
            path_index: 0,
            z,
            z_perp,
            sqrt_steps: sqrt_steps(grid),
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn steps(&self) -> usize {
        self.z.len()
    }

    /// Unit normal `Z_k`, `k` in `1..=n`.
    pub fn z(&self, k: usize) -> f64 {
        self.z[k - 1]
    }

    pub fn z_perp(&self, k: usize) -> f64 {
        self.z_perp[k - 1]
    }

    /// `W_{t_k} - W_{t_{k-1}}`.
    pub fn dw(&self, k: usize) -> f64 {
        self.sqrt_steps[k - 1] * self.z[k - 1]
    }

    /// `W⊥_{t_k} - W⊥_{t_{k-1}}`.
    pub fn dw_perp(&self, k: usize) -> f64 {
        self.sqrt_steps[k - 1] * self.z_perp[k - 1]
    }

    pub(crate) fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.steps() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "stream has {} steps, grid has {}",
                self.steps(),
                grid.steps()
            )));
        }
        Ok(())
    }
}

fn sqrt_steps(grid: &TimeGrid) -> Vec<f64> {
    (1..=grid.steps()).map(|k| grid.step(k).sqrt()).collect()
}
