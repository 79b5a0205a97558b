//! Monte Carlo sampling of the quadrature Langevin equations.
//!
//! Each trajectory integrates `dX = (A X + b) dt + G dW` with `G Gᵀ = D`
//! by Euler–Maruyama from a vacuum-sampled initial state. The noise for
//! trajectory `k` comes from a ChaCha stream keyed by `(seed, k)`, and the
//! final ensemble statistics are reduced in trajectory order, so a given
//! configuration is bit-reproducible regardless of thread count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{stability_margin, to_quadrature, LinearSystem};
use crate::moments::{MomentState, STEADY_MARGIN};

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self, margin: f64) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig("dt and t_end must be positive".into()));
        }
        if self.n_traj < 100 {
            return Err(Error::InvalidConfig(format!(
                "n_traj must be at least 100, got {}",
                self.n_traj
            )));
        }
        let limit = 0.01 / margin.abs();
        if self.dt > limit {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds 0.01/|margin| = {limit}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Largest step the stability bound allows for `sys`.
    pub fn max_dt(sys: &LinearSystem) -> f64 {
        0.01 / stability_margin(sys).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Sample mean and covariance of the ensemble at `t_end`.
    pub state: MomentState,
    /// Standard error of each sampled mean.
    pub mean_stderr: DVector<f64>,
    /// Standard error of each sampled variance (Gaussian approximation).
    pub variance_stderr: DVector<f64>,
    pub n_traj: usize,
    pub steps: usize,
}

impl SimResult {
    pub fn mean_zscore(&self, index: usize, expected: f64) -> f64 {
        (self.state.mean[index] - expected) / self.mean_stderr[index]
    }
}

/// Factor `G` with `G Gᵀ = D`, dropping null directions.
fn noise_factor(d: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(d.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(l, _)| **l > 1e-14 * scale)
        .map(|(l, v)| v.into_owned() * l.sqrt())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(d.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

struct Kernel {
    dim: usize,
    noise_dim: usize,
    // row-major copies for the inner loop
    drift: Vec<f64>,
    noise: Vec<f64>,
    drive: Vec<f64>,
    init: Vec<f64>,
    dt: f64,
    steps: usize,
}

impl Kernel {
    fn run(&self, seed: u64, index: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = self.dim;
        let mut x = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut w = vec![0.0; self.noise_dim.max(n)];

        // vacuum initial state, covariance I/2
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *xi = z * self.init[0];
        }
        let sdt = self.dt.sqrt();
        for _ in 0..self.steps {
            for wi in w.iter_mut().take(self.noise_dim) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *wi = z * sdt;
            }
            for i in 0..n {
                let row = &self.drift[i * n..(i + 1) * n];
                let mut acc = self.drive[i];
                for (a, xv) in row.iter().zip(&x) {
                    acc += a * xv;
                }
                let mut dw = 0.0;
                let nrow = &self.noise[i * self.noise_dim..(i + 1) * self.noise_dim];
                for (g, wv) in nrow.iter().zip(&w) {
                    dw += g * wv;
                }
                next[i] = x[i] + acc * self.dt + dw;
            }
            std::mem::swap(&mut x, &mut next);
        }
        out.copy_from_slice(&x);
    }
}

/// Sample the moments at `cfg.t_end` from `cfg.n_traj` trajectories.
pub fn simulate(sys: &LinearSystem, cfg: &SimConfig) -> Result<SimResult> {
    let margin = stability_margin(sys);
    if margin.is_nan() || margin > STEADY_MARGIN {
        return Err(Error::Unstable { margin });
    }
    cfg.validate(margin)?;

    let qsys = to_quadrature(sys);
    let dim = qsys.dim();
    let g = noise_factor(&qsys.diffusion);
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    let kernel = Kernel {
        dim,
        noise_dim: g.ncols(),
        drift: qsys.drift.transpose().as_slice().to_vec(),
        noise: g.transpose().as_slice().to_vec(),
        drive: qsys.drive.as_slice().to_vec(),
        init: vec![0.5f64.sqrt()],
        dt: cfg.t_end / steps as f64,
        steps,
    };

    let mut samples = vec![0.0; cfg.n_traj * dim];
    samples
        .par_chunks_mut(BLOCK * dim)
        .enumerate()
        .for_each(|(block, chunk)| {
            for (offset, out) in chunk.chunks_mut(dim).enumerate() {
                let index = (block * BLOCK + offset) as u64;
                kernel.run(cfg.seed, index, out);
            }
        });

    let n = cfg.n_traj as f64;
    let mut mean = DVector::<f64>::zeros(dim);
    for x in samples.chunks(dim) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean /= n;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for x in samples.chunks(dim) {
        for i in 0..dim {
            let di = x[i] - mean[i];
            for j in i..dim {
                cov[(i, j)] += di * (x[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[(i, j)] /= n - 1.0;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let mean_stderr = DVector::from_iterator(dim, (0..dim).map(|i| (cov[(i, i)] / n).sqrt()));
    let variance_stderr = DVector::from_iterator(dim, (0..dim).map(|i| cov[(i, i)] * (2.0 / (n - 1.0)).sqrt()));

    Ok(SimResult {
        state: MomentState {
            time: cfg.t_end,
            mean,
            covariance: cov,
        },
        mean_stderr,
        variance_stderr,
        n_traj: cfg.n_traj,
        steps,
    })
}
