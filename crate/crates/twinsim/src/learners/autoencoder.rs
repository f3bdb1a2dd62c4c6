//! Linear autoencoder (no bias, no nonlinearity).
//!
//! Compresses d-dimensional twin feature vectors into an m-dimensional latent
//! space. Trained by full-batch gradient descent on mean squared
//! reconstruction error; the best rank-m linear projection is the optimum, so
//! tests can check against an eigendecomposition oracle.

use crate::error::{Result, SimError};
use crate::rng::RandomStream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autoencoder {
    /// m x d
    encoder: DMatrix<f64>,
    /// d x m
    decoder: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AutoencoderHyper {
    pub epochs: usize,
    pub momentum: f64,
}

impl Default for AutoencoderHyper {
    fn default() -> Self {
        Self {
            epochs: 1500,
            momentum: 0.9,
        }
    }
}

impl Autoencoder {
    /// Train on `data` (one row per sample, d columns) with latent dim `m`.
    pub fn train(
        data: &[Vec<f64>],
        m: usize,
        hyper: AutoencoderHyper,
        rng: &mut RandomStream,
    ) -> Result<Self> {
        let n = data.len();
        let d = data.first().map(|r| r.len()).unwrap_or(0);
        if m == 0 || m >= d {
            return Err(SimError::DegenerateDims { m, d });
        }
        if n < m {
            return Err(SimError::DegenerateDims { m, d });
        }
        // Columns are samples.
        let x = DMatrix::from_fn(d, n, |i, j| data[j][i]);
        let scale = 1.0 / (d as f64).sqrt();
        let mut encoder =
            DMatrix::from_fn(m, d, |_, _| (rng.gen::<f64>() * 2.0 - 1.0) * scale);
        let mut decoder =
            DMatrix::from_fn(d, m, |_, _| (rng.gen::<f64>() * 2.0 - 1.0) * scale);

        // Step size keyed to the dominant eigenvalue of the second-moment
        // matrix so descent stays stable regardless of data scale.
        let second_moment = &x * x.transpose() / n as f64;
        let lambda_max = power_iteration(&second_moment).max(1e-12);
        let lr = 0.4 / lambda_max;

        let mut vel_e = DMatrix::zeros(m, d);
        let mut vel_d = DMatrix::zeros(d, m);
        let coef = 2.0 / (n as f64 * d as f64);
        for _ in 0..hyper.epochs {
            let latent = &encoder * &x; // m x n
            let recon = &decoder * &latent; // d x n
            let resid = &recon - &x;
            let g_d = coef * &resid * latent.transpose();
            let g_e = coef * decoder.transpose() * &resid * x.transpose();
            vel_d = hyper.momentum * vel_d - lr * g_d;
            vel_e = hyper.momentum * vel_e - lr * g_e;
            decoder += &vel_d;
            encoder += &vel_e;
        }
        Ok(Self { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.nrows()
    }

    /// Latent representation of `x`.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(SimError::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        Ok((&self.encoder * v).iter().copied().collect())
    }

    pub fn decode(&self, latent: &[f64]) -> Result<Vec<f64>> {
        if latent.len() != self.latent_dim() {
            return Err(SimError::DimMismatch {
                expected: self.latent_dim(),
                got: latent.len(),
            });
        }
        let v = DVector::from_column_slice(latent);
        Ok((&self.decoder * v).iter().copied().collect())
    }

    /// Per-element mean squared reconstruction error over `data`.
    pub fn reconstruction_error(&self, data: &[Vec<f64>]) -> Result<f64> {
        let d = self.input_dim();
        let mut total = 0.0;
        for row in data {
            let recon = self.decode(&self.encode(row)?)?;
            total += row
                .iter()
                .zip(&recon)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        Ok(total / (data.len() as f64 * d as f64))
    }
}

fn power_iteration(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = m * &v;
        let norm = w.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        v = w / norm;
        lambda = norm;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;
    use rand_distr::{Distribution, Normal};

    /// Per-element error of the best rank-m linear projection (through the
    /// origin): sum of the d-m smallest eigenvalues of the second-moment
    /// matrix, divided by d.
    fn rank_m_oracle(data: &[Vec<f64>], m: usize) -> f64 {
        let n = data.len();
        let d = data[0].len();
        let x = DMatrix::from_fn(d, n, |i, j| data[j][i]);
        let sm = &x * x.transpose() / n as f64;
        let mut eig: Vec<f64> = sm.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eig[m..].iter().sum::<f64>() / d as f64
    }

    fn gaussian_data(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_stream(seed, "learner-init");
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|_| (0..d).map(|j| normal.sample(&mut rng) * (1.0 + j as f64 * 0.3)).collect())
            .collect()
    }

    #[test]
    fn degenerate_dims_rejected() {
        let mut rng = rng_stream(1, "learner-init");
        let data = vec![vec![1.0, 2.0]; 10];
        assert!(matches!(
            Autoencoder::train(&data, 2, AutoencoderHyper::default(), &mut rng),
            Err(SimError::DegenerateDims { .. })
        ));
        assert!(matches!(
            Autoencoder::train(&data, 3, AutoencoderHyper::default(), &mut rng),
            Err(SimError::DegenerateDims { .. })
        ));
    }

    #[test]
    fn encode_is_linear_and_zero_maps_to_zero() {
        let mut rng = rng_stream(2, "learner-init");
        let data = gaussian_data(50, 4, 7);
        let ae = Autoencoder::train(&data, 2, AutoencoderHyper::default(), &mut rng).unwrap();
        let zero = ae.encode(&[0.0; 4]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.3, 0.7, -1.1, 0.2];
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let ex = ae.encode(&x).unwrap();
        let ey = ae.encode(&y).unwrap();
        let es = ae.encode(&sum).unwrap();
        for i in 0..2 {
            assert!((es[i] - (ex[i] + ey[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn dim_mismatch_rejected() {
        let mut rng = rng_stream(3, "learner-init");
        let data = gaussian_data(30, 3, 8);
        let ae = Autoencoder::train(&data, 1, AutoencoderHyper::default(), &mut rng).unwrap();
        assert!(matches!(
            ae.encode(&[1.0, 2.0, 3.0, 4.0]),
            Err(SimError::DimMismatch { .. })
        ));
    }

    #[test]
    fn recovers_exact_low_rank_data() {
        // Data lying exactly in a 2-dim subspace of R^6.
        let mut rng = rng_stream(4, "learner-init");
        let mut gen = rng_stream(5, "learner-init");
        let normal = Normal::new(0.0, 1.0).unwrap();
        let basis = [
            [1.0, 0.5, -0.3, 0.8, 0.0, 0.2],
            [0.0, 1.0, 0.7, -0.4, 0.9, -0.1],
        ];
        let data: Vec<Vec<f64>> = (0..80)
            .map(|_| {
                let a = normal.sample(&mut gen);
                let b = normal.sample(&mut gen);
                (0..6).map(|j| a * basis[0][j] + b * basis[1][j]).collect()
            })
            .collect();
        let ae = Autoencoder::train(&data, 2, AutoencoderHyper::default(), &mut rng).unwrap();
        let err = ae.reconstruction_error(&data).unwrap();
        let variance: f64 = data
            .iter()
            .flat_map(|r| r.iter().map(|v| v * v))
            .sum::<f64>()
            / (data.len() as f64 * 6.0);
        assert!(err < 1e-3 * variance, "err={err} var={variance}");
    }

    #[test]
    fn within_factor_of_rank_m_oracle() {
        let data = gaussian_data(200, 5, 11);
        let mut rng = rng_stream(6, "learner-init");
        let ae = Autoencoder::train(&data, 4, AutoencoderHyper::default(), &mut rng).unwrap();
        let err = ae.reconstruction_error(&data).unwrap();
        let oracle = rank_m_oracle(&data, 4);
        assert!(err <= 1.5 * oracle, "err={err} oracle={oracle}");
        // Sanity lower bound: never beats the optimal projection.
        assert!(err >= oracle - 1e-9);
    }
}
