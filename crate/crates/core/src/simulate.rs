//! Synthetic three-view benchmark generators.
//!
//! Both models plant a shared latent signal in the first `q` variables of
//! each view and fill the rest with independent Gaussian noise of variance
//! 0.2. The linear model draws a trivariate Gaussian latent vector; the
//! nonlinear model pushes one uniform latent variable through `v`, `v^2`,
//! and `v cos v`.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, ViewSample};
use crate::error::{Error, Result};

/// Latent covariance of the linear model: unit variances,
/// `cov(v1,v3) = cov(v2,v3) = 0.7`, `cov(v1,v2) = 0`.
pub const LINEAR_LATENT_COV: [[f64; 3]; 3] = [
    [1.0, 0.0, 0.7],
    [0.0, 1.0, 0.7],
    [0.7, 0.7, 1.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    Linear,
    Nonlinear,
}

/// Specification of one simulated dataset: `p` variables per view, `n`
/// samples, `q` signal variables, noise variance (0.2 in the reference
/// setup), and the RNG seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: SimModel,
    pub p: usize,
    pub n: usize,
    pub q: usize,
    pub noise_var: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(model: SimModel, p: usize, n: usize, q: usize, seed: u64) -> Self {
        Self { model, p, n, q, noise_var: 0.2, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n < 2 {
            return Err(Error::InvalidInput("need p >= 1 and n >= 2".into()));
        }
        if self.q > self.p {
            return Err(Error::InvalidInput(format!(
                "q = {} exceeds p = {}",
                self.q, self.p
            )));
        }
        if self.noise_var < 0.0 || !self.noise_var.is_finite() {
            return Err(Error::InvalidInput("noise variance must be nonnegative".into()));
        }
        Ok(())
    }

    /// The planted signal indices, identical across views.
    pub fn signal_indices(&self) -> Vec<usize> {
        (0..self.q).collect()
    }

    pub fn generate(&self) -> Result<MultiViewDataset> {
        match self.model {
            SimModel::Linear => generate_linear(self),
            SimModel::Nonlinear => generate_nonlinear(self),
        }
    }
}

/// Linear model: `x_k^[j] = v_k 1(j <= q) + eps_kj` with `(v_1, v_2, v_3)`
/// trivariate Gaussian with covariance [`LINEAR_LATENT_COV`].
pub fn generate_linear(spec: &SimSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chol = latent_cholesky();
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut latents = vec![[0.0f64; 3]; spec.n];
    for latent in latents.iter_mut() {
        let z = [normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)];
        for k in 0..3 {
            latent[k] = (0..3).map(|l| chol[(k, l)] * z[l]).sum();
        }
    }
    let signals: Vec<Vec<f64>> = (0..3)
        .map(|k| latents.iter().map(|v| v[k]).collect())
        .collect();
    assemble_views(spec, &signals, &mut rng)
}

/// Nonlinear model: one latent `v ~ U[-2pi, 2pi]`; view signals `v`, `v^2`,
/// and `v cos v`.
pub fn generate_nonlinear(spec: &SimSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let uniform = Uniform::new(-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
    let v: Vec<f64> = (0..spec.n).map(|_| uniform.sample(&mut rng)).collect();
    let signals = vec![
        v.clone(),
        v.iter().map(|x| x * x).collect(),
        v.iter().map(|x| x * x.cos()).collect(),
    ];
    assemble_views(spec, &signals, &mut rng)
}

fn assemble_views(
    spec: &SimSpec,
    signals: &[Vec<f64>],
    rng: &mut impl Rng,
) -> Result<MultiViewDataset> {
    let noise_sd = spec.noise_var.sqrt();
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let views = signals
        .iter()
        .map(|signal| {
            let mut data = DMatrix::zeros(spec.p, spec.n);
            for j in 0..spec.p {
                for i in 0..spec.n {
                    let mean = if j < spec.q { signal[i] } else { 0.0 };
                    data[(j, i)] = mean + noise_sd * normal.sample(rng);
                }
            }
            ViewSample::new(data)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiViewDataset::new(views)
}

/// Lower Cholesky factor of [`LINEAR_LATENT_COV`].
fn latent_cholesky() -> DMatrix<f64> {
    let cov = DMatrix::from_fn(3, 3, |i, j| LINEAR_LATENT_COV[i][j]);
    cov.cholesky()
        .expect("fixed latent covariance is positive definite")
        .l()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn latent_covariance_is_pd() {
        let l = latent_cholesky();
        let cov = &l * l.transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[(i, j)] - LINEAR_LATENT_COV[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_latents_match_target_covariance() {
        // Signal variable 0 of each view is v_k plus variance-0.2 noise, so
        // cross-view covariances estimate the latent covariances directly.
        let spec = SimSpec::new(SimModel::Linear, 1, 100_000, 1, 7);
        let data = generate_linear(&spec).unwrap();
        let v: Vec<Vec<f64>> = (0..3).map(|k| data.view(k).variable(0)).collect();
        assert!((sample_cov(&v[0], &v[2]) - 0.7).abs() < 0.02);
        assert!((sample_cov(&v[1], &v[2]) - 0.7).abs() < 0.02);
        assert!(sample_cov(&v[0], &v[1]).abs() < 0.02);
        // Marginal variance is 1 + 0.2.
        assert!((sample_cov(&v[0], &v[0]) - 1.2).abs() < 0.03);
    }

    #[test]
    fn noise_variables_uncorrelated_with_signal() {
        let spec = SimSpec::new(SimModel::Linear, 2, 50_000, 1, 11);
        let data = generate_linear(&spec).unwrap();
        let signal = data.view(0).variable(0);
        let noise = data.view(0).variable(1);
        // Noise has variance 0.2; SE of the covariance estimate is about
        // sqrt(var_s * var_n / n).
        let se = (1.2f64 * 0.2 / 50_000.0).sqrt();
        assert!(sample_cov(&signal, &noise).abs() < 3.0 * se);
        assert!((sample_cov(&noise, &noise) - 0.2).abs() < 0.01);
    }

    #[test]
    fn zero_q_gives_pure_noise() {
        let spec = SimSpec::new(SimModel::Linear, 3, 1000, 0, 3);
        let data = generate_linear(&spec).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let x = data.view(k).variable(j);
                assert!((sample_cov(&x, &x) - 0.2).abs() < 0.05);
            }
        }
    }

    #[test]
    fn nonlinear_second_view_nonnegative_up_to_noise() {
        let spec = SimSpec::new(SimModel::Nonlinear, 5, 2000, 2, 5);
        let data = generate_nonlinear(&spec).unwrap();
        let floor = -3.0 * 0.2f64.sqrt();
        for j in 0..2 {
            for x in data.view(1).variable(j) {
                assert!(x >= floor - 1.0, "v^2 signal entry far below noise floor: {x}");
            }
        }
    }

    #[test]
    fn nonlinear_view1_view2_nearly_uncorrelated() {
        // v is symmetric about 0, so cov(v, v^2) = 0 in population.
        let spec = SimSpec::new(SimModel::Nonlinear, 1, 100_000, 1, 13);
        let data = generate_nonlinear(&spec).unwrap();
        let x1 = data.view(0).variable(0);
        let x2 = data.view(1).variable(0);
        let normalized = sample_cov(&x1, &x2)
            / (sample_cov(&x1, &x1).sqrt() * sample_cov(&x2, &x2).sqrt());
        assert!(normalized.abs() < 0.02);
    }

    #[test]
    fn seed_reproducibility() {
        let spec = SimSpec::new(SimModel::Nonlinear, 4, 50, 2, 42);
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        for k in 0..3 {
            assert_eq!(a.view(k).data(), b.view(k).data());
        }
        let other = SimSpec::new(SimModel::Nonlinear, 4, 50, 2, 43).generate().unwrap();
        assert_ne!(a.view(0).data(), other.view(0).data());
    }

    #[test]
    fn rejects_q_above_p() {
        let spec = SimSpec::new(SimModel::Linear, 2, 10, 3, 0);
        assert!(spec.generate().is_err());
    }
}
