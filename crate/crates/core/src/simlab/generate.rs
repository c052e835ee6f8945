use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::SimConfig;
use super::metrics::ModelCovariance;
use crate::error::Result;
use crate::spectrum::DataMatrix;

/// Random stream for one replication.
///
/// The master seed fixes the key and the replication index selects the
/// ChaCha stream, so each replication's draws are independent of how the
/// replications are scheduled.
pub fn replicate_rng(master_seed: u64, replicate_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate_index);
    rng
}

/// A generated data set and the loadings that produced it.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub data: DataMatrix,
    /// `K x J_true`, columns `alpha_j * direction_j`.
    pub loadings: DMatrix<f64>,
}

impl Replicate {
    /// Population covariance `A A' + sigma2 I`.
    pub fn true_covariance(&self, sigma2: f64) -> Result<ModelCovariance> {
        ModelCovariance::new(sigma2, self.loadings.clone())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws loadings with directions uniform on the unit sphere (not
/// orthogonalized), then `x_i = A v_i + e_i` with `v_i ~ N(0, I_J)` and
/// `e_i ~ N(0, sigma2 I_K)`.
pub fn generate_replicate(config: &SimConfig, replicate_index: u64) -> Result<Replicate> {
    let (n, k, j) = (config.n, config.k, config.j_true);
    let mut rng = replicate_rng(config.master_seed, replicate_index);

    let mut loadings = DMatrix::zeros(k, j);
    for (col, alpha) in config.alpha_true.iter().enumerate() {
        let mut dir: Vec<f64> = (0..k).map(|_| normal(&mut rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|x| *x *= alpha / norm);
        loadings.set_column(col, &nalgebra::DVector::from_vec(dir));
    }

    let noise_sd = config.sigma2_true.sqrt();
    let mut values = DMatrix::zeros(n, k);
    let mut scores = vec![0.0; j];
    for i in 0..n {
        scores.iter_mut().for_each(|v| *v = normal(&mut rng));
        for c in 0..k {
            let mut x = noise_sd * normal(&mut rng);
            for (l, v) in scores.iter().enumerate() {
                x += loadings[(c, l)] * v;
            }
            values[(i, c)] = x;
        }
    }
    Ok(Replicate {
        data: DataMatrix::new(values)?,
        loadings,
    })
}

/// Data matrix for replication `replicate_index` of `config`.
pub fn generate_dataset(config: &SimConfig, replicate_index: u64) -> Result<DataMatrix> {
    generate_replicate(config, replicate_index).map(|r| r.data)
}
