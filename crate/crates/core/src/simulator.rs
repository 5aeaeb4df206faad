//! Parameterised stochastic models producing QoI point clouds.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::distances::{equicorrelated, PointCloud};
use crate::growth::ModelSetup;
use crate::linalg::cholesky;
use crate::morphometrics::{extract, labels, Morphometric};
use crate::rng::{derive_seed, StreamRng};
use crate::{Error, Result};

/// A stochastic model `θ -> n` iid QoI vectors. Implementations must be
/// deterministic in `(theta, n, seed)`.
pub trait Simulator: Sync {
    fn dim_theta(&self) -> usize;
    fn qoi_labels(&self) -> Vec<String>;
    fn simulate(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud>;
}

fn check_theta(theta: &[f64], dim: usize) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: dim,
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("parameter vector"));
    }
    Ok(())
}

/// Growth model with `θ = (p_bra, R, v)` overriding the base setup.
#[derive(Debug, Clone)]
pub struct GrowthSimulator {
    pub setup: ModelSetup,
    pub selection: Vec<Morphometric>,
}

impl GrowthSimulator {
    pub const PARAM_NAMES: [&'static str; 3] = ["p_bra", "R", "v"];

    pub fn new(setup: ModelSetup, selection: Vec<Morphometric>) -> Self {
        GrowthSimulator { setup, selection }
    }

    pub fn setup_for(&self, theta: &[f64]) -> Result<ModelSetup> {
        check_theta(theta, 3)?;
        let mut setup = self.setup.clone();
        setup.params.branching_probability = theta[0];
        setup.params.resource_consumption = theta[1];
        setup.params.speed = theta[2];
        setup.params.validate()?;
        Ok(setup)
    }
}

impl Simulator for GrowthSimulator {
    fn dim_theta(&self) -> usize {
        3
    }

    fn qoi_labels(&self) -> Vec<String> {
        labels(&self.selection)
    }

    fn simulate(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        let setup = self.setup_for(theta)?;
        let mut values = Vec::with_capacity(n * self.selection.len());
        for i in 0..n {
            let tree = setup.simulate(derive_seed(seed, &[i as u64]))?;
            values.extend(extract(&tree, &self.selection)?);
        }
        PointCloud::new(self.selection.len(), values)
    }
}

/// `N(θ, C)` with the equicorrelated covariance `C_ij = δ_ij + 0.2 (1 - δ_ij)`.
#[derive(Debug, Clone)]
pub struct ToyGaussian {
    dim: usize,
    chol: Vec<f64>,
}

impl ToyGaussian {
    pub const CORRELATION: f64 = 0.2;

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("toy dimension must be >= 1"));
        }
        let chol = cholesky(&equicorrelated(dim, Self::CORRELATION), dim)?;
        Ok(ToyGaussian { dim, chol })
    }

    pub fn covariance(&self) -> Vec<f64> {
        equicorrelated(self.dim, Self::CORRELATION)
    }

    /// `n` draws from `N(mean, C)` using the given stream.
    pub fn sample<R: rand::Rng + ?Sized>(&self, mean: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(n * d);
        let mut z = alloc::vec![0.0; d];
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            for i in 0..d {
                let li = &self.chol[i * d..i * d + i + 1];
                out.push(mean[i] + li.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        out
    }
}

impl Simulator for ToyGaussian {
    fn dim_theta(&self) -> usize {
        self.dim
    }

    fn qoi_labels(&self) -> Vec<String> {
        (1..=self.dim).map(|i| alloc::format!("x{i}")).collect()
    }

    fn simulate(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        check_theta(theta, self.dim)?;
        let mut rng = StreamRng::seed_from_u64(seed);
        PointCloud::new(self.dim, self.sample(theta, n, &mut rng))
    }
}
