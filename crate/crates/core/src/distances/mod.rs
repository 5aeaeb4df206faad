//! Statistical distances between point clouds of QoI vectors.

mod cloud;
mod gaussian;
mod knn;
pub mod ot;
mod wasserstein;

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cloud::{column_scales, standardize, PointCloud};
pub use gaussian::{equicorrelated, gaussian_w2};
pub use knn::{gamma_divergence, kl_knn, log_unit_ball_volume, KnnEstimate, JITTER};
pub use wasserstein::{random_direction, sliced_wasserstein, wasserstein};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    Wasserstein,
    SlicedWasserstein,
    Kl,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    pub order: f64,
    pub n_projections: usize,
    pub k_neighbors: usize,
    pub gamma: f64,
    /// Divide columns by the observed data's per-column std first.
    pub standardize: bool,
}

impl Default for DistanceSpec {
    fn default() -> Self {
        DistanceSpec {
            kind: DistanceKind::Wasserstein,
            order: 2.0,
            n_projections: 50,
            k_neighbors: 1,
            gamma: 0.1,
            standardize: true,
        }
    }
}

impl DistanceSpec {
    pub fn new(kind: DistanceKind) -> Self {
        DistanceSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.order >= 1.0) || !self.order.is_finite() {
            return Err(Error::config("distance order must be >= 1"));
        }
        if self.n_projections == 0 {
            return Err(Error::config("n_projections must be >= 1"));
        }
        if self.k_neighbors == 0 {
            return Err(Error::config("k_neighbors must be >= 1"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::config("gamma exponent must be > 0"));
        }
        Ok(())
    }

    /// Raw distance between two clouds, no standardization.
    pub fn evaluate<R: Rng + ?Sized>(
        &self,
        x: &PointCloud,
        y: &PointCloud,
        rng: &mut R,
    ) -> Result<f64> {
        match self.kind {
            DistanceKind::Wasserstein => wasserstein(x, y, self.order),
            DistanceKind::SlicedWasserstein => {
                sliced_wasserstein(x, y, self.n_projections, self.order, rng)
            }
            DistanceKind::Kl => kl_knn(x, y, self.k_neighbors).map(|e| e.value),
            DistanceKind::Gamma => {
                gamma_divergence(x, y, self.gamma, self.k_neighbors).map(|e| e.value)
            }
        }
    }
}

/// Distance to a fixed observed dataset, with the standardization
/// scales frozen from that dataset.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    spec: DistanceSpec,
    scales: Option<Vec<f64>>,
    observed: PointCloud,
}

impl Discrepancy {
    pub fn new(spec: DistanceSpec, observed: &PointCloud) -> Result<Self> {
        spec.validate()?;
        let (scales, observed) = if spec.standardize {
            let s = column_scales(observed)?;
            let obs = standardize(observed, &s)?;
            (Some(s), obs)
        } else {
            (None, observed.clone())
        };
        Ok(Discrepancy {
            spec,
            scales,
            observed,
        })
    }

    pub fn spec(&self) -> &DistanceSpec {
        &self.spec
    }

    pub fn scales(&self) -> Option<&[f64]> {
        self.scales.as_deref()
    }

    /// Observed data in the space distances act on.
    pub fn observed(&self) -> &PointCloud {
        &self.observed
    }

    pub fn to_metric_space(&self, x: &PointCloud) -> Result<PointCloud> {
        match &self.scales {
            Some(s) => standardize(x, s),
            None => Ok(x.clone()),
        }
    }

    /// Distance from the simulated `x` to the observed data.
    pub fn distance<R: Rng + ?Sized>(&self, x: &PointCloud, rng: &mut R) -> Result<f64> {
        let x = self.to_metric_space(x)?;
        self.spec.evaluate(&x, &self.observed, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    #[test]
    fn spec_validation() {
        assert!(DistanceSpec::default().validate().is_ok());
        let mut s = DistanceSpec::default();
        s.order = 0.5;
        assert!(s.validate().is_err());
        let mut s = DistanceSpec::new(DistanceKind::Gamma);
        s.gamma = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn discrepancy_of_observed_is_zero() {
        let obs = PointCloud::new(2, vec![1.0, 10.0, 2.0, 30.0, 4.0, 20.0]).unwrap();
        let d = Discrepancy::new(DistanceSpec::default(), &obs).unwrap();
        let mut rng = crate::rng::StreamRng::seed_from_u64(0);
        assert_eq!(d.distance(&obs, &mut rng).unwrap(), 0.0);
        assert_eq!(d.scales().unwrap().len(), 2);
    }

    #[test]
    fn kind_names() {
        let s: DistanceKind = serde_json_free_parse("sliced-wasserstein");
        assert_eq!(s, DistanceKind::SlicedWasserstein);
    }

    fn serde_json_free_parse(name: &str) -> DistanceKind {
        use serde::de::value::{Error as DeError, StrDeserializer};
        use serde::de::IntoDeserializer;
        let de: StrDeserializer<'_, DeError> = name.into_deserializer();
        DistanceKind::deserialize(de).unwrap()
    }
}
