use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `n` points in `R^dim` with uniform weights, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    values: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("point dimension must be at least 1"));
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: dim,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(PointCloud { dim, values })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: r.len(),
                    right: dim,
                });
            }
            values.extend_from_slice(r);
        }
        PointCloud::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points().map(|p| p[j]).collect()
    }

    /// Projection onto a direction.
    pub fn project(&self, direction: &[f64]) -> Vec<f64> {
        self.points()
            .map(|p| p.iter().zip(direction).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Copy with rows reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> PointCloud {
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            values,
        }
    }

    pub fn concat(&self, other: &PointCloud) -> Result<PointCloud> {
        same_dim(self, other)?;
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(PointCloud {
            dim: self.dim,
            values,
        })
    }
}

pub(crate) fn same_dim(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

pub(crate) fn non_empty(x: &PointCloud) -> Result<()> {
    if x.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 0, got: 0 });
    }
    Ok(())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-column population standard deviations; a zero (or non-finite)
/// column is an error naming it.
pub fn column_scales(x: &PointCloud) -> Result<Vec<f64>> {
    non_empty(x)?;
    (0..x.dim())
        .map(|j| {
            let s = crate::stats::std_dev(&x.column(j));
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::ZeroScale { column: j })
            }
        })
        .collect()
}

/// Divides every column by its scale.
pub fn standardize(x: &PointCloud, scales: &[f64]) -> Result<PointCloud> {
    if scales.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: scales.len(),
            right: x.dim(),
        });
    }
    if let Some(column) = scales.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::ZeroScale { column });
    }
    let values = x
        .values
        .chunks_exact(x.dim)
        .flat_map(|p| p.iter().zip(scales).map(|(v, s)| v / s))
        .collect();
    Ok(PointCloud { dim: x.dim, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shape_checks() {
        assert!(PointCloud::new(0, vec![]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::new(1, vec![f64::NAN]).is_err());
        let c = PointCloud::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(1), &[3.0, 4.0]);
        assert_eq!(c.column(0), vec![1.0, 3.0]);
    }

    #[test]
    fn unit_scales_are_identity() {
        let c = PointCloud::new(2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(standardize(&c, &[1.0, 1.0]).unwrap(), c);
    }

    #[test]
    fn constant_column_is_named() {
        let c = PointCloud::new(2, vec![1.0, 2.0, 3.0, 2.0]).unwrap();
        assert_eq!(column_scales(&c), Err(Error::ZeroScale { column: 1 }));
        assert_eq!(
            standardize(&c, &[1.0, 0.0]),
            Err(Error::ZeroScale { column: 1 })
        );
    }

    #[test]
    fn standardized_reference_has_unit_std() {
        let c = PointCloud::new(2, vec![1.0, 10.0, 2.0, 30.0, 4.0, 20.0, 7.0, -5.0]).unwrap();
        let s = standardize(&c, &column_scales(&c).unwrap()).unwrap();
        for j in 0..2 {
            assert!((crate::stats::std_dev(&s.column(j)) - 1.0).abs() < 1e-12);
        }
    }
}
