use crate::error::{Error, Result};

/// `N` points in `[0,1)^dim`, stored point by point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::contract("point dimension must be positive"));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != dim {
                return Err(Error::contract(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a set from a flat coordinate buffer (`dim` values per point).
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::contract(format!(
                "flat buffer of length {} is not a multiple of dim {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite coordinate at point {}",
                bad / dim
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_planar(points: &[[f64; 2]]) -> Self {
        PointSet {
            dim: 2,
            coords: points.iter().flat_map(|p| [p[0], p[1]]).collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Planar view; fails unless `dim == 2`.
    pub fn planar(&self) -> Result<Vec<[f64; 2]>> {
        self.require_planar()?;
        Ok(self.iter().map(|p| [p[0], p[1]]).collect())
    }

    pub fn require_planar(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::contract(format!(
                "expected planar points, got dim {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Concatenates two sets of the same dimension.
    pub fn concat(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(Error::contract("dimension mismatch in concat"));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointSet {
            dim: self.dim,
            coords,
        })
    }
}
