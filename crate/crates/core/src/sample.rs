//! Point samples in the unit cube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub replicate_index: u64,
}

/// `n` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    provenance: Option<Provenance>,
}

impl SampleMatrix {
    /// Builds a sample from row-major coordinates, checking that every value lies in `[0,1]`.
    pub fn from_row_major(n: usize, d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.len() != n * d {
            return Err(Error::invalid(format!(
                "expected {} coordinates for a {n}x{d} sample, got {}",
                n * d,
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "coordinate {} of row {} is {}, outside [0,1]",
                pos % d + 1,
                pos / d,
                coords[pos]
            )));
        }
        Ok(Self {
            n,
            d,
            coords,
            provenance: None,
        })
    }

    /// Builds a sample from a list of rows of equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(Error::invalid("rows have differing lengths"));
        }
        let coords = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::from_row_major(rows.len(), d, coords)
    }

    pub(crate) fn from_parts_unchecked(
        n: usize,
        d: usize,
        coords: Vec<f64>,
        provenance: Option<Provenance>,
    ) -> Self {
        debug_assert_eq!(coords.len(), n * d);
        Self {
            n,
            d,
            coords,
            provenance,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn view(&self) -> SampleView<'_> {
        SampleView {
            data: &self.coords,
            n: self.n,
            d: self.d,
            stride: self.d,
        }
    }

    /// Copy of the sample with only the first `d` coordinates of every row.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        Ok(Self {
            n: self.n,
            d,
            coords: self.view().leading(d)?.to_row_major(),
            provenance: self.provenance,
        })
    }
}

/// Borrowed view of the leading `d` columns of a row-major array whose rows
/// are `stride` values long.
#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    data: &'a [f64],
    n: usize,
    d: usize,
    stride: usize,
}

impl<'a> SampleView<'a> {
    pub(crate) fn new(data: &'a [f64], n: usize, d: usize, stride: usize) -> Self {
        debug_assert!(d >= 1 && d <= stride);
        debug_assert!(data.len() >= n * stride);
        Self { data, n, d, stride }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        let start = i * self.stride;
        &self.data[start..start + self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.stride + k]
    }

    /// Narrows the view to its first `d` columns.
    pub fn leading(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.d {
            return Err(Error::invalid(format!(
                "cannot take {d} leading columns of a {}-dimensional sample",
                self.d
            )));
        }
        Ok(Self { d, ..*self })
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        (0..self.n)
            .flat_map(|i| self.row(i).iter().copied())
            .collect()
    }
}
