//! Coordinate projections and axis-aligned boxes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projection onto coordinates `k_1 < ... < k_m`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProjectionSpec {
    indices: Vec<usize>,
}

impl ProjectionSpec {
    /// Builds a projection from zero-based, strictly increasing indices.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("projection needs at least one coordinate"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "projection indices must be strictly increasing ({} then {})",
                w[0] + 1,
                w[1] + 1
            )));
        }
        Ok(Self { indices })
    }

    /// Builds a projection from one-based indices, as written on the command line.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::invalid("coordinate indices are one-based"));
        }
        Self::new(indices.iter().map(|k| k - 1).collect())
    }

    /// Projection onto the first `m` coordinates.
    pub fn leading(m: usize) -> Result<Self> {
        Self::new((0..m).collect())
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Zero-based coordinate indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Largest zero-based index used.
    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("non-empty by construction")
    }

    pub fn project_into(&self, point: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.indices.iter().map(|&k| point[k]));
    }

    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&k| point[k]).collect()
    }
}

impl TryFrom<Vec<usize>> for ProjectionSpec {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&indices)
    }
}

impl From<ProjectionSpec> for Vec<usize> {
    fn from(p: ProjectionSpec) -> Self {
        p.indices.iter().map(|k| k + 1).collect()
    }
}

impl fmt::Display for ProjectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|k| (k + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ProjectionSpec {
    type Err = Error;

    /// Parses one-based indices such as `"1,3,7"`; whitespace is ignored.
    fn from_str(text: &str) -> Result<Self> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::parse(text, "empty projection"));
        }
        let mut indices = Vec::new();
        for token in cleaned.split(',') {
            let k: usize = token
                .parse()
                .map_err(|_| Error::parse(token, "expected a positive integer index"))?;
            if k == 0 {
                return Err(Error::parse(token, "indices are one-based"));
            }
            if let Some(&prev) = indices.last() {
                if k <= prev {
                    return Err(Error::parse(token, "indices must be strictly increasing"));
                }
            }
            indices.push(k);
        }
        Self::from_one_based(&indices)
    }
}

/// Closed axis-aligned box `[a_1,b_1] x ... x [a_m,b_m]` inside `[0,1]^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct BoxRegion {
    bounds: Vec<(f64, f64)>,
}

impl BoxRegion {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("box needs at least one side"));
        }
        for (k, &(a, b)) in bounds.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(Error::invalid(format!(
                    "side {} [{a}, {b}] leaves [0,1]",
                    k + 1
                )));
            }
            if a >= b {
                return Err(Error::invalid(format!(
                    "side {} [{a}, {b}] is empty or degenerate",
                    k + 1
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// The whole cube `[0,1]^m`.
    pub fn unit(m: usize) -> Self {
        assert!(m >= 1, "box dimension must be positive");
        Self {
            bounds: vec![(0.0, 1.0); m],
        }
    }

    pub fn m(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn is_unit(&self) -> bool {
        self.bounds.iter().all(|&(a, b)| a == 0.0 && b == 1.0)
    }

    /// Closed-interval membership of an `m`-dimensional point.
    #[inline]
    pub fn contains(&self, point: &[f64]) -> bool {
        debug_assert_eq!(point.len(), self.bounds.len());
        self.bounds
            .iter()
            .zip(point)
            .all(|(&(a, b), &x)| a <= x && x <= b)
    }

    /// Membership of the projection of a full point, without allocating.
    #[inline]
    pub fn contains_projected(&self, proj: &ProjectionSpec, point: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(proj.indices())
            .all(|(&(a, b), &k)| a <= point[k] && point[k] <= b)
    }
}

impl TryFrom<Vec<(f64, f64)>> for BoxRegion {
    type Error = Error;

    fn try_from(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(bounds)
    }
}

impl From<BoxRegion> for Vec<(f64, f64)> {
    fn from(b: BoxRegion) -> Self {
        b.bounds
    }
}

impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|(a, b)| format!("{a}:{b}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for BoxRegion {
    type Err = Error;

    /// Parses comma-separated `a:b` pairs such as `"0:0.5,0:1"`; whitespace is ignored.
    fn from_str(text: &str) -> Result<Self> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::parse(text, "empty box"));
        }
        let mut bounds = Vec::new();
        for token in cleaned.split(',') {
            let (a, b) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(token, "expected `a:b`"))?;
            let parse_end = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::parse(token, format!("`{s}` is not a number")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::parse(token, "bounds must lie in [0,1]"));
                }
                Ok(v)
            };
            let (a, b) = (parse_end(a)?, parse_end(b)?);
            if a >= b {
                return Err(Error::parse(token, "lower bound must be below upper bound"));
            }
            bounds.push((a, b));
        }
        Self::new(bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_box() {
        let b: BoxRegion = " 0:0.5 , 0:1 ".parse().unwrap();
        assert_eq!(b.bounds(), &[(0.0, 0.5), (0.0, 1.0)]);
        assert_eq!(b.m(), 2);
    }

    #[test]
    fn rejects_degenerate_box() {
        let err = "0.5:0.5".parse::<BoxRegion>().unwrap_err();
        assert!(matches!(err, Error::Parse { ref token, .. } if token == "0.5:0.5"));
        assert!("0:0.2,0.7:0.3".parse::<BoxRegion>().is_err());
        assert!("0:1.5".parse::<BoxRegion>().is_err());
        assert!("0-1".parse::<BoxRegion>().is_err());
        assert!(BoxRegion::new(vec![(0.3, 0.3)]).is_err());
    }

    #[test]
    fn parses_projection() {
        let p: ProjectionSpec = "1, 3,7".parse().unwrap();
        assert_eq!(p.indices(), &[0, 2, 6]);
        assert_eq!(p.to_string(), "1,3,7");
        assert_eq!(p.m(), 3);
    }

    #[test]
    fn rejects_non_increasing_projection() {
        let err = "3,1".parse::<ProjectionSpec>().unwrap_err();
        assert!(matches!(err, Error::Parse { ref token, .. } if token == "1"));
        assert!("2,2".parse::<ProjectionSpec>().is_err());
        assert!("0,1".parse::<ProjectionSpec>().is_err());
        assert!("a".parse::<ProjectionSpec>().is_err());
    }

    #[test]
    fn closed_membership() {
        let b = BoxRegion::new(vec![(0.0, 0.5)]).unwrap();
        assert!(b.contains(&[0.5]));
        assert!(b.contains(&[0.0]));
        assert!(!b.contains(&[0.5000001]));
    }

    #[test]
    fn serde_uses_one_based_indices() {
        let p: ProjectionSpec = "2,5".parse().unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[2,5]");
        let back: ProjectionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<ProjectionSpec>("[3,1]").is_err());
    }
}
