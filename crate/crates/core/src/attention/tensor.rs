use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttentionError, Result};

pub type Mat = DMatrix<f64>;

/// What a token sequence encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Flattened multi-scale image features (S tokens).
    Visual,
    /// Stride-16 ground features (HW/16^2 tokens).
    Ground,
}

/// `T x C` tokens with their role.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    tokens: Mat,
    role: Role,
}

fn check_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AttentionError::NonFinite(what))
    }
}

impl FeatureSequence {
    pub fn new(tokens: Mat, role: Role) -> Result<Self> {
        if tokens.nrows() == 0 || tokens.ncols() == 0 {
            return Err(AttentionError::ShapeMismatch(format!("empty {role:?} sequence")));
        }
        check_finite(&tokens, "feature sequence")?;
        Ok(Self { tokens, role })
    }

    pub fn tokens(&self) -> &Mat {
        &self.tokens
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.tokens.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.tokens.ncols()
    }

    pub fn into_tokens(self) -> Mat {
        self.tokens
    }
}

/// `N x C` object queries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    queries: Mat,
}

impl QuerySet {
    pub fn new(queries: Mat) -> Result<Self> {
        if queries.nrows() == 0 || queries.ncols() == 0 {
            return Err(AttentionError::ShapeMismatch("empty query set".into()));
        }
        check_finite(&queries, "query set")?;
        Ok(Self { queries })
    }

    pub fn queries(&self) -> &Mat {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.queries.ncols()
    }

    pub fn into_queries(self) -> Mat {
        self.queries
    }
}

/// `N x T` row-stochastic attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    weights: Mat,
}

impl AttentionMap {
    pub const ROW_TOL: f64 = 1e-9;

    pub fn new(weights: Mat) -> Result<Self> {
        let map = Self { weights };
        if let Some(err) = map.max_row_error() {
            if !(err <= Self::ROW_TOL) {
                return Err(AttentionError::ShapeMismatch(format!("attention rows deviate from 1 by {err}")));
            }
        }
        if map.weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(AttentionError::ShapeMismatch("attention weight outside [0, 1]".into()));
        }
        Ok(map)
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    /// Largest `|row sum - 1|`.
    pub fn max_row_error(&self) -> Option<f64> {
        self.weights.row_iter().map(|r| (r.sum() - 1.0).abs()).reduce(f64::max)
    }
}

/// `rows x cols` entries drawn uniformly from `[-scale, scale)`.
pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Mat {
    // row-major draw order so the stream does not depend on storage layout
    let mut m = Mat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = if scale > 0.0 { rng.gen_range(-scale..scale) } else { 0.0 };
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn constructors_validate() {
        assert!(FeatureSequence::new(Mat::zeros(0, 4), Role::Visual).is_err());
        assert!(FeatureSequence::new(Mat::from_element(2, 2, f64::NAN), Role::Ground).is_err());
        assert!(QuerySet::new(Mat::zeros(3, 0)).is_err());
        assert!(AttentionMap::new(Mat::from_row_slice(1, 2, &[0.5, 0.6])).is_err());
        assert!(AttentionMap::new(Mat::from_row_slice(1, 2, &[1.5, -0.5])).is_err());
        let a = AttentionMap::new(Mat::from_row_slice(2, 2, &[0.25, 0.75, 1.0, 0.0])).unwrap();
        assert_eq!(a.max_row_error(), Some(0.0));
    }

    #[test]
    fn random_matrix_is_seeded() {
        let a = random_matrix(3, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let b = random_matrix(3, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.abs() <= 1.0));
        assert_eq!(random_matrix(2, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(1)), Mat::zeros(2, 2));
    }
}
