use nalgebra::RowDVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_matrix, AttentionError, FeatureSequence, Mat, Result};
use crate::maps::DenormMap;

/// `y = x W + b` applied to every row of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `in x out`.
    pub weight: Mat,
    pub bias: RowDVector<f64>,
}

impl Linear {
    pub fn new(weight: Mat, bias: RowDVector<f64>) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(AttentionError::ShapeMismatch(format!(
                "weight has {} outputs, bias {}",
                weight.ncols(),
                bias.len()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Mat::zeros(inputs, outputs), bias: RowDVector::zeros(outputs) }
    }

    /// Weights and bias uniform in `[-scale, scale)`, weights drawn first.
    pub fn seeded(inputs: usize, outputs: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let weight = random_matrix(inputs, outputs, scale, rng);
        let bias = random_matrix(1, outputs, scale, rng);
        Self { weight, bias: RowDVector::from_iterator(outputs, bias.iter().copied()) }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        if x.ncols() != self.inputs() {
            return Err(AttentionError::ShapeMismatch(format!(
                "linear layer takes {} channels, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        let mut y = x * &self.weight;
        for mut row in y.row_iter_mut() {
            row += &self.bias;
        }
        Ok(y)
    }
}

fn init_scale(channels: usize) -> f64 {
    1.0 / (channels as f64).sqrt()
}

/// Multi-head projections. Head `i` uses columns `i*C/h .. (i+1)*C/h` of
/// the query, key and value projections.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub heads: usize,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

impl AttentionWeights {
    pub fn new(heads: usize, query: Linear, key: Linear, value: Linear, output: Linear) -> Result<Self> {
        let c = query.inputs();
        let w = Self { heads, query, key, value, output };
        let square = |l: &Linear| l.inputs() == c && l.outputs() == c;
        if heads == 0 || !c.is_multiple_of(heads) || ![&w.query, &w.key, &w.value, &w.output].into_iter().all(square) {
            return Err(AttentionError::ShapeMismatch(format!("attention with C = {c} and {heads} heads")));
        }
        Ok(w)
    }

    pub fn seeded(channels: usize, heads: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let s = init_scale(channels);
        let mut l = || Linear::seeded(channels, channels, s, rng);
        let (q, k, v, o) = (l(), l(), l(), l());
        Self::new(heads, q, k, v, o)
    }

    pub fn zeros(channels: usize, heads: usize) -> Result<Self> {
        let l = || Linear::zeros(channels, channels);
        Self::new(heads, l(), l(), l(), l())
    }

    pub fn channels(&self) -> usize {
        self.query.inputs()
    }

    pub fn head_dim(&self) -> usize {
        self.channels() / self.heads
    }
}

/// Linear, ReLU, Linear.
#[derive(Debug, Clone, PartialEq)]
pub struct FfnWeights {
    pub first: Linear,
    pub second: Linear,
}

impl FfnWeights {
    pub fn new(first: Linear, second: Linear) -> Result<Self> {
        if first.outputs() != second.inputs() || first.inputs() != second.outputs() {
            return Err(AttentionError::ShapeMismatch(format!(
                "ffn {}->{} then {}->{}",
                first.inputs(),
                first.outputs(),
                second.inputs(),
                second.outputs()
            )));
        }
        Ok(Self { first, second })
    }

    pub fn seeded(channels: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let s = init_scale(channels);
        let first = Linear::seeded(channels, hidden, s, rng);
        let second = Linear::seeded(hidden, channels, s, rng);
        Self { first, second }
    }

    pub fn channels(&self) -> usize {
        self.first.inputs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBlockWeights {
    pub attention: AttentionWeights,
    pub ffn: FfnWeights,
}

impl EncoderBlockWeights {
    pub fn seeded(channels: usize, heads: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let attention = AttentionWeights::seeded(channels, heads, rng)?;
        Ok(Self { attention, ffn: FfnWeights::seeded(channels, hidden, rng) })
    }
}

/// Ground cross-attention, query self-attention, visual cross-attention,
/// FFN.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderBlockWeights {
    pub ground_attention: AttentionWeights,
    pub self_attention: AttentionWeights,
    pub visual_attention: AttentionWeights,
    pub ffn: FfnWeights,
}

impl DecoderBlockWeights {
    pub fn seeded(channels: usize, heads: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            ground_attention: AttentionWeights::seeded(channels, heads, rng)?,
            self_attention: AttentionWeights::seeded(channels, heads, rng)?,
            visual_attention: AttentionWeights::seeded(channels, heads, rng)?,
            ffn: FfnWeights::seeded(channels, hidden, rng),
        })
    }
}

/// Predicts a plane-equation map from ground tokens laid out row-major on
/// the `rows x cols` stride-16 grid.
pub trait GroundPredictor {
    fn predict(&self, ground: &FeatureSequence, rows: usize, cols: usize) -> Result<DenormMap>;
}

/// Token-wise linear map from `C` channels to `(alpha, beta, gamma, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGroundHead {
    pub linear: Linear,
}

impl LinearGroundHead {
    pub fn seeded(channels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { linear: Linear::seeded(channels, 4, init_scale(channels), &mut rng) }
    }
}

impl GroundPredictor for LinearGroundHead {
    fn predict(&self, ground: &FeatureSequence, rows: usize, cols: usize) -> Result<DenormMap> {
        if ground.len() != rows * cols {
            return Err(AttentionError::ShapeMismatch(format!(
                "{} ground tokens for a {rows}x{cols} grid",
                ground.len()
            )));
        }
        let out = self.linear.apply(ground.tokens())?;
        let data: Vec<f64> = out.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        Ok(DenormMap::from_raw(rows, cols, data)?)
    }
}
