use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    random_matrix, AttentionError, AttentionMap, AttentionWeights, DecoderBlockWeights, EncoderBlockWeights,
    FeatureSequence, FfnWeights, Mat, QuerySet, Result, Role,
};

const PE_BASE: f64 = 10000.0;

fn softmax_rows(m: &mut Mat) {
    for mut row in m.row_iter_mut() {
        let max = row.max();
        row.apply(|x| *x = (*x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Scaled dot-product attention of `queries` (`N x C`) over
/// `keys_values` (`T x C`), scores divided by `sqrt(C)`. Returns the
/// projected output (`N x C`) and the head-averaged weights (`N x T`).
pub fn multi_head_attention(queries: &Mat, keys_values: &Mat, w: &AttentionWeights) -> Result<(Mat, Mat)> {
    let c = w.channels();
    if queries.ncols() != c || keys_values.ncols() != c {
        return Err(AttentionError::ShapeMismatch(format!(
            "attention over {c} channels got {} and {}",
            queries.ncols(),
            keys_values.ncols()
        )));
    }
    let q = w.query.apply(queries)?;
    let k = w.key.apply(keys_values)?;
    let v = w.value.apply(keys_values)?;
    let d = w.head_dim();
    let scale = 1.0 / (c as f64).sqrt();
    let (n, t) = (queries.nrows(), keys_values.nrows());
    let mut concat = Mat::zeros(n, c);
    let mut mean = Mat::zeros(n, t);
    for h in 0..w.heads {
        let mut scores = q.columns(h * d, d) * k.columns(h * d, d).transpose() * scale;
        softmax_rows(&mut scores);
        concat.columns_mut(h * d, d).copy_from(&(&scores * v.columns(h * d, d)));
        mean += scores;
    }
    mean /= w.heads as f64;
    Ok((w.output.apply(&concat)?, mean))
}

pub fn self_attention(x: &FeatureSequence, w: &AttentionWeights) -> Result<FeatureSequence> {
    let (y, _) = multi_head_attention(x.tokens(), x.tokens(), w)?;
    FeatureSequence::new(y, x.role())
}

/// Token-wise `Linear(ReLU(Linear(x)))`.
pub fn ffn(x: &FeatureSequence, w: &FfnWeights) -> Result<FeatureSequence> {
    let mut hidden = w.first.apply(x.tokens())?;
    hidden.apply(|v| *v = v.max(0.0));
    FeatureSequence::new(w.second.apply(&hidden)?, x.role())
}

pub fn encoder_block(x: &FeatureSequence, w: &EncoderBlockWeights) -> Result<FeatureSequence> {
    ffn(&self_attention(x, &w.attention)?, &w.ffn)
}

fn expect_role(x: &FeatureSequence, role: Role) -> Result<()> {
    if x.role() == role {
        Ok(())
    } else {
        Err(AttentionError::RoleMismatch { expected: role, got: x.role() })
    }
}

/// Queries attend over ground embeddings. Also returns `A_G`, the
/// query-to-ground weights averaged over heads.
pub fn ground_cross_attention(
    q: &QuerySet,
    ground: &FeatureSequence,
    w: &AttentionWeights,
) -> Result<(QuerySet, AttentionMap)> {
    expect_role(ground, Role::Ground)?;
    let (y, a) = multi_head_attention(q.queries(), ground.tokens(), w)?;
    Ok((QuerySet::new(y)?, AttentionMap::new(a)?))
}

pub fn visual_cross_attention(q: &QuerySet, visual: &FeatureSequence, w: &AttentionWeights) -> Result<QuerySet> {
    expect_role(visual, Role::Visual)?;
    QuerySet::new(multi_head_attention(q.queries(), visual.tokens(), w)?.0)
}

/// Ground cross-attention, query self-attention, visual cross-attention,
/// then the FFN.
pub fn decoder_block(
    q: &QuerySet,
    ground: &FeatureSequence,
    visual: &FeatureSequence,
    w: &DecoderBlockWeights,
) -> Result<(QuerySet, AttentionMap)> {
    let (qg, a_g) = ground_cross_attention(q, ground, &w.ground_attention)?;
    let (qs, _) = multi_head_attention(qg.queries(), qg.queries(), &w.self_attention)?;
    let qv = visual_cross_attention(&QuerySet::new(qs)?, visual, &w.visual_attention)?;
    let mut hidden = w.ffn.first.apply(qv.queries())?;
    hidden.apply(|v| *v = v.max(0.0));
    Ok((QuerySet::new(w.ffn.second.apply(&hidden)?)?, a_g))
}

/// Sine/cosine encodings, `T x C`: column `2i` holds
/// `sin(pos / 10000^(2i/C))` and column `2i+1` the cosine.
pub fn positional_encoding(tokens: usize, channels: usize) -> Mat {
    Mat::from_fn(tokens, channels, |pos, j| {
        let i = (j / 2) * 2;
        let angle = pos as f64 / PE_BASE.powf(i as f64 / channels as f64);
        if j % 2 == 0 { angle.sin() } else { angle.cos() }
    })
}

/// A stack of encoder blocks, optionally adding positional encodings to
/// its input.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub blocks: Vec<EncoderBlockWeights>,
    pub positional: bool,
}

impl Encoder {
    pub fn forward(&self, x: &FeatureSequence) -> Result<FeatureSequence> {
        let mut x = if self.positional {
            let pe = positional_encoding(x.len(), x.channels());
            FeatureSequence::new(x.tokens() + pe, x.role())?
        } else {
            x.clone()
        };
        for b in &self.blocks {
            x = encoder_block(&x, b)?;
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub blocks: Vec<DecoderBlockWeights>,
}

impl Decoder {
    /// Runs every block; returns the final queries and each block's `A_G`.
    pub fn forward(
        &self,
        q: &QuerySet,
        ground: &FeatureSequence,
        visual: &FeatureSequence,
    ) -> Result<(QuerySet, Vec<AttentionMap>)> {
        let mut q = q.clone();
        let mut maps = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (next, a) = decoder_block(&q, ground, visual, b)?;
            q = next;
            maps.push(a);
        }
        Ok((q, maps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub channels: usize,
    pub heads: usize,
    pub hidden: usize,
    pub queries: usize,
    pub encoder_blocks: usize,
    pub decoder_blocks: usize,
    /// Add positional encodings to ground tokens too.
    pub ground_positional: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 64,
            heads: 8,
            hidden: 128,
            queries: 100,
            encoder_blocks: 3,
            decoder_blocks: 3,
            ground_positional: false,
            seed: 0,
        }
    }
}

/// Visual encoder, ground encoder and ground-guided decoder with seeded
/// weights and object queries.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundGuidedModel {
    pub config: ModelConfig,
    pub visual_encoder: Encoder,
    pub ground_encoder: Encoder,
    pub decoder: Decoder,
    pub queries: QuerySet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub visual: FeatureSequence,
    pub ground: FeatureSequence,
    pub queries: QuerySet,
    pub ground_attention: Vec<AttentionMap>,
}

impl GroundGuidedModel {
    pub fn seeded(config: ModelConfig) -> Result<Self> {
        let c = config.channels;
        if c == 0 || config.heads == 0 || !c.is_multiple_of(config.heads) || config.queries == 0 || config.hidden == 0 {
            return Err(AttentionError::ShapeMismatch(format!("invalid model config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let enc = |rng: &mut ChaCha8Rng| -> Result<Vec<EncoderBlockWeights>> {
            (0..config.encoder_blocks).map(|_| EncoderBlockWeights::seeded(c, config.heads, config.hidden, rng)).collect()
        };
        let visual_encoder = Encoder { blocks: enc(&mut rng)?, positional: true };
        let ground_encoder = Encoder { blocks: enc(&mut rng)?, positional: config.ground_positional };
        let blocks = (0..config.decoder_blocks)
            .map(|_| DecoderBlockWeights::seeded(c, config.heads, config.hidden, &mut rng))
            .collect::<Result<_>>()?;
        let queries = QuerySet::new(random_matrix(config.queries, c, 1.0 / (c as f64).sqrt(), &mut rng))?;
        Ok(Self { config, visual_encoder, ground_encoder, decoder: Decoder { blocks }, queries })
    }

    pub fn forward(&self, visual: &FeatureSequence, ground: &FeatureSequence) -> Result<ModelOutput> {
        expect_role(visual, Role::Visual)?;
        expect_role(ground, Role::Ground)?;
        let visual = self.visual_encoder.forward(visual)?;
        let ground = self.ground_encoder.forward(ground)?;
        let (queries, ground_attention) = self.decoder.forward(&self.queries, &ground, &visual)?;
        Ok(ModelOutput { visual, ground, queries, ground_attention })
    }
}
