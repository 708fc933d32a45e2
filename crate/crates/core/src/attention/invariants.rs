use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    fixture_inputs, focal_loss, focal_loss_grad, ground_cross_attention, l1_loss, l1_loss_grad, laplace_depth_loss,
    multi_head_attention, random_matrix, self_attention, total_loss, AttentionMap, AttentionWeights, FeatureSequence,
    FixtureShapes, LossComponents, LossWeights, Mat, QuerySet, Result, Role, FOCAL_ALPHA, FOCAL_GAMMA,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const GRAD_SAMPLES: usize = 1000;

fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn permute_rows(m: &Mat, perm: &[usize]) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(perm[r], c)])
}

fn result(name: &'static str, passed: bool, detail: String) -> InvariantResult {
    InvariantResult { name, passed, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Worst relative error between analytic and central-difference gradients
/// of the Laplace, focal and L1 losses over seeded random valid inputs.
pub fn gradient_check(seed: u64, samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let d_pre = rng.gen_range(1.0..100.0);
        let delta = rng.gen_range(0.01..20.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let d_gt = d_pre + delta;
        let sigma = rng.gen_range(0.1..10.0);
        let l = laplace_depth_loss(d_pre, d_gt, sigma)?;
        let fd = central(|x| laplace_depth_loss(x, d_gt, sigma).map_or(f64::NAN, |l| l.value), d_pre);
        let fs = central(|s| laplace_depth_loss(d_pre, d_gt, s).map_or(f64::NAN, |l| l.value), sigma);
        worst = worst.max(rel_err(l.d_pred, fd)).max(rel_err(l.d_sigma, fs));

        let p = rng.gen_range(0.01..0.99);
        let t = rng.gen::<bool>();
        let g = focal_loss_grad(p, t, FOCAL_GAMMA, FOCAL_ALPHA)?;
        let fp = central(|x| focal_loss(x, t, FOCAL_GAMMA, FOCAL_ALPHA).unwrap_or(f64::NAN), p);
        worst = worst.max(rel_err(g, fp));

        let pred: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let target: Vec<f64> =
            pred.iter().map(|x| x + rng.gen_range(0.01..5.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let g = l1_loss_grad(&pred, &target)?;
        for i in 0..pred.len() {
            let f = |x: f64| {
                let mut q = pred.clone();
                q[i] = x;
                l1_loss(&q, &target).unwrap_or(f64::NAN)
            };
            worst = worst.max(rel_err(g[i], central(f, pred[i])));
        }
    }
    Ok(if worst.is_nan() { f64::INFINITY } else { worst })
}

fn map_ok(a: &AttentionMap) -> (f64, bool) {
    let err = a.max_row_error().unwrap_or(0.0);
    let bounded = a.weights().iter().all(|w| (0.0..=1.0).contains(w));
    (err, bounded)
}

/// Runs every attention and loss invariant on seeded random inputs and
/// reports each one.
pub fn run_invariant_suite(seed: u64) -> Result<Vec<InvariantResult>> {
    let shapes = FixtureShapes::default();
    let (model, fv, fg) = fixture_inputs(seed, &shapes)?;
    let out = model.forward(&fv, &fg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut report = Vec::new();

    // rows of A_G and of a plain self-attention map
    let w = AttentionWeights::seeded(shapes.channels, shapes.heads, &mut rng)?;
    let (_, self_map) = multi_head_attention(fv.tokens(), fv.tokens(), &w)?;
    let mut maps = out.ground_attention.clone();
    maps.push(AttentionMap::new(self_map)?);
    let (mut worst, mut bounded) = (0.0f64, true);
    for m in &maps {
        let (e, b) = map_ok(m);
        worst = worst.max(e);
        bounded &= b;
    }
    report.push(result(
        "attention rows sum to 1",
        worst <= TOL && bounded,
        format!("{} maps, max |row sum - 1| = {worst:.3e}", maps.len()),
    ));

    // token permutation equivariance of self-attention
    let mut perm: Vec<usize> = (0..fv.len()).collect();
    perm.shuffle(&mut rng);
    let y = self_attention(&fv, &w)?;
    let y_perm = self_attention(&FeatureSequence::new(permute_rows(fv.tokens(), &perm), Role::Visual)?, &w)?;
    let d = max_abs_diff(&permute_rows(y.tokens(), &perm), y_perm.tokens());
    report.push(result("self-attention token permutation equivariance", d <= TOL, format!("max diff {d:.3e}")));

    // query permutation equivariance of the decoder stack
    let mut qperm: Vec<usize> = (0..shapes.queries).collect();
    qperm.shuffle(&mut rng);
    let q = &model.queries;
    let (q1, a1) = model.decoder.forward(q, &out.ground, &out.visual)?;
    let (q2, a2) =
        model.decoder.forward(&QuerySet::new(permute_rows(q.queries(), &qperm))?, &out.ground, &out.visual)?;
    let mut d = max_abs_diff(&permute_rows(q1.queries(), &qperm), q2.queries());
    for (x, y) in a1.iter().zip(&a2) {
        d = d.max(max_abs_diff(&permute_rows(x.weights(), &qperm), y.weights()));
    }
    report.push(result("decoder query permutation equivariance", d <= TOL, format!("max diff {d:.3e}")));

    // shape and finiteness of the three-block stack
    let (n, c) = (out.queries.len(), out.queries.channels());
    let finite = out.queries.queries().iter().all(|x| x.is_finite());
    report.push(result(
        "decoder stack output is finite N x C",
        model.decoder.blocks.len() == 3 && (n, c) == (shapes.queries, shapes.channels) && finite,
        format!("{} blocks, output {n} x {c}", model.decoder.blocks.len()),
    ));

    // bit-identical reruns
    let (model2, fv2, fg2) = fixture_inputs(seed, &shapes)?;
    let out2 = model2.forward(&fv2, &fg2)?;
    let same = out.queries.queries().iter().zip(out2.queries.queries().iter()).all(|(a, b)| a.to_bits() == b.to_bits())
        && out == out2;
    report.push(result("seeded runs are bit-identical", same, String::new()));

    // one ground token takes all the attention
    let single = FeatureSequence::new(random_matrix(1, shapes.channels, 1.0, &mut rng), Role::Ground)?;
    let (_, a) = ground_cross_attention(q, &single, &w)?;
    let ones = a.weights().iter().all(|&x| x == 1.0);
    report.push(result("single ground token gets weight 1", ones, String::new()));

    // duplicated ground tokens get equal weight
    let mut g = random_matrix(5, shapes.channels, 1.0, &mut rng);
    let row = g.row(1).clone_owned();
    g.set_row(4, &row);
    let (_, a) = ground_cross_attention(q, &FeatureSequence::new(g, Role::Ground)?, &w)?;
    let d = (0..a.weights().nrows()).map(|r| (a.weights()[(r, 1)] - a.weights()[(r, 4)]).abs()).fold(0.0, f64::max);
    report.push(result("duplicate ground tokens share weight", d == 0.0, format!("max diff {d:.3e}")));

    let worst = gradient_check(seed, GRAD_SAMPLES)?;
    report.push(result(
        "loss gradients match central differences",
        worst < FD_TOL,
        format!("{GRAD_SAMPLES} samples, worst relative error {worst:.3e}"),
    ));

    let total = total_loss(&LossComponents::from_array([1.0; 8]), &LossWeights::default());
    report.push(result("unit components total 23", total == 23.0, format!("total {total}")));
    Ok(report)
}
