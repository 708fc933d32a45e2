use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{AttentionError, Result};
use crate::dataset::{Box2D, LabelRecord};
use crate::geometry::{project_point, CameraIntrinsics};
use crate::maps::{denorm_l1_loss, DenormMap};

pub const FOCAL_GAMMA: f64 = 2.0;
pub const FOCAL_ALPHA: f64 = 0.25;

fn domain(msg: impl Into<String>) -> AttentionError {
    AttentionError::Domain(msg.into())
}

fn focal_terms(p: f64, target: bool, alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability {p} outside [0, 1]")));
    }
    let (pt, at) = if target { (p, alpha) } else { (1.0 - p, 1.0 - alpha) };
    if pt == 0.0 {
        return Err(domain(format!("focal loss is infinite at p = {p} for target {}", target as u8)));
    }
    Ok((pt, at))
}

/// `-alpha_t (1 - p_t)^gamma ln p_t`. Finite on `[0, 1]` except where the
/// true class gets probability 0.
pub fn focal_loss(p: f64, target: bool, gamma: f64, alpha: f64) -> Result<f64> {
    let (pt, at) = focal_terms(p, target, alpha)?;
    let l = -at * (1.0 - pt).powf(gamma) * pt.ln();
    // -0.0 when p_t = 1
    Ok(l + 0.0)
}

/// `d focal_loss / d p`.
pub fn focal_loss_grad(p: f64, target: bool, gamma: f64, alpha: f64) -> Result<f64> {
    let (pt, at) = focal_terms(p, target, alpha)?;
    let q = 1.0 - pt;
    let dpt = if gamma == 0.0 {
        -at / pt
    } else {
        -at * (-gamma * q.powf(gamma - 1.0) * pt.ln() + q.powf(gamma) / pt)
    };
    Ok(if target { dpt } else { -dpt })
}

/// Mean absolute difference.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(AttentionError::ShapeMismatch(format!("l1 over {} and {} values", pred.len(), target.len())));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.len() as f64)
}

/// `d l1_loss / d pred`; zero where the two agree.
pub fn l1_loss_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != target.len() {
        return Err(AttentionError::ShapeMismatch(format!("l1 over {} and {} values", pred.len(), target.len())));
    }
    let n = pred.len() as f64;
    Ok(pred.iter().zip(target).map(|(a, b)| sign(a - b) / n).collect())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_box(b: &Box2D) -> Result<()> {
    let ok = [b.left, b.top, b.right, b.bottom].iter().all(|x| x.is_finite()) && b.right >= b.left && b.bottom >= b.top;
    if ok {
        Ok(())
    } else {
        Err(domain(format!("invalid 2D box {b:?}")))
    }
}

/// Generalized IoU, in `(-1, 1]`.
pub fn giou_2d(a: &Box2D, b: &Box2D) -> Result<f64> {
    check_box(a)?;
    check_box(b)?;
    let iw = (a.right.min(b.right) - a.left.max(b.left)).max(0.0);
    let ih = (a.bottom.min(b.bottom) - a.top.max(b.top)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if !(union > 0.0) {
        return Err(domain("both boxes have zero area"));
    }
    let hull = (a.right.max(b.right) - a.left.min(b.left)) * (a.bottom.max(b.bottom) - a.top.min(b.top));
    Ok(inter / union - (hull - union) / hull)
}

/// `1 - GIoU`, in `[0, 2)`.
pub fn giou_loss_2d(a: &Box2D, b: &Box2D) -> Result<f64> {
    Ok(1.0 - giou_2d(a, b)?)
}

/// Laplace depth loss `(2 / sigma) |d_gt - d_pre| + ln sigma` with its
/// partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceLoss {
    pub value: f64,
    pub d_pred: f64,
    pub d_sigma: f64,
}

pub fn laplace_depth_loss(d_pre: f64, d_gt: f64, sigma: f64) -> Result<LaplaceLoss> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(d_pre.is_finite() && d_gt.is_finite()) {
        return Err(domain("non-finite depth"));
    }
    let delta = (d_gt - d_pre).abs();
    Ok(LaplaceLoss {
        value: 2.0 / sigma * delta + sigma.ln(),
        d_pred: 2.0 / sigma * sign(d_pre - d_gt),
        d_sigma: -2.0 * delta / (sigma * sigma) + 1.0 / sigma,
    })
}

/// `|pred - target|` after wrapping the difference into `(-pi, pi]`.
pub fn angle_l1_loss(pred: f64, target: f64) -> f64 {
    let mut d = (pred - target).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d.abs()
}

/// The eight weighted loss terms, in weight order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    pub class: f64,
    pub size_2d: f64,
    pub xy_3d: f64,
    pub giou: f64,
    pub size_3d: f64,
    pub angle: f64,
    pub depth: f64,
    pub denorm: f64,
}

impl LossComponents {
    pub const NAMES: [&'static str; 8] = ["class", "size_2d", "xy_3d", "giou", "size_3d", "angle", "depth", "denorm"];

    pub fn to_array(&self) -> [f64; 8] {
        [self.class, self.size_2d, self.xy_3d, self.giou, self.size_3d, self.angle, self.depth, self.denorm]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        let [class, size_2d, xy_3d, giou, size_3d, angle, depth, denorm] = a;
        Self { class, size_2d, xy_3d, giou, size_3d, angle, depth, denorm }
    }
}

/// Non-negative weights of the eight components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights([f64; 8]);

impl Default for LossWeights {
    fn default() -> Self {
        Self([2.0, 10.0, 5.0, 2.0, 1.0, 1.0, 1.0, 1.0])
    }
}

impl LossWeights {
    pub fn new(w: [f64; 8]) -> Result<Self> {
        if w.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(Self(w))
        } else {
            Err(domain(format!("loss weights must be finite and non-negative: {w:?}")))
        }
    }

    pub fn get(&self) -> [f64; 8] {
        self.0
    }
}

/// `sum_i w_i c_i`, accumulated in component order.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    c.to_array().iter().zip(w.0).fold(0.0, |acc, (c, w)| acc + w * c)
}

/// Floor on the probability assigned to the true class when a prediction
/// names the wrong category.
const MIN_CLASS_PROB: f64 = 1e-6;

/// Loss components between predictions and labels matched by position.
///
/// The class term uses the prediction's score (1 if absent) as the
/// probability of the labelled category. Depth uses the Laplace loss at
/// `sigma = 1` on the camera-frame `z`, since label files carry no
/// uncertainty. `denorm` is the L1 between the two maps when both are given.
pub fn frame_losses(
    pred: &[LabelRecord],
    label: &[LabelRecord],
    k: &CameraIntrinsics,
    maps: Option<(&DenormMap, &DenormMap)>,
) -> Result<LossComponents> {
    if pred.len() != label.len() {
        return Err(AttentionError::ShapeMismatch(format!("{} predictions for {} labels", pred.len(), label.len())));
    }
    let mut c = LossComponents::default();
    if let Some((p, l)) = maps {
        c.denorm = denorm_l1_loss(p, l)?;
    }
    if pred.is_empty() {
        return Ok(c);
    }
    let mut v = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let [size2d_p, size2d_l, xy_p, xy_l, size3d_p, size3d_l] = &mut v;
    let n = pred.len() as f64;
    for (p, l) in pred.iter().zip(label) {
        let score = p.score.unwrap_or(1.0);
        let prob = if p.category == l.category { score } else { (1.0 - score).max(MIN_CLASS_PROB) };
        c.class += focal_loss(prob, true, FOCAL_GAMMA, FOCAL_ALPHA)? / n;
        size2d_p.extend([p.bbox2d.right - p.bbox2d.left, p.bbox2d.bottom - p.bbox2d.top]);
        size2d_l.extend([l.bbox2d.right - l.bbox2d.left, l.bbox2d.bottom - l.bbox2d.top]);
        let project = |r: &LabelRecord| {
            project_point(&r.bbox.center(), k).map_err(|e| domain(format!("3D centre does not project: {e}")))
        };
        let (pp, lp) = (project(p)?, project(l)?);
        xy_p.extend([pp.u, pp.v]);
        xy_l.extend([lp.u, lp.v]);
        c.giou += giou_loss_2d(&p.bbox2d, &l.bbox2d)? / n;
        size3d_p.extend([p.bbox.l, p.bbox.w, p.bbox.h]);
        size3d_l.extend([l.bbox.l, l.bbox.w, l.bbox.h]);
        c.angle += angle_l1_loss(p.bbox.theta, l.bbox.theta) / n;
        c.depth += laplace_depth_loss(p.bbox.z, l.bbox.z, 1.0)?.value / n;
    }
    c.size_2d = l1_loss(size2d_p, size2d_l)?;
    c.xy_3d = l1_loss(xy_p, xy_l)?;
    c.size_3d = l1_loss(size3d_p, size3d_l)?;
    Ok(c)
}
