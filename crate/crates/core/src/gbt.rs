//! Second-order gradient-boosted trees for the logistic loss.
//!
//! Exact greedy splits, no histograms, no column subsampling. Each round fits
//! a regression tree to the gradients and hessians of the current margins;
//! leaves hold `-G / (H + λ)` and the split gain is
//! `½ [G_l²/(H_l+λ) + G_r²/(H_r+λ) - G²/(H+λ)]`.

use serde::{Deserialize, Serialize};

use crate::cart::MIN_GAIN;
use crate::dataset::{LabeledDataset, Matrix, RiskLabel};
use crate::error::{Error, Result};
use crate::model::{check_width, Classifier, ModelKind, FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub min_samples_leaf: usize,
    pub min_child_weight: f64,
    /// Starting log-odds; the training prevalence log-odds when `None`.
    pub base_score: Option<f64>,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            max_depth: Some(3),
            learning_rate: 0.3,
            l2_reg: 1.0,
            min_samples_leaf: 1,
            min_child_weight: 1.0,
            base_score: None,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParams("rounds must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_reg >= 0.0) {
            return Err(Error::InvalidParams("l2_reg must be >= 0".into()));
        }
        if self.min_samples_leaf == 0 || !(self.min_child_weight >= 0.0) {
            return Err(Error::InvalidParams(
                "min_samples_leaf must be >= 1 and min_child_weight >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegNode {
    Leaf {
        weight: f64,
        grad_sum: f64,
        hess_sum: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        grad_sum: f64,
        hess_sum: f64,
        count: usize,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
}

impl RegNode {
    pub fn weight_for(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegNode::Leaf { weight, .. } => return *weight,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            RegNode::Leaf { .. } => 0,
            RegNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub params: GbtParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub schema_fingerprint: String,
    pub base_score: f64,
    pub stages: Vec<RegNode>,
    /// Mean training log-loss before the first round and after every round.
    pub train_loss: Vec<f64>,
}

pub fn sigmoid(margin: f64) -> f64 {
    let p = 1.0 / (1.0 + (-margin).exp());
    p.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

fn log_loss(margin: f64, y: f64) -> f64 {
    // log(1 + e^f) - y f, computed without overflow
    let softplus = if margin > 0.0 {
        margin + (-margin).exp().ln_1p()
    } else {
        margin.exp().ln_1p()
    };
    softplus - y * margin
}

fn target(label: RiskLabel) -> f64 {
    match label {
        RiskLabel::High => 1.0,
        RiskLabel::Low => 0.0,
    }
}

struct RoundStats<'a> {
    /// Column-major feature values.
    cols: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
}

impl RoundStats<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.params.l2_reg;
        if denom > 0.0 {
            g * g / denom
        } else {
            0.0
        }
    }

    fn leaf(&self, g: f64, h: f64, count: usize) -> RegNode {
        let denom = h + self.params.l2_reg;
        RegNode::Leaf {
            weight: if denom > 0.0 { -g / denom } else { 0.0 },
            grad_sum: g,
            hess_sum: h,
            count,
        }
    }

    /// `rows` is ascending; `sorted[f]` holds the same rows ordered by
    /// feature `f`, ties by row index.
    fn grow(&self, rows: Vec<usize>, sorted: Vec<Vec<usize>>, depth: usize) -> RegNode {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let n = rows.len();
        let msl = self.params.min_samples_leaf;
        if self.params.max_depth.is_some_and(|d| depth >= d) || n < 2 * msl {
            return self.leaf(g, h, n);
        }
        let parent_score = self.score(g, h);

        let mut best: Option<(usize, f64, f64)> = None;
        for (feature, order) in sorted.iter().enumerate() {
            let col = &self.cols[feature];
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                let i = order[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let v = col[i];
                let next = col[order[k + 1]];
                let n_left = k + 1;
                if v == next || n_left < msl || n - n_left < msl {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent_score);
                if gain > MIN_GAIN && best.is_none_or(|(_, _, b)| gain > b) {
                    let mid = v / 2.0 + next / 2.0;
                    let threshold = if mid > v && mid < next { mid } else { v };
                    best = Some((feature, threshold, gain));
                }
            }
        }
        let Some((feature, threshold, gain)) = best else {
            return self.leaf(g, h, n);
        };
        let col = &self.cols[feature];
        let goes_left = |i: &usize| col[*i] <= threshold;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(goes_left);
        let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .into_iter()
            .map(|order| order.into_iter().partition(goes_left))
            .unzip();
        RegNode::Split {
            feature,
            threshold,
            gain,
            grad_sum: g,
            hess_sum: h,
            count: n,
            left: Box::new(self.grow(left_rows, left_sorted, depth + 1)),
            right: Box::new(self.grow(right_rows, right_sorted, depth + 1)),
        }
    }
}

/// Boosts `params.rounds` regression trees on the logistic loss.
///
/// Rows are visited in tract-id order so floating-point sums, and with them
/// the fitted model, do not depend on input row order.
pub fn train_gbt(data: &LabeledDataset, params: &GbtParams, seed: u64) -> Result<BoostedModel> {
    params.validate()?;
    data.require_both_classes()?;
    let order = data.canonical_order();
    let x = data.features.select_rows(&order);
    let y: Vec<f64> = order.iter().map(|&i| target(data.labels[i])).collect();
    let n = y.len();

    let base_score = params.base_score.unwrap_or_else(|| {
        let p = y.iter().sum::<f64>() / n as f64;
        (p / (1.0 - p)).ln()
    });
    let mut margins = vec![base_score; n];
    let mean_loss = |m: &[f64]| m.iter().zip(&y).map(|(&f, &t)| log_loss(f, t)).sum::<f64>() / n as f64;
    let mut train_loss = vec![mean_loss(&margins)];
    let mut stages = Vec::with_capacity(params.rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
    let presorted: Vec<Vec<usize>> = cols
        .iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            order
        })
        .collect();

    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        let stats = RoundStats {
            cols: &cols,
            grad: &grad,
            hess: &hess,
            params,
        };
        let tree = stats.grow((0..n).collect(), presorted.clone(), 0);
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * tree.weight_for(x.row(i));
        }
        train_loss.push(mean_loss(&margins));
        stages.push(tree);
    }

    Ok(BoostedModel {
        format_version: FORMAT_VERSION,
        kind: ModelKind::Gbt,
        params: params.clone(),
        seed,
        feature_names: data.schema.names().to_vec(),
        schema_fingerprint: data.schema.fingerprint(),
        base_score,
        stages,
        train_loss,
    })
}

impl BoostedModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score
            + self
                .stages
                .iter()
                .map(|t| self.params.learning_rate * t.weight_for(x))
                .sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.feature_names.len(), x)?;
        Ok(x.rows().map(|row| sigmoid(self.margin(row))).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BoostedModel = serde_json::from_str(text)?;
        if model.format_version != FORMAT_VERSION || model.kind != ModelKind::Gbt {
            return Err(Error::Config(format!(
                "unsupported boosted model (version {}, kind {:?})",
                model.format_version, model.kind
            )));
        }
        Ok(model)
    }
}

impl Classifier for BoostedModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        BoostedModel::predict_proba(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_of_one_stage() {
        let model = BoostedModel {
            format_version: FORMAT_VERSION,
            kind: ModelKind::Gbt,
            params: GbtParams {
                learning_rate: 0.5,
                ..GbtParams::default()
            },
            seed: 0,
            feature_names: vec!["a".into(), "b".into()],
            schema_fingerprint: String::new(),
            base_score: 0.0,
            stages: vec![RegNode::Leaf {
                weight: 2.0,
                grad_sum: 0.0,
                hess_sum: 0.0,
                count: 1,
            }],
            train_loss: vec![],
        };
        let x = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let p = model.predict_proba(&x).unwrap()[0];
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-15);

        let empty = BoostedModel {
            stages: vec![],
            base_score: -1.3,
            ..model
        };
        let p = empty.predict_proba(&x).unwrap()[0];
        assert_eq!(p, 1.0 / (1.0 + 1.3f64.exp()));
    }

    #[test]
    fn sigmoid_stays_open() {
        for m in [-1e6, -40.0, 0.0, 40.0, 1e6] {
            let p = sigmoid(m);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn log_loss_is_stable() {
        assert!((log_loss(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(log_loss(800.0, 0.0).is_finite());
        assert!(log_loss(-800.0, 1.0).is_finite());
    }

    #[test]
    fn params_validation() {
        assert!(GbtParams { rounds: 0, ..Default::default() }.validate().is_err());
        assert!(GbtParams { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(GbtParams { learning_rate: 1.5, ..Default::default() }.validate().is_err());
        assert!(GbtParams { l2_reg: -1.0, ..Default::default() }.validate().is_err());
        assert!(GbtParams::default().validate().is_ok());
    }
}
