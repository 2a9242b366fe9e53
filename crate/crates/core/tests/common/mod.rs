#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use hazardscope::dataset::{CountyDataset, FeatureSchema, LabeledDataset, Matrix, RiskLabel, TractRecord};

pub fn names(f: usize) -> Vec<String> {
    (0..f).map(|j| format!("f{j}")).collect()
}

pub fn labeled(rows: &[Vec<f64>], labels: &[RiskLabel]) -> LabeledDataset {
    let f = rows[0].len();
    LabeledDataset {
        county_id: "c".into(),
        hazard_id: "h".into(),
        schema: FeatureSchema::new(names(f)).unwrap(),
        tract_ids: (0..rows.len()).map(|i| format!("t{i:05}")).collect(),
        features: Matrix::from_rows(rows).unwrap(),
        labels: labels.to_vec(),
        threshold: 0.0,
    }
}

pub fn labels_from(bits: &[u8]) -> Vec<RiskLabel> {
    bits.iter()
        .map(|&b| if b == 1 { RiskLabel::High } else { RiskLabel::Low })
        .collect()
}

/// Random features with labels driven by the first two columns plus label
/// noise; both classes are always present.
pub fn random_dataset(seed: u64, n: usize, f: usize) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..f).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut labels: Vec<RiskLabel> = rows
        .iter()
        .map(|r| {
            let s = r[0] + 0.5 * r[1 % f] + 0.3 * rng.random_range(-1.0..1.0);
            if s > 0.75 {
                RiskLabel::High
            } else {
                RiskLabel::Low
            }
        })
        .collect();
    labels[0] = RiskLabel::High;
    labels[1] = RiskLabel::Low;
    labeled(&rows, &labels)
}

pub fn county(id: &str, rows: &[Vec<f64>], hazards: &[(&str, Vec<Option<f64>>)]) -> CountyDataset {
    let f = rows[0].len();
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, r)| TractRecord {
            tract_id: format!("{id}-{i:04}"),
            features: r.clone(),
        })
        .collect();
    let hazards: BTreeMap<String, Vec<Option<f64>>> =
        hazards.iter().map(|(h, v)| (h.to_string(), v.clone())).collect();
    CountyDataset::new(id, FeatureSchema::new(names(f)).unwrap(), records, hazards).unwrap()
}

fn gini_from_counts(node: &Value) -> (f64, f64) {
    let d = &node["distribution"];
    let low = d["low"].as_u64().unwrap() as f64;
    let high = d["high"].as_u64().unwrap() as f64;
    let n = low + high;
    let (p, q) = (low / n, high / n);
    (1.0 - p * p - q * q, n)
}

fn walk(node: &Value, root_n: f64, literal: bool, out: &mut [f64]) {
    if node["kind"] != "split" {
        return;
    }
    let (g_m, n_m) = gini_from_counts(node);
    let (g_l, n_l) = gini_from_counts(&node["left"]);
    let (g_r, n_r) = gini_from_counts(&node["right"]);
    let j = node["feature"].as_u64().unwrap() as usize;
    out[j] += if literal {
        g_m - g_l - g_r
    } else {
        n_m / root_n * (g_m - n_l / n_m * g_l - n_r / n_m * g_r)
    };
    walk(&node["left"], root_n, literal, out);
    walk(&node["right"], root_n, literal, out);
}

/// Raw forest importance recomputed from a serialized forest: every split
/// node's Gini values are rebuilt from its stored class counts.
pub fn oracle_forest_importance(forest_json: &str, literal: bool) -> Vec<f64> {
    let v: Value = serde_json::from_str(forest_json).unwrap();
    let f = v["feature_names"].as_array().unwrap().len();
    let mut out = vec![0.0; f];
    for tree in v["trees"].as_array().unwrap() {
        let (_, n) = gini_from_counts(tree);
        walk(tree, n, literal, &mut out);
    }
    out
}

/// Total split gain per feature from a serialized boosted model.
pub fn oracle_gbt_gain(model_json: &str) -> Vec<f64> {
    fn go(node: &Value, out: &mut [f64]) {
        if node["kind"] == "split" {
            out[node["feature"].as_u64().unwrap() as usize] += node["gain"].as_f64().unwrap();
            go(&node["left"], out);
            go(&node["right"], out);
        }
    }
    let v: Value = serde_json::from_str(model_json).unwrap();
    let f = v["feature_names"].as_array().unwrap().len();
    let mut out = vec![0.0; f];
    for stage in v["stages"].as_array().unwrap() {
        go(stage, &mut out);
    }
    out
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Kendall tau-a between two orderings given as score vectors.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let x = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
            s += x;
        }
    }
    s / (n * (n - 1) / 2) as f64
}

pub struct Fitted {
    pub name: String,
    pub model: hazardscope::TrainedModel,
    pub test: LabeledDataset,
}

/// Splits one labeled hazard 70/30, trains a forest on the training part and
/// keeps the test part for evaluation.
pub fn fit_forest(name: &str, data: &LabeledDataset, n_trees: usize, seed: u64) -> Fitted {
    use hazardscope::selection::{stratified_split, SplitSpec};
    let (train, test) = stratified_split(
        data,
        &SplitSpec {
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    let params = hazardscope::ForestParams {
        n_trees,
        ..Default::default()
    };
    let model = hazardscope::train_forest(&train.0, &params, seed).unwrap();
    Fitted {
        name: name.to_string(),
        model: hazardscope::TrainedModel::Forest(model),
        test: test.0,
    }
}

pub fn participants(fitted: &[Fitted]) -> Vec<hazardscope::transfer::Participant<'_>> {
    fitted
        .iter()
        .map(|f| hazardscope::transfer::Participant {
            name: f.name.clone(),
            model: Some(&f.model),
            eval: Some(&f.test),
        })
        .collect()
}

/// Cross-county matrix for `hazard` over freshly generated counties.
pub fn county_matrix(
    specs: &[hazardscope::synth::ScenarioSpec],
    hazard: &str,
    n_trees: usize,
) -> hazardscope::transfer::TransferMatrix {
    use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
    let fitted: Vec<Fitted> = specs
        .iter()
        .map(|s| {
            let county = hazardscope::synth::generate_county(s).unwrap();
            let data = make_labeled(&county, hazard, MissingHazardPolicy::Drop).unwrap();
            fit_forest(&s.county_id, &data, n_trees, s.seed)
        })
        .collect();
    hazardscope::transfer::cross_county(hazard, &participants(&fitted), &Default::default()).unwrap()
}

/// Cross-hazard matrix within one generated county.
pub fn hazard_matrix(
    spec: &hazardscope::synth::ScenarioSpec,
    n_trees: usize,
) -> hazardscope::transfer::TransferMatrix {
    use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
    let county = hazardscope::synth::generate_county(spec).unwrap();
    let fitted: Vec<Fitted> = spec
        .hazards
        .iter()
        .map(|h| {
            let data = make_labeled(&county, &h.id, MissingHazardPolicy::Drop).unwrap();
            fit_forest(&h.id, &data, n_trees, spec.seed)
        })
        .collect();
    hazardscope::transfer::cross_hazard(&spec.county_id, &participants(&fitted), &Default::default())
        .unwrap()
}

/// Share of present off-diagonal cells whose flag equals `flag`.
pub fn off_diagonal_share(m: &hazardscope::transfer::TransferMatrix, flag: bool) -> f64 {
    let cells: Vec<bool> = m.off_diagonal().map(|c| c.transferable).collect();
    cells.iter().filter(|&&t| t == flag).count() as f64 / cells.len() as f64
}
