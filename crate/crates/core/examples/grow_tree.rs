//! Fits CART trees of growing depth on a planted threshold interaction and
//! prints their shape and impurity-based importances.

use hazardscope::cart::node_importances;
use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::synth::{generate_county, LabelLaw, ScenarioSpec};
use hazardscope::{DecisionTree, ImportanceFormula, TreeParams};

fn main() -> hazardscope::Result<()> {
    let mut spec = ScenarioSpec::new("demo", 400, vec![0, 1, 2], 11);
    spec.n_features = 5;
    spec.law = LabelLaw::ThresholdInteraction;
    let data = make_labeled(&generate_county(&spec)?, "h", MissingHazardPolicy::Drop)?;

    for depth in [1, 2, 4, 8] {
        let params = TreeParams {
            max_depth: Some(depth),
            ..Default::default()
        };
        let tree = DecisionTree::fit(&data, &params, 0)?;
        let correct = data
            .features
            .rows()
            .zip(&data.labels)
            .filter(|(x, y)| tree.predict(x).map(|p| p == **y).unwrap_or(false))
            .count();
        println!(
            "max_depth {depth}: {} splits, {} leaves, training accuracy {:.3}",
            tree.root.n_splits(),
            tree.root.n_leaves(),
            correct as f64 / data.n_rows() as f64
        );
        for (j, v) in node_importances(&tree.root, ImportanceFormula::Weighted) {
            println!("  {:<28} {v:.4}", data.schema.names()[j]);
        }
    }
    Ok(())
}
