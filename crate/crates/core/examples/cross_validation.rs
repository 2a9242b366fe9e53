//! Stratified 70/30 split followed by a k-fold grid search for the forest.

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::selection::{base_config, cross_validate, stratified_split, CvSpec, HyperValue, ParamGrid, SplitSpec};
use hazardscope::synth::{generate_county, ScenarioSpec};
use hazardscope::ModelKind;

fn main() -> hazardscope::Result<()> {
    let mut spec = ScenarioSpec::new("demo", 500, vec![1, 3], 8);
    spec.n_features = 10;
    spec.noise = 0.3;
    let data = make_labeled(&generate_county(&spec)?, "h", MissingHazardPolicy::Drop)?;
    let (train, test) = stratified_split(&data, &SplitSpec { seed: 8, ..Default::default() })?;
    println!("train {:?}, test {:?} (low, high)", train.0.class_counts(), test.0.class_counts());

    let grid = ParamGrid::default()
        .with("n_trees", [HyperValue::num(30.0)])
        .with("max_depth", [HyperValue::num(2.0), HyperValue::num(6.0), HyperValue::UNLIMITED])
        .with("min_samples_leaf", [HyperValue::num(1.0), HyperValue::num(10.0)]);
    let mut cv = CvSpec::new(grid);
    cv.k = 5;
    let result = cross_validate(&train, &base_config(ModelKind::Forest), &cv, 8)?;
    for (point, score) in result.points.iter().zip(&result.mean_scores) {
        let desc = hazardscope::selection::describe_point(point);
        println!("  {desc:<45} {}", score.map_or("undefined".into(), |s| format!("{s:.4}")));
    }
    println!("best: {}", hazardscope::selection::describe_point(&result.best_point));
    Ok(())
}
