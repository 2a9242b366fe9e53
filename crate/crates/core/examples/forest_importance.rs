//! Trains a random forest on a county with three planted features and
//! compares the two importance formulas.

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::importance::ImportanceVector;
use hazardscope::synth::{generate_county, planted_oracle, ScenarioSpec};
use hazardscope::{train_forest, ForestParams, ImportanceFormula};

fn main() -> hazardscope::Result<()> {
    let mut spec = ScenarioSpec::new("demo", 600, vec![2, 17, 30], 5);
    spec.weights = vec![3.0, 2.0, 1.0];
    spec.noise = 0.2;
    let data = make_labeled(&generate_county(&spec)?, "h", MissingHazardPolicy::Drop)?;
    let forest = train_forest(&data, &ForestParams::default(), 5)?;

    println!("planted, strongest first: {:?}", planted_oracle(&spec).expected_top);
    for formula in [ImportanceFormula::Weighted, ImportanceFormula::Unweighted] {
        let v = ImportanceVector::from_forest(&forest, formula)?;
        println!("\n{formula:?}");
        for &j in v.ordering().iter().take(5) {
            println!("  {j:>2} {:<28} {:.4}", v.feature_names[j], v.normalized[j]);
        }
    }
    Ok(())
}
