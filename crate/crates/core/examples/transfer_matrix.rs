//! Cross-county transfer matrix for counties that share one law and for
//! counties that do not, with an SVG heatmap of the second.

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::pipeline::render_heatmap;
use hazardscope::selection::{stratified_split, SplitSpec};
use hazardscope::synth::{county_family, generate_county, CountyLaw, ScenarioSpec};
use hazardscope::transfer::{cross_county, Participant, TransferMatrix, TransferPolicy};
use hazardscope::{train_forest, ForestParams, LabeledDataset, TrainedModel};

fn matrix(law: CountyLaw) -> hazardscope::Result<TransferMatrix> {
    let mut template = ScenarioSpec::new("t", 500, vec![0, 1, 2], 4);
    template.n_features = 12;
    template.weights = vec![3.0, 2.0, 1.0];
    let specs = county_family(&template, &[("A", 450), ("B", 500), ("C", 550)], law)?;
    let mut fitted: Vec<(String, TrainedModel, LabeledDataset)> = Vec::new();
    for spec in &specs {
        let data = make_labeled(&generate_county(spec)?, "h", MissingHazardPolicy::Drop)?;
        let (train, test) = stratified_split(&data, &SplitSpec { seed: spec.seed, ..Default::default() })?;
        let forest = train_forest(&train.0, &ForestParams { n_trees: 60, ..Default::default() }, spec.seed)?;
        fitted.push((spec.county_id.clone(), TrainedModel::Forest(forest), test.0));
    }
    let participants: Vec<Participant> = fitted
        .iter()
        .map(|(name, model, test)| Participant {
            name: name.clone(),
            model: Some(model),
            eval: Some(test),
        })
        .collect();
    cross_county("h", &participants, &TransferPolicy::default())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for law in [CountyLaw::Shared, CountyLaw::Independent] {
        let m = matrix(law)?;
        println!("{law:?} laws");
        let mut csv = Vec::new();
        m.write_csv(&mut csv)?;
        print!("{}", String::from_utf8_lossy(&csv));
        if law == CountyLaw::Independent {
            let path = std::env::temp_dir().join("transfer_matrix.svg");
            std::fs::write(&path, render_heatmap(&m)?)?;
            println!("heatmap written to {}", path.display());
        }
        println!();
    }
    Ok(())
}
