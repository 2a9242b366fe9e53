//! Gradient boosting on a held-out split: loss curve, test F-scores and
//! gain importance.

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::importance::gbt_importance;
use hazardscope::metrics::{confusion, f_beta};
use hazardscope::selection::{stratified_split, SplitSpec};
use hazardscope::synth::{generate_county, ScenarioSpec};
use hazardscope::{train_gbt, Classifier, GbtParams};

fn main() -> hazardscope::Result<()> {
    let mut spec = ScenarioSpec::new("demo", 800, vec![0, 4, 8], 3);
    spec.n_features = 12;
    spec.noise = 0.25;
    let data = make_labeled(&generate_county(&spec)?, "h", MissingHazardPolicy::Drop)?;
    let (train, test) = stratified_split(&data, &SplitSpec { seed: 3, ..Default::default() })?;

    let params = GbtParams {
        rounds: 60,
        learning_rate: 0.1,
        ..Default::default()
    };
    let model = train_gbt(&train.0, &params, 3)?;
    for (round, loss) in model.train_loss.iter().enumerate().step_by(10) {
        println!("round {round:>3}  log-loss {loss:.4}");
    }

    let predicted = model.predict(&test.0.features)?;
    let c = confusion(&test.0.labels, &predicted)?;
    println!("\ntest F1 {:.3}, F(1.5) {:.3}", f_beta(&c, 1.0)?, f_beta(&c, 1.5)?);

    let gain = gbt_importance(&model)?;
    let mut order: Vec<usize> = (0..gain.len()).collect();
    order.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]));
    for &j in order.iter().take(4) {
        println!("  {:<28} {:.4}", model.feature_names[j], gain[j]);
    }
    Ok(())
}
