//! Rank-based aggregation of per-county forest importances into one
//! overall score per feature, rolled up into feature groups.

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::importance::{overall_importance, ImportanceVector, RankMatrix};
use hazardscope::synth::{catalog_groups, county_family, feature_names, generate_county, CountyLaw, ScenarioSpec};
use hazardscope::{train_forest, ForestParams, ImportanceFormula};

fn main() -> hazardscope::Result<()> {
    let mut template = ScenarioSpec::new("t", 500, vec![0, 9, 20, 27, 33], 21);
    template.weights = vec![3.0, 2.5, 2.0, 1.5, 1.0];
    template.noise = 0.2;
    let family = county_family(&template, &[("A", 420), ("B", 510), ("C", 640)], CountyLaw::Shared)?;

    let mut ranks = RankMatrix::new(feature_names(35));
    for spec in &family {
        let data = make_labeled(&generate_county(spec)?, "h", MissingHazardPolicy::Drop)?;
        let forest = train_forest(&data, &ForestParams::default(), spec.seed)?;
        let v = ImportanceVector::from_forest(&forest, ImportanceFormula::Weighted)?;
        ranks.push_county(spec.county_id.clone(), &v.normalized)?;
    }
    let overall = overall_importance(&ranks, 7)?;
    println!("planted: {:?}", template.informative);
    for &j in &overall.top {
        println!("  {j:>2} {:<28} {:.4}", overall.feature_names[j], overall.scores[j]);
    }
    if overall.overflow > 0 {
        println!("  ({} extra features tied at the cut)", overall.overflow);
    }
    println!();
    for g in catalog_groups().rollup(overall.top_names()) {
        println!("  {:<14} {} ({:.0}%)", g.group, g.count, 100.0 * g.share);
    }
    Ok(())
}
