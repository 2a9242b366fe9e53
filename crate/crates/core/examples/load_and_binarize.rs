//! Reads a county CSV, imputes a missing feature and labels tracts as high
//! or low risk against the county mean.

use hazardscope::dataset::{make_labeled, read_county_csv, LoadOptions, MissingFeaturePolicy, MissingHazardPolicy};

const CSV: &str = "\
tract_id,Income,Elder,hazard__heat,hazard__flood
t1,52000,0.12,6.5,3
t2,31000,0.20,8.0,
t3,,0.31,7.2,5
t4,88000,0.08,3.1,2
t5,45000,0.17,5.9,4
";

fn main() -> hazardscope::Result<()> {
    let opts = LoadOptions {
        county_id: Some("Demo".into()),
        missing_features: MissingFeaturePolicy::MedianImpute,
        ..Default::default()
    };
    let county = read_county_csv(CSV.as_bytes(), &opts)?;
    println!("{} tracts, features {:?}", county.n_rows(), county.schema().names());

    for hazard in ["heat", "flood"] {
        let labeled = make_labeled(&county, hazard, MissingHazardPolicy::Drop)?;
        println!("\n{hazard}: threshold {:.3}, prevalence {:.2}", labeled.threshold, labeled.prevalence());
        for (id, label) in labeled.tract_ids.iter().zip(&labeled.labels) {
            println!("  {id} {label:?}");
        }
    }
    Ok(())
}
