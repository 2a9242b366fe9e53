//! Planted scenarios: hazard couplings, their oracle answers and the
//! six-county harness.

use hazardscope::synth::{generate_county, planted_oracle, synth6x3, Coupling, HazardSpec, ScenarioSpec};

fn main() -> hazardscope::Result<()> {
    for coupling in [Coupling::SharedLaw, Coupling::Independent, Coupling::FeatureCaused, Coupling::HazardCaused] {
        let mut spec = ScenarioSpec::new("demo", 300, vec![3, 7, 11], 2);
        spec.coupling = coupling;
        spec.hazards = vec![HazardSpec::new("heat"), HazardSpec::new("flood")];
        let oracle = planted_oracle(&spec);
        let county = generate_county(&spec)?;
        println!(
            "{coupling:?}: informative {:?}, transferable heat→flood {}, {} tracts",
            oracle.informative, oracle.transferable[0][1], county.n_rows()
        );
    }

    println!();
    for spec in synth6x3(2024) {
        let county = generate_county(&spec)?;
        let hazards: Vec<String> = spec
            .hazards
            .iter()
            .map(|h| {
                let values = county.hazard(&h.id).unwrap_or_default();
                let seen = values.iter().filter(|v| v.is_some()).count();
                format!("{} {seen}/{}", h.id, values.len())
            })
            .collect();
        println!("{:<8} {:>5} tracts  {}", spec.county_id, spec.n_tracts, hazards.join(", "));
    }
    Ok(())
}
