//! Inter-county and inter-hazard spread of a county × hazard score table
//! with two unavailable cells.

use hazardscope::metrics::{dispersion_summary, MetricTable};

fn main() -> hazardscope::Result<()> {
    let counties = ["Harris", "Cook", "Wayne", "Suffolk", "Fulton", "Queens"];
    let hazards = ["heat", "flood", "air"];
    let rows = vec![
        vec![Some(0.84), Some(0.65), Some(0.68)],
        vec![Some(0.79), Some(0.71), Some(0.60)],
        vec![Some(0.88), Some(0.62), Some(0.74)],
        vec![Some(0.76), Some(0.58), Some(0.55)],
        vec![Some(0.81), Some(0.69), None],
        vec![Some(0.73), Some(0.77), None],
    ];
    let table = MetricTable::from_rows(
        counties.iter().map(|s| s.to_string()).collect(),
        hazards.iter().map(|s| s.to_string()).collect(),
        &rows,
    )?;
    let s = dispersion_summary(&table)?;
    for h in &s.per_hazard {
        println!("{:<8} across {} counties: mean {:.3}, std {:.3}", h.name, h.n_present, h.mean, h.std);
    }
    for c in &s.per_county {
        println!("{:<8} across {} hazards:  mean {:.3}, std {:.3}", c.name, c.n_present, c.mean, c.std);
    }
    println!(
        "\nmean inter-county std {:.3}, mean inter-hazard std {:.3}",
        s.mean_inter_county_std, s.mean_inter_hazard_std
    );
    Ok(())
}
