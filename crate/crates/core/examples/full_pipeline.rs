//! The whole experiment on the six-county synthetic preset.
//!
//! ```bash
//! cargo run --release --example full_pipeline -- /tmp/hazardscope-run
//! ```

use hazardscope::pipeline::config::Preset;
use hazardscope::pipeline::{self, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = RunConfig::preset(Preset::Synth6x3, 2024);
    config.out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("hazardscope-run"));
    let report = pipeline::run(&config)?;

    println!("{} files in {}", report.manifest.len() + 1, config.out.display());
    let table = std::fs::read_to_string(config.out.join("metrics.csv"))?;
    print!("\n{table}");
    for row in &report.comparison {
        println!("{row:?}");
    }
    if let Some(d) = &report.dispersion_f_beta {
        println!(
            "\nF(1.5) dispersion: inter-county {:.3}, inter-hazard {:.3}",
            d.mean_inter_county_std, d.mean_inter_hazard_std
        );
    }
    for (hazard, o) in &report.overall_importance {
        println!("{hazard:<6} top features: {}", o.top_names().join(", "));
    }
    for m in &report.transfer {
        let share = m.off_diagonal().filter(|c| c.transferable).count() as f64
            / m.off_diagonal().count().max(1) as f64;
        println!("{:?}: {:.0}% transferable", m.kind, 100.0 * share);
    }
    for f in &report.failures {
        println!("failure [{}]: {}", f.stage, f.error);
    }
    Ok(())
}
