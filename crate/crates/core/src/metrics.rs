//! Confusion counts, the F-beta score, and dispersion of a metric across
//! counties and hazards.
//!
//! Metric values are fractions in `[0, 1]`; percentages appear only in
//! rendered reports.

use serde::{Deserialize, Serialize};

use crate::dataset::RiskLabel;
use crate::error::{Error, Result};

/// Confusion counts with `High` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `None` when there are no positive labels.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }
}

pub fn confusion(labels: &[RiskLabel], predictions: &[RiskLabel]) -> Result<Confusion> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: predictions.len(),
        });
    }
    let mut c = Confusion::default();
    for (truth, pred) in labels.iter().zip(predictions) {
        match (truth, pred) {
            (RiskLabel::High, RiskLabel::High) => c.tp += 1,
            (RiskLabel::Low, RiskLabel::High) => c.fp += 1,
            (RiskLabel::High, RiskLabel::Low) => c.fn_ += 1,
            (RiskLabel::Low, RiskLabel::Low) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(1 + β²) · P · R / (β² · P + R)`.
///
/// Zero when there are positives (true or predicted) but no true positive;
/// [`Error::NoPositives`] when there are none at all.
pub fn f_beta(c: &Confusion, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!("beta must be > 0, got {beta}")));
    }
    if c.tp + c.fp + c.fn_ == 0 {
        return Err(Error::NoPositives);
    }
    if c.tp == 0 {
        return Ok(0.0);
    }
    let p = c.precision().expect("tp > 0");
    let r = c.recall().expect("tp > 0");
    Ok(f_beta_from(p, r, beta))
}

/// F-beta from precision and recall directly.
pub fn f_beta_from(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// F-beta of a classifier that labels every sample high-risk, for a high
/// prevalence `p`.
pub fn always_high_f_beta(prevalence: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    (1.0 + b2) * prevalence / (b2 * prevalence + 1.0)
}

/// Population standard deviation and mean of the given values.
pub fn population_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    if values.iter().all(|v| *v == values[0]) {
        return Some((0.0, values[0]));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((var.sqrt(), mean))
}

/// Metric values indexed by (county, hazard); absent pairs are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub counties: Vec<String>,
    pub hazards: Vec<String>,
    /// Row-major: `cells[i * hazards.len() + j]`.
    cells: Vec<Option<f64>>,
}

impl MetricTable {
    pub fn new(counties: Vec<String>, hazards: Vec<String>) -> Self {
        let cells = vec![None; counties.len() * hazards.len()];
        MetricTable {
            counties,
            hazards,
            cells,
        }
    }

    pub fn from_rows(counties: Vec<String>, hazards: Vec<String>, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let mut table = MetricTable::new(counties, hazards);
        if rows.len() != table.counties.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: table.counties.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != table.hazards.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: table.hazards.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                table.cells[i * table.hazards.len() + j] = *v;
            }
        }
        Ok(table)
    }

    pub fn county_index(&self, county: &str) -> Option<usize> {
        self.counties.iter().position(|c| c == county)
    }

    pub fn hazard_index(&self, hazard: &str) -> Option<usize> {
        self.hazards.iter().position(|h| h == hazard)
    }

    pub fn get(&self, county: usize, hazard: usize) -> Option<f64> {
        self.cells[county * self.hazards.len() + hazard]
    }

    pub fn set(&mut self, county: usize, hazard: usize, value: Option<f64>) {
        let h = self.hazards.len();
        self.cells[county * h + hazard] = value;
    }

    pub fn hazard_column(&self, hazard: usize) -> Vec<f64> {
        (0..self.counties.len()).filter_map(|i| self.get(i, hazard)).collect()
    }

    pub fn county_row(&self, county: usize) -> Vec<f64> {
        (0..self.hazards.len()).filter_map(|j| self.get(county, j)).collect()
    }

    pub fn n_present(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Standard deviation of hazard `j` across the counties where it is present
/// (divisor = number of present counties).
pub fn inter_county_std(table: &MetricTable, hazard: usize) -> Result<f64> {
    population_std(&table.hazard_column(hazard))
        .map(|(sd, _)| sd)
        .ok_or_else(|| Error::NoEntries(table.hazards[hazard].clone()))
}

/// Standard deviation of county `i` across its present hazards.
pub fn inter_hazard_std(table: &MetricTable, county: usize) -> Result<f64> {
    population_std(&table.county_row(county))
        .map(|(sd, _)| sd)
        .ok_or_else(|| Error::NoEntries(table.counties[county].clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisDispersion {
    pub name: String,
    pub n_present: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionSummary {
    /// σ^c_j and μ^c_j for every hazard with at least one county.
    pub per_hazard: Vec<AxisDispersion>,
    /// σ^h_i and μ^h_i for every county with at least one hazard.
    pub per_county: Vec<AxisDispersion>,
    pub mean_inter_county_std: f64,
    pub mean_inter_hazard_std: f64,
}

pub fn dispersion_summary(table: &MetricTable) -> Result<DispersionSummary> {
    if table.n_present() == 0 {
        return Err(Error::NoEntries("metric table".into()));
    }
    let axis = |name: &String, values: Vec<f64>| {
        population_std(&values).map(|(std, mean)| AxisDispersion {
            name: name.clone(),
            n_present: values.len(),
            mean,
            std,
        })
    };
    let per_hazard: Vec<AxisDispersion> = table
        .hazards
        .iter()
        .enumerate()
        .filter_map(|(j, name)| axis(name, table.hazard_column(j)))
        .collect();
    let per_county: Vec<AxisDispersion> = table
        .counties
        .iter()
        .enumerate()
        .filter_map(|(i, name)| axis(name, table.county_row(i)))
        .collect();
    let mean_std = |v: &[AxisDispersion]| v.iter().map(|a| a.std).sum::<f64>() / v.len() as f64;
    Ok(DispersionSummary {
        mean_inter_county_std: mean_std(&per_hazard),
        mean_inter_hazard_std: mean_std(&per_county),
        per_hazard,
        per_county,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RiskLabel::{High, Low};

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn confusion_cells() {
        let c = confusion(&[High, Low], &[High, Low]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 0, 0));
        let c = confusion(&[High, High], &[Low, Low]).unwrap();
        assert_eq!(c.fn_, 2);
        let c = confusion(&[High, High, Low, Low], &[High, Low, High, Low]).unwrap();
        assert_eq!((c.tp, c.fn_, c.fp, c.tn), (1, 1, 1, 1));
        assert!(matches!(confusion(&[High], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn f_beta_examples() {
        // P = R = 0.8
        let c = Confusion { tp: 4, fp: 1, fn_: 1, tn: 0 };
        for beta in [0.5, 1.0, 1.5, 3.0] {
            assert!((f_beta(&c, beta).unwrap() - 0.8).abs() < 1e-12);
        }
        // P = 0.5, R = 1
        let c = Confusion { tp: 2, fp: 2, fn_: 0, tn: 5 };
        let expected = 3.25 * 0.5 / (2.25 * 0.5 + 1.0);
        assert!((f_beta(&c, 1.5).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.764_705_882_352_941_2).abs() < 1e-15);

        let c = Confusion { tp: 0, fp: 3, fn_: 2, tn: 1 };
        assert_eq!(f_beta(&c, 1.5).unwrap(), 0.0);
        let c = Confusion { tp: 0, fp: 0, fn_: 0, tn: 4 };
        assert!(matches!(f_beta(&c, 1.5), Err(Error::NoPositives)));
        assert!(f_beta(&c, 0.0).is_err());
    }

    #[test]
    fn always_high_matches_confusion() {
        // 3 positives out of 10, everything predicted high
        let c = Confusion { tp: 3, fp: 7, fn_: 0, tn: 0 };
        assert!((f_beta(&c, 1.5).unwrap() - always_high_f_beta(0.3, 1.5)).abs() < 1e-15);
    }

    #[test]
    fn std_examples() {
        let t = MetricTable::from_rows(
            names("c", 3),
            names("h", 1),
            &[vec![Some(0.8)], vec![Some(0.8)], vec![Some(0.8)]],
        )
        .unwrap();
        assert_eq!(inter_county_std(&t, 0).unwrap(), 0.0);

        let t = MetricTable::from_rows(names("c", 2), names("h", 1), &[vec![Some(0.6)], vec![Some(0.8)]])
            .unwrap();
        assert!((inter_county_std(&t, 0).unwrap() - 0.1).abs() < 1e-12);

        let t = MetricTable::from_rows(names("c", 1), names("h", 3), &[vec![None, Some(0.7), None]])
            .unwrap();
        assert_eq!(inter_hazard_std(&t, 0).unwrap(), 0.0);

        let t = MetricTable::from_rows(names("c", 1), names("h", 1), &[vec![None]]).unwrap();
        assert!(matches!(inter_county_std(&t, 0), Err(Error::NoEntries(_))));
    }

    #[test]
    fn summary_of_two_by_two() {
        let t = MetricTable::from_rows(
            names("c", 2),
            names("h", 2),
            &[vec![Some(0.6), Some(0.8)], vec![Some(0.6), Some(0.8)]],
        )
        .unwrap();
        let s = dispersion_summary(&t).unwrap();
        assert!(s.mean_inter_county_std.abs() < 1e-12);
        assert!((s.mean_inter_hazard_std - 0.1).abs() < 1e-12);
    }
}
