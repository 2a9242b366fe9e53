//! Synthetic counties with planted feature→hazard laws.
//!
//! Features are i.i.d. `U(0, 1)`. Each hazard's exposure mixes a standardized
//! signal computed from an informative feature subset with Gaussian noise:
//! `(1 - noise) · signal + noise · N(0, 1)`, then is mapped onto a
//! hazard-specific scale. Because labels come from mean-threshold
//! binarization, the planted subset is a known answer for importance and
//! the coupling between hazards is a known answer for transferability.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{CountyDataset, FeatureSchema, TractRecord};
use crate::error::{Error, Result};
use crate::importance::FeatureGroups;
use crate::rng::{derive_seed, substream};

/// Urban feature catalog with its feature group.
pub const FEATURE_CATALOG: [(&str, &str); 37] = [
    ("POI_Density", "built_environment"),
    ("Grocery_Density", "built_environment"),
    ("Health_Care_Density", "built_environment"),
    ("Recreation_Gym_Density", "built_environment"),
    ("Restaurant_Density", "built_environment"),
    ("Walkability", "built_environment"),
    ("High_Volume_Road", "built_environment"),
    ("Railway", "built_environment"),
    ("Airport", "built_environment"),
    ("Park_Lack", "built_environment"),
    ("Impaired_Water", "built_environment"),
    ("Building_Age", "built_environment"),
    ("POI_Avg_Time", "human_mobility"),
    ("POI_Avg_Distance", "human_mobility"),
    ("POI_Avg_Trips", "human_mobility"),
    ("POI_Avg_ROG", "human_mobility"),
    ("Low_Developed", "land_cover"),
    ("Medium_Developed", "land_cover"),
    ("High_Developed", "land_cover"),
    ("Average_Tree_Canopy", "land_cover"),
    ("Maximum_Tree_Canopy", "land_cover"),
    ("Income", "social_demographic"),
    ("Race", "social_demographic"),
    ("Population_Density", "social_demographic"),
    ("Poverty", "social_demographic"),
    ("Education", "social_demographic"),
    ("Unemployment", "social_demographic"),
    ("Renter_Occupied_Housing", "social_demographic"),
    ("Housing_Burden", "social_demographic"),
    ("Group_Quarter", "social_demographic"),
    ("Mobile_Home", "social_demographic"),
    ("Health_Insurance_Lack", "social_demographic"),
    ("Internet_Lack", "social_demographic"),
    ("Elder", "social_demographic"),
    ("Children", "social_demographic"),
    ("Disability", "social_demographic"),
    ("Limited_English_Speaking", "social_demographic"),
];

pub const DEFAULT_N_FEATURES: usize = 35;

/// First `n` catalog names, then `extra_<i>` beyond the catalog.
pub fn feature_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match FEATURE_CATALOG.get(i) {
            Some((name, _)) => name.to_string(),
            None => format!("extra_{i}"),
        })
        .collect()
}

pub fn catalog_index(name: &str) -> Option<usize> {
    FEATURE_CATALOG.iter().position(|(n, _)| *n == name)
}

pub fn catalog_groups() -> FeatureGroups {
    FeatureGroups {
        groups: FEATURE_CATALOG
            .iter()
            .map(|(n, g)| (n.to_string(), g.to_string()))
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelLaw {
    /// Logistic transform of a weighted sum of centred features.
    LinearLogit,
    /// Weighted sum of `x > 0.5` indicators plus the product of the first two.
    ThresholdInteraction,
    /// XOR of the first two features at 0.5, plus half-weighted indicators of
    /// the rest. No single split separates the classes.
    TreeRule,
}

/// How the hazards of one county relate to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Every hazard follows the same law and the same noise draw.
    SharedLaw,
    /// Each hazard has its own disjoint informative set and noise.
    Independent,
    /// Urban features drive every hazard with hazard-specific emphasis.
    FeatureCaused,
    /// A latent hazard driver shapes the informative features, which are
    /// noisy readouts of it.
    HazardCaused,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    pub id: String,
    /// Exposure is `offset + scale · raw`; `scale` must be positive.
    pub offset: f64,
    pub scale: f64,
    /// Fraction of tracts with unknown exposure.
    #[serde(default)]
    pub missing_fraction: f64,
    /// Per-hazard noise level; not allowed under [`Coupling::SharedLaw`].
    #[serde(default)]
    pub noise: Option<f64>,
}

impl HazardSpec {
    pub fn new(id: impl Into<String>) -> Self {
        HazardSpec {
            id: id.into(),
            offset: 0.0,
            scale: 1.0,
            missing_fraction: 0.0,
            noise: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub county_id: String,
    pub n_tracts: usize,
    pub n_features: usize,
    pub informative: Vec<usize>,
    /// One positive weight per informative feature.
    pub weights: Vec<f64>,
    pub law: LabelLaw,
    pub noise: f64,
    pub coupling: Coupling,
    pub hazards: Vec<HazardSpec>,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Equal weights, 35 features, linear-logit law, one hazard `h`.
    pub fn new(county_id: impl Into<String>, n_tracts: usize, informative: Vec<usize>, seed: u64) -> Self {
        let weights = vec![1.0; informative.len()];
        ScenarioSpec {
            county_id: county_id.into(),
            n_tracts,
            n_features: DEFAULT_N_FEATURES,
            informative,
            weights,
            law: LabelLaw::LinearLogit,
            noise: 0.0,
            coupling: Coupling::SharedLaw,
            hazards: vec![HazardSpec::new("h")],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_tracts < 2 {
            return bad(format!("need at least 2 tracts, got {}", self.n_tracts));
        }
        if self.n_features < 2 {
            return bad(format!("need at least 2 features, got {}", self.n_features));
        }
        if self.informative.is_empty() {
            return bad("informative set is empty".into());
        }
        let unique: BTreeSet<_> = self.informative.iter().collect();
        if unique.len() != self.informative.len() {
            return bad("informative set has duplicates".into());
        }
        if let Some(&j) = self.informative.iter().find(|&&j| j >= self.n_features) {
            return bad(format!("informative feature {j} outside 0..{}", self.n_features));
        }
        if self.weights.len() != self.informative.len() {
            return bad(format!(
                "{} weights for {} informative features",
                self.weights.len(),
                self.informative.len()
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must be positive and finite".into());
        }
        if self.law == LabelLaw::TreeRule && self.informative.len() < 2 {
            return bad("tree-rule law needs at least two informative features".into());
        }
        check_noise(self.noise)?;
        if self.hazards.is_empty() {
            return bad("no hazards".into());
        }
        let ids: BTreeSet<_> = self.hazards.iter().map(|h| h.id.as_str()).collect();
        if ids.len() != self.hazards.len() {
            return bad("duplicate hazard ids".into());
        }
        for h in &self.hazards {
            if h.id.is_empty() {
                return bad("empty hazard id".into());
            }
            if !(h.scale.is_finite() && h.scale > 0.0) || !h.offset.is_finite() {
                return bad(format!("hazard `{}` needs a finite offset and positive scale", h.id));
            }
            if !(0.0..1.0).contains(&h.missing_fraction) {
                return bad(format!("hazard `{}` missing fraction outside [0, 1)", h.id));
            }
            if let Some(n) = h.noise {
                if self.coupling == Coupling::SharedLaw {
                    return bad(format!("hazard `{}` overrides noise under a shared law", h.id));
                }
                check_noise(n)?;
            }
        }
        if self.coupling == Coupling::Independent
            && self.informative.len() * self.hazards.len() > self.n_features
        {
            return bad("not enough features for disjoint informative sets".into());
        }
        Ok(())
    }

    /// Informative features and weights driving each hazard, in hazard order.
    pub fn hazard_laws(&self) -> Vec<(Vec<usize>, Vec<f64>)> {
        let m = self.informative.len();
        match self.coupling {
            Coupling::SharedLaw | Coupling::HazardCaused => {
                vec![(self.informative.clone(), self.weights.clone()); self.hazards.len()]
            }
            Coupling::FeatureCaused => (0..self.hazards.len())
                .map(|h| {
                    let mut w = self.weights.clone();
                    w.rotate_left(h % m);
                    (self.informative.clone(), w)
                })
                .collect(),
            Coupling::Independent => {
                let mut used: BTreeSet<usize> = self.informative.iter().copied().collect();
                let mut laws = vec![(self.informative.clone(), self.weights.clone())];
                for _ in 1..self.hazards.len() {
                    let set: Vec<usize> = (0..self.n_features)
                        .filter(|j| !used.contains(j))
                        .take(m)
                        .collect();
                    used.extend(&set);
                    laws.push((set, self.weights.clone()));
                }
                laws
            }
        }
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::InvalidSpec(format!("noise {noise} outside [0, 1)")));
    }
    Ok(())
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn signal(law: LabelLaw, x: &[f64], set: &[usize], weights: &[f64]) -> f64 {
    let on = |k: usize| if x[set[k]] > 0.5 { 1.0 } else { 0.0 };
    match law {
        LabelLaw::LinearLogit => {
            let z: f64 = set.iter().zip(weights).map(|(&j, w)| w * 4.0 * (x[j] - 0.5)).sum();
            sigmoid(z)
        }
        LabelLaw::ThresholdInteraction => {
            let additive: f64 = (0..set.len()).map(|k| weights[k] * on(k)).sum();
            let interaction = if set.len() > 1 {
                weights[0].min(weights[1]) * on(0) * on(1)
            } else {
                0.0
            };
            additive + interaction
        }
        LabelLaw::TreeRule => {
            let xor = if on(0) != on(1) { 1.0 } else { 0.0 };
            let rest: f64 = (2..set.len()).map(|k| 0.5 * weights[k] * on(k)).sum();
            weights[0].max(weights[1]) * xor + rest
        }
    }
}

/// Centres to mean 0 and scales to unit population std; constant input maps
/// to zeros.
fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}

fn normals(seed: u64, path: &[&str], n: usize) -> Vec<f64> {
    let mut rng = substream(seed, path);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn generate_county(spec: &ScenarioSpec) -> Result<CountyDataset> {
    spec.validate()?;
    let n = spec.n_tracts;
    let f = spec.n_features;
    let mut features: Vec<Vec<f64>> = {
        let mut rng = substream(spec.seed, &["features"]);
        (0..n).map(|_| (0..f).map(|_| rng.random::<f64>()).collect()).collect()
    };

    let latent = (spec.coupling == Coupling::HazardCaused)
        .then(|| normals(spec.seed, &["latent"], n));
    if let Some(u) = &latent {
        // informative features become noisy readouts of the latent driver
        for (k, (&j, &w)) in spec.informative.iter().zip(&spec.weights).enumerate() {
            let e = normals(spec.seed, &["readout", &k.to_string()], n);
            for i in 0..n {
                features[i][j] = sigmoid(w * u[i] + 0.5 * e[i]);
            }
        }
    }

    let laws = spec.hazard_laws();
    let shared_noise = normals(spec.seed, &["noise", "shared"], n);
    let mut hazards = BTreeMap::new();
    for (h, hazard) in spec.hazards.iter().enumerate() {
        let mut s: Vec<f64> = match &latent {
            Some(u) => u.clone(),
            None => {
                let (set, w) = &laws[h];
                features.iter().map(|x| signal(spec.law, x, set, w)).collect()
            }
        };
        standardize(&mut s);
        let noise = hazard.noise.unwrap_or(spec.noise);
        let eps = if spec.coupling == Coupling::SharedLaw {
            shared_noise.clone()
        } else {
            normals(spec.seed, &["noise", &hazard.id], n)
        };
        let mut missing = substream(spec.seed, &["missing", &hazard.id]);
        let values = (0..n)
            .map(|i| {
                let raw = (1.0 - noise) * s[i] + noise * eps[i];
                let drop = hazard.missing_fraction > 0.0
                    && missing.random::<f64>() < hazard.missing_fraction;
                (!drop).then_some(hazard.offset + hazard.scale * raw)
            })
            .collect();
        hazards.insert(hazard.id.clone(), values);
    }

    let width = n.to_string().len().max(4);
    let rows = features
        .into_iter()
        .enumerate()
        .map(|(i, features)| TractRecord {
            tract_id: format!("{}-{:0width$}", spec.county_id, i),
            features,
        })
        .collect();
    CountyDataset::new(
        spec.county_id.clone(),
        FeatureSchema::new(feature_names(f))?,
        rows,
        hazards,
    )
}

/// The answers a spec plants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedOracle {
    pub hazards: Vec<String>,
    /// Informative features per hazard.
    pub informative: Vec<Vec<usize>>,
    /// Informative features of the first hazard by decreasing weight,
    /// ties by index.
    pub expected_top: Vec<usize>,
    /// `transferable[g][h]`: whether the hazard-g model should transfer to h.
    pub transferable: Vec<Vec<bool>>,
}

pub fn planted_oracle(spec: &ScenarioSpec) -> PlantedOracle {
    let laws = spec.hazard_laws();
    let (set, weights) = &laws[0];
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(set[a].cmp(&set[b])));
    let h = spec.hazards.len();
    let couples = spec.coupling != Coupling::Independent;
    PlantedOracle {
        hazards: spec.hazards.iter().map(|h| h.id.clone()).collect(),
        informative: laws.iter().map(|(s, _)| s.clone()).collect(),
        expected_top: order.into_iter().map(|k| set[k]).collect(),
        transferable: (0..h)
            .map(|g| (0..h).map(|t| g == t || couples).collect())
            .collect(),
    }
}

/// Whether counties in a family share their feature→hazard law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountyLaw {
    Shared,
    Independent,
}

/// One spec per county, derived from `template`. Seeds are derived from the
/// template seed and the county id. Under [`CountyLaw::Independent`] county
/// `i` gets the `i`-th disjoint block of informative features.
pub fn county_family(
    template: &ScenarioSpec,
    counties: &[(&str, usize)],
    law: CountyLaw,
) -> Result<Vec<ScenarioSpec>> {
    let m = template.informative.len();
    if law == CountyLaw::Independent && m * counties.len() > template.n_features {
        return Err(Error::InvalidSpec(
            "not enough features for disjoint county laws".into(),
        ));
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    counties
        .iter()
        .map(|&(id, n_tracts)| {
            let mut spec = template.clone();
            spec.county_id = id.to_string();
            spec.n_tracts = n_tracts;
            spec.seed = derive_seed(template.seed, &["county", id]);
            if law == CountyLaw::Independent {
                spec.informative = if used.is_empty() {
                    template.informative.clone()
                } else {
                    (0..template.n_features)
                        .filter(|j| !used.contains(j))
                        .take(m)
                        .collect()
                };
                used.extend(&spec.informative);
            }
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// Expected cross-county transferability for one hazard: two counties
/// should transfer iff they plant the same law for it.
pub fn cross_county_oracle(specs: &[ScenarioSpec], hazard: &str) -> Vec<Vec<Option<bool>>> {
    let law_of = |s: &ScenarioSpec| {
        let h = s.hazards.iter().position(|h| h.id == hazard)?;
        let (set, w) = s.hazard_laws().swap_remove(h);
        Some((s.law, s.coupling == Coupling::HazardCaused, set, w))
    };
    let laws: Vec<_> = specs.iter().map(law_of).collect();
    laws.iter()
        .map(|a| {
            laws.iter()
                .map(|b| match (a, b) {
                    (Some(a), Some(b)) => Some(a == b),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// County ids and tract counts of the six-county harness.
pub const SYNTH6X3_COUNTIES: [(&str, usize); 6] = [
    ("Harris", 958),
    ("Cook", 1118),
    ("Wayne", 457),
    ("Suffolk", 186),
    ("Fulton", 256),
    ("Queens", 533),
];

pub const SYNTH6X3_HAZARDS: [&str; 3] = ["heat", "flood", "air"];

/// Fraction of tracts with unknown air exposure; `None` means the hazard is
/// not collected at all.
const SYNTH6X3_AIR_MISSING: [Option<f64>; 6] =
    [Some(0.835), Some(0.70), Some(0.83), Some(0.77), None, None];

/// Six counties × three hazards: heat, flood and air, with air absent in
/// Fulton and Queens and sparsely observed elsewhere. Urban features drive
/// every hazard; heat is the least noisy, air the noisiest.
pub fn synth6x3(seed: u64) -> Vec<ScenarioSpec> {
    let informative: Vec<usize> = [
        "Race",
        "Renter_Occupied_Housing",
        "Elder",
        "Income",
        "High_Developed",
        "POI_Avg_Trips",
        "High_Volume_Road",
    ]
    .iter()
    .map(|n| catalog_index(n).expect("catalog name"))
    .collect();
    let base_weights = [3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.8];
    SYNTH6X3_COUNTIES
        .iter()
        .zip(SYNTH6X3_AIR_MISSING)
        .enumerate()
        .map(|(i, (&(county, n_tracts), air))| {
            let mut weights = base_weights.to_vec();
            weights.rotate_left(i % 3);
            let mut hazards = vec![
                HazardSpec {
                    noise: Some(0.3),
                    ..hazard_scale("heat", 5.5, 1.5)
                },
                HazardSpec {
                    noise: Some(0.45),
                    ..hazard_scale("flood", 4.0, 1.8)
                },
            ];
            if let Some(missing_fraction) = air {
                hazards.push(HazardSpec {
                    missing_fraction,
                    noise: Some(0.55),
                    ..hazard_scale("air", 9.0, 1.2)
                });
            }
            ScenarioSpec {
                county_id: county.to_string(),
                n_tracts,
                n_features: DEFAULT_N_FEATURES,
                informative: informative.clone(),
                weights,
                law: LabelLaw::LinearLogit,
                noise: 0.3,
                coupling: Coupling::FeatureCaused,
                hazards,
                seed: derive_seed(seed, &["synth6x3", county]),
            }
        })
        .collect()
}

fn hazard_scale(id: &str, offset: f64, scale: f64) -> HazardSpec {
    HazardSpec {
        offset,
        scale,
        ..HazardSpec::new(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_labeled, MissingHazardPolicy};

    #[test]
    fn invalid_specs() {
        let ok = ScenarioSpec::new("c", 50, vec![1, 4, 9], 1);
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.noise = 1.0;
        assert!(matches!(generate_county(&s), Err(Error::InvalidSpec(_))));
        let mut s = ok.clone();
        s.informative = vec![40];
        s.weights = vec![1.0];
        assert!(s.validate().is_err());
        let mut s = ok;
        s.law = LabelLaw::TreeRule;
        s.informative = vec![0];
        s.weights = vec![1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn oracle_echoes_informative_set() {
        let spec = ScenarioSpec::new("c", 50, vec![9, 1, 4], 1);
        assert_eq!(planted_oracle(&spec).expected_top, vec![1, 4, 9]);
    }

    #[test]
    fn shared_law_gives_identical_labels() {
        let mut spec = ScenarioSpec::new("c", 200, vec![0, 3], 7);
        spec.noise = 0.3;
        spec.hazards = vec![HazardSpec::new("a"), hazard_scale("b", 5.0, 2.0)];
        let county = generate_county(&spec).unwrap();
        let a = make_labeled(&county, "a", MissingHazardPolicy::Drop).unwrap();
        let b = make_labeled(&county, "b", MissingHazardPolicy::Drop).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn preset_shape() {
        let specs = synth6x3(1);
        assert_eq!(specs.len(), 6);
        let with_air = specs
            .iter()
            .filter(|s| s.hazards.iter().any(|h| h.id == "air"))
            .count();
        assert_eq!(with_air, 4);
    }
}
