mod common;

use hazardscope::dataset::{
    align_schemas, binarize, make_labeled, read_county_csv, write_county_csv, LoadOptions,
    MissingFeaturePolicy, MissingHazardPolicy,
};
use hazardscope::synth::{generate_county, synth6x3};
use hazardscope::{Error, FeatureSchema, RiskLabel};
use proptest::prelude::*;

use RiskLabel::{High, Low};

fn read(text: &str) -> hazardscope::Result<hazardscope::CountyDataset> {
    read_county_csv(text.as_bytes(), &LoadOptions::default())
}

#[test]
fn binarize_is_strict_at_the_mean() {
    let (labels, mean) = binarize(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(mean, 2.0);
    assert_eq!(labels, vec![Low, Low, High]);

    let (labels, mean) = binarize(&[5.0, 5.0, 5.0]).unwrap();
    assert_eq!(mean, 5.0);
    assert_eq!(labels, vec![Low, Low, Low]);

    let (labels, mean) = binarize(&[0.0, 10.0]).unwrap();
    assert_eq!(mean, 5.0);
    assert_eq!(labels, vec![Low, High]);
}

#[test]
fn binarize_errors() {
    assert!(matches!(binarize(&[]), Err(Error::EmptyVector)));
    assert!(matches!(
        binarize(&[1.0, f64::NAN]),
        Err(Error::NonFiniteValue { index: 1 })
    ));
    assert!(matches!(
        binarize(&[f64::INFINITY]),
        Err(Error::NonFiniteValue { index: 0 })
    ));
}

#[test]
fn make_labeled_examples() {
    let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
    let c = common::county(
        "x",
        &rows,
        &[
            ("h", vec![Some(1.0), Some(2.0), Some(3.0)]),
            ("flat", vec![Some(4.0), Some(4.0), Some(4.0)]),
        ],
    );
    let l = make_labeled(&c, "h", MissingHazardPolicy::Drop).unwrap();
    assert_eq!(l.labels, vec![Low, Low, High]);
    assert_eq!(l.threshold, 2.0);
    let counts = l.class_counts();
    assert_eq!(counts[0] + counts[1], l.n_rows());

    assert!(matches!(
        make_labeled(&c, "flat", MissingHazardPolicy::Drop),
        Err(Error::DegenerateLabels { .. })
    ));
    assert!(matches!(
        make_labeled(&c, "nope", MissingHazardPolicy::Drop),
        Err(Error::HazardAbsent { .. })
    ));
}

#[test]
fn fulton_has_no_air_hazard() {
    let specs = synth6x3(7);
    let fulton = specs.iter().find(|s| s.county_id == "Fulton").unwrap();
    let data = generate_county(fulton).unwrap();
    let err = make_labeled(&data, "air", MissingHazardPolicy::Drop).unwrap_err();
    assert!(matches!(err, Error::HazardAbsent { ref county, ref hazard } if county == "Fulton" && hazard == "air"));
    assert!(make_labeled(&data, "heat", MissingHazardPolicy::Drop).is_ok());
}

#[test]
fn missing_hazard_rows_drop_or_fail() {
    let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0], vec![3.0, 1.0]];
    let c = common::county("x", &rows, &[("h", vec![Some(1.0), None, Some(3.0), Some(5.0)])]);
    let l = make_labeled(&c, "h", MissingHazardPolicy::Drop).unwrap();
    assert_eq!(l.n_rows(), 3);
    assert_eq!(l.tract_ids, vec!["x-0000", "x-0002", "x-0003"]);
    assert_eq!(l.threshold, 3.0);
    assert_eq!(l.labels, vec![Low, Low, High]);
    assert!(make_labeled(&c, "h", MissingHazardPolicy::Error).is_err());
}

#[test]
fn load_small_file() {
    let d = read("tract_id,a,b,hazard__heat\nt1,1,2,3\nt2,4,5,6\nt3,7,8,9\n").unwrap();
    assert_eq!(d.n_rows(), 3);
    assert_eq!(d.schema().len(), 2);
    assert_eq!(d.hazard_ids().collect::<Vec<_>>(), vec!["heat"]);
    assert_eq!(d.hazard("heat").unwrap(), &[Some(3.0), Some(6.0), Some(9.0)]);
}

#[test]
fn load_errors() {
    let opts = LoadOptions {
        schema: Some(FeatureSchema::new(["a", "Income"]).unwrap()),
        ..Default::default()
    };
    let err = read_county_csv("tract_id,a,b\nt1,1,2\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(err, Error::MissingColumn { ref column } if column == "Income"));

    let err = read("tract_id,a,b\nt1,1,2\nt2,N/A,3\n").unwrap_err();
    assert!(matches!(err, Error::NonNumericCell { row: 2, ref column, .. } if column == "a"));

    let err = read("tract_id,a,b\nt1,1,2\nt1,2,3\n").unwrap_err();
    assert!(matches!(err, Error::DuplicateTract { .. }));

    let err = read("a,b\n1,2\n").unwrap_err();
    assert!(matches!(err, Error::MissingColumn { .. }));
}

#[test]
fn median_impute_is_opt_in() {
    let opts = LoadOptions {
        missing_features: MissingFeaturePolicy::MedianImpute,
        ..Default::default()
    };
    let d = read_county_csv("tract_id,a,b\nt1,1,2\nt2,NA,4\nt3,3,6\n".as_bytes(), &opts).unwrap();
    assert_eq!(d.rows()[1].features, vec![2.0, 4.0]);
}

#[test]
fn csv_round_trip_is_byte_stable() {
    let text = "tract_id,a,b,hazard__air,hazard__heat\nt1,0.1,2,,3.25\nt2,1e-7,-5,0.3333333333333333,6\n";
    let first = read(text).unwrap();
    let mut bytes = Vec::new();
    write_county_csv(&first, &mut bytes).unwrap();
    let second = read(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert_eq!(first, second);
    let mut again = Vec::new();
    write_county_csv(&second, &mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn align_reorders_permuted_columns() {
    let a = read("tract_id,x,y,z,hazard__h\nt1,1,2,3,0\nt2,4,5,6,1\n").unwrap();
    let b = read_county_csv(
        "tract_id,z,hazard__h,x,y\nu1,30,0,10,20\nu2,60,1,40,50\n".as_bytes(),
        &LoadOptions {
            county_id: Some("b".into()),
            ..Default::default()
        },
    )
    .unwrap();
    let mut all = vec![a, b];
    let schema = align_schemas(&mut all).unwrap();
    assert_eq!(schema.names(), &["x", "y", "z"]);
    assert_eq!(all[1].rows()[0].features, vec![10.0, 20.0, 30.0]);
    assert_eq!(all[1].rows()[1].features, vec![40.0, 50.0, 60.0]);
}

#[test]
fn align_rejects_missing_feature() {
    let a = read("tract_id,x,y,z\nt1,1,2,3\n").unwrap();
    let b = read_county_csv(
        "tract_id,x,y\nu1,1,2\n".as_bytes(),
        &LoadOptions {
            county_id: Some("short".into()),
            ..Default::default()
        },
    )
    .unwrap();
    let err = align_schemas(&mut [a, b]).unwrap_err();
    assert!(matches!(err, Error::SchemaMismatch { ref county, .. } if county == "short"));
    assert!(matches!(FeatureSchema::new(["only"]), Err(Error::InvalidSchema(_))));
}

proptest! {
    #[test]
    fn binarize_is_affine_covariant(
        values in prop::collection::vec(-1e3f64..1e3, 1..60),
        a in prop_oneof![Just(1.0f64), Just(2.0), Just(0.5), Just(4.0)],
        b in prop_oneof![Just(0.0f64), Just(1.0), Just(-8.0), Just(256.0)],
    ) {
        // dyadic a and b keep the mean exact, so ties at the mean stay ties
        let values: Vec<f64> = values.iter().map(|v| (v * 64.0).round() / 64.0).collect();
        let (labels, _) = binarize(&values).unwrap();
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let (mapped_labels, _) = binarize(&mapped).unwrap();
        prop_assert_eq!(labels, mapped_labels);
    }

    #[test]
    fn label_counts_cover_rows(values in prop::collection::vec(-50f64..50.0, 1..80)) {
        let (labels, mean) = binarize(&values).unwrap();
        let high = labels.iter().filter(|l| **l == High).count();
        let low = labels.iter().filter(|l| **l == Low).count();
        prop_assert_eq!(high + low, values.len());
        for (v, l) in values.iter().zip(&labels) {
            prop_assert_eq!(*l == High, *v > mean);
        }
    }
}
