use scorecard_core::data::Matrix;
use scorecard_core::explain::*;
use scorecard_core::models::{ModelKind, ModelSpec};
use scorecard_core::synth::{generate, SynthConfig};
use scorecard_core::{Dataset, Predictor};

/// `f(x) = Σ wⱼ·xⱼ` over named features.
struct Linear {
    names: Vec<String>,
    weights: Vec<f64>,
}

impl Linear {
    fn new(names: &[&str], weights: &[f64]) -> Self {
        Linear {
            names: names.iter().map(|s| s.to_string()).collect(),
            weights: weights.to_vec(),
        }
    }
}

impl Predictor for Linear {
    fn kind(&self) -> ModelKind {
        ModelKind::Logistic
    }
    fn feature_names(&self) -> &[String] {
        &self.names
    }
    fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }
}

fn two_col(a: &[f64], b: &[f64]) -> Matrix {
    Matrix::from_columns(vec!["x1".into(), "x2".into()], &[a.to_vec(), b.to_vec()]).unwrap()
}

#[test]
fn pdp_of_identity_model() {
    let a = [0.1, 0.4, 0.2, 0.9];
    let x = two_col(&a, &[5.0, 6.0, 7.0, 8.0]);
    let f = Linear::new(&["x1", "x2"], &[1.0, 0.0]);
    let grid = GridSpec::Points(vec![0.0, 0.25, 0.5]);
    let p1 = partial_dependence(&f, &x, "x1", &grid).unwrap();
    assert_eq!(p1.mean_prediction, vec![0.0, 0.25, 0.5]);
    let p2 = partial_dependence(&f, &x, "x2", &grid).unwrap();
    let mean = a.iter().sum::<f64>() / 4.0;
    for v in p2.mean_prediction {
        assert!((v - mean).abs() < 1e-15);
    }
    assert!(partial_dependence(&f, &x, "x3", &grid).is_err());
}

#[test]
fn cp_substitution_and_anchor() {
    let x = two_col(&[1.0, 3.0], &[2.0, 0.0]);
    let f = Linear::new(&["x1", "x2"], &[1.0, 1.0]);
    let cp = ceteris_paribus(&f, &x, 0, "x1", &GridSpec::Points(vec![-1.0, 0.5, 4.0])).unwrap();
    assert_eq!(cp.grid, vec![-1.0, 0.5, 1.0, 4.0]);
    assert_eq!(cp.prediction, vec![1.0, 2.5, 3.0, 6.0]);
    assert_eq!(cp.anchor, 3.0);
    assert_eq!(cp.prediction[2], cp.anchor);
    let flat = Linear::new(&["x1", "x2"], &[0.0, 1.0]);
    let cp = ceteris_paribus(&flat, &x, 1, "x1", &GridSpec::Quantiles(5)).unwrap();
    assert!(cp.prediction.iter().all(|&p| p == cp.anchor));
    assert!(matches!(
        ceteris_paribus(&f, &x, 2, "x1", &GridSpec::default()),
        Err(scorecard_core::Error::OutOfRange(_))
    ));
}

#[test]
fn bd_additive_model_both_orderings() {
    let x = two_col(&[0.0, 1.0, 2.0, 5.0], &[1.0, 1.0, 3.0, 3.0]);
    let (mu1, mu2) = (2.0, 2.0);
    let f = Linear::new(&["x1", "x2"], &[1.0, 1.0]);
    let instance = [4.0, 1.5];
    for ordering in [
        BdOrdering::Greedy,
        BdOrdering::Fixed(vec!["x2".into(), "x1".into()]),
        BdOrdering::Fixed(vec!["x1".into(), "x2".into()]),
    ] {
        let bd = break_down(&f, &x, &instance, &ordering).unwrap();
        assert_eq!(bd.intercept, mu1 + mu2);
        let delta = |name: &str| bd.contributions.iter().find(|c| c.feature == name).unwrap().delta;
        assert_eq!(delta("x1"), instance[0] - mu1);
        assert_eq!(delta("x2"), instance[1] - mu2);
        assert_eq!(bd.final_prediction, 5.5);
    }
    // greedy picks the larger |impact| first
    let bd = break_down(&f, &x, &instance, &BdOrdering::Greedy).unwrap();
    assert_eq!(bd.contributions[0].feature, "x1");
    assert!(break_down(&f, &x, &instance, &BdOrdering::Fixed(vec!["x1".into()])).is_err());
}

#[test]
fn bd_identical_background_is_flat() {
    let x = two_col(&[1.0; 3], &[2.0; 3]);
    let f = Linear::new(&["x1", "x2"], &[0.3, -0.2]);
    let bd = break_down(&f, &x, &[1.0, 2.0], &BdOrdering::Greedy).unwrap();
    assert!(bd.contributions.iter().all(|c| c.delta == 0.0));
    assert_eq!(bd.intercept, bd.final_prediction);
}

#[test]
fn pfi_identity_and_constant() {
    let n = 4000;
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let x = two_col(&y.iter().map(|&v| v as f64).collect::<Vec<_>>(), &vec![0.0; n]);
    let ident = Linear::new(&["x1", "x2"], &[1.0, 0.0]);
    let r = permutation_importance(&ident, &x, &y, 10, 7).unwrap();
    assert_eq!(r.baseline_metric, 1.0);
    assert!((r.get("x1").unwrap().mean_drop - 0.5).abs() < 0.02);
    assert!(r.get("x2").unwrap().drops.iter().all(|&d| d == 0.0));

    let constant = Linear::new(&["x1", "x2"], &[0.0, 0.0]);
    let r = permutation_importance(&constant, &x, &y, 3, 7).unwrap();
    assert_eq!(r.baseline_metric, 0.5);
    assert!(r.features.iter().flat_map(|f| &f.drops).all(|&d| d == 0.0));

    assert!(permutation_importance(&ident, &x, &vec![0; n], 3, 7).is_err());
    assert!(permutation_importance(&ident, &x, &y, 0, 7).is_err());
}

fn synthetic(n_rows: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let d = generate(&SynthConfig {
        n_rows,
        n_noise: 4,
        missing_informative: 0.0,
        missing_noise: 0.0,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let numeric: Vec<String> = d.column_names().into_iter().filter(|c| c != "noise_channel").collect();
    let d: Dataset = d.retain_columns(&numeric).unwrap();
    (Matrix::from_dataset(&d).unwrap(), d.target().to_vec())
}

#[test]
fn every_family_satisfies_identities() {
    let (x, y) = synthetic(600, 3);
    let before = x.checksum();
    for kind in ModelKind::COMPARED {
        let mut spec = ModelSpec::default_for(kind);
        if let ModelSpec::RandomForest(c) = &mut spec {
            c.n_trees = 20;
        }
        let model = spec.fit(&x, &y, 11).unwrap();
        let background = x.select_rows(&(0..100).collect::<Vec<_>>());

        for feature in ["inf_01", "inf_03", "noise_01"] {
            let grid = GridSpec::Quantiles(11);
            let pdp = partial_dependence(&model, &background, feature, &grid).unwrap();
            let mut sums = vec![0.0; pdp.grid.len()];
            for i in 0..background.n_rows() {
                let cp = ceteris_paribus_at(&model, background.names(), background.row(i), i, feature, &pdp.grid).unwrap();
                for (s, z) in sums.iter_mut().zip(&pdp.grid) {
                    let k = cp.grid.iter().position(|g| g == z).unwrap();
                    *s += cp.prediction[k];
                }
            }
            for (s, m) in sums.iter().zip(&pdp.mean_prediction) {
                assert!((s / background.n_rows() as f64 - m).abs() <= 1e-12, "{kind} {feature}");
            }
            assert!(pdp.mean_prediction.iter().all(|p| (0.0..=1.0).contains(p)));
        }

        for i in [0, 7, 42] {
            let instance = x.row(200 + i).to_vec();
            for ordering in [BdOrdering::Greedy, BdOrdering::Fixed(model.feature_names().iter().rev().cloned().collect())] {
                let bd = break_down(&model, &background, &instance, &ordering).unwrap();
                assert!((bd.total() - bd.final_prediction).abs() <= 1e-9, "{kind}");
                assert_eq!(bd.final_prediction, model.predict_row(&instance));
            }
        }

        let pfi = permutation_importance(&model, &x, &y, 2, 5).unwrap();
        for (j, f) in pfi.features.iter().enumerate() {
            if !model.uses_feature(j) {
                assert!(f.drops.iter().all(|&d| d == 0.0), "{kind} {}", f.feature);
            }
        }
        assert_eq!(x.checksum(), before);
    }
}

#[test]
fn two_feature_surface_matches_single_feature_slices() {
    let (x, y) = synthetic(400, 4);
    let model = ModelSpec::default_for(ModelKind::Gbm).fit(&x, &y, 1).unwrap();
    let ga = GridSpec::Points(vec![-1.0, 0.0, 1.0]);
    let gb = GridSpec::Points(vec![0.5, 2.0]);
    let surface = partial_dependence_2d(&model, &x, ["inf_01", "inf_02"], [&ga, &gb]).unwrap();
    assert_eq!(surface.mean_prediction.len(), 3);
    let mut fixed = x.clone();
    fixed.fill_column(x.col_index("inf_02").unwrap(), 2.0);
    let slice = partial_dependence(&model, &fixed, "inf_01", &ga).unwrap();
    for i in 0..3 {
        assert_eq!(surface.mean_prediction[i][1], slice.mean_prediction[i]);
    }
}

#[test]
fn charts_render() {
    let x = two_col(&[0.0, 1.0], &[1.0, 3.0]);
    let f = Linear::new(&["x1", "x2"], &[0.1, 0.2]);
    let bd = break_down(&f, &x, &[1.0, 1.0], &BdOrdering::Greedy).unwrap();
    let svg = svg::waterfall(&bd);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<rect x=").count(), 4);
    let lines = svg::line_chart(
        "pdp",
        "x1",
        &[svg::Series { name: "a", x: &[0.0, 1.0], y: &[0.2, 0.3] }, svg::Series { name: "b<c", x: &[0.0, 1.0], y: &[0.1, 0.4] }],
    );
    assert_eq!(lines.matches("<polyline").count(), 3);
    assert!(lines.contains("b&lt;c"));
}
