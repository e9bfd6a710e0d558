//! Staged batch workflow over a run directory:
//! split → select → train → explain → report.
//!
//! Each stage records the checksums of the artifacts it wrote in
//! `manifest.json`. A stage refuses to start unless the stages it depends on
//! are recorded and their artifacts are unchanged on disk, so held-out data is
//! never read before the transformations fitted on train are frozen.
//!
//! Layout of a run directory:
//!
//! ```text
//! config.resolved.toml
//! manifest.json
//! splits/{train,test,out_of_sample,out_of_time}.csv, split.json, preprocess.json
//! selection/report.json, selection/features.txt
//! models/<family>.json, models/<family>.search.json
//! reports/<family>.metrics.json, reports/<family>.timing.csv
//! explain/<family>/{pfi,pdp_*,cp_*,bd_*}.{json,svg}, explain/pdp_<feature>.svg
//! report/table.csv, report/dots.json, report/decisions.json
//! ```
//!
//! Every JSON artifact except `manifest.json` (which carries timestamps) is a
//! pure function of the input data and the configuration. Wall-clock timings
//! live in `.csv` sidecars.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::SystemTime;

use chrono::{DateTime, SecondsFormat, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{load_csv, temporal_split, write_csv, DummyEncoder, Imputer, Schema, SplitParams};
use crate::data::{Dataset, FeatureKind, Matrix};
use crate::error::{Error, Result};
use crate::explain::{self, svg, BdOrdering, GridSpec};
use crate::io::{read_json, sha256_file, sha256_str, write_json, write_text};
use crate::metrics::{evaluate, EvalSet, MetricReport, WallClock};
use crate::models::{random_search, ModelArtifact, ModelKind, ModelSpec, Predictor, Trial};
use crate::rng;
use crate::selection::{reject_models, select_features, ModelDecision, SelectionReport};
use crate::SCHEMA_VERSION;

const SELECT_STREAM: u64 = 0x5E1_0001;
const HOLDOUT_STREAM: u64 = 0x5E1_0002;
const SEARCH_STREAM: u64 = 0x5E1_0003;
const REFIT_STREAM: u64 = 0x5E1_0004;
const BACKGROUND_STREAM: u64 = 0x5E1_0005;
const PFI_STREAM: u64 = 0x5E1_0006;

pub const PARTS: [&str; 4] = ["train", "test", "out_of_sample", "out_of_time"];

/// Paths inside a run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn join(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest(&self) -> PathBuf {
        self.join("manifest.json")
    }

    pub fn split_csv(part: &str) -> String {
        format!("splits/{part}.csv")
    }

    pub fn model(kind: ModelKind) -> String {
        format!("models/{kind}.json")
    }

    pub fn search(kind: ModelKind) -> String {
        format!("models/{kind}.search.json")
    }

    pub fn metrics(kind: ModelKind) -> String {
        format!("reports/{kind}.metrics.json")
    }

    pub fn timing(kind: ModelKind) -> String {
        format!("reports/{kind}.timing.csv")
    }

    pub fn explain_dir(kind: ModelKind) -> String {
        format!("explain/{kind}")
    }
}

pub const SPLIT_SUMMARY: &str = "splits/split.json";
pub const PREPROCESS: &str = "splits/preprocess.json";
pub const SELECTION_REPORT: &str = "selection/report.json";
pub const FEATURE_LIST: &str = "selection/features.txt";
pub const TABLE: &str = "report/table.csv";
pub const DOTS: &str = "report/dots.json";
pub const DECISIONS: &str = "report/decisions.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub completed_at: String,
    /// Relative path → SHA-256 of every artifact the stage wrote.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub created_at: String,
    pub updated_at: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Input label → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
}

fn now() -> String {
    DateTime::<Utc>::from(SystemTime::now()).to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Stages whose outputs are derived from `stage` and become stale when it reruns.
fn depends_on(stage: &str, upstream: &str) -> bool {
    if stage == upstream {
        return true;
    }
    match upstream {
        "split" => true,
        "select" => stage.starts_with("train:") || stage.starts_with("explain:") || stage == "report",
        _ => match upstream.strip_prefix("train:") {
            Some(kind) => stage == format!("explain:{kind}") || stage == "report",
            None => false,
        },
    }
}

impl RunManifest {
    pub fn new(config: &RunConfig, config_text: &str) -> Self {
        let hash = sha256_str(config_text);
        let t = now();
        RunManifest {
            schema_version: SCHEMA_VERSION,
            run_id: format!("run-{}", &hash[..16]),
            created_at: t.clone(),
            updated_at: t,
            seed: config.seed,
            config_sha256: hash,
            inputs: BTreeMap::new(),
            stages: Vec::new(),
        }
    }

    pub fn load(paths: &RunPaths) -> Result<Self> {
        let p = paths.manifest();
        if !p.exists() {
            return Err(Error::MissingArtifact(format!(
                "no manifest in {}; run `split` first",
                paths.root().display()
            )));
        }
        read_json(p)
    }

    pub fn save(&self, paths: &RunPaths) -> Result<()> {
        write_json(paths.manifest(), self)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Records a completed stage, dropping records made stale by it.
    pub fn record(&mut self, paths: &RunPaths, stage: &str, artifacts: &[String]) -> Result<()> {
        let artifacts = artifacts
            .iter()
            .map(|rel| Ok((rel.clone(), sha256_file(paths.join(rel))?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        self.stages.retain(|s| !depends_on(&s.stage, stage));
        let t = now();
        self.updated_at = t.clone();
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            completed_at: t,
            artifacts,
        });
        Ok(())
    }

    /// Fails unless `stage` completed and its artifacts are unchanged.
    pub fn require(&self, paths: &RunPaths, stage: &str) -> Result<&StageRecord> {
        let rec = self
            .stage(stage)
            .ok_or_else(|| Error::MissingArtifact(format!("stage '{stage}' has not completed in this run")))?;
        for (rel, hash) in &rec.artifacts {
            let path = paths.join(rel);
            if !path.exists() || sha256_file(&path)? != *hash {
                return Err(Error::MissingArtifact(format!(
                    "artifact '{rel}' changed since stage '{stage}' wrote it"
                )));
            }
        }
        Ok(rec)
    }

    /// Artifact checksums only: the reproducible part of the manifest.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .flat_map(|s| s.artifacts.iter().map(|(k, v)| (k.clone(), v.clone())))
            .collect()
    }
}

/// Imputation and dummy coding fitted on the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub schema_version: u32,
    pub imputer: Imputer,
    pub encoder: DummyEncoder,
    /// Column order of the design matrix.
    pub columns: Vec<String>,
}

impl Preprocessor {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let imputer = Imputer::fit(train);
        let imputed = imputer.transform(train)?;
        let categorical: Vec<String> = imputed
            .columns()
            .iter()
            .filter(|c| c.kind() == FeatureKind::Categorical)
            .map(|c| c.name.clone())
            .collect();
        let encoder = DummyEncoder::fit(&imputed, &categorical)?;
        let columns = encoder.transform(&imputed)?.column_names();
        Ok(Preprocessor {
            schema_version: SCHEMA_VERSION,
            imputer,
            encoder,
            columns,
        })
    }

    pub fn matrix(&self, d: &Dataset) -> Result<Matrix> {
        let encoded = self.encoder.transform(&self.imputer.transform(d)?)?;
        Matrix::from_dataset(&encoded)?.select_columns(&self.columns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub schema_version: u32,
    pub params: SplitParams,
    /// Schema the split files are read back with.
    pub schema: Schema,
    pub missing_token: String,
    pub n_rows: usize,
    pub counts: BTreeMap<String, usize>,
    pub bad_rates: BTreeMap<String, f64>,
}

/// A run directory plus its configuration.
pub struct Run {
    pub config: RunConfig,
    pub paths: RunPaths,
}

fn bad_rate(y: &[u8]) -> f64 {
    if y.is_empty() {
        0.0
    } else {
        y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64
    }
}

fn resolved_schema(d: &Dataset, base: &Schema) -> Schema {
    let names = |kind: FeatureKind| -> Vec<String> {
        d.columns().iter().filter(|c| c.kind() == kind).map(|c| c.name.clone()).collect()
    };
    Schema {
        target: base.target.clone(),
        date_column: base.date_column.clone(),
        date_format: "%Y-%m-%d".into(),
        numeric: names(FeatureKind::Numeric),
        categorical: names(FeatureKind::Categorical),
        infer_unlisted: false,
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// What `explain` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainKind {
    Pfi,
    Pdp,
    Cp,
    Bd,
}

impl ExplainKind {
    pub const ALL: [ExplainKind; 4] = [ExplainKind::Pfi, ExplainKind::Pdp, ExplainKind::Cp, ExplainKind::Bd];

    pub fn as_str(self) -> &'static str {
        match self {
            ExplainKind::Pfi => "pfi",
            ExplainKind::Pdp => "pdp",
            ExplainKind::Cp => "cp",
            ExplainKind::Bd => "bd",
        }
    }
}

impl fmt::Display for ExplainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExplainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExplainKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown explanation '{s}'")))
    }
}

pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub report: MetricReport,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub budget: usize,
    pub best_index: usize,
    pub best_config: ModelSpec,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotPlotModel {
    pub model: String,
    /// Split name → Gini; failed splits are absent.
    pub gini: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotPlotData {
    pub schema_version: u32,
    pub splits: Vec<String>,
    pub models: Vec<DotPlotModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    pub schema_version: u32,
    pub min_gini: f64,
    pub decisions: Vec<ModelDecision>,
}

impl Run {
    pub fn new(config: RunConfig, root: impl Into<PathBuf>) -> Self {
        Run {
            config,
            paths: RunPaths::new(root),
        }
    }

    /// Saves the configuration with `output_dir` relative to the run
    /// directory itself, so relocated runs hash identically.
    fn write_config(&self) -> Result<String> {
        let text = RunConfig {
            output_dir: PathBuf::from("."),
            ..self.config.clone()
        }
        .to_toml_string()?;
        write_text(self.paths.join(RESOLVED_CONFIG), &text)?;
        Ok(text)
    }

    fn manifest(&self) -> Result<RunManifest> {
        let m = RunManifest::load(&self.paths)?;
        if m.seed != self.config.seed {
            return Err(Error::Config(format!(
                "run directory was created with seed {}, not {}",
                m.seed, self.config.seed
            )));
        }
        Ok(m)
    }

    fn summary(&self) -> Result<SplitSummary> {
        read_json(self.paths.join(SPLIT_SUMMARY))
    }

    fn preprocessor(&self) -> Result<Preprocessor> {
        read_json(self.paths.join(PREPROCESS))
    }

    /// Reads one split part back in raw (pre-imputation) form.
    pub fn load_part(&self, part: &str) -> Result<Dataset> {
        let s = self.summary()?;
        load_csv(self.paths.join(&RunPaths::split_csv(part)), &s.schema, &s.missing_token)
    }

    /// Reads one split part as a design matrix with the train-fitted
    /// preprocessing applied.
    pub fn part_matrix(&self, part: &str) -> Result<(Matrix, Vec<u8>)> {
        let d = self.load_part(part)?;
        Ok((self.preprocessor()?.matrix(&d)?, d.target().to_vec()))
    }

    /// Partitions the input CSV, fits preprocessing on train and starts a
    /// fresh manifest.
    pub fn split(&self, data_path: &Path) -> Result<SplitSummary> {
        let cfg = &self.config;
        let data = load_csv(data_path, &cfg.data.schema, &cfg.data.missing_token)?;
        let set = temporal_split(&data, &cfg.split)?;
        let schema = resolved_schema(&data, &cfg.data.schema);
        let date_name = schema.date_column.clone().unwrap_or_else(|| "obs_date".into());

        std::fs::create_dir_all(self.paths.join("splits")).map_err(|e| Error::io(self.paths.join("splits"), e))?;
        let mut artifacts = Vec::new();
        for (name, part) in set.parts() {
            let rel = RunPaths::split_csv(name);
            write_csv(part, self.paths.join(&rel), &schema.target, &date_name, &cfg.data.missing_token)?;
            artifacts.push(rel);
        }
        let pre = Preprocessor::fit(&set.train)?;
        write_json(self.paths.join(PREPROCESS), &pre)?;

        let mut counts: BTreeMap<String, usize> =
            set.parts().iter().map(|(n, d)| (n.to_string(), d.n_rows())).collect();
        counts.insert("excluded".into(), set.indices.excluded.len());
        let summary = SplitSummary {
            schema_version: SCHEMA_VERSION,
            params: cfg.split.clone(),
            schema,
            missing_token: cfg.data.missing_token.clone(),
            n_rows: data.n_rows(),
            counts,
            bad_rates: set.parts().iter().map(|(n, d)| (n.to_string(), bad_rate(d.target()))).collect(),
        };
        write_json(self.paths.join(SPLIT_SUMMARY), &summary)?;
        artifacts.extend([PREPROCESS.to_string(), SPLIT_SUMMARY.to_string()]);

        let config_text = self.write_config()?;
        let mut manifest = RunManifest::new(cfg, &config_text);
        manifest.inputs.insert("data".into(), sha256_file(data_path)?);
        artifacts.push(RESOLVED_CONFIG.to_string());
        manifest.record(&self.paths, "split", &artifacts)?;
        manifest.save(&self.paths)?;
        log::info!(
            "split {} rows: train {}, test {}, out_of_sample {}, out_of_time {}, excluded {}",
            data.n_rows(),
            summary.counts["train"],
            summary.counts["test"],
            summary.counts["out_of_sample"],
            summary.counts["out_of_time"],
            summary.counts["excluded"]
        );
        Ok(summary)
    }

    /// Runs variable preselection on train.
    pub fn select(&self) -> Result<SelectionReport> {
        let mut manifest = self.manifest()?;
        manifest.require(&self.paths, "split")?;
        let (x, y) = self.part_matrix("train")?;
        let seed = rng::derive_seed(self.config.seed, &[SELECT_STREAM]);
        let report = select_features(&x, &y, &self.config.selection, seed)?;
        let survivors = report.survivors();
        if survivors.is_empty() {
            log::warn!("no feature survived selection; the feature list is empty");
        }
        for s in &report.stages {
            log::info!("selection stage {}: {} features", s.stage, s.count);
        }
        write_json(self.paths.join(SELECTION_REPORT), &report)?;
        let mut list = survivors.join("\n");
        if !list.is_empty() {
            list.push('\n');
        }
        write_text(self.paths.join(FEATURE_LIST), &list)?;
        manifest.record(&self.paths, "select", &[SELECTION_REPORT.into(), FEATURE_LIST.into()])?;
        manifest.save(&self.paths)?;
        Ok(report)
    }

    fn selected_features(&self, manifest: &RunManifest) -> Result<Vec<String>> {
        manifest.require(&self.paths, "select").map_err(|_| {
            Error::MissingArtifact("no feature list: run `select` or pass an explicit feature list".into())
        })?;
        let p = self.paths.join(FEATURE_LIST);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
    }

    /// Tunes and fits one family on train, saves it, then scores every split.
    pub fn train(&self, kind: ModelKind, features: Option<&[String]>) -> Result<TrainOutcome> {
        let cfg = &self.config;
        let mut manifest = self.manifest()?;
        manifest.require(&self.paths, "split")?;
        let features = match features {
            Some(f) => f.to_vec(),
            None => self.selected_features(&manifest)?,
        };
        if features.is_empty() {
            return Err(Error::InvalidParameter("the feature list is empty".into()));
        }
        let (x_all, y) = self.part_matrix("train")?;
        let x = x_all.select_columns(&features)?;

        // search trials are scored on a seeded holdout of train
        let mut rows: Vec<usize> = (0..x.n_rows()).collect();
        rows.shuffle(&mut rng::stream(cfg.seed, &[HOLDOUT_STREAM]));
        let n_valid = ((cfg.models.validation_fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        let (mut valid_rows, mut fit_rows) = (rows[..n_valid].to_vec(), rows[n_valid..].to_vec());
        valid_rows.sort_unstable();
        fit_rows.sort_unstable();
        let pick = |r: &[usize]| r.iter().map(|&i| y[i]).collect::<Vec<u8>>();
        let (x_fit, y_fit) = (x.select_rows(&fit_rows), pick(&fit_rows));
        let (x_valid, y_valid) = (x.select_rows(&valid_rows), pick(&valid_rows));

        let family = kind as u64;
        let base = ModelSpec::default_for(kind);
        let outcome = random_search(
            &cfg.space(kind),
            &base,
            (&x_fit, &y_fit),
            (&x_valid, &y_valid),
            cfg.models.budget,
            rng::derive_seed(cfg.seed, &[SEARCH_STREAM, family]),
        )?;
        log::info!(
            "{kind}: trial {} of {} selected (validation gini {:?})",
            outcome.best_index,
            cfg.models.budget,
            outcome.trials[outcome.best_index].valid_gini
        );

        let seed = rng::derive_seed(cfg.seed, &[REFIT_STREAM, family]);
        let clock = WallClock::new();
        let started = crate::metrics::Clock::now(&clock);
        let model = outcome.best_spec.fit(&x, &y, seed)?;
        let learn_time = crate::metrics::Clock::now(&clock).saturating_sub(started);
        let name = format!("{kind}_{}", features.len());
        let artifact = ModelArtifact::new(name.clone(), outcome.best_spec.clone(), model, seed);
        artifact.save(self.paths.join(&RunPaths::model(kind)))?;
        let search = SearchRecord {
            schema_version: SCHEMA_VERSION,
            model_kind: kind,
            budget: cfg.models.budget,
            best_index: outcome.best_index,
            best_config: outcome.best_spec,
            trials: outcome.trials.clone(),
        };
        write_json(self.paths.join(&RunPaths::search(kind)), &search)?;
        // the model is frozen on disk before any held-out part is read
        let frozen = sha256_file(self.paths.join(&RunPaths::model(kind)))?;

        let mut held_out = Vec::new();
        for part in &PARTS[1..] {
            let (m, t) = self.part_matrix(part)?;
            held_out.push((*part, m.select_columns(&features)?, t));
        }
        if sha256_file(self.paths.join(&RunPaths::model(kind)))? != frozen {
            return Err(Error::MissingArtifact(format!("model '{name}' changed during evaluation")));
        }
        let mut sets = vec![EvalSet {
            name: "train",
            x: &x,
            y: &y,
        }];
        sets.extend(held_out.iter().map(|(n, m, t)| EvalSet { name: n, x: m, y: t }));
        let report = evaluate(&name, &artifact, &sets, Some(learn_time), &clock)?;
        write_json(self.paths.join(&RunPaths::metrics(kind)), &report)?;
        write_text(
            self.paths.join(&RunPaths::timing(kind)),
            &format!(
                "learning_time_s,prediction_time_s\n{:.6},{:.6}\n",
                report.learn_time_s.unwrap_or(0.0),
                report.predict_time_s.unwrap_or(0.0)
            ),
        )?;
        manifest.record(
            &self.paths,
            &format!("train:{kind}"),
            &[RunPaths::model(kind), RunPaths::search(kind), RunPaths::metrics(kind)],
        )?;
        manifest.save(&self.paths)?;
        Ok(TrainOutcome {
            artifact,
            report,
            trials: outcome.trials,
        })
    }

    pub fn load_model(&self, kind: ModelKind) -> Result<ModelArtifact> {
        ModelArtifact::load(self.paths.join(&RunPaths::model(kind)))
    }

    /// Writes the requested explanations for one trained family. Returns the
    /// relative paths written.
    pub fn explain(&self, kind: ModelKind, what: &[ExplainKind]) -> Result<Vec<String>> {
        let cfg = &self.config.explain;
        let mut manifest = self.manifest()?;
        manifest.require(&self.paths, &format!("train:{kind}"))?;
        let model = self.load_model(kind)?;
        let features = model.feature_names().to_vec();
        let (train, _) = self.part_matrix("train")?;
        let (test, y_test) = self.part_matrix("test")?;
        for f in &features {
            if train.col_index(f).is_none() {
                return Err(Error::FeatureMismatch(f.clone()));
            }
        }
        for &i in &cfg.instances {
            if i >= test.n_rows() {
                return Err(Error::OutOfRange(format!(
                    "instance {i} outside the {} test rows",
                    test.n_rows()
                )));
            }
        }
        let profiled: Vec<String> = if cfg.features.is_empty() {
            features.clone()
        } else {
            for f in &cfg.features {
                if !features.contains(f) {
                    return Err(Error::FeatureMismatch(f.clone()));
                }
            }
            cfg.features.clone()
        };

        let mut rows: Vec<usize> = (0..train.n_rows()).collect();
        rows.shuffle(&mut rng::stream(self.config.seed, &[BACKGROUND_STREAM]));
        rows.truncate(cfg.background_rows.min(train.n_rows()));
        rows.sort_unstable();
        let background = train.select_rows(&rows);
        let grid = GridSpec::Quantiles(cfg.grid_points);
        let dir = RunPaths::explain_dir(kind);
        let mut written = Vec::new();
        let mut emit_json = |rel: String, value: &dyn erased::Json| -> Result<()> {
            write_text(self.paths.join(&rel), &value.json()?)?;
            written.push(rel);
            Ok(())
        };
        let mut charts: Vec<(String, String)> = Vec::new();

        for w in what {
            match w {
                ExplainKind::Pfi => {
                    let seed = rng::derive_seed(self.config.seed, &[PFI_STREAM]);
                    let r = explain::permutation_importance(&model, &test, &y_test, cfg.n_repeats, seed)?;
                    emit_json(format!("{dir}/pfi.json"), &r)?;
                    charts.push((format!("{dir}/pfi.svg"), svg::pfi_chart(&r)));
                }
                ExplainKind::Pdp => {
                    for f in &profiled {
                        let p = explain::partial_dependence(&model, &background, f, &grid)?;
                        emit_json(format!("{dir}/pdp_{}.json", sanitize(f)), &p)?;
                        let series = [svg::Series {
                            name: &model.name,
                            x: &p.grid,
                            y: &p.mean_prediction,
                        }];
                        charts.push((
                            format!("{dir}/pdp_{}.svg", sanitize(f)),
                            svg::line_chart(&format!("Partial dependence: {f}"), f, &series),
                        ));
                    }
                }
                ExplainKind::Cp => {
                    for &i in &cfg.instances {
                        for f in &profiled {
                            let points = grid.resolve(&background.column(background.col_index(f).expect("checked")))?;
                            let p = explain::ceteris_paribus_at(&model, test.names(), test.row(i), i, f, &points)?;
                            emit_json(format!("{dir}/cp_{i}_{}.json", sanitize(f)), &p)?;
                            let series = [svg::Series {
                                name: &model.name,
                                x: &p.grid,
                                y: &p.prediction,
                            }];
                            charts.push((
                                format!("{dir}/cp_{i}_{}.svg", sanitize(f)),
                                svg::line_chart(&format!("Ceteris paribus: test row {i}, {f}"), f, &series),
                            ));
                        }
                    }
                }
                ExplainKind::Bd => {
                    for &i in &cfg.instances {
                        let r = explain::break_down(&model, &background, test.row(i), &BdOrdering::Greedy)?;
                        emit_json(format!("{dir}/bd_{i}.json"), &r)?;
                        charts.push((format!("{dir}/bd_{i}.svg"), svg::waterfall(&r)));
                    }
                }
            }
        }
        for (rel, text) in &charts {
            write_text(self.paths.join(rel), text)?;
        }
        if what.contains(&ExplainKind::Pdp) {
            self.overlay_pdp(&profiled)?;
        }
        manifest.record(&self.paths, &format!("explain:{kind}"), &written)?;
        manifest.save(&self.paths)?;
        written.extend(charts.into_iter().map(|(rel, _)| rel));
        Ok(written)
    }

    /// One chart per feature overlaying the partial dependence of every
    /// family explained so far. All families share the background and grid.
    fn overlay_pdp(&self, features: &[String]) -> Result<()> {
        for f in features {
            let mut profiles = Vec::new();
            for kind in ModelKind::ALL {
                let p = self
                    .paths
                    .join(&format!("{}/pdp_{}.json", RunPaths::explain_dir(kind), sanitize(f)));
                if p.exists() {
                    let profile: explain::PdpProfile = read_json(&p)?;
                    profiles.push((kind.to_string(), profile));
                }
            }
            let series: Vec<svg::Series> = profiles
                .iter()
                .map(|(name, p)| svg::Series {
                    name,
                    x: &p.grid,
                    y: &p.mean_prediction,
                })
                .collect();
            write_text(
                self.paths.join(&format!("explain/pdp_{}.svg", sanitize(f))),
                &svg::line_chart(&format!("Partial dependence: {f}"), f, &series),
            )?;
        }
        Ok(())
    }

    /// Comparison table, dot-plot data and accept/reject decisions over every
    /// trained family.
    pub fn report(&self) -> Result<Vec<MetricReport>> {
        let mut manifest = self.manifest()?;
        let mut reports = Vec::new();
        for kind in ModelKind::ALL {
            if manifest.stage(&format!("train:{kind}")).is_none() {
                continue;
            }
            manifest.require(&self.paths, &format!("train:{kind}"))?;
            let mut r: MetricReport = read_json(self.paths.join(&RunPaths::metrics(kind)))?;
            r.validate()?;
            if let Ok(text) = std::fs::read_to_string(self.paths.join(&RunPaths::timing(kind))) {
                if let Some(line) = text.lines().nth(1) {
                    let mut it = line.split(',').map(|v| v.parse::<f64>().ok());
                    r.learn_time_s = it.next().flatten();
                    r.predict_time_s = it.next().flatten();
                }
            }
            reports.push(r);
        }
        if reports.is_empty() {
            return Err(Error::MissingArtifact("no trained models to report on".into()));
        }
        let decisions = reject_models(
            &reports,
            self.config.evaluation.min_gini,
            &self.config.evaluation.expert_rejected,
        )?;
        write_text(self.paths.join(TABLE), &comparison_table(&reports, &decisions))?;
        let dots = DotPlotData {
            schema_version: SCHEMA_VERSION,
            splits: PARTS.iter().map(|s| s.to_string()).collect(),
            models: reports
                .iter()
                .map(|r| DotPlotModel {
                    model: r.model_name.clone(),
                    gini: r.splits.iter().filter_map(|s| Some((s.split.clone(), s.gini?))).collect(),
                })
                .collect(),
        };
        write_json(self.paths.join(DOTS), &dots)?;
        write_json(
            self.paths.join(DECISIONS),
            &DecisionSet {
                schema_version: SCHEMA_VERSION,
                min_gini: self.config.evaluation.min_gini,
                decisions,
            },
        )?;
        manifest.record(&self.paths, "report", &[DOTS.into(), DECISIONS.into()])?;
        manifest.save(&self.paths)?;
        Ok(reports)
    }

    /// Every stage in order for the configured families.
    pub fn run_all(&self, data_path: &Path) -> Result<Vec<MetricReport>> {
        self.split(data_path)?;
        self.select()?;
        for &kind in &self.config.models.families {
            self.train(kind, None)?;
        }
        for &kind in &self.config.models.families {
            self.explain(kind, &ExplainKind::ALL)?;
        }
        self.report()
    }

    /// Scores a CSV with a saved model, applying this run's preprocessing.
    pub fn predict(&self, model_path: &Path, data_path: &Path) -> Result<Vec<f64>> {
        let manifest = self.manifest()?;
        manifest.require(&self.paths, "split")?;
        let model = ModelArtifact::load(model_path)?;
        let s = self.summary()?;
        let mut schema = s.schema.clone();
        // scoring data may lack the label and the date
        schema.infer_unlisted = true;
        let d = load_csv(data_path, &schema, &s.missing_token)?;
        let x = self.preprocessor()?.matrix(&d)?;
        model.predict(&x)
    }
}

/// Table of Gini per split, out-of-time K-S and timings, sorted by
/// out-of-time Gini (best first). Unavailable cells read `n/a`.
pub fn comparison_table(reports: &[MetricReport], decisions: &[ModelDecision]) -> String {
    let mut order: Vec<&MetricReport> = reports.iter().collect();
    order.sort_by(|a, b| {
        let (ga, gb) = (a.gini("out_of_time"), b.gini("out_of_time"));
        match (ga, gb) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| a.model_name.cmp(&b.model_name))
    });
    let cell = |v: Option<f64>, digits: usize| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"));
    let mut out = String::from(
        "model,gini_train,gini_test,gini_out_of_sample,gini_out_of_time,ks_out_of_time,learning_time_s,prediction_time_s,accepted\n",
    );
    for r in order {
        let accepted = decisions
            .iter()
            .find(|d| d.model_name == r.model_name)
            .map_or("n/a", |d| if d.accepted { "yes" } else { "no" });
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.model_name,
            cell(r.gini("train"), 4),
            cell(r.gini("test"), 4),
            cell(r.gini("out_of_sample"), 4),
            cell(r.gini("out_of_time"), 4),
            cell(r.split("out_of_time").and_then(|s| s.ks), 4),
            cell(r.learn_time_s, 3),
            cell(r.predict_time_s, 3),
            accepted
        ));
    }
    out
}

mod erased {
    use serde::Serialize;

    use crate::error::Result;

    /// Object-safe JSON rendering for heterogeneous explainer outputs.
    pub trait Json {
        fn json(&self) -> Result<String>;
    }

    impl<T: Serialize> Json for T {
        fn json(&self) -> Result<String> {
            crate::io::to_json_string(self)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SplitMetrics;

    fn report(name: &str, oot: Option<f64>) -> MetricReport {
        let split = |s: &str, g: Option<f64>| SplitMetrics {
            split: s.into(),
            n_rows: 10,
            gini: g,
            auc: g.map(|g| (g + 1.0) / 2.0),
            ks: g.map(|_| 0.4),
            error: g.is_none().then(|| "OneClassOnly".to_string()),
        };
        MetricReport {
            schema_version: SCHEMA_VERSION,
            model_name: name.into(),
            splits: vec![split("train", Some(0.8)), split("test", Some(0.7)), split("out_of_time", oot)],
            learn_time_s: Some(1.5),
            predict_time_s: None,
        }
    }

    #[test]
    fn table_sorted_by_oot_with_na_cells() {
        let t = comparison_table(&[report("a", Some(0.5)), report("b", None), report("c", Some(0.6))], &[]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("c,"));
        assert!(lines[2].starts_with("a,"));
        assert!(lines[3].starts_with("b,0.8000,0.7000,n/a,n/a,n/a,1.500,n/a"));
    }

    #[test]
    fn staleness() {
        assert!(depends_on("train:gbm", "split"));
        assert!(depends_on("explain:gbm", "train:gbm"));
        assert!(!depends_on("explain:rf", "train:gbm"));
        assert!(depends_on("report", "select"));
        assert!(!depends_on("split", "select"));
    }
}
