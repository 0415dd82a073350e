//! Config-driven end-to-end pipeline: load data, build features, then for
//! each of the six dependent variables run backward-stepwise selection,
//! influence diagnostics, the hub-dummy refit, and cross-validation, and
//! write the report bundle.
//!
//! Two runs with identical config and inputs produce byte-identical output
//! bundles: every map iterated into an output is ordered, floats are
//! written deterministically, and the fold shuffle is seeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    add_hub_dummy, flag_influential, influence_measures_labeled, save_influence_csv, FlagThresholds,
};
use crate::error::{Error, Result};
use crate::features::{
    assemble_feature_matrix, save_scatter_csv, scatterplot_matrix_data, transform, CatchmentSpec,
    FeatureMatrix, Transform, COLUMN_NAMES,
};
use crate::geo::LatLon;
use crate::ingest::{
    aggregate_ridership, fmt_f64, load_edges, load_pois, load_population_grid, load_ridership,
    load_stations, ResponseKind, RidershipSummary, StationTable, WeekdaySet,
};
use crate::network::{betweenness_centrality, build_graph, degree_centrality};
use crate::regress::OlsFit;
use crate::report::{
    render_text, to_json, CvReport, InfluenceFlag, ModelReport, SelectionTraceReport, TraceBlock,
};
use crate::select::{backward_stepwise, cross_validated_r2, SelectionTrace, DEFAULT_CV_SEED};

/// Flat JSON configuration of one pipeline run. Relative input paths are
/// resolved against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub stations: PathBuf,
    pub edges: PathBuf,
    pub pois: PathBuf,
    pub population: PathBuf,
    pub ridership: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_radius_m")]
    pub radius_m: f64,
    /// City-center coordinates; defaults to the Taipei City Government.
    #[serde(default = "default_center_lat")]
    pub center_lat: f64,
    #[serde(default = "default_center_lon")]
    pub center_lon: f64,
    #[serde(default = "default_weekdays")]
    pub weekday_set: Vec<String>,
    /// Reference date for days-since-opening.
    #[serde(default = "default_reference_date")]
    pub reference_date: NaiveDate,
    /// Per-column transforms applied to the scatterplot export only; model
    /// fits always use raw scales so coefficients stay interpretable.
    #[serde(default)]
    pub transforms: BTreeMap<String, Transform>,
    /// Overrides the stations file's is_hub flags when present.
    #[serde(default)]
    pub hub_station_ids: Option<Vec<String>>,
    /// Candidate explanatory variables; all fifteen columns when absent.
    #[serde(default)]
    pub candidate_variables: Option<Vec<String>>,
    #[serde(default = "default_cv_k")]
    pub cv_k: usize,
    #[serde(default = "default_cv_seed")]
    pub cv_seed: u64,
    /// Flagging cutoffs; conventional defaults (4/n, 2, 2(k+1)/n) apply
    /// where absent.
    #[serde(default)]
    pub cooks_threshold: Option<f64>,
    #[serde(default)]
    pub abs_t_threshold: Option<f64>,
    #[serde(default)]
    pub leverage_threshold: Option<f64>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_radius_m() -> f64 {
    500.0
}
fn default_center_lat() -> f64 {
    25.0375
}
fn default_center_lon() -> f64 {
    121.5637
}
fn default_weekdays() -> Vec<String> {
    ["Mon", "Tue", "Wed", "Thu", "Fri"].iter().map(|s| s.to_string()).collect()
}
fn default_reference_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 10, 15).expect("valid date")
}
fn default_cv_k() -> usize {
    10
}
fn default_cv_seed() -> u64 {
    DEFAULT_CV_SEED
}

impl PipelineConfig {
    /// Load from a JSON file and resolve relative paths against its parent
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        if let Some(dir) = path.parent() {
            config.resolve_relative_to(dir);
        }
        Ok(config)
    }

    /// Prefix relative paths with `dir`.
    pub fn resolve_relative_to(&mut self, dir: &Path) {
        for p in [
            &mut self.stations,
            &mut self.edges,
            &mut self.pois,
            &mut self.population,
            &mut self.ridership,
            &mut self.out_dir,
        ] {
            if p.is_relative() {
                *p = dir.join(&p);
            }
        }
    }

    pub fn center(&self) -> LatLon {
        LatLon::new(self.center_lat, self.center_lon)
    }

    pub fn weekdays(&self) -> Result<WeekdaySet> {
        WeekdaySet::from_names(&self.weekday_set)
    }

    /// The candidate variable list, defaulting to every feature column.
    pub fn candidates(&self) -> Vec<String> {
        match &self.candidate_variables {
            Some(v) => v.clone(),
            None => COLUMN_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Check every config invariant, reporting all violations at once. An empty
/// list means the config is valid.
pub fn validate_config(config: &PipelineConfig) -> Vec<String> {
    let mut errors = Vec::new();

    if !(config.radius_m > 0.0) {
        errors.push(format!("radius_m must be positive, got {}", config.radius_m));
    }
    if config.cv_k < 2 {
        errors.push(format!("cv_k must be at least 2, got {}", config.cv_k));
    }
    if !(-90.0..=90.0).contains(&config.center_lat) {
        errors.push(format!("center_lat {} outside [-90, 90]", config.center_lat));
    }
    if !(-180.0..=180.0).contains(&config.center_lon) {
        errors.push(format!("center_lon {} outside [-180, 180]", config.center_lon));
    }

    let paths = [
        ("stations", &config.stations),
        ("edges", &config.edges),
        ("pois", &config.pois),
        ("population", &config.population),
        ("ridership", &config.ridership),
        ("out_dir", &config.out_dir),
    ];
    for (i, (name_a, a)) in paths.iter().enumerate() {
        for (name_b, b) in paths.iter().skip(i + 1) {
            if a == b {
                errors.push(format!("paths '{name_a}' and '{name_b}' are identical: {}", a.display()));
            }
        }
    }

    match WeekdaySet::from_names(&config.weekday_set) {
        Ok(set) => {
            let days = set.count();
            if days == 0 || days == 7 {
                errors.push("weekday_set must be a proper non-empty subset of the week".to_string());
            }
        }
        Err(e) => errors.push(e.to_string()),
    }

    for name in config.transforms.keys() {
        if !COLUMN_NAMES.contains(&name.as_str()) {
            errors.push(format!("transforms names unknown column '{name}'"));
        }
    }

    if let Some(vars) = &config.candidate_variables {
        if vars.is_empty() {
            errors.push("candidate_variables must not be empty when given".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for v in vars {
            if !COLUMN_NAMES.contains(&v.as_str()) {
                errors.push(format!("candidate variable '{v}' is not a feature column"));
            }
            if !seen.insert(v) {
                errors.push(format!("candidate variable '{v}' listed twice"));
            }
        }
    }

    for (name, th) in [
        ("cooks_threshold", config.cooks_threshold),
        ("abs_t_threshold", config.abs_t_threshold),
        ("leverage_threshold", config.leverage_threshold),
    ] {
        if let Some(v) = th {
            if v.is_nan() || v <= 0.0 {
                errors.push(format!("{name} must be positive, got {v}"));
            }
        }
    }

    errors
}

/// What a run produced: output files (relative to out_dir, '/'-separated)
/// and deterministic warnings.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    status: &'a str,
    failed_stage: Option<String>,
    files: &'a [String],
    warnings: &'a [String],
}

/// Run the full pipeline described by the config.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary> {
    run_internal(config, false)
}

/// Run only the data/feature stages and write the shared exports.
pub fn run_features(config: &PipelineConfig) -> Result<RunSummary> {
    run_internal(config, true)
}

fn run_internal(config: &PipelineConfig, features_only: bool) -> Result<RunSummary> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }

    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::Io { path: config.out_dir.clone(), source: e })?;

    let mut files: Vec<String> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    let result = run_stages(config, features_only, &mut files, &mut warnings);

    let (status, failed_stage) = match &result {
        Ok(()) => ("complete", None),
        Err(e) => ("failed", e.stage().map(|s| s.to_string()).or(Some("unknown".to_string()))),
    };
    let manifest = Manifest { status, failed_stage, files: &files, warnings: &warnings };
    let manifest_json = to_json(&manifest)?;
    let manifest_path = config.out_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest_json)
        .map_err(|e| Error::Io { path: manifest_path, source: e })?;

    result.map(|()| RunSummary { out_dir: config.out_dir.clone(), files, warnings })
}

fn run_stages(
    config: &PipelineConfig,
    features_only: bool,
    files: &mut Vec<String>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    // Ingest.
    let stations = load_stations(&config.stations).map_err(|e| e.in_stage("ingest/stations"))?;
    let edges = load_edges(&config.edges, &stations).map_err(|e| e.in_stage("ingest/edges"))?;
    let pois = load_pois(&config.pois).map_err(|e| e.in_stage("ingest/pois"))?;
    let grid = load_population_grid(&config.population).map_err(|e| e.in_stage("ingest/population"))?;
    let ridership = load_ridership(&config.ridership).map_err(|e| e.in_stage("ingest/ridership"))?;

    let weekday_set = config.weekdays().map_err(|e| e.in_stage("ingest/aggregate"))?;
    let summary = aggregate_ridership(&ridership, &weekday_set).map_err(|e| e.in_stage("ingest/aggregate"))?;
    for s in &stations.rows {
        if summary.get(&s.station_id).is_none() {
            return Err(Error::Data(format!("station '{}' has no ridership records", s.station_id))
                .in_stage("ingest/aggregate"));
        }
    }
    for r in &summary.rows {
        if stations.index_of(&r.station_id).is_none() {
            return Err(Error::Data(format!("ridership references unknown station '{}'", r.station_id))
                .in_stage("ingest/aggregate"));
        }
    }

    // Network.
    let graph = build_graph(&stations, &edges);
    let isolated = graph.isolated();
    if !isolated.is_empty() {
        warnings.push(format!("isolated stations (no track segments): {}", isolated.join(", ")));
    }
    let degree = degree_centrality(&graph).map_err(|e| e.in_stage("network/degree"))?;
    let betweenness = betweenness_centrality(&graph).map_err(|e| e.in_stage("network/betweenness"))?;

    // Features.
    let spec = CatchmentSpec::new(config.radius_m).map_err(|e| e.in_stage("features/assemble"))?;
    let assembly = assemble_feature_matrix(
        &stations,
        &pois,
        &grid,
        &degree,
        &betweenness,
        config.center(),
        &spec,
        config.reference_date,
    )
    .map_err(|e| e.in_stage("features/assemble"))?;
    warnings.extend(assembly.warnings.iter().cloned());
    let mut matrix = assembly.matrix;
    if let Some(hub_ids) = &config.hub_station_ids {
        matrix = add_hub_dummy(&matrix, hub_ids).map_err(|e| e.in_stage("features/hub_dummy"))?;
    }

    // Shared exports.
    write_shared_exports(config, &matrix, &summary, &stations, &degree, &betweenness, files)?;

    if features_only {
        return Ok(());
    }

    // Per-model stages.
    for kind in ResponseKind::ALL {
        run_model(config, kind, &stations, &matrix, &summary, files)?;
    }
    Ok(())
}

fn write_shared_exports(
    config: &PipelineConfig,
    matrix: &FeatureMatrix,
    summary: &RidershipSummary,
    stations: &StationTable,
    degree: &crate::network::CentralityVector,
    betweenness: &crate::network::CentralityVector,
    files: &mut Vec<String>,
) -> Result<()> {
    let out = &config.out_dir;

    matrix
        .save_csv(&out.join("features.csv"))
        .map_err(|e| e.in_stage("export/features"))?;
    files.push("features.csv".to_string());

    matrix
        .save_summary_csv(&out.join("summary.csv"))
        .map_err(|e| e.in_stage("export/summary"))?;
    files.push("summary.csv".to_string());

    let path = out.join("centralities.csv");
    let mut w = csv::WriterBuilder::new()
        .from_path(&path)
        .map_err(|e| Error::parse(&path, None, e.to_string()).in_stage("export/centralities"))?;
    w.write_record(["station_id", "degree", "betweenness"])
        .map_err(|e| Error::parse(&path, None, e.to_string()).in_stage("export/centralities"))?;
    for s in &stations.rows {
        w.write_record([
            s.station_id.as_str(),
            &fmt_f64(degree.get(&s.station_id).unwrap_or(f64::NAN)),
            &fmt_f64(betweenness.get(&s.station_id).unwrap_or(f64::NAN)),
        ])
        .map_err(|e| Error::parse(&path, None, e.to_string()).in_stage("export/centralities"))?;
    }
    w.flush().map_err(|e| Error::Io { path, source: e })?;
    files.push("centralities.csv".to_string());

    let scatter_matrix = transform(matrix, &config.transforms).map_err(|e| e.in_stage("features/transform"))?;
    let rows = scatterplot_matrix_data(&scatter_matrix, summary).map_err(|e| e.in_stage("export/scatter"))?;
    save_scatter_csv(&rows, &out.join("scatter_data.csv")).map_err(|e| e.in_stage("export/scatter"))?;
    files.push("scatter_data.csv".to_string());

    Ok(())
}

fn run_model(
    config: &PipelineConfig,
    kind: ResponseKind,
    stations: &StationTable,
    matrix: &FeatureMatrix,
    summary: &RidershipSummary,
    files: &mut Vec<String>,
) -> Result<()> {
    let model_dir_name = format!("model_{}", kind.name().to_lowercase());
    let stage = |s: &str| format!("{model_dir_name}/{s}");
    let dir = config.out_dir.join(&model_dir_name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;

    let y = summary
        .response(stations, kind)
        .map_err(|e| e.in_stage(&stage("response")))?;

    let candidates = config.candidates();

    // Pass 1: stepwise without the hub dummy; its fit is what the influence
    // analysis examines.
    let base_vars: Vec<String> = candidates.iter().filter(|v| *v != "Trans_hub").cloned().collect();
    let base_design = matrix.design(&base_vars).map_err(|e| e.in_stage(&stage("stepwise_base")))?;
    let base_trace = backward_stepwise(&base_design, &y).map_err(|e| e.in_stage(&stage("stepwise_base")))?;

    let thresholds = resolve_thresholds(config, &base_trace.final_fit);
    let mut influence = influence_measures_labeled(&base_trace.final_fit, &stations.ids())
        .map_err(|e| e.in_stage(&stage("influence")))?;
    let flagged = flag_influential(&mut influence, &thresholds);
    save_influence_csv(&influence, &dir.join("influence.csv")).map_err(|e| e.in_stage(&stage("influence")))?;
    files.push(format!("{model_dir_name}/influence.csv"));

    // Pass 2: stepwise with the hub dummy among the candidates.
    let hub = matrix.column("Trans_hub").expect("Trans_hub column");
    let hub_constant = hub.values.iter().all(|&v| v == hub.values[0]);
    let full_vars: Vec<String> = if hub_constant {
        base_vars.clone()
    } else if candidates.iter().any(|v| v == "Trans_hub") {
        candidates.clone()
    } else {
        let mut v = candidates.clone();
        v.push("Trans_hub".to_string());
        v
    };
    let full_design = matrix.design(&full_vars).map_err(|e| e.in_stage(&stage("stepwise")))?;
    let final_trace = backward_stepwise(&full_design, &y).map_err(|e| e.in_stage(&stage("stepwise")))?;

    // Cross-validate the selected model.
    let cv_design = matrix
        .design(&final_trace.final_variables)
        .map_err(|e| e.in_stage(&stage("cv")))?;
    let cv = cross_validated_r2(&cv_design, &y, config.cv_k, config.cv_seed)
        .map_err(|e| e.in_stage(&stage("cv")))?;

    // Reports.
    let trace_report = SelectionTraceReport {
        initial: TraceBlock::from_trace(&base_trace),
        final_: TraceBlock::from_trace(&final_trace),
    };
    write_file(&dir.join("selection_trace.json"), &to_json(&trace_report)?, &stage("report"))?;
    files.push(format!("{model_dir_name}/selection_trace.json"));

    write_file(&dir.join("cv.json"), &to_json(&CvReport::new(&cv))?, &stage("report"))?;
    files.push(format!("{model_dir_name}/cv.json"));

    let influence_flags: Vec<InfluenceFlag> = influence
        .rows
        .iter()
        .filter(|r| r.flagged)
        .map(|r| InfluenceFlag { station_id: r.label.clone(), reasons: r.reasons.clone() })
        .collect();
    debug_assert_eq!(influence_flags.len(), flagged.len());
    let report = ModelReport::new(kind.name(), &final_trace.final_fit, &cv, influence_flags);
    write_file(&dir.join("report.json"), &to_json(&report)?, &stage("report"))?;
    files.push(format!("{model_dir_name}/report.json"));
    write_file(&dir.join("report.txt"), &render_text(&report), &stage("report"))?;
    files.push(format!("{model_dir_name}/report.txt"));

    Ok(())
}

fn resolve_thresholds(config: &PipelineConfig, fit: &OlsFit) -> FlagThresholds {
    let conventional = FlagThresholds::conventional(fit.n(), fit.k());
    FlagThresholds {
        cooks: config.cooks_threshold.unwrap_or(conventional.cooks),
        abs_t: config.abs_t_threshold.unwrap_or(conventional.abs_t),
        leverage: config.leverage_threshold.unwrap_or(conventional.leverage),
    }
}

fn write_file(path: &Path, content: &str, stage: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Io { path: path.into(), source: e }.in_stage(stage))
}

/// Trace of a model's selection for external inspection.
pub fn trace_to_report(initial: &SelectionTrace, final_: &SelectionTrace) -> SelectionTraceReport {
    SelectionTraceReport {
        initial: TraceBlock::from_trace(initial),
        final_: TraceBlock::from_trace(final_),
    }
}
