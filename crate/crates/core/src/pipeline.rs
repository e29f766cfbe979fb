//! The hybrid pipeline: scale, information-gain filter, wrapper search on
//! the filtered subspace, final evaluation, report assembly.
//!
//! An experiment is one (dataset, method, seed list) cell. Methods cover the
//! plain baselines (no selection, filter only, each wrapper alone) and the
//! hybrid filter-then-wrapper combinations. Every row of the report derives
//! all of its randomness from that row's seed, so a repeated run reproduces
//! the report body byte for byte regardless of thread count.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{self, Evaluator, FitnessSpec};
use crate::dataset::{Dataset, FeatureMask, LabelColumn};
use crate::error::{Error, Result};
use crate::gasearch::{self, GaParams};
use crate::igfilter::{self, IgRanking};
use crate::swarm::{self, trace_to_csv, SwarmParams, TraceRow, Variant};

/// Feature-selection method of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    /// Evaluate the full feature set, no selection.
    None,
    /// Information-gain filter only.
    Ig,
    /// Genetic algorithm wrapper on the full space.
    Ga,
    /// Binary PSO wrapper on the full space.
    Bpso,
    /// Improved binary PSO wrapper on the full space.
    Ibpso,
    IgGa,
    IgBpso,
    IgIbpso,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::None,
        Method::Ig,
        Method::Ga,
        Method::Bpso,
        Method::Ibpso,
        Method::IgGa,
        Method::IgBpso,
        Method::IgIbpso,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::None => "NONE",
            Method::Ig => "IG",
            Method::Ga => "GA",
            Method::Bpso => "BPSO",
            Method::Ibpso => "IBPSO",
            Method::IgGa => "IG_GA",
            Method::IgBpso => "IG_BPSO",
            Method::IgIbpso => "IG_IBPSO",
        }
    }

    pub fn uses_filter(&self) -> bool {
        matches!(
            self,
            Method::Ig | Method::IgGa | Method::IgBpso | Method::IgIbpso
        )
    }

    fn wrapper(&self) -> Option<WrapperKind> {
        match self {
            Method::None | Method::Ig => None,
            Method::Ga | Method::IgGa => Some(WrapperKind::Ga),
            Method::Bpso | Method::IgBpso => Some(WrapperKind::Swarm(Variant::Bpso)),
            Method::Ibpso | Method::IgIbpso => Some(WrapperKind::Swarm(Variant::Ibpso)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum WrapperKind {
    Ga,
    Swarm(Variant),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Filter-stage settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgConfig {
    pub bins: usize,
    pub threshold: f64,
    /// When nothing clears the threshold, keep this many top-ranked
    /// features instead of aborting the run.
    pub fallback_top_m: usize,
}

impl Default for IgConfig {
    fn default() -> Self {
        IgConfig {
            bins: 10,
            threshold: 0.0,
            fallback_top_m: 50,
        }
    }
}

/// One (dataset, method) experiment over a list of seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub label_column: LabelColumn,
    pub method: Method,
    pub fitness: FitnessSpec,
    pub ig: IgConfig,
    pub swarm: SwarmParams,
    pub ga: GaParams,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// TOML-facing configuration: one dataset, several methods.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub dataset: PathBuf,
    pub label_column: LabelColumn,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub fitness: FitnessSpec,
    pub ig: IgConfig,
    pub swarm: SwarmParams,
    pub ga: GaParams,
    /// Default worker count; a CLI flag takes precedence.
    pub threads: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dataset: PathBuf::new(),
            label_column: LabelColumn::default(),
            methods: vec![Method::Ig, Method::IgBpso, Method::IgIbpso],
            seeds: vec![1, 2, 3],
            output_dir: PathBuf::from("out"),
            fitness: FitnessSpec::default(),
            ig: IgConfig::default(),
            swarm: SwarmParams::default(),
            ga: GaParams::default(),
            threads: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("dataset path is required".to_string()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods list is empty".to_string()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".to_string()));
        }
        Ok(())
    }

    pub fn experiment(&self, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset_path: self.dataset.clone(),
            label_column: self.label_column.clone(),
            method,
            fitness: self.fitness,
            ig: self.ig,
            swarm: self.swarm,
            ga: self.ga,
            seeds: self.seeds.clone(),
            output_dir: self.output_dir.clone(),
        }
    }
}

/// Output of the filter stage: the surviving columns as a dataset plus the
/// ranking and the kept original indices (ascending) for lifting masks back.
#[derive(Debug, Clone)]
pub struct FilterStage {
    pub reduced: Dataset,
    pub ranking: IgRanking,
    pub kept: Vec<usize>,
}

/// Filter a scaled dataset down to the columns that clear the IG threshold.
/// Errors with [`Error::EmptyFilterResult`] when nothing survives.
pub fn run_filter_stage(d: &Dataset, cfg: &IgConfig) -> Result<FilterStage> {
    let ranking = igfilter::rank_and_filter(d, cfg.bins, cfg.threshold)?;
    if ranking.selected().is_empty() {
        return Err(Error::EmptyFilterResult);
    }
    let mut kept = ranking.selected().to_vec();
    kept.sort_unstable();
    let reduced = d.apply_mask(&FeatureMask::from_indices(d.n_features(), &kept))?;
    Ok(FilterStage {
        reduced,
        ranking,
        kept,
    })
}

/// Like [`run_filter_stage`], but an empty survivor set falls back to the
/// top-m ranked features (with a warning) instead of erroring. The boolean
/// reports whether the fallback fired.
pub fn run_filter_stage_with_fallback(d: &Dataset, cfg: &IgConfig) -> Result<(FilterStage, bool)> {
    match run_filter_stage(d, cfg) {
        Ok(stage) => Ok((stage, false)),
        Err(Error::EmptyFilterResult) => {
            let ranking = igfilter::rank_and_filter(d, cfg.bins, cfg.threshold)?;
            let m = cfg.fallback_top_m.max(1).min(d.n_features());
            log::warn!(
                "no feature passed the IG threshold {}; keeping the top {m} by gain",
                cfg.threshold
            );
            let mut kept = ranking.top_m(m);
            kept.sort_unstable();
            let reduced = d.apply_mask(&FeatureMask::from_indices(d.n_features(), &kept))?;
            Ok((
                FilterStage {
                    reduced,
                    ranking,
                    kept,
                },
                true,
            ))
        }
        Err(other) => Err(other),
    }
}

/// Best mask found by the wrapper stage, in the reduced feature space.
#[derive(Debug, Clone)]
pub struct WrapperOutcome {
    pub mask: FeatureMask,
    pub fitness: f64,
    /// Per-iteration trace; absent for the no-search methods.
    pub trace: Option<Vec<TraceRow>>,
}

/// Dispatch the wrapper search (or the no-op evaluation for NONE / IG) on a
/// reduced dataset. All randomness derives from `seed`.
pub fn run_wrapper_stage(
    reduced: &Dataset,
    method: Method,
    fit: &FitnessSpec,
    swarm_params: SwarmParams,
    ga_params: GaParams,
    seed: u64,
) -> Result<WrapperOutcome> {
    if reduced.n_features() == 0 {
        return Err(Error::InvalidParam(
            "wrapper stage on an empty feature space".to_string(),
        ));
    }
    let spec = fit.with_seed(seed);
    let dim = reduced.n_features();
    match method.wrapper() {
        None => {
            let mask = FeatureMask::ones(dim);
            let fitness = classify::fitness(reduced, &mask, &spec)?;
            Ok(WrapperOutcome {
                mask,
                fitness,
                trace: None,
            })
        }
        Some(kind) => {
            // masks generated by the search always match `dim`, and the
            // evaluators were validated up front, so fitness cannot fail
            let objective = |mask: &FeatureMask| {
                classify::fitness(reduced, mask, &spec).expect("fitness on validated inputs")
            };
            let run = match kind {
                WrapperKind::Ga => gasearch::run_ga(dim, ga_params.with_seed(seed), objective)?,
                WrapperKind::Swarm(variant) => {
                    swarm::run(dim, swarm_params.with_variant(variant), seed, objective)?
                }
            };
            Ok(WrapperOutcome {
                mask: run.best_position,
                fitness: run.best_fitness,
                trace: Some(run.trace),
            })
        }
    }
}

/// One report line: a single (dataset, method, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub seed: u64,
    pub accuracy: f64,
    pub n_selected: usize,
    pub runtime_seconds: f64,
}

/// Per-seed rows plus best/median/mean aggregates for one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: Method,
    pub rows: Vec<ReportRow>,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl ExperimentReport {
    pub fn mean_accuracy(&self) -> f64 {
        self.rows.iter().map(|r| r.accuracy).sum::<f64>() / self.rows.len() as f64
    }

    pub fn median_accuracy(&self) -> f64 {
        median(self.rows.iter().map(|r| r.accuracy).collect())
    }

    pub fn mean_n_selected(&self) -> f64 {
        self.rows.iter().map(|r| r.n_selected as f64).sum::<f64>() / self.rows.len() as f64
    }

    pub fn median_n_selected(&self) -> f64 {
        median(self.rows.iter().map(|r| r.n_selected as f64).collect())
    }

    pub fn mean_runtime(&self) -> f64 {
        self.rows.iter().map(|r| r.runtime_seconds).sum::<f64>() / self.rows.len() as f64
    }

    /// Row with the highest accuracy; ties prefer fewer selected features,
    /// then the lowest seed.
    pub fn best_row(&self) -> &ReportRow {
        self.rows
            .iter()
            .min_by(|a, b| {
                b.accuracy
                    .partial_cmp(&a.accuracy)
                    .expect("finite")
                    .then(a.n_selected.cmp(&b.n_selected))
                    .then(a.seed.cmp(&b.seed))
            })
            .expect("report has at least one row")
    }

    /// Machine-readable report: data rows then mean/median/best aggregate
    /// rows. `include_runtime` off yields the deterministic body.
    pub fn to_csv(&self, include_runtime: bool) -> String {
        let mut out = String::from("dataset,method,seed,accuracy,n_selected");
        if include_runtime {
            out.push_str(",runtime_seconds");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.9},{}",
                row.dataset, row.method, row.seed, row.accuracy, row.n_selected
            ));
            if include_runtime {
                out.push_str(&format!(",{:.3}", row.runtime_seconds));
            }
            out.push('\n');
        }
        let best = self.best_row();
        let aggregates: [(&str, f64, String, f64); 3] = [
            (
                "mean",
                self.mean_accuracy(),
                format!("{:.1}", self.mean_n_selected()),
                self.mean_runtime(),
            ),
            (
                "median",
                self.median_accuracy(),
                format!("{:.1}", self.median_n_selected()),
                self.mean_runtime(),
            ),
            (
                "best",
                best.accuracy,
                best.n_selected.to_string(),
                best.runtime_seconds,
            ),
        ];
        for (label, accuracy, n_selected, runtime) in aggregates {
            out.push_str(&format!(
                "{},{},{},{:.9},{}",
                self.dataset, self.method, label, accuracy, n_selected
            ));
            if include_runtime {
                out.push_str(&format!(",{runtime:.3}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Everything one experiment produced, before any file is written.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub traces: Vec<(u64, Vec<TraceRow>)>,
    pub ranking: Option<IgRanking>,
    /// Original-order feature names, for the ranking dump.
    pub feature_names: Vec<String>,
    pub selected_names: Vec<(u64, Vec<String>)>,
    pub filter_fell_back: bool,
}

/// Run one experiment against an already loaded dataset. The input is
/// scaled here (scaling is idempotent, so pre-scaled data is fine).
pub fn run_experiment_on(
    input: &Dataset,
    dataset_name: &str,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("seeds list is empty".to_string()));
    }
    let scaled = input.min_max_scale();
    if cfg.fitness.evaluator == Evaluator::SvmOvrKfold
        && (cfg.fitness.k_folds < 2 || cfg.fitness.k_folds > scaled.n_samples()) {
            return Err(Error::Config(format!(
                "k_folds {} incompatible with {} samples",
                cfg.fitness.k_folds,
                scaled.n_samples()
            )));
        }

    let (working, kept, ranking, fell_back) = if cfg.method.uses_filter() {
        let (stage, fell_back) = run_filter_stage_with_fallback(&scaled, &cfg.ig)?;
        (stage.reduced, stage.kept, Some(stage.ranking), fell_back)
    } else {
        (
            scaled.clone(),
            (0..scaled.n_features()).collect(),
            None,
            false,
        )
    };

    let mut rows = Vec::with_capacity(cfg.seeds.len());
    let mut traces = Vec::new();
    let mut selected_names = Vec::new();
    for &seed in &cfg.seeds {
        let started = Instant::now();
        let outcome =
            run_wrapper_stage(&working, cfg.method, &cfg.fitness, cfg.swarm, cfg.ga, seed)
                .map_err(|e| {
                    Error::Config(format!(
                        "{}/{}/seed {}: {e}",
                        dataset_name, cfg.method, seed
                    ))
                })?;
        let runtime_seconds = started.elapsed().as_secs_f64();
        let lifted = outcome.mask.lift_to(&kept, scaled.n_features());
        rows.push(ReportRow {
            dataset: dataset_name.to_string(),
            method: cfg.method,
            seed,
            accuracy: outcome.fitness,
            n_selected: lifted.popcount(),
            runtime_seconds,
        });
        selected_names.push((
            seed,
            lifted
                .indices()
                .iter()
                .map(|&j| scaled.feature_names()[j].clone())
                .collect(),
        ));
        if let Some(trace) = outcome.trace {
            traces.push((seed, trace));
        }
    }

    Ok(ExperimentOutcome {
        report: ExperimentReport {
            dataset: dataset_name.to_string(),
            method: cfg.method,
            rows,
        },
        traces,
        ranking,
        feature_names: scaled.feature_names().to_vec(),
        selected_names,
        filter_fell_back: fell_back,
    })
}

fn dataset_name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write one experiment's report, traces, ranking dump and selected-feature
/// lists under the configured output directory.
pub fn write_outcome_files(outcome: &ExperimentOutcome, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let method = cfg.method.name();
    write_file(
        &cfg.output_dir.join(format!("report_{method}.csv")),
        &outcome.report.to_csv(true),
    )?;
    if let Some(ranking) = &outcome.ranking {
        let mut buf = Vec::new();
        ranking.write_csv(&outcome.feature_names, &mut buf)?;
        write_file(
            &cfg.output_dir.join("ranking.csv"),
            &String::from_utf8(buf).expect("csv dump is utf-8"),
        )?;
    }
    for (seed, trace) in &outcome.traces {
        write_file(
            &cfg.output_dir.join(format!("trace_{method}_seed{seed}.csv")),
            &trace_to_csv(trace),
        )?;
    }
    for (seed, names) in &outcome.selected_names {
        write_file(
            &cfg.output_dir.join(format!("selected_{method}_seed{seed}.txt")),
            &(names.join("\n") + "\n"),
        )?;
    }
    Ok(())
}

/// Load the configured dataset, run the experiment and write its files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let raw = Dataset::load_csv(&cfg.dataset_path, &cfg.label_column)?;
    let name = dataset_name_of(&cfg.dataset_path);
    let outcome = run_experiment_on(&raw, &name, cfg)?;
    write_outcome_files(&outcome, cfg)?;
    Ok(outcome.report)
}

/// Run every configured method and write the combined report files.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let raw = Dataset::load_csv(&cfg.dataset, &cfg.label_column)?;
    let name = dataset_name_of(&cfg.dataset);
    let mut reports = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let experiment = cfg.experiment(method);
        let outcome = run_experiment_on(&raw, &name, &experiment)?;
        write_outcome_files(&outcome, &experiment)?;
        reports.push(outcome.report);
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    write_file(
        &cfg.output_dir.join("report.csv"),
        &suite_csv(&reports, true),
    )?;
    write_file(&cfg.output_dir.join("report.txt"), &suite_text(&reports))?;
    Ok(reports)
}

/// Concatenated CSV over several method reports (shared header).
pub fn suite_csv(reports: &[ExperimentReport], include_runtime: bool) -> String {
    let mut out = String::new();
    for (i, report) in reports.iter().enumerate() {
        let csv = report.to_csv(include_runtime);
        if i == 0 {
            out.push_str(&csv);
        } else {
            // drop the repeated header
            out.push_str(csv.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
        }
    }
    out
}

/// Aligned accuracy and selected-count tables, one column per method.
pub fn suite_text(reports: &[ExperimentReport]) -> String {
    if reports.is_empty() {
        return String::new();
    }
    let dataset = &reports[0].dataset;
    let n_seeds = reports[0].rows.len();
    let mut out = String::new();

    let header = |out: &mut String| {
        out.push_str(&format!("{:<12}", ""));
        for r in reports {
            out.push_str(&format!("{:>12}", r.method.name()));
        }
        out.push('\n');
    };

    type Extract = fn(&ExperimentReport) -> f64;
    let accuracy_rows: [(&str, Extract); 3] = [
        ("best", |r| r.best_row().accuracy),
        ("median", ExperimentReport::median_accuracy),
        ("mean", ExperimentReport::mean_accuracy),
    ];
    let count_rows: [(&str, Extract); 3] = [
        ("best-run", |r| r.best_row().n_selected as f64),
        ("median", ExperimentReport::median_n_selected),
        ("mean", ExperimentReport::mean_n_selected),
    ];

    out.push_str(&format!(
        "Classification accuracy (%) on {dataset}, {n_seeds} seed(s)\n"
    ));
    header(&mut out);
    for (label, value) in accuracy_rows {
        out.push_str(&format!("{label:<12}"));
        for r in reports {
            out.push_str(&format!("{:>12.2}", value(r) * 100.0));
        }
        out.push('\n');
    }

    out.push_str(&format!(
        "\nSelected feature count on {dataset}, {n_seeds} seed(s)\n"
    ));
    header(&mut out);
    for (label, value) in count_rows {
        out.push_str(&format!("{label:<12}"));
        for r in reports {
            out.push_str(&format!("{:>12.1}", value(r)));
        }
        out.push('\n');
    }
    out
}

/// A generated dataset together with its planted informative columns.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Ground-truth informative feature indices, ascending.
    pub informative: Vec<usize>,
}

/// Desk-scale test bed: `n_informative` class-conditional columns hidden
/// among i.i.d. Uniform(0,1) noise columns, labels balanced round-robin.
///
/// For class `c` of `k`, an informative value is uniform on an interval of
/// width `0.4 * separation / k` centered at `(c + 0.5) / k`. Those intervals
/// are pairwise disjoint with gaps wider than the intervals themselves for
/// any separation in (0,1], so a single informative feature makes 1-NN
/// leave-one-out exact.
pub fn generate_synthetic(
    n_samples: usize,
    n_noise: usize,
    n_informative: usize,
    k_classes: usize,
    separation: f64,
    seed: u64,
) -> Result<Synthetic> {
    if k_classes < 2 {
        return Err(Error::InvalidParam(format!(
            "k_classes must be >= 2, got {k_classes}"
        )));
    }
    if n_samples < 2 || n_samples < k_classes {
        return Err(Error::InvalidParam(format!(
            "n_samples {n_samples} too small for {k_classes} classes"
        )));
    }
    let total = n_noise + n_informative;
    if total == 0 {
        return Err(Error::InvalidParam("no features requested".to_string()));
    }
    if !(separation > 0.0 && separation <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "separation {separation} outside (0, 1]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = sample(&mut rng, total, n_informative).into_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; total];
    for &j in &informative {
        is_informative[j] = true;
    }

    let labels: Vec<usize> = (0..n_samples).map(|i| i % k_classes).collect();
    let half_width = 0.2 * separation / k_classes as f64;
    let mut values = Vec::with_capacity(n_samples * total);
    for &label in &labels {
        let center = (label as f64 + 0.5) / k_classes as f64;
        for informative_column in &is_informative {
            if *informative_column {
                values.push(rng.gen_range(center - half_width..center + half_width));
            } else {
                values.push(rng.gen::<f64>());
            }
        }
    }

    let dataset = Dataset::new(
        values,
        total,
        labels,
        (0..total).map(|j| format!("f{}", j + 1)).collect(),
        (0..k_classes).map(|c| format!("c{}", c + 1)).collect(),
    )?;
    Ok(Synthetic {
        dataset,
        informative,
    })
}
