//! Monte Carlo experiments over random geometries.
//!
//! Every trial samples one scenario, synthesizes one measurement set and runs
//! LS, IRLS and the fused differencing estimator on it. Trials run in
//! parallel but are reduced in trial order, so a configuration and base seed
//! fully determine every output byte.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseSpec;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::prs::OfdmConfig;
use crate::scenario::{
    sample_scenario, synthesize_measurements_model, synthesize_measurements_phy, MeasurementSet, Scenario,
    ScenarioParams, DEFAULT_PRS_SEED,
};
use crate::solvers::{
    fuse, initial_point, solve_irls, solve_ls, solve_proposed, LocalizationResult, Method, SolverConfig,
};

/// Spacing of the empirical CDF grid, meters.
pub const CDF_STEP: f64 = 0.05;

/// Methods reported by every trial, in output order.
pub const REPORTED_METHODS: [Method; 3] = [Method::Ls, Method::Irls, Method::Proposed];

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const CDF_FILE: &str = "cdf.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    /// Geometric ranges plus excess plus uniform quantization error.
    #[default]
    Model,
    /// Full PRS / channel / periodogram pipeline per trial.
    Phy,
}

/// One node-count sweep point: `n` for S = K = n, or `[S, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeCount {
    Equal(usize),
    Pair([usize; 2]),
}

impl NodeCount {
    pub fn counts(self) -> (usize, usize) {
        match self {
            NodeCount::Equal(n) => (n, n),
            NodeCount::Pair([s, k]) => (s, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub outlier_max: Vec<f64>,
    pub nodes: Vec<NodeCount>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            outlier_max: vec![4.0, 8.0, 12.0, 16.0, 18.0],
            nodes: [4, 5, 6, 7, 8].into_iter().map(NodeCount::Equal).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Outlier,
    Nodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub mode: ExperimentMode,
    /// Add the uniform quantization error in model mode.
    pub quantization: bool,
    /// Per-subcarrier SNR in phy mode, dB; `inf` for a noise-free channel.
    pub snr_db: f64,
    pub prs_seed: u32,
    pub scenario: ScenarioParams,
    pub ofdm: OfdmConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub ranging: RangingCheckConfig,
    /// Where reports are written; the CLI can override it.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trials: 2000,
            base_seed: 1,
            mode: ExperimentMode::Model,
            quantization: true,
            snr_db: 10.0,
            prs_seed: DEFAULT_PRS_SEED,
            scenario: ScenarioParams::default(),
            ofdm: OfdmConfig::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            ranging: RangingCheckConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("snr_db must be a number".into()));
        }
        self.scenario.validate()?;
        self.ofdm.validate()?;
        self.solver.validate()?;
        let measurements = self.scenario.num_gnbs * self.scenario.num_ues;
        if measurements < 3 {
            return Err(Error::Underdetermined { measurements });
        }
        if self.scenario.num_gnbs < 2 || self.scenario.num_ues < 2 {
            return Err(Error::InsufficientGeometry(
                "the differencing estimator needs at least 2 gNBs and 2 UEs".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_sweep(&self, kind: SweepKind) -> Result<()> {
        match kind {
            SweepKind::Outlier if self.sweep.outlier_max.is_empty() => {
                Err(Error::Config("sweep.outlier_max must not be empty".into()))
            }
            SweepKind::Nodes if self.sweep.nodes.is_empty() => {
                Err(Error::Config("sweep.nodes must not be empty".into()))
            }
            _ => Ok(()),
        }
    }

    /// Scenario parameters actually sampled: in phy mode every bistatic
    /// range must stay inside the unambiguous window.
    fn effective_scenario(&self) -> ScenarioParams {
        let mut p = self.scenario.clone();
        if self.mode == ExperimentMode::Phy {
            let bound = self.ofdm.max_unwrapped_range();
            p.max_bistatic_range = Some(p.max_bistatic_range.map_or(bound, |b| b.min(bound)));
        }
        p
    }

    fn noise(&self, seed: u64) -> NoiseSpec {
        if self.snr_db == f64::INFINITY {
            NoiseSpec {
                rng_seed: seed,
                ..NoiseSpec::noiseless()
            }
        } else {
            NoiseSpec::from_snr_db(self.snr_db, seed)
        }
    }
}

/// Seed of trial `index`.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ index as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: Point2,
    pub error_m: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Solver error, if it refused the input.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl MethodOutcome {
    fn from_result(r: &LocalizationResult, truth: Point2) -> Self {
        Self {
            method: r.method,
            estimate: r.estimate,
            error_m: r.error_to(truth),
            converged: r.converged,
            iterations: r.iterations,
            failure: None,
        }
    }

    fn failed(method: Method, e: &Error) -> Self {
        Self {
            method,
            estimate: Point2::new(f64::NAN, f64::NAN),
            error_m: f64::NAN,
            converged: false,
            iterations: 0,
            failure: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub target: Point2,
    /// In [`REPORTED_METHODS`] order.
    pub methods: Vec<MethodOutcome>,
}

impl TrialOutcome {
    pub fn method(&self, m: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == m)
    }
}

/// Measurements for one trial under the configured mode.
pub fn synthesize(cfg: &ExperimentConfig, sc: &Scenario, seed: u64) -> Result<MeasurementSet> {
    match cfg.mode {
        ExperimentMode::Model => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            Ok(synthesize_measurements_model(sc, &cfg.ofdm, &mut rng, cfg.quantization))
        }
        ExperimentMode::Phy => synthesize_measurements_phy(sc, &cfg.ofdm, &cfg.noise(seed), cfg.prs_seed),
    }
}

/// Runs LS, IRLS and the fused estimator on one measurement set. Each method
/// starts from its own configured initial point.
pub fn solve_all(ms: &MeasurementSet, sc: &Scenario, solver: &SolverConfig) -> Vec<MethodOutcome> {
    let nodes = sc.nodes();
    let truth = sc.target;
    let ls = initial_point(ms, &nodes, solver, Method::Ls).and_then(|x| solve_ls(ms, &nodes, solver, x));
    let irls = initial_point(ms, &nodes, solver, Method::Irls).and_then(|x| solve_irls(ms, &nodes, solver, x));
    let star =
        initial_point(ms, &nodes, solver, Method::Differencing).and_then(|x| solve_proposed(ms, &nodes, solver, x));
    let outcome = |m, r: &Result<LocalizationResult>| match r {
        Ok(r) => MethodOutcome::from_result(r, truth),
        Err(e) => MethodOutcome::failed(m, e),
    };
    let fused = match (&irls, &star) {
        (Ok(a), Ok(b)) => MethodOutcome::from_result(&fuse(a, b, solver), truth),
        (Err(e), _) | (_, Err(e)) => MethodOutcome::failed(Method::Proposed, e),
    };
    vec![outcome(Method::Ls, &ls), outcome(Method::Irls, &irls), fused]
}

/// One Monte Carlo trial: sample, synthesize, solve. Solver failures are
/// recorded per method; sampling and synthesis failures abort the trial.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialOutcome> {
    let sc = sample_scenario(&cfg.effective_scenario(), seed)?;
    let ms = synthesize(cfg, &sc, seed)?;
    Ok(TrialOutcome {
        trial,
        seed,
        target: sc.target,
        methods: solve_all(&ms, &sc, &cfg.solver),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_m: f64,
    pub p90_m: f64,
    pub max_m: f64,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
}

/// Empirical CDFs of the reported methods on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub grid: Vec<f64>,
    /// One column per entry of [`REPORTED_METHODS`].
    pub columns: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub base_seed: u64,
    pub trials: Vec<TrialOutcome>,
    pub summary: Vec<MethodSummary>,
    pub cdf: CdfTable,
}

impl ExperimentReport {
    pub fn errors(&self, m: Method) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.method(m).map(|o| o.error_m))
            .collect()
    }

    pub fn summary_of(&self, m: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == m)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank percentile, `p` in (0, 100]. NaN sorts last.
pub fn percentile_nearest_rank(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * xs.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(xs.len()) - 1]
}

/// Grid `0, step, 2 step, ...` up to the first point at or above `max`.
pub fn cdf_grid(max: f64, step: f64) -> Vec<f64> {
    let mut n = if max.is_finite() && max > 0.0 {
        (max / step).ceil() as usize
    } else {
        0
    };
    while (n as f64) * step < max {
        n += 1;
    }
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Right-continuous empirical CDF `#{x <= t} / n` at each grid point.
pub fn empirical_cdf(xs: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&t| sorted.partition_point(|&x| x <= t) as f64 / n)
        .collect()
}

fn summarize(trials: &[TrialOutcome]) -> (Vec<MethodSummary>, CdfTable) {
    let mut summary = Vec::new();
    let mut samples = Vec::new();
    for m in REPORTED_METHODS {
        let outcomes: Vec<&MethodOutcome> = trials.iter().filter_map(|t| t.method(m)).collect();
        let errors: Vec<f64> = outcomes.iter().map(|o| o.error_m).collect();
        let failed = outcomes.iter().filter(|o| o.failure.is_some()).count();
        let converged = outcomes.iter().filter(|o| o.converged).count();
        summary.push(MethodSummary {
            method: m,
            mean_m: mean(&errors),
            p90_m: percentile_nearest_rank(&errors, 90.0),
            max_m: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            converged,
            diverged: outcomes.len() - converged - failed,
            failed,
        });
        samples.push(errors);
    }
    let max = samples
        .iter()
        .flatten()
        .copied()
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    let grid = cdf_grid(max, CDF_STEP);
    let columns = samples.iter().map(|xs| empirical_cdf(xs, &grid)).collect();
    (summary, CdfTable { grid, columns })
}

/// Runs every trial in parallel and reduces in trial order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i, trial_seed(cfg.base_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let (summary, cdf) = summarize(&trials);
    Ok(ExperimentReport {
        config: cfg.clone(),
        base_seed: cfg.base_seed,
        trials,
        summary,
        cdf,
    })
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    base_seed: u64,
    trials: usize,
    methods: &'a [MethodSummary],
    config: &'a ExperimentConfig,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `summary.json`, `trials.csv` and `cdf.csv` into `dir`, creating it
/// if needed. Returns the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let summary_path = dir.join(SUMMARY_FILE);
    let summary = SummaryFile {
        base_seed: report.base_seed,
        trials: report.trials.len(),
        methods: &report.summary,
        config: &report.config,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;

    let trials_path = dir.join(TRIALS_FILE);
    let mut w = create(&trials_path)?;
    let write_err = |e| Error::io(&trials_path, e);
    writeln!(w, "trial,method,error_m,converged").map_err(write_err)?;
    for t in &report.trials {
        for o in &t.methods {
            writeln!(w, "{},{},{},{}", t.trial, o.method.label(), o.error_m, o.converged).map_err(write_err)?;
        }
    }
    finish(w, &trials_path)?;

    let cdf_path = dir.join(CDF_FILE);
    let mut w = create(&cdf_path)?;
    let write_err = |e| Error::io(&cdf_path, e);
    let header: Vec<String> = REPORTED_METHODS.iter().map(|m| format!("F_{}", m.label())).collect();
    writeln!(w, "error_m,{}", header.join(",")).map_err(write_err)?;
    for (i, t) in report.cdf.grid.iter().enumerate() {
        write!(w, "{t:.2}").map_err(write_err)?;
        for col in &report.cdf.columns {
            write!(w, ",{}", col[i]).map_err(write_err)?;
        }
        writeln!(w).map_err(write_err)?;
    }
    finish(w, &cdf_path)?;

    Ok(vec![summary_path, trials_path, cdf_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub num_gnbs: usize,
    pub num_ues: usize,
    pub outlier_max: f64,
    pub summary: Vec<MethodSummary>,
}

impl SweepPoint {
    pub fn mean_of(&self, m: Method) -> f64 {
        self.summary
            .iter()
            .find(|s| s.method == m)
            .map_or(f64::NAN, |s| s.mean_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub base_seed: u64,
    pub trials: usize,
    pub points: Vec<SweepPoint>,
}

/// Runs one experiment per sweep value. All points share the base seed, so
/// neighboring points see the same geometries where the node counts agree.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<SweepReport> {
    cfg.validate_sweep(kind)?;
    let variants: Vec<ExperimentConfig> = match kind {
        SweepKind::Outlier => cfg
            .sweep
            .outlier_max
            .iter()
            .map(|&o| {
                let mut c = cfg.clone();
                c.scenario.outlier_max = o;
                c
            })
            .collect(),
        SweepKind::Nodes => cfg
            .sweep
            .nodes
            .iter()
            .map(|n| {
                let (s, k) = n.counts();
                let mut c = cfg.clone();
                c.scenario.num_gnbs = s;
                c.scenario.num_ues = k;
                c
            })
            .collect(),
    };
    let mut points = Vec::with_capacity(variants.len());
    for c in &variants {
        let report = run_experiment(c)?;
        points.push(SweepPoint {
            num_gnbs: c.scenario.num_gnbs,
            num_ues: c.scenario.num_ues,
            outlier_max: c.scenario.outlier_max,
            summary: report.summary,
        });
    }
    Ok(SweepReport {
        kind,
        base_seed: cfg.base_seed,
        trials: cfg.trials,
        points,
    })
}

/// Writes `sweep.json` and `sweep.csv` into `dir`.
pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("sweep.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join("sweep.csv");
    let mut w = create(&csv_path)?;
    let write_err = |e| Error::io(&csv_path, e);
    writeln!(w, "num_gnbs,num_ues,outlier_max,method,mean_m,p90_m,converged,diverged").map_err(write_err)?;
    for p in &report.points {
        for s in &p.summary {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                p.num_gnbs,
                p.num_ues,
                p.outlier_max,
                s.method.label(),
                s.mean_m,
                s.p90_m,
                s.converged,
                s.diverged
            )
            .map_err(write_err)?;
        }
    }
    finish(w, &csv_path)?;
    Ok(vec![json_path, csv_path])
}

/// Phy-mode ranging validation over random line-of-sight geometries. The
/// numerology, PRS seed and base seed come from the enclosing
/// [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangingCheckConfig {
    pub geometries: usize,
    pub num_gnbs: usize,
    pub num_ues: usize,
    /// Side of the square holding all nodes and the target, meters.
    pub region: f64,
    /// `inf` for a noise-free channel.
    pub snr_db: f64,
}

impl Default for RangingCheckConfig {
    fn default() -> Self {
        Self {
            geometries: 500,
            num_gnbs: 2,
            num_ues: 2,
            region: 100.0,
            snr_db: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangingSample {
    pub geometry: usize,
    pub gnb: usize,
    pub ue: usize,
    pub r_true: f64,
    pub r_hat: f64,
}

impl RangingSample {
    pub fn error(&self) -> f64 {
        self.r_hat - self.r_true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangingReport {
    pub range_resolution: f64,
    pub unambiguous_range: f64,
    pub links: usize,
    pub within_half_bin: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    #[serde(skip)]
    pub samples: Vec<RangingSample>,
}

impl RangingReport {
    pub fn all_within_half_bin(&self) -> bool {
        self.within_half_bin == self.links
    }
}

pub fn run_ranging_check(cfg: &ExperimentConfig) -> Result<RangingReport> {
    let check = &cfg.ranging;
    if check.geometries == 0 {
        return Err(Error::Config("ranging.geometries must be at least 1".into()));
    }
    if check.snr_db.is_nan() {
        return Err(Error::Config("ranging.snr_db must be a number".into()));
    }
    cfg.ofdm.validate()?;
    let params = ScenarioParams {
        num_gnbs: check.num_gnbs,
        num_ues: check.num_ues,
        gnb_region: check.region,
        ue_region: check.region,
        target_region: check.region,
        outlier_max: 0.0,
        max_bistatic_range: Some(cfg.ofdm.max_unwrapped_range()),
        ..ScenarioParams::default()
    };
    params.validate()?;
    let experiment = ExperimentConfig {
        mode: ExperimentMode::Phy,
        snr_db: check.snr_db,
        ..cfg.clone()
    };
    let per_geometry = (0..check.geometries)
        .into_par_iter()
        .map(|g| {
            let seed = trial_seed(cfg.base_seed, g);
            let sc = sample_scenario(&params, seed)?;
            let ms = synthesize(&experiment, &sc, seed)?;
            let mut out = Vec::with_capacity(ms.len());
            for s in 0..ms.num_gnbs {
                for k in 0..ms.num_ues {
                    out.push(RangingSample {
                        geometry: g,
                        gnb: s,
                        ue: k,
                        r_true: ms.true_ranges[s * ms.num_ues + k],
                        r_hat: ms.get(s, k),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<RangingSample> = per_geometry.into_iter().flatten().collect();
    let half = 0.5 * cfg.ofdm.range_resolution();
    let abs: Vec<f64> = samples.iter().map(|s| s.error().abs()).collect();
    Ok(RangingReport {
        range_resolution: cfg.ofdm.range_resolution(),
        unambiguous_range: cfg.ofdm.unambiguous_range(),
        links: samples.len(),
        within_half_bin: abs.iter().filter(|&&e| e <= half).count(),
        max_abs_error: abs.iter().copied().fold(0.0, f64::max),
        mean_abs_error: mean(&abs),
        samples,
    })
}

/// Writes `ranging.json` and `ranging.csv` into `dir`.
pub fn emit_ranging(report: &RangingReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("ranging.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join("ranging.csv");
    let mut w = create(&csv_path)?;
    let write_err = |e| Error::io(&csv_path, e);
    writeln!(w, "geometry,s,k,r_true,r_hat,error_m").map_err(write_err)?;
    for s in &report.samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.geometry,
            s.gnb,
            s.ue,
            s.r_true,
            s.r_hat,
            s.error()
        )
        .map_err(write_err)?;
    }
    finish(w, &csv_path)?;
    Ok(vec![json_path, csv_path])
}
