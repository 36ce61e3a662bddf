//! Batch experiment driver: expands figure presets or explicit flags into
//! a campaign of seeded runs, executes the runs in parallel, and writes
//! one CSV per (variant, metric) plus a summary table.
//!
//! Every variant runs the same seed sequence, so comparisons across
//! algorithms are paired. Output formatting is fixed-precision and fully
//! deterministic: rerunning an identical campaign yields byte-identical
//! files.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use xorcast_core::engine::{self, Algorithm, DecoderMode, Scenario, ScenarioConfig, Scheduling};
use xorcast_core::metrics::{self, AggregateCurve, RunLog};

/// One (algorithm, decoder, degree cap) combination of a campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub algorithm: Algorithm,
    pub decoder: DecoderMode,
    pub degree_cap: Option<usize>,
}

impl Variant {
    pub fn new(algorithm: Algorithm, decoder: DecoderMode) -> Self {
        Variant {
            algorithm,
            decoder,
            degree_cap: None,
        }
    }

    pub fn with_cap(algorithm: Algorithm, decoder: DecoderMode, cap: usize) -> Self {
        Variant {
            algorithm,
            decoder,
            degree_cap: Some(cap),
        }
    }

    /// File-name stem, e.g. `greedy_simple` or `greedy_cap1_simple`.
    pub fn label(&self) -> String {
        match self.degree_cap {
            Some(cap) => format!("{}_cap{}_{}", self.algorithm, cap, self.decoder),
            None => format!("{}_{}", self.algorithm, self.decoder),
        }
    }
}

/// A fully resolved batch of runs.
#[derive(Debug, Clone)]
pub struct Campaign {
    /// Template config; algorithm, decoder, degree cap and seed are
    /// overwritten per variant and per run.
    pub base: ScenarioConfig,
    pub variants: Vec<Variant>,
    pub runs: usize,
    pub seed_base: u64,
    pub out_dir: PathBuf,
    /// Fraction of incomplete runs tolerated before the exit code turns
    /// nonzero.
    pub tolerate_incomplete: f64,
    pub dump_topology: bool,
}

/// Aggregate statistics for one executed variant.
#[derive(Debug, Clone)]
pub struct VariantSummary {
    pub label: String,
    pub variant: Variant,
    pub runs: usize,
    pub incomplete: usize,
    /// Mean over runs of the per-run mean node delay (completed nodes).
    pub mean_delay: Option<f64>,
    pub delay_ci: f64,
    /// Mean over runs of the per-run worst node delay.
    pub mean_worst_delay: Option<f64>,
    /// Mean over complete runs of the slowest node's completion point.
    pub mean_full_recovery: Option<f64>,
    pub full_recovery_ci: f64,
    /// Mean over complete runs of the per-node mean completion point.
    pub mean_node_completion: Option<f64>,
}

#[derive(Debug)]
pub struct CampaignReport {
    pub summaries: Vec<VariantSummary>,
    pub files: Vec<PathBuf>,
    pub total_runs: usize,
    pub incomplete_runs: usize,
}

impl CampaignReport {
    pub fn incomplete_fraction(&self) -> f64 {
        if self.total_runs == 0 {
            0.0
        } else {
            self.incomplete_runs as f64 / self.total_runs as f64
        }
    }
}

/// Executes every variant over the shared seed sequence and writes the
/// CSV outputs.
pub fn run_campaign(campaign: &Campaign) -> Result<CampaignReport> {
    std::fs::create_dir_all(&campaign.out_dir)
        .with_context(|| format!("creating {}", campaign.out_dir.display()))?;
    let mut report = CampaignReport {
        summaries: Vec::new(),
        files: Vec::new(),
        total_runs: 0,
        incomplete_runs: 0,
    };

    if campaign.dump_topology {
        let mut cfg = campaign.base.clone();
        cfg.seed = campaign.seed_base;
        let adjacency = engine::initial_adjacency(&cfg)?;
        let path = campaign
            .out_dir
            .join(format!("topology_seed{}.txt", campaign.seed_base));
        std::fs::write(&path, adjacency.to_edge_list())?;
        report.files.push(path);
    }

    for variant in &campaign.variants {
        let logs = run_variant(&campaign.base, variant, campaign.runs, campaign.seed_base)?;
        let label = variant.label();

        let recovery = metrics::recovery_curve(&logs)?;
        let path = campaign.out_dir.join(format!("{label}_recovery.csv"));
        emit_csv(&recovery, &path)?;
        report.files.push(path);

        let degree = metrics::avg_degree_curve(&logs)?;
        let path = campaign.out_dir.join(format!("{label}_degree.csv"));
        emit_csv(&degree, &path)?;
        report.files.push(path);

        if !campaign.base.scenario.is_single_hop() {
            let potential = metrics::potential_curve(&logs)?;
            let path = campaign.out_dir.join(format!("{label}_potential.csv"));
            emit_csv_with_axis(&potential, "round", &path)?;
            report.files.push(path);
        }

        let path = campaign.out_dir.join(format!("{label}_delay.csv"));
        emit_delay_csv(&logs, &path)?;
        report.files.push(path);

        let summary = summarize_variant(&label, variant, &logs);
        report.total_runs += summary.runs;
        report.incomplete_runs += summary.incomplete;
        report.summaries.push(summary);
    }

    let path = campaign.out_dir.join("summary.csv");
    emit_summary_csv(&report.summaries, &path)?;
    report.files.push(path);
    Ok(report)
}

/// Runs one variant over the campaign seeds (in parallel, collected in
/// seed order).
pub fn run_variant(
    base: &ScenarioConfig,
    variant: &Variant,
    runs: usize,
    seed_base: u64,
) -> Result<Vec<RunLog>> {
    let configs: Vec<ScenarioConfig> = (0..runs)
        .map(|i| {
            let mut cfg = base.clone();
            cfg.algorithm = variant.algorithm;
            cfg.decoder = variant.decoder;
            cfg.degree_cap = variant.degree_cap;
            cfg.seed = seed_base + i as u64;
            cfg
        })
        .collect();
    let logs: std::result::Result<Vec<RunLog>, _> =
        configs.par_iter().map(engine::run).collect();
    Ok(logs?)
}

fn summarize_variant(label: &str, variant: &Variant, logs: &[RunLog]) -> VariantSummary {
    let incomplete = logs.iter().filter(|l| !l.complete).count();
    let mut delays = Vec::new();
    let mut worsts = Vec::new();
    let mut frps = Vec::new();
    let mut completions = Vec::new();
    for log in logs {
        let report = metrics::packet_delay(log);
        if let Some(mean) = report.mean {
            delays.push(mean);
        }
        if let Some(max) = report.max {
            worsts.push(max as f64);
        }
        if let Some(frp) = log.full_recovery_point() {
            frps.push(frp as f64);
        }
        if let Some(mc) = log.mean_completion_point() {
            completions.push(mc);
        }
    }
    let (delay_mean, delay_ci) = metrics::mean_ci95(&delays);
    let (worst_mean, _) = metrics::mean_ci95(&worsts);
    let (frp_mean, frp_ci) = metrics::mean_ci95(&frps);
    let (completion_mean, _) = metrics::mean_ci95(&completions);
    VariantSummary {
        label: label.to_string(),
        variant: variant.clone(),
        runs: logs.len(),
        incomplete,
        mean_delay: (!delays.is_empty()).then_some(delay_mean),
        delay_ci,
        mean_worst_delay: (!worsts.is_empty()).then_some(worst_mean),
        mean_full_recovery: (!frps.is_empty()).then_some(frp_mean),
        full_recovery_ci: frp_ci,
        mean_node_completion: (!completions.is_empty()).then_some(completion_mean),
    }
}

/// Writes an aggregate curve as `received,mean,ci_half,n` rows with fixed
/// six-decimal formatting.
pub fn emit_csv(curve: &AggregateCurve, path: &Path) -> Result<()> {
    emit_csv_with_axis(curve, "received", path)
}

/// Like [`emit_csv`] with a custom x-axis column name (`round` for
/// potential curves).
pub fn emit_csv_with_axis(curve: &AggregateCurve, axis: &str, path: &Path) -> Result<()> {
    let mut out = format!("{axis},mean,ci_half,n\n");
    for i in 0..curve.len() {
        writeln!(
            out,
            "{},{:.6},{:.6},{}",
            curve.x[i], curve.mean[i], curve.ci_half[i], curve.n_samples[i]
        )
        .expect("string write");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Per-run delay rows: seed, mean and worst node delay, completion counts.
/// Censored aggregates are left empty.
pub fn emit_delay_csv(logs: &[RunLog], path: &Path) -> Result<()> {
    let mut out = String::from("seed,mean_delay,worst_delay,completed_nodes,censored_nodes\n");
    for log in logs {
        let report = metrics::packet_delay(log);
        let completed = report.per_node.len() - report.censored;
        let mean = report
            .mean
            .map(|m| format!("{m:.6}"))
            .unwrap_or_default();
        let worst = report.max.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            log.config.seed, mean, worst, completed, report.censored
        )
        .expect("string write");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit_summary_csv(summaries: &[VariantSummary], path: &Path) -> Result<()> {
    let mut out = String::from(
        "variant,algorithm,decoder,degree_cap,runs,incomplete,\
         mean_delay,delay_ci_half,mean_worst_delay,\
         mean_full_recovery,full_recovery_ci_half,mean_node_completion\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{},{},{:.6},{}",
            s.label,
            s.variant.algorithm,
            s.variant.decoder,
            s.variant.degree_cap.map(|c| c.to_string()).unwrap_or_default(),
            s.runs,
            s.incomplete,
            opt(s.mean_delay),
            s.delay_ci,
            opt(s.mean_worst_delay),
            opt(s.mean_full_recovery),
            s.full_recovery_ci,
            opt(s.mean_node_completion),
        )
        .expect("string write");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Known figure presets: scenario plus variant list.
pub fn figure_preset(name: &str) -> Option<(Scenario, Vec<Variant>)> {
    use Algorithm::*;
    use DecoderMode::*;
    let informed = [Greedy, Equalizing, Opportunistic, Anc];
    let simple_set = |scenario: Scenario| {
        (
            scenario,
            informed.iter().map(|&a| Variant::new(a, Simple)).collect::<Vec<_>>(),
        )
    };
    match name {
        "1hop" => Some(simple_set(Scenario::SingleHop)),
        "1hop-full" => {
            let mut variants: Vec<Variant> =
                informed.iter().map(|&a| Variant::new(a, Simple)).collect();
            variants.extend(informed.iter().map(|&a| Variant::new(a, Full)));
            variants.push(Variant::new(SystematicRlnc, Full));
            Some((Scenario::SingleHop, variants))
        }
        "grid" => {
            let (scenario, mut variants) = simple_set(Scenario::Grid);
            variants.push(Variant::with_cap(Greedy, Simple, 1));
            Some((scenario, variants))
        }
        "random" => Some(simple_set(Scenario::Random)),
        "clustered" => Some(simple_set(Scenario::Clustered)),
        "mobile" => Some(simple_set(Scenario::Mobile)),
        "mobile-full" => {
            let mut variants: Vec<Variant> =
                informed.iter().map(|&a| Variant::new(a, Simple)).collect();
            variants.extend(informed.iter().map(|&a| Variant::new(a, Full)));
            Some((Scenario::Mobile, variants))
        }
        _ => None,
    }
}

pub const FIGURE_NAMES: &[&str] = &[
    "1hop",
    "1hop-full",
    "grid",
    "random",
    "clustered",
    "mobile",
    "mobile-full",
];

/// Flag values; every field is optional so file values and defaults can
/// fill the gaps. Mirrors the config-file schema.
#[derive(Debug, Default, Clone)]
pub struct Options {
    pub scenario: Option<String>,
    pub algorithm: Option<String>,
    pub decoder: Option<String>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub figure: Option<String>,
    pub nodes: Option<usize>,
    pub symbols: Option<usize>,
    pub erasure: Option<f64>,
    pub scheduling: Option<String>,
    pub degree_cap: Option<usize>,
    pub max_rounds: Option<usize>,
    pub workers: Option<usize>,
    pub tolerate_incomplete: Option<f64>,
    pub dump_topology: bool,
}

/// Config-file schema: the same keys the flags use, plus topology knobs
/// and explicit degree-table overrides.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub algorithm: Option<String>,
    pub decoder: Option<String>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub figure: Option<String>,
    pub nodes: Option<usize>,
    pub symbols: Option<usize>,
    pub erasure: Option<f64>,
    pub scheduling: Option<String>,
    pub degree_cap: Option<usize>,
    pub max_rounds: Option<usize>,
    pub workers: Option<usize>,
    pub tolerate_incomplete: Option<f64>,
    /// Explicit `(r, D(r))` pairs overriding the default degree table.
    pub degree_table: Option<Vec<(usize, usize)>>,
    pub topology: Option<FileTopology>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTopology {
    pub target_degree: Option<f64>,
    pub k_clusters: Option<usize>,
    pub bridges_per_pair: Option<usize>,
    pub mobility_dt: Option<f64>,
    pub mobile_arena_m: Option<f64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_list<T: FromStr<Err = String>>(kind: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| T::from_str(s).map_err(|e| anyhow::anyhow!("invalid {kind}: {e}")))
        .collect()
}

/// Merges flags over the optional config file (flags win) and expands the
/// result into a campaign plus the worker-count request.
pub fn resolve(flags: Options, file: FileConfig) -> Result<(Campaign, Option<usize>)> {
    let pick = |a: Option<String>, b: Option<String>| a.or(b);

    let figure = pick(flags.figure.clone(), file.figure.clone());
    let algorithm_str = pick(flags.algorithm.clone(), file.algorithm.clone());
    let decoder_str = pick(flags.decoder.clone(), file.decoder.clone());
    let scenario_str = pick(flags.scenario.clone(), file.scenario.clone());
    let degree_cap = flags.degree_cap.or(file.degree_cap);

    let (scenario, variants) = if let Some(name) = &figure {
        if algorithm_str.is_some() || decoder_str.is_some() || degree_cap.is_some() {
            bail!("--figure selects its own algorithm/decoder set; drop --algorithm/--decoder/--degree-cap");
        }
        let (scenario, variants) = figure_preset(name).ok_or_else(|| {
            anyhow::anyhow!("unknown figure '{name}' (expected one of: {})", FIGURE_NAMES.join(", "))
        })?;
        if let Some(s) = &scenario_str {
            let explicit = Scenario::from_str(s).map_err(|e| anyhow::anyhow!(e))?;
            if explicit != scenario {
                bail!("--figure {name} runs the {scenario} scenario; conflicting --scenario {explicit}");
            }
        }
        (scenario, variants)
    } else {
        let scenario = match scenario_str {
            Some(s) => Scenario::from_str(&s).map_err(|e| anyhow::anyhow!(e))?,
            None => Scenario::SingleHop,
        };
        let algorithms: Vec<Algorithm> = match algorithm_str {
            Some(s) => parse_list("algorithm", &s)?,
            None => vec![Algorithm::Greedy],
        };
        let decoders: Vec<DecoderMode> = match decoder_str {
            Some(s) => parse_list("decoder", &s)?,
            None => vec![DecoderMode::Simple],
        };
        let mut variants = Vec::new();
        for &a in &algorithms {
            for &d in &decoders {
                variants.push(Variant {
                    algorithm: a,
                    decoder: d,
                    degree_cap,
                });
            }
        }
        (scenario, variants)
    };

    // Template config from the reference-scale preset, then apply overrides.
    // The per-variant algorithm/decoder fields are placeholders here.
    let mut base = ScenarioConfig::preset(scenario, Algorithm::Greedy, DecoderMode::Simple);
    if let Some(n) = flags.nodes.or(file.nodes) {
        base.n_nodes = n;
        if !scenario.is_single_hop() {
            base.n_symbols = n;
        }
    }
    if let Some(s) = flags.symbols.or(file.symbols) {
        base.n_symbols = s;
    }
    if let Some(p) = flags.erasure.or(file.erasure) {
        base.erasure_p = p;
    }
    if let Some(s) = pick(flags.scheduling, file.scheduling) {
        base.scheduling = Scheduling::from_str(&s).map_err(|e| anyhow::anyhow!(e))?;
    }
    if let Some(m) = flags.max_rounds.or(file.max_rounds) {
        base.max_rounds = m;
    }
    if let Some(pairs) = &file.degree_table {
        base.degree_overrides = pairs.clone();
    }
    if let Some(t) = &file.topology {
        if let Some(v) = t.target_degree {
            base.topology.target_degree = v;
        }
        if let Some(v) = t.k_clusters {
            base.topology.k_clusters = v;
        }
        if let Some(v) = t.bridges_per_pair {
            base.topology.bridges_per_pair = v;
        }
        if let Some(v) = t.mobility_dt {
            base.topology.mobility_dt = v;
        }
        if let Some(v) = t.mobile_arena_m {
            base.topology.mobile_arena_m = v;
        }
    }
    base.validate().map_err(|e| anyhow::anyhow!(e.to_string()))?;

    let campaign = Campaign {
        base,
        variants,
        runs: flags.runs.or(file.runs).unwrap_or(50),
        seed_base: flags.seed.or(file.seed).unwrap_or(1),
        out_dir: flags
            .out
            .or(file.out.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results")),
        tolerate_incomplete: flags
            .tolerate_incomplete
            .or(file.tolerate_incomplete)
            .unwrap_or(0.0),
        dump_topology: flags.dump_topology,
    };
    if campaign.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let workers = flags.workers.or(file.workers);
    Ok((campaign, workers))
}
