use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use xorcast_cli::{load_file_config, resolve, run_campaign, FileConfig, Options, FIGURE_NAMES};

/// Deterministic packet-level simulator for XOR network coding broadcast
/// strategies.
#[derive(Parser, Debug)]
#[command(name = "xorcast", version, about)]
struct Cli {
    /// Scenario: single_hop, grid, random, clustered, mobile
    #[arg(long)]
    scenario: Option<String>,
    /// Packet-selection algorithm(s), comma separated: systematic_rlnc,
    /// anc, opportunistic, greedy, equalizing
    #[arg(long)]
    algorithm: Option<String>,
    /// Decoder(s), comma separated: simple, full
    #[arg(long)]
    decoder: Option<String>,
    /// Seeded runs per variant
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run i uses seed + i, identical across variants
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Figure preset (replaces --algorithm/--decoder):
    /// 1hop, 1hop-full, grid, random, clustered, mobile, mobile-full
    #[arg(long)]
    figure: Option<String>,
    /// Node count (single-hop: receivers; multi-hop: also the symbol count)
    #[arg(long)]
    nodes: Option<usize>,
    /// Symbol universe size
    #[arg(long)]
    symbols: Option<usize>,
    /// Per-receiver erasure probability (single-hop only)
    #[arg(long)]
    erasure: Option<f64>,
    /// Transmission order per round: sequential, random
    #[arg(long)]
    scheduling: Option<String>,
    /// Truncate every selection to its first N symbols
    #[arg(long)]
    degree_cap: Option<usize>,
    /// Round budget before a run is flagged incomplete
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Worker threads for the run pool (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// TOML config file mirroring these flags; flags win on conflict
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fraction of incomplete runs tolerated before exiting nonzero
    #[arg(long)]
    tolerate_incomplete: Option<f64>,
    /// Also write the round-0 adjacency as an edge list
    #[arg(long)]
    dump_topology: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match load_file_config(path) {
            Ok(f) => f,
            Err(err) => {
                eprintln!("error: {err:#}");
                return ExitCode::from(2);
            }
        },
        None => FileConfig::default(),
    };
    let flags = Options {
        scenario: cli.scenario,
        algorithm: cli.algorithm,
        decoder: cli.decoder,
        runs: cli.runs,
        seed: cli.seed,
        out: cli.out,
        figure: cli.figure,
        nodes: cli.nodes,
        symbols: cli.symbols,
        erasure: cli.erasure,
        scheduling: cli.scheduling,
        degree_cap: cli.degree_cap,
        max_rounds: cli.max_rounds,
        workers: cli.workers,
        tolerate_incomplete: cli.tolerate_incomplete,
        dump_topology: cli.dump_topology,
    };

    let (campaign, workers) = match resolve(flags, file) {
        Ok(resolved) => resolved,
        Err(err) => {
            eprintln!("error: {err:#}");
            eprintln!("figures: {}", FIGURE_NAMES.join(", "));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = workers {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: configuring {n} workers: {err}");
            return ExitCode::from(2);
        }
    }

    eprintln!(
        "running {} variant(s) x {} run(s) of {} into {}",
        campaign.variants.len(),
        campaign.runs,
        campaign.base.scenario,
        campaign.out_dir.display()
    );
    let report = match run_campaign(&campaign) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(1);
        }
    };

    for s in &report.summaries {
        let delay = s
            .mean_delay
            .map(|d| format!("{d:.1}"))
            .unwrap_or_else(|| "-".into());
        let frp = s
            .mean_full_recovery
            .map(|f| format!("{f:.1}"))
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "  {:<28} delay {:>7}  full-recovery {:>8}  incomplete {}/{}",
            s.label, delay, frp, s.incomplete, s.runs
        );
    }
    eprintln!("wrote {} file(s)", report.files.len());

    if report.incomplete_fraction() > campaign.tolerate_incomplete {
        eprintln!(
            "error: {:.1}% of runs incomplete (tolerated {:.1}%)",
            report.incomplete_fraction() * 100.0,
            campaign.tolerate_incomplete * 100.0
        );
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
