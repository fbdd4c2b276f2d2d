//! Command-line front end: single runs, paired comparisons, seed sweeps,
//! and the cost/efficiency/capacity/risk analysis.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdmanet_core::config::{parse_config, Mode, ScenarioConfig};
use sdmanet_core::econ::{self, Breakeven};
use sdmanet_core::sim::{self, AggregateReport, MetricsReport};
use sdmanet_core::topology::NodeId;
use serde_json::json;

#[derive(Parser)]
#[command(name = "sdmanet", version, about = "Dual-mode MANET / SDN-MANET scenario simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report its metrics.
    Run(RunArgs),
    /// Run both modes on the same seed and compare them.
    Compare(CommonArgs),
    /// Run one mode across a range of seeds and aggregate.
    Sweep(SweepArgs),
    /// Evaluate the cost, efficiency, capacity, allocation, and risk model.
    Cost(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (JSON); defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the scenario mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Stream a line-delimited event log to this file.
    #[arg(long)]
    emit_events: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the scenario mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Number of consecutive seeds, starting at the scenario seed.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Run seeds one at a time instead of on worker threads.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Manet,
    Sdn,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Manet => Mode::Manet,
            ModeArg::Sdn => Mode::Sdn,
        }
    }
}

enum CliError {
    /// Bad scenario or arguments: exit 1.
    Config(String),
    /// Filesystem trouble: exit 2.
    Io(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Cost(args) => cmd_cost(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut config = match &common.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    for warning in config.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(config)
}

fn emit(common: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

const REPORT_CSV_HEADER: &str = "mode,seed,duration_ms,packets_sent,packets_delivered,\
packets_dropped,in_flight_at_end,latency_mean_ms,latency_p50_ms,latency_p95_ms,throughput_bps,\
pdr,control_bytes,data_bytes,overhead_ratio,update_time_mean_ms,update_time_p50_ms,\
update_time_p95_ms,update_count,efficiency";

fn report_csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.mode,
        r.seed,
        r.duration_ms,
        r.packets_sent,
        r.packets_delivered,
        r.packets_dropped,
        r.in_flight_at_end,
        r.latency_mean_ms,
        r.latency_p50_ms,
        r.latency_p95_ms,
        r.throughput_bps,
        r.pdr,
        r.control_bytes,
        r.data_bytes,
        r.overhead_ratio,
        r.update_time_mean_ms,
        r.update_time_p50_ms,
        r.update_time_p95_ms,
        r.update_count,
        r.efficiency
    )
}

fn aggregate_csv_row(agg: &AggregateReport, duration_ms: f64) -> String {
    // Flat row of per-metric means, aligned with the report header; the seed
    // column carries the literal marker.
    let get = |name: &str| {
        agg.metrics
            .iter()
            .find(|m| m.metric == name)
            .map(|m| m.mean)
            .unwrap_or(0.0)
    };
    format!(
        "{},aggregate,{},{},{},{},{},{},{},{},{},{},{},{},{},{},,,{},{}",
        agg.mode,
        duration_ms,
        get("packets_sent"),
        get("packets_delivered"),
        get("packets_dropped"),
        get("in_flight_at_end"),
        get("latency_mean_ms"),
        get("latency_p50_ms"),
        get("latency_p95_ms"),
        get("throughput_bps"),
        get("pdr"),
        get("control_bytes"),
        get("data_bytes"),
        get("overhead_ratio"),
        get("update_time_mean_ms"),
        get("update_count"),
        get("efficiency")
    )
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(mode) = args.mode {
        config.mode = mode.into();
    }
    let report = match &args.emit_events {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            sim::run_scenario_with_events(&config, Box::new(file))
        }
        None => sim::run_scenario(&config),
    };
    let text = match args.common.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
        Format::Csv => format!("{REPORT_CSV_HEADER}\n{}\n", report_csv_row(&report)),
    };
    emit(&args.common, &text)
}

fn cmd_compare(args: CommonArgs) -> Result<(), CliError> {
    let config = load_config(&args)?;
    let (manet, sdn) = sim::run_paired(&config);
    let table = sim::compare(&manet, &sdn).expect("paired runs share seed and differ in mode");
    let text = match args.format {
        Format::Json => {
            let doc = json!({"manet": manet, "sdn": sdn, "comparison": table});
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        Format::Csv => {
            let mut out = String::from("metric,manet,sdn,expected,direction_satisfied\n");
            for row in &table.rows {
                let expected = match row.expected {
                    sim::Direction::SdnLower => "sdn_lower",
                    sim::Direction::SdnHigher => "sdn_higher",
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.metric, row.manet, row.sdn, expected, row.direction_satisfied
                ));
            }
            out
        }
    };
    emit(&args, &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(mode) = args.mode {
        config.mode = mode.into();
    }
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".to_string()));
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|i| config.seed + i).collect();
    let reports = sim::run_sweep(&config, &seeds, !args.sequential);
    let aggregate = sim::aggregate(&reports).expect("nonempty same-mode sweep");
    let text = match args.common.format {
        Format::Json => {
            let doc = json!({"runs": reports, "aggregate": aggregate});
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        Format::Csv => {
            let mut out = String::from(REPORT_CSV_HEADER);
            out.push('\n');
            for r in &reports {
                out.push_str(&report_csv_row(r));
                out.push('\n');
            }
            out.push_str(&aggregate_csv_row(&aggregate, config.duration_ms));
            out.push('\n');
            out
        }
    };
    emit(&args.common, &text)
}

fn cmd_cost(args: CommonArgs) -> Result<(), CliError> {
    let config = load_config(&args)?;
    let e = &config.econ;
    let book = &e.cost_book;
    let caps = &e.capacity_book;

    let ns: Vec<u64> = (e.n_range[0]..=e.n_range[1]).collect();
    let curve: Vec<serde_json::Value> = ns
        .iter()
        .map(|&n| {
            json!({
                "n": n,
                "capex_manet": econ::capex_manet(book, n as usize),
                "capex_sdn": econ::capex_sdn(book, n as usize),
                "opex_manet": econ::opex_manet(book, n as usize),
                "opex_sdn": econ::opex_sdn(book, n as usize),
                "capacity_sdn": econ::capacity_sdn(caps, n as usize),
            })
        })
        .collect();

    let breakeven = econ::capex_breakeven(book);
    let allocation = econ::allocate_resources(&e.resource_pool);
    let allocation_cost = econ::allocation_cost(&allocation, &e.resource_pool);
    let quarantined: std::collections::BTreeSet<NodeId> =
        e.quarantined.iter().map(|&n| NodeId(n)).collect();
    let risk_baseline = econ::security_risk(&e.vulnerabilities, &Default::default());
    let risk_quarantined = econ::security_risk(&e.vulnerabilities, &quarantined);
    let efficiency = match (e.useful_bits, e.total_bits) {
        (Some(useful), Some(total)) => {
            let eta = e.eta_opt.unwrap_or(1.0);
            match econ::efficiency_sdn(useful, total, eta) {
                Ok(v) => json!({"useful_bits": useful, "total_bits": total, "eta_opt": eta, "value": v}),
                Err(err) => return Err(CliError::Config(format!("econ efficiency: {err}"))),
            }
        }
        _ => serde_json::Value::Null,
    };

    let text = match args.format {
        Format::Json => {
            let doc = json!({
                "curve": curve,
                "breakeven": breakeven,
                "capacity_total": econ::capacity_total(caps),
                "efficiency": efficiency,
                "allocation": {
                    "bandwidth_bps": allocation.bandwidth_bps,
                    "power_w": allocation.power_w,
                    "cost": allocation_cost,
                },
                "risk": {
                    "baseline": risk_baseline,
                    "with_quarantine": risk_quarantined,
                    "quarantined": e.quarantined,
                },
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        Format::Csv => {
            let mut out =
                String::from("n,capex_manet,capex_sdn,opex_manet,opex_sdn,capacity_sdn\n");
            for &n in &ns {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    n,
                    econ::capex_manet(book, n as usize),
                    econ::capex_sdn(book, n as usize),
                    econ::opex_manet(book, n as usize),
                    econ::opex_sdn(book, n as usize),
                    econ::capacity_sdn(caps, n as usize),
                ));
            }
            let be = match breakeven {
                Breakeven::At(n) => n.to_string(),
                Breakeven::Never => "never".to_string(),
            };
            out.push_str(&format!("# breakeven,{be}\n"));
            out
        }
    };
    emit(&args, &text)
}
