//! `washtrade` — wash-trade surveillance over NFT transaction files.
//!
//! Subcommands: `detect` writes cycles.json, `report` writes the statistics
//! tables, `graph` writes annotated DOT/JSON graphs, `timeseries` writes the
//! monthly CSV, `synth` emits synthetic fixtures. Exit code 0 means the run
//! completed (even with zero findings); 1 means an input or configuration
//! problem.

mod manifest;
mod pipeline;

use chrono::{Duration, TimeZone, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use manifest::{ConfigEcho, RunManifest};
use pipeline::{cycles_json, detect_ledger, input_format, load_ledger, sanitize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use washtrade::analytics::{
    collection_stats, profit_stats, profit_table_csv, rollup_collection_stats, rollup_profit_stats,
    stats_table_csv, timeseries_csv, wallet_profits, wallets_csv, wash_time_series, ProfitMetric,
    ProfitStats,
};
use washtrade::detector::label_all;
use washtrade::detector::DetectorConfig;
use washtrade::graph::{build_graph, graph_json, to_dot};
use washtrade::ledger::{build_ledger, InputFormat, Ledger};
use washtrade::money::Usd;
use washtrade::synth::{alternating_sales, generate, PlantedCycle, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "washtrade",
    version,
    about = "NFT wash-trade detection and reporting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect wash cycles and write cycles.json with profit breakdowns
    Detect(DetectArgs),
    /// Aggregate one or more collections into statistics tables
    Report(ReportArgs),
    /// Export annotated per-token transaction graphs (DOT + JSON)
    Graph(GraphArgs),
    /// Write the monthly wash-vs-total sales series
    Timeseries(TimeseriesArgs),
    /// Generate a synthetic fixture CSV
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct DetectorOpts {
    /// Repurchase window in days (inclusive bound)
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(i64).range(1..))]
    window_days: i64,
    /// Drop the window constraint entirely
    #[arg(long)]
    windowless: bool,
    /// Let transfers qualify as entry/repurchase events
    #[arg(long)]
    include_transfers: bool,
}

impl DetectorOpts {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            window: Duration::days(self.window_days),
            include_transfers_in_matching: self.include_transfers,
            windowless: self.windowless,
        }
    }

    fn echo(&self, format: &str) -> ConfigEcho {
        ConfigEcho {
            window_days: self.window_days,
            windowless: self.windowless,
            include_transfers: self.include_transfers,
            format: format.to_owned(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormatArg {
    Csv,
    Jsonl,
}

impl InputFormatArg {
    fn to_format(self) -> InputFormat {
        match self {
            InputFormatArg::Csv => InputFormat::Csv,
            InputFormatArg::Jsonl => InputFormat::Jsonl,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Transaction file (CSV or JSONL, by extension)
    #[arg(long)]
    input: PathBuf,
    /// Force the input format instead of inferring it
    #[arg(long, value_enum)]
    input_format: Option<InputFormatArg>,
    #[command(flatten)]
    detector: DetectorOpts,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Pin the manifest timestamp (for reproducible runs)
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Transaction file, one per collection (repeatable)
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum)]
    input_format: Option<InputFormatArg>,
    #[command(flatten)]
    detector: DetectorOpts,
    /// Table format: csv writes stats.csv/profits.csv/wallets.csv, json
    /// writes a single stats.json
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    input_format: Option<InputFormatArg>,
    #[command(flatten)]
    detector: DetectorOpts,
    /// Export one specific token
    #[arg(long, conflicts_with = "all")]
    token: Option<String>,
    /// Export every wash token (the default)
    #[arg(long)]
    all: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Args)]
struct TimeseriesArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    input_format: Option<InputFormatArg>,
    #[command(flatten)]
    detector: DetectorOpts,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wallet pool size
    #[arg(long, default_value_t = 64)]
    wallets: usize,
    /// Total transactions
    #[arg(long, default_value_t = 12)]
    txs: usize,
    #[arg(long, default_value = "synthetic")]
    collection: String,
    #[arg(long, default_value = "1")]
    token: String,
    /// Filler price model: base value
    #[arg(long, default_value = "50.00")]
    base_usd: String,
    /// Filler price model: uniform jitter
    #[arg(long, default_value = "10.00")]
    jitter_usd: String,
    /// Plant a cycle: "suspect=0,hops=1,gap-days=5,entry=100.00,exit=200.00"
    /// (repeatable)
    #[arg(long)]
    plant: Vec<String>,
    /// Instead: a run of back-and-forth sales between two wallets
    #[arg(long, conflicts_with = "plant")]
    alternating: Option<usize>,
    #[arg(long, default_value = "14.00")]
    price_from: String,
    #[arg(long, default_value = "197.00")]
    price_to: String,
    /// Write here instead of stdout
    #[arg(long)]
    out_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Report(args) => cmd_report(args),
        Command::Graph(args) => cmd_graph(args),
        Command::Timeseries(args) => cmd_timeseries(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn ensure_out_dir(path: &Path) -> Result<(), String> {
    std::fs::create_dir_all(path).map_err(|e| format!("cannot create {}: {e}", path.display()))
}

fn write_text(dir: &Path, name: &str, body: &str) -> Result<(), String> {
    std::fs::write(dir.join(name), body).map_err(|e| format!("cannot write {name}: {e}"))
}

fn load_from(path: &Path, forced: Option<InputFormatArg>) -> Result<(Ledger, Vec<u8>), String> {
    let bytes = read_input(path)?;
    let format = input_format(path, forced.map(InputFormatArg::to_format));
    let ledger = load_ledger(&bytes, format)?;
    Ok((ledger, bytes))
}

fn cmd_detect(args: DetectArgs) -> Result<(), String> {
    let config = args.detector.config();
    config.validate().map_err(|e| e.to_string())?;
    let (ledger, bytes) = load_from(&args.input, args.input_format)?;
    ensure_out_dir(&args.out)?;

    let detection = detect_ledger(&ledger, &config);
    let body = serde_json::to_string_pretty(&cycles_json(&ledger, &detection, &config))
        .expect("cycles serialize");
    write_text(&args.out, "cycles.json", &(body + "\n"))?;

    let mut manifest = RunManifest::new("detect", args.detector.echo("json"), args.fixed_clock);
    manifest.add_input(&args.input, &bytes);
    manifest.add_output("cycles.json");
    manifest.write(&args.out).map_err(|e| e.to_string())?;
    Ok(())
}

struct CollectionReport {
    ledger: Ledger,
    stats: washtrade::analytics::CollectionStats,
    profits: Vec<ProfitStats>,
    wallets: Vec<washtrade::analytics::WalletProfit>,
}

fn cmd_report(args: ReportArgs) -> Result<(), String> {
    let config = args.detector.config();
    config.validate().map_err(|e| e.to_string())?;
    ensure_out_dir(&args.out)?;

    let format_name = match args.format {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    };
    let mut manifest =
        RunManifest::new("report", args.detector.echo(format_name), args.fixed_clock);

    let mut reports: Vec<CollectionReport> = Vec::new();
    for path in &args.input {
        let (ledger, bytes) = load_from(path, args.input_format)?;
        manifest.add_input(path, &bytes);
        let detection = detect_ledger(&ledger, &config);
        let stats = collection_stats(&ledger, &detection.cycles);
        let profits = ProfitMetric::ALL
            .iter()
            .map(|&m| profit_stats(&ledger.collection, &detection.breakdowns, m))
            .collect();
        let wallets = wallet_profits(&ledger, &detection.cycles);
        reports.push(CollectionReport {
            ledger,
            stats,
            profits,
            wallets,
        });
    }
    reports.sort_by(|a, b| a.ledger.collection.cmp(&b.ledger.collection));

    let stat_rows: Vec<_> = reports.iter().map(|r| r.stats.clone()).collect();
    let (average, total) = rollup_collection_stats(&stat_rows);

    let mut profit_rows: Vec<ProfitStats> = Vec::new();
    for metric in ProfitMetric::ALL {
        let rows: Vec<ProfitStats> = reports
            .iter()
            .flat_map(|r| r.profits.iter().filter(|p| p.metric == metric).cloned())
            .collect();
        let overall = rollup_profit_stats(&rows);
        profit_rows.extend(rows);
        profit_rows.push(overall);
    }

    match args.format {
        FormatArg::Csv => {
            write_text(
                &args.out,
                "stats.csv",
                &stats_table_csv(&stat_rows, &average, &total),
            )?;
            manifest.add_output("stats.csv");
            write_text(&args.out, "profits.csv", &profit_table_csv(&profit_rows))?;
            manifest.add_output("profits.csv");
            let mut wallets = String::from("collection,wallet,sales_profit,is_wash_trader\n");
            for r in &reports {
                let section = wallets_csv(&r.ledger.collection, &r.wallets);
                wallets.push_str(section.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
            }
            write_text(&args.out, "wallets.csv", &wallets)?;
            manifest.add_output("wallets.csv");
        }
        FormatArg::Json => {
            let body = json!({
                "collections": stat_rows,
                "average": average,
                "total": total,
                "profits": profit_rows,
                "wallets": reports
                    .iter()
                    .map(|r| json!({"collection": r.ledger.collection, "rows": r.wallets}))
                    .collect::<Vec<_>>(),
            });
            let text = serde_json::to_string_pretty(&body).expect("report serializes");
            write_text(&args.out, "stats.json", &(text + "\n"))?;
            manifest.add_output("stats.json");
        }
    }
    manifest.write(&args.out).map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_graph(args: GraphArgs) -> Result<(), String> {
    let config = args.detector.config();
    config.validate().map_err(|e| e.to_string())?;
    let (ledger, bytes) = load_from(&args.input, args.input_format)?;
    ensure_out_dir(&args.out)?;

    let detection = detect_ledger(&ledger, &config);
    let selected: Vec<String> = match &args.token {
        Some(token) => {
            if !ledger.histories.contains_key(token) {
                return Err(format!("unknown token `{token}`"));
            }
            vec![token.clone()]
        }
        None => {
            // default: every wash token
            let mut tokens: Vec<String> = ledger
                .histories
                .keys()
                .filter(|t| detection.cycles.iter().any(|c| &c.token_id == *t))
                .cloned()
                .collect();
            tokens.sort();
            tokens
        }
    };

    let mut manifest = RunManifest::new("graph", args.detector.echo("dot"), args.fixed_clock);
    manifest.add_input(&args.input, &bytes);
    for token in &selected {
        let history = &ledger.histories[token];
        let graph = build_graph(history).map_err(|e| e.to_string())?;
        let cycles: Vec<_> = detection
            .cycles
            .iter()
            .filter(|c| &c.token_id == token)
            .cloned()
            .collect();
        let labels = label_all(history, &cycles);
        let dot = to_dot(&graph, &labels).map_err(|e| e.to_string())?;
        let graph_value = graph_json(&graph, &labels, history).map_err(|e| e.to_string())?;
        let stem = sanitize(token);
        write_text(&args.out, &format!("token_{stem}.dot"), &dot)?;
        manifest.add_output(&format!("token_{stem}.dot"));
        let text = serde_json::to_string_pretty(&graph_value).expect("graph serializes");
        write_text(
            &args.out,
            &format!("token_{stem}.graph.json"),
            &(text + "\n"),
        )?;
        manifest.add_output(&format!("token_{stem}.graph.json"));
    }
    manifest.write(&args.out).map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_timeseries(args: TimeseriesArgs) -> Result<(), String> {
    let config = args.detector.config();
    config.validate().map_err(|e| e.to_string())?;
    let (ledger, bytes) = load_from(&args.input, args.input_format)?;
    ensure_out_dir(&args.out)?;

    let detection = detect_ledger(&ledger, &config);
    let series = wash_time_series(&ledger, &detection.cycles);
    write_text(&args.out, "timeseries.csv", &timeseries_csv(&series))?;

    let mut manifest = RunManifest::new("timeseries", args.detector.echo("csv"), args.fixed_clock);
    manifest.add_input(&args.input, &bytes);
    manifest.add_output("timeseries.csv");
    manifest.write(&args.out).map_err(|e| e.to_string())?;
    Ok(())
}

fn parse_plant(raw: &str) -> Result<PlantedCycle, String> {
    let mut suspect = None;
    let mut hops = 0usize;
    let mut gap_days = None;
    let mut entry = None;
    let mut exit = None;
    for part in raw.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("bad --plant component `{part}`"))?;
        match key.trim() {
            "suspect" => suspect = Some(value.trim().parse::<usize>().map_err(|e| e.to_string())?),
            "hops" => hops = value.trim().parse::<usize>().map_err(|e| e.to_string())?,
            "gap-days" => gap_days = Some(value.trim().parse::<i64>().map_err(|e| e.to_string())?),
            "entry" => entry = Some(Usd::parse(value).map_err(|e| e.to_string())?),
            "exit" => exit = Some(Usd::parse(value).map_err(|e| e.to_string())?),
            other => return Err(format!("unknown --plant key `{other}`")),
        }
    }
    Ok(PlantedCycle {
        suspect: suspect.ok_or("--plant needs suspect=N")?,
        hops,
        gap: Duration::days(gap_days.ok_or("--plant needs gap-days=N")?),
        entry_usd: entry.ok_or("--plant needs entry=USD")?,
        exit_usd: exit.ok_or("--plant needs exit=USD")?,
    })
}

fn cmd_synth(args: SynthArgs) -> Result<(), String> {
    let history = if let Some(count) = args.alternating {
        alternating_sales(
            &args.collection,
            &args.token,
            "0x000000000000000000000000000000000000000a",
            "0x000000000000000000000000000000000000000b",
            count,
            Usd::parse(&args.price_from).map_err(|e| e.to_string())?,
            Usd::parse(&args.price_to).map_err(|e| e.to_string())?,
            Utc.with_ymd_and_hms(2022, 5, 1, 0, 0, 0).unwrap(),
            Duration::minutes(30),
        )
    } else {
        let planted = args
            .plant
            .iter()
            .map(|raw| parse_plant(raw))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = ScenarioSpec {
            collection: args.collection.clone(),
            token_id: args.token.clone(),
            wallet_count: args.wallets,
            tx_count: args.txs,
            planted,
            base_usd: Usd::parse(&args.base_usd).map_err(|e| e.to_string())?,
            jitter_usd: Usd::parse(&args.jitter_usd).map_err(|e| e.to_string())?,
            seed: args.seed,
        };
        generate(&spec).map_err(|e| e.to_string())?
    };

    let ledger = build_ledger(history.txs().to_vec()).map_err(|e| e.to_string())?;
    let csv = ledger.to_csv();
    match &args.out_file {
        Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    Ok(())
}
