//! Command-line front end: `analyze`, `sweep`, `synth`, `convert` and the
//! `collect` upload endpoint.
//!
//! Settings resolve as command-line flag, then the TOML file named by
//! `ANTASID_CONFIG`, then the built-in default. Exit status is 0 on success,
//! 1 when the analysis itself fails and 2 when the invocation is wrong.

pub mod server;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use antasid::difficulty::{EffectiveWidthConfig, TemporalFactorParams, WidthGrouping, WidthMethod, DEFAULT_ERROR_RATE};
use antasid::ingest::{self, ColumnMapping, ReadOutcome, Severity};
use antasid::pipeline::{self, AnalysisReport, CleanupSpec, CleanupStage};
use antasid::plots;
use antasid::stats::format_p;
use antasid::synth::{self, SynthSpec};
use antasid::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "ANTASID_CONFIG";

const AFTER_HELP: &str = "Settings not given as flags are read from the TOML file named by ANTASID_CONFIG \
(keys are flag names with underscores, e.g. error_rate = 0.03883), then fall back to the defaults shown.";

#[derive(Debug, Parser)]
#[command(name = "antasid", version, about = "Fitts's law analysis with temporally adjusted difficulty indices", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a trial log, fit all four difficulty models and write a report.
    #[command(after_help = AFTER_HELP)]
    Analyze(AnalyzeArgs),
    /// Refit all four models across a range of SD filter multipliers.
    #[command(after_help = AFTER_HELP)]
    Sweep(SweepArgs),
    /// Generate a synthetic trial log from the classical model.
    #[command(after_help = AFTER_HELP)]
    Synth(SynthArgs),
    /// Convert a delimited or JSON-lines file to a canonical trial log.
    #[command(after_help = AFTER_HELP)]
    Convert(ConvertArgs),
    /// Receive trial-log uploads over HTTP at POST /v1/sessions.
    #[command(after_help = AFTER_HELP)]
    Collect(CollectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum WeMethodArg {
    /// 4.133 x SD of endpoint offsets along the task axis
    Sd,
    /// nominal width scaled by 2.066 / z(error rate)
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GroupingArg {
    ParticipantWidth,
    Width,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StageArg {
    ErrorRemoval,
    L1,
    L2,
    /// run no cleanup stage
    None,
}

/// Options shared by `analyze` and `sweep`.
#[derive(Debug, Args)]
struct ModelArgs {
    /// Canonical trial log (.trials.jsonl)
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Effective-width method [default: sd]
    #[arg(long, value_enum)]
    we_method: Option<WeMethodArg>,
    /// Error rate for the discrete method, and fallback for SD groups without endpoints [default with --we-method discrete: 0.03883]
    #[arg(long, value_name = "P")]
    error_rate: Option<f64>,
    /// Endpoint pooling for the SD method [default: participant-width]
    #[arg(long, value_enum)]
    we_grouping: Option<GroupingArg>,
    /// Cleanup stages, comma separated, run in the order error-removal, l1, l2 [default: error-removal,l1,l2]
    #[arg(long, value_enum, value_delimiter = ',')]
    stages: Option<Vec<StageArg>>,
    /// Temporal factor scale a in t = -a*log2(MT + b) + c [default: 1]
    #[arg(long, value_name = "A", allow_negative_numbers = true)]
    t_a: Option<f64>,
    /// Temporal factor offset b [default: 0]
    #[arg(long, value_name = "B", allow_negative_numbers = true)]
    t_b: Option<f64>,
    /// Temporal factor constant c [default: 0]
    #[arg(long, value_name = "C", allow_negative_numbers = true)]
    t_c: Option<f64>,
    /// Abort on the first invalid input line instead of skipping it [default: false]
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// SD multiplier k of the movement-time filter [default: 3]
    #[arg(long, value_name = "K")]
    sd_filter: Option<f64>,
    /// Report document [default: report.json]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Directory for plot-data CSV files [default: none written]
    #[arg(long, value_name = "DIR")]
    plots: Option<PathBuf>,
    /// Also render SVG charts into the plot directory [default: false]
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Smallest SD multiplier [default: 1.5]
    #[arg(long, value_name = "K")]
    from: Option<f64>,
    /// Largest SD multiplier, inclusive [default: 8]
    #[arg(long, value_name = "K")]
    to: Option<f64>,
    /// Grid step [default: 0.25]
    #[arg(long, value_name = "DK")]
    step: Option<f64>,
    /// Per-k CSV output [default: sd_sweep.csv]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also render the sweep as SVG to this path [default: none]
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output trial log
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Number of trials [default: 1000]
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Intercept a in seconds [default: 0.3]
    #[arg(long, allow_negative_numbers = true)]
    intercept: Option<f64>,
    /// Slope b in seconds per bit [default: 0.1]
    #[arg(long)]
    slope: Option<f64>,
    /// Target widths in pixels, comma separated [default: 32,64,96,128]
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<f64>>,
    /// Smallest amplitude in pixels [default: 64]
    #[arg(long)]
    amplitude_min: Option<f64>,
    /// Largest amplitude in pixels [default: 1024]
    #[arg(long)]
    amplitude_max: Option<f64>,
    /// SD of additive movement-time noise in seconds [default: 0.05]
    #[arg(long)]
    mt_noise_sd: Option<f64>,
    /// SD of endpoint scatter along the task axis in pixels [default: 8]
    #[arg(long)]
    endpoint_sd: Option<f64>,
    /// Random seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of participants [default: 1]
    #[arg(long)]
    participants: Option<usize>,
    /// Sessions per participant [default: 1]
    #[arg(long)]
    sessions: Option<usize>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Foreign input file
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Column mapping (TOML)
    #[arg(long, value_name = "PATH")]
    mapping: PathBuf,
    /// Output canonical trial log
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Abort on the first bad row [default: false]
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// TCP port; 0 picks a free port [default: 8080]
    #[arg(long)]
    port: Option<u16>,
    /// Address to bind [default: 127.0.0.1]
    #[arg(long)]
    bind: Option<String>,
    /// Directory receiving <session_id>.trials.jsonl files [default: sessions]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Reject a whole upload at its first invalid line [default: false]
    #[arg(long)]
    strict: bool,
}

/// Settings file contents; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    we_method: Option<WeMethodArg>,
    error_rate: Option<f64>,
    we_grouping: Option<GroupingArg>,
    stages: Option<Vec<StageArg>>,
    sd_filter: Option<f64>,
    t_a: Option<f64>,
    t_b: Option<f64>,
    t_c: Option<f64>,
    strict: Option<bool>,
    svg: Option<bool>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    port: Option<u16>,
    bind: Option<String>,
    seed: Option<u64>,
}

/// Why a command failed, which fixes its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Wrong invocation: exit 2.
    Usage(String),
    /// The work itself failed: exit 1.
    Run(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_file_config() -> Result<FileConfig, Failure> {
    let Some(path) = std::env::var_os(CONFIG_ENV) else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| usage(format!("{CONFIG_ENV}={}: {e}", Path::new(&path).display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{CONFIG_ENV}={}: {e}", Path::new(&path).display())))
}

fn require_file(path: &Path, flag: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{flag} {}: no such file", path.display())))
    }
}

struct Model {
    we: EffectiveWidthConfig,
    t: TemporalFactorParams,
    stages: Vec<CleanupStage>,
    strict: bool,
    defaulted_error_rate: bool,
}

fn resolve_model(m: &ModelArgs, file: &FileConfig) -> Result<Model, Failure> {
    let method = m.we_method.or(file.we_method).unwrap_or(WeMethodArg::Sd);
    let explicit_rate = m.error_rate.or(file.error_rate);
    let (error_rate, defaulted_error_rate) = match (method, explicit_rate) {
        (WeMethodArg::Discrete, None) => (Some(DEFAULT_ERROR_RATE), true),
        (_, rate) => (rate, false),
    };
    let grouping = match m
        .we_grouping
        .or(file.we_grouping)
        .unwrap_or(GroupingArg::ParticipantWidth)
    {
        GroupingArg::ParticipantWidth => WidthGrouping::ByParticipantAndWidth,
        GroupingArg::Width => WidthGrouping::ByWidth,
        GroupingArg::Global => WidthGrouping::Global,
    };
    let we = EffectiveWidthConfig {
        method: match method {
            WeMethodArg::Sd => WidthMethod::StandardDeviation,
            WeMethodArg::Discrete => WidthMethod::DiscreteError,
        },
        error_rate,
        grouping,
    };
    we.validate().map_err(|e| usage(format!("--error-rate: {e}")))?;
    let t = TemporalFactorParams {
        a: m.t_a.or(file.t_a).unwrap_or(1.0),
        b: m.t_b.or(file.t_b).unwrap_or(0.0),
        c: m.t_c.or(file.t_c).unwrap_or(0.0),
    };
    t.validate().map_err(|e| usage(format!("--t-a/--t-b/--t-c: {e}")))?;
    let stage_args = m
        .stages
        .clone()
        .or_else(|| file.stages.clone())
        .unwrap_or_else(|| vec![StageArg::ErrorRemoval, StageArg::L1, StageArg::L2]);
    if stage_args.contains(&StageArg::None) && stage_args.len() > 1 {
        return Err(usage("--stages: `none` cannot be combined with other stages"));
    }
    let stages = stage_args
        .iter()
        .filter_map(|s| match s {
            StageArg::ErrorRemoval => Some(CleanupStage::ErrorRemoval),
            StageArg::L1 => Some(CleanupStage::L1),
            StageArg::L2 => Some(CleanupStage::L2),
            StageArg::None => None,
        })
        .collect();
    Ok(Model {
        we,
        t,
        stages,
        strict: m.strict || file.strict.unwrap_or(false),
        defaulted_error_rate,
    })
}

fn report_diagnostics(outcome: &ReadOutcome) {
    for d in &outcome.diagnostics {
        let level = match d.severity {
            Severity::Warning => "warning",
            Severity::Error => "skipped",
        };
        eprintln!("{level}: {d}");
    }
}

fn load_trials(path: &Path, strict: bool) -> Result<antasid::trial::Dataset, Failure> {
    let outcome = ingest::read_canonical(path, strict)?;
    report_diagnostics(&outcome);
    Ok(outcome.dataset)
}

fn announce_error_rate(model: &Model) {
    if model.defaulted_error_rate {
        eprintln!(
            "NOTE: --error-rate not given; using the approximate error rate {DEFAULT_ERROR_RATE} \
             (W_e ≈ W). This is an assumption, not a measured value."
        );
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::Run(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

/// Human-readable summary printed by `analyze`.
pub fn render_summary(report: &AnalysisReport) -> String {
    let mut out = format!(
        "trials analysed: {} (source: {})\n",
        report.trial_count, report.source_tag
    );
    if !report.cleanup.is_empty() {
        out.push_str("\ncleanup\n");
        out.push_str(&format!(
            "{:<14} {:>8} {:>9} {:>9} {:>8}\n",
            "stage", "input", "accepted", "rejected", "kept %"
        ));
        for rec in &report.cleanup {
            out.push_str(&format!(
                "{:<14} {:>8} {:>9} {:>9} {:>8.2}\n",
                rec.stage,
                rec.input,
                rec.accepted,
                rec.rejected,
                rec.accepted_pct()
            ));
        }
    }
    let w = &report.effective_width;
    out.push_str(&format!(
        "\nmean W = {:.4} px, mean W_e = {:.4} px ({:?}{})\n\n",
        w.mean_width_px,
        w.mean_effective_width_px,
        w.method,
        w.error_rate.map(|e| format!(", error rate {e}")).unwrap_or_default()
    ));
    out.push_str(&report.summary_table());
    out.push_str("\npairwise F (larger variance first)\n");
    for p in &report.pairwise_f {
        out.push_str(&format!(
            "{:<6} / {:<6} F = {:>9.4}  dof = ({}, {})  p = {}\n",
            p.a.to_string(),
            p.b.to_string(),
            p.result.f_stat,
            p.result.dof.0,
            p.result.dof.1,
            format_p(p.result.p_value)
        ));
    }
    out.push_str("\nTukey HSD\n");
    for p in &report.tukey.pairs {
        let shown = if p.adjusted_p <= antasid::stats::TUKEY_P_FLOOR {
            format!("<= {}", antasid::stats::TUKEY_P_FLOOR)
        } else {
            format!("{:.4}", p.adjusted_p)
        };
        out.push_str(&format!(
            "{:<7} - {:<7} diff = {:>9.4}  q = {:>9.3}  p_adj {}\n",
            p.group_a, p.group_b, p.mean_diff, p.q_stat, shown
        ));
    }
    let c = &report.correlations;
    let fmt = |v: Option<f64>| v.map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into());
    out.push_str(&format!(
        "\nr(t, MT) = {}   r(t, predicted MT_TA) = {}   r(t, predicted MT_TSA) = {}\n",
        fmt(c.t_vs_mt),
        fmt(c.t_vs_predicted_mt_ta),
        fmt(c.t_vs_predicted_mt_tsa)
    ));
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

fn cmd_analyze(args: AnalyzeArgs, file: &FileConfig) -> Result<(), Failure> {
    require_file(&args.model.input, "--input")?;
    let model = resolve_model(&args.model, file)?;
    let k = args.sd_filter.or(file.sd_filter).unwrap_or(3.0);
    let cleanup = CleanupSpec::new(k, model.stages.clone()).map_err(|e| usage(format!("--sd-filter: {e}")))?;
    let svg = args.svg || file.svg.unwrap_or(false);
    if svg && args.plots.is_none() {
        return Err(usage("--svg needs --plots <DIR>"));
    }
    announce_error_rate(&model);
    let dataset = load_trials(&args.model.input, model.strict)?;
    let report = pipeline::analyze(&dataset, &model.we, &model.t, &cleanup)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("report.json"));
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
    write_text(&out, &(json + "\n"))?;
    if let Some(dir) = &args.plots {
        plots::write_files(dir, &plots::report_files(&report, svg))?;
    }
    print!("{}", render_summary(&report));
    Ok(())
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig) -> Result<(), Failure> {
    require_file(&args.model.input, "--input")?;
    let model = resolve_model(&args.model, file)?;
    let from = args.from.or(file.from).unwrap_or(1.5);
    let to = args.to.or(file.to).unwrap_or(8.0);
    let step = args.step.or(file.step).unwrap_or(0.25);
    pipeline::sweep_grid(from, to, step).map_err(|e| usage(format!("--from/--to/--step: {e}")))?;
    announce_error_rate(&model);
    let dataset = load_trials(&args.model.input, model.strict)?;
    let rows = pipeline::sd_sweep(&dataset, &model.we, &model.t, &model.stages, from, to, step)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("sd_sweep.csv"));
    write_text(&out, &plots::sweep_csv(&rows))?;
    if let Some(svg) = &args.svg {
        write_text(svg, &plots::sweep_svg(&rows))?;
    }
    println!(
        "{:>6} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "k", "accepted", "R2_NA", "R2_SA", "R2_TA", "R2_TSA"
    );
    for r in &rows {
        match r.r_squared {
            Some(r2) => println!(
                "{:>6.2} {:>9} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                r.sd_multiplier, r.accepted, r2[0], r2[1], r2[2], r2[3]
            ),
            None => println!(
                "{:>6.2} {:>9} flagged: {}",
                r.sd_multiplier,
                r.accepted,
                r.flag.as_deref().unwrap_or("")
            ),
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, file: &FileConfig) -> Result<(), Failure> {
    let d = SynthSpec::default();
    let spec = SynthSpec {
        n_trials: args.n.unwrap_or(d.n_trials),
        intercept_s: args.intercept.unwrap_or(d.intercept_s),
        slope_s_per_bit: args.slope.unwrap_or(d.slope_s_per_bit),
        width_set: args.widths.unwrap_or(d.width_set),
        amplitude_range: (
            args.amplitude_min.unwrap_or(d.amplitude_range.0),
            args.amplitude_max.unwrap_or(d.amplitude_range.1),
        ),
        mt_noise_sd: args.mt_noise_sd.unwrap_or(d.mt_noise_sd),
        endpoint_scatter_sd: args.endpoint_sd.unwrap_or(d.endpoint_scatter_sd),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        participants: args.participants.unwrap_or(d.participants),
        sessions_per_participant: args.sessions.unwrap_or(d.sessions_per_participant),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let dataset = synth::generate(&spec)?;
    write_text(&args.out, &ingest::to_canonical_string(&dataset))?;
    eprintln!("wrote {} trials to {}", dataset.len(), args.out.display());
    Ok(())
}

fn cmd_convert(args: ConvertArgs, file: &FileConfig) -> Result<(), Failure> {
    require_file(&args.mapping, "--mapping")?;
    require_file(&args.input, "--input")?;
    let mapping = ColumnMapping::load(&args.mapping).map_err(|e| usage(format!("--mapping: {e}")))?;
    let outcome = ingest::convert(&args.input, &mapping, args.strict || file.strict.unwrap_or(false))?;
    report_diagnostics(&outcome);
    write_text(&args.out, &ingest::to_canonical_string(&outcome.dataset))?;
    eprintln!(
        "wrote {} trials to {} ({} rows rejected, {} filtered out)",
        outcome.dataset.len(),
        args.out.display(),
        outcome.rejected(),
        outcome.filtered
    );
    Ok(())
}

fn cmd_collect(args: CollectArgs, file: &FileConfig) -> Result<(), Failure> {
    let port = args.port.or(file.port).unwrap_or(8080);
    let bind = args
        .bind
        .or_else(|| file.bind.clone())
        .unwrap_or_else(|| "127.0.0.1".into());
    let addr: std::net::IpAddr = bind
        .parse()
        .map_err(|_| usage(format!("--bind: not an IP address: {bind}")))?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("sessions"));
    let strict = args.strict || file.strict.unwrap_or(false);
    std::fs::create_dir_all(&out).map_err(|e| Failure::Run(format!("{}: {e}", out.display())))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Run(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((addr, port))
            .await
            .map_err(|e| Failure::Run(format!("cannot listen on {addr}:{port}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::Run(e.to_string()))?;
        println!("listening on {local}");
        use std::io::Write;
        let _ = std::io::stdout().flush();
        server::serve(listener, server::Collector::new(out, strict), async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::Run(e.to_string()))
    })?;
    eprintln!("shut down");
    Ok(())
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = load_file_config().and_then(|file| match cli.command {
        Command::Analyze(a) => cmd_analyze(a, &file),
        Command::Sweep(a) => cmd_sweep(a, &file),
        Command::Synth(a) => cmd_synth(a, &file),
        Command::Convert(a) => cmd_convert(a, &file),
        Command::Collect(a) => cmd_collect(a, &file),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}\n\nFor more information, try '--help'."),
                Failure::Run(m) => eprintln!("error: {m}"),
            }
            f.exit_code()
        }
    }
}
