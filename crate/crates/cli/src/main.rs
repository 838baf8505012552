mod commands;
mod error;
mod io;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "irtune", version, about = "Predict NUMA and prefetcher configurations from compiler IR")]
struct Cli {
    /// Seed for every random choice (sampling, folds, model init, GA).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML settings file with optional [model], [hybrid], [flag_ga] and [eval] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine description file, or `skylake` / `sandybridge`.
    #[arg(long, global = true, default_value = "skylake")]
    machine: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split the parallel regions of an IR file into one file each.
    Extract(ExtractArgs),
    /// Compile every region under sampled flag sequences.
    Augment(AugmentArgs),
    /// Build program graphs and the token vocabulary.
    BuildGraphs(BuildGraphsArgs),
    /// Reduce the label set and label every region with its best label.
    Label(LabelArgs),
    /// Train the static graph model.
    TrainStatic(TrainStaticArgs),
    /// Pick the explored flag sequence and the flag-label set.
    SelectFlags(SelectFlagsArgs),
    /// Train the per-region flag-sequence predictor.
    TrainFlagModel(TrainFlagModelArgs),
    /// Train the router deciding between static and dynamic prediction.
    TrainHybrid(TrainHybridArgs),
    /// Train the counter-based dynamic model.
    TrainDynamic(TrainDynamicArgs),
    /// Predict configurations for new regions.
    Predict(PredictArgs),
    /// Cross-validate the workflow and write a report.
    Evaluate(EvaluateArgs),
    /// Summarise a report and emit plot data.
    Report(ReportArgs),
    /// Generate a synthetic corpus with planted labels.
    SynthCorpus(SynthArgs),
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long, default_value = irtune::ir::DEFAULT_REGION_PATTERN)]
    pattern: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// Pass names, one per line or comma separated. Defaults to every internal pass.
    #[arg(long)]
    base_pipeline: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    prob: f64,
    #[arg(long, default_value_t = 4)]
    repeats: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Use the sequences of this manifest instead of sampling.
    #[arg(long)]
    sequences: Option<PathBuf>,
    /// External optimizer command template with {in}, {passes} or {flags}, and optionally {out}.
    #[arg(long)]
    driver: Option<String>,
    #[arg(long)]
    in_dir: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct BuildGraphsArgs {
    #[arg(long)]
    in_dir: PathBuf,
    /// Vocabulary file; read when it exists, otherwise built and written.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    timings: PathBuf,
    /// Size of the reduced label set; defaults to [eval] labels.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainStaticArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Train only on graphs of these sequence ids.
    #[arg(long, value_delimiter = ',')]
    sequences: Option<Vec<u32>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectFlagsArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    timings: PathBuf,
    /// Candidate sequence ids; defaults to every non-identity sequence with graphs.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<u32>>,
    #[arg(long)]
    coverage: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainFlagModelArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    timings: PathBuf,
    /// Output of select-flags.
    #[arg(long)]
    selection: PathBuf,
    /// Sequence manifest that defines the probe sequence.
    #[arg(long)]
    sequences: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    probe: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainHybridArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    timings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Sequence whose graphs feed the router.
    #[arg(long, default_value_t = 0)]
    seq: u32,
    #[arg(long)]
    threshold: Option<f64>,
    /// Label the router from held-out inner-split errors instead of resubstitution.
    #[arg(long)]
    inner_split: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainDynamicArgs {
    #[arg(long)]
    counters: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// A region file or a directory of region files.
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value = "static")]
    mode: String,
    /// `explored` or `predicted`.
    #[arg(long, default_value = "explored")]
    flag_mode: String,
    /// Sequence manifest for the explored and predicted sequences.
    #[arg(long)]
    sequences: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    explored_seq: u32,
    #[arg(long)]
    flag_model: Option<PathBuf>,
    #[arg(long)]
    router: Option<PathBuf>,
    #[arg(long)]
    dynamic: Option<PathBuf>,
    #[arg(long)]
    counters: Option<PathBuf>,
    /// Fail when a region needs counters that are not available.
    #[arg(long)]
    strict: bool,
    /// Where to list regions that need profiling.
    #[arg(long)]
    profiling_requests: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    timings: PathBuf,
    #[arg(long)]
    counters: Option<PathBuf>,
    /// Ground-truth manifest; adds router accuracy to the summary.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    /// Size of the reduced label set.
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long, default_value = "static")]
    mode: String,
    /// `fixed:<id>`, `explored` or `predicted`.
    #[arg(long, default_value = "fixed:0")]
    flag_mode: String,
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    train_sequences: Option<Vec<u32>>,
    #[arg(long)]
    sequences: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    probe: u32,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    inner_split: bool,
    /// Score translated predictions on another machine's timings.
    #[arg(long, requires = "target_machine")]
    target_timings: Option<PathBuf>,
    #[arg(long)]
    target_machine: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-figure CSVs.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
    /// Timings for the label-sweep and per-configuration data.
    #[arg(long)]
    timings: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    regions: usize,
    #[arg(long, default_value_t = 13)]
    labels: usize,
    #[arg(long, default_value_t = 1.0)]
    static_fraction: f64,
    /// Plant two motif classes that need different flag sequences.
    #[arg(long)]
    flag_motifs: bool,
    #[arg(long, default_value_t = 0.6)]
    class_a_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    size2_shift: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irtune: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
