use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use vcgen_core::datagen::{
    build_migration_pair, filter_tree, mask_instance, MaskRequest, MigrationCategory, PairRequest,
};
use vcgen_core::harness::{
    build_report, ingest, read_jsonl, render_report, run_scoring, GroupKey, ReportFormat, ScoringConfig,
    ScoringOutput,
};
use vcgen_core::harness::report::{read_scoring_output, write_text};
use vcgen_core::lifecycle::analyze_versions_root;
use vcgen_core::metrics::CdcOptions;
use vcgen_core::{Error, Granularity, Metric, Result, TaskInstance};

#[derive(Debug, Parser)]
#[command(name = "vcgen", version, about = "Score and build version-aware code generation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score samples against instances and emit aggregate tables.
    Score {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        exec_reports: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "em,ism,pm,cdc")]
        metrics: Vec<Metric>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        group_by: Vec<GroupKey>,
        /// Scoring threads; defaults to the number of CPUs.
        #[arg(long)]
        workers: Option<usize>,
        /// Rule 4 requires a core-token call inside the `with` block.
        #[arg(long)]
        scoped_with: bool,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full scoring output (per-instance vectors) as JSON.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Tag API lifecycles across `<root>/<version>/` source trees.
    Lifecycle {
        #[arg(long)]
        versions_root: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mask meta-instances into completion instances.
    Mask {
        #[arg(long)]
        granularity: Granularity,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pair meta-instances into migration instances.
    Pair {
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Judge every `.py` file under a corpus root.
    Filter {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render saved scoring outputs; several inputs add cross-run correlations.
    Report {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A migration instance annotated with its category. Still readable as
/// an instances-file record.
#[derive(Serialize)]
struct PairedInstance {
    #[serde(flatten)]
    instance: TaskInstance,
    category: MigrationCategory,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io { path: "<stdout>".into(), source: e }),
    }
}

fn jsonl<T: Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

fn run_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn report_runs(inputs: &[PathBuf]) -> Result<Vec<(String, ScoringOutput)>> {
    let labels: Vec<String> = inputs.iter().map(|p| run_label(p)).collect();
    let unique = labels.iter().collect::<BTreeSet<_>>().len() == labels.len();
    inputs
        .iter()
        .zip(labels)
        .map(|(path, label)| {
            let label = if unique { label } else { path.display().to_string() };
            Ok((label, read_scoring_output(path)?))
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Score {
            instances,
            samples,
            exec_reports,
            metrics,
            k,
            group_by,
            workers,
            scoped_with,
            format,
            out,
            save,
        } => {
            let set = ingest(&instances, &samples, exec_reports.as_deref())?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
            if workers == 0 {
                return Err(Error::InvalidArgs("--workers must be >= 1".into()));
            }
            let config = ScoringConfig {
                metrics,
                ks: k,
                group_by,
                workers,
                cdc: CdcOptions { scoped_with },
            };
            let output = run_scoring(&set, &config)?;
            for inst in &output.instances {
                for w in &inst.warnings {
                    log::warn!("{}: {w}", inst.instance_id);
                }
            }
            if let Some(path) = save {
                let text = serde_json::to_string_pretty(&output).expect("output serializes") + "\n";
                write_text(&path, &text)?;
            }
            let rows = build_report(&[(run_label(&instances), output)]);
            emit(out.as_deref(), &render_report(&rows, format)?)
        }
        Command::Lifecycle { versions_root, out } => {
            let analysis = analyze_versions_root(&versions_root)?;
            let text = serde_json::to_string_pretty(&analysis).expect("analysis serializes") + "\n";
            emit(out.as_deref(), &text)
        }
        Command::Mask { granularity, spec, out } => {
            let requests: Vec<MaskRequest> = read_jsonl(&spec)?;
            let mut produced = Vec::with_capacity(requests.len());
            for req in &requests {
                if req.spec.target.granularity() != granularity {
                    return Err(Error::InvalidArgs(format!(
                        "request {} targets {} but --granularity is {granularity}",
                        req.id,
                        req.spec.target.granularity()
                    )));
                }
                let inst = mask_instance(&req.id, &req.meta, &req.spec).inspect_err(|e| {
                    log::error!("request {}: {e}", req.id);
                })?;
                produced.push(inst);
            }
            emit(out.as_deref(), &jsonl(&produced))
        }
        Command::Pair { meta, out } => {
            let requests: Vec<PairRequest> = read_jsonl(&meta)?;
            let produced = requests
                .iter()
                .map(|r| {
                    build_migration_pair(&r.id, &r.core_token, &r.source, &r.target)
                        .map(|(instance, category)| PairedInstance { instance, category })
                        .inspect_err(|e| log::error!("request {}: {e}", r.id))
                })
                .collect::<Result<Vec<_>>>()?;
            emit(out.as_deref(), &jsonl(&produced))
        }
        Command::Filter { root, out } => {
            if !root.is_dir() {
                return Err(Error::Io {
                    path: root,
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
                });
            }
            let verdicts = filter_tree(&root)?;
            let kept = verdicts.iter().filter(|v| v.verdict.is_keep()).count();
            log::info!("kept {kept} of {} files", verdicts.len());
            emit(out.as_deref(), &jsonl(&verdicts))
        }
        Command::Report { inputs, format, out } => {
            let runs = report_runs(&inputs)?;
            let rows = build_report(&runs);
            emit(out.as_deref(), &render_report(&rows, format)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
