//! Benchmark front end for the safekit toolkit.
//!
//! Subcommands wire the full pipeline: generate or ingest corpora,
//! convert to SAFE, augment by fragment-order randomization, train an
//! n-gram model, sample de novo, run scaffold-decoration and
//! fragment-linking benchmarks, and emit aggregated metric reports.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error.

mod config;
mod lock;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safekit::clm::{self, NGramModel, SamplerConfig, SmoothingParams};
use safekit::corpus::{self, mix};
use safekit::fragmenter::FragmentationScheme;
use safekit::metrics::{Aggregate, Constraint, MetricsReport};
use safekit::molgraph::{canonical_smiles, parse_smiles};
use safekit::safecodec::{self, BlockOrder, DiscardRecord, SafeManifest};

use config::{resolve_output, sidecar_path, ConfigOverlay, RunConfig};
use lock::DirLock;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "safekit",
    about = "SAFE molecular line notation benchmark pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that reads the override chain.
#[derive(Args, Debug, Default)]
struct CommonOverrides {
    /// TOML config file (defaults < file < flags)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fragmentation scheme: hr|brics|recap|mmpa|rotatable
    #[arg(long)]
    scheme: Option<String>,
    /// Line notation: smiles|safe
    #[arg(long)]
    notation: Option<String>,
    /// n-gram order (2..=8)
    #[arg(long)]
    order: Option<usize>,
    /// absolute discount in (0,1)
    #[arg(long)]
    discount: Option<f64>,
    /// sampling temperature
    #[arg(long)]
    temperature: Option<f64>,
    /// token budget per generation
    #[arg(long)]
    max_tokens: Option<usize>,
    /// samples per seed (de novo)
    #[arg(long)]
    samples: Option<usize>,
    /// number of sampling seeds
    #[arg(long)]
    seeds: Option<usize>,
    /// samples per constraint (decorate/link)
    #[arg(long)]
    samples_per_constraint: Option<usize>,
    /// base random seed
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonOverrides {
    fn overlay(&self) -> ConfigOverlay {
        ConfigOverlay {
            scheme: self.scheme.clone(),
            notation: self.notation.clone(),
            order: self.order,
            discount: self.discount,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            samples: self.samples,
            seeds: self.seeds,
            samples_per_constraint: self.samples_per_constraint,
            seed: self.seed,
        }
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(self.config.as_deref(), &self.overlay())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drug-like corpus (.smi)
    Gen {
        #[command(flatten)]
        common: CommonOverrides,
        /// number of molecules
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Convert a .smi corpus to SAFE, one line per molecule
    Convert {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        input: PathBuf,
        /// block order: canonical|randomized
        #[arg(long, default_value = "canonical")]
        block_order: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write k randomized SAFE variants per molecule
    Augment {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long, default_value_t = 5)]
        k: u32,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train an n-gram model on a corpus
    Train {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample de novo molecules across seeds into a run directory
    Sample {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Scaffold-decoration benchmark over a scaffold file
    Decorate {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        model: PathBuf,
        /// one SMILES-with-[*] scaffold per line
        #[arg(long)]
        scaffolds: PathBuf,
        /// training corpus for novelty
        #[arg(long)]
        training: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fragment-linking benchmark over a pair file
    Link {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long)]
        model: PathBuf,
        /// two tab-separated fragment SMILES per line
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        training: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Aggregate sample files into a mean +- std CSV/JSON report
    Report {
        #[command(flatten)]
        common: CommonOverrides,
        /// sample files, one generation per line (typically one per seed)
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// training corpus for novelty
        #[arg(long)]
        training: Option<PathBuf>,
        /// row label (representation/run name)
        #[arg(long, default_value = "run")]
        label: String,
        /// output base path; writes <base>.csv and <base>.json
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Data(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            common,
            count,
            output,
        } => cmd_gen(&common, count, &output),
        Command::Convert {
            common,
            input,
            block_order,
            output,
        } => cmd_convert(&common, &input, &block_order, &output),
        Command::Augment {
            common,
            input,
            k,
            output,
        } => cmd_augment(&common, &input, k, &output),
        Command::Train {
            common,
            input,
            output,
        } => cmd_train(&common, &input, &output),
        Command::Sample {
            common,
            model,
            output,
        } => cmd_sample(&common, &model, &output),
        Command::Decorate {
            common,
            model,
            scaffolds,
            training,
            output,
        } => cmd_design(&common, &model, &scaffolds, training.as_deref(), &output, DesignKind::Decorate),
        Command::Link {
            common,
            model,
            pairs,
            training,
            output,
        } => cmd_design(&common, &model, &pairs, training.as_deref(), &output, DesignKind::Link),
        Command::Report {
            common,
            inputs,
            training,
            label,
            output,
        } => cmd_report(&common, &inputs, training.as_deref(), &label, &output),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    corpus::read_smi(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), CliError> {
    config::ensure_parent(path)?;
    corpus::write_smi(path, lines)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    config::ensure_parent(path)?;
    let json = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn cmd_gen(common: &CommonOverrides, count: usize, output: &Path) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let output = resolve_output(output);
    let lines = corpus::synthesize(count, cfg.seed);
    write_lines(&output, &lines)?;
    cfg.write_sidecar(&output)?;
    println!("gen: wrote {} molecules to {}", lines.len(), output.display());
    Ok(())
}

fn parse_block_order(text: &str, seed: u64, line: usize) -> Result<BlockOrder, CliError> {
    match text {
        "canonical" => Ok(BlockOrder::Canonical),
        "randomized" => Ok(BlockOrder::Randomized(mix(mix(seed, line as u64), 0))),
        other => Err(CliError::Config(format!("unknown block order {other:?}"))),
    }
}

fn cmd_convert(
    common: &CommonOverrides,
    input: &Path,
    block_order: &str,
    output: &Path,
) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    if !matches!(block_order, "canonical" | "randomized") {
        return Err(CliError::Config(format!(
            "unknown block order {block_order:?}"
        )));
    }
    let output = resolve_output(output);
    let lines = read_lines(input)?;
    let mut written = Vec::new();
    let mut discards = Vec::new();
    for (idx, smiles) in lines.iter().enumerate() {
        match convert_line(smiles, cfg.scheme(), block_order, cfg.seed, idx) {
            Ok(text) => written.push(text),
            Err(reason) => discards.push(DiscardRecord {
                line: idx + 1,
                reason,
            }),
        }
    }
    write_lines(&output, &written)?;
    let manifest = SafeManifest {
        scheme: cfg.scheme.clone(),
        order: block_order.to_string(),
        seed: cfg.seed,
        augmentation: None,
        input_count: lines.len(),
        written: written.len(),
        discarded: discards.len(),
        discards,
    };
    write_json(&sidecar_path(&output, "manifest.json"), &manifest)?;
    cfg.write_sidecar(&output)?;
    println!(
        "convert: {} written, {} discarded -> {}",
        manifest.written,
        manifest.discarded,
        output.display()
    );
    Ok(())
}

fn convert_line(
    smiles: &str,
    scheme: FragmentationScheme,
    block_order: &str,
    seed: u64,
    idx: usize,
) -> Result<String, String> {
    let g = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let order = parse_block_order(block_order, seed, idx).map_err(|e| e.to_string())?;
    let safe = safecodec::encode(&g, scheme, order).map_err(|e| e.to_string())?;
    Ok(safe.text().to_string())
}

fn cmd_augment(
    common: &CommonOverrides,
    input: &Path,
    k: u32,
    output: &Path,
) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".to_string()));
    }
    let output = resolve_output(output);
    let lines = read_lines(input)?;
    let mut written = Vec::new();
    let mut discards = Vec::new();
    for (idx, smiles) in lines.iter().enumerate() {
        match parse_smiles(smiles) {
            Ok(g) => {
                let mut failed = None;
                for rep in 0..k {
                    let seed = mix(mix(cfg.seed, idx as u64), u64::from(rep));
                    match safecodec::encode(&g, cfg.scheme(), BlockOrder::Randomized(seed)) {
                        Ok(safe) => written.push(safe.text().to_string()),
                        Err(e) => {
                            failed = Some(e.to_string());
                            break;
                        }
                    }
                }
                if let Some(reason) = failed {
                    discards.push(DiscardRecord {
                        line: idx + 1,
                        reason,
                    });
                }
            }
            Err(e) => discards.push(DiscardRecord {
                line: idx + 1,
                reason: e.to_string(),
            }),
        }
    }
    write_lines(&output, &written)?;
    let manifest = SafeManifest {
        scheme: cfg.scheme.clone(),
        order: "randomized".to_string(),
        seed: cfg.seed,
        augmentation: Some(k),
        input_count: lines.len(),
        written: written.len(),
        discarded: discards.len(),
        discards,
    };
    write_json(&sidecar_path(&output, "manifest.json"), &manifest)?;
    cfg.write_sidecar(&output)?;
    println!(
        "augment: {} written ({}x), {} discarded -> {}",
        manifest.written,
        k,
        manifest.discarded,
        output.display()
    );
    Ok(())
}

fn cmd_train(common: &CommonOverrides, input: &Path, output: &Path) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let output = resolve_output(output);
    let corpus = read_lines(input)?;
    let model = NGramModel::train(
        &corpus,
        cfg.notation(),
        cfg.order,
        SmoothingParams {
            discount: cfg.discount,
        },
    )
    .map_err(|e| CliError::Data(format!("training failed: {e}")))?;
    config::ensure_parent(&output)?;
    std::fs::write(&output, model.to_json())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", output.display())))?;
    let vocab_path = sidecar_path(&output, "vocab");
    let vocab_lines: Vec<String> = model.vocab().tokens().to_vec();
    write_lines(&vocab_path, &vocab_lines)?;
    cfg.write_sidecar(&output)?;
    println!(
        "train: order-{} model over {} tokens -> {}",
        model.order(),
        model.vocab().len(),
        output.display()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<NGramModel, CliError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read model {}: {e}", path.display())))?;
    NGramModel::from_json(&json)
        .map_err(|e| CliError::Data(format!("bad model {}: {e}", path.display())))
}

#[derive(serde::Serialize)]
struct SampleSidecar {
    seed_index: usize,
    derived_seed: u64,
    n_samples: usize,
    truncated: Vec<usize>,
}

fn cmd_sample(common: &CommonOverrides, model_path: &Path, output: &Path) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let output = resolve_output(output);
    let model = load_model(model_path)?;
    let _lock = DirLock::acquire(&output)?;
    for s in 0..cfg.seeds {
        let run_seed = mix(cfg.seed, s as u64);
        let mut lines = Vec::with_capacity(cfg.samples);
        let mut truncated = Vec::new();
        for i in 0..cfg.samples {
            let sampler = SamplerConfig {
                temperature: cfg.temperature,
                max_tokens: cfg.max_tokens,
                seed: mix(run_seed, i as u64),
                stop_on_eos: true,
            };
            let generated = clm::sample(&model, &sampler);
            if generated.truncated {
                truncated.push(i);
            }
            lines.push(generated.text);
        }
        let file = output.join(format!("samples_seed{s}.txt"));
        write_lines(&file, &lines)?;
        write_json(
            &output.join(format!("samples_seed{s}.flags.json")),
            &SampleSidecar {
                seed_index: s,
                derived_seed: run_seed,
                n_samples: lines.len(),
                truncated,
            },
        )?;
    }
    cfg.write_sidecar(&output)?;
    println!(
        "sample: {} seeds x {} samples -> {}",
        cfg.seeds,
        cfg.samples,
        output.display()
    );
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DesignKind {
    Decorate,
    Link,
}

#[derive(serde::Serialize)]
struct DesignFlags {
    valid: Vec<bool>,
    fragmented: Vec<bool>,
    constraint_matched: Vec<bool>,
    closed_all_digits: Vec<bool>,
    truncated: Vec<bool>,
}

#[derive(serde::Serialize)]
struct DesignSummary {
    task: String,
    n_constraints: usize,
    evaluated: Vec<usize>,
    excluded: BTreeMap<usize, String>,
}

fn cmd_design(
    common: &CommonOverrides,
    model_path: &Path,
    constraints_path: &Path,
    training: Option<&Path>,
    output: &Path,
    kind: DesignKind,
) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let output = resolve_output(output);
    let model = load_model(model_path)?;
    let training_set = load_training(training)?;
    let raw = std::fs::read_to_string(constraints_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", constraints_path.display())))?;
    let _lock = DirLock::acquire(&output)?;

    let mut evaluated = Vec::new();
    let mut excluded = BTreeMap::new();
    for (idx, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sampler = SamplerConfig {
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            seed: mix(cfg.seed, idx as u64),
            stop_on_eos: true,
        };
        let outcome = run_constraint(&model, line, &sampler, cfg.samples_per_constraint, kind);
        match outcome {
            Ok((samples, constraint)) => {
                let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
                let stem = format!("constraint_{idx:03}");
                write_lines(&output.join(format!("{stem}.txt")), &texts)?;
                write_json(
                    &output.join(format!("{stem}.flags.json")),
                    &DesignFlags {
                        valid: samples.iter().map(|s| s.valid).collect(),
                        fragmented: samples.iter().map(|s| s.fragmented).collect(),
                        constraint_matched: samples.iter().map(|s| s.constraint_matched).collect(),
                        closed_all_digits: samples.iter().map(|s| s.closed_all_digits).collect(),
                        truncated: samples.iter().map(|s| s.truncated).collect(),
                    },
                )?;
                let report =
                    safekit::metrics::build_report(&texts, &training_set, Some(&constraint))
                        .map_err(|e| CliError::Data(e.to_string()))?;
                write_json(&output.join(format!("{stem}.report.json")), &report)?;
                evaluated.push(idx);
            }
            Err(reason) => {
                // Out-of-vocabulary or malformed constraints are excluded
                // from evaluation, with the reason recorded.
                excluded.insert(idx, reason);
            }
        }
    }
    let summary = DesignSummary {
        task: match kind {
            DesignKind::Decorate => "decorate".to_string(),
            DesignKind::Link => "link".to_string(),
        },
        n_constraints: evaluated.len() + excluded.len(),
        evaluated,
        excluded,
    };
    write_json(&output.join("summary.json"), &summary)?;
    cfg.write_sidecar(&output)?;
    println!(
        "{}: {} constraints evaluated, {} excluded -> {}",
        summary.task,
        summary.evaluated.len(),
        summary.excluded.len(),
        output.display()
    );
    Ok(())
}

type ConstraintRun = (Vec<clm::DesignSample>, Constraint);

fn run_constraint(
    model: &NGramModel,
    line: &str,
    sampler: &SamplerConfig,
    n_samples: usize,
    kind: DesignKind,
) -> Result<ConstraintRun, String> {
    match kind {
        DesignKind::Decorate => {
            let scaffold = parse_smiles(line).map_err(|e| e.to_string())?;
            let samples =
                clm::decorate(model, &scaffold, sampler, n_samples).map_err(|e| e.to_string())?;
            Ok((samples, Constraint::Scaffold(scaffold)))
        }
        DesignKind::Link => {
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| "expected two tab-separated fragment SMILES".to_string())?;
            let frag_a = parse_smiles(a.trim()).map_err(|e| e.to_string())?;
            let frag_b = parse_smiles(b.trim()).map_err(|e| e.to_string())?;
            let samples = clm::link(model, &frag_a, &frag_b, sampler, n_samples)
                .map_err(|e| e.to_string())?;
            Ok((samples, Constraint::FragmentPair(frag_a, frag_b)))
        }
    }
}

fn load_training(path: Option<&Path>) -> Result<HashSet<String>, CliError> {
    let Some(path) = path else {
        return Ok(HashSet::new());
    };
    let lines = read_lines(path)?;
    let mut set = HashSet::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        let g = parse_smiles(line).map_err(|e| {
            CliError::Data(format!(
                "training line {}: cannot parse {line:?}: {e}",
                idx + 1
            ))
        })?;
        set.insert(canonical_smiles(&g));
    }
    Ok(set)
}

fn cmd_report(
    common: &CommonOverrides,
    samples: &[PathBuf],
    training: Option<&Path>,
    label: &str,
    output: &Path,
) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let output = resolve_output(output);
    let training_set = load_training(training)?;
    let mut reports: Vec<MetricsReport> = Vec::new();
    for file in samples {
        let lines = read_lines(file)?;
        let report = safekit::metrics::build_report(&lines, &training_set, None)
            .map_err(|e| CliError::Data(e.to_string()))?;
        reports.push(report);
    }
    let aggregate = Aggregate::from_reports(&reports);

    let csv_path = output.with_extension("csv");
    let mut csv = String::new();
    csv.push_str(Aggregate::csv_header());
    csv.push('\n');
    csv.push_str(&aggregate.csv_row(label));
    csv.push('\n');
    config::ensure_parent(&csv_path)?;
    std::fs::write(&csv_path, csv)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", csv_path.display())))?;

    #[derive(serde::Serialize)]
    struct FullReport<'a> {
        label: &'a str,
        aggregate: &'a Aggregate,
        per_seed: &'a [MetricsReport],
    }
    write_json(
        &output.with_extension("json"),
        &FullReport {
            label,
            aggregate: &aggregate,
            per_seed: &reports,
        },
    )?;
    cfg.write_sidecar(&csv_path)?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "report: {label}: validity {:.3} +- {:.3}, fragmented {:.3} +- {:.3} -> {}",
        aggregate.validity.mean,
        aggregate.validity.std,
        aggregate.fragmented_pct.mean,
        aggregate.fragmented_pct.std,
        csv_path.display()
    );
    Ok(())
}
