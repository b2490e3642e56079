use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use syntheory::datasets::{self, Concept, GenerateOptions};
use syntheory::features::FeatureKind;
use syntheory::harness::{self, EmbeddingFile, ProbeMode, ReportTable};
use syntheory::probe::TrainConfig;
use syntheory::Error;

#[derive(Parser)]
#[command(
    name = "syntheory",
    version,
    about = "Synthetic music-theory datasets, audio features and probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate MIDI, audio, manifests and splits.
    Generate {
        /// A concept name or `all`.
        #[arg(long)]
        concept: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stratified fraction in (0, 1].
        #[arg(long)]
        subsample: Option<f64>,
        /// Write manifests and splits only.
        #[arg(long)]
        manifest_only: bool,
    },
    /// Extract aggregated features into an embedding file.
    Extract {
        #[arg(long, value_parser = parse_concept)]
        concept: Concept,
        /// mel, mfcc, chroma or aggregate.
        #[arg(long, value_parser = parse_feature)]
        feature: FeatureKind,
        #[arg(long)]
        out: PathBuf,
        /// Root written by `generate`.
        #[arg(long, default_value = "data")]
        data: PathBuf,
    },
    /// Train probes on an embedding file and write the result CSV.
    Probe(ProbeArgs),
    /// Summarize result CSVs as a Markdown or CSV table.
    Report {
        /// Directory of result CSVs.
        #[arg(long)]
        results: PathBuf,
        /// Output file; `.csv` selects CSV, anything else Markdown, `-` prints Markdown.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_parser = parse_concept)]
    concept: Concept,
    #[arg(long)]
    embeddings: PathBuf,
    /// Run the full 216-configuration grid.
    #[arg(long, conflicts_with = "preset")]
    grid: bool,
    /// Fixed configuration; only `lm-default` exists.
    #[arg(long, value_parser = ["lm-default"])]
    preset: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "data")]
    data: PathBuf,
    /// Stratified fraction of the manifest to probe on.
    #[arg(long)]
    subsample: Option<f64>,
    /// Row label in reports; defaults to the embedding file name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    max_epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    patience: usize,
}

fn parse_concept(s: &str) -> Result<Concept, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_feature(s: &str) -> Result<FeatureKind, String> {
    match FeatureKind::from_cli(s) {
        Ok(k) if k != FeatureKind::External => Ok(k),
        _ => Err(format!(
            "unknown feature {s:?}; expected mel, mfcc, chroma or aggregate"
        )),
    }
}

fn generate(concept: &str, out: &Path, seed: u64, subsample: Option<f64>, manifest_only: bool) -> anyhow::Result<()> {
    let concepts = if concept == "all" {
        Concept::ALL.to_vec()
    } else {
        vec![concept.parse::<Concept>()?]
    };
    let options = GenerateOptions {
        seed,
        subsample,
        manifest_only,
    };
    let mut stdout = std::io::stdout().lock();
    for c in concepts {
        let recs = datasets::generate(out, c, options).with_context(|| format!("generating {c}"))?;
        writeln!(stdout, "{c}: {} samples", recs.len())?;
    }
    Ok(())
}

fn probe(args: ProbeArgs) -> anyhow::Result<()> {
    let mode = if args.grid {
        ProbeMode::Grid
    } else {
        ProbeMode::LmDefault
    };
    let embeddings = EmbeddingFile::read(&args.embeddings)?;
    let name = args
        .name
        .unwrap_or_else(|| harness::representation_name(&args.embeddings));
    let config = TrainConfig {
        max_epochs: args.max_epochs,
        patience: args.patience,
    };
    let run = harness::probe_embeddings(
        &args.data,
        args.concept,
        &embeddings,
        &name,
        mode,
        args.seed,
        args.subsample,
        config,
    )?;
    harness::write_results(&args.out, &run.rows())?;
    let best = run.outcome.selected();
    println!(
        "{} {}: selected {} -> test {} {:.4} (validation {:.4}, {} configurations)",
        name,
        args.concept,
        best.spec.key(),
        best.spec.task.metric_name(),
        best.test_metric,
        best.val_metric,
        run.outcome.results.len()
    );
    Ok(())
}

fn report(results: &Path, out: &Path) -> anyhow::Result<()> {
    let table = ReportTable::from_dir(results)?;
    if out == Path::new("-") {
        print!("{}", table.to_markdown());
        return Ok(());
    }
    let text = if out.extension().is_some_and(|e| e == "csv") {
        table.to_csv()?
    } else {
        table.to_markdown()
    };
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} ({} rows)", out.display(), table.rows.len());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate {
            concept,
            out,
            seed,
            subsample,
            manifest_only,
        } => generate(&concept, &out, seed, subsample, manifest_only),
        Command::Extract {
            concept,
            feature,
            out,
            data,
        } => {
            let file = harness::extract_concept(&data, concept, feature)?;
            file.write(&out)?;
            println!(
                "{concept} {}: {} x {} -> {}",
                feature.cli_name(),
                file.len(),
                file.dim(),
                out.display()
            );
            Ok(())
        }
        Command::Probe(args) => probe(args),
        Command::Report { results, out } => report(&results, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err
                .chain()
                .any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::Argument(_))));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
