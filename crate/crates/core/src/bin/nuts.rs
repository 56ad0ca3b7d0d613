use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nuts::audio::{load_wav, Frontend};
use nuts::classifier::{run_repeat, EvalConfig, FeatureSource, Reduction};
use nuts::dimreduce::PRNG_NAME;
use nuts::harness::corpus::write_corpus;
use nuts::harness::sweep::{write_plot_data, CsvRow};
use nuts::harness::{
    ingest_dataset, run_raw_experiment, run_sweep, run_synthetic_experiment, run_trial, write_csv, FileDataset,
    SweepGrid, TrialConfig, DESK_WORDS, WORDS,
};
use nuts::nal::DEFAULT_CAPACITY;
use nuts::narsese::{self, Format};
use nuts::synthetic::SyntheticSpec;

#[derive(Parser)]
#[command(name = "nuts", version, about = "Few-shot spoken-word classification with a NAL reasoner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated few-shot trials on a dataset directory.
    Eval(EvalArgs),
    /// Cartesian parameter sweep from a key=value config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Also write gnuplot data (x = dims, K or aikr) next to the CSV.
        #[arg(long)]
        plot: Option<String>,
    },
    /// Synthetic three-instance experiment.
    Synth {
        #[arg(long, default_value_t = 2000)]
        props: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0.2)]
        separation: f64,
    },
    /// Checks a file of Narsese, one sentence per line.
    Parse { file: PathBuf },
    /// Writes a formant-synthesized stand-in corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        per_word: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
    },
    /// Raw MEL properties asserted without the nalifier.
    Exp1 {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "one,two")]
        classes: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_CAPACITY)]
        aikr: usize,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Ten words, 30 repeats.
    #[arg(long)]
    desk: bool,
    #[arg(long, default_value_t = 4)]
    dims: usize,
    #[arg(long, default_value_t = 2)]
    examples: usize,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    aikr: usize,
    #[arg(long, default_value = "projection")]
    reduction: Reduction,
    #[arg(long)]
    shuffle_labels: bool,
    /// Print the Narsese of the first repeat to stdout.
    #[arg(long)]
    dump_narsese: bool,
    /// Print the judgments derived during the first repeat's queries.
    #[arg(long)]
    dump_derivations: bool,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("NUTS_THREADS") {
        let n: usize = n.parse().context("NUTS_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match Cli::parse().command {
        Command::Eval(a) => eval(a),
        Command::Sweep { config, output, plot } => sweep(&config, output.as_deref(), plot.as_deref()),
        Command::Synth {
            props,
            noise,
            seed,
            repeats,
            separation,
        } => {
            let spec = SyntheticSpec {
                n_props: props,
                separation,
                noise,
                seed,
            };
            let r = run_synthetic_experiment(&spec, repeats)?;
            for run in &r.runs {
                println!(
                    "seed={} sim(C,A)={:.4} sim(C,B)={:.4} answer={}",
                    run.seed,
                    run.sim_ca,
                    run.sim_cb,
                    run.answer.as_deref().unwrap_or("none")
                );
            }
            println!(
                "prng={PRNG_NAME} props={props} noise={noise} success_rate={:.4} seconds={:.3}",
                r.success_rate(),
                r.elapsed.as_secs_f64()
            );
            Ok(())
        }
        Command::Parse { file } => parse_file(&file),
        Command::GenCorpus {
            out,
            per_word,
            seed,
            classes,
        } => {
            let words: Vec<String> = classes.unwrap_or_else(|| WORDS.iter().map(|w| w.to_string()).collect());
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            write_corpus(&out, &refs, per_word, seed)?;
            println!("wrote {} files to {}", words.len() * per_word, out.display());
            Ok(())
        }
        Command::Exp1 { data, classes, aikr } => exp1(&data, &classes, aikr),
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let classes = match (&a.classes, a.desk) {
        (Some(c), _) => Some(c.clone()),
        (None, true) => Some(DESK_WORDS.iter().map(|w| w.to_string()).collect()),
        (None, false) => None,
    };
    let index = ingest_dataset(&a.data, classes.as_deref())?;
    let source = FileDataset::new(index);
    let cfg = TrialConfig {
        classes: source.classes().to_vec(),
        examples: a.examples,
        dims: a.dims,
        seed: a.seed,
        aikr: a.aikr,
        reduction: a.reduction,
        repeats: a.repeats.unwrap_or(if a.desk { 30 } else { 100 }),
        shuffle_labels: a.shuffle_labels,
    };
    eprintln!("prng={PRNG_NAME} seed={} classes={}", cfg.seed, cfg.classes.len());
    if a.dump_narsese || a.dump_derivations {
        dump_first_repeat(&source, &cfg.eval_config(), a.dump_narsese, a.dump_derivations)?;
    }
    let result = run_trial(&source, &cfg)?;
    for (word, acc) in result.per_word() {
        eprintln!("{word:>10} {acc:.3}");
    }
    eprintln!(
        "overall={:.4} trials={} sec_per_inference={:.6}",
        result.overall(),
        result.report.total_trials(),
        result.report.sec_per_inference
    );
    emit_csv(a.output.as_deref(), &result.rows())
}

fn dump_first_repeat(source: &dyn FeatureSource, cfg: &EvalConfig, narsese: bool, derivations: bool) -> Result<()> {
    let out = run_repeat(source, cfg, 0, true)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    if narsese {
        for line in &out.trace {
            writeln!(w, "{line}")?;
        }
    }
    if derivations {
        for j in &out.derivations {
            writeln!(w, "#derived {}", narsese::render(&j.to_sentence()))?;
        }
    }
    Ok(())
}

fn sweep(config: &Path, output: Option<&Path>, plot: Option<&str>) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let grid = SweepGrid::parse(&text)?;
    let Some(data) = &grid.data else {
        bail!("sweep config needs a data=<dir> line");
    };
    let source = FileDataset::new(ingest_dataset(data, grid.classes.as_deref())?);
    eprintln!("prng={PRNG_NAME} cells={}", grid.cells(source.classes()).len());
    let rows: Vec<CsvRow> = run_sweep(&source, &grid)?.iter().flat_map(|r| r.rows()).collect();
    emit_csv(output, &rows)?;
    if let (Some(axis), Some(out)) = (plot, output) {
        let path = out.with_extension("dat");
        write_plot_data(BufWriter::new(File::create(&path)?), &rows, axis)?;
        eprintln!("plot data in {}", path.display());
    }
    Ok(())
}

fn emit_csv(output: Option<&Path>, rows: &[CsvRow]) -> Result<()> {
    match output {
        Some(p) => write_csv(BufWriter::new(File::create(p)?), rows)?,
        None => write_csv(io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn parse_file(file: &Path) -> Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let fmt = Format::default();
    let mut bad = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
            continue;
        }
        match fmt.parse(line) {
            Ok(s) => println!("{}", fmt.render(&s)),
            Err(e) => {
                bad += 1;
                eprintln!("{}:{}: {e}", file.display(), n + 1);
            }
        }
    }
    if bad > 0 {
        bail!("{bad} line(s) failed to parse");
    }
    Ok(())
}

fn exp1(data: &Path, classes: &[String], aikr: usize) -> Result<()> {
    let index = ingest_dataset(data, Some(classes))?;
    let frontend = Frontend::default();
    let mut feats = Vec::new();
    for (c, word) in index.classes().iter().enumerate() {
        let files = index.files(c);
        if files.len() < 2 {
            bail!("{word}: need at least 2 files");
        }
        for f in &files[..2] {
            feats.push((frontend.features(load_wav(f)?), word.clone()));
        }
    }
    let query = feats[0].0.clone();
    let train: Vec<_> = feats.iter().skip(1).map(|(f, w)| (f, w.as_str())).collect();
    let out = run_raw_experiment(&train, &query, aikr)?;
    println!("judgments={} beliefs={}", out.judgments, out.beliefs);
    for (w, a) in &out.answers {
        match a {
            Some(s) => println!("<{{q}} --> {w}>? answered {}", narsese::render(s)),
            None => println!("<{{q}} --> {w}>? no answer"),
        }
    }
    Ok(())
}
