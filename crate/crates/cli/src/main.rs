//! `mtt`: align, extend, train, predict and score cognate reflexes.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, missing
//! input files, an invalid `MTT_SEED`) and 2 for data errors (malformed
//! TSV, incompatible model bundles and the like).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use multitier::alignment::ScoringScheme;
use multitier::classifier::ForestParams;
use multitier::phonology::parse_overrides;
use multitier::prelude::*;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (model format 1)");
const SEED_VAR: &str = "MTT_SEED";

#[derive(Parser)]
#[command(name = "mtt", version = VERSION, about = "Cognate reflex prediction from multitiered alignments")]
struct Cli {
    /// Worker threads for training and prediction (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align every cognate set of a wordlist.
    Align {
        #[arg(long)]
        input: PathBuf,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        classes: ClassArgs,
    },
    /// Write the extended site table of a wordlist.
    Tiers {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tiers: TierArgs,
        #[command(flatten)]
        classes: ClassArgs,
    },
    /// Train one forest per language and write a model bundle.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Forest seed; the MTT_SEED environment variable overrides it.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        n_trees: usize,
        #[command(flatten)]
        tiers: TierArgs,
        #[command(flatten)]
        classes: ClassArgs,
    },
    /// Predict every `?` cell of a test wordlist.
    Predict {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against withheld forms.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        classes: ClassArgs,
    },
    /// Withhold a share of the forms, writing training.tsv, test.tsv and
    /// solutions.tsv into a directory.
    Partition {
        #[arg(long)]
        input: PathBuf,
        /// Share of observed forms to withhold, in [0, 1].
        #[arg(long)]
        proportion: f64,
        /// Shuffle seed; the MTT_SEED environment variable overrides it.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TierArgs {
    /// Comma-separated neighbour offsets in [-4, 4] without 0; empty for none.
    #[arg(long, default_value = "-2,-1,1,2", allow_hyphen_values = true, value_parser = parse_offsets)]
    offsets: Offsets,
    /// Leave out the index tier.
    #[arg(long)]
    no_index: bool,
    /// Leave out the reverse index tier.
    #[arg(long)]
    no_rindex: bool,
}

#[derive(Args)]
struct ClassArgs {
    /// TSV of CHARACTER<TAB>CLASS rows merged over the built-in table.
    #[arg(long)]
    sound_classes: Option<PathBuf>,
}

#[derive(Clone)]
struct Offsets(Vec<i32>);

fn parse_offsets(s: &str) -> Result<Offsets, String> {
    if s.trim().is_empty() {
        return Ok(Offsets(Vec::new()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<i32>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Offsets)
}

/// Failure in how the program was invoked, as opposed to in the data.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtt: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Align { input, out, classes } => {
            check_inputs(&[&input])?;
            check_output(out.as_deref())?;
            let model = sound_classes(&classes)?.0;
            let w = read_wordlist(&input)?;
            let a = align_wordlist(&w, &ScoringScheme::default(), &model)?;
            emit(out.as_deref(), &write_alignments(&a))
        }
        Command::Tiers {
            input,
            out,
            tiers,
            classes,
        } => {
            check_inputs(&[&input])?;
            check_output(out.as_deref())?;
            let spec = tier_spec(&tiers)?;
            let model = sound_classes(&classes)?.0;
            let w = read_wordlist(&input)?;
            let a = align_wordlist(&w, &ScoringScheme::default(), &model)?;
            let frame = extend(&transpose(&a)?, &spec, &model)?;
            emit(out.as_deref(), &write_frame(&frame))
        }
        Command::Train {
            input,
            out,
            seed,
            n_trees,
            tiers,
            classes,
        } => {
            check_inputs(&[&input])?;
            check_output(Some(&out))?;
            let seed = seed_override(seed)?;
            if n_trees == 0 {
                return Err(usage("--n-trees must be positive"));
            }
            let cfg = TrainingConfig {
                tiers: tier_spec(&tiers)?,
                scoring: ScoringScheme::default(),
                forest: ForestParams {
                    n_trees,
                    seed,
                    ..Default::default()
                },
                sound_classes: sound_classes(&classes)?.1,
            };
            let w = read_wordlist(&input)?;
            let bundle = train_all(&w, &cfg)?;
            emit(Some(&out), &save_bundle(&bundle)?)
        }
        Command::Predict { models, test, out } => {
            check_inputs(&[&models, &test])?;
            check_output(out.as_deref())?;
            let bundle = load_bundle(&read(&models)?).with_context(|| format!("loading {}", models.display()))?;
            let w = read_wordlist(&test)?;
            let forms = predict_wordlist(&bundle, &w)?;
            emit(out.as_deref(), &write_forms(&forms, "PREDICTION"))
        }
        Command::Evaluate {
            pred,
            gold,
            out,
            classes,
        } => {
            check_inputs(&[&pred, &gold])?;
            check_output(out.as_deref())?;
            let model = sound_classes(&classes)?.0;
            let p = parse_forms(&read(&pred)?).with_context(|| pred.display().to_string())?;
            let g = parse_forms(&read(&gold)?).with_context(|| gold.display().to_string())?;
            let report = evaluate(&p, &g, &ScoringScheme::default(), &model)?;
            emit(out.as_deref(), &write_report(&report))
        }
        Command::Partition {
            input,
            proportion,
            seed,
            out_dir,
        } => {
            check_inputs(&[&input])?;
            if !(0.0..=1.0).contains(&proportion) {
                return Err(usage(format!("--proportion {proportion} is outside [0, 1]")));
            }
            if out_dir.exists() && !out_dir.is_dir() {
                return Err(usage(format!("{} is not a directory", out_dir.display())));
            }
            let seed = seed_override(seed)?;
            let w = read_wordlist(&input)?;
            let p = partition(&w, proportion, seed)?;
            if p.shortfall > 0 {
                log::warn!(
                    "{} forms could not be withheld without emptying a cognate set",
                    p.shortfall
                );
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            write_atomic(&out_dir.join("training.tsv"), &write_wordlist(&p.training))?;
            write_atomic(&out_dir.join("test.tsv"), &write_wordlist(&p.test))?;
            write_atomic(&out_dir.join("solutions.tsv"), &write_forms(&p.solutions, "SOLUTION"))
        }
    }
}

fn seed_override(seed: u64) -> anyhow::Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_VAR}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(seed),
        Err(e) => Err(usage(format!("{SEED_VAR}: {e}"))),
    }
}

fn tier_spec(args: &TierArgs) -> anyhow::Result<TierSpec> {
    TierSpec::new(&args.offsets.0, !args.no_index, !args.no_rindex).map_err(|e| usage(format!("--offsets: {e}")))
}

/// The override model and the overrides themselves.
fn sound_classes(args: &ClassArgs) -> anyhow::Result<(SoundClassModel, Vec<(char, char)>)> {
    let Some(path) = &args.sound_classes else {
        return Ok((SoundClassModel::sca(), Vec::new()));
    };
    check_inputs(&[path])?;
    let overrides = parse_overrides(&read(path)?).with_context(|| path.display().to_string())?;
    Ok((SoundClassModel::sca().with_overrides(&overrides), overrides))
}

fn check_inputs(paths: &[&Path]) -> anyhow::Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(usage(format!("{}: no such file", p.display())));
        }
    }
    Ok(())
}

fn check_output(path: Option<&Path>) -> anyhow::Result<()> {
    let Some(path) = path else { return Ok(()) };
    if path.is_dir() {
        return Err(usage(format!("{} is a directory", path.display())));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(usage(format!("{}: no such directory", dir.display())))
        }
        _ => Ok(()),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_wordlist(path: &Path) -> anyhow::Result<Wordlist> {
    parse_wordlist(&read(path)?).with_context(|| path.display().to_string())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
