//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use scriptid_core::classify::{cross_validate, train_mlp_logged, Classifier, CvConfig, TrainConfig};
use scriptid_core::features::{extract_dataset, extract_page, Dataset, LabeledPage, PlanCache};
use scriptid_core::gabor::{OrientationStep, DEFAULT_KERNEL_SIZE, DEFAULT_SIGMA};
use scriptid_core::preprocess::{GaborInput, Polarity, Preprocessing};
use scriptid_core::synth::{gen_corpus, SynthSpec};
use scriptid_core::Error as CoreError;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::features_csv::{load_features, save_features};
use crate::io::{load_dataset, load_image, save_png};
use crate::kernels::dump_kernels;
use crate::model::{FeatureSettings, ModelFile, TrainingSummary};
use crate::report::{accuracy_line, console_summary, sweep_csv, ReportFile, SweepRow};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other failure
  2  usage error, invalid parameter or empty dataset directory
  3  unreadable page image
  4  malformed feature CSV
  5  model feature contract does not match the requested settings
  6  degenerate dataset (fewer than two classes, no samples)";

#[derive(Debug, Parser)]
#[command(
    name = "scriptid",
    version,
    about = "Block-level script identification with Gabor energy and entropy features",
    after_help = EXIT_CODES
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    Mlp,
    Knn,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Quad-tree decomposition level (4^level blocks per page)
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub level: u32,
    /// Gabor envelope width
    #[arg(long, global = true, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Gabor kernel side length in pixels
    #[arg(long, global = true, default_value_t = DEFAULT_KERNEL_SIZE)]
    pub kernel_size: usize,
    /// Angle between neighbouring orientations: pi/6 or pi/8
    #[arg(long, global = true, default_value = "pi/6")]
    pub orientation_step: OrientationStep,
    /// Which side of the Otsu threshold is ink: auto, dark-ink or light-ink
    #[arg(long, global = true, default_value = "auto")]
    pub polarity: Polarity,
    /// Raster fed to the filter bank: smoothed-binary or gray
    #[arg(long, global = true, default_value = "smoothed-binary")]
    pub gabor_input: GaborInput,
    /// Standard deviation of the Gaussian denoising filter
    #[arg(long, global = true, default_value_t = 1.0)]
    pub smooth_sigma: f64,
    /// Radius of the Gaussian denoising filter
    #[arg(long, global = true, default_value_t = 3)]
    pub smooth_radius: usize,
    /// Drop blocks whose ink fraction is below this (0 keeps all)
    #[arg(long, global = true, default_value_t = 0.0)]
    pub min_foreground: f64,
    /// Cross-validation folds
    #[arg(long, global = true, default_value_t = 3)]
    pub folds: usize,
    /// Use plain shuffled folds instead of class-stratified ones [default: off]
    #[arg(long, global = true)]
    pub no_stratify: bool,
    /// Seed for synthesis, fold assignment and weight initialization
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Classifier evaluated by `eval`
    #[arg(long, global = true, value_enum, default_value_t = ClassifierKind::Mlp)]
    pub classifier: ClassifierKind,
    /// Neighbour count for the k-NN classifier
    #[arg(long, global = true, default_value_t = 1)]
    pub k: usize,
    /// Hidden layer widths, comma separated
    #[arg(long, global = true, value_delimiter = ',', default_value = "35")]
    pub hidden: Vec<usize>,
    /// Training epochs
    #[arg(long, global = true, default_value_t = 500)]
    pub epochs: usize,
    /// Learning rate
    #[arg(long, global = true, default_value_t = 0.1)]
    pub lr: f64,
    /// Momentum coefficient
    #[arg(long, global = true, default_value_t = 0.9)]
    pub momentum: f64,
    /// L2 weight decay
    #[arg(long, global = true, default_value_t = 0.0)]
    pub l2: f64,
    /// Print machine-readable JSON instead of text [default: off]
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic grating corpus as out/<label>/<label>_<i>.png
    Synth {
        /// Number of classes (1 to 12)
        #[arg(long, default_value_t = 6)]
        classes: usize,
        /// Pages per class
        #[arg(long, default_value_t = 10)]
        pages: usize,
        /// Standard deviation of the additive Gaussian noise
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Page side length in pixels
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract block features from root/<label>/<page>.(png|bmp) into a CSV
    Extract {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an MLP on a feature CSV; the level is read from the CSV
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Cross-validate on a feature CSV or a dataset directory
    Eval {
        #[arg(long, required_unless_present = "dataset", conflicts_with = "dataset")]
        features: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Re-extract and evaluate at each of these levels (needs --dataset)
        #[arg(long, value_delimiter = ',', requires = "dataset")]
        sweep_levels: Option<Vec<u32>>,
        /// Where to write the sweep CSV (stdout if omitted)
        #[arg(long, requires = "sweep_levels")]
        sweep_out: Option<PathBuf>,
        /// Where to write the report JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Label each block of one page and the page by block-majority vote
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Write every kernel's real and imaginary parts as CSV and PGM
    DumpKernels {
        #[arg(long)]
        out: PathBuf,
    },
}

impl GlobalArgs {
    pub fn feature_settings(&self, level: u32) -> Result<FeatureSettings> {
        let settings = FeatureSettings {
            level,
            sigma: self.sigma,
            kernel_size: self.kernel_size,
            orientation_step: self.orientation_step,
            preprocessing: Preprocessing {
                polarity: self.polarity,
                smooth_sigma: self.smooth_sigma,
                smooth_radius: self.smooth_radius,
                gabor_input: self.gabor_input,
            },
            min_foreground: self.min_foreground,
        };
        settings.extraction().validate()?;
        settings.bank()?;
        Ok(settings)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            momentum: self.momentum,
            seed: self.seed,
            hidden_sizes: self.hidden.clone(),
            l2: self.l2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn classifier(&self) -> Result<Classifier> {
        Ok(match self.classifier {
            ClassifierKind::Mlp => Classifier::Mlp(self.train_config()?),
            ClassifierKind::Knn => Classifier::Knn { k: self.k },
        })
    }

    fn cv_config(&self) -> Result<CvConfig> {
        Ok(CvConfig {
            folds: self.folds,
            seed: self.seed,
            stratify: !self.no_stratify,
            classifier: self.classifier()?,
        })
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth {
            classes,
            pages,
            noise,
            size,
            out: dir,
        } => cmd_synth(g, *classes, *pages, *noise, *size, dir, out),
        Command::Extract { dataset, out: csv } => cmd_extract(g, dataset, csv, out),
        Command::Train { features, model } => cmd_train(g, features, model, out),
        Command::Eval {
            features,
            dataset,
            sweep_levels,
            sweep_out,
            report,
        } => match (sweep_levels, features, dataset) {
            (Some(levels), _, Some(dataset)) => cmd_sweep(g, dataset, levels, sweep_out.as_deref(), out),
            (None, Some(features), _) => {
                let ds = load_features(features)?;
                let level = ds.samples.first().map_or(g.level, |s| s.level);
                cmd_eval(g, &ds, level, report.as_deref(), out)
            }
            (None, None, Some(dataset)) => {
                let settings = g.feature_settings(g.level)?;
                let ds = extract_dataset(&load_dataset(dataset)?, &settings.extraction(), &settings.bank()?)?;
                cmd_eval(g, &ds, g.level, report.as_deref(), out)
            }
            _ => Err(CliError::Usage("eval needs --features or --dataset".into())),
        },
        Command::Predict { model, image } => cmd_predict(g, model, image, out),
        Command::DumpKernels { out: dir } => {
            let files = dump_kernels(dir, &g.feature_settings(g.level)?.bank()?)?;
            say(out, &format!("wrote {} files to {}", files.len(), dir.display()))
        }
    }
}

fn cmd_synth(
    g: &GlobalArgs,
    classes: usize,
    pages: usize,
    noise: f64,
    size: usize,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let spec = SynthSpec {
        width: size,
        height: size,
        ..SynthSpec::with_default_classes(classes, pages, noise, g.seed)?
    };
    let corpus = gen_corpus(&spec)?;
    for page in &corpus {
        let class_dir = dir.join(&page.label);
        fs::create_dir_all(&class_dir).map_err(|e| CliError::io(&class_dir, e))?;
        save_png(&class_dir.join(format!("{}.png", page.page_id)), &page.image)?;
    }
    if g.json {
        print_json(out, &spec)
    } else {
        say(
            out,
            &format!(
                "wrote {} pages ({} classes) to {}",
                corpus.len(),
                spec.classes.len(),
                dir.display()
            ),
        )
    }
}

fn dataset_summary(ds: &Dataset) -> String {
    format!("{} blocks, {} classes", ds.len(), ds.classes.len())
}

fn cmd_extract(g: &GlobalArgs, dataset: &Path, csv: &Path, out: &mut dyn Write) -> Result<()> {
    let settings = g.feature_settings(g.level)?;
    let pages = load_dataset(dataset)?;
    info!("extracting {} pages at level {}", pages.len(), settings.level);
    let ds = extract_dataset(&pages, &settings.extraction(), &settings.bank()?)?;
    save_features(csv, &ds)?;
    say(
        out,
        &format!("{} pages -> {} ({})", pages.len(), csv.display(), dataset_summary(&ds)),
    )
}

fn require_samples(ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(CoreError::DegenerateDataset("the feature file has no samples".into()).into());
    }
    Ok(())
}

fn cmd_train(g: &GlobalArgs, features: &Path, model_path: &Path, out: &mut dyn Write) -> Result<()> {
    let ds = load_features(features)?;
    require_samples(&ds)?;
    let settings = g.feature_settings(ds.samples[0].level)?;
    let cfg = g.train_config()?;
    let (model, log) = train_mlp_logged(&ds, &cfg)?;
    let summary = TrainingSummary {
        samples: ds.len(),
        final_loss: log.final_loss,
        training_accuracy: log.training_accuracy,
    };
    ModelFile::new(&model, &cfg, settings, summary.clone()).save(model_path)?;
    if g.json {
        print_json(out, &summary)
    } else {
        say(
            out,
            &format!(
                "trained on {}; training accuracy {:.4}, final loss {:.6}; model written to {}",
                dataset_summary(&ds),
                summary.training_accuracy,
                summary.final_loss,
                model_path.display()
            ),
        )
    }
}

fn cmd_eval(g: &GlobalArgs, ds: &Dataset, level: u32, report_path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    require_samples(ds)?;
    let settings = g.feature_settings(level)?;
    let cv_cfg = g.cv_config()?;
    let cv = cross_validate(ds, &cv_cfg)?;
    let report = ReportFile::new(&settings, g.seed, cv_cfg.folds, cv_cfg.stratify, &cv_cfg.classifier, cv);
    if let Some(path) = report_path {
        report.save(path)?;
    }
    if g.json {
        out.write_all(report.to_json()?.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))
    } else {
        say(out, &console_summary(&report.report))
    }
}

fn cmd_sweep(
    g: &GlobalArgs,
    dataset: &Path,
    levels: &[u32],
    sweep_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    if levels.is_empty() {
        return Err(CliError::Usage("--sweep-levels needs at least one level".into()));
    }
    let cv_cfg = g.cv_config()?;
    let pages: Vec<LabeledPage> = load_dataset(dataset)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let settings = g.feature_settings(level)?;
        info!("level {level}: extracting {} pages", pages.len());
        let ds = extract_dataset(&pages, &settings.extraction(), &settings.bank()?)?;
        require_samples(&ds)?;
        let cv = cross_validate(&ds, &cv_cfg)?;
        let counts = ds.class_counts();
        info!("level {level}: {}", accuracy_line(cv.aggregate.accuracy));
        rows.push(SweepRow {
            level,
            n_classes: ds.classes.len(),
            n_blocks: ds.len(),
            blocks_per_class_min: counts.iter().copied().min().unwrap_or(0),
            blocks_per_class_max: counts.iter().copied().max().unwrap_or(0),
            accuracy: cv.aggregate.accuracy,
            kappa: cv.aggregate.kappa,
        });
    }
    let csv = sweep_csv(&rows);
    match sweep_out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| CliError::io(path, e))?;
            if g.json {
                print_json(out, &rows)
            } else {
                for r in &rows {
                    say(
                        out,
                        &format!(
                            "level {}: {} blocks, {}",
                            r.level,
                            r.n_blocks,
                            accuracy_line(r.accuracy)
                        ),
                    )?;
                }
                Ok(())
            }
        }
        None => out.write_all(csv.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockVerdict {
    pub row: usize,
    pub col: usize,
    pub label: String,
    pub probability: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageVerdict {
    /// Majority vote over blocks; a convenience on top of block classification.
    pub page_label: String,
    pub votes: Vec<(String, usize)>,
    pub blocks: Vec<BlockVerdict>,
}

/// Majority vote over block predictions. Ties go to the class with the highest
/// mean probability across all blocks, then to the earliest class.
pub fn majority_vote(block_probs: &[Vec<f64>], predicted: &[usize], n_classes: usize) -> (usize, Vec<usize>) {
    let mut votes = vec![0usize; n_classes];
    for &p in predicted {
        votes[p] += 1;
    }
    let mut mean = vec![0.0; n_classes];
    for probs in block_probs {
        for (m, p) in mean.iter_mut().zip(probs) {
            *m += p;
        }
    }
    let mut best = 0;
    for c in 1..n_classes {
        if votes[c] > votes[best] || (votes[c] == votes[best] && mean[c] > mean[best]) {
            best = c;
        }
    }
    (best, votes)
}

fn cmd_predict(g: &GlobalArgs, model_path: &Path, image: &Path, out: &mut dyn Write) -> Result<()> {
    let file = ModelFile::load(model_path)?;
    let model = file.to_model()?;
    let requested = g.feature_settings(g.level)?;
    if !file.features.same_contract(&requested) {
        return Err(CliError::ContractMismatch {
            model: file.features.to_string(),
            requested: requested.to_string(),
        });
    }
    let page = load_image(image)?;
    let bank = requested.bank()?;
    let mut plans = PlanCache::new(&bank);
    let page_id = image.file_stem().and_then(|s| s.to_str()).unwrap_or("page");
    let blocks = extract_page(&page, page_id, &requested.extraction(), &mut plans)?;
    if blocks.is_empty() {
        return Err(CoreError::DegenerateDataset("no block passed the foreground filter".into()).into());
    }

    let mut verdicts = Vec::with_capacity(blocks.len());
    let (mut predicted, mut probs) = (Vec::new(), Vec::new());
    for b in &blocks {
        let p = model.predict_values(b.features.values())?;
        predicted.push(p.class_index);
        verdicts.push(BlockVerdict {
            row: b.row,
            col: b.col,
            label: p.label.clone(),
            probability: p.probabilities[p.class_index],
            probabilities: p.probabilities.clone(),
        });
        probs.push(p.probabilities);
    }
    let (best, votes) = majority_vote(&probs, &predicted, model.class_labels.len());
    let verdict = PageVerdict {
        page_label: model.class_labels[best].clone(),
        votes: model.class_labels.iter().cloned().zip(votes).collect(),
        blocks: verdicts,
    };
    if g.json {
        return print_json(out, &verdict);
    }
    for b in &verdict.blocks {
        say(
            out,
            &format!("block {} {}: {} ({:.4})", b.row, b.col, b.label, b.probability),
        )?;
    }
    let (_, winning_votes) = verdict.votes[best];
    say(
        out,
        &format!(
            "page: {} ({} of {} blocks; block-majority vote)",
            verdict.page_label,
            winning_votes,
            verdict.blocks.len()
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["scriptid", "dump-kernels", "--out", "x"]).unwrap();
        let g = &cli.global;
        assert_eq!(g.level, 2);
        assert_eq!(g.sigma, 2.0 * std::f64::consts::PI);
        assert_eq!(g.kernel_size, 16);
        assert_eq!(g.orientation_step, OrientationStep::SixthPi);
        assert_eq!((g.folds, g.seed, g.epochs), (3, 42, 500));
        assert_eq!(g.hidden, vec![35]);
        assert_eq!((g.lr, g.momentum, g.min_foreground), (0.1, 0.9, 0.0));
        assert!(!g.json);
    }

    #[test]
    fn help_lists_defaults() {
        let help = Cli::command().render_long_help().to_string();
        // one chunk per option: its usage line plus the wrapped description
        let mut chunks: Vec<String> = Vec::new();
        for line in help.lines() {
            if line.trim_start().starts_with('-') {
                chunks.push(String::new());
            }
            if let Some(c) = chunks.last_mut() {
                c.push_str(line);
                c.push(' ');
            }
        }
        let options: Vec<&String> = chunks.iter().filter(|c| c.trim_start().starts_with("--")).collect();
        assert!(options.len() >= 20);
        for chunk in options {
            assert!(chunk.contains("[default:"), "{chunk}");
        }
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli =
            Cli::try_parse_from(["scriptid", "train", "--features", "f", "--model", "m", "--epochs", "7"]).unwrap();
        assert_eq!(cli.global.epochs, 7);
        assert!(Cli::try_parse_from(["scriptid", "dump-kernels", "--out", "x", "--level", "9"]).is_err());
        assert!(Cli::try_parse_from(["scriptid", "dump-kernels", "--out", "x", "--orientation-step", "pi/5"]).is_err());
    }

    #[test]
    fn eval_needs_a_source() {
        assert!(Cli::try_parse_from(["scriptid", "eval"]).is_err());
        let cli = Cli::try_parse_from(["scriptid", "eval", "--dataset", "d", "--sweep-levels", "2,3,4"]).unwrap();
        match cli.command {
            Command::Eval { sweep_levels, .. } => assert_eq!(sweep_levels, Some(vec![2, 3, 4])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn vote_ties_use_mean_probability() {
        let probs = vec![vec![0.6, 0.4, 0.0], vec![0.1, 0.9, 0.0]];
        assert_eq!(majority_vote(&probs, &[0, 1], 3).0, 1);
        assert_eq!(majority_vote(&probs, &[0, 0], 3), (0, vec![2, 0, 0]));
        let even = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(majority_vote(&even, &[0, 1], 2).0, 0);
    }
}
