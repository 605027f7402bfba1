use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wavens_core::data::{
    split_dataset, split_indices, synth_features, synth_predictions, SplitSpec, SynthSpec,
};
use wavens_core::ensemble::{
    grid_search_weights, pairwise_ensemble_sweep, weighted_combine, GridSpec, PredictionSet,
    SweepRow, WeightVector,
};
use wavens_core::head::{train_head, HeadConfig, RenormConfig};
use wavens_core::metrics::{evaluate, mean_squared_error};
use wavens_core::Matrix;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{
    align_labels, load_predictions, read_labels, read_manifest, read_params, read_weights,
    write_json, write_labels, write_manifest, write_params, write_prediction_file, write_text,
    write_trace, write_weights, LabelRow, ParamsFile, PredictionFile, PredictionHeader, ScoreKind,
    FORMAT_VERSION,
};
use crate::report::{emit_report, sweep_table, ReportFile, Rounding};

#[derive(Debug, Parser)]
#[command(
    name = "wavens",
    version,
    about = "Train classifier heads, tune weighted-average ensembles, evaluate them"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "WAVENS_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic prediction panel or feature manifest.
    Synth(SynthArgs),
    /// Train a classifier head on a feature manifest.
    TrainHead(TrainArgs),
    /// Score a feature manifest with a trained head.
    Predict(PredictArgs),
    /// Average and weighted ensembles.
    #[command(subcommand)]
    Ensemble(EnsembleCommand),
    /// Evaluate one model or a weighted combination.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
enum EnsembleCommand {
    /// Every pairwise average ensemble plus the all-model average.
    Avg(AvgArgs),
    /// Grid-search ensemble weights.
    Tune(TuneArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    models: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    /// Per-model accuracy targets; defaults to an even spread over 0.93..0.98.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a Gaussian-blob feature manifest instead of predictions.
    #[arg(long)]
    features: bool,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Training fraction; the rest is the test and validation split.
    #[arg(long, default_value_t = 0.7)]
    split: f64,
    #[arg(long)]
    unstratified: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [512, 256, 128])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 0.3)]
    dropout: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 7)]
    patience: usize,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Keep the last epoch's parameters instead of the best.
    #[arg(long)]
    no_restore_best: bool,
    #[arg(long, default_value_t = 3.0)]
    r_max: f64,
    #[arg(long, default_value_t = 5.0)]
    d_max: f64,
    #[arg(long, default_value_t = 0.99)]
    momentum: f64,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Model name recorded in the prediction file; also its file stem.
    #[arg(long, default_value = "head")]
    name: String,
}

#[derive(Debug, Args)]
struct AvgArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    paper_rounding: bool,
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Search the box {0, step, .., box-max}^M instead of the simplex.
    #[arg(long)]
    unconstrained: bool,
    #[arg(long, default_value_t = 0.4)]
    box_max: f64,
    /// Fraction of labelled samples to tune on; the rest is held out.
    #[arg(long)]
    tune_split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    labels: PathBuf,
    /// weights.json; without it several files are averaged uniformly.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Row-normalize combined scores before ROC and MSE.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    paper_rounding: bool,
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let stdout = std::io::stdout();
    match dispatch(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(&cli.out, a, out),
        Command::TrainHead(a) => train(&cli.out, a, out),
        Command::Predict(a) => predict(&cli.out, a, out),
        Command::Ensemble(EnsembleCommand::Avg(a)) => ensemble_avg(&cli.out, a, out),
        Command::Ensemble(EnsembleCommand::Tune(a)) => ensemble_tune(&cli.out, a, out),
        Command::Eval(a) => eval(&cli.out, a, out),
    }
}

fn say(out: &mut dyn Write, msg: std::fmt::Arguments<'_>) {
    // a closed stdout should not turn a finished run into a failure
    let _ = writeln!(out, "{msg}");
}

fn sample_id(i: usize) -> String {
    format!("s{i:05}")
}

fn default_targets(models: usize) -> Vec<f64> {
    if models == 1 {
        return vec![0.955];
    }
    (0..models)
        .map(|i| 0.93 + 0.05 * i as f64 / (models - 1) as f64)
        .collect()
}

fn synth(out_dir: &Path, a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.features {
        let manifest = synth_features(a.samples, a.classes, a.dim, a.separation, a.seed)?;
        let path = out_dir.join("manifest.csv");
        write_manifest(&path, &manifest)?;
        say(
            out,
            format_args!("wrote {} ({} samples)", path.display(), manifest.len()),
        );
        return Ok(());
    }
    let targets = a
        .targets
        .clone()
        .unwrap_or_else(|| default_targets(a.models));
    if a.targets.is_some() && targets.len() != a.models {
        return Err(CliError::Usage(format!(
            "{} targets for {} models",
            targets.len(),
            a.models
        )));
    }
    let spec = SynthSpec {
        temperature: a.temperature,
        ..SynthSpec::new(a.samples, a.classes, targets, a.seed)
    };
    let (preds, labels) = synth_predictions(&spec)?;
    let ids: Vec<String> = (0..preds.num_samples()).map(sample_id).collect();
    for m in 0..preds.num_models() {
        let name = preds.model_names()[m].clone();
        let path = out_dir.join(format!("{name}.csv"));
        write_prediction_file(
            &path,
            &PredictionFile {
                header: PredictionHeader {
                    format_version: FORMAT_VERSION,
                    model_name: name,
                    class_names: preds.class_names().to_vec(),
                    num_samples: ids.len(),
                    kind: ScoreKind::Probabilities,
                },
                sample_ids: ids.clone(),
                scores: preds.model_matrix(m),
            },
        )?;
    }
    let rows: Vec<LabelRow> = ids
        .iter()
        .zip(&labels)
        .map(|(id, &label)| LabelRow {
            sample_id: id.clone(),
            label,
        })
        .collect();
    write_labels(&out_dir.join("labels.csv"), &rows, preds.class_names())?;
    say(
        out,
        format_args!(
            "wrote {} prediction files and labels.csv to {}",
            preds.num_models(),
            out_dir.display()
        ),
    );
    Ok(())
}

fn label_rows(ids: &[String], labels: &[usize]) -> Vec<LabelRow> {
    ids.iter()
        .zip(labels)
        .map(|(id, &label)| LabelRow {
            sample_id: id.clone(),
            label,
        })
        .collect()
}

fn train(out_dir: &Path, a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunConfig::new(out_dir.to_path_buf());
    run.inputs.push(a.manifest.clone());
    run.seed = a.seed;
    run.validate()?;
    let manifest = read_manifest(&a.manifest)?;
    let (train_set, test_set) = split_dataset(
        &manifest,
        &SplitSpec {
            train_fraction: a.split,
            seed: a.seed,
            stratified: !a.unstratified,
        },
    )?;
    let (train_x, train_y) = train_set.features()?;
    let (test_x, test_y) = test_set.features()?;

    let mut config = HeadConfig::new(train_x.cols(), manifest.class_names.len());
    config.hidden_dims =
        a.hidden.as_slice().try_into().map_err(|_| {
            CliError::Usage(format!("--hidden takes 3 widths, got {}", a.hidden.len()))
        })?;
    config.lambda = a.lambda;
    config.dropout_rate = a.dropout;
    config.renorm = RenormConfig {
        epsilon: a.epsilon,
        r_max: a.r_max,
        d_max: a.d_max,
        momentum: a.momentum,
    };
    config.learning_rate = a.lr;
    config.batch_size = a.batch_size;
    config.max_epochs = a.epochs;
    config.patience = a.patience;
    config.init_scale = a.init_scale;
    config.restore_best = !a.no_restore_best;
    config.seed = a.seed;
    run.head = Some(config.clone());
    run.validate()?;

    let (params, history) = train_head(&config, &train_x, &train_y, &test_x, &test_y)?;
    let file = ParamsFile::new(manifest.class_names.clone(), params, Some(history.clone()));
    write_params(&out_dir.join("head.json"), &file)?;
    let ids = |m: &wavens_core::data::DatasetManifest| {
        m.records.iter().map(|r| r.id.clone()).collect::<Vec<_>>()
    };
    write_labels(
        &out_dir.join("train_labels.csv"),
        &label_rows(&ids(&train_set), &train_y),
        &manifest.class_names,
    )?;
    write_labels(
        &out_dir.join("test_labels.csv"),
        &label_rows(&ids(&test_set), &test_y),
        &manifest.class_names,
    )?;
    let best = history
        .epochs
        .iter()
        .find(|r| r.epoch == history.best_epoch);
    if let Some(b) = best {
        say(
            out,
            format_args!(
                "trained {} epochs ({:?}); best epoch {} val_loss {:.6} val_accuracy {:.4}",
                history.epochs.len(),
                history.stop_reason,
                b.epoch,
                b.validation.loss,
                b.validation.accuracy
            ),
        );
    }
    Ok(())
}

fn predict(out_dir: &Path, a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunConfig::new(out_dir.to_path_buf());
    run.inputs = vec![a.params.clone(), a.manifest.clone()];
    run.validate()?;
    let file = read_params(&a.params)?;
    let manifest = read_manifest(&a.manifest)?;
    if manifest.class_names != file.class_names {
        return Err(CliError::format(
            &a.manifest,
            "class names differ from the trained head",
        ));
    }
    let (x, _) = manifest.features()?;
    let probs = file.params.predict_proba(&x)?;
    let path = out_dir.join(format!("{}.csv", a.name));
    write_prediction_file(
        &path,
        &PredictionFile {
            header: PredictionHeader {
                format_version: FORMAT_VERSION,
                model_name: a.name.clone(),
                class_names: file.class_names,
                num_samples: manifest.len(),
                kind: ScoreKind::Probabilities,
            },
            sample_ids: manifest.records.iter().map(|r| r.id.clone()).collect(),
            scores: probs,
        },
    )?;
    say(out, format_args!("wrote {}", path.display()));
    Ok(())
}

/// Predictions restricted to the labelled samples, in prediction order.
fn labelled_predictions(
    predictions: &[PathBuf],
    labels: &Path,
) -> Result<(PredictionSet, Vec<String>, Vec<usize>)> {
    let mut run = RunConfig::new(PathBuf::new());
    run.inputs = predictions.to_vec();
    run.labels = Some(labels.to_path_buf());
    run.validate()?;
    let (preds, ids) = load_predictions(predictions)?;
    let rows = read_labels(labels, preds.class_names())?;
    let (positions, truth) = align_labels(labels, &ids, &rows)?;
    let ids = positions.iter().map(|&i| ids[i].clone()).collect();
    Ok((preds.select_samples(&positions)?, ids, truth))
}

#[derive(Serialize)]
struct SweepFile<'a> {
    format_version: u32,
    num_samples: usize,
    rows: &'a [SweepRow],
}

fn ensemble_avg(out_dir: &Path, a: &AvgArgs, out: &mut dyn Write) -> Result<()> {
    let (preds, _, truth) = labelled_predictions(&a.predictions, &a.labels)?;
    let rows = pairwise_ensemble_sweep(&preds, &truth)?;
    let rounding = if a.paper_rounding {
        Rounding::Paper
    } else {
        Rounding::Full
    };
    write_text(
        &out_dir.join("ensemble_table.csv"),
        &sweep_table(&rows, rounding)?,
    )?;
    write_json(
        &out_dir.join("ensemble_sweep.json"),
        &SweepFile {
            format_version: FORMAT_VERSION,
            num_samples: truth.len(),
            rows: &rows,
        },
    )?;
    if let Some(best) = rows.iter().max_by(|x, y| x.accuracy.total_cmp(&y.accuracy)) {
        say(
            out,
            format_args!(
                "{} average ensembles; best {} at {:.4}%",
                rows.len(),
                best.name,
                best.accuracy
            ),
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneFile {
    format_version: u32,
    grid: GridSpec,
    models: Vec<String>,
    best_weights: Vec<f64>,
    best_accuracy: f64,
    evaluated: u64,
    tune_samples: usize,
    holdout_samples: Option<usize>,
}

fn ensemble_tune(out_dir: &Path, a: &TuneArgs, out: &mut dyn Write) -> Result<()> {
    let grid = if a.unconstrained {
        GridSpec::unconstrained(a.step, a.box_max)
    } else {
        GridSpec::simplex(a.step)
    };
    let mut run = RunConfig::new(out_dir.to_path_buf());
    run.grid = Some(grid);
    run.seed = a.seed;
    run.validate()?;
    let (preds, ids, truth) = labelled_predictions(&a.predictions, &a.labels)?;

    let (tune_preds, tune_truth, holdout) = match a.tune_split {
        Some(fraction) => {
            let spec = SplitSpec {
                train_fraction: fraction,
                seed: a.seed,
                stratified: true,
            };
            let (mut tune, mut hold) = split_indices(&truth, preds.num_classes(), &spec)?;
            tune.sort_unstable();
            hold.sort_unstable();
            let rows = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| LabelRow {
                        sample_id: ids[i].clone(),
                        label: truth[i],
                    })
                    .collect::<Vec<_>>()
            };
            write_labels(
                &out_dir.join("tune_labels.csv"),
                &rows(&tune),
                preds.class_names(),
            )?;
            write_labels(
                &out_dir.join("holdout_labels.csv"),
                &rows(&hold),
                preds.class_names(),
            )?;
            let tune_truth = tune.iter().map(|&i| truth[i]).collect::<Vec<_>>();
            (preds.select_samples(&tune)?, tune_truth, Some(hold.len()))
        }
        None => {
            eprintln!(
                "warning: no --tune-split given; tuning on all {} labelled samples. \
                 Accuracy measured on these samples afterwards is optimistic.",
                truth.len()
            );
            (preds.clone(), truth.clone(), None)
        }
    };

    let outcome = grid_search_weights(&tune_preds, &tune_truth, &grid, true)?;
    let names = preds.model_names().to_vec();
    write_weights(&out_dir.join("weights.json"), &names, &outcome.best)?;
    write_trace(&out_dir.join("grid_trace.csv"), names.len(), &outcome.trace)?;
    write_json(
        &out_dir.join("tune.json"),
        &TuneFile {
            format_version: FORMAT_VERSION,
            grid,
            models: names.clone(),
            best_weights: outcome.best.as_slice().to_vec(),
            best_accuracy: outcome.best_accuracy,
            evaluated: outcome.evaluated as u64,
            tune_samples: tune_truth.len(),
            holdout_samples: holdout,
        },
    )?;
    say(
        out,
        format_args!(
            "evaluated {} weight vectors; best {:?} at {:.6}%",
            outcome.evaluated,
            outcome.best.as_slice(),
            outcome.best_accuracy
        ),
    );
    Ok(())
}

fn eval(out_dir: &Path, a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let rounding = if a.paper_rounding {
        Rounding::Paper
    } else {
        Rounding::Full
    };
    let mut inputs = a.predictions.clone();
    inputs.extend(a.weights.clone());
    let mut run = RunConfig::new(out_dir.to_path_buf());
    run.inputs = inputs;
    run.rounding = rounding;
    run.validate()?;
    let (preds, _, truth) = labelled_predictions(&a.predictions, &a.labels)?;
    let m = preds.num_models();
    let weights = match &a.weights {
        Some(path) => Some(read_weights(path, preds.model_names())?),
        None if m > 1 => Some(WeightVector::uniform(m)?),
        None => None,
    };
    let combined: Matrix = match &weights {
        Some(w) => {
            let result = weighted_combine(&preds, w)?;
            if a.normalize {
                result.normalized()
            } else {
                result.combined
            }
        }
        None => preds.model_matrix(0),
    };
    let report = evaluate(&combined, &truth, preds.class_names())?;
    let mse = mean_squared_error(&combined, &truth)?;
    let file = ReportFile::new(
        preds.model_names().to_vec(),
        weights.as_ref(),
        a.normalize,
        mse,
        report,
    );
    emit_report(out_dir, &file, None, run.rounding)?;
    say(
        out,
        format_args!(
            "accuracy {:.6}% on {} samples; macro F1 {:.4}",
            file.report.accuracy,
            truth.len(),
            file.report.macro_avg.f1
        ),
    );
    Ok(())
}
