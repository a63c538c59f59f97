use std::path::{Path, PathBuf};

use reflow_shift::datagen::{generate, to_raw_rows};
use reflow_shift::eval::{cross_validate, format_table1, format_table2, r2, CvConfig, CvReport};
use reflow_shift::features::feature_names;
use reflow_shift::models::rfr::{select_important, ImportanceRule};
use reflow_shift::preprocess::{clean, drop_missing, select_features, CleaningReport, Dataset};
use reflow_shift::{FittedModel, ModelFamily, Target, TrainedModel};
use serde::Serialize;

use crate::args::{Command, ModelArg};
use crate::config::RunConfig;
use crate::csvio::{self, format_float, read_rows, row_cells, schema, sidecar_path, write_json, write_text};
use crate::error::{CliError, CliResult};
use crate::model_file::ModelFile;

fn check_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")))
    }
}

fn check_output(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory not found"),
        )),
        _ => Ok(()),
    }
}

fn schema_names() -> Vec<String> {
    feature_names().iter().map(|s| s.to_string()).collect()
}

/// Complete rows of a CSV as a dataset, with the count of rows skipped.
fn load_dataset(path: &Path) -> CliResult<(Dataset<f64>, usize)> {
    let (rows, _) = read_rows(path)?;
    Ok(drop_missing(rows, schema_names())?)
}

pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    match &cfg.command {
        Command::Generate { output } => cmd_generate(cfg, output),
        Command::Preprocess { input, output, report } => cmd_preprocess(cfg, input, output, report.as_deref()),
        Command::Train {
            input,
            output,
            model,
            target,
        } => cmd_train(cfg, input, output, *model, &target.targets()),
        Command::Evaluate {
            input,
            output,
            model,
            target,
            ..
        } => cmd_evaluate(cfg, input, output, model, &target.targets()),
        Command::Predict { input, output, models } => cmd_predict(cfg, input, output, models),
        Command::Importance { input, output, top } => cmd_importance(input, output.as_deref(), *top),
        Command::Schema { output } => cmd_schema(output.as_deref()),
    }
}

pub fn cmd_generate(cfg: &RunConfig, output: &Path) -> CliResult<()> {
    check_output(output)?;
    let records = generate(&cfg.generate)?;
    let rows = to_raw_rows::<f64>(&records)?;
    csvio::write_rows(output, &rows)?;
    let sidecar = sidecar_path(output);
    write_json(&sidecar, &schema())?;
    let missing = records.iter().filter(|r| r.targets.is_none()).count();
    say!("seed: {}", cfg.seed);
    say!("records: {} ({} with missing targets)", rows.len(), missing);
    say!("wrote {} and {}", output.display(), sidecar.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct PreprocessReport<'a> {
    seed: u64,
    input: &'a Path,
    output: &'a Path,
    spearman_threshold: f64,
    cleaning: &'a CleaningReport,
}

pub fn cmd_preprocess(cfg: &RunConfig, input: &Path, output: &Path, report: Option<&Path>) -> CliResult<()> {
    check_input(input)?;
    check_output(output)?;
    let report_path = report.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = output.as_os_str().to_owned();
        s.push(".report.json");
        s.into()
    });
    check_output(&report_path)?;
    let (rows, _) = read_rows(input)?;
    let p = &cfg.preprocess;
    let (cleaned, cleaning) = clean(rows, schema_names(), p.fence_multiplier, p.spearman_threshold)?;
    csvio::write_dataset(output, &cleaned)?;
    write_json(
        &report_path,
        &PreprocessReport {
            seed: cfg.seed,
            input,
            output,
            spearman_threshold: p.spearman_threshold,
            cleaning: &cleaning,
        },
    )?;
    say!("seed: {}", cfg.seed);
    say!("{}", cleaning.to_string().trim_end());
    say!("wrote {} and {}", output.display(), report_path.display());
    Ok(())
}

fn model_path(output: &Path, target: Target, several: bool) -> PathBuf {
    if !several {
        return output.to_path_buf();
    }
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.{}.json", target.name()))
}

pub fn cmd_train(cfg: &RunConfig, input: &Path, output: &Path, model: ModelArg, targets: &[Target]) -> CliResult<()> {
    check_input(input)?;
    check_output(output)?;
    let (d, skipped) = load_dataset(input)?;
    let x = d.feature_matrix();
    let config = cfg.model_config(model.family());
    say!("seed: {}", cfg.seed);
    if skipped > 0 {
        say!("skipped {skipped} incomplete rows");
    }
    for &t in targets {
        let y = d.targets(t);
        let sel = select_features(&d, t, cfg.preprocess.spearman_threshold)?;
        let fitted = TrainedModel::fit(&x, &y, &sel.kept, &d.feature_names, t, &config)?;
        let train_r2 = r2(&fitted.predict_matrix(&x)?, &y)?;
        let path = model_path(output, t, targets.len() > 1);
        ModelFile::new(fitted, cfg.seed, d.len(), train_r2).save(&path)?;
        say!(
            "{} {}: {} features, {} rows, train R2 {:.3} -> {}",
            t.name(),
            config.family().name(),
            sel.kept.len(),
            d.len(),
            train_r2,
            path.display()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EvaluationFile {
    pub seed: u64,
    pub n_rows: usize,
    pub skipped_rows: usize,
    pub cv: CvConfig,
    pub reports: Vec<CvReport>,
}

pub fn cmd_evaluate(cfg: &RunConfig, input: &Path, output: &Path, models: &[ModelArg], targets: &[Target]) -> CliResult<()> {
    check_input(input)?;
    std::fs::create_dir_all(output).map_err(|e| CliError::io(output, e))?;
    let (d, skipped) = load_dataset(input)?;
    let families: Vec<ModelFamily> = if models.is_empty() {
        vec![ModelFamily::Svr, ModelFamily::Nn, ModelFamily::Rfr]
    } else {
        models.iter().map(|m| m.family()).collect()
    };
    let mut reports = Vec::new();
    for &f in &families {
        for &t in targets {
            let r = cross_validate(&d, &cfg.model_config(f), t, &cfg.cv)?;
            eprintln!(
                "{} {}: test RMSE {:.3}, train R2 {:.3}",
                f.name(),
                t.name(),
                r.aggregates.test_rmse.mean,
                r.aggregates.train_r2.mean
            );
            reports.push(r);
        }
    }
    let table1 = format_table1(&reports);
    let table2 = format_table2(&reports);
    write_json(
        &output.join("report.json"),
        &EvaluationFile {
            seed: cfg.seed,
            n_rows: d.len(),
            skipped_rows: skipped,
            cv: cfg.cv,
            reports,
        },
    )?;
    write_text(&output.join("table1.txt"), &table1)?;
    write_text(&output.join("table2.txt"), &table2)?;
    say!("seed: {}", cfg.seed);
    say!("{} rows, {} folds", d.len(), cfg.cv.folds);
    say!("{}", table1.trim_end());
    say!("wrote report.json, table1.txt and table2.txt to {}", output.display());
    Ok(())
}

pub fn cmd_predict(cfg: &RunConfig, input: &Path, output: &Path, models: &[PathBuf]) -> CliResult<()> {
    check_input(input)?;
    check_output(output)?;
    let loaded = models.iter().map(|p| ModelFile::load(p)).collect::<CliResult<Vec<_>>>()?;
    let (rows, with_targets) = read_rows(input)?;
    let mut header = csvio::header(with_targets);
    for m in &loaded {
        let col = format!("pred_{}_{}", m.target.name(), m.family.name());
        if header.contains(&col) {
            return Err(CliError::Usage(format!("two models would both write column {col}")));
        }
        header.push(col);
    }
    let mut w = csv::Writer::from_path(output).map_err(|e| CliError::io(output, e.into()))?;
    let io_err = |e: csv::Error| CliError::io(output, e.into());
    w.write_record(&header).map_err(io_err)?;
    for r in &rows {
        let (mut cells, targets) = row_cells(r);
        if with_targets {
            cells.extend(targets);
        }
        let full: Option<Vec<f64>> = r.features.iter().copied().collect();
        for m in &loaded {
            cells.push(match &full {
                Some(f) => format_float(m.model.predict(f)?),
                None => String::new(),
            });
        }
        w.write_record(&cells).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(output, e))?;
    say!("seed: {}", cfg.seed);
    say!("{} rows, {} prediction columns -> {}", rows.len(), loaded.len(), output.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct RankedFeature {
    rank: usize,
    feature: String,
    importance: f64,
}

#[derive(Debug, Serialize)]
struct ImportanceFile {
    target: Target,
    seed: u64,
    rule: String,
    ranked: Vec<RankedFeature>,
    selected: Vec<String>,
}

pub fn cmd_importance(input: &Path, output: Option<&Path>, top: Option<usize>) -> CliResult<()> {
    check_input(input)?;
    if let Some(o) = output {
        check_output(o)?;
    }
    let file = ModelFile::load(input)?;
    let FittedModel::Rfr(forest) = &file.model.model else {
        return Err(CliError::WrongModelFamily {
            expected: ModelFamily::Rfr.name().to_string(),
            got: file.family.name().to_string(),
        });
    };
    let names = &file.model.kept_names;
    let (rule, label) = match top {
        Some(k) => (ImportanceRule::TopK(k), format!("top {k}")),
        None => (ImportanceRule::AboveUniform, format!("importance > 1/{}", names.len())),
    };
    let sel = select_important(&forest.importances, rule);
    let ranked: Vec<RankedFeature> = sel
        .ranked
        .iter()
        .enumerate()
        .map(|(i, &(j, v))| RankedFeature {
            rank: i + 1,
            feature: names[j].clone(),
            importance: v,
        })
        .collect();
    let selected: Vec<String> = sel.kept.iter().map(|&j| names[j].clone()).collect();

    say!("seed: {}", file.seed);
    say!("target: {}", file.target.name());
    let width = names.iter().map(|n| n.len()).max().unwrap_or(7).max(7);
    say!("{:>4}  {:<width$}  importance", "rank", "feature");
    for r in &ranked {
        say!("{:>4}  {:<width$}  {:.6}", r.rank, r.feature, r.importance);
    }
    say!("selected ({label}): {}", selected.join(", "));
    if let Some(o) = output {
        write_json(
            o,
            &ImportanceFile {
                target: file.target,
                seed: file.seed,
                rule: label,
                ranked,
                selected,
            },
        )?;
    }
    Ok(())
}

pub fn cmd_schema(output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(o) => {
            check_output(o)?;
            write_json(o, &schema())
        }
        None => {
            say!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
            Ok(())
        }
    }
}
