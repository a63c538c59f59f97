//! K-fold cross-validation with per-fold preprocessing, fold aggregates and
//! a per-component-type breakdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ComponentKind, SizeClass, Target};
use crate::models::{FittedModel, ModelConfig, ModelFamily, TrainedModel};
use crate::preprocess::{drop_duplicate_columns, select_columns, Dataset, SampleMeta, DEFAULT_SPEARMAN_THRESHOLD};
use crate::scalar::Scalar;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Balance component groups across folds.
    pub stratified: bool,
    pub spearman_threshold: f64,
    /// Drop kept columns that exactly copy an earlier kept column.
    pub drop_duplicates: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            seed: 0,
            stratified: false,
            spearman_threshold: DEFAULT_SPEARMAN_THRESHOLD,
            drop_duplicates: false,
        }
    }
}

fn check_folds(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::TooFewRows { n, k });
    }
    Ok(())
}

/// Seeded shuffle of `0..n` cut into `k` folds; the first `n % k` folds get
/// one extra row. Each fold is returned sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_folds(n, k)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = idx[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Like [`kfold_indices`], but rows are dealt round-robin group by group so
/// every fold receives a near-equal share of each group.
pub fn stratified_kfold_indices<K: Ord + Clone>(groups: &[K], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_folds(groups.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_group: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        by_group.entry(g.clone()).or_default().push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for rows in by_group.values_mut() {
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            folds[next % k].push(r);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

fn check_pair<T: Scalar>(pred: &[T], actual: &[T]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset { stage: "metric" });
    }
    Ok(())
}

pub fn rmse<T: Scalar>(pred: &[T], actual: &[T]) -> Result<f64> {
    check_pair(pred, actual)?;
    let ss: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p.to_f64_lossy() - a.to_f64_lossy()).powi(2))
        .sum();
    Ok((ss / pred.len() as f64).sqrt())
}

pub fn r2<T: Scalar>(pred: &[T], actual: &[T]) -> Result<f64> {
    check_pair(pred, actual)?;
    let n = actual.len() as f64;
    let mean = actual.iter().map(|a| a.to_f64_lossy()).sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a.to_f64_lossy() - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::ConstantActual);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p.to_f64_lossy() - a.to_f64_lossy()).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Parameters fitted on a fold's training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub kept: Vec<usize>,
    /// Columns that passed the filter but copy an earlier kept column.
    pub duplicates: Vec<usize>,
    pub correlations: Vec<f64>,
    /// Input standardization of the kept columns, when the model uses one.
    pub scaler_mean: Option<Vec<f64>>,
    pub scaler_std: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_r2: f64,
    pub test_rmse: f64,
    /// Extension: not part of the reported protocol.
    pub test_r2: Option<f64>,
    /// Extension: not part of the reported protocol.
    pub train_rmse: f64,
    pub preprocessing: Preprocessing,
    pub test_indices: Vec<usize>,
    pub test_predictions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub train_r2: Stat,
    pub test_rmse: Stat,
    pub test_r2: Stat,
    pub train_rmse: Stat,
}

impl Aggregates {
    pub fn from_folds(folds: &[FoldResult]) -> Self {
        let col = |f: fn(&FoldResult) -> f64| Stat::of(&folds.iter().map(f).collect::<Vec<_>>());
        Aggregates {
            train_r2: col(|f| f.train_r2),
            test_rmse: col(|f| f.test_rmse),
            test_r2: Stat::of(&folds.iter().filter_map(|f| f.test_r2).collect::<Vec<_>>()),
            train_rmse: col(|f| f.train_rmse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRmse {
    pub group: String,
    pub n: usize,
    /// `None` when no test row belongs to the group.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub family: ModelFamily,
    pub target: Target,
    pub config: ModelConfig,
    pub cv: CvConfig,
    pub n_rows: usize,
    pub folds: Vec<FoldResult>,
    pub aggregates: Aggregates,
    pub per_type: Vec<GroupRmse>,
}

/// The six component groups in display order.
pub fn group_labels() -> Vec<String> {
    let mut out = Vec::new();
    for kind in [ComponentKind::Resistor, ComponentKind::Capacitor] {
        for size in SizeClass::ALL {
            out.push(format!("{}{}", kind.letter(), size.label()));
        }
    }
    out
}

/// Test RMSE within each component group, pooling every supplied row.
pub fn per_type_rmse(meta: &[SampleMeta], pred: &[f64], actual: &[f64]) -> Result<Vec<GroupRmse>> {
    if meta.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: meta.len(),
            right: pred.len(),
        });
    }
    check_pair(pred, actual)?;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for ((m, p), a) in meta.iter().zip(pred).zip(actual) {
        let e = sums.entry(m.group_label()).or_insert((0.0, 0));
        e.0 += (p - a).powi(2);
        e.1 += 1;
    }
    Ok(group_labels()
        .into_iter()
        .map(|group| match sums.get(&group) {
            Some(&(ss, n)) => GroupRmse {
                group,
                n,
                rmse: Some((ss / n as f64).sqrt()),
            },
            None => GroupRmse { group, n: 0, rmse: None },
        })
        .collect())
}

fn run_fold<T: Scalar>(
    d: &Dataset<T>,
    fold: usize,
    test: &[usize],
    config: &ModelConfig,
    target: Target,
    cv: &CvConfig,
) -> Result<FoldResult> {
    let mut in_test = vec![false; d.len()];
    test.iter().for_each(|&i| in_test[i] = true);
    let train: Vec<usize> = (0..d.len()).filter(|&i| !in_test[i]).collect();
    let train_set = d.subset(&train);
    let test_set = d.subset(test);

    let x_train = train_set.feature_matrix();
    let y_train = train_set.targets(target);
    let selection = select_columns(&x_train, &y_train, cv.spearman_threshold, target)?;
    let (kept, duplicates) = if cv.drop_duplicates {
        drop_duplicate_columns(&x_train, &selection.kept)
    } else {
        (selection.kept.clone(), Vec::new())
    };
    let model = TrainedModel::fit(&x_train, &y_train, &kept, &d.feature_names, target, config)?;

    let train_pred = model.predict_matrix(&x_train)?;
    let test_pred = model.predict_matrix(&test_set.feature_matrix())?;
    let y_test = test_set.targets(target);

    let (scaler_mean, scaler_std) = match &model.model {
        FittedModel::Svr(m) => (Some(&m.scaler.mean), Some(&m.scaler.std)),
        FittedModel::Nn(m) => (Some(&m.scaler.mean), Some(&m.scaler.std)),
        _ => (None, None),
    };
    let to_f64 = |v: &Vec<T>| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
    Ok(FoldResult {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        train_r2: r2(&train_pred, &y_train)?,
        test_rmse: rmse(&test_pred, &y_test)?,
        test_r2: r2(&test_pred, &y_test).ok(),
        train_rmse: rmse(&train_pred, &y_train)?,
        preprocessing: Preprocessing {
            kept,
            duplicates,
            correlations: to_f64(&selection.correlations),
            scaler_mean: scaler_mean.map(to_f64),
            scaler_std: scaler_std.map(to_f64),
        },
        test_indices: test.to_vec(),
        test_predictions: to_f64(&test_pred),
    })
}

/// Runs k-fold cross-validation of one model family on one target. The
/// Spearman filter and any input scaling are fitted on training rows only.
pub fn cross_validate<T: Scalar>(
    d: &Dataset<T>,
    config: &ModelConfig,
    target: Target,
    cv: &CvConfig,
) -> Result<CvReport> {
    let folds = if cv.stratified {
        let labels: Vec<String> = d.rows.iter().map(|r| r.meta.group_label()).collect();
        stratified_kfold_indices(&labels, cv.folds, cv.seed)?
    } else {
        kfold_indices(d.len(), cv.folds, cv.seed)?
    };
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            run_fold(d, f, test, config, target, cv).map_err(|e| Error::Fold {
                fold: f,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut meta = Vec::with_capacity(d.len());
    let mut pred = Vec::with_capacity(d.len());
    let mut actual = Vec::with_capacity(d.len());
    for r in &results {
        for (&i, &p) in r.test_indices.iter().zip(&r.test_predictions) {
            meta.push(d.rows[i].meta);
            pred.push(p);
            actual.push(d.rows[i].target(target).to_f64_lossy());
        }
    }
    Ok(CvReport {
        family: config.family(),
        target,
        config: *config,
        cv: *cv,
        n_rows: d.len(),
        aggregates: Aggregates::from_folds(&results),
        per_type: per_type_rmse(&meta, &pred, &actual)?,
        folds: results,
    })
}

fn fmt_stat(s: &Stat, prec: usize) -> String {
    format!("{:.*} ± {:.*}", prec, s.mean, prec, s.std)
}

/// Model × target grid of test RMSE and train R², mean ± std over folds.
pub fn format_table1(reports: &[CvReport]) -> String {
    let targets: Vec<Target> = Target::ALL
        .into_iter()
        .filter(|t| reports.iter().any(|r| r.target == *t))
        .collect();
    let mut families: Vec<ModelFamily> = Vec::new();
    for r in reports {
        if !families.contains(&r.family) {
            families.push(r.family);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:<6}", "model");
    for t in &targets {
        let _ = write!(out, " | {:<34}", format!("{} ({})", t.name(), t.unit()));
    }
    out.push('\n');
    let _ = write!(out, "{:<6}", "");
    for _ in &targets {
        let _ = write!(out, " | {:<17}{:<17}", "test RMSE", "train R2");
    }
    out.push('\n');
    for fam in families {
        let _ = write!(out, "{:<6}", fam.name());
        for t in &targets {
            match reports.iter().find(|r| r.family == fam && r.target == *t) {
                Some(r) => {
                    let _ = write!(
                        out,
                        " | {:<17}{:<17}",
                        fmt_stat(&r.aggregates.test_rmse, 2),
                        fmt_stat(&r.aggregates.train_r2, 3)
                    );
                }
                None => {
                    let _ = write!(out, " | {:<34}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Component group × (model, target) grid of pooled test RMSE.
pub fn format_table2(reports: &[CvReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<6}", "type");
    for r in reports {
        let _ = write!(out, " | {:>14}", format!("{} {}", r.family.name(), r.target.name()));
    }
    out.push('\n');
    for (g, label) in group_labels().iter().enumerate() {
        let _ = write!(out, "{label:<6}");
        for r in reports {
            let cell = match r.per_type.get(g).and_then(|e| e.rmse) {
                Some(v) => format!("{v:.2}"),
                None => "-".to_string(),
            };
            let _ = write!(out, " | {cell:>14}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RecordMeta;
    use crate::preprocess::Sample;

    #[test]
    fn folds_of_exact_and_remainder_sizes() {
        let f = kfold_indices(20, 10, 1).unwrap();
        assert!(f.iter().all(|x| x.len() == 2));
        let f = kfold_indices(23, 10, 1).unwrap();
        let sizes: Vec<usize> = f.iter().map(|x| x.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        assert!(matches!(kfold_indices(5, 10, 0), Err(Error::TooFewRows { n: 5, k: 10 })));
    }

    #[test]
    fn folds_are_deterministic_and_seed_dependent() {
        assert_eq!(kfold_indices(50, 5, 3).unwrap(), kfold_indices(50, 5, 3).unwrap());
        assert_ne!(kfold_indices(50, 5, 3).unwrap(), kfold_indices(50, 5, 4).unwrap());
    }

    #[test]
    fn stratified_folds_balance_groups() {
        let groups: Vec<u8> = (0..60).map(|i| (i % 3) as u8).collect();
        let f = stratified_kfold_indices(&groups, 5, 2).unwrap();
        for fold in &f {
            assert_eq!(fold.len(), 12);
            for g in 0..3u8 {
                assert_eq!(fold.iter().filter(|&&i| groups[i] == g).count(), 4);
            }
        }
    }

    #[test]
    fn metric_examples() {
        let a = [3.0, 4.0];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(r2(&a, &a).unwrap(), 1.0);
        assert_eq!(r2(&[3.5, 3.5], &a).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &a).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r2(&[1.0, 2.0], &[2.0, 2.0]), Err(Error::ConstantActual));
        assert!(matches!(rmse::<f64>(&[], &[]), Err(Error::EmptyDataset { .. })));
    }

    fn meta(kind: ComponentKind, size: SizeClass) -> SampleMeta {
        SampleMeta {
            record: RecordMeta::default(),
            kind,
            size,
        }
    }

    #[test]
    fn absent_groups_are_none() {
        let m = vec![meta(ComponentKind::Capacitor, SizeClass::S0402); 2];
        let t = per_type_rmse(&m, &[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(t.len(), 6);
        let populated: Vec<&GroupRmse> = t.iter().filter(|g| g.rmse.is_some()).collect();
        assert_eq!(populated.len(), 1);
        assert_eq!(populated[0].group, "C0402");
        assert!((populated[0].rmse.unwrap() - 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sample_std() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn toy_dataset(n: usize) -> Dataset<f64> {
        let rows = (0..n)
            .map(|i| {
                let a = i as f64;
                let b = ((i * 7) % 11) as f64;
                Sample {
                    meta: meta(ComponentKind::Resistor, SizeClass::S0603),
                    features: vec![a, b],
                    targets: [2.0 * a - b, b, a * 0.5],
                }
            })
            .collect();
        Dataset {
            feature_names: vec!["a".into(), "b".into()],
            rows,
        }
    }

    #[test]
    fn mean_baseline_has_zero_train_r2() {
        let d = toy_dataset(40);
        let r = cross_validate(&d, &ModelConfig::Mean, Target::ShiftX, &CvConfig { folds: 4, ..CvConfig::default() })
            .unwrap();
        assert!(r.folds.iter().all(|f| f.train_r2.abs() < 1e-12));
        assert_eq!(r.per_type.iter().filter(|g| g.rmse.is_some()).count(), 1);
    }

    #[test]
    fn tables_render_every_cell() {
        let d = toy_dataset(30);
        let cv = CvConfig { folds: 3, ..CvConfig::default() };
        let reports: Vec<CvReport> = [Target::ShiftX, Target::ShiftY]
            .into_iter()
            .map(|t| cross_validate(&d, &ModelConfig::Mean, t, &cv).unwrap())
            .collect();
        let t1 = format_table1(&reports);
        assert_eq!(t1.lines().count(), 3);
        assert!(t1.contains("shift_x (um)") && t1.contains("shift_y (um)"));
        let t2 = format_table2(&reports);
        assert_eq!(t2.lines().count(), 7);
        assert!(t2.lines().nth(2).unwrap().contains("R0603"));
    }
}
