//! Dataset cleaning, rank-correlation feature screening and standardization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ComponentKind, RecordMeta, SizeClass, Target};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_FENCE_MULTIPLIER: f64 = 3.0;
pub const DEFAULT_SPEARMAN_THRESHOLD: f64 = 0.02;
const CONSTANT_STD: f64 = 1e-12;

/// Identity of a row beyond its numeric content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleMeta {
    pub record: RecordMeta,
    pub kind: ComponentKind,
    pub size: SizeClass,
}

impl SampleMeta {
    /// Group label such as `R0603`.
    pub fn group_label(&self) -> String {
        format!("{}{}", self.kind.letter(), self.size.label())
    }
}

/// A row as read from disk: any numeric field may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow<T> {
    pub meta: SampleMeta,
    pub features: Vec<Option<T>>,
    pub targets: [Option<T>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub meta: SampleMeta,
    pub features: Vec<T>,
    pub targets: [T; 3],
}

impl<T: Scalar> Sample<T> {
    pub fn target(&self, t: Target) -> T {
        self.targets[t.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub feature_names: Vec<String>,
    pub rows: Vec<Sample<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_matrix(&self) -> Matrix<T> {
        let rows: Vec<&[T]> = self.rows.iter().map(|r| r.features.as_slice()).collect();
        Matrix::from_rows(&rows, self.n_features()).expect("rows share the schema width")
    }

    pub fn targets(&self, t: Target) -> Vec<T> {
        self.rows.iter().map(|r| r.target(t)).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Keeps rows with every feature and target present and finite.
/// Returns the dataset and the number of rows removed.
pub fn drop_missing<T: Scalar>(
    raw: Vec<RawRow<T>>,
    feature_names: Vec<String>,
) -> Result<(Dataset<T>, usize)> {
    let total = raw.len();
    let width = feature_names.len();
    let rows: Vec<Sample<T>> = raw
        .into_iter()
        .filter_map(|r| {
            if r.features.len() != width {
                return None;
            }
            let features: Option<Vec<T>> = r
                .features
                .iter()
                .map(|v| v.filter(|x| x.is_finite()))
                .collect();
            let mut targets = [T::zero(); 3];
            for (slot, v) in targets.iter_mut().zip(r.targets) {
                *slot = v.filter(|x| x.is_finite())?;
            }
            Some(Sample {
                meta: r.meta,
                features: features?,
                targets,
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset {
            stage: "missing-value removal",
        });
    }
    let removed = total - rows.len();
    Ok((Dataset { feature_names, rows }, removed))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::of(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `[Q1 - k·IQR, Q3 + k·IQR]` of the values.
pub fn iqr_fence<T: Scalar>(values: &[T], k: f64) -> (T, T) {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    (q1 - T::of(k) * iqr, q3 + T::of(k) * iqr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSummary {
    pub removed: usize,
    /// Fence passes until no row fell outside (including the final clean pass).
    pub passes: usize,
}

/// Removes rows whose targets fall outside the per-target IQR fence.
///
/// Fences are recomputed on the survivors until a pass removes nothing, so
/// the result is a fixed point and the operation is idempotent.
pub fn remove_outliers<T: Scalar>(d: &Dataset<T>, k: f64) -> Result<(Dataset<T>, OutlierSummary)> {
    if d.is_empty() {
        return Err(Error::EmptyDataset {
            stage: "outlier removal input",
        });
    }
    let mut keep: Vec<usize> = (0..d.len()).collect();
    let mut passes = 0;
    loop {
        passes += 1;
        let fences: Vec<(T, T)> = Target::ALL
            .iter()
            .map(|&t| {
                let vals: Vec<T> = keep.iter().map(|&i| d.rows[i].target(t)).collect();
                iqr_fence(&vals, k)
            })
            .collect();
        let next: Vec<usize> = keep
            .iter()
            .copied()
            .filter(|&i| {
                let r = &d.rows[i];
                Target::ALL.iter().zip(&fences).all(|(&t, &(lo, hi))| {
                    let v = r.target(t);
                    v >= lo && v <= hi
                })
            })
            .collect();
        if next.is_empty() {
            return Err(Error::EmptyDataset {
                stage: "outlier removal",
            });
        }
        if next.len() == keep.len() {
            break;
        }
        keep = next;
    }
    let removed = d.len() - keep.len();
    Ok((d.subset(&keep), OutlierSummary { removed, passes }))
}

/// 1-based ranks with ties given the mean of the positions they span.
pub fn midranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their average.
        let avg = T::of((start + 1 + end) as f64 / 2.0);
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return T::zero();
    }
    (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one())
}

/// Tie-aware Spearman rank correlation; 0 when either input is constant.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort {
            required: 3,
            got: x.len(),
        });
    }
    Ok(pearson(&midranks(x), &midranks(y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection<T> {
    pub threshold: f64,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Spearman correlation of every column with the target.
    pub correlations: Vec<T>,
}

/// Keeps columns whose |Spearman ρ| with `y` reaches `threshold`.
pub fn select_columns<T: Scalar>(x: &Matrix<T>, y: &[T], threshold: f64, target: Target) -> Result<FeatureSelection<T>> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "spearman threshold {threshold} outside [0, 1)"
        )));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset {
            stage: "feature selection",
        });
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.len(),
        });
    }
    let y_ranks = midranks(y);
    let correlations: Vec<T> = (0..x.cols())
        .into_par_iter()
        .map(|j| {
            let col = x.column(j);
            if col.len() < 3 {
                return T::zero();
            }
            pearson(&midranks(&col), &y_ranks)
        })
        .collect();
    let tau = T::of(threshold);
    let (kept, dropped): (Vec<usize>, Vec<usize>) =
        (0..x.cols()).partition(|&j| correlations[j].abs() >= tau);
    if kept.is_empty() {
        return Err(Error::NoFeaturesLeft {
            target: target.name().to_string(),
            threshold,
        });
    }
    Ok(FeatureSelection {
        threshold,
        kept,
        dropped,
        correlations,
    })
}

pub fn select_features<T: Scalar>(d: &Dataset<T>, target: Target, threshold: f64) -> Result<FeatureSelection<T>> {
    select_columns(&d.feature_matrix(), &d.targets(target), threshold, target)
}

/// Splits `kept` into columns whose values are not an exact copy of an
/// earlier kept column, and the copies.
pub fn drop_duplicate_columns<T: Scalar>(x: &Matrix<T>, kept: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut unique: Vec<(usize, Vec<T>)> = Vec::new();
    let mut copies = Vec::new();
    for &j in kept {
        let col = x.column(j);
        if unique.iter().any(|(_, c)| *c == col) {
            copies.push(j);
        } else {
            unique.push((j, col));
        }
    }
    (unique.into_iter().map(|(j, _)| j).collect(), copies)
}

/// Per-column z-score transform. Columns with (population) standard deviation
/// below 1e-12 map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Scaler<T> {
    pub fn fit(x: &Matrix<T>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::EmptyDataset { stage: "scaler fit" });
        }
        let n = T::of_usize(x.rows());
        let mut mean = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(row) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Scaler { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    fn is_constant(&self, j: usize) -> bool {
        self.std[j] < T::of(CONSTANT_STD)
    }

    pub fn transform_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.width() {
            return Err(Error::ShapeMismatch {
                expected: self.width(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.is_constant(j) {
                    T::zero()
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect())
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut data = Vec::with_capacity(x.rows() * x.cols());
        for row in x.iter_rows() {
            data.extend(self.transform_row(row)?);
        }
        Matrix::from_vec(x.rows(), self.width(), data)
    }

    /// Undoes `transform_row`; constant columns come back as their mean.
    pub fn inverse_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .enumerate()
            .map(|(j, &z)| {
                if self.is_constant(j) {
                    self.mean[j]
                } else {
                    z * self.std[j] + self.mean[j]
                }
            })
            .collect()
    }
}

/// Single-column standardizer for regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler<T> {
    pub mean: T,
    /// Population std, or 1 when the targets are constant.
    pub scale: T,
}

impl<T: Scalar> TargetScaler<T> {
    pub fn fit(y: &[T]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyDataset { stage: "target scaler fit" });
        }
        let n = T::of_usize(y.len());
        let mean = y.iter().copied().sum::<T>() / n;
        let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let std = var.sqrt();
        let scale = if std < T::of(CONSTANT_STD) { T::one() } else { std };
        Ok(TargetScaler { mean, scale })
    }

    pub fn identity() -> Self {
        TargetScaler {
            mean: T::zero(),
            scale: T::one(),
        }
    }

    pub fn forward(&self, y: T) -> T {
        (y - self.mean) / self.scale
    }

    pub fn inverse(&self, z: T) -> T {
        z * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSelectionReport {
    pub target: Target,
    pub threshold: f64,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

/// Counts and decisions made while cleaning one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_rows: usize,
    pub missing_removed: usize,
    pub outliers_removed: usize,
    pub outlier_passes: usize,
    pub fence_multiplier: f64,
    pub output_rows: usize,
    pub feature_selection: Vec<TargetSelectionReport>,
}

impl std::fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "input rows:        {}", self.input_rows)?;
        writeln!(f, "missing removed:   {}", self.missing_removed)?;
        writeln!(
            f,
            "outliers removed:  {} (IQR fence k = {}, {} passes)",
            self.outliers_removed, self.fence_multiplier, self.outlier_passes
        )?;
        writeln!(f, "output rows:       {}", self.output_rows)?;
        for s in &self.feature_selection {
            writeln!(
                f,
                "{}: {} features kept at |rho| >= {}; dropped: {}",
                s.target.name(),
                s.kept.len(),
                s.threshold,
                if s.dropped.is_empty() {
                    "none".to_string()
                } else {
                    s.dropped.join(", ")
                }
            )?;
        }
        Ok(())
    }
}

/// Missing-value removal followed by outlier removal, plus an informational
/// per-target feature screen on the cleaned rows.
pub fn clean<T: Scalar>(
    raw: Vec<RawRow<T>>,
    feature_names: Vec<String>,
    fence_multiplier: f64,
    spearman_threshold: f64,
) -> Result<(Dataset<T>, CleaningReport)> {
    let input_rows = raw.len();
    let (complete, missing_removed) = drop_missing(raw, feature_names)?;
    let (cleaned, outliers) = remove_outliers(&complete, fence_multiplier)?;
    let mut feature_selection = Vec::new();
    for t in Target::ALL {
        let (kept, dropped) = match select_features(&cleaned, t, spearman_threshold) {
            Ok(sel) => (sel.kept, sel.dropped),
            Err(Error::NoFeaturesLeft { .. }) => (vec![], (0..cleaned.n_features()).collect()),
            Err(Error::EmptyDataset { .. }) => (vec![], vec![]),
            Err(e) => return Err(e),
        };
        let names = |idx: Vec<usize>| idx.into_iter().map(|j| cleaned.feature_names[j].clone()).collect();
        feature_selection.push(TargetSelectionReport {
            target: t,
            threshold: spearman_threshold,
            kept: names(kept),
            dropped: names(dropped),
        });
    }
    let report = CleaningReport {
        input_rows,
        missing_removed,
        outliers_removed: outliers.removed,
        outlier_passes: outliers.passes,
        fence_multiplier,
        output_rows: cleaned.len(),
        feature_selection,
    };
    Ok((cleaned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta() -> SampleMeta {
        SampleMeta {
            record: RecordMeta::default(),
            kind: ComponentKind::Resistor,
            size: SizeClass::S0603,
        }
    }

    fn dataset(rows: Vec<(Vec<f64>, [f64; 3])>) -> Dataset<f64> {
        let p = rows.first().map_or(0, |r| r.0.len());
        Dataset {
            feature_names: (0..p).map(|j| format!("f{j}")).collect(),
            rows: rows
                .into_iter()
                .map(|(features, targets)| Sample {
                    meta: meta(),
                    features,
                    targets,
                })
                .collect(),
        }
    }

    fn raw(features: Vec<Option<f64>>, targets: [Option<f64>; 3]) -> RawRow<f64> {
        RawRow {
            meta: meta(),
            features,
            targets,
        }
    }

    /// Rank-difference formula, valid only without ties.
    fn rank_difference_rho(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| {
            let mut r = vec![0.0; v.len()];
            for i in 0..v.len() {
                r[i] = 1.0 + v.iter().filter(|&&o| o < v[i]).count() as f64;
            }
            r
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = x.len() as f64;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    #[test]
    fn drop_missing_counts() {
        let names = vec!["a".to_string()];
        let rows: Vec<_> = (0..10)
            .map(|i| raw(vec![Some(i as f64)], [Some(1.0), Some(2.0), Some(3.0)]))
            .collect();
        let (d, removed) = drop_missing(rows.clone(), names.clone()).unwrap();
        assert_eq!((d.len(), removed), (10, 0));

        let mut rows2 = rows;
        rows2[4].targets[1] = None;
        let (d, removed) = drop_missing(rows2, names.clone()).unwrap();
        assert_eq!((d.len(), removed), (9, 1));

        let bad = vec![raw(vec![Some(f64::NAN)], [Some(1.0); 3])];
        assert!(matches!(drop_missing(bad, names), Err(Error::EmptyDataset { .. })));
    }

    #[test]
    fn identical_targets_survive_fence() {
        let d = dataset((0..20).map(|i| (vec![i as f64], [5.0, 5.0, 5.0])).collect());
        let (out, s) = remove_outliers(&d, 3.0).unwrap();
        assert_eq!(out.len(), 20);
        assert_eq!(s.removed, 0);
    }

    #[test]
    fn extreme_target_removed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows: Vec<_> = (0..100)
            .map(|i| {
                (
                    vec![i as f64],
                    [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(-2.0..2.0)],
                )
            })
            .collect();
        rows[37].1[0] = 1e6;
        let d = dataset(rows);
        let (out, s) = remove_outliers(&d, 3.0).unwrap();
        assert_eq!(s.removed, 1);
        assert!(out.rows.iter().all(|r| r.targets[0] < 1e5));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[2.0, 4.0, 9.0, 10.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert!((rank_difference_rho(&x, &y) - 0.8).abs() < 1e-12);
        assert!((spearman(&x, &y).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&x, &[7.0; 5]).unwrap(), 0.0);
        assert!(matches!(spearman(&x, &y[..4]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(spearman(&x[..2], &y[..2]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn exact_copies_are_dropped() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 1.0, 1.0], vec![3.0, 4.0, 3.0, 3.0 + 1e-12]], 4).unwrap();
        assert_eq!(drop_duplicate_columns(&x, &[0, 1, 2, 3]), (vec![0, 1, 3], vec![2]));
        assert_eq!(drop_duplicate_columns(&x, &[2, 0]), (vec![2], vec![0]));
    }

    #[test]
    fn selection_threshold_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = dataset(
            (0..60)
                .map(|_| {
                    let a: f64 = rng.gen();
                    (vec![a, 4.0, rng.gen()], [a * 2.0, rng.gen(), rng.gen()])
                })
                .collect(),
        );
        let all = select_features(&d, Target::ShiftX, 0.0).unwrap();
        assert_eq!(all.kept, vec![0, 1, 2]);
        let some = select_features(&d, Target::ShiftX, 1e-6).unwrap();
        assert!(some.dropped.contains(&1));
        assert!(some.kept.contains(&0));
        assert!(select_features(&d, Target::ShiftX, 1.0).is_err());
    }

    #[test]
    fn no_features_left() {
        let d = dataset((0..10).map(|i| (vec![1.0, 2.0], [i as f64, 0.0, 0.0])).collect());
        assert!(matches!(
            select_features(&d, Target::ShiftX, 0.1),
            Err(Error::NoFeaturesLeft { .. })
        ));
    }

    #[test]
    fn scaler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.gen_range(-50.0..90.0), 3.5, rng.gen_range(0.0..1e-3)])
            .collect();
        let x = Matrix::from_rows(&rows, 3).unwrap();
        let s = Scaler::fit(&x).unwrap();
        let z = s.transform(&x).unwrap();
        for j in [0, 2] {
            let col = z.column(j);
            let m = col.iter().sum::<f64>() / 500.0;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 500.0).sqrt();
            assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        assert!(z.column(1).iter().all(|&v| v == 0.0));

        // Re-standardizing standardized data is a no-op.
        let s2 = Scaler::fit(&z).unwrap();
        let z2 = s2.transform(&z).unwrap();
        for (a, b) in z.as_slice().iter().zip(z2.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn target_scaler_constant() {
        let t = TargetScaler::fit(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(t.forward(4.0), 0.0);
        assert_eq!(t.inverse(0.0), 4.0);
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_maps(
            pairs in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 3..40)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let base = spearman(&x, &y).unwrap();
            let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let cy: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
            prop_assert!((spearman(&ex, &y).unwrap() - base).abs() < 1e-12);
            prop_assert!((spearman(&x, &cy).unwrap() - base).abs() < 1e-12);
            prop_assert!(base.abs() <= 1.0);
        }

        #[test]
        fn spearman_self_and_negation(x in prop::collection::vec(-10.0..10.0f64, 3..40)) {
            let constant = x.iter().all(|&v| v == x[0]);
            prop_assume!(!constant);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        }

        #[test]
        fn outlier_removal_is_idempotent(
            t in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -5.0..5.0f64), 5..60),
            spikes in prop::collection::vec((0usize..60, 100.0..1e4f64), 0..4),
        ) {
            let mut rows: Vec<_> = t.iter().map(|&(a, b, c)| (vec![a], [a, b, c])).collect();
            for (i, v) in spikes {
                let n = rows.len();
                rows[i % n].1[0] = v;
            }
            let d = dataset(rows);
            let (once, _) = remove_outliers(&d, 1.5).unwrap();
            let (twice, s) = remove_outliers(&once, 1.5).unwrap();
            prop_assert_eq!(s.removed, 0);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn selection_ignores_row_order(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<_> = (0..40)
                .map(|_| {
                    let f: Vec<f64> = (0..5).map(|_| rng.gen_range(0..4) as f64).collect();
                    let y = f[0] - f[3] + rng.gen::<f64>();
                    (f, [y, 0.0, 0.0])
                })
                .collect();
            let d = dataset(rows.clone());
            let mut rev = rows;
            rev.reverse();
            let a = select_features(&d, Target::ShiftX, 0.1).ok().map(|s| s.kept);
            let b = select_features(&dataset(rev), Target::ShiftX, 0.1).ok().map(|s| s.kept);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn scaler_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 4), 2..30)) {
            let x = Matrix::from_rows(&rows, 4).unwrap();
            let s = Scaler::fit(&x).unwrap();
            for r in &rows {
                let back = s.inverse_row(&s.transform_row(r).unwrap());
                for j in 0..4 {
                    if s.std[j] >= 1e-12 {
                        prop_assert!((back[j] - r[j]).abs() <= 1e-9 * (1.0 + r[j].abs()));
                    }
                }
            }
        }
    }
}
