#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reflow_shift::features::{ComponentKind, RecordMeta, SizeClass};
use reflow_shift::geometry::Rect2D;
use reflow_shift::preprocess::{Dataset, Sample, SampleMeta};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rect(rng: &mut impl Rng) -> Rect2D<f64> {
    Rect2D::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.2..2.0),
        rng.gen_range(0.2..2.0),
        rng.gen_range(-180.0..180.0),
    )
    .unwrap()
}

/// Monte-Carlo overlap: uniform points in `a`, tested against `b`.
/// Returns the estimate and its standard error, the latter floored at the
/// one-hit value so that all-or-nothing samples still carry a spread.
pub fn mc_overlap(a: &Rect2D<f64>, b: &Rect2D<f64>, n: usize, rng: &mut impl Rng) -> (f64, f64) {
    let c = a.corners();
    let (ex, ey) = (c[1][0] - c[0][0], c[1][1] - c[0][1]);
    let (fx, fy) = (c[3][0] - c[0][0], c[3][1] - c[0][1]);
    let mut hits = 0usize;
    for _ in 0..n {
        let s: f64 = rng.gen();
        let t: f64 = rng.gen();
        if b.contains(c[0][0] + s * ex + t * fx, c[0][1] + s * ey + t * fy) {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let area = a.length * a.width;
    let q = p.clamp(1.0 / n as f64, 1.0 - 1.0 / n as f64);
    (area * p, area * (q * (1.0 - q) / n as f64).sqrt())
}

/// `1 − 6 Σ d² / (n (n² − 1))` with plain ordinal ranks; ties-free input only.
pub fn spearman_rank_difference(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = (pos + 1) as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Midrank by counting: `#{x_j < x_i} + (#{x_j = x_i} + 1) / 2`.
pub fn brute_midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&brute_midranks(x), &brute_midranks(y))
}

/// ε-insensitive primal at `(w, b)`.
pub fn svr_primal(rows: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, c: f64, eps: f64) -> f64 {
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let slack: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            let f: f64 = r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
            ((t - f).abs() - eps).max(0.0)
        })
        .sum();
    0.5 * norm + c * slack
}

/// Best primal for fixed `w`: the objective is piecewise linear in `b`
/// with breakpoints at `y_i − ⟨w, x_i⟩ ± ε`.
fn best_over_bias(rows: &[Vec<f64>], y: &[f64], w: &[f64], c: f64, eps: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (r, &t) in rows.iter().zip(y) {
        let u = t - r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        for b in [u - eps, u + eps] {
            best = best.min(svr_primal(rows, y, w, b, c, eps));
        }
    }
    best
}

/// Grid search over `w` in `[-lim, lim]^p` (p ≤ 2) with the bias solved
/// exactly, refined twice around the incumbent.
pub fn svr_grid_oracle(rows: &[Vec<f64>], y: &[f64], c: f64, eps: f64, lim: f64) -> f64 {
    let p = rows[0].len();
    assert!(p >= 1 && p <= 2);
    let steps = if p == 1 { 4001 } else { 201 };
    let mut center = vec![0.0; p];
    let mut half = lim;
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let h = 2.0 * half / (steps - 1) as f64;
        let mut arg = center.clone();
        let grid = |k: usize, c0: f64| c0 - half + k as f64 * h;
        if p == 1 {
            for a in 0..steps {
                let w = [grid(a, center[0])];
                let v = best_over_bias(rows, y, &w, c, eps);
                if v < best {
                    best = v;
                    arg = w.to_vec();
                }
            }
        } else {
            for a in 0..steps {
                for b in 0..steps {
                    let w = [grid(a, center[0]), grid(b, center[1])];
                    let v = best_over_bias(rows, y, &w, c, eps);
                    if v < best {
                        best = v;
                        arg = w.to_vec();
                    }
                }
            }
        }
        center = arg;
        half = 4.0 * h;
    }
    best
}

/// Every midpoint between distinct sorted values, scored by direct SSE.
/// Returns `(threshold, child_sse)` of the smallest SSE, smallest threshold
/// among ties within `1e-9` relative.
pub fn exhaustive_split(column: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let mut values: Vec<f64> = column.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let sse = |part: &[f64]| {
        let m = part.iter().sum::<f64>() / part.len() as f64;
        part.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    };
    let mut best: Option<(f64, f64)> = None;
    for w in values.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let left: Vec<f64> = column.iter().zip(y).filter(|(c, _)| **c <= t).map(|(_, v)| *v).collect();
        let right: Vec<f64> = column.iter().zip(y).filter(|(c, _)| **c > t).map(|(_, v)| *v).collect();
        let s = sse(&left) + sse(&right);
        match best {
            Some((_, b)) if s >= b - 1e-9 * b.abs().max(1.0) => {}
            _ => best = Some((t, s)),
        }
    }
    best
}

pub fn sample_meta(i: usize) -> SampleMeta {
    let kind = if i % 2 == 0 { ComponentKind::Resistor } else { ComponentKind::Capacitor };
    SampleMeta {
        record: RecordMeta {
            board_id: 1,
            combination_id: (i % 33 + 1) as u32,
            replicate_id: (i / 33 + 1) as u32,
        },
        kind,
        size: SizeClass::ALL[(i / 2) % 3],
    }
}

/// `n` rows, `p` uniform features; every target is `3 x0 − 2 x1 + noise`.
pub fn linear_dataset(n: usize, p: usize, noise: f64, seed: u64) -> Dataset<f64> {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|i| {
            let features: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
            let base = 3.0 * features[0] - 2.0 * features[1];
            let mut t = || base + noise * r.gen_range(-1.0..1.0);
            let targets = [t(), t(), t()];
            Sample {
                meta: sample_meta(i),
                features,
                targets,
            }
        })
        .collect();
    Dataset {
        feature_names: (0..p).map(|j| format!("f{j}")).collect(),
        rows,
    }
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> f64 {
    let s: f64 = pred.iter().zip(actual).map(|(a, b)| (a - b).powi(2)).sum();
    (s / pred.len() as f64).sqrt()
}

pub fn r2(pred: &[f64], actual: &[f64]) -> f64 {
    let m = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_res: f64 = pred.iter().zip(actual).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = actual.iter().map(|b| (b - m).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

pub fn mean_and_sample_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}
