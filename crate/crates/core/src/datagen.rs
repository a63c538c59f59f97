//! Synthetic assembly data: a 33-run design over the print and placement
//! factors, six component types, replicated boards, and a toy reflow-shift
//! response.
//!
//! The response is a test fixture, not a physical model. It encodes three
//! qualitative relations: components rotate back against their placement
//! rotation, x shift follows placement x offset and the volume imbalance
//! between the two deposits, and y shift follows placement y offset and the
//! paste area hanging off the pads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    extract_features, feature_index, AssemblyRecord, ComponentKind, ComponentSpec, FeatureVector, PasteDeposit,
    PlacementMeasure, RecordMeta, SizeClass, TargetTriple,
};
use crate::geometry::{PadPair, Pose, Rect2D};
use crate::preprocess::{RawRow, SampleMeta};
use crate::scalar::Scalar;

pub const COMBINATIONS: usize = 33;
pub const COMPONENT_TYPES: usize = 6;
const STENCIL_THICKNESS: f64 = 0.1;
const PASTE_AREA_RATIO: f64 = 1.1;
const MISSING_STREAM: u64 = u64::MAX;

/// Factor settings of one design combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub combination_id: u32,
    /// Multiplier on the nominal deposit volume.
    pub volume_level: f64,
    /// Pad 1 volume over pad 2 volume.
    pub volume_ratio: f64,
    /// Intentional print offset as fractions of pad length and pad width, and degrees.
    pub paste_offset: (f64, f64, f64),
    pub pressure: f64,
    /// Intentional placement offset in μm, μm and degrees.
    pub placement_offset: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorLevels {
    pub volume_level: f64,
    pub volume_ratio: f64,
    pub paste_dx_frac: f64,
    pub paste_dy_frac: f64,
    pub paste_rot: f64,
    pub pressure: (f64, f64),
    /// μm
    pub placement_dx: f64,
    /// μm
    pub placement_dy: f64,
    pub placement_rot: f64,
}

impl Default for FactorLevels {
    fn default() -> Self {
        FactorLevels {
            volume_level: 0.2,
            volume_ratio: 1.33,
            paste_dx_frac: 0.1,
            paste_dy_frac: 0.15,
            paste_rot: 3.0,
            pressure: (1.0, 2.0),
            placement_dx: 40.0,
            placement_dy: 40.0,
            placement_rot: 3.0,
        }
    }
}

/// Coefficients of the toy response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthCoefficients {
    pub kappa_x: f64,
    pub kappa_y: f64,
    pub kappa_rot: f64,
    /// Weight of the relative volume imbalance, in body lengths.
    pub gamma_x: f64,
    /// Weight of the off-pad paste fraction, in body lengths.
    pub gamma_y: f64,
    /// Weight of the placement-x times print-y interaction, per body length.
    pub eta: f64,
}

impl Default for TruthCoefficients {
    fn default() -> Self {
        TruthCoefficients {
            kappa_x: 0.9,
            kappa_y: 0.9,
            kappa_rot: 0.9,
            gamma_x: 0.1,
            gamma_y: 0.1,
            eta: 0.0,
        }
    }
}

/// Standard deviations of the noise injected into the shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseScales {
    pub shift_x: f64,
    pub shift_y: f64,
    pub shift_rot: f64,
}

impl Default for NoiseScales {
    fn default() -> Self {
        NoiseScales {
            shift_x: 8.0,
            shift_y: 20.0,
            shift_rot: 1.5,
        }
    }
}

impl NoiseScales {
    pub fn get(&self, t: crate::features::Target) -> f64 {
        use crate::features::Target;
        match t {
            Target::ShiftX => self.shift_x,
            Target::ShiftY => self.shift_y,
            Target::ShiftRot => self.shift_rot,
        }
    }
}

/// Process scatter and inspection noise on the recorded inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementNoise {
    pub volume_rel: f64,
    pub area_rel: f64,
    pub height_rel: f64,
    /// Print offset scatter as a fraction of pad length / width.
    pub paste_frac: f64,
    pub paste_rot: f64,
    /// Placement scatter in μm.
    pub placement_xy: f64,
    pub placement_rot: f64,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        MeasurementNoise {
            volume_rel: 0.03,
            area_rel: 0.02,
            height_rel: 0.02,
            paste_frac: 0.01,
            paste_rot: 0.2,
            placement_xy: 12.0,
            placement_rot: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub replications: usize,
    pub noise: NoiseScales,
    pub truth: TruthCoefficients,
    pub measurement: MeasurementNoise,
    pub levels: FactorLevels,
    pub missing_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            replications: 20,
            noise: NoiseScales::default(),
            truth: TruthCoefficients::default(),
            measurement: MeasurementNoise::default(),
            levels: FactorLevels::default(),
            missing_rate: 0.005,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let n = &self.noise;
        let m = &self.measurement;
        let scales = [
            n.shift_x,
            n.shift_y,
            n.shift_rot,
            m.volume_rel,
            m.area_rel,
            m.height_rel,
            m.paste_frac,
            m.paste_rot,
            m.placement_xy,
            m.placement_rot,
        ];
        if scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("noise scales must be finite and non-negative".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if !(0.0..=0.1).contains(&self.missing_rate) {
            return Err(Error::InvalidParameter(format!(
                "missing rate {} outside [0, 0.1]",
                self.missing_rate
            )));
        }
        Ok(())
    }

    pub fn n_records(&self) -> usize {
        COMBINATIONS * COMPONENT_TYPES * self.replications
    }
}

/// Resistors then capacitors, large to small.
pub fn component_types() -> [ComponentSpec; COMPONENT_TYPES] {
    let mut out = [ComponentSpec::new(ComponentKind::Resistor, SizeClass::S1005); COMPONENT_TYPES];
    let mut i = 0;
    for kind in [ComponentKind::Resistor, ComponentKind::Capacitor] {
        for size in SizeClass::ALL {
            out[i] = ComponentSpec::new(kind, size);
            i += 1;
        }
    }
    out
}

/// Two-level 2^(9-4) fraction over nine factors A..J (base A..E, generators
/// F = BCDE, G = ACDE, H = ABDE, J = ABCE) plus one center run.
pub fn design_points(levels: &FactorLevels) -> Vec<DesignPoint> {
    let mut out = Vec::with_capacity(COMBINATIONS);
    for run in 0..32u32 {
        let s = |bit: u32| if run >> bit & 1 == 1 { 1.0 } else { -1.0 };
        let (a, b, c, d, e) = (s(4), s(3), s(2), s(1), s(0));
        let (f, g, h, j) = (b * c * d * e, a * c * d * e, a * b * d * e, a * b * c * e);
        out.push(point(run + 1, [a, b, c, d, e, f, g, h, j], levels));
    }
    out.push(point(COMBINATIONS as u32, [0.0; 9], levels));
    out
}

fn point(id: u32, code: [f64; 9], lv: &FactorLevels) -> DesignPoint {
    let (lo, hi) = lv.pressure;
    DesignPoint {
        combination_id: id,
        volume_level: 1.0 + code[0] * lv.volume_level,
        volume_ratio: lv.volume_ratio.powf(code[1]),
        paste_offset: (code[2] * lv.paste_dx_frac, code[3] * lv.paste_dy_frac, code[4] * lv.paste_rot),
        pressure: (lo + hi) / 2.0 + code[5] * (hi - lo) / 2.0,
        placement_offset: (
            code[6] * lv.placement_dx,
            code[7] * lv.placement_dy,
            code[8] * lv.placement_rot,
        ),
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated non-negative scale")
}

/// Builds one record (without targets) for a design point and component.
pub fn build_record(
    dp: &DesignPoint,
    comp: ComponentSpec,
    replicate: u32,
    m: &MeasurementNoise,
    rng: &mut impl Rng,
) -> Result<AssemblyRecord> {
    let (l, w) = (comp.length, comp.width);
    let (pad_l, pad_w) = (0.5 * l, 1.2 * w);
    let pads = PadPair::new(
        Rect2D::axis_aligned(-l / 2.0, 0.0, pad_l, pad_w)?,
        Rect2D::axis_aligned(l / 2.0, 0.0, pad_l, pad_w)?,
    )?;
    let nominal_area = PASTE_AREA_RATIO * pad_l * pad_w;
    let nominal_volume = nominal_area * STENCIL_THICKNESS * dp.volume_level;
    let r = dp.volume_ratio;
    let volumes = [nominal_volume * 2.0 * r / (1.0 + r), nominal_volume * 2.0 / (1.0 + r)];
    let (pdx, pdy, prot) = dp.paste_offset;
    let mut deposits = volumes.iter().map(|&v| {
        let volume = v * (1.0 + normal(m.volume_rel).sample(rng));
        let area = nominal_area * (1.0 + normal(m.area_rel).sample(rng));
        let height = volume / area * (1.0 + normal(m.height_rel).sample(rng));
        let offset = Pose::new(
            1000.0 * pad_l * (pdx + normal(m.paste_frac).sample(rng)),
            1000.0 * pad_w * (pdy + normal(m.paste_frac).sample(rng)),
            prot + normal(m.paste_rot).sample(rng),
        );
        PasteDeposit {
            volume,
            area,
            height,
            offset,
        }
    });
    let paste1 = deposits.next().expect("two deposits");
    let paste2 = deposits.next().expect("two deposits");
    let (qx, qy, qrot) = dp.placement_offset;
    let placement = PlacementMeasure {
        offset: Pose::new(
            qx + normal(m.placement_xy).sample(rng),
            qy + normal(m.placement_xy).sample(rng),
            qrot + normal(m.placement_rot).sample(rng),
        ),
        pressure: dp.pressure,
    };
    let record = AssemblyRecord {
        component: comp,
        pads,
        paste1,
        paste2,
        placement,
        targets: None,
        meta: RecordMeta {
            board_id: replicate,
            combination_id: dp.combination_id,
            replicate_id: replicate,
        },
    };
    record.validate()?;
    Ok(record)
}

fn feature(f: &FeatureVector, name: &str) -> f64 {
    f.values()[feature_index(name).expect("schema name")]
}

/// Noise-free toy response evaluated on the record's recorded factors.
pub fn truth_mean(features: &FeatureVector, comp: &ComponentSpec, c: &TruthCoefficients) -> TargetTriple {
    let scale = 1000.0 * comp.length;
    let dx = feature(features, "placement_offset_x");
    let dy = feature(features, "placement_offset_y");
    let rot = feature(features, "placement_offset_rot");
    let paste_dy = feature(features, "paste_offset_y");
    let imbalance = feature(features, "paste_volume_diff") / feature(features, "paste_volume_avg");
    let off_pad = feature(features, "paste_pad_noncontact_area_avg") / feature(features, "paste_area_avg");
    let sign = if paste_dy > 0.0 {
        1.0
    } else if paste_dy < 0.0 {
        -1.0
    } else {
        0.0
    };
    TargetTriple::new(
        -c.kappa_x * dx + c.gamma_x * imbalance * scale + c.eta * dx * paste_dy / scale,
        -c.kappa_y * dy + c.gamma_y * off_pad * sign * scale,
        -c.kappa_rot * rot,
    )
}

/// Toy response plus Gaussian noise.
pub fn synth_truth(record: &AssemblyRecord, config: &GenConfig, rng: &mut impl Rng) -> Result<TargetTriple> {
    let f = extract_features(record)?;
    let mean = truth_mean(&f, &record.component, &config.truth);
    let n = &config.noise;
    Ok(TargetTriple::new(
        mean.shift_x + normal(n.shift_x).sample(rng),
        mean.shift_y + normal(n.shift_y).sample(rng),
        mean.shift_rot + normal(n.shift_rot).sample(rng),
    ))
}

/// Random stream for record `index` of the canonical order.
pub fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Every record of the design in canonical (combination, type, replicate)
/// order, with targets and no missing values.
pub fn design_grid(config: &GenConfig) -> Result<Vec<AssemblyRecord>> {
    config.validate()?;
    let points = design_points(&config.levels);
    let types = component_types();
    let reps = config.replications;
    (0..config.n_records())
        .into_par_iter()
        .map(|i| {
            let dp = &points[i / (COMPONENT_TYPES * reps)];
            let comp = types[i / reps % COMPONENT_TYPES];
            let replicate = (i % reps + 1) as u32;
            let mut rng = record_rng(config.seed, i);
            let mut rec = build_record(dp, comp, replicate, &config.measurement, &mut rng)?;
            rec.targets = Some(synth_truth(&rec, config, &mut rng)?);
            Ok(rec)
        })
        .collect()
}

/// Blanks the targets of each record independently with probability `rate`.
/// Returns how many records were blanked.
pub fn inject_missing(records: &mut [AssemblyRecord], rate: f64, rng: &mut impl Rng) -> Result<usize> {
    if !(0.0..=0.1).contains(&rate) {
        return Err(Error::InvalidParameter(format!("missing rate {rate} outside [0, 0.1]")));
    }
    let mut count = 0;
    for r in records.iter_mut() {
        if rng.gen::<f64>() < rate && r.targets.is_some() {
            r.targets = None;
            count += 1;
        }
    }
    Ok(count)
}

/// `design_grid` followed by `inject_missing` at the configured rate.
pub fn generate(config: &GenConfig) -> Result<Vec<AssemblyRecord>> {
    let mut records = design_grid(config)?;
    let mut rng = record_rng(config.seed, 0);
    rng.set_stream(MISSING_STREAM);
    inject_missing(&mut records, config.missing_rate, &mut rng)?;
    Ok(records)
}

/// Feature extraction for every record, yielding rows ready for cleaning.
pub fn to_raw_rows<T: Scalar>(records: &[AssemblyRecord]) -> Result<Vec<RawRow<T>>> {
    records
        .par_iter()
        .map(|r| {
            let f = extract_features(r)?;
            Ok(RawRow {
                meta: SampleMeta {
                    record: r.meta,
                    kind: r.component.kind,
                    size: r.component.size,
                },
                features: f.values().iter().map(|&v| Some(T::of(v))).collect(),
                targets: match r.targets {
                    Some(t) => [Some(T::of(t.shift_x)), Some(T::of(t.shift_y)), Some(T::of(t.shift_rot))],
                    None => [None; 3],
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Target;
    use crate::preprocess::spearman;

    fn quiet() -> GenConfig {
        GenConfig {
            noise: NoiseScales {
                shift_x: 0.0,
                shift_y: 0.0,
                shift_rot: 0.0,
            },
            measurement: MeasurementNoise {
                volume_rel: 0.0,
                area_rel: 0.0,
                height_rel: 0.0,
                paste_frac: 0.0,
                paste_rot: 0.0,
                placement_xy: 0.0,
                placement_rot: 0.0,
            },
            ..GenConfig::default()
        }
    }

    #[test]
    fn design_has_33_distinct_balanced_runs() {
        let pts = design_points(&FactorLevels::default());
        assert_eq!(pts.len(), 33);
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], DesignPoint { combination_id: pts[i].combination_id, ..pts[j] });
            }
        }
        let high = pts.iter().filter(|p| p.placement_offset.0 > 0.0).count();
        assert_eq!(high, 16);
        assert_eq!(pts[32].placement_offset, (0.0, 0.0, 0.0));
        assert_eq!(pts[32].pressure, 1.5);
    }

    #[test]
    fn record_counts() {
        assert_eq!(design_grid(&GenConfig { replications: 1, ..GenConfig::default() }).unwrap().len(), 198);
        assert_eq!(GenConfig::default().n_records(), 3960);
    }

    #[test]
    fn canonical_order_and_determinism() {
        let cfg = GenConfig { replications: 2, ..GenConfig::default() };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_eq!((a[0].meta.combination_id, a[0].meta.replicate_id), (1, 1));
        assert_eq!((a[1].meta.combination_id, a[1].meta.replicate_id), (1, 2));
        assert_eq!(a[2].component.size, SizeClass::S0603);
        assert_eq!(a[12].meta.combination_id, 2);
        assert_ne!(a, generate(&GenConfig { seed: 1, ..cfg }).unwrap());
    }

    #[test]
    fn symmetric_center_run_is_shift_free() {
        let cfg = quiet();
        let pts = design_points(&cfg.levels);
        let mut rng = record_rng(0, 0);
        for comp in component_types() {
            let rec = build_record(&pts[32], comp, 1, &cfg.measurement, &mut rng).unwrap();
            let t = synth_truth(&rec, &cfg, &mut rng).unwrap();
            assert!(t.shift_x.abs() < 1e-9 && t.shift_y.abs() < 1e-9 && t.shift_rot.abs() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn rotation_formula() {
        let cfg = quiet();
        let mut dp = design_points(&cfg.levels)[32];
        dp.placement_offset.2 = 5.0;
        let mut rng = record_rng(0, 0);
        let rec = build_record(&dp, component_types()[0], 1, &cfg.measurement, &mut rng).unwrap();
        let t = synth_truth(&rec, &cfg, &mut rng).unwrap();
        assert!((t.shift_rot + 4.5).abs() < 1e-12);
    }

    #[test]
    fn rotation_shift_opposes_placement_rotation() {
        let recs = design_grid(&GenConfig { replications: 3, ..GenConfig::default() }).unwrap();
        let rot: Vec<f64> = recs.iter().map(|r| r.placement.offset.dtheta).collect();
        let shift: Vec<f64> = recs.iter().map(|r| r.targets.unwrap().get(Target::ShiftRot)).collect();
        assert!(spearman(&rot, &shift).unwrap() < -0.8);
    }

    #[test]
    fn replicates_share_factor_settings() {
        let recs = design_grid(&quiet()).unwrap();
        for chunk in recs.chunks(20) {
            assert!(chunk.iter().all(|r| r.placement == chunk[0].placement && r.paste1 == chunk[0].paste1));
        }
    }

    #[test]
    fn missing_injection() {
        let mut recs = design_grid(&GenConfig::default()).unwrap();
        let before = recs.clone();
        assert_eq!(inject_missing(&mut recs, 0.0, &mut record_rng(1, 0)).unwrap(), 0);
        assert_eq!(recs, before);
        let k = inject_missing(&mut recs, 0.005, &mut record_rng(1, 0)).unwrap();
        assert!((5..=40).contains(&k), "{k}");
        assert_eq!(recs.iter().filter(|r| r.targets.is_none()).count(), k);
        let mut again = before.clone();
        inject_missing(&mut again, 0.005, &mut record_rng(1, 0)).unwrap();
        assert_eq!(again, recs);
        assert!(inject_missing(&mut recs, 0.2, &mut record_rng(1, 0)).is_err());
    }

    #[test]
    fn records_are_valid_and_extractable() {
        let recs = generate(&GenConfig { replications: 2, ..GenConfig::default() }).unwrap();
        let rows = to_raw_rows::<f64>(&recs).unwrap();
        assert_eq!(rows.len(), recs.len());
        assert!(rows.iter().all(|r| r.features.iter().all(|v| v.is_some())));
    }
}
