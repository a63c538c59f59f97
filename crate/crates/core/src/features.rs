//! Assembly records and the fixed 48-column factor schema.
//!
//! The schema groups factors into seven categories: component geometry,
//! pad geometry, paste inspection, placement inspection and the three
//! relative groups (paste-pad, placement-paste, placement-pad). Paired
//! quantities measured once per pad are reported as `avg`, `diff`
//! (pad 1 minus pad 2) and `div` (pad 1 divided by pad 2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    contact_area, convex_overlap_area, effective_volume, noncontact_area, relative_pose, wrap_degrees,
    PadPair, Pose, Rect2D,
};

pub const FEATURE_COUNT: usize = 48;
pub const SCHEMA_VERSION: &str = "reflow-shift-features/1";

const UM_PER_MM: f64 = 1000.0;
const MIN_DIVISOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentKind {
    Resistor,
    Capacitor,
}

impl ComponentKind {
    /// Categorical coding used as a model input.
    pub fn type_code(self) -> f64 {
        match self {
            ComponentKind::Resistor => -1.0,
            ComponentKind::Capacitor => 1.0,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            ComponentKind::Resistor => "R",
            ComponentKind::Capacitor => "C",
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "R" => Some(ComponentKind::Resistor),
            "C" => Some(ComponentKind::Capacitor),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    S1005,
    S0603,
    S0402,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::S1005, SizeClass::S0603, SizeClass::S0402];

    /// Nominal body (length, width) in mm.
    pub fn dimensions(self) -> (f64, f64) {
        match self {
            SizeClass::S1005 => (1.0, 0.5),
            SizeClass::S0603 => (0.6, 0.3),
            SizeClass::S0402 => (0.4, 0.2),
        }
    }

    /// Numeric size code used as a model input.
    pub fn code(self) -> f64 {
        match self {
            SizeClass::S1005 => 1005.0,
            SizeClass::S0603 => 603.0,
            SizeClass::S0402 => 402.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeClass::S1005 => "1005",
            SizeClass::S0603 => "0603",
            SizeClass::S0402 => "0402",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "1005" => Some(SizeClass::S1005),
            "0603" => Some(SizeClass::S0603),
            "0402" => Some(SizeClass::S0402),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub kind: ComponentKind,
    pub size: SizeClass,
    pub length: f64,
    pub width: f64,
}

impl ComponentSpec {
    pub fn new(kind: ComponentKind, size: SizeClass) -> Self {
        let (length, width) = size.dimensions();
        ComponentSpec {
            kind,
            size,
            length,
            width,
        }
    }

    /// Display label such as `C1005`.
    pub fn label(&self) -> String {
        format!("{}{}", self.kind.letter(), self.size.label())
    }
}

/// One solder paste deposit as reported by paste inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PasteDeposit {
    /// mm³
    pub volume: f64,
    /// mm²
    pub area: f64,
    /// mm
    pub height: f64,
    /// Offset relative to the center of the deposit's own pad.
    pub offset: Pose<f64>,
}

impl PasteDeposit {
    /// Footprint rectangle, assuming the deposit keeps the aspect ratio of its pad.
    pub fn footprint(&self, pad: &Rect2D<f64>) -> Result<Rect2D<f64>> {
        let k = (self.area / pad.area()).sqrt();
        Rect2D::new(
            pad.center_x + self.offset.dx / UM_PER_MM,
            pad.center_y + self.offset.dy / UM_PER_MM,
            pad.length * k,
            pad.width * k,
            self.offset.dtheta,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementMeasure {
    /// Pre-reflow component pose relative to the reference point.
    pub offset: Pose<f64>,
    pub pressure: f64,
}

/// Post-reflow minus pre-reflow pose: μm, μm, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetTriple {
    pub shift_x: f64,
    pub shift_y: f64,
    pub shift_rot: f64,
}

impl TargetTriple {
    pub fn new(shift_x: f64, shift_y: f64, shift_rot: f64) -> Self {
        TargetTriple {
            shift_x,
            shift_y,
            shift_rot: wrap_degrees(shift_rot),
        }
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::ShiftX => self.shift_x,
            Target::ShiftY => self.shift_y,
            Target::ShiftRot => self.shift_rot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ShiftX,
    ShiftY,
    ShiftRot,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::ShiftX, Target::ShiftY, Target::ShiftRot];

    pub fn name(self) -> &'static str {
        match self {
            Target::ShiftX => "shift_x",
            Target::ShiftY => "shift_y",
            Target::ShiftRot => "shift_rot",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Target::ShiftRot => "deg",
            _ => "um",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Target::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RecordMeta {
    pub board_id: u32,
    pub combination_id: u32,
    pub replicate_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyRecord {
    pub component: ComponentSpec,
    pub pads: PadPair<f64>,
    pub paste1: PasteDeposit,
    pub paste2: PasteDeposit,
    pub placement: PlacementMeasure,
    pub targets: Option<TargetTriple>,
    pub meta: RecordMeta,
}

impl AssemblyRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidRecord(m.to_string()));
        let (l, w) = self.component.size.dimensions();
        if self.component.length != l || self.component.width != w {
            return fail("component dimensions do not match its size class");
        }
        for p in [&self.paste1, &self.paste2] {
            if !(p.volume > 0.0 && p.area > 0.0 && p.height > 0.0) {
                return fail("paste deposit volume, area and height must be positive");
            }
        }
        if !(self.placement.pressure > 0.0) {
            return fail("placement pressure must be positive");
        }
        if convex_overlap_area(&self.pads.pad1, &self.pads.pad2) > 0.0 {
            return fail("pads overlap");
        }
        Ok(())
    }

    /// Same assembly with pad 1 and pad 2 (and their deposits) exchanged.
    pub fn with_pads_swapped(&self) -> Self {
        AssemblyRecord {
            pads: self.pads.swapped(),
            paste1: self.paste2,
            paste2: self.paste1,
            ..self.clone()
        }
    }

    /// Same assembly moved rigidly on the board by `(dx, dy)` mm.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        AssemblyRecord {
            pads: PadPair {
                pad1: self.pads.pad1.translated(dx, dy),
                pad2: self.pads.pad2.translated(dx, dy),
            },
            ..self.clone()
        }
    }

    /// Component body footprint at its measured pre-reflow pose.
    pub fn component_footprint(&self) -> Result<Rect2D<f64>> {
        let [rx, ry] = self.pads.reference_point();
        let p = &self.placement.offset;
        Rect2D::new(
            rx + p.dx / UM_PER_MM,
            ry + p.dy / UM_PER_MM,
            self.component.length,
            self.component.width,
            p.dtheta,
        )
    }

    /// Mean paste pose relative to the reference point.
    pub fn mean_paste_pose(&self) -> Pose<f64> {
        // Pad centers average to the reference point, so only the
        // pad-local offsets remain.
        let (a, b) = (self.paste1.offset, self.paste2.offset);
        Pose::new(
            (a.dx + b.dx) / 2.0,
            (a.dy + b.dy) / 2.0,
            (a.dtheta + b.dtheta) / 2.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureCategory {
    ComponentGeometry,
    PadGeometry,
    PasteInspection,
    PlacementInspection,
    PastePadRelative,
    PlacementPasteRelative,
    PlacementPadRelative,
}

impl FeatureCategory {
    pub const ALL: [FeatureCategory; 7] = [
        FeatureCategory::ComponentGeometry,
        FeatureCategory::PadGeometry,
        FeatureCategory::PasteInspection,
        FeatureCategory::PlacementInspection,
        FeatureCategory::PastePadRelative,
        FeatureCategory::PlacementPasteRelative,
        FeatureCategory::PlacementPadRelative,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureCategory::ComponentGeometry => "component geometry",
            FeatureCategory::PadGeometry => "pad geometry",
            FeatureCategory::PasteInspection => "paste inspection",
            FeatureCategory::PlacementInspection => "placement inspection",
            FeatureCategory::PastePadRelative => "paste-pad relative",
            FeatureCategory::PlacementPasteRelative => "placement-paste relative",
            FeatureCategory::PlacementPadRelative => "placement-pad relative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureInfo {
    pub name: &'static str,
    pub category: FeatureCategory,
    pub unit: &'static str,
    pub definition: &'static str,
}

macro_rules! schema {
    ($( $cat:ident : [ $( ($name:literal, $unit:literal, $def:literal) ),* $(,)? ] ),* $(,)?) => {
        &[ $( $( FeatureInfo {
            name: $name,
            category: FeatureCategory::$cat,
            unit: $unit,
            definition: $def,
        }, )* )* ]
    };
}

static SCHEMA: &[FeatureInfo] = schema! {
    ComponentGeometry: [
        ("comp_length", "mm", "component body length along x"),
        ("comp_width", "mm", "component body width along y"),
        ("size_code", "-", "size class as a number (1005, 603, 402)"),
        ("type_code", "-", "-1 resistor, +1 capacitor"),
    ],
    PadGeometry: [
        ("pad_length", "mm", "mean pad extent along x"),
        ("pad_width", "mm", "mean pad extent along y"),
        ("pad_pitch", "mm", "pad center-to-center distance"),
        ("pad_area", "mm2", "mean pad area"),
    ],
    PasteInspection: [
        ("paste_volume_avg", "mm3", "mean deposit volume"),
        ("paste_volume_diff", "mm3", "deposit volume, pad 1 minus pad 2"),
        ("paste_volume_div", "-", "deposit volume, pad 1 over pad 2"),
        ("paste_area_avg", "mm2", "mean deposit area"),
        ("paste_area_diff", "mm2", "deposit area, pad 1 minus pad 2"),
        ("paste_area_div", "-", "deposit area, pad 1 over pad 2"),
        ("paste_height_avg", "mm", "mean deposit height"),
        ("paste_height_diff", "mm", "deposit height, pad 1 minus pad 2"),
        ("paste_height_div", "-", "deposit height, pad 1 over pad 2"),
        ("paste_offset_x", "um", "mean deposit x offset from the reference point"),
        ("paste_offset_y", "um", "mean deposit y offset from the reference point"),
        ("paste_offset_rot", "deg", "mean deposit rotation"),
    ],
    PlacementInspection: [
        ("placement_offset_x", "um", "pre-reflow component x offset from the reference point"),
        ("placement_offset_y", "um", "pre-reflow component y offset from the reference point"),
        ("placement_offset_rot", "deg", "pre-reflow component rotation"),
        ("placement_pressure", "-", "placement pressure setting"),
    ],
    PastePadRelative: [
        ("paste_pad_contact_area_avg", "mm2", "mean deposit-on-pad overlap area"),
        ("paste_pad_contact_area_diff", "mm2", "deposit-on-pad overlap, pad 1 minus pad 2"),
        ("paste_pad_contact_area_div", "-", "deposit-on-pad overlap, pad 1 over pad 2"),
        ("paste_pad_noncontact_area_avg", "mm2", "mean deposit area outside its pad"),
        ("paste_pad_noncontact_area_diff", "mm2", "deposit area outside pad, pad 1 minus pad 2"),
        ("paste_pad_noncontact_area_div", "-", "deposit area outside pad, pad 1 over pad 2"),
        ("paste_pad_effective_volume_avg", "mm3", "mean deposit volume over the pad"),
        ("paste_pad_effective_volume_diff", "mm3", "deposit volume over pad, pad 1 minus pad 2"),
        ("paste_pad_effective_volume_div", "-", "deposit volume over pad, pad 1 over pad 2"),
    ],
    PlacementPasteRelative: [
        ("placement_paste_offset_x", "um", "component x offset from the mean deposit"),
        ("placement_paste_offset_y", "um", "component y offset from the mean deposit"),
        ("placement_paste_offset_rot", "deg", "component rotation relative to the mean deposit"),
        ("paste_comp_contact_area_avg", "mm2", "mean deposit-body overlap area"),
        ("paste_comp_contact_area_diff", "mm2", "deposit-body overlap, pad 1 minus pad 2"),
        ("paste_comp_contact_area_div", "-", "deposit-body overlap, pad 1 over pad 2"),
        ("paste_comp_effective_volume_avg", "mm3", "mean deposit volume under the body"),
        ("paste_comp_effective_volume_diff", "mm3", "deposit volume under body, pad 1 minus pad 2"),
        ("paste_comp_effective_volume_div", "-", "deposit volume under body, pad 1 over pad 2"),
    ],
    PlacementPadRelative: [
        ("placement_pad_offset_x", "um", "component x offset from the pad-pair reference point"),
        ("placement_pad_offset_y", "um", "component y offset from the pad-pair reference point"),
        ("placement_pad_offset_rot", "deg", "component rotation relative to the pads"),
        ("comp_pad_overhang_area_avg", "mm2", "mean body-half area not over its pad"),
        ("comp_pad_overhang_area_diff", "mm2", "body-half area off pad, pad 1 minus pad 2"),
        ("comp_pad_overhang_area_div", "-", "body-half area off pad, pad 1 over pad 2"),
    ],
};

/// The canonical ordered schema.
pub fn feature_schema() -> &'static [FeatureInfo] {
    SCHEMA
}

pub fn feature_names() -> Vec<&'static str> {
    SCHEMA.iter().map(|f| f.name).collect()
}

pub fn feature_index(name: &str) -> Option<usize> {
    SCHEMA.iter().position(|f| f.name == name)
}

/// Mean, difference (`v1 - v2`) and ratio (`v1 / v2`) of a per-pad quantity.
pub fn aggregate(v1: f64, v2: f64) -> Result<(f64, f64, f64)> {
    if !(v2.abs() >= MIN_DIVISOR) {
        return Err(Error::DivisorTooSmall { value: v2 });
    }
    Ok(((v1 + v2) / 2.0, v1 - v2, v1 / v2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_version: String,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::ShapeMismatch {
                expected: FEATURE_COUNT,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord(format!(
                "feature {} is not finite",
                SCHEMA[i].name
            )));
        }
        Ok(FeatureVector {
            schema_version: SCHEMA_VERSION.to_string(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Half of the body footprint lying toward `pad` (length halved along the body axis).
fn body_half_toward(body: &Rect2D<f64>, pad: &Rect2D<f64>) -> Result<Rect2D<f64>> {
    let (s, c) = body.rotation.to_radians().sin_cos();
    let q = body.length / 4.0;
    let candidates = [(c * q, s * q), (-c * q, -s * q)];
    let dist = |(ox, oy): (f64, f64)| {
        (body.center_x + ox - pad.center_x).powi(2) + (body.center_y + oy - pad.center_y).powi(2)
    };
    let (ox, oy) = if dist(candidates[0]) <= dist(candidates[1]) {
        candidates[0]
    } else {
        candidates[1]
    };
    Rect2D::new(
        body.center_x + ox,
        body.center_y + oy,
        body.length / 2.0,
        body.width,
        body.rotation,
    )
}

fn push_aggregate(out: &mut Vec<f64>, v1: f64, v2: f64) -> Result<()> {
    let (avg, diff, div) =
        aggregate(v1, v2).map_err(|e| Error::InvalidRecord(format!("degenerate pair: {e}")))?;
    out.extend([avg, diff, div]);
    Ok(())
}

/// Computes the 48 schema factors of one record.
pub fn extract_features(record: &AssemblyRecord) -> Result<FeatureVector> {
    record.validate()?;
    let pads = &record.pads;
    let (pad1, pad2) = (&pads.pad1, &pads.pad2);
    let foot1 = record.paste1.footprint(pad1)?;
    let foot2 = record.paste2.footprint(pad2)?;
    let body = record.component_footprint()?;
    let placement = record.placement.offset;
    let paste_pose = record.mean_paste_pose();

    let mut v = Vec::with_capacity(FEATURE_COUNT);

    let comp = &record.component;
    v.extend([comp.length, comp.width, comp.size.code(), comp.kind.type_code()]);

    v.extend([
        (pad1.length + pad2.length) / 2.0,
        (pad1.width + pad2.width) / 2.0,
        pads.pitch(),
        (pad1.area() + pad2.area()) / 2.0,
    ]);

    let (p1, p2) = (&record.paste1, &record.paste2);
    push_aggregate(&mut v, p1.volume, p2.volume)?;
    push_aggregate(&mut v, p1.area, p2.area)?;
    push_aggregate(&mut v, p1.height, p2.height)?;
    v.extend([paste_pose.dx, paste_pose.dy, paste_pose.dtheta]);

    v.extend([
        placement.dx,
        placement.dy,
        placement.dtheta,
        record.placement.pressure,
    ]);

    push_aggregate(&mut v, contact_area(&foot1, pad1), contact_area(&foot2, pad2))?;
    push_aggregate(
        &mut v,
        noncontact_area(&foot1, pad1),
        noncontact_area(&foot2, pad2),
    )?;
    push_aggregate(
        &mut v,
        effective_volume(p1.volume, &foot1, pad1),
        effective_volume(p2.volume, &foot2, pad2),
    )?;

    let rel_paste = relative_pose(&placement, &paste_pose);
    v.extend([rel_paste.dx, rel_paste.dy, rel_paste.dtheta]);
    push_aggregate(&mut v, contact_area(&foot1, &body), contact_area(&foot2, &body))?;
    push_aggregate(
        &mut v,
        effective_volume(p1.volume, &foot1, &body),
        effective_volume(p2.volume, &foot2, &body),
    )?;

    let rel_pad = relative_pose(&placement, &Pose::zero());
    v.extend([rel_pad.dx, rel_pad.dy, rel_pad.dtheta]);
    let half1 = body_half_toward(&body, pad1)?;
    let half2 = body_half_toward(&body, pad2)?;
    push_aggregate(
        &mut v,
        half1.area() - convex_overlap_area(&half1, pad1),
        half2.area() - convex_overlap_area(&half2, pad2),
    )?;

    debug_assert_eq!(v.len(), FEATURE_COUNT);
    FeatureVector::new(v)
}
