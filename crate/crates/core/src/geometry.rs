//! Planar rectangle geometry in the pad-pair reference frame.
//!
//! Positions and extents are in millimetres, angles in degrees
//! (counter-clockwise positive, wrapped to `(-180, 180]`). Poses carry
//! linear offsets in micrometres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_degrees<T: Scalar>(angle: T) -> T {
    let full = T::of(360.0);
    let half = T::of(180.0);
    let mut r = angle % full;
    if r <= -half {
        r = r + full;
    } else if r > half {
        r = r - full;
    }
    r
}

/// An oriented rectangle: `length` runs along the local x axis, `width`
/// along local y, and the whole shape is rotated about its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2D<T> {
    pub center_x: T,
    pub center_y: T,
    pub length: T,
    pub width: T,
    pub rotation: T,
}

impl<T: Scalar> Rect2D<T> {
    pub fn new(center_x: T, center_y: T, length: T, width: T, rotation: T) -> Result<Self> {
        let finite = [center_x, center_y, length, width, rotation]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("rectangle has a non-finite field".into()));
        }
        if length <= T::zero() || width <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "rectangle extents must be positive (length {length}, width {width})"
            )));
        }
        Ok(Rect2D {
            center_x,
            center_y,
            length,
            width,
            rotation: wrap_degrees(rotation),
        })
    }

    pub fn axis_aligned(center_x: T, center_y: T, length: T, width: T) -> Result<Self> {
        Self::new(center_x, center_y, length, width, T::zero())
    }

    pub fn area(&self) -> T {
        self.length * self.width
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Rect2D {
            center_x: self.center_x + dx,
            center_y: self.center_y + dy,
            ..*self
        }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [[T; 2]; 4] {
        let (s, c) = self.rotation.to_radians().sin_cos();
        let two = T::of(2.0);
        let hl = self.length / two;
        let hw = self.width / two;
        let local = [[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]];
        local.map(|[x, y]| {
            [
                self.center_x + x * c - y * s,
                self.center_y + x * s + y * c,
            ]
        })
    }

    /// Point membership (boundary inclusive).
    pub fn contains(&self, x: T, y: T) -> bool {
        let (s, c) = self.rotation.to_radians().sin_cos();
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        let lx = dx * c + dy * s;
        let ly = -dx * s + dy * c;
        let two = T::of(2.0);
        lx.abs() <= self.length / two && ly.abs() <= self.width / two
    }
}

/// A planar offset: `dx`, `dy` in micrometres, `dtheta` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub dx: T,
    pub dy: T,
    pub dtheta: T,
}

impl<T: Scalar> Pose<T> {
    pub fn new(dx: T, dy: T, dtheta: T) -> Self {
        Pose {
            dx,
            dy,
            dtheta: wrap_degrees(dtheta),
        }
    }

    pub fn zero() -> Self {
        Pose {
            dx: T::zero(),
            dy: T::zero(),
            dtheta: T::zero(),
        }
    }
}

/// Two pads of a two-terminal component. The midpoint of the pad centers
/// is the reference point of the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadPair<T> {
    pub pad1: Rect2D<T>,
    pub pad2: Rect2D<T>,
}

impl<T: Scalar> PadPair<T> {
    pub fn new(pad1: Rect2D<T>, pad2: Rect2D<T>) -> Result<Self> {
        if pad1.rotation != T::zero() || pad2.rotation != T::zero() {
            return Err(Error::InvalidParameter("pads must be axis aligned".into()));
        }
        if convex_overlap_area(&pad1, &pad2) > T::zero() {
            return Err(Error::InvalidParameter("pads overlap".into()));
        }
        Ok(PadPair { pad1, pad2 })
    }

    pub fn reference_point(&self) -> [T; 2] {
        let two = T::of(2.0);
        [
            (self.pad1.center_x + self.pad2.center_x) / two,
            (self.pad1.center_y + self.pad2.center_y) / two,
        ]
    }

    /// Center-to-center distance of the pads (mm).
    pub fn pitch(&self) -> T {
        let dx = self.pad2.center_x - self.pad1.center_x;
        let dy = self.pad2.center_y - self.pad1.center_y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn swapped(&self) -> Self {
        PadPair {
            pad1: self.pad2,
            pad2: self.pad1,
        }
    }
}

fn cross<T: Scalar>(o: [T; 2], a: [T; 2], p: [T; 2]) -> T {
    (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
}

fn polygon_area<T: Scalar>(poly: &[[T; 2]]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        acc = acc + (p[0] * q[1] - q[0] * p[1]);
    }
    (acc / T::of(2.0)).abs()
}

/// Clips `subject` against every edge of the convex counter-clockwise polygon `clip`.
fn clip_convex<T: Scalar>(subject: &[[T; 2]], clip: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut output: Vec<[T; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        let mut prev_side = cross(a, b, prev);
        for &cur in &input {
            let cur_side = cross(a, b, cur);
            let cur_in = cur_side >= T::zero();
            let prev_in = prev_side >= T::zero();
            if cur_in != prev_in {
                let t = prev_side / (prev_side - cur_side);
                output.push([
                    prev[0] + (cur[0] - prev[0]) * t,
                    prev[1] + (cur[1] - prev[1]) * t,
                ]);
            }
            if cur_in {
                output.push(cur);
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

/// Exact intersection area of two oriented rectangles.
pub fn convex_overlap_area<T: Scalar>(a: &Rect2D<T>, b: &Rect2D<T>) -> T {
    // Cheap rejection on circumscribed circles.
    let two = T::of(2.0);
    let ra = (a.length * a.length + a.width * a.width).sqrt() / two;
    let rb = (b.length * b.length + b.width * b.width).sqrt() / two;
    let dx = a.center_x - b.center_x;
    let dy = a.center_y - b.center_y;
    if (dx * dx + dy * dy).sqrt() >= ra + rb {
        return T::zero();
    }
    let poly = clip_convex(&a.corners(), &b.corners());
    let area = polygon_area(&poly);
    area.max(T::zero()).min(a.area().min(b.area()))
}

/// Overlap of a paste footprint with a target (its pad or the component body).
pub fn contact_area<T: Scalar>(paste_footprint: &Rect2D<T>, target: &Rect2D<T>) -> T {
    convex_overlap_area(paste_footprint, target)
}

/// Part of the paste footprint that does not touch the target.
pub fn noncontact_area<T: Scalar>(paste_footprint: &Rect2D<T>, target: &Rect2D<T>) -> T {
    (paste_footprint.area() - contact_area(paste_footprint, target)).max(T::zero())
}

/// Paste volume attributed to the contacted fraction of the footprint,
/// assuming uniform deposit height.
pub fn effective_volume<T: Scalar>(volume: T, paste_footprint: &Rect2D<T>, target: &Rect2D<T>) -> T {
    volume * contact_area(paste_footprint, target) / paste_footprint.area()
}

/// `subject - reference`, component-wise, with the angle re-wrapped.
pub fn relative_pose<T: Scalar>(subject: &Pose<T>, reference: &Pose<T>) -> Pose<T> {
    Pose::new(
        subject.dx - reference.dx,
        subject.dy - reference.dy,
        subject.dtheta - reference.dtheta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(cx: f64, cy: f64, l: f64, w: f64, r: f64) -> Rect2D<f64> {
        Rect2D::new(cx, cy, l, w, r).unwrap()
    }

    /// Independent estimate: uniform sampling over a's bounding circle box.
    fn monte_carlo_overlap(a: &Rect2D<f64>, b: &Rect2D<f64>, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (a.length.powi(2) + a.width.powi(2)).sqrt() / 2.0;
        let box_area = 4.0 * r * r;
        let mut hits = 0usize;
        for _ in 0..samples {
            let x = a.center_x + rng.gen_range(-r..r);
            let y = a.center_y + rng.gen_range(-r..r);
            if a.contains(x, y) && b.contains(x, y) {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        (p * box_area, box_area * (p * (1.0 - p) / samples as f64).sqrt())
    }

    #[test]
    fn identical_rectangles() {
        let a = rect(0.0, 0.0, 2.0, 1.0, 0.0);
        assert!((convex_overlap_area(&a, &a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_rectangles() {
        let a = rect(0.0, 0.0, 2.0, 1.0, 0.0);
        let b = rect(10.0, 0.0, 2.0, 1.0, 0.0);
        assert_eq!(convex_overlap_area(&a, &b), 0.0);
    }

    #[test]
    fn cross_shaped_overlap_matches_sampling() {
        let a = rect(0.0, 0.0, 2.0, 1.0, 0.0);
        let b = rect(0.0, 0.0, 2.0, 1.0, 90.0);
        let (mc, _) = monte_carlo_overlap(&a, &b, 1_000_000, 11);
        assert!((mc - 1.0).abs() / 1.0 < 0.005, "oracle {mc}");
        let exact = convex_overlap_area(&a, &b);
        assert!((exact - mc).abs() / mc < 0.005);
        assert!((exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn paste_contact_cases() {
        let pad = rect(0.0, 0.0, 1.0, 1.0, 0.0);
        let inside = rect(0.1, -0.1, 0.4, 0.3, 0.0);
        assert!((contact_area(&inside, &pad) - inside.area()).abs() < 1e-12);
        assert!(noncontact_area(&inside, &pad).abs() < 1e-12);

        let off = rect(5.0, 0.0, 0.4, 0.3, 0.0);
        assert_eq!(contact_area(&off, &pad), 0.0);
        assert!((noncontact_area(&off, &pad) - off.area()).abs() < 1e-12);

        // Paste of length 0.4 shifted so half of it hangs past a large pad's edge.
        let big = rect(0.0, 0.0, 4.0, 4.0, 0.0);
        let half = rect(2.0, 0.0, 0.4, 0.3, 0.0);
        let (mc, _) = monte_carlo_overlap(&half, &big, 400_000, 5);
        assert!((mc - half.area() / 2.0).abs() / (half.area() / 2.0) < 0.01);
        assert!((contact_area(&half, &big) - half.area() / 2.0).abs() < 1e-12);
        assert!((noncontact_area(&half, &big) - half.area() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_volume_scales_with_contact_fraction() {
        let pad = rect(0.0, 0.0, 4.0, 4.0, 0.0);
        let full = rect(0.0, 0.0, 0.4, 0.3, 0.0);
        assert!((effective_volume(0.02, &full, &pad) - 0.02).abs() < 1e-15);
        let none = rect(9.0, 0.0, 0.4, 0.3, 0.0);
        assert_eq!(effective_volume(0.02, &none, &pad), 0.0);
        let half = rect(2.0, 0.0, 0.4, 0.3, 0.0);
        let (mc, _) = monte_carlo_overlap(&half, &pad, 400_000, 9);
        let sampled = 0.02 * mc / half.area();
        let v = effective_volume(0.02, &half, &pad);
        assert!((v - 0.01).abs() < 1e-14);
        assert!((v - sampled).abs() / v < 0.01);
    }

    #[test]
    fn relative_pose_cases() {
        let p = Pose::new(10.0, -5.0, 2.0);
        assert_eq!(relative_pose(&p, &p), Pose::new(0.0, 0.0, 0.0));
        assert_eq!(relative_pose(&p, &Pose::zero()), p);
        let a = Pose::new(0.0, 0.0, 179.0f64);
        let b = Pose::new(0.0, 0.0, -2.0);
        assert!((relative_pose(&a, &b).dtheta - (-179.0)).abs() < 1e-12);
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_degrees(180.0f64), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
        assert!((wrap_degrees(-181.0f64) - 179.0).abs() < 1e-12);
        assert!((wrap_degrees(721.5f32) - 1.5).abs() < 1e-4);
    }

    #[test]
    fn invalid_rectangles_rejected() {
        assert!(Rect2D::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(Rect2D::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(Rect2D::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn overlapping_pads_rejected() {
        let p1 = rect(-0.2, 0.0, 0.5, 0.5, 0.0);
        let p2 = rect(0.2, 0.0, 0.5, 0.5, 0.0);
        assert!(PadPair::new(p1, p2).is_err());
        let p2 = rect(0.6, 0.0, 0.5, 0.5, 0.0);
        assert!(PadPair::new(p1, p2).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let a = Rect2D::<f32>::new(0.0, 0.0, 2.0, 1.0, 0.0).unwrap();
        let b = Rect2D::<f32>::new(0.0, 0.0, 2.0, 1.0, 90.0).unwrap();
        assert!((convex_overlap_area(&a, &b) - 1.0).abs() < 1e-5);
    }

    fn arb_rect() -> impl Strategy<Value = Rect2D<f64>> {
        (-2.0..2.0f64, -2.0..2.0f64, 0.05..3.0f64, 0.05..3.0f64, -179.0..180.0f64)
            .prop_map(|(x, y, l, w, r)| Rect2D::new(x, y, l, w, r).unwrap())
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric(a in arb_rect(), b in arb_rect()) {
            let ab = convex_overlap_area(&a, &b);
            let ba = convex_overlap_area(&b, &a);
            prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab.abs()));
        }

        #[test]
        fn overlap_is_bounded(a in arb_rect(), b in arb_rect()) {
            let ab = convex_overlap_area(&a, &b);
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= a.area().min(b.area()) + 1e-12);
        }

        #[test]
        fn overlap_is_translation_invariant(a in arb_rect(), b in arb_rect(),
                                            tx in -50.0..50.0f64, ty in -50.0..50.0f64) {
            let before = convex_overlap_area(&a, &b);
            let after = convex_overlap_area(&a.translated(tx, ty), &b.translated(tx, ty));
            prop_assert!((before - after).abs() <= 1e-9 * before.max(1e-3));
        }

        #[test]
        fn contained_rectangle_overlap_is_its_area(
            outer in arb_rect(), fx in -0.3..0.3f64, fy in -0.3..0.3f64,
            scale in 0.05..0.4f64,
        ) {
            // Shrunk copy placed well inside `outer`.
            let (s, c) = outer.rotation.to_radians().sin_cos();
            let lx = fx * outer.length;
            let ly = fy * outer.width;
            let inner = Rect2D::new(
                outer.center_x + lx * c - ly * s,
                outer.center_y + lx * s + ly * c,
                outer.length * scale,
                outer.width * scale,
                outer.rotation,
            ).unwrap();
            let ov = convex_overlap_area(&inner, &outer);
            prop_assert!((ov - inner.area()).abs() <= 1e-9 * inner.area());
        }

        #[test]
        fn contact_plus_noncontact_is_paste_area(a in arb_rect(), b in arb_rect()) {
            let total = contact_area(&a, &b) + noncontact_area(&a, &b);
            prop_assert!((total - a.area()).abs() <= 1e-9 * a.area());
        }
    }
}
