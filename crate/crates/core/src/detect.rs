//! Exit classification, the thin-lens/photodiode collection model and
//! angular tallies.

use serde::{Deserialize, Serialize};

use crate::geometry::{Ray, Vec3};

pub const HISTOGRAM_BINS: usize = 180;
pub const BIN_WIDTH_DEG: f64 = 0.5;
/// Acceptance half-angle of an NA 0.7 objective in air, degrees.
pub fn na_07_half_angle_deg() -> f64 {
    0.7f64.asin().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Front,
    Back,
}

impl Side {
    /// Propagation sign along `z` for light heading to this side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Front => -1.0,
            Side::Back => 1.0,
        }
    }
}

/// Side and angle to the symmetry axis (radians, in `[0, pi/2]`) of an
/// exit direction. Exactly lateral exits count as front at 90 degrees.
pub fn classify_exit(direction: Vec3) -> (Side, f64) {
    let dz = direction.z;
    let side = if dz > 0.0 { Side::Back } else { Side::Front };
    let alpha = dz.abs().min(1.0).acos();
    (side, alpha)
}

/// Condenser lens plus photodiode on one side of the assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LensDetector {
    pub focal_length: f64,
    pub aperture_diameter: f64,
    /// Defaults to one focal length from the emission centroid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lens_plane_z: Option<f64>,
    pub detector_active_diameter: f64,
    /// Defaults to the paraxial image plane of the emission centroid. With
    /// the centroid at the focus that plane is at infinity and the diode
    /// accepts everything the aperture passes; a virtual image puts the
    /// diode in the back focal plane.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_plane_z: Option<f64>,
    /// Ignore the photodiode and accept everything through the aperture.
    pub aperture_only: bool,
}

impl Default for LensDetector {
    fn default() -> Self {
        Self {
            focal_length: 8.0,
            aperture_diameter: 12.7,
            lens_plane_z: None,
            detector_active_diameter: 9.8,
            detector_plane_z: None,
            aperture_only: false,
        }
    }
}

impl LensDetector {
    /// A lens at `distance` from the centroid whose aperture subtends the
    /// given numerical aperture, with an unbounded detector.
    pub fn with_numerical_aperture(na: f64, distance: f64) -> Self {
        let half = na.asin();
        Self {
            focal_length: distance,
            aperture_diameter: 2.0 * distance * half.tan(),
            aperture_only: true,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) {
            return Err(format!("focal_length {} must be positive", self.focal_length));
        }
        if !(self.aperture_diameter > 0.0 && self.aperture_diameter.is_finite()) {
            return Err(format!("aperture_diameter {} must be positive", self.aperture_diameter));
        }
        if !(self.detector_active_diameter > 0.0) {
            return Err(format!("detector_active_diameter {} must be positive", self.detector_active_diameter));
        }
        Ok(())
    }

    /// Fix positions for one side given the emission centroid height.
    pub fn resolve(&self, side: Side, centroid_z: f64) -> ResolvedLens {
        let s = side.sign();
        let f = self.focal_length;
        let lens_z = self.lens_plane_z.unwrap_or(centroid_z + s * f);
        let detector_distance = match self.detector_plane_z {
            Some(z) => (z - lens_z) * s,
            None => {
                let d_o = (lens_z - centroid_z) * s;
                if (d_o - f).abs() <= f * 1e-9 {
                    f64::INFINITY
                } else if d_o > f {
                    f * d_o / (d_o - f)
                } else {
                    f
                }
            }
        };
        ResolvedLens {
            side,
            focal_length: f,
            aperture_radius: self.aperture_diameter / 2.0,
            lens_z,
            detector_radius: if self.aperture_only { f64::INFINITY } else { self.detector_active_diameter / 2.0 },
            detector_distance,
        }
    }
}

/// Lens with concrete plane positions; the optical axis is the `z` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedLens {
    pub side: Side,
    pub focal_length: f64,
    pub aperture_radius: f64,
    pub lens_z: f64,
    pub detector_radius: f64,
    /// Distance from the lens to the detector along the propagation direction.
    pub detector_distance: f64,
}

/// True when the ray crosses the lens plane inside the aperture and its
/// paraxial thin-lens continuation lands inside the detector.
pub fn collected_through_lens(ray: &Ray, lens: &ResolvedLens) -> bool {
    let s = lens.side.sign();
    let d = ray.direction;
    let along = d.z * s;
    if along <= 0.0 {
        return false;
    }
    let gap = (lens.lens_z - ray.origin.z) * s;
    if gap <= 0.0 {
        return false;
    }
    let t = gap / along;
    let hx = ray.origin.x + d.x * t;
    let hy = ray.origin.y + d.y * t;
    if hx * hx + hy * hy > lens.aperture_radius * lens.aperture_radius {
        return false;
    }
    if lens.detector_radius.is_infinite() || lens.detector_distance.is_infinite() {
        return true;
    }
    let (ux, uy) = (d.x / along, d.y / along);
    let f = lens.focal_length;
    let l = lens.detector_distance;
    let xd = hx + (ux - hx / f) * l;
    let yd = hy + (uy - hy / f) * l;
    xd * xd + yd * yd <= lens.detector_radius * lens.detector_radius
}

/// Per-side exit and collection totals with an angular histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideTally {
    pub exited_power: f64,
    pub exited_count: u64,
    pub collected_power: f64,
    pub collected_count: u64,
    /// Exited power with angle to the axis below `asin(0.7)`.
    pub below_na07_power: f64,
    /// Exited power in 0.5 degree bins of the angle to the axis.
    pub histogram: Vec<f64>,
}

impl Default for SideTally {
    fn default() -> Self {
        Self {
            exited_power: 0.0,
            exited_count: 0,
            collected_power: 0.0,
            collected_count: 0,
            below_na07_power: 0.0,
            histogram: vec![0.0; HISTOGRAM_BINS],
        }
    }
}

impl SideTally {
    fn merge(&mut self, o: &SideTally) {
        self.exited_power += o.exited_power;
        self.exited_count += o.exited_count;
        self.collected_power += o.collected_power;
        self.collected_count += o.collected_count;
        self.below_na07_power += o.below_na07_power;
        for (a, b) in self.histogram.iter_mut().zip(&o.histogram) {
            *a += b;
        }
    }

    /// Fraction of this side's exited power below `alpha_deg`, read from
    /// the histogram with linear interpolation inside a bin.
    pub fn fraction_within(&self, alpha_deg: f64) -> Option<f64> {
        if self.exited_power <= 0.0 {
            return None;
        }
        let pos = (alpha_deg / BIN_WIDTH_DEG).clamp(0.0, HISTOGRAM_BINS as f64);
        let full = pos.floor() as usize;
        let mut acc: f64 = self.histogram[..full].iter().sum();
        if full < HISTOGRAM_BINS {
            acc += self.histogram[full] * (pos - full as f64);
        }
        Some(acc / self.exited_power)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TallySet {
    pub front: SideTally,
    pub back: SideTally,
}

impl TallySet {
    pub fn side(&self, side: Side) -> &SideTally {
        match side {
            Side::Front => &self.front,
            Side::Back => &self.back,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut SideTally {
        match side {
            Side::Front => &mut self.front,
            Side::Back => &mut self.back,
        }
    }

    /// Book one exiting ray carrying `power`.
    pub fn record(&mut self, direction: Vec3, power: f64, collected: bool) {
        let (side, alpha) = classify_exit(direction);
        let deg = alpha.to_degrees();
        let t = self.side_mut(side);
        t.exited_power += power;
        t.exited_count += 1;
        if collected {
            t.collected_power += power;
            t.collected_count += 1;
        }
        if alpha < 0.7f64.asin() {
            t.below_na07_power += power;
        }
        let bin = ((deg / BIN_WIDTH_DEG) as usize).min(HISTOGRAM_BINS - 1);
        t.histogram[bin] += power;
    }

    pub fn merge(&mut self, other: &TallySet) {
        self.front.merge(&other.front);
        self.back.merge(&other.back);
    }

    pub fn total_exited(&self) -> f64 {
        self.front.exited_power + self.back.exited_power
    }
}

/// Cumulative angular distribution for one side: `(alpha_deg, fraction)` at
/// every bin edge from 0 to 90 degrees, as a fraction of all exited power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularCdf {
    pub side: Side,
    pub points: Vec<(f64, f64)>,
    /// Set when the side saw no exits; `points` is then empty.
    pub empty: bool,
}

pub fn angular_cdf(tally: &TallySet, side: Side) -> AngularCdf {
    let total = tally.total_exited();
    let t = tally.side(side);
    if t.exited_power <= 0.0 || total <= 0.0 {
        return AngularCdf { side, points: Vec::new(), empty: true };
    }
    let mut points = Vec::with_capacity(HISTOGRAM_BINS + 1);
    points.push((0.0, 0.0));
    let mut acc = 0.0;
    for (i, p) in t.histogram.iter().enumerate() {
        acc += p;
        points.push(((i + 1) as f64 * BIN_WIDTH_DEG, acc / total));
    }
    AngularCdf { side, points, empty: false }
}
