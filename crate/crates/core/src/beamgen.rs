//! Parametric cantilever-beam designs and their planar domains.
//!
//! A design is drawn from one of nine geometry families. Every family shares the
//! fixture (the full left edge) and the load model (a point force anchored on the
//! right edge); families differ in the outer outline and the optional hole.
//! All lengths are in millimetres on a 0.1 mm grid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{loop_is_simple, point_in_polygon, polygon_area, segments_intersect, Point};

/// Minimum allowed material thickness between a hole and the outer contour.
pub const MIN_WALL: f64 = 1.0;
/// Maximum distance between a discretized curved boundary and the true curve.
pub const CHORD_TOLERANCE: f64 = 0.05;
/// Attempts allowed when placing a hole before the ranges are declared infeasible.
pub const HOLE_ATTEMPTS: usize = 1000;
/// Number of load directions on [0, 2π): multiples of π/6.
pub const LOAD_ANGLE_STEPS: u32 = 12;
pub const NUM_FAMILIES: u8 = 9;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("family id {0} outside 1..={NUM_FAMILIES}")]
    UnknownFamily(u8),
    #[error("no hole placement keeps walls >= {MIN_WALL} mm after {attempts} attempts (family {family})")]
    HoleRejected { family: u8, attempts: usize },
    #[error("invalid range for `{key}`: {reason}")]
    BadRange { key: String, reason: String },
    #[error("ranges config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("design violates invariant: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterShape {
    /// Axis-aligned rectangle `width × height`.
    Rectangle,
    /// Symmetric taper from `height` at the fixture to `tip_height` at the free end.
    Tapered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleKind {
    Circle,
    Ellipse,
    Rectangle,
    Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub outer: OuterShape,
    pub hole: Option<HoleKind>,
}

impl FamilySpec {
    const fn new(outer: OuterShape, hole: Option<HoleKind>) -> Self {
        Self { outer, hole }
    }
}

pub const DEFAULT_FAMILIES: [FamilySpec; NUM_FAMILIES as usize] = [
    FamilySpec::new(OuterShape::Rectangle, None),
    FamilySpec::new(OuterShape::Rectangle, Some(HoleKind::Circle)),
    FamilySpec::new(OuterShape::Rectangle, Some(HoleKind::Ellipse)),
    FamilySpec::new(OuterShape::Rectangle, Some(HoleKind::Rectangle)),
    FamilySpec::new(OuterShape::Rectangle, Some(HoleKind::Slot)),
    FamilySpec::new(OuterShape::Tapered, None),
    FamilySpec::new(OuterShape::Tapered, Some(HoleKind::Circle)),
    FamilySpec::new(OuterShape::Tapered, Some(HoleKind::Ellipse)),
    FamilySpec::new(OuterShape::Tapered, Some(HoleKind::Slot)),
];

/// Inclusive `[min, max]` range sampled on a grid of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl StepRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    fn check(&self, key: &str) -> Result<(), DesignError> {
        let bad = |reason: &str| DesignError::BadRange {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(bad("non-finite bound"));
        }
        if self.step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if self.max < self.min {
            return Err(bad("max < min"));
        }
        Ok(())
    }

    fn grid_points(&self) -> u64 {
        ((self.max - self.min) / self.step + 1e-9).floor() as u64 + 1
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = rng.gen_range(0..self.grid_points());
        self.min + k as f64 * self.step
    }
}

impl fmt::Display for StepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.min, self.max, self.step)
    }
}

/// Parameters a family may draw. Lengths in mm; `Taper` is the tip/root height ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Width,
    Height,
    Taper,
    HoleRadius,
    HoleHalfExtent,
    SlotHalfLength,
    LoadMagnitude,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::Width,
        Param::Height,
        Param::Taper,
        Param::HoleRadius,
        Param::HoleHalfExtent,
        Param::SlotHalfLength,
        Param::LoadMagnitude,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Param::Width => "width",
            Param::Height => "height",
            Param::Taper => "taper",
            Param::HoleRadius => "hole_radius",
            Param::HoleHalfExtent => "hole_half_extent",
            Param::SlotHalfLength => "slot_half_length",
            Param::LoadMagnitude => "load_magnitude",
        }
    }

    fn is_length(self) -> bool {
        !matches!(self, Param::Taper | Param::LoadMagnitude)
    }

    fn default_range(self) -> StepRange {
        match self {
            Param::Width => StepRange::new(30.0, 64.0, 0.1),
            Param::Height => StepRange::new(10.0, 32.0, 0.1),
            Param::Taper => StepRange::new(0.5, 0.9, 0.1),
            Param::HoleRadius => StepRange::new(2.0, 8.0, 0.1),
            Param::HoleHalfExtent => StepRange::new(2.0, 8.0, 0.1),
            Param::SlotHalfLength => StepRange::new(1.0, 8.0, 0.1),
            Param::LoadMagnitude => StepRange::new(100.0, 1000.0, 100.0),
        }
    }
}

impl FromStr for Param {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Param::ALL.into_iter().find(|p| p.key() == s).ok_or(())
    }
}

/// Sampling ranges and family definitions.
///
/// Plain-text config, one `key = value` per line, `#` starts a comment:
///
/// ```text
/// width = 30 64 0.1          # global range: min max step
/// f3.hole_radius = 2 5 0.1   # override for family 3 only
/// family.6 = tapered none    # redefine family 6 (outer shape, hole kind)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub families: Vec<FamilySpec>,
    pub global: BTreeMap<Param, StepRange>,
    pub overrides: BTreeMap<(u8, Param), StepRange>,
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            families: DEFAULT_FAMILIES.to_vec(),
            global: Param::ALL.iter().map(|&p| (p, p.default_range())).collect(),
            overrides: BTreeMap::new(),
        }
    }
}

impl ParamRanges {
    pub fn family(&self, family_id: u8) -> Result<FamilySpec, DesignError> {
        if family_id == 0 || family_id > NUM_FAMILIES {
            return Err(DesignError::UnknownFamily(family_id));
        }
        Ok(self.families[family_id as usize - 1])
    }

    pub fn range(&self, family_id: u8, param: Param) -> StepRange {
        self.overrides
            .get(&(family_id, param))
            .or_else(|| self.global.get(&param))
            .copied()
            .unwrap_or_else(|| param.default_range())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if let Some(id) = key.strip_prefix("family.") {
            let id = parse_family_id(id)?;
            let mut parts = value.split_whitespace();
            let outer = match parts.next() {
                Some("rectangle") => OuterShape::Rectangle,
                Some("tapered") => OuterShape::Tapered,
                other => return Err(format!("unknown outer shape {other:?}")),
            };
            let hole = match parts.next() {
                Some("none") | None => None,
                Some("circle") => Some(HoleKind::Circle),
                Some("ellipse") => Some(HoleKind::Ellipse),
                Some("rectangle") => Some(HoleKind::Rectangle),
                Some("slot") => Some(HoleKind::Slot),
                Some(other) => return Err(format!("unknown hole kind `{other}`")),
            };
            if parts.next().is_some() {
                return Err("expected `<outer> <hole>`".into());
            }
            self.families[id as usize - 1] = FamilySpec { outer, hole };
            return Ok(());
        }
        let (family, name) = match key.split_once('.') {
            Some((f, name)) => {
                let id = f
                    .strip_prefix('f')
                    .ok_or_else(|| format!("unknown key `{key}`"))?;
                (Some(parse_family_id(id)?), name)
            }
            None => (None, key),
        };
        let param: Param = name.parse().map_err(|_| format!("unknown key `{key}`"))?;
        let nums: Vec<f64> = value
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [min, max, step] = nums[..] else {
            return Err(format!("`{key}` expects `min max step`"));
        };
        let range = StepRange::new(min, max, step);
        range.check(key).map_err(|e| e.to_string())?;
        if param.is_length() && (!on_tenth_grid(min) || !on_tenth_grid(step) || min <= 0.0) {
            return Err(format!("`{key}` must use positive multiples of 0.1 mm"));
        }
        match family {
            Some(id) => self.overrides.insert((id, param), range),
            None => self.global.insert(param, range),
        };
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, DesignError> {
        let mut ranges = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DesignError::Config {
                line: idx + 1,
                reason: "expected `key = value`".into(),
            })?;
            ranges
                .set(key.trim(), value.trim())
                .map_err(|reason| DesignError::Config { line: idx + 1, reason })?;
        }
        Ok(ranges)
    }

    pub fn load(path: &Path) -> Result<Self, DesignError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// `key = value` lines that [`ParamRanges::parse`] maps back to `self`.
    pub fn to_config_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, f) in self.families.iter().enumerate() {
            let outer = match f.outer {
                OuterShape::Rectangle => "rectangle",
                OuterShape::Tapered => "tapered",
            };
            let hole = match f.hole {
                None => "none",
                Some(HoleKind::Circle) => "circle",
                Some(HoleKind::Ellipse) => "ellipse",
                Some(HoleKind::Rectangle) => "rectangle",
                Some(HoleKind::Slot) => "slot",
            };
            out.push(format!("family.{} = {outer} {hole}", i + 1));
        }
        for (p, r) in &self.global {
            out.push(format!("{} = {r}", p.key()));
        }
        for ((id, p), r) in &self.overrides {
            out.push(format!("f{id}.{} = {r}", p.key()));
        }
        out
    }
}

fn parse_family_id(s: &str) -> Result<u8, String> {
    match s.parse::<u8>() {
        Ok(id) if (1..=NUM_FAMILIES).contains(&id) => Ok(id),
        _ => Err(format!("family id `{s}` outside 1..={NUM_FAMILIES}")),
    }
}

fn snap_tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn on_tenth_grid(v: f64) -> bool {
    ((v * 10.0) - (v * 10.0).round()).abs() < 1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoleSpec {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, semi_x: f64, semi_y: f64 },
    Rectangle { center: Point, half_x: f64, half_y: f64 },
    /// Stadium: a `2·half_length` straight section capped by semicircles of `radius`.
    Slot { center: Point, half_length: f64, radius: f64 },
}

impl HoleSpec {
    pub fn center(&self) -> Point {
        match *self {
            HoleSpec::Circle { center, .. }
            | HoleSpec::Ellipse { center, .. }
            | HoleSpec::Rectangle { center, .. }
            | HoleSpec::Slot { center, .. } => center,
        }
    }

    pub fn kind(&self) -> HoleKind {
        match self {
            HoleSpec::Circle { .. } => HoleKind::Circle,
            HoleSpec::Ellipse { .. } => HoleKind::Ellipse,
            HoleSpec::Rectangle { .. } => HoleKind::Rectangle,
            HoleSpec::Slot { .. } => HoleKind::Slot,
        }
    }

    fn lengths(&self) -> Vec<f64> {
        let c = self.center();
        let mut v = vec![c.x, c.y];
        match *self {
            HoleSpec::Circle { radius, .. } => v.push(radius),
            HoleSpec::Ellipse { semi_x, semi_y, .. } => v.extend([semi_x, semi_y]),
            HoleSpec::Rectangle { half_x, half_y, .. } => v.extend([half_x, half_y]),
            HoleSpec::Slot { half_length, radius, .. } => v.extend([half_length, radius]),
        }
        v
    }

    /// Support function: max over hole points `p` of `(p - center) · n` for unit `n`.
    pub fn support(&self, n: Point) -> f64 {
        match *self {
            HoleSpec::Circle { radius, .. } => radius,
            HoleSpec::Ellipse { semi_x, semi_y, .. } => {
                ((semi_x * n.x).powi(2) + (semi_y * n.y).powi(2)).sqrt()
            }
            HoleSpec::Rectangle { half_x, half_y, .. } => half_x * n.x.abs() + half_y * n.y.abs(),
            HoleSpec::Slot { half_length, radius, .. } => half_length * n.x.abs() + radius,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            HoleSpec::Circle { radius, .. } => PI * radius * radius,
            HoleSpec::Ellipse { semi_x, semi_y, .. } => PI * semi_x * semi_y,
            HoleSpec::Rectangle { half_x, half_y, .. } => 4.0 * half_x * half_y,
            HoleSpec::Slot { half_length, radius, .. } => {
                4.0 * half_length * radius + PI * radius * radius
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    /// Position along the right edge, 0 at its bottom end and 1 at its top end.
    pub anchor_fraction: f64,
    /// Newtons.
    pub magnitude: f64,
    /// Radians, measured counter-clockwise from +x.
    pub angle: f64,
}

impl LoadSpec {
    pub fn force(&self) -> [f64; 2] {
        [self.magnitude * self.angle.cos(), self.magnitude * self.angle.sin()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamDesign {
    pub family_id: u8,
    pub width: f64,
    pub height: f64,
    /// Height of the free (right) end; equals `height` for rectangular outlines.
    pub tip_height: f64,
    pub hole: Option<HoleSpec>,
    pub load: LoadSpec,
    pub seed: u64,
}

impl BeamDesign {
    /// Outer outline, counter-clockwise, starting at the bottom of the fixture.
    pub fn outer_loop(&self) -> Vec<Point> {
        let drop = 0.5 * (self.height - self.tip_height);
        vec![
            Point::new(0.0, 0.0),
            Point::new(self.width, drop),
            Point::new(self.width, drop + self.tip_height),
            Point::new(0.0, self.height),
        ]
    }

    pub fn load_anchor(&self) -> Point {
        let drop = 0.5 * (self.height - self.tip_height);
        Point::new(self.width, drop + self.load.anchor_fraction * self.tip_height)
    }

    /// Smallest distance between the hole and the outer contour (infinite without a hole).
    ///
    /// Both the outline and every hole shape are convex, so the gap to each edge is
    /// the distance from the hole centre to the edge line minus the hole's support
    /// in the outward normal direction.
    pub fn wall_thickness(&self) -> f64 {
        let Some(hole) = self.hole else {
            return f64::INFINITY;
        };
        let outer = self.outer_loop();
        let c = hole.center();
        let mut wall = f64::INFINITY;
        for i in 0..outer.len() {
            let a = outer[i];
            let b = outer[(i + 1) % outer.len()];
            let t = b.sub(a).scale(1.0 / b.dist(a));
            let n_out = Point::new(t.y, -t.x);
            let inside_dist = -c.sub(a).dot(n_out);
            wall = wall.min(inside_dist - hole.support(n_out));
        }
        wall
    }

    /// Exact area of the design domain.
    pub fn area(&self) -> f64 {
        0.5 * (self.height + self.tip_height) * self.width - self.hole.map_or(0.0, |h| h.area())
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let bad = |s: String| Err(DesignError::Invariant(s));
        if self.family_id == 0 || self.family_id > NUM_FAMILIES {
            return Err(DesignError::UnknownFamily(self.family_id));
        }
        let mut lengths = vec![self.width, self.height, self.tip_height];
        if let Some(h) = &self.hole {
            lengths.extend(h.lengths());
        }
        for v in lengths {
            if v <= 0.0 || !on_tenth_grid(v) {
                return bad(format!("length {v} is not a positive multiple of 0.1 mm"));
            }
        }
        if self.tip_height > self.height {
            return bad("tip height exceeds root height".into());
        }
        let m = self.load.magnitude / 100.0;
        if (m - m.round()).abs() > 1e-9 || !(1.0..=10.0).contains(&m.round()) {
            return bad(format!("load magnitude {} not in 100..=1000 N step 100", self.load.magnitude));
        }
        let k = self.load.angle / (PI / 6.0);
        if (k - k.round()).abs() > 1e-9 || k.round() < 0.0 || k.round() >= LOAD_ANGLE_STEPS as f64 {
            return bad(format!("load angle {} not a multiple of π/6 in [0, 2π)", self.load.angle));
        }
        if !(0.0..=1.0).contains(&self.load.anchor_fraction) {
            return bad("load anchor outside the right edge".into());
        }
        if self.wall_thickness() < MIN_WALL - 1e-9 {
            return bad(format!("wall thickness {} < {MIN_WALL} mm", self.wall_thickness()));
        }
        Ok(())
    }
}

/// Draw a design for `family_id`. Pure function of `(family_id, seed, ranges)`.
pub fn sample_design(family_id: u8, seed: u64, ranges: &ParamRanges) -> Result<BeamDesign, DesignError> {
    let family = ranges.family(family_id)?;
    for p in Param::ALL {
        ranges.range(family_id, p).check(p.key())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = |rng: &mut ChaCha8Rng, p: Param| snap_tenth(ranges.range(family_id, p).sample(rng));

    let width = len(&mut rng, Param::Width);
    let height = len(&mut rng, Param::Height);
    let tip_height = match family.outer {
        OuterShape::Rectangle => height,
        OuterShape::Tapered => {
            let ratio = ranges.range(family_id, Param::Taper).sample(&mut rng);
            // keep the taper symmetric on the 0.1 mm grid
            let drop = snap_tenth(0.5 * height * (1.0 - ratio).max(0.0));
            snap_tenth((height - 2.0 * drop).max(0.1))
        }
    };

    let magnitude = ranges.range(family_id, Param::LoadMagnitude).sample(&mut rng);
    let angle_idx = rng.gen_range(0..LOAD_ANGLE_STEPS);
    let tip_tenths = (tip_height * 10.0).round() as u64;
    let anchor_tenths = rng.gen_range(0..=tip_tenths);
    let load = LoadSpec {
        anchor_fraction: anchor_tenths as f64 / tip_tenths as f64,
        magnitude,
        angle: angle_idx as f64 * PI / 6.0,
    };

    let mut design = BeamDesign {
        family_id,
        width,
        height,
        tip_height,
        hole: None,
        load,
        seed,
    };

    if let Some(kind) = family.hole {
        let mut placed = None;
        for _ in 0..HOLE_ATTEMPTS {
            let cx = snap_tenth(rng.gen_range(1..(width * 10.0).round() as u64) as f64 / 10.0);
            let cy = snap_tenth(rng.gen_range(1..(height * 10.0).round() as u64) as f64 / 10.0);
            let center = Point::new(cx, cy);
            let hole = match kind {
                HoleKind::Circle => HoleSpec::Circle { center, radius: len(&mut rng, Param::HoleRadius) },
                HoleKind::Ellipse => HoleSpec::Ellipse {
                    center,
                    semi_x: len(&mut rng, Param::HoleRadius),
                    semi_y: len(&mut rng, Param::HoleRadius),
                },
                HoleKind::Rectangle => HoleSpec::Rectangle {
                    center,
                    half_x: len(&mut rng, Param::HoleHalfExtent),
                    half_y: len(&mut rng, Param::HoleHalfExtent),
                },
                HoleKind::Slot => HoleSpec::Slot {
                    center,
                    half_length: len(&mut rng, Param::SlotHalfLength),
                    radius: len(&mut rng, Param::HoleRadius),
                },
            };
            design.hole = Some(hole);
            if design.wall_thickness() >= MIN_WALL {
                placed = Some(hole);
                break;
            }
        }
        if placed.is_none() {
            return Err(DesignError::HoleRejected { family: family_id, attempts: HOLE_ATTEMPTS });
        }
    }
    design.validate()?;
    Ok(design)
}

/// Geometric domain handed to the mesher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarDomain {
    /// Counter-clockwise.
    pub outer_loop: Vec<Point>,
    /// Each clockwise.
    pub hole_loops: Vec<Vec<Point>>,
    pub fixture_segment: [Point; 2],
    pub load_anchor: Point,
}

impl PlanarDomain {
    pub fn area(&self) -> f64 {
        polygon_area(&self.outer_loop) + self.hole_loops.iter().map(|h| polygon_area(h)).sum::<f64>()
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.outer_loop) && !self.hole_loops.iter().any(|h| point_in_polygon(p, h))
    }

    /// All loops, outer first.
    pub fn loops(&self) -> impl Iterator<Item = &Vec<Point>> {
        std::iter::once(&self.outer_loop).chain(self.hole_loops.iter())
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let bad = |s: &str| Err(DesignError::Invariant(s.to_string()));
        if !loop_is_simple(&self.outer_loop) {
            return bad("outer loop is not simple");
        }
        if polygon_area(&self.outer_loop) <= 0.0 {
            return bad("outer loop is not counter-clockwise");
        }
        for hole in &self.hole_loops {
            if !loop_is_simple(hole) {
                return bad("hole loop is not simple");
            }
            if polygon_area(hole) >= 0.0 {
                return bad("hole loop is not clockwise");
            }
            if !hole.iter().all(|&p| point_in_polygon(p, &self.outer_loop)) {
                return bad("hole not inside the outer loop");
            }
            for (a, b) in crate::geometry::loop_segments(hole) {
                for (c, d) in crate::geometry::loop_segments(&self.outer_loop) {
                    if segments_intersect(a, b, c, d) {
                        return bad("hole touches the outer loop");
                    }
                }
            }
        }
        let [f0, f1] = self.fixture_segment;
        let on_outer = crate::geometry::loop_segments(&self.outer_loop)
            .any(|(a, b)| (a == f0 && b == f1) || (a == f1 && b == f0));
        if !on_outer {
            return bad("fixture segment is not an outer-loop edge");
        }
        Ok(())
    }
}

/// Closed elliptic arc `center + (rx cos t, ry sin t)` for `t ∈ [t0, t1)`, refined
/// until every chord stays within `tol` of the curve.
fn discretize_arc(center: Point, rx: f64, ry: f64, t0: f64, t1: f64, pieces: usize, tol: f64) -> Vec<Point> {
    let eval = |t: f64| Point::new(center.x + rx * t.cos(), center.y + ry * t.sin());
    let deviation = |a: f64, b: f64| {
        let (pa, pb) = (eval(a), eval(b));
        (1..8)
            .map(|k| {
                let p = eval(a + (b - a) * k as f64 / 8.0);
                crate::geometry::point_segment_distance(p, pa, pb)
            })
            .fold(0.0, f64::max)
    };
    let mut out = Vec::new();
    let mut stack: Vec<(f64, f64)> = (0..pieces)
        .rev()
        .map(|i| {
            let s = (t1 - t0) / pieces as f64;
            (t0 + i as f64 * s, t0 + (i + 1) as f64 * s)
        })
        .collect();
    while let Some((a, b)) = stack.pop() {
        if deviation(a, b) > tol && (b - a) > 1e-6 {
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
        } else {
            out.push(eval(a));
        }
    }
    out
}

/// Radial scale about `center` that gives the polygon `pts` the area `exact`.
/// Vertices move off the curve by at most two thirds of the chord sagitta,
/// so the loop stays within [`CHORD_TOLERANCE`] of the true boundary.
fn match_area(pts: &mut [Point], center: Point, exact: f64) {
    let s = (exact / polygon_area(pts).abs()).sqrt();
    for p in pts {
        *p = center.add(p.sub(center).scale(s));
    }
}

/// Scales the interior points of a uniform-angle open arc (endpoints on the
/// curve, `n` segments of angle `φ`) radially so the fan area about `center`
/// equals the sector area: `(n−2) sin φ s² + 2 sin φ s = n φ`.
fn match_arc_area(pts: &mut [Point], center: Point, radius: f64) {
    let n = pts.len().saturating_sub(1);
    if n < 3 {
        return;
    }
    let phi = 2.0 * (0.5 * pts[0].dist(pts[1]) / radius).clamp(-1.0, 1.0).asin();
    let (a, b, c) = ((n - 2) as f64 * phi.sin(), 2.0 * phi.sin(), -(n as f64) * phi);
    let s = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    for p in &mut pts[1..n] {
        *p = center.add(p.sub(center).scale(s));
    }
}

/// Clockwise hole boundary.
pub fn hole_loop(hole: &HoleSpec) -> Vec<Point> {
    let mut ccw = match *hole {
        HoleSpec::Circle { center, radius } => {
            let mut pts = discretize_arc(center, radius, radius, 0.0, 2.0 * PI, 8, CHORD_TOLERANCE);
            match_area(&mut pts, center, PI * radius * radius);
            pts
        }
        HoleSpec::Ellipse { center, semi_x, semi_y } => {
            // Uneven curvature spreads the area correction unevenly, so chords get margin.
            let mut pts = discretize_arc(center, semi_x, semi_y, 0.0, 2.0 * PI, 8, 0.7 * CHORD_TOLERANCE);
            match_area(&mut pts, center, PI * semi_x * semi_y);
            pts
        }
        HoleSpec::Rectangle { center, half_x, half_y } => vec![
            Point::new(center.x - half_x, center.y - half_y),
            Point::new(center.x + half_x, center.y - half_y),
            Point::new(center.x + half_x, center.y + half_y),
            Point::new(center.x - half_x, center.y + half_y),
        ],
        HoleSpec::Slot { center, half_length, radius } => {
            let right = Point::new(center.x + half_length, center.y);
            let left = Point::new(center.x - half_length, center.y);
            let mut pts = discretize_arc(right, radius, radius, -0.5 * PI, 0.5 * PI, 4, CHORD_TOLERANCE);
            pts.push(Point::new(right.x, right.y + radius));
            match_arc_area(&mut pts, right, radius);
            let mut back = discretize_arc(left, radius, radius, 0.5 * PI, 1.5 * PI, 4, CHORD_TOLERANCE);
            back.push(Point::new(left.x, left.y - radius));
            match_arc_area(&mut back, left, radius);
            pts.extend(back);
            pts
        }
    };
    ccw.reverse();
    ccw
}

pub fn design_to_polygon(design: &BeamDesign) -> Result<PlanarDomain, DesignError> {
    design.validate()?;
    let outer_loop = design.outer_loop();
    let domain = PlanarDomain {
        fixture_segment: [outer_loop[3], outer_loop[0]],
        hole_loops: design.hole.iter().map(hole_loop).collect(),
        load_anchor: design.load_anchor(),
        outer_loop,
    };
    domain.validate()?;
    Ok(domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_round_trip() {
        let mut r = ParamRanges::default();
        r.set("f3.hole_radius", "2 5 0.1").unwrap();
        r.set("family.6", "tapered slot").unwrap();
        let back = ParamRanges::parse(&r.to_config_lines().join("\n")).unwrap();
        assert_eq!(back, r);
    }
    use crate::geometry::point_segment_distance;

    fn rect_design(width: f64, height: f64, hole: Option<HoleSpec>) -> BeamDesign {
        BeamDesign {
            family_id: if hole.is_some() { 2 } else { 1 },
            width,
            height,
            tip_height: height,
            hole,
            load: LoadSpec { anchor_fraction: 0.5, magnitude: 1000.0, angle: 0.0 },
            seed: 0,
        }
    }

    /// Brute-force wall oracle: densely sample the exact hole boundary and measure
    /// the distance to every outer edge.
    fn scanned_wall(design: &BeamDesign) -> f64 {
        let hole = design.hole.unwrap();
        let n = 4000;
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let (c, s) = (t.cos(), t.sin());
                match hole {
                    HoleSpec::Circle { center, radius } => center.add(Point::new(radius * c, radius * s)),
                    HoleSpec::Ellipse { center, semi_x, semi_y } => {
                        center.add(Point::new(semi_x * c, semi_y * s))
                    }
                    HoleSpec::Rectangle { center, half_x, half_y } => {
                        // walk the perimeter uniformly
                        let u = i as f64 / n as f64 * 4.0;
                        let f = u.fract() * 2.0 - 1.0;
                        let (dx, dy) = match u as usize {
                            0 => (f * half_x, -half_y),
                            1 => (half_x, f * half_y),
                            2 => (-f * half_x, half_y),
                            _ => (-half_x, -f * half_y),
                        };
                        center.add(Point::new(dx, dy))
                    }
                    HoleSpec::Slot { center, half_length, radius } => {
                        let off = if c >= 0.0 { half_length } else { -half_length };
                        center.add(Point::new(off + radius * c, radius * s))
                    }
                }
            })
            .collect();
        let outer = design.outer_loop();
        pts.iter()
            .flat_map(|&p| {
                crate::geometry::loop_segments(&outer).map(move |(a, b)| point_segment_distance(p, a, b))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn sampling_is_deterministic() {
        let ranges = ParamRanges::default();
        let a = sample_design(1, 42, &ranges).unwrap();
        let b = sample_design(1, 42, &ranges).unwrap();
        assert_eq!(a, b);
        assert!(a.hole.is_none());
        assert_ne!(a, sample_design(1, 43, &ranges).unwrap());
    }

    #[test]
    fn oversized_hole_is_rejected() {
        let mut ranges = ParamRanges::default();
        ranges.set("width", "20 20 0.1").unwrap();
        ranges.set("height", "20 20 0.1").unwrap();
        ranges.set("hole_radius", "10 10 0.1").unwrap();
        match sample_design(2, 1, &ranges) {
            Err(DesignError::HoleRejected { family: 2, attempts }) => assert_eq!(attempts, HOLE_ATTEMPTS),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn family3_seed7_walls_pass_scan() {
        let d = sample_design(3, 7, &ParamRanges::default()).unwrap();
        assert!(matches!(d.hole, Some(HoleSpec::Ellipse { .. })));
        let wall = scanned_wall(&d);
        assert!(wall >= MIN_WALL - 1e-6, "scanned wall {wall}");
        // the closed form and the scan agree closely
        assert!((wall - d.wall_thickness()).abs() < 1e-3);
    }

    #[test]
    fn every_family_respects_walls_and_grid() {
        let ranges = ParamRanges::default();
        for family in 1..=NUM_FAMILIES {
            for seed in 0..15 {
                let d = sample_design(family, seed, &ranges).unwrap();
                d.validate().unwrap();
                if d.hole.is_some() {
                    assert!(scanned_wall(&d) >= MIN_WALL - 1e-6, "family {family} seed {seed}");
                }
                let domain = design_to_polygon(&d).unwrap();
                assert_eq!(domain.fixture_segment[0].x, 0.0);
                assert_eq!(domain.fixture_segment[1].x, 0.0);
                assert_eq!(domain.load_anchor.x, d.width);
            }
        }
    }

    #[test]
    fn solid_rectangle_polygon() {
        let d = rect_design(40.0, 20.0, None);
        let dom = design_to_polygon(&d).unwrap();
        assert_eq!(dom.outer_loop.len(), 4);
        assert!(dom.hole_loops.is_empty());
        assert_eq!(dom.area(), 800.0);
        assert_eq!(dom.fixture_segment, [Point::new(0.0, 20.0), Point::new(0.0, 0.0)]);
        assert_eq!(dom.load_anchor, Point::new(40.0, 10.0));
    }

    #[test]
    fn circle_vertices_lie_on_circle() {
        let center = Point::new(20.0, 10.0);
        let d = rect_design(40.0, 20.0, Some(HoleSpec::Circle { center, radius: 5.0 }));
        let dom = design_to_polygon(&d).unwrap();
        let hole = &dom.hole_loops[0];
        for &p in hole {
            assert!((p.dist(center) - 5.0).abs() <= CHORD_TOLERANCE);
        }
        // chord midpoints as well
        for (a, b) in crate::geometry::loop_segments(hole) {
            assert!((a.lerp(b, 0.5).dist(center) - 5.0).abs() <= CHORD_TOLERANCE);
        }
    }

    #[test]
    fn ellipse_area_matches_shoelace() {
        for (a, b) in [(6.0, 3.0), (2.0, 2.5), (8.0, 2.0)] {
            let hole = HoleSpec::Ellipse { center: Point::new(25.0, 12.0), semi_x: a, semi_y: b };
            let area = -polygon_area(&hole_loop(&hole));
            let exact = PI * a * b;
            assert!((area - exact).abs() / exact < 0.005, "{a}x{b}: {area} vs {exact}");
        }
    }

    #[test]
    fn ellipse_sweep_stays_on_curve() {
        let c = Point::new(0.0, 0.0);
        let mut a = 2.0;
        while a <= 8.0 {
            let mut b = 2.0;
            while b <= 8.0 {
                let pts = hole_loop(&HoleSpec::Ellipse { center: c, semi_x: a, semi_y: b });
                let curve: Vec<Point> =
                    (0..20000).map(|i| 2.0 * PI * i as f64 / 20000.0).map(|t| Point::new(a * t.cos(), b * t.sin())).collect();
                let gap = |p: Point| curve.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
                for i in 0..pts.len() {
                    let j = (i + 1) % pts.len();
                    let mid = pts[i].add(pts[j]).scale(0.5);
                    assert!(gap(pts[i]) <= CHORD_TOLERANCE && gap(mid) <= CHORD_TOLERANCE, "{a}x{b}");
                }
                let exact = PI * a * b;
                assert!((polygon_area(&pts).abs() - exact).abs() / exact < 1e-9);
                b += 0.7;
            }
            a += 0.7;
        }
    }

    #[test]
    fn slot_stays_on_curve() {
        let c = Point::new(0.0, 0.0);
        for (half_length, radius) in [(3.0, 2.0), (5.0, 4.5), (1.0, 8.0)] {
            let pts = hole_loop(&HoleSpec::Slot { center: c, half_length, radius });
            let gap = |p: Point| {
                let x = p.x.abs() - half_length;
                if x <= 0.0 { (p.y.abs() - radius).abs() } else { (Point::new(x, p.y).dist(c) - radius).abs() }
            };
            for i in 0..pts.len() {
                let mid = pts[i].add(pts[(i + 1) % pts.len()]).scale(0.5);
                assert!(gap(pts[i]) <= CHORD_TOLERANCE && gap(mid) <= CHORD_TOLERANCE);
            }
            let exact = 4.0 * half_length * radius + PI * radius * radius;
            assert!((polygon_area(&pts).abs() - exact).abs() / exact < 0.005);
        }
    }

    #[test]
    fn ranges_config_parses_and_rejects_unknown_keys() {
        let text = "# ranges\nwidth = 40 50 0.1\nf3.hole_radius = 2 4 0.1 # override\nfamily.6 = tapered circle\n";
        let r = ParamRanges::parse(text).unwrap();
        assert_eq!(r.range(1, Param::Width), StepRange::new(40.0, 50.0, 0.1));
        assert_eq!(r.range(3, Param::HoleRadius), StepRange::new(2.0, 4.0, 0.1));
        assert_eq!(r.range(2, Param::HoleRadius), StepRange::new(2.0, 8.0, 0.1));
        assert_eq!(r.family(6).unwrap().hole, Some(HoleKind::Circle));
        assert!(ParamRanges::parse("wdth = 1 2 0.1").is_err());
        assert!(ParamRanges::parse("width = 1 2").is_err());
        assert!(ParamRanges::parse("width = 1.05 2 0.1").is_err());
    }

    #[test]
    fn load_and_fixture_on_edges() {
        let ranges = ParamRanges::default();
        for seed in 0..50 {
            let d = sample_design(6, seed, &ranges).unwrap();
            let anchor = d.load_anchor();
            let outer = d.outer_loop();
            assert_eq!(anchor.x, d.width);
            assert!(anchor.y >= outer[1].y - 1e-12 && anchor.y <= outer[2].y + 1e-12);
        }
    }
}
