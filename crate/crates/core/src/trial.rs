//! Pointing trials and their geometry.
//!
//! A [`Trial`] is one target acquisition: the cursor starts somewhere, moves,
//! and ends with a click inside the target. Amplitude is the length of the
//! recorded cursor path when a trajectory exists; otherwise a precomputed
//! amplitude or the straight start→end distance stands in for it, and the
//! substitution is reported through [`AmplitudeSource`].

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A screen coordinate in pixels. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Homogeneous levels share one target width; heterogeneous levels draw a
/// width per target. Serialized as `0` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelType {
    Homogeneous,
    Heterogeneous,
}

impl Serialize for LevelType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(match self {
            LevelType::Homogeneous => 0,
            LevelType::Heterogeneous => 1,
        })
    }
}

impl<'de> Deserialize<'de> for LevelType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(LevelType::Homogeneous),
            1 => Ok(LevelType::Heterogeneous),
            other => Err(serde::de::Error::custom(format!(
                "level_type must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// One pointing task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub session_id: String,
    pub participant_id: String,
    pub level_type: LevelType,
    /// `x.y.z`: level type, level number, sublevel number.
    pub level_label: String,
    pub target_width_px: f64,
    pub start: Point2,
    /// Cursor position at the successful click. Absent in logs that never
    /// recorded selection coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_center: Option<Point2>,
    #[serde(rename = "mt_s")]
    pub movement_time_s: f64,
    #[serde(default)]
    pub miss_clicks: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Point2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_px: Option<f64>,
}

/// Where a trial's movement amplitude came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeSource {
    Trajectory,
    Recorded,
    /// Straight start→end distance; an approximation of the path length.
    StraightLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub px: f64,
    pub source: AmplitudeSource,
}

impl Amplitude {
    pub fn is_approximated(&self) -> bool {
        self.source == AmplitudeSource::StraightLine
    }
}

/// Euclidean distance between two points.
pub fn euclidean_distance(p: Point2, q: Point2) -> Result<f64> {
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::NonFinite("point coordinates"));
    }
    Ok((p.x - q.x).hypot(p.y - q.y))
}

/// Total length of a polyline.
pub fn path_length(points: &[Point2]) -> Result<f64> {
    points.windows(2).map(|w| euclidean_distance(w[0], w[1])).sum()
}

impl Trial {
    /// Checks the structural invariants of a trial.
    pub fn validate(&self) -> Result<()> {
        if !(self.movement_time_s.is_finite() && self.movement_time_s > 0.0) {
            return Err(Error::InvalidTrial(format!(
                "movement time must be positive, got {}",
                self.movement_time_s
            )));
        }
        if !(self.target_width_px.is_finite() && self.target_width_px > 0.0) {
            return Err(Error::InvalidTrial(format!(
                "target width must be positive, got {}",
                self.target_width_px
            )));
        }
        let points = [Some(self.start), self.end, self.target_center];
        if points.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::InvalidTrial("non-finite coordinate".into()));
        }
        if let Some(path) = &self.trajectory {
            if path.len() < 2 {
                return Err(Error::InvalidTrial(format!(
                    "trajectory needs at least 2 points, got {}",
                    path.len()
                )));
            }
            if path[0] != self.start {
                return Err(Error::InvalidTrial(
                    "trajectory must begin at the start coordinate".into(),
                ));
            }
            if path.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidTrial("non-finite trajectory point".into()));
            }
        }
        if let Some(a) = self.amplitude_px {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidTrial(format!(
                    "recorded amplitude must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    /// Movement amplitude: trajectory length, else the recorded amplitude,
    /// else the straight start→end distance.
    pub fn movement_amplitude(&self) -> Result<Amplitude> {
        if let Some(path) = self.trajectory.as_deref().filter(|p| p.len() >= 2) {
            return Ok(Amplitude {
                px: path_length(path)?,
                source: AmplitudeSource::Trajectory,
            });
        }
        if let Some(px) = self.amplitude_px {
            return Ok(Amplitude {
                px,
                source: AmplitudeSource::Recorded,
            });
        }
        match self.end {
            Some(end) => Ok(Amplitude {
                px: euclidean_distance(self.start, end)?,
                source: AmplitudeSource::StraightLine,
            }),
            None => Err(Error::MissingInput(
                "amplitude needs a trajectory, amplitude_px, or an end coordinate".into(),
            )),
        }
    }

    /// Distance from start to target center over movement amplitude.
    pub fn path_efficiency(&self) -> Result<f64> {
        let center = self
            .target_center
            .ok_or_else(|| Error::MissingInput("target_center".into()))?;
        let amplitude = self.movement_amplitude()?.px;
        if amplitude == 0.0 {
            return Err(Error::degenerate("zero movement amplitude"));
        }
        Ok(euclidean_distance(self.start, center)? / amplitude)
    }

    /// Signed endpoint error along the start→center axis; positive values
    /// overshoot the center.
    pub fn endpoint_axis_offset(&self) -> Result<f64> {
        let center = self
            .target_center
            .ok_or_else(|| Error::MissingInput("target_center".into()))?;
        let end = self.end.ok_or_else(|| Error::MissingInput("end".into()))?;
        let axis_len = euclidean_distance(self.start, center)?;
        if axis_len == 0.0 {
            return Err(Error::degenerate("start coincides with target center"));
        }
        if !end.is_finite() {
            return Err(Error::NonFinite("end coordinate"));
        }
        let (ux, uy) = (
            (center.x - self.start.x) / axis_len,
            (center.y - self.start.y) / axis_len,
        );
        Ok((end.x - center.x) * ux + (end.y - center.y) * uy)
    }

    pub fn has_endpoints(&self) -> bool {
        self.end.is_some() && self.target_center.is_some()
    }
}

/// Provenance of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Internal,
    BenchmarkControlled,
    BenchmarkUncontrolled,
    Synthetic,
    #[default]
    Collected,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SourceTag::Internal => "internal",
            SourceTag::BenchmarkControlled => "benchmark_controlled",
            SourceTag::BenchmarkUncontrolled => "benchmark_uncontrolled",
            SourceTag::Synthetic => "synthetic",
            SourceTag::Collected => "collected",
        };
        f.write_str(s)
    }
}

/// Counts for one cleanup stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanupRecord {
    pub stage: String,
    pub input: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub accepted_homogeneous: usize,
    pub accepted_heterogeneous: usize,
}

impl CleanupRecord {
    pub fn new(stage: impl Into<String>, input: usize, accepted: &[Trial]) -> Self {
        let accepted_homogeneous = accepted
            .iter()
            .filter(|t| t.level_type == LevelType::Homogeneous)
            .count();
        Self {
            stage: stage.into(),
            input,
            accepted: accepted.len(),
            rejected: input - accepted.len(),
            accepted_homogeneous,
            accepted_heterogeneous: accepted.len() - accepted_homogeneous,
        }
    }

    pub fn accepted_pct(&self) -> f64 {
        if self.input == 0 {
            0.0
        } else {
            100.0 * self.accepted as f64 / self.input as f64
        }
    }
}

/// An ordered collection of trials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub trials: Vec<Trial>,
    pub source_tag: SourceTag,
    pub cleanup_history: Vec<CleanupRecord>,
}

impl Dataset {
    pub fn new(trials: Vec<Trial>, source_tag: SourceTag) -> Self {
        Self {
            trials,
            source_tag,
            cleanup_history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn trial_with(start: Point2, center: Point2, end: Point2, path: Option<Vec<Point2>>) -> Trial {
        Trial {
            session_id: "s1".into(),
            participant_id: "p1".into(),
            level_type: LevelType::Heterogeneous,
            level_label: "1.5.1".into(),
            target_width_px: 32.0,
            start,
            end: Some(end),
            target_center: Some(center),
            movement_time_s: 0.8,
            miss_clicks: 0,
            trajectory: path,
            amplitude_px: None,
        }
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(p(0.0, 0.0), p(3.0, 4.0)).unwrap(), 5.0);
        assert_eq!(euclidean_distance(p(1.0, 1.0), p(1.0, 1.0)).unwrap(), 0.0);
        let d = euclidean_distance(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(euclidean_distance(p(f64::NAN, 0.0), p(1.0, 1.0)).is_err());
    }

    #[test]
    fn amplitude_sums_trajectory_segments() {
        let t = |path: Vec<Point2>| trial_with(p(0.0, 0.0), p(3.0, 4.0), *path.last().unwrap(), Some(path));
        assert_eq!(t(vec![p(0.0, 0.0), p(3.0, 4.0)]).movement_amplitude().unwrap().px, 5.0);
        assert_eq!(
            t(vec![p(0.0, 0.0), p(0.0, 3.0), p(4.0, 3.0)])
                .movement_amplitude()
                .unwrap()
                .px,
            7.0
        );
        assert_eq!(
            t(vec![p(0.0, 0.0), p(3.0, 4.0), p(3.0, 4.0)])
                .movement_amplitude()
                .unwrap()
                .px,
            5.0
        );
    }

    #[test]
    fn amplitude_fallbacks_are_flagged() {
        let mut t = trial_with(p(0.0, 0.0), p(3.0, 4.0), p(6.0, 8.0), None);
        let a = t.movement_amplitude().unwrap();
        assert_eq!(a.px, 10.0);
        assert!(a.is_approximated());
        t.amplitude_px = Some(12.5);
        let a = t.movement_amplitude().unwrap();
        assert_eq!((a.px, a.source), (12.5, AmplitudeSource::Recorded));
        t.amplitude_px = None;
        t.end = None;
        assert!(matches!(t.movement_amplitude(), Err(Error::MissingInput(_))));
    }

    #[test]
    fn path_efficiency_examples() {
        let straight = trial_with(
            p(0.0, 0.0),
            p(3.0, 4.0),
            p(3.0, 4.0),
            Some(vec![p(0.0, 0.0), p(3.0, 4.0)]),
        );
        assert_eq!(straight.path_efficiency().unwrap(), 1.0);
        let detour = trial_with(
            p(0.0, 0.0),
            p(3.0, 4.0),
            p(3.0, 4.0),
            Some(vec![p(0.0, 0.0), p(0.0, 4.0), p(3.0, 4.0)]),
        );
        assert!((detour.path_efficiency().unwrap() - 5.0 / 7.0).abs() < 1e-15);
        let short = trial_with(
            p(0.0, 0.0),
            p(10.0, 0.0),
            p(8.0, 0.0),
            Some(vec![p(0.0, 0.0), p(8.0, 0.0)]),
        );
        assert_eq!(short.path_efficiency().unwrap(), 1.25);
        let still = trial_with(
            p(0.0, 0.0),
            p(10.0, 0.0),
            p(0.0, 0.0),
            Some(vec![p(0.0, 0.0), p(0.0, 0.0)]),
        );
        assert!(matches!(still.path_efficiency(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn axis_offset_examples() {
        let t = |center, end| trial_with(p(0.0, 0.0), center, end, None);
        assert_eq!(t(p(10.0, 0.0), p(12.0, 0.0)).endpoint_axis_offset().unwrap(), 2.0);
        assert_eq!(t(p(10.0, 0.0), p(10.0, 5.0)).endpoint_axis_offset().unwrap(), 0.0);
        assert!((t(p(6.0, 8.0), p(9.0, 12.0)).endpoint_axis_offset().unwrap() - 5.0).abs() < 1e-12);
        assert!(t(p(0.0, 0.0), p(1.0, 0.0)).endpoint_axis_offset().is_err());
    }

    #[test]
    fn validate_rejects_broken_trials() {
        let good = trial_with(
            p(0.0, 0.0),
            p(3.0, 4.0),
            p(3.0, 4.0),
            Some(vec![p(0.0, 0.0), p(3.0, 4.0)]),
        );
        good.validate().unwrap();
        let mut bad = good.clone();
        bad.movement_time_s = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.trajectory = Some(vec![p(1.0, 0.0), p(3.0, 4.0)]);
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.trajectory = Some(vec![p(0.0, 0.0)]);
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.target_width_px = -1.0;
        assert!(bad.validate().is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -2000.0..2000.0f64
    }

    fn point() -> impl Strategy<Value = Point2> {
        (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in point(), b in point(), c in point()) {
            let ab = euclidean_distance(a, b).unwrap();
            let bc = euclidean_distance(b, c).unwrap();
            let ac = euclidean_distance(a, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9 * (ab + bc).max(1.0));
            prop_assert_eq!(ab, euclidean_distance(b, a).unwrap());
        }

        #[test]
        fn amplitude_bounds_straight_distance(path in prop::collection::vec(point(), 2..20)) {
            let t = trial_with(path[0], *path.last().unwrap(), *path.last().unwrap(), Some(path.clone()));
            let a = t.movement_amplitude().unwrap().px;
            let direct = euclidean_distance(path[0], *path.last().unwrap()).unwrap();
            prop_assert!(a + 1e-9 * a.max(1.0) >= direct);
        }

        #[test]
        fn duplicate_point_leaves_amplitude(path in prop::collection::vec(point(), 2..20), at in 0usize..19) {
            let at = at % path.len();
            let mut doubled = path.clone();
            doubled.insert(at, path[at]);
            let t1 = trial_with(path[0], path[1], path[1], Some(path.clone()));
            let t2 = trial_with(path[0], path[1], path[1], Some(doubled));
            prop_assert_eq!(t1.movement_amplitude().unwrap().px, t2.movement_amplitude().unwrap().px);
        }

        #[test]
        fn axis_offset_rotation_invariant(start in point(), center in point(), end in point(), angle in 0.0..std::f64::consts::TAU) {
            prop_assume!(euclidean_distance(start, center).unwrap() > 1.0);
            let rot = |q: Point2| Point2::new(q.x * angle.cos() - q.y * angle.sin(), q.x * angle.sin() + q.y * angle.cos());
            let before = trial_with(start, center, end, None).endpoint_axis_offset().unwrap();
            let after = trial_with(rot(start), rot(center), rot(end), None).endpoint_axis_offset().unwrap();
            let scale = euclidean_distance(end, center).unwrap().max(1.0);
            prop_assert!((before - after).abs() <= 1e-9 * scale);
        }
    }
}
