//! Fixation detection, fixation-to-object assignment, and scanpaths.
//!
//! Detection is velocity-threshold (I-VT) classification over raw gaze
//! samples: maximal runs of inter-sample velocities below the threshold
//! become fixations, short above-threshold runs inside a fixation can be
//! bridged, and runs shorter than the minimum duration are dropped. No
//! smoothing is applied; velocities use adjacent-sample differencing only.
//!
//! Assignment evaluates the fixation centroid against object silhouettes at
//! the fixation's midpoint frame: containment wins (nearest object first),
//! otherwise the closest silhouette boundary within a small angular
//! tolerance. Objects beyond [`ASSIGN_MAX_DISTANCE_M`] are never assigned.
//! A scanpath is the time-ordered fixation sequence with assignments;
//! consecutive fixations on the same object are kept separate.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angular_distance, direction_to_angular};
use crate::scene::{Frame, ObjectId, Recording};

pub const DEFAULT_VELOCITY_THRESHOLD_DEG_S: f64 = 100.0;
pub const DEFAULT_MIN_DURATION_MS: f64 = 150.0;
pub const DEFAULT_MAX_GAP_SAMPLES: usize = 1;
/// Hard distance filter for assignment: objects farther than two meters are
/// not plausible fixation targets.
pub const ASSIGN_MAX_DISTANCE_M: f64 = 2.0;
/// Default angular tolerance for the boundary-proximity fallback, matching
/// the typical median error of wearable eye trackers.
pub const DEFAULT_TOLERANCE_DEG: f64 = 1.5;

#[derive(Debug, Error)]
pub enum GazeError {
    #[error("invalid detector config: {reason}")]
    InvalidConfig { reason: String },
    #[error("need at least 2 samples, got {count}")]
    TooFewSamples { count: usize },
    #[error("timestamps not strictly increasing: {prev_t_ns} then {t_ns}")]
    NonMonotonicTimestamps { prev_t_ns: i64, t_ns: i64 },
    #[error("gaze sample at t_ns = {t_ns} is not a usable direction")]
    BadGazeSample { t_ns: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub velocity_threshold_deg_s: f64,
    pub min_duration_ms: f64,
    /// Most samples skipped over by one bridge inside a fixation. Bridging
    /// also requires the net drift across the gap to stay below the
    /// velocity threshold, so real saccades are never bridged.
    pub max_gap_samples: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            velocity_threshold_deg_s: DEFAULT_VELOCITY_THRESHOLD_DEG_S,
            min_duration_ms: DEFAULT_MIN_DURATION_MS,
            max_gap_samples: DEFAULT_MAX_GAP_SAMPLES,
        }
    }
}

impl DetectorConfig {
    fn check(&self) -> Result<(), GazeError> {
        if !(self.velocity_threshold_deg_s.is_finite() && self.velocity_threshold_deg_s > 0.0) {
            return Err(GazeError::InvalidConfig {
                reason: format!(
                    "velocity threshold must be positive, got {}",
                    self.velocity_threshold_deg_s
                ),
            });
        }
        if !(self.min_duration_ms.is_finite() && self.min_duration_ms > 0.0) {
            return Err(GazeError::InvalidConfig {
                reason: format!(
                    "min duration must be positive, got {}",
                    self.min_duration_ms
                ),
            });
        }
        Ok(())
    }
}

/// How a fixation was tied to an object, so downstream reports can tell
/// segmentation hits from the nearest-boundary fallback.
#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    /// Centroid fell inside the silhouette.
    Contained {
        object_id: ObjectId,
        distance_m: f64,
    },
    /// Centroid fell outside but within the boundary tolerance.
    NearBoundary {
        object_id: ObjectId,
        boundary_deg: f64,
        distance_m: f64,
    },
    Unassigned,
}

impl Assignment {
    pub fn object_id(&self) -> Option<&ObjectId> {
        match self {
            Assignment::Contained { object_id, .. }
            | Assignment::NearBoundary { object_id, .. } => Some(object_id),
            Assignment::Unassigned => None,
        }
    }
}

/// A detected fixation. The centroid is the per-sample gaze directions
/// averaged and renormalized; duration is last minus first sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationEvent {
    pub start_ns: i64,
    pub end_ns: i64,
    pub first_sample: usize,
    pub last_sample: usize,
    pub centroid_direction: [f64; 3],
    /// [`Assignment::Unassigned`] until assignment has run.
    pub assignment: Assignment,
}

impl FixationEvent {
    pub fn duration_ms(&self) -> f64 {
        (self.end_ns - self.start_ns) as f64 / 1e6
    }

    pub fn midpoint_ns(&self) -> i64 {
        self.start_ns + (self.end_ns - self.start_ns) / 2
    }

    pub fn centroid_vec(&self) -> Vector3<f64> {
        Vector3::from(self.centroid_direction)
    }

    pub fn assigned_object(&self) -> Option<&ObjectId> {
        self.assignment.object_id()
    }
}

/// Time-ordered fixation sequence over one recording.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scanpath {
    pub fixations: Vec<FixationEvent>,
}

impl Scanpath {
    /// Fixations that were tied to an object, in time order.
    pub fn assigned(&self) -> Vec<&FixationEvent> {
        self.fixations
            .iter()
            .filter(|f| f.assigned_object().is_some())
            .collect()
    }

    /// (contained, boundary, unassigned) counts, for provenance notes.
    pub fn assignment_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for f in &self.fixations {
            match f.assignment {
                Assignment::Contained { .. } => counts.0 += 1,
                Assignment::NearBoundary { .. } => counts.1 += 1,
                Assignment::Unassigned => counts.2 += 1,
            }
        }
        counts
    }
}

/// Runs I-VT over (t_ns, direction) samples. Directions need not be
/// normalized; zero vectors are rejected.
pub fn detect_fixations(
    samples: &[(i64, [f64; 3])],
    config: &DetectorConfig,
) -> Result<Vec<FixationEvent>, GazeError> {
    config.check()?;
    if samples.len() < 2 {
        return Err(GazeError::TooFewSamples {
            count: samples.len(),
        });
    }
    let mut dirs = Vec::with_capacity(samples.len());
    for (t_ns, raw) in samples {
        let dir = Vector3::from(*raw)
            .try_normalize(1e-12)
            .ok_or(GazeError::BadGazeSample { t_ns: *t_ns })?;
        dirs.push(dir);
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(GazeError::NonMonotonicTimestamps {
                prev_t_ns: w[0].0,
                t_ns: w[1].0,
            });
        }
    }

    // below[i] covers the segment from sample i to sample i + 1.
    let n = dirs.len();
    let mut below = vec![false; n - 1];
    for i in 0..n - 1 {
        let angle =
            angular_distance(&dirs[i], &dirs[i + 1]).map_err(|_| GazeError::BadGazeSample {
                t_ns: samples[i + 1].0,
            })?;
        let dt_s = (samples[i + 1].0 - samples[i].0) as f64 / 1e9;
        below[i] = angle / dt_s < config.velocity_threshold_deg_s;
    }

    let mut fixations = Vec::new();
    let mut i = 0;
    while i < n - 1 {
        if !below[i] {
            i += 1;
            continue;
        }
        let first = i;
        let mut last = i + 1;
        loop {
            if last < n - 1 && below[last] {
                last += 1;
                continue;
            }
            if last >= n - 1 {
                break;
            }
            // A fast segment closes the run unless it can be bridged: skip
            // at most max_gap_samples samples, and require the net drift
            // from the run's last sample to the resumption sample to stay
            // below the velocity threshold. A true saccade moves too far to
            // pass that guard; a one-sample glitch does not.
            let mut bridged = false;
            for gap in 1..=config.max_gap_samples {
                let b = last + gap + 1;
                if b > n - 1 {
                    break;
                }
                let angle = angular_distance(&dirs[last], &dirs[b])
                    .map_err(|_| GazeError::BadGazeSample { t_ns: samples[b].0 })?;
                let dt_s = (samples[b].0 - samples[last].0) as f64 / 1e9;
                if angle / dt_s < config.velocity_threshold_deg_s {
                    last = b;
                    bridged = true;
                    break;
                }
            }
            if !bridged {
                break;
            }
        }
        let duration_ms = (samples[last].0 - samples[first].0) as f64 / 1e6;
        if duration_ms >= config.min_duration_ms {
            let mut sum = Vector3::zeros();
            for dir in &dirs[first..=last] {
                sum += dir;
            }
            let centroid = sum.try_normalize(1e-12).ok_or(GazeError::BadGazeSample {
                t_ns: samples[first].0,
            })?;
            fixations.push(FixationEvent {
                start_ns: samples[first].0,
                end_ns: samples[last].0,
                first_sample: first,
                last_sample: last,
                centroid_direction: centroid.into(),
                assignment: Assignment::Unassigned,
            });
        }
        i = last + 1;
    }
    Ok(fixations)
}

/// Assigns one fixation to an object at its midpoint frame.
///
/// Candidates are observed objects within [`ASSIGN_MAX_DISTANCE_M`] whose
/// silhouette is available. Containment beats boundary proximity; ties
/// break on distance, then boundary angle, then object id, so the result
/// is deterministic.
pub fn assign_fixation_object(
    recording: &Recording,
    fixation: &FixationEvent,
    tolerance_deg: f64,
) -> Assignment {
    let Some(frame) = recording.frame_nearest(fixation.midpoint_ns()) else {
        return Assignment::Unassigned;
    };
    assign_in_frame(recording, frame, &fixation.centroid_vec(), tolerance_deg)
}

fn assign_in_frame(
    recording: &Recording,
    frame: &Frame,
    gaze_dir: &Vector3<f64>,
    tolerance_deg: f64,
) -> Assignment {
    let gaze_pt = match direction_to_angular(gaze_dir) {
        Ok(pt) => pt,
        Err(_) => return Assignment::Unassigned,
    };

    let mut contained: Option<(f64, ObjectId)> = None;
    let mut near: Option<(f64, f64, ObjectId)> = None;
    for obs in &frame.observations {
        let distance_m = match recording.object_distance(frame, &obs.id) {
            Ok(d) => d,
            Err(_) => continue,
        };
        if distance_m > ASSIGN_MAX_DISTANCE_M {
            continue;
        }
        let Some(poly) = recording.silhouette_of(frame, obs) else {
            continue;
        };
        if poly.contains(&gaze_pt) {
            let key = (distance_m, obs.id.clone());
            if contained.as_ref().is_none_or(|best| lt2(&key, best)) {
                contained = Some(key);
            }
        } else {
            let boundary = poly.boundary_distance_deg(&gaze_pt);
            if boundary <= tolerance_deg {
                let key = (boundary, distance_m, obs.id.clone());
                if near.as_ref().is_none_or(|best| lt3(&key, best)) {
                    near = Some(key);
                }
            }
        }
    }

    if let Some((distance_m, object_id)) = contained {
        Assignment::Contained {
            object_id,
            distance_m,
        }
    } else if let Some((boundary_deg, distance_m, object_id)) = near {
        Assignment::NearBoundary {
            object_id,
            boundary_deg,
            distance_m,
        }
    } else {
        Assignment::Unassigned
    }
}

fn lt2(a: &(f64, ObjectId), b: &(f64, ObjectId)) -> bool {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)).is_lt()
}

fn lt3(a: &(f64, f64, ObjectId), b: &(f64, f64, ObjectId)) -> bool {
    a.0.total_cmp(&b.0)
        .then_with(|| a.1.total_cmp(&b.1))
        .then_with(|| a.2.cmp(&b.2))
        .is_lt()
}

/// Detection plus assignment over a whole recording.
pub fn build_scanpath(
    recording: &Recording,
    config: &DetectorConfig,
    tolerance_deg: f64,
) -> Result<Scanpath, GazeError> {
    let samples = recording.gaze_samples();
    let mut fixations = detect_fixations(&samples, config)?;
    for fixation in &mut fixations {
        fixation.assignment = assign_fixation_object(recording, fixation, tolerance_deg);
    }
    Ok(Scanpath { fixations })
}

/// Intersection-over-union of two closed time intervals.
pub fn interval_iou(a: (i64, i64), b: (i64, i64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0) as f64;
    let union = (a.1 - a.0 + b.1 - b.0) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Greedy one-to-one matching of detected to reference intervals by
/// descending IoU, keeping only pairs at or above `min_iou`. Returns
/// (detected index, reference index) pairs sorted by detected index.
pub fn match_intervals_iou(
    detected: &[(i64, i64)],
    reference: &[(i64, i64)],
    min_iou: f64,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, d) in detected.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            let iou = interval_iou(*d, *r);
            if iou >= min_iou {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut used_d = vec![false; detected.len()];
    let mut used_r = vec![false; reference.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_d[i] && !used_r[j] {
            used_d[i] = true;
            used_r[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}
