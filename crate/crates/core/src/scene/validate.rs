//! Structural validation of loaded recordings.
//!
//! `validate` collects every violation rather than stopping at the first,
//! so one pass over a broken file reports all problems. Codes are stable
//! machine-readable identifiers; messages carry the offending values.

use serde::Serialize;

use super::Recording;

const UNIT_TOLERANCE: f64 = 1e-6;
/// Allowed relative deviation of the median frame interval from 1/rate.
const INTERVAL_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    QuatNotUnit,
    GazeNotUnit,
    TimestampsNotIncreasing,
    UnknownObjectId,
    DuplicateObjectId,
    DuplicateObjectName,
    DuplicateObservation,
    NonpositiveDimension,
    BadSampleRate,
    FrameIntervalMismatch,
    InteractionInvalidInterval,
    SilhouetteDegenerate,
    NonFiniteValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// Checks a recording and returns all violations found, in a stable order
/// (catalog first, then frames in time order, then interactions).
pub fn validate(recording: &Recording) -> Vec<Violation> {
    let mut out = Vec::new();
    check_header(recording, &mut out);
    check_catalog(recording, &mut out);
    check_frames(recording, &mut out);
    check_interactions(recording, &mut out);
    out
}

fn check_header(recording: &Recording, out: &mut Vec<Violation>) {
    let rate = recording.sample_rate_hz;
    if !(rate.is_finite() && rate > 0.0) {
        out.push(Violation::new(
            ViolationCode::BadSampleRate,
            format!("sample_rate_hz must be finite and positive, got {rate}"),
        ));
        return;
    }
    if recording.frames.len() < 2 {
        return;
    }
    let mut diffs: Vec<i64> = recording
        .frames
        .windows(2)
        .map(|w| w[1].t_ns - w[0].t_ns)
        .filter(|&d| d > 0)
        .collect();
    if diffs.is_empty() {
        return;
    }
    diffs.sort_unstable();
    let mid = diffs.len() / 2;
    let median = if diffs.len().is_multiple_of(2) {
        (diffs[mid - 1] + diffs[mid]) as f64 / 2.0
    } else {
        diffs[mid] as f64
    };
    let expected = 1e9 / rate;
    if (median - expected).abs() > INTERVAL_TOLERANCE * expected {
        out.push(Violation::new(
            ViolationCode::FrameIntervalMismatch,
            format!(
                "median frame interval {median:.0} ns differs from 1/sample_rate = \
                 {expected:.0} ns by more than {:.0}%",
                INTERVAL_TOLERANCE * 100.0
            ),
        ));
    }
}

fn check_catalog(recording: &Recording, out: &mut Vec<Violation>) {
    let mut seen_ids = std::collections::HashSet::new();
    let mut seen_names = std::collections::HashSet::new();
    for entry in &recording.catalog {
        if !seen_ids.insert(&entry.id) {
            out.push(Violation::new(
                ViolationCode::DuplicateObjectId,
                format!("catalog id {} appears more than once", entry.id),
            ));
        }
        if !seen_names.insert(entry.name.as_str()) {
            out.push(Violation::new(
                ViolationCode::DuplicateObjectName,
                format!("catalog name {:?} appears more than once", entry.name),
            ));
        }
        for dim in entry.shape.dims() {
            if !(dim.is_finite() && dim > 0.0) {
                out.push(Violation::new(
                    ViolationCode::NonpositiveDimension,
                    format!("object {} has non-positive dimension {dim}", entry.id),
                ));
            }
        }
    }
}

fn check_frames(recording: &Recording, out: &mut Vec<Violation>) {
    let known: std::collections::HashSet<_> = recording.catalog.iter().map(|e| &e.id).collect();
    let mut prev_t: Option<i64> = None;
    for frame in &recording.frames {
        let t = frame.t_ns;
        if let Some(prev) = prev_t {
            if t <= prev {
                out.push(Violation::new(
                    ViolationCode::TimestampsNotIncreasing,
                    format!("frame at t_ns = {t} does not follow previous t_ns = {prev}"),
                ));
            }
        }
        prev_t = Some(t);

        check_finite(&frame.device_pose.position, t, "device.pos", out);
        check_finite(&frame.device_pose.orientation, t, "device.quat", out);
        check_finite(&frame.gaze, t, "gaze", out);
        check_unit_quat(frame.device_pose.quat_norm(), t, "device", out);

        let gaze_norm = (frame.gaze.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if gaze_norm.is_finite() && (gaze_norm - 1.0).abs() > UNIT_TOLERANCE {
            out.push(Violation::new(
                ViolationCode::GazeNotUnit,
                format!("gaze at t_ns = {t} has norm {gaze_norm}"),
            ));
        }

        let mut seen = std::collections::HashSet::new();
        for obs in &frame.observations {
            if !known.contains(&obs.id) {
                out.push(Violation::new(
                    ViolationCode::UnknownObjectId,
                    format!(
                        "frame at t_ns = {t} observes {} which is not in the catalog",
                        obs.id
                    ),
                ));
            }
            if !seen.insert(&obs.id) {
                out.push(Violation::new(
                    ViolationCode::DuplicateObservation,
                    format!("frame at t_ns = {t} observes {} more than once", obs.id),
                ));
            }
            check_finite(&obs.pos, t, "object pos", out);
            check_finite(&obs.quat, t, "object quat", out);
            check_unit_quat(obs.pose().quat_norm(), t, obs.id.as_str(), out);
            if let Some(stored) = &obs.silhouette {
                let verts = stored
                    .iter()
                    .map(|&[az, el]| crate::geometry::AngularPoint::new(az, el))
                    .collect();
                if let Err(e) = crate::geometry::AngularPolygon::new(obs.id.clone(), verts) {
                    out.push(Violation::new(
                        ViolationCode::SilhouetteDegenerate,
                        format!("silhouette of {} at t_ns = {t} is invalid: {e}", obs.id),
                    ));
                }
            }
        }
    }
}

fn check_interactions(recording: &Recording, out: &mut Vec<Violation>) {
    let known: std::collections::HashSet<_> = recording.catalog.iter().map(|e| &e.id).collect();
    for event in &recording.interactions {
        if !known.contains(&event.object_id) {
            out.push(Violation::new(
                ViolationCode::UnknownObjectId,
                format!(
                    "interaction references {} which is not in the catalog",
                    event.object_id
                ),
            ));
        }
        if event.start_ns >= event.end_ns {
            out.push(Violation::new(
                ViolationCode::InteractionInvalidInterval,
                format!(
                    "interaction with {} has start_ns = {} >= end_ns = {}",
                    event.object_id, event.start_ns, event.end_ns
                ),
            ));
        }
    }
}

fn check_finite(values: &[f64], t_ns: i64, field: &str, out: &mut Vec<Violation>) {
    if values.iter().any(|v| !v.is_finite()) {
        out.push(Violation::new(
            ViolationCode::NonFiniteValue,
            format!("{field} at t_ns = {t_ns} contains a non-finite value"),
        ));
    }
}

fn check_unit_quat(norm: f64, t_ns: i64, what: &str, out: &mut Vec<Violation>) {
    if norm.is_finite() && (norm - 1.0).abs() > UNIT_TOLERANCE {
        out.push(Violation::new(
            ViolationCode::QuatNotUnit,
            format!("{what} quaternion at t_ns = {t_ns} has norm {norm}"),
        ));
    }
}
