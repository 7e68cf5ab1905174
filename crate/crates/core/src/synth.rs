//! Synthetic recording generator with exact ground truth.
//!
//! Generated scenes keep the device static at the origin and place static
//! objects on a spherical shell inside the camera field of view. The gaze
//! signal alternates dwell periods on object centers (with tangent-plane
//! jitter) and constant-velocity saccades between targets. Target
//! separation is kept large enough that saccades always exceed the default
//! velocity threshold at the default sample rate, so detection ground truth
//! is unambiguous.
//!
//! Alongside each recording the generator produces a [`GroundTruth`]
//! sidecar with the intended fixation intervals and interaction onsets,
//! which evaluation code treats as the reference.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::CameraModel;
use crate::rng::{seeded_rng, standard_normal};
use crate::scene::{
    Frame, InteractionEvent, ObjectCatalogEntry, ObjectId, ObjectObservation, ObjectShape, Pose,
    Recording,
};

/// Minimum angular separation between object centers. At 30 Hz a 12 degree
/// saccade spanning one sample interval moves at ~360 deg/s, far above the
/// 100 deg/s detection threshold, so fixation boundaries stay crisp.
pub const MIN_SEPARATION_DEG: f64 = 12.0;
/// Extra clearance between silhouettes and between silhouette and FOV edge.
const PLACEMENT_MARGIN_DEG: f64 = 1.0;
const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

const COLORS: [&str; 8] = [
    "red", "blue", "green", "yellow", "black", "white", "orange", "purple",
];
const NOUNS: [&str; 10] = [
    "mug", "notebook", "stapler", "bottle", "phone", "keyboard", "plant", "clock", "lamp",
    "scissors",
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error("could not place {placed} objects after {attempts} attempts; loosen ranges or reduce n_objects")]
    PlacementFailed { placed: usize, attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_objects: usize,
    /// Object scale range in meters (sphere radius, box edge length).
    pub size_range_m: (f64, f64),
    /// Device-to-object distance range in meters.
    pub placement_range_m: (f64, f64),
    pub n_fixations: usize,
    pub fixation_duration_ms: (f64, f64),
    pub saccade_duration_ms: (f64, f64),
    /// Per-axis standard deviation of gaze jitter during fixations.
    pub jitter_deg: f64,
    pub sample_rate_hz: f64,
    /// Fraction of fixations followed by a hand-object interaction.
    pub interaction_fraction: f64,
    pub task_label: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_objects: 6,
            size_range_m: (0.03, 0.08),
            placement_range_m: (0.6, 1.5),
            n_fixations: 30,
            fixation_duration_ms: (150.0, 600.0),
            saccade_duration_ms: (30.0, 80.0),
            jitter_deg: 0.3,
            sample_rate_hz: 30.0,
            interaction_fraction: 0.25,
            task_label: "synthetic desk task".into(),
        }
    }
}

impl SynthConfig {
    fn check(&self) -> Result<(), SynthError> {
        let fail = |reason: String| Err(SynthError::InvalidConfig { reason });
        if self.n_objects < 2 {
            return fail(format!(
                "n_objects must be at least 2, got {}",
                self.n_objects
            ));
        }
        if self.n_objects > COLORS.len() * NOUNS.len() {
            return fail(format!(
                "n_objects is capped at {}",
                COLORS.len() * NOUNS.len()
            ));
        }
        if self.n_fixations == 0 {
            return fail("n_fixations must be at least 1".into());
        }
        for (what, (lo, hi), positive) in [
            ("size_range_m", self.size_range_m, true),
            ("placement_range_m", self.placement_range_m, true),
            ("fixation_duration_ms", self.fixation_duration_ms, true),
            ("saccade_duration_ms", self.saccade_duration_ms, true),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && (!positive || lo > 0.0)) {
                return fail(format!("{what} must be a positive range, got ({lo}, {hi})"));
            }
        }
        if !(self.jitter_deg.is_finite() && self.jitter_deg >= 0.0) {
            return fail(format!("jitter_deg must be >= 0, got {}", self.jitter_deg));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return fail(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            ));
        }
        if !(0.0..=1.0).contains(&self.interaction_fraction) {
            return fail(format!(
                "interaction_fraction must be in [0, 1], got {}",
                self.interaction_fraction
            ));
        }
        Ok(())
    }
}

/// Camera intrinsics used for all synthetic recordings.
pub fn default_camera() -> CameraModel {
    CameraModel::new(600.0, [500.0, 500.0], [1000.0, 1000.0], 45.0)
        .expect("default camera parameters are valid")
}

/// Reference annotations produced alongside a synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub true_fixations: Vec<TrueFixation>,
    pub interactions: Vec<TrueInteraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueFixation {
    pub start_ns: i64,
    pub end_ns: i64,
    pub id: ObjectId,
}

/// An interaction onset; the full interval lives in the recording trailer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueInteraction {
    pub t_ns: i64,
    pub id: ObjectId,
}

/// Sidecar path for a recording: `scene.jsonl` maps to `scene.truth.json`.
pub fn truth_path(recording_path: &Path) -> PathBuf {
    recording_path.with_extension("truth.json")
}

pub fn save_ground_truth(truth: &GroundTruth, path: &Path) -> std::io::Result<()> {
    let mut data = serde_json::to_vec_pretty(truth).map_err(std::io::Error::other)?;
    data.push(b'\n');
    std::fs::write(path, data)
}

pub fn load_ground_truth(path: &Path) -> std::io::Result<GroundTruth> {
    let data = std::fs::read(path)?;
    serde_json::from_slice(&data).map_err(std::io::Error::other)
}

struct PlacedObject {
    entry: ObjectCatalogEntry,
    position: Vector3<f64>,
    orientation: [f64; 4],
    /// Angular radius of the bounding sphere as seen from the device.
    angular_radius_deg: f64,
}

/// Generates a recording and its ground truth from a config and seed.
/// Output is a pure function of both arguments.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<(Recording, GroundTruth), SynthError> {
    config.check()?;
    let mut rng = seeded_rng(seed);
    let camera = default_camera();

    let objects = place_objects(config, &camera, &mut rng)?;
    let timeline = build_timeline(config, objects.len(), &mut rng);
    let interactions = build_interactions(config, &timeline, &objects, &mut rng);

    let step_ns = (1e9 / config.sample_rate_hz).round() as i64;
    let end_ns = timeline.last().map(|seg| seg.end_ns).unwrap_or(0);
    let mut frames = Vec::new();
    let mut t = 0;
    while t <= end_ns {
        let gaze = gaze_at(config, &timeline, &objects, t, &mut rng);
        frames.push(Frame {
            t_ns: t,
            device_pose: Pose::identity(),
            gaze: gaze.into(),
            observations: objects
                .iter()
                .map(|o| ObjectObservation {
                    id: o.entry.id.clone(),
                    pos: o.position.into(),
                    quat: o.orientation,
                    silhouette: None,
                })
                .collect(),
            image: None,
        });
        t += step_ns;
    }

    let truth = GroundTruth {
        true_fixations: timeline
            .iter()
            .filter_map(|seg| match seg.kind {
                SegmentKind::Fixation { target } => Some(TrueFixation {
                    start_ns: seg.start_ns,
                    end_ns: seg.end_ns,
                    id: objects[target].entry.id.clone(),
                }),
                SegmentKind::Saccade { .. } => None,
            })
            .collect(),
        interactions: interactions
            .iter()
            .map(|ev| TrueInteraction {
                t_ns: ev.start_ns,
                id: ev.object_id.clone(),
            })
            .collect(),
    };

    let recording = Recording {
        recording_id: format!("synth-{seed:016x}"),
        sample_rate_hz: config.sample_rate_hz,
        camera,
        task_label: config.task_label.clone(),
        silhouettes_stored: false,
        catalog: objects.iter().map(|o| o.entry.clone()).collect(),
        frames,
        interactions,
    };
    Ok((recording, truth))
}

fn place_objects<R: Rng>(
    config: &SynthConfig,
    camera: &CameraModel,
    rng: &mut R,
) -> Result<Vec<PlacedObject>, SynthError> {
    let names = pick_names(config.n_objects, rng);
    let mut placed: Vec<PlacedObject> = Vec::with_capacity(config.n_objects);
    let mut attempts = 0;
    while placed.len() < config.n_objects {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(SynthError::PlacementFailed {
                placed: placed.len(),
                attempts,
            });
        }
        let distance = rng.gen_range(config.placement_range_m.0..=config.placement_range_m.1);
        let size = rng.gen_range(config.size_range_m.0..=config.size_range_m.1);
        let shape = if rng.gen_bool(0.5) {
            ObjectShape::Sphere { radius_m: size }
        } else {
            ObjectShape::Box {
                extents_m: [size, size, size],
            }
        };
        let bounding = shape.bounding_radius_m();
        if bounding >= distance {
            continue;
        }
        let angular_radius_deg = (bounding / distance).asin().to_degrees();
        let max_off_axis = camera.max_fov_deg() - angular_radius_deg - PLACEMENT_MARGIN_DEG;
        if max_off_axis <= 0.0 {
            continue;
        }
        let dir = sample_cap_direction(max_off_axis, rng);
        let min_sep_ok = placed.iter().all(|other| {
            let sep = dir
                .dot(&(other.position / other.position.norm()))
                .clamp(-1.0, 1.0);
            let sep_deg = sep.acos().to_degrees();
            let required = (angular_radius_deg + other.angular_radius_deg + PLACEMENT_MARGIN_DEG)
                .max(MIN_SEPARATION_DEG);
            sep_deg >= required
        });
        if !min_sep_ok {
            continue;
        }
        let i = placed.len();
        placed.push(PlacedObject {
            entry: ObjectCatalogEntry {
                id: ObjectId::new(format!("obj-{i}")),
                name: names[i].clone(),
                shape,
            },
            position: dir * distance,
            orientation: random_unit_quat(rng),
            angular_radius_deg,
        });
    }
    Ok(placed)
}

fn pick_names<R: Rng>(n: usize, rng: &mut R) -> Vec<String> {
    let all: Vec<String> = COLORS
        .iter()
        .flat_map(|c| NOUNS.iter().map(move |o| format!("{c} {o}")))
        .collect();
    rand::seq::index::sample(rng, all.len(), n)
        .into_iter()
        .map(|i| all[i].clone())
        .collect()
}

/// Uniform direction on the spherical cap of half-angle `max_deg` around +Z.
fn sample_cap_direction<R: Rng>(max_deg: f64, rng: &mut R) -> Vector3<f64> {
    let cos_max = max_deg.to_radians().cos();
    let cos_theta = rng.gen_range(cos_max..=1.0);
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = rng.gen_range(0.0..TAU);
    Vector3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta)
}

fn random_unit_quat<R: Rng>(rng: &mut R) -> [f64; 4] {
    // Shoemake's method: uniform over the rotation group.
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    [
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    ]
}

#[derive(Debug, Clone, Copy)]
enum SegmentKind {
    Fixation {
        target: usize,
    },
    /// Constant-velocity sweep between the surrounding fixation targets.
    Saccade {
        from: usize,
        to: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start_ns: i64,
    end_ns: i64,
    kind: SegmentKind,
}

fn build_timeline<R: Rng>(config: &SynthConfig, n_objects: usize, rng: &mut R) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut t = 0_i64;
    let mut prev_target: Option<usize> = None;
    for k in 0..config.n_fixations {
        // Never revisit the previous target back to back; the connecting
        // saccade amplitude must stay at least MIN_SEPARATION_DEG.
        let target = loop {
            let candidate = rng.gen_range(0..n_objects);
            if prev_target != Some(candidate) {
                break candidate;
            }
        };
        if let Some(from) = prev_target {
            let sacc_ns = millis_to_ns(
                rng.gen_range(config.saccade_duration_ms.0..=config.saccade_duration_ms.1),
            );
            segments.push(Segment {
                start_ns: t,
                end_ns: t + sacc_ns,
                kind: SegmentKind::Saccade { from, to: target },
            });
            t += sacc_ns;
        }
        let dur_ns = millis_to_ns(
            rng.gen_range(config.fixation_duration_ms.0..=config.fixation_duration_ms.1),
        );
        segments.push(Segment {
            start_ns: t,
            end_ns: t + dur_ns,
            kind: SegmentKind::Fixation { target },
        });
        t += dur_ns;
        let _ = k;
        prev_target = Some(target);
    }
    segments
}

fn build_interactions<R: Rng>(
    config: &SynthConfig,
    timeline: &[Segment],
    objects: &[PlacedObject],
    rng: &mut R,
) -> Vec<InteractionEvent> {
    let fixations: Vec<&Segment> = timeline
        .iter()
        .filter(|s| matches!(s.kind, SegmentKind::Fixation { .. }))
        .collect();
    let n_events = (config.interaction_fraction * fixations.len() as f64).round() as usize;
    if n_events == 0 {
        return Vec::new();
    }
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(rng, fixations.len(), n_events.min(fixations.len())).into_vec();
    chosen.sort_unstable();

    let mut events: Vec<InteractionEvent> = Vec::new();
    for idx in chosen {
        let seg = fixations[idx];
        let SegmentKind::Fixation { target } = seg.kind else {
            continue;
        };
        let delay_ns = millis_to_ns(rng.gen_range(30.0..=200.0));
        let dur_ns = millis_to_ns(rng.gen_range(200.0..=400.0));
        let mut start = seg.end_ns + delay_ns;
        if let Some(prev) = events.last() {
            if start <= prev.end_ns {
                start = prev.end_ns + millis_to_ns(1.0);
            }
        }
        // A reach that could not begin shortly after the glance is dropped
        // rather than pushed arbitrarily late.
        if start > seg.end_ns + millis_to_ns(500.0) {
            continue;
        }
        events.push(InteractionEvent {
            object_id: objects[target].entry.id.clone(),
            start_ns: start,
            end_ns: start + dur_ns,
        });
    }
    events
}

fn millis_to_ns(ms: f64) -> i64 {
    (ms * 1e6).round() as i64
}

fn gaze_at<R: Rng>(
    config: &SynthConfig,
    timeline: &[Segment],
    objects: &[PlacedObject],
    t_ns: i64,
    rng: &mut R,
) -> Vector3<f64> {
    let center = |i: usize| objects[i].position / objects[i].position.norm();
    let seg = timeline
        .iter()
        .find(|s| t_ns >= s.start_ns && t_ns < s.end_ns)
        .or_else(|| timeline.last())
        .expect("timeline is non-empty");
    match seg.kind {
        SegmentKind::Fixation { target } => {
            let dir = center(target);
            jitter_direction(&dir, config.jitter_deg, rng)
        }
        SegmentKind::Saccade { from, to } => {
            let s = (t_ns - seg.start_ns) as f64 / (seg.end_ns - seg.start_ns) as f64;
            slerp(&center(from), &center(to), s)
        }
    }
}

/// Spherical linear interpolation between unit vectors.
fn slerp(a: &Vector3<f64>, b: &Vector3<f64>, s: f64) -> Vector3<f64> {
    let omega = a.dot(b).clamp(-1.0, 1.0).acos();
    if omega < 1e-9 {
        return *a;
    }
    (a * ((1.0 - s) * omega).sin() + b * (s * omega).sin()) / omega.sin()
}

/// Applies zero-mean tangent-plane jitter to a unit direction. With zero
/// sigma the input is returned untouched.
fn jitter_direction<R: Rng>(dir: &Vector3<f64>, sigma_deg: f64, rng: &mut R) -> Vector3<f64> {
    if sigma_deg == 0.0 {
        return *dir;
    }
    let dx = sigma_deg * standard_normal(rng);
    let dy = sigma_deg * standard_normal(rng);
    rotate_towards(dir, dx.hypot(dy).to_radians(), dy.atan2(dx))
}

/// Rotates `dir` by `alpha` radians towards the tangent direction at
/// in-plane angle `phi`.
pub(crate) fn rotate_towards(dir: &Vector3<f64>, alpha: f64, phi: f64) -> Vector3<f64> {
    if alpha == 0.0 {
        return *dir;
    }
    let (u, v) = crate::geometry::tangent_basis(dir);
    let w = u * phi.cos() + v * phi.sin();
    dir * alpha.cos() + w * alpha.sin()
}

/// Adds angular measurement error to every gaze sample of a recording.
///
/// Each sample is rotated away from its true direction by a magnitude drawn
/// around `error_deg` (mean offset equals `error_deg` up to truncation of
/// the rare negative draws) in a direction that drifts slowly around a
/// per-recording base angle. `error_deg == 0` returns an exact copy.
pub fn perturb_gaze(recording: &Recording, error_deg: f64, seed: u64) -> Recording {
    let mut out = recording.clone();
    if error_deg == 0.0 {
        return out;
    }
    let mut rng = seeded_rng(seed);
    let base_phi = rng.gen_range(0.0..TAU);
    for frame in &mut out.frames {
        let dir = Vector3::from(frame.gaze);
        let alpha_deg = error_deg * (1.0 + 0.2 * standard_normal(&mut rng)).max(0.0);
        let phi = base_phi + 0.1 * standard_normal(&mut rng);
        let rotated = rotate_towards(&dir, alpha_deg.to_radians(), phi);
        frame.gaze = (rotated / rotated.norm()).into();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{collect_size_samples, SpaceConfig};
    use crate::gaze::{build_scanpath, match_intervals_iou, DetectorConfig, DEFAULT_TOLERANCE_DEG};
    use crate::scene::validate;

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig::default();
        let (rec_a, truth_a) = generate(&config, 7).unwrap();
        let (rec_b, truth_b) = generate(&config, 7).unwrap();
        assert_eq!(rec_a, rec_b);
        assert_eq!(truth_a, truth_b);
        let (rec_c, _) = generate(&config, 8).unwrap();
        assert_ne!(rec_a, rec_c);
    }

    #[test]
    fn generated_recordings_pass_validation() {
        for seed in [1, 2, 3] {
            let (rec, _) = generate(&SynthConfig::default(), seed).unwrap();
            let violations = validate(&rec);
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        }
    }

    #[test]
    fn placement_respects_separation_and_fov() {
        let (rec, _) = generate(&SynthConfig::default(), 42).unwrap();
        let frame = &rec.frames[0];
        let dirs: Vec<Vector3<f64>> = frame
            .observations
            .iter()
            .map(|o| {
                let p = Vector3::from(o.pos);
                p / p.norm()
            })
            .collect();
        for i in 0..dirs.len() {
            let off_axis = dirs[i]
                .dot(&Vector3::z())
                .clamp(-1.0, 1.0)
                .acos()
                .to_degrees();
            assert!(
                off_axis < rec.camera.max_fov_deg(),
                "object {i} leaves the FOV"
            );
            for j in i + 1..dirs.len() {
                let sep = dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0).acos().to_degrees();
                assert!(
                    sep >= MIN_SEPARATION_DEG - 1e-9,
                    "objects {i},{j} separated by only {sep:.2} degrees"
                );
            }
        }
    }

    #[test]
    fn names_are_unique_and_ids_sequential() {
        let (rec, _) = generate(&SynthConfig::default(), 3).unwrap();
        let names: std::collections::HashSet<_> =
            rec.catalog.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names.len(), rec.catalog.len());
        for (i, entry) in rec.catalog.iter().enumerate() {
            assert_eq!(entry.id.as_str(), format!("obj-{i}"));
        }
    }

    #[test]
    fn truth_fixations_are_ordered_and_alternate_targets() {
        let (_, truth) = generate(&SynthConfig::default(), 11).unwrap();
        assert_eq!(truth.true_fixations.len(), 30);
        for pair in truth.true_fixations.windows(2) {
            assert!(pair[0].end_ns < pair[1].start_ns);
            assert_ne!(pair[0].id, pair[1].id, "consecutive targets must differ");
        }
    }

    #[test]
    fn interactions_follow_their_fixation() {
        let config = SynthConfig {
            interaction_fraction: 0.5,
            ..SynthConfig::default()
        };
        let (rec, truth) = generate(&config, 5).unwrap();
        assert!(!rec.interactions.is_empty());
        for pair in rec.interactions.windows(2) {
            assert!(pair[0].end_ns < pair[1].start_ns, "interactions overlap");
        }
        for (ev, onset) in rec.interactions.iter().zip(&truth.interactions) {
            assert_eq!(ev.start_ns, onset.t_ns);
            assert_eq!(ev.object_id, onset.id);
            assert!(ev.start_ns < ev.end_ns);
            // Each event trails a same-object fixation by at most 500 ms.
            let fix = truth
                .true_fixations
                .iter()
                .rfind(|f| f.id == ev.object_id && f.end_ns < ev.start_ns)
                .expect("interaction has a preceding fixation on the object");
            assert!(ev.start_ns - fix.end_ns <= millis_to_ns(500.0));
        }
    }

    #[test]
    fn frames_are_regular_and_device_static() {
        let (rec, truth) = generate(&SynthConfig::default(), 9).unwrap();
        let step = (1e9 / rec.sample_rate_hz).round() as i64;
        for (i, frame) in rec.frames.iter().enumerate() {
            assert_eq!(frame.t_ns, i as i64 * step);
            assert_eq!(frame.device_pose, Pose::identity());
        }
        let end = truth.true_fixations.last().unwrap().end_ns;
        let last_t = rec.frames.last().unwrap().t_ns;
        assert!(last_t <= end && end - last_t < step);
    }

    #[test]
    fn zero_jitter_detection_recovers_truth_exactly() {
        let config = SynthConfig {
            jitter_deg: 0.0,
            fixation_duration_ms: (300.0, 600.0),
            ..SynthConfig::default()
        };
        let (rec, truth) = generate(&config, 21).unwrap();
        let scanpath =
            build_scanpath(&rec, &DetectorConfig::default(), DEFAULT_TOLERANCE_DEG).unwrap();
        assert_eq!(scanpath.fixations.len(), truth.true_fixations.len());

        let detected: Vec<(i64, i64)> = scanpath
            .fixations
            .iter()
            .map(|f| (f.start_ns, f.end_ns))
            .collect();
        let reference: Vec<(i64, i64)> = truth
            .true_fixations
            .iter()
            .map(|f| (f.start_ns, f.end_ns))
            .collect();
        let matched = match_intervals_iou(&detected, &reference, 0.5);
        assert_eq!(matched.len(), truth.true_fixations.len());

        for (di, ri) in matched {
            assert_eq!(
                scanpath.fixations[di]
                    .assigned_object()
                    .expect("fixation assigned"),
                &truth.true_fixations[ri].id
            );
        }
    }

    #[test]
    fn default_jitter_keeps_gaze_near_target() {
        let (rec, truth) = generate(&SynthConfig::default(), 33).unwrap();
        let frame0 = &rec.frames[0];
        let target = truth.true_fixations[0].id.clone();
        let obs = frame0.observations.iter().find(|o| o.id == target).unwrap();
        let center = Vector3::from(obs.pos).normalize();
        let gaze = Vector3::from(frame0.gaze);
        let off = gaze.dot(&center).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(
            off < 2.0,
            "first sample {off:.2} degrees from target center"
        );
    }

    #[test]
    fn size_samples_exist_for_generated_scene() {
        let (rec, _) = generate(&SynthConfig::default(), 13).unwrap();
        let scanpath =
            build_scanpath(&rec, &DetectorConfig::default(), DEFAULT_TOLERANCE_DEG).unwrap();
        let collected = collect_size_samples(&rec, &scanpath, &SpaceConfig::default()).unwrap();
        assert!(!collected.samples.is_empty());
        assert_eq!(collected.n_skipped, 0);
    }

    #[test]
    fn perturb_zero_is_identity() {
        let (rec, _) = generate(&SynthConfig::default(), 17).unwrap();
        assert_eq!(perturb_gaze(&rec, 0.0, 99), rec);
    }

    #[test]
    fn perturb_mean_offset_matches_request() {
        let config = SynthConfig {
            n_fixations: 60,
            fixation_duration_ms: (300.0, 600.0),
            ..SynthConfig::default()
        };
        let (rec, _) = generate(&config, 23).unwrap();
        for error_deg in [1.0, 2.0, 4.0] {
            let noisy = perturb_gaze(&rec, error_deg, 555);
            let mut sum = 0.0;
            for (a, b) in rec.frames.iter().zip(&noisy.frames) {
                let ga = Vector3::from(a.gaze);
                let gb = Vector3::from(b.gaze);
                sum += ga.dot(&gb).clamp(-1.0, 1.0).acos().to_degrees();
                assert!((gb.norm() - 1.0).abs() < 1e-9);
            }
            let mean = sum / rec.frames.len() as f64;
            assert!(
                (mean - error_deg).abs() < 0.2,
                "mean offset {mean:.3} for requested {error_deg}"
            );
        }
    }

    #[test]
    fn perturb_is_deterministic_and_seed_sensitive() {
        let (rec, _) = generate(&SynthConfig::default(), 29).unwrap();
        assert_eq!(perturb_gaze(&rec, 1.0, 1), perturb_gaze(&rec, 1.0, 1));
        assert_ne!(perturb_gaze(&rec, 1.0, 1), perturb_gaze(&rec, 1.0, 2));
    }

    #[test]
    fn truth_round_trips_through_sidecar() {
        let (_, truth) = generate(&SynthConfig::default(), 31).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let rec_path = dir.path().join("scene.jsonl");
        let path = truth_path(&rec_path);
        assert_eq!(path.file_name().unwrap(), "scene.truth.json");
        save_ground_truth(&truth, &path).unwrap();
        assert_eq!(load_ground_truth(&path).unwrap(), truth);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let too_few = SynthConfig {
            n_objects: 1,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&too_few, 1),
            Err(SynthError::InvalidConfig { .. })
        ));
        let bad_range = SynthConfig {
            placement_range_m: (1.5, 0.6),
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&bad_range, 1),
            Err(SynthError::InvalidConfig { .. })
        ));
    }
}
