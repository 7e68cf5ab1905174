//! Scene model: recordings of device pose, gaze, and tracked objects.
//!
//! A recording is a JSON Lines file (header, frame lines, interaction
//! trailer) plus an in-memory form with validation. Object silhouettes may
//! be stored per frame or recomputed on demand from catalog shapes; stored
//! silhouettes win when both are possible.

mod format;
mod validate;

pub use format::{load_recording, parse_recording, save_recording, save_recording_path, LoadError};
pub use validate::{validate, Violation, ViolationCode};

use std::fmt;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angular_distance, project_object, AngularPoint, AngularPolygon, CameraModel, Projection,
    SPHERE_SILHOUETTE_VERTICES,
};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("object {id} not observed in frame at t_ns = {t_ns}")]
    ObjectNotInFrame { id: ObjectId, t_ns: i64 },
}

/// Opaque object identifier, unique within a recording's catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Rigid pose; quaternion stored as (w, x, y, z) and kept unit-norm to
/// within 1e-6 by validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    #[serde(rename = "pos")]
    pub position: [f64; 3],
    #[serde(rename = "quat")]
    pub orientation: [f64; 4],
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: [0.0, 0.0, 0.0],
            orientation: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn position_vec(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.orientation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    pub fn quat_norm(&self) -> f64 {
        let [w, x, y, z] = self.orientation;
        (w * w + x * x + y * y + z * z).sqrt()
    }

    /// Maps a point from this pose's local frame to the parent frame.
    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * local + self.position_vec()
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, parent: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().inverse() * (parent - self.position_vec())
    }

    /// Expresses `other` (same parent frame) relative to this pose.
    pub fn to_local(&self, other: &Pose) -> Pose {
        let r_inv = self.rotation().inverse();
        let pos = r_inv * (other.position_vec() - self.position_vec());
        let q = r_inv * other.rotation();
        Pose {
            position: pos.into(),
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

/// Physical shape used to reconstruct silhouettes.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectShape {
    Sphere { radius_m: f64 },
    Box { extents_m: [f64; 3] },
}

impl ObjectShape {
    pub fn dims(&self) -> Vec<f64> {
        match self {
            ObjectShape::Sphere { radius_m } => vec![*radius_m],
            ObjectShape::Box { extents_m } => extents_m.to_vec(),
        }
    }

    /// Radius of the circumscribed sphere.
    pub fn bounding_radius_m(&self) -> f64 {
        match self {
            ObjectShape::Sphere { radius_m } => *radius_m,
            ObjectShape::Box { extents_m } => Vector3::from(*extents_m).norm() / 2.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeRecord {
    kind: String,
    dims: Vec<f64>,
}

impl Serialize for ObjectShape {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let record = match self {
            ObjectShape::Sphere { .. } => ShapeRecord {
                kind: "sphere".into(),
                dims: self.dims(),
            },
            ObjectShape::Box { .. } => ShapeRecord {
                kind: "box".into(),
                dims: self.dims(),
            },
        };
        record.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ObjectShape {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let record = ShapeRecord::deserialize(deserializer)?;
        match (record.kind.as_str(), record.dims.as_slice()) {
            ("sphere", [r]) => Ok(ObjectShape::Sphere { radius_m: *r }),
            ("box", [x, y, z]) => Ok(ObjectShape::Box {
                extents_m: [*x, *y, *z],
            }),
            ("sphere", dims) => Err(serde::de::Error::custom(format!(
                "sphere expects 1 dim, got {}",
                dims.len()
            ))),
            ("box", dims) => Err(serde::de::Error::custom(format!(
                "box expects 3 dims, got {}",
                dims.len()
            ))),
            (kind, _) => Err(serde::de::Error::custom(format!(
                "unknown shape kind {kind:?}"
            ))),
        }
    }
}

/// Catalog entry: identity plus shape for one tracked object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectCatalogEntry {
    pub id: ObjectId,
    pub name: String,
    pub shape: ObjectShape,
}

/// Per-frame observation of one object, pose in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectObservation {
    pub id: ObjectId,
    pub pos: [f64; 3],
    pub quat: [f64; 4],
    /// Stored silhouette vertices as (az_deg, el_deg) pairs, if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub silhouette: Option<Vec<[f64; 2]>>,
}

impl ObjectObservation {
    pub fn pose(&self) -> Pose {
        Pose {
            position: self.pos,
            orientation: self.quat,
        }
    }
}

/// One sample: device pose and gaze direction plus visible objects.
/// `gaze` is a unit direction in the device frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub t_ns: i64,
    #[serde(rename = "device")]
    pub device_pose: Pose,
    pub gaze: [f64; 3],
    #[serde(rename = "objects")]
    pub observations: Vec<ObjectObservation>,
    /// Optional external image path, used only for agent query payloads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

/// Hand-object interaction interval from the recording trailer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionEvent {
    #[serde(rename = "id")]
    pub object_id: ObjectId,
    pub start_ns: i64,
    pub end_ns: i64,
}

/// A full egocentric recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub recording_id: String,
    pub sample_rate_hz: f64,
    pub camera: CameraModel,
    pub task_label: String,
    /// Header flag: true when frame observations carry silhouettes.
    pub silhouettes_stored: bool,
    pub catalog: Vec<ObjectCatalogEntry>,
    pub frames: Vec<Frame>,
    pub interactions: Vec<InteractionEvent>,
}

impl Recording {
    pub fn catalog_entry(&self, id: &ObjectId) -> Option<&ObjectCatalogEntry> {
        self.catalog.iter().find(|e| &e.id == id)
    }

    pub fn object_name(&self, id: &ObjectId) -> Option<&str> {
        self.catalog_entry(id).map(|e| e.name.as_str())
    }

    /// Frame whose timestamp is nearest to `t_ns`; ties pick the earlier
    /// frame. Requires frames sorted by time (validation enforces it).
    pub fn frame_nearest(&self, t_ns: i64) -> Option<&Frame> {
        if self.frames.is_empty() {
            return None;
        }
        let idx = self.frames.partition_point(|f| f.t_ns < t_ns);
        let candidates = [idx.checked_sub(1), (idx < self.frames.len()).then_some(idx)];
        candidates
            .into_iter()
            .flatten()
            .min_by_key(|&i| ((self.frames[i].t_ns - t_ns).abs(), i))
            .map(|i| &self.frames[i])
    }

    /// Euclidean device-to-object distance within one frame, in meters.
    pub fn object_distance(&self, frame: &Frame, id: &ObjectId) -> Result<f64, SceneError> {
        let obs = frame
            .observations
            .iter()
            .find(|o| &o.id == id)
            .ok_or_else(|| SceneError::ObjectNotInFrame {
                id: id.clone(),
                t_ns: frame.t_ns,
            })?;
        Ok((obs.pose().position_vec() - frame.device_pose.position_vec()).norm())
    }

    /// Direction from the device to an observed object, in the device frame.
    pub fn object_direction(&self, frame: &Frame, obs: &ObjectObservation) -> Vector3<f64> {
        frame.device_pose.rotation().inverse()
            * (obs.pose().position_vec() - frame.device_pose.position_vec())
    }

    /// True when the object's center direction lies within the camera FOV.
    pub fn in_fov(&self, frame: &Frame, obs: &ObjectObservation) -> bool {
        let dir = self.object_direction(frame, obs);
        match angular_distance(&dir, &Vector3::z()) {
            Ok(sep) => sep <= self.camera.max_fov_deg(),
            Err(_) => false,
        }
    }

    /// Silhouette for one observation: the stored polygon when present,
    /// otherwise a fresh projection from the catalog shape. `None` when the
    /// object is out of view or the silhouette cannot be reconstructed.
    pub fn silhouette_of(&self, frame: &Frame, obs: &ObjectObservation) -> Option<AngularPolygon> {
        if let Some(stored) = &obs.silhouette {
            let verts = stored
                .iter()
                .map(|&[az, el]| AngularPoint::new(az, el))
                .collect();
            return AngularPolygon::new(obs.id.clone(), verts).ok();
        }
        let entry = self.catalog_entry(&obs.id)?;
        let pose_cam = frame.device_pose.to_local(&obs.pose());
        match project_object(
            &self.camera,
            &pose_cam,
            &entry.shape,
            &obs.id,
            SPHERE_SILHOUETTE_VERTICES,
        ) {
            Ok(Projection::Visible(poly)) => Some(poly),
            _ => None,
        }
    }

    /// Gaze samples as (t_ns, direction) pairs.
    pub fn gaze_samples(&self) -> Vec<(i64, [f64; 3])> {
        self.frames.iter().map(|f| (f.t_ns, f.gaze)).collect()
    }
}
