//! Angular geometry for a forward-facing linear camera.
//!
//! All angles are degrees. Pixels map to per-axis angles through the
//! gnomonic inverse `atan((p - c) / f)`, and silhouette areas are plain
//! shoelace areas over (azimuth, elevation) treated as a Euclidean plane.
//! That planar treatment ignores spherical distortion, which stays below
//! roughly 2% inside a 50 degree half-field; [`CameraModel`] caps its
//! `max_fov_deg` well under 90 for exactly this reason.
//!
//! The camera frame is +Z forward along the optical axis, +X right, +Y
//! down, matching image-pixel conventions.

mod camera;
mod polygon;
mod project;

pub use camera::CameraModel;
pub use polygon::{area_equivalent_radius, convex_hull, AngularPolygon, VisualSizeMetrics};
pub use project::{project_object, Projection, SPHERE_SILHOUETTE_VERTICES};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("pixel {axis} = {value} outside [0, {bound}]")]
    PixelOutOfBounds { axis: char, value: f64, bound: f64 },
    #[error("{axis} angle {angle_deg} deg exceeds the {max_fov_deg} deg field of view")]
    BeyondFov {
        axis: char,
        angle_deg: f64,
        max_fov_deg: f64,
    },
    #[error("invalid camera: {reason}")]
    InvalidCamera { reason: String },
    #[error("polygon needs at least 3 vertices, got {vertices}")]
    DegeneratePolygon { vertices: usize },
    #[error("polygon has {vertices} vertices, cap is {cap}")]
    TooManyVertices { vertices: usize, cap: usize },
    #[error("polygon vertex {index} is not finite")]
    NonFiniteVertex { index: usize },
    #[error("polygon vertex {index} at {value} deg is outside the forward hemisphere")]
    VertexOutOfRange { index: usize, value: f64 },
    #[error("polygon edges cross; silhouettes must be simple")]
    SelfIntersecting,
    #[error("area must be non-negative, got {0}")]
    NegativeArea(f64),
    #[error("direction has zero length")]
    ZeroVector,
    #[error("direction points behind the camera")]
    BehindCamera,
    #[error("camera lies inside the object (distance {distance_m} m, radius {radius_m} m)")]
    CameraInsideObject { distance_m: f64, radius_m: f64 },
    #[error("degenerate projection: {0}")]
    DegenerateProjection(&'static str),
}

/// Direction expressed as per-axis angles off the optical axis, in degrees.
///
/// Valid points satisfy `|az_deg| < 90` and `|el_deg| < 90` (forward
/// hemisphere only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularPoint {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl AngularPoint {
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self { az_deg, el_deg }
    }
}

/// Great-circle angle between two directions, in degrees.
pub fn angular_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64, GeometryError> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Camera-frame direction to angular coordinates; requires `z > 0`.
pub fn direction_to_angular(dir: &Vector3<f64>) -> Result<AngularPoint, GeometryError> {
    if dir.z.is_nan() || dir.z <= 0.0 {
        return Err(GeometryError::BehindCamera);
    }
    Ok(AngularPoint::new(
        (dir.x / dir.z).atan().to_degrees(),
        (dir.y / dir.z).atan().to_degrees(),
    ))
}

/// Inverse of [`direction_to_angular`]; returns a unit vector.
pub fn angular_to_direction(p: &AngularPoint) -> Vector3<f64> {
    Vector3::new(
        p.az_deg.to_radians().tan(),
        p.el_deg.to_radians().tan(),
        1.0,
    )
    .normalize()
}

/// Deterministic orthonormal basis (u, v) perpendicular to a unit direction.
pub(crate) fn tangent_basis(dir: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let z = Vector3::z();
    let u = if dir.cross(&z).norm() < 1e-9 {
        Vector3::x()
    } else {
        z.cross(dir).normalize()
    };
    let v = dir.cross(&u).normalize();
    (u, v)
}
