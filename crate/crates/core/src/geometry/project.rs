use nalgebra::Vector3;

use super::{
    angular_distance, direction_to_angular, AngularPoint, AngularPolygon, CameraModel,
    GeometryError,
};
use crate::scene::{ObjectId, ObjectShape, Pose};

/// Default vertex count for sphere silhouette n-gons.
pub const SPHERE_SILHOUETTE_VERTICES: usize = 32;

/// Outcome of projecting an object into angular coordinates.
///
/// `OutOfView` means the object's center direction exceeds the camera's
/// `max_fov_deg`; partial visibility at the field edge is not modeled.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Visible(AngularPolygon),
    OutOfView,
}

/// Projects an object silhouette. `pose` places the object in the camera
/// frame (+Z forward). Spheres project to a regular n-gon of angular radius
/// `asin(r / d)`; boxes to the convex hull of their 8 projected corners.
pub fn project_object(
    camera: &CameraModel,
    pose: &Pose,
    shape: &ObjectShape,
    object_id: &ObjectId,
    sphere_vertices: usize,
) -> Result<Projection, GeometryError> {
    let center = pose.position_vec();
    let d = center.norm();
    match shape {
        ObjectShape::Sphere { radius_m } => {
            if radius_m.is_nan() || *radius_m <= 0.0 {
                return Err(GeometryError::DegenerateProjection(
                    "sphere radius must be positive",
                ));
            }
            if d <= *radius_m {
                return Err(GeometryError::CameraInsideObject {
                    distance_m: d,
                    radius_m: *radius_m,
                });
            }
            if angular_distance(&center, &Vector3::z())? > camera.max_fov_deg() {
                return Ok(Projection::OutOfView);
            }
            if sphere_vertices < 3 {
                return Err(GeometryError::DegeneratePolygon {
                    vertices: sphere_vertices,
                });
            }
            // Regular n-gon drawn directly in (az, el) coordinates around the
            // center direction, so the angular radius is asin(r/d) by
            // construction everywhere in the field of view.
            let rho_deg = (radius_m / d).asin().to_degrees();
            let c = direction_to_angular(&center)?;
            let mut verts = Vec::with_capacity(sphere_vertices);
            for k in 0..sphere_vertices {
                let phi = std::f64::consts::TAU * k as f64 / sphere_vertices as f64;
                verts.push(AngularPoint::new(
                    c.az_deg + rho_deg * phi.cos(),
                    c.el_deg + rho_deg * phi.sin(),
                ));
            }
            Ok(Projection::Visible(AngularPolygon::new(
                object_id.clone(),
                verts,
            )?))
        }
        ObjectShape::Box { extents_m } => {
            let half_diag = Vector3::from(*extents_m).norm() / 2.0;
            // Camera origin inside the box: check in the object's own frame.
            let origin_local = pose.inverse_transform_point(&Vector3::zeros());
            if origin_local.x.abs() <= extents_m[0] / 2.0
                && origin_local.y.abs() <= extents_m[1] / 2.0
                && origin_local.z.abs() <= extents_m[2] / 2.0
            {
                return Err(GeometryError::CameraInsideObject {
                    distance_m: d,
                    radius_m: half_diag,
                });
            }
            if angular_distance(&center, &Vector3::z())? > camera.max_fov_deg() {
                return Ok(Projection::OutOfView);
            }
            let mut corners = Vec::with_capacity(8);
            for sx in [-0.5, 0.5] {
                for sy in [-0.5, 0.5] {
                    for sz in [-0.5, 0.5] {
                        let local =
                            Vector3::new(sx * extents_m[0], sy * extents_m[1], sz * extents_m[2]);
                        let cam = pose.transform_point(&local);
                        if cam.z <= 1e-9 {
                            return Err(GeometryError::DegenerateProjection(
                                "box corner behind the camera plane",
                            ));
                        }
                        corners.push(direction_to_angular(&cam)?);
                    }
                }
            }
            let hull = super::convex_hull(&corners);
            if hull.len() < 3 {
                return Err(GeometryError::DegenerateProjection(
                    "box silhouette collapses to a line",
                ));
            }
            Ok(Projection::Visible(AngularPolygon::new(
                object_id.clone(),
                hull,
            )?))
        }
    }
}
