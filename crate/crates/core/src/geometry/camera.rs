use serde::{Deserialize, Serialize};

use super::{AngularPoint, GeometryError};

/// Linear camera with a single focal length in pixels.
///
/// `max_fov_deg` is the half-angle beyond which the planar angular
/// approximation is no longer trusted; both mapping directions reject
/// angles outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    focal_length_px: f64,
    principal_point: [f64; 2],
    resolution: [f64; 2],
    max_fov_deg: f64,
}

impl CameraModel {
    pub fn new(
        focal_length_px: f64,
        principal_point: [f64; 2],
        resolution: [f64; 2],
        max_fov_deg: f64,
    ) -> Result<Self, GeometryError> {
        let invalid = |reason: String| GeometryError::InvalidCamera { reason };
        if !(focal_length_px.is_finite() && focal_length_px > 0.0) {
            return Err(invalid(format!("focal_length_px = {focal_length_px}")));
        }
        if !(resolution[0].is_finite() && resolution[0] > 0.0)
            || !(resolution[1].is_finite() && resolution[1] > 0.0)
        {
            return Err(invalid(format!(
                "resolution = {} x {}",
                resolution[0], resolution[1]
            )));
        }
        for (axis, (p, bound)) in [
            ('x', (principal_point[0], resolution[0])),
            ('y', (principal_point[1], resolution[1])),
        ] {
            if !(p.is_finite() && p >= 0.0 && p <= bound) {
                return Err(invalid(format!(
                    "principal point {axis} = {p} outside [0, {bound}]"
                )));
            }
        }
        if !(max_fov_deg.is_finite() && max_fov_deg > 0.0 && max_fov_deg < 90.0) {
            return Err(invalid(format!("max_fov_deg = {max_fov_deg}")));
        }
        Ok(Self {
            focal_length_px,
            principal_point,
            resolution,
            max_fov_deg,
        })
    }

    pub fn focal_length_px(&self) -> f64 {
        self.focal_length_px
    }

    pub fn principal_point(&self) -> [f64; 2] {
        self.principal_point
    }

    pub fn resolution(&self) -> [f64; 2] {
        self.resolution
    }

    pub fn max_fov_deg(&self) -> f64 {
        self.max_fov_deg
    }

    /// Gnomonic inverse: per-axis angle of the ray through a pixel.
    pub fn pixel_to_angular(&self, px: f64, py: f64) -> Result<AngularPoint, GeometryError> {
        self.check_pixel('x', px, self.resolution[0])?;
        self.check_pixel('y', py, self.resolution[1])?;
        let az = ((px - self.principal_point[0]) / self.focal_length_px)
            .atan()
            .to_degrees();
        let el = ((py - self.principal_point[1]) / self.focal_length_px)
            .atan()
            .to_degrees();
        self.check_angle('x', az)?;
        self.check_angle('y', el)?;
        Ok(AngularPoint::new(az, el))
    }

    /// Forward mapping; exact inverse of [`Self::pixel_to_angular`].
    pub fn angular_to_pixel(&self, p: &AngularPoint) -> Result<(f64, f64), GeometryError> {
        self.check_angle('x', p.az_deg)?;
        self.check_angle('y', p.el_deg)?;
        let px = self.principal_point[0] + self.focal_length_px * p.az_deg.to_radians().tan();
        let py = self.principal_point[1] + self.focal_length_px * p.el_deg.to_radians().tan();
        self.check_pixel('x', px, self.resolution[0])?;
        self.check_pixel('y', py, self.resolution[1])?;
        Ok((px, py))
    }

    fn check_pixel(&self, axis: char, value: f64, bound: f64) -> Result<(), GeometryError> {
        if !(value.is_finite() && (0.0..=bound).contains(&value)) {
            return Err(GeometryError::PixelOutOfBounds { axis, value, bound });
        }
        Ok(())
    }

    fn check_angle(&self, axis: char, angle_deg: f64) -> Result<(), GeometryError> {
        if !(angle_deg.is_finite() && angle_deg.abs() <= self.max_fov_deg) {
            return Err(GeometryError::BeyondFov {
                axis,
                angle_deg,
                max_fov_deg: self.max_fov_deg,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn camera() -> CameraModel {
        CameraModel::new(100.0, [100.0, 100.0], [200.0, 200.0], 60.0).unwrap()
    }

    #[test]
    fn half_focal_offset_gives_atan_half() {
        // 50 px at f = 100 px is atan(0.5) off axis.
        let p = camera().pixel_to_angular(150.0, 100.0).unwrap();
        assert!((p.az_deg - 0.5_f64.atan().to_degrees()).abs() < 1e-9);
        assert!((p.az_deg - 26.565_051_177_077_99).abs() < 1e-9);
        assert!(p.el_deg.abs() < 1e-12);
    }

    #[test]
    fn principal_point_maps_to_origin() {
        let p = camera().pixel_to_angular(100.0, 100.0).unwrap();
        assert_eq!(p.az_deg, 0.0);
        assert_eq!(p.el_deg, 0.0);
    }

    #[test]
    fn out_of_bounds_pixel_names_coordinate() {
        let err = camera().pixel_to_angular(201.0, 10.0).unwrap_err();
        match err {
            GeometryError::PixelOutOfBounds { axis, value, bound } => {
                assert_eq!(axis, 'x');
                assert_eq!(value, 201.0);
                assert_eq!(bound, 200.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(camera().pixel_to_angular(10.0, -0.5).is_err());
    }

    #[test]
    fn fov_cap_is_enforced() {
        // Corner of this sensor sits at atan(1) = 45 deg, beyond a 30 deg cap.
        let cam = CameraModel::new(100.0, [100.0, 100.0], [200.0, 200.0], 30.0).unwrap();
        assert!(matches!(
            cam.pixel_to_angular(200.0, 100.0),
            Err(GeometryError::BeyondFov { axis: 'x', .. })
        ));
        assert!(cam.angular_to_pixel(&AngularPoint::new(31.0, 0.0)).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CameraModel::new(0.0, [1.0, 1.0], [2.0, 2.0], 50.0).is_err());
        assert!(CameraModel::new(100.0, [300.0, 1.0], [200.0, 200.0], 50.0).is_err());
        assert!(CameraModel::new(100.0, [1.0, 1.0], [200.0, 200.0], 90.0).is_err());
        assert!(CameraModel::new(100.0, [1.0, 1.0], [200.0, 200.0], -1.0).is_err());
    }

    proptest! {
        // Round trip through both mappings returns the starting pixel to
        // within 1e-9 px for any in-bounds pixel of a consistent camera.
        #[test]
        fn pixel_round_trip(
            f in 200.0_f64..1500.0,
            w in 400.0_f64..2000.0,
            h in 400.0_f64..2000.0,
            ppx in 0.35_f64..0.65,
            ppy in 0.35_f64..0.65,
            sx in 0.0_f64..1.0,
            sy in 0.0_f64..1.0,
        ) {
            let pp = [w * ppx, h * ppy];
            let corner_x = (pp[0].max(w - pp[0]) / f).atan().to_degrees();
            let corner_y = (pp[1].max(h - pp[1]) / f).atan().to_degrees();
            let fov = (corner_x.max(corner_y) + 1.0).min(89.9);
            let cam = CameraModel::new(f, pp, [w, h], fov).unwrap();
            let (px, py) = (w * sx, h * sy);
            let ang = cam.pixel_to_angular(px, py).unwrap();
            let (qx, qy) = cam.angular_to_pixel(&ang).unwrap();
            prop_assert!((px - qx).abs() < 1e-9);
            prop_assert!((py - qy).abs() < 1e-9);
        }
    }
}
