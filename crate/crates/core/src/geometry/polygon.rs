use serde::{Deserialize, Serialize};

use super::{AngularPoint, GeometryError};
use crate::scene::ObjectId;

/// Hard cap on silhouette vertex counts; bounds memory and the O(n^2)
/// simplicity check when loading untrusted files.
pub const MAX_POLYGON_VERTICES: usize = 512;

/// Silhouette polygon in (azimuth, elevation) degree coordinates.
///
/// Construction guarantees: 3..=512 finite vertices inside the forward
/// hemisphere, and no properly crossing edges. Degenerate (zero-area)
/// polygons are allowed; their metrics are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularPolygon {
    object_id: ObjectId,
    vertices: Vec<AngularPoint>,
}

/// Visual-size summary of one silhouette.
///
/// `radius_deg` is the area-equivalent radius `sqrt(area / pi)` (average
/// perceived extent); `half_min_width_deg` is half the minimal caliper
/// width of the convex hull (worst-case extent, the analogue of an
/// ellipse's semi-minor axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisualSizeMetrics {
    pub area_deg2: f64,
    pub radius_deg: f64,
    pub half_min_width_deg: f64,
}

impl AngularPolygon {
    pub fn new(object_id: ObjectId, vertices: Vec<AngularPoint>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon {
                vertices: vertices.len(),
            });
        }
        if vertices.len() > MAX_POLYGON_VERTICES {
            return Err(GeometryError::TooManyVertices {
                vertices: vertices.len(),
                cap: MAX_POLYGON_VERTICES,
            });
        }
        for (index, v) in vertices.iter().enumerate() {
            if !(v.az_deg.is_finite() && v.el_deg.is_finite()) {
                return Err(GeometryError::NonFiniteVertex { index });
            }
            for value in [v.az_deg, v.el_deg] {
                if value.abs() >= 90.0 {
                    return Err(GeometryError::VertexOutOfRange { index, value });
                }
            }
        }
        if has_proper_self_intersection(&vertices) {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(Self {
            object_id,
            vertices,
        })
    }

    pub fn object_id(&self) -> &ObjectId {
        &self.object_id
    }

    pub fn vertices(&self) -> &[AngularPoint] {
        &self.vertices
    }

    /// Shoelace area in square degrees.
    pub fn area_deg2(&self) -> f64 {
        shoelace_area(&self.vertices).abs()
    }

    /// Half the minimal caliper width of the convex hull, in degrees.
    pub fn half_min_width_deg(&self) -> f64 {
        let hull = convex_hull(&self.vertices);
        minimal_width(&hull) / 2.0
    }

    pub fn metrics(&self) -> VisualSizeMetrics {
        let area = self.area_deg2();
        VisualSizeMetrics {
            area_deg2: area,
            radius_deg: (area / std::f64::consts::PI).sqrt(),
            half_min_width_deg: self.half_min_width_deg(),
        }
    }

    /// Even-odd containment test.
    pub fn contains(&self, p: &AngularPoint) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            if (a.el_deg > p.el_deg) != (b.el_deg > p.el_deg) {
                let t = (p.el_deg - a.el_deg) / (b.el_deg - a.el_deg);
                if p.az_deg < a.az_deg + t * (b.az_deg - a.az_deg) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from a point to the polygon boundary in degree coordinates.
    pub fn boundary_distance_deg(&self, p: &AngularPoint) -> f64 {
        let n = self.vertices.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            best = best.min(point_segment_distance(
                [p.az_deg, p.el_deg],
                [a.az_deg, a.el_deg],
                [b.az_deg, b.el_deg],
            ));
        }
        best
    }
}

/// Area-equivalent radius of a silhouette: the radius of the disc with the
/// same area, `sqrt(area / pi)`.
pub fn area_equivalent_radius(area_deg2: f64) -> Result<f64, GeometryError> {
    if area_deg2.is_nan() || area_deg2 < 0.0 {
        return Err(GeometryError::NegativeArea(area_deg2));
    }
    Ok((area_deg2 / std::f64::consts::PI).sqrt())
}

/// Convex hull by monotone chain; collinear inputs collapse to 2 points.
pub fn convex_hull(points: &[AngularPoint]) -> Vec<AngularPoint> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p.az_deg, p.el_deg]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts
            .into_iter()
            .map(|[az, el]| AngularPoint::new(az, el))
            .collect();
    }

    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };

    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
        .into_iter()
        .map(|[az, el]| AngularPoint::new(az, el))
        .collect()
}

/// Minimal caliper width of a convex hull: the smallest distance between
/// two parallel supporting lines. The minimum is attained with one line
/// flush against a hull edge, so we rotate an antipodal pointer over edges.
fn minimal_width(hull: &[AngularPoint]) -> f64 {
    let h = hull.len();
    if h < 3 {
        return 0.0;
    }
    let pt = |i: usize| [hull[i % h].az_deg, hull[i % h].el_deg];
    let mut best = f64::INFINITY;
    let mut j = 1usize;
    for i in 0..h {
        let a = pt(i);
        let b = pt(i + 1);
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        let dist = |k: usize| {
            let p = pt(k);
            (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])).abs()
        };
        // Advance the antipodal vertex; strictly increasing distances
        // guarantee termination within one lap.
        let mut steps = 0;
        while dist(j + 1) > dist(j) && steps < h {
            j = (j + 1) % h;
            steps += 1;
        }
        best = best.min(dist(j) / len);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

fn shoelace_area(vertices: &[AngularPoint]) -> f64 {
    let n = vertices.len();
    let mut sum = 0.0;
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        sum += a.az_deg * b.el_deg - b.az_deg * a.el_deg;
    }
    sum / 2.0
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let dx = p[0] - (a[0] + t * ab[0]);
    let dy = p[1] - (a[1] + t * ab[1]);
    (dx * dx + dy * dy).sqrt()
}

/// True when two non-adjacent edges properly cross (interiors intersect).
/// Touching endpoints and collinear overlaps are tolerated so that
/// degenerate but harmless polygons still load.
fn has_proper_self_intersection(vertices: &[AngularPoint]) -> bool {
    let n = vertices.len();
    let seg = |i: usize| {
        (
            [vertices[i].az_deg, vertices[i].el_deg],
            [vertices[(i + 1) % n].az_deg, vertices[(i + 1) % n].el_deg],
        )
    };
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        let v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    for i in 0..n {
        for k in i + 1..n {
            // Skip adjacent edges (they share an endpoint by construction).
            if k == i + 1 || (i == 0 && k == n - 1) {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(k);
            let o1 = orient(a, b, c);
            let o2 = orient(a, b, d);
            let o3 = orient(c, d, a);
            let o4 = orient(c, d, b);
            if o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 && o1 != o2 && o3 != o4 {
                return true;
            }
        }
    }
    false
}
