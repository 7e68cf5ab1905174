//! Fast self-contained oracle checks, runnable from the CLI.
//!
//! Each check pins a value that was computed independently of the library
//! code (closed-form constants, brute-force counterparts), so a regression
//! in the numeric kernels is caught even without the full test suite.

use nalgebra::Vector3;

use crate::analysis::{chi_square_uniform, percentile};
use crate::experiments::bootstrap_ci;
use crate::geometry::{
    area_equivalent_radius, direction_to_angular, project_object, AngularPoint, AngularPolygon,
    Projection, SPHERE_SILHOUETTE_VERTICES,
};
use crate::scene::{ObjectId, ObjectShape, Pose};
use crate::vlm::{
    parse_answer, MockClient, MockStrategy, PriorFixation, QueryPayload, Question, VlmClient,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn approx(name: &'static str, got: f64, want: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: (got - want).abs() <= tol,
        detail: format!("got {got:.12}, want {want:.12} (tol {tol:e})"),
    }
}

fn boolean(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Runs every check and returns the results in a stable order.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check_angular_projection(),
        check_area_equivalent_radius(),
        check_sphere_silhouette(),
        check_minimal_half_width(),
        check_rasterization_agreement(),
        check_percentile(),
        check_chi_square(),
        check_bootstrap_degenerate(),
        check_answer_extraction(),
        check_mock_determinism(),
    ]
}

fn check_angular_projection() -> CheckResult {
    // atan(0.5) in degrees, computed independently.
    let p = direction_to_angular(&Vector3::new(0.5, 0.0, 1.0)).unwrap();
    approx("angular-projection", p.az_deg, 26.56505117707799, 1e-9)
}

fn check_area_equivalent_radius() -> CheckResult {
    // sqrt(100 / pi).
    let r = area_equivalent_radius(100.0).unwrap();
    approx("area-equivalent-radius", r, 5.641895835477563, 1e-12)
}

fn check_sphere_silhouette() -> CheckResult {
    // A 0.1 m sphere at 1 m subtends asin(0.1) = 5.739170477266786 deg.
    let pose = Pose {
        position: [0.0, 0.0, 1.0],
        orientation: [1.0, 0.0, 0.0, 0.0],
    };
    let camera = crate::synth::default_camera();
    let projection = project_object(
        &camera,
        &pose,
        &ObjectShape::Sphere { radius_m: 0.1 },
        &ObjectId::new("selftest"),
        SPHERE_SILHOUETTE_VERTICES,
    )
    .unwrap();
    let Projection::Visible(poly) = projection else {
        return boolean(
            "sphere-silhouette-radius",
            false,
            "sphere out of view".into(),
        );
    };
    let want = 5.739170477266786;
    let got = poly.metrics().radius_deg;
    boolean(
        "sphere-silhouette-radius",
        (got - want).abs() / want < 0.02,
        format!("got {got:.6} deg, want {want:.6} deg within 2%"),
    )
}

fn regular_polygon(radius_deg: f64, n: usize) -> AngularPolygon {
    let vertices = (0..n)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / n as f64;
            AngularPoint::new(radius_deg * phi.cos(), radius_deg * phi.sin())
        })
        .collect();
    AngularPolygon::new(ObjectId::new("selftest"), vertices).unwrap()
}

fn check_minimal_half_width() -> CheckResult {
    // Half the width of a regular 64-gon: R * cos(pi / 64).
    let poly = regular_polygon(3.0, 64);
    approx(
        "minimal-half-width",
        poly.half_min_width_deg(),
        2.996386368615517,
        1e-9,
    )
}

/// Grid-count area oracle: fraction of cell centers inside the polygon
/// times the bounding-box area.
fn raster_area_deg2(poly: &AngularPolygon, n: usize) -> f64 {
    let vs = poly.vertices();
    let (mut min_az, mut max_az) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_el, mut max_el) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vs {
        min_az = min_az.min(v.az_deg);
        max_az = max_az.max(v.az_deg);
        min_el = min_el.min(v.el_deg);
        max_el = max_el.max(v.el_deg);
    }
    let (w, h) = (max_az - min_az, max_el - min_el);
    let mut inside = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = AngularPoint::new(
                min_az + (i as f64 + 0.5) / n as f64 * w,
                min_el + (j as f64 + 0.5) / n as f64 * h,
            );
            if poly.contains(&p) {
                inside += 1;
            }
        }
    }
    inside as f64 / (n * n) as f64 * w * h
}

fn check_rasterization_agreement() -> CheckResult {
    // 3-4-5 right triangle: shoelace area is exactly 6 deg^2.
    let poly = AngularPolygon::new(
        ObjectId::new("selftest"),
        vec![
            AngularPoint::new(0.0, 0.0),
            AngularPoint::new(4.0, 0.0),
            AngularPoint::new(0.0, 3.0),
        ],
    )
    .unwrap();
    let exact = poly.area_deg2();
    let raster = raster_area_deg2(&poly, 500);
    boolean(
        "rasterization-agreement",
        (exact - 6.0).abs() < 1e-12 && (raster - exact).abs() / exact < 0.02,
        format!("shoelace {exact:.6}, raster {raster:.6}"),
    )
}

fn check_percentile() -> CheckResult {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    approx(
        "percentile-interpolation",
        percentile(&values, 90.0).unwrap(),
        90.1,
        1e-12,
    )
}

fn check_chi_square() -> CheckResult {
    let r = chi_square_uniform(&[10, 20, 30, 40]).unwrap();
    approx("chi-square-uniform", r.statistic, 20.0, 1e-12)
}

fn check_bootstrap_degenerate() -> CheckResult {
    let (lo, hi) = bootstrap_ci(&vec![1.0; 30], 0.95, 400, 1).unwrap();
    boolean(
        "bootstrap-degenerate",
        lo == 1.0 && hi == 1.0,
        format!("all-ones CI ({lo}, {hi}), want (1, 1)"),
    )
}

fn check_answer_extraction() -> CheckResult {
    let visible = vec!["red mug".to_string(), "blue book".to_string()];
    let raw = r#"Of course. {"answer": " Blue Book "} is my guess."#;
    match parse_answer(raw, &visible) {
        Ok(answer) => boolean(
            "answer-extraction",
            answer.chosen == "blue book",
            format!("chose {:?}", answer.chosen),
        ),
        Err(err) => boolean("answer-extraction", false, err.to_string()),
    }
}

fn check_mock_determinism() -> CheckResult {
    let payload = QueryPayload::new(
        "label-card:a|b|c".into(),
        vec!["a".into(), "b".into(), "c".into()],
        vec![PriorFixation {
            object_name: "b".into(),
            duration_ms: 200.0,
            ended_s_ago: 1.0,
        }],
        Question::E1,
    )
    .unwrap();
    let x = MockClient::new(MockStrategy::UniformRandom, 0.0, 12).unwrap();
    let y = MockClient::new(MockStrategy::UniformRandom, 0.0, 12).unwrap();
    let agree = (0..10).all(|trial| {
        x.query(&payload, trial).unwrap().chosen == y.query(&payload, trial).unwrap().chosen
    });
    boolean(
        "mock-determinism",
        agree,
        "10 trials compared across two identically seeded clients".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let results = run_selftest();
        assert_eq!(results.len(), 10);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn check_names_are_unique() {
        let results = run_selftest();
        let names: std::collections::HashSet<_> = results.iter().map(|r| r.name).collect();
        assert_eq!(names.len(), results.len());
    }
}
