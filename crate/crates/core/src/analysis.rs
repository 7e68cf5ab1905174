//! Interaction-space classification and visual-size distributions.
//!
//! Classifies each observed object into interaction spaces (near, mid,
//! interacted, fixated), accumulates both visual size metrics per space,
//! and renders the accuracy-requirement report: percentiles, histograms,
//! and the share of targets at or above the 3 degree comfort threshold.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::Scanpath;
use crate::scene::{Frame, InteractionEvent, ObjectId, Recording};

/// Angular size above which a target remains selectable by a device with
/// roughly 3 degrees of gaze error.
pub const LARGE_TARGET_THRESHOLD_DEG: f64 = 3.0;
pub const HISTOGRAM_BIN_DEG: f64 = 0.25;
/// Critical value of the chi-square distribution, df = 3, alpha = 0.01.
pub const CHI_SQUARE_CRIT_DF3_P01: f64 = 11.345;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    EmptyInput,
    #[error("quantile must be in [0, 100], got {q}")]
    BadQuantile { q: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("bin width must be positive and finite, got {width}")]
    BadBinWidth { width: f64 },
    #[error("invalid space config: {reason}")]
    InvalidSpaceConfig { reason: String },
    #[error("chi-square needs at least two cells and a positive total")]
    DegenerateTable,
}

/// Distance and time bounds defining the interaction spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub near_max_m: f64,
    pub mid_min_m: f64,
    pub mid_max_m: f64,
    pub fixated_max_m: f64,
    pub interaction_pad_s: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            near_max_m: 1.0,
            mid_min_m: 1.0,
            mid_max_m: 2.0,
            fixated_max_m: 2.0,
            interaction_pad_s: 1.0,
        }
    }
}

impl SpaceConfig {
    pub fn check(&self) -> Result<(), AnalysisError> {
        let ok = self.near_max_m > 0.0
            && self.near_max_m <= self.mid_min_m
            && self.mid_min_m < self.mid_max_m
            && self.fixated_max_m > 0.0
            && self.interaction_pad_s >= 0.0
            && [
                self.near_max_m,
                self.mid_min_m,
                self.mid_max_m,
                self.fixated_max_m,
                self.interaction_pad_s,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(AnalysisError::InvalidSpaceConfig {
                reason: format!("{self:?} violates 0 < near_max <= mid_min < mid_max, pad >= 0"),
            })
        }
    }

    fn pad_ns(&self) -> i64 {
        (self.interaction_pad_s * 1e9).round() as i64
    }
}

/// Interaction-space membership tags. Order is the canonical reporting
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    /// Within arm's reach of the device.
    Near,
    /// A step away.
    Mid,
    /// During a padded hand-object interaction; no distance bound.
    Interacted,
    /// Assigned fixation target, sampled once per fixation at its midpoint
    /// frame.
    Fixated,
}

impl SpaceTag {
    pub const ALL: [SpaceTag; 4] = [
        SpaceTag::Near,
        SpaceTag::Mid,
        SpaceTag::Interacted,
        SpaceTag::Fixated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceTag::Near => "near",
            SpaceTag::Mid => "mid",
            SpaceTag::Interacted => "interacted",
            SpaceTag::Fixated => "fixated",
        }
    }
}

/// One visual-size observation of one object from one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSample {
    pub object_id: ObjectId,
    pub t_ns: i64,
    pub space: SpaceTag,
    pub radius_deg: f64,
    pub half_min_width_deg: f64,
}

/// Frame-local space tags for every observed object. Tags are not mutually
/// exclusive; an object can be near and interacted at once. The fixated
/// tag is scanpath-derived and not produced here.
pub fn classify_spaces(
    frame: &Frame,
    interactions: &[InteractionEvent],
    config: &SpaceConfig,
) -> BTreeMap<ObjectId, BTreeSet<SpaceTag>> {
    let pad = config.pad_ns();
    let device = frame.device_pose.position_vec();
    frame
        .observations
        .iter()
        .map(|obs| {
            let mut tags = BTreeSet::new();
            let distance = (obs.pose().position_vec() - device).norm();
            if distance <= config.near_max_m {
                tags.insert(SpaceTag::Near);
            }
            if distance > config.mid_min_m && distance <= config.mid_max_m {
                tags.insert(SpaceTag::Mid);
            }
            let interacting = interactions.iter().any(|ev| {
                ev.object_id == obs.id
                    && frame.t_ns >= ev.start_ns - pad
                    && frame.t_ns <= ev.end_ns + pad
            });
            if interacting {
                tags.insert(SpaceTag::Interacted);
            }
            (obs.id.clone(), tags)
        })
        .collect()
}

/// Collected samples plus the count of observations that had to be skipped
/// because no silhouette could be produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleCollection {
    pub samples: Vec<SizeSample>,
    pub n_skipped: usize,
}

impl SampleCollection {
    pub fn merge(&mut self, other: SampleCollection) {
        self.samples.extend(other.samples);
        self.n_skipped += other.n_skipped;
    }
}

/// Walks all frames and the scanpath, emitting one sample per
/// (object, frame, space tag). Near/mid/interacted consider every in-view
/// object each frame; fixated emits once per assigned fixation at its
/// midpoint frame, subject to the fixated distance bound.
pub fn collect_size_samples(
    recording: &Recording,
    scanpath: &Scanpath,
    config: &SpaceConfig,
) -> Result<SampleCollection, AnalysisError> {
    config.check()?;
    let mut out = SampleCollection::default();

    for frame in &recording.frames {
        let tags_by_object = classify_spaces(frame, &recording.interactions, config);
        for obs in &frame.observations {
            let tags = &tags_by_object[&obs.id];
            if tags.is_empty() || !recording.in_fov(frame, obs) {
                continue;
            }
            let Some(poly) = recording.silhouette_of(frame, obs) else {
                out.n_skipped += 1;
                continue;
            };
            let metrics = poly.metrics();
            for tag in tags {
                out.samples.push(SizeSample {
                    object_id: obs.id.clone(),
                    t_ns: frame.t_ns,
                    space: *tag,
                    radius_deg: metrics.radius_deg,
                    half_min_width_deg: metrics.half_min_width_deg,
                });
            }
        }
    }

    for fixation in scanpath.assigned() {
        let id = fixation.assigned_object().expect("assigned");
        let Some(frame) = recording.frame_nearest(fixation.midpoint_ns()) else {
            continue;
        };
        let Some(obs) = frame.observations.iter().find(|o| &o.id == id) else {
            out.n_skipped += 1;
            continue;
        };
        let distance = (obs.pose().position_vec() - frame.device_pose.position_vec()).norm();
        if distance > config.fixated_max_m {
            continue;
        }
        let Some(poly) = recording.silhouette_of(frame, obs) else {
            out.n_skipped += 1;
            continue;
        };
        let metrics = poly.metrics();
        out.samples.push(SizeSample {
            object_id: id.clone(),
            t_ns: frame.t_ns,
            space: SpaceTag::Fixated,
            radius_deg: metrics.radius_deg,
            half_min_width_deg: metrics.half_min_width_deg,
        });
    }
    Ok(out)
}

/// Linear-interpolation percentile: rank r = q/100 * (n - 1) over the
/// sorted values, interpolating between the straddling order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(AnalysisError::BadQuantile { q });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite { index });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = r.floor() as usize;
    let frac = r - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

/// Fraction of values at or above `threshold`.
pub fn frac_ge(values: &[f64], threshold: f64) -> Result<f64, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let n_ge = values.iter().filter(|v| **v >= threshold).count();
    Ok(n_ge as f64 / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
}

/// Contiguous fixed-width bins from zero to the largest value; bin i
/// covers [i * width, (i + 1) * width).
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, AnalysisError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(AnalysisError::BadBinWidth { width: bin_width });
    }
    let mut counts: Vec<u64> = Vec::new();
    for (index, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(AnalysisError::NonFinite { index });
        }
        let bin = (v / bin_width).floor() as usize;
        if bin >= counts.len() {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &n)| HistogramBin {
            lo: i as f64 * bin_width,
            hi: (i + 1) as f64 * bin_width,
            n,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

/// Distribution summary for one size metric within one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub percentiles: Percentiles,
    /// Share of samples at or above [`LARGE_TARGET_THRESHOLD_DEG`].
    pub frac_ge_3deg: f64,
    pub histogram: Vec<HistogramBin>,
}

pub fn metric_stats(values: &[f64]) -> Result<MetricStats, AnalysisError> {
    Ok(MetricStats {
        percentiles: Percentiles {
            p10: percentile(values, 10.0)?,
            p25: percentile(values, 25.0)?,
            p50: percentile(values, 50.0)?,
            p75: percentile(values, 75.0)?,
            p90: percentile(values, 90.0)?,
        },
        frac_ge_3deg: frac_ge(values, LARGE_TARGET_THRESHOLD_DEG)?,
        histogram: histogram(values, HISTOGRAM_BIN_DEG)?,
    })
}

/// Per-space block of the report; stats are absent when the space
/// collected no samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceStats {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<MetricStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_min_width: Option<MetricStats>,
}

/// The eye-tracking accuracy-requirement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDistributionReport {
    pub recordings: Vec<String>,
    pub config: SpaceConfig,
    /// Observations dropped because no silhouette could be produced.
    pub n_skipped: usize,
    pub notes: Vec<String>,
    /// All four spaces, empty ones included.
    pub spaces: BTreeMap<SpaceTag, SpaceStats>,
}

/// Builds the report from pooled samples; every space appears even when
/// empty.
pub fn build_report(
    recordings: Vec<String>,
    samples: &[SizeSample],
    n_skipped: usize,
    config: &SpaceConfig,
    notes: Vec<String>,
) -> SizeDistributionReport {
    let mut spaces = BTreeMap::new();
    for tag in SpaceTag::ALL {
        let radii: Vec<f64> = samples
            .iter()
            .filter(|s| s.space == tag)
            .map(|s| s.radius_deg)
            .collect();
        let widths: Vec<f64> = samples
            .iter()
            .filter(|s| s.space == tag)
            .map(|s| s.half_min_width_deg)
            .collect();
        let stats = SpaceStats {
            count: radii.len(),
            radius: metric_stats(&radii).ok(),
            half_min_width: metric_stats(&widths).ok(),
        };
        spaces.insert(tag, stats);
    }
    SizeDistributionReport {
        recordings,
        config: *config,
        n_skipped,
        notes,
        spaces,
    }
}

pub fn render_report_json(report: &SizeDistributionReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// Flat CSV: one row per (space, statistic), `space,statistic,value`.
pub fn render_report_csv(report: &SizeDistributionReport) -> String {
    let mut out = String::from("space,statistic,value\n");
    for (tag, stats) in &report.spaces {
        let space = tag.as_str();
        out.push_str(&format!("{space},count,{}\n", stats.count));
        for (metric, block) in [
            ("radius", &stats.radius),
            ("half_min_width", &stats.half_min_width),
        ] {
            let Some(block) = block else { continue };
            let p = &block.percentiles;
            for (name, value) in [
                ("p10", p.p10),
                ("p25", p.p25),
                ("p50", p.p50),
                ("p75", p.p75),
                ("p90", p.p90),
                ("frac_ge_3deg", block.frac_ge_3deg),
            ] {
                out.push_str(&format!("{space},{metric}_{name},{value:.6}\n"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
}

/// Pearson goodness-of-fit statistic against the uniform distribution over
/// the given cells.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquareResult, AnalysisError> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return Err(AnalysisError::DegenerateTable);
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    Ok(ChiSquareResult {
        statistic,
        df: counts.len() - 1,
    })
}
