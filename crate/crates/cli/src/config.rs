//! Effective settings: defaults, config-file layer, flag overrides.
//!
//! The config file is flat `key = value` lines under bracketed sections,
//! one section per settings group. Precedence is defaults, then file, then
//! command-line flags; the winning values are echoed into every output's
//! `meta.json`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use gazekit_core::analysis::SpaceConfig;
use gazekit_core::gaze::{DetectorConfig, DEFAULT_TOLERANCE_DEG};
use gazekit_core::synth::SynthConfig;
use gazekit_core::vlm::{ClientConfig, MAX_K};
use serde::Serialize;

/// Invalid invocation or config file; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthSettings {
    pub seed: u64,
    #[serde(flatten)]
    pub config: SynthConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct GazeSettings {
    /// Boundary tolerance for fixation-to-object assignment.
    pub tolerance_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSettings {
    /// Trials drawn for E1; E2 always uses every eligible trial.
    pub n_trials: usize,
    pub seed: u64,
    pub k_values: Vec<usize>,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
    /// Mock clients only: probability of an unparseable response.
    pub garbage_rate: f64,
}

/// Everything a subcommand can consume, grouped as in the config file.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub synth: SynthSettings,
    pub detector: DetectorConfig,
    pub gaze: GazeSettings,
    pub spaces: SpaceConfig,
    pub client: ClientConfig,
    pub experiment: ExperimentSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            synth: SynthSettings {
                seed: 0,
                config: SynthConfig::default(),
            },
            detector: DetectorConfig::default(),
            gaze: GazeSettings {
                tolerance_deg: DEFAULT_TOLERANCE_DEG,
            },
            spaces: SpaceConfig::default(),
            client: ClientConfig::default(),
            experiment: ExperimentSettings {
                n_trials: 100,
                seed: 0,
                k_values: (0..=MAX_K).collect(),
                bootstrap_resamples: 10_000,
                confidence_level: 0.95,
                garbage_rate: 0.0,
            },
        }
    }
}

pub fn apply_config_file(settings: &mut Settings, path: &Path) -> anyhow::Result<()> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|err| usage_error(format!("cannot read config {origin}: {err}")))?;
    apply_config_text(settings, &text, &origin)
}

fn apply_config_text(settings: &mut Settings, text: &str, origin: &str) -> anyhow::Result<()> {
    let mut section: Option<String> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| usage_error(format!("{origin}:{}: {message}", index + 1));
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(fail(format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(fail(format!("expected `key = value`, got {line:?}")));
        };
        let Some(section) = section.as_deref() else {
            return Err(fail("key before any [section] header".into()));
        };
        apply_key(settings, section, key.trim(), value.trim()).map_err(fail)?;
    }
    Ok(())
}

const SECTIONS: [&str; 6] = [
    "synth",
    "detector",
    "gaze",
    "spaces",
    "client",
    "experiment",
];

fn parse_value<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|err| format!("bad value {value:?}: {err}"))
}

fn apply_key(settings: &mut Settings, section: &str, key: &str, value: &str) -> Result<(), String> {
    let synth = &mut settings.synth;
    let experiment = &mut settings.experiment;
    match (section, key) {
        ("synth", "seed") => synth.seed = parse_value(value)?,
        ("synth", "n_objects") => synth.config.n_objects = parse_value(value)?,
        ("synth", "size_min_m") => synth.config.size_range_m.0 = parse_value(value)?,
        ("synth", "size_max_m") => synth.config.size_range_m.1 = parse_value(value)?,
        ("synth", "placement_min_m") => synth.config.placement_range_m.0 = parse_value(value)?,
        ("synth", "placement_max_m") => synth.config.placement_range_m.1 = parse_value(value)?,
        ("synth", "n_fixations") => synth.config.n_fixations = parse_value(value)?,
        ("synth", "fixation_min_ms") => synth.config.fixation_duration_ms.0 = parse_value(value)?,
        ("synth", "fixation_max_ms") => synth.config.fixation_duration_ms.1 = parse_value(value)?,
        ("synth", "saccade_min_ms") => synth.config.saccade_duration_ms.0 = parse_value(value)?,
        ("synth", "saccade_max_ms") => synth.config.saccade_duration_ms.1 = parse_value(value)?,
        ("synth", "jitter_deg") => synth.config.jitter_deg = parse_value(value)?,
        ("synth", "sample_rate_hz") => synth.config.sample_rate_hz = parse_value(value)?,
        ("synth", "interaction_fraction") => {
            synth.config.interaction_fraction = parse_value(value)?
        }
        ("synth", "task_label") => synth.config.task_label = value.to_string(),
        ("detector", "velocity_threshold_deg_s") => {
            settings.detector.velocity_threshold_deg_s = parse_value(value)?
        }
        ("detector", "min_duration_ms") => settings.detector.min_duration_ms = parse_value(value)?,
        ("detector", "max_gap_samples") => settings.detector.max_gap_samples = parse_value(value)?,
        ("gaze", "tolerance_deg") => settings.gaze.tolerance_deg = parse_value(value)?,
        ("spaces", "near_max_m") => settings.spaces.near_max_m = parse_value(value)?,
        ("spaces", "mid_min_m") => settings.spaces.mid_min_m = parse_value(value)?,
        ("spaces", "mid_max_m") => settings.spaces.mid_max_m = parse_value(value)?,
        ("spaces", "fixated_max_m") => settings.spaces.fixated_max_m = parse_value(value)?,
        ("spaces", "interaction_pad_s") => settings.spaces.interaction_pad_s = parse_value(value)?,
        ("client", "endpoint_url") => settings.client.endpoint_url = value.to_string(),
        ("client", "model_name") => settings.client.model_name = value.to_string(),
        ("client", "api_key_env_var_name") => {
            settings.client.api_key_env_var_name = value.to_string()
        }
        ("client", "timeout_s") => settings.client.timeout_s = parse_value(value)?,
        ("client", "max_in_flight") => settings.client.max_in_flight = parse_value(value)?,
        ("client", "retries") => settings.client.retries = parse_value(value)?,
        ("client", "seed") => settings.client.seed = parse_value(value)?,
        ("experiment", "n_trials") => experiment.n_trials = parse_value(value)?,
        ("experiment", "seed") => experiment.seed = parse_value(value)?,
        ("experiment", "k") => experiment.k_values = parse_k_spec(value)?,
        ("experiment", "bootstrap_resamples") => {
            experiment.bootstrap_resamples = parse_value(value)?
        }
        ("experiment", "confidence_level") => experiment.confidence_level = parse_value(value)?,
        ("experiment", "garbage_rate") => experiment.garbage_rate = parse_value(value)?,
        _ => return Err(format!("unknown key {key:?} in section [{section}]")),
    }
    Ok(())
}

/// Context sizes: an inclusive range `lo..hi`, a comma list, or one value.
pub fn parse_k_spec(spec: &str) -> Result<Vec<usize>, String> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = parse_value(lo.trim())?;
        let hi: usize = parse_value(hi.trim())?;
        if lo > hi {
            return Err(format!("empty k range {spec:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|part| parse_value(part.trim()))
        .collect()
}
