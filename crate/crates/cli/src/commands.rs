//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gazekit_core::analysis::{
    build_report, collect_size_samples, render_report_csv, render_report_json, SampleCollection,
};
use gazekit_core::experiments::{
    emit_results, run_sweep, sample_e1_trials, sample_e2_trials, Arm, ExperimentInput, ResultTable,
    SweepConfig, TrialSpec,
};
use gazekit_core::gaze::build_scanpath;
use gazekit_core::geometry::direction_to_angular;
use gazekit_core::scene::{load_recording, validate, Violation};
use gazekit_core::selftest::run_selftest;
use gazekit_core::synth::{generate, save_ground_truth, truth_path};
use gazekit_core::vlm::{
    BaselineStrategy, LiveClient, MockClient, MockStrategy, Question, VlmClient,
};

use crate::config::{apply_config_file, parse_k_spec, usage_error, Settings};
use crate::meta::{sibling_meta_path, write_meta};
use crate::{Cli, Command, ExperimentArgs, ReportArgs, SizesArgs, SynthArgs};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("initializing worker threads")?;
    }
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        apply_config_file(&mut settings, path)?;
    }
    match cli.command {
        Command::Synth(args) => synth(settings, args),
        Command::Validate { file } => validate_recording(&file),
        Command::Sizes(args) => sizes(settings, args),
        Command::Fixations { file, out } => fixations(settings, &file, out.as_deref()),
        Command::Experiment(args) => experiment(settings, args),
        Command::Report(args) => report(settings, args),
        Command::Selftest => selftest(),
    }
}

fn synth(mut settings: Settings, args: SynthArgs) -> anyhow::Result<()> {
    if let Some(seed) = args.seed {
        settings.synth.seed = seed;
    }
    if let Some(n) = args.n_objects {
        settings.synth.config.n_objects = n;
    }
    if let Some(n) = args.n_fixations {
        settings.synth.config.n_fixations = n;
    }
    if let Some(jitter) = args.jitter_deg {
        settings.synth.config.jitter_deg = jitter;
    }
    if let Some(fraction) = args.interaction_fraction {
        settings.synth.config.interaction_fraction = fraction;
    }

    let (recording, truth) = generate(&settings.synth.config, settings.synth.seed)?;
    gazekit_core::scene::save_recording_path(&recording, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let truth_out = truth_path(&args.out);
    save_ground_truth(&truth, &truth_out)
        .with_context(|| format!("writing {}", truth_out.display()))?;
    write_meta(&sibling_meta_path(&args.out), "synth", &settings, &[])?;
    eprintln!(
        "wrote {} ({} frames, {} objects) + truth + meta",
        args.out.display(),
        recording.frames.len(),
        recording.catalog.len()
    );
    Ok(())
}

fn validate_recording(file: &Path) -> anyhow::Result<()> {
    let recording = load_recording(file).with_context(|| format!("loading {}", file.display()))?;
    let violations = validate(&recording);
    if violations.is_empty() {
        println!("ok");
        return Ok(());
    }
    for violation in &violations {
        println!("{}: {}", code_name(violation), violation.message);
    }
    bail!("{} violation(s) in {}", violations.len(), file.display());
}

fn code_name(violation: &Violation) -> String {
    match serde_json::to_value(violation.code).expect("code serializes") {
        serde_json::Value::String(name) => name,
        other => other.to_string(),
    }
}

fn sizes(settings: Settings, args: SizesArgs) -> anyhow::Result<()> {
    let mut collection = SampleCollection::default();
    let mut recording_ids = Vec::new();
    for file in &args.files {
        let input = load_input(file, &settings)?;
        collection.merge(collect_size_samples(
            &input.recording,
            &input.scanpath,
            &settings.spaces,
        )?);
        recording_ids.push(input.recording.recording_id.clone());
    }
    let report = build_report(
        recording_ids,
        &collection.samples,
        collection.n_skipped,
        &settings.spaces,
        vec![
            "distance convention: object range is measured from the device origin, \
             not the wearer's body"
                .to_string(),
        ],
    );
    let text = match args.format.as_str() {
        "json" => render_report_json(&report),
        "csv" => render_report_csv(&report),
        other => return Err(usage_error(format!("unknown format {other:?}"))),
    };
    let inputs: Vec<&Path> = args.files.iter().map(PathBuf::as_path).collect();
    write_text_output(&text, args.out.as_deref(), "sizes", &settings, &inputs)
}

fn fixations(settings: Settings, file: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let input = load_input(file, &settings)?;
    let mut text = String::from("start_ns,end_ns,duration_ms,object_id,az_deg,el_deg\n");
    for fixation in &input.scanpath.fixations {
        let center = direction_to_angular(&fixation.centroid_vec())?;
        let object = fixation
            .assigned_object()
            .map(ToString::to_string)
            .unwrap_or_default();
        text.push_str(&format!(
            "{},{},{:.3},{},{:.6},{:.6}\n",
            fixation.start_ns,
            fixation.end_ns,
            fixation.duration_ms(),
            object,
            center.az_deg,
            center.el_deg,
        ));
    }
    write_text_output(&text, out, "fixations", &settings, &[file])
}

fn experiment(mut settings: Settings, args: ExperimentArgs) -> anyhow::Result<()> {
    if let Some(n) = args.n_trials {
        settings.experiment.n_trials = n;
    }
    if let Some(seed) = args.seed {
        settings.experiment.seed = seed;
    }
    if let Some(spec) = &args.k {
        settings.experiment.k_values = parse_k_spec(spec).map_err(usage_error)?;
    }
    if let Some(rate) = args.garbage_rate {
        settings.experiment.garbage_rate = rate;
    }

    let question = match args.question.as_str() {
        "e1" => Question::E1,
        "e2" => Question::E2,
        other => return Err(usage_error(format!("unknown question {other:?}"))),
    };
    let inputs: Vec<ExperimentInput> = args
        .inputs
        .iter()
        .map(|file| load_input(file, &settings))
        .collect::<anyhow::Result<_>>()?;

    let trials: Vec<TrialSpec> = match question {
        Question::E1 => {
            let (trials, shortfall) = sample_e1_trials(
                &inputs,
                settings.experiment.n_trials,
                settings.experiment.seed,
            );
            if shortfall > 0 {
                eprintln!(
                    "warning: only {} eligible trials, {} requested",
                    trials.len(),
                    settings.experiment.n_trials
                );
            }
            trials
        }
        Question::E2 => sample_e2_trials(&inputs),
    };
    if trials.is_empty() {
        bail!("no eligible {} trials in the given recordings", question);
    }

    let client = build_client(
        &settings,
        args.client.as_deref().unwrap_or("mock:echo-prev"),
    )?;
    let mut arms = vec![Arm::Vlm];
    arms.extend(parse_baselines(args.baselines.as_deref())?);
    let sweep = SweepConfig {
        k_values: settings.experiment.k_values.clone(),
        seed: settings.experiment.seed,
        bootstrap_resamples: settings.experiment.bootstrap_resamples,
        confidence_level: settings.experiment.confidence_level,
    };
    let table = run_sweep(&inputs, &trials, &arms, client.as_ref(), &sweep)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    emit_results(&table, &args.out_dir)?;
    let input_paths: Vec<&Path> = args.inputs.iter().map(PathBuf::as_path).collect();
    write_meta(
        &args.out_dir.join("meta.json"),
        &format!("experiment {}", args.question),
        &settings,
        &input_paths,
    )?;
    eprintln!(
        "{} trials x {} arms x {} k values -> {}",
        trials.len(),
        arms.len(),
        sweep.k_values.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn report(settings: Settings, args: ReportArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.results)
        .with_context(|| format!("reading {}", args.results.display()))?;
    let table: ResultTable = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a results table", args.results.display()))?;
    let out_dir = match args.out_dir {
        Some(dir) => dir,
        None => match args.results.parent() {
            Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
            _ => PathBuf::from("."),
        },
    };
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    emit_results(&table, &out_dir)?;
    write_meta(
        &out_dir.join("meta.json"),
        "report",
        &settings,
        &[&args.results],
    )?;
    eprintln!(
        "re-rendered {} rows -> {}",
        table.rows.len(),
        out_dir.display()
    );
    Ok(())
}

fn selftest() -> anyhow::Result<()> {
    let results = run_selftest();
    let mut failures = 0usize;
    for check in &results {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", check.name, check.detail);
        if !check.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        bail!("{failures} of {} checks failed", results.len());
    }
    Ok(())
}

/// Loads a recording and runs detection + assignment with the configured
/// detector and tolerance.
fn load_input(file: &Path, settings: &Settings) -> anyhow::Result<ExperimentInput> {
    let recording = load_recording(file).with_context(|| format!("loading {}", file.display()))?;
    let scanpath = build_scanpath(&recording, &settings.detector, settings.gaze.tolerance_deg)
        .with_context(|| format!("detecting fixations in {}", file.display()))?;
    Ok(ExperimentInput {
        recording,
        scanpath,
    })
}

fn build_client(settings: &Settings, spec: &str) -> anyhow::Result<Box<dyn VlmClient>> {
    if spec == "live" {
        let client = LiveClient::new(settings.client.clone())?;
        return Ok(Box::new(client));
    }
    if let Some(strategy) = spec.strip_prefix("mock:") {
        let strategy: MockStrategy = strategy
            .parse()
            .map_err(|err| usage_error(format!("--client {spec:?}: {err}")))?;
        let client = MockClient::new(
            strategy,
            settings.experiment.garbage_rate,
            settings.client.seed,
        )?;
        return Ok(Box::new(client));
    }
    Err(usage_error(format!(
        "--client must be \"live\" or \"mock:<strategy>\", got {spec:?}"
    )))
}

fn parse_baselines(spec: Option<&str>) -> anyhow::Result<Vec<Arm>> {
    let spec = match spec {
        None => {
            return Ok(BaselineStrategy::ALL
                .iter()
                .copied()
                .map(Arm::Baseline)
                .collect())
        }
        Some("none") => return Ok(Vec::new()),
        Some(spec) => spec,
    };
    spec.split(',')
        .map(|name| {
            let strategy: BaselineStrategy = name
                .trim()
                .parse()
                .map_err(|err| usage_error(format!("--baselines: {err}")))?;
            Ok(Arm::Baseline(strategy))
        })
        .collect()
}

fn write_text_output(
    text: &str,
    out: Option<&Path>,
    subcommand: &str,
    settings: &Settings,
    inputs: &[&Path],
) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            write_meta(&sibling_meta_path(path), subcommand, settings, inputs)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
