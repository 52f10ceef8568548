//! Experiment runners behind the command line: training, evaluation, the
//! measurement / frame-rate / irradiance sweeps and the per-class table.
//!
//! All randomized comparisons are paired: every sweep point sees the same
//! rendered dataset. Outputs carry a hash of the full configuration.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{
    step_harvester, sustainable_fps, ArrayConfig, Governor, GovernorPolicy, HarvesterConfig,
    HarvesterState, LoadModel, Telemetry,
};
use crate::error::{Error, Result};
use crate::pipeline::{Domain, GatedFrame, Pipeline, PipelineConfig};
use crate::recognizer::{GestureClass, GestureModel, MatchOptions, Verdict};
use crate::smashed_filter::{center_error, MotionCenter};
use crate::synth::{make_dataset, Dataset, GestureScript, Split, SynthConfig, MAX_FPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerConfig {
    /// Fixed rejection threshold; calibrated from training data when absent.
    pub tau: Option<f64>,
    pub tau_percentile: f64,
    pub mean_center: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            tau: None,
            tau_percentile: 0.95,
            mean_center: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub classes: Vec<String>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
    pub synth: SynthConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            classes: vec!["X".into(), "+".into(), "Z".into()],
            train_per_class: 40,
            test_per_class: 20,
            seed: 20160808,
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub array: ArrayConfig<f64>,
    pub load: LoadModel<f64>,
    pub harvester: HarvesterConfig<f64>,
    pub governor: GovernorPolicy,
    /// Irradiance time series `(t, G)` for `harvest-sim`.
    pub scenario: Option<PathBuf>,
    pub dt: f64,
    pub initial_v_store: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            array: ArrayConfig::default(),
            load: LoadModel::default(),
            harvester: HarvesterConfig::default(),
            governor: GovernorPolicy::default(),
            scenario: None,
            dt: 0.1,
            initial_v_store: 4.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub m_values: Vec<usize>,
    pub fps_values: Vec<u32>,
    pub irradiance_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_values: vec![50, 100, 150, 200, 250, 300, 400, 600],
            fps_values: (1..=10).collect(),
            irradiance_values: (1..=10).map(|k| k as f64 * 100.0).collect(),
        }
    }
}

/// Top-level configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub recognizer: RecognizerConfig,
    pub dataset: DatasetConfig,
    pub energy: EnergyConfig,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.dataset.synth.validate()?;
        self.energy.array.validate()?;
        self.energy.load.validate()?;
        self.energy.harvester.validate()?;
        self.energy.governor.validate()?;
        let s = &self.dataset.synth;
        if (s.width, s.height, s.block)
            != (
                self.pipeline.width,
                self.pipeline.height,
                self.pipeline.block,
            )
        {
            return Err(Error::config(
                "dataset.synth and pipeline must agree on width, height and block",
            ));
        }
        if self.dataset.train_per_class == 0 || self.dataset.test_per_class == 0 {
            return Err(Error::config(
                "train and test sets need at least one clip per class",
            ));
        }
        scripts(&self.dataset.classes)?;
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form, with the
    /// output location left out so reruns elsewhere hash the same.
    pub fn hash(&self) -> String {
        let canonical = Self {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn with_measurements(&self, m: usize) -> Self {
        let mut c = self.clone();
        c.pipeline.measurements = m;
        c
    }
}

pub fn scripts(labels: &[String]) -> Result<Vec<GestureScript>> {
    if labels.is_empty() {
        return Err(Error::config("no gesture classes configured"));
    }
    labels
        .iter()
        .map(|l| {
            GestureScript::builtin(l)
                .ok_or_else(|| Error::config(format!("unknown gesture class `{l}`")))
        })
        .collect()
}

pub fn dataset(cfg: &ExperimentConfig, split: Split) -> Result<Dataset> {
    let per_class = match split {
        Split::Train => cfg.dataset.train_per_class,
        Split::Test => cfg.dataset.test_per_class,
    };
    make_dataset(
        &scripts(&cfg.dataset.classes)?,
        per_class,
        cfg.dataset.seed,
        split,
    )
}

/// Trains on the synthetic training split with uncompressed extraction.
pub fn train_model(cfg: &ExperimentConfig, pipeline: &Pipeline<f64>) -> Result<GestureModel<f64>> {
    let data = dataset(cfg, Split::Train)?;
    let mut traces = vec![Vec::new(); data.scripts.len()];
    for clip in &data.clips {
        let rendered = data.render(clip, &cfg.dataset.synth)?;
        traces[clip.class_index].push(pipeline.trace(&rendered.frames, Domain::Uncompressed)?);
    }
    let classes = data
        .scripts
        .iter()
        .zip(traces)
        .map(|(s, t)| GestureClass::new(s.label.clone(), t))
        .collect::<Result<Vec<_>>>()?;
    let options = MatchOptions {
        mean_center: cfg.recognizer.mean_center,
    };
    let mut model = GestureModel::train(
        classes,
        cfg.recognizer.tau_percentile,
        options,
        pipeline.config().fingerprint(),
    )?;
    if let Some(tau) = cfg.recognizer.tau {
        model.tau = tau;
    }
    Ok(model)
}

/// Gated block images of one test clip; independent of `M`.
#[derive(Clone, Debug)]
pub struct EvalClip {
    pub label: String,
    pub class_index: usize,
    pub gated: Vec<GatedFrame<f64>>,
}

pub fn prepare_test(
    cfg: &ExperimentConfig,
    synth: &SynthConfig,
    pipeline: &Pipeline<f64>,
) -> Result<Vec<EvalClip>> {
    let data = dataset(cfg, Split::Test)?;
    data.clips
        .iter()
        .map(|clip| {
            let rendered = data.render(clip, synth)?;
            Ok(EvalClip {
                label: clip.label.clone(),
                class_index: clip.class_index,
                gated: pipeline.gated_blocks(&rendered.frames)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub labels: Vec<String>,
    pub correct: Vec<usize>,
    pub total: Vec<usize>,
    pub verdicts: Vec<Verdict<f64>>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        let t: usize = self.total.iter().sum();
        if t == 0 {
            return 0.0;
        }
        self.correct.iter().sum::<usize>() as f64 / t as f64
    }

    pub fn class_accuracy(&self, k: usize) -> f64 {
        if self.total[k] == 0 {
            return 0.0;
        }
        self.correct[k] as f64 / self.total[k] as f64
    }

    pub fn class_accuracy_of(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|k| self.class_accuracy(k))
    }
}

/// Classifies every clip's trace extracted in `domain`. A rejected clip counts as wrong.
pub fn evaluate(
    model: &GestureModel<f64>,
    pipeline: &Pipeline<f64>,
    clips: &[EvalClip],
    domain: Domain,
) -> Result<Evaluation> {
    let labels: Vec<String> = model.classes.iter().map(|c| c.label.clone()).collect();
    let mut correct = vec![0; labels.len()];
    let mut total = vec![0; labels.len()];
    let mut verdicts = Vec::with_capacity(clips.len());
    for clip in clips {
        let truth = labels
            .iter()
            .position(|l| *l == clip.label)
            .ok_or_else(|| Error::config(format!("model has no class `{}`", clip.label)))?;
        let trace = pipeline.trace_from_centers(&pipeline.centers_of(&clip.gated, domain)?);
        let v = model.classify(&trace)?;
        total[truth] += 1;
        if v.class_index == Some(truth) {
            correct[truth] += 1;
        }
        verdicts.push(v);
    }
    Ok(Evaluation {
        labels,
        correct,
        total,
        verdicts,
    })
}

/// Mean compressed-vs-uncompressed center distance over all gated frames.
pub fn mean_center_error(pipeline: &Pipeline<f64>, clips: &[EvalClip]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for clip in clips {
        let a = pipeline.centers_of(&clip.gated, Domain::Uncompressed)?;
        let b = pipeline.centers_of(&clip.gated, Domain::Compressed)?;
        sum += center_error(&a, &b)? * a.len() as f64;
        n += a.len();
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MSweepRow {
    pub m: usize,
    pub mean_center_error: f64,
    pub accuracy: f64,
    pub energy_per_frame: f64,
}

/// For each `M`: rebuild Φ and the bank, measure center error against the
/// uncompressed scan and accuracy of compressed-domain classification.
/// Training traces come from the uncompressed scan and are shared by all points.
pub fn run_m_sweep(cfg: &ExperimentConfig) -> Result<Vec<MSweepRow>> {
    let n = cfg.pipeline.cells();
    if let Some(&bad) = cfg.sweep.m_values.iter().find(|&&m| m == 0 || m > n) {
        return Err(Error::config(format!(
            "measurement count {bad} outside 1..={n}"
        )));
    }
    let base = Pipeline::<f64>::new(cfg.pipeline.clone())?;
    let model = train_model(cfg, &base)?;
    let clips = prepare_test(cfg, &cfg.dataset.synth, &base)?;
    cfg.sweep
        .m_values
        .iter()
        .map(|&m| {
            let p = Pipeline::<f64>::new(cfg.with_measurements(m).pipeline)?;
            Ok(MSweepRow {
                m,
                mean_center_error: mean_center_error(&p, &clips)?,
                accuracy: evaluate(&model, &p, &clips, Domain::Compressed)?.accuracy(),
                energy_per_frame: cfg.energy.load.energy_per_frame(m),
            })
        })
        .collect()
}

/// Mean compressed-vs-uncompressed center error of one clip for each `M`,
/// averaged over `phi_draws` projection matrices seeded `phi_seed + k`.
pub fn center_error_curve(
    cfg: &ExperimentConfig,
    frames: &[crate::imaging::Frame],
    m_values: &[usize],
    phi_draws: u64,
) -> Result<Vec<(usize, f64)>> {
    if phi_draws == 0 {
        return Err(Error::config("need at least one projection draw"));
    }
    let base = Pipeline::<f64>::new(cfg.pipeline.clone())?;
    let gated = base.gated_blocks(frames)?;
    let reference = base.centers_of(&gated, Domain::Uncompressed)?;
    m_values
        .iter()
        .map(|&m| {
            let mut sum = 0.0;
            for k in 0..phi_draws {
                let mut pc = cfg.with_measurements(m).pipeline;
                pc.phi_seed = pc.phi_seed.wrapping_add(k);
                let p = Pipeline::<f64>::new(pc)?;
                sum += center_error(&reference, &p.centers_of(&gated, Domain::Compressed)?)?;
            }
            Ok((m, sum / phi_draws as f64))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpsSweepRow {
    pub fps: u32,
    pub accuracy: f64,
    pub avg_power: f64,
}

/// Re-renders the test split at each frame rate (gesture durations unchanged,
/// so fewer samples per gesture) and classifies in the compressed domain.
pub fn run_fps_sweep(cfg: &ExperimentConfig) -> Result<Vec<FpsSweepRow>> {
    if let Some(&bad) = cfg
        .sweep
        .fps_values
        .iter()
        .find(|&&f| f == 0 || f as f64 > MAX_FPS)
    {
        return Err(Error::config(format!(
            "frame rate {bad} outside 1..={MAX_FPS}"
        )));
    }
    let pipeline = Pipeline::<f64>::new(cfg.pipeline.clone())?;
    let model = train_model(cfg, &pipeline)?;
    fps_rows(cfg, &pipeline, &model, &cfg.sweep.fps_values)
}

fn fps_rows(
    cfg: &ExperimentConfig,
    pipeline: &Pipeline<f64>,
    model: &GestureModel<f64>,
    fps_values: &[u32],
) -> Result<Vec<FpsSweepRow>> {
    let e_frame = cfg.energy.load.energy_per_frame(cfg.pipeline.measurements);
    fps_values
        .iter()
        .map(|&fps| {
            let synth = SynthConfig {
                fps: fps as f64,
                ..cfg.dataset.synth.clone()
            };
            let clips = prepare_test(cfg, &synth, pipeline)?;
            Ok(FpsSweepRow {
                fps,
                accuracy: evaluate(model, pipeline, &clips, Domain::Compressed)?.accuracy(),
                avg_power: fps as f64 * e_frame,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrradianceRow {
    pub irradiance: f64,
    pub sustainable_fps: u32,
    pub avg_power: f64,
    /// `None` when no frame rate is sustainable.
    pub accuracy: Option<f64>,
}

pub fn run_irradiance_sweep(cfg: &ExperimentConfig) -> Result<Vec<IrradianceRow>> {
    if cfg.sweep.irradiance_values.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::config("irradiance values must be non-negative"));
    }
    let e = &cfg.energy;
    let load = LoadModel {
        measurements: cfg.pipeline.measurements,
        ..e.load
    };
    let fps: Vec<u32> = cfg
        .sweep
        .irradiance_values
        .iter()
        .map(|&g| sustainable_fps(&e.array, &load, &e.harvester, g, MAX_FPS as u32))
        .collect::<Result<_>>()?;
    let mut needed: Vec<u32> = fps.iter().copied().filter(|&f| f > 0).collect();
    needed.sort_unstable();
    needed.dedup();
    let accuracy_by_fps = if needed.is_empty() {
        Vec::new()
    } else {
        let pipeline = Pipeline::<f64>::new(cfg.pipeline.clone())?;
        let model = train_model(cfg, &pipeline)?;
        fps_rows(cfg, &pipeline, &model, &needed)?
    };
    Ok(cfg
        .sweep
        .irradiance_values
        .iter()
        .zip(fps)
        .map(|(&g, f)| IrradianceRow {
            irradiance: g,
            sustainable_fps: f,
            avg_power: load.power_at(f as f64),
            accuracy: accuracy_by_fps
                .iter()
                .find(|r| r.fps == f)
                .map(|r| r.accuracy),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyTable {
    pub m: usize,
    pub evaluation: Evaluation,
}

/// Per-class accuracy of `model` on the test split at the configured `M`.
pub fn run_accuracy_table(
    cfg: &ExperimentConfig,
    model: &GestureModel<f64>,
) -> Result<AccuracyTable> {
    let fp = cfg.pipeline.fingerprint();
    let mf = model.fingerprint;
    if (mf.width, mf.height, mf.block, mf.template) != (fp.width, fp.height, fp.block, fp.template)
    {
        return Err(Error::config(
            "model was trained for a different frame geometry or template",
        ));
    }
    let pipeline = Pipeline::<f64>::new(cfg.pipeline.clone())?;
    let clips = prepare_test(cfg, &cfg.dataset.synth, &pipeline)?;
    Ok(AccuracyTable {
        m: cfg.pipeline.measurements,
        evaluation: evaluate(model, &pipeline, &clips, Domain::Compressed)?,
    })
}

/// Runs the harvester over an irradiance series `(t, G)`, holding `G` between
/// samples. With `governed`, the frame rate follows the governor policy.
pub fn run_harvest(
    cfg: &ExperimentConfig,
    series: &[(f64, f64)],
    governed: bool,
) -> Result<Vec<Telemetry<f64>>> {
    let e = &cfg.energy;
    if series.is_empty() {
        return Err(Error::config("irradiance scenario is empty"));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::config("scenario times must be strictly increasing"));
    }
    let mut load = LoadModel {
        measurements: cfg.pipeline.measurements,
        ..e.load
    };
    let mut governor = Governor::new(e.governor, load.fps.round() as u32)?;
    if governed {
        load.fps = governor.fps() as f64;
    }
    let mut state = HarvesterState::new(&e.harvester, e.initial_v_store);
    let end = series.last().map(|s| s.0).unwrap_or(0.0);
    let steps = ((end - series[0].0) / e.dt).round() as usize;
    let mut out = Vec::with_capacity(steps);
    let mut k = 0;
    for step in 0..steps {
        let t = series[0].0 + step as f64 * e.dt;
        while k + 1 < series.len() && series[k + 1].0 <= t + 1e-12 {
            k += 1;
        }
        let (next, tel) = step_harvester(&state, &e.harvester, &e.array, &load, series[k].1, e.dt)?;
        state = next;
        if governed {
            load.fps = governor.update(state.v_store, e.dt) as f64;
        }
        out.push(tel);
    }
    Ok(out)
}

/// Writes a CSV whose first line is `# config_hash=<hash>`.
pub fn write_csv<W: Write>(
    mut out: W,
    hash: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    writeln!(out, "# config_hash={hash}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn m_sweep_csv(rows: &[MSweepRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["m", "mean_center_error", "accuracy", "energy_per_frame_j"];
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                format!("{:.6}", r.mean_center_error),
                format!("{:.6}", r.accuracy),
                format!("{:.6}", r.energy_per_frame),
            ]
        })
        .collect();
    (header, rows)
}

pub fn fps_sweep_csv(rows: &[FpsSweepRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["fps", "accuracy", "avg_power_w"];
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.fps.to_string(),
                format!("{:.6}", r.accuracy),
                format!("{:.6}", r.avg_power),
            ]
        })
        .collect();
    (header, rows)
}

pub fn irradiance_csv(rows: &[IrradianceRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["irradiance", "sustainable_fps", "avg_power_w", "accuracy"];
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.1}", r.irradiance),
                r.sustainable_fps.to_string(),
                format!("{:.6}", r.avg_power),
                r.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default(),
            ]
        })
        .collect();
    (header, rows)
}

pub fn table_csv(table: &AccuracyTable) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["class", "m", "correct", "total", "accuracy"];
    let ev = &table.evaluation;
    let mut rows: Vec<Vec<String>> = ev
        .labels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            vec![
                l.clone(),
                table.m.to_string(),
                ev.correct[k].to_string(),
                ev.total[k].to_string(),
                format!("{:.6}", ev.class_accuracy(k)),
            ]
        })
        .collect();
    rows.push(vec![
        "mean".into(),
        table.m.to_string(),
        ev.correct.iter().sum::<usize>().to_string(),
        ev.total.iter().sum::<usize>().to_string(),
        format!("{:.6}", ev.accuracy()),
    ]);
    (header, rows)
}

pub fn telemetry_csv(rows: &[Telemetry<f64>]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "t",
        "v_store",
        "v_mpp_ref",
        "p_in",
        "p_out",
        "fps",
        "events",
    ];
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.3}", r.t),
                format!("{:.6}", r.v_store),
                format!("{:.6}", r.v_mpp_ref),
                format!("{:.6}", r.p_in),
                format!("{:.6}", r.p_out),
                format!("{:.2}", r.fps),
                r.events
                    .iter()
                    .map(|e| e.tag())
                    .collect::<Vec<_>>()
                    .join("|"),
            ]
        })
        .collect();
    (header, rows)
}

/// Center path as CSV rows, for plotting traces.
pub fn centers_csv(path: &[MotionCenter<f64>]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["frame_index", "x", "y", "score"];
    let rows = path
        .iter()
        .map(|c| {
            vec![
                c.frame_index.to_string(),
                format!("{:.4}", c.x),
                format!("{:.4}", c.y),
                format!("{:.6}", c.score),
            ]
        })
        .collect();
    (header, rows)
}
