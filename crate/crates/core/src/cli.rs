//! Command line front end. Every experiment reads one TOML configuration,
//! optionally patched with `--set section.key=value`, and writes CSV files
//! plus a `manifest.json` into the output directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig};
use crate::imaging::rawclip;
use crate::pipeline::{Domain, Pipeline};
use crate::recognizer::GestureModel;
use crate::synth::{render_gesture, GestureScript, Split};

#[derive(Debug, Parser)]
#[command(
    name = "cdgesture",
    version,
    about = "Compressed-domain gesture recognition experiments"
)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set pipeline.measurements=250`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Uncompressed,
    Compressed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the effective configuration.
    Config,
    /// Render one clip as `<stem>.raw` / `<stem>.hdr` plus `<stem>.truth.csv`.
    Synth {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        stem: PathBuf,
    },
    /// Write the dataset manifest; `--render` also writes every clip.
    Dataset {
        #[arg(long, value_enum, default_value_t = SplitArg::Train)]
        split: SplitArg,
        #[arg(long)]
        render: bool,
    },
    /// Train on the synthetic training split and save the model.
    Train {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Classify a raw clip with a saved model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        clip: PathBuf,
        #[arg(long, value_enum, default_value_t = DomainArg::Compressed)]
        domain: DomainArg,
        /// Also write the extracted motion centers as CSV.
        #[arg(long)]
        centers: Option<PathBuf>,
    },
    /// Center error, accuracy and energy per frame against the number of measurements.
    SweepM,
    /// Accuracy and average power against the frame rate.
    SweepFps,
    /// Sustainable frame rate, power and accuracy against irradiance.
    SweepIrradiance,
    /// Per-class accuracy at the configured number of measurements.
    Table {
        /// Saved model; trained from the configuration when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the harvester over an irradiance scenario and write telemetry.
    HarvestSim {
        /// CSV with columns `t,irradiance`; overrides `energy.scenario`.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Let the governor choose the frame rate.
        #[arg(long)]
        governed: bool,
    },
}

/// Runs the tool and returns the process exit code: 0 on success, 2 for
/// configuration or input errors, 3 for numerical failures, 1 otherwise.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads the configuration file (or defaults) and applies `key=value` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => {
            fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => String::new(),
    };
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not KEY=VALUE")))?;
        set_path(&mut table, key.trim(), parse_value(raw.trim()))?;
    }
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key `{key}`")))?;
    let mut node = table;
    for p in parts {
        node = node
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    outputs: Vec<String>,
    config: String,
}

struct Output {
    dir: PathBuf,
    cfg: ExperimentConfig,
}

impl Output {
    fn csv(&self, name: &str, (header, rows): (Vec<&str>, Vec<Vec<String>>)) -> Result<PathBuf> {
        let path = self.dir.join(name);
        experiments::write_csv(fs::File::create(&path)?, &self.cfg.hash(), &header, &rows)?;
        Ok(path)
    }

    fn manifest(&self, command: &str, outputs: &[PathBuf]) -> Result<()> {
        let m = Manifest {
            command,
            config_hash: self.cfg.hash(),
            outputs: outputs
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
            config: self.cfg.to_toml(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        for p in outputs {
            println!("wrote {}", p.display());
        }
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if cfg.output_dir.as_os_str().is_empty() {
        cfg.output_dir = PathBuf::from("results");
    }
    let dir = cfg.output_dir.clone();
    let needs_dir = !matches!(
        cli.command,
        Command::Config | Command::Synth { .. } | Command::Classify { .. }
    );
    if needs_dir {
        fs::create_dir_all(&dir)?;
    }
    let out = Output { dir, cfg };
    let cfg = &out.cfg;
    match cli.command {
        Command::Config => print!("{}", cfg.to_toml()),
        Command::Synth { class, seed, stem } => {
            let script = GestureScript::builtin(&class)
                .ok_or_else(|| Error::Config(format!("unknown gesture class `{class}`")))?;
            let clip = render_gesture(&script, &cfg.dataset.synth, seed)?;
            write_rendered(&stem, &clip, cfg)?;
            println!(
                "wrote {} frames to {}",
                clip.frames.len(),
                rawclip::raw_path(&stem).display()
            );
        }
        Command::Dataset { split, render } => {
            let split = match split {
                SplitArg::Train => Split::Train,
                SplitArg::Test => Split::Test,
            };
            let data = experiments::dataset(cfg, split)?;
            let mut rows = Vec::with_capacity(data.clips.len());
            for clip in &data.clips {
                let name = format!(
                    "{}-{:03}-{}",
                    split.name(),
                    clip.index,
                    class_slug(&clip.label)
                );
                let hash = if render {
                    let r = data.render(clip, &cfg.dataset.synth)?;
                    write_rendered(&out.dir.join(&name), &r, cfg)?;
                    r.content_hash()
                } else {
                    String::new()
                };
                rows.push(vec![
                    name,
                    clip.label.clone(),
                    clip.index.to_string(),
                    clip.seed.to_string(),
                    hash,
                ]);
            }
            let header = vec!["clip", "label", "index", "seed", "content_sha256"];
            let path = out.csv(&format!("{}_manifest.csv", split.name()), (header, rows))?;
            out.manifest("dataset", &[path])?;
        }
        Command::Train { model } => {
            let pipeline = Pipeline::<f64>::new(cfg.pipeline.clone())?;
            let m = experiments::train_model(cfg, &pipeline)?;
            let path = model.unwrap_or_else(|| out.dir.join("model.txt"));
            m.save(&path)?;
            println!("tau {:.6}", m.tau);
            out.manifest("train", &[path])?;
        }
        Command::Classify {
            model,
            clip,
            domain,
            centers,
        } => {
            let m = GestureModel::<f64>::load(&model)?;
            let fp = m.fingerprint;
            let mut pc = cfg.pipeline.clone();
            (pc.width, pc.height, pc.block, pc.template) =
                (fp.width, fp.height, fp.block, fp.template);
            if domain_of(domain) == Domain::Compressed {
                (pc.measurements, pc.phi_seed) = (fp.measurements, fp.phi_seed);
            }
            let pipeline = Pipeline::<f64>::new(pc)?;
            let (header, frames) = rawclip::read_clip(&clip)?;
            if (header.width, header.height) != (fp.width, fp.height) {
                return Err(Error::Config(format!(
                    "clip is {}x{} but the model expects {}x{}",
                    header.width, header.height, fp.width, fp.height
                )));
            }
            let path = pipeline.centers(&frames, domain_of(domain))?;
            if let Some(c) = centers {
                experiments::write_csv(
                    fs::File::create(&c)?,
                    &cfg.hash(),
                    &["frame_index", "x", "y", "score"],
                    &experiments::centers_csv(&path).1,
                )?;
            }
            let v = m.classify(&pipeline.trace_from_centers(&path))?;
            println!(
                "label {}\ndistance {:.6}\nrunner_up {:.6}",
                v.label.as_deref().unwrap_or("none"),
                v.distance,
                v.runner_up
            );
        }
        Command::SweepM => {
            let rows = experiments::run_m_sweep(cfg)?;
            let p = out.csv("m_sweep.csv", experiments::m_sweep_csv(&rows))?;
            out.manifest("sweep-m", &[p])?;
        }
        Command::SweepFps => {
            let rows = experiments::run_fps_sweep(cfg)?;
            let p = out.csv("fps_sweep.csv", experiments::fps_sweep_csv(&rows))?;
            out.manifest("sweep-fps", &[p])?;
        }
        Command::SweepIrradiance => {
            let rows = experiments::run_irradiance_sweep(cfg)?;
            let p = out.csv("irradiance_sweep.csv", experiments::irradiance_csv(&rows))?;
            out.manifest("sweep-irradiance", &[p])?;
        }
        Command::Table { model } => {
            let m = match model {
                Some(p) => GestureModel::<f64>::load(&p)?,
                None => {
                    experiments::train_model(cfg, &Pipeline::<f64>::new(cfg.pipeline.clone())?)?
                }
            };
            let table = experiments::run_accuracy_table(cfg, &m)?;
            let p = out.csv("accuracy_table.csv", experiments::table_csv(&table))?;
            out.manifest("table", &[p])?;
        }
        Command::HarvestSim { scenario, governed } => {
            let series = match scenario.or_else(|| cfg.energy.scenario.clone()) {
                Some(p) => read_scenario(&p)?,
                None => default_scenario(),
            };
            let rows = experiments::run_harvest(cfg, &series, governed)?;
            let p = out.csv("telemetry.csv", experiments::telemetry_csv(&rows))?;
            out.manifest("harvest-sim", &[p])?;
        }
    }
    Ok(())
}

fn domain_of(d: DomainArg) -> Domain {
    match d {
        DomainArg::Uncompressed => Domain::Uncompressed,
        DomainArg::Compressed => Domain::Compressed,
    }
}

/// File-name-safe form of a class label.
fn class_slug(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '+' => "plus".to_string(),
            c if c.is_ascii_alphanumeric() => c.to_string(),
            _ => "_".to_string(),
        })
        .collect()
}

fn write_rendered(
    stem: &Path,
    clip: &crate::synth::RenderedClip,
    cfg: &ExperimentConfig,
) -> Result<()> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    rawclip::write_clip(stem, &clip.frames, cfg.dataset.synth.fps)?;
    let rows: Vec<Vec<String>> = clip
        .truth
        .iter()
        .map(|t| {
            vec![
                t.frame_index.to_string(),
                format!("{:.4}", t.x),
                format!("{:.4}", t.y),
            ]
        })
        .collect();
    let mut truth = stem.as_os_str().to_owned();
    truth.push(".truth.csv");
    experiments::write_csv(
        fs::File::create(PathBuf::from(truth))?,
        &cfg.hash(),
        &["frame_index", "x", "y"],
        &rows,
    )
}

/// Reads `(t, G)` pairs; the first row is a header, `#` starts a comment.
pub fn read_scenario(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| {
                Error::Parse(format!(
                    "scenario row {:?} needs numeric t and irradiance",
                    rec
                ))
            })
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

/// Ten minutes: full sun, heavy overcast, partial sun.
pub fn default_scenario() -> Vec<(f64, f64)> {
    vec![
        (0.0, 1000.0),
        (200.0, 150.0),
        (400.0, 600.0),
        (600.0, 600.0),
    ]
}
