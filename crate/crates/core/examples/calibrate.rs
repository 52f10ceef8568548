//! Prints per-class accuracy and the center-error curve for a configuration.
//! Usage: cargo run --release --example calibrate [config.toml]

use cdgesture::experiments::{self, ExperimentConfig};
use cdgesture::pipeline::Domain;
use cdgesture::Pipeline;

fn main() -> cdgesture::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    let t = std::time::Instant::now();
    let base = Pipeline::new(cfg.pipeline.clone())?;
    let model = experiments::train_model(&cfg, &base)?;
    println!("tau {:.4} (train {:?})", model.tau, t.elapsed());
    let clips = experiments::prepare_test(&cfg, &cfg.dataset.synth, &base)?;
    println!("test prepared {:?}", t.elapsed());
    let ev = experiments::evaluate(&model, &base, &clips, Domain::Uncompressed)?;
    println!(
        "uncompressed: {:?} of {:?}  mean {:.3}",
        ev.correct,
        ev.total,
        ev.accuracy()
    );
    let rejected = ev.verdicts.iter().filter(|v| v.label.is_none()).count();
    println!("rejected {rejected}");
    for &m in &cfg.sweep.m_values {
        if std::env::var("ONLY_M").is_ok_and(|v| v != m.to_string()) {
            continue;
        }
        let p = Pipeline::new(cfg.with_measurements(m).pipeline)?;
        let err = experiments::mean_center_error(&p, &clips)?;
        let ev = experiments::evaluate(&model, &p, &clips, Domain::Compressed)?;
        let mut conf = std::collections::BTreeMap::new();
        for (clip, v) in clips.iter().zip(&ev.verdicts) {
            if v.label.as_deref() != Some(clip.label.as_str()) {
                *conf
                    .entry(format!(
                        "{}->{}",
                        clip.label,
                        v.label.clone().unwrap_or("none".into())
                    ))
                    .or_insert(0) += 1;
            }
        }
        println!("confusions {conf:?}");
        let rej = ev.verdicts.iter().filter(|v| v.label.is_none()).count();
        println!(
            "M={m:4} err {err:.3} acc {:.3} per-class {:?} rejected {rej} ({:?})",
            ev.accuracy(),
            ev.labels
                .iter()
                .enumerate()
                .map(|(k, l)| format!("{l}:{:.2}", ev.class_accuracy(k)))
                .collect::<Vec<_>>(),
            t.elapsed()
        );
    }
    Ok(())
}
