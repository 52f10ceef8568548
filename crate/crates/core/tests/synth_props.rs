use cdgesture::imaging::frame_difference;
use cdgesture::pipeline::{Domain, PipelineConfig};
use cdgesture::synth::{make_dataset, render_gesture, GestureScript, Split, SynthConfig};
use cdgesture::{DifferenceImage, Pipeline};

fn quiet() -> SynthConfig {
    SynthConfig {
        noise_sigma: 0.0,
        jitter_sigma: 0.0,
        offset_range: 0.0,
        rotation_range: 0.0,
        tempo_sigma: 0.0,
        ..SynthConfig::default()
    }
}

#[test]
fn extracted_centers_track_truth_without_noise() {
    let pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let cfg = quiet();
    for script in [
        GestureScript::x(),
        GestureScript::plus(),
        GestureScript::z(),
    ] {
        for seed in 0..3 {
            let clip = render_gesture(&script, &cfg, seed).unwrap();
            for domain in [Domain::Uncompressed, Domain::Compressed] {
                let centers = pipeline.centers(&clip.frames, domain).unwrap();
                assert!(!centers.is_empty());
                let mut errs: Vec<f64> = centers
                    .iter()
                    .filter_map(|c| {
                        let t = clip.truth.iter().find(|t| t.frame_index == c.frame_index)?;
                        Some(((c.x - t.x).powi(2) + (c.y - t.y).powi(2)).sqrt())
                    })
                    .collect();
                errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = errs[errs.len() / 2];
                assert!(
                    median < 2.0,
                    "{} seed {seed} {domain:?}: median error {median}",
                    script.label
                );
            }
        }
    }
}

#[test]
fn idle_frames_differ_only_by_noise() {
    let cfg = quiet();
    let clip = render_gesture(&GestureScript::z(), &cfg, 9).unwrap();
    let first = clip.truth[0].frame_index;
    assert!(first > 0);
    for i in 0..first {
        let d: DifferenceImage = frame_difference(&clip.frames[i], &clip.frames[i + 1]).unwrap();
        assert!(d.pixels().iter().all(|&v| v == 0.0), "pair {i}");
    }
    let moving: DifferenceImage =
        frame_difference(&clip.frames[first], &clip.frames[first + 1]).unwrap();
    assert!(moving.pixels().iter().any(|&v| v > 0.0));
}

#[test]
fn idle_noise_stays_under_the_gate() {
    let pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let clip = render_gesture(&GestureScript::x(), &SynthConfig::default(), 4).unwrap();
    let first = clip.truth[0].frame_index;
    for i in 0..first {
        let y = pipeline
            .block_image(&clip.frames[i], &clip.frames[i + 1])
            .unwrap();
        assert!(!pipeline.passes_gate(&y), "idle pair {i} passed the gate");
    }
}

#[test]
fn datasets_are_reproducible() {
    let cfg = SynthConfig {
        width: 320,
        height: 240,
        ..SynthConfig::default()
    };
    let scripts: Vec<GestureScript> = ["X", "+", "Z"]
        .iter()
        .map(|l| {
            let mut s = GestureScript::builtin(l).unwrap();
            s.blob_size = 72.0;
            s
        })
        .collect();
    let a = make_dataset(&scripts, 2, 77, Split::Train).unwrap();
    let b = make_dataset(&scripts, 2, 77, Split::Train).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.content_hash(&cfg).unwrap(), b.content_hash(&cfg).unwrap());
    let other = make_dataset(&scripts, 2, 78, Split::Train).unwrap();
    assert_ne!(
        a.content_hash(&cfg).unwrap(),
        other.content_hash(&cfg).unwrap()
    );
}
