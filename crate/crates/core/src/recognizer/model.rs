//! Trained gesture model and its versioned text file.
//!
//! ```text
//! cdgesture-model 1
//! matching subsequence-open-begin cost=euclidean steps=3 normalize=path-length band=none mean-center=off
//! tau 3.1415
//! tau-percentile 0.95
//! width 640
//! height 480
//! block 16
//! measurements 400
//! template 10x10
//! phi-seed 1592594417
//! class X 2
//! trace 10.5,7 11,7.5 12,8
//! trace 9,7
//! ```
//!
//! Coordinates are `x,y` pairs in grid cells; an empty trace is a bare `trace`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{
    calibrate_tau, classify, GestureClass, MatchOptions, MotionTrace, TracePoint, Verdict,
};
use crate::error::{Error, Result};
use crate::pipeline::PipelineFingerprint;
use crate::scalar::Scalar;
use crate::smashed_filter::RectSize;

const MAGIC: &str = "cdgesture-model";
const VERSION: u32 = 1;
const MATCHING: &str =
    "subsequence-open-begin cost=euclidean steps=3 normalize=path-length band=none";

#[derive(Clone, Debug, PartialEq)]
pub struct GestureModel<T> {
    pub classes: Vec<GestureClass<T>>,
    pub tau: T,
    pub tau_percentile: f64,
    pub options: MatchOptions,
    pub fingerprint: PipelineFingerprint,
}

impl<T: Scalar + FromStr> GestureModel<T> {
    /// Builds a model and calibrates its threshold from the training traces.
    pub fn train(
        classes: Vec<GestureClass<T>>,
        tau_percentile: f64,
        options: MatchOptions,
        fingerprint: PipelineFingerprint,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::config("a model needs at least one class"));
        }
        let tau = calibrate_tau(&classes, tau_percentile, options)?;
        Ok(Self {
            classes,
            tau,
            tau_percentile,
            options,
            fingerprint,
        })
    }

    pub fn classify(&self, buffer: &MotionTrace<T>) -> Result<Verdict<T>> {
        classify(buffer, &self.classes, self.tau, self.options)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let fp = &self.fingerprint;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(
            s,
            "matching {MATCHING} mean-center={}",
            if self.options.mean_center {
                "on"
            } else {
                "off"
            }
        );
        let _ = writeln!(s, "tau {}", self.tau);
        let _ = writeln!(s, "tau-percentile {}", self.tau_percentile);
        let _ = writeln!(s, "width {}", fp.width);
        let _ = writeln!(s, "height {}", fp.height);
        let _ = writeln!(s, "block {}", fp.block);
        let _ = writeln!(s, "measurements {}", fp.measurements);
        let _ = writeln!(s, "template {}x{}", fp.template.w, fp.template.h);
        let _ = writeln!(s, "phi-seed {}", fp.phi_seed);
        for class in &self.classes {
            let _ = writeln!(s, "class {} {}", class.label, class.training.len());
            for t in &class.training {
                s.push_str("trace");
                for p in t.points() {
                    let _ = write!(s, " {},{}", p.x, p.y);
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let bad = |what: &str| Error::Parse(format!("model file: {what}"));

        let head = lines.next().ok_or_else(|| bad("empty file"))?;
        match head.split_whitespace().collect::<Vec<_>>().as_slice() {
            [MAGIC, v] if *v == VERSION.to_string() => {}
            _ => return Err(bad(&format!("unsupported header `{head}`"))),
        }

        let mut field = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| bad(&format!("missing `{key}`")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(bad(&format!("expected `{key}`, found `{line}`"))),
            }
        };
        let matching = field("matching")?;
        let mean_center = match matching.strip_prefix(MATCHING).map(str::trim) {
            Some("mean-center=on") => true,
            Some("mean-center=off") => false,
            _ => return Err(bad(&format!("unsupported matching `{matching}`"))),
        };
        let tau: T = parse_num(&field("tau")?)?;
        let tau_percentile: f64 = parse_num(&field("tau-percentile")?)?;
        let width = parse_num(&field("width")?)?;
        let height = parse_num(&field("height")?)?;
        let block = parse_num(&field("block")?)?;
        let measurements = parse_num(&field("measurements")?)?;
        let template = {
            let v = field("template")?;
            let (w, h) = v
                .split_once('x')
                .ok_or_else(|| bad(&format!("bad template `{v}`")))?;
            RectSize::new(parse_num(w)?, parse_num(h)?)
        };
        let phi_seed = parse_num(&field("phi-seed")?)?;
        let fingerprint = PipelineFingerprint {
            width,
            height,
            block,
            measurements,
            template,
            phi_seed,
        };

        let rest: Vec<&str> = lines.collect();
        let mut classes = Vec::new();
        let mut k = 0;
        while k < rest.len() {
            let parts: Vec<&str> = rest[k].split_whitespace().collect();
            let (label, count) = match parts.as_slice() {
                ["class", label, count] => (label.to_string(), parse_num::<usize>(count)?),
                _ => return Err(bad(&format!("expected `class`, found `{}`", rest[k]))),
            };
            k += 1;
            let mut training = Vec::with_capacity(count);
            for _ in 0..count {
                let line = rest
                    .get(k)
                    .ok_or_else(|| bad(&format!("class `{label}` is short of traces")))?;
                let mut items = line.split_whitespace();
                if items.next() != Some("trace") {
                    return Err(bad(&format!("expected `trace`, found `{line}`")));
                }
                let pts = items
                    .map(|pair| {
                        let (x, y) = pair
                            .split_once(',')
                            .ok_or_else(|| bad(&format!("bad point `{pair}`")))?;
                        Ok(TracePoint::new(parse_num(x)?, parse_num(y)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let cap = pts.len().max(1);
                training.push(MotionTrace::from_points(pts, cap));
                k += 1;
            }
            classes.push(GestureClass::new(label, training)?);
        }
        if classes.is_empty() {
            return Err(bad("no classes"));
        }
        Ok(Self {
            classes,
            tau,
            tau_percentile,
            options: MatchOptions { mean_center },
            fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_num<N: FromStr>(s: &str) -> Result<N> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("model file: bad number `{s}`")))
}
