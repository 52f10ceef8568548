//! Motion-trace buffering and nearest-neighbor gesture classification.

pub mod dtw;
pub mod model;

pub use dtw::{
    dtw_alignment, dtw_distance, dtw_distance_banded, subsequence_match, Alignment, TracePoint,
};
pub use model::GestureModel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Frame;
use crate::pipeline::{Domain, Pipeline};
use crate::scalar::Scalar;
use crate::smashed_filter::MotionCenter;

/// Default FIFO length.
pub const DEFAULT_BUFFER_LEN: usize = 50;

/// Bounded FIFO of motion centers; the oldest point is evicted when full.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionTrace<T> {
    points: Vec<TracePoint<T>>,
    capacity: usize,
}

impl<T: Scalar> MotionTrace<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            points: Vec::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    /// Keeps the newest `capacity` points.
    pub fn from_points(points: impl IntoIterator<Item = TracePoint<T>>, capacity: usize) -> Self {
        let mut t = Self::new(capacity);
        for p in points {
            t.push(p);
        }
        t
    }

    pub fn push(&mut self, p: TracePoint<T>) {
        if self.points.len() == self.capacity {
            self.points.remove(0);
        }
        self.points.push(p);
    }

    pub fn push_center(&mut self, c: &MotionCenter<T>) {
        self.push(TracePoint::new(c.x, c.y));
    }

    pub fn points(&self) -> &[TracePoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.points.clear();
    }
}

/// Matching knobs recorded alongside a model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchOptions {
    /// Subtract each sequence's mean before matching.
    pub mean_center: bool,
}

impl MatchOptions {
    fn prepare<T: Scalar>(&self, pts: &[TracePoint<T>]) -> Vec<TracePoint<T>> {
        if !self.mean_center || pts.is_empty() {
            return pts.to_vec();
        }
        let n = T::from_usize_lossy(pts.len());
        let mx = pts.iter().map(|p| p.x).sum::<T>() / n;
        let my = pts.iter().map(|p| p.y).sum::<T>() / n;
        pts.iter()
            .map(|p| TracePoint::new(p.x - mx, p.y - my))
            .collect()
    }

    pub fn distance<T: Scalar>(
        &self,
        buffer: &[TracePoint<T>],
        training: &[TracePoint<T>],
    ) -> Result<T> {
        subsequence_match(&self.prepare(buffer), &self.prepare(training))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GestureClass<T> {
    pub label: String,
    pub training: Vec<MotionTrace<T>>,
}

impl<T: Scalar> GestureClass<T> {
    pub fn new(label: impl Into<String>, training: Vec<MotionTrace<T>>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::config(format!("invalid class label `{label}`")));
        }
        if training.is_empty() {
            return Err(Error::config(format!(
                "class `{label}` has no training traces"
            )));
        }
        Ok(Self { label, training })
    }
}

/// Classification outcome. `runner_up` is the best distance reached by any
/// class other than the winner (infinite when there is none).
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict<T> {
    pub label: Option<String>,
    pub class_index: Option<usize>,
    pub distance: T,
    pub runner_up: T,
}

impl<T: Scalar> Verdict<T> {
    pub fn none() -> Self {
        Self {
            label: None,
            class_index: None,
            distance: T::infinity(),
            runner_up: T::infinity(),
        }
    }
}

/// Nearest training trace over all classes, accepted when its distance is
/// strictly below `tau`. Ties go to the earlier class, then the earlier trace.
pub fn classify<T: Scalar>(
    buffer: &MotionTrace<T>,
    classes: &[GestureClass<T>],
    tau: T,
    options: MatchOptions,
) -> Result<Verdict<T>> {
    if classes.is_empty() {
        return Err(Error::structural("classification needs at least one class"));
    }
    if buffer.is_empty() {
        return Ok(Verdict::none());
    }
    let mut per_class = Vec::with_capacity(classes.len());
    for class in classes {
        let mut best = T::infinity();
        for t in class.training.iter().filter(|t| !t.is_empty()) {
            let d = options.distance(buffer.points(), t.points())?;
            if d < best {
                best = d;
            }
        }
        per_class.push(best);
    }
    let mut winner = 0;
    for (k, &d) in per_class.iter().enumerate() {
        if d < per_class[winner] {
            winner = k;
        }
    }
    let distance = per_class[winner];
    let runner_up = per_class
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != winner)
        .map(|(_, &d)| d)
        .fold(T::infinity(), T::min);
    let accepted = distance < tau;
    Ok(Verdict {
        label: accepted.then(|| classes[winner].label.clone()),
        class_index: accepted.then_some(winner),
        distance,
        runner_up,
    })
}

/// Rejection threshold: the `percentile` (nearest rank) of all within-class
/// distances between distinct training traces.
pub fn calibrate_tau<T: Scalar>(
    classes: &[GestureClass<T>],
    percentile: f64,
    options: MatchOptions,
) -> Result<T> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::config(format!(
            "percentile {percentile} outside (0, 1]"
        )));
    }
    let mut dists = Vec::new();
    for class in classes {
        for (a, ta) in class.training.iter().enumerate() {
            for (b, tb) in class.training.iter().enumerate() {
                if a != b && !ta.is_empty() && !tb.is_empty() {
                    dists.push(options.distance(ta.points(), tb.points())?);
                }
            }
        }
    }
    if dists.is_empty() {
        return Err(Error::config(
            "calibrating the threshold needs two non-empty traces in some class",
        ));
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = ((percentile * dists.len() as f64).ceil() as usize).clamp(1, dists.len());
    Ok(dists[rank - 1])
}

/// Motion trace of a training clip, extracted with the uncompressed template
/// scan and gated by motion energy.
pub fn train_from_frames<T: Scalar>(
    frames: &[Frame],
    pipeline: &Pipeline<T>,
) -> Result<MotionTrace<T>> {
    pipeline.trace(frames, Domain::Uncompressed)
}
