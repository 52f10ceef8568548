//! Synthetic gesture clips: a bright soft-edged blob over a dark background,
//! moved along a piecewise-linear script with per-clip placement, scale,
//! speed and waypoint jitter, plus additive Gaussian pixel noise.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::Frame;

/// Highest frame rate the sensor is driven at.
pub const MAX_FPS: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlobShape {
    #[default]
    Square,
    Disc,
    /// Brightness falls linearly from the center to the rim, like a shaded
    /// hand; motion then changes every pixel of the blob, not just its edges.
    Cone,
    /// Square filled with a random tile pattern that moves with the blob, so
    /// any displacement changes the whole covered area.
    Textured,
}

/// Trajectory of one gesture class in normalized image coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GestureScript {
    pub label: String,
    pub waypoints: Vec<(f64, f64)>,
    /// Relative duration of each segment; `None` moves at constant speed.
    pub segment_weights: Option<Vec<f64>>,
    /// Blob diameter in pixels.
    pub blob_size: f64,
    /// Brightness above background.
    pub intensity: f64,
    pub shape: BlobShape,
}

impl GestureScript {
    fn with(label: &str, waypoints: &[(f64, f64)]) -> Self {
        Self {
            label: label.to_string(),
            waypoints: waypoints.to_vec(),
            segment_weights: None,
            blob_size: 144.0,
            intensity: 55.0,
            shape: BlobShape::Textured,
        }
    }

    /// Top stroke, diagonal back to the lower left, bottom stroke.
    pub fn z() -> Self {
        Self::with("Z", &[(0.3, 0.3), (0.7, 0.3), (0.3, 0.7), (0.7, 0.7)])
    }

    /// Horizontal stroke, move to the top, vertical stroke.
    pub fn plus() -> Self {
        Self::with("+", &[(0.3, 0.5), (0.7, 0.5), (0.5, 0.3), (0.5, 0.7)])
    }

    /// Falling diagonal, move up the right side, rising-to-left diagonal.
    pub fn x() -> Self {
        Self::with("X", &[(0.3, 0.3), (0.7, 0.7), (0.7, 0.3), (0.3, 0.7)])
    }

    pub fn builtin(label: &str) -> Option<Self> {
        match label {
            "Z" => Some(Self::z()),
            "+" => Some(Self::plus()),
            "X" => Some(Self::x()),
            _ => None,
        }
    }

    pub fn validate(&self, cfg: &SynthConfig) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::config(format!(
                "script `{}` needs at least two waypoints",
                self.label
            )));
        }
        if !(self.blob_size > 0.0 && self.blob_size < cfg.width.min(cfg.height) as f64) {
            return Err(Error::config(format!(
                "blob size {} does not fit the frame",
                self.blob_size
            )));
        }
        if let Some(w) = &self.segment_weights {
            if w.len() != self.waypoints.len() - 1 || w.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::config(
                    "segment weights must be positive, one per segment",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    /// Block size used to express ground truth in grid cells.
    pub block: usize,
    pub fps: f64,
    /// Nominal gesture duration before the per-clip speed factor.
    pub gesture_seconds: f64,
    /// Stationary hand before the gesture starts.
    pub lead_seconds: f64,
    /// Stationary hand after the gesture ends.
    pub tail_seconds: f64,
    pub noise_sigma: f64,
    pub background: f64,
    /// Standard deviation of per-waypoint jitter, normalized units.
    pub jitter_sigma: f64,
    /// Half-width of the uniform placement offset, normalized units.
    pub offset_range: f64,
    pub speed_range: (f64, f64),
    pub scale_range: (f64, f64),
    /// Half-width of the uniform per-axis stretch applied on top of `scale_range`.
    pub aspect_range: f64,
    /// Half-width of the uniform rotation about the gesture center, radians.
    pub rotation_range: f64,
    /// Standard deviation of the log duration factor of each segment.
    pub tempo_sigma: f64,
    /// Width of the blob's intensity ramp, pixels.
    pub edge_softness: f64,
    /// Tile edge of the textured blob's pattern, pixels.
    pub texture_tile: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            block: 16,
            fps: 10.0,
            gesture_seconds: 4.0,
            lead_seconds: 0.5,
            tail_seconds: 0.0,
            noise_sigma: 4.0,
            background: 30.0,
            jitter_sigma: 0.10,
            offset_range: 0.12,
            speed_range: (0.8, 1.2),
            scale_range: (0.85, 1.15),
            aspect_range: 0.0,
            rotation_range: 0.25,
            tempo_sigma: 0.35,
            edge_softness: 12.0,
            texture_tile: 8.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.block == 0 {
            return Err(Error::config("frame size and block must be positive"));
        }
        if !(self.fps > 0.0 && self.fps <= MAX_FPS) {
            return Err(Error::config(format!(
                "fps {} outside (0, {MAX_FPS}]",
                self.fps
            )));
        }
        let ranges_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi;
        if !(self.gesture_seconds > 0.0)
            || self.lead_seconds < 0.0
            || self.tail_seconds < 0.0
            || self.noise_sigma < 0.0
            || self.jitter_sigma < 0.0
            || self.offset_range < 0.0
            || !(self.texture_tile > 0.0)
            || !(0.0..1.0).contains(&self.aspect_range)
            || self.rotation_range < 0.0
            || self.tempo_sigma < 0.0
            || !ranges_ok(self.speed_range)
            || !ranges_ok(self.scale_range)
        {
            return Err(Error::config("synthesis parameters out of range"));
        }
        Ok(())
    }
}

/// Blob center over one frame pair, in grid cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthPoint {
    /// Index `i` of the pair `(i, i + 1)`.
    pub frame_index: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct RenderedClip {
    pub label: String,
    pub frames: Vec<Frame>,
    /// Blob centers in pixels, one per frame.
    pub positions: Vec<(f64, f64)>,
    /// Midpoint of consecutive blob centers for every pair where the blob moved.
    pub truth: Vec<TruthPoint>,
}

impl RenderedClip {
    /// SHA-256 over all frame bytes.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for f in &self.frames {
            h.update(f.pixels());
        }
        hex::encode(h.finalize())
    }
}

fn path_position(points: &[(f64, f64)], bounds: &[f64], s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let k = bounds
        .windows(2)
        .position(|w| s <= w[1])
        .unwrap_or(bounds.len() - 2);
    let span = bounds[k + 1] - bounds[k];
    let u = if span > 0.0 {
        (s - bounds[k]) / span
    } else {
        1.0
    };
    let (a, b) = (points[k], points[k + 1]);
    (a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u)
}

fn ramp(distance_inside: f64, softness: f64) -> f64 {
    if softness <= 0.0 {
        return if distance_inside >= 0.0 { 1.0 } else { 0.0 };
    }
    (distance_inside / softness + 0.5).clamp(0.0, 1.0)
}

/// Tile brightness factors in `[0, 1)`, row-major over the blob's square.
struct Texture {
    side: usize,
    values: Vec<f64>,
}

impl Texture {
    fn draw<R: RngCore>(script: &GestureScript, cfg: &SynthConfig, rng: &mut R) -> Option<Self> {
        if script.shape != BlobShape::Textured {
            return None;
        }
        let side = (script.blob_size / cfg.texture_tile).ceil() as usize;
        Some(Self {
            side,
            values: (0..side * side).map(|_| rng.random::<f64>()).collect(),
        })
    }

    /// `u`, `v` are offsets from the blob's top-left corner in tiles.
    fn at(&self, u: f64, v: f64) -> f64 {
        let clamp = |t: f64| (t.max(0.0) as usize).min(self.side - 1);
        self.values[clamp(v) * self.side + clamp(u)]
    }
}

fn render_frame<R: RngCore>(
    cfg: &SynthConfig,
    script: &GestureScript,
    texture: Option<&Texture>,
    center: (f64, f64),
    rng: &mut R,
) -> Result<Frame> {
    let (w, h) = (cfg.width, cfg.height);
    let mut level = vec![cfg.background; w * h];
    let half = script.blob_size / 2.0;
    let reach = half + cfg.edge_softness;
    let x0 = ((center.0 - reach).floor().max(0.0)) as usize;
    let x1 = ((center.0 + reach).ceil().max(0.0) as usize).min(w);
    let y0 = ((center.1 - reach).floor().max(0.0)) as usize;
    let y1 = ((center.1 + reach).ceil().max(0.0) as usize).min(h);
    for y in y0..y1 {
        let dy = (y as f64 + 0.5 - center.1).abs();
        for x in x0..x1 {
            let dx = (x as f64 + 0.5 - center.0).abs();
            let a = match script.shape {
                BlobShape::Square => {
                    ramp(half - dx, cfg.edge_softness) * ramp(half - dy, cfg.edge_softness)
                }
                BlobShape::Disc => ramp(half - dx.hypot(dy), cfg.edge_softness),
                BlobShape::Cone => (1.0 - dx.hypot(dy) / half).max(0.0),
                BlobShape::Textured => {
                    let edge =
                        ramp(half - dx, cfg.edge_softness) * ramp(half - dy, cfg.edge_softness);
                    let t = texture.map_or(1.0, |t| {
                        t.at(
                            (x as f64 + 0.5 - center.0 + half) / cfg.texture_tile,
                            (y as f64 + 0.5 - center.1 + half) / cfg.texture_tile,
                        )
                    });
                    edge * t
                }
            };
            level[y * w + x] += script.intensity * a;
        }
    }
    let pixels = if cfg.noise_sigma > 0.0 {
        level
            .into_iter()
            .map(|v| {
                let n: f64 = StandardNormal.sample(rng);
                (v + cfg.noise_sigma * n).round().clamp(0.0, 255.0) as u8
            })
            .collect()
    } else {
        level
            .into_iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    };
    Frame::new(w, h, pixels)
}

/// Blob center per frame, in pixels, before rendering.
pub fn plan_positions(
    script: &GestureScript,
    cfg: &SynthConfig,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    script.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan_with(script, cfg, &mut rng)
}

fn plan_with(
    script: &GestureScript,
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, f64)>> {
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };
    let offset = cfg.offset_range;
    let (ox, oy) = if offset > 0.0 {
        (
            rng.random_range(-offset..offset),
            rng.random_range(-offset..offset),
        )
    } else {
        (0.0, 0.0)
    };
    let scale = uniform(rng, cfg.scale_range);
    let speed = uniform(rng, cfg.speed_range);
    let symmetric = |rng: &mut ChaCha8Rng, half: f64| {
        if half > 0.0 {
            rng.random_range(-half..half)
        } else {
            0.0
        }
    };
    let sx = scale * (1.0 + symmetric(rng, cfg.aspect_range));
    let sy = scale * (1.0 + symmetric(rng, cfg.aspect_range));
    let (sin, cos) = symmetric(rng, cfg.rotation_range).sin_cos();
    let jitter = Normal::new(0.0, cfg.jitter_sigma).map_err(|e| Error::config(e.to_string()))?;
    let tempo = Normal::new(0.0, cfg.tempo_sigma).map_err(|e| Error::config(e.to_string()))?;
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let points: Vec<(f64, f64)> = script
        .waypoints
        .iter()
        .map(|&(x, y)| {
            let jx = jitter.sample(rng);
            let jy = jitter.sample(rng);
            // Rotate in pixel space so the angle is not skewed by the frame aspect.
            let (dx, dy) = ((x - 0.5) * sx * w, (y - 0.5) * sy * h);
            (
                (0.5 + ox + jx) * w + dx * cos - dy * sin,
                (0.5 + oy + jy) * h + dx * sin + dy * cos,
            )
        })
        .collect();
    let base: Vec<f64> = match &script.segment_weights {
        Some(w) => w.clone(),
        None => points
            .windows(2)
            .map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1))
            .collect(),
    };
    let weights: Vec<f64> = base.iter().map(|w| w * tempo.sample(rng).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut bounds = vec![0.0];
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        bounds.push(if total > 0.0 { acc / total } else { 1.0 });
    }

    let lead = (cfg.lead_seconds * cfg.fps).round() as usize;
    let tail = (cfg.tail_seconds * cfg.fps).round() as usize;
    let moving = ((cfg.gesture_seconds / speed) * cfg.fps).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(lead + moving + tail + 1);
    out.extend(std::iter::repeat_n(points[0], lead));
    out.extend((0..=moving).map(|k| path_position(&points, &bounds, k as f64 / moving as f64)));
    out.extend(std::iter::repeat_n(
        *points.last().unwrap_or(&points[0]),
        tail,
    ));
    Ok(out)
}

/// Renders one clip. The same seed always yields the same frames.
pub fn render_gesture(
    script: &GestureScript,
    cfg: &SynthConfig,
    seed: u64,
) -> Result<RenderedClip> {
    cfg.validate()?;
    script.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = plan_with(script, cfg, &mut rng)?;
    let texture = Texture::draw(script, cfg, &mut rng);
    let frames = positions
        .iter()
        .map(|&c| render_frame(cfg, script, texture.as_ref(), c, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let b = cfg.block as f64;
    let truth = positions
        .windows(2)
        .enumerate()
        .filter(|(_, p)| p[0] != p[1])
        .map(|(i, p)| TruthPoint {
            frame_index: i,
            x: (p[0].0 + p[1].0) / (2.0 * b),
            y: (p[0].1 + p[1].1) / (2.0 * b),
        })
        .collect();
    Ok(RenderedClip {
        label: script.label.clone(),
        frames,
        positions,
        truth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stream(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Test => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Recipe for one clip of a dataset; render on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipSpec {
    pub label: String,
    pub class_index: usize,
    pub index: usize,
    pub split: Split,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub scripts: Vec<GestureScript>,
    pub split: Split,
    pub clips: Vec<ClipSpec>,
}

impl Dataset {
    pub fn render(&self, clip: &ClipSpec, cfg: &SynthConfig) -> Result<RenderedClip> {
        render_gesture(&self.scripts[clip.class_index], cfg, clip.seed)
    }

    /// SHA-256 over the concatenated content hashes of every clip.
    pub fn content_hash(&self, cfg: &SynthConfig) -> Result<String> {
        let mut h = Sha256::new();
        for c in &self.clips {
            h.update(self.render(c, cfg)?.content_hash().as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }
}

/// `per_class` clips of every script. Clip seeds come from a ChaCha8 stream
/// keyed by `seed` and the split, so train and test draw from separate streams.
pub fn make_dataset(
    scripts: &[GestureScript],
    per_class: usize,
    seed: u64,
    split: Split,
) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::config("need at least one clip per class"));
    }
    if scripts.is_empty() {
        return Err(Error::config("need at least one gesture script"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split.stream());
    let mut clips = Vec::with_capacity(per_class * scripts.len());
    for index in 0..per_class {
        for (class_index, s) in scripts.iter().enumerate() {
            clips.push(ClipSpec {
                label: s.label.clone(),
                class_index,
                index,
                split,
                seed: rng.next_u64(),
            });
        }
    }
    Ok(Dataset {
        scripts: scripts.to_vec(),
        split,
        clips,
    })
}
