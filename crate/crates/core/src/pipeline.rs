//! End-to-end per-frame processing: difference, block reduction, motion gate,
//! and motion-center extraction in either domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{difference_block_image, max_block_norm, BlockImage, Downsample, Frame};
use crate::projection::{CompressionRatios, ProjectionMatrix};
use crate::recognizer::MotionTrace;
use crate::scalar::Scalar;
use crate::smashed_filter::{
    extract_center_compressed, extract_center_uncompressed, MotionCenter, RectSize, TemplateBank,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub width: usize,
    pub height: usize,
    pub block: usize,
    pub measurements: usize,
    pub template: RectSize,
    /// Additional rectangle sizes scanned after `template`.
    pub extra_templates: Vec<RectSize>,
    pub phi_seed: u64,
    /// Motion gate as a fraction of the largest possible block-image norm.
    pub epsilon_fraction: f64,
    pub buffer_len: usize,
    pub downsample: Downsample,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            block: 16,
            measurements: 400,
            template: RectSize::new(10, 10),
            extra_templates: Vec::new(),
            phi_seed: 0x5EED_0F_F1,
            epsilon_fraction: 0.02,
            buffer_len: 50,
            downsample: Downsample::BlockAverage,
        }
    }
}

impl PipelineConfig {
    pub fn grid(&self) -> (usize, usize) {
        (
            self.width / self.block.max(1),
            self.height / self.block.max(1),
        )
    }

    pub fn cells(&self) -> usize {
        let (gw, gh) = self.grid();
        gw * gh
    }

    pub fn validate(&self) -> Result<()> {
        if self.block == 0 || self.width % self.block != 0 || self.height % self.block != 0 {
            return Err(Error::config(format!(
                "{}x{} frames are not divisible into {}-pixel blocks",
                self.width, self.height, self.block
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("frame dimensions must be positive"));
        }
        if self.measurements == 0 || self.measurements > self.cells() {
            return Err(Error::config(format!(
                "measurement count {} outside 1..={}",
                self.measurements,
                self.cells()
            )));
        }
        if self.buffer_len == 0 {
            return Err(Error::config("buffer length must be positive"));
        }
        if !(self.epsilon_fraction >= 0.0 && self.epsilon_fraction < 1.0) {
            return Err(Error::config("epsilon_fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn ratios(&self) -> CompressionRatios {
        CompressionRatios {
            pixels: self.width * self.height,
            cells: self.cells(),
            measurements: self.measurements,
        }
    }

    pub fn fingerprint(&self) -> PipelineFingerprint {
        PipelineFingerprint {
            width: self.width,
            height: self.height,
            block: self.block,
            measurements: self.measurements,
            template: self.template,
            phi_seed: self.phi_seed,
        }
    }
}

/// The parts of a pipeline configuration a trained model depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineFingerprint {
    pub width: usize,
    pub height: usize,
    pub block: usize,
    pub measurements: usize,
    pub template: RectSize,
    pub phi_seed: u64,
}

/// Where motion centers are extracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Nearest rectangle template on the block image.
    Uncompressed,
    /// Smashed filter on the random measurements.
    Compressed,
}

/// One block image that passed the motion gate.
#[derive(Clone, Debug)]
pub struct GatedFrame<T> {
    pub frame_index: usize,
    pub block: BlockImage<T>,
}

#[derive(Clone, Debug)]
pub struct Pipeline<T> {
    config: PipelineConfig,
    phi: ProjectionMatrix,
    bank: TemplateBank<T>,
    epsilon: T,
}

impl<T: Scalar> Pipeline<T> {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let (gw, gh) = config.grid();
        let phi = ProjectionMatrix::new(config.measurements, gw * gh, config.phi_seed)?;
        let mut sizes = vec![config.template];
        sizes.extend(config.extra_templates.iter().copied());
        let bank = TemplateBank::build_multi(gw, gh, &sizes, &phi)?;
        let epsilon = T::lit(config.epsilon_fraction) * max_block_norm::<T>(gw * gh);
        Ok(Self {
            config,
            phi,
            bank,
            epsilon,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn phi(&self) -> &ProjectionMatrix {
        &self.phi
    }

    pub fn bank(&self) -> &TemplateBank<T> {
        &self.bank
    }

    /// Motion gate threshold ε on the block-image norm.
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn block_image(&self, prev: &Frame, next: &Frame) -> Result<BlockImage<T>> {
        if prev.width() != self.config.width || prev.height() != self.config.height {
            return Err(Error::structural(format!(
                "pipeline expects {}x{} frames, got {}x{}",
                self.config.width,
                self.config.height,
                prev.width(),
                prev.height()
            )));
        }
        difference_block_image(prev, next, self.config.block, self.config.downsample)
    }

    pub fn passes_gate(&self, y: &BlockImage<T>) -> bool {
        y.motion_energy() >= self.epsilon
    }

    /// Block images of all consecutive frame pairs that pass the motion gate.
    /// Pair `(i, i + 1)` carries frame index `i`.
    pub fn gated_blocks(&self, frames: &[Frame]) -> Result<Vec<GatedFrame<T>>> {
        if frames.len() < 2 {
            return Err(Error::structural(format!(
                "need at least 2 frames, got {}",
                frames.len()
            )));
        }
        let mut out = Vec::new();
        for (i, pair) in frames.windows(2).enumerate() {
            let block = self.block_image(&pair[0], &pair[1])?;
            if self.passes_gate(&block) {
                out.push(GatedFrame {
                    frame_index: i,
                    block,
                });
            }
        }
        Ok(out)
    }

    pub fn center(
        &self,
        y: &BlockImage<T>,
        frame_index: usize,
        domain: Domain,
    ) -> Result<MotionCenter<T>> {
        match domain {
            Domain::Uncompressed => extract_center_uncompressed(y, &self.bank, frame_index),
            Domain::Compressed => {
                extract_center_compressed(&self.phi.project_block(y)?, &self.bank, frame_index)
            }
        }
    }

    pub fn centers_of(
        &self,
        gated: &[GatedFrame<T>],
        domain: Domain,
    ) -> Result<Vec<MotionCenter<T>>> {
        gated
            .iter()
            .map(|g| self.center(&g.block, g.frame_index, domain))
            .collect()
    }

    pub fn centers(&self, frames: &[Frame], domain: Domain) -> Result<Vec<MotionCenter<T>>> {
        self.centers_of(&self.gated_blocks(frames)?, domain)
    }

    /// Pushes centers into a FIFO of the configured length.
    pub fn trace_from_centers(&self, centers: &[MotionCenter<T>]) -> MotionTrace<T> {
        let mut trace = MotionTrace::new(self.config.buffer_len);
        for c in centers {
            trace.push_center(c);
        }
        trace
    }

    pub fn trace(&self, frames: &[Frame], domain: Domain) -> Result<MotionTrace<T>> {
        Ok(self.trace_from_centers(&self.centers(frames, domain)?))
    }
}
