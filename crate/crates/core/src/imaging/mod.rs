//! Grayscale frames, consecutive-frame differencing and the block-averaging
//! compression layer.
//!
//! Every image in this module is stored row-major; a block image's vector view
//! walks the grid row by row, so cell `(col, row)` sits at `row * grid_width + col`.
//! Projection matrices and template banks rely on this ordering.

pub mod rawclip;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest grayscale intensity.
pub const MAX_INTENSITY: f64 = 255.0;

/// 8-bit grayscale frame at native sensor resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::structural("frame dimensions must be non-zero"));
        }
        if pixels.len() != width * height {
            return Err(Error::structural(format!(
                "frame of {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Per-pixel magnitude of the change between two frames.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> DifferenceImage<T> {
    /// Builds a difference image from raw magnitudes. Negative or non-finite
    /// entries are rejected.
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if pixels.len() != width * height || width == 0 || height == 0 {
            return Err(Error::structural(format!(
                "difference image of {width}x{height} cannot hold {} pixels",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::structural(
                "difference magnitudes must be finite and non-negative",
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }
}

/// Low-resolution image produced by the block layer, `grid_width x grid_height`
/// cells. Its vector view is the `N`-dimensional signal fed to the projection.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockImage<T> {
    grid_width: usize,
    grid_height: usize,
    values: Vec<T>,
}

impl<T: Scalar> BlockImage<T> {
    pub fn new(grid_width: usize, grid_height: usize, values: Vec<T>) -> Result<Self> {
        if grid_width == 0 || grid_height == 0 || values.len() != grid_width * grid_height {
            return Err(Error::structural(format!(
                "block image of {grid_width}x{grid_height} cannot hold {} values",
                values.len()
            )));
        }
        Ok(Self {
            grid_width,
            grid_height,
            values,
        })
    }

    pub fn zeros(grid_width: usize, grid_height: usize) -> Result<Self> {
        Self::new(
            grid_width,
            grid_height,
            vec![T::zero(); grid_width * grid_height],
        )
    }

    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    /// Signal dimension `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major vector view.
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, col: usize, row: usize) -> T {
        self.values[row * self.grid_width + col]
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    /// L2 norm of the vector view.
    pub fn motion_energy(&self) -> T {
        motion_energy(self)
    }
}

/// How the first compression layer reduces resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Downsample {
    /// Mean over each `B x B` block.
    #[default]
    BlockAverage,
    /// Keep only the top-left pixel of each block.
    Subsample,
}

fn check_same_shape(a: &Frame, b: &Frame) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::structural(format!(
            "frame size mismatch: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

fn check_block(width: usize, height: usize, block: usize) -> Result<()> {
    if block == 0 || width % block != 0 || height % block != 0 {
        return Err(Error::structural(format!(
            "{width}x{height} image is not divisible into {block}x{block} blocks"
        )));
    }
    Ok(())
}

/// Absolute difference `|b - a|` of two equally sized frames.
pub fn frame_difference<T: Scalar>(a: &Frame, b: &Frame) -> Result<DifferenceImage<T>> {
    check_same_shape(a, b)?;
    let pixels = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| T::from_u8(p.abs_diff(q)).unwrap_or_else(T::zero))
        .collect();
    Ok(DifferenceImage {
        width: a.width,
        height: a.height,
        pixels,
    })
}

/// Mean of each `block x block` tile.
pub fn block_average<T: Scalar>(d: &DifferenceImage<T>, block: usize) -> Result<BlockImage<T>> {
    check_block(d.width, d.height, block)?;
    let gw = d.width / block;
    let gh = d.height / block;
    let mut sums = vec![T::zero(); gw * gh];
    for (y, row) in d.pixels.chunks_exact(d.width).enumerate() {
        let out = &mut sums[(y / block) * gw..(y / block + 1) * gw];
        for (cell, tile) in out.iter_mut().zip(row.chunks_exact(block)) {
            *cell = tile.iter().fold(*cell, |acc, &p| acc + p);
        }
    }
    let area = T::from_usize_lossy(block * block);
    let values = sums.into_iter().map(|s| s / area).collect();
    Ok(BlockImage {
        grid_width: gw,
        grid_height: gh,
        values,
    })
}

/// Keeps one pixel (the top-left one) out of every `block x block` tile.
pub fn block_subsample<T: Scalar>(d: &DifferenceImage<T>, block: usize) -> Result<BlockImage<T>> {
    check_block(d.width, d.height, block)?;
    let gw = d.width / block;
    let gh = d.height / block;
    let values = (0..gh)
        .flat_map(|r| (0..gw).map(move |c| (r, c)))
        .map(|(r, c)| d.pixels[r * block * d.width + c * block])
        .collect();
    Ok(BlockImage {
        grid_width: gw,
        grid_height: gh,
        values,
    })
}

/// Difference followed by block reduction without materializing the
/// full-resolution difference image. Equal to
/// `block_average(&frame_difference(a, b)?, block)` (or the subsampled variant).
pub fn difference_block_image<T: Scalar>(
    a: &Frame,
    b: &Frame,
    block: usize,
    mode: Downsample,
) -> Result<BlockImage<T>> {
    check_same_shape(a, b)?;
    check_block(a.width, a.height, block)?;
    let gw = a.width / block;
    let gh = a.height / block;
    let values = match mode {
        Downsample::BlockAverage => {
            // integer block sums are exact, so dividing once preserves the mean
            let mut sums = vec![0u32; gw * gh];
            for (y, (ra, rb)) in a
                .pixels
                .chunks_exact(a.width)
                .zip(b.pixels.chunks_exact(b.width))
                .enumerate()
            {
                let out = &mut sums[(y / block) * gw..(y / block + 1) * gw];
                for (cell, (ta, tb)) in out
                    .iter_mut()
                    .zip(ra.chunks_exact(block).zip(rb.chunks_exact(block)))
                {
                    *cell += ta
                        .iter()
                        .zip(tb)
                        .map(|(&p, &q)| p.abs_diff(q) as u32)
                        .sum::<u32>();
                }
            }
            let area = T::from_usize_lossy(block * block);
            sums.into_iter()
                .map(|s| T::from_u32(s).unwrap_or_else(T::zero) / area)
                .collect()
        }
        Downsample::Subsample => (0..gh)
            .flat_map(|r| (0..gw).map(move |c| (r, c)))
            .map(|(r, c)| {
                let k = r * block * a.width + c * block;
                T::from_u8(a.pixels[k].abs_diff(b.pixels[k])).unwrap_or_else(T::zero)
            })
            .collect(),
    };
    Ok(BlockImage {
        grid_width: gw,
        grid_height: gh,
        values,
    })
}

/// L2 norm of a block image's vector view.
pub fn motion_energy<T: Scalar>(y: &BlockImage<T>) -> T {
    y.values
        .iter()
        .fold(T::zero(), |acc, &v| acc + v * v)
        .sqrt()
}

/// Largest norm a block image with `n` cells can reach (every cell at 255).
pub fn max_block_norm<T: Scalar>(n: usize) -> T {
    T::lit(MAX_INTENSITY) * T::from_usize_lossy(n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Frame {
        let pixels = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Frame::new(w, h, pixels).unwrap()
    }

    #[test]
    fn rejects_bad_frame_length() {
        assert!(matches!(
            Frame::new(4, 4, vec![0; 15]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn identical_frames_give_zero_difference() {
        let f = frame_from_fn(32, 16, |x, y| ((x * 7 + y * 3) % 256) as u8);
        let d: DifferenceImage<f64> = frame_difference(&f, &f).unwrap();
        assert!(d.pixels().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn black_to_white_is_full_scale() {
        let a = Frame::filled(16, 16, 0).unwrap();
        let b = Frame::filled(16, 16, 255).unwrap();
        let d: DifferenceImage<f32> = frame_difference(&a, &b).unwrap();
        assert!(d.pixels().iter().all(|&p| p == 255.0));
    }

    #[test]
    fn moved_blob_changes_only_union_of_supports() {
        let blob = |ox: usize| {
            move |x: usize, y: usize| -> u8 {
                if (ox..ox + 40).contains(&x) && (20..60).contains(&y) {
                    200
                } else {
                    10
                }
            }
        };
        let a = frame_from_fn(128, 96, blob(30));
        let b = frame_from_fn(128, 96, blob(50));
        let d: DifferenceImage<f64> = frame_difference(&a, &b).unwrap();
        for y in 0..96 {
            for x in 0..128 {
                let expected = (a.pixel(x, y) as f64 - b.pixel(x, y) as f64).abs();
                assert_eq!(d.pixels()[y * 128 + x], expected);
                let in_union = (30..90).contains(&x) && (20..60).contains(&y);
                if !in_union {
                    assert_eq!(expected, 0.0);
                }
            }
        }
    }

    #[test]
    fn size_mismatch_is_structural() {
        let a = Frame::filled(16, 16, 0).unwrap();
        let b = Frame::filled(32, 16, 0).unwrap();
        assert!(matches!(
            frame_difference::<f64>(&a, &b),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            difference_block_image::<f64>(&a, &b, 16, Downsample::BlockAverage),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn constant_image_averages_to_constant() {
        let d = DifferenceImage::new(64, 48, vec![37.5f64; 64 * 48]).unwrap();
        let y = block_average(&d, 16).unwrap();
        assert_eq!((y.grid_width(), y.grid_height()), (4, 3));
        assert!(y.as_slice().iter().all(|&v| v == 37.5));
    }

    #[test]
    fn vga_input_gives_1200_cells() {
        let d = DifferenceImage::new(640, 480, vec![0.0f64; 640 * 480]).unwrap();
        let y = block_average(&d, 16).unwrap();
        assert_eq!((y.grid_width(), y.grid_height(), y.len()), (40, 30, 1200));
    }

    #[test]
    fn single_aligned_bright_block() {
        let (w, h) = (640, 480);
        let mut px = vec![0.0f64; w * h];
        for y in 32..48 {
            for x in 80..96 {
                px[y * w + x] = 255.0;
            }
        }
        let y = block_average(&DifferenceImage::new(w, h, px).unwrap(), 16).unwrap();
        for (k, &v) in y.as_slice().iter().enumerate() {
            if k == 2 * 40 + 5 {
                assert_eq!(v, 255.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn indivisible_dimensions_rejected() {
        let d = DifferenceImage::new(50, 48, vec![0.0f64; 50 * 48]).unwrap();
        assert!(matches!(block_average(&d, 16), Err(Error::Structural(_))));
        assert!(matches!(block_subsample(&d, 16), Err(Error::Structural(_))));
    }

    #[test]
    fn motion_energy_cases() {
        let z = BlockImage::<f64>::zeros(4, 3).unwrap();
        assert_eq!(z.motion_energy(), 0.0);
        let mut v = vec![0.0f64; 12];
        v[7] = 3.0;
        assert_eq!(BlockImage::new(4, 3, v).unwrap().motion_energy(), 3.0);
        let v: Vec<f64> = (0..12)
            .map(|k| (k as f64 * 0.37).sin() * 40.0 + 41.0)
            .collect();
        let oracle = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let e = BlockImage::new(4, 3, v).unwrap().motion_energy();
        assert!((e - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn subsample_picks_top_left_pixels() {
        let f = frame_from_fn(64, 48, |x, y| (x + 2 * y) as u8);
        let z = Frame::filled(64, 48, 0).unwrap();
        let y: BlockImage<f64> = difference_block_image(&z, &f, 16, Downsample::Subsample).unwrap();
        assert_eq!(y.value(1, 2), (16 + 2 * 32) as f64);
        let d = frame_difference::<f64>(&z, &f).unwrap();
        assert_eq!(block_subsample(&d, 16).unwrap(), y);
    }

    #[test]
    fn fused_path_matches_composition() {
        let a = frame_from_fn(96, 64, |x, y| ((x * 31 + y * 17) % 251) as u8);
        let b = frame_from_fn(96, 64, |x, y| ((x * 13 + y * 29 + 5) % 241) as u8);
        let fused: BlockImage<f64> =
            difference_block_image(&a, &b, 16, Downsample::BlockAverage).unwrap();
        let composed = block_average(&frame_difference::<f64>(&a, &b).unwrap(), 16).unwrap();
        for (p, q) in fused.as_slice().iter().zip(composed.as_slice()) {
            assert!((p - q).abs() <= 1e-12 * q.max(1.0));
        }
    }
}
