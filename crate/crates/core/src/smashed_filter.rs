//! Rectangle template bank and motion-center extraction.
//!
//! A template is a uniform rectangle on the block grid, normalized to unit L2
//! norm. It is indexed by its top-left cell; the reported motion center is the
//! rectangle's geometric center (`corner + size / 2`). Every scan keeps the
//! first best candidate in bank order, so ties go to the smallest row-major
//! corner (and to the earlier size in multi-size banks).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BlockImage;
use crate::projection::{CompressedVector, ProjectionMatrix};
use crate::scalar::Scalar;

/// Rectangle size in grid cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RectSize {
    pub w: usize,
    pub h: usize,
}

impl RectSize {
    pub const fn new(w: usize, h: usize) -> Self {
        Self { w, h }
    }

    pub fn cells(&self) -> usize {
        self.w * self.h
    }
}

impl Default for RectSize {
    fn default() -> Self {
        Self::new(10, 10)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemplateSpec {
    /// Top-left cell column.
    pub x: usize,
    /// Top-left cell row.
    pub y: usize,
    pub size: RectSize,
}

impl TemplateSpec {
    pub fn center<T: Scalar>(&self) -> (T, T) {
        let half = T::lit(0.5);
        (
            T::from_usize_lossy(self.x) + T::from_usize_lossy(self.size.w) * half,
            T::from_usize_lossy(self.y) + T::from_usize_lossy(self.size.h) * half,
        )
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        (self.x..self.x + self.size.w).contains(&col)
            && (self.y..self.y + self.size.h).contains(&row)
    }
}

/// Uncompressed templates plus their images under one projection matrix.
#[derive(Clone, Debug)]
pub struct TemplateBank<T> {
    grid_width: usize,
    grid_height: usize,
    specs: Vec<TemplateSpec>,
    uncompressed: Vec<Vec<T>>,
    compressed: Vec<Vec<T>>,
    phi_seed: u64,
    m: usize,
}

impl<T: Scalar> TemplateBank<T> {
    /// One template per admissible corner for a single rectangle size.
    pub fn build(
        grid_width: usize,
        grid_height: usize,
        size: RectSize,
        phi: &ProjectionMatrix,
    ) -> Result<Self> {
        Self::build_multi(grid_width, grid_height, &[size], phi)
    }

    /// Sizes are enumerated in the given order, corners row-major within each size.
    pub fn build_multi(
        grid_width: usize,
        grid_height: usize,
        sizes: &[RectSize],
        phi: &ProjectionMatrix,
    ) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::structural(
                "template bank needs at least one rectangle size",
            ));
        }
        if phi.n() != grid_width * grid_height {
            return Err(Error::structural(format!(
                "projection input dimension {} does not match a {grid_width}x{grid_height} grid",
                phi.n()
            )));
        }
        let mut specs = Vec::new();
        for &size in sizes {
            if size.w == 0 || size.h == 0 || size.w > grid_width || size.h > grid_height {
                return Err(Error::structural(format!(
                    "{}x{} rectangle does not fit a {grid_width}x{grid_height} grid",
                    size.w, size.h
                )));
            }
            for y in 0..=grid_height - size.h {
                for x in 0..=grid_width - size.w {
                    specs.push(TemplateSpec { x, y, size });
                }
            }
        }
        let uncompressed: Vec<Vec<T>> = specs
            .iter()
            .map(|s| {
                let level = T::one() / T::from_usize_lossy(s.size.cells()).sqrt();
                (0..grid_width * grid_height)
                    .map(|k| {
                        if s.contains(k % grid_width, k / grid_width) {
                            level
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        // Row sums of Φ over each rectangle, from one summed-area table per row.
        let (gw, stride) = (grid_width, grid_width + 1);
        let mut compressed = vec![vec![T::zero(); phi.m()]; specs.len()];
        let mut table = vec![0i32; stride * (grid_height + 1)];
        for i in 0..phi.m() {
            let row = phi.row(i);
            for y in 0..grid_height {
                let mut run = 0i32;
                for x in 0..gw {
                    run += row[y * gw + x] as i32;
                    table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + run;
                }
            }
            for (spec, out) in specs.iter().zip(compressed.iter_mut()) {
                let (x0, y0, x1, y1) = (spec.x, spec.y, spec.x + spec.size.w, spec.y + spec.size.h);
                let sum =
                    table[y1 * stride + x1] - table[y0 * stride + x1] - table[y1 * stride + x0]
                        + table[y0 * stride + x0];
                out[i] = T::from_i32(sum).expect("rectangle sum fits the scalar")
                    / T::from_usize_lossy(spec.size.cells()).sqrt();
            }
        }
        Ok(Self {
            grid_width,
            grid_height,
            specs,
            uncompressed,
            compressed,
            phi_seed: phi.seed(),
            m: phi.m(),
        })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[TemplateSpec] {
        &self.specs
    }

    pub fn uncompressed(&self, k: usize) -> &[T] {
        &self.uncompressed[k]
    }

    pub fn compressed(&self, k: usize) -> &[T] {
        &self.compressed[k]
    }

    pub fn phi_seed(&self) -> u64 {
        self.phi_seed
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    /// `<y, X(α, r)>` for every template.
    pub fn correlations_uncompressed(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_signal(y.len())?;
        Ok(self.uncompressed.iter().map(|t| dot(t, y)).collect())
    }

    /// `ŷᵀ Φ X(α, r)` for every template.
    pub fn correlations_compressed(&self, y_hat: &CompressedVector<T>) -> Result<Vec<T>> {
        if y_hat.source_seed() != self.phi_seed || y_hat.len() != self.m {
            return Err(Error::config(format!(
                "measurements from seed {} (M={}) do not match bank built for seed {} (M={})",
                y_hat.source_seed(),
                y_hat.len(),
                self.phi_seed,
                self.m
            )));
        }
        Ok(self
            .compressed
            .iter()
            .map(|t| dot(t, y_hat.values()))
            .collect())
    }

    fn check_signal(&self, len: usize) -> Result<()> {
        if len != self.grid_width * self.grid_height {
            return Err(Error::structural(format!(
                "signal length {len} does not match {}x{} grid",
                self.grid_width, self.grid_height
            )));
        }
        Ok(())
    }

    fn center_of(&self, k: usize, score: T, frame_index: usize) -> MotionCenter<T> {
        let (x, y) = self.specs[k].center();
        MotionCenter {
            x,
            y,
            score,
            frame_index,
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q)
}

/// First index holding the maximum.
fn argmax<T: Scalar>(scores: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (k, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((k, s)),
        }
    }
    best.map(|(k, _)| k)
}

/// Estimated location of the moving hand region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionCenter<T> {
    pub x: T,
    pub y: T,
    pub score: T,
    pub frame_index: usize,
}

/// Nearest template in Euclidean distance, evaluated literally as
/// `‖y − X(α, r)‖₂`. Reports the winner's correlation as its score.
pub fn extract_center_uncompressed<T: Scalar>(
    y: &BlockImage<T>,
    bank: &TemplateBank<T>,
    frame_index: usize,
) -> Result<MotionCenter<T>> {
    bank.check_signal(y.len())?;
    let signal = y.as_slice();
    let mut best: Option<(usize, T)> = None;
    for (k, t) in bank.uncompressed.iter().enumerate() {
        let dist = signal
            .iter()
            .zip(t)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt();
        match best {
            Some((_, b)) if !(dist < b) => {}
            _ => best = Some((k, dist)),
        }
    }
    let (k, _) = best.ok_or_else(|| Error::structural("empty template bank"))?;
    Ok(bank.center_of(k, dot(&bank.uncompressed[k], signal), frame_index))
}

/// Largest uncompressed correlation. Equals [`extract_center_uncompressed`]
/// whenever all templates share one norm.
pub fn extract_center_correlation<T: Scalar>(
    y: &BlockImage<T>,
    bank: &TemplateBank<T>,
    frame_index: usize,
) -> Result<MotionCenter<T>> {
    let scores = bank.correlations_uncompressed(y.as_slice())?;
    let k = argmax(&scores).ok_or_else(|| Error::structural("empty template bank"))?;
    Ok(bank.center_of(k, scores[k], frame_index))
}

/// Smashed filter: largest `ŷᵀ Φ X(α, r)` over the bank.
pub fn extract_center_compressed<T: Scalar>(
    y_hat: &CompressedVector<T>,
    bank: &TemplateBank<T>,
    frame_index: usize,
) -> Result<MotionCenter<T>> {
    let scores = bank.correlations_compressed(y_hat)?;
    let k = argmax(&scores).ok_or_else(|| Error::structural("empty template bank"))?;
    Ok(bank.center_of(k, scores[k], frame_index))
}

/// Mean Euclidean distance, in grid cells, between aligned center paths.
pub fn center_error<T: Scalar>(a: &[MotionCenter<T>], b: &[MotionCenter<T>]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::structural(format!(
            "center paths differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for (p, q) in a.iter().zip(b) {
        if p.frame_index != q.frame_index {
            return Err(Error::structural(format!(
                "center paths are misaligned at frames {} and {}",
                p.frame_index, q.frame_index
            )));
        }
        total = total + (p.x - q.x).hypot(p.y - q.y);
    }
    Ok(total / T::from_usize_lossy(a.len()))
}

/// Writes `frame_index,x,y,score` rows with a header.
pub fn write_center_csv<T: Scalar, W: Write>(out: W, path: &[MotionCenter<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame_index", "x", "y", "score"])?;
    for c in path {
        w.write_record([
            c.frame_index.to_string(),
            format!("{:.4}", c.x.to_f64_lossy()),
            format!("{:.4}", c.y.to_f64_lossy()),
            format!("{:.6}", c.score.to_f64_lossy()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(m: usize) -> (ProjectionMatrix, TemplateBank<f64>) {
        let phi = ProjectionMatrix::new(m, 1200, 42).unwrap();
        let bank = TemplateBank::build(40, 30, RectSize::new(10, 10), &phi).unwrap();
        (phi, bank)
    }

    #[test]
    fn bank_counts_and_norms() {
        let (_, bank) = bank(8);
        // counting oracle: (40 - 10 + 1) * (30 - 10 + 1)
        let expected: usize =
            (0..40).filter(|x| x + 10 <= 40).count() * (0..30).filter(|y| y + 10 <= 30).count();
        assert_eq!(bank.len(), expected);
        assert_eq!(bank.len(), 651);
        for k in 0..bank.len() {
            let norm = bank
                .uncompressed(k)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn first_template_support() {
        let (_, bank) = bank(8);
        let t = bank.uncompressed(0);
        for (k, &v) in t.iter().enumerate() {
            let (c, r) = (k % 40, k / 40);
            if c < 10 && r < 10 {
                assert!((v - 0.1).abs() < 1e-15);
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(bank.specs()[0].center::<f64>(), (5.0, 5.0));
    }

    #[test]
    fn oversized_rectangle_rejected() {
        let phi = ProjectionMatrix::new(8, 1200, 0).unwrap();
        assert!(matches!(
            TemplateBank::<f64>::build(40, 30, RectSize::new(10, 31), &phi),
            Err(Error::Structural(_))
        ));
        let wrong = ProjectionMatrix::new(8, 1000, 0).unwrap();
        assert!(TemplateBank::<f64>::build(40, 30, RectSize::new(10, 10), &wrong).is_err());
    }

    #[test]
    fn self_match_both_domains() {
        let (phi, bank) = bank(400);
        let k = bank
            .specs()
            .iter()
            .position(|s| s.x == 5 && s.y == 5)
            .unwrap();
        let y = BlockImage::new(40, 30, bank.uncompressed(k).to_vec()).unwrap();
        let c = extract_center_uncompressed(&y, &bank, 0).unwrap();
        assert_eq!((c.x, c.y), (10.0, 10.0));
        let c = extract_center_compressed(&phi.project_block(&y).unwrap(), &bank, 0).unwrap();
        assert_eq!((c.x, c.y), (10.0, 10.0));
    }

    #[test]
    fn seed_mismatch_is_config_error() {
        let (_, bank) = bank(16);
        let other = ProjectionMatrix::new(16, 1200, 43).unwrap();
        let y_hat = other.project(&vec![1.0f64; 1200]).unwrap();
        assert!(matches!(
            extract_center_compressed(&y_hat, &bank, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let (_, bank) = bank(8);
        let y = BlockImage::<f64>::zeros(40, 30).unwrap();
        let c = extract_center_uncompressed(&y, &bank, 0).unwrap();
        assert_eq!((c.x, c.y), (5.0, 5.0));
        let c = extract_center_correlation(&y, &bank, 0).unwrap();
        assert_eq!((c.x, c.y), (5.0, 5.0));
    }

    #[test]
    fn center_error_cases() {
        let p = |x: f64, y: f64, i| MotionCenter {
            x,
            y,
            score: 0.0,
            frame_index: i,
        };
        let a = vec![p(1.0, 1.0, 0), p(4.0, 2.0, 1)];
        assert_eq!(center_error(&a, &a).unwrap(), 0.0);
        let b = vec![p(4.0, 5.0, 0), p(7.0, 6.0, 1)];
        assert_eq!(center_error(&a, &b).unwrap(), 5.0);
        assert!(matches!(
            center_error(&a, &b[..1]),
            Err(Error::Structural(_))
        ));
        let c = vec![p(4.0, 5.0, 0), p(7.0, 6.0, 2)];
        assert!(matches!(center_error(&a, &c), Err(Error::Structural(_))));
    }

    #[test]
    fn multi_size_bank_orders_by_size() {
        let phi = ProjectionMatrix::new(4, 1200, 1).unwrap();
        let sizes = [RectSize::new(10, 10), RectSize::new(8, 6)];
        let bank = TemplateBank::<f32>::build_multi(40, 30, &sizes, &phi).unwrap();
        assert_eq!(bank.len(), 651 + 33 * 25);
        assert_eq!(bank.specs()[651].size, sizes[1]);
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        let path = [MotionCenter {
            x: 10.0f64,
            y: 5.5,
            score: 2.0,
            frame_index: 3,
        }];
        write_center_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "frame_index,x,y,score\n3,10.0000,5.5000,2.000000\n");
    }
}
