//! Random ±1 projection and the combined block-average-then-project operator.
//!
//! Entries are drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `SeedableRng::seed_from_u64(seed)`. Each `next_u64` supplies 64 signs,
//! least significant bit first, filling the matrix row-major; a set bit is `+1`.
//! The stream is portable, so `(m, n, seed)` pins the matrix on every platform.
//! The matrix is never stored on disk.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{block_average, BlockImage, DifferenceImage};
use crate::scalar::Scalar;

/// Dense `m x n` matrix of i.i.d. uniform signs. Stored unnormalized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionMatrix {
    m: usize,
    n: usize,
    seed: u64,
    signs: Vec<i8>,
}

impl ProjectionMatrix {
    pub fn new(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::structural(format!(
                "projection dimensions must be positive, got {m}x{n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut signs = Vec::with_capacity(m * n);
        while signs.len() < m * n {
            let word = rng.next_u64();
            let take = (m * n - signs.len()).min(64);
            signs.extend((0..take).map(|b| if (word >> b) & 1 == 1 { 1i8 } else { -1i8 }));
        }
        Ok(Self { m, n, seed, signs })
    }

    /// Measurement count `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Input dimension `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.signs[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.signs[row * self.n..(row + 1) * self.n]
    }

    pub fn entries(&self) -> &[i8] {
        &self.signs
    }

    pub fn column<T: Scalar>(&self, col: usize) -> Vec<T> {
        (0..self.m)
            .map(|r| T::from_i8(self.entry(r, col)).unwrap_or_else(T::zero))
            .collect()
    }

    /// `Φ y`, summing each row left to right so results are bit-stable.
    pub fn project<T: Scalar>(&self, y: &[T]) -> Result<CompressedVector<T>> {
        if y.len() != self.n {
            return Err(Error::structural(format!(
                "projection expects length {}, got {}",
                self.n,
                y.len()
            )));
        }
        let values = self
            .signs
            .chunks_exact(self.n)
            .map(|row| {
                row.iter().zip(y).fold(
                    T::zero(),
                    |acc, (&s, &v)| if s > 0 { acc + v } else { acc - v },
                )
            })
            .collect();
        Ok(CompressedVector {
            values,
            source_seed: self.seed,
        })
    }

    pub fn project_block<T: Scalar>(&self, y: &BlockImage<T>) -> Result<CompressedVector<T>> {
        self.project(y.as_slice())
    }
}

/// `M`-dimensional measurement vector together with the seed of its matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedVector<T> {
    values: Vec<T>,
    source_seed: u64,
}

impl<T: Scalar> CompressedVector<T> {
    pub fn new(values: Vec<T>, source_seed: u64) -> Self {
        Self {
            values,
            source_seed,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * c).collect(),
            source_seed: self.source_seed,
        }
    }
}

/// Size reduction of each layer and overall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionRatios {
    pub pixels: usize,
    pub cells: usize,
    pub measurements: usize,
}

impl CompressionRatios {
    pub fn block_layer(&self) -> f64 {
        self.pixels as f64 / self.cells as f64
    }

    pub fn projection_layer(&self) -> f64 {
        self.cells as f64 / self.measurements as f64
    }

    pub fn overall(&self) -> f64 {
        self.pixels as f64 / self.measurements as f64
    }
}

/// `Θ = ΦΨ` applied matrix-free: block average, then project.
#[derive(Clone, Copy, Debug)]
pub struct CombinedOperator<'a> {
    phi: &'a ProjectionMatrix,
    block: usize,
    width: usize,
    height: usize,
}

impl<'a> CombinedOperator<'a> {
    pub fn new(
        phi: &'a ProjectionMatrix,
        block: usize,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if block == 0 || width % block != 0 || height % block != 0 {
            return Err(Error::structural(format!(
                "{width}x{height} is not divisible by block {block}"
            )));
        }
        let cells = (width / block) * (height / block);
        if phi.n() != cells {
            return Err(Error::structural(format!(
                "projection input dimension {} does not match {cells} block cells",
                phi.n()
            )));
        }
        Ok(Self {
            phi,
            block,
            width,
            height,
        })
    }

    pub fn apply<T: Scalar>(&self, d: &DifferenceImage<T>) -> Result<CompressedVector<T>> {
        if d.width() != self.width || d.height() != self.height {
            return Err(Error::structural(format!(
                "operator built for {}x{}, got {}x{}",
                self.width,
                self.height,
                d.width(),
                d.height()
            )));
        }
        self.phi.project_block(&block_average(d, self.block)?)
    }

    pub fn ratios(&self) -> CompressionRatios {
        CompressionRatios {
            pixels: self.width * self.height,
            cells: self.phi.n(),
            measurements: self.phi.m(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dimensions_rejected() {
        assert!(matches!(
            ProjectionMatrix::new(0, 10, 1),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            ProjectionMatrix::new(10, 0, 1),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = ProjectionMatrix::new(400, 1200, 0xC0FFEE).unwrap();
        let b = ProjectionMatrix::new(400, 1200, 0xC0FFEE).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ProjectionMatrix::new(400, 1200, 0xC0FFEF).unwrap());
        assert!(a.entries().iter().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn signs_are_balanced() {
        let phi = ProjectionMatrix::new(400, 1200, 7).unwrap();
        let plus = phi.entries().iter().filter(|&&s| s == 1).count() as f64;
        let mean = (2.0 * plus - phi.entries().len() as f64) / phi.entries().len() as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn paper_operating_point_builds() {
        let phi = ProjectionMatrix::new(250, 1200, 3).unwrap();
        assert_eq!((phi.m(), phi.n()), (250, 1200));
    }

    #[test]
    fn zero_and_basis_inputs() {
        let phi = ProjectionMatrix::new(16, 32, 11).unwrap();
        let z = phi.project(&[0.0f64; 32]).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        for k in [0, 13, 31] {
            let mut e = [0.0f64; 32];
            e[k] = 1.0;
            assert_eq!(
                phi.project(&e).unwrap().values(),
                phi.column::<f64>(k).as_slice()
            );
        }
    }

    #[test]
    fn matches_naive_double_loop() {
        let phi = ProjectionMatrix::new(16, 32, 99).unwrap();
        let y: Vec<f64> = (0..32)
            .map(|k| ((k * 37 % 11) as f64) * 0.75 - 2.0)
            .collect();
        let got = phi.project(&y).unwrap();
        for j in 0..16 {
            let mut acc = 0.0;
            for k in 0..32 {
                acc += phi.entry(j, k) as f64 * y[k];
            }
            // integer-valued quarter steps: both orders are exact
            assert_eq!(got.values()[j], acc);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let phi = ProjectionMatrix::new(4, 8, 0).unwrap();
        assert!(matches!(
            phi.project(&[1.0f32; 7]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn vga_ratios() {
        let phi = ProjectionMatrix::new(400, 1200, 1).unwrap();
        let op = CombinedOperator::new(&phi, 16, 640, 480).unwrap();
        let r = op.ratios();
        assert_eq!(r.block_layer(), 256.0);
        assert_eq!(r.projection_layer(), 3.0);
        assert_eq!(r.overall(), 768.0);
        let d = DifferenceImage::new(640, 480, vec![0.0f64; 640 * 480]).unwrap();
        let out = op.apply(&d).unwrap();
        assert_eq!(out.len(), 400);
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn incompatible_operator_shapes() {
        let phi = ProjectionMatrix::new(8, 12, 1).unwrap();
        assert!(CombinedOperator::new(&phi, 16, 64, 48).is_ok());
        assert!(matches!(
            CombinedOperator::new(&phi, 16, 64, 64),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            CombinedOperator::new(&phi, 16, 60, 48),
            Err(Error::Structural(_))
        ));
    }
}
