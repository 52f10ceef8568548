//! Dynamic time warping over 2-D point sequences.
//!
//! Local cost is the Euclidean distance between points, steps are
//! `(1,0)`, `(0,1)` and `(1,1)`, and both sequences are matched end to end.
//! When several alignments share the minimal cost the shortest one is kept,
//! which fixes the path length used for normalization.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TracePoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> TracePoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Accumulated cost of an optimal warping path and the number of cells on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment<T> {
    pub cost: T,
    pub len: usize,
}

impl<T: Scalar> Alignment<T> {
    pub fn normalized(&self) -> T {
        self.cost / T::from_usize_lossy(self.len)
    }

    fn better_than(&self, other: &Self) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.len < other.len)
    }

    fn extend(&self, step: T) -> Self {
        Self {
            cost: self.cost + step,
            len: self.len + 1,
        }
    }
}

fn best_of<T: Scalar>(
    cands: impl IntoIterator<Item = Option<Alignment<T>>>,
) -> Option<Alignment<T>> {
    cands.into_iter().flatten().fold(None, |acc, c| match acc {
        Some(a) if !c.better_than(&a) => Some(a),
        _ => Some(c),
    })
}

fn check_non_empty<T>(a: &[TracePoint<T>], b: &[TracePoint<T>]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::structural(
            "dynamic time warping needs non-empty sequences",
        ));
    }
    Ok(())
}

/// Optimal full alignment of `a` against `b`.
pub fn dtw_alignment<T: Scalar>(a: &[TracePoint<T>], b: &[TracePoint<T>]) -> Result<Alignment<T>> {
    check_non_empty(a, b)?;
    let m = b.len();
    let mut prev: Vec<Option<Alignment<T>>> = vec![None; m];
    let mut cur: Vec<Option<Alignment<T>>> = vec![None; m];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let step = p.distance(q);
            cur[j] = if i == 0 && j == 0 {
                Some(Alignment { cost: step, len: 1 })
            } else {
                let left = if j > 0 { cur[j - 1] } else { None };
                let up = prev[j];
                let diag = if j > 0 { prev[j - 1] } else { None };
                best_of([diag, up, left]).map(|b| b.extend(step))
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1].ok_or_else(|| Error::Numerical("empty warping table".into()))
}

/// Accumulated cost of the optimal alignment.
pub fn dtw_distance<T: Scalar>(a: &[TracePoint<T>], b: &[TracePoint<T>]) -> Result<T> {
    dtw_alignment(a, b).map(|al| al.cost)
}

/// DTW restricted to a Sakoe-Chiba band of half-width `band` around the
/// (length-scaled) diagonal.
pub fn dtw_distance_banded<T: Scalar>(
    a: &[TracePoint<T>],
    b: &[TracePoint<T>],
    band: usize,
) -> Result<T> {
    check_non_empty(a, b)?;
    let (n, m) = (a.len(), b.len());
    let slope = if n > 1 {
        (m - 1) as f64 / (n - 1) as f64
    } else {
        0.0
    };
    // half-width max(slope, 1)/2 is the narrowest corridor that stays connected
    let reach = band as f64 + slope.max(1.0) / 2.0;
    let allowed = |i: usize, j: usize| (j as f64 - i as f64 * slope).abs() <= reach;
    let mut table: Vec<Option<T>> = vec![None; n * m];
    for i in 0..n {
        for j in 0..m {
            if !allowed(i, j) {
                continue;
            }
            let step = a[i].distance(&b[j]);
            table[i * m + j] = if i == 0 && j == 0 {
                Some(step)
            } else {
                let mut best: Option<T> = None;
                let mut take = |c: Option<T>| {
                    if let Some(c) = c {
                        best = Some(best.map_or(c, |b: T| b.min(c)));
                    }
                };
                if i > 0 && j > 0 {
                    take(table[(i - 1) * m + j - 1]);
                }
                if i > 0 {
                    take(table[(i - 1) * m + j]);
                }
                if j > 0 {
                    take(table[i * m + j - 1]);
                }
                best.map(|b| b + step)
            };
        }
    }
    table[n * m - 1].ok_or_else(|| Error::Numerical(format!("band {band} admits no warping path")))
}

/// Best match of the whole `training` sequence against a suffix of `buffer`.
///
/// The alignment may start at any buffer position but must end at the last
/// point of both sequences. Each candidate start is scored by its accumulated
/// cost divided by its path length; the smallest normalized score wins.
pub fn subsequence_match<T: Scalar>(
    buffer: &[TracePoint<T>],
    training: &[TracePoint<T>],
) -> Result<T> {
    check_non_empty(buffer, training)?;
    let (n, m) = (buffer.len(), training.len());
    // Evaluated backwards from the shared end point, so column 0 of row `i`
    // holds the optimal alignment of `buffer[i..]` against all of `training`.
    let mut table: Vec<Option<Alignment<T>>> = vec![None; n * m];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let step = buffer[i].distance(&training[j]);
            table[i * m + j] = if i == n - 1 && j == m - 1 {
                Some(Alignment { cost: step, len: 1 })
            } else {
                let diag = (i + 1 < n && j + 1 < m)
                    .then(|| table[(i + 1) * m + j + 1])
                    .flatten();
                let down = (i + 1 < n).then(|| table[(i + 1) * m + j]).flatten();
                let right = (j + 1 < m).then(|| table[i * m + j + 1]).flatten();
                best_of([diag, down, right]).map(|b| b.extend(step))
            };
        }
    }
    (0..n)
        .filter_map(|i| table[i * m].map(|a| a.normalized()))
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
        .ok_or_else(|| Error::Numerical("no admissible subsequence alignment".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<TracePoint<f64>> {
        v.iter().map(|&(x, y)| TracePoint::new(x, y)).collect()
    }

    #[test]
    fn single_points() {
        assert_eq!(
            dtw_distance(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)])).unwrap(),
            5.0
        );
    }

    #[test]
    fn warped_copy_costs_nothing() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 0.0)]);
        assert_eq!(dtw_distance(&a, &b).unwrap(), 0.0);
        assert_eq!(dtw_alignment(&a, &b).unwrap().len, 5);
    }

    #[test]
    fn empty_rejected() {
        let a = pts(&[(0.0, 0.0)]);
        assert!(matches!(dtw_distance(&a, &[]), Err(Error::Structural(_))));
        assert!(matches!(
            subsequence_match(&[], &a),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn subsequence_finds_embedded_tail() {
        let training = pts(&[(5.0, 5.0), (6.0, 5.0), (7.0, 6.0), (7.0, 8.0)]);
        let mut buffer = pts(&[(20.0, 1.0), (20.0, 1.0), (19.0, 2.0)]);
        buffer.extend(training.iter().copied());
        assert_eq!(subsequence_match(&buffer, &training).unwrap(), 0.0);
    }

    #[test]
    fn subsequence_equals_min_over_starts() {
        let buffer = pts(&[
            (1.0, 2.0),
            (4.0, 0.5),
            (3.0, 3.0),
            (0.0, 1.0),
            (2.5, 2.0),
            (6.0, 1.0),
        ]);
        let training = pts(&[(3.0, 2.0), (1.0, 1.0), (2.0, 2.5)]);
        let oracle = (0..buffer.len())
            .map(|s| dtw_alignment(&buffer[s..], &training).unwrap().normalized())
            .fold(f64::INFINITY, f64::min);
        let got = subsequence_match(&buffer, &training).unwrap();
        assert!((got - oracle).abs() <= 1e-12);
    }

    #[test]
    fn wide_band_equals_unbanded() {
        let a = pts(&[(0.0, 0.0), (1.0, 2.0), (3.0, 1.0), (4.0, 4.0)]);
        let b = pts(&[
            (0.0, 1.0),
            (2.0, 2.0),
            (2.0, 1.0),
            (3.0, 3.0),
            (5.0, 4.0),
            (4.0, 5.0),
        ]);
        let full = dtw_distance(&a, &b).unwrap();
        assert_eq!(dtw_distance_banded(&a, &b, 10).unwrap(), full);
        assert!(dtw_distance_banded(&a, &b, 0).unwrap() >= full);
    }
}
