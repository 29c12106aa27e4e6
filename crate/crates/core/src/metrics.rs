//! Similarity and distance functions over pattern vectors.

use std::fmt;

use crate::error::{Error, Result};

/// Matching threshold used when none is given.
pub const DEFAULT_DELTA: f64 = 2e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Euclidean,
    Canberra,
    CosineAngle,
    Matching(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub orientation: Orientation,
}

impl MetricKind {
    pub fn matching(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidDelta(delta));
        }
        Ok(MetricKind::Matching(delta))
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            MetricKind::Euclidean | MetricKind::Canberra => Orientation::LowerIsBetter,
            MetricKind::CosineAngle | MetricKind::Matching(_) => Orientation::HigherIsBetter,
        }
    }

    /// CLI name: `euclidean`, `canberra`, `angle` or `matching`.
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Canberra => "canberra",
            MetricKind::CosineAngle => "angle",
            MetricKind::Matching(_) => "matching",
        }
    }

    /// Parses a CLI name; `delta` is used for `matching`.
    pub fn from_name(name: &str, delta: f64) -> Option<Result<Self>> {
        Some(match name {
            "euclidean" => Ok(MetricKind::Euclidean),
            "canberra" => Ok(MetricKind::Canberra),
            "angle" | "cosine" => Ok(MetricKind::CosineAngle),
            "matching" => MetricKind::matching(delta),
            _ => return None,
        })
    }

    pub fn score(&self, a: &[f64], b: &[f64]) -> Result<Score> {
        let value = match *self {
            MetricKind::Euclidean => euclidean_distance(a, b)?,
            MetricKind::Canberra => canberra_distance(a, b)?,
            MetricKind::CosineAngle => cosine_similarity(a, b)?,
            MetricKind::Matching(delta) => matching_similarity(a, b, delta)? as f64,
        };
        Ok(Score {
            value,
            orientation: self.orientation(),
        })
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Canberra distance. A term where exactly one coordinate is zero counts 1;
/// a term where both are zero counts 0.
pub fn canberra_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let denom = x.abs() + y.abs();
            if denom == 0.0 {
                0.0
            } else if x == 0.0 || y == 0.0 {
                1.0
            } else {
                (x - y).abs() / denom
            }
        })
        .sum())
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (na * nb).sqrt())
}

/// Number of coordinates whose absolute difference is at most `delta`.
pub fn matching_similarity(a: &[f64], b: &[f64], delta: f64) -> Result<usize> {
    check_len(a, b)?;
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| (*x - *y).abs() <= delta).count())
}

/// True iff `x` is strictly more similar than `y`.
pub fn better(x: Score, y: Score) -> Result<bool> {
    if x.orientation != y.orientation {
        return Err(Error::OrientationMismatch);
    }
    Ok(is_better(x.orientation, x.value, y.value))
}

#[inline]
pub(crate) fn is_better(orientation: Orientation, x: f64, y: f64) -> bool {
    match orientation {
        Orientation::LowerIsBetter => x < y,
        Orientation::HigherIsBetter => x > y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{build_pattern, RankAssignment};
    use proptest::prelude::*;

    const A: [f64; 2] = [2.0 / 3.0, 1.0 / 3.0];
    const B: [f64; 2] = [1.0 / 3.0, 2.0 / 3.0];

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&A, &A).unwrap(), 0.0);
        assert!((euclidean_distance(&A, &B).unwrap() - 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((euclidean_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(euclidean_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn canberra_examples() {
        let sparse = [0.5, 0.0, 0.0];
        assert_eq!(canberra_distance(&sparse, &sparse).unwrap(), 0.0);
        assert_eq!(canberra_distance(&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5]).unwrap(), 2.0);
        assert!((canberra_distance(&A, &B).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(canberra_distance(&A, &[1.0]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&A, &A).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_similarity(&A, &B).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &A), Err(Error::ZeroVector));
    }

    #[test]
    fn matching_examples() {
        assert_eq!(matching_similarity(&A, &A, 0.0).unwrap(), 2);
        assert_eq!(matching_similarity(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap(), 2);
        assert!(matching_similarity(&A, &A, -1.0).is_err());
        assert!(MetricKind::matching(f64::NAN).is_err());
    }

    #[test]
    fn matching_counts_shared_ranks_at_d2() {
        // identical ranks at locations 0..5, the rest rotated so no other rank coincides
        let a: Vec<usize> = (0..25).collect();
        let mut b: Vec<usize> = (0..5).collect();
        b.extend((5..25).map(|i| if i == 24 { 5 } else { i + 1 }));
        let pa = build_pattern(2.0, &RankAssignment::new(a.clone()).unwrap()).unwrap();
        let pb = build_pattern(2.0, &RankAssignment::new(b.clone()).unwrap()).unwrap();
        let brute = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert_eq!(brute, 5);
        assert_eq!(matching_similarity(pa.probs(), pb.probs(), DEFAULT_DELTA).unwrap(), brute);
    }

    #[test]
    fn comparator() {
        let e = |v| Score { value: v, orientation: Orientation::LowerIsBetter };
        let c = |v| Score { value: v, orientation: Orientation::HigherIsBetter };
        assert!(better(e(0.1), e(0.2)).unwrap());
        assert!(better(c(0.9), c(0.8)).unwrap());
        assert!(!better(e(0.3), e(0.3)).unwrap());
        assert!(!better(c(0.3), c(0.3)).unwrap());
        assert_eq!(better(e(0.1), c(0.2)), Err(Error::OrientationMismatch));
    }

    fn vec_pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n),
        )
    }

    proptest! {
        #[test]
        fn symmetry_and_bounds((a, b) in vec_pair(12)) {
            prop_assert_eq!(euclidean_distance(&a, &b).unwrap(), euclidean_distance(&b, &a).unwrap());
            let cab = canberra_distance(&a, &b).unwrap();
            prop_assert_eq!(cab, canberra_distance(&b, &a).unwrap());
            prop_assert!((0.0..=12.0).contains(&cab));
            prop_assert_eq!(canberra_distance(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(matching_similarity(&a, &b, 0.1).unwrap(), matching_similarity(&b, &a, 0.1).unwrap());
            if a.iter().any(|&x| x > 0.0) && b.iter().any(|&x| x > 0.0) {
                let s = cosine_similarity(&a, &b).unwrap();
                prop_assert!((s - cosine_similarity(&b, &a).unwrap()).abs() < 1e-15);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            }
        }

        #[test]
        fn triangle_inequality((a, b) in vec_pair(8), c in prop::collection::vec(0.0f64..1.0, 8)) {
            let ab = euclidean_distance(&a, &b).unwrap();
            let bc = euclidean_distance(&b, &c).unwrap();
            let ac = euclidean_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn matching_monotone_in_delta((a, b) in vec_pair(10), d1 in 0.0f64..0.5, extra in 0.0f64..0.5) {
            prop_assert!(matching_similarity(&a, &b, d1).unwrap() <= matching_similarity(&a, &b, d1 + extra).unwrap());
        }

        #[test]
        fn euclidean_and_cosine_pick_same_best(
            d in 1.05f64..3.0,
            perms in prop::collection::vec(Just((0..25).collect::<Vec<usize>>()).prop_shuffle(), 2..12),
        ) {
            let pats: Vec<Vec<f64>> = perms
                .into_iter()
                .map(|r| build_pattern(d, &RankAssignment::new(r).unwrap()).unwrap().probs().to_vec())
                .collect();
            let target = &pats[0];
            let cands = &pats[1..];
            let best_e = cands.iter().map(|x| euclidean_distance(x, target).unwrap())
                .fold(f64::INFINITY, f64::min);
            let best_c = cands.iter().map(|x| cosine_similarity(x, target).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            let arg_e: Vec<usize> = (0..cands.len())
                .filter(|&i| euclidean_distance(&cands[i], target).unwrap() - best_e < 1e-12).collect();
            let arg_c: Vec<usize> = (0..cands.len())
                .filter(|&i| best_c - cosine_similarity(&cands[i], target).unwrap() < 1e-12).collect();
            prop_assert_eq!(arg_e, arg_c);
        }
    }
}
