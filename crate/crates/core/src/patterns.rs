//! Mobility patterns: power-law location preferences over `N` locations.
//!
//! A node ranks every location (rank 0 is its favourite) and is found at the
//! location of rank `n` with probability `K * (1/d)^n`, where `K` normalizes
//! the truncated geometric series. `d = 1` is the uniform pattern.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationId(pub usize);

/// `ranks[i]` is the preference rank of location `i`; a permutation of `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    ranks: Vec<usize>,
}

impl RankAssignment {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        if n == 0 {
            return Err(Error::NoLocations);
        }
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r >= n || seen[r] {
                return Err(Error::InvalidRanks(n));
            }
            seen[r] = true;
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// The rank-0 location.
    pub fn preferred(&self) -> LocationId {
        LocationId(self.ranks.iter().position(|&r| r == 0).unwrap_or(0))
    }
}

/// A probability vector over locations: a point in the pattern space.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityPattern {
    probs: Vec<f64>,
}

impl MobilityPattern {
    /// Wraps an arbitrary probability vector. Entries must be non-negative
    /// and sum to 1 within `1e-9`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::NoLocations);
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenario(format!(
                "pattern is not a probability vector (sum {sum})"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The top-`l` components of a pattern; omitted locations are implicitly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPattern {
    entries: Vec<(LocationId, f64)>,
}

impl PartialPattern {
    pub fn new(entries: Vec<(LocationId, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyPartialPattern);
        }
        Ok(Self { entries })
    }

    /// Entries ordered by decreasing probability.
    pub fn entries(&self) -> &[(LocationId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `K = (1 - 1/d) / (1 - 1/d^N)`.
pub fn normalization_constant(d: f64, n_locations: usize) -> Result<f64> {
    if !(d > 1.0) || !d.is_finite() {
        return Err(Error::InvalidExponent(d));
    }
    if n_locations == 0 {
        return Err(Error::NoLocations);
    }
    let inv = 1.0 / d;
    Ok((1.0 - inv) / (1.0 - inv.powi(n_locations as i32)))
}

pub fn build_pattern(d: f64, ranks: &RankAssignment) -> Result<MobilityPattern> {
    let n = ranks.len();
    if d == 1.0 {
        return Ok(MobilityPattern {
            probs: vec![1.0 / n as f64; n],
        });
    }
    let k = normalization_constant(d, n)?;
    let inv = 1.0 / d;
    let probs = ranks.ranks().iter().map(|&r| k * inv.powi(r as i32)).collect();
    Ok(MobilityPattern { probs })
}

/// Uniformly random permutation of ranks.
pub fn random_rank_assignment<R: Rng + ?Sized>(n_locations: usize, rng: &mut R) -> Result<RankAssignment> {
    if n_locations == 0 {
        return Err(Error::NoLocations);
    }
    let mut ranks: Vec<usize> = (0..n_locations).collect();
    ranks.shuffle(rng);
    Ok(RankAssignment { ranks })
}

/// Keeps the `l` most probable components; ties go to the lower location index.
pub fn truncate_pattern(p: &MobilityPattern, l: usize) -> Result<PartialPattern> {
    let n = p.len();
    if l == 0 || l > n {
        return Err(Error::InvalidKnowledge { l, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps index order among equal probabilities
    order.sort_by(|&a, &b| p.probs[b].total_cmp(&p.probs[a]));
    let entries = order
        .into_iter()
        .take(l)
        .map(|i| (LocationId(i), p.probs[i]))
        .collect();
    Ok(PartialPattern { entries })
}

/// Expands a partial pattern to a dense length-`N` vector (zeros elsewhere).
/// The result may sum to less than 1.
pub fn densify(pp: &PartialPattern, n_locations: usize) -> Result<Vec<f64>> {
    if pp.is_empty() {
        return Err(Error::EmptyPartialPattern);
    }
    let mut v = vec![0.0; n_locations];
    for &(LocationId(i), prob) in pp.entries() {
        if i >= n_locations {
            return Err(Error::LocationOutOfRange { index: i, n: n_locations });
        }
        v[i] = prob;
    }
    Ok(v)
}
