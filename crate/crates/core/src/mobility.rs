//! Node movement: i.i.d. location draws from each node's pattern with
//! uniform resting times, and the colocation index.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::patterns::{LocationId, MobilityPattern};
use crate::time::{SimTime, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Draws locations from a fixed pattern.
#[derive(Debug, Clone)]
pub struct LocationSampler {
    index: WeightedIndex<f64>,
}

impl LocationSampler {
    pub fn new(p: &MobilityPattern) -> Self {
        Self {
            // patterns always carry positive mass
            index: WeightedIndex::new(p.probs()).expect("pattern has positive total weight"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LocationId {
        LocationId(self.index.sample(rng))
    }
}

pub fn sample_next_location<R: Rng + ?Sized>(p: &MobilityPattern, rng: &mut R) -> LocationId {
    LocationSampler::new(p).sample(rng)
}

/// Uniform real draw in `[t_min, t_max]` seconds.
pub fn sample_rest_time<R: Rng + ?Sized>(t_min: f64, t_max: f64, rng: &mut R) -> Result<f64> {
    if !(t_min > 0.0) || !(t_min <= t_max) || !t_max.is_finite() {
        return Err(Error::InvalidRestBounds { t_min, t_max });
    }
    if t_min == t_max {
        return Ok(t_min);
    }
    Ok(rng.gen_range(t_min..=t_max))
}

/// Resting-time bounds, validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestBounds {
    pub t_min: f64,
    pub t_max: f64,
}

impl RestBounds {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0) || !(t_min <= t_max) || !t_max.is_finite() {
            return Err(Error::InvalidRestBounds { t_min, t_max });
        }
        Ok(Self { t_min, t_max })
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub node: NodeId,
    pub sampler: LocationSampler,
    pub location: LocationId,
    pub next_move_at: SimTime,
}

impl NodeState {
    /// Places a node at a location drawn from its pattern and schedules its
    /// first move after one resting time.
    pub fn initial<R: Rng + ?Sized>(
        node: NodeId,
        pattern: &MobilityPattern,
        rest: RestBounds,
        grid: &TimeGrid,
        now: SimTime,
        rng: &mut R,
    ) -> Result<Self> {
        let sampler = LocationSampler::new(pattern);
        let location = sampler.sample(rng);
        let rest_s = sample_rest_time(rest.t_min, rest.t_max, rng)?;
        Ok(Self {
            node,
            sampler,
            location,
            next_move_at: now + grid.duration(rest_s),
        })
    }
}

/// Moves the node to a fresh location draw. Transitions are instantaneous.
pub fn advance_node<R: Rng + ?Sized>(
    s: &NodeState,
    now: SimTime,
    rest: RestBounds,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<NodeState> {
    if now < s.next_move_at {
        return Err(Error::EarlyAdvance {
            node: s.node.0,
            now: now.micros(),
            next: s.next_move_at.micros(),
        });
    }
    let location = s.sampler.sample(rng);
    let rest_s = sample_rest_time(rest.t_min, rest.t_max, rng)?;
    Ok(NodeState {
        node: s.node,
        sampler: s.sampler.clone(),
        location,
        next_move_at: now + grid.duration(rest_s),
    })
}

/// Which nodes are at which location.
#[derive(Debug, Clone)]
pub struct Colocation {
    at: Vec<BTreeSet<NodeId>>,
    location_of: Vec<LocationId>,
}

impl Colocation {
    pub fn new(n_locations: usize, locations: &[LocationId]) -> Self {
        let mut at = vec![BTreeSet::new(); n_locations];
        for (i, loc) in locations.iter().enumerate() {
            at[loc.0].insert(NodeId(i));
        }
        Self {
            at,
            location_of: locations.to_vec(),
        }
    }

    pub fn location_of(&self, node: NodeId) -> LocationId {
        self.location_of[node.0]
    }

    pub fn move_node(&mut self, node: NodeId, to: LocationId) {
        let from = self.location_of[node.0];
        self.at[from.0].remove(&node);
        self.at[to.0].insert(node);
        self.location_of[node.0] = to;
    }

    /// Nodes currently at `loc`, in ascending id order.
    pub fn colocated_nodes(&self, loc: LocationId) -> &BTreeSet<NodeId> {
        &self.at[loc.0]
    }

    pub fn n_locations(&self) -> usize {
        self.at.len()
    }
}
