//! Discrete-event simulation core.
//!
//! Events are node moves and bundle creations on a fixed time grid. At each
//! instant all moves are applied first (ascending node id), then creations,
//! then the routing policy runs to fixpoint at every location whose
//! population or custody changed (ascending location id).
//!
//! Randomness comes from three independent substreams of the master seed:
//! mobility, traffic and policy. The first two never depend on the policy,
//! so every policy faces the same movement trace and traffic schedule.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::DEFAULT_DELTA;
use crate::mobility::{advance_node, Colocation, NodeId, NodeState, RestBounds};
use crate::patterns::{build_pattern, random_rank_assignment, LocationId, MobilityPattern};
use crate::routing::{
    epidemic_decide, opportunistic_decide, pattern_greedy_decide, random_decide, random_handled, Bundle, BundleId,
    HeldBundle, HeldCopy, KnowledgeOracle, KnowledgeScope, LocationView, Policy, ScoreTable, TransferAction,
    TransferKind, VisitHandleLog,
};
use crate::time::{SimTime, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub n_locations: usize,
    /// Seconds.
    pub duration: f64,
    pub traffic_horizon: f64,
    pub packet_interval: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub delta: f64,
    pub time_step: f64,
    pub d: f64,
    pub policy: Policy,
    /// Which patterns partial knowledge truncates.
    pub knowledge_scope: KnowledgeScope,
    pub seed: u64,
    pub runs: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_nodes: 50,
            n_locations: 25,
            duration: 4000.0,
            traffic_horizon: 500.0,
            packet_interval: 30.0,
            t_min: 5.0,
            t_max: 15.0,
            delta: DEFAULT_DELTA,
            time_step: 0.01,
            d: 2.0,
            policy: Policy::Epidemic,
            knowledge_scope: KnowledgeScope::DestinationOnly,
            seed: 1,
            runs: 5,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n_nodes < 2 {
            return bad(format!("n_nodes must be >= 2, got {}", self.n_nodes));
        }
        if self.n_locations == 0 {
            return Err(Error::NoLocations);
        }
        for (name, v) in [
            ("duration", self.duration),
            ("traffic_horizon", self.traffic_horizon),
            ("packet_interval", self.packet_interval),
            ("time_step", self.time_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.traffic_horizon > self.duration {
            return bad(format!(
                "traffic_horizon {} exceeds duration {}",
                self.traffic_horizon, self.duration
            ));
        }
        RestBounds::new(self.t_min, self.t_max)?;
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::InvalidDelta(self.delta));
        }
        if !(self.d >= 1.0) || !self.d.is_finite() {
            return Err(Error::InvalidExponent(self.d));
        }
        TimeGrid::new(self.time_step)?;
        if let Policy::Pattern { knowledge, .. } = self.policy {
            if knowledge == 0 || knowledge > self.n_locations {
                return Err(Error::InvalidKnowledge {
                    l: knowledge,
                    n: self.n_locations,
                });
            }
        }
        Ok(())
    }

    /// Knowledge level: `l` for pattern routing, `N` otherwise.
    pub fn knowledge(&self) -> usize {
        match self.policy {
            Policy::Pattern { knowledge, .. } => knowledge,
            _ => self.n_locations,
        }
    }
}

/// Named RNG substreams of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility = 0,
    Traffic = 1,
    Policy = 2,
}

pub fn substream(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrafficItem {
    pub time: SimTime,
    pub source: NodeId,
    pub destination: NodeId,
}

/// Every ordered pair sends one bundle per interval, starting at a uniform
/// offset in `[0, interval)`, as long as the send time plus one interval
/// stays within the traffic horizon. Sorted by (time, source, destination).
pub fn traffic_schedule<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<TrafficItem>> {
    let grid = TimeGrid::new(config.time_step)?;
    let interval = grid.duration(config.packet_interval);
    let horizon = grid.snap(config.traffic_horizon);
    let mut items = Vec::new();
    if horizon < interval {
        // consume the draws anyway so the stream layout does not depend on the horizon
        for _ in 0..config.n_nodes * (config.n_nodes - 1) {
            rng.gen::<f64>();
        }
        return Ok(items);
    }
    let last = horizon - interval;
    for s in 0..config.n_nodes {
        for t in 0..config.n_nodes {
            if s == t {
                continue;
            }
            let offset = grid.snap(rng.gen::<f64>() * config.packet_interval);
            let mut time = offset;
            while time <= last {
                items.push(TrafficItem {
                    time,
                    source: NodeId(s),
                    destination: NodeId(t),
                });
                time = time + interval;
            }
        }
    }
    items.sort_unstable();
    Ok(items)
}

/// Patterns for every node, drawn from the mobility substream.
pub fn power_law_patterns<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<MobilityPattern>> {
    (0..config.n_nodes)
        .map(|_| build_pattern(config.d, &random_rank_assignment(config.n_locations, rng)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub from: LocationId,
    pub to: LocationId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleRecord {
    pub id: BundleId,
    pub source: NodeId,
    pub destination: NodeId,
    pub created_at: SimTime,
    pub delivered_at: Option<SimTime>,
    pub hops: u32,
}

impl BundleRecord {
    pub fn delay(&self) -> Option<SimTime> {
        self.delivered_at.map(|t| t - self.created_at)
    }
}

/// Outcome of one run, one record per generated bundle in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub policy: Policy,
    pub d: f64,
    pub knowledge: usize,
    pub seed: u64,
    pub duration: SimTime,
    pub records: Vec<BundleRecord>,
}

impl RunStats {
    pub fn generated(&self) -> usize {
        self.records.len()
    }

    pub fn delivered(&self) -> impl Iterator<Item = &BundleRecord> {
        self.records.iter().filter(|r| r.delivered_at.is_some())
    }

    pub fn delivered_count(&self) -> usize {
        self.delivered().count()
    }

    pub fn delivery_ratio(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.delivered_count() as f64 / self.records.len() as f64
        }
    }
}

enum Decider {
    Epidemic,
    Opportunistic,
    Random,
    Pattern(ScoreTable),
}

/// One simulation run. Strictly single-threaded.
pub struct Simulation {
    config: ScenarioConfig,
    grid: TimeGrid,
    rest: RestBounds,
    nodes: Vec<NodeState>,
    coloc: Colocation,
    moves: BinaryHeap<Reverse<(SimTime, NodeId)>>,
    traffic: Vec<TrafficItem>,
    next_traffic: usize,
    bundles: Vec<Bundle>,
    copies: Vec<Vec<HeldCopy>>,
    held_by: Vec<BTreeSet<BundleId>>,
    visit_log: VisitHandleLog,
    decider: Decider,
    mobility_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    trace: Option<Vec<MoveRecord>>,
    clock: SimTime,
}

impl Simulation {
    /// Power-law patterns from the configured `d`.
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut mobility_rng = substream(config.seed, Stream::Mobility);
        let patterns = power_law_patterns(config, &mut mobility_rng)?;
        Self::build(config, patterns, mobility_rng)
    }

    /// Explicit per-node patterns (the configured `d` is only a label).
    pub fn with_patterns(config: &ScenarioConfig, patterns: Vec<MobilityPattern>) -> Result<Self> {
        config.validate()?;
        if patterns.len() != config.n_nodes || patterns.iter().any(|p| p.len() != config.n_locations) {
            return Err(Error::InvalidScenario(
                "pattern set does not match n_nodes x n_locations".into(),
            ));
        }
        let mobility_rng = substream(config.seed, Stream::Mobility);
        Self::build(config, patterns, mobility_rng)
    }

    fn build(config: &ScenarioConfig, patterns: Vec<MobilityPattern>, mut mobility_rng: ChaCha8Rng) -> Result<Self> {
        let grid = TimeGrid::new(config.time_step)?;
        let rest = RestBounds::new(config.t_min, config.t_max)?;
        let nodes = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| NodeState::initial(NodeId(i), p, rest, &grid, SimTime::ZERO, &mut mobility_rng))
            .collect::<Result<Vec<_>>>()?;
        let locations: Vec<LocationId> = nodes.iter().map(|n| n.location).collect();
        let coloc = Colocation::new(config.n_locations, &locations);
        let moves = nodes.iter().map(|n| Reverse((n.next_move_at, n.node))).collect();
        let traffic = traffic_schedule(config, &mut substream(config.seed, Stream::Traffic))?;
        let decider = match config.policy {
            Policy::Epidemic => Decider::Epidemic,
            Policy::Opportunistic => Decider::Opportunistic,
            Policy::Random => Decider::Random,
            Policy::Pattern { metric, knowledge } => {
                let oracle = KnowledgeOracle::new(&patterns, knowledge, config.knowledge_scope)?;
                Decider::Pattern(ScoreTable::new(&oracle, metric)?)
            }
        };
        Ok(Self {
            config: config.clone(),
            grid,
            rest,
            nodes,
            coloc,
            moves,
            traffic,
            next_traffic: 0,
            bundles: Vec::new(),
            copies: Vec::new(),
            held_by: vec![BTreeSet::new(); config.n_nodes],
            visit_log: VisitHandleLog::new(config.n_nodes),
            decider,
            mobility_rng,
            policy_rng: substream(config.seed, Stream::Policy),
            trace: None,
            clock: SimTime::ZERO,
        })
    }

    /// Records every move (including re-draws of the same location).
    pub fn record_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn traffic(&self) -> &[TrafficItem] {
        &self.traffic
    }

    fn uses_visit_log(&self) -> bool {
        matches!(self.decider, Decider::Random | Decider::Pattern(_))
    }

    /// Pattern routing treats a bundle as handled by whoever holds it on
    /// arrival or receipt; random routing flags only after a decision.
    fn flags_on_receipt(&self) -> bool {
        matches!(self.decider, Decider::Pattern(_))
    }

    /// Runs to the configured duration.
    pub fn run(mut self) -> Result<(RunStats, Option<Vec<MoveRecord>>)> {
        let end = self.grid.snap(self.config.duration);
        loop {
            let next_move = self.moves.peek().map(|Reverse((t, _))| *t);
            let next_traffic = self.traffic.get(self.next_traffic).map(|i| i.time);
            let now = match (next_move, next_traffic) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => break,
            };
            if now > end {
                break;
            }
            debug_assert!(now >= self.clock);
            self.clock = now;
            self.step(now)?;
        }
        let records = self
            .bundles
            .iter()
            .map(|b| BundleRecord {
                id: b.id,
                source: b.source,
                destination: b.destination,
                created_at: b.created_at,
                delivered_at: b.delivered_at,
                hops: b.hops,
            })
            .collect();
        let stats = RunStats {
            policy: self.config.policy,
            d: self.config.d,
            knowledge: self.config.knowledge(),
            seed: self.config.seed,
            duration: end,
            records,
        };
        Ok((stats, self.trace))
    }

    fn step(&mut self, now: SimTime) -> Result<()> {
        let mut affected = BTreeSet::new();
        while let Some(&Reverse((t, node))) = self.moves.peek() {
            if t != now {
                break;
            }
            self.moves.pop();
            let state = &self.nodes[node.0];
            let from = state.location;
            let next = advance_node(state, now, self.rest, &self.grid, &mut self.mobility_rng)?;
            let to = next.location;
            self.moves.push(Reverse((next.next_move_at, node)));
            self.nodes[node.0] = next;
            if let Some(trace) = self.trace.as_mut() {
                trace.push(MoveRecord { time: now, node, from, to });
            }
            // a re-draw of the current location continues the visit
            if from == to {
                continue;
            }
            self.coloc.move_node(node, to);
            affected.insert(from);
            affected.insert(to);
            if self.uses_visit_log() {
                self.visit_log.clear(node);
                if self.flags_on_receipt() {
                    for &b in &self.held_by[node.0] {
                        self.visit_log.mark(node, b);
                    }
                }
            }
        }
        while let Some(item) = self.traffic.get(self.next_traffic).copied() {
            if item.time != now {
                break;
            }
            self.next_traffic += 1;
            let id = BundleId(self.bundles.len() as u32);
            self.bundles.push(Bundle {
                id,
                source: item.source,
                destination: item.destination,
                created_at: now,
                hops: 0,
                delivered_at: None,
            });
            self.copies.push(vec![HeldCopy {
                holder: item.source,
                hops: 0,
            }]);
            self.held_by[item.source.0].insert(id);
            if self.flags_on_receipt() {
                self.visit_log.mark(item.source, id);
            }
            affected.insert(self.coloc.location_of(item.source));
        }
        for loc in affected {
            self.settle(loc, now)?;
        }
        Ok(())
    }

    fn view(&self, loc: LocationId) -> LocationView {
        let nodes: Vec<NodeId> = self.coloc.colocated_nodes(loc).iter().copied().collect();
        let mut ids = BTreeSet::new();
        for n in &nodes {
            ids.extend(self.held_by[n.0].iter().copied());
        }
        let held = ids
            .into_iter()
            .map(|b| HeldBundle {
                bundle: b,
                destination: self.bundles[b.0 as usize].destination,
                copies: self.copies[b.0 as usize]
                    .iter()
                    .filter(|c| self.coloc.location_of(c.holder) == loc)
                    .copied()
                    .collect(),
            })
            .collect();
        LocationView { nodes, held }
    }

    /// Runs the policy at `loc` until a pass produces no action.
    fn settle(&mut self, loc: LocationId, now: SimTime) -> Result<()> {
        loop {
            let view = self.view(loc);
            if view.held.is_empty() || view.nodes.len() < 2 {
                return Ok(());
            }
            let actions = match &self.decider {
                Decider::Epidemic => epidemic_decide(&view),
                Decider::Opportunistic => opportunistic_decide(&view),
                Decider::Random => random_decide(&view, &self.visit_log, &mut self.policy_rng),
                Decider::Pattern(scores) => pattern_greedy_decide(&view, scores, &self.visit_log)?,
            };
            if matches!(self.decider, Decider::Random) {
                for (node, b) in random_handled(&view) {
                    self.visit_log.mark(node, b);
                }
            }
            if actions.is_empty() {
                return Ok(());
            }
            for a in actions {
                self.apply(a, now);
            }
        }
    }

    fn apply(&mut self, a: TransferAction, now: SimTime) {
        let b = a.bundle.0 as usize;
        if self.bundles[b].delivered_at.is_some() {
            return;
        }
        let Some(src) = self.copies[b].iter().find(|c| c.holder == a.from).copied() else {
            return;
        };
        match a.kind {
            TransferKind::Deliver => {
                let bundle = &mut self.bundles[b];
                bundle.delivered_at = Some(now);
                bundle.hops = src.hops + 1;
                // delivered bundles are inert; drop every copy
                for c in self.copies[b].drain(..) {
                    self.held_by[c.holder.0].remove(&a.bundle);
                }
            }
            TransferKind::Replicate => {
                if self.copies[b].iter().all(|c| c.holder != a.to) {
                    self.copies[b].push(HeldCopy {
                        holder: a.to,
                        hops: src.hops + 1,
                    });
                    self.held_by[a.to.0].insert(a.bundle);
                }
            }
            TransferKind::ForwardWithCustody => {
                self.copies[b] = vec![HeldCopy {
                    holder: a.to,
                    hops: src.hops + 1,
                }];
                self.held_by[a.from.0].remove(&a.bundle);
                self.held_by[a.to.0].insert(a.bundle);
                if self.flags_on_receipt() {
                    self.visit_log.mark(a.to, a.bundle);
                }
            }
        }
    }
}

pub fn run(config: &ScenarioConfig) -> Result<RunStats> {
    Ok(Simulation::new(config)?.run()?.0)
}

/// Runs every config under every seed (config-major order). Runs execute in
/// parallel on the current rayon pool.
pub fn run_matrix(configs: &[ScenarioConfig], seeds: &[u64]) -> Result<Vec<RunStats>> {
    let jobs: Vec<ScenarioConfig> = configs
        .iter()
        .flat_map(|c| {
            seeds.iter().map(move |&seed| ScenarioConfig {
                seed,
                ..c.clone()
            })
        })
        .collect();
    jobs.par_iter().map(run).collect()
}
