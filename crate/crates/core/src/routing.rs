//! Routing policies as decision procedures over one location.
//!
//! Each `*_decide` function looks at the nodes present at a location and the
//! bundles they hold, and returns the transfers for one pass. Deliveries come
//! first, then forwarding, both in ascending bundle id. The engine applies the
//! actions and calls again until a pass returns nothing.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{is_better, MetricKind, Orientation, Score};
use crate::mobility::NodeId;
use crate::patterns::{densify, truncate_pattern, MobilityPattern};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BundleId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub id: BundleId,
    pub source: NodeId,
    pub destination: NodeId,
    pub created_at: SimTime,
    /// Transfer count of the delivered copy (0 until delivery).
    pub hops: u32,
    pub delivered_at: Option<SimTime>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Epidemic,
    Opportunistic,
    Random,
    /// Greedy forwarding toward the destination's pattern; `knowledge` is the
    /// number of pattern components every node advertises.
    Pattern { metric: MetricKind, knowledge: usize },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Epidemic => "epidemic",
            Policy::Opportunistic => "opportunistic",
            Policy::Random => "random",
            Policy::Pattern { .. } => "pattern",
        }
    }

    /// Keeps a single custody copy per bundle.
    pub fn single_custody(&self) -> bool {
        !matches!(self, Policy::Epidemic)
    }

    pub fn metric(&self) -> Option<MetricKind> {
        match self {
            Policy::Pattern { metric, .. } => Some(*metric),
            _ => None,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Pattern { metric, knowledge } => write!(f, "pattern-{metric}-l{knowledge}"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferKind {
    ForwardWithCustody,
    Replicate,
    Deliver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransferAction {
    pub bundle: BundleId,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: TransferKind,
}

/// A copy of a bundle at this location: who holds it and how many transfers
/// it took to get there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeldCopy {
    pub holder: NodeId,
    pub hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeldBundle {
    pub bundle: BundleId,
    pub destination: NodeId,
    /// Copies held by nodes at this location, ascending by holder.
    pub copies: Vec<HeldCopy>,
}

/// What a policy sees at one location.
#[derive(Debug, Clone, Default)]
pub struct LocationView {
    /// Present nodes, ascending.
    pub nodes: Vec<NodeId>,
    /// Undelivered bundles held here, ascending by id.
    pub held: Vec<HeldBundle>,
}

impl LocationView {
    fn contains(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }
}

/// Per (node, bundle) flag: the node already handled the bundle during its
/// current location visit. Cleared when the node changes location.
#[derive(Debug, Clone, Default)]
pub struct VisitHandleLog {
    flags: Vec<HashSet<BundleId>>,
}

impl VisitHandleLog {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            flags: vec![HashSet::new(); n_nodes],
        }
    }

    pub fn is_flagged(&self, node: NodeId, bundle: BundleId) -> bool {
        self.flags[node.0].contains(&bundle)
    }

    pub fn mark(&mut self, node: NodeId, bundle: BundleId) {
        self.flags[node.0].insert(bundle);
    }

    pub fn clear(&mut self, node: NodeId) {
        self.flags[node.0].clear();
    }
}

/// Which patterns are reduced to their top-`l` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnowledgeScope {
    /// Only the destination's advertised pattern is truncated; a candidate
    /// is scored with its own full pattern, which it reports on contact.
    #[default]
    DestinationOnly,
    /// Every pattern used in a comparison is truncated.
    All,
}

/// Global view of node patterns: the advertised (possibly top-`l`) pattern
/// used to address a destination, and the pattern a node is scored with as
/// a forwarding candidate.
#[derive(Debug, Clone)]
pub struct KnowledgeOracle {
    advertised: Vec<Vec<f64>>,
    candidate: Vec<Vec<f64>>,
}

impl KnowledgeOracle {
    pub fn new(patterns: &[MobilityPattern], knowledge: usize, scope: KnowledgeScope) -> Result<Self> {
        let advertised: Vec<Vec<f64>> = patterns
            .iter()
            .map(|p| {
                if knowledge == p.len() {
                    Ok(p.probs().to_vec())
                } else {
                    densify(&truncate_pattern(p, knowledge)?, p.len())
                }
            })
            .collect::<Result<_>>()?;
        let candidate = match scope {
            KnowledgeScope::All => advertised.clone(),
            KnowledgeScope::DestinationOnly => patterns.iter().map(|p| p.probs().to_vec()).collect(),
        };
        Ok(Self { advertised, candidate })
    }

    /// The pattern known for `node` as a destination.
    pub fn known(&self, node: NodeId) -> Result<&[f64]> {
        self.advertised
            .get(node.0)
            .map(Vec::as_slice)
            .ok_or(Error::MissingPattern(node.0))
    }

    /// The pattern `node` is scored with as a custodian or candidate.
    pub fn candidate(&self, node: NodeId) -> Result<&[f64]> {
        self.candidate
            .get(node.0)
            .map(Vec::as_slice)
            .ok_or(Error::MissingPattern(node.0))
    }

    pub fn len(&self) -> usize {
        self.advertised.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advertised.is_empty()
    }
}

pub fn score_to_destination(
    node: NodeId,
    dest: NodeId,
    oracle: &KnowledgeOracle,
    metric: MetricKind,
) -> Result<Score> {
    let mut score = metric.score(oracle.candidate(node)?, oracle.known(dest)?)?;
    score.value = snap_score(score.value);
    Ok(score)
}

/// Routing compares scores on a 2^-40 grid (~9e-13). Distinct permutations
/// of one pattern often tie exactly in theory; without snapping, rounding
/// noise would break those ties differently for each metric.
pub const SCORE_RESOLUTION: f64 = 1.0 / (1u64 << 40) as f64;

fn snap_score(v: f64) -> f64 {
    (v / SCORE_RESOLUTION).round() * SCORE_RESOLUTION
}

/// All node-to-destination scores, computed once per run.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    n: usize,
    orientation: Orientation,
    values: Vec<f64>,
}

impl ScoreTable {
    pub fn new(oracle: &KnowledgeOracle, metric: MetricKind) -> Result<Self> {
        let n = oracle.len();
        let mut values = Vec::with_capacity(n * n);
        for node in 0..n {
            for dest in 0..n {
                values.push(score_to_destination(NodeId(node), NodeId(dest), oracle, metric)?.value);
            }
        }
        Ok(Self {
            n,
            orientation: metric.orientation(),
            values,
        })
    }

    #[inline]
    pub fn value(&self, node: NodeId, dest: NodeId) -> f64 {
        self.values[node.0 * self.n + dest.0]
    }

    pub fn score(&self, node: NodeId, dest: NodeId) -> Score {
        Score {
            value: self.value(node, dest),
            orientation: self.orientation,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }
}

/// Lowest-hop copy, ties to the lowest holder id.
fn best_copy(copies: &[HeldCopy]) -> Option<HeldCopy> {
    copies.iter().copied().min_by_key(|c| (c.hops, c.holder))
}

/// Delivery actions for every bundle whose destination is present. Returns
/// the bundles left undelivered.
fn deliveries<'a>(view: &'a LocationView, actions: &mut Vec<TransferAction>) -> Vec<&'a HeldBundle> {
    let mut rest = Vec::new();
    for hb in &view.held {
        match best_copy(&hb.copies) {
            Some(c) if view.contains(hb.destination) && c.holder != hb.destination => {
                actions.push(TransferAction {
                    bundle: hb.bundle,
                    from: c.holder,
                    to: hb.destination,
                    kind: TransferKind::Deliver,
                })
            }
            Some(_) => rest.push(hb),
            None => {}
        }
    }
    rest
}

/// Flood: every copy spreads to every present node lacking one.
pub fn epidemic_decide(view: &LocationView) -> Vec<TransferAction> {
    let mut actions = Vec::new();
    for hb in &view.held {
        let Some(src) = best_copy(&hb.copies) else { continue };
        if view.contains(hb.destination) && src.holder != hb.destination {
            actions.push(TransferAction {
                bundle: hb.bundle,
                from: src.holder,
                to: hb.destination,
                kind: TransferKind::Deliver,
            });
        }
        for &n in &view.nodes {
            if n == hb.destination || hb.copies.iter().any(|c| c.holder == n) {
                continue;
            }
            actions.push(TransferAction {
                bundle: hb.bundle,
                from: src.holder,
                to: n,
                kind: TransferKind::Replicate,
            });
        }
    }
    actions
}

/// Hold until the destination is met.
pub fn opportunistic_decide(view: &LocationView) -> Vec<TransferAction> {
    let mut actions = Vec::new();
    deliveries(view, &mut actions);
    actions
}

/// Hand custody to a uniformly random present node that has not yet handled
/// the bundle during its current visit.
///
/// A node handles a bundle once per visit: the custodian decides only if its
/// own flag is clear, and after the pass it is flagged whether it forwarded
/// or kept the bundle (see [`random_handled`]).
pub fn random_decide<R: Rng + ?Sized>(
    view: &LocationView,
    visit_log: &VisitHandleLog,
    rng: &mut R,
) -> Vec<TransferAction> {
    let mut actions = Vec::new();
    let rest = deliveries(view, &mut actions);
    let mut eligible = Vec::with_capacity(view.nodes.len());
    for hb in rest {
        let custodian = hb.copies[0].holder;
        if visit_log.is_flagged(custodian, hb.bundle) {
            continue;
        }
        eligible.clear();
        eligible.extend(
            view.nodes
                .iter()
                .copied()
                .filter(|&n| n != custodian && !visit_log.is_flagged(n, hb.bundle)),
        );
        if let Some(&to) = eligible.choose(rng) {
            actions.push(TransferAction {
                bundle: hb.bundle,
                from: custodian,
                to,
                kind: TransferKind::ForwardWithCustody,
            });
        }
    }
    actions
}

/// The (custodian, bundle) pairs that made their once-per-visit decision in
/// a [`random_decide`] pass over `view`.
pub fn random_handled(view: &LocationView) -> impl Iterator<Item = (NodeId, BundleId)> + '_ {
    view.held
        .iter()
        .filter(|hb| !view.contains(hb.destination))
        .filter_map(|hb| hb.copies.first().map(|c| (c.holder, hb.bundle)))
}

/// Hand custody to the present node whose known pattern is most similar to
/// the destination's, provided it is strictly more similar than the
/// custodian. Ties go to the lowest node id.
pub fn pattern_greedy_decide(
    view: &LocationView,
    scores: &ScoreTable,
    visit_log: &VisitHandleLog,
) -> Result<Vec<TransferAction>> {
    let mut actions = Vec::new();
    let rest = deliveries(view, &mut actions);
    let orientation = scores.orientation();
    for hb in rest {
        let custodian = hb.copies[0].holder;
        let dest = hb.destination;
        if custodian.0 >= scores.n_nodes() || dest.0 >= scores.n_nodes() {
            return Err(Error::MissingPattern(custodian.0.max(dest.0)));
        }
        let mut best: Option<(NodeId, f64)> = None;
        let own = scores.value(custodian, dest);
        for &n in &view.nodes {
            if n == custodian || visit_log.is_flagged(n, hb.bundle) {
                continue;
            }
            let s = scores.value(n, dest);
            if !is_better(orientation, s, own) {
                continue;
            }
            match best {
                Some((_, b)) if !is_better(orientation, s, b) => {}
                _ => best = Some((n, s)),
            }
        }
        if let Some((to, _)) = best {
            actions.push(TransferAction {
                bundle: hb.bundle,
                from: custodian,
                to,
                kind: TransferKind::ForwardWithCustody,
            });
        }
    }
    Ok(actions)
}
