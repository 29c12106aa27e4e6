//! Cross-module property suite run by `pattern-dtn verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{delay_vs_epidemic, mean_delay};
use crate::engine::{ScenarioConfig, Simulation};
use crate::error::Error;
use crate::metrics::{
    better, canberra_distance, cosine_similarity, euclidean_distance, matching_similarity, MetricKind, DEFAULT_DELTA,
};
use crate::mobility::NodeId;
use crate::patterns::{build_pattern, random_rank_assignment, MobilityPattern};
use crate::routing::{
    pattern_greedy_decide, score_to_destination, BundleId, HeldBundle, HeldCopy, KnowledgeOracle, KnowledgeScope,
    LocationView, Policy, ScoreTable, TransferAction, TransferKind, VisitHandleLog,
};

use super::config::parse_config;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    /// `Err` carries the first counterexample.
    pub result: Result<(), String>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }
}

type Check = Result<(), String>;
type Property = (&'static str, fn(&mut ChaCha8Rng) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_pattern(rng: &mut ChaCha8Rng, n: usize, d: f64) -> MobilityPattern {
    let ranks = random_rank_assignment(n, rng).expect("n > 0");
    build_pattern(d, &ranks).expect("d >= 1")
}

/// A pattern vector, or (one time in four) a sparse non-negative vector.
fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.25) {
        (0..n).map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen::<f64>() }).collect()
    } else {
        let d = rng.gen_range(1.0..4.0);
        random_pattern(rng, n, d).probs().to_vec()
    }
}

fn normalization(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..500 {
        let n = rng.gen_range(1..=60);
        let d = if rng.gen_bool(0.1) { 1.0 } else { rng.gen_range(1.0..8.0) };
        let p = random_pattern(rng, n, d);
        let sum: f64 = p.probs().iter().sum();
        ensure((sum - 1.0).abs() <= 1e-12, || format!("N={n} d={d}: sum {sum}"))?;
    }
    Ok(())
}

fn symmetry_identity(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let (a, b) = (random_vector(rng, n), random_vector(rng, n));
        let e = |x: &[f64], y: &[f64]| euclidean_distance(x, y).unwrap();
        let c = |x: &[f64], y: &[f64]| canberra_distance(x, y).unwrap();
        let m = |x: &[f64], y: &[f64]| matching_similarity(x, y, DEFAULT_DELTA).unwrap();
        ensure(e(&a, &b) == e(&b, &a) && e(&a, &a) == 0.0, || format!("euclidean on {a:?} {b:?}"))?;
        ensure(c(&a, &b) == c(&b, &a) && c(&a, &a) == 0.0, || format!("canberra on {a:?} {b:?}"))?;
        ensure(m(&a, &b) == m(&b, &a) && m(&a, &a) == n, || format!("matching on {a:?} {b:?}"))?;
        if a.iter().any(|&x| x > 0.0) && b.iter().any(|&x| x > 0.0) {
            let ab = cosine_similarity(&a, &b).unwrap();
            let aa = cosine_similarity(&a, &a).unwrap();
            ensure(ab == cosine_similarity(&b, &a).unwrap(), || format!("cosine symmetry on {a:?} {b:?}"))?;
            ensure((aa - 1.0).abs() < 1e-12, || format!("cosine identity {aa} on {a:?}"))?;
        }
    }
    Ok(())
}

fn canberra_bound(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let (a, b) = (random_vector(rng, n), random_vector(rng, n));
        let c = canberra_distance(&a, &b).unwrap();
        ensure((0.0..=n as f64).contains(&c), || format!("{c} outside [0, {n}]"))?;
    }
    Ok(())
}

fn matching_monotone(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let (a, b) = (random_vector(rng, n), random_vector(rng, n));
        let mut deltas: Vec<f64> = (0..4).map(|_| 10f64.powf(rng.gen_range(-12.0..0.5))).collect();
        deltas.push(0.0);
        deltas.sort_by(f64::total_cmp);
        let counts: Vec<usize> = deltas.iter().map(|&d| matching_similarity(&a, &b, d).unwrap()).collect();
        ensure(counts.windows(2).all(|w| w[0] <= w[1]), || format!("{counts:?} at deltas {deltas:?}"))?;
    }
    Ok(())
}

/// Full-knowledge populations share one L2 norm, so the closest candidate is
/// also the one at the smallest angle.
fn ordering_equivalence(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..300 {
        let d = rng.gen_range(1.1..3.0);
        let n = 25;
        let target = random_pattern(rng, n, d);
        let pop: Vec<MobilityPattern> = (0..rng.gen_range(2..20)).map(|_| random_pattern(rng, n, d)).collect();
        let by_dist = (0..pop.len()).min_by(|&i, &j| {
            let di = euclidean_distance(pop[i].probs(), target.probs()).unwrap();
            let dj = euclidean_distance(pop[j].probs(), target.probs()).unwrap();
            di.total_cmp(&dj)
        });
        let by_angle = (0..pop.len()).max_by(|&i, &j| {
            let ci = cosine_similarity(pop[i].probs(), target.probs()).unwrap();
            let cj = cosine_similarity(pop[j].probs(), target.probs()).unwrap();
            // ties resolve to the lower index on both sides
            ci.total_cmp(&cj).then(j.cmp(&i))
        });
        ensure(by_dist == by_angle, || format!("d={d}: euclidean picks {by_dist:?}, angle picks {by_angle:?}"))?;
    }
    Ok(())
}

/// Exhaustive argbest over every colocation subset of a 5-node world.
fn greedy_brute_force(rng: &mut ChaCha8Rng) -> Check {
    const NODES: usize = 5;
    const LOCS: usize = 6;
    let metrics = [
        MetricKind::Euclidean,
        MetricKind::Canberra,
        MetricKind::CosineAngle,
        MetricKind::Matching(DEFAULT_DELTA),
    ];
    for world in 0..4 {
        let d = [1.1, 1.5, 2.0, 3.0][world];
        let patterns: Vec<MobilityPattern> = (0..NODES).map(|_| random_pattern(rng, LOCS, d)).collect();
        for metric in metrics {
            for l in [LOCS, 3, 2, 1] {
                for scope in [KnowledgeScope::DestinationOnly, KnowledgeScope::All] {
                    let oracle = KnowledgeOracle::new(&patterns, l, scope).map_err(|e| e.to_string())?;
                    let table = ScoreTable::new(&oracle, metric).map_err(|e| e.to_string())?;
                    for mask in 1u32..(1 << NODES) {
                        let present: Vec<NodeId> = (0..NODES).filter(|i| mask & (1 << i) != 0).map(NodeId).collect();
                        for &custodian in &present {
                            for dest in (0..NODES).map(NodeId).filter(|&n| n != custodian) {
                                for flagged in std::iter::once(None).chain(present.iter().copied().map(Some)) {
                                    let got = greedy_once(&present, custodian, dest, flagged, &table)?;
                                    let want = argbest(&present, custodian, dest, flagged, &oracle, metric)?;
                                    ensure(got == want, || {
                                        format!(
                                            "{} l={l} {scope:?} nodes {present:?} custodian {} dest {} flagged {flagged:?}: \
                                             got {got:?}, want {want:?}",
                                            metric.name(),
                                            custodian.0,
                                            dest.0
                                        )
                                    })?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn greedy_once(
    present: &[NodeId],
    custodian: NodeId,
    dest: NodeId,
    flagged: Option<NodeId>,
    table: &ScoreTable,
) -> Result<Vec<TransferAction>, String> {
    let view = LocationView {
        nodes: present.to_vec(),
        held: vec![HeldBundle {
            bundle: BundleId(0),
            destination: dest,
            copies: vec![HeldCopy { holder: custodian, hops: 0 }],
        }],
    };
    let mut log = VisitHandleLog::new(present.iter().map(|n| n.0 + 1).max().unwrap_or(0).max(dest.0 + 1));
    if let Some(f) = flagged {
        log.mark(f, BundleId(0));
    }
    pattern_greedy_decide(&view, table, &log).map_err(|e| e.to_string())
}

fn argbest(
    present: &[NodeId],
    custodian: NodeId,
    dest: NodeId,
    flagged: Option<NodeId>,
    oracle: &KnowledgeOracle,
    metric: MetricKind,
) -> Result<Vec<TransferAction>, String> {
    let action = |to, kind| TransferAction { bundle: BundleId(0), from: custodian, to, kind };
    if present.contains(&dest) {
        return Ok(vec![action(dest, TransferKind::Deliver)]);
    }
    let score = |n| score_to_destination(n, dest, oracle, metric).map_err(|e| e.to_string());
    let own = score(custodian)?;
    let mut best: Option<(NodeId, _)> = None;
    for &n in present {
        if n == custodian || Some(n) == flagged {
            continue;
        }
        let s = score(n)?;
        if !better(s, own).map_err(|e| e.to_string())? {
            continue;
        }
        // strictly better than the incumbent; equal scores keep the lower id
        let take = match best {
            None => true,
            Some((_, b)) => better(s, b).map_err(|e| e.to_string())?,
        };
        if take {
            best = Some((n, s));
        }
    }
    Ok(best.map(|(to, _)| action(to, TransferKind::ForwardWithCustody)).into_iter().collect())
}

fn micro_config(policy: Policy, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_nodes: 5,
        n_locations: 3,
        duration: 400.0,
        traffic_horizon: 100.0,
        packet_interval: 10.0,
        d: 1.5,
        policy,
        seed,
        ..ScenarioConfig::default()
    }
}

fn epidemic_lower_bound(_rng: &mut ChaCha8Rng) -> Check {
    let policies = [
        Policy::Opportunistic,
        Policy::Random,
        Policy::Pattern { metric: MetricKind::Euclidean, knowledge: 3 },
        Policy::Pattern { metric: MetricKind::Canberra, knowledge: 2 },
        Policy::Pattern { metric: MetricKind::CosineAngle, knowledge: 1 },
        Policy::Pattern { metric: MetricKind::Matching(DEFAULT_DELTA), knowledge: 3 },
    ];
    for seed in 1..=5 {
        let run = |p| Simulation::new(&micro_config(p, seed)).and_then(Simulation::run).map_err(|e| e.to_string());
        let (epi, _) = run(Policy::Epidemic)?;
        for p in policies {
            let (x, _) = run(p)?;
            let h = delay_vs_epidemic(&x, &epi).map_err(|e| e.to_string())?;
            ensure(!h.has_negative_bins(), || format!("{p} seed {seed}: negative bins {:?}", h.bins))?;
            ensure(h.only_x == 0, || format!("{p} seed {seed}: delivered {} bundles epidemic missed", h.only_x))?;
        }
    }
    Ok(())
}

fn degenerate_world(_rng: &mut ChaCha8Rng) -> Check {
    for policy in [Policy::Epidemic, Policy::Opportunistic] {
        let cfg = ScenarioConfig { n_nodes: 2, n_locations: 1, duration: 200.0, traffic_horizon: 100.0, policy, ..ScenarioConfig::default() };
        let only = MobilityPattern::from_probs(vec![1.0]).map_err(|e| e.to_string())?;
        let (stats, _) = Simulation::with_patterns(&cfg, vec![only.clone(), only])
            .and_then(Simulation::run)
            .map_err(|e| e.to_string())?;
        let delay = mean_delay(&stats).map_err(|e| e.to_string())?;
        ensure(delay == 0.0 && stats.delivery_ratio() == 1.0, || format!("{policy}: mean delay {delay}"))?;
    }
    Ok(())
}

fn fault_injection(_rng: &mut ChaCha8Rng) -> Check {
    let cfg = ScenarioConfig { delta: -1.0, ..ScenarioConfig::default() };
    ensure(matches!(cfg.validate(), Err(Error::InvalidDelta(_))), || "negative delta accepted".into())?;
    ensure(MetricKind::matching(-1.0).is_err(), || "negative matching delta accepted".into())?;
    let parsed = parse_config("t_min = 20, t_max = 10").map_err(|e| e.to_string())?;
    ensure(parsed.base_scenario().is_err(), || "t_min > t_max accepted".into())
}

/// Runs every property with a fixed seed.
pub fn run_properties(seed: u64) -> Vec<PropertyOutcome> {
    let props: [Property; 9] = [
        ("pattern normalization within 1e-12", normalization),
        ("metric symmetry and identity", symmetry_identity),
        ("canberra bounded by N", canberra_bound),
        ("matching monotone in delta", matching_monotone),
        ("euclidean/angle ordering equivalence", ordering_equivalence),
        ("greedy decision equals exhaustive argbest", greedy_brute_force),
        ("epidemic lower bound on micro scenario", epidemic_lower_bound),
        ("permanent colocation gives zero delay", degenerate_world),
        ("invalid parameters rejected", fault_injection),
    ];
    props
        .iter()
        .enumerate()
        .map(|(i, &(name, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            PropertyOutcome { name, result: f(&mut rng) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for o in run_properties(7) {
            assert!(o.passed(), "{}: {:?}", o.name, o.result);
        }
    }
}
