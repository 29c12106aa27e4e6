//! Post-processing of run outcomes: means, Student-t intervals, delay
//! histograms against Epidemic, and delay evolution over time.

use std::collections::BTreeMap;

use crate::engine::{BundleRecord, RunStats};
use crate::error::{Error, Result};
use crate::routing::Policy;
use crate::time::SimTime;

/// Two-sided 90% Student-t critical values (t at 0.95) for df = 1..=30.
const T90: [f64; 30] = [
    6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812, 1.796, 1.782, 1.771,
    1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725, 1.721, 1.717, 1.714, 1.711, 1.708, 1.706,
    1.703, 1.701, 1.699, 1.697,
];
/// Coarser entries past df = 30; a df between entries uses the lower one.
const T90_TAIL: [(usize, f64); 3] = [(40, 1.684), (60, 1.671), (120, 1.658)];

pub const CONFIDENCE_LEVEL: f64 = 0.90;

pub fn t_critical_90(df: usize) -> Option<f64> {
    match df {
        0 => None,
        1..=30 => Some(T90[df - 1]),
        _ => Some(
            T90_TAIL
                .iter()
                .rev()
                .find(|(d, _)| *d <= df)
                .map_or(T90[29], |&(_, t)| t),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub level: f64,
    pub n: usize,
}

/// `mean ± t(0.95, n-1) * s / sqrt(n)`.
pub fn student_t_ci(samples: &[f64]) -> Result<ConfidenceInterval> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = t_critical_90(n - 1).expect("df >= 1");
    Ok(ConfidenceInterval {
        mean,
        half_width: t * var.sqrt() / (n as f64).sqrt(),
        level: CONFIDENCE_LEVEL,
        n,
    })
}

pub fn mean_delay(stats: &RunStats) -> Result<f64> {
    records_mean_delay(&stats.records)
}

pub fn mean_route_length(stats: &RunStats) -> Result<f64> {
    records_mean_hops(&stats.records)
}

fn records_mean_delay(records: &[BundleRecord]) -> Result<f64> {
    let (sum, n) = records
        .iter()
        .filter_map(|r| r.delay())
        .fold((0u64, 0usize), |(s, n), d| (s + d.micros(), n + 1));
    if n == 0 {
        return Err(Error::NoDeliveries);
    }
    Ok(sum as f64 / n as f64 / 1e6)
}

fn records_mean_hops(records: &[BundleRecord]) -> Result<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| r.delivered_at.is_some())
        .fold((0u64, 0usize), |(s, n), r| (s + u64::from(r.hops), n + 1));
    if n == 0 {
        return Err(Error::NoDeliveries);
    }
    Ok(sum as f64 / n as f64)
}

/// Per-bundle `delay_x - delay_epidemic` in 1 s bins, over bundles both runs
/// delivered. Bin `k` covers `[k, k+1)` seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayHistogram {
    pub bins: BTreeMap<i64, u64>,
    pub matched: usize,
    /// Delivered by exactly one of the two runs.
    pub only_x: usize,
    pub only_epidemic: usize,
}

impl DelayHistogram {
    pub fn has_negative_bins(&self) -> bool {
        self.bins.keys().next().is_some_and(|&k| k < 0)
    }
}

pub fn delay_vs_epidemic(stats_x: &RunStats, stats_epi: &RunStats) -> Result<DelayHistogram> {
    if stats_x.seed != stats_epi.seed || stats_x.records.len() != stats_epi.records.len() {
        return Err(Error::MismatchedRuns);
    }
    let mut h = DelayHistogram::default();
    for (x, e) in stats_x.records.iter().zip(&stats_epi.records) {
        if x.id != e.id || x.source != e.source || x.destination != e.destination || x.created_at != e.created_at {
            return Err(Error::MismatchedRuns);
        }
        match (x.delay(), e.delay()) {
            (Some(dx), Some(de)) => {
                let diff = dx.micros() as i64 - de.micros() as i64;
                *h.bins.entry(diff.div_euclid(1_000_000)).or_default() += 1;
                h.matched += 1;
            }
            (Some(_), None) => h.only_x += 1,
            (None, Some(_)) => h.only_epidemic += 1,
            (None, None) => {}
        }
    }
    Ok(h)
}

pub const EVOLUTION_BUCKET_SECS: u64 = 100;

/// Mean delay of bundles delivered in each 100 s bucket; `None` where nothing
/// was delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSeries {
    pub buckets: Vec<Option<f64>>,
}

impl EvolutionSeries {
    pub fn bucket_start(&self, i: usize) -> u64 {
        i as u64 * EVOLUTION_BUCKET_SECS
    }
}

pub fn delay_evolution(stats: &RunStats) -> EvolutionSeries {
    let width = SimTime::from_secs(EVOLUTION_BUCKET_SECS as f64).micros();
    let n = stats.duration.micros().div_ceil(width).max(1) as usize;
    let mut sums = vec![(0u64, 0u64); n];
    for r in stats.delivered() {
        let (Some(at), Some(delay)) = (r.delivered_at, r.delay()) else { continue };
        let b = ((at.micros() / width) as usize).min(n - 1);
        sums[b].0 += delay.micros();
        sums[b].1 += 1;
    }
    EvolutionSeries {
        buckets: sums
            .into_iter()
            .map(|(s, c)| (c > 0).then(|| s as f64 / c as f64 / 1e6))
            .collect(),
    }
}

/// Identifies one table cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub policy: String,
    pub metric: String,
    /// `d` in thousandths, so cells sort numerically.
    pub d_millis: i64,
    pub l: usize,
}

impl CellKey {
    pub fn new(policy: &Policy, d: f64, l: usize) -> Self {
        Self {
            policy: policy.name().to_string(),
            metric: policy.metric().map_or("none", |m| m.name()).to_string(),
            d_millis: (d * 1000.0).round() as i64,
            l,
        }
    }

    pub fn d(&self) -> f64 {
        self.d_millis as f64 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub key: CellKey,
    pub runs: usize,
    /// Interval over per-run mean delays; half width is absent with one run.
    pub delay: ConfidenceInterval,
    pub hops: ConfidenceInterval,
    pub delivery_ratio: f64,
}

fn ci_or_point(samples: &[f64]) -> ConfidenceInterval {
    student_t_ci(samples).unwrap_or(ConfidenceInterval {
        mean: samples.iter().sum::<f64>() / samples.len().max(1) as f64,
        half_width: f64::NAN,
        level: CONFIDENCE_LEVEL,
        n: samples.len(),
    })
}

/// Per-run means; what the tables are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub key: CellKey,
    pub seed: u64,
    pub generated: usize,
    pub delivered: usize,
    pub mean_delay: Option<f64>,
    pub mean_hops: Option<f64>,
}

impl RunSummary {
    pub fn of(stats: &RunStats) -> Self {
        Self {
            key: CellKey::new(&stats.policy, stats.d, stats.knowledge),
            seed: stats.seed,
            generated: stats.generated(),
            delivered: stats.delivered_count(),
            mean_delay: mean_delay(stats).ok(),
            mean_hops: mean_route_length(stats).ok(),
        }
    }

    pub fn from_records(key: CellKey, seed: u64, records: &[BundleRecord]) -> Self {
        Self {
            key,
            seed,
            generated: records.len(),
            delivered: records.iter().filter(|r| r.delivered_at.is_some()).count(),
            mean_delay: records_mean_delay(records).ok(),
            mean_hops: records_mean_hops(records).ok(),
        }
    }

    pub fn delivery_ratio(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.delivered as f64 / self.generated as f64
        }
    }
}

/// One row per (policy, metric, d, l) from the per-run means of its runs.
/// With `require_ci`, cells with fewer than two runs are an error; otherwise
/// they get a NaN half width.
pub fn aggregate_table(runs: &[RunSummary], require_ci: bool) -> Result<Vec<TableRow>> {
    let mut cells: BTreeMap<&CellKey, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        cells.entry(&r.key).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|(key, rs)| {
            if require_ci && rs.len() < 2 {
                return Err(Error::TooFewSamples(rs.len()));
            }
            let delays: Vec<f64> = rs.iter().map(|r| r.mean_delay.ok_or(Error::NoDeliveries)).collect::<Result<_>>()?;
            let hops: Vec<f64> = rs.iter().map(|r| r.mean_hops.ok_or(Error::NoDeliveries)).collect::<Result<_>>()?;
            let ratio = rs.iter().map(|r| r.delivery_ratio()).sum::<f64>() / rs.len() as f64;
            Ok(TableRow {
                key: key.clone(),
                runs: rs.len(),
                delay: ci_or_point(&delays),
                hops: ci_or_point(&hops),
                delivery_ratio: ratio,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::NodeId;
    use crate::routing::BundleId;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn rec(id: u32, created: f64, delivered: Option<f64>, hops: u32) -> BundleRecord {
        BundleRecord {
            id: BundleId(id),
            source: NodeId(0),
            destination: NodeId(1),
            created_at: SimTime::from_secs(created),
            delivered_at: delivered.map(SimTime::from_secs),
            hops,
        }
    }

    fn stats(policy: Policy, seed: u64, records: Vec<BundleRecord>) -> RunStats {
        RunStats {
            policy,
            d: 2.0,
            knowledge: 25,
            seed,
            duration: SimTime::from_secs(4000.0),
            records,
        }
    }

    #[test]
    fn t_table_matches_distribution() {
        for df in 1..=30 {
            let t = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(0.95);
            assert!((t_critical_90(df).unwrap() - t).abs() < 1e-3 + 5e-4, "df {df}: {t}");
        }
        for df in [40, 60, 120] {
            let t = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(0.95);
            assert!((t_critical_90(df).unwrap() - t).abs() < 1e-3);
        }
        // between entries the value is conservative
        for df in [31, 45, 100, 500] {
            let t = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(0.95);
            assert!(t_critical_90(df).unwrap() >= t - 1e-3);
        }
        assert_eq!(t_critical_90(0), None);
    }

    #[test]
    fn ci_examples() {
        let c = student_t_ci(&[3.0; 5]).unwrap();
        assert_eq!((c.mean, c.half_width), (3.0, 0.0));
        let c = student_t_ci(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(c.mean, 3.0);
        assert!((c.half_width - 2.132 * 2.5f64.sqrt() / 5f64.sqrt()).abs() < 1e-12);
        assert!((c.half_width - 1.507).abs() < 1e-3);
        assert_eq!(student_t_ci(&[1.0]), Err(Error::TooFewSamples(1)));
    }

    #[test]
    fn half_width_scales_with_inverse_sqrt_n() {
        // +-1 alternating samples: s^2 = n/(n-1)
        for n in [4usize, 16, 30] {
            let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let c = student_t_ci(&xs).unwrap();
            let s = (n as f64 / (n - 1) as f64).sqrt();
            let expected = t_critical_90(n - 1).unwrap() * s / (n as f64).sqrt();
            assert!((c.half_width - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn means() {
        let s = stats(Policy::Opportunistic, 1, vec![rec(0, 0.0, Some(10.0), 1), rec(1, 5.0, Some(25.0), 3), rec(2, 0.0, None, 0)]);
        assert_eq!(mean_delay(&s).unwrap(), 15.0);
        assert_eq!(mean_route_length(&s).unwrap(), 2.0);
        let z = stats(Policy::Opportunistic, 1, vec![rec(0, 7.0, Some(7.0), 1)]);
        assert_eq!(mean_delay(&z).unwrap(), 0.0);
        let none = stats(Policy::Opportunistic, 1, vec![rec(0, 0.0, None, 0)]);
        assert_eq!(mean_delay(&none), Err(Error::NoDeliveries));
        assert_eq!(mean_route_length(&none), Err(Error::NoDeliveries));
    }

    #[test]
    fn histogram_against_epidemic() {
        let epi = stats(Policy::Epidemic, 1, vec![rec(0, 0.0, Some(1.0), 2), rec(1, 0.0, Some(2.0), 2), rec(2, 0.0, Some(3.0), 1)]);
        let self_h = delay_vs_epidemic(&epi, &epi).unwrap();
        assert_eq!(self_h.bins, BTreeMap::from([(0, 3)]));
        let x = stats(Policy::Random, 1, vec![rec(0, 0.0, Some(1.5), 9), rec(1, 0.0, Some(4.0), 9), rec(2, 0.0, None, 0)]);
        let h = delay_vs_epidemic(&x, &epi).unwrap();
        assert_eq!(h.bins, BTreeMap::from([(0, 1), (2, 1)]));
        assert_eq!((h.matched, h.only_x, h.only_epidemic), (2, 0, 1));
        assert!(!h.has_negative_bins());
        let other_seed = stats(Policy::Epidemic, 2, epi.records.clone());
        assert_eq!(delay_vs_epidemic(&x, &other_seed), Err(Error::MismatchedRuns));
    }

    #[test]
    fn evolution_buckets() {
        let s = stats(Policy::Random, 1, vec![rec(0, 0.0, Some(50.0), 1), rec(1, 10.0, Some(90.0), 1), rec(2, 100.0, Some(350.0), 1), rec(3, 0.0, Some(4000.0), 1)]);
        let e = delay_evolution(&s);
        assert_eq!(e.buckets.len(), 40);
        assert_eq!(e.buckets[0], Some(65.0));
        assert_eq!(e.buckets[1], None);
        assert_eq!(e.buckets[3], Some(250.0));
        assert_eq!(e.buckets[39], Some(4000.0));
        assert_eq!(e.bucket_start(3), 300);
        let empty = delay_evolution(&stats(Policy::Random, 1, vec![rec(0, 0.0, None, 0)]));
        assert!(empty.buckets.iter().all(Option::is_none));
    }

    fn summaries(runs: &[RunStats]) -> Vec<RunSummary> {
        runs.iter().map(RunSummary::of).collect()
    }

    #[test]
    fn table_uses_per_run_means() {
        let runs: Vec<RunStats> = (0..5)
            .map(|seed| stats(Policy::Opportunistic, seed, vec![rec(0, 0.0, Some(10.0 + seed as f64), 1), rec(1, 0.0, Some(20.0), 1)]))
            .collect();
        let rows = aggregate_table(&summaries(&runs), true).unwrap();
        assert_eq!(rows.len(), 1);
        let per_run: Vec<f64> = runs.iter().map(|r| mean_delay(r).unwrap()).collect();
        assert_eq!(rows[0].delay.mean, per_run.iter().sum::<f64>() / 5.0);
        assert_eq!(rows[0].hops.half_width, 0.0);

        let identical: Vec<RunStats> = (0..5).map(|_| runs[0].clone()).collect();
        assert_eq!(aggregate_table(&summaries(&identical), true).unwrap()[0].delay.half_width, 0.0);
        assert!(aggregate_table(&summaries(&runs[..1]), true).is_err());
        assert!(aggregate_table(&summaries(&runs[..1]), false).unwrap()[0].delay.half_width.is_nan());
    }

    #[test]
    fn cells_ordered_by_d() {
        let mut runs = Vec::new();
        for d in [2.0, 1.1, 1.5] {
            for seed in 0..2 {
                let mut s = stats(Policy::Random, seed, vec![rec(0, 0.0, Some(1.0), 1)]);
                s.d = d;
                runs.push(s);
            }
        }
        let ds: Vec<f64> = aggregate_table(&summaries(&runs), true).unwrap().iter().map(|r| r.key.d()).collect();
        assert_eq!(ds, vec![1.1, 1.5, 2.0]);
    }
}
