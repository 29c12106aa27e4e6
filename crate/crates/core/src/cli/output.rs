//! On-disk formats: per-run record files, the aggregated table, and the
//! two-column histogram and evolution series.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{aggregate_table, CellKey, DelayHistogram, EvolutionSeries, RunSummary, TableRow};
use crate::engine::{BundleRecord, MoveRecord, RunStats};
use crate::mobility::NodeId;
use crate::routing::BundleId;
use crate::time::SimTime;

use super::CliError;

pub const RECORDS_DIR: &str = "records";
pub const TRACES_DIR: &str = "traces";
pub const TABLE_FILE: &str = "tables.csv";

const RECORD_HEADER: [&str; 12] = [
    "run_id",
    "policy",
    "metric",
    "d",
    "l",
    "seed",
    "bundle_id",
    "source",
    "dest",
    "created_at",
    "delivered_at",
    "hops",
];

/// `<policy>-<metric>-d<d>-l<l>-s<seed>`, unique per run in a matrix.
pub fn run_id(key: &CellKey, seed: u64) -> String {
    format!("{}-{}-d{}-l{}-s{}", key.policy, key.metric, key.d(), key.l, seed)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub fn record_path(out: &Path, id: &str) -> PathBuf {
    out.join(RECORDS_DIR).join(format!("{id}.csv"))
}

pub fn write_records(out: &Path, stats: &RunStats) -> Result<PathBuf, CliError> {
    let key = CellKey::new(&stats.policy, stats.d, stats.knowledge);
    let id = run_id(&key, stats.seed);
    let path = record_path(out, &id);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    let fail = |e: csv::Error| io_err(&path, e);
    w.write_record(RECORD_HEADER).map_err(fail)?;
    let (d, l, seed) = (key.d().to_string(), key.l.to_string(), stats.seed.to_string());
    for r in &stats.records {
        w.write_record([
            id.as_str(),
            key.policy.as_str(),
            key.metric.as_str(),
            d.as_str(),
            l.as_str(),
            seed.as_str(),
            &r.id.0.to_string(),
            &r.source.0.to_string(),
            &r.destination.0.to_string(),
            &r.created_at.to_string(),
            &r.delivered_at.map(|t| t.to_string()).unwrap_or_default(),
            &r.hops.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn write_trace(out: &Path, id: &str, trace: &[MoveRecord]) -> Result<(), CliError> {
    let dir = out.join(TRACES_DIR);
    ensure_dir(&dir)?;
    let path = dir.join(format!("{id}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    let fail = |e: csv::Error| io_err(&path, e);
    w.write_record(["time", "node", "from", "to"]).map_err(fail)?;
    for m in trace {
        w.write_record([m.time.to_string(), m.node.0.to_string(), m.from.0.to_string(), m.to.0.to_string()])
            .map_err(fail)?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Per-run summary read back from a record file.
pub fn read_summary(path: &Path) -> Result<RunSummary, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = rd.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.iter().ne(RECORD_HEADER) {
        return Err(io_err(path, "unexpected header"));
    }
    let bad = |what: &str| io_err(path, format!("bad {what}"));
    let mut key: Option<(CellKey, u64)> = None;
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| io_err(path, e))?;
        if key.is_none() {
            let d: f64 = row[3].parse().map_err(|_| bad("d"))?;
            let cell = CellKey {
                policy: row[1].to_string(),
                metric: row[2].to_string(),
                d_millis: (d * 1000.0).round() as i64,
                l: row[4].parse().map_err(|_| bad("l"))?,
            };
            key = Some((cell, row[5].parse().map_err(|_| bad("seed"))?));
        }
        let secs = |s: &str, what: &str| s.parse::<f64>().map(SimTime::from_secs).map_err(|_| bad(what));
        records.push(BundleRecord {
            id: BundleId(row[6].parse().map_err(|_| bad("bundle_id"))?),
            source: NodeId(row[7].parse().map_err(|_| bad("source"))?),
            destination: NodeId(row[8].parse().map_err(|_| bad("dest"))?),
            created_at: secs(&row[9], "created_at")?,
            delivered_at: match &row[10] {
                "" => None,
                s => Some(secs(s, "delivered_at")?),
            },
            hops: row[11].parse().map_err(|_| bad("hops"))?,
        });
    }
    let (key, seed) = key.ok_or_else(|| io_err(path, "no records"))?;
    Ok(RunSummary::from_records(key, seed, &records))
}

/// Every record file under `out/records`, in file-name order.
pub fn read_all_summaries(out: &Path) -> Result<Vec<RunSummary>, CliError> {
    let dir = out.join(RECORDS_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| io_err(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_summary(p)).collect()
}

fn fmt_opt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

pub fn write_table(out: &Path, rows: &[TableRow]) -> Result<(), CliError> {
    let path = out.join(TABLE_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    let fail = |e: csv::Error| io_err(&path, e);
    w.write_record([
        "policy",
        "metric",
        "d",
        "l",
        "mean_delay",
        "delay_halfwidth",
        "mean_hops",
        "hops_halfwidth",
        "delivery_ratio",
    ])
    .map_err(fail)?;
    for r in rows {
        w.write_record([
            r.key.policy.clone(),
            r.key.metric.clone(),
            r.key.d().to_string(),
            r.key.l.to_string(),
            fmt_opt(r.delay.mean),
            fmt_opt(r.delay.half_width),
            fmt_opt(r.hops.mean),
            fmt_opt(r.hops.half_width),
            format!("{:.6}", r.delivery_ratio),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Aggregates summaries into `tables.csv`; cells with one run get no CI.
pub fn emit_table(out: &Path, summaries: &[RunSummary]) -> Result<Vec<TableRow>, CliError> {
    let rows = aggregate_table(summaries, false)?;
    write_table(out, &rows)?;
    Ok(rows)
}

fn write_pairs(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (String, String)>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for (a, b) in rows {
        w.write_record([a, b]).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `hist_<run_id>.csv`: 1 s bins of `delay_x - delay_epidemic`.
pub fn write_histogram(out: &Path, id: &str, h: &DelayHistogram) -> Result<(), CliError> {
    let path = out.join(format!("hist_{id}.csv"));
    write_pairs(&path, ["bin_start", "count"], h.bins.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

/// `evo_<run_id>.csv`: mean delay per 100 s delivery bucket, empty if none.
pub fn write_evolution(out: &Path, id: &str, s: &EvolutionSeries) -> Result<(), CliError> {
    let path = out.join(format!("evo_{id}.csv"));
    write_pairs(
        &path,
        ["bucket_start", "mean_delay"],
        s.buckets
            .iter()
            .enumerate()
            .map(|(i, v)| (s.bucket_start(i).to_string(), v.map(|x| format!("{x:.6}")).unwrap_or_default())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::Policy;

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        ensure_dir(&dir.path().join(RECORDS_DIR)).unwrap();
        let rec = |id: u32, c: u64, d: Option<u64>, hops| BundleRecord {
            id: BundleId(id),
            source: NodeId(3),
            destination: NodeId(7),
            created_at: SimTime::from_micros(c),
            delivered_at: d.map(SimTime::from_micros),
            hops,
        };
        let stats = RunStats {
            policy: Policy::Random,
            d: 1.1,
            knowledge: 25,
            seed: 4,
            duration: SimTime::from_secs(4000.0),
            records: vec![
                rec(0, 12_340_000, Some(3_999_990_000), 5),
                rec(1, 470_000_000, None, 0),
                rec(2, 10_000, Some(10_000), 1),
            ],
        };
        let path = write_records(dir.path(), &stats).unwrap();
        assert!(path.ends_with("records/random-none-d1.1-l25-s4.csv"));
        let back = read_summary(&path).unwrap();
        assert_eq!(back, RunSummary::of(&stats));
    }
}
