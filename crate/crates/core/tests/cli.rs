use std::fs;
use std::path::Path;

use pattern_dtn::cli::main_with_args;

const SMALL: &str = "\
# tiny world
n_nodes = 6, n_locations = 4
duration = 300
traffic_horizon = 60, packet_interval = 10
";

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["pattern-dtn"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn verify_passes() {
    assert_eq!(cli(&["verify"]), 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    // policy and d are required for a single run
    assert_eq!(cli(&["run", "--config", &cfg, "--out", out]), 1);
    assert_eq!(cli(&["run", "--config", &cfg, "--d", "1.5", "--policy", "pattern", "--out", out]), 1);
    assert_eq!(cli(&["run", "--config", &cfg, "--d", "0.5", "--policy", "random", "--out", out]), 1);
    assert_eq!(cli(&["run", "--config", &cfg, "--d", "2", "--policy", "flood", "--out", out]), 1);
    assert_eq!(
        cli(&["run", "--config", &cfg, "--d", "2", "--policy", "pattern", "--metric", "angle", "--knowledge", "9", "--out", out]),
        1
    );
    assert_eq!(cli(&["run", "--config", "/no/such/file", "--d", "2", "--policy", "random"]), 2);
    assert_eq!(cli(&["tables", "--out", dir.path().join("missing").to_str().unwrap()]), 2);
    assert_eq!(cli(&["bogus"]), 1);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "t_min = 20, t_max = 10\n").unwrap();
    assert_eq!(cli(&["run", "--config", bad.to_str().unwrap(), "--d", "2", "--policy", "epidemic"]), 1);
    fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(cli(&["matrix", "--config", bad.to_str().unwrap()]), 1);
}

#[test]
fn run_writes_records_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let args = [
        "run", "--config", &cfg, "--d", "1.5", "--policy", "pattern", "--metric", "canberra", "--knowledge", "2",
        "--runs", "3", "--seed", "10", "--jobs", "2", "--trace", "--out", out.to_str().unwrap(),
    ];
    assert_eq!(cli(&args), 0);
    assert_eq!(
        listing(&out.join("records")),
        ["s10", "s11", "s12"].map(|s| format!("pattern-canberra-d1.5-l2-{s}.csv"))
    );
    assert_eq!(listing(&out.join("traces")).len(), 3);
    let table = fs::read_to_string(out.join("tables.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("pattern,canberra,1.5,2,"));
    // three runs give a half width
    assert!(!lines[1].split(',').nth(5).unwrap().is_empty());
}

#[test]
fn matrix_is_deterministic_and_tables_rebuild() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for out in &outs {
        assert_eq!(cli(&["matrix", "--config", &cfg, "--runs", "2", "--jobs", "2", "--out", out.to_str().unwrap()]), 0);
    }
    // 3 baselines + 4 metrics x l in {4,3,2,1}, three d values, two seeds
    let records = listing(&outs[0].join("records"));
    assert_eq!(records.len(), 19 * 3 * 2);
    for name in &records {
        let a = fs::read(outs[0].join("records").join(name)).unwrap();
        let b = fs::read(outs[1].join("records").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let table = fs::read(outs[0].join("tables.csv")).unwrap();
    assert_eq!(table, fs::read(outs[1].join("tables.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&table).lines().count(), 1 + 19 * 3);

    // series for the first seed: one evolution file per run, one histogram
    // per non-epidemic run
    let root = listing(&outs[0]);
    assert_eq!(root.iter().filter(|f| f.starts_with("evo_")).count(), 19 * 3);
    assert_eq!(root.iter().filter(|f| f.starts_with("hist_")).count(), 18 * 3);
    assert!(root.iter().all(|f| !f.starts_with("hist_epidemic")));

    fs::remove_file(outs[0].join("tables.csv")).unwrap();
    assert_eq!(cli(&["tables", "--out", outs[0].to_str().unwrap()]), 0);
    assert_eq!(fs::read(outs[0].join("tables.csv")).unwrap(), table);
}

#[test]
fn single_run_tables_have_no_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let args = ["matrix", "--config", &cfg, "--runs", "1", "--d", "2", "--policy", "opportunistic", "--out", out.to_str().unwrap()];
    assert_eq!(cli(&args), 0);
    let table = fs::read_to_string(out.join("tables.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], ["opportunistic", "none", "2", "4"]);
    assert_eq!(row[5], "");
    assert_eq!(row[6], "1.000000");
    assert_eq!(row[7], "");
}
