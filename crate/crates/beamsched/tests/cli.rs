use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beamsched::config::RunManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beamsched"))
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn echo(out: &Path) -> RunManifest {
    toml::from_str(&fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap()
}

#[test]
fn same_seed_gives_identical_trees_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nperiods = 4\nreplications = 3\nraw = true\n[matrix]\ndensities = [150]\ntx_ratios = [0.5]\n",
    );
    let mut trees = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(name);
        let o = run(&["--config", cfg.to_str().unwrap(), "--seed", "42", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut t = tree(&out);
        // the manifest echo records the output path, which differs by design
        t.retain(|k, _| !k.ends_with("manifest.toml"));
        trees.push(t);
    }
    assert!(!trees[0].is_empty());
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[0], trees[2]);
}

#[test]
fn zero_periods_is_a_usage_error() {
    let o = run(&["--periods", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn config_errors_exit_with_distinct_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = run(&["--config", tmp.path().join("none.toml").to_str().unwrap()]);
    let bad_interval = run(&["--config", write_config(tmp.path(), "[period]\ninterval_ms = 25\n").to_str().unwrap()]);
    let unknown = run(&["--config", write_config(tmp.path(), "[phy]\ncolour = 3\n").to_str().unwrap()]);
    let syntax = run(&["--config", write_config(tmp.path(), "[run\n").to_str().unwrap()]);
    let mut messages = Vec::new();
    for o in [&missing, &bad_interval, &unknown, &syntax] {
        assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
        messages.push(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    assert!(messages[0].contains("does not exist"));
    assert!(messages[1].contains("invalid configuration"));
    assert!(messages[2].contains("unknown key"));
    assert!(messages[3].contains("cannot parse"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["--periods", "1", "--replications", "1", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nseed = 5\nperiods = 3\nreplications = 2\n");
    let out = tmp.path().join("o1");
    let o = run(&["--config", cfg.to_str().unwrap(), "--periods", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = echo(&out);
    assert_eq!(m.run.periods, 2);
    assert_eq!(m.run.seed, 5);
    assert_eq!(m.run.replications, 2);
    assert_eq!(m.run.out, out);
    assert_eq!(m.phy, RunManifest::default().phy);

    let out = tmp.path().join("o2");
    let o = run(&["--periods", "1", "--replications", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = echo(&out);
    assert_eq!(m.run.seed, RunManifest::default().run.seed);
    assert_eq!(m.matrix, RunManifest::default().matrix);
}

#[test]
fn paper_matrix_gives_eight_runs_and_four_gains() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("paper");
    let o = run(&[
        "--config",
        repo_file("configs/paper.toml").to_str().unwrap(),
        "--periods",
        "2",
        "--replications",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut runs = 0;
    for cell in ["75_10", "75_50", "150_10", "150_50"] {
        for policy in ["adaptive", "baseline"] {
            let d = out.join(cell).join(policy);
            for f in ["contacted_box.dat", "beamwidth_cdf.dat", "pdr_box.dat", "throughput.dat", "summary.json", "manifest.toml"] {
                assert!(d.join(f).is_file(), "{}", d.join(f).display());
            }
            runs += 1;
        }
    }
    assert_eq!(runs, 8);
    let gains = fs::read_to_string(out.join("gains.dat")).unwrap();
    assert_eq!(gains.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reports"].as_array().unwrap().len(), 8);
    assert_eq!(summary["gains"].as_array().unwrap().len(), 4);
}

#[test]
fn dat_files_have_named_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert!(run(&["--periods", "3", "--replications", "1", "--out", out.to_str().unwrap()]).status.success());
    let d = out.join("75_10").join("adaptive");
    for f in ["contacted_box.dat", "beamwidth_cdf.dat", "pdr_box.dat", "throughput.dat"] {
        let text = fs::read_to_string(d.join(f)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# "), "{f}");
        let cols = header[2..].split_whitespace().count();
        let mut rows = 0;
        for l in lines {
            assert_eq!(l.split_whitespace().count(), cols, "{f}: {l}");
            for v in l.split_whitespace() {
                v.parse::<f64>().unwrap();
            }
            rows += 1;
        }
        assert!(rows >= 1, "{f}");
    }
    let cdf = fs::read_to_string(d.join("beamwidth_cdf.dat")).unwrap();
    let last: Vec<f64> = cdf.lines().last().unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(last, vec![360.0, 1.0]);
}

#[test]
fn raw_dumps_have_expected_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["--periods", "2", "--replications", "2", "--raw", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let d = out.join("75_10").join("adaptive");
    let header = |f: &str| fs::read_to_string(d.join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header("topology.csv"),
        "replication,period,id,lane,longitudinal_m,lateral_m,heading_deg,is_mm_tx,cam_offset_ms"
    );
    assert_eq!(header("events.csv"), "replication,period,time_ms,event,sender,receiver,interval");
    assert_eq!(
        header("links.csv"),
        "replication,period,interval,tx,rx,distance_m,tx_beamwidth,sinr_db,delivered,outcome"
    );
    let records = fs::read_to_string(d.join("records.ndjson")).unwrap();
    let mut reps = std::collections::BTreeSet::new();
    for line in records.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        reps.insert(v["replication"].as_u64().unwrap());
        assert!(v["record"]["tx"].is_u64());
    }
    assert_eq!(reps.len(), 2);

    // link log and summary agree on delivered packets
    let mut delivered = 0u64;
    let mut rdr = csv::Reader::from_path(d.join("links.csv")).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == "delivered").unwrap();
    for row in rdr.records() {
        delivered += row.unwrap()[idx].parse::<u64>().unwrap();
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["delivered_packets"].as_u64().unwrap(), delivered);
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--replications"));
}
