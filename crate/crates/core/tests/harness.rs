use std::fs;
use std::io::Write;

use rainbow_core::harness::{run_experiment, ExperimentConfig, ExperimentRecord};

const CONFIG: &str = "\
# small mixed run
kind = random-above-threshold
n = 9
k = 3
instances = 6
seed = 42
modules = solver,reduction,extremal
batch = 2
";

fn records(path: &std::path::Path) -> Vec<ExperimentRecord> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn strip_timing(mut rs: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
    rs.sort_by_key(|r| r.index);
    for r in &mut rs {
        r.timing.clear();
    }
    rs
}

#[test]
fn runs_are_reproducible_up_to_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert_eq!(run_experiment(&cfg, &a).unwrap().written, 6);
    run_experiment(&cfg, &b).unwrap();
    let ra = strip_timing(records(&a));
    assert_eq!(ra, strip_timing(records(&b)));
    for r in &ra {
        assert_eq!(r.outcomes.len(), 3);
        assert!(r.outcomes.iter().all(|o| (o.status == "found") == o.witness.is_some()));
    }
}

#[test]
fn resume_skips_finished_and_repairs_torn_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let out = dir.path().join("run.jsonl");
    run_experiment(&cfg, &out).unwrap();
    let full = strip_timing(records(&out));

    let second = run_experiment(&cfg, &out).unwrap();
    assert_eq!((second.written, second.skipped), (0, 6));

    // keep three records and half of the fourth
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut f = fs::File::create(&out).unwrap();
    for l in &lines[..3] {
        writeln!(f, "{l}").unwrap();
    }
    write!(f, "{}", &lines[3][..lines[3].len() / 2]).unwrap();
    drop(f);

    let resumed = run_experiment(&cfg, &out).unwrap();
    assert_eq!((resumed.written, resumed.skipped), (3, 3));
    assert_eq!(strip_timing(records(&out)), full);
}

#[test]
fn changed_config_reruns_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.jsonl");
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    run_experiment(&cfg, &out).unwrap();
    let other = ExperimentConfig::parse(&CONFIG.replace("seed = 42", "seed = 43")).unwrap();
    assert_ne!(cfg.version_stamp(), other.version_stamp());
    assert_eq!(run_experiment(&other, &out).unwrap().written, 6);
}

#[test]
fn config_errors_carry_positions() {
    let err = ExperimentConfig::parse("n = 9\nk = three\n").unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
    assert!(ExperimentConfig::parse("colour = red\n").is_err());
}
