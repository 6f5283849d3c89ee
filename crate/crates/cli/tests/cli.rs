use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn semiheat(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiheat"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg("1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn exponents_succeeds_and_writes_its_files() {
    let out = tempfile::tempdir().unwrap();
    let o = semiheat(&["exponents"], &configs().join("exponents_n12.toml"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("sigma^*    3.926650"));
    for file in ["config.json", "exponents.json", "exponents.txt"] {
        assert!(out.path().join("exponents").join(file).is_file(), "{file}");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("exponents/exponents.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
}

#[test]
fn classify_sweep_writes_csv() {
    let out = tempfile::tempdir().unwrap();
    let o = semiheat(&["classify-sweep"], &configs().join("sweep_q5.toml"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.path().join("classify-sweep/classification.csv")).unwrap();
    assert!(csv.starts_with("alpha,class,crossing_radius,slow_decay_constant,fast_decay_constant\n"));
    assert!(csv.lines().skip(1).all(|l| l.contains(",Crossing,")), "{csv}");
}

#[test]
fn reruns_are_byte_identical() {
    let out = tempfile::tempdir().unwrap();
    let config = configs().join("dichotomy_gs_q7.toml");
    let mut previous = None;
    for _ in 0..2 {
        let o = semiheat(&["barriers", "--set", "experiment.alpha_pair=[1.0, 1.1]"], &config, out.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let now = (stdout(&o), snapshot(out.path()));
        assert!(now.1.contains_key(Path::new("barriers/barriers.json")), "{:?}", now.1.keys());
        if let Some(before) = previous.replace(now.clone()) {
            assert!(before == now, "outputs differ between runs");
        }
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let out = tempfile::tempdir().unwrap();
    let q7 = configs().join("portrait_q7.toml");
    assert_eq!(semiheat(&["exponents"], Path::new("missing.toml"), out.path()).status.code(), Some(1));
    assert_eq!(semiheat(&["exponents", "--set", "grid.h0=-1"], &q7, out.path()).status.code(), Some(1));
    assert_eq!(semiheat(&["exponents", "--set", "nonsense"], &q7, out.path()).status.code(), Some(1));
    assert_eq!(semiheat(&["no-such-command"], &q7, out.path()).status.code(), Some(1));
    let bad_pair = semiheat(&["barriers", "--set", "experiment.alpha_pair=[2.0, 1.0]"], &q7, out.path());
    assert_eq!(bad_pair.status.code(), Some(1));
    let no_config = Command::new(env!("CARGO_BIN_EXE_semiheat")).arg("exponents").output().unwrap();
    assert_eq!(no_config.status.code(), Some(1));
}

#[test]
fn short_horizon_is_inconclusive() {
    let out = tempfile::tempdir().unwrap();
    let o = semiheat(&["evolve", "--set", "evolve.t_end=1e-3", "--set", "grid.r_max=10"], &configs().join("portrait_q7.toml"), out.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("Undecided"));
    for file in ["series.csv", "snapshots.csv", "result.json"] {
        assert!(out.path().join("evolve").join(file).is_file(), "{file}");
    }
}

#[test]
fn wrong_fate_is_an_assertion_failure() {
    // Above the Fujita exponent, but the data are far from small.
    let out = tempfile::tempdir().unwrap();
    let o = semiheat(
        &["fujita", "--set", "experiment.amplitude=5", "--set", "experiment.fujita_r_max=20"],
        &configs().join("fujita_q4.toml"),
        out.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("BlowUp") && stdout(&o).contains("NOT as expected"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("fujita/fujita.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}
