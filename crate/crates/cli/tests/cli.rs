use std::path::PathBuf;
use std::process::Command;

fn rdars() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdars"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn run_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let status = rdars()
        .args(["run", "--trials", "2", "--seed", "4", "--algos", "WA_OPT_ETA,COMPACT_ETA1", "--sweep", "ptot_dbm=20:30:10"])
        .arg("--scenario")
        .arg(scenario("small.toml"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,sweep_value,algorithm,eta,sum_rate_bits,min_ue_rate,iters,wall_ms,status");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("0,20,COMPACT_ETA1,1,"));
    assert!(lines[8].starts_with("1,30,WA_OPT_ETA,"));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("WA_OPT_ETA"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, serial) in [false, true].into_iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let mut cmd = rdars();
        cmd.args(["run", "--trials", "3", "--seed", "99", "--algos", "RANDOM_ETA,EXHAUSTIVE_ETA", "--no-wall-time"])
            .arg("--scenario")
            .arg(scenario("small.toml"))
            .arg("--out")
            .arg(&out);
        if serial {
            cmd.arg("--serial");
        }
        assert!(cmd.status().unwrap().success());
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for extra in [
        vec!["--algos", "NOPE"],
        vec!["--trials", "0"],
        vec!["--sweep", "ptot_dbm=3:1:1"],
        vec!["--scenario", "/definitely/missing.toml"],
    ] {
        let o = rdars().arg("run").args(&extra).arg("--out").arg(&out).output().unwrap();
        assert!(!o.status.success(), "{extra:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n_tx = 4\nmystery = 2\n").unwrap();
    let o = rdars().arg("run").arg("--scenario").arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("mystery"));
}

#[test]
fn analyze_tabulates_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = rdars()
        .args(["analyze", "--two-ue", "--eta-sweep", "--seed", "5"])
        .arg("--scenario")
        .arg(scenario("two_ue.toml"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    // N = 128, a = 20: levels 1..=6
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| &r[4] == "1").count(), 1);
    for r in &rows {
        for col in [1, 2] {
            let v: f64 = r[col].parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let o = rdars().args(["analyze", "--two-ue"]).arg("--out").arg(&out).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn validate_quick_passes() {
    let o = rdars().args(["validate", "--quick"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 10);
}
