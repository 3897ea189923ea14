use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn aimq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aimq"))
        .current_dir(dir)
        .env_remove("AIMQ_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aimq-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_writes_trace_and_report() {
    let dir = scratch("sim");
    let out = aimq(&dir, &["simulate", "--seed", "42", "--steps", "1000"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["trace.csv", "report.txt", "power.csv"] {
        assert!(dir.join("aimq-out").join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(dir.join("aimq-out/trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100_001);
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,v_bus,level,one_hot,v_raw,v_filt,v_recon,p_pri,transition"
    );
    let power = fs::read_to_string(dir.join("aimq-out/power.csv")).unwrap();
    assert!(power.starts_with("metric,value,unit\n"));
    assert!(stdout(&out).contains("steady power"));
}

#[test]
fn zero_steps_is_a_usage_error() {
    let dir = scratch("zero");
    assert_eq!(
        aimq(&dir, &["simulate", "--steps", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let dir = scratch("badflag");
    assert_eq!(
        aimq(&dir, &["simulate", "--seed", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = scratch("io");
    let out = aimq(&dir, &["simulate", "--input", "does-not-exist.txt"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = scratch("badcfg");
    fs::write(dir.join("c.toml"), "[ladder]\nthresholds = [5.0, 1.0]\n").unwrap();
    assert_eq!(
        aimq(&dir, &["-c", "c.toml", "simulate"]).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_out_dir_is_an_io_error() {
    let dir = scratch("unwritable");
    fs::write(dir.join("blocker"), "").unwrap();
    let out = aimq(
        &dir,
        &["--out-dir", "blocker/sub", "simulate", "--steps", "10"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_reads_a_trace_file() {
    let dir = scratch("input");
    let mut text = String::from("t_s=0.01\n");
    for _ in 0..100 {
        text.push_str("120.0\n");
    }
    fs::write(dir.join("bus.txt"), text).unwrap();
    let out = aimq(&dir, &["simulate", "--input", "bus.txt", "-o", "t.csv"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100 * 100 + 1);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("6")));
}

#[test]
fn env_var_sets_out_dir() {
    let dir = scratch("env");
    let out = Command::new(env!("CARGO_BIN_EXE_aimq"))
        .current_dir(&dir)
        .env("AIMQ_OUT_DIR", "from-env")
        .args(["simulate", "--steps", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("from-env/trace.csv").exists());
}

#[test]
fn batch_mode_writes_per_seed_files() {
    let dir = scratch("batch");
    let out = aimq(&dir, &["simulate", "--seeds", "3..5", "--steps", "100"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for seed in 3..=5 {
        assert!(dir.join(format!("aimq-out/trace_seed{seed}.csv")).exists());
        assert!(dir.join(format!("aimq-out/report_seed{seed}.txt")).exists());
    }
    // Same seed in batch and single mode gives the same trace.
    let single = aimq(
        &dir,
        &[
            "--out-dir",
            "single",
            "simulate",
            "--seed",
            "4",
            "--steps",
            "100",
        ],
    );
    assert!(single.status.success());
    assert_eq!(
        fs::read(dir.join("aimq-out/trace_seed4.csv")).unwrap(),
        fs::read(dir.join("single/trace.csv")).unwrap()
    );
}

#[test]
fn default_summary_reports_the_steady_band() {
    let dir = scratch("summary");
    let out = aimq(&dir, &["simulate", "--v0", "120", "--steps", "60"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let line = text.lines().find(|l| l.contains("steady power")).unwrap();
    assert!(line.contains("within"), "{line}");
}

#[test]
fn staircase_emits_csv_and_finds_eight_steps() {
    let dir = scratch("stairs");
    let out = aimq(&dir, &["staircase"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("distinct nonzero levels: 8"));
    assert!(stdout(&out).contains("LSB spacing: 10 V"));
    let csv = fs::read_to_string(dir.join("aimq-out/staircase.csv")).unwrap();
    let rows: Vec<(f64, usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert!(rows
        .iter()
        .filter(|r| r.0 < 66.0 - 1e-9)
        .all(|r| r.1 == 0 && r.2 == 0.0));
    let steps: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[1].1 != w[0].1)
        .map(|w| w[1].0)
        .collect();
    let expected = [66.0, 76.0, 86.0, 96.0, 106.0, 116.0, 126.0, 136.0];
    assert_eq!(steps.len(), expected.len());
    for (got, want) in steps.iter().zip(expected) {
        assert!((got - want).abs() <= 0.1 + 1e-9, "{got} vs {want}");
    }
}

#[test]
fn power_compare_prints_ratio() {
    let dir = scratch("power");
    let out = aimq(&dir, &["power-compare"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.0993103"), "{text}");
    assert!(text.contains("1/10.07"), "{text}");
    assert!(text.contains("secondary term negligible  yes"));

    let out = aimq(&dir, &["power-compare", "--i-pri", "0"]);
    assert!(stdout(&out).contains("(secondary dropped)  0.1000000"));

    let out = aimq(&dir, &["power-compare", "--v-sec", "5"]);
    assert!(stdout(&out).contains("secondary term negligible  no"));
}

#[test]
fn power_compare_rejects_bad_efficiency() {
    let dir = scratch("eta");
    assert_eq!(
        aimq(&dir, &["power-compare", "--eta", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        aimq(&dir, &["power-compare", "--eta", "1.2"]).status.code(),
        Some(2)
    );
}

#[test]
fn encode_single_levels() {
    let dir = scratch("encode");
    assert_eq!(
        stdout(&aimq(&dir, &["encode", "--level", "3", "--width", "8"])),
        "011 -> 00000100\n"
    );
    assert_eq!(
        stdout(&aimq(&dir, &["encode", "--level", "0", "--width", "8"])),
        "000 -> 00000000\n"
    );
    assert_eq!(
        aimq(&dir, &["encode", "--level", "9", "--width", "8"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(aimq(&dir, &["encode"]).status.code(), Some(2));
}

#[test]
fn dump_config_round_trips() {
    let dir = scratch("dump");
    let out = aimq(&dir, &["--dump-config", "simulate", "--seed", "9"]);
    assert!(out.status.success());
    let dumped = stdout(&out);
    assert!(dumped.contains("seed = 9"));
    fs::write(dir.join("dumped.toml"), &dumped).unwrap();
    let again = aimq(&dir, &["-c", "dumped.toml", "--dump-config"]);
    assert_eq!(stdout(&again), dumped);
}

#[test]
fn version_prints_defaults_hash() {
    let dir = scratch("version");
    let text = stdout(&aimq(&dir, &["--version"]));
    assert!(text.starts_with("aimq "));
    assert!(text.contains(&aimq::config::defaults_hash()));
}
