use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_corners-lab"));
    c.env_remove("CORNERS_LAB_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn sample_csv(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name);
    let mut args = vec![
        "sample", "--model", "wishart", "--beta", "2", "--pi", "1,2", "--pihat", "0,0,0",
        "--levels", "3", "--count", "1000", "--seed", "7", "--output",
    ];
    let path = out.to_str().unwrap().to_string();
    args.push(&path);
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn sample_header_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let text = sample_csv(dir.path(), "a.csv", &[]);
    let head: Vec<&str> = text.lines().take(4).collect();
    assert_eq!(
        head,
        vec![
            "# corners-lab sample v1",
            "# seed=7",
            "# model=wishart beta=2 pi=1,2 pihat=0,0,0 levels=3 count=1000",
            "draw,level,index,value",
        ]
    );
    // levels of 1, 2, 2 entries per draw
    assert_eq!(text.lines().count() - 4, 1000 * 5);
    let first = text.lines().nth(4).unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(&fields[..3], &["0", "1", "1"]);
    let mantissa = fields[3].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
}

#[test]
fn sample_output_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = sample_csv(dir.path(), "a.csv", &["--workers", "1"]);
    let b = sample_csv(dir.path(), "b.csv", &["--workers", "4"]);
    let c = sample_csv(dir.path(), "c.csv", &["--workers", "1"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bin()
        .args([
            "sample", "--model", "jacobi", "--beta", "1", "--a", "4", "--n", "2", "--m", "2",
            "--count", "3", "--output",
        ])
        .arg(&out)
        .env("CORNERS_LAB_SEED", "123")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.lines().nth(1).unwrap() == "# seed=123");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[model]\nkind = \"wishart\"\nbeta = 1\npi = [1.0, 2.0]\npi_hat = [0.0, 0.0]\nlevels = 2\n\n[run]\ncount = 4\nseed = 3\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["sample", "--beta", "2", "--output"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("# model=wishart beta=2 pi=1,2 pihat=0,0 levels=2 count=4"));
    assert!(text.contains("# seed=3"));
}

#[test]
fn density_points_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    // n = m = 1: density of an exponential with rate π + π̂ = 1.5
    std::fs::write(&pts, "# one level\n0.5\n2.0\n").unwrap();
    let out = dir.path().join("d.csv");
    let o = bin()
        .args([
            "density", "--model", "wishart", "--beta", "2", "--pi", "1", "--pihat", "0.5",
            "--points",
        ])
        .arg(&pts)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<(usize, f64)> = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    for (line, v) in rows {
        let x = if line == 2 { 0.5 } else { 2.0 };
        assert!(
            (v - (1.5f64.ln() - 1.5 * x)).abs() < 1e-10,
            "line {line}: {v}"
        );
    }

    // non-interlacing point
    std::fs::write(&pts, "2.0;1.5,0.5\n").unwrap();
    let o = bin()
        .args([
            "density", "--model", "wishart", "--beta", "2", "--pi", "1,2", "--pihat", "0,0",
            "--points",
        ])
        .arg(&pts)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).lines().last().unwrap() == "1,-inf");

    // malformed line
    std::fs::write(&pts, "1.0\n1.0;abc\n").unwrap();
    let o = bin()
        .args([
            "density", "--model", "wishart", "--beta", "2", "--pi", "1,2", "--points",
        ])
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("points line 2"));
}

#[test]
fn exit_codes() {
    let o = run(&["limits", "--id", "gamma-rat", "--eps", "1e-1,1e-2,1e-3"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout
        .lines()
        .next()
        .unwrap()
        .contains("\"schema\":\"corners-lab limits v1\""));
    assert!(stdout.contains("trajectory 1e-1:"));

    // too coarse to reach the tolerance: a failing report, serialized to stderr
    let o = run(&["limits", "--id", "gamma-rat", "--eps", "1e0,5e-1,2e-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"test_id\":\"limit/gamma-rat\""));

    assert_eq!(run(&["limits", "--id", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "sample", "--model", "wishart", "--beta", "3", "--pi", "1", "--levels", "1", "--count",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_selected_tests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = bin()
        .args([
            "verify",
            "--suite",
            "limits",
            "--test",
            "limit/qgamma",
            "--test",
            "limit/gamma-rat",
            "--seed",
            "7",
            "--output",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("limit/gamma-rat") && lines[2].contains("limit/qgamma"));
}
