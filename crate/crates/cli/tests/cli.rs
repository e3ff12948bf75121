use std::fs;
use std::process::Command;

const CONFIG: &str = "\
delta_s = 0.6
delta_r = 0.3
q_s = 0.5
q_r = 0.5
p_sd = 0.4
p_rd = 0.8
p_sr = 0.5
lambda_s = 0.1
lambda_r = 0.05
lambda_s_max = 0.3
lambda_r_max = 0.3
steps = 3
n_slots = 20000
burn_in = 2000
stride = 100
";

fn ehrelay(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ehrelay"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn region_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.conf");
    fs::write(&cfg, CONFIG).unwrap();
    let csv = dir.path().join("regions.csv");
    let out = ehrelay(&[
        "region",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("region,lambda_s,lambda_r\n"));
    let svg = fs::read_to_string(csv.with_extension("svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn sweep_is_reproducible_and_plots_markers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.conf");
    let svg = dir.path().join("sweep.svg");
    fs::write(&cfg, format!("{CONFIG}svg_out = {}\n", svg.display())).unwrap();
    let mut csvs = Vec::new();
    for (name, jobs) in [("a.csv", "1"), ("b.csv", "2")] {
        let path = dir.path().join(name);
        let out = ehrelay(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        csvs.push(fs::read(&path).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(String::from_utf8_lossy(&csvs[0]).lines().count(), 1 + 9);
    let svg = fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches("<circle").count(), 9);
}

#[test]
fn simulate_reports_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.conf");
    fs::write(&cfg, CONFIG).unwrap();
    let trace = dir.path().join("trace.csv");
    let out = ehrelay(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("conservation ok"), "{stdout}");
    let rows = fs::read_to_string(trace).unwrap();
    assert!(rows.starts_with("slot,q_s,q_r,"));
    assert_eq!(rows.lines().count(), 1 + 200);
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, CONFIG.replace("q_s = 0.5", "q_s = 1.5")).unwrap();
    let out = ehrelay(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3: q_s out of [0,1]"));
}

#[test]
fn failing_acceptance_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.conf");
    let short = CONFIG
        .replace("n_slots = 20000", "n_slots = 100")
        .replace("burn_in = 2000", "burn_in = 10")
        .replace("stride = 100", "stride = 10");
    fs::write(&cfg, short).unwrap();
    let out = ehrelay(&["accept", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[FAIL] C1"), "{stdout}");
}
