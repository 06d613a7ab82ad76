use std::fs;
use std::process::{Command, Output};

fn dynmand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynmand")).args(args).env_remove("DYNMAND_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn capacity_of_classical_family_is_one() {
    let o = dynmand(&["capacity", "--family", "x^2+l", "--c", "l"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!((v["gamma_est"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn prep_lists_zero_and_minus_one() {
    let o = dynmand(&["prep", "--family", "x^2+l", "--c", "l", "--max-n", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,k,re,im,residual"));
    let reals: Vec<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    assert!(reals.contains(&"0") && reals.contains(&"-1"), "{text}");
}

#[test]
fn height_reports_every_place() {
    let o = dynmand(&["height", "--family", "x^2+l", "--lambda", "1/2", "--x", "1/2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&o).is_object());
}

#[test]
fn verify_theorem_reports_verdict() {
    let o = dynmand(&["verify-theorem", "--family", "x^2+l", "--a", "l+1", "--b", "l+4", "--max-n", "3"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["identity"], false);
    assert!(v["verdict"].is_string());
}

#[test]
fn failed_hypothesis_exits_two() {
    let o = dynmand(&["verify-theorem", "--family", "x^2+l", "--a", "l", "--b", "2*l", "--max-n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["verdict"], "hypothesis_failed");
}

#[test]
fn parse_errors_carry_a_position() {
    let o = dynmand(&["height", "--family", "x^2+l", "--lambda", "1/2", "--x", "3+"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["error"]["kind"], "precondition");
    assert_eq!(v["error"]["position"], 2);
}

#[test]
fn render_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for t in ["1", "8"] {
        let path = dir.path().join(format!("grid{t}.pgm"));
        let p = path.to_str().unwrap();
        let o = dynmand(&[
            "render", "--family", "x^2+l", "--c", "l", "--nx", "40", "--ny", "30", "--format", "pgm", "--output", p,
            "--threads", t,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let side = fs::read(dir.path().join(format!("grid{t}.pgm.json"))).unwrap();
        outputs.push((fs::read(&path).unwrap(), side));
    }
    assert!(outputs[0].0.starts_with(b"P5"));
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_file_supplies_options_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"family": "x^2+l", "c": "l", "max_n": 1, "format": "csv"}"#).unwrap();
    let o = dynmand(&["prep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = dynmand(&["prep", "--config", cfg.to_str().unwrap(), "--max-n", "2"]);
    assert_eq!(stdout(&o).lines().count(), 4);

    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = dynmand(&["prep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threads_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_dynmand"))
            .args(["render", "--family", "x^2+l", "--c", "l", "--nx", "16", "--ny", "12", "--format", "csv"])
            .env("DYNMAND_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("3"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
