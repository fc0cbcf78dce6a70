use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GAMMA: &str = r#"
kind = "gamma-sweep"
seed = 3
eps = [0.04, 0.02]
nodes = [512]

[potential]
family = { name = "quartic" }
domain = { lower = [0.0], upper = [1.0] }
wells = [{ kind = "constant", value = [1.0] }]

[gamma]
interface = 0.5
dump_fields = true

[gamma.minimizer]
max_iters = 100
"#;

fn cahnwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cahnwell")).args(args).output().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gamma_run_writes_stamped_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gamma.toml", GAMMA);
    let out = dir.path().join("run");
    let res = cahnwell(&["gamma", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("gamma.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# version="));
    assert!(lines[1].starts_with("# config_hash="));
    assert_eq!(lines[2], "# seed=3");
    assert!(lines[3].starts_with("eps,nodes,target_interface,"));
    assert_eq!(lines.len(), 6);
    assert!(out.join("timing.csv").exists());
    assert!(out.join("fields/u_eps0.02.bin").exists());
    assert!(out.join("fields/u_eps0.02.hdr").exists());
    assert!(out.join("profile_eps0.04.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gamma.toml", GAMMA);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(cahnwell(&["gamma", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(cahnwell(&["gamma", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for name in ["gamma.csv", "profile_eps0.04.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn verb_must_match_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gamma.toml", GAMMA);
    let res = cahnwell(&["annular", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_line(&res)["error"], "usage");
}

#[test]
fn bad_config_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &GAMMA.replace("[0.04, 0.02]", "[0.02, 0.04]"));
    let res = cahnwell(&["gamma", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let err = error_line(&res);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("decreasing"));
    let missing = cahnwell(&["gamma", "/nonexistent/spec.toml"]);
    assert!(!missing.status.success());
    assert_eq!(error_line(&missing)["error"], "config");
}

#[test]
fn numerical_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // the transition tube at x = 0.02 does not fit in the domain
    let cfg = write(dir.path(), "edge.toml", &GAMMA.replace("interface = 0.5", "interface = 0.02"));
    let res = cahnwell(&["gamma", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = error_line(&res);
    assert_eq!(err["error"], "parameter");
    assert!(err["message"].as_str().unwrap().contains("eps=0.04"));
}

#[test]
fn audit_reads_potential_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "pot.toml",
        "family = { name = \"quartic\" }\ndomain = { lower = [0.0], upper = [1.0] }\nwells = [{ kind = \"constant\", value = [1.0, 0.0] }]\n",
    );
    let cfg = write(
        dir.path(),
        "audit.toml",
        "kind = \"audit\"\npotential_file = \"pot.toml\"\n[audit.spec]\nx_samples = 4\nu_samples = 32\nt_samples = 16\npair_budget = 16\n",
    );
    let out = dir.path().join("audit");
    let res = cahnwell(&["audit", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("audit.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(4).collect();
    for h in ["H2", "H3", "H4", "H5", "H7", "H8", "G1", "G2", "G3", "G4"] {
        assert!(rows.iter().any(|r| r.starts_with(&format!("potential,{h},true,"))), "{h}: {csv}");
    }
}
