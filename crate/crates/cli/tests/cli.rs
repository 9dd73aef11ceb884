use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GAUSSIAN: &str = r#"{"kind":"gaussian","mean":0.0,"variance":1.0}"#;

fn infoest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoest"))
        .args(args)
        .env("INFOEST_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn scalar_z(n_paths: usize, checks: &str) -> String {
    format!(
        r#"{{"scenario":{{"identity":"scalar_z","prior":{GAUSSIAN},"snr":1.0,"n_steps":64}},"n_paths":{n_paths},"master_seed":7,"checks":{checks}}}"#
    )
}

fn duncan(rule: &str) -> String {
    format!(
        r#"{{"identity":"duncan","process":{{"kind":"constant_x","prior":{GAUSSIAN}}},"horizon":1.0,"n_steps":256,"mode":"algebraic","filter":{{"kind":"exact"}},"rule":"{rule}"}}"#
    )
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn list_identities_names_every_tag() {
    let o = infoest(&["list-identities"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for tag in ["scalar_z", "coupling_b", "coupling_c", "duncan", "mismatch", "feedback_d_phi", "sheet_n", "causal_anticausal"] {
        assert!(text.lines().any(|l| l.starts_with(tag)), "{tag} missing");
    }
}

#[test]
fn passing_config_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", &scalar_z(2000, r#"{"variance_target":"none"}"#));
    let out = dir.path().join("out");
    let o = infoest(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout(&o);
    assert!(summary.lines().any(|l| l.starts_with("# config: ")));
    assert!(data_lines(&summary)[0].starts_with("config,identity,parameter,mode,n,mean,se_mean,var,se_var"));
    let paths = fs::read_to_string(out.join("z.paths.csv")).unwrap();
    assert_eq!(data_lines(&paths).len(), 2001);
    let checks = fs::read_to_string(out.join("z.checks.csv")).unwrap();
    assert!(checks.contains("zero_mean") && checks.contains("closure"));
}

#[test]
fn too_few_paths_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", &scalar_z(50, "{}"));
    assert_eq!(code(&infoest(&["verify", "--config", cfg.to_str().unwrap()])), 4);
    let ok = write(dir.path(), "ok.json", &scalar_z(500, "{}"));
    assert_eq!(code(&infoest(&["verify", "--config", ok.to_str().unwrap(), "--paths", "99"])), 4);
}

#[test]
fn malformed_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.json", &scalar_z(500, r#"{"zero_means":true}"#));
    assert_eq!(code(&infoest(&["verify", "--config", typo.to_str().unwrap()])), 4);
    let bad_prior = write(
        dir.path(),
        "prior.json",
        r#"{"scenario":{"identity":"scalar_z","prior":{"kind":"gaussian","mean":0.0,"variance":-1.0},"snr":1.0,"n_steps":64},"n_paths":500,"master_seed":1}"#,
    );
    assert_eq!(code(&infoest(&["verify", "--config", bad_prior.to_str().unwrap()])), 4);
    assert_eq!(code(&infoest(&["verify", "--config", "/nonexistent/x.json"])), 4);
    assert_eq!(code(&infoest(&["verify"])), 4);
}

#[test]
fn wrong_variance_target_is_a_statistical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", &scalar_z(2000, r#"{"variance_target":3.0}"#));
    let o = infoest(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let stderr = String::from_utf8(o.stderr).unwrap();
    let record = stderr.lines().find(|l| l.starts_with('{')).expect("failure record");
    let v: serde_json::Value = serde_json::from_str(record).unwrap();
    assert_eq!(v["assertion"], "variance");
    assert_eq!(v["target"], 3.0);
    assert!(v["se"].as_f64().unwrap() > 0.0);
}

#[test]
fn closure_expectations_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let broken = format!(r#"{{"scenario":{},"n_paths":200,"master_seed":3}}"#, duncan("right"));
    let cfg = write(dir.path(), "broken.json", &broken);
    assert_eq!(code(&infoest(&["verify", "--config", cfg.to_str().unwrap()])), 0);
    let demanded = format!(r#"{{"scenario":{},"n_paths":200,"master_seed":3,"checks":{{"closure":"exact"}}}}"#, duncan("right"));
    let cfg = write(dir.path(), "demanded.json", &demanded);
    assert_eq!(code(&infoest(&["verify", "--config", cfg.to_str().unwrap()])), 3);
}

#[test]
fn header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", &scalar_z(300, "{}"));
    let first = stdout(&infoest(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "99", "--steps", "32"]));
    let json = first.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let again = write(dir.path(), "again.json", json);
    let second = stdout(&infoest(&["verify", "--config", again.to_str().unwrap()]));
    assert_eq!(data_lines(&first), data_lines(&second));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", &scalar_z(400, "{}"));
    let run = |t: &str| stdout(&infoest(&["verify", "--config", cfg.to_str().unwrap(), "--threads", t]));
    assert_eq!(run("1"), run("3"));
}

#[test]
fn directory_runs_every_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", &scalar_z(200, "{}"));
    write(dir.path(), "b.json", &format!(r#"{{"scenario":{},"n_paths":200,"master_seed":5}}"#, duncan("left")));
    write(dir.path(), "notes.txt", "ignored");
    let o = infoest(&["verify", "--config", dir.path().to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "ok a\nok b\n");
}

#[test]
fn sweep_rows_follow_the_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"scenario":{{"identity":"coupling_b","prior":{GAUSSIAN},"snr":1.0,"evaluation":"closed_form"}},"n_paths":2000,"master_seed":11,"sweep":{{"parameter":"snr","values":[0.5,1,2]}}}}"#
    );
    let cfg = write(dir.path(), "b.json", &cfg);
    let out = dir.path().join("sweep.csv");
    assert_eq!(code(&infoest(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let params: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(params, [0.5, 1.0, 2.0]);
    assert!(rows.iter().all(|r| !r[9].is_empty()), "analytic target column filled");

    let empty = write(dir.path(), "empty.json", &scalar_z(200, "{}").replace(r#""checks":{}"#, r#""sweep":{"parameter":"snr","values":[]}"#));
    assert_eq!(code(&infoest(&["sweep", "--config", empty.to_str().unwrap()])), 4);
    let plain = write(dir.path(), "plain.json", &scalar_z(200, "{}"));
    assert_eq!(code(&infoest(&["sweep", "--config", plain.to_str().unwrap()])), 4);
}

#[test]
fn cdf_rows_carry_a_band() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"scenario":{{"identity":"coupling_c","prior":{GAUSSIAN},"snr":1.0,"evaluation":"closed_form"}},"n_paths":1000,"master_seed":12}}"#
    );
    let cfg = write(dir.path(), "c.json", &cfg);
    let o = infoest(&["cdf", "--config", cfg.to_str().unwrap(), "--rows", "50"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["config", "identity", "value", "cdf", "lower", "upper"]);
    let rows: Vec<[f64; 4]> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            [r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap()]
        })
        .collect();
    assert!(!rows.is_empty() && rows.len() <= 50);
    assert!(rows.windows(2).all(|w| w[0][0] <= w[1][0] && w[0][1] <= w[1][1]));
    assert!(rows.iter().all(|r| r[2] <= r[1] && r[1] <= r[3]));
}
