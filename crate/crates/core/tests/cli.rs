mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use treeval::volume::{save_mask, Spacing, VoxelMask};

use common::data_dir;

fn treeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeval"))
        .args(args)
        .env_remove("TREEVAL_JOBS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Phantom set under `dir` with gt/, pred/ and truth/ subdirectories.
fn phantoms(dir: &Path, count: usize, degrade: &str) {
    let o = treeval(&[
        "phantom",
        "--out",
        p(dir),
        "--depth",
        "2",
        "--count",
        &count.to_string(),
        "--name",
        "case",
        "--degrade",
        degrade,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn eval_on_identical_files_prints_all_hundreds() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 1, "identity");
    let gt = tmp.path().join("gt/case.nii.gz");
    let o = treeval(&["eval", p(&gt), p(&gt)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert_eq!(row.matches("100.000").count(), 6, "{out}");
}

#[test]
fn eval_on_erased_subtree_matches_the_branch_oracle() {
    let tmp = TempDir::new().unwrap();
    // depth 2: erasing branch 1 removes it and its two children
    phantoms(tmp.path(), 1, "erase:1");
    let json = tmp.path().join("m.json");
    let o = treeval(&[
        "eval",
        p(&tmp.path().join("pred/case.nii.gz")),
        p(&tmp.path().join("gt/case.nii.gz")),
        "--json",
        p(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(m["BD"].as_f64().unwrap(), 100.0 * 4.0 / 7.0);
    assert_eq!(m["coverage"]["b_ref"], 7);
}

#[test]
fn mismatched_dims_exit_two_and_name_the_files() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.nii");
    let b = tmp.path().join("b.nii");
    save_mask(&a, &VoxelMask::empty([4, 4, 4], Spacing::unit()).unwrap()).unwrap();
    save_mask(&b, &VoxelMask::empty([4, 4, 5], Spacing::unit()).unwrap()).unwrap();
    let o = treeval(&["eval", p(&a), p(&b)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("a.nii") && err.contains("b.nii"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(treeval(&["eval"]).status.code(), Some(1));
    assert_eq!(treeval(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(treeval(&["batch", "--out", "x"]).status.code(), Some(1));
    assert_eq!(treeval(&["leaderboard", "--weights", "1,2"]).status.code(), Some(1));
    assert_eq!(treeval(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_case_is_recorded_and_others_still_run() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 4, "identity");
    fs::write(tmp.path().join("pred/case_002.nii.gz"), b"not a volume").unwrap();
    let out = tmp.path().join("run");
    let o = treeval(&[
        "batch",
        "--pred",
        p(&tmp.path().join("pred")),
        "--gt",
        p(&tmp.path().join("gt")),
        "--out",
        p(&out),
        "--jobs",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!((m["n_cases"].as_u64(), m["n_ok"].as_u64(), m["n_error"].as_u64()), (Some(4), Some(3), Some(1)));
    let bad = m["cases"].as_array().unwrap().iter().find(|c| c["status"] == "error").unwrap();
    assert_eq!(bad["case_id"], "case_002");
    assert!(bad["message"].as_str().unwrap().contains("case_002.nii.gz"));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().any(|l| l.starts_with("case_002,error,")));
}

#[test]
fn unpaired_files_are_error_cases() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 3, "identity");
    fs::remove_file(tmp.path().join("gt/case_001.nii.gz")).unwrap();
    let out = tmp.path().join("run");
    let o = treeval(&[
        "batch",
        "--pred",
        p(&tmp.path().join("pred")),
        "--gt",
        p(&tmp.path().join("gt")),
        "--out",
        p(&out),
        "--no-cache",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["n_ok"].as_u64().unwrap() + m["n_error"].as_u64().unwrap(), 3);
    assert_eq!(m["n_error"], 1);
}

#[test]
fn empty_directory_exits_two() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir_all(tmp.path().join("pred")).unwrap();
    fs::create_dir_all(tmp.path().join("gt")).unwrap();
    let o = treeval(&[
        "batch",
        "--pred",
        p(&tmp.path().join("pred")),
        "--gt",
        p(&tmp.path().join("gt")),
        "--out",
        p(&tmp.path().join("run")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no cases found"));
}

#[test]
fn jobs_precedence_is_flag_then_config_then_environment() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 1, "identity");
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "pred = \"{}\"\ngt = \"{}\"\njobs = 3\nno_cache = true\n",
            p(&tmp.path().join("pred")),
            p(&tmp.path().join("gt"))
        ),
    )
    .unwrap();
    let jobs = |extra: &[&str], env: Option<&str>| {
        let out = tmp.path().join("run");
        let mut c = Command::new(env!("CARGO_BIN_EXE_treeval"));
        c.args(["--config", p(&cfg), "batch", "--out", p(&out)]).args(extra);
        match env {
            Some(v) => c.env("TREEVAL_JOBS", v),
            None => c.env_remove("TREEVAL_JOBS"),
        };
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        manifest(&out)["config"]["jobs"].as_u64().unwrap()
    };
    assert_eq!(jobs(&["--jobs", "5"], Some("7")), 5);
    assert_eq!(jobs(&[], Some("7")), 3);

    let bare = tmp.path().join("bare.toml");
    fs::write(&bare, "no_cache = true\n").unwrap();
    let out = tmp.path().join("run2");
    let o = Command::new(env!("CARGO_BIN_EXE_treeval"))
        .args(["--config", p(&bare), "batch", "--out", p(&out)])
        .args(["--pred", p(&tmp.path().join("pred")), "--gt", p(&tmp.path().join("gt"))])
        .env("TREEVAL_JOBS", "7")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(manifest(&out)["config"]["jobs"], 7);
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "jobz = 2\n").unwrap();
    let o = treeval(&["--config", p(&cfg), "batch", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn leaderboard_from_published_means() {
    let tmp = TempDir::new().unwrap();
    let o = treeval(&[
        "leaderboard",
        "--summary",
        p(&data_dir().join("test_team_means.csv")),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let board = fs::read_to_string(tmp.path().join("board.csv")).unwrap();
    let first = board.lines().nth(1).unwrap();
    assert!(first.starts_with("1,timi,94.528,"), "{first}");
    assert_eq!(board.lines().count(), 21);
}

#[test]
fn leaderboard_from_batch_results_and_plot_data() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 2, "dilate");
    let teams = tmp.path().join("teams");
    for (team, pred) in [("alpha", "gt"), ("beta", "pred")] {
        let o = treeval(&[
            "batch",
            "--pred",
            p(&tmp.path().join(pred)),
            "--gt",
            p(&tmp.path().join("gt")),
            "--out",
            p(&teams.join(team)),
            "--no-cache",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let plot = tmp.path().join("plot.json");
    let o = treeval(&[
        "leaderboard",
        p(&teams),
        "--out",
        p(&tmp.path().join("board")),
        "--plot-data",
        p(&plot),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let board = fs::read_to_string(tmp.path().join("board/board.csv")).unwrap();
    assert!(board.lines().nth(1).unwrap().starts_with("1,alpha,100.000,"), "{board}");
    assert!(board.lines().nth(2).unwrap().starts_with("2,beta,"));
    let plot: Value = serde_json::from_str(&fs::read_to_string(plot).unwrap()).unwrap();
    let alpha = &plot["teams"][0];
    assert_eq!(alpha["team"], "alpha");
    assert_eq!(alpha["TD"], serde_json::json!([100.0, 100.0]));
    assert_eq!(plot["teams"][1]["Precision"].as_array().unwrap().len(), 2);
}

#[test]
fn rank_stability_reports_tau_and_p() {
    let a = data_dir().join("validation_board.csv");
    let b = data_dir().join("test_board.csv");
    let same = treeval(&["rank-stability", p(&a), p(&a)]);
    assert_eq!(same.status.code(), Some(0));
    assert!(stdout(&same).contains("1.00"), "{}", stdout(&same));

    let o = treeval(&["rank-stability", p(&a), p(&b), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["discordant"], 38);
    assert!((v["tau"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    let text = stdout(&treeval(&["rank-stability", p(&a), p(&b)]));
    assert!(text.contains("0.600") && text.contains("2.17e-4"), "{text}");
}

#[test]
fn rank_stability_rejects_different_team_sets() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::write(&a, "rank,team,score\n1,x,2\n2,y,1\n").unwrap();
    fs::write(&b, "rank,team,score\n1,x,2\n2,z,1\n").unwrap();
    assert_eq!(treeval(&["rank-stability", p(&a), p(&b)]).status.code(), Some(2));
}

#[test]
fn phantom_writes_truth_sidecar_and_skeletonize_reads_the_mask() {
    let tmp = TempDir::new().unwrap();
    phantoms(tmp.path(), 1, "identity");
    let truth: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("truth/case.json")).unwrap()).unwrap();
    let branches = truth["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 7);
    assert!(branches[1]["parent"] == 0 && branches[0]["parent"].is_null());
    let json = tmp.path().join("skel.json");
    let cl = tmp.path().join("skel.tbm");
    let o = treeval(&[
        "skeletonize",
        p(&tmp.path().join("gt/case.nii.gz")),
        "--out",
        p(&cl),
        "--json",
        p(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(s["branches"].as_array().unwrap().len(), 7);
    assert!(cl.exists());
}
