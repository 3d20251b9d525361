//! Black-box tests of the command-line binary: exit codes, artifact files,
//! determinism, and override precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedtraffic"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn fedtraffic")
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_edges(dir: &Path) {
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(
        data.join("brain.edges"),
        "1 3\n2 6\n3 4\n3 8\n4 5\n6 8\n8 9\n1 2\n2 7\n7 9\n5 7\n4 6\n5 9\n1 8\n",
    )
    .unwrap();
}

#[test]
fn no_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--help"]);
    assert_code(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    let out = run_in(dir.path(), &["--version"]);
    assert_code(&out, 0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-data", "--bogus"]);
    assert_code(&out, 1);
}

#[test]
fn gen_data_writes_the_pinned_corpus_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-data"]);
    assert_code(&out, 0);
    let counts = [845usize, 945, 1445, 1047, 1445, 645, 547, 667, 967];
    for (i, want) in counts.iter().enumerate() {
        let path = dir.path().join(format!("data/raw/node_{}.csv", i + 1));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), *want, "node {} line count", i + 1);
    }
    let first = std::fs::read(dir.path().join("data/raw/node_3.csv")).unwrap();
    let out = run_in(dir.path(), &["gen-data"]);
    assert_code(&out, 0);
    let second = std::fs::read(dir.path().join("data/raw/node_3.csv")).unwrap();
    assert_eq!(first, second, "rerun must be byte-identical");
    let out = run_in(dir.path(), &["gen-data", "--seed", "43"]);
    assert_code(&out, 0);
    let reseeded = std::fs::read(dir.path().join("data/raw/node_3.csv")).unwrap();
    assert_ne!(first, reseeded, "different seed must change the corpus");
}

#[test]
fn tiny_scale_is_floored_to_a_windowable_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-data", "--scale", "0.001"]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("data/raw/node_1.csv")).unwrap();
    assert_eq!(text.lines().count(), 12); // h + p + 10 at the default h = p = 1
}

#[test]
fn preprocess_without_raw_data_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["preprocess"]);
    assert_code(&out, 2);
}

#[test]
fn train_without_topology_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen-data", "--scale", "0.5"]), 0);
    assert_code(&run_in(dir.path(), &["preprocess"]), 0);
    let out = run_in(dir.path(), &["train", "--rounds", "1", "--hidden-size", "4"]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("brain.edges"));
}

#[test]
fn evaluate_before_train_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen-data", "--scale", "0.5"]), 0);
    assert_code(&run_in(dir.path(), &["preprocess"]), 0);
    let out = run_in(dir.path(), &["evaluate", "--h", "1", "--p", "1"]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("missing weights"));
}

#[test]
fn full_pipeline_runs_end_to_end_at_tiny_scale() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen-data", "--scale", "0.5"]), 0);
    assert_code(&run_in(dir.path(), &["preprocess"]), 0);
    write_edges(dir.path());
    let train = [
        "train", "--mode", "fed", "--rounds", "2", "--hidden-size", "4", "--batch-size", "128",
    ];
    assert_code(&run_in(dir.path(), &train), 0);
    for node in 1..=9 {
        assert!(dir.path().join(format!("out/pred_fed_h1_p1_node{node}.csv")).exists());
    }
    assert!(dir.path().join("out/weights_fed_h1_p1.csv").exists());
    assert!(dir.path().join("out/history_fed_h1_p1.csv").exists());

    let eval = ["evaluate", "--h", "1", "--p", "1", "--hidden-size", "4"];
    let out = run_in(dir.path(), &eval);
    assert_code(&out, 0);
    assert!(dir.path().join("out/eval_fed_h1_p1.csv").exists());
    assert!(dir.path().join("out/grid_fed.csv").exists());

    let out = run_in(dir.path(), &["rank-links", "--top-q", "6"]);
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("top-6 links"));
    assert!(dir.path().join("out/link_scores_1_1.csv").exists());
    assert!(dir.path().join("out/top_q.csv").exists());
    let topq = std::fs::read_to_string(dir.path().join("out/top_q.csv")).unwrap();
    assert_eq!(topq.lines().count(), 7); // header + 6 rows

    let out = run_in(dir.path(), &["report"]);
    assert_code(&out, 0);
    assert!(dir.path().join("out/report.txt").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("top utilized links"));
}

#[test]
fn evaluate_rejects_mismatched_weight_shapes() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen-data", "--scale", "0.5"]), 0);
    assert_code(&run_in(dir.path(), &["preprocess"]), 0);
    write_edges(dir.path());
    let train = ["train", "--rounds", "1", "--hidden-size", "4", "--batch-size", "128"];
    assert_code(&run_in(dir.path(), &train), 0);
    // Default hidden size (64) does not match the stored weights (4).
    let out = run_in(dir.path(), &["evaluate", "--h", "1", "--p", "1"]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("hidden"));
}

#[test]
fn non_finite_weights_fail_evaluation_with_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen-data", "--scale", "0.5"]), 0);
    assert_code(&run_in(dir.path(), &["preprocess"]), 0);
    let mut rng = fedtraffic::rng::stream_rng(0, "init", 0);
    let n = fedtraffic::neuralnet::Seq2SeqModel::init(1, 1, 4, 0.2, &mut rng).param_count();
    let mut text = String::from("# fedtraffic weights v1\n# mode=fed h=1 p=1 hidden=4 dropout=0.2\n");
    for _ in 0..n {
        text.push_str("NaN\n");
    }
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("out/weights_fed_h1_p1.csv"), text).unwrap();
    let out = run_in(dir.path(), &["evaluate", "--h", "1", "--p", "1", "--hidden-size", "4"]);
    assert_code(&out, 3);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = \"not a number\"\n").unwrap();
    let out = run_in(dir.path(), &["--config", "bad.toml", "gen-data"]);
    assert_code(&out, 1);
}

#[test]
fn out_of_range_config_value_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "dropout = 1.5\n").unwrap();
    let out = run_in(dir.path(), &["--config", "bad.toml", "gen-data"]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("dropout"));
}

#[test]
fn config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "scale = 0.001\nseed = 7\n").unwrap();
    let out = run_in(dir.path(), &["--config", "run.toml", "gen-data"]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("data/raw/node_1.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn output_dir_env_var_applies_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("FEDTRAFFIC_OUTPUT_DIR", "env_out")
        .args(["report"])
        .output()
        .unwrap();
    assert_code(&out, 0);
    assert!(dir.path().join("env_out/report.txt").exists());

    let out = bin()
        .current_dir(dir.path())
        .env("FEDTRAFFIC_OUTPUT_DIR", "env_out2")
        .args(["report", "--output-dir", "flag_out"])
        .output()
        .unwrap();
    assert_code(&out, 0);
    assert!(dir.path().join("flag_out/report.txt").exists());
    assert!(!dir.path().join("env_out2").exists());
}
