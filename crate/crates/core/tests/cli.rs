use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use streamal::cli::{load_embeddings, EXIT_CONFIG, EXIT_DATA, EXIT_OK};
use streamal::eval::RunReport;

fn streamal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL: &str = "\
# small experiment
generator.n_per_class = 30, 20, 12
generator.dims = 16
k_folds = 3
repeats = 2
eval_every = 4
";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gen_writes_default_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("emb.csv");
    let out = streamal(&["gen", "--out", file.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 511);
    assert!(text.lines().next().unwrap().ends_with(",f511"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("class0: "), "{stdout}");
    let data = load_embeddings(&file).unwrap();
    assert_eq!((data.len(), data.dim()), (510, 512));
}

#[test]
fn gen_round_trips_and_drift_adds_only_a_comment() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    let drift = dir.path().join("drift.csv");
    let set = ["--set", "generator.dims=8"];
    assert_eq!(code(&streamal(&["gen", "--out", plain.to_str().unwrap(), set[0], set[1]])), EXIT_OK);
    assert_eq!(
        code(&streamal(&["gen", "--out", drift.to_str().unwrap(), set[0], set[1], "--set", "generator.drift_step=255"])),
        EXIT_OK
    );
    let p = fs::read_to_string(&plain).unwrap();
    let d = fs::read_to_string(&drift).unwrap();
    assert!(p.lines().next().unwrap().ends_with(",f7"));
    let rows = |t: &str| t.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows(&p), rows(&d));
    assert_eq!(d.lines().next().unwrap(), "# drift_step = 255");

    let spec = streamal::datagen::BlobSpec {
        dims: 8,
        ..Default::default()
    };
    let generated = streamal::datagen::gen_blobs(&spec).unwrap();
    let loaded = load_embeddings(&plain).unwrap();
    for (a, b) in generated.instances.iter().zip(&loaded.instances) {
        assert_eq!(a.features, b.features);
        assert_eq!(
            generated.classes.name(a.label.unwrap()),
            loaded.classes.name(b.label.unwrap())
        );
    }
}

#[test]
fn gen_to_unwritable_path_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("emb.csv");
    assert_eq!(code(&streamal(&["gen", "--out", target.to_str().unwrap()])), EXIT_DATA);
}

#[test]
fn unknown_learner_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "learners = xgb\n");
    let out = streamal(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CONFIG);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("slgr, sknn, sgt, ht, hat"), "{err}");
    assert_eq!(code(&streamal(&["run", "--bogus-flag"])), EXIT_CONFIG);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dataset = nowhere.csv\n");
    assert_eq!(code(&streamal(&["run", "--config", &cfg])), EXIT_DATA);
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "learners = sknn\nscenarios = no_al, al\nseed = 5\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = streamal(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&streamal(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"])), EXIT_OK);

    let summary = fs::read(a.join("summary.csv")).unwrap();
    assert_eq!(summary, fs::read(b.join("summary.csv")).unwrap());
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    let text = String::from_utf8(summary).unwrap();
    assert_eq!(text.lines().count(), 3);

    let series: Vec<_> = fs::read_dir(a.join("series")).unwrap().collect();
    assert_eq!(series.len(), 2 * 3 * 2);
    let one = fs::read_to_string(a.join("series/sknn_al_1_2.csv")).unwrap();
    assert_eq!(one.lines().next().unwrap(), "step,uncertainty,queried,auc");

    // summary values agree with the report
    let report: RunReport = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    for (line, g) in text.lines().skip(1).zip(&report.groups) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], g.learner.as_str());
        let v = |i: usize| cols[i].parse::<f64>().unwrap();
        assert!((v(3) - g.mean_auc.mean).abs() <= 1e-9);
        assert!((v(4) - g.mean_auc.half_width).abs() <= 1e-9);
        assert!((v(7) - g.q1_auc.mean).abs() <= 1e-9);
        assert!((v(9) - g.q4_auc.mean).abs() <= 1e-9);
        assert!((v(13) - g.effort_gain.mean).abs() <= 1e-9);
    }

    let other = dir.path().join("c");
    streamal(&["run", "--config", &cfg, "--out", other.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(fs::read(other.join("summary.csv")).unwrap(), text.as_bytes());
}

#[test]
fn run_reads_an_embeddings_file() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.csv");
    let mut csv = String::from("id,label,f0,f1\n");
    for i in 0..45 {
        let (label, x) = match i % 3 {
            0 => ("good", 0.0),
            1 => ("double_print", 5.0),
            _ => ("interrupted_print", 10.0),
        };
        csv.push_str(&format!("img{i},{label},{},{}\n", x + (i as f64 * 0.37).sin(), (i as f64).cos()));
    }
    fs::write(&emb, csv).unwrap();
    let cfg = write_config(dir.path(), "dataset = emb.csv\nlearners = slgr, ht\n");
    let out_dir = dir.path().join("out");
    let out = streamal(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let report: RunReport = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.dataset.classes, vec!["good", "double_print", "interrupted_print"]);
    assert_eq!(report.groups.len(), 4);
}

#[test]
fn report_renders_tables_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out_dir = dir.path().join("out");
    assert_eq!(code(&streamal(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])), EXIT_OK);
    let out = streamal(&["report", out_dir.join("report.json").to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK);
    let text = String::from_utf8(out.stdout).unwrap();
    let per_model: Vec<&str> = text
        .split("Per-model AUC")
        .nth(1)
        .unwrap()
        .lines()
        .skip(3)
        .take_while(|l| !l.is_empty())
        .collect();
    assert_eq!(per_model.len(), 5);
    for row in per_model {
        assert_eq!(row.split_whitespace().count(), 3, "{row}");
    }
    assert_eq!(fs::read_dir(out_dir.join("plots")).unwrap().count(), 10);
}

#[test]
fn no_al_report_shows_zero_effort() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenarios = no_al\nlearners = slgr\n");
    let out_dir = dir.path().join("out");
    assert_eq!(code(&streamal(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])), EXIT_OK);
    let out = streamal(&["report", out_dir.join("report.json").to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let effort = text.split("Effort gain").nth(1).unwrap();
    let row = effort.lines().nth(3).unwrap();
    assert!(row.starts_with("SLGR") && row.split_whitespace().skip(2).all(|v| v == "0.00"), "{row}");
}

#[test]
fn malformed_or_empty_reports_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&streamal(&["report", bad.to_str().unwrap()])), EXIT_DATA);
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&streamal(&["report", empty.to_str().unwrap()])), EXIT_DATA);
    assert_eq!(code(&streamal(&["report", dir.path().join("none.json").to_str().unwrap()])), EXIT_DATA);
}
