use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::embeddings::{load_embeddings, write_embeddings};
use crate::active::QueryMode;
use crate::datagen::{gen_blobs, gen_drift_stream, DriftSpec};
use crate::error::{Error, Result};
use crate::eval::{run_experiment, ExperimentOutcome, MeanCi, RunReport};
use crate::types::Dataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Spec(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn dataset_for(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.dataset {
        Some(path) => load_embeddings(path),
        None => gen_blobs(&cfg.generator),
    }
}

/// One row per (learner, scenario); columns mirror the report groups.
pub fn summary_csv(report: &RunReport) -> String {
    let mut s = String::from(
        "learner,scenario,n_cells,mean_auc,ci,final_auc,final_ci,q1_mean,q1_ci,q4_mean,q4_ci,\
         effort_min,effort_max,effort_mean,effort_std,effort_q1,effort_q2,effort_q3\n",
    );
    for g in &report.groups {
        let e = &g.effort_gain;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            g.learner,
            g.scenario.as_str(),
            g.n_cells,
            g.mean_auc.mean,
            g.mean_auc.half_width,
            g.final_auc.mean,
            g.final_auc.half_width,
            g.q1_auc.mean,
            g.q1_auc.half_width,
            g.q4_auc.mean,
            g.q4_auc.half_width,
            e.min,
            e.max,
            e.mean,
            e.std,
            e.q1,
            e.q2,
            e.q3
        );
    }
    s
}

/// Writes report.json, summary.csv and one series CSV per completed cell.
pub fn write_outputs(out: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    let series_dir = out.join("series");
    fs::create_dir_all(&series_dir).map_err(|e| io_err(&series_dir, e))?;
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| Error::Io(e.to_string()))?;
    write_file(&out.join("report.json"), &(json + "\n"))?;
    write_file(&out.join("summary.csv"), &summary_csv(&outcome.report))?;
    for run in &outcome.runs {
        let r = &run.result;
        let mut s = String::from("step,uncertainty,queried,auc\n");
        for rec in &run.records {
            let auc = rec.auc.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", rec.step, rec.uncertainty, u8::from(rec.queried), auc);
        }
        let name = format!("{}_{}_{}_{}.csv", r.learner, r.scenario.as_str(), r.repeat, r.fold);
        write_file(&series_dir.join(name), &s)?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let dataset = dataset_for(cfg)?;
    let outcome = run_experiment(&cfg.experiment, &dataset)?;
    write_outputs(&cfg.out, &outcome)?;
    Ok(outcome)
}

pub fn cmd_run(cfg: &RunConfig) -> i32 {
    match run(cfg) {
        Ok(outcome) => {
            let r = &outcome.report;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} cells completed, {} failed; wrote {}",
                outcome.runs.len(),
                r.incomplete.len(),
                cfg.out.display()
            );
            if r.incomplete.is_empty() {
                EXIT_OK
            } else {
                for f in &r.incomplete {
                    eprintln!(
                        "failed: {}/{} repeat {} fold {}: {}",
                        f.learner,
                        f.scenario.as_str(),
                        f.repeat,
                        f.fold,
                        f.error
                    );
                }
                EXIT_PARTIAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn gen(cfg: &RunConfig, out: &Path) -> Result<Dataset> {
    cfg.generator.validate()?;
    let (dataset, comments) = match cfg.drift_step {
        Some(drift_step) => {
            let spec = DriftSpec {
                blobs: cfg.generator.clone(),
                drift_step,
            };
            (gen_drift_stream(&spec)?, vec![format!("drift_step = {drift_step}")])
        }
        None => (gen_blobs(&cfg.generator)?, Vec::new()),
    };
    write_embeddings(out, &dataset, &comments)?;
    Ok(dataset)
}

pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> i32 {
    match gen(cfg, out) {
        Ok(d) => {
            println!("{} instances, {} dims -> {}", d.len(), d.dim(), out.display());
            for (name, n) in d.classes.names().iter().zip(d.class_counts()) {
                println!("  {name}: {n}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn ci(m: &MeanCi) -> String {
    format!("{:.4}±{:.4}", m.mean, m.half_width)
}

fn scenario_label(s: QueryMode) -> &'static str {
    match s {
        QueryMode::NoAl => "NO_AL",
        QueryMode::Al => "AL",
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut s = String::new();
    let fmt_row = |s: &mut String, row: &[String]| {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(s, "{}", cells.join("  ").trim_end());
    };
    fmt_row(&mut s, header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    fmt_row(&mut s, &rule);
    for row in rows {
        fmt_row(&mut s, row);
    }
    s
}

/// Scenario comparison, per-model AUC and effort-gain tables.
pub fn render_tables(report: &RunReport) -> Result<String> {
    if report.groups.is_empty() {
        return Err(Error::InsufficientData("report has no completed groups".into()));
    }
    let mut out = String::new();

    out.push_str("Scenario comparison (AUC, 95% CI)\n");
    let rows: Vec<Vec<String>> = report
        .scenarios
        .iter()
        .map(|s| {
            vec![
                scenario_label(s.scenario).to_string(),
                ci(&s.mean_auc),
                ci(&s.q1_auc),
                ci(&s.q4_auc),
            ]
        })
        .collect();
    let header = ["scenario", "mean", "Q1", "Q4"].map(String::from);
    out.push_str(&table(&header, &rows));

    out.push_str("\nPer-model AUC (95% CI)\n");
    let scenarios = &report.config.scenarios;
    let mut header = vec!["model".to_string()];
    header.extend(scenarios.iter().map(|s| scenario_label(*s).to_string()));
    let rows: Vec<Vec<String>> = report
        .config
        .learners
        .iter()
        .map(|&l| {
            let mut row = vec![l.as_str().to_uppercase()];
            row.extend(scenarios.iter().map(|&s| report.group(l, s).map_or("-".into(), |g| ci(&g.mean_auc))));
            row
        })
        .collect();
    out.push_str(&table(&header, &rows));

    out.push_str("\nEffort gain (%)\n");
    let header = ["model", "scenario", "min", "max", "mean", "std", "Q1", "Q2", "Q3"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            let e = &g.effort_gain;
            let mut row = vec![g.learner.as_str().to_uppercase(), scenario_label(g.scenario).to_string()];
            row.extend([e.min, e.max, e.mean, e.std, e.q1, e.q2, e.q3].iter().map(|v| format!("{v:.2}")));
            row
        })
        .collect();
    out.push_str(&table(&header, &rows));
    Ok(out)
}

/// Step-versus-mean-AUC series for every group.
pub fn write_plot_data(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for g in &report.groups {
        let mut s = String::from("step,auc\n");
        for (i, a) in g.timeline.iter().enumerate() {
            let _ = writeln!(s, "{i},{a}");
        }
        let path = dir.join(format!("{}_{}.csv", g.learner, g.scenario.as_str()));
        write_file(&path, &s)?;
        written.push(path);
    }
    Ok(written)
}

pub fn report(path: &Path, plots: Option<&Path>) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let report: RunReport =
        serde_json::from_str(&text).map_err(|e| Error::DataIntegrity(format!("{}: {e}", path.display())))?;
    let tables = render_tables(&report)?;
    let dir = match plots {
        Some(d) => d.to_path_buf(),
        None => path.parent().unwrap_or(Path::new(".")).join("plots"),
    };
    write_plot_data(&report, &dir)?;
    Ok(tables)
}

pub fn cmd_report(path: &Path, plots: Option<&Path>) -> i32 {
    match report(path, plots) {
        Ok(tables) => {
            print!("{tables}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
