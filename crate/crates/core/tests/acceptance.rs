//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamal::active::{run_stream, Evaluator, OracleSim, QueryMode, QueryPolicy};
use streamal::cli::{cmd_run, RunConfig, EXIT_OK};
use streamal::datagen::{gen_blobs, gen_drift_stream, BlobSpec, DriftSpec};
use streamal::eval::{auc_binary, run_experiment, ExperimentConfig, ExperimentOutcome, TestSetScorer};
use streamal::learners::{build, IncrementalClassifier, LearnerKind, LearnerParams, Slgr, SlgrConfig};
use streamal::trees::adwin::Adwin;
use streamal::trees::{hoeffding_bound, HoeffdingTree, HtConfig};
use streamal::{argmax_class, Dataset, Instance};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn pair_count_auc(scores: &[f64], pos: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (si, &pi) in scores.iter().zip(pos) {
        for (sj, &pj) in scores.iter().zip(pos) {
            if pi && !pj {
                den += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn auc_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 200 {
        let n = rng.random_range(2..=50);
        // Coarse grid so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..12u8)) / 11.0).collect();
        let pos: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if !pos.iter().any(|&p| p) || pos.iter().all(|&p| p) {
            continue;
        }
        let fast = auc_binary(&scores, &pos).unwrap();
        worst = worst.max((fast - pair_count_auc(&scores, &pos)).abs());
        cases += 1;
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("200 cases, max |diff| = {worst:.1e}, {elapsed:.2?}"),
    )
}

fn gradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.random_range(2..=5);
        let d = rng.random_range(1..=8);
        let mut weights: Vec<Vec<f64>> = (0..c).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut bias: Vec<f64> = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y = rng.random_range(0..c);
        let cfg = SlgrConfig {
            eta: 0.01,
            lambda: rng.random_range(0.0..0.1),
        };
        let model = Slgr::from_parts(weights.clone(), bias.clone(), cfg).unwrap();
        let (gw, gb) = model.gradient(&x, y).unwrap();
        let mut analytic = gw;
        analytic.extend(gb);

        let mut numeric = Vec::with_capacity(analytic.len());
        let loss_at = |w: &Vec<Vec<f64>>, b: &Vec<f64>| Slgr::from_parts(w.clone(), b.clone(), cfg).unwrap().loss(&x, y).unwrap();
        for k in 0..c {
            for j in 0..d {
                let orig = weights[k][j];
                weights[k][j] = orig + h;
                let up = loss_at(&weights, &bias);
                weights[k][j] = orig - h;
                let down = loss_at(&weights, &bias);
                weights[k][j] = orig;
                numeric.push((up - down) / (2.0 * h));
            }
        }
        for k in 0..c {
            let orig = bias[k];
            bias[k] = orig + h;
            let up = loss_at(&weights, &bias);
            bias[k] = orig - h;
            let down = loss_at(&weights, &bias);
            bias[k] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12);
        worst = worst.max(rel);
    }
    verdict(worst < 1e-5, format!("100 cases, max relative error {worst:.2e}"))
}

fn hoeffding_spots() -> Verdict {
    let exact = hoeffding_bound(1.0, (-1.0f64).exp(), 2).unwrap();
    let r = 3f64.log2();
    let got = hoeffding_bound(r, 1e-7, 200).unwrap();
    // Independent evaluation: R * sqrt(ln(1e7) / 400), ln(1e7) = 7 ln 10.
    let oracle = 3f64.ln() / 2f64.ln() * (7.0 * 10f64.ln() / 400.0).sqrt();
    let halving = [1u64, 7, 50, 200, 12345]
        .iter()
        .all(|&n| hoeffding_bound(r, 1e-7, 4 * n).unwrap() == hoeffding_bound(r, 1e-7, n).unwrap() / 2.0);
    verdict(
        exact == 0.5 && (got - oracle).abs() <= 1e-4 && (got - 0.3182).abs() <= 1e-4 && halving,
        format!("eps(1,1/e,2) = {exact}, eps(log2 3,1e-7,200) = {got:.6} (oracle {oracle:.6}), halving {halving}"),
    )
}

fn adwin_detection() -> Verdict {
    let start = Instant::now();
    let mut constant = Adwin::default();
    let false_alarms = (0..5000).filter(|_| constant.update(0.5).unwrap()).count();
    let mut detected = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Adwin::default();
        for _ in 0..500 {
            a.update(f64::from(u8::from(rng.random_bool(0.2)))).unwrap();
        }
        let hit = (0..100).any(|_| a.update(f64::from(u8::from(rng.random_bool(0.8)))).unwrap());
        if hit {
            detected += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        false_alarms == 0 && detected >= 95 && elapsed < Duration::from_secs(30),
        format!("{false_alarms} false alarms on 5000 constants, detected {detected}/100 within 100 steps, {elapsed:.2?}"),
    )
}

fn experiment(learners: &[LearnerKind], scenarios: &[QueryMode], data: &Dataset) -> (ExperimentOutcome, Duration) {
    let cfg = ExperimentConfig {
        learners: learners.to_vec(),
        scenarios: scenarios.to_vec(),
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let out = run_experiment(&cfg, data).unwrap();
    (out, start.elapsed())
}

fn separable_benchmark(out: &ExperimentOutcome, per_learner: &[(LearnerKind, Duration)]) -> Verdict {
    let mut pass = out.report.incomplete.is_empty();
    let mut parts = Vec::new();
    for &(kind, took) in per_learner {
        let g = out.report.group(kind, QueryMode::NoAl).unwrap();
        pass &= g.final_auc.mean >= 0.95 && took < Duration::from_secs(300) && g.n_cells == 100;
        parts.push(format!("{kind} final AUC {:.4} ({} cells, {took:.1?})", g.final_auc.mean, g.n_cells));
    }
    verdict(pass, parts.join("; "))
}

fn quartile_improvement(out: &ExperimentOutcome) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [LearnerKind::Sknn, LearnerKind::Slgr] {
        for scenario in [QueryMode::NoAl, QueryMode::Al] {
            let g = out.report.group(kind, scenario).unwrap();
            pass &= g.q4_auc.mean >= g.q1_auc.mean;
            parts.push(format!("{kind}/{} Q1 {:.6} Q4 {:.6}", scenario.as_str(), g.q1_auc.mean, g.q4_auc.mean));
        }
    }
    verdict(pass, parts.join("; "))
}

fn effort_gain_under_al() -> Verdict {
    let data = gen_blobs(&BlobSpec::default()).unwrap();
    let (out, _) = experiment(&LearnerKind::ALL, &[QueryMode::NoAl, QueryMode::Al], &data);
    let threshold = out.report.config.threshold;
    let mut pass = out.report.incomplete.is_empty() && threshold == 0.55;
    let mut parts = Vec::new();
    for kind in LearnerKind::ALL {
        let g = out.report.group(kind, QueryMode::Al).unwrap();
        pass &= g.effort_gain.mean >= 1.0;
        parts.push(format!("{kind} {:.2}%", g.effort_gain.mean));
    }
    let mut checked = 0usize;
    for run in &out.runs {
        for rec in &run.records {
            let ok = match run.result.scenario {
                QueryMode::NoAl => rec.queried,
                QueryMode::Al => rec.queried == (rec.uncertainty > threshold),
            };
            pass &= ok;
            checked += 1;
        }
    }
    verdict(pass, format!("mean effort gain {}; {checked} records consistent", parts.join(", ")))
}

fn drift_property() -> Verdict {
    let data = gen_drift_stream(&DriftSpec::benchmark(0)).unwrap();
    let run = |learner: &mut dyn IncrementalClassifier| {
        let n = data.len();
        let mut hits = 0;
        for (i, inst) in data.instances.iter().enumerate() {
            let y = inst.label.unwrap();
            if i >= n - n / 4 && argmax_class(&learner.predict(&inst.features).unwrap()) == y {
                hits += 1;
            }
            learner.learn(&inst.features, y).unwrap();
        }
        hits as f64 / (n / 4) as f64
    };
    let ht = run(&mut HoeffdingTree::new(3, 8, HtConfig::default()));
    let hat = run(&mut HoeffdingTree::adaptive_default(3, 8));
    verdict(hat - ht >= 0.05, format!("last-quarter accuracy HAT {hat:.3} vs HT {ht:.3}"))
}

fn al_no_al_equivalence() -> Verdict {
    let data = gen_blobs(&BlobSpec {
        dims: 16,
        ..BlobSpec::default()
    })
    .unwrap();
    let (train, rest) = data.instances.split_at(100);
    let (test, stream) = rest.split_at(100);
    let oracle = OracleSim::from_instances(stream);
    let unlabeled: Vec<Instance> = stream.iter().map(|i| Instance::new(i.id.clone(), i.features.clone(), None)).collect();
    let scorer = TestSetScorer::new(test).unwrap();
    let mut pass = true;
    let mut steps = 0;
    for kind in LearnerKind::ALL {
        let go = |policy: QueryPolicy| {
            let mut learner = build(kind, 3, 16, &LearnerParams::default()).unwrap();
            for i in train {
                learner.learn(&i.features, i.label.unwrap()).unwrap();
            }
            let records = run_stream(learner.as_mut(), &unlabeled, &oracle, &policy, &scorer as &dyn Evaluator, 1).unwrap();
            (records, learner.n_learned())
        };
        let (al, al_updates) = go(QueryPolicy::al(-1.0));
        let (no_al, no_al_updates) = go(QueryPolicy::no_al());
        pass &= al_updates == no_al_updates && al.len() == no_al.len();
        for (a, b) in al.iter().zip(&no_al) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            pass &= a.queried == b.queried
                && bits(a.prediction.probs()) == bits(b.prediction.probs())
                && a.test_auc_after.map(f64::to_bits) == b.test_auc_after.map(f64::to_bits);
            steps += 1;
        }
    }
    verdict(pass, format!("{steps} steps across 5 learners compared bit-for-bit"))
}

fn cmd_run_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::parse("learners = sknn, hat\nrepeats = 3\nseed = 42\n").unwrap();
    let mut outputs = Vec::new();
    for (name, jobs) in [("a", 1), ("b", 0)] {
        cfg.out = dir.path().join(name);
        cfg.experiment.jobs = jobs;
        let code = cmd_run(&cfg);
        outputs.push((code, std::fs::read(cfg.out.join("summary.csv")).unwrap_or_default()));
    }
    let same = outputs[0].1 == outputs[1].1 && !outputs[0].1.is_empty();
    verdict(
        same && outputs.iter().all(|(c, _)| *c == EXIT_OK),
        format!("summary.csv {} bytes, identical: {same}", outputs[0].1.len()),
    )
}

fn main() {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut report = |name, v: Verdict| {
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((name, v));
    };

    report("auc-oracle-equivalence", auc_oracle());
    report("slgr-gradient-check", gradient_check());
    report("hoeffding-bound", hoeffding_spots());
    report("adwin-detection", adwin_detection());

    let separable = gen_blobs(&BlobSpec::separable()).unwrap();
    let (sknn, sknn_time) = experiment(&[LearnerKind::Sknn], &[QueryMode::NoAl, QueryMode::Al], &separable);
    let (slgr, slgr_time) = experiment(&[LearnerKind::Slgr], &[QueryMode::NoAl, QueryMode::Al], &separable);
    let mut both = sknn;
    both.report.groups.extend(slgr.report.groups);
    both.report.incomplete.extend(slgr.report.incomplete);
    report(
        "separable-benchmark",
        separable_benchmark(&both, &[(LearnerKind::Sknn, sknn_time), (LearnerKind::Slgr, slgr_time)]),
    );
    report("quartile-improvement", quartile_improvement(&both));
    report("effort-gain-under-al", effort_gain_under_al());
    report("drift-hat-vs-ht", drift_property());
    report("al-no-al-equivalence", al_no_al_equivalence());
    report("cmd-run-determinism", cmd_run_determinism());

    let failed = results.iter().filter(|(_, v)| !v.pass).count();
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
