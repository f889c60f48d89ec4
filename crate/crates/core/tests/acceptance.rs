//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs under `cargo test`; select it alone with
//! `cargo test -p linkselect --test acceptance`.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use linkselect::cv::make_stratified_partitions;
use linkselect::glm::{FitError, SeparationEvidence};
use linkselect::metrics::{rank_sum, UnavailableReason};
use linkselect::report::{assemble_table, evaluate_grid, to_json, EvaluationDocument, RunManifest};
use linkselect::selection::{discrepancies, select_all, ExpectedConclusion};
use linkselect::{
    auc, evaluate, fit_irls, make_partitions, select_best, CovariateRole, CvScheme, Dataset, EvalOptions,
    EvaluationTable, FitConfig, IngestConfig, LinkSpec, Metric, MetricValue, SyntheticModel,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{check_partitions, direct_mle, pairwise_auc};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn link_math() -> Check {
    let mut worst = 0.0f64;
    for link in LinkSpec::ALL {
        let hi = if link == LinkSpec::CLogLog { 2.0 } else { 5.0 };
        for i in 0..=1000 {
            let x = -5.0 + (hi + 5.0) * i as f64 / 1000.0;
            let p = link.cdf(x).map_err(|e| e.to_string())?;
            let back = link.quantile(p).map_err(|e| format!("{link} at x={x}: {e}"))?;
            let err = (back - x).abs();
            worst = worst.max(err);
            ensure(err <= 1e-8, || format!("{link}: round trip at x={x} off by {err:e}"))?;
        }
    }
    let spots = [
        ("cauchit cdf(1)", LinkSpec::Cauchit.cdf(1.0).unwrap(), 0.75),
        ("cloglog cdf(0)", LinkSpec::CLogLog.cdf(0.0).unwrap(), 1.0 - (-1.0f64).exp()),
        ("logit quantile(0.75)", LinkSpec::Logit.quantile(0.75).unwrap(), 3.0f64.ln()),
    ];
    for (what, got, want) in spots {
        ensure((got - want).abs() <= 1e-12, || format!("{what} = {got}, want {want}"))?;
    }
    Ok(format!("worst round-trip error {worst:.1e}"))
}

fn synthetic(seed: u64, link: LinkSpec) -> Dataset {
    SyntheticModel::new(50, vec![0.2, 0.9, -0.7], link, seed).generate().expect("synthetic data")
}

fn irls_correctness() -> Check {
    let config = FitConfig::default();
    let mut compared = 0;
    let mut worst_beta = 0.0f64;
    for seed in 1..=20u64 {
        let data = synthetic(seed, LinkSpec::ALL[seed as usize % 4]);
        for link in LinkSpec::ALL {
            let fit = fit_irls(&data, link, &config).map_err(|e| format!("seed {seed} {link}: {e}"))?;
            let oracle = direct_mle(&data, link);
            ensure(fit.log_likelihood >= oracle.log_likelihood - 1e-6, || {
                format!(
                    "seed {seed} {link}: IRLS log-likelihood {} below oracle {}",
                    fit.log_likelihood, oracle.log_likelihood
                )
            })?;
            if oracle.converged {
                compared += 1;
                for (a, b) in fit.coefficients.iter().zip(&oracle.coefficients) {
                    worst_beta = worst_beta.max((a - b).abs());
                }
                ensure(worst_beta <= 1e-4, || format!("seed {seed} {link}: coefficients differ by {worst_beta:e}"))?;
            }
        }
    }

    let y = vec![0, 1, 1, 0, 1, 1, 1, 0, 1, 1];
    let ones = DMatrix::from_element(10, 1, 1.0);
    let intercept_only = Dataset::new(y, ones, vec![], vec![]).map_err(|e| e.to_string())?;
    for link in LinkSpec::ALL {
        let fit = fit_irls(&intercept_only, link, &config).map_err(|e| e.to_string())?;
        let want = link.quantile(0.7).unwrap();
        ensure((fit.coefficients[0] - want).abs() <= 1e-8, || {
            format!("{link}: intercept {} vs quantile(0.7) {want}", fit.coefficients[0])
        })?;
    }

    let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
    let separated = Dataset::from_covariates(vec![0, 0, 1, 1], &x, vec!["x".into()], vec![CovariateRole::Strength])
        .map_err(|e| e.to_string())?;
    for link in LinkSpec::ALL {
        match fit_irls(&separated, link, &config) {
            Err(FitError::Separation { evidence, .. }) => {
                let _: SeparationEvidence = evidence;
            }
            other => return Err(format!("{link}: separated data gave {other:?}")),
        }
    }
    Ok(format!("{compared}/80 oracle-converged fits compared, worst |Δβ| {worst_beta:.1e}"))
}

fn auc_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut with_ties = 0;
    for case in 0..200 {
        let m = rng.random_range(2..=100usize);
        let levels = if case % 2 == 0 { 5 } else { 1_000_000 };
        let mut labels: Vec<u8> = (0..m).map(|_| rng.random_range(0..=1u8)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..m).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            with_ties += 1;
        }
        let got = auc(&labels, &scores).map_err(|e| e.to_string())?;
        let want = pairwise_auc(&labels, &scores);
        ensure(got == MetricValue::Value(want), || format!("case {case}: rank-sum {got:?} vs pairwise {want}"))?;
    }
    let labels = [0, 0, 1, 1, 1];
    let perfect = auc(&labels, &[0.1, 0.2, 0.3, 0.8, 0.9]).unwrap();
    ensure(perfect == MetricValue::Value(1.0), || format!("perfect ranking gave {perfect:?}"))?;
    let flat = auc(&labels, &[0.4; 5]).unwrap();
    ensure(flat == MetricValue::Value(0.5), || format!("all ties gave {flat:?}"))?;
    Ok(format!("200 instances bit-identical, {with_ties} with ties"))
}

fn manifest_run(data: &Dataset, input: &str, schemes: &[CvScheme], options: &EvalOptions) -> String {
    let links = LinkSpec::ALL.to_vec();
    let cells = evaluate_grid(data, &links, schemes, options);
    let table = assemble_table(&links, schemes, &cells);
    let mut ingest = IngestConfig::new("y", data.covariate_names().to_vec());
    for (name, role) in data.covariate_names().iter().zip(data.covariate_roles()) {
        ingest.role_map.insert(name.clone(), *role);
    }
    let manifest = RunManifest {
        input: input.into(),
        ingest,
        links: links.clone(),
        schemes: schemes.to_vec(),
        options: options.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    to_json(&EvaluationDocument::new(Some(manifest), table, cells)).expect("serializable")
}

fn partition_suite() -> Check {
    for seed in 0..100u64 {
        let n = 20 + (seed as usize * 7) % 60;
        for scheme in [CvScheme::KFold { k: 5 }, CvScheme::KFold { k: 10 }, CvScheme::Loocv] {
            let parts = make_partitions(scheme, n, seed).map_err(|e| e.to_string())?;
            let folds = match scheme {
                CvScheme::KFold { k } => k,
                _ => n,
            };
            ensure(parts.len() == folds, || format!("{scheme:?} n={n}: {} folds", parts.len()))?;
            check_partitions(&parts, n, true).map_err(|e| format!("{} seed {seed} n={n}: {e}", scheme.name()))?;
        }
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let strat = make_stratified_partitions(CvScheme::KFold { k: 5 }, &labels, seed).map_err(|e| e.to_string())?;
        check_partitions(&strat, 40, true).map_err(|e| format!("stratified seed {seed}: {e}"))?;
    }

    let data = SyntheticModel::new(30, vec![0.1, 1.2], LinkSpec::Logit, 5).generate().map_err(|e| e.to_string())?;
    let options = EvalOptions::default();
    for link in LinkSpec::ALL {
        let loo = evaluate(&data, link, CvScheme::Loocv, &options).map_err(|e| e.to_string())?;
        let kn = evaluate(&data, link, CvScheme::KFold { k: 30 }, &options).map_err(|e| e.to_string())?;
        ensure(loo.metrics.e1 == kn.metrics.e1, || {
            format!("{link}: LOOCV E1 {:?} vs k=n E1 {:?}", loo.metrics.e1, kn.metrics.e1)
        })?;
    }

    let schemes = [CvScheme::Loocv, CvScheme::lpocv75(20), CvScheme::KFold { k: 5 }];
    let first = manifest_run(&data, "synthetic", &schemes, &options);
    let second = manifest_run(&data, "synthetic", &schemes, &options);
    ensure(first == second, || "identical manifests produced different bytes".into())?;
    Ok("300 partition sweeps valid, k=n matches LOOCV, outputs byte-identical".into())
}

fn published_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/published")
}

fn load_table(name: &str) -> Result<(EvaluationTable, Vec<ExpectedConclusion>), String> {
    let read = |file: String| std::fs::read_to_string(published_dir().join(&file)).map_err(|e| format!("{file}: {e}"));
    let doc: EvaluationDocument = serde_json::from_str(&read(format!("{name}.json"))?).map_err(|e| e.to_string())?;
    let expected = serde_json::from_str(&read(format!("{name}.expected.json"))?).map_err(|e| e.to_string())?;
    Ok((doc.table, expected))
}

fn published_selection() -> Check {
    let names = |links: &[LinkSpec]| links.iter().map(|l| l.name()).collect::<Vec<_>>().join(",");
    let (t2017, _) = load_table("table1_2017")?;
    let sel = select_best(&t2017, Metric::E1).map_err(|e| e.to_string())?;
    ensure(names(&sel.best) == "logit" && names(&sel.runner_up) == "probit", || {
        format!("2017 E1: best {} runner-up {}", names(&sel.best), names(&sel.runner_up))
    })?;

    let (t2016, expected) = load_table("table2_2016")?;
    let sel = select_best(&t2016, Metric::E1).map_err(|e| e.to_string())?;
    ensure(names(&sel.best) == "cauchit" && names(&sel.runner_up) == "cloglog", || {
        format!("2016 E1: best {} runner-up {}", names(&sel.best), names(&sel.runner_up))
    })?;

    let report = select_all(&t2016).map_err(|e| e.to_string())?;
    let found: Vec<Metric> = discrepancies(&report, &expected).iter().map(|d| d.metric).collect();
    ensure(found == vec![Metric::E3, Metric::E4], || format!("2016 discrepancies {found:?}, want [E3, E4]"))?;
    Ok("2017-E1 and 2016-E1 reproduced; 2016 E3/E4 reported as discrepancies".into())
}

fn smoke_reproduction() -> Check {
    let data = SyntheticModel::new(120, vec![0.2, 1.0, -0.8, 0.5, 0.0, -0.3], LinkSpec::Logit, 2024)
        .generate()
        .map_err(|e| e.to_string())?;
    let schemes = CvScheme::standard(200);
    let options = EvalOptions { seed: 99, ..EvalOptions::default() };
    let first = manifest_run(&data, "synthetic-120", &schemes, &options);

    let links = LinkSpec::ALL.to_vec();
    let cells = evaluate_grid(&data, &links, &schemes, &options);
    let table = assemble_table(&links, &schemes, &cells);
    for routine in &table.routines {
        for (link, set) in links.iter().zip(&routine.metrics) {
            for metric in Metric::ALL {
                let value = set.get(metric);
                if routine.routine == "loocv" && metric != Metric::E1 {
                    ensure(value == MetricValue::Unavailable(UnavailableReason::SingleObservationTestSet), || {
                        format!("LOOCV {link} {metric}: {value:?}")
                    })?;
                    continue;
                }
                let v = value.value().ok_or_else(|| format!("{} {link} {metric}: {value:?}", routine.routine))?;
                ensure((0.0..=1.0).contains(&v), || format!("{} {link} {metric} = {v}", routine.routine))?;
            }
        }
    }
    let second = manifest_run(&data, "synthetic-120", &schemes, &options);
    ensure(first == second, || "two runs with the same seed differ".into())?;
    Ok("5 routines x 4 links complete, values in [0,1], LOOCV E1 only, deterministic".into())
}

fn with_column_scaled(data: &Dataset, col: usize, c: f64) -> Dataset {
    let mut design = data.design().clone();
    design.column_mut(col).scale_mut(c);
    Dataset::new(data.response().to_vec(), design, data.covariate_names().to_vec(), data.covariate_roles().to_vec())
        .expect("rescaled data stays valid")
}

fn with_labels_swapped(data: &Dataset) -> Dataset {
    let flipped = data.response().iter().map(|&y| 1 - y).collect();
    Dataset::new(flipped, data.design().clone(), data.covariate_names().to_vec(), data.covariate_roles().to_vec())
        .expect("swapped data stays valid")
}

fn run_property<S: Strategy>(name: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn property_suite() -> Check {
    let config = FitConfig::default();
    run_property(
        "rescaling equivariance",
        24,
        (1u64..1000, 0usize..4, 1usize..3, prop_oneof![-20.0..-0.05f64, 0.05..20.0f64]),
        |(seed, li, col, c)| {
            let link = LinkSpec::ALL[li];
            let data = synthetic(seed, link);
            let base = fit_irls(&data, link, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let scaled = fit_irls(&with_column_scaled(&data, col, c), link, &config)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            for j in 0..base.coefficients.len() {
                let want = if j == col { base.coefficients[j] / c } else { base.coefficients[j] };
                prop_assert!((scaled.coefficients[j] - want).abs() <= 1e-6, "{link} β{j}: {} vs {want}", scaled.coefficients[j]);
            }
            let p0 = linkselect::predict_probabilities(&base, data.design()).unwrap();
            let p1 = linkselect::predict_probabilities(&scaled, with_column_scaled(&data, col, c).design()).unwrap();
            for (a, b) in p0.iter().zip(&p1) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
            Ok(())
        },
    )?;

    run_property("label-swap antisymmetry", 24, (1u64..1000, 0usize..3), |(seed, li)| {
        let link = [LinkSpec::Probit, LinkSpec::Logit, LinkSpec::Cauchit][li];
        let data = synthetic(seed, link);
        let base = fit_irls(&data, link, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let swapped = fit_irls(&with_labels_swapped(&data), link, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (a, b) in base.coefficients.iter().zip(&swapped.coefficients) {
            prop_assert!((a + b).abs() <= 1e-6, "{link}: {a} vs {b}");
        }
        Ok(())
    })?;
    // cloglog is asymmetric: swapping labels is not the same as negating β.
    let data = synthetic(7, LinkSpec::CLogLog);
    let base = fit_irls(&data, LinkSpec::CLogLog, &config).map_err(|e| e.to_string())?;
    let swapped = fit_irls(&with_labels_swapped(&data), LinkSpec::CLogLog, &config).map_err(|e| e.to_string())?;
    let gap = base.coefficients.iter().zip(&swapped.coefficients).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    ensure(gap > 1e-3, || format!("cloglog label swap unexpectedly antisymmetric (gap {gap:e})"))?;

    run_property(
        "AUC monotone invariance",
        200,
        proptest::collection::vec((0u8..=1, -3.0..3.0f64), 2..80),
        |pairs| {
            let labels: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let scores: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let cubed: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
            let shifted: Vec<f64> = scores.iter().map(|s| s.exp() + 4.0).collect();
            let base = rank_sum(&labels, &scores);
            prop_assert_eq!(base.clone().ok(), rank_sum(&labels, &cubed).ok());
            prop_assert_eq!(base.ok(), rank_sum(&labels, &shifted).ok());
            Ok(())
        },
    )?;

    let (table, _) = load_table("table3_2015")?;
    run_property("selection permutation invariance", 48, Just(LinkSpec::ALL.to_vec()).prop_shuffle(), |order| {
        let index: Vec<usize> = order.iter().map(|l| table.links.iter().position(|x| x == l).unwrap()).collect();
        let mut permuted = table.clone();
        permuted.links = order.clone();
        for (dst, src) in permuted.routines.iter_mut().zip(&table.routines) {
            dst.metrics = index.iter().map(|&i| src.metrics[i]).collect();
        }
        for metric in Metric::ALL {
            let a = select_best(&table, metric).unwrap();
            let b = select_best(&permuted, metric).unwrap();
            let set = |v: &[LinkSpec]| v.iter().copied().collect::<std::collections::BTreeSet<_>>();
            prop_assert_eq!(set(&a.best), set(&b.best));
            prop_assert_eq!(set(&a.runner_up), set(&b.runner_up));
        }
        Ok(())
    })?;
    Ok(format!("4 properties green; cloglog label-swap gap {gap:.3}"))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 7] = [
        ("1 link math", Duration::from_secs(1), link_math),
        ("2 IRLS correctness", Duration::from_secs(30), irls_correctness),
        ("3 AUC rank-sum exactness", Duration::from_secs(30), auc_exactness),
        ("4 CV partition suite", Duration::from_secs(60), partition_suite),
        ("5 published-table selection", Duration::from_secs(1), published_selection),
        ("6 full-scale smoke run", Duration::from_secs(60), smoke_reproduction),
        ("7 property suite", Duration::from_secs(120), property_suite),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let outcome = match result {
            Ok(detail) if elapsed <= limit => format!("PASS  {name} ({:.2} s): {detail}", elapsed.as_secs_f64()),
            Ok(detail) => format!("FAIL  {name} ({:.2} s > {} s limit): {detail}", elapsed.as_secs_f64(), limit.as_secs()),
            Err(why) => format!("FAIL  {name} ({:.2} s): {why}", elapsed.as_secs_f64()),
        };
        if outcome.starts_with("FAIL") {
            failed += 1;
        }
        println!("{outcome}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
