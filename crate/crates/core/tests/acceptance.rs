//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use latlip::basisframe::{
    covariance, pca_points, BasisFrame, CenterMode, FrameSource, LatticeVector,
};
use latlip::config::RunConfig;
use latlip::diagonal::{diagonal_error, diagonal_value};
use latlip::extension::ExtensionModel;
use latlip::metrics::{audit_points, AUDIT_SLACK};
use latlip::operator::{catalog_f5, catalog_g, catalog_r, catalog_s, DomainBox, OperatorHandle};
use latlip::pipeline::{self, PipelineRun};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    label: String,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn report(outcomes: &mut Vec<Outcome>, label: &str, start: Instant, pass: bool, detail: String) {
    let o = Outcome {
        label: label.to_string(),
        pass,
        detail,
        elapsed: start.elapsed(),
    };
    println!(
        "criterion {:<3} {}  {} ({:.2} s)",
        o.label,
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        o.elapsed.as_secs_f64()
    );
    outcomes.push(o);
}

fn catalog() -> Vec<OperatorHandle> {
    vec![
        catalog_s(),
        catalog_g(),
        catalog_r(0.0),
        catalog_r(3.0),
        catalog_r(-10.0),
        catalog_f5(),
        OperatorHandle::identity(2),
    ]
}

fn error_at(op: &OperatorHandle, x: &[f64], lambda: f64) -> f64 {
    let t = op.eval(x);
    let r: f64 = t.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum();
    let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    r.sqrt() / nx
}

fn minimality(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let ops = catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let op = &ops[rng.random_range(0..ops.len())];
        let x = op.domain().sample(&mut rng);
        let lambda = diagonal_value(op, &x).unwrap();
        let eps = diagonal_error(op, &x).unwrap();
        for delta in [1e-3, 1e-2, 1e-1] {
            for l in [lambda - delta, lambda + delta] {
                worst = worst.max(eps - error_at(op, &x, l));
            }
        }
    }
    let pass = worst <= 1e-12 && start.elapsed() < Duration::from_secs(5);
    report(
        out,
        "1",
        start,
        pass,
        format!("max ε(λ) − ε(λ±δ) = {worst:.3e} over 1000 pairs"),
    );
}

fn closed_form(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let ops = catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let op = &ops[rng.random_range(0..ops.len())];
        let x = op.domain().sample(&mut rng);
        let lambda = diagonal_value(op, &x).unwrap();
        let gap = (diagonal_error(op, &x).unwrap() - error_at(op, &x, lambda)).abs();
        worst = worst.max(gap);
    }
    let pass = worst <= 1e-10 && start.elapsed() < Duration::from_secs(1);
    report(
        out,
        "2",
        start,
        pass,
        format!("max |closed form − direct| = {worst:.3e} over 1000 points"),
    );
}

fn diagonal_frame() -> BasisFrame {
    BasisFrame::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]], FrameSource::User).unwrap()
}

fn ray_points() -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..=200 {
        let t = -1.0 + 0.01 * i as f64;
        pts.push(vec![t, t]);
        pts.push(vec![t, -t]);
    }
    pts
}

fn unit_ball_grid() -> Vec<Vec<f64>> {
    DomainBox::symmetric(2, 1.0)
        .grid(101)
        .into_iter()
        .filter(|p| p[0] * p[0] + p[1] * p[1] <= 1.0)
        .collect()
}

fn ray_model(k: Option<Vec<f64>>) -> ExtensionModel {
    let s = catalog_s();
    let pts = ray_points();
    let vals: Vec<_> = pts.iter().map(|p| s.eval(p)).collect();
    match k {
        Some(k) => ExtensionModel::with_constants(diagonal_frame(), &pts, &vals, k, 0.0).unwrap(),
        None => ExtensionModel::fit(diagonal_frame(), &pts, &vals, 0.0).unwrap(),
    }
}

/// Largest per-coordinate error of T^M and T^W on the unit-ball grid.
fn extension_error(model: &ExtensionModel) -> f64 {
    let s = catalog_s();
    let frame = model.frame();
    let mut worst = 0.0f64;
    for p in unit_ball_grid() {
        let e = model.evaluate(&frame.to_coords(&p).unwrap()).unwrap();
        let t = frame.to_coords(&s.eval(&p)).unwrap();
        for w in 0..2 {
            worst = worst
                .max((e.mcshane[w] - t[w]).abs())
                .max((e.whitney[w] - t[w]).abs());
        }
    }
    worst
}

fn exact_reconstruction(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let model = ray_model(Some(vec![2.0, 2.0]));
    let worst = extension_error(&model);
    let pass = worst <= 0.04 && start.elapsed() < Duration::from_secs(10);
    report(
        out,
        "3",
        start,
        pass,
        format!("K = (2, 2): max |T^M − T|, |T^W − T| = {worst:.4} (limit 0.04), certified on samples: {}", model.is_certified()),
    );

    let start = Instant::now();
    let fitted = ray_model(None);
    let worst = extension_error(&fitted);
    let pass = worst <= 0.04;
    report(
        out,
        "3+",
        start,
        pass,
        format!(
            "fitted K = ({:.4}, {:.4}): max error = {worst:.3e}",
            fitted.k()[0],
            fitted.k()[1]
        ),
    );
}

fn bound_soundness(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let s = catalog_s();
    let audit = audit_points(&s, &ray_model(Some(vec![2.0, 2.0])), &unit_ball_grid()).unwrap();
    report(
        out,
        "6",
        start,
        audit.violations == 0,
        format!(
            "K = (2, 2): {} of {} grid points out of bound ({} coordinates), max excess {:.3e}",
            audit.violations, audit.points, audit.coordinate_violations, audit.max_excess
        ),
    );

    let start = Instant::now();
    let audit = audit_points(&s, &ray_model(None), &unit_ball_grid()).unwrap();
    report(
        out,
        "6+",
        start,
        audit.violations == 0,
        format!(
            "fitted K: {} violations on {} grid points",
            audit.violations, audit.points
        ),
    );
}

fn section5_config(seed: u64) -> RunConfig {
    RunConfig {
        seed,
        ..RunConfig::default()
    }
}

fn k_contrast(out: &mut Vec<Outcome>, run: &PipelineRun, k0: &Option<Vec<f64>>) {
    let start = Instant::now();
    let k = run.model.k();
    let (pass, detail) = match k0 {
        Some(k0) => {
            let ratios: Vec<f64> = k0.iter().zip(k).map(|(a, b)| a / b).collect();
            (
                ratios.iter().all(|r| *r >= 5.0),
                format!(
                    "seed 1: K(α=0.1) = ({:.3}, {:.3}), K(α=0) = ({:.3}, {:.3}), ratios ({:.2}, {:.2})",
                    k[0], k[1], k0[0], k0[1], ratios[0], ratios[1]
                ),
            )
        }
        None => (true, "seed 1: K(α=0) unbounded".to_string()),
    };
    report(out, "4", start, pass, detail);
}

fn l2_band(out: &mut Vec<Outcome>, l2: &[f64], first_run: Duration) {
    let start = Instant::now();
    let mut sorted = l2.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let pass = (0.2..=1.2).contains(&l2[0])
        && (0.4..=1.0).contains(&median)
        && first_run < Duration::from_secs(60);
    let list: Vec<String> = l2.iter().map(|v| format!("{v:.3}")).collect();
    report(
        out,
        "5",
        start,
        pass,
        format!(
            "seed 1 L2 = {:.3}, seeds 1..=5 = [{}], median {median:.3}, one run {:.2} s",
            l2[0],
            list.join(", "),
            first_run.as_secs_f64()
        ),
    );
}

fn read_trace(path: &Path) -> Vec<(usize, usize, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                rec[0].parse().unwrap(),
                rec[1].parse().unwrap(),
                rec[2].parse().unwrap(),
            )
        })
        .collect()
}

fn monotonicity(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for r in [0.0, 3.0, -10.0] {
        let mut cfg = RunConfig::default();
        cfg.operator.key = "R".into();
        cfg.operator.params.insert("r".into(), r);
        cfg.search.n_initial = 500;
        cfg.search.n_select = 100;
        cfg.search.steps = 10;
        let a = dir.path().join(format!("r{r}-a"));
        let b = dir.path().join(format!("r{r}-b"));
        pipeline::cmd_eigensearch(&cfg, &a).unwrap();
        pipeline::cmd_eigensearch(&cfg, &b).unwrap();

        let trace = read_trace(&a.join(pipeline::TRACE_CSV));
        let mut last = vec![f64::INFINITY; cfg.search.n_select];
        let mut increases = 0;
        for (_, survivor, eps) in &trace {
            if *eps > last[*survivor] {
                increases += 1;
            }
            last[*survivor] = *eps;
        }
        let identical = [
            pipeline::INITIAL_CSV,
            pipeline::CLOUD_CSV,
            pipeline::HISTORY_CSV,
            pipeline::TRACE_CSV,
            pipeline::SEARCH_SUMMARY,
        ]
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
        // The echoed config differs only in the output directory it records.
        let echo = |dir: &Path| RunConfig {
            out: PathBuf::new(),
            ..RunConfig::load(&dir.join(pipeline::CONFIG_ECHO)).unwrap()
        };
        let identical = identical && echo(&a) == echo(&b);
        let rows_ok = trace.len() == (cfg.search.steps + 1) * cfg.search.n_select;
        pass &= increases == 0 && identical && rows_ok;
        notes.push(format!(
            "r = {r}: {increases} increases, files identical: {identical}"
        ));
    }
    report(out, "7", start, pass, notes.join("; "));
}

fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0).acos()
}

fn pca(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let mut cloud = Vec::new();
    for i in -10..=10 {
        let t = i as f64 / 10.0;
        cloud.push(vec![2.0 * t, 2.0 * t]);
        cloud.push(vec![t, -t]);
    }
    let (frame, _) = pca_points(&cloud, CenterMode::Mean).unwrap();
    let v = frame.vectors();
    let angle = line_angle(&v[0], &[1.0, 1.0]).max(line_angle(&v[1], &[1.0, -1.0]));

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ordered = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(n + 2..60);
        let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let pts: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let (frame, vars) = pca_points(&pts, CenterMode::Mean).unwrap();
        let c = covariance(&pts, CenterMode::Mean).unwrap();
        let rayleigh = |v: &[f64]| -> f64 {
            (0..n)
                .map(|i| (0..n).map(|j| v[i] * c[i][j] * v[j]).sum::<f64>())
                .sum()
        };
        let sorted = vars.windows(2).all(|w| w[0] >= w[1]);
        let explained = frame
            .vectors()
            .iter()
            .zip(&vars)
            .all(|(v, var)| (rayleigh(v) - var).abs() <= 1e-9 * vars[0]);
        if sorted && explained {
            ordered += 1;
        }
    }
    report(
        out,
        "8",
        start,
        angle <= 1e-9 && ordered == 100,
        format!(
            "axis angle error {angle:.3e} rad; variance ordering on {ordered}/100 random clouds"
        ),
    );
}

struct OrderCheck {
    order_violations: usize,
    sample_mismatches: usize,
    queries: usize,
    samples: usize,
}

fn order_and_interpolation(model: &ExtensionModel, queries: &[Vec<f64>]) -> OrderCheck {
    let frame = model.frame();
    let mut order_violations = 0;
    for p in queries {
        let e = model.evaluate(&frame.to_coords(p).unwrap()).unwrap();
        if !(e.mcshane.le(&LatticeVector(
            e.interpolant.0.iter().map(|v| v + AUDIT_SLACK).collect(),
        )) && e.interpolant.le(&LatticeVector(
            e.whitney.0.iter().map(|v| v + AUDIT_SLACK).collect(),
        ))) {
            order_violations += 1;
        }
    }
    let mut sample_mismatches = 0;
    for s in model.samples() {
        let e = model.evaluate(&s.z).unwrap();
        let close =
            |a: &LatticeVector| (0..model.dim()).all(|w| (a[w] - s.tz[w]).abs() <= AUDIT_SLACK);
        if !(close(&e.mcshane) && close(&e.whitney) && close(&e.interpolant)) {
            sample_mismatches += 1;
        }
    }
    OrderCheck {
        order_violations,
        sample_mismatches,
        queries: queries.len(),
        samples: model.samples().len(),
    }
}

fn main() {
    let mut out = Vec::new();
    minimality(&mut out);
    closed_form(&mut out);
    exact_reconstruction(&mut out);

    let mut runs = Vec::new();
    let mut l2 = Vec::new();
    let mut k0s = Vec::new();
    let mut first_run = Duration::ZERO;
    for seed in 1..=5 {
        let start = Instant::now();
        let (run, bench) = pipeline::benchmark(&section5_config(seed)).unwrap();
        if seed == 1 {
            first_run = start.elapsed();
        }
        l2.push(bench.error.l2_normalized);
        k0s.push(bench.k_alpha_zero.clone());
        runs.push(run);
    }
    k_contrast(&mut out, &runs[0], &k0s[0]);
    l2_band(&mut out, &l2, first_run);
    bound_soundness(&mut out);
    monotonicity(&mut out);
    pca(&mut out);

    let start = Instant::now();
    let mut models = vec![(
        "criterion 3".to_string(),
        ray_model(Some(vec![2.0, 2.0])),
        unit_ball_grid(),
    )];
    let f5_grid = DomainBox::symmetric(2, 5.0).grid(51);
    for (seed, run) in (1..).zip(&runs) {
        models.push((
            format!("seed {seed}, α = 0.1"),
            run.model.clone(),
            f5_grid.clone(),
        ));
    }
    let first = &runs[0];
    if let Ok(m) = ExtensionModel::fit_operator(
        first.model.frame().clone(),
        &first.operator,
        &first.cloud.points(),
        0.0,
    ) {
        models.push(("seed 1, α = 0".to_string(), m, f5_grid.clone()));
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, model, grid) in &models {
        let c = order_and_interpolation(model, grid);
        pass &= c.order_violations == 0 && c.sample_mismatches == 0;
        if c.order_violations + c.sample_mismatches > 0 {
            notes.push(format!(
                "{name}: {}/{} order violations, {}/{} sample mismatches",
                c.order_violations, c.queries, c.sample_mismatches, c.samples
            ));
        }
    }
    let detail = if notes.is_empty() {
        format!("{} models clean", models.len())
    } else {
        format!("{} models; {}", models.len(), notes.join("; "))
    };
    report(&mut out, "9", start, pass, detail);

    let certified: Vec<String> = models[1..]
        .iter()
        .map(|(name, m, grid)| {
            let c = order_and_interpolation(m, grid);
            format!(
                "{name}: {}",
                if c.order_violations + c.sample_mismatches == 0 {
                    "clean"
                } else {
                    "dirty"
                }
            )
        })
        .collect();
    let start = Instant::now();
    let clean = certified.iter().all(|s| s.ends_with("clean"));
    report(
        &mut out,
        "9+",
        start,
        clean,
        format!("fitted models only: {}", certified.join(", ")),
    );

    // Supplementary: K contrast over all five seeds, for context only.
    let contrasts: Vec<String> = (1..)
        .zip(runs.iter().zip(&k0s))
        .map(|(seed, (run, k0))| match k0 {
            Some(k0) => format!(
                "seed {seed}: ({:.1}, {:.1})",
                k0[0] / run.model.k()[0],
                k0[1] / run.model.k()[1]
            ),
            None => format!("seed {seed}: unbounded"),
        })
        .collect();
    println!(
        "info          K(α=0)/K(α=0.1) by seed: {}",
        contrasts.join(", ")
    );

    let failed: Vec<&str> = out
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.label.as_str())
        .collect();
    println!(
        "{} of {} checks passed",
        out.len() - failed.len(),
        out.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
