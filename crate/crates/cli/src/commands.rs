//! One function per subcommand. Each returns whether every check passed.

use log::info;
use serde::Serialize;
use sprp_core::acceptance::{run_selected, CheckRow};
use sprp_core::genfun::{alpha_c, f_at_one, r_star, saddle};
use sprp_core::limits::{classify, y_pmf, LimitLaw, RhoSpec, ThetaLaw};
use sprp_core::partition::cycle_count_pgf;
use sprp_core::sampler::{
    draw_lengths, l1_pmf, replica_rng, sample_positions, sample_replicas, stick_breaking, CycleSample,
};
use sprp_core::stats::{histogram, macro_fraction, moments};
use sprp_core::{partition_table, weight_table, PartitionTable, WeightTable};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Stage};
use crate::report::{num, Report, Sink};
use crate::LawKind;

type Outcome = Result<bool, CliError>;

fn tables(cfg: &ExperimentConfig) -> Result<(WeightTable, PartitionTable), CliError> {
    let params = cfg.params()?;
    let wt = weight_table(&params).stage("weights")?;
    let pt = partition_table(&wt).stage("partition")?;
    Ok((wt, pt))
}

/// Writes the report if a path is configured.
fn finish(report: Report, cfg: &ExperimentConfig) -> Outcome {
    if let Some(path) = &cfg.output.report {
        report.write(path)?;
    }
    Ok(report.all_pass())
}

fn model_constants(report: &mut Report, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let params = cfg.params()?;
    report.constant("rho", Some(params.rho()));
    report.constant("side", Some(params.side()));
    Ok(())
}

pub fn weights(cfg: &ExperimentConfig) -> Outcome {
    let params = cfg.params()?;
    let wt = weight_table(&params).stage("weights")?;
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    out.row(["j", "weight"])?;
    for j in 1..=wt.n() {
        out.row([j.to_string(), num(wt.get(j))])?;
    }
    out.finish()?;
    let mut report = Report::new("weights", cfg);
    model_constants(&mut report, cfg)?;
    finish(report, cfg)
}

pub fn partition(cfg: &ExperimentConfig) -> Outcome {
    let (_, pt) = tables(cfg)?;
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    out.row(["n", "log_h"])?;
    for (n, v) in pt.log_values().iter().enumerate() {
        out.row([n.to_string(), num(*v)])?;
    }
    out.finish()?;
    let mut report = Report::new("partition", cfg);
    model_constants(&mut report, cfg)?;
    report.detail("degenerate_sizes", pt.degenerate());
    finish(report, cfg)
}

pub fn pmf(cfg: &ExperimentConfig) -> Outcome {
    let (wt, pt) = tables(cfg)?;
    let n = pt.n();
    let p = l1_pmf(&wt, &pt, n).stage("sampler")?;
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    out.row(["j", "probability"])?;
    for (i, q) in p.iter().enumerate() {
        out.row([(i + 1).to_string(), num(*q)])?;
    }
    out.finish()?;
    let mut report = Report::new("pmf", cfg);
    model_constants(&mut report, cfg)?;
    let mean = p.iter().enumerate().map(|(i, q)| (i + 1) as f64 * q).sum::<f64>() / n as f64;
    report.constant("mean_l1_over_n", Some(mean));
    if let Some(eps) = cfg.run.epsilon {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Config(format!("run.epsilon must lie in (0, 1), got {eps}")));
        }
        report.constant("macro_fraction", Some(macro_fraction(&p, eps)));
    }
    finish(report, cfg)
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    seed: u64,
    replica: u64,
    ordered: &'a [usize],
    sorted: &'a [usize],
}

fn write_histogram(cfg: &ExperimentConfig, values: &[f64]) -> Result<(), CliError> {
    let Some(path) = &cfg.output.histogram else {
        return Ok(());
    };
    let bins = cfg.run.bins.unwrap_or(50);
    let h = histogram(values, 0.0, 1.0, bins).stage("stats")?;
    let mut out = Sink::open(Some(path))?.csv();
    out.row(["bin_left", "bin_right", "count"])?;
    for (lo, hi, c) in h {
        out.row([num(lo), num(hi), c.to_string()])?;
    }
    out.finish()
}

pub fn sample(cfg: &ExperimentConfig) -> Outcome {
    let (wt, pt) = tables(cfg)?;
    let m = cfg.replicas()?;
    info!("sampling {m} replicas at N = {}", pt.n());
    let samples: Vec<CycleSample> = sample_replicas(&wt, &pt, cfg.seed(), m).stage("sampler")?;
    let mut out = Sink::open(cfg.output.data.as_deref())?;
    for s in &samples {
        out.json_line(&SampleRecord { seed: s.seed, replica: s.replica, ordered: &s.ordered, sorted: &s.sorted })?;
    }
    out.finish()?;
    let n = pt.n() as f64;
    let first: Vec<f64> = samples.iter().map(|s| s.ordered[0] as f64 / n).collect();
    write_histogram(cfg, &first)?;
    let mut report = Report::new("sample", cfg);
    model_constants(&mut report, cfg)?;
    let est = moments(&first).stage("stats")?;
    report.constant("mean_l1_over_n", Some(est.mean));
    report.constant("se_mean_l1_over_n", Some(est.se_mean));
    let cycles: Vec<f64> = samples.iter().map(|s| s.cycle_count() as f64).collect();
    report.constant("mean_cycle_count", Some(moments(&cycles).stage("stats")?.mean));
    finish(report, cfg)
}

pub fn positions(cfg: &ExperimentConfig) -> Outcome {
    let params = cfg.params()?;
    let wt = weight_table(&params).stage("weights")?;
    let pt = partition_table(&wt).stage("partition")?;
    let d = params.dim();
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    let mut header = vec!["replica".to_string(), "index".into(), "cycle".into(), "image".into()];
    header.extend((0..d).map(|a| format!("x{a}")));
    out.row(&header)?;
    for replica in 0..cfg.replicas()? as u64 {
        let mut rng = replica_rng(cfg.seed(), replica);
        let lengths = draw_lengths(&wt, &pt, &mut rng).stage("sampler")?;
        let ps = sample_positions(&params, &lengths, &mut rng).stage("sampler")?;
        for (i, x) in ps.points.iter().enumerate() {
            let mut row = vec![replica.to_string(), i.to_string(), ps.cycle_of[i].to_string(), ps.perm[i].to_string()];
            row.extend(x.iter().map(|v| num(*v)));
            out.row(&row)?;
        }
    }
    out.finish()?;
    let mut report = Report::new("positions", cfg);
    model_constants(&mut report, cfg)?;
    finish(report, cfg)
}

#[derive(Serialize)]
struct StickRecord<'a> {
    seed: u64,
    replica: u64,
    tau: f64,
    x: &'a [f64],
}

pub fn stickbreak(cfg: &ExperimentConfig) -> Outcome {
    let theta = cfg.theta_value()?;
    let tau = cfg.run.tau.unwrap_or(0.0);
    let k = cfg.run.steps.unwrap_or(100);
    let m = cfg.replicas()?;
    let runs: Vec<_> = (0..m as u64)
        .map(|r| stick_breaking(theta, tau, k, &mut replica_rng(cfg.seed(), r)))
        .collect::<Result<_, _>>()
        .stage("sampler")?;
    let mut out = Sink::open(cfg.output.data.as_deref())?;
    for (r, s) in runs.iter().enumerate() {
        out.json_line(&StickRecord { seed: cfg.seed(), replica: r as u64, tau: s.tau, x: &s.x })?;
    }
    out.finish()?;
    let first: Vec<f64> = runs.iter().map(|s| s.x[0]).collect();
    write_histogram(cfg, &first)?;
    finish(Report::new("stickbreak", cfg), cfg)
}

pub fn regime(cfg: &ExperimentConfig) -> Outcome {
    let density = cfg.density()?;
    let theta = cfg.theta_value()?;
    let spec = cfg.rho_spec()?;
    let regime = classify(&density, theta, spec).stage("limits")?;
    let mut report = Report::new("regime", cfg);
    report.constant("rho_c", regime.rho_c);
    report.constant("alpha_c", regime.alpha_c);
    report.constant("tau", Some(regime.tau));
    report.constant("nu", Some(regime.nu));
    report.detail("regime", &regime);
    let at_n = cfg.model.n.map(|n| spec.at(n));
    let rho_for_star = match spec {
        RhoSpec::Fixed { rho } => Some(rho),
        _ => at_n,
    };
    // r* exists only below or at criticality.
    let star = rho_for_star.and_then(|rho| r_star(&density, theta, rho).ok());
    report.constant("r_star", star);
    if cfg.model.n.is_some() {
        let params = cfg.params()?;
        report.constant("rho", Some(params.rho()));
        report.constant("side", Some(params.side()));
        let s = saddle(&params).stage("genfun")?;
        report.constant("r_n", Some(s.r));
        report.constant("a_n", Some(s.a));
        report.constant("b_n", Some(s.b));
        report.constant("f_l_one", Some(f_at_one(&params).stage("genfun")?));
    } else {
        for name in ["r_n", "a_n", "b_n", "f_l_one"] {
            report.constant(name, None);
        }
    }
    match &cfg.output.report {
        Some(path) => report.write(path)?,
        None => println!("{}", report.to_json()),
    }
    Ok(report.all_pass())
}

fn build_law(cfg: &ExperimentConfig, kind: LawKind, points: usize, alpha: Option<f64>) -> Result<LimitLaw, CliError> {
    let need_alpha = || alpha.ok_or_else(|| CliError::Config("--alpha is required for this law".into()));
    Ok(match kind {
        LawKind::GammaHalf => LimitLaw::GammaHalf,
        LawKind::UniformLog => {
            let atom = match alpha {
                Some(a) => {
                    let ac = alpha_c(&*cfg.density()?, cfg.theta_value()?).stage("genfun")?;
                    (1.0 - ac / a).max(0.0)
                }
                None => 0.0,
            };
            LimitLaw::UniformLogScale { atom }
        }
        LawKind::Theta => {
            let density = cfg.density()?;
            let sigma = density.variance_1d().sqrt();
            LimitLaw::ThetaDensity(ThetaLaw::new(need_alpha()?, sigma, cfg.theta_value()?).stage("limits")?)
        }
        LawKind::Y => {
            let RhoSpec::Fixed { rho } = cfg.rho_spec()? else {
                return Err(CliError::Config("the Y law needs a fixed density (--rho)".into()));
            };
            let y = y_pmf(&*cfg.density()?, cfg.theta_value()?, rho, points).stage("limits")?;
            LimitLaw::DiscreteY { pmf: y.pmf, r_star: y.r_star }
        }
        LawKind::X1 => LimitLaw::X1Law { theta: cfg.theta_value()?, tau: cfg.run.tau.unwrap_or(0.0) },
    })
}

pub fn limitcheck(cfg: &ExperimentConfig, kind: LawKind, points: usize, alpha: Option<f64>) -> Outcome {
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    let law = build_law(cfg, kind, points, alpha)?;
    let grid: Vec<f64> = match (&law, kind) {
        (LimitLaw::DiscreteY { .. }, _) => (1..=points).map(|j| j as f64).collect(),
        (_, LawKind::GammaHalf) => (1..=points).map(|i| 5.0 * i as f64 / points as f64).collect(),
        _ => (1..points).map(|i| i as f64 / points as f64).chain([1.0]).collect(),
    };
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    out.row(["x", "density", "cdf"])?;
    let mut mass = Vec::with_capacity(grid.len());
    let mut prev = 0.0;
    for &x in &grid {
        let cdf = law.cdf(x).stage("limits")?;
        let density = match &law {
            LimitLaw::DiscreteY { pmf, .. } => Some(pmf[x as usize - 1]),
            l => l.density(x),
        };
        out.row([num(x), density.map(num).unwrap_or_default(), num(cdf)])?;
        mass.push(cdf - prev);
        prev = cdf;
    }
    out.finish()?;
    if let Some(path) = &cfg.output.histogram {
        let mut h = Sink::open(Some(path))?.csv();
        h.row(["bin_left", "bin_right", "mass"])?;
        let mut left = 0.0;
        for (x, m) in grid.iter().zip(&mass) {
            h.row([num(left), num(*x), num(*m)])?;
            left = *x;
        }
        h.finish()?;
    }
    let mut report = Report::new("limitcheck", cfg);
    report.detail("law", &law);
    report.constant("grid_mass", Some(prev));
    finish(report, cfg)
}

pub fn pgf(cfg: &ExperimentConfig) -> Outcome {
    let params = cfg.params()?;
    let wt = weight_table(&params).stage("weights")?;
    let ts = cfg.run.t.clone().unwrap_or_default();
    let mut out = Sink::open(cfg.output.data.as_deref())?.csv();
    out.row(["t", "pgf"])?;
    for t in ts {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("pgf arguments must be positive, got {t}")));
        }
        out.row([num(t), num(cycle_count_pgf(&wt, t).stage("partition")?)])?;
    }
    out.finish()?;
    finish(Report::new("pgf", cfg), cfg)
}

pub fn accept(cfg: &ExperimentConfig, only: &[u32]) -> Outcome {
    let reports = run_selected(only);
    if reports.is_empty() {
        return Err(CliError::Config(format!("no acceptance criteria match {only:?}")));
    }
    let mut report = Report::new("accept", cfg);
    for r in &reports {
        let status = if r.pass() { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {} ({:.2} s)", r.id, r.title, r.seconds);
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
        for row in &r.rows {
            let mark = if row.pass { "ok  " } else { "FAIL" };
            println!("    {mark} {}: {:.4e} <= {:.4e}", row.name, row.statistic, row.threshold);
        }
        let prefix = format!("criterion {}", r.id);
        report.checks.extend(r.rows.iter().map(|row| CheckRow {
            name: format!("{prefix}: {}", row.name),
            ..row.clone()
        }));
        if let Some(e) = &r.error {
            report.checks.push(CheckRow { name: format!("{prefix}: error: {e}"), statistic: f64::INFINITY, threshold: 0.0, pass: false });
        }
    }
    finish(report, cfg)
}
