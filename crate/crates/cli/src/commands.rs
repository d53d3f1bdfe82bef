use std::io::Read;
use std::path::Path;

use num_rational::Ratio;
use rand::Rng;

use ispval::estimators::{estimate, EstimatorKind};
use ispval::experiments::{
    run_finch, run_gaussian_cdf, run_gaussian_mse, run_multitest_sim, run_pointprocess_validity, run_rasch_ci,
    run_structured_table, FinchConfig, GaussianConfig, KeyValues, MultitestConfig, PpValidityConfig, RaschSimConfig,
    RunDir, RunManifest, Table52Config, GAUSSIAN_ALPHAS,
};
use ispval::inference::RaschPValueKind;
use ispval::oracle::{lemma1_check, Verdict};
use ispval::rng::stream;
use ispval::{Error, Result};

use crate::input::parse_draws;
use crate::Context;

/// Reject settings the subcommand does not understand, so typos do not pass silently.
fn check_keys(kv: &KeyValues, allowed: &[&str]) -> Result<()> {
    let unknown: Vec<&str> = kv.keys().filter(|k| !allowed.contains(k)).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("unknown setting(s) {}; expected one of {}", unknown.join(", "), allowed.join(", "))))
    }
}

fn open(ctx: &Context, name: &str, replications: u64, n_grid: Vec<usize>) -> Result<RunDir> {
    let mut m = RunManifest::new(name, ctx.seed, replications, n_grid);
    for k in ctx.settings.keys() {
        m = m.param(k, ctx.settings.get(k).unwrap_or_default());
    }
    RunDir::create(&ctx.out, m)
}

fn close(run: RunDir) -> Result<String> {
    let dir = run.path().display().to_string();
    let m = run.finish()?;
    Ok(format!("{} [{}]", m.outputs.join(", "), dir))
}

pub fn pvalue(input: &Path, estimator: &str, level: f64, ctx: Option<&Context>) -> Result<String> {
    let kind = EstimatorKind::parse(estimator)
        .ok_or_else(|| Error::InvalidValue(format!("unknown estimator `{estimator}`")))?;
    let text = if input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(input)?
    };
    let file = parse_draws(&text)?;
    if kind.needs_normalized() && !file.normalized {
        return Err(Error::NonNormalizedWeights);
    }
    let report = estimate(kind, &file.observed, &file.draws, level)?;
    let json = serde_json::to_string(&report)?;
    if let Some(ctx) = ctx {
        let mut run = open(ctx, "pvalue", 1, vec![report.n])?;
        run.write("pvalue.json", &(json.clone() + "\n"))?;
        run.finish()?;
    }
    Ok(json)
}

pub fn gaussian_mse(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "n_grid", "replications"])?;
    let ns = match kv.get("n") {
        Some(_) => vec![kv.value("n", 0usize)?],
        None => kv.list("n_grid", vec![10, 100, 1000])?,
    };
    let reps = kv.value("replications", 10_000u64)?;
    let configs = GaussianConfig::grid(&ns);
    let mut run = open(ctx, "gaussian-mse", reps, ns)?;
    let table = run_gaussian_mse(&configs, reps, ctx.seed)?;
    run.write("mse.csv", &table.to_csv_string()?)?;
    let outputs = close(run)?;
    Ok(format!("gaussian-mse: {} configurations x {reps} replications -> {outputs}", configs.len()))
}

pub fn gaussian_cdf(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "n_grid", "replications", "alphas", "k"])?;
    let ns = match kv.get("n") {
        Some(_) => vec![kv.value("n", 0usize)?],
        None => kv.list("n_grid", vec![10])?,
    };
    let reps = kv.value("replications", 10_000u64)?;
    let alphas = kv.list("alphas", GAUSSIAN_ALPHAS.to_vec())?;
    let k = kv.value("k", 3.0)?;
    let configs = GaussianConfig::grid(&ns);
    let mut run = open(ctx, "gaussian-cdf", reps, ns)?;
    let table = run_gaussian_cdf(&configs, &alphas, reps, ctx.seed, k)?;
    run.write("cdf.csv", &table.to_csv_string()?)?;
    for (c, plot) in table.plots() {
        run.write(&format!("cdf_mu{}_sigma{}_n{}.svg", c.mu, c.sigma, c.n), &plot.to_svg())?;
    }
    let corrected_violations = table
        .entries
        .iter()
        .filter(|e| matches!(e.estimator, EstimatorKind::PHatStar | EstimatorKind::PTildeStar))
        .flat_map(|e| e.report.verdicts.iter())
        .filter(|v| **v == Verdict::Violation)
        .count();
    let outputs = close(run)?;
    Ok(format!("gaussian-cdf: {corrected_violations} violations by corrected estimators -> {outputs}"))
}

pub fn multitest(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "n_grid", "replications", "n_tests", "false_nulls", "m", "r", "shift", "theta", "alpha"])?;
    let d = MultitestConfig::default();
    let cfg = MultitestConfig {
        n_tests: kv.value("n_tests", d.n_tests)?,
        false_nulls: kv.value("false_nulls", d.false_nulls)?,
        m: kv.value("m", d.m)?,
        r: kv.value("r", d.r)?,
        shift: kv.value("shift", d.shift)?,
        theta: kv.value("theta", d.theta)?,
        n_grid: match kv.get("n") {
            Some(_) => vec![kv.value("n", 0usize)?],
            None => kv.list("n_grid", d.n_grid)?,
        },
        alpha: kv.value("alpha", d.alpha)?,
        repetitions: kv.value("replications", d.repetitions)?,
    };
    let mut run = open(ctx, "multitest", cfg.repetitions, cfg.n_grid.clone())?;
    let table = run_multitest_sim(&cfg, ctx.seed)?;
    run.write("counts.csv", &table.to_csv_string()?)?;
    run.write("summary.csv", &table.summary_csv_string()?)?;
    let n = cfg.n_grid[0];
    let (_, bad_hat) = table.mean_counts("p_hat", n);
    let (good_star, bad_star) = table.mean_counts("p_hat_star", n);
    let outputs = close(run)?;
    Ok(format!(
        "multitest: at n={n} mean incorrect rejections p_hat {bad_hat} vs p_hat_star {bad_star} \
         (p_hat_star correct {good_star}) -> {outputs}"
    ))
}

pub fn rasch_ci(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "n_grid", "replications", "rows", "cols", "theta_true", "alpha"])?;
    let mut cfg = RaschSimConfig::synthetic(
        kv.value("rows", 30usize)?,
        kv.value("cols", 8usize)?,
        kv.value("theta_true", 2.0)?,
        ctx.seed,
    )?;
    cfg.n_grid = match kv.get("n") {
        Some(_) => vec![kv.value("n", 0usize)?],
        None => kv.list("n_grid", cfg.n_grid)?,
    };
    cfg.replications = kv.value("replications", cfg.replications)?;
    cfg.alpha = kv.value("alpha", cfg.alpha)?;
    let mut run = open(ctx, "rasch-ci", cfg.replications, cfg.n_grid.clone())?;
    let res = run_rasch_ci(&cfg, ctx.seed)?;
    run.write("sets.csv", &res.to_csv_string()?)?;
    run.write("summary.csv", &res.summary_csv_string(&cfg.n_grid)?)?;
    let n = *cfg.n_grid.iter().max().unwrap_or(&0);
    let (cov_star, se, _) = res.coverage(n, RaschPValueKind::Corrected);
    let (cov_plain, _, _) = res.coverage(n, RaschPValueKind::Uncorrected);
    let outputs = close(run)?;
    Ok(format!(
        "rasch-ci: coverage at n={n}: corrected {cov_star:.3} (se {se:.3}), uncorrected {cov_plain:.3} -> {outputs}"
    ))
}

pub fn table52(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "direct_draws", "observed"])?;
    let d = Table52Config::default();
    let cfg = Table52Config {
        n_max: kv.value("n", d.n_max)?,
        observed: kv.list("observed", d.observed)?,
        direct_draws: kv.value("direct_draws", d.direct_draws)?,
    };
    let mut manifest_run = open(ctx, "table52", 1, vec![cfg.n_max as usize])?;
    let res = run_structured_table(&cfg, ctx.seed)?;
    manifest_run.write("trajectory.csv", &res.trajectory_csv_string()?)?;
    manifest_run.write("direct.csv", &res.direct_csv_string()?)?;
    manifest_run.write("trajectory.svg", &res.plot().to_svg())?;
    let last: Vec<String> = res
        .trajectory
        .iter()
        .filter(|t| t.n == cfg.n_max)
        .map(|t| format!("X{}: p_tilde {:.4} p_tilde_star {:.4}", t.observed, t.p_tilde, t.p_tilde_star))
        .collect();
    let outputs = close(manifest_run)?;
    Ok(format!(
        "table52: direct p {:.4} (se {:.4}); at n={}: {} -> {outputs}",
        res.direct_p,
        res.direct_se,
        cfg.n_max,
        last.join("; ")
    ))
}

pub fn finch(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n"])?;
    let cfg = FinchConfig { n: kv.value("n", 10_000u64)? };
    let mut run = open(ctx, "finch", 1, vec![cfg.n as usize])?;
    let res = run_finch(cfg, ctx.seed)?;
    run.write("finch.csv", &res.to_csv_string()?)?;
    run.write("finch.json", &(serde_json::to_string_pretty(&res)? + "\n"))?;
    let se = res.p_tilde.std_error.map_or("n/a".to_string(), |s| format!("{s:.2e}"));
    let outputs = close(run)?;
    Ok(format!(
        "finch: t(X) = {:.1}; p_tilde = {:.3e} (se {se}); p_tilde_star = {:.3e}; ess {:.0} -> {outputs}",
        res.t_obs, res.p_tilde.estimate, res.p_tilde_star.estimate, res.ess
    ))
}

pub fn ppvalidity(ctx: &Context) -> Result<String> {
    let kv = &ctx.settings;
    check_keys(kv, &["n", "replications", "delta", "b", "rate", "alphas", "k"])?;
    let d = PpValidityConfig::default();
    let cfg = PpValidityConfig {
        delta: kv.value("delta", d.delta)?,
        b: kv.value("b", d.b)?,
        rate: kv.value("rate", d.rate)?,
        n: kv.value("n", d.n)?,
        replications: kv.value("replications", 10_000)?,
        alphas: kv.list("alphas", d.alphas)?,
        k: kv.value("k", d.k)?,
    };
    let mut run = open(ctx, "ppvalidity", cfg.replications, vec![cfg.n])?;
    let res = run_pointprocess_validity(&cfg, ctx.seed)?;
    run.write("validity.csv", &res.to_csv_string()?)?;
    let verdict = if res.corrected_valid() { "valid" } else { "violation" };
    let outputs = close(run)?;
    Ok(format!("ppvalidity: p_hat_star {verdict} at every level over {} replications -> {outputs}", cfg.replications))
}

/// Random instances with ties, zero weights and infinite statistics, checked in exact arithmetic.
pub fn lemma1(ctx: &Context, instances: u64) -> Result<String> {
    check_keys(&ctx.settings, &[])?;
    let mut run = open(ctx, "lemma1", instances, Vec::new())?;
    let mut rng = stream(ctx.seed, 0);
    let specials = [f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0];
    let mut hold = 0u64;
    for _ in 0..instances {
        let len = rng.random_range(1..=20usize);
        let den = rng.random_range(1..=12i64);
        let t: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.3) {
                    specials[rng.random_range(0..specials.len())]
                } else {
                    f64::from(rng.random_range(-3..3))
                }
            })
            .collect();
        let w: Vec<Ratio<i64>> = (0..len)
            .map(|_| {
                if rng.random_bool(0.2) {
                    Ratio::from_integer(0)
                } else {
                    Ratio::new(rng.random_range(0..=2 * den), den * len as i64)
                }
            })
            .collect();
        let alpha = Ratio::new(rng.random_range(0..=2 * den), den);
        let (lhs, holds) = lemma1_check(&t, &w, alpha)?;
        if holds && lhs <= alpha {
            hold += 1;
        }
    }
    run.write("lemma1.csv", &format!("instances,hold\n{instances},{hold}\n"))?;
    let outputs = close(run)?;
    let line = format!("{hold}/{instances} hold -> {outputs}");
    if hold == instances {
        Ok(line)
    } else {
        Err(Error::InvalidValue(line))
    }
}
