//! The five experiments behind the subcommands.

use crate::env::Environment;
use crate::error::Result;
use crate::limit::{closed_form_r, estimate_limit_aging, sample_z, LimitParams};
use crate::stats::{ks_two_sample, Streams};
use crate::trap::{
    estimate_aging, intersection_ratio, quenched_aging_variance, sample_rescaled_energy, AgingCurve, AgingRequest,
    EnvChoice, EnvFamily, Marks, PiWindow,
};
use crate::walk::{estimate_rho, geometric_grid, ScalingBundle};

use super::config::{ExperimentConfig, Kind};
use super::output::{Cell, Table, AGING_COLUMNS};
use super::svg::{aging_plot, PlotPoint};

// Child stream labels, one per sub-experiment.
const BUNDLE: u64 = 1;
const AGING: u64 = 2;
const LIMIT: u64 = 3;
const MARGINAL: u64 = 4;
const INTERSECTION: u64 = 5;
const RHO: u64 = 6;
const QUENCHED: u64 = 7;

pub struct Outcome {
    pub tables: Vec<Table>,
    /// `(file name, contents)` of the plots.
    pub plots: Vec<(String, String)>,
    pub replicas: u64,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let streams = Streams::new(cfg.seed);
    match cfg.kind {
        Kind::Aging => aging(cfg, &streams),
        Kind::LimitAging => limit_aging(cfg, &streams),
        Kind::ScalingTable => scaling_table(cfg, &streams),
        Kind::Diagnose => diagnose(cfg, &streams),
        Kind::Marginal => marginal(cfg, &streams),
    }
}

fn bundle(cfg: &ExperimentConfig, streams: &Streams) -> Result<ScalingBundle> {
    ScalingBundle::estimate(&cfg.walk, cfg.law, &geometric_grid(cfg.scaling_n_max), cfg.scaling_m, &streams.child(BUNDLE))
}

/// The configured times: `t_grid` if given, otherwise `nu_n` for `n` in `t_n_grid`.
fn times(cfg: &ExperimentConfig, b: &ScalingBundle) -> Result<Vec<f64>> {
    if !cfg.t_grid.is_empty() {
        return Ok(cfg.t_grid.clone());
    }
    cfg.t_n_grid.iter().map(|&n| b.nu_of(n)).collect()
}

fn epsilons(cfg: &ExperimentConfig, b: &ScalingBundle) -> Result<Vec<f64>> {
    if !cfg.eps_grid.is_empty() {
        return Ok(cfg.eps_grid.clone());
    }
    cfg.eps_n_grid.iter().map(|&n| Ok(1.0 / b.nu_of(n)?)).collect()
}

fn aging_table(name: &str, alpha: f64, walk: &str, curves: &[AgingCurve]) -> Table {
    let mut t = Table::new(name, &AGING_COLUMNS);
    for c in curves {
        for p in &c.points {
            t.push(vec![
                c.mode.as_str().into(),
                alpha.into(),
                walk.into(),
                p.theta.into(),
                p.t.into(),
                p.estimate.into(),
                p.ci_lo.into(),
                p.ci_hi.into(),
                p.n_used.into(),
                p.m.into(),
            ]);
        }
    }
    t
}

fn plots(prefix: &str, alpha: f64, walk: &str, curves: &[AgingCurve]) -> Vec<(String, String)> {
    curves
        .iter()
        .map(|c| {
            let mut ts: Vec<f64> = c.points.iter().map(|p| p.t).collect();
            ts.dedup();
            let pts: Vec<PlotPoint> = c
                .points
                .iter()
                .map(|p| PlotPoint {
                    theta: p.theta,
                    estimate: p.estimate,
                    lo: p.ci_lo,
                    hi: p.ci_hi,
                    series: ts.iter().position(|&t| t == p.t).unwrap_or(0),
                })
                .collect();
            let labels = ts.iter().map(|t| format!("t = {t:.3e}")).collect::<Vec<_>>();
            let title = format!("{} aging, {walk}, alpha = {alpha}", c.mode);
            (
                format!("{prefix}_{}_alpha{alpha}.svg", c.mode.as_str()),
                aging_plot(&title, alpha, &pts, &labels),
            )
        })
        .collect()
}

fn aging(cfg: &ExperimentConfig, streams: &Streams) -> Result<Outcome> {
    let b = bundle(cfg, streams)?;
    let ts = times(cfg, &b)?;
    let req = AgingRequest {
        modes: cfg.modes.clone(),
        thetas: cfg.theta_grid.clone(),
        ts,
        pi_window: PiWindow::Scaled(&b),
        marks: Marks::Exponential,
        m: cfg.m,
    };
    let quenched_env;
    let env = match cfg.env_seed {
        Some(seed) => {
            quenched_env = Environment::new(cfg.law, seed, cfg.walk.dim())?;
            EnvChoice::Quenched(&quenched_env)
        }
        None => EnvChoice::Annealed(cfg.law),
    };
    let curves = estimate_aging(&cfg.walk, env, &req, &streams.child(AGING))?;
    let walk = cfg.walk.to_string();
    Ok(Outcome {
        tables: vec![aging_table("aging", cfg.law.alpha(), &walk, &curves)],
        plots: plots("aging", cfg.law.alpha(), &walk, &curves),
        replicas: cfg.scaling_m + cfg.m,
    })
}

fn limit_params(cfg: &ExperimentConfig) -> Result<LimitParams> {
    let mut p = LimitParams::new(cfg.law.alpha(), cfg.delta0)?;
    p.small = cfg.small_jumps;
    Ok(p)
}

fn limit_aging(cfg: &ExperimentConfig, streams: &Streams) -> Result<Outcome> {
    let curves = estimate_limit_aging(limit_params(cfg)?, &cfg.modes, &cfg.theta_grid, cfg.m, &streams.child(LIMIT))?;
    let alpha = cfg.law.alpha();
    let mut table = aging_table("limit_aging", alpha, "limit", &curves);
    table.columns.push("closed_form_R");
    for row in table.rows.iter_mut() {
        let Cell::Float(theta) = row[3] else { unreachable!() };
        row.push(closed_form_r(theta, alpha)?.into());
    }
    Ok(Outcome {
        tables: vec![table],
        plots: plots("limit_aging", alpha, "limit", &curves),
        replicas: cfg.m,
    })
}

fn scaling_table(cfg: &ExperimentConfig, streams: &Streams) -> Result<Outcome> {
    let b = bundle(cfg, streams)?;
    let mut rows = Table::new("scaling", &["n", "r_raw", "r", "r_se", "rho", "rho_se", "u", "u_se", "s", "v", "nu"]);
    for r in b.rows() {
        rows.push(vec![
            r.n.into(),
            r.r_raw.into(),
            r.r.into(),
            r.r_se.into(),
            r.rho.into(),
            r.rho_se.into(),
            r.u.into(),
            r.u_se.into(),
            r.s.into(),
            r.v.into(),
            r.nu.into(),
        ]);
    }
    let mut eps_rows = Table::new("scaling_eps", &["eps", "n", "a", "a_over_eps"]);
    for eps in epsilons(cfg, &b)? {
        let a = b.a(eps)?;
        eps_rows.push(vec![eps.into(), b.n_of(1.0 / eps)?.into(), a.into(), (a / eps).into()]);
    }
    Ok(Outcome {
        tables: vec![rows, eps_rows],
        plots: vec![],
        replicas: cfg.scaling_m,
    })
}

fn diagnose(cfg: &ExperimentConfig, streams: &Streams) -> Result<Outcome> {
    let mut tables = Vec::new();
    let mut replicas = 0;
    let mut inter = Table::new("intersection", &["n", "intersection", "rho", "ratio", "ratio_se", "M"]);
    for p in intersection_ratio(&cfg.walk, &cfg.n_grid, cfg.m, &streams.child(INTERSECTION))? {
        inter.push(vec![p.n.into(), p.intersection.into(), p.rho.into(), p.ratio.into(), p.ratio_se.into(), cfg.m.into()]);
    }
    replicas += cfg.m;
    tables.push(inter);
    let mut rho = Table::new(
        "rho_identity",
        &["n", "via_returns", "via_returns_se", "via_range", "via_range_se", "within_3se"],
    );
    for e in estimate_rho(&cfg.walk, &cfg.n_grid, cfg.m, &streams.child(RHO))? {
        rho.push(vec![
            e.n.into(),
            e.via_returns.value.into(),
            e.via_returns.se.into(),
            e.via_range.value.into(),
            e.via_range.se.into(),
            e.agrees_within(3.0).into(),
        ]);
    }
    replicas += cfg.m;
    tables.push(rho);
    if cfg.env_count >= 2 {
        let b = bundle(cfg, streams)?;
        let ts = times(cfg, &b)?;
        let mode = cfg.modes[0];
        let mut q = Table::new("quenched", &["mode", "theta", "t", "across_variance", "noise_floor", "excess", "excess_se"]);
        for p in quenched_aging_variance(
            &cfg.walk,
            EnvFamily::Law(cfg.law),
            PiWindow::Scaled(&b),
            mode,
            cfg.quenched_theta,
            &ts,
            cfg.env_count,
            cfg.m_per_env,
            &streams.child(QUENCHED),
        )? {
            q.push(vec![
                mode.as_str().into(),
                cfg.quenched_theta.into(),
                p.t.into(),
                p.across_variance.into(),
                p.noise_floor.into(),
                p.excess.into(),
                p.excess_se.into(),
            ]);
        }
        replicas += cfg.scaling_m + cfg.env_count * cfg.m_per_env;
        tables.push(q);
    }
    Ok(Outcome {
        tables,
        plots: vec![],
        replicas,
    })
}

fn marginal(cfg: &ExperimentConfig, streams: &Streams) -> Result<Outcome> {
    let b = bundle(cfg, streams)?;
    let z = sample_z(limit_params(cfg)?, cfg.marginal_t, cfg.m, &streams.child(LIMIT))?;
    let mut t = Table::new("marginal", &["eps", "n", "a", "t", "ks", "M"]);
    for eps in epsilons(cfg, &b)? {
        let y = sample_rescaled_energy(&cfg.walk, cfg.law, &b, eps, cfg.marginal_t, cfg.m, &streams.child(MARGINAL))?;
        t.push(vec![
            eps.into(),
            b.n_of(1.0 / eps)?.into(),
            b.a(eps)?.into(),
            cfg.marginal_t.into(),
            ks_two_sample(&y, &z)?.into(),
            cfg.m.into(),
        ]);
    }
    Ok(Outcome {
        tables: vec![t],
        plots: vec![],
        replicas: cfg.scaling_m + 2 * cfg.m,
    })
}
