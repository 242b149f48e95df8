//! `price`, `hedge` and `density`.

use asianhedge::density::{
    bound_diagnostic, default_z_grid, density_derivatives, density_q, direct_eta_samples, two_route_distance,
    DensityConfig,
};
use asianhedge::hedging::{convergence_study, ConvergenceReport, CostSchedule, HedgeConfig};
use asianhedge::pricing::{option_cost, write_price_csv, McConfig, OptionCost};
use asianhedge::{Exec, MarketParams, RngSeed};

use crate::artifact::{capture, Artifacts, Table};
use crate::check::{strictly_decreasing, Report, Status};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn mc_config(cfg: &RunConfig) -> McConfig {
    McConfig::default()
        .with_samples(cfg.price.samples)
        .with_n_inner(cfg.price.n_inner)
        .with_seed(cfg.seed)
        .with_form(cfg.price.form.into())
}

pub fn hedge_config(cfg: &RunConfig, pool_samples: usize) -> HedgeConfig {
    HedgeConfig {
        pool_samples,
        n_inner: cfg.hedge.n_inner,
        refine: cfg.hedge.refine,
        seed: RngSeed::new(cfg.seed),
        exec: Exec::Parallel,
        form: Default::default(),
    }
}

/// Cost schedule honouring the hidden mutation flag.
pub fn schedule(cfg: &RunConfig, kappa0: f64, alpha: f64, n: usize) -> Result<CostSchedule, CliError> {
    let s = CostSchedule::new(kappa0, alpha, n)?;
    Ok(if cfg.sabotage { s.sabotaged() } else { s })
}

pub fn price_ladder(sigmas: &[f64], s0: f64, strike: f64, mc: &McConfig) -> Result<Vec<OptionCost>, CliError> {
    sigmas
        .iter()
        .map(|&sigma| Ok(option_cost(&MarketParams::new(sigma, s0, strike)?, mc)?))
        .collect()
}

pub fn price(cfg: &RunConfig, art: &Artifacts) -> Result<bool, CliError> {
    let p = &cfg.price;
    let rows = price_ladder(&p.sigma_list, p.s0, p.strike, &mc_config(cfg))?;
    for r in &rows {
        println!("sigma {:<6} K {:<6} c0 {:>10.4} se {:.4}", r.sigma, r.strike, r.c0, r.se);
    }
    let path = art.emit("price", &[], &capture(|b| write_price_csv(&rows, b))?)?;
    println!("wrote {}", path.display());
    Ok(true)
}

/// Convergence study at volatility `sigma` with the `hedge` section's other
/// settings.
pub fn hedge_study(cfg: &RunConfig, sigma: f64, keep_records: bool) -> Result<ConvergenceReport, CliError> {
    let h = &cfg.hedge;
    let params = MarketParams::new(sigma, h.s0, h.strike)?;
    let base = schedule(cfg, h.kappa0, h.alpha, 1)?;
    let report = convergence_study(&params, &base, &h.n_list, h.paths, &hedge_config(cfg, h.pool_samples), keep_records)?;
    for r in &report.rows {
        println!(
            "sigma {sigma} n {:>5} mean_err {:>9.5} se {:.5} mean_abs_err {:.5} cost {:.5} ratio {:.4}",
            r.n, r.mean_err, r.se, r.mean_abs_err, r.mean_cost, r.compensator_ratio
        );
    }
    Ok(report)
}

fn study_failures(report: &ConvergenceReport) -> Result<(), CliError> {
    if report.failures.is_empty() {
        return Ok(());
    }
    let msg = report
        .failures
        .iter()
        .map(|(n, e)| format!("n = {n}: {e}"))
        .collect::<Vec<_>>()
        .join("; ");
    Err(CliError::Estimator(msg))
}

pub fn hedge(cfg: &RunConfig, art: &Artifacts) -> Result<bool, CliError> {
    let report = hedge_study(cfg, cfg.hedge.sigma, cfg.hedge.dump_paths)?;
    let path = art.emit("hedge", &[], &capture(|b| report.write_csv(b))?)?;
    println!("wrote {}", path.display());
    if cfg.hedge.dump_paths {
        let path = art.emit("hedge_paths", &[], &capture(|b| report.write_paths_csv(b))?)?;
        println!("wrote {}", path.display());
    }
    let abs: Vec<f64> = report.rows.iter().map(|r| r.mean_abs_err).collect();
    println!(
        "{} mean_abs_err decreasing in n",
        if strictly_decreasing(&abs) { "yes:" } else { "no:" }
    );
    study_failures(&report)?;
    Ok(true)
}

pub fn density(cfg: &RunConfig, art: &Artifacts) -> Result<bool, CliError> {
    let d = &cfg.density;
    let mut dc = DensityConfig::default()
        .with_samples(d.samples)
        .with_nodes(d.nodes)
        .with_seed(cfg.seed);
    dc.max_discard = d.max_discard;
    let z = default_z_grid(d.v, d.sigma, d.points);
    let est = if d.derivatives {
        density_derivatives(d.v, &z, d.sigma, &dc)?
    } else {
        density_q(d.v, &z, d.sigma, &dc)?
    };
    let path = art.emit("density", &[], &capture(|b| est.write_csv(b))?)?;
    println!("wrote {}", path.display());

    let direct = direct_eta_samples(d.v, d.sigma, d.direct_samples, d.nodes, RngSeed::new(cfg.seed), Exec::Parallel)?;
    let ks = two_route_distance(&est, &direct);
    let bound = bound_diagnostic(&est)?;

    let mut t = Table::new(&[
        "mass",
        "mean",
        "samples",
        "discarded",
        "ks_distance",
        "kappa_hat",
        "intercept",
        "r_squared",
        "tail_points",
    ]);
    t.push(vec![
        est.mass().to_string(),
        est.mean().to_string(),
        est.samples.to_string(),
        est.discarded.to_string(),
        ks.to_string(),
        bound.kappa_hat.to_string(),
        bound.intercept.to_string(),
        bound.r_squared.to_string(),
        bound.points.to_string(),
    ]);
    let path = art.emit("density_report", &[], &t.to_csv()?)?;
    println!("wrote {}", path.display());

    let mut report = Report::new();
    density_checks(&mut report, "density", d.v, est.mass(), est.mean(), ks, bound.kappa_hat, bound.r_squared);
    report.add("density", "discarded", est.discarded.to_string(), format!("<= {}", dc.max_discard), Status::Info);
    Ok(report.all_pass())
}

#[allow(clippy::too_many_arguments)]
pub fn density_checks(r: &mut Report, group: &str, v: f64, mass: f64, mean: f64, ks: f64, kappa: f64, r2: f64) {
    r.verdict(group, "mass", format!("{mass:.5}"), "[0.99, 1.01]", (0.99..=1.01).contains(&mass));
    r.verdict(
        group,
        "mean",
        format!("{mean:.5}"),
        format!("[{:.4}, {:.4}]", 0.99 * v, 1.01 * v),
        (0.99 * v..=1.01 * v).contains(&mean),
    );
    r.verdict(group, "ks_distance", format!("{ks:.5}"), "<= 0.02", ks <= 0.02);
    r.verdict(
        group,
        "tail_fit",
        format!("kappa_hat {kappa:.4}, r_squared {r2:.4}"),
        "kappa_hat > 0, r_squared >= 0.9",
        kappa > 0.0 && r2 >= 0.9,
    );
}
