//! `selfcheck`: the invariant suite at reduced sample counts.

use std::f64::consts::PI;

use asianhedge::density::DensityConfig;
use asianhedge::hedging::{hedge_batch, leland_pool, lemma3_study, study_paths};
use asianhedge::pricing::{g_dy, g_dy_density, g_value, GPoint, McConfig};
use asianhedge::{abs_increment_moment, Exec, MarketParams, RngSeed};

use crate::artifact::Artifacts;
use crate::check::Report;
use crate::commands::{hedge_config, schedule};
use crate::config::RunConfig;
use crate::error::CliError;

/// Points on the 1/8 time lattice, where the bump and density routes share
/// a discretization.
const DERIVATIVE_POINTS: [(f64, f64, f64); 3] = [(0.0, 0.0, 100.0), (0.25, 20.0, 90.0), (0.5, 50.0, 110.0)];

pub fn selfcheck(cfg: &RunConfig, art: &Artifacts) -> Result<bool, CliError> {
    let mut report = Report::new();
    for k in 0..cfg.selfcheck.seeds {
        let run = RunConfig {
            seed: cfg.seed.wrapping_add(k),
            ..cfg.clone()
        };
        run_once(&run, &mut report)?;
    }
    let path = art.emit_csv("selfcheck", &[], &report.to_csv()?)?;
    println!("wrote {}", path.display());
    Ok(report.all_pass())
}

fn run_once(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let s = &cfg.selfcheck;
    let group = format!("seed {}", cfg.seed);
    let seed = RngSeed::new(cfg.seed);
    let root = (2.0 / PI).sqrt();

    let m = abs_increment_moment(s.moment_samples, seed)?;
    report.verdict(
        &group,
        "abs increment moment",
        format!("{:.5}", m.value),
        format!("{root:.5} +/- 0.5%"),
        (m.value / root - 1.0).abs() <= 0.005,
    );

    let mc = McConfig::default().with_seed(cfg.seed);
    let mut exact = true;
    for x in [0.0, 50.0, 99.0, 100.0, 150.0] {
        for y in [0.5, 1.0, 100.0, 250.0] {
            let g = g_value(&GPoint::new(1.0, x, y, 100.0, 0.3), &mc)?;
            exact &= g.value.to_bits() == (x - 100.0f64).max(0.0).to_bits() && g.samples == 0;
        }
    }
    report.verdict(&group, "boundary value at maturity", exact.to_string(), "bit-exact, unsampled", exact);

    let params = MarketParams::new(0.1, 100.0, 100.0)?;
    let (lhs, rhs) = lemma3_study(&params, s.lemma_n, s.lemma_paths, seed.derive(0x1E3), Exec::Parallel)?;
    let target = root * 0.1 * 100.0;
    report.verdict(
        &group,
        "volume limit with unit weights",
        format!("lhs {:.4}, rhs {:.4}", lhs.mean(), rhs.mean()),
        format!("lhs {target:.3} +/- 2%"),
        (lhs.mean() / target - 1.0).abs() <= 0.02,
    );

    let n = s.compensator_n;
    let sched = schedule(cfg, 0.05, 0.5, n)?;
    let hcfg = hedge_config(cfg, s.pool_samples);
    let pool = leland_pool(&params, &sched, &hcfg)?;
    let paths = study_paths(&params, n, s.compensator_paths, &hcfg)?;
    let batch = hedge_batch(&paths, &params, &sched, &pool)?;
    let num: f64 = batch.compensators.iter().map(|c| c.lhs).sum();
    let den: f64 = batch.compensators.iter().map(|c| c.rhs).sum();
    let ratio = num / den;
    report.verdict(
        &group,
        "cost compensator ratio",
        format!("{ratio:.4}"),
        "[0.8, 1.2]",
        (0.8..=1.2).contains(&ratio),
    );

    let dc = DensityConfig::default()
        .with_samples(s.derivative_samples)
        .with_seed(seed.derive(0xD1));
    for (t, x, y) in DERIVATIVE_POINTS {
        let p = GPoint::new(t, x, y, 100.0, 0.5);
        let inner = ((1.0 - t) * dc.nodes as f64).round() as usize;
        let bump = g_dy(
            &p,
            &McConfig::default()
                .with_samples(5 * s.derivative_samples)
                .with_n_inner(inner)
                .with_seed(seed.derive(0xD2)),
        )?;
        let dens = g_dy_density(&p, &dc)?;
        let band = 3.0 * (bump.se * bump.se + dens.se * dens.se).sqrt();
        report.verdict(
            &group,
            format!("dG/dy two routes at t {t}, x {x}, y {y}"),
            format!("bump {:.5}, density {:.5}", bump.value, dens.value),
            format!("within {band:.5}"),
            (bump.value - dens.value).abs() <= band,
        );
    }
    Ok(())
}
