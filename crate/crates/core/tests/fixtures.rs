//! Checks against values computed by `fixtures/reference.py`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use asianhedge::pricing::{dy_bump, dy_on, EtaSet, GPoint, PayoffForm};
use asianhedge::{asian_payoff, gbm_path, MarketParams, WienerPath};

const SIGMA: f64 = 0.3;
const S0: f64 = 100.0;
const STRIKE: f64 = 100.0;

fn read(name: &str) -> Vec<csv::StringRecord> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    csv::Reader::from_path(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn running_integral_and_payoff_match_reference() {
    let w: Vec<f64> = read("payoff_path.csv").iter().map(|r| num(r, 1)).collect();
    let path = gbm_path(&MarketParams::new(SIGMA, S0, STRIKE).unwrap(), &WienerPath::from_values(w).unwrap());
    for r in read("payoff_reference.csv") {
        let (strike, xi, payoff) = (num(&r, 2), num(&r, 3), num(&r, 4));
        let got = *path.running_integral().last().unwrap();
        assert!(close(got, xi, 1e-12), "xi {got} vs {xi}");
        let pay = asian_payoff(&path, strike);
        assert!(close(pay, payoff, 1e-12), "K = {strike}: {pay} vs {payoff}");
    }
}

#[test]
fn forward_bump_delta_matches_reference() {
    let mut etas: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in read("gamma_eta.csv") {
        etas.entry(r[0].parse().unwrap()).or_default().push(num(&r, 1));
    }
    let rows = read("gamma_reference.csv");
    let w: Vec<f64> = rows.iter().map(|r| num(r, 2)).chain([0.0]).collect();
    // the terminal value never enters x or y before t = 1
    let path = gbm_path(&MarketParams::new(SIGMA, S0, STRIKE).unwrap(), &WienerPath::from_values(w).unwrap());
    for r in &rows {
        let j: usize = r[0].parse().unwrap();
        let (t, x, y, gamma, se) = (num(r, 1), num(r, 3), num(r, 4), num(r, 5), num(r, 6));
        assert!(close(path.running_integral()[j], x, 1e-12), "x at {j}");
        assert!(close(path.prices()[j], y, 1e-12), "y at {j}");

        let set = EtaSet::from_samples(SIGMA, 1.0 - t, etas.remove(&j).unwrap());
        let direct = set.dy(x, y, STRIKE, dy_bump(y), PayoffForm::Direct);
        assert!((direct.value - gamma).abs() <= 1e-8, "j = {j}: {} vs {gamma}", direct.value);

        let parity = dy_on(&set, &GPoint::new(t, x, y, STRIKE, SIGMA), PayoffForm::Parity);
        assert!((parity.value - gamma).abs() <= 3.0 * se + 1e-12, "j = {j}: {} vs {gamma} se {se}", parity.value);
    }
}
