use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_asianhedge");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn without_timestamp(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# generated:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Data rows (non-comment, non-header) of an emitted CSV.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn price_ladder_rows_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["price", "--sigma-list", "0.01,0.1,1", "--samples", "4000", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("price.csv");
    let text = fs::read_to_string(&csv).unwrap();
    for key in ["# table: price", "# config_sha256: ", "# seed: 1", "# git_revision: ", "# generated: "] {
        assert!(text.contains(key), "missing {key}");
    }
    assert!(!text.contains('\r'));
    let r = rows(&csv);
    assert_eq!(r.len(), 3);
    assert_eq!(r[0][0], "0.01");
    assert!(dir.path().join("price.dat").exists());
}

#[test]
fn zero_strike_prices_the_spot() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["price", "--strike", "0", "--sigma-list", "0.3", "--samples", "2000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = rows(&dir.path().join("price.csv"));
    let c0: f64 = r[0][4].parse().unwrap();
    let se: f64 = r[0][5].parse().unwrap();
    assert!((c0 - 100.0).abs() <= 3.0 * se + 1e-9, "{c0} {se}");
}

#[test]
fn same_seed_same_bytes_and_thread_count_does_not_matter() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, threads) in dirs.iter().zip(["1", "1", "3"]) {
        let o = run(&[
            "price",
            "--sigma-list",
            "0.2,0.7",
            "--samples",
            "3000",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    let a = without_timestamp(&dirs[0].path().join("price.csv"));
    assert_eq!(a, without_timestamp(&dirs[1].path().join("price.csv")));
    assert_eq!(a, without_timestamp(&dirs[2].path().join("price.csv")));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 5\n[price]\nstrike = 90.0\nsamples = 1000\nsigma_list = [0.2]\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--print-config", "price", "--strike", "80"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 5"));
    assert!(text.contains("strike = 80.0"));
    assert!(text.contains("samples = 1000"));
}

#[test]
fn printed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--print-config", "--seed", "3", "hedge", "--n-list", "4,8"]);
    let printed = String::from_utf8(o.stdout).unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, &printed).unwrap();
    let again = run(&["--config", cfg.to_str().unwrap(), "--print-config", "hedge"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), printed);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["price", "--sigma-list=-1", "--out", out])), 2);
    assert_eq!(code(&run(&["hedge", "--n-list", "20,10", "--out", out])), 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    assert_eq!(code(&run(&["--config", bad.to_str().unwrap(), "price", "--out", out])), 2);
    assert_eq!(code(&run(&["--config", "/nonexistent/run.toml", "price"])), 2);
}

#[test]
fn sample_quality_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "density",
        "--samples",
        "2",
        "--points",
        "8",
        "--direct-samples",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn hedge_without_costs_reports_zero_cost() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "hedge",
        "--kappa0",
        "0",
        "--n-list",
        "5,10",
        "--paths",
        "20",
        "--pool-samples",
        "300",
        "--dump-paths",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("hedge.csv"));
    assert_eq!(r.len(), 2);
    for row in &r {
        assert_eq!(row[4], "0");
    }
    assert_eq!(rows(&dir.path().join("hedge_paths.csv")).len(), 40);
}

#[test]
fn density_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "density",
        "--samples",
        "3000",
        "--direct-samples",
        "3000",
        "--points",
        "60",
        "--derivatives",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 1));
    let header = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(header.contains("v,z,q,se,q_z,q_v"));
    assert_eq!(rows(&dir.path().join("density.csv")).len(), 60);
    assert_eq!(rows(&dir.path().join("density_report.csv")).len(), 1);
}
