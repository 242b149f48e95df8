//! Run configuration: TOML file, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use asianhedge::pricing::PayoffForm;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Sample count used by the paper for pricing and density runs.
pub const PAPER_SAMPLES: usize = 500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; not part of the fingerprint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory; not part of the fingerprint.
    pub out: PathBuf,
    pub paper_scale: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub sabotage: bool,
    pub price: PriceSection,
    pub hedge: HedgeSection,
    pub density: DensitySection,
    pub reproduce: ReproduceSection,
    pub selfcheck: SelfcheckSection,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: None,
            out: PathBuf::from("out"),
            paper_scale: false,
            sabotage: false,
            price: PriceSection::default(),
            hedge: HedgeSection::default(),
            density: DensitySection::default(),
            reproduce: ReproduceSection::default(),
            selfcheck: SelfcheckSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    #[default]
    Parity,
    Direct,
}

impl From<Form> for PayoffForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Parity => PayoffForm::Parity,
            Form::Direct => PayoffForm::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    pub sigma_list: Vec<f64>,
    pub strike: f64,
    pub s0: f64,
    pub samples: usize,
    pub n_inner: usize,
    pub form: Form,
}

impl Default for PriceSection {
    fn default() -> Self {
        Self {
            sigma_list: vec![0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 2.0],
            strike: 100.0,
            s0: 100.0,
            samples: 100_000,
            n_inner: 100,
            form: Form::Parity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HedgeSection {
    pub sigma: f64,
    pub s0: f64,
    pub strike: f64,
    pub kappa0: f64,
    pub alpha: f64,
    pub n_list: Vec<usize>,
    pub paths: usize,
    pub pool_samples: usize,
    pub n_inner: usize,
    pub refine: usize,
    pub dump_paths: bool,
}

impl Default for HedgeSection {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            s0: 100.0,
            strike: 100.0,
            kappa0: 0.05,
            alpha: 0.5,
            n_list: vec![20, 50, 100, 200, 500, 1000],
            paths: 1000,
            pool_samples: 10_000,
            n_inner: 100,
            refine: 1,
            dump_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub sigma: f64,
    pub v: f64,
    pub samples: usize,
    pub nodes: usize,
    pub points: usize,
    pub direct_samples: usize,
    pub derivatives: bool,
    pub max_discard: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            v: 1.0,
            samples: 100_000,
            nodes: 512,
            points: 160,
            direct_samples: 100_000,
            derivatives: false,
            max_discard: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceSection {
    pub hedge_sigmas: Vec<f64>,
    pub cost_sigma: f64,
    pub cost_strike: f64,
    pub cost_kappa0: f64,
    pub cost_alpha: f64,
    pub cost_n_list: Vec<usize>,
    pub terminal_sigma: f64,
    pub terminal_strike: f64,
    pub terminal_n_list: Vec<usize>,
    pub figure_sigma: f64,
    pub figure_n: usize,
}

impl Default for ReproduceSection {
    fn default() -> Self {
        Self {
            hedge_sigmas: vec![0.1, 0.9],
            cost_sigma: 0.05,
            cost_strike: 70.0,
            cost_kappa0: 0.05,
            cost_alpha: 0.0,
            cost_n_list: vec![20, 50, 100, 200, 500, 1000],
            terminal_sigma: 0.1,
            terminal_strike: 50.0,
            terminal_n_list: vec![20, 50, 100, 200, 500, 1000],
            figure_sigma: 0.05,
            figure_n: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfcheckSection {
    pub seeds: u64,
    pub moment_samples: usize,
    pub lemma_n: usize,
    pub lemma_paths: usize,
    pub compensator_n: usize,
    pub compensator_paths: usize,
    pub pool_samples: usize,
    pub derivative_samples: usize,
}

impl Default for SelfcheckSection {
    fn default() -> Self {
        Self {
            seeds: 1,
            moment_samples: 1_000_000,
            lemma_n: 10_000,
            lemma_paths: 200,
            compensator_n: 1000,
            compensator_paths: 200,
            pool_samples: 10_000,
            derivative_samples: 20_000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Raises sample counts to paper scale when requested.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.paper_scale {
            self.price.samples = PAPER_SAMPLES;
            self.density.samples = PAPER_SAMPLES;
            self.density.direct_samples = PAPER_SAMPLES;
        }
        self.validate()?;
        Ok(self)
    }

    /// SHA-256 of the numeric configuration, excluding thread count and
    /// output location.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.out = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        let p = &self.price;
        positive_list("price.sigma_list", &p.sigma_list)?;
        non_negative("price.strike", p.strike)?;
        positive("price.s0", p.s0)?;
        at_least("price.samples", p.samples, 2)?;
        at_least("price.n_inner", p.n_inner, 1)?;

        let h = &self.hedge;
        positive("hedge.sigma", h.sigma)?;
        positive("hedge.s0", h.s0)?;
        non_negative("hedge.strike", h.strike)?;
        non_negative("hedge.kappa0", h.kappa0)?;
        if !(0.0..=1.0).contains(&h.alpha) {
            return Err(CliError::Config(format!("hedge.alpha must lie in [0, 1], got {}", h.alpha)));
        }
        increasing("hedge.n_list", &h.n_list)?;
        at_least("hedge.paths", h.paths, 2)?;
        at_least("hedge.pool_samples", h.pool_samples, 2)?;
        at_least("hedge.n_inner", h.n_inner, 1)?;
        at_least("hedge.refine", h.refine, 1)?;

        let d = &self.density;
        positive("density.sigma", d.sigma)?;
        if !(d.v > 0.0 && d.v <= 1.0) {
            return Err(CliError::Config(format!("density.v must lie in (0, 1], got {}", d.v)));
        }
        at_least("density.samples", d.samples, 2)?;
        at_least("density.nodes", d.nodes, 2)?;
        at_least("density.points", d.points, 8)?;
        at_least("density.direct_samples", d.direct_samples, 2)?;
        if !(0.0..1.0).contains(&d.max_discard) {
            return Err(CliError::Config(format!(
                "density.max_discard must lie in [0, 1), got {}",
                d.max_discard
            )));
        }

        let r = &self.reproduce;
        positive_list("reproduce.hedge_sigmas", &r.hedge_sigmas)?;
        positive("reproduce.cost_sigma", r.cost_sigma)?;
        non_negative("reproduce.cost_strike", r.cost_strike)?;
        non_negative("reproduce.cost_kappa0", r.cost_kappa0)?;
        increasing("reproduce.cost_n_list", &r.cost_n_list)?;
        positive("reproduce.terminal_sigma", r.terminal_sigma)?;
        non_negative("reproduce.terminal_strike", r.terminal_strike)?;
        increasing("reproduce.terminal_n_list", &r.terminal_n_list)?;
        positive("reproduce.figure_sigma", r.figure_sigma)?;
        at_least("reproduce.figure_n", r.figure_n, 1)?;

        let s = &self.selfcheck;
        at_least("selfcheck.seeds", s.seeds as usize, 1)?;
        at_least("selfcheck.moment_samples", s.moment_samples, 2)?;
        at_least("selfcheck.lemma_n", s.lemma_n, 1)?;
        at_least("selfcheck.lemma_paths", s.lemma_paths, 2)?;
        at_least("selfcheck.compensator_n", s.compensator_n, 1)?;
        at_least("selfcheck.compensator_paths", s.compensator_paths, 2)?;
        at_least("selfcheck.pool_samples", s.pool_samples, 2)?;
        at_least("selfcheck.derivative_samples", s.derivative_samples, 2)?;
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<(), CliError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be non-negative, got {x}")))
    }
}

fn positive_list(name: &str, xs: &[f64]) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    xs.iter().try_for_each(|&x| positive(name, x))
}

fn at_least(name: &str, n: usize, min: usize) -> Result<(), CliError> {
    if n >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be at least {min}, got {n}")))
    }
}

fn increasing(name: &str, ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!(
            "{name} must be non-empty, positive and strictly increasing"
        )));
    }
    Ok(())
}
