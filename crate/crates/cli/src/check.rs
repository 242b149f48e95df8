//! PASS/FAIL bookkeeping for command summaries.

use crate::artifact::Table;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Reported without a verdict.
    Info,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub value: String,
    pub target: String,
    pub status: Status,
}

#[derive(Debug, Default)]
pub struct Report {
    checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, group: &str, name: impl Into<String>, value: impl Into<String>, target: impl Into<String>, status: Status) {
        let c = Check {
            group: group.to_string(),
            name: name.into(),
            value: value.into(),
            target: target.into(),
            status,
        };
        println!("{} {} {}: {} (target {})", c.status.label(), c.group, c.name, c.value, c.target);
        self.checks.push(c);
    }

    pub fn verdict(&mut self, group: &str, name: impl Into<String>, value: impl Into<String>, target: impl Into<String>, ok: bool) {
        self.add(group, name, value, target, Status::from_bool(ok));
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut t = Table::new(&["group", "check", "value", "target", "status"]);
        for c in &self.checks {
            t.push(vec![
                c.group.clone(),
                c.name.clone(),
                c.value.clone(),
                c.target.clone(),
                c.status.label().to_string(),
            ]);
        }
        t.to_csv()
    }
}

/// `|value - target| <= max(rel * |target|, 3 se)`.
pub fn within_rel_or_3se(value: f64, se: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= (rel * target.abs()).max(3.0 * se)
}

pub fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}
