//! Experiment results and their CSV form.
//!
//! Every experiment produces per-level rows, fitted slopes and threshold
//! checks.  The CSV has a fixed header; `#` lines before it echo the config.
//! Numbers are written with a fixed exponent format so reruns are
//! byte-identical.

use std::fmt;
use std::io::{self, Write};

/// Acceptance threshold attached to a measured value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|value − target| ≤ tol`.
    Within { target: f64, tol: f64 },
    /// `value ≥ bound`.
    AtLeast(f64),
    /// `value ≤ bound`.
    AtMost(f64),
}

impl Criterion {
    pub fn holds(&self, value: f64) -> bool {
        match *self {
            Criterion::Within { target, tol } => (value - target).abs() <= tol,
            Criterion::AtLeast(bound) => value >= bound,
            Criterion::AtMost(bound) => value <= bound,
        }
    }

    fn columns(&self) -> (String, String) {
        match *self {
            Criterion::Within { target, tol } => (num(target), format!("+-{}", num(tol))),
            Criterion::AtLeast(bound) => (num(bound), "min".into()),
            Criterion::AtMost(bound) => (num(bound), "max".into()),
        }
    }
}

/// Plain notation for moderate magnitudes, exponent notation otherwise.
fn short(x: f64) -> String {
    if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Criterion::Within { target, tol } => write!(f, "{} ± {}", short(target), short(tol)),
            Criterion::AtLeast(bound) => write!(f, "≥ {}", short(bound)),
            Criterion::AtMost(bound) => write!(f, "≤ {}", short(bound)),
        }
    }
}

/// One measurement on one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family: String,
    pub quantity: String,
    pub level: usize,
    pub h: f64,
    pub theta_min: f64,
    pub iterations: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryKind {
    Slope,
    Check,
}

/// A fitted slope or a single checked value.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub kind: SummaryKind,
    pub family: String,
    pub quantity: String,
    pub value: f64,
    pub criterion: Option<Criterion>,
}

impl Summary {
    pub fn pass(&self) -> bool {
        self.criterion.is_none_or(|c| c.holds(self.value))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summaries: Vec<Summary>,
}

impl Report {
    pub fn check(&mut self, family: &str, quantity: &str, value: f64, criterion: Criterion) {
        self.summaries.push(Summary {
            kind: SummaryKind::Check,
            family: family.into(),
            quantity: quantity.into(),
            value,
            criterion: Some(criterion),
        });
    }

    pub fn slope(
        &mut self,
        family: &str,
        quantity: &str,
        value: f64,
        criterion: Option<Criterion>,
    ) {
        self.summaries.push(Summary {
            kind: SummaryKind::Slope,
            family: family.into(),
            quantity: quantity.into(),
            value,
            criterion,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.summaries.extend(other.summaries);
    }

    /// `(h, value)` pairs of one quantity, in level order.
    pub fn series(&self, family: &str, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.family == family && r.quantity == quantity)
            .map(|r| (r.h, r.value))
            .collect()
    }

    pub fn find(&self, family: &str, quantity: &str) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.family == family && s.quantity == quantity)
    }

    pub fn passed(&self) -> bool {
        self.summaries.iter().all(Summary::pass)
    }

    pub fn failures(&self) -> Vec<&Summary> {
        self.summaries.iter().filter(|s| !s.pass()).collect()
    }

    /// Writes `#` comment lines, the header, rows and summaries.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(HEADER)?;
        for r in &self.rows {
            csv.write_record([
                "row",
                &r.family,
                &r.quantity,
                &r.level.to_string(),
                &num(r.h),
                &num(r.theta_min),
                &r.iterations.to_string(),
                &num(r.value),
                "",
                "",
                "",
            ])?;
        }
        for s in &self.summaries {
            let (target, tol) = s.criterion.map(|c| c.columns()).unwrap_or_default();
            let kind = match s.kind {
                SummaryKind::Slope => "slope",
                SummaryKind::Check => "check",
            };
            let pass = match s.criterion {
                Some(_) => s.pass().to_string(),
                None => String::new(),
            };
            csv.write_record([
                kind,
                &s.family,
                &s.quantity,
                "",
                "",
                "",
                "",
                &num(s.value),
                &target,
                &tol,
                &pass,
            ])?;
        }
        csv.flush()
    }
}

pub const HEADER: [&str; 11] = [
    "kind",
    "family",
    "quantity",
    "level",
    "h",
    "theta_min",
    "iterations",
    "value",
    "target",
    "tolerance",
    "pass",
];

fn num(x: f64) -> String {
    format!("{x:.12e}")
}
