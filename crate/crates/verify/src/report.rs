//! Suite reports: JSON via serde and a plain-text table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tractor_core::jets::Rational;
use tractor_core::riemann::FieldJet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    /// The residual vanished identically to the available jet order.
    ExactZero,
    /// A computed rational that matched its expected value.
    Value { value: String },
    /// The check failed; `residual` lists every nonzero component or the
    /// mismatching values.
    Fail { residual: Vec<String> },
    /// The check cannot run on this input; does not count as a failure.
    Unavailable { reason: String },
}

impl Status {
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Fail { .. })
    }

    fn label(&self) -> String {
        match self {
            Status::ExactZero => "exact-zero".into(),
            Status::Value { value } => format!("value {value}"),
            Status::Fail { residual } => format!("FAIL ({} entries)", residual.len()),
            Status::Unavailable { reason } => format!("unavailable: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Stable machine name, e.g. `pk.product.k2`.
    pub check: String,
    /// The identity being checked, in words.
    pub identity: String,
    pub point_index: usize,
    /// Jet order of the residual that was compared.
    pub residual_order: Option<usize>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub scene: String,
    pub dimension: usize,
    pub seed: u64,
    pub order: usize,
    pub k: Option<usize>,
    /// Sample points as `p/q` strings.
    pub points: Vec<Vec<String>>,
    pub elapsed_ms: u64,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.status.is_failure())
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status.is_failure()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The human-readable table. It carries the same fields as the JSON.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "suite {}  scene {}  n={}  seed {}  order {}{}  ({} ms)",
            self.suite,
            self.scene,
            self.dimension,
            self.seed,
            self.order,
            self.k.map(|k| format!("  k={k}")).unwrap_or_default(),
            self.elapsed_ms
        );
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "  point {i}: ({})", p.join(", "));
        }
        let width = self
            .checks
            .iter()
            .map(|c| c.check.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            out,
            "  {:<5}  {:<width$}  {:<5}  status",
            "point", "check", "order"
        );
        for c in &self.checks {
            let order = c
                .residual_order
                .map(|o| o.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {:<5}  {:<width$}  {:<5}  {}  [{}]",
                c.point_index,
                c.check,
                order,
                c.status.label(),
                c.identity
            );
            if let Status::Fail { residual } = &c.status {
                for r in residual {
                    let _ = writeln!(out, "         {r}");
                }
            }
        }
        let _ = writeln!(
            out,
            "{}: {} checks, {} failed",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.failures()
        );
        out
    }
}

/// Every nonzero component of a residual, as `index: jet`.
pub fn residual_lines(f: &FieldJet) -> Vec<String> {
    f.comps()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(off, c)| format!("{:?}: {c}", f.multi_index(off)))
        .collect()
}

pub fn point_strings(p: &[Rational]) -> Vec<String> {
    p.iter().map(ToString::to_string).collect()
}
