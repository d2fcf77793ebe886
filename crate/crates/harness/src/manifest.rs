use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// One asserted check. Verdicts are empirical: measured values against
/// thresholds, not proofs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    /// None when the quantity came out non-finite.
    pub measured: Option<f64>,
    /// Human-readable pass condition, e.g. "<= 1e-6".
    pub expect: String,
    pub passed: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Criterion {
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured: finite(measured), expect: format!("<= {limit:e}"), passed: measured <= limit }
    }

    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured: finite(measured), expect: format!(">= {limit:e}"), passed: measured >= limit }
    }

    pub fn in_range(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured: finite(measured),
            expect: format!("in [{lo}, {hi}]"),
            passed: measured >= lo && measured <= hi,
        }
    }

    /// |measured / target - 1| <= rel
    pub fn relative(name: &str, measured: f64, target: f64, rel: f64) -> Self {
        Self {
            name: name.into(),
            measured: finite(measured),
            expect: format!("{target} within {rel:e} relative"),
            passed: (measured / target - 1.0).abs() <= rel,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), measured: Some(if ok { 1.0 } else { 0.0 }), expect: "true".into(), passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand that produced the run.
    pub command: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    /// Always "empirical": verdicts are measured, not proved.
    pub verdict_kind: String,
    pub criteria: Vec<Criterion>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    /// Set when a module error cut the run short.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            wall_time_s: 0.0,
            verdict_kind: "empirical".into(),
            criteria: Vec::new(),
            artifacts: Vec::new(),
            error: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.criteria.is_empty() && self.criteria.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    /// Criteria only: the part that replay must reproduce bit for bit.
    pub fn numerics(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    #[test]
    fn json_round_trip() {
        let mut m = RunManifest::new("scenario", ExperimentConfig::preset(Scenario::Theorem2));
        m.criteria.push(Criterion::at_most("sup_h", 3e-7, 1e-6));
        m.criteria.push(Criterion::at_least("rate", f64::NAN, 3.0));
        m.error = Some("boom".into());
        let back = RunManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(!back.passed());
        assert_eq!(back.criteria[1].measured, None);
    }

    #[test]
    fn criteria_helpers() {
        assert!(Criterion::relative("r", 10.4, 10.0, 0.05).passed);
        assert!(!Criterion::relative("r", 9.4, 10.0, 0.05).passed);
        assert!(Criterion::in_range("o", 2.5, 2.2, 3.2).passed);
        assert!(!Criterion::at_most("x", f64::NAN, 1.0).passed);
    }
}
