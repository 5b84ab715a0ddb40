use serde::Serialize;
use serde_json::Value;

use crate::qstate::BranchEnsemble;
use crate::ZERO_FLOOR;

/// The ensemble at every stage boundary, input first.
#[derive(Clone, Debug, PartialEq)]
pub struct StageTrace {
    labels: Vec<String>,
    states: Vec<BranchEnsemble>,
}

#[derive(Serialize)]
struct RegisterEntry<'a> {
    name: &'a str,
    width: u32,
}

#[derive(Serialize)]
struct BranchEntry {
    setting: String,
    record: String,
    weight: f64,
    amplitudes: Vec<(String, f64, f64)>,
}

#[derive(Serialize)]
struct StageEntry<'a> {
    stage: usize,
    label: &'a str,
    branches: Vec<BranchEntry>,
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    registers: Vec<RegisterEntry<'a>>,
    setting_register: Option<RegisterEntry<'a>>,
    stages: Vec<StageEntry<'a>>,
}

/// Rounds to 9 decimals so serialized traces are byte-stable.
pub(crate) fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl StageTrace {
    pub(crate) fn new(labels: Vec<String>, states: Vec<BranchEnsemble>) -> Self {
        debug_assert_eq!(labels.len() + 1, states.len());
        Self { labels, states }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[BranchEnsemble] {
        &self.states
    }

    pub fn output(&self) -> &BranchEnsemble {
        self.states.last().expect("trace is never empty")
    }

    /// Per stage and per branch, the nonzero amplitudes as
    /// `(basis label, re, im)`; the input state is stage 0, labelled `input`.
    pub fn to_json(&self) -> Value {
        let layout = self.states[0].layout();
        let doc = TraceDocument {
            registers: layout
                .registers()
                .iter()
                .map(|r| RegisterEntry {
                    name: &r.name,
                    width: r.width,
                })
                .collect(),
            setting_register: layout.setting_register().map(|r| RegisterEntry {
                name: &r.name,
                width: r.width,
            }),
            stages: self
                .states
                .iter()
                .enumerate()
                .map(|(i, e)| StageEntry {
                    stage: i,
                    label: if i == 0 { "input" } else { &self.labels[i - 1] },
                    branches: e
                        .branches()
                        .iter()
                        .map(|b| BranchEntry {
                            setting: b.setting.to_string(),
                            record: b.record.to_string(),
                            weight: round9(b.weight),
                            amplitudes: b
                                .state
                                .amplitudes()
                                .iter()
                                .enumerate()
                                .filter(|(_, z)| z.norm() > ZERO_FLOOR)
                                .map(|(k, z)| (layout.label(k), round9(z.re), round9(z.im)))
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("trace serializes")
    }
}
