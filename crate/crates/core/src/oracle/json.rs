use serde::{Deserialize, Serialize};

use super::{schema, Family, OracleError, OracleProblem, Setting};
use crate::qstate::BitString;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDocument {
    name: String,
    arg_bits: u32,
    out_bits: u32,
    family: Family,
    settings: Vec<SettingDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingDocument {
    id: String,
    table: Vec<String>,
    solution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_outcome: Option<String>,
}

fn parse_field(text: &str, path: String) -> Result<BitString, OracleError> {
    BitString::parse(text).map_err(|e| schema(path, e.to_string()))
}

/// Parses and validates a problem document.
pub fn load_problem(document: &str) -> Result<OracleProblem, OracleError> {
    let doc: ProblemDocument =
        serde_json::from_str(document).map_err(|e| schema("$", e.to_string()))?;
    let mut settings = Vec::with_capacity(doc.settings.len());
    for (i, s) in doc.settings.iter().enumerate() {
        let id = parse_field(&s.id, format!("settings[{i}].id"))?;
        let mut table = Vec::with_capacity(s.table.len());
        for (j, entry) in s.table.iter().enumerate() {
            let path = format!("settings[{i}].table[{j}]");
            let value = parse_field(entry, path.clone())?;
            if value.width() != doc.out_bits {
                return Err(schema(
                    path,
                    format!(
                        "width {} differs from out_bits {}",
                        value.width(),
                        doc.out_bits
                    ),
                ));
            }
            table.push(value.value());
        }
        let a_outcome = match &s.a_outcome {
            Some(text) => parse_field(text, format!("settings[{i}].a_outcome"))?,
            None => parse_field(&s.solution, format!("settings[{i}].solution")).map_err(
                |e| match e {
                    OracleError::Schema { path, message } => OracleError::Schema {
                        path,
                        message: format!("{message} (a_outcome defaults to the solution)"),
                    },
                    other => other,
                },
            )?,
        };
        settings.push(Setting {
            id,
            table,
            solution: s.solution.clone(),
            a_outcome,
        });
    }
    OracleProblem::new(doc.name, doc.arg_bits, doc.out_bits, doc.family, settings)
}

/// Pretty JSON in the problem schema; `a_outcome` is written only when it
/// differs from the solution text.
pub fn to_json(problem: &OracleProblem) -> String {
    let out_bits = problem.out_bits() as usize;
    let doc = ProblemDocument {
        name: problem.name().to_string(),
        arg_bits: problem.arg_bits(),
        out_bits: problem.out_bits(),
        family: problem.family(),
        settings: problem
            .settings()
            .iter()
            .map(|s| {
                let a_text = s.a_outcome.to_string();
                SettingDocument {
                    id: s.id.to_string(),
                    table: s.table.iter().map(|v| format!("{v:0out_bits$b}")).collect(),
                    solution: s.solution.clone(),
                    a_outcome: (a_text != s.solution).then_some(a_text),
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("problem document serializes")
}
