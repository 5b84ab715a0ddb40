//! Oracle problems: the setting set, the function table of every setting, the
//! solution map and the fine-grained register-A outcome map.

mod builders;
mod json;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::CircuitError;
use crate::qstate::{BitString, QStateError};

pub use builders::{build_dj, build_grover, build_simon, dj_tables, simon_tables};
pub use json::{load_problem, to_json};

/// Which observables on the setting register the advanced-knowledge engine
/// considers: GF(2) linear forms on the raw setting bits, or table cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cells,
    Linear,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cells => "cells",
            Family::Linear => "linear",
        })
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate setting id {0}")]
    DuplicateSetting(BitString),
    #[error("a_outcome blocks have unequal sizes: {0}")]
    UnequalBlocks(String),
    #[error("a_outcome {a_outcome} is shared by solutions {first:?} and {second:?}")]
    InconsistentOutcome {
        a_outcome: BitString,
        first: String,
        second: String,
    },
    #[error("unknown setting {0}")]
    UnknownSetting(BitString),
    #[error("argument {argument} is outside 0..{limit}")]
    ArgumentOutOfRange { argument: BitString, limit: u64 },
    #[error("{problem} with n={n} is not supported (allowed: {allowed})")]
    SizeOutOfRange {
        problem: &'static str,
        n: u32,
        allowed: &'static str,
    },
    #[error("a_outcome derivation failed: {0}")]
    Circuit(#[from] Box<CircuitError>),
    #[error(transparent)]
    Bits(#[from] QStateError),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> OracleError {
    OracleError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// One admissible setting `b`: its function table, solution and A outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setting {
    pub id: BitString,
    /// `table[a] = f_b(a)`, each entry `out_bits` wide.
    pub table: Vec<u64>,
    pub solution: String,
    pub a_outcome: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleProblem {
    name: String,
    arg_bits: u32,
    out_bits: u32,
    family: Family,
    settings: Vec<Setting>,
}

pub const MAX_ARG_BITS: u32 = 16;

impl OracleProblem {
    /// Validates every invariant and stores the settings in ascending id order.
    pub fn new(
        name: impl Into<String>,
        arg_bits: u32,
        out_bits: u32,
        family: Family,
        mut settings: Vec<Setting>,
    ) -> Result<Self, OracleError> {
        if arg_bits == 0 || arg_bits > MAX_ARG_BITS {
            return Err(schema("arg_bits", format!("must be in 1..={MAX_ARG_BITS}")));
        }
        if out_bits == 0 || out_bits > arg_bits {
            return Err(schema("out_bits", "must be in 1..=arg_bits"));
        }
        let Some(first) = settings.first() else {
            return Err(schema("settings", "must not be empty"));
        };
        let id_width = first.id.width();
        let outcome_width = first.a_outcome.width();
        let rows = 1usize << arg_bits;
        for (i, s) in settings.iter().enumerate() {
            if s.id.width() != id_width {
                return Err(schema(
                    format!("settings[{i}].id"),
                    format!("width {} differs from {id_width}", s.id.width()),
                ));
            }
            if s.a_outcome.width() != outcome_width {
                return Err(schema(
                    format!("settings[{i}].a_outcome"),
                    format!("width {} differs from {outcome_width}", s.a_outcome.width()),
                ));
            }
            if s.table.len() != rows {
                return Err(schema(
                    format!("settings[{i}].table"),
                    format!("has {} entries, expected {rows}", s.table.len()),
                ));
            }
            if let Some(j) = s.table.iter().position(|&v| v >> out_bits != 0) {
                return Err(schema(
                    format!("settings[{i}].table[{j}]"),
                    format!("value does not fit in {out_bits} bits"),
                ));
            }
        }
        let mut seen = HashSet::new();
        for s in &settings {
            if !seen.insert(s.id) {
                return Err(OracleError::DuplicateSetting(s.id));
            }
        }
        let mut solution_of: BTreeMap<BitString, &str> = BTreeMap::new();
        let mut block_sizes: BTreeMap<BitString, usize> = BTreeMap::new();
        for s in &settings {
            if let Some(prev) = solution_of.insert(s.a_outcome, &s.solution) {
                if prev != s.solution {
                    return Err(OracleError::InconsistentOutcome {
                        a_outcome: s.a_outcome,
                        first: prev.to_string(),
                        second: s.solution.clone(),
                    });
                }
            }
            *block_sizes.entry(s.a_outcome).or_default() += 1;
        }
        let mut sizes = block_sizes.values();
        let first_size = sizes.next().copied().unwrap_or(0);
        if sizes.any(|&n| n != first_size) {
            let listing = block_sizes
                .iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(OracleError::UnequalBlocks(listing));
        }
        settings.sort_by_key(|s| s.id);
        Ok(Self {
            name: name.into(),
            arg_bits,
            out_bits,
            family,
            settings,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arg_bits(&self) -> u32 {
        self.arg_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn setting_ids(&self) -> Vec<BitString> {
        self.settings.iter().map(|s| s.id).collect()
    }

    pub fn id_width(&self) -> u32 {
        self.settings[0].id.width()
    }

    pub fn index_of(&self, id: &BitString) -> Option<usize> {
        self.settings.binary_search_by_key(id, |s| s.id).ok()
    }

    pub fn setting(&self, id: &BitString) -> Result<&Setting, OracleError> {
        self.index_of(id)
            .map(|i| &self.settings[i])
            .ok_or(OracleError::UnknownSetting(*id))
    }

    /// `f_b(a)`.
    pub fn eval(&self, b: &BitString, a: &BitString) -> Result<BitString, OracleError> {
        let setting = self.setting(b)?;
        let limit = 1u64 << self.arg_bits;
        if a.value() >= limit {
            return Err(OracleError::ArgumentOutOfRange {
                argument: *a,
                limit,
            });
        }
        Ok(BitString::new(
            setting.table[a.value() as usize],
            self.out_bits,
        )?)
    }

    /// The function tables alone, as consumed by oracle stages.
    pub fn tables(&self) -> OracleTables {
        OracleTables::new(
            self.arg_bits,
            self.out_bits,
            self.settings.iter().map(|s| (s.id, s.table.clone())),
        )
    }

    /// Number of settings per distinct a_outcome.
    pub fn block_size(&self) -> usize {
        let outcome = self.settings[0].a_outcome;
        self.settings
            .iter()
            .filter(|s| s.a_outcome == outcome)
            .count()
    }
}

/// Setting id to function table lookup used by oracle stages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleTables {
    arg_bits: u32,
    out_bits: u32,
    tables: BTreeMap<BitString, Vec<u64>>,
}

impl OracleTables {
    pub fn new(
        arg_bits: u32,
        out_bits: u32,
        tables: impl IntoIterator<Item = (BitString, Vec<u64>)>,
    ) -> Self {
        Self {
            arg_bits,
            out_bits,
            tables: tables.into_iter().collect(),
        }
    }

    pub fn arg_bits(&self) -> u32 {
        self.arg_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn settings(&self) -> impl Iterator<Item = &BitString> {
        self.tables.keys()
    }

    pub fn table(&self, setting: &BitString) -> Option<&[u64]> {
        self.tables.get(setting).map(Vec::as_slice)
    }

    pub fn query(&self, setting: &BitString, argument: usize) -> Option<u64> {
        self.tables
            .get(setting)
            .and_then(|t| t.get(argument).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::bits;

    fn setting(id: &str, table: &[u64], solution: &str) -> Setting {
        Setting {
            id: bits(id),
            table: table.to_vec(),
            solution: solution.into(),
            a_outcome: bits(solution),
        }
    }

    #[test]
    fn eval_reads_tables() {
        let g = build_grover(2).unwrap();
        assert_eq!(g.eval(&bits("01"), &bits("01")).unwrap(), bits("1"));
        assert_eq!(g.eval(&bits("01"), &bits("11")).unwrap(), bits("0"));
        let dj = build_dj(2).unwrap();
        assert_eq!(dj.eval(&bits("0011"), &bits("10")).unwrap(), bits("1"));
        let simon = build_simon(2).unwrap();
        assert_eq!(simon.eval(&bits("0101"), &bits("01")).unwrap(), bits("1"));
    }

    #[test]
    fn eval_errors() {
        let g = build_grover(2).unwrap();
        assert!(matches!(
            g.eval(&bits("0111"), &bits("00")),
            Err(OracleError::UnknownSetting(_))
        ));
        assert!(matches!(
            g.eval(&bits("01"), &bits("100")),
            Err(OracleError::ArgumentOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_unequal_blocks() {
        let settings = vec![
            setting("00", &[0, 0], "0"),
            setting("01", &[0, 1], "0"),
            setting("10", &[1, 0], "0"),
            setting("11", &[1, 1], "1"),
        ];
        assert!(matches!(
            OracleProblem::new("t", 1, 1, Family::Cells, settings),
            Err(OracleError::UnequalBlocks(_))
        ));
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_tables() {
        let dup = vec![setting("01", &[0, 1], "0"), setting("01", &[1, 0], "1")];
        assert!(matches!(
            OracleProblem::new("t", 1, 1, Family::Cells, dup),
            Err(OracleError::DuplicateSetting(_))
        ));
        let short = vec![setting("0", &[0], "0")];
        match OracleProblem::new("t", 1, 1, Family::Cells, short) {
            Err(OracleError::Schema { path, .. }) => assert_eq!(path, "settings[0].table"),
            other => panic!("unexpected {other:?}"),
        }
        let wide = vec![setting("0", &[0, 2], "0")];
        match OracleProblem::new("t", 1, 1, Family::Cells, wide) {
            Err(OracleError::Schema { path, .. }) => assert_eq!(path, "settings[0].table[1]"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(OracleProblem::new("t", 1, 2, Family::Cells, vec![]).is_err());
    }

    #[test]
    fn outcome_must_determine_solution() {
        let mut a = setting("0", &[0, 1], "0");
        let mut b = setting("1", &[1, 0], "1");
        a.a_outcome = bits("1");
        b.a_outcome = bits("1");
        assert!(matches!(
            OracleProblem::new("t", 1, 1, Family::Cells, vec![a, b]),
            Err(OracleError::InconsistentOutcome { .. })
        ));
    }
}
