//! The advanced-knowledge rule at retroaction R = 1/2.
//!
//! A partial measurement of the setting register is a [`MeasurementSpec`];
//! for a true setting `b*` it realizes the subset of settings that agree with
//! `b*` on the measured observables. Two such measurements form an Occam
//! pair when their subsets meet exactly in `b*`, reduce the output entropy
//! of register A by the same amount, and neither subset alone pins down the
//! solution. The subsets of all Occam pairs are the advanced-knowledge
//! instances, and the predicted query count is the classical decision-tree
//! cost of solving the problem inside an instance.

mod enumerate;
mod gf2;
mod predict;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::oracle::{Family, OracleError, OracleProblem};
use crate::qstate::{
    entropy_bits, BitString, BranchEnsemble, PureState, QStateError, Register, RegisterLayout,
};
use crate::TOLERANCE;

pub use enumerate::{
    ak_instances, check_occam_pair, enumerate_occam_pairs, AkInstance, Candidate, OccamPair,
};
pub use predict::{
    predict_queries, GroverReference, InstanceCost, QueryReport, SettingSummary, SplitExtrapolation,
};
pub use tree::{decision_tree_cost, DecisionTree};

#[derive(Debug, Error)]
pub enum AkError {
    #[error(
        "retroaction {numerator}/{denominator} is not supported; only 1/2 has a defined procedure"
    )]
    UnsupportedRetroaction { numerator: u32, denominator: u32 },
    #[error("setting {0} is not in the problem")]
    UnknownSetting(BitString),
    #[error("subset is empty")]
    EmptySubset,
    #[error("invalid measurement: {0}")]
    InvalidSpec(String),
    #[error("{family} family over {size} {unit} exceeds the enumeration limit of {limit}")]
    EnumerationTooLarge {
        family: Family,
        size: u32,
        unit: &'static str,
        limit: u32,
    },
    #[error("settings {0} share every table entry but differ in solution")]
    Indistinguishable(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Engine configuration. The retroaction is fixed at 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct AkConfig {
    numerator: u32,
    denominator: u32,
    /// Measurement family; `None` uses the problem's default.
    pub family: Option<Family>,
    pub complementary: bool,
    pub tolerance: f64,
}

impl Default for AkConfig {
    fn default() -> Self {
        Self {
            numerator: 1,
            denominator: 2,
            family: None,
            complementary: true,
            tolerance: TOLERANCE,
        }
    }
}

impl AkConfig {
    /// Accepts any fraction equal to 1/2 and rejects everything else.
    pub fn with_retroaction(numerator: u32, denominator: u32) -> Result<Self, AkError> {
        if denominator == 0 || 2 * u64::from(numerator) != u64::from(denominator) {
            return Err(AkError::UnsupportedRetroaction {
                numerator,
                denominator,
            });
        }
        Ok(Self::default())
    }

    pub fn retroaction(&self) -> (u32, u32) {
        (self.numerator, self.denominator)
    }

    pub fn family_for(&self, problem: &OracleProblem) -> Family {
        self.family.unwrap_or(problem.family())
    }
}

/// A partial measurement of the setting register.
///
/// Cells: the table entries at the listed argument positions. Linear: the
/// GF(2) parities `mask · b` of the raw setting bits, stored as a reduced
/// row echelon basis of their span. No generators means no measurement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasurementSpec {
    Cells { positions: Vec<BitString> },
    Linear { masks: Vec<BitString> },
}

impl MeasurementSpec {
    /// Cell positions, sorted and deduplicated.
    pub fn cells(
        problem: &OracleProblem,
        positions: impl IntoIterator<Item = u64>,
    ) -> Result<Self, AkError> {
        let limit = 1u64 << problem.arg_bits();
        let set: BTreeSet<u64> = positions.into_iter().collect();
        if let Some(&p) = set.iter().find(|&&p| p >= limit) {
            return Err(AkError::InvalidSpec(format!(
                "cell position {p} is outside 0..{limit}"
            )));
        }
        Ok(Self::Cells {
            positions: set
                .into_iter()
                .map(|p| BitString::new(p, problem.arg_bits()))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Canonical basis of the span of `masks` over setting ids of `width` bits.
    pub fn linear(width: u32, masks: impl IntoIterator<Item = u64>) -> Result<Self, AkError> {
        let masks: Vec<u64> = masks.into_iter().collect();
        if width == 0 || width > 64 || masks.iter().any(|&m| width < 64 && m >> width != 0) {
            return Err(AkError::InvalidSpec(format!(
                "masks do not fit in {width} bits"
            )));
        }
        Ok(Self::Linear {
            masks: gf2::rref(masks)
                .into_iter()
                .map(|m| BitString::new(m, width))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn family(&self) -> Family {
        match self {
            MeasurementSpec::Cells { .. } => Family::Cells,
            MeasurementSpec::Linear { .. } => Family::Linear,
        }
    }

    pub fn generators(&self) -> &[BitString] {
        match self {
            MeasurementSpec::Cells { positions } => positions,
            MeasurementSpec::Linear { masks } => masks,
        }
    }
}

impl fmt::Display for MeasurementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = self
            .generators()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        write!(f, "{}{{{list}}}", self.family())
    }
}

impl Serialize for MeasurementSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MeasurementSpec", 2)?;
        s.serialize_field("family", &self.family())?;
        s.serialize_field("generators", self.generators())?;
        s.end()
    }
}

/// Per-problem lookup tables shared by the enumeration and the entropy code.
pub(crate) struct ProblemIndex<'a> {
    pub problem: &'a OracleProblem,
    pub outcome_ids: Vec<usize>,
    pub outcome_count: usize,
    pub solution_ids: Vec<usize>,
    pub full_entropy: f64,
}

impl<'a> ProblemIndex<'a> {
    pub fn new(problem: &'a OracleProblem) -> Self {
        let mut outcomes: BTreeMap<BitString, usize> = BTreeMap::new();
        let mut solutions: BTreeMap<&str, usize> = BTreeMap::new();
        for s in problem.settings() {
            let next = outcomes.len();
            outcomes.entry(s.a_outcome).or_insert(next);
            let next = solutions.len();
            solutions.entry(s.solution.as_str()).or_insert(next);
        }
        let outcome_ids: Vec<usize> = problem
            .settings()
            .iter()
            .map(|s| outcomes[&s.a_outcome])
            .collect();
        let solution_ids = problem
            .settings()
            .iter()
            .map(|s| solutions[s.solution.as_str()])
            .collect();
        let mut index = Self {
            problem,
            outcome_ids,
            outcome_count: outcomes.len(),
            solution_ids,
            full_entropy: 0.0,
        };
        let all = index.all();
        index.full_entropy = index.entropy(&all);
        index
    }

    pub fn len(&self) -> usize {
        self.outcome_ids.len()
    }

    pub fn all(&self) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.len());
        set.insert_range(..);
        set
    }

    pub fn index_of(&self, id: &BitString) -> Result<usize, AkError> {
        self.problem
            .index_of(id)
            .ok_or(AkError::UnknownSetting(*id))
    }

    /// Shannon entropy of the a_outcome distribution over uniform `set`.
    pub fn entropy(&self, set: &FixedBitSet) -> f64 {
        let mut counts = vec![0usize; self.outcome_count];
        for i in set.ones() {
            counts[self.outcome_ids[i]] += 1;
        }
        let total = set.count_ones(..) as f64;
        entropy_bits(
            counts
                .into_iter()
                .filter(|&c| c > 0)
                .map(|c| c as f64 / total),
        )
    }

    pub fn delta(&self, set: &FixedBitSet) -> f64 {
        self.full_entropy - self.entropy(set)
    }

    pub fn distinct_solutions(&self, set: &FixedBitSet) -> usize {
        set.ones()
            .map(|i| self.solution_ids[i])
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn ids(&self, set: &FixedBitSet) -> Vec<BitString> {
        set.ones().map(|i| self.problem.settings()[i].id).collect()
    }

    pub fn set_of(&self, subset: &BTreeSet<BitString>) -> Result<FixedBitSet, AkError> {
        let mut set = FixedBitSet::with_capacity(self.len());
        for id in subset {
            set.insert(self.index_of(id)?);
        }
        Ok(set)
    }

    /// Settings agreeing with setting `star` on every observable of `spec`.
    pub fn realize(&self, spec: &MeasurementSpec, star: usize) -> Result<FixedBitSet, AkError> {
        let settings = self.problem.settings();
        let reference = &settings[star];
        let mut set = FixedBitSet::with_capacity(self.len());
        match spec {
            MeasurementSpec::Cells { positions } => {
                for p in positions {
                    if p.width() != self.problem.arg_bits() {
                        return Err(AkError::InvalidSpec(format!(
                            "cell {p} does not have {} bits",
                            self.problem.arg_bits()
                        )));
                    }
                }
                for (i, s) in settings.iter().enumerate() {
                    let agrees = positions.iter().all(|p| {
                        s.table[p.value() as usize] == reference.table[p.value() as usize]
                    });
                    set.set(i, agrees);
                }
            }
            MeasurementSpec::Linear { masks } => {
                let width = self.problem.id_width();
                if let Some(m) = masks.iter().find(|m| m.width() != width) {
                    return Err(AkError::InvalidSpec(format!(
                        "mask {m} does not have {width} bits"
                    )));
                }
                for (i, s) in settings.iter().enumerate() {
                    let agrees = masks
                        .iter()
                        .all(|m| s.id.dot(m.value()) == reference.id.dot(m.value()));
                    set.set(i, agrees);
                }
            }
        }
        Ok(set)
    }
}

/// The settings a measurement projects onto when the true setting is `b_star`.
pub fn realized_subset(
    problem: &OracleProblem,
    spec: &MeasurementSpec,
    b_star: &BitString,
) -> Result<BTreeSet<BitString>, AkError> {
    let index = ProblemIndex::new(problem);
    let star = index.index_of(b_star)?;
    Ok(index.ids(&index.realize(spec, star)?).into_iter().collect())
}

/// Entropy reduction of register A when the setting is known to lie in `subset`.
pub fn delta_entropy(
    problem: &OracleProblem,
    subset: &BTreeSet<BitString>,
) -> Result<f64, AkError> {
    if subset.is_empty() {
        return Err(AkError::EmptySubset);
    }
    let index = ProblemIndex::new(problem);
    Ok(index.delta(&index.set_of(subset)?))
}

/// Output of an ideal solver: `|b⟩_B |a_outcome(b)⟩_A` over all settings,
/// equally weighted.
pub fn outcome_ensemble(problem: &OracleProblem) -> Result<BranchEnsemble, AkError> {
    let width = problem.settings()[0].a_outcome.width();
    let layout = RegisterLayout::new(
        vec![Register::new("A", width)],
        Some(Register::new("B", problem.id_width())),
    )?;
    let weight = 1.0 / problem.settings().len() as f64;
    let branches = problem
        .settings()
        .iter()
        .map(|s| {
            Ok(crate::qstate::Branch {
                setting: s.id,
                record: s.id,
                weight,
                state: PureState::basis(1 << width, s.a_outcome.value() as usize)?,
            })
        })
        .collect::<Result<Vec<_>, QStateError>>()?;
    Ok(BranchEnsemble::new(layout, branches)?)
}
