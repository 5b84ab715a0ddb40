//! Query-count prediction: worst-case decision-tree cost over every
//! advanced-knowledge instance of every setting.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::enumerate::{ak_instances, occam_pairs};
use super::{AkConfig, AkError, DecisionTree, ProblemIndex};
use crate::oracle::{Family, OracleProblem};
use crate::qstate::BitString;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceCost {
    pub subset: Vec<BitString>,
    pub cost: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingSummary {
    pub setting: BitString,
    pub pairs: usize,
    pub instances: usize,
    /// Number of instances at each cost.
    pub cost_histogram: BTreeMap<usize, usize>,
    #[serde(skip)]
    pub instance_costs: Vec<InstanceCost>,
}

/// Cost of an affine subset of `2^k` settings, reported for odd `n` where
/// no whole-qubit split is exactly half of the setting bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitExtrapolation {
    pub known_bits: u32,
    pub subset_size: usize,
    pub cost: usize,
    pub label: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroverReference {
    pub n: u32,
    /// `2^(n/2) − 1`, even `n` only.
    pub half_split_formula: Option<u64>,
    /// `⌈(π/4)·2^(n/2)⌉`.
    pub optimal_reference: u64,
    pub note: Option<&'static str>,
    pub extrapolations: Vec<SplitExtrapolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryReport {
    pub problem: String,
    pub family: Family,
    pub complementary: bool,
    pub baseline: usize,
    /// Worst instance cost over all settings; `None` when no setting has an
    /// instance at all.
    pub predicted: Option<usize>,
    pub settings_without_instance: Vec<BitString>,
    pub per_setting: Vec<SettingSummary>,
    pub grover: Option<GroverReference>,
}

impl QueryReport {
    /// Every instance cost of every setting.
    pub fn all_instance_costs(&self) -> impl Iterator<Item = &InstanceCost> {
        self.per_setting
            .iter()
            .flat_map(|s| s.instance_costs.iter())
    }
}

/// True for the unstructured-search family: one-bit outputs, every `n`-bit
/// string is a setting, and each table marks exactly its own id.
fn grover_size(problem: &OracleProblem) -> Option<u32> {
    let n = problem.arg_bits();
    let structured = problem.out_bits() == 1
        && problem.id_width() == n
        && problem.settings().len() == 1usize << n
        && problem.settings().iter().all(|s| {
            s.table
                .iter()
                .enumerate()
                .all(|(a, &v)| v == u64::from(a as u64 == s.id.value()))
        });
    structured.then_some(n)
}

fn grover_reference(problem: &OracleProblem, n: u32) -> Result<GroverReference, AkError> {
    let optimal_reference = (PI / 4.0 * 2f64.powf(f64::from(n) / 2.0)).ceil() as u64;
    if n.is_multiple_of(2) {
        return Ok(GroverReference {
            n,
            half_split_formula: Some((1u64 << (n / 2)) - 1),
            optimal_reference,
            note: None,
            extrapolations: Vec::new(),
        });
    }
    let mut tree = DecisionTree::new(problem);
    let mut extrapolations = Vec::new();
    for k in [n / 2, n / 2 + 1] {
        // settings whose top n − k bits are zero: an affine subset of size 2^k
        let subset: BTreeSet<BitString> = problem
            .setting_ids()
            .into_iter()
            .filter(|b| b.value() >> k == 0)
            .collect();
        extrapolations.push(SplitExtrapolation {
            known_bits: n - k,
            subset_size: subset.len(),
            cost: tree.cost(&subset)?,
            label: "extrapolated, not an exact R=1/2 split",
        });
    }
    Ok(GroverReference {
        n,
        half_split_formula: None,
        optimal_reference,
        note: Some("no exact R=1/2 split at odd n"),
        extrapolations,
    })
}

/// Classical baseline, AK-predicted count and per-instance costs.
pub fn predict_queries(problem: &OracleProblem, config: &AkConfig) -> Result<QueryReport, AkError> {
    let family = config.family_for(problem);
    let all: BTreeSet<BitString> = problem.setting_ids().into_iter().collect();
    let baseline = DecisionTree::new(problem).cost(&all)?;
    let per_setting = (0..problem.settings().len())
        .into_par_iter()
        // Instances of different settings overlap heavily, so each worker
        // keeps one memoized tree for all the settings it handles.
        .map_init(
            || (ProblemIndex::new(problem), DecisionTree::new(problem)),
            |(index, tree), star| -> Result<SettingSummary, AkError> {
                let pairs = occam_pairs(index, star, family, config)?;
                let instances = ak_instances(&pairs);
                let mut instance_costs = Vec::with_capacity(instances.len());
                let mut cost_histogram = BTreeMap::new();
                for inst in instances {
                    let set = index.set_of(&inst.subset.iter().copied().collect())?;
                    let cost = tree.cost_of(&set)?;
                    *cost_histogram.entry(cost).or_insert(0) += 1;
                    instance_costs.push(InstanceCost {
                        subset: inst.subset,
                        cost,
                    });
                }
                Ok(SettingSummary {
                    setting: problem.settings()[star].id,
                    pairs: pairs.len(),
                    instances: instance_costs.len(),
                    cost_histogram,
                    instance_costs,
                })
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let predicted = per_setting
        .iter()
        .flat_map(|s| s.cost_histogram.keys().copied())
        .max();
    let settings_without_instance = per_setting
        .iter()
        .filter(|s| s.instances == 0)
        .map(|s| s.setting)
        .collect();
    let grover = grover_size(problem)
        .map(|n| grover_reference(problem, n))
        .transpose()?;
    Ok(QueryReport {
        problem: problem.name().to_string(),
        family,
        complementary: config.complementary,
        baseline,
        predicted,
        settings_without_instance,
        per_setting,
        grover,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_dj, build_grover, build_simon};

    #[test]
    fn small_problems_predict_one_query() {
        for p in [
            build_grover(2).unwrap(),
            build_dj(2).unwrap(),
            build_simon(2).unwrap(),
        ] {
            let report = predict_queries(&p, &AkConfig::default()).unwrap();
            assert_eq!(report.baseline, 3, "{}", p.name());
            assert_eq!(report.predicted, Some(1), "{}", p.name());
            assert!(report.settings_without_instance.is_empty());
        }
    }

    #[test]
    fn grover_four_matches_half_split_formula() {
        let report = predict_queries(&build_grover(4).unwrap(), &AkConfig::default()).unwrap();
        assert_eq!(report.baseline, 15);
        assert_eq!(report.predicted, Some(3));
        let grover = report.grover.as_ref().unwrap();
        assert_eq!(grover.half_split_formula, Some(3));
        assert_eq!(grover.optimal_reference, 4);
        assert!(report
            .all_instance_costs()
            .all(|c| c.subset.len() == 4 && c.cost == 3));
        assert!(report.per_setting.iter().all(|s| s.pairs == 280));
    }

    #[test]
    fn odd_grover_is_flagged() {
        let report = predict_queries(&build_grover(3).unwrap(), &AkConfig::default()).unwrap();
        assert_eq!(report.predicted, None);
        assert_eq!(report.settings_without_instance.len(), 8);
        let grover = report.grover.unwrap();
        assert_eq!(grover.half_split_formula, None);
        let costs: Vec<usize> = grover.extrapolations.iter().map(|e| e.cost).collect();
        assert_eq!(costs, vec![1, 3]);
        assert_eq!(grover.optimal_reference, 3);
    }
}
