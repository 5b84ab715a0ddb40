//! Built-in consistency checks run by `aklab verify`. Each check recomputes
//! a quantity along two independent routes and compares them.

use std::collections::BTreeSet;

use crate::akrule::{
    check_occam_pair, delta_entropy, enumerate_occam_pairs, predict_queries, AkConfig,
};
use crate::circuits::{
    check_inout, composed_matrix, dj_circuit, grover_circuit, run, simon1q_circuit, Circuit, Stage,
};
use crate::histories::{enumerate_histories_from, path_sum};
use crate::oracle::{build_dj, build_grover, build_simon, OracleProblem};
use crate::qstate::{apply_stage, project_setting_subset, reduced_entropy};
use crate::TOLERANCE;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

type Check = fn() -> Result<(), String>;

fn s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn small_problems() -> Result<Vec<(OracleProblem, Circuit)>, String> {
    Ok(vec![
        (build_grover(2).map_err(s)?, grover_circuit().map_err(s)?),
        (build_dj(1).map_err(s)?, dj_circuit(1).map_err(s)?),
        (build_dj(2).map_err(s)?, dj_circuit(2).map_err(s)?),
        (build_simon(2).map_err(s)?, simon1q_circuit().map_err(s)?),
    ])
}

fn circuits_match_tables() -> Result<(), String> {
    for (problem, circuit) in small_problems()? {
        check_inout(&circuit, &problem).map_err(|e| format!("{}: {e}", problem.name()))?;
    }
    Ok(())
}

fn entropy_reductions_match_density() -> Result<(), String> {
    let config = AkConfig::default();
    for (problem, circuit) in small_problems()? {
        let output = run(&circuit, &circuit.full_input().map_err(s)?)
            .map_err(s)?
            .output()
            .clone();
        let full = reduced_entropy(&output, circuit.output_register()).map_err(s)?;
        for b in problem.setting_ids() {
            for pair in enumerate_occam_pairs(&problem, &b, &config).map_err(s)? {
                for candidate in [&pair.first, &pair.second] {
                    let subset: BTreeSet<_> = candidate.subset.iter().copied().collect();
                    let projected = project_setting_subset(&output, &subset).map_err(s)?;
                    let from_density =
                        full - reduced_entropy(&projected, circuit.output_register()).map_err(s)?;
                    let from_counts = delta_entropy(&problem, &subset).map_err(s)?;
                    if (from_density - from_counts).abs() > 1e-6 {
                        return Err(format!(
                            "{} {}: density gives {from_density:.9}, counts give {from_counts:.9}",
                            problem.name(),
                            candidate.spec
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn pairs_pass_audit() -> Result<(), String> {
    let config = AkConfig::default();
    for (problem, _) in small_problems()? {
        for b in problem.setting_ids() {
            for pair in enumerate_occam_pairs(&problem, &b, &config).map_err(s)? {
                let audited =
                    check_occam_pair(&problem, &b, &pair.first.spec, &pair.second.spec, &config)
                        .map_err(s)?;
                match audited {
                    Some(eps) if (eps - pair.epsilon).abs() <= TOLERANCE => {}
                    other => {
                        return Err(format!(
                            "{} setting {b}: pair {} / {} audits as {other:?}",
                            problem.name(),
                            pair.first.spec,
                            pair.second.spec
                        ))
                    }
                }
            }
        }
    }
    Ok(())
}

fn path_sums_match_matrices() -> Result<(), String> {
    for (problem, circuit) in small_problems()? {
        let dim = circuit.layout().dimension();
        for b in problem.setting_ids() {
            let matrix = composed_matrix(&circuit, &b).map_err(s)?;
            let every_start: Vec<usize> = (0..dim).collect();
            let histories = enumerate_histories_from(&circuit, &b, &every_start).map_err(s)?;
            for i in 0..dim {
                for f in 0..dim {
                    let sum = path_sum(&histories, dim, i, f).map_err(s)?;
                    if (sum - matrix[(f, i)]).norm() > TOLERANCE {
                        return Err(format!(
                            "{} setting {b}: <{f}|U|{i}> differs from its path sum",
                            problem.name()
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn setting_flip_relabels() -> Result<(), String> {
    let circuit = grover_circuit().map_err(s)?;
    let input = circuit.full_input().map_err(s)?;
    let flipped = apply_stage(&input, &Stage::bitwise_not("B")).map_err(s)?;
    for b in input.branches() {
        let target = flipped
            .branch(&b.setting.complement())
            .ok_or_else(|| format!("no branch {} after the flip", b.setting.complement()))?;
        if !target.state.approx_eq(&b.state, TOLERANCE) || target.record != b.record {
            return Err(format!("branch {} changed more than its label", b.setting));
        }
    }
    Ok(())
}

fn small_problems_need_one_query() -> Result<(), String> {
    for (problem, _) in small_problems()? {
        let report = predict_queries(&problem, &AkConfig::default()).map_err(s)?;
        if report.predicted != Some(1) {
            return Err(format!(
                "{} predicts {:?}",
                problem.name(),
                report.predicted
            ));
        }
    }
    Ok(())
}

fn grover_four_half_split() -> Result<(), String> {
    let report = predict_queries(&build_grover(4).map_err(s)?, &AkConfig::default()).map_err(s)?;
    match (report.baseline, report.predicted) {
        (15, Some(3)) => Ok(()),
        other => Err(format!(
            "baseline and prediction are {other:?}, expected (15, Some(3))"
        )),
    }
}

const CHECKS: &[(&str, Check)] = &[
    (
        "built-in circuits reproduce their tables",
        circuits_match_tables,
    ),
    (
        "entropy reductions agree with reduced densities",
        entropy_reductions_match_density,
    ),
    ("occam pairs survive an independent audit", pairs_pass_audit),
    (
        "history sums equal composed matrix elements",
        path_sums_match_matrices,
    ),
    ("setting flip only relabels branches", setting_flip_relabels),
    ("n=2 problems need one query", small_problems_need_one_query),
    (
        "grover n=4 matches the half-split count",
        grover_four_half_split,
    ),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| CheckResult {
            name,
            outcome: check(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_all() {
            assert_eq!(r.outcome, Ok(()), "{}", r.name);
        }
    }
}
