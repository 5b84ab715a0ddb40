//! Text and JSON rendering for every subcommand. Probabilities and
//! entropies carry 6 decimals, amplitudes 9.

use std::collections::BTreeSet;
use std::io::Write;

use serde_json::{json, Value};

use super::verify::CheckResult;
use super::{CliError, Format, ProblemSelector};
use crate::akrule::{ak_instances, enumerate_occam_pairs, predict_queries, AkConfig, QueryReport};
use crate::circuits::{run, Circuit, Stage};
use crate::histories::{classify_history, enumerate_histories, to_dot, to_json_lines, VBranch};
use crate::oracle::OracleProblem;
use crate::qstate::{
    apply_stage, measure_register, record_outcome_pairs, BitString, BranchEnsemble,
};

fn r6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn write_json(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("json renders")
    )?;
    Ok(())
}

fn subset_text(subset: &[BitString]) -> String {
    format!(
        "{{{}}}",
        subset
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    )
}

pub(super) fn simulate(
    out: &mut dyn Write,
    selector: &ProblemSelector,
    circuit: &Circuit,
    setting: Option<BitString>,
    show_stages: bool,
    prepare_not: bool,
    format: Format,
) -> Result<(), CliError> {
    let mut input: BranchEnsemble = match setting {
        Some(b) => {
            if !circuit.settings().contains(&b) {
                return Err(CliError::Usage(format!(
                    "setting {b} is not a setting of {selector}"
                )));
            }
            circuit.single_input(b)?
        }
        None => circuit.full_input()?,
    };
    if prepare_not {
        let register = circuit
            .layout()
            .setting_register()
            .map(|r| r.name.clone())
            .unwrap_or_else(|| "B".into());
        input = apply_stage(&input, &Stage::bitwise_not(&register))?;
        if let Some(b) = input
            .settings()
            .iter()
            .find(|b| !circuit.settings().contains(b))
        {
            return Err(CliError::Usage(format!(
                "prepared setting {b} is not a setting of {selector}"
            )));
        }
    }
    let trace = run(circuit, &input)?;
    let output = trace.output();
    let dist = measure_register(output, circuit.output_register())?;
    let pairs = record_outcome_pairs(output, circuit.output_register())?;
    let stage_names: Vec<&str> = circuit.stages().iter().map(|s| s.label.as_str()).collect();
    match format {
        Format::Json => {
            let mut doc = json!({
                "problem": selector.to_string(),
                "setting": setting.map(|b| b.to_string()),
                "prepare_not": prepare_not,
                "circuit": stage_names,
                "output_register": circuit.output_register(),
                "distribution": dist.entries().iter().map(|(o, p)| json!({"outcome": o.to_string(), "probability": r6(*p)})).collect::<Vec<_>>(),
                "record_pairs": pairs.iter().map(|((r, a), p)| json!({"record": r.to_string(), "outcome": a.to_string(), "probability": r6(*p)})).collect::<Vec<_>>(),
            });
            if show_stages {
                doc["stages"] = trace.to_json()["stages"].clone();
            }
            write_json(out, &doc)?;
        }
        _ => {
            writeln!(out, "problem: {selector}")?;
            match setting {
                Some(b) => writeln!(out, "setting: {b}")?,
                None => writeln!(
                    out,
                    "setting: uniform ensemble over {} settings",
                    input.branches().len()
                )?,
            }
            if prepare_not {
                writeln!(out, "preparation: bitwise NOT on the setting register")?;
            }
            writeln!(out, "circuit: {}", stage_names.join(" -> "))?;
            if show_stages {
                let layout = circuit.layout();
                for (k, state) in trace.states().iter().enumerate() {
                    let label = if k == 0 {
                        "input"
                    } else {
                        trace.labels()[k - 1].as_str()
                    };
                    writeln!(out, "stage {k} ({label}):")?;
                    for b in state.branches() {
                        writeln!(out, "  branch {} (weight {:.6}):", b.setting, b.weight)?;
                        for (i, z) in b.state.amplitudes().iter().enumerate() {
                            if z.norm() > crate::ZERO_FLOOR {
                                writeln!(
                                    out,
                                    "    {}  ({:.9}, {:.9})",
                                    layout.label(i),
                                    z.re,
                                    z.im
                                )?;
                            }
                        }
                    }
                }
            }
            writeln!(out, "{} outcome distribution:", circuit.output_register())?;
            for (o, p) in dist.entries() {
                writeln!(out, "  {o}  {p:.6}")?;
            }
            if setting.is_none() || prepare_not {
                writeln!(out, "(record, {}) pairs:", circuit.output_register())?;
                for ((r, a), p) in &pairs {
                    writeln!(out, "  ({r}, {a})  {p:.6}")?;
                }
            }
        }
    }
    Ok(())
}

pub(super) fn ak(
    out: &mut dyn Write,
    problem: &OracleProblem,
    setting: &BitString,
    config: &AkConfig,
    format: Format,
) -> Result<(), CliError> {
    let pairs = enumerate_occam_pairs(problem, setting, config)?;
    let instances = ak_instances(&pairs);
    let family = config.family_for(problem);
    match format {
        Format::Json => write_json(
            out,
            &json!({
                "problem": problem.name(),
                "setting": setting.to_string(),
                "family": family,
                "complementary": config.complementary,
                "pairs": pairs,
                "instances": instances,
            }),
        ),
        _ => {
            writeln!(out, "problem: {}", problem.name())?;
            writeln!(out, "setting: {setting}")?;
            writeln!(
                out,
                "family: {family} (complementary: {})",
                config.complementary
            )?;
            writeln!(out, "occam pairs: {}", pairs.len())?;
            for (i, p) in pairs.iter().enumerate() {
                writeln!(
                    out,
                    "  {:>3}. {} via {}  |  {} via {}  eps_A = {:.6}",
                    i + 1,
                    subset_text(&p.first.subset),
                    p.first.spec,
                    subset_text(&p.second.subset),
                    p.second.spec,
                    p.epsilon
                )?;
            }
            writeln!(out, "instances: {}", instances.len())?;
            for inst in &instances {
                writeln!(
                    out,
                    "  {}  eps_A = {:.6}",
                    subset_text(&inst.subset),
                    inst.epsilon
                )?;
            }
            Ok(())
        }
    }
}

fn histogram_text(report: &QueryReport, index: usize) -> String {
    let s = &report.per_setting[index];
    if s.cost_histogram.is_empty() {
        return "-".into();
    }
    s.cost_histogram
        .iter()
        .map(|(cost, count)| format!("{cost}x{count}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub(super) fn predict(
    out: &mut dyn Write,
    problem: &OracleProblem,
    config: &AkConfig,
    format: Format,
) -> Result<(), CliError> {
    let report = predict_queries(problem, config)?;
    if format == Format::Json {
        return write_json(
            out,
            &serde_json::to_value(&report).expect("report serializes"),
        );
    }
    let predicted = report
        .predicted
        .map_or("none".to_string(), |p| p.to_string());
    writeln!(out, "{:<26}{}", "problem", report.problem)?;
    writeln!(out, "{:<26}{}", "family", report.family)?;
    writeln!(out, "{:<26}{}", "complementary", report.complementary)?;
    writeln!(out, "{:<26}{}", "baseline queries", report.baseline)?;
    writeln!(out, "{:<26}{}", "predicted queries", predicted)?;
    if let Some(g) = &report.grover {
        if let Some(f) = g.half_split_formula {
            writeln!(out, "{:<26}{}  (2^(n/2) - 1)", "half-split formula", f)?;
        }
        writeln!(
            out,
            "{:<26}{}  (ceil(pi/4 * 2^(n/2)))",
            "optimal reference", g.optimal_reference
        )?;
        if let Some(note) = g.note {
            writeln!(out, "{:<26}{}", "note", note)?;
        }
        for e in &g.extrapolations {
            writeln!(
                out,
                "{:<26}{} known bits, subset size {}, cost {}  [{}]",
                "extrapolated split", e.known_bits, e.subset_size, e.cost, e.label
            )?;
        }
    }
    let missing = if report.settings_without_instance.is_empty() {
        "none".to_string()
    } else {
        report
            .settings_without_instance
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(out, "{:<26}{}", "no R=1/2 instance", missing)?;
    writeln!(out)?;
    let width = problem.id_width().max(7) as usize;
    writeln!(
        out,
        "{:<width$}  {:>7}  {:>9}  costs",
        "setting", "pairs", "instances"
    )?;
    for (i, s) in report.per_setting.iter().enumerate() {
        writeln!(
            out,
            "{:<width$}  {:>7}  {:>9}  {}",
            s.setting.to_string(),
            s.pairs,
            s.instances,
            histogram_text(&report, i)
        )?;
    }
    Ok(())
}

pub(super) fn histories(
    out: &mut dyn Write,
    circuit: &Circuit,
    problem: &OracleProblem,
    setting: &BitString,
    v_branch: VBranch,
    config: &AkConfig,
    format: Format,
) -> Result<(), CliError> {
    let hs = enumerate_histories(circuit, setting, v_branch)?;
    if format == Format::Dot {
        write!(out, "{}", to_dot(circuit, &hs)?)?;
        return Ok(());
    }
    let instances = ak_instances(&enumerate_occam_pairs(problem, setting, config)?);
    let classes = hs
        .iter()
        .map(|h| classify_history(h, &instances, problem))
        .collect::<Result<Vec<_>, _>>()?;
    if format == Format::Json {
        write!(
            out,
            "{}",
            to_json_lines(circuit.layout(), &hs, Some(&classes))
        )?;
        return Ok(());
    }
    let layout = circuit.layout();
    writeln!(out, "problem: {}", problem.name())?;
    writeln!(out, "setting: {setting}")?;
    writeln!(
        out,
        "circuit: {}",
        circuit
            .stages()
            .iter()
            .map(|s| s.label.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    )?;
    writeln!(out, "histories: {}", hs.len())?;
    for c in &classes {
        let h = &c.history;
        let path: Vec<String> = h.path.iter().map(|&k| layout.label(k)).collect();
        let queries: Vec<String> = h.query_arguments.iter().map(ToString::to_string).collect();
        let consistent: BTreeSet<String> = c
            .consistent
            .iter()
            .map(|i| subset_text(&i.subset))
            .collect();
        writeln!(
            out,
            "  {}  amp ({:.9}, {:.9})  queries [{}]  ak [{}]",
            path.join(" -> "),
            h.amplitude.re,
            h.amplitude.im,
            queries.join(","),
            consistent.into_iter().collect::<Vec<_>>().join(" ")
        )?;
    }
    Ok(())
}

pub(super) fn verify(
    out: &mut dyn Write,
    results: &[CheckResult],
    format: Format,
) -> Result<(), CliError> {
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    if format == Format::Json {
        return write_json(
            out,
            &json!({
                "checks": results.iter().map(|r| json!({
                    "name": r.name,
                    "passed": r.outcome.is_ok(),
                    "detail": r.outcome.as_ref().err(),
                })).collect::<Vec<_>>(),
                "passed": results.len() - failed,
                "failed": failed,
            }),
        );
    }
    for r in results {
        match &r.outcome {
            Ok(()) => writeln!(out, "PASS  {}", r.name)?,
            Err(detail) => writeln!(out, "FAIL  {}: {detail}", r.name)?,
        }
    }
    writeln!(out, "{} passed, {} failed", results.len() - failed, failed)?;
    Ok(())
}
