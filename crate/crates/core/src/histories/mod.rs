//! Sum over histories: every chain of sharp basis states through a staged
//! circuit, weighted by the product of the stage matrix elements it uses,
//! and its attribution to advanced-knowledge instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::akrule::{AkError, AkInstance, DecisionTree};
use crate::circuits::{Circuit, CircuitError};
use crate::oracle::OracleProblem;
use crate::qstate::{BitString, QStateError, RegisterLayout};
use crate::ZERO_FLOOR;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("setting {0} is not known to the circuit")]
    UnknownSetting(BitString),
    #[error("basis state {0} is not in the circuit's basis")]
    NotInBasis(String),
    #[error("invalid V branch {0:?}: expected 0, 1 or both")]
    InvalidVBranch(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Ak(#[from] AkError),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Which initial basis states of register V to start histories from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VBranch {
    #[default]
    Zero,
    One,
    Both,
}

impl FromStr for VBranch {
    type Err = HistoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(VBranch::Zero),
            "1" => Ok(VBranch::One),
            "both" => Ok(VBranch::Both),
            other => Err(HistoryError::InvalidVBranch(other.into())),
        }
    }
}

impl VBranch {
    fn admits(self, v: usize) -> bool {
        match self {
            VBranch::Zero => v == 0,
            VBranch::One => v == 1,
            VBranch::Both => true,
        }
    }
}

/// One path of basis states, one per stage boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub setting: BitString,
    /// Basis indices of the non-setting registers, input first.
    pub path: Vec<usize>,
    /// Product of the stage matrix elements along the path.
    pub amplitude: Complex64,
    /// Amplitude of the starting basis state in the circuit's initial state.
    pub initial_amplitude: Complex64,
    /// Contents of the oracle's argument register entering each query stage.
    pub query_arguments: Vec<BitString>,
}

impl History {
    pub fn start(&self) -> usize {
        self.path[0]
    }

    pub fn end(&self) -> usize {
        *self.path.last().expect("paths are never empty")
    }

    /// Contribution of this history to the output amplitude of its endpoint.
    pub fn weighted_amplitude(&self) -> Complex64 {
        self.initial_amplitude * self.amplitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryClassification {
    pub history: History,
    pub consistent: Vec<AkInstance>,
}

/// Basis index of a label such as `01|1` (registers in layout order).
pub fn parse_basis_label(layout: &RegisterLayout, label: &str) -> Result<usize, HistoryError> {
    let parts: Vec<&str> = label.split('|').collect();
    if parts.len() != layout.registers().len() {
        return Err(HistoryError::NotInBasis(label.into()));
    }
    let mut index = 0usize;
    for (part, reg) in parts.iter().zip(layout.registers()) {
        let value = BitString::parse(part).map_err(|_| HistoryError::NotInBasis(label.into()))?;
        if value.width() != reg.width {
            return Err(HistoryError::NotInBasis(label.into()));
        }
        index = (index << reg.width) | value.value() as usize;
    }
    Ok(index)
}

fn stage_matrices(
    circuit: &Circuit,
    setting: &BitString,
) -> Result<Vec<DMatrix<Complex64>>, HistoryError> {
    circuit
        .stages()
        .iter()
        .map(|s| Ok(s.matrix(circuit.layout(), setting)?))
        .collect()
}

/// All histories of `circuit` under setting `b`, in lexicographic path order.
///
/// Paths start from the basis states in the support of the circuit's initial
/// state, restricted to the requested `V` branch.
pub fn enumerate_histories(
    circuit: &Circuit,
    b: &BitString,
    v_branch: VBranch,
) -> Result<Vec<History>, HistoryError> {
    let v_slot = circuit.layout().slot("V").ok();
    let starts: Vec<usize> = circuit
        .initial()
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(start, init)| {
            init.norm() > ZERO_FLOOR
                && v_slot.is_none_or(|slot| v_branch.admits(slot.extract(*start)))
        })
        .map(|(start, _)| start)
        .collect();
    enumerate_histories_from(circuit, b, &starts)
}

/// Histories from arbitrary starting basis states, including ones outside
/// the initial support (their `initial_amplitude` is zero). Starting from
/// every basis state recovers the full composed unitary.
pub fn enumerate_histories_from(
    circuit: &Circuit,
    b: &BitString,
    starts: &[usize],
) -> Result<Vec<History>, HistoryError> {
    if !circuit.settings().contains(b) {
        return Err(HistoryError::UnknownSetting(*b));
    }
    let layout = circuit.layout();
    if let Some(&bad) = starts.iter().find(|&&s| s >= layout.dimension()) {
        return Err(HistoryError::NotInBasis(bad.to_string()));
    }
    let matrices = stage_matrices(circuit, b)?;
    let argument_slots = circuit
        .query_stages()
        .iter()
        .map(|&k| {
            let register = circuit.stages()[k].registers()[0];
            Ok((k, layout.slot(register)?))
        })
        .collect::<Result<Vec<_>, QStateError>>()?;
    let mut out = Vec::new();
    for &start in starts {
        let init = circuit.initial().amplitudes()[start];
        let mut path = vec![start];
        extend(
            &matrices,
            &mut path,
            Complex64::new(1.0, 0.0),
            &mut |path, amplitude| {
                let query_arguments = argument_slots
                    .iter()
                    .map(|(k, slot)| BitString::new(slot.extract(path[*k]) as u64, slot.width))
                    .collect::<Result<Vec<_>, _>>()
                    .expect("register values fit their width");
                out.push(History {
                    setting: *b,
                    path: path.to_vec(),
                    amplitude,
                    initial_amplitude: init,
                    query_arguments,
                });
            },
        );
    }
    Ok(out)
}

fn extend(
    matrices: &[DMatrix<Complex64>],
    path: &mut Vec<usize>,
    amplitude: Complex64,
    emit: &mut dyn FnMut(&[usize], Complex64),
) {
    let step = path.len() - 1;
    if step == matrices.len() {
        emit(path, amplitude);
        return;
    }
    let m = &matrices[step];
    let from = path[step];
    for to in 0..m.nrows() {
        let element = m[(to, from)];
        if element.norm() > ZERO_FLOOR {
            path.push(to);
            extend(matrices, path, amplitude * element, emit);
            path.pop();
        }
    }
}

/// Sum of history amplitudes from basis state `initial` to `final_state`;
/// equals the matrix element `⟨final|U|initial⟩` of the composed circuit.
pub fn path_sum(
    histories: &[History],
    dimension: usize,
    initial: usize,
    final_state: usize,
) -> Result<Complex64, HistoryError> {
    for endpoint in [initial, final_state] {
        if endpoint >= dimension {
            return Err(HistoryError::NotInBasis(endpoint.to_string()));
        }
    }
    Ok(histories
        .iter()
        .filter(|h| h.start() == initial && h.end() == final_state)
        .map(|h| h.amplitude)
        .sum())
}

/// Output amplitude of `final_state`, summing histories from every starting
/// basis state weighted by the initial state.
pub fn weighted_path_sum(histories: &[History], final_state: usize) -> Complex64 {
    histories
        .iter()
        .filter(|h| h.end() == final_state)
        .map(History::weighted_amplitude)
        .sum()
}

/// Instances for which the history's queries are an optimal-play transcript.
///
/// Starting from the instance, each query must attain the minimax cost of
/// the current candidate set; the candidates are then narrowed to those
/// agreeing with the true setting's oracle value.
pub fn classify_history(
    history: &History,
    instances: &[AkInstance],
    problem: &OracleProblem,
) -> Result<HistoryClassification, HistoryError> {
    let truth = problem.setting(&history.setting).map_err(AkError::from)?;
    let mut tree = DecisionTree::new(problem);
    let mut consistent = Vec::new();
    'instances: for inst in instances {
        if !inst.subset.contains(&history.setting) {
            continue;
        }
        let mut candidates: BTreeSet<BitString> = inst.subset.iter().copied().collect();
        for a in &history.query_arguments {
            let (cost, optimal) = tree.optimal_arguments(&candidates)?;
            if cost == 0 || !optimal.contains(&a.value()) {
                continue 'instances;
            }
            let observed = truth.table[a.value() as usize];
            candidates.retain(|c| {
                problem
                    .setting(c)
                    .is_ok_and(|s| s.table[a.value() as usize] == observed)
            });
        }
        consistent.push(inst.clone());
    }
    Ok(HistoryClassification {
        history: history.clone(),
        consistent,
    })
}

fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Serialize)]
struct HistoryLine<'a> {
    setting: String,
    path: Vec<String>,
    amplitude: (f64, f64),
    initial_amplitude: (f64, f64),
    queries: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistent: Option<Vec<&'a [BitString]>>,
}

/// One JSON object per line.
pub fn to_json_lines(
    layout: &RegisterLayout,
    histories: &[History],
    classes: Option<&[HistoryClassification]>,
) -> String {
    let mut out = String::new();
    for (i, h) in histories.iter().enumerate() {
        let line = HistoryLine {
            setting: h.setting.to_string(),
            path: h.path.iter().map(|&k| layout.label(k)).collect(),
            amplitude: (round9(h.amplitude.re), round9(h.amplitude.im)),
            initial_amplitude: (
                round9(h.initial_amplitude.re),
                round9(h.initial_amplitude.im),
            ),
            queries: h.query_arguments.iter().map(ToString::to_string).collect(),
            consistent: classes.map(|c| {
                c[i].consistent
                    .iter()
                    .map(|inst| inst.subset.as_slice())
                    .collect()
            }),
        };
        out.push_str(&serde_json::to_string(&line).expect("history serializes"));
        out.push('\n');
    }
    out
}

/// Stage-layered lattice of the basis states the histories visit; each edge
/// carries its stage matrix element.
pub fn to_dot(circuit: &Circuit, histories: &[History]) -> Result<String, HistoryError> {
    let layout = circuit.layout();
    let mut edges: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
    let mut nodes: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut matrices: BTreeMap<BitString, Vec<DMatrix<Complex64>>> = BTreeMap::new();
    for h in histories {
        if let std::collections::btree_map::Entry::Vacant(slot) = matrices.entry(h.setting) {
            slot.insert(stage_matrices(circuit, &h.setting)?);
        }
        let ms = &matrices[&h.setting];
        for (k, w) in h.path.windows(2).enumerate() {
            edges.insert((k, w[0], w[1]), ms[k][(w[1], w[0])]);
        }
        nodes.extend(h.path.iter().enumerate().map(|(k, &i)| (k, i)));
    }
    let mut dot = String::from("digraph histories {\n  rankdir=LR;\n  node [shape=box];\n");
    for layer in 0..=circuit.stages().len() {
        let members: Vec<String> = nodes
            .iter()
            .filter(|n| n.0 == layer)
            .map(|&(k, i)| format!("s{k}_{i}"))
            .collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(dot, "  {{ rank=same; {}; }}", members.join("; "));
    }
    for &(k, i) in &nodes {
        let _ = writeln!(dot, "  s{k}_{i} [label=\"{}\"];", layout.label(i));
    }
    for (&(k, from, to), z) in &edges {
        let _ = writeln!(
            dot,
            "  s{k}_{from} -> s{}_{to} [label=\"{} ({:.9}, {:.9})\"];",
            k + 1,
            circuit.stages()[k].label,
            round9(z.re),
            round9(z.im)
        );
    }
    dot.push_str("}\n");
    Ok(dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::akrule::{ak_instances, enumerate_occam_pairs, AkConfig};
    use crate::circuits::{composed_matrix, dj_circuit, grover_circuit};
    use crate::oracle::{build_dj, build_grover};
    use crate::qstate::bits;

    fn labels(layout: &RegisterLayout, h: &History) -> Vec<String> {
        h.path.iter().map(|&k| layout.label(k)).collect()
    }

    #[test]
    fn grover_histories() {
        let g = grover_circuit().unwrap();
        let hs = enumerate_histories(&g, &bits("01"), VBranch::Zero).unwrap();
        assert_eq!(hs.len(), 16);
        assert!(hs.iter().any(
            |h| labels(g.layout(), h) == ["00|0", "11|0", "11|0", "01|0"]
                && h.amplitude.norm() > 1e-12
        ));
        assert_eq!(
            enumerate_histories(&g, &bits("01"), VBranch::Both)
                .unwrap()
                .len(),
            32
        );
        let start = parse_basis_label(g.layout(), "00|0").unwrap();
        let end = parse_basis_label(g.layout(), "01|0").unwrap();
        let raw = path_sum(&hs, 8, start, end).unwrap();
        assert!((raw - Complex64::new(0.75, 0.0)).norm() < 1e-12);
        let both = enumerate_histories(&g, &bits("01"), VBranch::Both).unwrap();
        let weighted = weighted_path_sum(&both, end);
        assert!((weighted.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(path_sum(&hs, 8, start, 8).is_err());
        assert!(enumerate_histories(&g, &bits("0101"), VBranch::Zero).is_err());
    }

    #[test]
    fn path_sums_match_composed_matrix() {
        for c in [grover_circuit().unwrap(), dj_circuit(2).unwrap()] {
            for b in c.settings() {
                let hs = enumerate_histories(&c, &b, VBranch::Both).unwrap();
                let u = composed_matrix(&c, &b).unwrap();
                let d = c.layout().dimension();
                for i in [0, 1] {
                    let mut total = 0.0;
                    for f in 0..d {
                        let s = path_sum(&hs, d, i, f).unwrap();
                        assert!((s - u[(f, i)]).norm() < 1e-9);
                        total += s.norm_sqr();
                    }
                    assert!((total - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dj_history_and_attribution() {
        let dj = dj_circuit(2).unwrap();
        let problem = build_dj(2).unwrap();
        let hs = enumerate_histories(&dj, &bits("0011"), VBranch::Zero).unwrap();
        let shown = hs
            .iter()
            .find(|h| labels(dj.layout(), h) == ["00|0", "10|0", "10|1", "10|1"])
            .expect("history present");
        let pairs = enumerate_occam_pairs(&problem, &bits("0011"), &AkConfig::default()).unwrap();
        let instances = ak_instances(&pairs);
        let class = classify_history(shown, &instances, &problem).unwrap();
        let subsets: Vec<Vec<String>> = class
            .consistent
            .iter()
            .map(|i| i.subset.iter().map(ToString::to_string).collect())
            .collect();
        assert_eq!(subsets, vec![vec!["0000".to_string(), "0011".to_string()]]);
    }

    #[test]
    fn grover_attribution() {
        let g = grover_circuit().unwrap();
        let problem = build_grover(2).unwrap();
        let instances = ak_instances(
            &enumerate_occam_pairs(&problem, &bits("01"), &AkConfig::default()).unwrap(),
        );
        let hs = enumerate_histories(&g, &bits("01"), VBranch::Zero).unwrap();
        for h in &hs {
            let class = classify_history(h, &instances, &problem).unwrap();
            let a = h.query_arguments[0];
            if a == bits("01") {
                assert_eq!(class.consistent.len(), 3);
            } else {
                assert_eq!(class.consistent.len(), 1);
                assert!(class.consistent[0].subset.contains(&a));
            }
        }
    }

    #[test]
    fn empty_circuit_has_one_trivial_history() {
        let g = grover_circuit().unwrap().without_stages();
        let hs = enumerate_histories(&g, &bits("10"), VBranch::Zero).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].path, vec![0]);
        assert_eq!(hs[0].amplitude, Complex64::new(1.0, 0.0));
        assert!(hs[0].query_arguments.is_empty());
    }

    #[test]
    fn serializations() {
        let g = grover_circuit().unwrap();
        let hs = enumerate_histories(&g, &bits("01"), VBranch::Zero).unwrap();
        let lines = to_json_lines(g.layout(), &hs, None);
        assert_eq!(lines.lines().count(), 16);
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(first["path"][0], "00|0");
        let dot = to_dot(&g, &hs).unwrap();
        assert!(dot.starts_with("digraph histories {"));
        assert!(dot.contains("s0_0 -> s1_6"));
        assert!("2".parse::<VBranch>().is_err());
    }
}
