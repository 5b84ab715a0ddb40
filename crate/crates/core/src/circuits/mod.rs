//! Staged solver circuits: Grover at n = 2, Deutsch–Jozsa and the
//! single-query Simon circuit at n = 2, plus stage-by-stage execution and a
//! check that a circuit leaves every setting in a sharp A state.

mod stage;
mod trace;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::oracle::{build_grover, dj_tables, simon_tables, OracleProblem, OracleTables};
use crate::qstate::{
    apply_stage, measure_register, BitString, BranchEnsemble, OutcomeDistribution, PureState,
    QStateError, Register, RegisterLayout,
};
use crate::TOLERANCE;

pub use stage::{Stage, StageKind};
pub use trace::StageTrace;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("{circuit} with n={n} is not supported (allowed: {allowed})")]
    SizeOutOfRange {
        circuit: &'static str,
        n: u32,
        allowed: &'static str,
    },
    #[error("ensemble layout does not match the circuit layout")]
    LayoutMismatch,
    #[error("output register {register} is not sharp for setting {setting}: {distribution}")]
    NotSharp {
        setting: BitString,
        register: String,
        distribution: String,
    },
    #[error("setting {setting}: circuit outputs {found}, problem expects {expected}")]
    OutcomeMismatch {
        setting: BitString,
        expected: BitString,
        found: BitString,
    },
    #[error(transparent)]
    State(#[from] QStateError),
}

/// An ordered list of stages over a fixed layout and initial state.
///
/// Circuits belong to the solver, so they never act on the setting register;
/// the bitwise-NOT preparation stage is applied separately with
/// [`apply_stage`].
#[derive(Clone, Debug)]
pub struct Circuit {
    name: String,
    layout: RegisterLayout,
    initial: PureState,
    stages: Vec<Stage>,
    query_stages: Vec<usize>,
    output_register: String,
    oracle: Option<Arc<OracleTables>>,
}

impl Circuit {
    pub fn new(
        name: impl Into<String>,
        layout: RegisterLayout,
        initial: PureState,
        stages: Vec<Stage>,
        output_register: &str,
    ) -> Result<Self, CircuitError> {
        if layout.setting_register().is_none() {
            return Err(CircuitError::InvalidCircuit(
                "layout has no setting register".into(),
            ));
        }
        if initial.dimension() != layout.dimension() {
            return Err(CircuitError::InvalidCircuit(format!(
                "initial state dimension {} differs from layout dimension {}",
                initial.dimension(),
                layout.dimension()
            )));
        }
        layout.slot(output_register)?;
        for stage in &stages {
            if matches!(stage.kind, StageKind::BitwiseNot { .. }) {
                return Err(CircuitError::InvalidCircuit(format!(
                    "stage {} acts on the setting register",
                    stage.label
                )));
            }
            for register in stage.registers() {
                layout.slot(register)?;
            }
        }
        let query_stages = stages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_query())
            .map(|(i, _)| i)
            .collect();
        let oracle = stages.iter().find_map(|s| match &s.kind {
            StageKind::OracleXor { oracle, .. } | StageKind::OraclePhase { oracle, .. } => {
                Some(Arc::clone(oracle))
            }
            _ => None,
        });
        Ok(Self {
            name: name.into(),
            layout,
            initial,
            stages,
            query_stages,
            output_register: output_register.into(),
            oracle,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn initial(&self) -> &PureState {
        &self.initial
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Indices of the oracle stages, in order.
    pub fn query_stages(&self) -> &[usize] {
        &self.query_stages
    }

    pub fn output_register(&self) -> &str {
        &self.output_register
    }

    /// Settings known to the circuit's oracle.
    pub fn settings(&self) -> Vec<BitString> {
        self.oracle
            .as_ref()
            .map(|o| o.settings().copied().collect())
            .unwrap_or_default()
    }

    /// The oracle read by the query stages.
    pub fn oracle(&self) -> Option<&OracleTables> {
        self.oracle.as_deref()
    }

    /// The same layout, initial state and oracle with no stages.
    pub fn without_stages(&self) -> Self {
        Self {
            stages: Vec::new(),
            query_stages: Vec::new(),
            ..self.clone()
        }
    }

    /// Uniform mixture of the initial state over `settings`.
    pub fn input_ensemble(
        &self,
        settings: impl IntoIterator<Item = BitString>,
    ) -> Result<BranchEnsemble, CircuitError> {
        Ok(BranchEnsemble::uniform(
            self.layout.clone(),
            settings,
            &self.initial,
        )?)
    }

    /// Uniform mixture over every setting of the circuit's oracle.
    pub fn full_input(&self) -> Result<BranchEnsemble, CircuitError> {
        self.input_ensemble(self.settings())
    }

    pub fn single_input(&self, setting: BitString) -> Result<BranchEnsemble, CircuitError> {
        Ok(BranchEnsemble::single(
            self.layout.clone(),
            setting,
            self.initial.clone(),
        )?)
    }
}

/// Runs every stage, keeping the state at each stage boundary.
pub fn run(circuit: &Circuit, ensemble: &BranchEnsemble) -> Result<StageTrace, CircuitError> {
    if ensemble.layout() != circuit.layout() {
        return Err(CircuitError::LayoutMismatch);
    }
    let mut states = vec![ensemble.clone()];
    for stage in circuit.stages() {
        let next = apply_stage(states.last().expect("trace starts with the input"), stage)?;
        states.push(next);
    }
    let labels = circuit.stages().iter().map(|s| s.label.clone()).collect();
    Ok(StageTrace::new(labels, states))
}

/// Output distribution of the circuit's output register for one setting.
pub fn output_distribution(
    circuit: &Circuit,
    setting: BitString,
) -> Result<OutcomeDistribution, CircuitError> {
    let trace = run(circuit, &circuit.single_input(setting)?)?;
    Ok(measure_register(trace.output(), circuit.output_register())?)
}

/// The basis label the circuit leaves in its output register for setting `b`.
///
/// A register whose Born distribution has a single outcome is in that basis
/// state up to phase, so certainty of the readout is the sharpness test.
pub fn derive_a_outcome(circuit: &Circuit, b: &BitString) -> Result<BitString, CircuitError> {
    let dist = output_distribution(circuit, *b)?;
    dist.certain_outcome(TOLERANCE)
        .ok_or_else(|| CircuitError::NotSharp {
            setting: *b,
            register: circuit.output_register().into(),
            distribution: dist
                .entries()
                .iter()
                .map(|(o, p)| format!("{o}:{p:.6}"))
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Checks the sharp-output form for every setting of `problem`: the output
/// register ends in `|a_outcome(b)⟩` with probability one.
pub fn check_inout(circuit: &Circuit, problem: &OracleProblem) -> Result<(), CircuitError> {
    for s in problem.settings() {
        let found = derive_a_outcome(circuit, &s.id)?;
        if found != s.a_outcome {
            return Err(CircuitError::OutcomeMismatch {
                setting: s.id,
                expected: s.a_outcome,
                found,
            });
        }
    }
    Ok(())
}

/// Product of all stage matrices for one setting (last stage leftmost).
pub fn composed_matrix(
    circuit: &Circuit,
    setting: &BitString,
) -> Result<DMatrix<Complex64>, CircuitError> {
    let d = circuit.layout().dimension();
    let mut total = DMatrix::<Complex64>::identity(d, d);
    for stage in circuit.stages() {
        total = stage.matrix(circuit.layout(), setting)? * total;
    }
    Ok(total)
}

fn minus_state() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)]
}

fn zero_state(width: u32) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << width];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// `|0…0⟩_A |−⟩_V` over layout `A(n), V(m)` with setting register `B(w)`.
fn oracle_layout(
    n: u32,
    m: u32,
    setting_width: u32,
) -> Result<(RegisterLayout, PureState), CircuitError> {
    let layout = RegisterLayout::new(
        vec![Register::new("A", n), Register::new("V", m)],
        Some(Register::new("B", setting_width)),
    )?;
    if m != 1 {
        return Err(CircuitError::InvalidCircuit(
            "register V must be a single qubit".into(),
        ));
    }
    let initial = PureState::product(&layout, &[zero_state(n), minus_state()])?;
    Ok((layout, initial))
}

/// Grover search over four drawers: `Inv_A · U_f · H_A`.
pub fn grover_circuit() -> Result<Circuit, CircuitError> {
    let tables = build_grover(2)
        .map_err(|e| CircuitError::InvalidCircuit(e.to_string()))?
        .tables();
    let (layout, initial) = oracle_layout(2, 1, 2)?;
    Circuit::new(
        "grover:n=2",
        layout,
        initial,
        vec![
            Stage::hadamard("A"),
            Stage::oracle_xor("A", "V", Arc::new(tables)),
            Stage::inversion_about_mean("A"),
        ],
        "A",
    )
}

/// Deutsch–Jozsa: `H_A · U_f · H_A`.
pub fn dj_circuit(n: u32) -> Result<Circuit, CircuitError> {
    if !(1..=3).contains(&n) {
        return Err(CircuitError::SizeOutOfRange {
            circuit: "dj",
            n,
            allowed: "1..=3",
        });
    }
    let tables = dj_tables(n).map_err(|e| CircuitError::InvalidCircuit(e.to_string()))?;
    let (layout, initial) = oracle_layout(n, 1, 1 << n)?;
    Circuit::new(
        format!("dj:n={n}"),
        layout,
        initial,
        vec![
            Stage::hadamard("A"),
            Stage::oracle_xor("A", "V", Arc::new(tables)),
            Stage::hadamard("A"),
        ],
        "A",
    )
}

/// Single-query Simon circuit at n = 2: `P_A · H_A · U_f · H_A`, where `P_A`
/// swaps `|01⟩` and `|10⟩`.
pub fn simon1q_circuit() -> Result<Circuit, CircuitError> {
    let tables = simon_tables(2).map_err(|e| CircuitError::InvalidCircuit(e.to_string()))?;
    let (layout, initial) = oracle_layout(2, tables.out_bits(), 4)?;
    Circuit::new(
        "simon:n=2",
        layout,
        initial,
        vec![
            Stage::hadamard("A"),
            Stage::oracle_xor("A", "V", Arc::new(tables)),
            Stage::hadamard("A"),
            Stage::permutation("A", vec![0, 2, 1, 3])?,
        ],
        "A",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_dj, build_simon};
    use crate::qstate::{bits, record_outcome_pairs};

    fn sharp(circuit: &Circuit, setting: &str) -> (BitString, f64) {
        let d = output_distribution(circuit, bits(setting)).unwrap();
        let (o, p) = d
            .entries()
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (o, p)
    }

    #[test]
    fn grover_finds_every_drawer() {
        let g = grover_circuit().unwrap();
        for b in ["00", "01", "10", "11"] {
            let (o, p) = sharp(&g, b);
            assert_eq!(o, bits(b));
            assert!((p - 1.0).abs() < 1e-9);
        }
        assert_eq!(g.query_stages(), &[1]);
    }

    #[test]
    fn grover_intermediate_sign() {
        let g = grover_circuit().unwrap();
        let trace = run(&g, &g.single_input(bits("00")).unwrap()).unwrap();
        let after_oracle = &trace.states()[2].branches()[0].state;
        // index = A<<1 | V; V in (|0⟩−|1⟩)/√2, A uniform with |00⟩ flipped
        let amp = after_oracle.amplitudes();
        let h = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((amp[0].re + h).abs() < 1e-12 && (amp[1].re - h).abs() < 1e-12);
        assert!((amp[2].re - h).abs() < 1e-12 && (amp[3].re + h).abs() < 1e-12);
    }

    #[test]
    fn grover_record_pairs_with_not_preparation() {
        let g = grover_circuit().unwrap();
        let prepared = apply_stage(&g.full_input().unwrap(), &Stage::bitwise_not("B")).unwrap();
        let out = run(&g, &prepared).unwrap();
        let pairs = record_outcome_pairs(out.output(), "A").unwrap();
        let expected = [("00", "11"), ("01", "10"), ("10", "01"), ("11", "00")];
        assert_eq!(pairs.len(), 4);
        for (((r, a), p), (er, ea)) in pairs.iter().zip(expected) {
            assert_eq!((*r, *a), (bits(er), bits(ea)));
            assert!((p - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn dj_outcomes() {
        let dj = dj_circuit(2).unwrap();
        for (b, a) in [
            ("0000", "00"),
            ("1111", "00"),
            ("0011", "10"),
            ("1100", "10"),
            ("0101", "01"),
            ("1001", "11"),
        ] {
            assert_eq!(
                derive_a_outcome(&dj, &bits(b)).unwrap(),
                bits(a),
                "setting {b}"
            );
        }
        assert!(dj_circuit(4).is_err());
        check_inout(&dj, &build_dj(2).unwrap()).unwrap();
    }

    #[test]
    fn simon_single_query_finds_period() {
        let s = simon1q_circuit().unwrap();
        for (b, h) in [
            ("0011", "01"),
            ("0101", "10"),
            ("0110", "11"),
            ("1100", "01"),
        ] {
            assert_eq!(derive_a_outcome(&s, &bits(b)).unwrap(), bits(h));
        }
        check_inout(&s, &build_simon(2).unwrap()).unwrap();
        check_inout(&grover_circuit().unwrap(), &build_grover(2).unwrap()).unwrap();
    }

    #[test]
    fn composed_matrix_matches_staged_run() {
        for c in [
            grover_circuit().unwrap(),
            dj_circuit(2).unwrap(),
            simon1q_circuit().unwrap(),
        ] {
            for b in c.settings() {
                let m = composed_matrix(&c, &b).unwrap();
                let direct = &m * nalgebra::DVector::from_column_slice(c.initial().amplitudes());
                let trace = run(&c, &c.single_input(b).unwrap()).unwrap();
                let staged = trace.output().branches()[0].state.amplitudes();
                for (x, y) in direct.iter().zip(staged) {
                    assert!((x - y).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn run_rejects_foreign_layout_and_empty_circuit_is_identity() {
        let g = grover_circuit().unwrap();
        let dj = dj_circuit(2).unwrap();
        assert!(matches!(
            run(&g, &dj.single_input(bits("0011")).unwrap()),
            Err(CircuitError::LayoutMismatch)
        ));
        let input = g.full_input().unwrap();
        let trace = run(&g.without_stages(), &input).unwrap();
        assert_eq!(trace.states().len(), 1);
        assert_eq!(trace.output(), &input);
    }

    #[test]
    fn circuits_reject_setting_register_stages() {
        let g = grover_circuit().unwrap();
        let mut stages = g.stages().to_vec();
        stages.push(Stage::bitwise_not("B"));
        assert!(Circuit::new("x", g.layout().clone(), g.initial().clone(), stages, "A").is_err());
    }
}
