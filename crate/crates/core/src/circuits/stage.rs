use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::oracle::OracleTables;
use crate::qstate::{BitString, QStateError, RegisterLayout, RegisterSlot};
use crate::TOLERANCE;

/// The unitary a stage applies.
#[derive(Clone, Debug, PartialEq)]
pub enum StageKind {
    /// `H^{⊗w}` on one register.
    Hadamard { register: String },
    /// `|a⟩|v⟩ → |a⟩|v ⊕ f_b(a)⟩`.
    OracleXor {
        argument: String,
        target: String,
        oracle: Arc<OracleTables>,
    },
    /// `|a⟩ → (−1)^{parity f_b(a)} |a⟩`.
    OraclePhase {
        argument: String,
        oracle: Arc<OracleTables>,
    },
    /// `2|u⟩⟨u| − I` with `|u⟩` the uniform superposition of the register.
    InversionAboutMean { register: String },
    /// Basis permutation `|k⟩ → |map[k]⟩`.
    Permutation { register: String, map: Vec<usize> },
    /// Complements every bit of the setting register (a relabeling of the
    /// branches; amplitudes are untouched).
    BitwiseNot { register: String },
    /// Arbitrary unitary on one register.
    Custom {
        register: String,
        matrix: DMatrix<Complex64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub label: String,
}

impl Stage {
    pub fn hadamard(register: &str) -> Self {
        Self {
            label: format!("H_{register}"),
            kind: StageKind::Hadamard {
                register: register.into(),
            },
        }
    }

    pub fn oracle_xor(argument: &str, target: &str, oracle: Arc<OracleTables>) -> Self {
        Self {
            label: "U_f".into(),
            kind: StageKind::OracleXor {
                argument: argument.into(),
                target: target.into(),
                oracle,
            },
        }
    }

    pub fn oracle_phase(argument: &str, oracle: Arc<OracleTables>) -> Self {
        Self {
            label: "U_f(phase)".into(),
            kind: StageKind::OraclePhase {
                argument: argument.into(),
                oracle,
            },
        }
    }

    pub fn inversion_about_mean(register: &str) -> Self {
        Self {
            label: format!("Inv_{register}"),
            kind: StageKind::InversionAboutMean {
                register: register.into(),
            },
        }
    }

    /// Fails unless `map` is a bijection on `0..map.len()` with a power-of-two length.
    pub fn permutation(register: &str, map: Vec<usize>) -> Result<Self, QStateError> {
        let mut hit = vec![false; map.len()];
        let bijective = map.len().is_power_of_two()
            && map
                .iter()
                .all(|&k| k < hit.len() && !std::mem::replace(&mut hit[k], true));
        if !bijective {
            return Err(QStateError::StageMismatch {
                register: register.into(),
                reason: format!("permutation map {map:?} is not a bijection"),
            });
        }
        Ok(Self {
            label: format!("P_{register}"),
            kind: StageKind::Permutation {
                register: register.into(),
                map,
            },
        })
    }

    pub fn bitwise_not(register: &str) -> Self {
        Self {
            label: format!("U_{register}"),
            kind: StageKind::BitwiseNot {
                register: register.into(),
            },
        }
    }

    /// Fails unless `matrix` is square, power-of-two sized and unitary.
    pub fn custom(
        register: &str,
        label: &str,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self, QStateError> {
        let mismatch = |reason: String| QStateError::StageMismatch {
            register: register.into(),
            reason,
        };
        if !matrix.is_square() || !matrix.nrows().is_power_of_two() {
            return Err(mismatch(format!(
                "matrix is {}x{}, expected a square power-of-two size",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let product = matrix.adjoint() * &matrix;
        let drift = (product - DMatrix::<Complex64>::identity(matrix.nrows(), matrix.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if drift > TOLERANCE {
            return Err(QStateError::NonUnitary { drift });
        }
        Ok(Self {
            label: label.into(),
            kind: StageKind::Custom {
                register: register.into(),
                matrix,
            },
        })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_query(&self) -> bool {
        matches!(
            self.kind,
            StageKind::OracleXor { .. } | StageKind::OraclePhase { .. }
        )
    }

    /// Names of the registers this stage touches.
    pub fn registers(&self) -> Vec<&str> {
        match &self.kind {
            StageKind::Hadamard { register }
            | StageKind::InversionAboutMean { register }
            | StageKind::Permutation { register, .. }
            | StageKind::BitwiseNot { register }
            | StageKind::Custom { register, .. } => vec![register],
            StageKind::OracleXor {
                argument, target, ..
            } => vec![argument, target],
            StageKind::OraclePhase { argument, .. } => vec![argument],
        }
    }

    /// The oracle tables read by a query stage.
    pub fn oracle(&self) -> Option<&OracleTables> {
        match &self.kind {
            StageKind::OracleXor { oracle, .. } | StageKind::OraclePhase { oracle, .. } => {
                Some(oracle)
            }
            _ => None,
        }
    }

    /// Applies the stage to one branch's amplitudes under `setting`.
    ///
    /// The bitwise-NOT stage acts on the branch label only, so here it is the
    /// identity.
    pub fn transform(
        &self,
        layout: &RegisterLayout,
        setting: &BitString,
        amplitudes: &[Complex64],
    ) -> Result<Vec<Complex64>, QStateError> {
        if amplitudes.len() != layout.dimension() {
            return Err(QStateError::InvalidState(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                layout.dimension()
            )));
        }
        match &self.kind {
            StageKind::Hadamard { register } => {
                let slot = quantum_slot(layout, register)?;
                Ok(apply_local(slot, amplitudes, walsh_hadamard))
            }
            StageKind::InversionAboutMean { register } => {
                let slot = quantum_slot(layout, register)?;
                Ok(apply_local(slot, amplitudes, |v| {
                    let mean = v.iter().sum::<Complex64>() / v.len() as f64;
                    v.iter().map(|&x| mean * 2.0 - x).collect()
                }))
            }
            StageKind::Permutation { register, map } => {
                let slot = quantum_slot(layout, register)?;
                check_local_size(slot, map.len(), register)?;
                Ok(apply_local(slot, amplitudes, |v| {
                    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
                    for (k, &x) in v.iter().enumerate() {
                        out[map[k]] = x;
                    }
                    out
                }))
            }
            StageKind::Custom { register, matrix } => {
                let slot = quantum_slot(layout, register)?;
                check_local_size(slot, matrix.nrows(), register)?;
                Ok(apply_local(slot, amplitudes, |v| {
                    (0..v.len())
                        .map(|i| (0..v.len()).map(|j| matrix[(i, j)] * v[j]).sum())
                        .collect()
                }))
            }
            StageKind::BitwiseNot { register } => {
                if !layout.is_setting_register(register) {
                    return Err(QStateError::StageMismatch {
                        register: register.clone(),
                        reason: "bitwise NOT acts on the setting register only".into(),
                    });
                }
                Ok(amplitudes.to_vec())
            }
            StageKind::OracleXor {
                argument,
                target,
                oracle,
            } => {
                let arg = quantum_slot(layout, argument)?;
                let tgt = quantum_slot(layout, target)?;
                check_oracle(arg, oracle, argument)?;
                if tgt.width != oracle.out_bits() {
                    return Err(QStateError::StageMismatch {
                        register: target.clone(),
                        reason: format!(
                            "width {} differs from oracle output width {}",
                            tgt.width,
                            oracle.out_bits()
                        ),
                    });
                }
                let table = oracle
                    .table(setting)
                    .ok_or(QStateError::UnknownSetting(*setting))?;
                let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
                for (index, &amp) in amplitudes.iter().enumerate() {
                    let value = table[arg.extract(index)] as usize;
                    out[tgt.replace(index, tgt.extract(index) ^ value)] = amp;
                }
                Ok(out)
            }
            StageKind::OraclePhase { argument, oracle } => {
                let arg = quantum_slot(layout, argument)?;
                check_oracle(arg, oracle, argument)?;
                let table = oracle
                    .table(setting)
                    .ok_or(QStateError::UnknownSetting(*setting))?;
                Ok(amplitudes
                    .iter()
                    .enumerate()
                    .map(|(index, &amp)| {
                        if table[arg.extract(index)].count_ones() % 2 == 1 {
                            -amp
                        } else {
                            amp
                        }
                    })
                    .collect())
            }
        }
    }

    /// Dense matrix of the stage for one setting (columns are images of basis states).
    pub fn matrix(
        &self,
        layout: &RegisterLayout,
        setting: &BitString,
    ) -> Result<DMatrix<Complex64>, QStateError> {
        let d = layout.dimension();
        let mut m = DMatrix::zeros(d, d);
        let mut basis = vec![Complex64::new(0.0, 0.0); d];
        for j in 0..d {
            basis[j] = Complex64::new(1.0, 0.0);
            let column = self.transform(layout, setting, &basis)?;
            basis[j] = Complex64::new(0.0, 0.0);
            for (i, z) in column.into_iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }
}

fn quantum_slot(layout: &RegisterLayout, register: &str) -> Result<RegisterSlot, QStateError> {
    if layout.is_setting_register(register) {
        return Err(QStateError::StageMismatch {
            register: register.into(),
            reason: "only the bitwise NOT stage may act on the setting register".into(),
        });
    }
    layout.slot(register)
}

fn check_local_size(slot: RegisterSlot, size: usize, register: &str) -> Result<(), QStateError> {
    if size == slot.dimension() {
        Ok(())
    } else {
        Err(QStateError::StageMismatch {
            register: register.into(),
            reason: format!(
                "operator size {size} differs from register dimension {}",
                slot.dimension()
            ),
        })
    }
}

fn check_oracle(
    arg: RegisterSlot,
    oracle: &OracleTables,
    argument: &str,
) -> Result<(), QStateError> {
    if arg.width == oracle.arg_bits() {
        Ok(())
    } else {
        Err(QStateError::StageMismatch {
            register: argument.into(),
            reason: format!(
                "width {} differs from oracle argument width {}",
                arg.width,
                oracle.arg_bits()
            ),
        })
    }
}

/// Applies `local` to every fiber of the register, holding the other bits fixed.
fn apply_local<F>(slot: RegisterSlot, amplitudes: &[Complex64], local: F) -> Vec<Complex64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    let mut fiber = vec![Complex64::new(0.0, 0.0); slot.dimension()];
    for base in (0..amplitudes.len()).filter(|&i| i & slot.mask() == 0) {
        for (k, x) in fiber.iter_mut().enumerate() {
            *x = amplitudes[slot.replace(base, k)];
        }
        for (k, y) in local(&fiber).into_iter().enumerate() {
            out[slot.replace(base, k)] = y;
        }
    }
    out
}

/// Normalized fast Walsh–Hadamard transform.
fn walsh_hadamard(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    let mut h = 1;
    while h < out.len() {
        for start in (0..out.len()).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (out[i], out[i + h]);
                out[i] = x + y;
                out[i + h] = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (out.len() as f64).sqrt();
    out.iter_mut().for_each(|z| *z *= scale);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::build_grover;
    use crate::qstate::{bits, Register};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn av() -> RegisterLayout {
        RegisterLayout::new(
            vec![Register::new("A", 2), Register::new("V", 1)],
            Some(Register::new("B", 2)),
        )
        .unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn hadamard_spreads_a() {
        let layout = av();
        let mut input = vec![c(0.0); 8];
        input[0] = c(1.0);
        let out = Stage::hadamard("A")
            .transform(&layout, &bits("00"), &input)
            .unwrap();
        // V=0 entries of every A value
        let expected: Vec<_> = (0..8)
            .map(|i| if i % 2 == 0 { c(0.5) } else { c(0.0) })
            .collect();
        assert!(close(&out, &expected));
    }

    #[test]
    fn phase_oracle_flips_marked_term() {
        let layout =
            RegisterLayout::new(vec![Register::new("A", 2)], Some(Register::new("B", 2))).unwrap();
        let tables = Arc::new(build_grover(2).unwrap().tables());
        let out = Stage::oracle_phase("A", tables)
            .transform(&layout, &bits("01"), &[c(0.5); 4])
            .unwrap();
        assert!(close(&out, &[c(0.5), c(-0.5), c(0.5), c(0.5)]));
    }

    #[test]
    fn inversion_about_mean_is_diffusion() {
        let layout = RegisterLayout::new(vec![Register::new("A", 2)], None).unwrap();
        let m = Stage::inversion_about_mean("A")
            .matrix(&layout, &bits("0"))
            .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { -0.5 } else { 0.5 };
                assert!((m[(i, j)] - c(expected)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(Stage::permutation("A", vec![0, 2, 1, 3]).is_ok());
        assert!(Stage::permutation("A", vec![0, 0, 1, 3]).is_err());
        assert!(Stage::permutation("A", vec![0, 1, 2]).is_err());
        let not_unitary = DMatrix::from_element(2, 2, c(1.0));
        assert!(matches!(
            Stage::custom("A", "M", not_unitary),
            Err(QStateError::NonUnitary { .. })
        ));
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        assert!(Stage::custom("V", "X", x).is_ok());
    }

    #[test]
    fn stages_reject_wrong_registers() {
        let layout = av();
        let input = vec![
            c(0.0),
            c(1.0),
            c(0.0),
            c(0.0),
            c(0.0),
            c(0.0),
            c(0.0),
            c(0.0),
        ];
        assert!(matches!(
            Stage::hadamard("W").transform(&layout, &bits("00"), &input),
            Err(QStateError::UnknownRegister(_))
        ));
        assert!(Stage::hadamard("B")
            .transform(&layout, &bits("00"), &input)
            .is_err());
        assert!(Stage::bitwise_not("A")
            .transform(&layout, &bits("00"), &input)
            .is_err());
        let swap = Stage::permutation("V", vec![0, 2, 1, 3]).unwrap();
        assert!(swap.transform(&layout, &bits("00"), &input).is_err());
        let tables = Arc::new(build_grover(2).unwrap().tables());
        let xor = Stage::oracle_xor("A", "V", tables);
        assert!(matches!(
            xor.transform(&layout, &bits("0"), &input),
            Err(QStateError::UnknownSetting(_))
        ));
    }
}
