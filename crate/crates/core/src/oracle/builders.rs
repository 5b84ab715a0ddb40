use super::{Family, OracleError, OracleProblem, OracleTables, Setting};
use crate::circuits::{derive_a_outcome, dj_circuit};
use crate::qstate::BitString;

/// Unstructured search: `f_b(a) = 1` iff `a = b`.
pub fn build_grover(n: u32) -> Result<OracleProblem, OracleError> {
    if !(1..=8).contains(&n) {
        return Err(OracleError::SizeOutOfRange {
            problem: "grover",
            n,
            allowed: "1..=8",
        });
    }
    let size = 1u64 << n;
    let settings = (0..size)
        .map(|b| {
            let id = BitString::new(b, n)?;
            Ok(Setting {
                id,
                table: (0..size).map(|a| u64::from(a == b)).collect(),
                solution: id.to_string(),
                a_outcome: id,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    OracleProblem::new(format!("grover:n={n}"), n, 1, Family::Linear, settings)
}

fn check_dj(n: u32) -> Result<(), OracleError> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(OracleError::SizeOutOfRange {
            problem: "dj",
            n,
            allowed: "1..=3",
        })
    }
}

/// Constant and balanced tables; the setting id is the table itself, `f(0)`
/// leftmost.
pub fn dj_tables(n: u32) -> Result<OracleTables, OracleError> {
    check_dj(n)?;
    let rows = 1u32 << n;
    let mut tables = Vec::new();
    for v in 0..(1u64 << rows) {
        let ones = v.count_ones();
        if ones == 0 || ones == rows || ones == rows / 2 {
            let id = BitString::new(v, rows)?;
            tables.push((id, id.chunks(1)));
        }
    }
    Ok(OracleTables::new(n, 1, tables))
}

/// Deutsch–Jozsa problem. Each setting's a_outcome is whatever the DJ circuit
/// leaves in register A, so this fails when the circuit output is not a
/// basis state (balanced tables that are not affine, which first occur at
/// n = 3).
pub fn build_dj(n: u32) -> Result<OracleProblem, OracleError> {
    let tables = dj_tables(n)?;
    let circuit = dj_circuit(n).map_err(Box::new)?;
    let rows = 1u32 << n;
    let mut settings = Vec::new();
    for id in tables.settings() {
        let ones = id.value().count_ones();
        let a_outcome = derive_a_outcome(&circuit, id).map_err(Box::new)?;
        settings.push(Setting {
            id: *id,
            table: id.chunks(1),
            solution: if ones == 0 || ones == rows {
                "constant"
            } else {
                "balanced"
            }
            .to_string(),
            a_outcome,
        });
    }
    OracleProblem::new(format!("dj:n={n}"), n, 1, Family::Cells, settings)
}

fn check_simon(n: u32) -> Result<(), OracleError> {
    if (2..=3).contains(&n) {
        Ok(())
    } else {
        Err(OracleError::SizeOutOfRange {
            problem: "simon",
            n,
            allowed: "2..=3",
        })
    }
}

fn permutations(items: &[u64]) -> Vec<Vec<u64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Every Simon table for period `h`, keyed by id (concatenated entries).
fn simon_settings(n: u32) -> Result<Vec<(BitString, Vec<u64>, u64)>, OracleError> {
    check_simon(n)?;
    let m = n - 1;
    let size = 1u64 << n;
    let values: Vec<u64> = (0..1u64 << m).collect();
    let mut out = Vec::new();
    for h in 1..size {
        // cosets {a, a^h} listed by their smaller element
        let cosets: Vec<u64> = (0..size).filter(|&a| a < a ^ h).collect();
        for assignment in permutations(&values) {
            let mut table = vec![0u64; size as usize];
            for (&rep, &value) in cosets.iter().zip(&assignment) {
                table[rep as usize] = value;
                table[(rep ^ h) as usize] = value;
            }
            let id_value = table.iter().fold(0u64, |acc, &v| (acc << m) | v);
            let id = BitString::new(id_value, (size as u32) * m)?;
            out.push((id, table, h));
        }
    }
    Ok(out)
}

pub fn simon_tables(n: u32) -> Result<OracleTables, OracleError> {
    let settings = simon_settings(n)?;
    Ok(OracleTables::new(
        n,
        n - 1,
        settings.into_iter().map(|(id, table, _)| (id, table)),
    ))
}

/// Simon's problem: `f_b(a) = f_b(c)` iff `c ∈ {a, a ⊕ h}`; the solution is `h`.
pub fn build_simon(n: u32) -> Result<OracleProblem, OracleError> {
    let settings = simon_settings(n)?
        .into_iter()
        .map(|(id, table, h)| {
            let period = BitString::new(h, n)?;
            Ok(Setting {
                id,
                table,
                solution: period.to_string(),
                a_outcome: period,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    OracleProblem::new(format!("simon:n={n}"), n, n - 1, Family::Cells, settings)
}
