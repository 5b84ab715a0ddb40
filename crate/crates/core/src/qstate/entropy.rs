use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{BranchEnsemble, OutcomeDistribution, QStateError};
use crate::ZERO_FLOOR;

/// Reduced density operator of a quantum register, tracing out every other
/// register and mixing the branches by weight.
pub fn reduced_density(
    ensemble: &BranchEnsemble,
    register: &str,
) -> Result<DMatrix<Complex64>, QStateError> {
    let slot = ensemble.layout().slot(register)?;
    let d = slot.dimension();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for branch in ensemble.branches() {
        let amps = branch.state.amplitudes();
        for (i, &amp) in amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let row = slot.extract(i);
            for col in 0..d {
                let partner = amps[slot.replace(i, col)];
                rho[(row, col)] += amp * partner.conj() * branch.weight;
            }
        }
    }
    Ok(rho)
}

/// Base-2 von Neumann entropy of a Hermitian density matrix.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> f64 {
    let eigen = SymmetricEigen::new(rho.clone());
    eigen
        .eigenvalues
        .iter()
        .filter(|&&l| l > ZERO_FLOOR)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy, in bits, of the reduced state of `register`.
///
/// The setting register's reduced state is diagonal in the setting basis, so
/// its entropy is the Shannon entropy of the branch weights.
pub fn reduced_entropy(ensemble: &BranchEnsemble, register: &str) -> Result<f64, QStateError> {
    if ensemble.layout().is_setting_register(register) {
        return Ok(entropy_bits(ensemble.branches().iter().map(|b| b.weight)));
    }
    Ok(von_neumann_entropy(&reduced_density(ensemble, register)?))
}

pub fn shannon_entropy(dist: &OutcomeDistribution) -> f64 {
    entropy_bits(dist.entries().iter().map(|e| e.1))
}

pub(crate) fn entropy_bits(probabilities: impl Iterator<Item = f64>) -> f64 {
    probabilities
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}
