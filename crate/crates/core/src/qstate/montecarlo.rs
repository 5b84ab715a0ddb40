//! Explicit random-phase sampling, used only to validate the mixture
//! realization of the setting register.
//!
//! The setting basis is restricted to the settings present in the ensemble,
//! so the joint space has dimension `branches × state dimension`, ordered
//! branch-major in canonical setting order.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::BranchEnsemble;

pub const DEFAULT_SAMPLES: usize = 10_000;

/// One independent uniform phase per branch.
pub fn sample_phases<R: Rng + ?Sized>(ensemble: &BranchEnsemble, rng: &mut R) -> Vec<f64> {
    ensemble
        .branches()
        .iter()
        .map(|_| rng.random_range(0.0..TAU))
        .collect()
}

/// The pure ket `Σ_b √w_b e^{iφ_b} |b⟩|ψ_b⟩` for one phase sample.
pub fn coherent_vector(ensemble: &BranchEnsemble, phases: &[f64]) -> Vec<Complex64> {
    assert_eq!(phases.len(), ensemble.branches().len());
    ensemble
        .branches()
        .iter()
        .zip(phases)
        .flat_map(|(b, &phi)| {
            let factor = Complex64::from_polar(b.weight.sqrt(), phi);
            b.state.amplitudes().iter().map(move |&a| a * factor)
        })
        .collect()
}

/// Block-diagonal density matrix of the mixture in the joint space.
pub fn mixture_density(ensemble: &BranchEnsemble) -> DMatrix<Complex64> {
    let d = ensemble.layout().dimension();
    let n = d * ensemble.branches().len();
    let mut rho = DMatrix::zeros(n, n);
    for (k, b) in ensemble.branches().iter().enumerate() {
        let amps = b.state.amplitudes();
        for i in 0..d {
            for j in 0..d {
                rho[(k * d + i, k * d + j)] = amps[i] * amps[j].conj() * b.weight;
            }
        }
    }
    rho
}

/// Average of `|ψ_φ⟩⟨ψ_φ|` over `samples` independent phase draws.
pub fn monte_carlo_density<R: Rng + ?Sized>(
    ensemble: &BranchEnsemble,
    samples: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let n = ensemble.layout().dimension() * ensemble.branches().len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
    for _ in 0..samples {
        let phases = sample_phases(ensemble, rng);
        let v = coherent_vector(ensemble, &phases);
        for i in 0..n {
            if v[i].norm_sqr() == 0.0 {
                continue;
            }
            let row = &mut acc[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += v[i] * v[j].conj();
            }
        }
    }
    let scale = 1.0 / samples.max(1) as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i <= j {
            acc[i * n + j] * scale
        } else {
            (acc[j * n + i] * scale).conj()
        }
    })
}

/// Largest entrywise deviation between the sampled and exact density matrices.
pub fn monte_carlo_deviation<R: Rng + ?Sized>(
    ensemble: &BranchEnsemble,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let sampled = monte_carlo_density(ensemble, samples, rng);
    let exact = mixture_density(ensemble);
    (sampled - exact)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
