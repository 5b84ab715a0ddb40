use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;

use super::{BitString, QStateError, RegisterLayout};
use crate::circuits::{Stage, StageKind};
use crate::{TOLERANCE, ZERO_FLOOR};

/// Normalized amplitude vector over the non-setting registers of a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QStateError> {
        if !amplitudes.len().is_power_of_two() {
            return Err(QStateError::InvalidState(format!(
                "dimension {} is not a power of two",
                amplitudes.len()
            )));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QStateError::InvalidState(format!(
                "norm {norm} differs from 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dimension: usize, index: usize) -> Result<Self, QStateError> {
        if index >= dimension {
            return Err(QStateError::InvalidState(format!(
                "basis index {index} outside dimension {dimension}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes)
    }

    /// Tensor product of per-register factors given in layout order.
    pub fn product(
        layout: &RegisterLayout,
        factors: &[Vec<Complex64>],
    ) -> Result<Self, QStateError> {
        if factors.len() != layout.registers().len() {
            return Err(QStateError::InvalidState(format!(
                "{} factors for {} registers",
                factors.len(),
                layout.registers().len()
            )));
        }
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for (reg, factor) in layout.registers().iter().zip(factors) {
            if factor.len() != 1usize << reg.width {
                return Err(QStateError::InvalidState(format!(
                    "factor for {} has length {}, expected {}",
                    reg.name,
                    factor.len(),
                    1usize << reg.width
                )));
            }
            amplitudes = amplitudes
                .iter()
                .flat_map(|&hi| factor.iter().map(move |&lo| hi * lo))
                .collect();
        }
        Self::new(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Wraps a transformed vector, failing if the norm drifted.
    pub(crate) fn from_transformed(amplitudes: Vec<Complex64>) -> Result<Self, QStateError> {
        let drift = (norm(&amplitudes) - 1.0).abs();
        if drift > TOLERANCE {
            return Err(QStateError::NonUnitary { drift });
        }
        Ok(Self { amplitudes })
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.dimension() == other.dimension()
            && self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a - b).norm() <= tolerance)
    }
}

fn norm(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// One setting-labeled member of the mixture.
///
/// `record` is the raw outcome of the preparation measurement on `B`. It equals
/// `setting` until a bitwise-NOT preparation stage relabels the setting.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub setting: BitString,
    pub record: BitString,
    pub weight: f64,
    pub state: PureState,
}

/// Classical mixture of setting-labeled pure states.
///
/// This stands in for the random-phase superposition over the setting
/// register: averaging the phases kills every cross term between different
/// settings, which leaves exactly this block-diagonal mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    layout: RegisterLayout,
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn new(layout: RegisterLayout, mut branches: Vec<Branch>) -> Result<Self, QStateError> {
        if branches.is_empty() {
            return Err(QStateError::InvalidEnsemble("no branches".into()));
        }
        let setting_width = layout
            .setting_register()
            .map(|r| r.width)
            .ok_or_else(|| QStateError::InvalidEnsemble("layout has no setting register".into()))?;
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for branch in &branches {
            if branch.setting.width() != setting_width || branch.record.width() != setting_width {
                return Err(QStateError::InvalidEnsemble(format!(
                    "setting {} does not match register width {setting_width}",
                    branch.setting
                )));
            }
            if !seen.insert(branch.setting) {
                return Err(QStateError::InvalidEnsemble(format!(
                    "duplicate setting {}",
                    branch.setting
                )));
            }
            if branch.weight.is_nan() || branch.weight < 0.0 {
                return Err(QStateError::InvalidEnsemble(format!(
                    "negative weight on setting {}",
                    branch.setting
                )));
            }
            if branch.state.dimension() != layout.dimension() {
                return Err(QStateError::InvalidEnsemble(format!(
                    "state dimension {} does not match layout dimension {}",
                    branch.state.dimension(),
                    layout.dimension()
                )));
            }
            total += branch.weight;
        }
        if (total - 1.0).abs() > TOLERANCE {
            return Err(QStateError::InvalidEnsemble(format!(
                "weights sum to {total}"
            )));
        }
        branches.sort_by_key(|b| b.setting);
        Ok(Self { layout, branches })
    }

    /// Equal-weight mixture of `state` over the given settings.
    pub fn uniform(
        layout: RegisterLayout,
        settings: impl IntoIterator<Item = BitString>,
        state: &PureState,
    ) -> Result<Self, QStateError> {
        let settings: Vec<BitString> = settings.into_iter().collect();
        let weight = 1.0 / settings.len().max(1) as f64;
        let branches = settings
            .into_iter()
            .map(|setting| Branch {
                setting,
                record: setting,
                weight,
                state: state.clone(),
            })
            .collect();
        Self::new(layout, branches)
    }

    pub fn single(
        layout: RegisterLayout,
        setting: BitString,
        state: PureState,
    ) -> Result<Self, QStateError> {
        Self::new(
            layout,
            vec![Branch {
                setting,
                record: setting,
                weight: 1.0,
                state,
            }],
        )
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn settings(&self) -> Vec<BitString> {
        self.branches.iter().map(|b| b.setting).collect()
    }

    pub fn branch(&self, setting: &BitString) -> Option<&Branch> {
        self.branches
            .binary_search_by_key(setting, |b| b.setting)
            .ok()
            .map(|i| &self.branches[i])
    }

    /// Branch-by-branch comparison within `tolerance`.
    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.layout == other.layout
            && self.branches.len() == other.branches.len()
            && self.branches.iter().zip(&other.branches).all(|(a, b)| {
                a.setting == b.setting
                    && (a.weight - b.weight).abs() <= tolerance
                    && a.state.approx_eq(&b.state, tolerance)
            })
    }
}

/// Applies one stage to every branch.
///
/// Oracle stages read each branch's setting; the bitwise-NOT stage relabels
/// the settings and leaves the amplitudes alone.
pub fn apply_stage(
    ensemble: &BranchEnsemble,
    stage: &Stage,
) -> Result<BranchEnsemble, QStateError> {
    let layout = ensemble.layout.clone();
    if let StageKind::BitwiseNot { register } = &stage.kind {
        if !layout.is_setting_register(register) {
            return Err(QStateError::UnknownRegister(register.clone()));
        }
        let branches = ensemble
            .branches
            .iter()
            .map(|b| Branch {
                setting: b.setting.complement(),
                ..b.clone()
            })
            .collect();
        return BranchEnsemble::new(layout, branches);
    }
    let mut branches = Vec::with_capacity(ensemble.branches.len());
    for branch in &ensemble.branches {
        let amplitudes = stage.transform(&layout, &branch.setting, branch.state.amplitudes())?;
        branches.push(Branch {
            state: PureState::from_transformed(amplitudes)?,
            ..branch.clone()
        });
    }
    Ok(BranchEnsemble { layout, branches })
}

/// Bob's preparation measurement: collapse onto the branch with `outcome`.
pub fn prepare_setting(
    ensemble: &BranchEnsemble,
    outcome: &BitString,
) -> Result<BranchEnsemble, QStateError> {
    let branch = ensemble
        .branch(outcome)
        .ok_or(QStateError::OutcomeNotPresent(*outcome))?;
    BranchEnsemble::new(
        ensemble.layout.clone(),
        vec![Branch {
            weight: 1.0,
            ..branch.clone()
        }],
    )
}

/// Partial measurement of `B` realized as selection of a subset of settings.
pub fn project_setting_subset(
    ensemble: &BranchEnsemble,
    subset: &BTreeSet<BitString>,
) -> Result<BranchEnsemble, QStateError> {
    let kept: Vec<&Branch> = ensemble
        .branches
        .iter()
        .filter(|b| subset.contains(&b.setting))
        .collect();
    let total: f64 = kept.iter().map(|b| b.weight).sum();
    if kept.is_empty() || total <= 0.0 {
        return Err(QStateError::EmptyProjection);
    }
    let branches = kept
        .into_iter()
        .map(|b| Branch {
            weight: b.weight / total,
            ..b.clone()
        })
        .collect();
    BranchEnsemble::new(ensemble.layout.clone(), branches)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    entries: Vec<(BitString, f64)>,
}

impl OutcomeDistribution {
    /// Builds a distribution; outcomes must be distinct and sum to one.
    pub fn new(mut entries: Vec<(BitString, f64)>) -> Result<Self, QStateError> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(QStateError::InvalidDistribution("repeated outcome".into()));
        }
        if entries
            .iter()
            .any(|e| !(0.0..=1.0 + TOLERANCE).contains(&e.1))
        {
            return Err(QStateError::InvalidDistribution(
                "probability outside [0,1]".into(),
            ));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(QStateError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(BitString, f64)] {
        &self.entries
    }

    pub fn probability(&self, outcome: &BitString) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == *outcome)
            .map_or(0.0, |e| e.1)
    }

    /// The outcome carrying probability one, if any.
    pub fn certain_outcome(&self, tolerance: f64) -> Option<BitString> {
        self.entries
            .iter()
            .find(|e| (e.1 - 1.0).abs() <= tolerance)
            .map(|e| e.0)
    }
}

/// Born-rule distribution of one register, averaged over branches.
///
/// Measuring the setting register returns the branch weights.
pub fn measure_register(
    ensemble: &BranchEnsemble,
    register: &str,
) -> Result<OutcomeDistribution, QStateError> {
    let mut buckets: BTreeMap<BitString, f64> = BTreeMap::new();
    if ensemble.layout.is_setting_register(register) {
        for b in &ensemble.branches {
            *buckets.entry(b.setting).or_default() += b.weight;
        }
    } else {
        let slot = ensemble.layout.slot(register)?;
        for b in &ensemble.branches {
            for (index, amp) in b.state.amplitudes().iter().enumerate() {
                let p = b.weight * amp.norm_sqr();
                if p > 0.0 {
                    let outcome = BitString::new(slot.extract(index) as u64, slot.width)?;
                    *buckets.entry(outcome).or_default() += p;
                }
            }
        }
    }
    OutcomeDistribution::new(buckets.into_iter().filter(|e| e.1 > ZERO_FLOOR).collect())
}

/// `((record, outcome), probability)`.
pub type RecordPair = ((BitString, BitString), f64);

/// Joint distribution of (preparation record, register outcome) pairs.
pub fn record_outcome_pairs(
    ensemble: &BranchEnsemble,
    register: &str,
) -> Result<Vec<RecordPair>, QStateError> {
    let slot = ensemble.layout.slot(register)?;
    let mut buckets: BTreeMap<(BitString, BitString), f64> = BTreeMap::new();
    for b in &ensemble.branches {
        for (index, amp) in b.state.amplitudes().iter().enumerate() {
            let p = b.weight * amp.norm_sqr();
            if p > ZERO_FLOOR {
                let outcome = BitString::new(slot.extract(index) as u64, slot.width)?;
                *buckets.entry((b.record, outcome)).or_default() += p;
            }
        }
    }
    Ok(buckets.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bits, Register};

    fn layout_a() -> RegisterLayout {
        RegisterLayout::new(vec![Register::new("A", 2)], Some(Register::new("B", 2))).unwrap()
    }

    fn all2() -> Vec<BitString> {
        ["00", "01", "10", "11"].iter().map(|s| bits(s)).collect()
    }

    #[test]
    fn pure_state_rejects_bad_norm() {
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(
            PureState::new(v),
            Err(QStateError::InvalidState(_))
        ));
        assert!(PureState::basis(4, 4).is_err());
    }

    #[test]
    fn prepare_collapses_to_one_branch() {
        let e =
            BranchEnsemble::uniform(layout_a(), all2(), &PureState::basis(4, 0).unwrap()).unwrap();
        let p = prepare_setting(&e, &bits("10")).unwrap();
        assert_eq!(p.branches().len(), 1);
        assert_eq!(p.branches()[0].setting, bits("10"));
        assert_eq!(p.branches()[0].weight, 1.0);
        assert_eq!(prepare_setting(&p, &bits("10")).unwrap(), p);
        assert!(matches!(
            prepare_setting(&p, &bits("01")),
            Err(QStateError::OutcomeNotPresent(_))
        ));
    }

    #[test]
    fn projection_renormalizes() {
        let e =
            BranchEnsemble::uniform(layout_a(), all2(), &PureState::basis(4, 0).unwrap()).unwrap();
        let s: BTreeSet<_> = [bits("01"), bits("11")].into();
        let p = project_setting_subset(&e, &s).unwrap();
        assert_eq!(p.settings(), vec![bits("01"), bits("11")]);
        assert!(p.branches().iter().all(|b| (b.weight - 0.5).abs() < 1e-15));

        let all: BTreeSet<_> = all2().into_iter().collect();
        assert_eq!(project_setting_subset(&e, &all).unwrap(), e);

        let single: BTreeSet<_> = [bits("01")].into();
        assert_eq!(
            project_setting_subset(&e, &single).unwrap().branches()[0].weight,
            1.0
        );

        let foreign: BTreeSet<_> = [bits("0")].into();
        assert!(matches!(
            project_setting_subset(&e, &foreign),
            Err(QStateError::EmptyProjection)
        ));
    }

    #[test]
    fn sharp_state_measures_deterministically() {
        let e = BranchEnsemble::single(layout_a(), bits("01"), PureState::basis(4, 1).unwrap())
            .unwrap();
        let d = measure_register(&e, "A").unwrap();
        assert_eq!(d.entries(), &[(bits("01"), 1.0)]);
        assert_eq!(d.certain_outcome(1e-9), Some(bits("01")));
        assert!(matches!(
            measure_register(&e, "Q"),
            Err(QStateError::UnknownRegister(_))
        ));
        let b = measure_register(&e, "B").unwrap();
        assert_eq!(b.entries(), &[(bits("01"), 1.0)]);
    }

    #[test]
    fn ensemble_validation() {
        let s = PureState::basis(4, 0).unwrap();
        assert!(BranchEnsemble::uniform(layout_a(), vec![bits("00"), bits("00")], &s).is_err());
        assert!(BranchEnsemble::uniform(layout_a(), vec![bits("000")], &s).is_err());
        let branches = vec![Branch {
            setting: bits("00"),
            record: bits("00"),
            weight: 0.5,
            state: s,
        }];
        assert!(BranchEnsemble::new(layout_a(), branches).is_err());
    }
}
