use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::gf2;
use super::{AkConfig, AkError, MeasurementSpec, ProblemIndex};
use crate::oracle::{Family, OracleProblem};
use crate::qstate::BitString;

/// Cell measurements are enumerated over at most this many table positions.
pub const MAX_CELL_POSITIONS: u32 = 12;

/// One partial measurement together with the subset it realizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub spec: MeasurementSpec,
    pub subset: Vec<BitString>,
    #[serde(serialize_with = "round6")]
    pub delta_entropy: f64,
    #[serde(skip)]
    pub(crate) members: FixedBitSet,
}

/// Two measurements satisfying the Occam conditions for one true setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccamPair {
    pub first: Arc<Candidate>,
    pub second: Arc<Candidate>,
    #[serde(serialize_with = "round6")]
    pub epsilon: f64,
}

/// A subset of settings the solver is deemed to know in advance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AkInstance {
    pub subset: Vec<BitString>,
    pub spec: MeasurementSpec,
    #[serde(serialize_with = "round6")]
    pub epsilon: f64,
}

pub(crate) fn round6<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let r = (x * 1e6).round() / 1e6;
    s.serialize_f64(if r == 0.0 { 0.0 } else { r })
}

struct Pool {
    specs: Vec<MeasurementSpec>,
    members: Vec<FixedBitSet>,
    /// Index pairs into `specs` that the configuration allows to be paired.
    partners: Partners,
}

enum Partners {
    Listed(Cow<'static, [(usize, usize)]>),
    All,
}

fn cell_pool(index: &ProblemIndex, star: usize, complementary: bool) -> Result<Pool, AkError> {
    let problem = index.problem;
    let positions = 1u32 << problem.arg_bits();
    if positions > MAX_CELL_POSITIONS {
        return Err(AkError::EnumerationTooLarge {
            family: Family::Cells,
            size: positions,
            unit: "table positions",
            limit: MAX_CELL_POSITIONS,
        });
    }
    let reference = &problem.settings()[star].table;
    let agree: Vec<FixedBitSet> = (0..positions as usize)
        .map(|p| {
            let mut set = FixedBitSet::with_capacity(index.len());
            for (i, s) in problem.settings().iter().enumerate() {
                set.set(i, s.table[p] == reference[p]);
            }
            set
        })
        .collect();
    let full = (1u64 << positions) - 1;
    let mut specs = Vec::new();
    let mut members = Vec::new();
    for q in 1..=full {
        let mut set = index.all();
        for p in (0..positions as usize).filter(|p| q >> p & 1 == 1) {
            set.intersect_with(&agree[p]);
        }
        specs.push(MeasurementSpec::cells(
            problem,
            (0..positions as u64).filter(|p| q >> p & 1 == 1),
        )?);
        members.push(set);
    }
    // spec k describes mask k + 1
    let partners = if complementary {
        Partners::Listed(Cow::Owned(
            (1..full)
                .filter(|&q| q < full ^ q)
                .map(|q| ((q - 1) as usize, ((full ^ q) - 1) as usize))
                .collect(),
        ))
    } else {
        Partners::All
    };
    Ok(Pool {
        specs,
        members,
        partners,
    })
}

fn linear_pool(index: &ProblemIndex, star: usize, complementary: bool) -> Result<Pool, AkError> {
    let problem = index.problem;
    let width = problem.id_width();
    if width > gf2::MAX_WIDTH {
        return Err(AkError::EnumerationTooLarge {
            family: Family::Linear,
            size: width,
            unit: "setting bits",
            limit: gf2::MAX_WIDTH,
        });
    }
    let reference = problem.settings()[star].id.value();
    let lattice = gf2::lattice(width);
    let subspaces = &lattice.subspaces;
    let mut specs = Vec::with_capacity(subspaces.len());
    let mut members = Vec::with_capacity(subspaces.len());
    for u in subspaces {
        let mut set = FixedBitSet::with_capacity(index.len());
        for (i, s) in problem.settings().iter().enumerate() {
            let diff = s.id.value() ^ reference;
            set.set(
                i,
                u.basis
                    .iter()
                    .all(|&m| (diff & m).count_ones().is_multiple_of(2)),
            );
        }
        specs.push(MeasurementSpec::linear(width, u.basis.iter().copied())?);
        members.push(set);
    }
    let partners = if complementary {
        Partners::Listed(Cow::Borrowed(&lattice.complements))
    } else {
        Partners::All
    };
    Ok(Pool {
        specs,
        members,
        partners,
    })
}

/// Overlap and equal-reduction conditions; the two-solution condition is
/// checked once per candidate by the caller.
fn satisfies(a: &Candidate, b: &Candidate, tolerance: f64) -> bool {
    a.members.intersection_count(&b.members) == 1
        && (a.delta_entropy - b.delta_entropy).abs() <= tolerance
}

pub(crate) fn occam_pairs(
    index: &ProblemIndex,
    star: usize,
    family: Family,
    config: &AkConfig,
) -> Result<Vec<OccamPair>, AkError> {
    let pool = match family {
        Family::Cells => cell_pool(index, star, config.complementary)?,
        Family::Linear => linear_pool(index, star, config.complementary)?,
    };
    // Collapse specs with the same realized subset onto the first one seen.
    let mut unique: Vec<Arc<Candidate>> = Vec::new();
    let mut by_subset: HashMap<FixedBitSet, usize> = HashMap::new();
    let mut unique_of = Vec::with_capacity(pool.specs.len());
    for (spec, members) in pool.specs.into_iter().zip(pool.members) {
        let id = *by_subset.entry(members.clone()).or_insert_with(|| {
            unique.push(Arc::new(Candidate {
                delta_entropy: index.delta(&members),
                subset: index.ids(&members),
                spec,
                members,
            }));
            unique.len() - 1
        });
        unique_of.push(id);
    }
    let informative: Vec<bool> = unique
        .iter()
        .map(|c| index.distinct_solutions(&c.members) >= 2)
        .collect();
    // Canonical order: by subset listings, smaller subset of each pair first.
    let mut order: Vec<usize> = (0..unique.len()).collect();
    order.sort_by(|&a, &b| unique[a].subset.cmp(&unique[b].subset));
    let mut rank = vec![0usize; unique.len()];
    for (r, &u) in order.iter().enumerate() {
        rank[u] = r;
    }
    let mut ranked: Vec<(usize, usize)> = Vec::new();
    let mut consider = |i: usize, j: usize| {
        if i != j
            && informative[i]
            && informative[j]
            && satisfies(&unique[i], &unique[j], config.tolerance)
        {
            let (a, b) = (rank[i], rank[j]);
            ranked.push((a.min(b), a.max(b)));
        }
    };
    match pool.partners {
        Partners::Listed(listed) => {
            for &(a, b) in listed.iter() {
                consider(unique_of[a], unique_of[b]);
            }
        }
        Partners::All => {
            for i in 0..unique.len() {
                for j in i + 1..unique.len() {
                    consider(i, j);
                }
            }
        }
    }
    ranked.sort_unstable();
    ranked.dedup();
    let pairs = ranked.into_iter().map(|(a, b)| (order[a], order[b]));
    Ok(pairs
        .map(|(a, b)| OccamPair {
            epsilon: unique[a].delta_entropy,
            first: Arc::clone(&unique[a]),
            second: Arc::clone(&unique[b]),
        })
        .collect())
}

/// All Occam pairs for true setting `b_star`, each unordered pair of realized
/// subsets reported once, in canonical order.
pub fn enumerate_occam_pairs(
    problem: &OracleProblem,
    b_star: &BitString,
    config: &AkConfig,
) -> Result<Vec<OccamPair>, AkError> {
    let index = ProblemIndex::new(problem);
    let star = index.index_of(b_star)?;
    occam_pairs(&index, star, config.family_for(problem), config)
}

/// Re-derives the Occam conditions for two measurements from scratch.
///
/// Returns the common entropy reduction if the pair qualifies. With the
/// complementary flag on, cells must partition the table positions and
/// linear spans must form a direct sum of the whole dual space.
pub fn check_occam_pair(
    problem: &OracleProblem,
    b_star: &BitString,
    first: &MeasurementSpec,
    second: &MeasurementSpec,
    config: &AkConfig,
) -> Result<Option<f64>, AkError> {
    let index = ProblemIndex::new(problem);
    let star = index.index_of(b_star)?;
    if first.family() != second.family() {
        return Ok(None);
    }
    if config.complementary {
        let complementary = match (first, second) {
            (MeasurementSpec::Cells { positions: p }, MeasurementSpec::Cells { positions: q }) => {
                let total = 1usize << problem.arg_bits();
                !p.is_empty()
                    && !q.is_empty()
                    && p.len() + q.len() == total
                    && p.iter().all(|x| !q.contains(x))
            }
            (MeasurementSpec::Linear { masks: p }, MeasurementSpec::Linear { masks: q }) => {
                let joint = gf2::rref(p.iter().chain(q).map(BitString::value));
                !p.is_empty()
                    && !q.is_empty()
                    && joint.len() == p.len() + q.len()
                    && joint.len() as u32 == problem.id_width()
            }
            _ => false,
        };
        if !complementary {
            return Ok(None);
        }
    }
    let a = index.realize(first, star)?;
    let b = index.realize(second, star)?;
    let mut meet = a.clone();
    meet.intersect_with(&b);
    let (da, db) = (index.delta(&a), index.delta(&b));
    let ok = meet.ones().collect::<Vec<_>>() == [star]
        && (da - db).abs() <= config.tolerance
        && index.distinct_solutions(&a) >= 2
        && index.distinct_solutions(&b) >= 2;
    Ok(ok.then_some(da))
}

/// Distinct subsets appearing in any pair, each with the first spec and
/// entropy reduction that produced it, ordered by subset.
pub fn ak_instances(pairs: &[OccamPair]) -> Vec<AkInstance> {
    // Pairs share candidates, so most repeats are caught by identity alone.
    let mut seen: HashSet<*const Candidate> = HashSet::new();
    let mut candidates: Vec<&Candidate> = pairs
        .iter()
        .flat_map(|p| [&p.first, &p.second])
        .filter(|c| seen.insert(Arc::as_ptr(c)))
        .map(|c| c.as_ref())
        .collect();
    candidates.sort_by(|a, b| a.subset.cmp(&b.subset));
    candidates.dedup_by(|later, earlier| later.subset == earlier.subset);
    candidates
        .into_iter()
        .map(|c| AkInstance {
            subset: c.subset.clone(),
            spec: c.spec.clone(),
            epsilon: c.delta_entropy,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_dj, build_grover, build_simon};
    use crate::qstate::bits;

    fn subsets(pairs: &[OccamPair]) -> Vec<(Vec<String>, Vec<String>)> {
        let show = |c: &Candidate| c.subset.iter().map(ToString::to_string).collect::<Vec<_>>();
        pairs
            .iter()
            .map(|p| (show(&p.first), show(&p.second)))
            .collect()
    }

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn grover_two_has_three_pairs() {
        let g = build_grover(2).unwrap();
        let pairs = enumerate_occam_pairs(&g, &bits("01"), &AkConfig::default()).unwrap();
        assert_eq!(
            subsets(&pairs),
            vec![
                (strs(&["00", "01"]), strs(&["01", "10"])),
                (strs(&["00", "01"]), strs(&["01", "11"])),
                (strs(&["01", "10"]), strs(&["01", "11"])),
            ]
        );
        assert!(pairs.iter().all(|p| (p.epsilon - 1.0).abs() < 1e-12));
        let instances = ak_instances(&pairs);
        assert_eq!(instances.len(), 3);
    }

    #[test]
    fn dj_pairs() {
        let dj = build_dj(2).unwrap();
        let config = AkConfig::default();
        for s in dj.settings() {
            let pairs = enumerate_occam_pairs(&dj, &s.id, &config).unwrap();
            let expected = if s.solution == "balanced" { 1 } else { 3 };
            assert_eq!(pairs.len(), expected, "setting {}", s.id);
            assert!(pairs.iter().all(|p| (p.epsilon - 1.0).abs() < 1e-12));
        }
        let pairs = enumerate_occam_pairs(&dj, &bits("0011"), &config).unwrap();
        assert_eq!(
            subsets(&pairs),
            vec![(strs(&["0000", "0011"]), strs(&["0011", "1111"]))]
        );
        let constant = ak_instances(&enumerate_occam_pairs(&dj, &bits("0000"), &config).unwrap());
        assert_eq!(constant.len(), 6);
    }

    #[test]
    fn simon_pairs() {
        let simon = build_simon(2).unwrap();
        let pairs = enumerate_occam_pairs(&simon, &bits("0011"), &AkConfig::default()).unwrap();
        assert_eq!(
            subsets(&pairs),
            vec![
                (strs(&["0011", "0101"]), strs(&["0011", "1010"])),
                (strs(&["0011", "0110"]), strs(&["0011", "1001"])),
            ]
        );
        let eps = 3f64.log2() - 1.0;
        assert!(pairs.iter().all(|p| (p.epsilon - eps).abs() < 1e-9));
    }

    #[test]
    fn emitted_pairs_pass_the_audit_both_ways() {
        let config = AkConfig::default();
        for p in [
            build_grover(2).unwrap(),
            build_grover(4).unwrap(),
            build_dj(2).unwrap(),
            build_simon(2).unwrap(),
        ] {
            for b in p.setting_ids() {
                for pair in enumerate_occam_pairs(&p, &b, &config).unwrap() {
                    let forward =
                        check_occam_pair(&p, &b, &pair.first.spec, &pair.second.spec, &config)
                            .unwrap();
                    let backward =
                        check_occam_pair(&p, &b, &pair.second.spec, &pair.first.spec, &config)
                            .unwrap();
                    assert_eq!(forward, Some(pair.epsilon));
                    assert_eq!(backward, forward);
                }
            }
        }
    }

    #[test]
    fn research_mode_adds_pairs() {
        let simon = build_simon(2).unwrap();
        let config = AkConfig {
            complementary: false,
            ..AkConfig::default()
        };
        let pairs = enumerate_occam_pairs(&simon, &bits("0011"), &config).unwrap();
        assert!(pairs.len() >= 2);
    }

    #[test]
    fn too_large_families_are_reported() {
        let simon3 = build_simon(3).unwrap();
        let linear = AkConfig {
            family: Some(Family::Linear),
            ..AkConfig::default()
        };
        assert!(matches!(
            enumerate_occam_pairs(&simon3, &simon3.setting_ids()[0], &linear),
            Err(AkError::EnumerationTooLarge { .. })
        ));
        let g7 = build_grover(7).unwrap();
        assert!(enumerate_occam_pairs(&g7, &bits("0000000"), &AkConfig::default()).is_err());
    }
}
