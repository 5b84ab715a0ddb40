//! Exact adaptive query complexity by memoized minimax over candidate sets.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use super::{AkError, ProblemIndex};
use crate::oracle::OracleProblem;
use crate::qstate::BitString;

/// Decision-tree solver for one problem. The memo table lives as long as
/// the solver, so reuse it across candidate sets of the same problem but
/// never share it between threads.
pub struct DecisionTree<'a> {
    index: ProblemIndex<'a>,
    memo: HashMap<FixedBitSet, usize>,
}

impl<'a> DecisionTree<'a> {
    pub fn new(problem: &'a OracleProblem) -> Self {
        Self {
            index: ProblemIndex::new(problem),
            memo: HashMap::new(),
        }
    }

    pub fn problem(&self) -> &'a OracleProblem {
        self.index.problem
    }

    pub(crate) fn set_of(&self, subset: &BTreeSet<BitString>) -> Result<FixedBitSet, AkError> {
        if subset.is_empty() {
            return Err(AkError::EmptySubset);
        }
        self.index.set_of(subset)
    }

    /// Minimum worst-case number of queries that determines the solution
    /// for every setting in `subset`.
    pub fn cost(&mut self, subset: &BTreeSet<BitString>) -> Result<usize, AkError> {
        let set = self.set_of(subset)?;
        self.cost_of(&set)
    }

    /// Arguments whose query starts an optimal strategy for `subset`, with
    /// the minimax cost. A solved subset has no optimal query.
    pub fn optimal_arguments(
        &mut self,
        subset: &BTreeSet<BitString>,
    ) -> Result<(usize, Vec<u64>), AkError> {
        let set = self.set_of(subset)?;
        let best = self.cost_of(&set)?;
        if best == 0 {
            return Ok((0, Vec::new()));
        }
        let mut optimal = Vec::new();
        for a in 0..1usize << self.problem().arg_bits() {
            let blocks = self.blocks(&set, a);
            if blocks.len() < 2 {
                continue;
            }
            let mut worst = 0;
            for block in &blocks {
                worst = worst.max(self.cost_of(block)?);
                if 1 + worst > best {
                    break;
                }
            }
            if 1 + worst == best {
                optimal.push(a as u64);
            }
        }
        Ok((best, optimal))
    }

    fn is_solved(&self, set: &FixedBitSet) -> bool {
        let mut ones = set.ones();
        match ones.next() {
            None => true,
            Some(first) => {
                let s = self.index.solution_ids[first];
                ones.all(|i| self.index.solution_ids[i] == s)
            }
        }
    }

    /// Candidates grouped by the oracle value at argument `a`.
    fn blocks(&self, set: &FixedBitSet, a: usize) -> Vec<FixedBitSet> {
        let settings = self.problem().settings();
        let mut groups: Vec<(u64, FixedBitSet)> = Vec::new();
        for i in set.ones() {
            let v = settings[i].table[a];
            match groups.iter_mut().find(|g| g.0 == v) {
                Some(g) => g.1.insert(i),
                None => {
                    let mut s = FixedBitSet::with_capacity(set.len());
                    s.insert(i);
                    groups.push((v, s));
                }
            }
        }
        groups.into_iter().map(|g| g.1).collect()
    }

    /// Adversary lower bound: a query answered with its most common value
    /// removes at most `δ` candidates, and the search ends only once the
    /// survivors fit inside one solution class.
    fn lower_bound(&self, set: &FixedBitSet, splits: &[Vec<FixedBitSet>]) -> usize {
        let size = set.count_ones(..);
        let mut classes: HashMap<usize, usize> = HashMap::new();
        for i in set.ones() {
            *classes.entry(self.index.solution_ids[i]).or_default() += 1;
        }
        let largest_class = classes.values().copied().max().unwrap_or(0);
        let removable = splits
            .iter()
            .map(|blocks| size - blocks.iter().map(|b| b.count_ones(..)).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let counting = if removable == 0 {
            0
        } else {
            (size - largest_class).div_ceil(removable)
        };
        counting.max(1)
    }

    pub(crate) fn cost_of(&mut self, set: &FixedBitSet) -> Result<usize, AkError> {
        if self.is_solved(set) {
            return Ok(0);
        }
        if let Some(&c) = self.memo.get(set) {
            return Ok(c);
        }
        let mut splits: Vec<Vec<FixedBitSet>> = (0..1usize << self.problem().arg_bits())
            .map(|a| self.blocks(set, a))
            .filter(|blocks| blocks.len() >= 2)
            .collect();
        if splits.is_empty() {
            let ids = self
                .index
                .ids(set)
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>();
            return Err(AkError::Indistinguishable(ids.join(",")));
        }
        let bound = self.lower_bound(set, &splits);
        // Try queries whose largest block is smallest first.
        for blocks in splits.iter_mut() {
            blocks.sort_by_key(|b| std::cmp::Reverse(b.count_ones(..)));
        }
        splits.sort_by_key(|blocks| blocks[0].count_ones(..));
        let mut best = usize::MAX;
        for blocks in &splits {
            let mut worst = 0;
            for block in blocks {
                worst = worst.max(self.cost_of(block)?);
                if 1 + worst >= best {
                    break;
                }
            }
            best = best.min(1 + worst);
            if best == bound {
                break;
            }
        }
        self.memo.insert(set.clone(), best);
        Ok(best)
    }
}

/// Minimax query count for `subset`; see [`DecisionTree`].
pub fn decision_tree_cost(
    problem: &OracleProblem,
    subset: &BTreeSet<BitString>,
) -> Result<usize, AkError> {
    DecisionTree::new(problem).cost(subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_dj, build_grover, build_simon, Family, Setting};
    use crate::qstate::bits;

    fn all(p: &OracleProblem) -> BTreeSet<BitString> {
        p.setting_ids().into_iter().collect()
    }

    fn set(items: &[&str]) -> BTreeSet<BitString> {
        items.iter().map(|s| bits(s)).collect()
    }

    /// Plain minimax without memo or bounds.
    fn naive(p: &OracleProblem, s: &[usize]) -> usize {
        let first = &p.settings()[s[0]].solution;
        if s.iter().all(|&i| &p.settings()[i].solution == first) {
            return 0;
        }
        let mut best = usize::MAX;
        for a in 0..1usize << p.arg_bits() {
            let mut values: Vec<u64> = s.iter().map(|&i| p.settings()[i].table[a]).collect();
            values.sort_unstable();
            values.dedup();
            if values.len() < 2 {
                continue;
            }
            let worst = values
                .iter()
                .map(|&v| {
                    let block: Vec<usize> = s
                        .iter()
                        .copied()
                        .filter(|&i| p.settings()[i].table[a] == v)
                        .collect();
                    naive(p, &block)
                })
                .max()
                .unwrap();
            best = best.min(1 + worst);
        }
        best
    }

    #[test]
    fn small_problem_costs() {
        let g = build_grover(2).unwrap();
        assert_eq!(decision_tree_cost(&g, &all(&g)).unwrap(), 3);
        assert_eq!(decision_tree_cost(&g, &set(&["01", "11"])).unwrap(), 1);
        assert_eq!(decision_tree_cost(&g, &set(&["01"])).unwrap(), 0);
        let dj = build_dj(2).unwrap();
        assert_eq!(decision_tree_cost(&dj, &all(&dj)).unwrap(), 3);
        assert_eq!(
            decision_tree_cost(&dj, &set(&["0011", "0101", "1100"])).unwrap(),
            0
        );
        let simon = build_simon(2).unwrap();
        assert_eq!(decision_tree_cost(&simon, &all(&simon)).unwrap(), 3);
        assert!(decision_tree_cost(&simon, &BTreeSet::new()).is_err());
    }

    #[test]
    fn large_grover_baselines() {
        for n in [4, 6, 8] {
            let g = build_grover(n).unwrap();
            assert_eq!(decision_tree_cost(&g, &all(&g)).unwrap(), (1 << n) - 1);
        }
    }

    #[test]
    fn matches_naive_minimax() {
        let dj = build_dj(2).unwrap();
        let simon = build_simon(2).unwrap();
        for p in [&dj, &simon] {
            let n = p.settings().len();
            for mask in 1u32..(1 << n) {
                let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let subset: BTreeSet<_> = members.iter().map(|&i| p.settings()[i].id).collect();
                assert_eq!(
                    decision_tree_cost(p, &subset).unwrap(),
                    naive(p, &members),
                    "{}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn optimal_arguments_for_grover_pairs() {
        let g = build_grover(2).unwrap();
        let mut tree = DecisionTree::new(&g);
        assert_eq!(
            tree.optimal_arguments(&set(&["01", "11"])).unwrap(),
            (1, vec![1, 3])
        );
        assert_eq!(tree.optimal_arguments(&set(&["01"])).unwrap(), (0, vec![]));
    }

    #[test]
    fn identical_tables_with_different_solutions_fail() {
        let settings = vec![
            Setting {
                id: bits("0"),
                table: vec![0, 1],
                solution: "0".into(),
                a_outcome: bits("0"),
            },
            Setting {
                id: bits("1"),
                table: vec![0, 1],
                solution: "1".into(),
                a_outcome: bits("1"),
            },
        ];
        let p = OracleProblem::new("twins", 1, 1, Family::Cells, settings).unwrap();
        assert!(matches!(
            decision_tree_cost(&p, &all(&p)),
            Err(AkError::Indistinguishable(_))
        ));
    }
}
