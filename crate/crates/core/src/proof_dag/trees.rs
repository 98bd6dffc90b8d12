use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{JustificationId, ProofDag};
use crate::data_layer::StatementId;
use crate::ledger::AccountId;

/// One complete proof of `root`: a choice of justification for every
/// statement it covers, bottoming out in `True` or premise-free
/// justifications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub root: StatementId,
    pub choices: BTreeMap<StatementId, JustificationId>,
    /// Authors of the chosen justifications, ordered by their earliest
    /// justification in ingest order.
    pub contributors: Vec<AccountId>,
}

impl ProofTree {
    /// Set of chosen justifications. Two trees are the same proof iff their
    /// keys are equal.
    pub fn key(&self) -> BTreeSet<JustificationId> {
        self.choices.values().copied().collect()
    }

    pub fn uses(&self, justification: &JustificationId) -> bool {
        self.choices.values().any(|j| j == justification)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree proves `{found}`, not `{expected}`")]
    WrongRoot {
        expected: StatementId,
        found: StatementId,
    },
    #[error("justification {0:?} is not in the graph")]
    MissingJustification(JustificationId),
    #[error("justification chosen for `{0}` targets another statement")]
    MisplacedJustification(StatementId),
    #[error("statement `{0}` is reached but has no chosen justification")]
    Uncovered(StatementId),
    #[error("statement `{0}` is chosen but unreachable from the root")]
    Extraneous(StatementId),
    #[error("tree contains a cycle through `{0}`")]
    Cyclic(StatementId),
    #[error("contributor list does not match the chosen justifications")]
    Contributors,
}

impl ProofDag {
    /// Every distinct complete proof of `target`, ordered by the ingest
    /// position of the justification that completed it. Empty if the target
    /// is unproven or unknown.
    pub fn proof_trees(&self, target: &StatementId) -> Vec<ProofTree> {
        if !self.proven.contains(target) || target.is_truth() {
            return Vec::new();
        }
        let mut found: BTreeMap<BTreeSet<JustificationId>, BTreeMap<StatementId, usize>> =
            BTreeMap::new();
        self.search(&mut BTreeMap::new(), vec![target.clone()], &mut found);

        let mut trees: Vec<(Vec<u64>, ProofTree)> = found
            .into_values()
            .map(|choice| {
                let mut seqs: Vec<u64> = choice
                    .values()
                    .map(|&i| self.justifications[i].seq)
                    .collect();
                seqs.sort_unstable_by(|a, b| b.cmp(a));
                (seqs, self.tree_from(target, &choice))
            })
            .collect();
        trees.sort_by(|a, b| a.0.cmp(&b.0));
        trees.into_iter().map(|(_, t)| t).collect()
    }

    /// Checks that `tree` is a complete, acyclic proof of `target` using only
    /// justifications in this graph.
    pub fn check_tree(&self, tree: &ProofTree, target: &StatementId) -> Result<(), TreeError> {
        if tree.root != *target {
            return Err(TreeError::WrongRoot {
                expected: target.clone(),
                found: tree.root.clone(),
            });
        }
        let mut choice = BTreeMap::new();
        for (stmt, jid) in &tree.choices {
            let idx = self
                .justifications
                .iter()
                .position(|j| j.id == *jid)
                .ok_or(TreeError::MissingJustification(*jid))?;
            if self.justifications[idx].target != *stmt {
                return Err(TreeError::MisplacedJustification(stmt.clone()));
            }
            choice.insert(stmt.clone(), idx);
        }
        let mut reached = BTreeSet::new();
        let mut stack = vec![target.clone()];
        while let Some(s) = stack.pop() {
            if s.is_truth() || !reached.insert(s.clone()) {
                continue;
            }
            let idx = choice
                .get(&s)
                .ok_or_else(|| TreeError::Uncovered(s.clone()))?;
            stack.extend(self.justifications[*idx].premises.iter().cloned());
        }
        if let Some(extra) = choice.keys().find(|s| !reached.contains(*s)) {
            return Err(TreeError::Extraneous(extra.clone()));
        }
        if let Some(s) = self.find_cycle(&choice) {
            return Err(TreeError::Cyclic(s));
        }
        if self.tree_from(target, &choice).contributors != tree.contributors {
            return Err(TreeError::Contributors);
        }
        Ok(())
    }

    fn search(
        &self,
        choice: &mut BTreeMap<StatementId, usize>,
        mut agenda: Vec<StatementId>,
        found: &mut BTreeMap<BTreeSet<JustificationId>, BTreeMap<StatementId, usize>>,
    ) {
        let next = loop {
            match agenda.pop() {
                None => {
                    if self.find_cycle(choice).is_none() {
                        let key = choice
                            .values()
                            .map(|&i| self.justifications[i].id)
                            .collect();
                        found.entry(key).or_insert_with(|| choice.clone());
                    }
                    return;
                }
                Some(s) if s.is_truth() || choice.contains_key(&s) => continue,
                Some(s) => break s,
            }
        };
        for (idx, j) in self.justifications.iter().enumerate() {
            if j.target != next || !j.premises.iter().all(|p| self.proven.contains(p)) {
                continue;
            }
            choice.insert(next.clone(), idx);
            let mut branch = agenda.clone();
            branch.extend(j.premises.iter().rev().cloned());
            self.search(choice, branch, found);
            choice.remove(&next);
        }
    }

    fn find_cycle(&self, choice: &BTreeMap<StatementId, usize>) -> Option<StatementId> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&StatementId, u8> = BTreeMap::new();
        for start in choice.keys() {
            if state.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&StatementId, Vec<&StatementId>)> = Vec::new();
            state.insert(start, 1);
            stack.push((start, self.chosen_premises(choice, start)));
            while let Some((node, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(p) => match state.get(p).copied().unwrap_or(0) {
                        1 => return Some(p.clone()),
                        0 => {
                            state.insert(p, 1);
                            let next = self.chosen_premises(choice, p);
                            stack.push((p, next));
                        }
                        _ => {}
                    },
                    None => {
                        state.insert(node, 2);
                        stack.pop();
                    }
                }
            }
        }
        None
    }

    fn chosen_premises<'a>(
        &'a self,
        choice: &'a BTreeMap<StatementId, usize>,
        s: &StatementId,
    ) -> Vec<&'a StatementId> {
        choice
            .get(s)
            .map(|&i| {
                self.justifications[i]
                    .premises
                    .iter()
                    .filter(|p| choice.contains_key(*p))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn tree_from(&self, root: &StatementId, choice: &BTreeMap<StatementId, usize>) -> ProofTree {
        let mut by_seq: Vec<&super::Justification> =
            choice.values().map(|&i| &self.justifications[i]).collect();
        by_seq.sort_by_key(|j| j.seq);
        let mut contributors: Vec<AccountId> = Vec::new();
        for j in by_seq {
            if !contributors.contains(&j.author) {
                contributors.push(j.author.clone());
            }
        }
        ProofTree {
            root: root.clone(),
            choices: choice
                .iter()
                .map(|(s, &i)| (s.clone(), self.justifications[i].id))
                .collect(),
            contributors,
        }
    }
}
