use std::collections::{BTreeMap, BTreeSet};

use crate::data_layer::StatementId;
use crate::ledger::{AccountId, EscrowId, Ledger, TokenAmount};
use crate::proof_dag::{JustificationId, ProofDag, ProofTree};
use crate::tcr::Tcr;
use crate::Tick;

use super::{
    check_proves, distribute, AllocationPolicy, BranchStake, IncentiveError, Payout, PayoutRole,
};

/// Runs `f` against copies of the ledger and branch, committing only on
/// success.
fn staged<T>(
    ledger: &mut Ledger,
    branch: Option<&mut BranchStake>,
    f: impl FnOnce(&mut Ledger, Option<&mut BranchStake>) -> Result<T, IncentiveError>,
) -> Result<T, IncentiveError> {
    let mut l = ledger.clone();
    match branch {
        Some(b) => {
            let mut bc = b.clone();
            let out = f(&mut l, Some(&mut bc))?;
            *b = bc;
            *ledger = l;
            Ok(out)
        }
        None => {
            let out = f(&mut l, None)?;
            *ledger = l;
            Ok(out)
        }
    }
}

/// A single prize for the first approved proof of `target`, released once
/// `threshold` of the signers approve the same tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPrize {
    pub deployer: AccountId,
    pub target: StatementId,
    pub prize: TokenAmount,
    pub policy: AllocationPolicy,
    signers: BTreeSet<AccountId>,
    threshold: usize,
    escrow: EscrowId,
    approvals: BTreeMap<BTreeSet<JustificationId>, BTreeSet<AccountId>>,
    winner: Option<ProofTree>,
}

impl FixedPrize {
    pub fn deploy(
        ledger: &mut Ledger,
        deployer: &AccountId,
        target: StatementId,
        prize: TokenAmount,
        signers: BTreeSet<AccountId>,
        threshold: usize,
        policy: AllocationPolicy,
    ) -> Result<Self, IncentiveError> {
        if signers.is_empty() {
            return Err(IncentiveError::EmptySigners);
        }
        if threshold == 0 || threshold > signers.len() {
            return Err(IncentiveError::BadThreshold {
                threshold,
                signers: signers.len(),
            });
        }
        if prize == 0 {
            return Err(IncentiveError::ZeroPrize);
        }
        let escrow = ledger.escrow_lock(deployer, prize, format!("prize {target}"))?;
        Ok(FixedPrize {
            deployer: deployer.clone(),
            target,
            prize,
            policy,
            signers,
            threshold,
            escrow,
            approvals: BTreeMap::new(),
            winner: None,
        })
    }

    pub fn signers(&self) -> &BTreeSet<AccountId> {
        &self.signers
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn winner(&self) -> Option<&ProofTree> {
        self.winner.as_ref()
    }

    pub fn is_paid(&self) -> bool {
        self.winner.is_some()
    }

    pub fn approvals(&self, tree: &ProofTree) -> usize {
        self.approvals.get(&tree.key()).map_or(0, |s| s.len())
    }

    /// Records `signer`'s approval of `tree`. Returns the payouts once the
    /// threshold is reached, `None` while approvals are still missing.
    pub fn approve(
        &mut self,
        ledger: &mut Ledger,
        dag: &ProofDag,
        signer: &AccountId,
        tree: &ProofTree,
        branch: Option<&mut BranchStake>,
    ) -> Result<Option<Vec<Payout>>, IncentiveError> {
        if self.winner.is_some() {
            return Err(IncentiveError::AlreadyPaid);
        }
        if !self.signers.contains(signer) {
            return Err(IncentiveError::NotSigner(signer.clone()));
        }
        check_proves(dag, tree, &self.target)?;
        let mut approvals = self.approvals.get(&tree.key()).cloned().unwrap_or_default();
        approvals.insert(signer.clone());
        let payouts = if approvals.len() >= self.threshold {
            let policy = self.policy;
            let escrow = self.escrow.clone();
            Some(staged(ledger, branch, |l, b| {
                distribute(l, dag, &escrow, tree, policy, b)
            })?)
        } else {
            None
        };
        self.approvals.insert(tree.key(), approvals);
        if payouts.is_some() {
            self.winner = Some(tree.clone());
        }
        Ok(payouts)
    }
}

/// Pays `R`, `R/2`, `R/4`, ... (floored) to successive distinct proofs of
/// `target`. The deployer escrows `2R` and gets back whatever is left once
/// the next payment would round to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalvingSeries {
    pub deployer: AccountId,
    pub target: StatementId,
    pub base: TokenAmount,
    pub policy: AllocationPolicy,
    escrow: Option<EscrowId>,
    paid: Vec<(BTreeSet<JustificationId>, TokenAmount)>,
}

impl HalvingSeries {
    pub fn deploy(
        ledger: &mut Ledger,
        deployer: &AccountId,
        target: StatementId,
        base: TokenAmount,
        policy: AllocationPolicy,
    ) -> Result<Self, IncentiveError> {
        if base == 0 {
            return Err(IncentiveError::ZeroPrize);
        }
        let total = base
            .checked_mul(2)
            .ok_or(crate::ledger::LedgerError::Overflow)?;
        let escrow = ledger.escrow_lock(deployer, total, format!("halving {target}"))?;
        Ok(HalvingSeries {
            deployer: deployer.clone(),
            target,
            base,
            policy,
            escrow: Some(escrow),
            paid: Vec::new(),
        })
    }

    /// Proofs paid so far.
    pub fn proofs_paid(&self) -> usize {
        self.paid.len()
    }

    pub fn total_paid(&self) -> TokenAmount {
        self.paid.iter().map(|(_, n)| n).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.escrow.is_none()
    }

    /// What the next distinct proof would earn.
    pub fn next_payout(&self) -> TokenAmount {
        payout_at(self.base, self.paid.len())
    }

    pub fn is_registered(&self, tree: &ProofTree) -> bool {
        let key = tree.key();
        self.paid.iter().any(|(k, _)| *k == key)
    }

    /// Pays the next installment for `tree`. The justification completing
    /// the tree must belong to a canonical record.
    pub fn register(
        &mut self,
        ledger: &mut Ledger,
        dag: &ProofDag,
        tcr: &Tcr,
        now: Tick,
        tree: &ProofTree,
        branch: Option<&mut BranchStake>,
    ) -> Result<Vec<Payout>, IncentiveError> {
        let escrow = self.escrow.clone().ok_or(IncentiveError::SeriesClosed)?;
        check_proves(dag, tree, &self.target)?;
        if self.is_registered(tree) {
            return Err(IncentiveError::DuplicateTree);
        }
        let completing = tree
            .choices
            .values()
            .filter_map(|id| dag.justification(id))
            .max_by_key(|j| j.seq)
            .expect("a proof tree has at least one justification");
        if !tcr.is_canonical(&completing.record_id, now) {
            return Err(IncentiveError::NotCanonical(completing.record_id.clone()));
        }
        let amount = self.next_payout();
        let closes = payout_at(self.base, self.paid.len() + 1) == 0;
        let (policy, target, deployer) = (self.policy, self.target.clone(), self.deployer.clone());
        let payouts = staged(ledger, branch, |l, b| {
            let reward = l.escrow_split(&escrow, amount, format!("halving reward {target}"))?;
            let mut payouts = distribute(l, dag, &reward, tree, policy, b)?;
            if closes {
                let residue = l.escrow_refund(&escrow)?;
                payouts.push(Payout {
                    account: deployer,
                    amount: residue,
                    role: PayoutRole::Refund,
                });
            }
            Ok(payouts)
        })?;
        self.paid.push((tree.key(), amount));
        if closes {
            self.escrow = None;
        }
        Ok(payouts)
    }
}

fn payout_at(base: TokenAmount, k: usize) -> TokenAmount {
    if k >= 64 {
        0
    } else {
        base >> k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_layer::Registry;
    use crate::incentives::fixture::{a, s, World};
    use crate::tcr::TcrParams;

    fn signers(names: &[&str]) -> BTreeSet<AccountId> {
        names.iter().map(|n| a(n)).collect()
    }

    fn three_way() -> World {
        let mut w = World::new(&[("C", 1000), ("P", 0), ("A", 0), ("Q", 0), ("X", 0)]);
        w.add("ct00", "C", "goal", None);
        w.add("ct01", "P", "goal", Some(&["base", "step"]));
        w.add("ct02", "A", "base", Some(&[]));
        w.add("ct03", "Q", "step", Some(&[]));
        w
    }

    /// Tcr that lists every record in the registry.
    fn all_listed(registry: &Registry) -> Tcr {
        let mut tcr = Tcr::new(TcrParams::default()).unwrap();
        for r in registry.list(&Default::default()) {
            tcr.prelist(registry, &r.record_id, &r.author, 0).unwrap();
        }
        tcr
    }

    #[test]
    fn deploy_checks() {
        let mut w = three_way();
        let p = AllocationPolicy::EqualSplit;
        assert_eq!(
            FixedPrize::deploy(&mut w.ledger, &a("C"), s("goal"), 10, signers(&[]), 1, p)
                .unwrap_err(),
            IncentiveError::EmptySigners
        );
        assert_eq!(
            FixedPrize::deploy(&mut w.ledger, &a("C"), s("goal"), 10, signers(&["C"]), 0, p)
                .unwrap_err(),
            IncentiveError::BadThreshold {
                threshold: 0,
                signers: 1
            }
        );
        assert!(matches!(
            FixedPrize::deploy(&mut w.ledger, &a("P"), s("goal"), 10, signers(&["C"]), 1, p),
            Err(IncentiveError::Ledger(_))
        ));
    }

    #[test]
    fn equal_split_prize() {
        let mut w = three_way();
        let mut prize = FixedPrize::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            90,
            signers(&["C"]),
            1,
            AllocationPolicy::EqualSplit,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let out = prize
            .approve(&mut w.ledger, &w.dag, &a("C"), &tree, None)
            .unwrap()
            .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(
            (w.balance("P"), w.balance("A"), w.balance("Q")),
            (30, 30, 30)
        );
        assert_eq!(w.balance("C"), 910);
        assert_eq!(
            prize.approve(&mut w.ledger, &w.dag, &a("C"), &tree, None),
            Err(IncentiveError::AlreadyPaid)
        );
        w.ledger.check_conservation().unwrap();
    }

    #[test]
    fn sole_contributor_takes_all() {
        let mut w = World::new(&[("C", 1000), ("P", 0)]);
        w.add("c0", "C", "goal", None);
        w.add("c1", "P", "goal", Some(&[]));
        let mut prize = FixedPrize::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            100,
            signers(&["C"]),
            1,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        prize
            .approve(&mut w.ledger, &w.dag, &a("C"), &tree, None)
            .unwrap();
        assert_eq!(w.balance("P"), 100);
    }

    #[test]
    fn multisig_waits_for_threshold() {
        let mut w = three_way();
        let mut prize = FixedPrize::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            90,
            signers(&["C", "P", "X"]),
            2,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        assert_eq!(
            prize.approve(&mut w.ledger, &w.dag, &a("Q"), &tree, None),
            Err(IncentiveError::NotSigner(a("Q")))
        );
        assert_eq!(
            prize.approve(&mut w.ledger, &w.dag, &a("C"), &tree, None),
            Ok(None)
        );
        assert_eq!(
            prize.approve(&mut w.ledger, &w.dag, &a("C"), &tree, None),
            Ok(None)
        );
        assert_eq!(prize.approvals(&tree), 1);
        assert!(!prize.is_paid());
        assert!(prize
            .approve(&mut w.ledger, &w.dag, &a("X"), &tree, None)
            .unwrap()
            .is_some());
        assert_eq!(w.balance("A"), 30);
    }

    #[test]
    fn wrong_tree_rejected() {
        let mut w = three_way();
        let mut prize = FixedPrize::deploy(
            &mut w.ledger,
            &a("C"),
            s("step"),
            90,
            signers(&["C"]),
            1,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        assert!(matches!(
            prize.approve(&mut w.ledger, &w.dag, &a("C"), &tree, None),
            Err(IncentiveError::TreeDoesNotProveTarget(_))
        ));
    }

    #[test]
    fn halving_pays_geometric_series() {
        let mut w = World::new(&[("C", 1000), ("P", 0)]);
        w.add("c0", "C", "goal", None);
        for i in 0..9 {
            w.add(&format!("alt{i}"), "P", "goal", Some(&[]));
        }
        let tcr = all_listed(&w.registry);
        let mut series = HalvingSeries::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            64,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        assert_eq!(w.balance("C"), 872);
        let trees = w.dag.proof_trees(&s("goal"));
        let mut paid = Vec::new();
        for t in &trees[..7] {
            let out = series
                .register(&mut w.ledger, &w.dag, &tcr, 0, t, None)
                .unwrap();
            paid.push(out[0].amount);
        }
        assert_eq!(paid, [64, 32, 16, 8, 4, 2, 1]);
        assert_eq!(series.total_paid(), 127);
        assert!(series.is_closed());
        assert_eq!(w.balance("C"), 873);
        assert_eq!(w.balance("P"), 127);
        assert_eq!(
            series.register(&mut w.ledger, &w.dag, &tcr, 0, &trees[7], None),
            Err(IncentiveError::SeriesClosed)
        );
        w.ledger.check_conservation().unwrap();
        assert_eq!(w.ledger.escrowed_total(), 0);
    }

    #[test]
    fn halving_rejects_duplicates_and_uncanonical() {
        let mut w = World::new(&[("C", 1000), ("P", 0)]);
        w.add("c0", "C", "goal", None);
        w.add("c1", "P", "goal", Some(&[]));
        let mut series = HalvingSeries::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            8,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let empty = Tcr::new(TcrParams::default()).unwrap();
        assert_eq!(
            series.register(&mut w.ledger, &w.dag, &empty, 0, &tree, None),
            Err(IncentiveError::NotCanonical("c1".into()))
        );
        let tcr = all_listed(&w.registry);
        series
            .register(&mut w.ledger, &w.dag, &tcr, 0, &tree, None)
            .unwrap();
        assert_eq!(
            series.register(&mut w.ledger, &w.dag, &tcr, 0, &tree, None),
            Err(IncentiveError::DuplicateTree)
        );
        assert_eq!(series.next_payout(), 4);
    }

    #[test]
    fn halving_of_one_closes_immediately() {
        let mut w = World::new(&[("C", 10), ("P", 0)]);
        w.add("c0", "C", "goal", None);
        w.add("c1", "P", "goal", Some(&[]));
        let tcr = all_listed(&w.registry);
        let mut series = HalvingSeries::deploy(
            &mut w.ledger,
            &a("C"),
            s("goal"),
            1,
            AllocationPolicy::Shapley,
        )
        .unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let out = series
            .register(&mut w.ledger, &w.dag, &tcr, 0, &tree, None)
            .unwrap();
        assert_eq!(out.last().unwrap().role, PayoutRole::Refund);
        assert!(series.is_closed());
        assert_eq!((w.balance("C"), w.balance("P")), (9, 1));
    }
}
