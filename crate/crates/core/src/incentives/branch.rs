use crate::data_layer::ContentAddress;
use crate::ledger::{AccountId, EscrowId, Ledger, TokenAmount};
use crate::proof_dag::ProofTree;
use crate::split::{largest_remainder, Share};

use super::{IncentiveError, Payout, PayoutRole};

/// Tokens staked on a piece of partial progress. If a rewarded proof runs
/// through the contribution, a fixed fraction of the reward goes to the
/// stakers in proportion to their stakes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchStake {
    pub contribution: ContentAddress,
    pub rho: Share,
    /// Stakes in arrival order.
    stakes: Vec<(AccountId, EscrowId, TokenAmount)>,
    settled: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchOutcome {
    Paid(Vec<Payout>),
    /// The tree bypassed the branch; stakes were returned.
    NotInTree(Vec<Payout>),
}

impl BranchStake {
    pub fn new(contribution: ContentAddress, rho: Share) -> Self {
        BranchStake {
            contribution,
            rho,
            stakes: Vec::new(),
            settled: false,
        }
    }

    pub fn stakes(&self) -> impl Iterator<Item = (&AccountId, TokenAmount)> {
        self.stakes.iter().map(|(a, _, n)| (a, *n))
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    pub fn stake(
        &mut self,
        ledger: &mut Ledger,
        staker: &AccountId,
        amount: TokenAmount,
    ) -> Result<(), IncentiveError> {
        if self.settled {
            return Err(IncentiveError::BranchSettled);
        }
        if amount == 0 {
            return Err(IncentiveError::ZeroStake);
        }
        let escrow = ledger.escrow_lock(
            staker,
            amount,
            format!("branch stake {}", self.contribution.short()),
        )?;
        self.stakes.push((staker.clone(), escrow, amount));
        Ok(())
    }

    /// Takes this branch's pool out of `reward` and returns the stakes.
    pub fn settle(
        &mut self,
        ledger: &mut Ledger,
        reward: &EscrowId,
        tree: &ProofTree,
    ) -> Result<BranchOutcome, IncentiveError> {
        if self.settled {
            return Err(IncentiveError::BranchSettled);
        }
        if !tree.uses(&self.contribution) {
            return Ok(BranchOutcome::NotInTree(self.refund(ledger)?));
        }
        let pool = self.rho.of_floor(ledger.escrow(reward)?.amount);
        let weights: Vec<u128> = self.stakes.iter().map(|(_, _, n)| *n as u128).collect();
        let mut payouts = Vec::new();
        if pool > 0 && !weights.is_empty() {
            let shares = largest_remainder(pool, &weights)?;
            let flat: Vec<(AccountId, TokenAmount)> = self
                .stakes
                .iter()
                .map(|(a, _, _)| a.clone())
                .zip(shares)
                .collect();
            let pool_escrow = ledger.escrow_split(reward, pool, "branch pool")?;
            ledger.escrow_release(&pool_escrow, &flat)?;
            payouts.extend(flat.into_iter().map(|(account, amount)| Payout {
                account,
                amount,
                role: PayoutRole::Staker,
            }));
        }
        payouts.extend(self.refund(ledger)?);
        Ok(BranchOutcome::Paid(payouts))
    }

    /// Returns every stake and closes the branch.
    pub fn refund(&mut self, ledger: &mut Ledger) -> Result<Vec<Payout>, IncentiveError> {
        let mut payouts = Vec::new();
        for (account, escrow, amount) in &self.stakes {
            ledger.escrow_refund(escrow)?;
            payouts.push(Payout {
                account: account.clone(),
                amount: *amount,
                role: PayoutRole::StakeReturn,
            });
        }
        self.settled = true;
        Ok(payouts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incentives::fixture::{a, s, World};
    use crate::incentives::{distribute, AllocationPolicy};

    fn world() -> World {
        let mut w = World::new(&[("C", 1000), ("P", 0), ("Q", 0), ("S1", 100), ("S2", 100)]);
        w.add("c0", "C", "goal", None);
        w.add("c1", "P", "goal", Some(&["lemma"]));
        w.add("c2", "Q", "lemma", Some(&[]));
        w
    }

    fn reward(w: &mut World, amount: u64) -> EscrowId {
        w.ledger.escrow_lock(&a("C"), amount, "reward").unwrap()
    }

    #[test]
    fn single_staker_takes_rho() {
        let mut w = world();
        let mut b = BranchStake::new(w.addr("c1"), "1/4".parse().unwrap());
        b.stake(&mut w.ledger, &a("S1"), 40).unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let r = reward(&mut w, 100);
        distribute(
            &mut w.ledger,
            &w.dag,
            &r,
            &tree,
            AllocationPolicy::EqualSplit,
            Some(&mut b),
        )
        .unwrap();
        assert_eq!(w.balance("S1"), 125);
        assert_eq!(w.balance("P") + w.balance("Q"), 75);
        assert!(b.is_settled());
        w.ledger.check_conservation().unwrap();
    }

    #[test]
    fn two_stakers_pro_rata() {
        let mut w = world();
        let mut b = BranchStake::new(w.addr("c2"), "1/4".parse().unwrap());
        b.stake(&mut w.ledger, &a("S1"), 30).unwrap();
        b.stake(&mut w.ledger, &a("S2"), 10).unwrap();
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let r = reward(&mut w, 100);
        let out = b.settle(&mut w.ledger, &r, &tree).unwrap();
        let BranchOutcome::Paid(p) = out else {
            panic!()
        };
        let gained: Vec<_> = p
            .iter()
            .filter(|p| p.role == PayoutRole::Staker)
            .map(|p| p.amount)
            .collect();
        assert_eq!(gained, [19, 6]);
        assert_eq!(w.ledger.escrow(&r).unwrap().amount, 75);
        assert_eq!((w.balance("S1"), w.balance("S2")), (119, 106));
    }

    #[test]
    fn branch_off_tree_is_refunded() {
        let mut w = world();
        w.add("c3", "C", "other", None);
        w.add("c4", "Q", "other", Some(&[]));
        let mut b = BranchStake::new(w.addr("c4"), Share::half());
        b.stake(&mut w.ledger, &a("S1"), 30).unwrap();
        assert_eq!(w.balance("S1"), 70);
        let tree = w.dag.proof_trees(&s("goal")).remove(0);
        let r = reward(&mut w, 100);
        assert!(matches!(
            b.settle(&mut w.ledger, &r, &tree),
            Ok(BranchOutcome::NotInTree(_))
        ));
        assert_eq!(w.balance("S1"), 100);
        assert_eq!(w.ledger.escrow(&r).unwrap().amount, 100);
        assert_eq!(
            b.stake(&mut w.ledger, &a("S1"), 1),
            Err(IncentiveError::BranchSettled)
        );
    }

    #[test]
    fn zero_stake_rejected() {
        let mut w = world();
        let mut b = BranchStake::new(w.addr("c1"), Share::half());
        assert_eq!(
            b.stake(&mut w.ledger, &a("S1"), 0),
            Err(IncentiveError::ZeroStake)
        );
    }
}
