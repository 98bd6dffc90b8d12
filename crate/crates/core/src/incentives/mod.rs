//! Incentive contracts paying out for completed proofs, plus licensing.
//!
//! Every mechanism escrows its funds up front. When a proof is awarded the
//! mechanism carves the reward out of its escrow and [`distribute`] settles
//! it: a staked branch on the tree takes its pool first, the rest goes to the
//! tree's contributors under the chosen [`AllocationPolicy`].

mod branch;
mod license;
mod prize;
mod shapley;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::data_layer::StatementId;
use crate::ledger::{AccountId, EscrowId, Ledger, LedgerError, TokenAmount};
use crate::proof_dag::{ProofDag, ProofTree, TreeError};
use crate::split::{equal_split, SplitError};

pub use branch::{BranchOutcome, BranchStake};
pub use license::{DenyReason, LicenseCharge, LicenseOutcome, LicenseState};
pub use prize::{FixedPrize, HalvingSeries};
pub use shapley::{
    factorial, integerize, provable, shapley_allocate, shapley_numerators, MAX_PLAYERS,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncentiveError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("{0} players exceeds the exact Shapley bound")]
    TooManyPlayers(usize),
    #[error("target `{0}` is not provable by all players together")]
    TargetUnprovenByGrandCoalition(StatementId),
    #[error("coalition game is not monotone")]
    NonMonotoneGame,
    #[error("signer set is empty")]
    EmptySigners,
    #[error("threshold {threshold} is outside 1..={signers}")]
    BadThreshold { threshold: usize, signers: usize },
    #[error("prize must be positive")]
    ZeroPrize,
    #[error("`{0}` is not a signer")]
    NotSigner(AccountId),
    #[error("prize already paid")]
    AlreadyPaid,
    #[error("tree does not prove the target: {0}")]
    TreeDoesNotProveTarget(TreeError),
    #[error("tree already registered on this series")]
    DuplicateTree,
    #[error("series is closed")]
    SeriesClosed,
    #[error("completing record `{0}` is not canonical")]
    NotCanonical(String),
    #[error("branch contribution is not in the completing tree")]
    BranchNotInTree,
    #[error("branch is already settled")]
    BranchSettled,
    #[error("stake must be positive")]
    ZeroStake,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AllocationPolicy {
    #[default]
    Shapley,
    EqualSplit,
}

impl fmt::Display for AllocationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationPolicy::Shapley => "shapley",
            AllocationPolicy::EqualSplit => "equal",
        })
    }
}

impl FromStr for AllocationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shapley" => Ok(AllocationPolicy::Shapley),
            "equal" => Ok(AllocationPolicy::EqualSplit),
            other => Err(format!("unknown allocation policy `{other}`")),
        }
    }
}

impl AllocationPolicy {
    /// Exact partition of `amount` among the tree's contributors.
    pub fn allocate(
        self,
        dag: &ProofDag,
        tree: &ProofTree,
        amount: TokenAmount,
    ) -> Result<Vec<(AccountId, TokenAmount)>, IncentiveError> {
        match self {
            AllocationPolicy::EqualSplit => {
                let shares = equal_split(amount, tree.contributors.len())?;
                Ok(tree.contributors.iter().cloned().zip(shares).collect())
            }
            AllocationPolicy::Shapley => {
                let justs: Vec<_> = tree
                    .choices
                    .values()
                    .map(|id| dag.justification(id).expect("tree checked against dag"))
                    .collect();
                shapley_allocate(&justs, &tree.root, amount)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PayoutRole {
    Contributor,
    Staker,
    StakeReturn,
    Refund,
}

impl fmt::Display for PayoutRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayoutRole::Contributor => "contributor",
            PayoutRole::Staker => "staker",
            PayoutRole::StakeReturn => "stake returned",
            PayoutRole::Refund => "refund",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Payout {
    pub account: AccountId,
    pub amount: TokenAmount,
    pub role: PayoutRole,
}

/// Settles a reward escrow for `tree`. When `branch` is given and its
/// contribution is in the tree, its stakers take their pool first.
pub fn distribute(
    ledger: &mut Ledger,
    dag: &ProofDag,
    reward: &EscrowId,
    tree: &ProofTree,
    policy: AllocationPolicy,
    branch: Option<&mut BranchStake>,
) -> Result<Vec<Payout>, IncentiveError> {
    let mut payouts = Vec::new();
    if let Some(branch) = branch {
        if tree.uses(&branch.contribution) {
            if let BranchOutcome::Paid(p) = branch.settle(ledger, reward, tree)? {
                payouts.extend(p);
            }
        }
    }
    let amount = ledger.escrow(reward)?.amount;
    let shares = policy.allocate(dag, tree, amount)?;
    ledger.escrow_release(reward, &shares)?;
    payouts.extend(shares.into_iter().map(|(account, amount)| Payout {
        account,
        amount,
        role: PayoutRole::Contributor,
    }));
    Ok(payouts)
}

fn check_proves(
    dag: &ProofDag,
    tree: &ProofTree,
    target: &StatementId,
) -> Result<(), IncentiveError> {
    dag.check_tree(tree, target)
        .map_err(IncentiveError::TreeDoesNotProveTarget)
}

#[cfg(test)]
pub(crate) mod fixture;
