//! Token-curated registry deciding which records are canonical.
//!
//! A proposer escrows the inclusion stake; during the delay period any bonded
//! prover may challenge by escrowing the dispute stake, which opens a vote
//! among bonded provers. Voting is one prover, one vote. Ties, including a
//! challenge nobody votes on, resolve in favour of inclusion.
//!
//! Payouts on resolution:
//! - unchallenged: inclusion stake returned;
//! - challenge fails: contributor takes `ceil(dispute / 2)`, Include voters
//!   split the rest (the contributor takes it all if nobody voted Include);
//!   inclusion stake returned;
//! - challenge succeeds: challenger takes `floor(inclusion * share)`, Exclude
//!   voters split the rest; dispute stake returned.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::data_layer::Registry;
use crate::ledger::{AccountId, EscrowId, Ledger, LedgerError, TokenAmount};
use crate::split::{equal_split, Share};
use crate::Tick;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcrParams {
    pub min_bond: TokenAmount,
    pub inclusion_stake: TokenAmount,
    pub dispute_stake: TokenAmount,
    pub delay_period: Tick,
    pub vote_period: Tick,
    pub challenger_share: Share,
}

impl Default for TcrParams {
    fn default() -> Self {
        TcrParams {
            min_bond: 10,
            inclusion_stake: 20,
            dispute_stake: 20,
            delay_period: 2,
            vote_period: 2,
            challenger_share: Share::half(),
        }
    }
}

impl TcrParams {
    pub fn validate(&self) -> Result<(), TcrError> {
        let bad = |what: &str| Err(TcrError::BadParams(what.to_string()));
        if self.delay_period == 0 || self.vote_period == 0 {
            return bad("periods must be positive");
        }
        if self.min_bond == 0 || self.inclusion_stake == 0 || self.dispute_stake == 0 {
            return bad("stakes must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListingState {
    Pending,
    Challenged,
    Listed,
    Rejected,
}

impl fmt::Display for ListingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ListingState::Pending => "Pending",
            ListingState::Challenged => "Challenged",
            ListingState::Listed => "Listed",
            ListingState::Rejected => "Rejected",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoteChoice {
    Include,
    Exclude,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub challenger: AccountId,
    pub dispute_escrow: EscrowId,
    /// Votes in arrival order.
    pub votes: Vec<(AccountId, VoteChoice)>,
    pub vote_deadline: Tick,
}

impl Challenge {
    pub fn tally(&self) -> (usize, usize) {
        let include = self
            .votes
            .iter()
            .filter(|(_, c)| *c == VoteChoice::Include)
            .count();
        (include, self.votes.len() - include)
    }

    fn voters(&self, choice: VoteChoice) -> Vec<AccountId> {
        self.votes
            .iter()
            .filter(|(_, c)| *c == choice)
            .map(|(a, _)| a.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcrListing {
    pub record_id: String,
    pub proposer: AccountId,
    pub state: ListingState,
    /// `None` once resolved, or for genesis listings that never staked.
    pub inclusion_escrow: Option<EscrowId>,
    pub challenge: Option<Challenge>,
    pub proposed_at: Tick,
    /// End of the challenge window.
    pub deadline: Tick,
    pub listed_at: Option<Tick>,
    pub weight: u64,
}

impl TcrListing {
    pub fn is_terminal(&self) -> bool {
        matches!(self.state, ListingState::Listed | ListingState::Rejected)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Payout {
    pub account: AccountId,
    pub amount: TokenAmount,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub state: ListingState,
    pub weight: u64,
    pub payouts: Vec<Payout>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TcrError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("bad TCR parameters: {0}")]
    BadParams(String),
    #[error("bond of {offered} is below the minimum {min}")]
    BelowMinBond {
        offered: TokenAmount,
        min: TokenAmount,
    },
    #[error("`{0}` is already bonded")]
    AlreadyBonded(AccountId),
    #[error("`{0}` is not bonded")]
    NotBonded(AccountId),
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
    #[error("record `{0}` already proposed")]
    AlreadyProposed(String),
    #[error("no listing for `{0}`")]
    UnknownListing(String),
    #[error("listing `{0}` is not pending")]
    NotPending(String),
    #[error("challenge window for `{0}` has closed")]
    DeadlinePassed(String),
    #[error("no open vote on `{0}`")]
    NoActiveVote(String),
    #[error("`{voter}` already voted on `{record}`")]
    AlreadyVoted { record: String, voter: AccountId },
    #[error("listing `{record}` cannot be resolved before tick {due}")]
    NotDue { record: String, due: Tick },
    #[error("listing `{0}` is already resolved")]
    AlreadyResolved(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tcr {
    params: TcrParams,
    bonds: BTreeMap<AccountId, EscrowId>,
    listings: BTreeMap<String, TcrListing>,
}

impl Tcr {
    pub fn new(params: TcrParams) -> Result<Self, TcrError> {
        params.validate()?;
        Ok(Tcr {
            params,
            bonds: BTreeMap::new(),
            listings: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &TcrParams {
        &self.params
    }

    pub fn is_bonded(&self, account: &AccountId) -> bool {
        self.bonds.contains_key(account)
    }

    pub fn bonded(&self) -> impl Iterator<Item = &AccountId> {
        self.bonds.keys()
    }

    pub fn listing(&self, record_id: &str) -> Option<&TcrListing> {
        self.listings.get(record_id)
    }

    pub fn listings(&self) -> impl Iterator<Item = &TcrListing> {
        self.listings.values()
    }

    /// Whether the record currently counts as canonical: listed, or pending
    /// with its challenge window elapsed unchallenged.
    pub fn is_canonical(&self, record_id: &str, now: Tick) -> bool {
        self.listings.get(record_id).is_some_and(|l| {
            l.state == ListingState::Listed
                || (l.state == ListingState::Pending && now >= l.deadline)
        })
    }

    pub fn bond(
        &mut self,
        ledger: &mut Ledger,
        prover: &AccountId,
        amount: TokenAmount,
    ) -> Result<EscrowId, TcrError> {
        if self.bonds.contains_key(prover) {
            return Err(TcrError::AlreadyBonded(prover.clone()));
        }
        if amount < self.params.min_bond {
            return Err(TcrError::BelowMinBond {
                offered: amount,
                min: self.params.min_bond,
            });
        }
        let escrow = ledger.escrow_lock(prover, amount, format!("bond {prover}"))?;
        self.bonds.insert(prover.clone(), escrow.clone());
        Ok(escrow)
    }

    pub fn propose(
        &mut self,
        ledger: &mut Ledger,
        registry: &Registry,
        record_id: &str,
        proposer: &AccountId,
        now: Tick,
    ) -> Result<&TcrListing, TcrError> {
        if registry.get(record_id).is_none() {
            return Err(TcrError::UnknownRecord(record_id.to_string()));
        }
        if self.listings.contains_key(record_id) {
            return Err(TcrError::AlreadyProposed(record_id.to_string()));
        }
        let escrow = ledger.escrow_lock(
            proposer,
            self.params.inclusion_stake,
            format!("inclusion {record_id}"),
        )?;
        let listing = TcrListing {
            record_id: record_id.to_string(),
            proposer: proposer.clone(),
            state: ListingState::Pending,
            inclusion_escrow: Some(escrow),
            challenge: None,
            proposed_at: now,
            deadline: now + self.params.delay_period,
            listed_at: None,
            weight: 0,
        };
        Ok(self
            .listings
            .entry(record_id.to_string())
            .or_insert(listing))
    }

    /// Lists a record directly, without stake or challenge window. Used to
    /// bootstrap the registry with an existing library.
    pub fn prelist(
        &mut self,
        registry: &Registry,
        record_id: &str,
        proposer: &AccountId,
        now: Tick,
    ) -> Result<&TcrListing, TcrError> {
        if registry.get(record_id).is_none() {
            return Err(TcrError::UnknownRecord(record_id.to_string()));
        }
        if self.listings.contains_key(record_id) {
            return Err(TcrError::AlreadyProposed(record_id.to_string()));
        }
        let listing = TcrListing {
            record_id: record_id.to_string(),
            proposer: proposer.clone(),
            state: ListingState::Listed,
            inclusion_escrow: None,
            challenge: None,
            proposed_at: now,
            deadline: now,
            listed_at: Some(now),
            weight: 0,
        };
        Ok(self
            .listings
            .entry(record_id.to_string())
            .or_insert(listing))
    }

    pub fn challenge(
        &mut self,
        ledger: &mut Ledger,
        record_id: &str,
        challenger: &AccountId,
        now: Tick,
    ) -> Result<&TcrListing, TcrError> {
        let listing = self
            .listings
            .get(record_id)
            .ok_or_else(|| TcrError::UnknownListing(record_id.to_string()))?;
        if listing.state != ListingState::Pending {
            return Err(TcrError::NotPending(record_id.to_string()));
        }
        if now >= listing.deadline {
            return Err(TcrError::DeadlinePassed(record_id.to_string()));
        }
        if !self.bonds.contains_key(challenger) {
            return Err(TcrError::NotBonded(challenger.clone()));
        }
        let escrow = ledger.escrow_lock(
            challenger,
            self.params.dispute_stake,
            format!("dispute {record_id}"),
        )?;
        let listing = self.listings.get_mut(record_id).expect("checked");
        listing.state = ListingState::Challenged;
        listing.challenge = Some(Challenge {
            challenger: challenger.clone(),
            dispute_escrow: escrow,
            votes: Vec::new(),
            vote_deadline: now + self.params.vote_period,
        });
        Ok(listing)
    }

    pub fn vote(
        &mut self,
        record_id: &str,
        voter: &AccountId,
        choice: VoteChoice,
        now: Tick,
    ) -> Result<(usize, usize), TcrError> {
        let listing = self
            .listings
            .get_mut(record_id)
            .ok_or_else(|| TcrError::UnknownListing(record_id.to_string()))?;
        if !self.bonds.contains_key(voter) {
            return Err(TcrError::NotBonded(voter.clone()));
        }
        let challenge = match (&listing.state, listing.challenge.as_mut()) {
            (ListingState::Challenged, Some(c)) if now < c.vote_deadline => c,
            _ => return Err(TcrError::NoActiveVote(record_id.to_string())),
        };
        if challenge.votes.iter().any(|(a, _)| a == voter) {
            return Err(TcrError::AlreadyVoted {
                record: record_id.to_string(),
                voter: voter.clone(),
            });
        }
        challenge.votes.push((voter.clone(), choice));
        Ok(challenge.tally())
    }

    /// Settles a listing whose window has elapsed. On error nothing changes.
    pub fn resolve(
        &mut self,
        ledger: &mut Ledger,
        record_id: &str,
        now: Tick,
    ) -> Result<Resolution, TcrError> {
        let listing = self
            .listings
            .get(record_id)
            .ok_or_else(|| TcrError::UnknownListing(record_id.to_string()))?;
        let inclusion_escrow = match (&listing.state, &listing.inclusion_escrow) {
            (ListingState::Listed | ListingState::Rejected, _) | (_, None) => {
                return Err(TcrError::AlreadyResolved(record_id.to_string()))
            }
            (_, Some(e)) => e.clone(),
        };
        let due = match &listing.challenge {
            Some(c) => c.vote_deadline,
            None => listing.deadline,
        };
        if now < due {
            return Err(TcrError::NotDue {
                record: record_id.to_string(),
                due,
            });
        }

        let inclusion = ledger.escrow(&inclusion_escrow)?.amount;
        let proposer = listing.proposer.clone();
        let mut staged = ledger.clone();
        let mut payouts = Vec::new();

        let (state, weight) = match &listing.challenge {
            None => {
                staged.escrow_release(&inclusion_escrow, &[(proposer.clone(), inclusion)])?;
                payouts.push(Payout {
                    account: proposer,
                    amount: inclusion,
                    reason: "inclusion stake returned",
                });
                (ListingState::Listed, 0)
            }
            Some(challenge) => {
                let dispute = staged.escrow(&challenge.dispute_escrow)?.amount;
                let (include, exclude) = challenge.tally();
                if include >= exclude {
                    let voters = challenge.voters(VoteChoice::Include);
                    let mut dispute_payouts = Vec::new();
                    if voters.is_empty() {
                        dispute_payouts.push((proposer.clone(), dispute, "dispute stake won"));
                    } else {
                        let contributor_cut = dispute.div_ceil(2);
                        dispute_payouts.push((
                            proposer.clone(),
                            contributor_cut,
                            "dispute stake won",
                        ));
                        let shares = equal_split(dispute - contributor_cut, voters.len())
                            .expect("non-empty voters");
                        for (v, s) in voters.into_iter().zip(shares) {
                            dispute_payouts.push((v, s, "voted with majority"));
                        }
                    }
                    release(
                        &mut staged,
                        &challenge.dispute_escrow,
                        &dispute_payouts,
                        &mut payouts,
                    )?;
                    release(
                        &mut staged,
                        &inclusion_escrow,
                        &[(proposer, inclusion, "inclusion stake returned")],
                        &mut payouts,
                    )?;
                    (ListingState::Listed, include as u64)
                } else {
                    let cut = self.params.challenger_share.of_floor(inclusion);
                    let mut inclusion_payouts =
                        vec![(challenge.challenger.clone(), cut, "challenge won")];
                    let voters = challenge.voters(VoteChoice::Exclude);
                    let shares =
                        equal_split(inclusion - cut, voters.len()).expect("non-empty voters");
                    for (v, s) in voters.into_iter().zip(shares) {
                        inclusion_payouts.push((v, s, "voted with majority"));
                    }
                    release(
                        &mut staged,
                        &inclusion_escrow,
                        &inclusion_payouts,
                        &mut payouts,
                    )?;
                    release(
                        &mut staged,
                        &challenge.dispute_escrow,
                        &[(
                            challenge.challenger.clone(),
                            dispute,
                            "dispute stake returned",
                        )],
                        &mut payouts,
                    )?;
                    (ListingState::Rejected, 0)
                }
            }
        };

        *ledger = staged;
        let listing = self.listings.get_mut(record_id).expect("checked");
        listing.state = state;
        listing.weight = weight;
        listing.inclusion_escrow = None;
        if state == ListingState::Listed {
            listing.listed_at = Some(now);
        }
        Ok(Resolution {
            state,
            weight,
            payouts,
        })
    }
}

fn release(
    ledger: &mut Ledger,
    escrow: &EscrowId,
    split: &[(AccountId, TokenAmount, &'static str)],
    log: &mut Vec<Payout>,
) -> Result<(), LedgerError> {
    let flat: Vec<_> = split.iter().map(|(a, n, _)| (a.clone(), *n)).collect();
    ledger.escrow_release(escrow, &flat)?;
    log.extend(split.iter().map(|(a, n, r)| Payout {
        account: a.clone(),
        amount: *n,
        reason: r,
    }));
    Ok(())
}
