//! Random interleavings of transfers, registry lifecycles and mechanism
//! settlements, with the token total checked after every operation.

use std::collections::BTreeSet;

use proofchain::incentives::{AllocationPolicy, BranchStake, FixedPrize, HalvingSeries};
use proofchain::ledger::EscrowId;
use proofchain::split::Share;
use proofchain::tcr::{TcrParams, VoteChoice};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{acct, rng, stmt, Net};

const ACCOUNTS: [&str; 6] = ["A0", "A1", "A2", "A3", "A4", "A5"];
const LEMMAS: [&str; 4] = ["l0", "l1", "l2", "l3"];

pub struct OpsWorld {
    pub net: Net,
    halving: HalvingSeries,
    fixed: FixedPrize,
    branches: Vec<BranchStake>,
    listings: Vec<String>,
    raw: Vec<EscrowId>,
    supply: u128,
}

fn policy(rng: &mut impl Rng) -> AllocationPolicy {
    if rng.gen_bool(0.5) {
        AllocationPolicy::Shapley
    } else {
        AllocationPolicy::EqualSplit
    }
}

impl OpsWorld {
    pub fn new(rng: &mut impl Rng) -> Self {
        let mut accounts = vec![("D", 5_000)];
        accounts.extend(ACCOUNTS.iter().map(|a| (*a, 300)));
        let params = TcrParams {
            min_bond: rng.gen_range(1..20),
            inclusion_stake: rng.gen_range(1..40),
            dispute_stake: rng.gen_range(1..40),
            delay_period: rng.gen_range(1..4),
            vote_period: rng.gen_range(1..4),
            challenger_share: ["1/2", "1/3", "3/4", "1/1"][rng.gen_range(0..4)]
                .parse()
                .unwrap(),
        };
        let mut net = Net::new(&accounts, params);
        let goal = net.add("D", "g", None).unwrap();
        net.tcr
            .prelist(&net.registry, &goal, &acct("D"), 0)
            .unwrap();
        let halving = HalvingSeries::deploy(
            &mut net.ledger,
            &acct("D"),
            stmt("g"),
            rng.gen_range(1..200),
            policy(rng),
        )
        .unwrap();
        let signers: BTreeSet<_> = [acct("A0"), acct("A1")].into();
        let fixed = FixedPrize::deploy(
            &mut net.ledger,
            &acct("D"),
            stmt("g"),
            rng.gen_range(1..500),
            signers,
            rng.gen_range(1..=2),
            policy(rng),
        )
        .unwrap();
        let supply = net.ledger.total_supply() as u128;
        OpsWorld {
            net,
            halving,
            fixed,
            branches: Vec::new(),
            listings: vec![goal],
            raw: Vec::new(),
            supply,
        }
    }

    fn any_account(rng: &mut impl Rng) -> proofchain::ledger::AccountId {
        acct(ACCOUNTS.choose(rng).unwrap())
    }

    /// Applies one random operation. Returns whether it succeeded.
    pub fn step(&mut self, rng: &mut impl Rng) -> bool {
        let net = &mut self.net;
        let now = net.now;
        match rng.gen_range(0..11) {
            0 => {
                let (a, b) = (Self::any_account(rng), Self::any_account(rng));
                net.ledger.transfer(&a, &b, rng.gen_range(0..250)).is_ok()
            }
            1 => {
                let a = Self::any_account(rng);
                net.tcr
                    .bond(&mut net.ledger, &a, rng.gen_range(0..30))
                    .is_ok()
            }
            2 => {
                let author = ACCOUNTS.choose(rng).unwrap();
                let mut targets = vec!["g"];
                targets.extend(LEMMAS.iter().filter(|l| net.dag.contains(&stmt(l))));
                let target = *targets.choose(rng).unwrap();
                let premises: Vec<String> = LEMMAS
                    .iter()
                    .filter(|l| **l != target && rng.gen_bool(0.3))
                    .map(|l| l.to_string())
                    .collect();
                let Ok(id) = net.add(author, target, Some(&premises)) else {
                    return false;
                };
                if rng.gen_bool(0.8)
                    && net
                        .tcr
                        .propose(&mut net.ledger, &net.registry, &id, &acct(author), now)
                        .is_ok()
                {
                    self.listings.push(id);
                }
                true
            }
            3 => match self.listings.choose(rng) {
                Some(id) => net
                    .tcr
                    .challenge(&mut net.ledger, id, &Self::any_account(rng), now)
                    .is_ok(),
                None => false,
            },
            4 => match self.listings.choose(rng) {
                Some(id) => {
                    let choice = if rng.gen_bool(0.5) {
                        VoteChoice::Include
                    } else {
                        VoteChoice::Exclude
                    };
                    net.tcr
                        .vote(id, &Self::any_account(rng), choice, now)
                        .is_ok()
                }
                None => false,
            },
            5 => match self.listings.choose(rng) {
                Some(id) => net.tcr.resolve(&mut net.ledger, id, now).is_ok(),
                None => false,
            },
            6 => {
                net.now += rng.gen_range(1..4);
                true
            }
            7 | 8 => {
                let trees = net.dag.proof_trees(&stmt("g"));
                let Some(tree) = trees.choose(rng) else {
                    return false;
                };
                let branch = self
                    .branches
                    .iter_mut()
                    .find(|b| !b.is_settled() && tree.uses(&b.contribution));
                if rng.gen_bool(0.5) {
                    self.halving
                        .register(&mut net.ledger, &net.dag, &net.tcr, now, tree, branch)
                        .is_ok()
                } else {
                    let signer = acct(["A0", "A1", "A2"].choose(rng).unwrap());
                    self.fixed
                        .approve(&mut net.ledger, &net.dag, &signer, tree, branch)
                        .is_ok()
                }
            }
            9 => {
                let Some(j) = net.dag.justifications().choose(rng) else {
                    return false;
                };
                let id = j.id;
                let idx = match self.branches.iter().position(|b| b.contribution == id) {
                    Some(i) => i,
                    None => {
                        let rho: Share =
                            ["1/4", "1/2", "1/3"][rng.gen_range(0..3)].parse().unwrap();
                        self.branches.push(BranchStake::new(id, rho));
                        self.branches.len() - 1
                    }
                };
                let staker = Self::any_account(rng);
                self.branches[idx]
                    .stake(&mut net.ledger, &staker, rng.gen_range(0..60))
                    .is_ok()
            }
            _ => {
                if !self.raw.is_empty() && rng.gen_bool(0.5) {
                    let e = self.raw.swap_remove(rng.gen_range(0..self.raw.len()));
                    net.ledger.escrow_refund(&e).is_ok()
                } else {
                    let a = Self::any_account(rng);
                    match net
                        .ledger
                        .escrow_lock(&a, rng.gen_range(0..80), "test lock")
                    {
                        Ok(e) => {
                            self.raw.push(e);
                            true
                        }
                        Err(_) => false,
                    }
                }
            }
        }
    }

    /// Checks the books two ways: the ledger's own check and a direct sum.
    pub fn conserved(&self) -> Result<(), String> {
        self.net
            .ledger
            .check_conservation()
            .map_err(|v| v.to_string())?;
        let held = self.net.holdings();
        if held != self.supply {
            return Err(format!("holdings {held} != supply {}", self.supply));
        }
        Ok(())
    }
}

/// Runs `steps` random operations from `seed`, checking conservation after
/// each. Returns (operations attempted, operations that succeeded).
pub fn random_sequence(seed: u64, steps: usize) -> Result<(usize, usize), String> {
    let mut rng = rng(seed);
    let mut world = OpsWorld::new(&mut rng);
    world.conserved()?;
    let mut ok = 0;
    for i in 0..steps {
        if world.step(&mut rng) {
            ok += 1;
        }
        world
            .conserved()
            .map_err(|e| format!("seed {seed} step {i}: {e}"))?;
    }
    Ok((steps, ok))
}
