//! Deterministic scenario engine.
//!
//! A scenario is a list of timestamped actions applied in file order to a
//! [`World`]. Every action runs against a copy of the world and is committed
//! only if it succeeds, so a failed action leaves no trace beyond its log
//! entry. Token conservation is checked after every event and a violation
//! aborts the run.

mod agent;
mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::data_layer::{ContentAddress, ContentStore, Record, Registry, StatementId};
use crate::incentives::{
    AllocationPolicy, BranchStake, FixedPrize, HalvingSeries, LicenseOutcome, LicenseState, Payout,
};
use crate::ledger::{AccountId, ConservationViolation, Ledger};
use crate::proof_dag::{export_dot, ProofDag, ProofTree, Validation};
use crate::tcr::{Tcr, TcrParams};
use crate::Tick;

pub use agent::{Agent, AgentKind, Attempt};
pub use scenario::{Action, AgentSpec, MechanismSpec, Scenario, ScenarioError, ScenarioEvent};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    Fixed(FixedPrize),
    Halving(HalvingSeries),
}

impl Mechanism {
    pub fn target(&self) -> &StatementId {
        match self {
            Mechanism::Fixed(m) => &m.target,
            Mechanism::Halving(m) => &m.target,
        }
    }

    pub fn policy(&self) -> AllocationPolicy {
        match self {
            Mechanism::Fixed(m) => m.policy,
            Mechanism::Halving(m) => m.policy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AwardRecord {
    pub tick: Tick,
    pub mechanism: String,
    pub tree_index: usize,
    pub tree: ProofTree,
    pub payouts: Vec<Payout>,
}

/// Complete protocol state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    pub now: Tick,
    pub ledger: Ledger,
    pub store: ContentStore,
    pub registry: Registry,
    pub dag: ProofDag,
    pub tcr: Tcr,
    pub licenses: LicenseState,
    pub mechanisms: BTreeMap<String, Mechanism>,
    /// Branch pools in creation order.
    pub branches: Vec<BranchStake>,
    /// Agents in registration order.
    pub agents: Vec<Agent>,
    /// Blob names bound by `put`.
    pub names: BTreeMap<String, ContentAddress>,
    pub awards: Vec<AwardRecord>,
    /// DOT renderings taken by `snapshot` events.
    pub snapshots: Vec<(Tick, String)>,
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

impl World {
    pub fn new() -> Self {
        World {
            now: 0,
            ledger: Ledger::genesis(std::iter::empty()).expect("empty genesis"),
            store: ContentStore::new(),
            registry: Registry::new(),
            dag: ProofDag::new(),
            tcr: Tcr::new(TcrParams::default()).expect("default params are valid"),
            licenses: LicenseState::new(),
            mechanisms: BTreeMap::new(),
            branches: Vec::new(),
            agents: Vec::new(),
            names: BTreeMap::new(),
            awards: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn ai_accounts(&self) -> BTreeSet<AccountId> {
        self.agents
            .iter()
            .filter(|a| matches!(a.kind, AgentKind::Ai { .. }))
            .map(|a| a.account.clone())
            .collect()
    }

    /// DOT rendering of the current graph, highlighting the most recently
    /// awarded tree.
    pub fn dot(&self) -> String {
        let highlight = self.awards.last().map(|a| &a.tree);
        export_dot(&self.dag, highlight, &self.ai_accounts())
    }

    pub fn agent(&self, account: &AccountId) -> Option<&Agent> {
        self.agents.iter().find(|a| a.account == *account)
    }

    /// Replaces every `@name` with the bound address.
    fn substitute(&self, text: &str) -> Result<String, String> {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(pos) = rest.find('@') {
            out.push_str(&rest[..pos]);
            let tail = &rest[pos + 1..];
            let end = tail
                .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.')))
                .unwrap_or(tail.len());
            let name = tail[..end].trim_end_matches('.');
            if name.is_empty() {
                return Err("dangling `@`".into());
            }
            let addr = self
                .names
                .get(name)
                .ok_or_else(|| format!("no blob named `{name}` has been put"))?;
            out.push_str(&addr.to_hex());
            rest = &tail[name.len()..];
        }
        out.push_str(rest);
        Ok(out)
    }

    fn address(&self, reference: &str) -> Result<ContentAddress, String> {
        self.substitute(reference)?
            .parse()
            .map_err(|e| format!("{e}"))
    }

    fn account(&self, actor: &str) -> Result<AccountId, String> {
        let id = AccountId::new(actor).map_err(|e| e.to_string())?;
        if !self.ledger.has_account(&id) {
            return Err(format!("unknown account `{actor}`"));
        }
        Ok(id)
    }

    fn put_text(&mut self, name: &str, text: &str) -> Result<String, String> {
        let text = self.substitute(text)?;
        let addr = self.store.put(text.as_bytes());
        match self.names.get(name) {
            Some(prev) if *prev != addr => {
                return Err(format!(
                    "blob name `{name}` already bound to {}",
                    prev.short()
                ))
            }
            _ => {
                self.names.insert(name.to_string(), addr);
            }
        }
        Ok(format!("put {name} at {}", addr.short()))
    }

    fn submit(
        &mut self,
        actor: &str,
        record_id: &str,
        fields: &[(String, String)],
    ) -> Result<String, String> {
        let author = AccountId::new(actor).map_err(|e| e.to_string())?;
        let values = fields
            .iter()
            .map(|(k, v)| Ok((k.clone(), self.substitute(v)?)))
            .collect::<Result<Vec<_>, String>>()?;
        let record = Record::from_fields(
            record_id,
            author.clone(),
            self.now,
            values.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        )
        .map_err(|e| e.to_string())?;
        self.registry
            .submit(record.clone())
            .map_err(|e| e.to_string())?;
        let head = format!("registered {record_id}");

        let blob = match self.store.get(&record.file) {
            Ok(b) => b.to_vec(),
            Err(e) => return Ok(format!("{head}; not ingested: {e}")),
        };
        let valid = match self.dag.validate(&record, &blob, &self.store) {
            Err(e) => return Ok(format!("{head}; not ingested: {e}")),
            Ok(Validation::Invalid(reasons)) => {
                let list: Vec<String> = reasons.iter().map(|r| r.to_string()).collect();
                return Ok(format!("{head}; invalid: {}", list.join("; ")));
            }
            Ok(Validation::Valid(v)) => v,
        };
        let outcomes = self
            .licenses
            .check_imports(
                &mut self.ledger,
                &self.registry,
                &self.tcr,
                self.now,
                &author,
                valid.imports(),
            )
            .map_err(|e| e.to_string())?;
        let mut fees = Vec::new();
        for o in &outcomes {
            match o {
                LicenseOutcome::Denied(reason) => {
                    return Ok(format!("{head}; license denied: {reason}"))
                }
                LicenseOutcome::Charged(x) => fees.push(x.to_string()),
                LicenseOutcome::Allowed => {}
            }
        }
        let report = self.dag.ingest(valid).map_err(|e| e.to_string())?;
        let mut text = format!("{head}; ingested");
        if !report.new_statements.is_empty() {
            text.push_str(&format!("; new: {}", join(&report.new_statements)));
        }
        if !report.newly_proven.is_empty() {
            text.push_str(&format!("; proven: {}", join(&report.newly_proven)));
        }
        if let Some(d) = report.duplicate_of {
            text.push_str(&format!("; duplicates {d}"));
        }
        if !fees.is_empty() {
            text.push_str(&format!("; fees paid: {}", fees.join(",")));
        }
        Ok(text)
    }

    fn tree_for(&self, mechanism: &str, index: usize) -> Result<ProofTree, String> {
        let m = self
            .mechanisms
            .get(mechanism)
            .ok_or_else(|| format!("no mechanism `{mechanism}`"))?;
        let mut trees = self.dag.proof_trees(m.target());
        if index >= trees.len() {
            return Err(format!(
                "`{}` has {} proof tree(s), no tree {index}",
                m.target(),
                trees.len()
            ));
        }
        Ok(trees.swap_remove(index))
    }

    fn record_award(
        &mut self,
        mechanism: &str,
        tree_index: usize,
        tree: ProofTree,
        payouts: Vec<Payout>,
    ) -> String {
        let text = payouts
            .iter()
            .map(|p| format!("{}+{}", p.account, p.amount))
            .collect::<Vec<_>>()
            .join(" ");
        self.awards.push(AwardRecord {
            tick: self.now,
            mechanism: mechanism.to_string(),
            tree_index,
            tree,
            payouts,
        });
        format!("awarded tree {tree_index}: {text}")
    }

    /// Applies a single non-step action.
    fn exec(&mut self, actor: &str, action: &Action) -> Result<String, String> {
        let now = self.now;
        match action {
            Action::Genesis(allocs) => {
                if !self.ledger.accounts().is_empty() {
                    return Err("genesis already happened".into());
                }
                let allocs = allocs
                    .iter()
                    .map(|(a, n)| Ok((AccountId::new(a.as_str())?, *n)))
                    .collect::<Result<Vec<_>, crate::ledger::LedgerError>>()
                    .map_err(|e| e.to_string())?;
                self.ledger = Ledger::genesis(allocs).map_err(|e| e.to_string())?;
                Ok(format!("supply {}", self.ledger.total_supply()))
            }
            Action::Tcr(params) => {
                if self.tcr.listings().next().is_some() || self.tcr.bonded().next().is_some() {
                    return Err("registry parameters are fixed once in use".into());
                }
                self.tcr = Tcr::new(params.clone()).map_err(|e| e.to_string())?;
                Ok("parameters set".into())
            }
            Action::Put(_) => unreachable!("puts are resolved by the engine"),
            Action::Submit { record_id, fields } => self.submit(actor, record_id, fields),
            Action::Prelist(rec) => {
                let who = AccountId::new(actor).map_err(|e| e.to_string())?;
                self.tcr
                    .prelist(&self.registry, rec, &who, now)
                    .map_err(|e| e.to_string())?;
                Ok(format!("{rec} listed"))
            }
            Action::SetHosted { file, hosted } => {
                let addr = self.address(file)?;
                if !self.store.set_hosted(&addr, *hosted) {
                    return Err(format!("{} was never stored", addr.short()));
                }
                Ok(format!("{} hosted={hosted}", addr.short()))
            }
            Action::Bond(n) => {
                let who = self.account(actor)?;
                self.tcr
                    .bond(&mut self.ledger, &who, *n)
                    .map_err(|e| e.to_string())?;
                Ok(format!("bonded {n}"))
            }
            Action::Propose(rec) => {
                let who = self.account(actor)?;
                let l = self
                    .tcr
                    .propose(&mut self.ledger, &self.registry, rec, &who, now)
                    .map_err(|e| e.to_string())?;
                Ok(format!("{rec} pending until {}", l.deadline))
            }
            Action::Challenge(rec) => {
                let who = self.account(actor)?;
                let l = self
                    .tcr
                    .challenge(&mut self.ledger, rec, &who, now)
                    .map_err(|e| e.to_string())?;
                let due = l.challenge.as_ref().map_or(now, |c| c.vote_deadline);
                Ok(format!("{rec} challenged, vote until {due}"))
            }
            Action::Vote(rec, choice) => {
                let who = self.account(actor)?;
                let (inc, exc) = self
                    .tcr
                    .vote(rec, &who, *choice, now)
                    .map_err(|e| e.to_string())?;
                Ok(format!("{rec} tally include={inc} exclude={exc}"))
            }
            Action::Resolve(rec) => {
                let res = self
                    .tcr
                    .resolve(&mut self.ledger, rec, now)
                    .map_err(|e| e.to_string())?;
                let pays: Vec<String> = res
                    .payouts
                    .iter()
                    .map(|p| format!("{}+{}", p.account, p.amount))
                    .collect();
                Ok(format!(
                    "{rec} {} weight={} {}",
                    res.state,
                    res.weight,
                    pays.join(" ")
                ))
            }
            Action::Deploy { name, spec } => {
                if self.mechanisms.contains_key(name) {
                    return Err(format!("mechanism `{name}` already deployed"));
                }
                let who = self.account(actor)?;
                let m = match spec {
                    MechanismSpec::Halving {
                        target,
                        reward,
                        policy,
                    } => Mechanism::Halving(
                        HalvingSeries::deploy(
                            &mut self.ledger,
                            &who,
                            target.clone(),
                            *reward,
                            *policy,
                        )
                        .map_err(|e| e.to_string())?,
                    ),
                    MechanismSpec::Fixed {
                        target,
                        prize,
                        signers,
                        threshold,
                        policy,
                    } => {
                        let signers = signers
                            .iter()
                            .map(|s| AccountId::new(s.as_str()).map_err(|e| e.to_string()))
                            .collect::<Result<_, _>>()?;
                        Mechanism::Fixed(
                            FixedPrize::deploy(
                                &mut self.ledger,
                                &who,
                                target.clone(),
                                *prize,
                                signers,
                                *threshold,
                                *policy,
                            )
                            .map_err(|e| e.to_string())?,
                        )
                    }
                };
                let text = format!("{name} on {}", m.target());
                self.mechanisms.insert(name.clone(), m);
                Ok(text)
            }
            Action::Approve { name, tree } => {
                let signer = AccountId::new(actor).map_err(|e| e.to_string())?;
                let t = self.tree_for(name, *tree)?;
                let mut mechanisms = std::mem::take(&mut self.mechanisms);
                let result = match mechanisms.get_mut(name) {
                    Some(Mechanism::Fixed(prize)) => {
                        let ledger = &mut self.ledger;
                        let dag = &self.dag;
                        let branch = self
                            .branches
                            .iter_mut()
                            .find(|b| !b.is_settled() && t.uses(&b.contribution));
                        prize
                            .approve(ledger, dag, &signer, &t, branch)
                            .map_err(|e| e.to_string())
                    }
                    _ => Err(format!("`{name}` is not a fixed prize")),
                };
                self.mechanisms = mechanisms;
                match result? {
                    Some(payouts) => Ok(self.record_award(name, *tree, t, payouts)),
                    None => Ok(format!("approved tree {tree}")),
                }
            }
            Action::Award { name, tree } => {
                let t = self.tree_for(name, *tree)?;
                let mut mechanisms = std::mem::take(&mut self.mechanisms);
                let result = match mechanisms.get_mut(name) {
                    Some(Mechanism::Halving(series)) => {
                        let branch = self
                            .branches
                            .iter_mut()
                            .find(|b| !b.is_settled() && t.uses(&b.contribution));
                        series
                            .register(&mut self.ledger, &self.dag, &self.tcr, now, &t, branch)
                            .map_err(|e| e.to_string())
                    }
                    _ => Err(format!("`{name}` is not a halving series")),
                };
                self.mechanisms = mechanisms;
                let payouts = result?;
                Ok(self.record_award(name, *tree, t, payouts))
            }
            Action::StakeBranch { file, amount, rho } => {
                let who = self.account(actor)?;
                let addr = self.address(file)?;
                if self.dag.justification(&addr).is_none() {
                    return Err(format!("{} is not a justification", addr.short()));
                }
                let idx = match self.branches.iter().position(|b| b.contribution == addr) {
                    Some(i) => {
                        if rho.is_some_and(|r| r != self.branches[i].rho) {
                            return Err("rho is fixed when the pool is created".into());
                        }
                        i
                    }
                    None => {
                        let rho = rho.ok_or("first stake on a branch must set rho")?;
                        self.branches.push(BranchStake::new(addr, rho));
                        self.branches.len() - 1
                    }
                };
                self.branches[idx]
                    .stake(&mut self.ledger, &who, *amount)
                    .map_err(|e| e.to_string())?;
                Ok(format!("staked {amount} on {}", addr.short()))
            }
            Action::RegisterAgent(spec) => {
                let who = self.account(actor)?;
                if self.agent(&who).is_some() {
                    return Err(format!("agent `{who}` already registered"));
                }
                self.agents.push(Agent::new(who, spec));
                Ok("registered".into())
            }
            Action::Script { action, name, args } => {
                let who = AccountId::new(actor).map_err(|e| e.to_string())?;
                let agent = self
                    .agents
                    .iter_mut()
                    .find(|a| a.account == who)
                    .ok_or_else(|| format!("no agent `{who}`"))?;
                if !matches!(agent.kind, AgentKind::Human) {
                    return Err(format!("agent `{who}` is not scripted"));
                }
                agent
                    .directives
                    .push_back((*action.clone(), name.clone(), args.clone()));
                Ok(format!("queued {name}"))
            }
            Action::Step { .. } => unreachable!("steps are resolved by the engine"),
            Action::Snapshot => {
                let dot = self.dot();
                self.snapshots.push((now, dot));
                Ok(format!("snapshot {}", self.snapshots.len()))
            }
            #[cfg(feature = "fault-injection")]
            Action::FaultMint(n) => {
                let who = AccountId::new(actor).map_err(|e| e.to_string())?;
                self.ledger.inject_mint_fault(&who, *n);
                Ok(format!("minted {n}"))
            }
        }
    }
}

fn join(ids: &[StatementId]) -> String {
    ids.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Read from the scenario.
    Top,
    /// Produced by an agent step.
    Emitted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub ok: bool,
    pub text: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            if self.ok { "ok" } else { "failed" },
            self.text
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub tick: Tick,
    pub actor: String,
    pub action: String,
    pub args: String,
    pub origin: Origin,
    pub outcome: Outcome,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marker = match self.origin {
            Origin::Top => "",
            Origin::Emitted => "  > ",
        };
        write!(
            f,
            "{marker}{} | {} | {} | {} => {}",
            self.tick, self.actor, self.action, self.args, self.outcome
        )
    }
}

/// Append-only record of a run. Together with the scenario's blob table it
/// is enough to rebuild the final state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub blobs: BTreeMap<String, String>,
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mutable access for tests that tamper with a log.
    pub fn entries_mut(&mut self) -> &mut Vec<LogEntry> {
        &mut self.entries
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error("conservation violated at tick {tick} by `{action}`: {violation:?}")]
    Invariant {
        tick: Tick,
        action: String,
        violation: ConservationViolation,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("log entry {index} cannot be parsed: {message}")]
    Malformed { index: usize, message: String },
    #[error("divergence at log entry {index}: recorded `{expected}`, replay produced `{found}`")]
    DivergenceDetected {
        index: usize,
        expected: String,
        found: String,
    },
}

pub struct RunOutput {
    pub world: World,
    pub log: EventLog,
}

struct Engine {
    world: World,
    log: EventLog,
}

impl Engine {
    fn new(blobs: BTreeMap<String, String>) -> Self {
        Engine {
            world: World::new(),
            log: EventLog {
                blobs,
                entries: Vec::new(),
            },
        }
    }

    fn check(&self, action: &str) -> Result<(), RunError> {
        self.world
            .ledger
            .check_conservation()
            .map_err(|violation| RunError::Invariant {
                tick: self.world.now,
                action: action.to_string(),
                violation,
            })
    }

    fn push(
        &mut self,
        actor: &str,
        action: &str,
        args: &str,
        origin: Origin,
        result: Result<String, String>,
    ) {
        let outcome = match result {
            Ok(text) => Outcome { ok: true, text },
            Err(text) => Outcome { ok: false, text },
        };
        self.log.entries.push(LogEntry {
            tick: self.world.now,
            actor: actor.to_string(),
            action: action.to_string(),
            args: args.to_string(),
            origin,
            outcome,
        });
    }

    /// Runs `f` on a copy of the world, committing on success.
    fn attempt(
        &mut self,
        f: impl FnOnce(&mut World) -> Result<String, String>,
    ) -> Result<String, String> {
        let mut next = self.world.clone();
        let out = f(&mut next)?;
        self.world = next;
        Ok(out)
    }

    fn apply(
        &mut self,
        tick: Tick,
        actor: &str,
        name: &str,
        args: &str,
        action: &Action,
        origin: Origin,
    ) -> Result<(), RunError> {
        self.world.now = tick;
        match action {
            Action::Step { id } => return self.step(actor, name, args, id.as_deref(), origin),
            Action::Put(blob) => {
                let result = match self.log.blobs.get(blob).cloned() {
                    Some(text) => self.attempt(|w| w.put_text(blob, &text)),
                    None => Err(format!("no blob `{blob}` in scenario")),
                };
                self.push(actor, name, args, origin, result);
            }
            _ => {
                let result = self.attempt(|w| w.exec(actor, action));
                self.push(actor, name, args, origin, result);
            }
        }
        self.check(name)
    }

    fn step(
        &mut self,
        actor: &str,
        name: &str,
        args: &str,
        id: Option<&str>,
        origin: Origin,
    ) -> Result<(), RunError> {
        let accounts: Vec<AccountId> = if actor == "*" {
            self.world
                .agents
                .iter()
                .map(|a| a.account.clone())
                .collect()
        } else {
            match AccountId::new(actor) {
                Ok(a) if self.world.agent(&a).is_some() => vec![a],
                _ => {
                    self.push(
                        actor,
                        name,
                        args,
                        origin,
                        Err(format!("no agent `{actor}`")),
                    );
                    return Ok(());
                }
            }
        };
        let slot = self.log.entries.len();
        self.push(actor, name, args, origin, Ok(String::new()));
        let mut closures = 0usize;
        for account in accounts {
            let plan = agent::plan(&self.world, &account, id, &mut closures);
            for step in plan {
                self.emit(&account, step)?;
            }
        }
        let emitted = self.log.entries.len() - slot - 1;
        self.log.entries[slot].outcome.text = format!("{emitted} event(s)");
        Ok(())
    }

    fn emit(&mut self, account: &AccountId, step: agent::Planned) -> Result<(), RunError> {
        let actor = account.as_str().to_string();
        match step {
            agent::Planned::Directive(action, name, args) => {
                self.world
                    .agents
                    .iter_mut()
                    .find(|a| a.account == *account)
                    .expect("planned for a registered agent")
                    .directives
                    .pop_front();
                if let Action::Put(blob) = &action {
                    let result = match self.log.blobs.get(blob).cloned() {
                        Some(text) => self.attempt(|w| w.put_text(blob, &text)),
                        None => Err(format!("no blob `{blob}` in scenario")),
                    };
                    self.push(&actor, &name, &args, Origin::Emitted, result);
                } else {
                    let result = self.attempt(|w| w.exec(&actor, &action));
                    self.push(&actor, &name, &args, Origin::Emitted, result);
                }
                self.check(&name)
            }
            agent::Planned::Close {
                statement,
                name,
                text,
            } => {
                let result = self.attempt(|w| w.put_text(&name, &text));
                self.push(&actor, "put", &name, Origin::Emitted, result);
                self.check("put")?;
                let fields = vec![
                    ("file".to_string(), format!("@{name}")),
                    ("filetype".to_string(), "CompletedProof".to_string()),
                ];
                let args = format!("{name} file=@{name} filetype=CompletedProof");
                let result = self.attempt(|w| w.submit(&actor, &name, &fields));
                self.push(&actor, "submit", &args, Origin::Emitted, result);
                self.check("submit")?;
                let result = self.attempt(|w| w.exec(&actor, &Action::Propose(name.clone())));
                self.push(&actor, "propose", &name, Origin::Emitted, result);
                self.check("propose")?;
                self.record_attempt(account, statement, true);
                Ok(())
            }
            agent::Planned::Fail { statement } => {
                let text = format!("no proof found for {statement}");
                self.push(
                    &actor,
                    "attempt",
                    statement.as_str(),
                    Origin::Emitted,
                    Err(text),
                );
                self.record_attempt(account, statement, false);
                Ok(())
            }
        }
    }

    fn record_attempt(&mut self, account: &AccountId, statement: StatementId, closed: bool) {
        let now = self.world.now;
        if let Some(a) = self.world.agents.iter_mut().find(|a| a.account == *account) {
            a.attempts.push(Attempt {
                tick: now,
                statement,
                closed,
            });
        }
    }
}

/// Runs the whole scenario.
pub fn run(scenario: &Scenario) -> Result<RunOutput, RunError> {
    run_until(scenario, None)
}

/// Runs every event with tick at most `until`.
pub fn run_until(scenario: &Scenario, until: Option<Tick>) -> Result<RunOutput, RunError> {
    let mut engine = Engine::new(scenario.blobs.clone());
    for ev in &scenario.events {
        if until.is_some_and(|u| ev.tick > u) {
            break;
        }
        engine.apply(
            ev.tick,
            &ev.actor,
            &ev.action_name,
            &ev.args,
            &ev.action,
            Origin::Top,
        )?;
    }
    if let Some(u) = until {
        engine.world.now = engine.world.now.max(u.min(scenario.last_tick()));
    }
    Ok(RunOutput {
        world: engine.world,
        log: engine.log,
    })
}

/// Re-executes the top-level entries of `log` on a fresh world and checks
/// that every entry, including agent output, comes out the same.
pub fn replay(log: &EventLog) -> Result<World, ReplayError> {
    let mut engine = Engine::new(log.blobs.clone());
    for (index, entry) in log.entries.iter().enumerate() {
        if entry.origin != Origin::Top {
            continue;
        }
        let action = Action::parse(&entry.action, &entry.args)
            .map_err(|message| ReplayError::Malformed { index, message })?;
        engine.apply(
            entry.tick,
            &entry.actor,
            &entry.action,
            &entry.args,
            &action,
            Origin::Top,
        )?;
        let produced = engine.log.entries.len();
        if produced > log.entries.len() {
            return Err(divergence(log, &engine.log, log.entries.len()));
        }
        if let Some(i) = (0..produced).find(|&i| engine.log.entries[i] != log.entries[i]) {
            return Err(divergence(log, &engine.log, i));
        }
    }
    if engine.log.entries.len() != log.entries.len() {
        return Err(divergence(log, &engine.log, engine.log.entries.len()));
    }
    Ok(engine.world)
}

fn divergence(expected: &EventLog, found: &EventLog, index: usize) -> ReplayError {
    let show = |log: &EventLog| {
        log.entries
            .get(index)
            .map_or_else(|| "<end of log>".to_string(), |e| e.to_string())
    };
    ReplayError::DivergenceDetected {
        index,
        expected: show(expected),
        found: show(found),
    }
}
