//! The AND-OR statement graph built from validated contributions.
//!
//! Statements are OR-nodes: a statement is proven when any one of its
//! justifications holds. Justifications are AND-nodes: one holds when every
//! premise is proven. A `complete` contribution is a justification with no
//! premises. `True` is proven by fiat.

mod canon;
mod dot;
mod trees;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::data_layer::{
    ContentAddress, ContentStore, Contribution, ContributionKind, FileType, ParseError, Record,
    StatementId,
};
use crate::ledger::AccountId;

pub use canon::canonicalize;
pub use dot::export_dot;
pub use trees::{ProofTree, TreeError};

/// A justification is identified by the address of the contribution that
/// introduced it; each contribution yields at most one.
pub type JustificationId = ContentAddress;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Justification {
    pub id: JustificationId,
    pub record_id: String,
    pub target: StatementId,
    pub premises: BTreeSet<StatementId>,
    pub author: AccountId,
    /// Position in ingest order.
    pub seq: u64,
}

impl Justification {
    pub fn contribution(&self) -> ContentAddress {
        self.id
    }

    pub fn is_complete(&self) -> bool {
        self.premises.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Open,
    Proven,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatementInfo {
    /// Contribution that first mentioned the statement. `None` for `True`.
    pub introduced_by: Option<ContentAddress>,
    pub signature: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestedContribution {
    pub record_id: String,
    pub author: AccountId,
    pub kind: ContributionKind,
    pub imports: Vec<ContentAddress>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum InvalidReason {
    AddressMismatch,
    AlreadyIngested,
    UnresolvedImport(ContentAddress),
    CyclicImport,
    UnknownTarget(StatementId),
    TargetExists(StatementId),
    AxiomTarget,
    SelfSupport,
    InconsistentKind(String),
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::AddressMismatch => f.write_str("AddressMismatch"),
            InvalidReason::AlreadyIngested => f.write_str("AlreadyIngested"),
            InvalidReason::UnresolvedImport(a) => write!(f, "UnresolvedImport({})", a.short()),
            InvalidReason::CyclicImport => f.write_str("CyclicImport"),
            InvalidReason::UnknownTarget(s) => write!(f, "UnknownTarget({s})"),
            InvalidReason::TargetExists(s) => write!(f, "TargetExists({s})"),
            InvalidReason::AxiomTarget => f.write_str("AxiomTarget"),
            InvalidReason::SelfSupport => f.write_str("SelfSupport"),
            InvalidReason::InconsistentKind(why) => write!(f, "InconsistentKind({why})"),
        }
    }
}

/// Proof that a contribution passed validation against a particular
/// revision of the graph. Only [`ProofDag::validate`] creates these.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedContribution {
    record_id: String,
    author: AccountId,
    file: ContentAddress,
    contribution: Contribution,
    imports: Vec<ContentAddress>,
    revision: u64,
}

impl ValidatedContribution {
    pub fn contribution(&self) -> &Contribution {
        &self.contribution
    }

    pub fn imports(&self) -> &[ContentAddress] {
        &self.imports
    }

    pub fn author(&self) -> &AccountId {
        &self.author
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Valid(ValidatedContribution),
    Invalid(Vec<InvalidReason>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("unknown statement `{0}`")]
    UnknownStatement(StatementId),
    #[error("validation is stale: the graph changed since it was issued")]
    StaleValidation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub new_statements: Vec<StatementId>,
    pub newly_proven: Vec<StatementId>,
    /// Advisory: an existing statement with the same canonical signature.
    pub duplicate_of: Option<StatementId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofDag {
    statements: BTreeMap<StatementId, StatementInfo>,
    justifications: Vec<Justification>,
    proven: BTreeSet<StatementId>,
    signature_index: BTreeMap<String, StatementId>,
    contributions: BTreeMap<ContentAddress, IngestedContribution>,
    revision: u64,
}

impl Default for ProofDag {
    fn default() -> Self {
        Self::new()
    }
}

impl ProofDag {
    pub fn new() -> Self {
        let truth = StatementId::truth();
        let mut statements = BTreeMap::new();
        statements.insert(
            truth.clone(),
            StatementInfo {
                introduced_by: None,
                signature: None,
            },
        );
        ProofDag {
            statements,
            justifications: Vec::new(),
            proven: BTreeSet::from([truth]),
            signature_index: BTreeMap::new(),
            contributions: BTreeMap::new(),
            revision: 0,
        }
    }

    pub fn statements(&self) -> impl Iterator<Item = (&StatementId, &StatementInfo)> {
        self.statements.iter()
    }

    pub fn statement(&self, id: &StatementId) -> Option<&StatementInfo> {
        self.statements.get(id)
    }

    pub fn contains(&self, id: &StatementId) -> bool {
        self.statements.contains_key(id)
    }

    /// Justifications in ingest order.
    pub fn justifications(&self) -> &[Justification] {
        &self.justifications
    }

    pub fn justification(&self, id: &JustificationId) -> Option<&Justification> {
        self.justifications.iter().find(|j| j.id == *id)
    }

    pub fn justifications_for<'a>(
        &'a self,
        target: &'a StatementId,
    ) -> impl Iterator<Item = &'a Justification> + 'a {
        self.justifications
            .iter()
            .filter(move |j| j.target == *target)
    }

    pub fn contribution(&self, addr: &ContentAddress) -> Option<&IngestedContribution> {
        self.contributions.get(addr)
    }

    pub fn status(&self, id: &StatementId) -> Result<Status, DagError> {
        Ok(if self.is_proven(id)? {
            Status::Proven
        } else {
            Status::Open
        })
    }

    pub fn is_proven(&self, id: &StatementId) -> Result<bool, DagError> {
        if !self.statements.contains_key(id) {
            return Err(DagError::UnknownStatement(id.clone()));
        }
        Ok(self.proven.contains(id))
    }

    /// Structural validity of a contribution against the current graph.
    ///
    /// A parse failure is reported as `Err`; every structural problem found
    /// is collected into [`Validation::Invalid`].
    pub fn validate(
        &self,
        record: &Record,
        blob: &[u8],
        store: &ContentStore,
    ) -> Result<Validation, ParseError> {
        let contribution = Contribution::parse(blob)?;
        let mut reasons = BTreeSet::new();

        if ContentAddress::of(blob) != record.file {
            reasons.insert(InvalidReason::AddressMismatch);
        }
        if self.contributions.contains_key(&record.file) {
            reasons.insert(InvalidReason::AlreadyIngested);
        }

        let mut imports: Vec<ContentAddress> = Vec::new();
        for addr in record.imports.iter().chain(&contribution.imports) {
            if !imports.contains(addr) {
                imports.push(*addr);
            }
        }
        if self.import_cycle(record.file, &imports, store) {
            reasons.insert(InvalidReason::CyclicImport);
        }
        for addr in &imports {
            if *addr != record.file && !store.is_available(addr) {
                reasons.insert(InvalidReason::UnresolvedImport(*addr));
            }
        }

        let target = &contribution.target;
        let kind = contribution.kind;
        let proves_something = matches!(
            kind,
            ContributionKind::Conjecture | ContributionKind::Partial | ContributionKind::Complete
        );
        if proves_something && target.is_truth() {
            reasons.insert(InvalidReason::AxiomTarget);
        }
        match kind {
            ContributionKind::Conjecture if self.contains(target) && !target.is_truth() => {
                reasons.insert(InvalidReason::TargetExists(target.clone()));
            }
            ContributionKind::Partial | ContributionKind::Complete if !self.contains(target) => {
                reasons.insert(InvalidReason::UnknownTarget(target.clone()));
            }
            _ => {}
        }
        if contribution.premises.contains(target) {
            reasons.insert(InvalidReason::SelfSupport);
        }
        if let Some(why) = kind_mismatch(kind, record.filetype, contribution.premises.len()) {
            reasons.insert(InvalidReason::InconsistentKind(why));
        }

        if !reasons.is_empty() {
            return Ok(Validation::Invalid(reasons.into_iter().collect()));
        }
        Ok(Validation::Valid(ValidatedContribution {
            record_id: record.record_id.clone(),
            author: record.author.clone(),
            file: record.file,
            contribution,
            imports,
            revision: self.revision,
        }))
    }

    /// Adds a validated contribution and recomputes proven statuses.
    pub fn ingest(&mut self, valid: ValidatedContribution) -> Result<IngestReport, DagError> {
        if valid.revision != self.revision {
            return Err(DagError::StaleValidation);
        }
        let ValidatedContribution {
            record_id,
            author,
            file,
            contribution,
            imports,
            ..
        } = valid;
        let mut report = IngestReport::default();

        if let Some(sig) = &contribution.signature {
            report.duplicate_of = self
                .detect_duplicate(sig)
                .filter(|s| *s != contribution.target);
        }

        match contribution.kind {
            ContributionKind::Conjecture => {
                self.add_statement(&contribution.target, file, &mut report);
            }
            ContributionKind::Partial | ContributionKind::Complete => {
                for premise in &contribution.premises {
                    self.add_statement(premise, file, &mut report);
                }
                let seq = self.justifications.len() as u64;
                self.justifications.push(Justification {
                    id: file,
                    record_id: record_id.clone(),
                    target: contribution.target.clone(),
                    premises: contribution.premises.clone(),
                    author: author.clone(),
                    seq,
                });
            }
            ContributionKind::Tactic | ContributionKind::Definition => {}
        }

        if let Some(sig) = &contribution.signature {
            let is_statement = matches!(
                contribution.kind,
                ContributionKind::Conjecture
                    | ContributionKind::Partial
                    | ContributionKind::Complete
            );
            if is_statement {
                let info = self
                    .statements
                    .get_mut(&contribution.target)
                    .expect("target exists after ingest");
                if info.signature.is_none() {
                    info.signature = Some(sig.clone());
                }
                self.signature_index
                    .entry(canonicalize(sig))
                    .or_insert_with(|| contribution.target.clone());
            }
        }

        self.contributions.insert(
            file,
            IngestedContribution {
                record_id,
                author,
                kind: contribution.kind,
                imports,
            },
        );

        let before = self.proven.clone();
        self.proven = self.least_fixpoint();
        debug_assert!(before.is_subset(&self.proven), "proven set shrank");
        report.newly_proven = self.proven.difference(&before).cloned().collect();
        self.revision += 1;
        Ok(report)
    }

    /// Open statements still standing between `target` and `True`: the
    /// target itself and every open premise reachable through justifications
    /// of open statements. Empty when the target is proven.
    pub fn gap_frontier(&self, target: &StatementId) -> Result<Vec<StatementId>, DagError> {
        if self.is_proven(target)? {
            return Ok(Vec::new());
        }
        let mut seen = BTreeSet::from([target.clone()]);
        let mut queue = VecDeque::from([target.clone()]);
        while let Some(s) = queue.pop_front() {
            for j in self.justifications_for(&s) {
                for p in &j.premises {
                    if !self.proven.contains(p) && seen.insert(p.clone()) {
                        queue.push_back(p.clone());
                    }
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Statement whose recorded signature is alpha-equivalent to `signature`.
    pub fn detect_duplicate(&self, signature: &str) -> Option<StatementId> {
        self.signature_index.get(&canonicalize(signature)).cloned()
    }

    /// Forward chaining: each justification fires once all its premises are
    /// proven.
    fn least_fixpoint(&self) -> BTreeSet<StatementId> {
        let mut missing: Vec<usize> = self
            .justifications
            .iter()
            .map(|j| j.premises.len())
            .collect();
        let mut consumers: HashMap<&StatementId, Vec<usize>> = HashMap::new();
        for (idx, j) in self.justifications.iter().enumerate() {
            for p in &j.premises {
                consumers.entry(p).or_default().push(idx);
            }
        }
        let truth = StatementId::truth();
        let mut proven = BTreeSet::new();
        let mut agenda: Vec<&StatementId> = vec![&truth];
        agenda.extend(
            self.justifications
                .iter()
                .filter(|j| j.premises.is_empty())
                .map(|j| &j.target),
        );
        while let Some(s) = agenda.pop() {
            if !proven.insert(s.clone()) {
                continue;
            }
            for &idx in consumers.get(s).into_iter().flatten() {
                missing[idx] -= 1;
                if missing[idx] == 0 {
                    agenda.push(&self.justifications[idx].target);
                }
            }
        }
        proven
    }

    fn add_statement(&mut self, id: &StatementId, file: ContentAddress, report: &mut IngestReport) {
        if !self.statements.contains_key(id) {
            self.statements.insert(
                id.clone(),
                StatementInfo {
                    introduced_by: Some(file),
                    signature: None,
                },
            );
            report.new_statements.push(id.clone());
        }
    }

    /// True if adding `file` with the given imports would close a cycle in
    /// the import relation.
    fn import_cycle(
        &self,
        file: ContentAddress,
        imports: &[ContentAddress],
        store: &ContentStore,
    ) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<ContentAddress> = imports.to_vec();
        while let Some(addr) = stack.pop() {
            if addr == file {
                return true;
            }
            if !seen.insert(addr) {
                continue;
            }
            if let Some(c) = self.contributions.get(&addr) {
                stack.extend(c.imports.iter().copied());
            } else if let Ok(bytes) = store.get(&addr) {
                if let Ok(c) = Contribution::parse(bytes) {
                    stack.extend(c.imports);
                }
            }
        }
        false
    }
}

fn kind_mismatch(kind: ContributionKind, filetype: FileType, premises: usize) -> Option<String> {
    let filetype_ok = match kind {
        ContributionKind::Conjecture => filetype == FileType::Conjecture,
        ContributionKind::Partial => filetype == FileType::PartialProof,
        ContributionKind::Complete => {
            matches!(filetype, FileType::CompletedProof | FileType::Theorem)
        }
        ContributionKind::Tactic => filetype == FileType::Tactic,
        ContributionKind::Definition => filetype == FileType::Definition,
    };
    if !filetype_ok {
        return Some(format!("{} vs {}", kind.as_str(), filetype));
    }
    match kind {
        ContributionKind::Partial if premises == 0 => Some("partial without premises".into()),
        ContributionKind::Complete if premises > 0 => Some("complete with premises".into()),
        ContributionKind::Conjecture | ContributionKind::Tactic | ContributionKind::Definition
            if premises > 0 =>
        {
            Some(format!("{} with premises", kind.as_str()))
        }
        _ => None,
    }
}
