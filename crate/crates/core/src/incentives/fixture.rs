//! Small graphs for mechanism tests.

use crate::data_layer::{ContentStore, FileType, Record, Registry, RightToUse, StatementId};
use crate::ledger::{AccountId, Ledger};
use crate::proof_dag::{ProofDag, Validation};

pub struct World {
    pub ledger: Ledger,
    pub dag: ProofDag,
    pub store: ContentStore,
    pub registry: Registry,
    tick: u64,
}

impl World {
    pub fn new(accounts: &[(&str, u64)]) -> Self {
        World {
            ledger: Ledger::genesis(accounts.iter().map(|(a, n)| (AccountId::from(*a), *n)))
                .unwrap(),
            dag: ProofDag::new(),
            store: ContentStore::new(),
            registry: Registry::new(),
            tick: 0,
        }
    }

    /// Ingests a contribution: `premises` empty means a complete proof, and
    /// `None` a conjecture.
    pub fn add(&mut self, id: &str, author: &str, target: &str, premises: Option<&[&str]>) {
        let (kind, filetype) = match premises {
            None => ("conjecture", FileType::Conjecture),
            Some([]) => ("complete", FileType::CompletedProof),
            Some(_) => ("partial", FileType::PartialProof),
        };
        let mut text = format!("target: {target}\nkind: {kind}\n# {id}\n");
        if let Some(ps) = premises.filter(|p| !p.is_empty()) {
            text.push_str(&format!("premises: {}\n", ps.join(", ")));
        }
        let file = self.store.put(text.as_bytes());
        self.tick += 1;
        let record = Record {
            record_id: id.into(),
            author: AccountId::from(author),
            file,
            coq_ver: "8.12".into(),
            filetype,
            imports: vec![],
            right_to_use: RightToUse::FreeToUse,
            submitted_at: self.tick,
        };
        self.registry.submit(record.clone()).unwrap();
        match self
            .dag
            .validate(&record, text.as_bytes(), &self.store)
            .unwrap()
        {
            Validation::Valid(v) => {
                self.dag.ingest(v).unwrap();
            }
            Validation::Invalid(r) => panic!("{id} invalid: {r:?}"),
        }
    }

    pub fn addr(&self, id: &str) -> crate::data_layer::ContentAddress {
        self.registry.get(id).unwrap().file
    }

    pub fn balance(&self, account: &str) -> u64 {
        self.ledger.balance(&AccountId::from(account)).unwrap()
    }
}

pub fn s(id: &str) -> StatementId {
    StatementId::from(id)
}

pub fn a(id: &str) -> AccountId {
    AccountId::from(id)
}
