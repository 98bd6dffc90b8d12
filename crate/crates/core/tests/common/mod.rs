//! Independent reference implementations and builders shared by the
//! integration tests. Nothing here calls into the library's own fixpoint,
//! Shapley or rounding code.

#![allow(dead_code)]

pub mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use proofchain::data_layer::{ContentStore, FileType, Record, Registry, RightToUse, StatementId};
use proofchain::ledger::{AccountId, Ledger};
use proofchain::proof_dag::{ProofDag, Validation};
use proofchain::tcr::{Tcr, TcrParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn acct(id: &str) -> AccountId {
    AccountId::from(id)
}

pub fn stmt(id: &str) -> StatementId {
    StatementId::from(id)
}

/// A bare protocol state without the scenario engine on top.
pub struct Net {
    pub ledger: Ledger,
    pub store: ContentStore,
    pub registry: Registry,
    pub dag: ProofDag,
    pub tcr: Tcr,
    pub now: u64,
    counter: u64,
}

impl Net {
    pub fn new(accounts: &[(&str, u64)], params: TcrParams) -> Self {
        Net {
            ledger: Ledger::genesis(accounts.iter().map(|(a, n)| (acct(a), *n))).unwrap(),
            store: ContentStore::new(),
            registry: Registry::new(),
            dag: ProofDag::new(),
            tcr: Tcr::new(params).unwrap(),
            now: 0,
            counter: 0,
        }
    }

    /// Submits and ingests a contribution. `None` premises make a
    /// conjecture, an empty list a complete proof. Returns the record id.
    pub fn add(
        &mut self,
        author: &str,
        target: &str,
        premises: Option<&[String]>,
    ) -> Result<String, String> {
        self.counter += 1;
        let id = format!("r{}", self.counter);
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
        let record = Record {
            record_id: id.clone(),
            author: acct(author),
            file,
            coq_ver: "8.12".into(),
            filetype,
            imports: vec![],
            right_to_use: RightToUse::FreeToUse,
            submitted_at: self.now,
        };
        match self.dag.validate(&record, text.as_bytes(), &self.store) {
            Ok(Validation::Valid(v)) => {
                self.registry.submit(record).map_err(|e| e.to_string())?;
                self.dag.ingest(v).map_err(|e| e.to_string())?;
                Ok(id)
            }
            Ok(Validation::Invalid(r)) => Err(format!("{r:?}")),
            Err(e) => Err(e.to_string()),
        }
    }

    /// Sum of balances and escrows, computed without the ledger's own check.
    pub fn holdings(&self) -> u128 {
        let free: u128 = self.ledger.balances().map(|(_, n)| n as u128).sum();
        let locked: u128 = self.ledger.escrows().map(|(_, e)| e.amount as u128).sum();
        free + locked
    }
}

/// A random justification structure over statements `s0..s{n-1}`, with
/// `s0` the conjectured target.
#[derive(Clone, Debug)]
pub struct RandomDag {
    pub statements: usize,
    /// (target, premises) by statement index.
    pub justifications: Vec<(usize, Vec<usize>)>,
}

pub fn random_dag(
    rng: &mut impl Rng,
    max_statements: usize,
    max_justifications: usize,
) -> RandomDag {
    let statements = rng.gen_range(1..=max_statements);
    let count = rng.gen_range(1..=max_justifications);
    let mut known = vec![false; statements];
    known[0] = true;
    let mut justifications = Vec::new();
    for _ in 0..count {
        let candidates: Vec<usize> = (0..statements).filter(|&i| known[i]).collect();
        let target = candidates[rng.gen_range(0..candidates.len())];
        let arity = if rng.gen_bool(0.2) {
            0
        } else {
            rng.gen_range(1..=3)
        };
        let mut premises = BTreeSet::new();
        for _ in 0..arity {
            let p = rng.gen_range(0..statements);
            if p != target {
                premises.insert(p);
            }
        }
        for &p in &premises {
            known[p] = true;
        }
        justifications.push((target, premises.into_iter().collect()));
    }
    RandomDag {
        statements,
        justifications,
    }
}

impl RandomDag {
    pub fn name(i: usize) -> String {
        format!("s{i}")
    }

    /// Builds the graph through the public submission path.
    pub fn build(&self) -> Net {
        let mut net = Net::new(&[("C", 0)], TcrParams::default());
        net.add("C", "s0", None).unwrap();
        for (k, (t, ps)) in self.justifications.iter().enumerate() {
            let premises: Vec<String> = ps.iter().map(|&p| Self::name(p)).collect();
            net.add(&format!("J{k}"), &Self::name(*t), Some(&premises))
                .unwrap();
        }
        net
    }

    /// Statements mentioned anywhere.
    pub fn mentioned(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::from([0]);
        for (t, ps) in &self.justifications {
            out.insert(*t);
            out.extend(ps.iter().copied());
        }
        out
    }

    /// Least set closed under the justifications, found as the
    /// intersection of every closed subset of statements.
    pub fn brute_force_proven(&self, active: impl Fn(usize) -> bool) -> BTreeSet<usize> {
        let n = self.statements;
        let rules: Vec<(u32, u32)> = self
            .justifications
            .iter()
            .enumerate()
            .filter(|(k, _)| active(*k))
            .map(|(_, (t, ps))| (1u32 << t, ps.iter().fold(0u32, |m, p| m | 1 << p)))
            .collect();
        let mut least = (1u32 << n) - 1;
        for set in 0..1u32 << n {
            let closed = rules.iter().all(|&(t, ps)| ps & set != ps || t & set != 0);
            if closed {
                least &= set;
            }
        }
        (0..n).filter(|i| least & (1 << i) != 0).collect()
    }
}

/// Shapley numerators over `n!` by averaging marginal contributions over
/// every ordering of the players.
pub fn shapley_by_permutations(n: usize, v: &dyn Fn(u32) -> bool) -> Vec<i128> {
    let mut phi = vec![0i128; n];
    let mut order: Vec<usize> = (0..n).collect();
    permute(&mut order, 0, &mut |perm| {
        let mut coalition = 0u32;
        for &p in perm {
            let before = v(coalition) as i128;
            coalition |= 1 << p;
            phi[p] += v(coalition) as i128 - before;
        }
    });
    phi
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Hamilton apportionment: floors first, then one unit each to the largest
/// remainders, earlier index winning ties.
pub fn apportion(amount: u64, weights: &[i128]) -> Vec<u64> {
    let total: i128 = weights.iter().sum();
    let amount = amount as i128;
    let mut shares: Vec<u64> = weights
        .iter()
        .map(|w| (amount * w / total) as u64)
        .collect();
    let mut rems: Vec<(i128, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| (amount * w % total, i))
        .collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let left = amount as u64 - shares.iter().sum::<u64>();
    for &(_, i) in rems.iter().take(left as usize) {
        shares[i] += 1;
    }
    shares
}

/// Random monotone simple game: a coalition wins if it contains one of a
/// few random minimal coalitions. Players outside all of them are dummies.
pub fn random_monotone_game(rng: &mut impl Rng, n: usize) -> Vec<u32> {
    let relevant: u32 = loop {
        let m = rng.gen_range(1..1u32 << n);
        if rng.gen_bool(0.5) || m == (1 << n) - 1 {
            break m;
        }
    };
    let count = rng.gen_range(1..=4);
    let mut minimal = Vec::new();
    while minimal.len() < count {
        let m = rng.gen_range(1..1u32 << n) & relevant;
        if m != 0 {
            minimal.push(m);
        }
    }
    minimal
}

pub fn wins(minimal: &[u32], coalition: u32) -> bool {
    minimal.iter().any(|m| m & coalition == *m)
}

/// Cumulative payout of a halving series with base `r` after `k` proofs,
/// computed by repeated halving.
pub fn halving_sum(r: u64, k: usize) -> u64 {
    let mut pay = r;
    let mut total = 0;
    for _ in 0..k {
        total += pay;
        pay /= 2;
    }
    total
}

/// Splits `amount` equally, the first `amount % k` parties getting one more.
pub fn equal_shares(amount: u64, k: usize) -> Vec<u64> {
    (0..k as u64)
        .map(|i| amount / k as u64 + u64::from(i < amount % k as u64))
        .collect()
}

pub fn balances(ledger: &Ledger) -> BTreeMap<String, u64> {
    ledger
        .balances()
        .map(|(a, n)| (a.as_str().to_string(), n))
        .collect()
}
