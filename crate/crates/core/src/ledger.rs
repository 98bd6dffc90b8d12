//! Token accounting: balances, transfers and escrows.
//!
//! Every token created at genesis is, at all times, either in exactly one
//! account balance or in exactly one live escrow. No operation other than
//! [`Ledger::genesis`] changes the total supply.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Indivisible token units.
pub type TokenAmount = u64;

/// Opaque account identifier. Accounts are created at genesis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId(String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Result<Self, LedgerError> {
        let id = id.into();
        if id.is_empty() {
            return Err(LedgerError::EmptyAccountId);
        }
        Ok(AccountId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    /// Panics on the empty string. Use [`AccountId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        AccountId::new(s).expect("account id must be non-empty")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EscrowId(String);

impl EscrowId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EscrowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Escrow {
    /// The account whose tokens were locked.
    pub owner: AccountId,
    /// Free-form description of what the escrow backs (a bond, a stake, a prize).
    pub context: String,
    pub amount: TokenAmount,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("account id must be non-empty")]
    EmptyAccountId,
    #[error("duplicate account `{0}` in genesis allocation")]
    DuplicateAccount(AccountId),
    #[error("unknown account `{0}`")]
    UnknownAccount(AccountId),
    #[error("insufficient balance: `{account}` holds {available}, needs {required}")]
    InsufficientBalance {
        account: AccountId,
        available: TokenAmount,
        required: TokenAmount,
    },
    #[error("unknown escrow `{0}`")]
    UnknownEscrow(EscrowId),
    #[error("payouts sum to {paid} but escrow holds {held}")]
    PayoutMismatch {
        held: TokenAmount,
        paid: TokenAmount,
    },
    #[error("token supply overflow")]
    Overflow,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("conservation violated: balances {balances} + escrows {escrowed} != supply {supply}")]
pub struct ConservationViolation {
    pub balances: u128,
    pub escrowed: u128,
    pub supply: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    balances: BTreeMap<AccountId, TokenAmount>,
    escrows: BTreeMap<EscrowId, Escrow>,
    total_supply: TokenAmount,
    next_escrow: u64,
}

impl Ledger {
    /// Creates the ledger with its entire token supply. This is the only
    /// supply-creating operation.
    pub fn genesis<I>(allocations: I) -> Result<Self, LedgerError>
    where
        I: IntoIterator<Item = (AccountId, TokenAmount)>,
    {
        let mut balances = BTreeMap::new();
        let mut total: TokenAmount = 0;
        for (account, amount) in allocations {
            if balances.contains_key(&account) {
                return Err(LedgerError::DuplicateAccount(account));
            }
            total = total.checked_add(amount).ok_or(LedgerError::Overflow)?;
            balances.insert(account, amount);
        }
        Ok(Ledger {
            balances,
            escrows: BTreeMap::new(),
            total_supply: total,
            next_escrow: 0,
        })
    }

    pub fn total_supply(&self) -> TokenAmount {
        self.total_supply
    }

    pub fn balance(&self, account: &AccountId) -> Result<TokenAmount, LedgerError> {
        self.balances
            .get(account)
            .copied()
            .ok_or_else(|| LedgerError::UnknownAccount(account.clone()))
    }

    pub fn has_account(&self, account: &AccountId) -> bool {
        self.balances.contains_key(account)
    }

    pub fn balances(&self) -> impl Iterator<Item = (&AccountId, TokenAmount)> {
        self.balances.iter().map(|(a, b)| (a, *b))
    }

    pub fn escrows(&self) -> impl Iterator<Item = (&EscrowId, &Escrow)> {
        self.escrows.iter()
    }

    pub fn escrow(&self, id: &EscrowId) -> Result<&Escrow, LedgerError> {
        self.escrows
            .get(id)
            .ok_or_else(|| LedgerError::UnknownEscrow(id.clone()))
    }

    pub fn escrowed_total(&self) -> u128 {
        self.escrows.values().map(|e| e.amount as u128).sum()
    }

    pub fn transfer(
        &mut self,
        from: &AccountId,
        to: &AccountId,
        amount: TokenAmount,
    ) -> Result<(), LedgerError> {
        self.require_funds(from, amount)?;
        if !self.balances.contains_key(to) {
            return Err(LedgerError::UnknownAccount(to.clone()));
        }
        if from == to {
            return Ok(());
        }
        *self.balances.get_mut(from).expect("checked") -= amount;
        *self.balances.get_mut(to).expect("checked") += amount;
        Ok(())
    }

    /// Moves `amount` from the account into a fresh escrow.
    pub fn escrow_lock(
        &mut self,
        from: &AccountId,
        amount: TokenAmount,
        context: impl Into<String>,
    ) -> Result<EscrowId, LedgerError> {
        self.require_funds(from, amount)?;
        *self.balances.get_mut(from).expect("checked") -= amount;
        let id = self.fresh_escrow_id();
        self.escrows.insert(
            id.clone(),
            Escrow {
                owner: from.clone(),
                context: context.into(),
                amount,
            },
        );
        Ok(id)
    }

    /// Carves `amount` out of a live escrow into a new one with the same owner.
    pub fn escrow_split(
        &mut self,
        escrow: &EscrowId,
        amount: TokenAmount,
        context: impl Into<String>,
    ) -> Result<EscrowId, LedgerError> {
        let source = self
            .escrows
            .get(escrow)
            .ok_or_else(|| LedgerError::UnknownEscrow(escrow.clone()))?;
        if source.amount < amount {
            return Err(LedgerError::PayoutMismatch {
                held: source.amount,
                paid: amount,
            });
        }
        let owner = source.owner.clone();
        self.escrows.get_mut(escrow).expect("checked").amount -= amount;
        let id = self.fresh_escrow_id();
        self.escrows.insert(
            id.clone(),
            Escrow {
                owner,
                context: context.into(),
                amount,
            },
        );
        Ok(id)
    }

    /// Closes an escrow, crediting each payee. The payouts must sum to the
    /// escrowed amount exactly; on any error the ledger is left untouched.
    pub fn escrow_release(
        &mut self,
        escrow: &EscrowId,
        payouts: &[(AccountId, TokenAmount)],
    ) -> Result<(), LedgerError> {
        let held = self
            .escrows
            .get(escrow)
            .ok_or_else(|| LedgerError::UnknownEscrow(escrow.clone()))?
            .amount;
        let mut paid: TokenAmount = 0;
        for (account, amount) in payouts {
            if !self.balances.contains_key(account) {
                return Err(LedgerError::UnknownAccount(account.clone()));
            }
            paid = paid.checked_add(*amount).ok_or(LedgerError::Overflow)?;
        }
        if paid != held {
            return Err(LedgerError::PayoutMismatch { held, paid });
        }
        self.escrows.remove(escrow);
        for (account, amount) in payouts {
            *self.balances.get_mut(account).expect("checked") += amount;
        }
        Ok(())
    }

    /// Returns the escrow in full to the account that locked it.
    pub fn escrow_refund(&mut self, escrow: &EscrowId) -> Result<TokenAmount, LedgerError> {
        let e = self.escrow(escrow)?;
        let (owner, amount) = (e.owner.clone(), e.amount);
        self.escrow_release(escrow, &[(owner, amount)])?;
        Ok(amount)
    }

    pub fn check_conservation(&self) -> Result<(), ConservationViolation> {
        let balances: u128 = self.balances.values().map(|b| *b as u128).sum();
        let escrowed = self.escrowed_total();
        let supply = self.total_supply as u128;
        if balances + escrowed == supply {
            Ok(())
        } else {
            Err(ConservationViolation {
                balances,
                escrowed,
                supply,
            })
        }
    }

    pub fn accounts(&self) -> BTreeSet<AccountId> {
        self.balances.keys().cloned().collect()
    }

    /// Credits tokens out of thin air. Only compiled for fault-injection
    /// builds, where it is used to prove the conservation check fires.
    #[cfg(feature = "fault-injection")]
    pub fn inject_mint_fault(&mut self, account: &AccountId, amount: TokenAmount) {
        *self.balances.entry(account.clone()).or_insert(0) += amount;
    }

    fn require_funds(&self, account: &AccountId, amount: TokenAmount) -> Result<(), LedgerError> {
        let available = self.balance(account)?;
        if available < amount {
            return Err(LedgerError::InsufficientBalance {
                account: account.clone(),
                available,
                required: amount,
            });
        }
        Ok(())
    }

    fn fresh_escrow_id(&mut self) -> EscrowId {
        self.next_escrow += 1;
        EscrowId(format!("esc-{:05}", self.next_escrow))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acct(s: &str) -> AccountId {
        AccountId::from(s)
    }

    fn ledger(allocs: &[(&str, TokenAmount)]) -> Ledger {
        Ledger::genesis(allocs.iter().map(|(a, n)| (acct(a), *n))).unwrap()
    }

    #[test]
    fn genesis_sums_allocations() {
        assert_eq!(ledger(&[("A", 100), ("B", 50)]).total_supply(), 150);
        let empty = ledger(&[]);
        assert_eq!(empty.total_supply(), 0);
        assert_eq!(empty.balances().count(), 0);
    }

    #[test]
    fn genesis_rejects_duplicates() {
        let err = Ledger::genesis(vec![(acct("A"), 100), (acct("A"), 1)]).unwrap_err();
        assert_eq!(err, LedgerError::DuplicateAccount(acct("A")));
    }

    #[test]
    fn transfer_moves_tokens() {
        let mut l = ledger(&[("A", 100), ("B", 0)]);
        l.transfer(&acct("A"), &acct("B"), 40).unwrap();
        assert_eq!(l.balance(&acct("A")).unwrap(), 60);
        assert_eq!(l.balance(&acct("B")).unwrap(), 40);

        l.transfer(&acct("A"), &acct("A"), 10).unwrap();
        assert_eq!(l.balance(&acct("A")).unwrap(), 60);
    }

    #[test]
    fn transfer_errors() {
        let mut l = ledger(&[("A", 5), ("B", 0)]);
        assert!(matches!(
            l.transfer(&acct("A"), &acct("B"), 6),
            Err(LedgerError::InsufficientBalance { .. })
        ));
        assert_eq!(
            l.transfer(&acct("A"), &acct("Z"), 1),
            Err(LedgerError::UnknownAccount(acct("Z")))
        );
        assert_eq!(
            l.transfer(&acct("Z"), &acct("A"), 0),
            Err(LedgerError::UnknownAccount(acct("Z")))
        );
    }

    #[test]
    fn escrow_lock_and_release() {
        let mut l = ledger(&[("A", 100), ("X", 0), ("Y", 0)]);
        let e = l.escrow_lock(&acct("A"), 30, "stake").unwrap();
        assert_eq!(l.balance(&acct("A")).unwrap(), 70);
        assert_eq!(l.escrow(&e).unwrap().amount, 30);
        l.check_conservation().unwrap();

        let zero = l.escrow_lock(&acct("A"), 0, "zero").unwrap();
        assert_eq!(l.escrow(&zero).unwrap().amount, 0);

        assert!(matches!(
            l.escrow_lock(&acct("A"), 71, "too much"),
            Err(LedgerError::InsufficientBalance { .. })
        ));

        let big = l.escrow_lock(&acct("A"), 70, "prize").unwrap();
        let before = l.clone();
        assert_eq!(
            l.escrow_release(&big, &[(acct("X"), 69)]),
            Err(LedgerError::PayoutMismatch { held: 70, paid: 69 })
        );
        assert_eq!(l, before, "failed release must not mutate");

        l.escrow_release(&big, &[(acct("X"), 40), (acct("Y"), 30)])
            .unwrap();
        assert_eq!(l.balance(&acct("X")).unwrap(), 40);
        assert_eq!(l.balance(&acct("Y")).unwrap(), 30);
        assert!(l.escrow(&big).is_err());
        assert_eq!(
            l.escrow_release(&big, &[]),
            Err(LedgerError::UnknownEscrow(big.clone()))
        );

        l.escrow_release(&e, &[(acct("X"), 30)]).unwrap();
        assert_eq!(l.balance(&acct("X")).unwrap(), 70);
        l.check_conservation().unwrap();
    }

    #[test]
    fn escrow_split_preserves_total() {
        let mut l = ledger(&[("A", 128)]);
        let pot = l.escrow_lock(&acct("A"), 128, "series").unwrap();
        let part = l.escrow_split(&pot, 64, "award").unwrap();
        assert_eq!(l.escrow(&pot).unwrap().amount, 64);
        assert_eq!(l.escrow(&part).unwrap().amount, 64);
        assert!(l.escrow_split(&pot, 65, "x").is_err());
        l.check_conservation().unwrap();
        assert_eq!(l.escrow_refund(&pot).unwrap(), 64);
        assert_eq!(l.balance(&acct("A")).unwrap(), 64);
    }
}
