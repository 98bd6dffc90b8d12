use std::collections::BTreeSet;
use std::fmt;

use crate::data_layer::{ContentAddress, Registry, RightToUse};
use crate::ledger::{AccountId, Ledger, LedgerError, TokenAmount};
use crate::tcr::Tcr;
use crate::Tick;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DenyReason {
    Restricted,
    /// Licensed content must come from a canonical record.
    NotListed(String),
    Unpaid {
        fee: TokenAmount,
        available: TokenAmount,
    },
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenyReason::Restricted => f.write_str("restricted"),
            DenyReason::NotListed(r) => write!(f, "record `{r}` not listed"),
            DenyReason::Unpaid { fee, available } => {
                write!(f, "unpaid (fee {fee}, balance {available})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LicenseOutcome {
    Allowed,
    Denied(DenyReason),
    Charged(TokenAmount),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LicenseCharge {
    pub contribution: ContentAddress,
    pub record_id: String,
    pub importer: AccountId,
    pub beneficiary: AccountId,
    pub fee: TokenAmount,
    pub at: Tick,
}

/// Who has paid for what. A pay-to-use fee is charged at most once per
/// importer and contribution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LicenseState {
    paid: BTreeSet<(ContentAddress, AccountId)>,
    charges: Vec<LicenseCharge>,
}

enum Plan {
    Free,
    Paid,
    Charge(String, TokenAmount, AccountId),
}

impl LicenseState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charges(&self) -> &[LicenseCharge] {
        &self.charges
    }

    pub fn has_paid(&self, contribution: &ContentAddress, importer: &AccountId) -> bool {
        self.paid.contains(&(*contribution, importer.clone()))
    }

    fn plan(
        &self,
        registry: &Registry,
        tcr: &Tcr,
        now: Tick,
        importer: &AccountId,
        contribution: &ContentAddress,
    ) -> Result<Plan, DenyReason> {
        // Content with no record carries no license terms.
        let Some(record) = registry.record_for_file(contribution) else {
            return Ok(Plan::Free);
        };
        match &record.right_to_use {
            RightToUse::FreeToUse => Ok(Plan::Free),
            _ if !tcr.is_canonical(&record.record_id, now) => {
                Err(DenyReason::NotListed(record.record_id.clone()))
            }
            RightToUse::RestrictedToUse => Err(DenyReason::Restricted),
            RightToUse::PayToUse { .. } if self.has_paid(contribution, importer) => Ok(Plan::Paid),
            RightToUse::PayToUse { fee, beneficiary } => Ok(Plan::Charge(
                record.record_id.clone(),
                *fee,
                beneficiary.clone(),
            )),
        }
    }

    /// Checks one import and charges its fee if due.
    pub fn check_and_charge(
        &mut self,
        ledger: &mut Ledger,
        registry: &Registry,
        tcr: &Tcr,
        now: Tick,
        importer: &AccountId,
        contribution: &ContentAddress,
    ) -> Result<LicenseOutcome, LedgerError> {
        let out = self.check_imports(
            ledger,
            registry,
            tcr,
            now,
            importer,
            std::slice::from_ref(contribution),
        )?;
        Ok(out.into_iter().next().expect("one import"))
    }

    /// Checks every import first; fees are charged only if none is denied.
    /// On denial the returned list holds the first denial only.
    pub fn check_imports(
        &mut self,
        ledger: &mut Ledger,
        registry: &Registry,
        tcr: &Tcr,
        now: Tick,
        importer: &AccountId,
        imports: &[ContentAddress],
    ) -> Result<Vec<LicenseOutcome>, LedgerError> {
        let mut plans = Vec::new();
        let mut due: TokenAmount = 0;
        let mut seen = BTreeSet::new();
        for addr in imports {
            let plan = match self.plan(registry, tcr, now, importer, addr) {
                Ok(p) => p,
                Err(reason) => return Ok(vec![LicenseOutcome::Denied(reason)]),
            };
            if let Plan::Charge(_, fee, beneficiary) = &plan {
                if !seen.insert(*addr) {
                    plans.push((addr, Plan::Paid));
                    continue;
                }
                if beneficiary != importer {
                    due = due.checked_add(*fee).ok_or(LedgerError::Overflow)?;
                }
            }
            plans.push((addr, plan));
        }
        let available = ledger.balance(importer)?;
        if available < due {
            return Ok(vec![LicenseOutcome::Denied(DenyReason::Unpaid {
                fee: due,
                available,
            })]);
        }
        let mut out = Vec::new();
        for (addr, plan) in plans {
            out.push(match plan {
                Plan::Free | Plan::Paid => LicenseOutcome::Allowed,
                Plan::Charge(record_id, fee, beneficiary) => {
                    if beneficiary != *importer {
                        ledger.transfer(importer, &beneficiary, fee)?;
                    }
                    self.paid.insert((*addr, importer.clone()));
                    self.charges.push(LicenseCharge {
                        contribution: *addr,
                        record_id,
                        importer: importer.clone(),
                        beneficiary,
                        fee,
                        at: now,
                    });
                    LicenseOutcome::Charged(fee)
                }
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_layer::{FileType, Record};
    use crate::tcr::TcrParams;

    struct Env {
        ledger: Ledger,
        registry: Registry,
        tcr: Tcr,
        lic: LicenseState,
    }

    fn a(s: &str) -> AccountId {
        AccountId::from(s)
    }

    fn env() -> Env {
        let ledger = Ledger::genesis([(a("T"), 0), (a("U"), 12), (a("V"), 3)]).unwrap();
        let mut registry = Registry::new();
        let mut tcr = Tcr::new(TcrParams::default()).unwrap();
        for (id, right) in [
            ("free", RightToUse::FreeToUse),
            (
                "pay",
                RightToUse::PayToUse {
                    fee: 5,
                    beneficiary: a("T"),
                },
            ),
            (
                "pay2",
                RightToUse::PayToUse {
                    fee: 5,
                    beneficiary: a("T"),
                },
            ),
            ("restricted", RightToUse::RestrictedToUse),
            (
                "unlisted",
                RightToUse::PayToUse {
                    fee: 5,
                    beneficiary: a("T"),
                },
            ),
        ] {
            registry
                .submit(Record {
                    record_id: id.into(),
                    author: a("T"),
                    file: ContentAddress::of(id.as_bytes()),
                    coq_ver: "8.12".into(),
                    filetype: FileType::Tactic,
                    imports: vec![],
                    right_to_use: right,
                    submitted_at: 0,
                })
                .unwrap();
            if id != "unlisted" {
                tcr.prelist(&registry, id, &a("T"), 0).unwrap();
            }
        }
        Env {
            ledger,
            registry,
            tcr,
            lic: LicenseState::new(),
        }
    }

    impl Env {
        fn check(&mut self, importer: &str, ids: &[&str]) -> Vec<LicenseOutcome> {
            let addrs: Vec<_> = ids
                .iter()
                .map(|i| ContentAddress::of(i.as_bytes()))
                .collect();
            self.lic
                .check_imports(
                    &mut self.ledger,
                    &self.registry,
                    &self.tcr,
                    1,
                    &a(importer),
                    &addrs,
                )
                .unwrap()
        }
    }

    #[test]
    fn pay_once_per_importer() {
        let mut e = env();
        assert_eq!(e.check("U", &["pay"]), [LicenseOutcome::Charged(5)]);
        assert_eq!(e.ledger.balance(&a("U")).unwrap(), 7);
        assert_eq!(e.ledger.balance(&a("T")).unwrap(), 5);
        assert_eq!(e.check("U", &["pay"]), [LicenseOutcome::Allowed]);
        assert_eq!(e.ledger.balance(&a("U")).unwrap(), 7);
        assert_eq!(e.lic.charges().len(), 1);
    }

    #[test]
    fn author_importing_own_work_pays_itself() {
        let mut e = env();
        assert_eq!(e.check("T", &["pay"]), [LicenseOutcome::Charged(5)]);
        assert_eq!(e.ledger.balance(&a("T")).unwrap(), 0);
    }

    #[test]
    fn denials() {
        let mut e = env();
        assert_eq!(e.check("U", &["free"]), [LicenseOutcome::Allowed]);
        assert_eq!(
            e.check("U", &["never-registered"]),
            [LicenseOutcome::Allowed]
        );
        assert_eq!(
            e.check("U", &["restricted"]),
            [LicenseOutcome::Denied(DenyReason::Restricted)]
        );
        assert_eq!(
            e.check("U", &["unlisted"]),
            [LicenseOutcome::Denied(DenyReason::NotListed(
                "unlisted".into()
            ))]
        );
        assert_eq!(
            e.check("V", &["pay"]),
            [LicenseOutcome::Denied(DenyReason::Unpaid {
                fee: 5,
                available: 3
            })]
        );
    }

    #[test]
    fn batch_is_all_or_nothing() {
        let mut e = env();
        assert_eq!(
            e.check("U", &["pay", "restricted"]),
            [LicenseOutcome::Denied(DenyReason::Restricted)]
        );
        assert_eq!(e.ledger.balance(&a("U")).unwrap(), 12);
        // 10 due against 12 available, then 5 more against 2.
        assert_eq!(e.check("U", &["pay", "pay2", "pay"]).len(), 3);
        assert_eq!(e.ledger.balance(&a("U")).unwrap(), 2);
        assert!(matches!(
            e.check("V", &["pay", "pay2"])[0],
            LicenseOutcome::Denied(DenyReason::Unpaid { fee: 10, .. })
        ));
        assert_eq!(e.ledger.balance(&a("V")).unwrap(), 3);
    }
}
