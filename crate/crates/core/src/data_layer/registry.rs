use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::store::ContentAddress;
use crate::ledger::{AccountId, TokenAmount};
use crate::Tick;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileType {
    Conjecture,
    PartialProof,
    CompletedProof,
    Theorem,
    Definition,
    Tactic,
}

impl FileType {
    pub fn as_str(self) -> &'static str {
        match self {
            FileType::Conjecture => "Conjecture",
            FileType::PartialProof => "PartialProof",
            FileType::CompletedProof => "CompletedProof",
            FileType::Theorem => "Theorem",
            FileType::Definition => "Definition",
            FileType::Tactic => "Tactic",
        }
    }
}

impl fmt::Display for FileType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FileType {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Conjecture" => FileType::Conjecture,
            "PartialProof" => FileType::PartialProof,
            "CompletedProof" => FileType::CompletedProof,
            "Theorem" => FileType::Theorem,
            "Definition" => FileType::Definition,
            "Tactic" => FileType::Tactic,
            other => {
                return Err(RegistryError::Malformed(format!(
                    "unknown filetype `{other}`"
                )))
            }
        })
    }
}

/// License attached to a contribution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum RightToUse {
    #[default]
    FreeToUse,
    RestrictedToUse,
    PayToUse {
        fee: TokenAmount,
        beneficiary: AccountId,
    },
}

impl fmt::Display for RightToUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RightToUse::FreeToUse => f.write_str("free"),
            RightToUse::RestrictedToUse => f.write_str("restricted"),
            RightToUse::PayToUse { fee, beneficiary } => write!(f, "pay:{fee}:{beneficiary}"),
        }
    }
}

impl FromStr for RightToUse {
    type Err = RegistryError;

    /// `free`, `restricted` or `pay:<fee>:<beneficiary>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(RightToUse::FreeToUse),
            "restricted" => Ok(RightToUse::RestrictedToUse),
            _ => {
                let bad = || RegistryError::Malformed(format!("bad right_to_use `{s}`"));
                let rest = s.strip_prefix("pay:").ok_or_else(bad)?;
                let (fee, who) = rest.split_once(':').ok_or_else(bad)?;
                let fee: TokenAmount = fee.parse().map_err(|_| bad())?;
                if fee == 0 {
                    return Err(RegistryError::Malformed(
                        "pay_to_use fee must be positive".into(),
                    ));
                }
                let beneficiary = AccountId::new(who).map_err(|_| bad())?;
                Ok(RightToUse::PayToUse { fee, beneficiary })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub record_id: String,
    pub author: AccountId,
    pub file: ContentAddress,
    pub coq_ver: String,
    pub filetype: FileType,
    pub imports: Vec<ContentAddress>,
    pub right_to_use: RightToUse,
    pub submitted_at: Tick,
}

impl Record {
    /// Builds a record from `key=value` metadata fields, as written in
    /// scenario files: `file`, `filetype` (required), `coq_ver`, `imports`
    /// (comma separated) and `right`.
    pub fn from_fields<'a, I>(
        record_id: &str,
        author: AccountId,
        submitted_at: Tick,
        fields: I,
    ) -> Result<Record, RegistryError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut file = None;
        let mut filetype = None;
        let mut coq_ver = String::from("8.12");
        let mut imports = Vec::new();
        let mut right = RightToUse::FreeToUse;
        for (key, value) in fields {
            match key {
                "file" => {
                    file = Some(
                        value
                            .parse::<ContentAddress>()
                            .map_err(|e| RegistryError::Malformed(e.to_string()))?,
                    )
                }
                "filetype" => filetype = Some(value.parse::<FileType>()?),
                "coq_ver" => coq_ver = value.to_string(),
                "imports" => {
                    imports = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.parse::<ContentAddress>()
                                .map_err(|e| RegistryError::Malformed(e.to_string()))
                        })
                        .collect::<Result<_, _>>()?
                }
                "right" => right = value.parse()?,
                other => {
                    return Err(RegistryError::Malformed(format!(
                        "unknown record field `{other}`"
                    )))
                }
            }
        }
        let record = Record {
            record_id: record_id.to_string(),
            author,
            file: file.ok_or_else(|| RegistryError::Malformed("missing field `file`".into()))?,
            coq_ver,
            filetype: filetype
                .ok_or_else(|| RegistryError::Malformed("missing field `filetype`".into()))?,
            imports,
            right_to_use: right,
            submitted_at,
        };
        record.check_well_formed()?;
        Ok(record)
    }

    fn check_well_formed(&self) -> Result<(), RegistryError> {
        if self.record_id.is_empty()
            || self
                .record_id
                .chars()
                .any(|c| c.is_whitespace() || c == '"')
        {
            return Err(RegistryError::Malformed(format!(
                "bad record id `{}`",
                self.record_id
            )));
        }
        if self.coq_ver.is_empty() {
            return Err(RegistryError::Malformed("empty coq_ver".into()));
        }
        if let RightToUse::PayToUse { fee: 0, .. } = self.right_to_use {
            return Err(RegistryError::Malformed(
                "pay_to_use fee must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordFilter {
    pub filetype: Option<FileType>,
    pub author: Option<AccountId>,
}

/// Append-only registry of records. It performs no semantic checks: invalid
/// or duplicate contributions are accepted and left to the client layer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    records: Vec<Record>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn submit(&mut self, record: Record) -> Result<String, RegistryError> {
        record.check_well_formed()?;
        if self.get(&record.record_id).is_some() {
            return Err(RegistryError::Malformed(format!(
                "record id `{}` already taken",
                record.record_id
            )));
        }
        let id = record.record_id.clone();
        self.records.push(record);
        Ok(id)
    }

    pub fn get(&self, record_id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.record_id == record_id)
    }

    /// Earliest record pointing at the given file.
    pub fn record_for_file(&self, file: &ContentAddress) -> Option<&Record> {
        self.list(&RecordFilter::default())
            .into_iter()
            .find(|r| r.file == *file)
    }

    /// Records ordered by submission tick, then insertion order.
    pub fn list(&self, filter: &RecordFilter) -> Vec<&Record> {
        let mut out: Vec<(usize, &Record)> = self
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| filter.filetype.is_none_or(|t| r.filetype == t))
            .filter(|(_, r)| filter.author.as_ref().is_none_or(|a| r.author == *a))
            .collect();
        out.sort_by_key(|(idx, r)| (r.submitted_at, *idx));
        out.into_iter().map(|(_, r)| r).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
