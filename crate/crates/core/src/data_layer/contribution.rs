//! The declarative contribution text format.
//!
//! One `key: value` declaration per line:
//!
//! ```text
//! target: sort_prog
//! kind: partial
//! premises: sort_base, sort_prog_IH
//! signature: forall (l : list nat), {l' : list nat | sorted l' /\ permutation l' l}
//! imports: 5f1c...e0, 77ab...12
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::store::ContentAddress;

/// Name of a statement in the proof graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId(String);

impl StatementId {
    /// The trivial theorem every proof bottoms out in.
    pub const TRUE: &'static str = "True";

    pub fn new(id: impl Into<String>) -> Result<Self, ParseError> {
        let id = id.into();
        if id.is_empty()
            || id
                .chars()
                .any(|c| c.is_whitespace() || c == ',' || c == '"')
        {
            return Err(ParseError::BadStatementId(id));
        }
        Ok(StatementId(id))
    }

    pub fn truth() -> Self {
        StatementId(Self::TRUE.to_string())
    }

    pub fn is_truth(&self) -> bool {
        self.0 == Self::TRUE
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StatementId {
    fn from(s: &str) -> Self {
        StatementId::new(s).expect("valid statement id")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContributionKind {
    Conjecture,
    Partial,
    Complete,
    Tactic,
    Definition,
}

impl ContributionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContributionKind::Conjecture => "conjecture",
            ContributionKind::Partial => "partial",
            ContributionKind::Complete => "complete",
            ContributionKind::Tactic => "tactic",
            ContributionKind::Definition => "definition",
        }
    }
}

impl FromStr for ContributionKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "conjecture" => ContributionKind::Conjecture,
            "partial" => ContributionKind::Partial,
            "complete" => ContributionKind::Complete,
            "tactic" => ContributionKind::Tactic,
            "definition" => ContributionKind::Definition,
            other => return Err(ParseError::UnknownKind(other.to_string())),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("blob is not valid UTF-8")]
    NotUtf8,
    #[error("line {0}: expected `key: value`")]
    MalformedLine(usize),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("unknown contribution kind `{0}`")]
    UnknownKind(String),
    #[error("invalid statement id `{0}`")]
    BadStatementId(String),
    #[error("invalid import address `{0}`")]
    BadImport(String),
}

/// A parsed contribution blob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contribution {
    pub target: StatementId,
    pub kind: ContributionKind,
    pub premises: BTreeSet<StatementId>,
    pub signature: Option<String>,
    pub imports: Vec<ContentAddress>,
}

impl Contribution {
    pub fn parse(blob: &[u8]) -> Result<Self, ParseError> {
        let text = std::str::from_utf8(blob).map_err(|_| ParseError::NotUtf8)?;
        let mut target = None;
        let mut kind = None;
        let mut premises = None;
        let mut signature = None;
        let mut imports = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or(ParseError::MalformedLine(line_no))?;
            let (key, value) = (key.trim(), value.trim());
            let slot_taken = match key {
                "target" => target.replace(value).is_some(),
                "kind" => kind.replace(value).is_some(),
                "premises" => premises.replace(value).is_some(),
                "signature" => signature.replace(value).is_some(),
                "imports" => imports.replace(value).is_some(),
                _ => {
                    return Err(ParseError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            };
            if slot_taken {
                return Err(ParseError::DuplicateKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
        }

        let target = StatementId::new(target.ok_or(ParseError::MissingKey("target"))?)?;
        let kind = kind.ok_or(ParseError::MissingKey("kind"))?.parse()?;
        let premises = split_list(premises.unwrap_or(""))
            .map(StatementId::new)
            .collect::<Result<_, _>>()?;
        let imports = split_list(imports.unwrap_or(""))
            .map(|s| s.parse().map_err(|_| ParseError::BadImport(s.to_string())))
            .collect::<Result<_, _>>()?;
        let signature = signature.filter(|s| !s.is_empty()).map(str::to_string);

        Ok(Contribution {
            target,
            kind,
            premises,
            signature,
            imports,
        })
    }

    /// Renders the contribution in the blob text format. `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        let mut out = format!("target: {}\nkind: {}\n", self.target, self.kind.as_str());
        if !self.premises.is_empty() {
            let list: Vec<_> = self.premises.iter().map(|p| p.as_str()).collect();
            out.push_str(&format!("premises: {}\n", list.join(", ")));
        }
        if let Some(sig) = &self.signature {
            out.push_str(&format!("signature: {sig}\n"));
        }
        if !self.imports.is_empty() {
            let list: Vec<_> = self.imports.iter().map(|a| a.to_hex()).collect();
            out.push_str(&format!("imports: {}\n", list.join(", ")));
        }
        out
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}
