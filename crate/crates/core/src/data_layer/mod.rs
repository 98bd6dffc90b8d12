//! Content-addressed blob storage and the permissive on-chain registry.

mod contribution;
mod registry;
mod store;

pub use contribution::{Contribution, ContributionKind, ParseError, StatementId};
pub use registry::{FileType, Record, RecordFilter, Registry, RegistryError, RightToUse};
pub use store::{canonical_encoding, BadAddress, ContentAddress, ContentStore, StoreError};
