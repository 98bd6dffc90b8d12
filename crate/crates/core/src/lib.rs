//! Deterministic simulator of a blockchain protocol for collaborative
//! formal proofs.
//!
//! Contributions are stored by content address and registered without
//! checks ([`data_layer`]); clients validate them into an AND-OR graph of
//! statements ([`proof_dag`]); a token-curated registry decides which records
//! are canonical ([`tcr`]); incentive contracts pay out for completed proofs
//! ([`incentives`]). Everything settles in one token [`ledger`], and the
//! [`simulation`] engine replays scripted scenarios against it.

pub mod data_layer;
pub mod incentives;
pub mod ledger;
pub mod proof_dag;
pub mod report;
pub mod simulation;
pub mod split;
pub mod tcr;

/// Logical simulation time.
pub type Tick = u64;
