//! Privacy-preserving vaccination registry backed by an embedded
//! proof-of-work ledger.
//!
//! Citizens are known only by pseudonymous identifiers derived at
//! registration. Every registration and every administered dose is mirrored
//! as a signed ledger transaction carrying the SHA-256 of the database row,
//! so an auditing agency can check the database against the chain without
//! seeing personal identifiers.

pub mod audit;
pub mod clock;
pub mod crypto;
pub mod engine;
pub mod entropy;
pub mod json;
pub mod ledger;
pub mod par;
pub mod registry;
pub mod sim;
