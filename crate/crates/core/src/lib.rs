// SPDX-License-Identifier: Apache-2.0

//! Privacy-preserving token transfer on an append-only bulletin board.
//!
//! Tokens move by burn-and-reissue: the holder of a token commits to a fresh
//! sender key (the burning factor), certifies the burn, and later posts a new
//! token carrying a 1-out-of-n proof that its sender key opens one burning
//! factor in a bucket, without revealing which. An eavesdropper on the board
//! cannot tell which burnt token a new token redeems; validators can still
//! enforce that nobody reissues without burning.
//!
//! Crate layout mirrors the system: [`crypto`] (group, signatures,
//! commitments, blind signing), [`orproof`] (the 1-out-of-n proof),
//! [`ledger`] (bulletin board and the validity machinery), [`protocol`]
//! (party state machines), [`minter`] (the blind-signature minting variant
//! with quota accountability), [`games`] (executable security games) and
//! [`scenario`] (the deterministic multi-party driver).

pub mod crypto;
pub mod games;
pub mod ledger;
pub mod minter;
pub mod orproof;
pub mod protocol;
pub mod scenario;

/// The group the protocol stack is instantiated with.
pub type ProtocolGroup = crypto::Ristretto;

pub type Scalar = <ProtocolGroup as crypto::Group>::Scalar;
pub type Point = <ProtocolGroup as crypto::Group>::Point;
pub type PublicParams = crypto::PublicParams<ProtocolGroup>;
pub type BurningFactor = crypto::BurningFactor<ProtocolGroup>;
pub type KeyPair = crypto::KeyPair<ProtocolGroup>;
pub type VerificationKey = crypto::VerificationKey<ProtocolGroup>;
pub type SigningKey = crypto::SigningKey<ProtocolGroup>;
pub type Signature = crypto::Signature<ProtocolGroup>;
pub type Crs = orproof::Crs<ProtocolGroup>;
pub type OrStatement = orproof::OrStatement<ProtocolGroup>;
pub type OrWitness = orproof::OrWitness<ProtocolGroup>;
pub type OrProof = orproof::OrProof<ProtocolGroup>;
#[cfg(any(test, feature = "sim-oracle"))]
pub type ProgrammableOracle = orproof::ProgrammableOracle<ProtocolGroup>;
