// SPDX-License-Identifier: Apache-2.0

//! Group arithmetic and the primitives the protocol consumes: signatures,
//! two-generator commitments and blind signing sessions.

pub mod blind;
pub mod group;
pub mod params;
pub mod sig;
pub mod tiny;

pub use blind::{blind_session, BlindSigner, BlindTranscript};
pub use group::{Group, Ristretto};
pub use params::{
    commit, commit_random, derive_params, hash_to_scalar, verify_opening, BurningFactor,
    PublicParams,
};
pub use sig::{keygen, sign, verify_sig, verify_sig_encoded, KeyPair, Signature, SigningKey, VerificationKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("domain tag must be non-empty")]
    EmptyDomainTag,
    #[error("session not fresh")]
    SessionNotFresh,
    #[error("no blind session in flight")]
    NoSession,
}
