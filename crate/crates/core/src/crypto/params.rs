// SPDX-License-Identifier: Apache-2.0

//! Public parameters and the two-generator commitment scheme.
//!
//! A burning factor is `Com(m; r) = g^{H(m)} · h^r` where `H` is the
//! domain-separated scalar map and `h` is hashed to the group so its discrete
//! log relative to `g` is unknown. Committing to the digest of a message
//! rather than its raw bits means binding holds up to hash collisions.

use rand_core::{CryptoRng, RngCore};

use super::group::{hash64, Group};
use super::CryptoError;

/// Domain tags, one per hash use.
pub const TAG_SCALAR_MAP: &[u8] = b"pidc/v1/scalar-map";
pub const TAG_H_DERIVE: &[u8] = b"pidc/v1/h-derive";
pub const TAG_SIG_CHALLENGE: &[u8] = b"pidc/v1/sig-challenge";
pub const TAG_FIAT_SHAMIR: &[u8] = b"pidc/v1/fiat-shamir";

/// Commitment parameters: the fixed base `g` and an independent base `h`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PublicParams<G: Group> {
    pub g: G::Point,
    pub h: G::Point,
    pub domain_tag: Vec<u8>,
}

/// A burning factor: the commitment attached to a burnt token, binding it to
/// the fresh sender verification key that will respend its value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BurningFactor<G: Group>(pub G::Point);

impl<G: Group> BurningFactor<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        G::point_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        G::point_from_bytes(bytes).map(BurningFactor)
    }
}

/// Derives parameters deterministically from a domain tag. `h` is obtained by
/// hash-to-group over `tag‖"h"`, never as a known power of `g`.
pub fn derive_params<G: Group>(domain_tag: &[u8]) -> Result<PublicParams<G>, CryptoError> {
    if domain_tag.is_empty() {
        return Err(CryptoError::EmptyDomainTag);
    }
    let mut input = Vec::with_capacity(TAG_H_DERIVE.len() + domain_tag.len() + 1);
    input.extend_from_slice(TAG_H_DERIVE);
    input.extend_from_slice(domain_tag);
    input.extend_from_slice(b"h");
    Ok(PublicParams {
        g: G::generator(),
        h: G::hash_to_point(&input),
        domain_tag: domain_tag.to_vec(),
    })
}

/// Maps arbitrary bytes into the scalar message space.
pub fn hash_to_scalar<G: Group>(data: &[u8]) -> G::Scalar {
    G::scalar_from_wide(&hash64(TAG_SCALAR_MAP, data))
}

/// `Com(msg; r) = g^{H(msg)} · h^r`.
pub fn commit<G: Group>(params: &PublicParams<G>, msg: &[u8], r: &G::Scalar) -> BurningFactor<G> {
    let m = hash_to_scalar::<G>(msg);
    BurningFactor(G::op(&G::mul(&params.g, &m), &G::mul(&params.h, r)))
}

/// Commits under fresh randomness, returning the opening alongside.
pub fn commit_random<G: Group, R: RngCore + CryptoRng>(
    params: &PublicParams<G>,
    msg: &[u8],
    rng: &mut R,
) -> (BurningFactor<G>, G::Scalar) {
    let r = G::scalar_random(rng);
    (commit(params, msg, &r), r)
}

/// True iff `(msg, r)` opens `c`.
pub fn verify_opening<G: Group>(
    params: &PublicParams<G>,
    c: &BurningFactor<G>,
    msg: &[u8],
    r: &G::Scalar,
) -> bool {
    commit(params, msg, r) == *c
}
