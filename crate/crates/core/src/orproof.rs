// SPDX-License-Identifier: Apache-2.0

//! Non-interactive 1-out-of-n proof that the statement's verification key
//! opens one commitment in a bucket, without revealing which.
//!
//! Since the key is public, `Com(vk; r) = β_i` reduces to knowledge of the
//! h-discrete-log of `X_i = β_i · g^{-H(vk)}`, a plain Schnorr branch. The
//! disjunction shares the Fiat-Shamir challenge across branches: every branch
//! but the real one is simulated and the real branch absorbs
//! `c_i = c - Σ_{j≠i} c_j`. Proof size is linear in the bucket.
//!
//! The Fiat-Shamir input binds the crs label and the full statement, so a
//! proof cannot be transplanted onto a different bucket or key.

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use crate::crypto::group::{hash64, Group};
use crate::crypto::params::{derive_params, hash_to_scalar, verify_opening, TAG_FIAT_SHAMIR};
use crate::crypto::{BurningFactor, PublicParams, VerificationKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrProofError {
    #[error("invalid witness")]
    InvalidWitness,
    #[error("statement has no branches")]
    EmptyStatement,
    #[error("unprogrammable oracle")]
    UnprogrammableOracle,
}

/// Common reference string: commitment parameters plus a label that is bound
/// into every Fiat-Shamir challenge.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Crs<G: Group> {
    pub params: PublicParams<G>,
    pub label: Vec<u8>,
}

/// Statement of the relation: `vk` opens one of `betas`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrStatement<G: Group> {
    pub betas: Vec<BurningFactor<G>>,
    pub vk: VerificationKey<G>,
}

/// Witness: the commitment randomness and the 0-based true branch.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrWitness<G: Group> {
    pub randomness: G::Scalar,
    pub index: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrBranch<G: Group> {
    pub commitment: G::Point,
    pub challenge: G::Scalar,
    pub response: G::Scalar,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrProof<G: Group> {
    pub branches: Vec<OrBranch<G>>,
}

/// Deterministically expands a seed into a crs.
pub fn crs_gen<G: Group>(seed: &[u8]) -> Crs<G> {
    let mut h = Sha512::new();
    h.update(b"pidc/v1/crs");
    h.update((seed.len() as u64).to_le_bytes());
    h.update(seed);
    let label: Vec<u8> = h.finalize()[..32].to_vec();
    let mut tag = b"pidc/v1/crs-params/".to_vec();
    tag.extend_from_slice(&label);
    // tag is non-empty by construction
    let params = derive_params::<G>(&tag).expect("crs params tag is non-empty");
    Crs { params, label }
}

impl<G: Group> Crs<G> {
    /// Canonical encoding, the form that is signed and posted at setup.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.label.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.label);
        out.extend_from_slice(&(self.params.domain_tag.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.params.domain_tag);
        out.extend_from_slice(&G::point_to_bytes(&self.params.g));
        out.extend_from_slice(&G::point_to_bytes(&self.params.h));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let mut at = 0usize;
        let take = |at: &mut usize, n: usize| -> Option<&[u8]> {
            let s = bytes.get(*at..*at + n)?;
            *at += n;
            Some(s)
        };
        let label_len = u32::from_le_bytes(take(&mut at, 4)?.try_into().ok()?) as usize;
        let label = take(&mut at, label_len)?.to_vec();
        let tag_len = u32::from_le_bytes(take(&mut at, 4)?.try_into().ok()?) as usize;
        let domain_tag = take(&mut at, tag_len)?.to_vec();
        let g = G::point_from_bytes(take(&mut at, G::POINT_LEN)?)?;
        let h = G::point_from_bytes(take(&mut at, G::POINT_LEN)?)?;
        (at == bytes.len()).then_some(Crs {
            params: PublicParams { g, h, domain_tag },
            label,
        })
    }
}

impl<G: Group> OrStatement<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.betas.len() as u32).to_le_bytes().to_vec();
        for beta in &self.betas {
            out.extend_from_slice(&beta.to_bytes());
        }
        out.extend_from_slice(&self.vk.to_bytes());
        out
    }
}

impl<G: Group> OrProof<G> {
    /// Wire format: `n ‖ (a_j ‖ c_j ‖ z_j) × n`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.branches.len() as u32).to_le_bytes().to_vec();
        for b in &self.branches {
            out.extend_from_slice(&G::point_to_bytes(&b.commitment));
            out.extend_from_slice(&G::scalar_to_bytes(&b.challenge));
            out.extend_from_slice(&G::scalar_to_bytes(&b.response));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let n = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
        let stride = G::POINT_LEN + 2 * G::SCALAR_LEN;
        if bytes.len() != 4 + n * stride {
            return None;
        }
        let mut branches = Vec::with_capacity(n);
        for i in 0..n {
            let at = 4 + i * stride;
            branches.push(OrBranch {
                commitment: G::point_from_bytes(&bytes[at..at + G::POINT_LEN])?,
                challenge: G::scalar_from_bytes(
                    &bytes[at + G::POINT_LEN..at + G::POINT_LEN + G::SCALAR_LEN],
                )?,
                response: G::scalar_from_bytes(&bytes[at + G::POINT_LEN + G::SCALAR_LEN..at + stride])?,
            });
        }
        Some(OrProof { branches })
    }
}

/// Source of Fiat-Shamir challenges. Production verification uses
/// [`StandardFs`]; test builds may substitute a programmable oracle.
pub trait FsOracle<G: Group> {
    fn fs_challenge(&self, input: &[u8]) -> G::Scalar;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StandardFs;

impl<G: Group> FsOracle<G> for StandardFs {
    fn fs_challenge(&self, input: &[u8]) -> G::Scalar {
        G::scalar_from_wide(&hash64(TAG_FIAT_SHAMIR, input))
    }
}

fn fs_input<G: Group>(crs: &Crs<G>, stmt: &OrStatement<G>, commitments: &[G::Point]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(crs.label.len() as u32).to_le_bytes());
    out.extend_from_slice(&crs.label);
    out.extend_from_slice(&stmt.to_bytes());
    for a in commitments {
        out.extend_from_slice(&G::point_to_bytes(a));
    }
    out
}

/// Branch statement `X_j = β_j · g^{-H(vk)}`; the witness is its h-dlog.
fn branch_statement<G: Group>(
    params: &PublicParams<G>,
    beta: &BurningFactor<G>,
    vk: &VerificationKey<G>,
) -> G::Point {
    let m = hash_to_scalar::<G>(&vk.to_bytes());
    G::op(&beta.0, &G::inv(&G::mul(&params.g, &m)))
}

pub fn prove<G: Group, R: RngCore + CryptoRng>(
    crs: &Crs<G>,
    stmt: &OrStatement<G>,
    wit: &OrWitness<G>,
    rng: &mut R,
) -> Result<OrProof<G>, OrProofError> {
    prove_with(crs, stmt, wit, rng, &StandardFs)
}

pub fn prove_with<G: Group, R: RngCore + CryptoRng, O: FsOracle<G>>(
    crs: &Crs<G>,
    stmt: &OrStatement<G>,
    wit: &OrWitness<G>,
    rng: &mut R,
    oracle: &O,
) -> Result<OrProof<G>, OrProofError> {
    let n = stmt.betas.len();
    if n == 0 {
        return Err(OrProofError::EmptyStatement);
    }
    if wit.index >= n
        || !verify_opening(
            &crs.params,
            &stmt.betas[wit.index],
            &stmt.vk.to_bytes(),
            &wit.randomness,
        )
    {
        return Err(OrProofError::InvalidWitness);
    }

    let h = &crs.params.h;
    let mut commitments = Vec::with_capacity(n);
    let mut challenges: Vec<Option<G::Scalar>> = vec![None; n];
    let mut responses: Vec<Option<G::Scalar>> = vec![None; n];
    let mut mask = G::scalar_zero(); // placeholder, set on the real branch

    for j in 0..n {
        if j == wit.index {
            mask = G::scalar_random(rng);
            commitments.push(G::mul(h, &mask));
        } else {
            let c = G::scalar_random(rng);
            let z = G::scalar_random(rng);
            let x = branch_statement(&crs.params, &stmt.betas[j], &stmt.vk);
            // a_j = h^z · X_j^{-c}
            commitments.push(G::op(&G::mul(h, &z), &G::inv(&G::mul(&x, &c))));
            challenges[j] = Some(c);
            responses[j] = Some(z);
        }
    }

    let total = oracle.fs_challenge(&fs_input(crs, stmt, &commitments));
    let mut real_challenge = total;
    for c in challenges.iter().flatten() {
        real_challenge = G::scalar_sub(&real_challenge, c);
    }
    challenges[wit.index] = Some(real_challenge.clone());
    responses[wit.index] = Some(G::scalar_add(
        &mask,
        &G::scalar_mul(&real_challenge, &wit.randomness),
    ));

    Ok(OrProof {
        branches: commitments
            .into_iter()
            .zip(challenges)
            .zip(responses)
            .map(|((commitment, c), z)| OrBranch {
                commitment,
                challenge: c.expect("all challenges assigned"),
                response: z.expect("all responses assigned"),
            })
            .collect(),
    })
}

pub fn verify<G: Group>(crs: &Crs<G>, stmt: &OrStatement<G>, proof: &OrProof<G>) -> bool {
    verify_with(crs, stmt, proof, &StandardFs)
}

pub fn verify_with<G: Group, O: FsOracle<G>>(
    crs: &Crs<G>,
    stmt: &OrStatement<G>,
    proof: &OrProof<G>,
    oracle: &O,
) -> bool {
    let n = stmt.betas.len();
    if n == 0 || proof.branches.len() != n {
        return false;
    }
    let commitments: Vec<G::Point> = proof.branches.iter().map(|b| b.commitment.clone()).collect();
    let total = oracle.fs_challenge(&fs_input(crs, stmt, &commitments));
    let mut sum = G::scalar_zero();
    for b in &proof.branches {
        sum = G::scalar_add(&sum, &b.challenge);
    }
    if sum != total {
        return false;
    }
    let h = &crs.params.h;
    for (j, b) in proof.branches.iter().enumerate() {
        let x = branch_statement(&crs.params, &stmt.betas[j], &stmt.vk);
        // h^z == a_j · X_j^c
        let lhs = G::mul(h, &b.response);
        let rhs = G::op(&b.commitment, &G::mul(&x, &b.challenge));
        if lhs != rhs {
            return false;
        }
    }
    true
}

/// Recovers a witness from an accepting proof given a discrete-log oracle for
/// the `h` base. Only brute-forceable groups can supply such an oracle; this
/// is the executable reading of knowledge soundness.
pub fn extract_witness<G, F>(
    crs: &Crs<G>,
    stmt: &OrStatement<G>,
    proof: &OrProof<G>,
    dlog: F,
) -> Option<OrWitness<G>>
where
    G: Group,
    F: Fn(&G::Point, &G::Point) -> Option<G::Scalar>,
{
    if !verify(crs, stmt, proof) {
        return None;
    }
    let vk_bytes = stmt.vk.to_bytes();
    for (index, beta) in stmt.betas.iter().enumerate() {
        let x = branch_statement(&crs.params, beta, &stmt.vk);
        if let Some(randomness) = dlog(&crs.params.h, &x) {
            if verify_opening(&crs.params, beta, &vk_bytes, &randomness) {
                return Some(OrWitness { randomness, index });
            }
        }
    }
    None
}

#[cfg(any(test, feature = "sim-oracle"))]
pub use self::oracle::{simulate, ProgrammableOracle};

#[cfg(any(test, feature = "sim-oracle"))]
mod oracle {
    use super::*;
    use std::collections::HashMap;
    use std::sync::Mutex;

    /// Programmable random oracle for the Fiat-Shamir hash. Unprogrammed
    /// points fall through to the standard hash, so an honest proof verifies
    /// under it unchanged. Test builds only; this handle is the realization
    /// of the simulation trapdoor.
    #[derive(Debug, Default)]
    pub struct ProgrammableOracle<G: Group> {
        programmed: Mutex<HashMap<Vec<u8>, G::Scalar>>,
        sealed: bool,
    }

    impl<G: Group> ProgrammableOracle<G> {
        pub fn new() -> Self {
            ProgrammableOracle {
                programmed: Mutex::new(HashMap::new()),
                sealed: false,
            }
        }

        /// An oracle that refuses all programming.
        pub fn sealed() -> Self {
            ProgrammableOracle {
                programmed: Mutex::new(HashMap::new()),
                sealed: true,
            }
        }

        /// Programs one point. Each input may be programmed once.
        pub fn program(&self, input: Vec<u8>, value: G::Scalar) -> Result<(), OrProofError> {
            if self.sealed {
                return Err(OrProofError::UnprogrammableOracle);
            }
            let mut map = self.programmed.lock().expect("oracle lock");
            if map.contains_key(&input) {
                return Err(OrProofError::UnprogrammableOracle);
            }
            map.insert(input, value);
            Ok(())
        }

        pub fn programmed_points(&self) -> usize {
            self.programmed.lock().expect("oracle lock").len()
        }
    }

    impl<G: Group> FsOracle<G> for ProgrammableOracle<G> {
        fn fs_challenge(&self, input: &[u8]) -> G::Scalar {
            if let Some(v) = self.programmed.lock().expect("oracle lock").get(input) {
                return v.clone();
            }
            <StandardFs as FsOracle<G>>::fs_challenge(&StandardFs, input)
        }
    }

    /// Produces an accepting proof for an arbitrary statement without a
    /// witness by programming the oracle at the proof's challenge point.
    pub fn simulate<G: Group, R: RngCore + CryptoRng>(
        crs: &Crs<G>,
        stmt: &OrStatement<G>,
        oracle: &ProgrammableOracle<G>,
        rng: &mut R,
    ) -> Result<OrProof<G>, OrProofError> {
        let n = stmt.betas.len();
        if n == 0 {
            return Err(OrProofError::EmptyStatement);
        }
        let h = &crs.params.h;
        let mut branches: Vec<OrBranch<G>> = Vec::with_capacity(n);
        let mut total = G::scalar_zero();
        for beta in &stmt.betas {
            let c = G::scalar_random(rng);
            let z = G::scalar_random(rng);
            let x = branch_statement(&crs.params, beta, &stmt.vk);
            branches.push(OrBranch {
                commitment: G::op(&G::mul(h, &z), &G::inv(&G::mul(&x, &c))),
                challenge: c.clone(),
                response: z,
            });
            total = G::scalar_add(&total, &c);
        }
        let commitments: Vec<G::Point> = branches.iter().map(|b| b.commitment.clone()).collect();
        oracle.program(fs_input(crs, stmt, &commitments), total)?;
        Ok(OrProof { branches })
    }
}
