// SPDX-License-Identifier: Apache-2.0

//! Blind issuance of challenge-response signatures.
//!
//! The signer never sees the message: the user re-randomizes the signer's
//! nonce commitment with blinding factors `(alpha, gamma)` and hands back a
//! blinded challenge. Unblinding yields an ordinary [`Signature`] that
//! verifies under [`super::sig::verify_sig`]. Sessions are strictly
//! sequential per signer key; concurrent sessions of this family admit known
//! attacks, so a second `begin` before the response is rejected.

use rand_core::{CryptoRng, RngCore};

use super::group::Group;
use super::sig::{challenge, KeyPair, Signature, VerificationKey};
use super::CryptoError;
#[cfg(test)]
use super::sig::verify_sig;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    Started,
    Challenged,
}

/// Signer-side state for the one in-flight session.
#[derive(Clone, Debug)]
struct SignerSession<G: Group> {
    nonce: G::Scalar,
    phase: Phase,
}

/// A signing key wrapped with the sequential-session rule.
#[derive(Clone, Debug)]
pub struct BlindSigner<G: Group> {
    keypair: KeyPair<G>,
    session: Option<SignerSession<G>>,
}

/// What the signer observed during one completed session. Every field is a
/// blinded value, statistically independent of the signed message.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlindTranscript<G: Group> {
    pub nonce_commitment: G::Point,
    pub blinded_challenge: G::Scalar,
    pub response: G::Scalar,
}

impl<G: Group> BlindTranscript<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = G::point_to_bytes(&self.nonce_commitment);
        out.extend_from_slice(&G::scalar_to_bytes(&self.blinded_challenge));
        out.extend_from_slice(&G::scalar_to_bytes(&self.response));
        out
    }
}

impl<G: Group> BlindSigner<G> {
    pub fn new(keypair: KeyPair<G>) -> Self {
        BlindSigner {
            keypair,
            session: None,
        }
    }

    pub fn vk(&self) -> &VerificationKey<G> {
        &self.keypair.vk
    }

    /// Opens a session and returns the nonce commitment `R = g^k`.
    pub fn begin<R: RngCore + CryptoRng>(&mut self, rng: &mut R) -> Result<G::Point, CryptoError> {
        if self.session.is_some() {
            return Err(CryptoError::SessionNotFresh);
        }
        let nonce = G::scalar_random(rng);
        let nonce_commitment = G::mul(&G::generator(), &nonce);
        self.session = Some(SignerSession {
            nonce,
            phase: Phase::Started,
        });
        Ok(nonce_commitment)
    }

    /// Answers the blinded challenge with `z = k + c·sk` and closes the session.
    pub fn respond(&mut self, blinded_challenge: &G::Scalar) -> Result<G::Scalar, CryptoError> {
        let session = self.session.as_mut().ok_or(CryptoError::NoSession)?;
        if session.phase != Phase::Started {
            return Err(CryptoError::SessionNotFresh);
        }
        session.phase = Phase::Challenged;
        let z = G::scalar_add(
            &session.nonce,
            &G::scalar_mul(blinded_challenge, &self.keypair.sk.0),
        );
        self.session = None;
        Ok(z)
    }
}

/// Runs Blind → BlindSign → Unblind as one orchestrated session, returning
/// the unblinded signature on `msg` and the signer-side transcript.
pub fn blind_session<G: Group, R: RngCore + CryptoRng>(
    signer: &mut BlindSigner<G>,
    msg: &[u8],
    rng: &mut R,
) -> Result<(Signature<G>, BlindTranscript<G>), CryptoError> {
    let vk = signer.vk().clone();
    let nonce_commitment = signer.begin(rng)?;

    // user side: blind the challenge
    let alpha = G::scalar_random(rng);
    let gamma = G::scalar_random(rng);
    let blinded_nonce = G::op(
        &G::op(&nonce_commitment, &G::mul(&G::generator(), &alpha)),
        &G::mul(&vk.0, &gamma),
    );
    let real_challenge = challenge::<G>(&vk, &blinded_nonce, msg);
    let blinded_challenge = G::scalar_add(&real_challenge, &gamma);

    let response = signer.respond(&blinded_challenge)?;

    // user side: unblind
    let unblinded_response = G::scalar_add(&response, &alpha);
    let sig = Signature {
        challenge: real_challenge,
        response: unblinded_response,
    };
    let transcript = BlindTranscript {
        nonce_commitment,
        blinded_challenge,
        response,
    };
    Ok((sig, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::Ristretto;
    use crate::crypto::sig::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto;

    fn contains_window(haystack: &[u8], needle: &[u8]) -> bool {
        haystack.windows(needle.len()).any(|w| w == needle)
    }

    #[test]
    fn blind_signature_verifies_under_signer_key() {
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        let fresh_vk = keygen::<G, _>(&mut rng).vk;
        let (sig, _) = blind_session(&mut signer, &fresh_vk.to_bytes(), &mut rng).unwrap();
        assert!(verify_sig(signer.vk(), &fresh_vk.to_bytes(), &sig));
    }

    #[test]
    fn every_session_output_verifies() {
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        for i in 0..100u32 {
            let msg = i.to_le_bytes();
            let (sig, _) = blind_session(&mut signer, &msg, &mut rng).unwrap();
            assert!(verify_sig(signer.vk(), &msg, &sig));
        }
    }

    #[test]
    fn sessions_are_sequential() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        let _r = signer.begin(&mut rng).unwrap();
        assert!(matches!(
            signer.begin(&mut rng),
            Err(CryptoError::SessionNotFresh)
        ));
    }

    #[test]
    fn second_challenge_in_one_session_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        let _r = signer.begin(&mut rng).unwrap();
        let c = Ristretto::scalar_from_u64(9);
        signer.respond(&c).unwrap();
        assert!(matches!(signer.respond(&c), Err(CryptoError::NoSession)));
    }

    #[test]
    fn transcript_is_disjoint_from_message() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        let msg = keygen::<G, _>(&mut rng).vk.to_bytes();
        let (_, transcript) = blind_session(&mut signer, &msg, &mut rng).unwrap();
        assert!(!contains_window(&transcript.to_bytes(), &msg));
    }

    #[test]
    fn two_transcripts_decode_and_do_not_mark_messages() {
        // blindness smoke test: both transcripts carry well-formed blinded
        // values and neither embeds either message
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let mut signer = BlindSigner::<G>::new(keygen(&mut rng));
        let m0 = keygen::<G, _>(&mut rng).vk.to_bytes();
        let m1 = keygen::<G, _>(&mut rng).vk.to_bytes();
        let (_, t0) = blind_session(&mut signer, &m0, &mut rng).unwrap();
        let (_, t1) = blind_session(&mut signer, &m1, &mut rng).unwrap();
        for t in [&t0, &t1] {
            let bytes = t.to_bytes();
            assert!(Ristretto::point_from_bytes(&bytes[..32]).is_some());
            assert!(Ristretto::scalar_from_bytes(&bytes[32..64]).is_some());
            assert!(Ristretto::scalar_from_bytes(&bytes[64..]).is_some());
            for m in [&m0, &m1] {
                assert!(!contains_window(&bytes, m));
            }
        }
        assert_ne!(t0.blinded_challenge, t1.blinded_challenge);
    }
}
