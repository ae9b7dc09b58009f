// SPDX-License-Identifier: Apache-2.0

//! Challenge-response signatures over the protocol group.
//!
//! Verification keys are group elements, which lets them double as committed
//! messages and OR-proof statement parts without any format conversion. The
//! signature is the pair `(c, z)` with `c = H(vk ‖ g^k ‖ msg)` and
//! `z = k + c·sk`; encoding is `challenge ‖ response`.

use rand_core::{CryptoRng, RngCore};

use super::group::{hash64, Group};
use super::params::TAG_SIG_CHALLENGE;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VerificationKey<G: Group>(pub G::Point);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SigningKey<G: Group>(pub G::Scalar);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KeyPair<G: Group> {
    pub vk: VerificationKey<G>,
    pub sk: SigningKey<G>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Signature<G: Group> {
    pub challenge: G::Scalar,
    pub response: G::Scalar,
}

impl<G: Group> VerificationKey<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        G::point_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        G::point_from_bytes(bytes).map(VerificationKey)
    }
}

impl<G: Group> Signature<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = G::scalar_to_bytes(&self.challenge);
        out.extend_from_slice(&G::scalar_to_bytes(&self.response));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != 2 * G::SCALAR_LEN {
            return None;
        }
        Some(Signature {
            challenge: G::scalar_from_bytes(&bytes[..G::SCALAR_LEN])?,
            response: G::scalar_from_bytes(&bytes[G::SCALAR_LEN..])?,
        })
    }
}

pub fn keygen<G: Group, R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair<G> {
    let mut sk = G::scalar_random(rng);
    while sk == G::scalar_zero() {
        sk = G::scalar_random(rng);
    }
    KeyPair {
        vk: VerificationKey(G::mul(&G::generator(), &sk)),
        sk: SigningKey(sk),
    }
}

/// Challenge hash shared by plain and blind signing.
pub(crate) fn challenge<G: Group>(vk: &VerificationKey<G>, nonce: &G::Point, msg: &[u8]) -> G::Scalar {
    let mut data = Vec::with_capacity(2 * G::POINT_LEN + msg.len());
    data.extend_from_slice(&vk.to_bytes());
    data.extend_from_slice(&G::point_to_bytes(nonce));
    data.extend_from_slice(msg);
    G::scalar_from_wide(&hash64(TAG_SIG_CHALLENGE, &data))
}

pub fn sign<G: Group, R: RngCore + CryptoRng>(
    keypair: &KeyPair<G>,
    msg: &[u8],
    rng: &mut R,
) -> Signature<G> {
    let k = G::scalar_random(rng);
    let nonce = G::mul(&G::generator(), &k);
    let c = challenge::<G>(&keypair.vk, &nonce, msg);
    let z = G::scalar_add(&k, &G::scalar_mul(&c, &keypair.sk.0));
    Signature {
        challenge: c,
        response: z,
    }
}

pub fn verify_sig<G: Group>(vk: &VerificationKey<G>, msg: &[u8], sig: &Signature<G>) -> bool {
    // R' = g^z · vk^{-c}; accept iff H(vk ‖ R' ‖ msg) = c
    let nonce = G::op(
        &G::mul(&G::generator(), &sig.response),
        &G::inv(&G::mul(&vk.0, &sig.challenge)),
    );
    challenge::<G>(vk, &nonce, msg) == sig.challenge
}

/// Byte-level verification: malformed encodings verify as false, not as a fault.
pub fn verify_sig_encoded<G: Group>(vk_bytes: &[u8], msg: &[u8], sig_bytes: &[u8]) -> bool {
    match (
        VerificationKey::<G>::from_bytes(vk_bytes),
        Signature::<G>::from_bytes(sig_bytes),
    ) {
        (Some(vk), Some(sig)) => verify_sig(&vk, msg, &sig),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::Ristretto;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto;

    #[test]
    fn keygen_gives_distinct_keys() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let a = keygen::<G, _>(&mut rng);
        let b = keygen::<G, _>(&mut rng);
        assert_ne!(a.vk, b.vk);
    }

    #[test]
    fn keygen_is_reproducible_from_seed() {
        let a = keygen::<G, _>(&mut ChaCha20Rng::seed_from_u64(11));
        let b = keygen::<G, _>(&mut ChaCha20Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn sign_verify_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let kp = keygen::<G, _>(&mut rng);
        let sig = sign(&kp, b"x", &mut rng);
        assert!(verify_sig(&kp.vk, b"x", &sig));
    }

    #[test]
    fn empty_message_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let kp = keygen::<G, _>(&mut rng);
        let sig = sign(&kp, b"", &mut rng);
        assert!(verify_sig(&kp.vk, b"", &sig));
    }

    #[test]
    fn wrong_key_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let kp = keygen::<G, _>(&mut rng);
        let other = keygen::<G, _>(&mut rng);
        let sig = sign(&kp, b"msg", &mut rng);
        assert!(!verify_sig(&other.vk, b"msg", &sig));
    }

    #[test]
    fn mutated_message_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let kp = keygen::<G, _>(&mut rng);
        let sig = sign(&kp, b"msg", &mut rng);
        assert!(!verify_sig(&kp.vk, b"msh", &sig));
    }

    #[test]
    fn bumped_response_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let kp = keygen::<G, _>(&mut rng);
        let mut sig = sign(&kp, b"msg", &mut rng);
        sig.response = Ristretto::scalar_add(&sig.response, &Ristretto::scalar_one());
        assert!(!verify_sig(&kp.vk, b"msg", &sig));
    }

    #[test]
    fn single_byte_flips_reject_everywhere() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        // 100+ cases per position class: message, signature, key encoding
        for case in 0..100u64 {
            let kp = keygen::<G, _>(&mut rng);
            let msg: Vec<u8> = (0..16).map(|i| (case as u8).wrapping_add(i)).collect();
            let sig = sign(&kp, &msg, &mut rng);
            let vk_bytes = kp.vk.to_bytes();
            let sig_bytes = sig.to_bytes();
            assert!(verify_sig_encoded::<G>(&vk_bytes, &msg, &sig_bytes));

            let flip = |bytes: &[u8], pos: usize| {
                let mut out = bytes.to_vec();
                out[pos] ^= 1 << (case % 8);
                out
            };
            let mpos = (case as usize * 7) % msg.len();
            assert!(!verify_sig_encoded::<G>(&vk_bytes, &flip(&msg, mpos), &sig_bytes));
            let spos = (case as usize * 11) % sig_bytes.len();
            assert!(!verify_sig_encoded::<G>(&vk_bytes, &msg, &flip(&sig_bytes, spos)));
            let kpos = (case as usize * 13) % vk_bytes.len();
            assert!(!verify_sig_encoded::<G>(&flip(&vk_bytes, kpos), &msg, &sig_bytes));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn prop_correctness(seed in any::<u64>(), msg in prop::collection::vec(any::<u8>(), 0..64)) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let kp = keygen::<G, _>(&mut rng);
            let sig = sign(&kp, &msg, &mut rng);
            prop_assert!(verify_sig(&kp.vk, &msg, &sig));
        }
    }
}
