// SPDX-License-Identifier: Apache-2.0

//! The minter-aided variant: blind-signature minting replaces per-transfer
//! proofs, quota accountability catches over-minting after the fact, and
//! rescue proofs recover honest tokens caught in a flag.
//!
//! Burning is unchanged; the burning factor doubles as the blinding of the
//! fresh sender key, so the rescue relation reuses the OR-proof module as is.
//! A minted token is validated by two signatures instead of a proof: the
//! sender's on the receiver key and the minter's on the sender key, the
//! latter obtained through a blind session so the minter never sees what it
//! signs. Over-minting cannot be prevented in real time; the public audit
//! counts signature-valid minted tokens per minter and flags any minter
//! exceeding its quota, voiding all its minted tokens until rescued.

use rand::{CryptoRng, Rng, RngCore};
use std::collections::{BTreeMap, BTreeSet};

use crate::crypto::{blind_session, sign, verify_sig, BlindSigner, BlindTranscript};
use crate::ledger::{BulletinBoard, Payload, TokenStatus, ValidSet, ValidationCtx};
use crate::protocol::{PartyState, ProtocolError};
use crate::{KeyPair, ProtocolGroup, Signature, VerificationKey};

type G = ProtocolGroup;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinterError {
    #[error("quota exhausted")]
    QuotaExhausted,
    #[error("minter flagged")]
    MinterFlagged,
    #[error("no rescuable burn")]
    NoRescuableBurn,
    #[error("token is not flagged as forged")]
    NotForged,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Crypto(#[from] crate::crypto::CryptoError),
}

/// A minter: a blind-signing key constrained by a mint quota.
#[derive(Debug)]
pub struct MinterState {
    keypair: KeyPair,
    signer: BlindSigner<G>,
    quota: u32,
    mint_count: u32,
    flagged: bool,
    rogue: bool,
}

impl MinterState {
    pub fn new(keypair: KeyPair, quota: u32) -> Self {
        MinterState {
            signer: BlindSigner::new(keypair.clone()),
            keypair,
            quota,
            mint_count: 0,
            flagged: false,
            rogue: false,
        }
    }

    /// Turns this minter adversarial: it will keep serving mint requests past
    /// its quota. The audit exists to catch exactly this.
    pub fn make_rogue(&mut self) {
        self.rogue = true;
    }

    pub fn vk(&self) -> &VerificationKey {
        &self.keypair.vk
    }

    pub fn quota(&self) -> u32 {
        self.quota
    }

    pub fn mint_count(&self) -> u32 {
        self.mint_count
    }

    pub fn is_flagged(&self) -> bool {
        self.flagged
    }

    /// Flags are monotone; there is no unflag.
    pub fn flag(&mut self) {
        self.flagged = true;
    }

    /// Signs an agreement allowing `delegate` to mint for this minter's chains.
    pub fn sign_agreement<R: RngCore + CryptoRng>(
        &self,
        delegate: &VerificationKey,
        rng: &mut R,
    ) -> Agreement {
        let mut msg = b"mint-agreement".to_vec();
        msg.extend_from_slice(&delegate.to_bytes());
        Agreement {
            from: self.keypair.vk.clone(),
            to: delegate.clone(),
            sig: sign(&self.keypair, &msg, rng),
        }
    }

    fn blind_sign<R: RngCore + CryptoRng>(
        &mut self,
        msg: &[u8],
        rng: &mut R,
    ) -> Result<(Signature, BlindTranscript<G>), MinterError> {
        let out = blind_session(&mut self.signer, msg, rng)?;
        self.mint_count += 1;
        Ok(out)
    }
}

/// One blind-signing exchange: the sender obtains the minter's signature on
/// the fresh sender key committed in the burning factor. The honest minter
/// refuses once flagged or out of quota.
pub fn mint<R: RngCore + CryptoRng>(
    sender: &PartyState,
    burnt_index: u64,
    minter: &mut MinterState,
    rng: &mut R,
) -> Result<(Signature, BlindTranscript<G>), MinterError> {
    if !minter.rogue {
        if minter.flagged {
            return Err(MinterError::MinterFlagged);
        }
        if minter.mint_count >= minter.quota {
            return Err(MinterError::QuotaExhausted);
        }
    }
    let secret = sender
        .burn_secret(burnt_index)
        .ok_or(ProtocolError::NotBurner)?;
    minter.blind_sign(&secret.next_keypair.vk.to_bytes(), rng)
}

/// The misbehaving path: signs regardless of quota and flag. This is what the
/// accountability audit exists to catch.
pub fn mint_unchecked<R: RngCore + CryptoRng>(
    msg: &[u8],
    minter: &mut MinterState,
    rng: &mut R,
) -> Result<(Signature, BlindTranscript<G>), MinterError> {
    minter.blind_sign(msg, rng)
}

impl PartyState {
    /// Burning in the minter variant: same record shape, the factor is the
    /// blinding of the fresh sender key.
    pub fn minter_burn<R: RngCore + CryptoRng>(
        &mut self,
        token_index: u64,
        board: &mut BulletinBoard,
        bank: crate::ledger::PartyId,
        rng: &mut R,
    ) -> Result<u64, ProtocolError> {
        self.burn(token_index, board, bank, rng)
    }

    /// Assembles the minted live token once a minter signature is in hand.
    pub fn minted_token_gen<R: RngCore + CryptoRng>(
        &mut self,
        burnt_index: u64,
        receiver_vk: &VerificationKey,
        minter_vk: &VerificationKey,
        minter_sig: Signature,
        rng: &mut R,
    ) -> Result<Payload, ProtocolError> {
        let secret = self
            .pending
            .get(&burnt_index)
            .ok_or(ProtocolError::NotBurner)?;
        let sender_sig = sign(&secret.next_keypair, &receiver_vk.to_bytes(), rng);
        Ok(Payload::MintedToken {
            sender_vk: secret.next_keypair.vk.clone(),
            receiver_vk: receiver_vk.clone(),
            sender_sig,
            minter_vk: minter_vk.clone(),
            minter_sig,
        })
    }

    /// Proof that this party's forged-flagged token redeems a burn of an
    /// unflagged token, hidden in a bucket of `n`. The burn secret must still
    /// be held; purging forfeits rescuability.
    pub fn rescue_proof<R: Rng + CryptoRng>(
        &self,
        token_index: u64,
        n: usize,
        rng: &mut R,
    ) -> Result<Payload, MinterError> {
        let (secret, own_record) = self.rescuable_burn(token_index)?;
        let eligible: Vec<u64> = self.vs.certified_burns().iter().map(|(i, _)| *i).collect();
        if n == 0 || eligible.len() < n {
            return Err(ProtocolError::BucketTooLarge.into());
        }
        use rand::seq::SliceRandom;
        let others: Vec<u64> = eligible
            .iter()
            .copied()
            .filter(|i| *i != own_record)
            .collect();
        let mut bucket: Vec<u64> = others.choose_multiple(rng, n - 1).copied().collect();
        bucket.push(own_record);
        bucket.shuffle(rng);

        let betas = bucket
            .iter()
            .map(|i| self.vs.burn_record(*i).expect("certified").factor.clone())
            .collect();
        let stmt = crate::OrStatement {
            betas,
            vk: secret.next_keypair.vk.clone(),
        };
        let wit = crate::OrWitness {
            randomness: secret.randomness,
            index: bucket
                .iter()
                .position(|i| *i == own_record)
                .expect("own record in bucket"),
        };
        let proof = crate::orproof::prove(&self.crs, &stmt, &wit, rng)
            .map_err(ProtocolError::from)?;
        Ok(Payload::Rescue {
            token_index,
            bucket,
            proof,
        })
    }

    /// The linkable alternative: reveal the burn randomness outright.
    pub fn rescue_open(&self, token_index: u64) -> Result<Payload, MinterError> {
        let (secret, own_record) = self.rescuable_burn(token_index)?;
        Ok(Payload::RescueOpen {
            token_index,
            burn_index: own_record,
            randomness: secret.randomness,
        })
    }

    fn rescuable_burn(&self, token_index: u64) -> Result<(&crate::protocol::BurnSecret, u64), MinterError> {
        let token = self.vs.token(token_index).ok_or(MinterError::NotForged)?;
        if token.status != TokenStatus::Forged {
            return Err(MinterError::NotForged);
        }
        let secret = self
            .pending
            .values()
            .find(|s| s.next_keypair.vk == token.sender_vk)
            .ok_or(MinterError::NoRescuableBurn)?;
        let own = self
            .vs
            .burn_of_token(secret.burnt_index)
            .ok_or(MinterError::NoRescuableBurn)?;
        // a burn of a forged token cannot back a rescue
        if !self
            .vs
            .token(own.token_index)
            .is_some_and(|t| t.status.counts())
        {
            return Err(MinterError::NoRescuableBurn);
        }
        Ok((secret, own.record_index))
    }
}

/// Signed delegation: `from` authorizes `to` to mint for its chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agreement {
    pub from: VerificationKey,
    pub to: VerificationKey,
    pub sig: Signature,
}

impl Agreement {
    pub fn verify(&self) -> bool {
        let mut msg = b"mint-agreement".to_vec();
        msg.extend_from_slice(&self.to.to_bytes());
        verify_sig(&self.from, &msg, &self.sig)
    }
}

/// Ground-truth registry: which minter serves which payment chain. Chains are
/// named by their genesis board index. The chain of a token past a burn is
/// not public data; the driver orchestrating transfers records it here, which
/// is exactly why real-time chain checks need this registry while the audit
/// does not.
#[derive(Debug, Clone, Default)]
pub struct MintRegistry {
    assignments: BTreeMap<u64, Vec<u8>>,
    agreements: BTreeSet<(Vec<u8>, Vec<u8>)>,
    chains: BTreeMap<Vec<u8>, u64>,
    quotas: BTreeMap<Vec<u8>, u32>,
}

impl MintRegistry {
    pub fn new() -> Self {
        MintRegistry::default()
    }

    pub fn assign_chain(&mut self, chain: u64, minter_vk: &VerificationKey, quota: u32) {
        self.assignments.insert(chain, minter_vk.to_bytes());
        self.quotas.insert(minter_vk.to_bytes(), quota);
    }

    /// Accepts only verifying agreements.
    pub fn add_agreement(&mut self, agreement: &Agreement) -> bool {
        if !agreement.verify() {
            return false;
        }
        self.agreements
            .insert((agreement.from.to_bytes(), agreement.to.to_bytes()));
        true
    }

    /// Records that the token with this sender key continues `chain`.
    pub fn record_chain(&mut self, sender_vk: &VerificationKey, chain: u64) {
        self.chains.insert(sender_vk.to_bytes(), chain);
    }

    pub fn chain_of(&self, sender_vk: &VerificationKey) -> Option<u64> {
        self.chains.get(&sender_vk.to_bytes()).copied()
    }

    pub fn minter_of_chain(&self, chain: u64) -> Option<VerificationKey> {
        self.assignments
            .get(&chain)
            .and_then(|b| VerificationKey::from_bytes(b))
    }

    pub fn chains_of_minter(&self, minter_vk: &VerificationKey) -> Vec<u64> {
        let key = minter_vk.to_bytes();
        self.assignments
            .iter()
            .filter(|(_, v)| **v == key)
            .map(|(c, _)| *c)
            .collect()
    }

    fn delegated(&self, assigned: &[u8], actual: &[u8]) -> bool {
        assigned == actual
            || self
                .agreements
                .contains(&(assigned.to_vec(), actual.to_vec()))
    }

    /// Registry file: one line per minter, `vk_hex quota chain,chain,...`.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (vk, quota) in &self.quotas {
            let chains: Vec<String> = self
                .assignments
                .iter()
                .filter(|(_, v)| *v == vk)
                .map(|(c, _)| c.to_string())
                .collect();
            out.push_str(&format!("{} {} {}\n", hex::encode(vk), quota, chains.join(",")));
        }
        out
    }
}

/// Validity of a minted token including chain-minter consistency against the
/// registry: signature checks and flag state come from the valid set, the
/// chain lookup from the registry's ground truth.
pub fn minter_is_valid(
    vk_cb: &[VerificationKey],
    registry: &MintRegistry,
    vs: &ValidSet,
    token: &Payload,
) -> bool {
    let Payload::MintedToken {
        sender_vk,
        minter_vk,
        ..
    } = token
    else {
        return false;
    };
    if !crate::ledger::is_valid(vk_cb, vs, token) {
        return false;
    }
    let Some(chain) = registry.chain_of(sender_vk) else {
        return false;
    };
    let Some(assigned) = registry.minter_of_chain(chain) else {
        return false;
    };
    registry.delegated(&assigned.to_bytes(), &minter_vk.to_bytes())
}

/// One row of the audit report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRow {
    pub minter_vk: VerificationKey,
    pub count: u32,
    pub quota: u32,
    pub flagged: bool,
    pub forged: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn flagged_minters(&self) -> Vec<&VerificationKey> {
        self.rows
            .iter()
            .filter(|r| r.flagged)
            .map(|r| &r.minter_vk)
            .collect()
    }

    pub fn forged_tokens(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.rows.iter().flat_map(|r| r.forged.clone()).collect();
        out.sort_unstable();
        out
    }

    /// Report file: `vk_hex count=N quota=N flagged=B forged=i,j,...`.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let forged: Vec<String> = row.forged.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "{} count={} quota={} flagged={} forged={}\n",
                hex::encode(row.minter_vk.to_bytes()),
                row.count,
                row.quota,
                row.flagged,
                forged.join(","),
            ));
        }
        out
    }
}

/// Recounts every minter's signature-valid minted tokens from the raw board.
/// A minter whose distinct minted tokens exceed its quota is flagged and all
/// its minted tokens are marked forged.
pub fn accountability_audit(
    board: &BulletinBoard,
    ctx: &ValidationCtx<'_>,
    _registry: &MintRegistry,
) -> AuditReport {
    let mut vs = ValidSet::new();
    for entry in board.entries() {
        // in-order fold over a complete board cannot violate ordering
        vs.ingest(entry, ctx).expect("in-order fold");
    }
    let mut rows = Vec::new();
    for (minter_vk, quota, flagged) in vs.registered_minters() {
        let minted = vs.minted_by(&minter_vk);
        let forged = if flagged { minted.clone() } else { Vec::new() };
        rows.push(AuditRow {
            count: minted.len() as u32,
            minter_vk,
            quota,
            flagged,
            forged,
        });
    }
    AuditReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;
    use crate::ledger::{FsMode, PartyId};
    use crate::protocol::{CbPublic, CentralBank, PaymentDecision};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// One bank holding `tau` genesis tokens plus one registered minter.
    struct Rig {
        rng: ChaCha20Rng,
        board: BulletinBoard,
        public: CbPublic,
        bank: PartyState,
        minter: MinterState,
        registry: MintRegistry,
    }

    fn rig(seed: u64, tau: u32, quota: u32) -> Rig {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut board = BulletinBoard::new();
        let keys: Vec<KeyPair> = (0..tau).map(|_| keygen::<G, _>(&mut rng)).collect();
        let mut bank_keys = BTreeMap::new();
        bank_keys.insert(0u32, keys.iter().map(|k| k.vk.clone()).collect());
        let mut cb = CentralBank::new();
        let public = cb
            .setup(&[0], &bank_keys, tau, b"minter-tests", &mut board, &mut rng)
            .unwrap();
        let minter = MinterState::new(keygen::<G, _>(&mut rng), quota);
        board
            .post(
                Payload::MinterKey {
                    minter_vk: minter.vk().clone(),
                    quota,
                },
                PartyId::CentralBank,
            )
            .unwrap();

        let mut bank = PartyState::user_init(PartyId::Bank(0), &public, &board).unwrap();
        for kp in keys {
            bank.register_receiver_key(kp);
        }
        let mut registry = MintRegistry::new();
        for entry in board.read() {
            if let Payload::GenesisToken { bank_vk, .. } = &entry.payload {
                let vk = bank_vk.clone();
                assert_eq!(
                    bank.validate_payment(&entry, &vk).unwrap(),
                    PaymentDecision::Accepted
                );
                registry.assign_chain(entry.index, minter.vk(), quota);
            }
        }
        Rig {
            rng,
            board,
            public,
            bank,
            minter,
            registry,
        }
    }

    fn ctx<'a>(public: &'a CbPublic) -> ValidationCtx<'a> {
        ValidationCtx {
            vk_cb: &public.vk_cb,
            vk_crs: &public.vk_crs,
            fs: FsMode::Standard,
        }
    }

    /// Burns `token`, mints honestly, posts the minted token; returns its index.
    fn transfer(rig: &mut Rig, token: u64, receiver: &mut PartyState) -> u64 {
        rig.bank
            .minter_burn(token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        let chain = rig
            .registry
            .chain_of(&rig.bank.vs().token(token).unwrap().sender_vk)
            .unwrap_or(token);
        let (sig, _) = mint(&rig.bank, token, &mut rig.minter, &mut rig.rng).unwrap();
        let receiver_vk = receiver.receiver_keygen(&mut rig.rng);
        let minter_vk = rig.minter.vk().clone();
        let payload = rig
            .bank
            .minted_token_gen(token, &receiver_vk, &minter_vk, sig, &mut rig.rng)
            .unwrap();
        if let Payload::MintedToken { sender_vk, .. } = &payload {
            rig.registry.record_chain(sender_vk, chain);
        }
        let idx = rig.board.post(payload, PartyId::Bank(0)).unwrap();
        rig.bank.sync(&rig.board).unwrap();
        receiver.sync(&rig.board).unwrap();
        idx
    }

    #[test]
    fn honest_minted_token_is_valid() {
        let mut rig = rig(70, 2, 5);
        let token = rig.bank.owned_tokens()[0];
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let idx = transfer(&mut rig, token, &mut user);
        let payload = rig.board.entry(idx).unwrap().payload.clone();

        // valid before ingesting the token itself
        let mut fresh = ValidSet::new();
        for entry in rig.board.entries()[..idx as usize].iter() {
            fresh.ingest(entry, &ctx(&rig.public)).unwrap();
        }
        assert!(minter_is_valid(
            &rig.public.vk_cb,
            &rig.registry,
            &fresh,
            &payload
        ));
        assert!(rig.bank.vs().token(idx).is_some());
    }

    #[test]
    fn minter_signature_covers_the_committed_key() {
        let mut rig = rig(71, 1, 5);
        let token = rig.bank.owned_tokens()[0];
        rig.bank
            .minter_burn(token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        let secret = rig.bank.burn_secret(token).unwrap().clone();
        let (sig, _) = mint(&rig.bank, token, &mut rig.minter, &mut rig.rng).unwrap();
        // the blind session yields an ordinary signature on the key inside β
        assert!(verify_sig(
            rig.minter.vk(),
            &secret.next_keypair.vk.to_bytes(),
            &sig
        ));
        let factor = rig.bank.vs().burn_of_token(token).unwrap().factor.clone();
        assert!(crate::crypto::verify_opening(
            &rig.public.crs.params,
            &factor,
            &secret.next_keypair.vk.to_bytes(),
            &secret.randomness
        ));
    }

    #[test]
    fn quota_bounds_honest_minting() {
        let mut rig = rig(72, 6, 5);
        let tokens = rig.bank.owned_tokens();
        for token in &tokens[..5] {
            rig.bank
                .minter_burn(*token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
                .unwrap();
            rig.bank.sync(&rig.board).unwrap();
            mint(&rig.bank, *token, &mut rig.minter, &mut rig.rng).unwrap();
        }
        assert_eq!(rig.minter.mint_count(), 5);
        rig.bank
            .minter_burn(tokens[5], &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        assert_eq!(
            mint(&rig.bank, tokens[5], &mut rig.minter, &mut rig.rng).unwrap_err(),
            MinterError::QuotaExhausted
        );
    }

    #[test]
    fn flagged_minter_refuses_to_mint() {
        let mut rig = rig(73, 1, 5);
        let token = rig.bank.owned_tokens()[0];
        rig.bank
            .minter_burn(token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        rig.minter.flag();
        assert_eq!(
            mint(&rig.bank, token, &mut rig.minter, &mut rig.rng).unwrap_err(),
            MinterError::MinterFlagged
        );
    }

    #[test]
    fn minter_transcript_never_contains_the_signed_key() {
        let mut rig = rig(74, 1, 5);
        let token = rig.bank.owned_tokens()[0];
        rig.bank
            .minter_burn(token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        let vk_bytes = rig
            .bank
            .burn_secret(token)
            .unwrap()
            .next_keypair
            .vk
            .to_bytes();
        let (_, transcript) = mint(&rig.bank, token, &mut rig.minter, &mut rig.rng).unwrap();
        let bytes = transcript.to_bytes();
        assert!(!bytes.windows(vk_bytes.len()).any(|w| w == vk_bytes));
    }

    #[test]
    fn cross_minter_token_needs_an_agreement() {
        let mut rig = rig(75, 1, 5);
        let token = rig.bank.owned_tokens()[0];
        let mut other = MinterState::new(keygen::<G, _>(&mut rig.rng), 5);
        rig.board
            .post(
                Payload::MinterKey {
                    minter_vk: other.vk().clone(),
                    quota: 5,
                },
                PartyId::CentralBank,
            )
            .unwrap();
        rig.bank
            .minter_burn(token, &mut rig.board, PartyId::Bank(0), &mut rig.rng)
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();

        // minted by the wrong minter
        let (sig, _) = mint(&rig.bank, token, &mut other, &mut rig.rng).unwrap();
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let receiver_vk = user.receiver_keygen(&mut rig.rng);
        let other_vk = other.vk().clone();
        let payload = rig
            .bank
            .minted_token_gen(token, &receiver_vk, &other_vk, sig, &mut rig.rng)
            .unwrap();
        if let Payload::MintedToken { sender_vk, .. } = &payload {
            rig.registry.record_chain(sender_vk, token);
        }
        assert!(!minter_is_valid(
            &rig.public.vk_cb,
            &rig.registry,
            rig.bank.vs(),
            &payload
        ));

        // the same token under a signed agreement passes
        let agreement = rig.minter.sign_agreement(&other_vk, &mut rig.rng);
        assert!(rig.registry.add_agreement(&agreement));
        assert!(minter_is_valid(
            &rig.public.vk_cb,
            &rig.registry,
            rig.bank.vs(),
            &payload
        ));
    }

    #[test]
    fn honest_run_is_unflagged_and_empty_board_audits_empty() {
        let mut rig = rig(76, 2, 5);
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        for token in tokens {
            transfer(&mut rig, token, &mut user);
        }
        let report = accountability_audit(&rig.board, &ctx(&rig.public), &rig.registry);
        assert_eq!(report.rows.len(), 1);
        assert!(!report.rows[0].flagged);
        assert_eq!(report.rows[0].count, 2);
        assert!(report.forged_tokens().is_empty());

        let empty = BulletinBoard::new();
        let report = accountability_audit(&empty, &ctx(&rig.public), &rig.registry);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn over_quota_minting_is_flagged_with_every_token_forged() {
        // quota 2: two honest transfers, then the minter fabricates a third
        // token from scratch for an accomplice
        let mut rig = rig(77, 2, 2);
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        let honest: Vec<u64> = tokens
            .iter()
            .map(|t| transfer(&mut rig, *t, &mut user))
            .collect();

        let accomplice = keygen::<G, _>(&mut rig.rng);
        let payee = keygen::<G, _>(&mut rig.rng);
        let (minter_sig, _) =
            mint_unchecked(&accomplice.vk.to_bytes(), &mut rig.minter, &mut rig.rng).unwrap();
        let sender_sig = sign(&accomplice, &payee.vk.to_bytes(), &mut rig.rng);
        let forged = Payload::MintedToken {
            sender_vk: accomplice.vk.clone(),
            receiver_vk: payee.vk.clone(),
            sender_sig,
            minter_vk: rig.minter.vk().clone(),
            minter_sig,
        };
        let forged_idx = rig.board.post(forged, PartyId::Bank(0)).unwrap();
        rig.bank.sync(&rig.board).unwrap();

        let report = accountability_audit(&rig.board, &ctx(&rig.public), &rig.registry);
        assert_eq!(report.flagged_minters().len(), 1);
        let mut expected = honest.clone();
        expected.push(forged_idx);
        expected.sort_unstable();
        assert_eq!(report.forged_tokens(), expected);
        // validators reached the same state incrementally
        assert!(rig.bank.vs().minter_flagged(rig.minter.vk()));
        for idx in &expected {
            assert_eq!(
                rig.bank.vs().token(*idx).unwrap().status,
                TokenStatus::Forged
            );
        }

        // new tokens under the flagged minter are rejected outright
        let late = keygen::<G, _>(&mut rig.rng);
        let late_payee = keygen::<G, _>(&mut rig.rng);
        let (late_minter_sig, _) =
            mint_unchecked(&late.vk.to_bytes(), &mut rig.minter, &mut rig.rng).unwrap();
        let late_sender_sig = sign(&late, &late_payee.vk.to_bytes(), &mut rig.rng);
        let payload = Payload::MintedToken {
            sender_vk: late.vk.clone(),
            receiver_vk: late_payee.vk.clone(),
            sender_sig: late_sender_sig,
            minter_vk: rig.minter.vk().clone(),
            minter_sig: late_minter_sig,
        };
        assert!(!minter_is_valid(
            &rig.public.vk_cb,
            &rig.registry,
            rig.bank.vs(),
            &payload
        ));
        let idx = rig.board.post(payload, PartyId::Bank(0)).unwrap();
        rig.bank.sync(&rig.board).unwrap();
        assert!(rig.bank.vs().token(idx).is_none());
    }

    #[test]
    fn honest_user_rescues_their_forged_token() {
        let mut rig = rig(78, 2, 1);
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        // one honest transfer fills the quota, a fabricated token breaches it
        let honest_idx = transfer(&mut rig, tokens[0], &mut user);
        let accomplice = keygen::<G, _>(&mut rig.rng);
        let payee = keygen::<G, _>(&mut rig.rng);
        let (minter_sig, _) =
            mint_unchecked(&accomplice.vk.to_bytes(), &mut rig.minter, &mut rig.rng).unwrap();
        let sender_sig = sign(&accomplice, &payee.vk.to_bytes(), &mut rig.rng);
        rig.board
            .post(
                Payload::MintedToken {
                    sender_vk: accomplice.vk.clone(),
                    receiver_vk: payee.vk.clone(),
                    sender_sig,
                    minter_vk: rig.minter.vk().clone(),
                    minter_sig,
                },
                PartyId::Bank(0),
            )
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();
        assert_eq!(
            rig.bank.vs().token(honest_idx).unwrap().status,
            TokenStatus::Forged
        );

        // the bank still holds the burn secret and can rescue
        let rescue = rig.bank.rescue_proof(honest_idx, 1, &mut rig.rng).unwrap();
        rig.board.post(rescue, PartyId::Bank(0)).unwrap();
        rig.bank.sync(&rig.board).unwrap();
        assert_eq!(
            rig.bank.vs().token(honest_idx).unwrap().status,
            TokenStatus::Rescued
        );
    }

    #[test]
    fn rescue_open_reveals_the_link_but_works() {
        let mut rig = rig(79, 2, 1);
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        let honest_idx = transfer(&mut rig, tokens[0], &mut user);
        let accomplice = keygen::<G, _>(&mut rig.rng);
        let payee = keygen::<G, _>(&mut rig.rng);
        let (minter_sig, _) =
            mint_unchecked(&accomplice.vk.to_bytes(), &mut rig.minter, &mut rig.rng).unwrap();
        let sender_sig = sign(&accomplice, &payee.vk.to_bytes(), &mut rig.rng);
        rig.board
            .post(
                Payload::MintedToken {
                    sender_vk: accomplice.vk.clone(),
                    receiver_vk: payee.vk.clone(),
                    sender_sig,
                    minter_vk: rig.minter.vk().clone(),
                    minter_sig,
                },
                PartyId::Bank(0),
            )
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();

        let open = rig.bank.rescue_open(honest_idx).unwrap();
        // the opening names the exact burn record: linkability by choice
        let Payload::RescueOpen { burn_index, .. } = &open else {
            panic!("expected opening");
        };
        assert_eq!(
            rig.bank.vs().burn_record(*burn_index).unwrap().token_index,
            tokens[0]
        );
        rig.board.post(open, PartyId::Bank(0)).unwrap();
        rig.bank.sync(&rig.board).unwrap();
        assert_eq!(
            rig.bank.vs().token(honest_idx).unwrap().status,
            TokenStatus::Rescued
        );
    }

    #[test]
    fn accomplice_cannot_rescue_a_fabricated_token() {
        let mut rig = rig(80, 2, 1);
        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        transfer(&mut rig, tokens[0], &mut user);
        let accomplice = keygen::<G, _>(&mut rig.rng);
        let payee = keygen::<G, _>(&mut rig.rng);
        let (minter_sig, _) =
            mint_unchecked(&accomplice.vk.to_bytes(), &mut rig.minter, &mut rig.rng).unwrap();
        let sender_sig = sign(&accomplice, &payee.vk.to_bytes(), &mut rig.rng);
        let forged_idx = rig
            .board
            .post(
                Payload::MintedToken {
                    sender_vk: accomplice.vk.clone(),
                    receiver_vk: payee.vk.clone(),
                    sender_sig,
                    minter_vk: rig.minter.vk().clone(),
                    minter_sig,
                },
                PartyId::Bank(0),
            )
            .unwrap();
        rig.bank.sync(&rig.board).unwrap();

        // the accomplice holds no burn secret whose key matches
        assert_eq!(
            rig.bank.rescue_proof(forged_idx, 1, &mut rig.rng).unwrap_err(),
            MinterError::NoRescuableBurn
        );
    }

    #[test]
    fn registry_and_report_files_have_stable_shape() {
        let mut rig = rig(81, 1, 3);
        let text = rig.registry.to_file_string();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains(&hex::encode(rig.minter.vk().to_bytes())));

        let mut user = PartyState::user_init(PartyId::User(0), &rig.public, &rig.board).unwrap();
        let tokens = rig.bank.owned_tokens();
        transfer(&mut rig, tokens[0], &mut user);
        let report = accountability_audit(&rig.board, &ctx(&rig.public), &rig.registry);
        let text = report.to_file_string();
        assert!(text.contains("count=1 quota=3 flagged=false"));
    }
}
