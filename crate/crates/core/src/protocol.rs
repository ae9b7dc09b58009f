// SPDX-License-Identifier: Apache-2.0

//! Party state machines: central-bank setup, burning, spending and payment
//! validation.
//!
//! The central bank exists only during setup; afterwards its secrets are
//! erased and every operation runs against the board alone. Each party keeps
//! a validity set plus exactly the secrets it currently needs: receiver keys
//! for tokens it owns and burn secrets for tokens it has burnt but not yet
//! respent. [`PartyState::purge_spent`] erases a spend's witness material,
//! which is what makes transactions independent: a party's serialized state
//! after the purge shares no bytes with the spent token's history.

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng, RngCore};
use std::collections::BTreeMap;

use crate::crypto::{commit_random, keygen, sign, Group};
use crate::ledger::{
    BulletinBoard, Entry, FsMode, LedgerError, PartyId, Payload, TokenStatus, ValidSet,
    ValidationCtx,
};
use crate::orproof::{self, crs_gen, OrProofError};
use crate::{Crs, KeyPair, OrStatement, OrWitness, ProtocolGroup, Scalar, VerificationKey};

type G = ProtocolGroup;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("setup already executed")]
    SetupAlreadyRun,
    #[error("missing bank keys for banks {0:?}")]
    MissingBankKeys(Vec<u32>),
    #[error("crs not found")]
    CrsNotFound,
    #[error("no receiver key")]
    NoReceiverKey,
    #[error("already burnt")]
    AlreadyBurnt,
    #[error("bucket too large")]
    BucketTooLarge,
    #[error("not burner")]
    NotBurner,
    #[error("own burn not certified yet")]
    BurnNotCertified,
    #[error("still pending")]
    StillPending,
    #[error("party has not ingested that entry yet")]
    NotSynced,
    #[error("receiver key was not generated by this party")]
    UnknownReceiverKey,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Proof(#[from] OrProofError),
}

/// Everything the central bank distributes out of band at setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbPublic {
    pub vk_cb: Vec<VerificationKey>,
    pub vk_crs: VerificationKey,
    pub crs: Crs,
}

/// The issuer. Holds secrets only between `new` and `setup`.
#[derive(Debug, Default)]
pub struct CentralBank {
    executed: bool,
}

impl CentralBank {
    pub fn new() -> Self {
        CentralBank::default()
    }

    /// Runs the one-shot setup: posts the signed crs and one signed genesis
    /// token per (bank, i), then erases all signing material.
    ///
    /// `bank_keys` are the τ receiver keys each bank sent in beforehand.
    pub fn setup<R: RngCore + CryptoRng>(
        &mut self,
        expected_banks: &[u32],
        bank_keys: &BTreeMap<u32, Vec<VerificationKey>>,
        tau: u32,
        crs_seed: &[u8],
        board: &mut BulletinBoard,
        rng: &mut R,
    ) -> Result<CbPublic, ProtocolError> {
        if self.executed {
            return Err(ProtocolError::SetupAlreadyRun);
        }
        let absent: Vec<u32> = expected_banks
            .iter()
            .filter(|b| bank_keys.get(b).map(|ks| ks.len() as u32) != Some(tau))
            .copied()
            .collect();
        if !absent.is_empty() {
            return Err(ProtocolError::MissingBankKeys(absent));
        }
        self.executed = true;

        let crs: Crs = crs_gen(crs_seed);
        let crs_keypair = keygen::<G, _>(rng);
        let crs_sig = sign(&crs_keypair, &crs.to_bytes(), rng);
        board.post(
            Payload::CrsPost {
                crs: crs.clone(),
                sig: crs_sig,
            },
            PartyId::CentralBank,
        )?;

        let mut vk_cb = Vec::new();
        for bank in expected_banks {
            for bank_vk in &bank_keys[bank] {
                let token_keypair = keygen::<G, _>(rng);
                let sig = sign(&token_keypair, &bank_vk.to_bytes(), rng);
                board.post(
                    Payload::GenesisToken {
                        cb_vk: token_keypair.vk.clone(),
                        bank_vk: bank_vk.clone(),
                        sig,
                    },
                    PartyId::CentralBank,
                )?;
                vk_cb.push(token_keypair.vk);
                // token_keypair.sk dropped here; the issuer keeps nothing
            }
        }

        Ok(CbPublic {
            vk_cb,
            vk_crs: crs_keypair.vk,
            crs,
        })
    }
}

/// Secrets held between burning a token and completing its respend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurnSecret {
    pub next_keypair: KeyPair,
    pub randomness: Scalar,
    pub burnt_index: u64,
}

/// Per-user protocol state.
#[derive(Debug, Clone)]
pub struct PartyState {
    pub(crate) id: PartyId,
    pub(crate) vk_cb: Vec<VerificationKey>,
    pub(crate) vk_crs: VerificationKey,
    pub(crate) crs: Crs,
    pub(crate) vs: ValidSet,
    pub(crate) owned: BTreeMap<u64, KeyPair>,
    pub(crate) pending_recv: BTreeMap<Vec<u8>, KeyPair>,
    pub(crate) pending: BTreeMap<u64, BurnSecret>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    InvalidToken,
    WrongReceiverKey,
    Denied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaymentDecision {
    Accepted,
    Rejected(RejectReason),
}

impl PartyState {
    /// Joins the system: verifies the posted crs under `vk_crs` and folds the
    /// whole board prefix into a fresh validity set.
    pub fn user_init(
        id: PartyId,
        public: &CbPublic,
        board: &BulletinBoard,
    ) -> Result<PartyState, ProtocolError> {
        let mut state = PartyState {
            id,
            vk_cb: public.vk_cb.clone(),
            vk_crs: public.vk_crs.clone(),
            crs: public.crs.clone(),
            vs: ValidSet::new(),
            owned: BTreeMap::new(),
            pending_recv: BTreeMap::new(),
            pending: BTreeMap::new(),
        };
        state.sync(board)?;
        if state.vs.crs().is_none() {
            return Err(ProtocolError::CrsNotFound);
        }
        Ok(state)
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn vs(&self) -> &ValidSet {
        &self.vs
    }

    pub fn owned_tokens(&self) -> Vec<u64> {
        self.owned.keys().copied().collect()
    }

    pub fn pending_burns(&self) -> Vec<u64> {
        self.pending.keys().copied().collect()
    }

    pub fn burn_secret(&self, burnt_index: u64) -> Option<&BurnSecret> {
        self.pending.get(&burnt_index)
    }

    /// Registers a receiver keypair generated out of band (the genesis keys a
    /// bank sent to the central bank before setup).
    pub fn register_receiver_key(&mut self, keypair: KeyPair) {
        self.pending_recv.insert(keypair.vk.to_bytes(), keypair);
    }

    /// Ingests every board entry this party has not seen, in order.
    pub fn sync(&mut self, board: &BulletinBoard) -> Result<(), ProtocolError> {
        self.sync_with(board, FsMode::Standard)
    }

    /// Ingest with an explicit Fiat-Shamir mode; hybrid harnesses run
    /// validators against the programmable oracle.
    pub fn sync_with(&mut self, board: &BulletinBoard, fs: FsMode<'_>) -> Result<(), ProtocolError> {
        let ctx = ValidationCtx {
            vk_cb: &self.vk_cb,
            vk_crs: &self.vk_crs,
            fs,
        };
        for entry in &board.entries()[self.vs.next_index() as usize..] {
            self.vs.ingest(entry, &ctx)?;
        }
        Ok(())
    }

    /// Burns an owned live token: commits to a fresh sender key and posts the
    /// receiver-certified burn record through `bank`.
    pub fn burn<R: RngCore + CryptoRng>(
        &mut self,
        token_index: u64,
        board: &mut BulletinBoard,
        bank: PartyId,
        rng: &mut R,
    ) -> Result<u64, ProtocolError> {
        self.burn_committing(token_index, None, board, bank, rng)
    }

    /// Burn with an explicit committed message override; `None` commits the
    /// fresh sender key (the honest protocol). Hybrid traces pass
    /// `Some(zero)` to rewrite burning factors while re-signing honestly.
    pub(crate) fn burn_committing<R: RngCore + CryptoRng>(
        &mut self,
        token_index: u64,
        commit_msg: Option<&[u8]>,
        board: &mut BulletinBoard,
        bank: PartyId,
        rng: &mut R,
    ) -> Result<u64, ProtocolError> {
        let owner = self
            .owned
            .get(&token_index)
            .ok_or(ProtocolError::NoReceiverKey)?
            .clone();
        if self.vs.is_burnt(token_index) {
            return Err(ProtocolError::AlreadyBurnt);
        }
        let token = self
            .vs
            .token(token_index)
            .ok_or(ProtocolError::NoReceiverKey)?;

        let next_keypair = keygen::<G, _>(rng);
        let next_vk_bytes = next_keypair.vk.to_bytes();
        let msg_bytes = commit_msg.unwrap_or(&next_vk_bytes);
        let (factor, randomness) = commit_random(&self.crs.params, msg_bytes, rng);

        let mut burn_msg = token.sender_vk.to_bytes();
        burn_msg.extend_from_slice(&factor.to_bytes());
        let receiver_sig = sign(&owner, &burn_msg, rng);

        let record_index = board.post(
            Payload::BurnRecord {
                token_index,
                factor,
                receiver_sig,
            },
            bank,
        )?;
        self.pending.insert(
            token_index,
            BurnSecret {
                next_keypair,
                randomness,
                burnt_index: token_index,
            },
        );
        Ok(record_index)
    }

    /// Fresh receiver key for an incoming payment; the signing key is held
    /// until the payment is validated.
    pub fn receiver_keygen<R: RngCore + CryptoRng>(&mut self, rng: &mut R) -> VerificationKey {
        let keypair = keygen::<G, _>(rng);
        let vk = keypair.vk.clone();
        self.register_receiver_key(keypair);
        vk
    }

    fn spend_draft<R: Rng + CryptoRng>(
        &self,
        burnt_index: u64,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<u64>, OrStatement, OrWitness, &BurnSecret), ProtocolError> {
        let secret = self
            .pending
            .get(&burnt_index)
            .ok_or(ProtocolError::NotBurner)?;
        let own_record = self
            .vs
            .burn_of_token(burnt_index)
            .ok_or(ProtocolError::BurnNotCertified)?
            .record_index;
        let all_records: Vec<u64> = self.vs.certified_burns().iter().map(|(i, _)| *i).collect();
        if n == 0 || all_records.len() < n {
            return Err(ProtocolError::BucketTooLarge);
        }
        let others: Vec<u64> = all_records
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
        let stmt = OrStatement {
            betas,
            vk: secret.next_keypair.vk.clone(),
        };
        let wit = OrWitness {
            randomness: secret.randomness,
            index: bucket
                .iter()
                .position(|i| *i == own_record)
                .expect("own record in bucket"),
        };
        Ok((bucket, stmt, wit, secret))
    }

    /// Builds the candidate live token respending `burnt_index` to
    /// `receiver_vk` behind an anonymity bucket of size `n`.
    pub fn proof_gen<R: Rng + CryptoRng>(
        &mut self,
        burnt_index: u64,
        receiver_vk: &VerificationKey,
        n: usize,
        rng: &mut R,
    ) -> Result<Payload, ProtocolError> {
        let (bucket, stmt, wit, secret) = self.spend_draft(burnt_index, n, rng)?;
        let sender_sig = sign(&secret.next_keypair, &receiver_vk.to_bytes(), rng);
        let sender_vk = secret.next_keypair.vk.clone();
        let proof = orproof::prove(&self.crs, &stmt, &wit, rng)?;
        Ok(Payload::LiveToken {
            sender_vk,
            receiver_vk: receiver_vk.clone(),
            sender_sig,
            bucket,
            proof,
        })
    }

    /// Hybrid-trace spend: identical candidate shape, but the proof is
    /// simulated through the programmable oracle and no witness is consumed.
    #[cfg(any(test, feature = "sim-oracle"))]
    pub fn proof_gen_simulated<R: Rng + CryptoRng>(
        &mut self,
        burnt_index: u64,
        receiver_vk: &VerificationKey,
        n: usize,
        oracle: &crate::ProgrammableOracle,
        rng: &mut R,
    ) -> Result<Payload, ProtocolError> {
        let (bucket, stmt, _wit, secret) = self.spend_draft(burnt_index, n, rng)?;
        let sender_sig = sign(&secret.next_keypair, &receiver_vk.to_bytes(), rng);
        let sender_vk = secret.next_keypair.vk.clone();
        let proof = orproof::simulate(&self.crs, &stmt, oracle, rng)?;
        Ok(Payload::LiveToken {
            sender_vk,
            receiver_vk: receiver_vk.clone(),
            sender_sig,
            bucket,
            proof,
        })
    }

    /// Accepts the payment at `entry` iff the token is valid in this party's
    /// view and pays the key this party handed out. On acceptance the token
    /// joins the owned set.
    pub fn validate_payment(
        &mut self,
        entry: &Entry,
        expected_receiver_vk: &VerificationKey,
    ) -> Result<PaymentDecision, ProtocolError> {
        if entry.index >= self.vs.next_index() {
            return Err(ProtocolError::NotSynced);
        }
        let Some(token) = self.vs.token(entry.index) else {
            return Ok(PaymentDecision::Rejected(RejectReason::InvalidToken));
        };
        if token.status != TokenStatus::Ok && token.status != TokenStatus::Rescued {
            return Ok(PaymentDecision::Rejected(RejectReason::InvalidToken));
        }
        if &token.receiver_vk != expected_receiver_vk {
            return Ok(PaymentDecision::Rejected(RejectReason::WrongReceiverKey));
        }
        let keypair = self
            .pending_recv
            .remove(&expected_receiver_vk.to_bytes())
            .ok_or(ProtocolError::UnknownReceiverKey)?;
        self.owned.insert(entry.index, keypair);
        Ok(PaymentDecision::Accepted)
    }

    /// Erases a completed spend's witness material: the burn secret and the
    /// consumed receiver key. Fails while the reissued token has not landed.
    pub fn purge_spent(&mut self, burnt_index: u64) -> Result<(), ProtocolError> {
        let secret = self
            .pending
            .get(&burnt_index)
            .ok_or(ProtocolError::NotBurner)?;
        let respent = self.vs.tokens().any(|t| {
            t.status.counts() && t.index != burnt_index && t.sender_vk == secret.next_keypair.vk
        });
        if !respent {
            return Err(ProtocolError::StillPending);
        }
        self.pending.remove(&burnt_index);
        self.owned.remove(&burnt_index);
        Ok(())
    }

    /// Full serialized state, the haystack the independence byte-scan runs
    /// over. Includes every secret currently held.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.id.to_string().into_bytes());
        for (idx, kp) in &self.owned {
            out.extend_from_slice(&idx.to_le_bytes());
            out.extend_from_slice(&kp.vk.to_bytes());
            out.extend_from_slice(&<G as Group>::scalar_to_bytes(&kp.sk.0));
        }
        for (vk, kp) in &self.pending_recv {
            out.extend_from_slice(vk);
            out.extend_from_slice(&<G as Group>::scalar_to_bytes(&kp.sk.0));
        }
        for (idx, secret) in &self.pending {
            out.extend_from_slice(&idx.to_le_bytes());
            out.extend_from_slice(&secret.next_keypair.vk.to_bytes());
            out.extend_from_slice(&<G as Group>::scalar_to_bytes(&secret.next_keypair.sk.0));
            out.extend_from_slice(&<G as Group>::scalar_to_bytes(&secret.randomness));
        }
        out.extend_from_slice(&self.vs.canonical_bytes());
        out
    }
}

/// Regulation check applied by a bank before posting. The protocol leaves its
/// semantics open; accept-all is the default.
pub trait Policy {
    fn check(&mut self, bank: PartyId, candidate: &Payload, board: &BulletinBoard) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl Policy for AcceptAll {
    fn check(&mut self, _: PartyId, _: &Payload, _: &BulletinBoard) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DenyAll;

impl Policy for DenyAll {
    fn check(&mut self, _: PartyId, _: &Payload, _: &BulletinBoard) -> bool {
        false
    }
}

/// At most `limit` token posts per sender bank per run.
#[derive(Debug, Clone, Default)]
pub struct MaxPostsPerBank {
    pub limit: u32,
    counts: BTreeMap<PartyId, u32>,
}

impl MaxPostsPerBank {
    pub fn new(limit: u32) -> Self {
        MaxPostsPerBank {
            limit,
            counts: BTreeMap::new(),
        }
    }
}

impl Policy for MaxPostsPerBank {
    fn check(&mut self, bank: PartyId, _: &Payload, _: &BulletinBoard) -> bool {
        let count = self.counts.entry(bank).or_insert(0);
        if *count >= self.limit {
            return false;
        }
        *count += 1;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostOutcome {
    Posted(u64),
    Denied,
}

/// The bank-side token post: run the regulation policy, then post or return
/// the denial for the sender to forward.
pub fn bank_post<P: Policy + ?Sized>(
    board: &mut BulletinBoard,
    candidate: Payload,
    policy: &mut P,
    bank: PartyId,
) -> Result<PostOutcome, LedgerError> {
    if !policy.check(bank, &candidate, board) {
        return Ok(PostOutcome::Denied);
    }
    Ok(PostOutcome::Posted(board.post(candidate, bank)?))
}
