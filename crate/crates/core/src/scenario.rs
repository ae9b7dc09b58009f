// SPDX-License-Identifier: Apache-2.0

//! Deterministic multi-party driver.
//!
//! A [`Sim`] owns the board, every party's state, the minters and the
//! policy, and executes a [`Schedule`] of burn/spend/attack actions. All
//! randomness is derived from the master seed, one stream per party, so the
//! same (config, seed) reproduces the same board byte for byte.
//!
//! Hybrid modes rewrite what honest parties put on the board: simulated
//! proofs in place of honest ones, zero commitments in place of committed
//! sender keys. Rewritten traces only validate against the programmable
//! oracle, so everything except [`HybridMode::Honest`] needs the sim-oracle
//! feature.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

use crate::crypto::{keygen, sign, Group};
use crate::ledger::{
    export_log, BulletinBoard, FsMode, LogSummary, PartyId, Payload, TokenStatus, ValidSet,
    ValidationCtx,
};
use crate::minter::{
    accountability_audit, mint, mint_unchecked, AuditReport, MintRegistry, MinterError,
    MinterState,
};
use crate::protocol::{
    bank_post, AcceptAll, CbPublic, CentralBank, PartyState, PaymentDecision, Policy, PostOutcome,
    ProtocolError,
};
use crate::{KeyPair, ProtocolGroup, VerificationKey};

type G = ProtocolGroup;

/// Message committed by rewritten burning factors in the zero-commitment
/// hybrids.
pub const ZERO_COMMIT_MSG: [u8; 32] = [0u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("no such party: {0}")]
    UnknownParty(PartyId),
    #[error("party owns no live token")]
    NothingToBurn,
    #[error("party has no pending burn to spend")]
    NothingToSpend,
    #[error("oracle unavailable")]
    OracleUnavailable,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Minter(#[from] MinterError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    PiDc,
    Minter,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::PiDc => "pi-dc",
            Variant::Minter => "minter",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "pi-dc" => Some(Variant::PiDc),
            "minter" => Some(Variant::Minter),
            _ => None,
        }
    }
}

/// Trace rewriting applied to honest parties, mirroring the hybrid chain of
/// the indistinguishability argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HybridMode {
    #[default]
    Honest,
    SimProofs,
    ZeroCommitments,
    Both,
}

impl HybridMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HybridMode::Honest => "honest",
            HybridMode::SimProofs => "sim-proofs",
            HybridMode::ZeroCommitments => "zero-commitments",
            HybridMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<HybridMode> {
        match s {
            "honest" => Some(HybridMode::Honest),
            "sim-proofs" => Some(HybridMode::SimProofs),
            "zero-commitments" => Some(HybridMode::ZeroCommitments),
            "both" => Some(HybridMode::Both),
            _ => None,
        }
    }

    fn rewrites_burns(&self) -> bool {
        matches!(self, HybridMode::ZeroCommitments | HybridMode::Both)
    }

    fn rewrites_proofs(&self) -> bool {
        // a spend whose burning factor was zeroed has no witness left, so
        // every non-honest mode simulates proofs
        !matches!(self, HybridMode::Honest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub banks: u32,
    pub users: u32,
    pub tau: u32,
    pub bucket: usize,
    pub variant: Variant,
    pub minters: u32,
    pub quota: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            banks: 2,
            users: 8,
            tau: 4,
            bucket: 4,
            variant: Variant::PiDc,
            minters: 1,
            quota: 64,
        }
    }
}

impl SimConfig {
    pub fn genesis_count(&self) -> u64 {
        self.banks as u64 * self.tau as u64
    }
}

/// One step of a run. `token: None` means the party's oldest live owned
/// token; a spend always consumes the sender's oldest pending burn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Burn {
        party: PartyId,
        token: Option<u64>,
    },
    Spend {
        sender: PartyId,
        receiver: PartyId,
        bucket: usize,
    },
    /// Adversarial minter fabricates a token from scratch for an accomplice.
    ForgeMint {
        minter: u32,
    },
    /// Every party rescues every forged token it can still prove; `open`
    /// trades privacy for a direct opening.
    RescueAll {
        open: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub actions: Vec<Action>,
}

/// Witness material of one completed spend, captured for the independence
/// scan before any purge happens.
#[derive(Debug, Clone)]
pub struct SpendTrace {
    pub spender: PartyId,
    pub burnt_token: u64,
    pub new_token: u64,
    pub witness_chunks: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReport {
    pub attempted: u64,
    pub accepted: u64,
    pub setup_len: u64,
    pub balance_per_prefix: Vec<u64>,
    pub final_live: u64,
    pub final_balance: u64,
    pub expected: u64,
}

impl TraceReport {
    /// Balance holds at the genesis count on every prefix from the end of
    /// setup onward.
    pub fn balance_invariant_holds(&self) -> bool {
        self.balance_per_prefix[self.setup_len as usize - 1..]
            .iter()
            .all(|b| *b == self.expected)
    }
}

impl TraceReport {
    /// Stable line format consumed by the run report file.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "transfers attempted={} accepted={}\n",
            self.attempted, self.accepted
        ));
        for (i, balance) in self.balance_per_prefix.iter().enumerate() {
            out.push_str(&format!("prefix {} balance={}\n", i + 1, balance));
        }
        out.push_str(&format!(
            "final live={} balance={} expected={}\n",
            self.final_live, self.final_balance, self.expected
        ));
        out
    }
}

pub fn derive_rng(master: u64, tag: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"pidc/rng");
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

pub struct Sim {
    pub cfg: SimConfig,
    pub board: BulletinBoard,
    pub public: CbPublic,
    parties: BTreeMap<PartyId, PartyState>,
    minters: Vec<MinterState>,
    pub registry: MintRegistry,
    policy: Box<dyn Policy>,
    rngs: BTreeMap<PartyId, ChaCha20Rng>,
    attack_rng: ChaCha20Rng,
    mode: HybridMode,
    #[cfg(any(test, feature = "sim-oracle"))]
    oracle: Option<crate::ProgrammableOracle>,
    purge_enabled: bool,
    /// chain (genesis index) each token continues; ground truth kept by the
    /// driver, mirrored into the registry for minted tokens
    chain_of_token: BTreeMap<u64, u64>,
    /// indices of tokens created through sanctioned transfers (plus genesis)
    pub legitimate: BTreeSet<u64>,
    /// board length right after setup; balance is constant from here on
    pub setup_len: u64,
    pub attempted: u64,
    pub accepted: u64,
    pub spends: Vec<SpendTrace>,
}

impl Sim {
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Sim, SimError> {
        Sim::build(cfg, seed, HybridMode::Honest, true, false)
    }

    /// Disables the per-spend purge; the negative control of the
    /// independence check.
    pub fn new_without_purge(cfg: SimConfig, seed: u64) -> Result<Sim, SimError> {
        Sim::build(cfg, seed, HybridMode::Honest, false, false)
    }

    /// Runs honest parties under a trace-rewriting hybrid. Needs the
    /// programmable oracle for every mode except `Honest`.
    pub fn new_hybrid(cfg: SimConfig, seed: u64, mode: HybridMode) -> Result<Sim, SimError> {
        Sim::build(cfg, seed, mode, true, false)
    }

    /// Honest behavior, but validators consult a programmable oracle: the
    /// backdoor the negative-control games forge through.
    #[cfg(any(test, feature = "sim-oracle"))]
    pub fn new_with_oracle(cfg: SimConfig, seed: u64) -> Result<Sim, SimError> {
        Sim::build(cfg, seed, HybridMode::Honest, true, true)
    }

    fn build(
        cfg: SimConfig,
        seed: u64,
        mode: HybridMode,
        purge_enabled: bool,
        oracle_backdoor: bool,
    ) -> Result<Sim, SimError> {
        #[cfg(not(any(test, feature = "sim-oracle")))]
        if mode != HybridMode::Honest || oracle_backdoor {
            return Err(SimError::OracleUnavailable);
        }
        if cfg.banks == 0 {
            return Err(SimError::Infeasible("at least one bank".into()));
        }
        let mut board = BulletinBoard::new();
        let mut cb_rng = derive_rng(seed, "cb");

        // banks pre-generate their genesis receiver keys
        let mut rngs = BTreeMap::new();
        let mut bank_keys: BTreeMap<u32, Vec<VerificationKey>> = BTreeMap::new();
        let mut bank_keypairs: BTreeMap<u32, Vec<KeyPair>> = BTreeMap::new();
        for b in 0..cfg.banks {
            let id = PartyId::Bank(b);
            let mut rng = derive_rng(seed, &id.to_string());
            let keys: Vec<KeyPair> = (0..cfg.tau).map(|_| keygen::<G, _>(&mut rng)).collect();
            bank_keys.insert(b, keys.iter().map(|k| k.vk.clone()).collect());
            bank_keypairs.insert(b, keys);
            rngs.insert(id, rng);
        }
        for u in 0..cfg.users {
            let id = PartyId::User(u);
            rngs.insert(id, derive_rng(seed, &id.to_string()));
        }

        let banks: Vec<u32> = (0..cfg.banks).collect();
        let mut cb = CentralBank::new();
        let crs_seed = Sha256::digest(seed.to_le_bytes());
        let public = cb.setup(&banks, &bank_keys, cfg.tau, &crs_seed, &mut board, &mut cb_rng)?;

        // minter registration and chain assignment, round robin over minters
        let mut minters = Vec::new();
        let mut registry = MintRegistry::new();
        if cfg.variant == Variant::Minter {
            if cfg.minters == 0 {
                return Err(SimError::Infeasible("minter variant needs minters".into()));
            }
            for _ in 0..cfg.minters {
                let minter = MinterState::new(keygen::<G, _>(&mut cb_rng), cfg.quota);
                board.post(
                    Payload::MinterKey {
                        minter_vk: minter.vk().clone(),
                        quota: cfg.quota,
                    },
                    PartyId::CentralBank,
                )?;
                minters.push(minter);
            }
        }

        let mut chain_of_token = BTreeMap::new();
        let mut legitimate = BTreeSet::new();
        let mut parties = BTreeMap::new();
        for &id in rngs.keys() {
            let mut party = PartyState::user_init(id, &public, &board)?;
            if let PartyId::Bank(b) = id {
                for kp in bank_keypairs.remove(&b).into_iter().flatten() {
                    party.register_receiver_key(kp);
                }
            }
            parties.insert(id, party);
        }
        // banks claim their genesis tokens; chains start at genesis indices
        for entry in board.read() {
            let Payload::GenesisToken { bank_vk, .. } = &entry.payload else {
                continue;
            };
            let expected = bank_vk.clone();
            for party in parties.values_mut() {
                if matches!(party.id(), PartyId::Bank(_))
                    && party.validate_payment(&entry, &expected).ok()
                        == Some(PaymentDecision::Accepted)
                {
                    break;
                }
            }
            chain_of_token.insert(entry.index, entry.index);
            legitimate.insert(entry.index);
            if cfg.variant == Variant::Minter {
                let minter_idx = (entry.index as usize) % minters.len().max(1);
                registry.assign_chain(entry.index, minters[minter_idx].vk(), cfg.quota);
            }
        }

        let setup_len = board.len();
        Ok(Sim {
            cfg,
            board,
            public,
            parties,
            minters,
            registry,
            policy: Box::new(AcceptAll),
            attack_rng: derive_rng(seed, "attack"),
            rngs,
            mode,
            #[cfg(any(test, feature = "sim-oracle"))]
            oracle: (mode != HybridMode::Honest || oracle_backdoor)
                .then(crate::ProgrammableOracle::new),
            purge_enabled,
            chain_of_token,
            legitimate,
            setup_len,
            attempted: 0,
            accepted: 0,
            spends: Vec::new(),
        })
    }

    pub fn set_policy(&mut self, policy: Box<dyn Policy>) {
        self.policy = policy;
    }

    pub fn mode(&self) -> HybridMode {
        self.mode
    }

    #[cfg(any(test, feature = "sim-oracle"))]
    pub fn oracle(&self) -> Option<&crate::ProgrammableOracle> {
        self.oracle.as_ref()
    }

    pub fn party(&self, id: PartyId) -> Option<&PartyState> {
        self.parties.get(&id)
    }

    pub fn party_mut(&mut self, id: PartyId) -> Option<&mut PartyState> {
        self.parties.get_mut(&id)
    }

    pub fn parties(&self) -> impl Iterator<Item = &PartyState> {
        self.parties.values()
    }

    pub fn minter(&mut self, idx: u32) -> Option<&mut MinterState> {
        self.minters.get_mut(idx as usize)
    }

    fn fs_mode(&self) -> FsMode<'_> {
        #[cfg(any(test, feature = "sim-oracle"))]
        if let Some(oracle) = self.oracle.as_ref() {
            return FsMode::Oracle(oracle);
        }
        FsMode::Standard
    }

    /// The bank that posts for a party.
    pub fn bank_of(&self, id: PartyId) -> PartyId {
        match id {
            PartyId::CentralBank => PartyId::CentralBank,
            PartyId::Bank(b) => PartyId::Bank(b),
            PartyId::User(u) => PartyId::Bank(u % self.cfg.banks),
        }
    }

    /// Delivers all new board entries to every party, in order.
    pub fn sync_all(&mut self) -> Result<(), SimError> {
        #[cfg(any(test, feature = "sim-oracle"))]
        let oracle = self.oracle.as_ref();
        for party in self.parties.values_mut() {
            #[cfg(any(test, feature = "sim-oracle"))]
            match oracle {
                Some(o) => party.sync_with(&self.board, FsMode::Oracle(o))?,
                None => party.sync(&self.board)?,
            }
            #[cfg(not(any(test, feature = "sim-oracle")))]
            party.sync(&self.board)?;
        }
        Ok(())
    }

    fn oldest_live_owned(&self, id: PartyId) -> Option<u64> {
        let party = self.parties.get(&id)?;
        party
            .owned_tokens()
            .into_iter()
            .find(|t| !party.vs().is_burnt(*t))
    }

    fn oldest_pending(&self, id: PartyId) -> Option<u64> {
        // skip burn secrets whose respend already landed; without purging
        // they stay in the pending map
        let party = self.parties.get(&id)?;
        party.pending_burns().into_iter().find(|b| {
            party.burn_secret(*b).is_some_and(|secret| {
                !party
                    .vs()
                    .tokens()
                    .any(|t| t.index != *b && t.sender_vk == secret.next_keypair.vk)
            })
        })
    }

    pub fn execute(&mut self, action: &Action) -> Result<(), SimError> {
        match action {
            Action::Burn { party, token } => self.do_burn(*party, *token),
            Action::Spend {
                sender,
                receiver,
                bucket,
            } => self.do_spend(*sender, *receiver, *bucket),
            Action::ForgeMint { minter } => self.do_forge_mint(*minter),
            Action::RescueAll { open } => self.do_rescue_all(*open),
        }
    }

    pub fn run(&mut self, schedule: &Schedule) -> Result<TraceReport, SimError> {
        for action in &schedule.actions {
            self.execute(action)?;
        }
        Ok(self.report())
    }

    fn do_burn(&mut self, id: PartyId, token: Option<u64>) -> Result<(), SimError> {
        let token = token
            .or_else(|| self.oldest_live_owned(id))
            .ok_or(SimError::NothingToBurn)?;
        let bank = self.bank_of(id);
        let rewrite = self.mode.rewrites_burns();
        let party = self.parties.get_mut(&id).ok_or(SimError::UnknownParty(id))?;
        let rng = self.rngs.get_mut(&id).expect("rng per party");
        if rewrite {
            party.burn_committing(token, Some(&ZERO_COMMIT_MSG), &mut self.board, bank, rng)?;
        } else {
            party.burn(token, &mut self.board, bank, rng)?;
        }
        self.sync_all()
    }

    fn do_spend(&mut self, sender: PartyId, receiver: PartyId, bucket: usize) -> Result<(), SimError> {
        let burnt = self
            .oldest_pending(sender)
            .ok_or(SimError::NothingToSpend)?;
        self.attempted += 1;

        // receiver hands a fresh key to the sender
        let receiver_vk = {
            let rng = self.rngs.get_mut(&receiver).expect("rng per party");
            self.parties
                .get_mut(&receiver)
                .ok_or(SimError::UnknownParty(receiver))?
                .receiver_keygen(rng)
        };

        // capture witness material before it is purged
        let (witness_chunks, sender_vk_new) = {
            let party = self.parties.get(&sender).ok_or(SimError::UnknownParty(sender))?;
            let secret = party
                .burn_secret(burnt)
                .ok_or(SimError::NothingToSpend)?;
            let mut chunks = vec![
                <G as Group>::scalar_to_bytes(&secret.randomness),
                <G as Group>::scalar_to_bytes(&secret.next_keypair.sk.0),
            ];
            if let Some(consumed) = party.consumed_sk_bytes(burnt) {
                chunks.push(consumed);
            }
            (chunks, secret.next_keypair.vk.clone())
        };

        let candidate = match self.cfg.variant {
            Variant::PiDc => {
                let party = self.parties.get_mut(&sender).expect("checked");
                let rng = self.rngs.get_mut(&sender).expect("rng per party");
                if self.mode.rewrites_proofs() {
                    #[cfg(any(test, feature = "sim-oracle"))]
                    {
                        let oracle =
                            self.oracle.as_ref().ok_or(SimError::OracleUnavailable)?;
                        party.proof_gen_simulated(burnt, &receiver_vk, bucket, oracle, rng)?
                    }
                    #[cfg(not(any(test, feature = "sim-oracle")))]
                    return Err(SimError::OracleUnavailable);
                } else {
                    party.proof_gen(burnt, &receiver_vk, bucket, rng)?
                }
            }
            Variant::Minter => {
                let chain = *self
                    .chain_of_token
                    .get(&burnt)
                    .ok_or(SimError::NothingToSpend)?;
                let minter_vk = self
                    .registry
                    .minter_of_chain(chain)
                    .ok_or_else(|| SimError::Infeasible("chain has no minter".into()))?;
                let minter = self
                    .minters
                    .iter_mut()
                    .find(|m| m.vk() == &minter_vk)
                    .ok_or_else(|| SimError::Infeasible("unknown minter".into()))?;
                let party = self.parties.get(&sender).expect("checked");
                let rng = self.rngs.get_mut(&sender).expect("rng per party");
                let (minter_sig, _) = mint(party, burnt, minter, rng)?;
                self.registry.record_chain(&sender_vk_new, chain);
                let party = self.parties.get_mut(&sender).expect("checked");
                party.minted_token_gen(burnt, &receiver_vk, &minter_vk, minter_sig, rng)?
            }
        };

        let bank = self.bank_of(sender);
        let outcome = bank_post(&mut self.board, candidate, self.policy.as_mut(), bank)?;
        let PostOutcome::Posted(idx) = outcome else {
            // denied by the bank; the sender forwards the denial
            return Ok(());
        };
        self.sync_all()?;

        let entry = self.board.entry(idx).expect("just posted").clone();
        let decision = self
            .parties
            .get_mut(&receiver)
            .expect("checked")
            .validate_payment(&entry, &receiver_vk)?;
        if decision != PaymentDecision::Accepted {
            return Ok(());
        }
        self.accepted += 1;
        self.legitimate.insert(idx);
        if let Some(chain) = self.chain_of_token.get(&burnt).copied() {
            self.chain_of_token.insert(idx, chain);
        }
        self.spends.push(SpendTrace {
            spender: sender,
            burnt_token: burnt,
            new_token: idx,
            witness_chunks,
        });
        if self.purge_enabled {
            self.parties
                .get_mut(&sender)
                .expect("checked")
                .purge_spent(burnt)?;
        }
        Ok(())
    }

    fn do_forge_mint(&mut self, minter_idx: u32) -> Result<(), SimError> {
        let minter = self
            .minters
            .get_mut(minter_idx as usize)
            .ok_or_else(|| SimError::Infeasible("no such minter".into()))?;
        let accomplice = keygen::<G, _>(&mut self.attack_rng);
        let payee = keygen::<G, _>(&mut self.attack_rng);
        let (minter_sig, _) =
            mint_unchecked(&accomplice.vk.to_bytes(), minter, &mut self.attack_rng)?;
        let sender_sig = sign(&accomplice, &payee.vk.to_bytes(), &mut self.attack_rng);
        let payload = Payload::MintedToken {
            sender_vk: accomplice.vk.clone(),
            receiver_vk: payee.vk.clone(),
            sender_sig,
            minter_vk: minter.vk().clone(),
            minter_sig,
        };
        self.board.post(payload, PartyId::Bank(0))?;
        self.sync_all()
    }

    fn do_rescue_all(&mut self, open: bool) -> Result<(), SimError> {
        let forged: Vec<(u64, VerificationKey)> = self
            .parties
            .values()
            .next()
            .map(|p| {
                p.vs()
                    .tokens()
                    .filter(|t| t.status == TokenStatus::Forged)
                    .map(|t| (t.index, t.sender_vk.clone()))
                    .collect()
            })
            .unwrap_or_default();
        for (token_index, _) in forged {
            let ids: Vec<PartyId> = self.parties.keys().copied().collect();
            for id in ids {
                let party = self.parties.get(&id).expect("iterating keys");
                let eligible = party.vs().certified_burns().len();
                if eligible == 0 {
                    continue;
                }
                let n = self.cfg.bucket.min(eligible).max(1);
                let rng = self.rngs.get_mut(&id).expect("rng per party");
                let rescue = if open {
                    party.rescue_open(token_index)
                } else {
                    party.rescue_proof(token_index, n, rng)
                };
                match rescue {
                    Ok(payload) => {
                        let bank = self.bank_of(id);
                        self.board.post(payload, bank)?;
                        self.sync_all()?;
                        break;
                    }
                    Err(MinterError::NoRescuableBurn) | Err(MinterError::NotForged) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(())
    }

    /// Fresh validator fold of the whole board under this run's Fiat-Shamir
    /// mode.
    pub fn validator_vs(&self) -> ValidSet {
        let ctx = ValidationCtx {
            vk_cb: &self.public.vk_cb,
            vk_crs: &self.public.vk_crs,
            fs: self.fs_mode(),
        };
        let mut vs = ValidSet::new();
        for entry in self.board.entries() {
            vs.ingest(entry, &ctx).expect("in-order fold");
        }
        vs
    }

    /// Balance (live plus pending burns) after every board prefix.
    pub fn balance_per_prefix(&self) -> Vec<u64> {
        let ctx = ValidationCtx {
            vk_cb: &self.public.vk_cb,
            vk_crs: &self.public.vk_crs,
            fs: self.fs_mode(),
        };
        let mut vs = ValidSet::new();
        let mut out = Vec::with_capacity(self.board.len() as usize);
        for entry in self.board.entries() {
            vs.ingest(entry, &ctx).expect("in-order fold");
            out.push(vs.balance());
        }
        out
    }

    pub fn report(&self) -> TraceReport {
        let vs = self.validator_vs();
        TraceReport {
            attempted: self.attempted,
            accepted: self.accepted,
            setup_len: self.setup_len,
            balance_per_prefix: self.balance_per_prefix(),
            final_live: vs.live_view().len() as u64,
            final_balance: vs.balance(),
            expected: self.cfg.genesis_count(),
        }
    }

    pub fn audit(&self) -> AuditReport {
        let ctx = ValidationCtx {
            vk_cb: &self.public.vk_cb,
            vk_crs: &self.public.vk_crs,
            fs: self.fs_mode(),
        };
        accountability_audit(&self.board, &ctx, &self.registry)
    }

    /// Board log with the summary a re-verifier must reproduce.
    pub fn export_log(&self) -> String {
        let vs = self.validator_vs();
        let summary = LogSummary {
            vs_digest: vs.canonical_digest(),
            live: vs.live_view().len() as u64,
            expected: self.cfg.genesis_count(),
            accepted: vs.tokens().map(|t| t.index).collect(),
        };
        export_log(&self.board, &summary)
    }
}

impl PartyState {
    /// Encoded signing key of the receiver key consumed by burning `token`,
    /// if still held.
    pub(crate) fn consumed_sk_bytes(&self, token: u64) -> Option<Vec<u8>> {
        self.owned
            .get(&token)
            .map(|kp| <G as Group>::scalar_to_bytes(&kp.sk.0))
    }
}

// ---------------------------------------------------------------------------
// schedule generation

/// Lightweight mirror of ownership used to generate feasible schedules
/// without running any cryptography.
struct Model {
    live_owned: BTreeMap<PartyId, u32>,
    pending: BTreeMap<PartyId, u32>,
    burns_total: usize,
}

/// Deterministically generates a feasible schedule: every burn has an owner,
/// every spend has a pending burn and a full bucket.
pub fn random_schedule(
    seed: u64,
    cfg: &SimConfig,
    transfers: u32,
) -> Result<Schedule, SimError> {
    use rand::Rng;
    let genesis = cfg.genesis_count() as usize;
    if cfg.bucket == 0 || cfg.bucket > genesis {
        return Err(SimError::Infeasible(format!(
            "bucket {} exceeds the {} possible burns before the first spend",
            cfg.bucket, genesis
        )));
    }
    let mut rng = derive_rng(seed, "schedule");
    let mut model = Model {
        live_owned: BTreeMap::new(),
        pending: BTreeMap::new(),
        burns_total: 0,
    };
    let mut parties: Vec<PartyId> = Vec::new();
    for b in 0..cfg.banks {
        parties.push(PartyId::Bank(b));
        model.live_owned.insert(PartyId::Bank(b), cfg.tau);
    }
    for u in 0..cfg.users {
        parties.push(PartyId::User(u));
    }

    let mut actions = Vec::new();
    let mut spends = 0u32;
    while spends < transfers {
        let burnable: Vec<PartyId> = parties
            .iter()
            .copied()
            .filter(|p| model.live_owned.get(p).copied().unwrap_or(0) > 0)
            .collect();
        let spendable: Vec<PartyId> = parties
            .iter()
            .copied()
            .filter(|p| model.pending.get(p).copied().unwrap_or(0) > 0)
            .collect();

        let must_burn = model.burns_total < cfg.bucket || spendable.is_empty();
        let want_burn = must_burn || (!burnable.is_empty() && rng.gen_bool(0.4));
        if want_burn && !burnable.is_empty() {
            let party = burnable[rng.gen_range(0..burnable.len())];
            *model.live_owned.get_mut(&party).unwrap() -= 1;
            *model.pending.entry(party).or_insert(0) += 1;
            model.burns_total += 1;
            actions.push(Action::Burn { party, token: None });
            continue;
        }
        if spendable.is_empty() {
            return Err(SimError::Infeasible(
                "no live tokens left to move".into(),
            ));
        }
        let sender = spendable[rng.gen_range(0..spendable.len())];
        let receiver = parties[rng.gen_range(0..parties.len())];
        *model.pending.get_mut(&sender).unwrap() -= 1;
        *model.live_owned.entry(receiver).or_insert(0) += 1;
        actions.push(Action::Spend {
            sender,
            receiver,
            bucket: cfg.bucket,
        });
        spends += 1;
    }
    Ok(Schedule { actions })
}

/// The chain scenario of the end-to-end check: burn then spend, hop by hop,
/// cycling receivers over users.
pub fn sequential_schedule(cfg: &SimConfig, transfers: u32) -> Result<Schedule, SimError> {
    let genesis = cfg.genesis_count();
    if cfg.bucket == 0 || cfg.bucket as u64 > genesis {
        return Err(SimError::Infeasible(format!(
            "bucket {} exceeds the {} possible burns before the first spend",
            cfg.bucket, genesis
        )));
    }
    let mut actions = Vec::new();
    // burn enough genesis tokens up front to fill the first bucket
    let bootstrap = cfg.bucket as u64;
    let mut holders: Vec<PartyId> = Vec::new();
    for g in 0..bootstrap {
        let bank = PartyId::Bank((g / cfg.tau as u64) as u32);
        actions.push(Action::Burn {
            party: bank,
            token: None,
        });
        holders.push(bank);
    }
    // receivers cycle over users when there are any, otherwise over banks
    let receivers: Vec<PartyId> = if cfg.users > 0 {
        (0..cfg.users).map(PartyId::User).collect()
    } else {
        (0..cfg.banks).map(PartyId::Bank).collect()
    };
    let mut next = 0usize;
    let mut queue: std::collections::VecDeque<PartyId> = holders.into();
    for _ in 0..transfers {
        let sender = queue
            .pop_front()
            .ok_or_else(|| SimError::Infeasible("ran out of pending burns".into()))?;
        let mut receiver = receivers[next % receivers.len()];
        if receiver == sender && receivers.len() > 1 {
            next += 1;
            receiver = receivers[next % receivers.len()];
        }
        next += 1;
        actions.push(Action::Spend {
            sender,
            receiver,
            bucket: cfg.bucket,
        });
        // the receiver burns what it received so it can spend next
        actions.push(Action::Burn {
            party: receiver,
            token: None,
        });
        queue.push_back(receiver);
    }
    Ok(Schedule { actions })
}
