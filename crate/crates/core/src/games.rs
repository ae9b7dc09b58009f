// SPDX-License-Identifier: Apache-2.0

//! Executable security games: forgery strategies, balance audits, hybrid
//! trace checks and the transaction-independence scan.
//!
//! Each forgery trial sets up a fresh system, runs an honest prelude so the
//! board holds real burns and tokens, then lets the adversary post crafted
//! entries using only adversary-visible data (corrupted parties' secrets and
//! the public board). A win is an adversarial post that any fresh validator
//! accepts. The built-in strategies cover the attack cases of the forgery
//! argument: proving without a witness, replaying proofs, double-spending a
//! retained burn secret, burning unowned tokens and transplanting proofs
//! onto altered statements.
//!
//! Negative controls make sure the harnesses are not vacuous: with the
//! programmable-oracle backdoor the same win check fires, a disabled purge
//! fails the independence scan, and an injected forged acceptance fails the
//! balance audit.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::crypto::{keygen, sign, Group};
use crate::ledger::{BulletinBoard, FsMode, PartyId, Payload, ValidSet, ValidationCtx};
use crate::orproof::{OrBranch, OrProof as GenericOrProof};
use crate::protocol::CbPublic;
use crate::scenario::{
    sequential_schedule, Action, HybridMode, Schedule, Sim, SimConfig, SimError,
};
use crate::{OrStatement, ProtocolGroup};

type G = ProtocolGroup;
type OrProof = GenericOrProof<G>;

pub use crate::scenario::HybridMode as Mode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub sim: SimConfig,
    /// honest prelude transfers per trial
    pub transfers: u32,
    pub trials: u32,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            sim: SimConfig {
                banks: 2,
                users: 2,
                tau: 2,
                bucket: 2,
                ..SimConfig::default()
            },
            transfers: 2,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryStrategy {
    FreshForge,
    ReplayProof,
    DoubleSpend,
    UnownedBurn,
    TransplantStatement,
}

impl AdversaryStrategy {
    pub const ALL: [AdversaryStrategy; 5] = [
        AdversaryStrategy::FreshForge,
        AdversaryStrategy::ReplayProof,
        AdversaryStrategy::DoubleSpend,
        AdversaryStrategy::UnownedBurn,
        AdversaryStrategy::TransplantStatement,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AdversaryStrategy::FreshForge => "fresh-forge",
            AdversaryStrategy::ReplayProof => "replay-proof",
            AdversaryStrategy::DoubleSpend => "double-spend",
            AdversaryStrategy::UnownedBurn => "unowned-burn",
            AdversaryStrategy::TransplantStatement => "transplant-statement",
        }
    }

    pub fn parse(s: &str) -> Option<AdversaryStrategy> {
        Self::ALL.iter().copied().find(|v| v.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeryOutcome {
    pub wins: u32,
    pub trials: u32,
}

fn trial_rng(seed: u64, tag: &str, trial: u32) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"pidc/game");
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(trial.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn trial_seed(seed: u64, tag: &str, trial: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"pidc/game-seed");
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(trial.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// A proof-shaped object built without any witness: all branches simulated,
/// which cannot satisfy the real Fiat-Shamir challenge.
fn witnessless_proof(
    crs: &crate::Crs,
    stmt: &OrStatement,
    rng: &mut ChaCha20Rng,
) -> OrProof {
    let h = &crs.params.h;
    let branches = stmt
        .betas
        .iter()
        .map(|beta| {
            let c = <G as Group>::scalar_random(rng);
            let z = <G as Group>::scalar_random(rng);
            let m = crate::crypto::hash_to_scalar::<G>(&stmt.vk.to_bytes());
            let x = <G as Group>::op(
                &beta.0,
                &<G as Group>::inv(&<G as Group>::mul(&crs.params.g, &m)),
            );
            OrBranch {
                commitment: <G as Group>::op(
                    &<G as Group>::mul(h, &z),
                    &<G as Group>::inv(&<G as Group>::mul(&x, &c)),
                ),
                challenge: c,
                response: z,
            }
        })
        .collect();
    OrProof { branches }
}

/// Picks up to `n` certified burn-record indices from a validator view.
fn some_bucket(vs: &ValidSet, n: usize) -> Vec<u64> {
    vs.certified_burns()
        .iter()
        .take(n)
        .map(|(i, _)| *i)
        .collect()
}

/// Runs one trial: honest prelude, adversary moves, then the win check over
/// a fresh validator. Returns true when the adversary wins.
fn forgery_trial(
    strategy: AdversaryStrategy,
    cfg: &GameConfig,
    trial: u32,
) -> Result<bool, SimError> {
    let seed = trial_seed(cfg.seed, strategy.as_str(), trial);
    let mut rng = trial_rng(cfg.seed, strategy.as_str(), trial);
    // the double-spender keeps its burn secrets; corrupt parties do not purge
    let mut sim = match strategy {
        AdversaryStrategy::DoubleSpend => Sim::new_without_purge(cfg.sim.clone(), seed)?,
        _ => Sim::new(cfg.sim.clone(), seed)?,
    };
    let prelude = sequential_schedule(&cfg.sim, cfg.transfers)?;
    sim.run(&prelude)?;

    let mut adversarial: Vec<u64> = Vec::new();
    match strategy {
        AdversaryStrategy::FreshForge => {
            let vs = sim.validator_vs();
            let bucket = some_bucket(&vs, cfg.sim.bucket);
            let sender = keygen::<G, _>(&mut rng);
            let receiver = keygen::<G, _>(&mut rng);
            let stmt = OrStatement {
                betas: bucket
                    .iter()
                    .map(|i| vs.burn_record(*i).expect("certified").factor.clone())
                    .collect(),
                vk: sender.vk.clone(),
            };
            let proof = witnessless_proof(&sim.public.crs, &stmt, &mut rng);
            let sender_sig = sign(&sender, &receiver.vk.to_bytes(), &mut rng);
            let idx = sim.board.post(
                Payload::LiveToken {
                    sender_vk: sender.vk.clone(),
                    receiver_vk: receiver.vk.clone(),
                    sender_sig,
                    bucket,
                    proof,
                },
                PartyId::Bank(0),
            )?;
            adversarial.push(idx);
        }
        AdversaryStrategy::ReplayProof => {
            let replayable: Vec<Payload> = sim
                .board
                .entries()
                .iter()
                .filter(|e| matches!(e.payload, Payload::LiveToken { .. }))
                .map(|e| e.payload.clone())
                .collect();
            for payload in replayable {
                // verbatim replay
                adversarial.push(sim.board.post(payload.clone(), PartyId::Bank(0))?);
                // replay redirected to the adversary's receiver key
                if let Payload::LiveToken {
                    sender_vk,
                    sender_sig,
                    bucket,
                    proof,
                    ..
                } = payload
                {
                    let receiver = keygen::<G, _>(&mut rng);
                    let idx = sim.board.post(
                        Payload::LiveToken {
                            sender_vk,
                            receiver_vk: receiver.vk.clone(),
                            sender_sig,
                            bucket,
                            proof,
                        },
                        PartyId::Bank(0),
                    )?;
                    adversarial.push(idx);
                }
            }
        }
        AdversaryStrategy::DoubleSpend => {
            // the corrupt sender of the last legitimate spend retained its
            // burn secret; it tries to respend the same burn
            let Some(spend) = sim.spends.last().map(|s| (s.spender, s.burnt_token)) else {
                return Ok(false);
            };
            let (spender, burnt) = spend;
            let receiver = keygen::<G, _>(&mut rng);
            let candidate = {
                let party = sim.party_mut(spender).expect("spender exists");
                party.proof_gen(burnt, &receiver.vk, cfg.sim.bucket, &mut rng)?
            };
            adversarial.push(sim.board.post(candidate, PartyId::Bank(0))?);

            // and with a fresh sender key, for which no witness exists
            let vs = sim.validator_vs();
            let bucket = some_bucket(&vs, cfg.sim.bucket);
            let fresh = keygen::<G, _>(&mut rng);
            let stmt = OrStatement {
                betas: bucket
                    .iter()
                    .map(|i| vs.burn_record(*i).expect("certified").factor.clone())
                    .collect(),
                vk: fresh.vk.clone(),
            };
            let proof = witnessless_proof(&sim.public.crs, &stmt, &mut rng);
            let sender_sig = sign(&fresh, &receiver.vk.to_bytes(), &mut rng);
            let idx = sim.board.post(
                Payload::LiveToken {
                    sender_vk: fresh.vk.clone(),
                    receiver_vk: receiver.vk.clone(),
                    sender_sig,
                    bucket,
                    proof,
                },
                PartyId::Bank(0),
            )?;
            adversarial.push(idx);
        }
        AdversaryStrategy::UnownedBurn => {
            // burn an honest live token without its receiver key
            let vs = sim.validator_vs();
            let Some(target) = vs.live_view().first().map(|t| t.index) else {
                return Ok(false);
            };
            let token = vs.token(target).expect("live").clone();
            let fresh = keygen::<G, _>(&mut rng);
            let (factor, randomness) =
                crate::crypto::commit_random(&sim.public.crs.params, &fresh.vk.to_bytes(), &mut rng);
            let mut msg = token.sender_vk.to_bytes();
            msg.extend_from_slice(&factor.to_bytes());
            // forged certification under the adversary's own key
            let forged_sig = sign(&fresh, &msg, &mut rng);
            let burn_idx = sim.board.post(
                Payload::BurnRecord {
                    token_index: target,
                    factor: factor.clone(),
                    receiver_sig: forged_sig,
                },
                PartyId::Bank(0),
            )?;
            adversarial.push(burn_idx);

            // spend referencing the uncertified burn record
            let receiver = keygen::<G, _>(&mut rng);
            let stmt = OrStatement {
                betas: vec![factor],
                vk: fresh.vk.clone(),
            };
            let wit = crate::OrWitness {
                randomness,
                index: 0,
            };
            if let Ok(proof) = crate::orproof::prove(&sim.public.crs, &stmt, &wit, &mut rng) {
                let sender_sig = sign(&fresh, &receiver.vk.to_bytes(), &mut rng);
                let idx = sim.board.post(
                    Payload::LiveToken {
                        sender_vk: fresh.vk.clone(),
                        receiver_vk: receiver.vk.clone(),
                        sender_sig,
                        bucket: vec![burn_idx],
                        proof,
                    },
                    PartyId::Bank(0),
                )?;
                adversarial.push(idx);
            }
        }
        AdversaryStrategy::TransplantStatement => {
            let tokens: Vec<(Vec<u64>, OrProof)> = sim
                .board
                .entries()
                .iter()
                .filter_map(|e| match &e.payload {
                    Payload::LiveToken { bucket, proof, .. } => {
                        Some((bucket.clone(), proof.clone()))
                    }
                    _ => None,
                })
                .collect();
            let vs = sim.validator_vs();
            for (bucket, proof) in tokens {
                // same bucket, adversary's key
                let fresh = keygen::<G, _>(&mut rng);
                let receiver = keygen::<G, _>(&mut rng);
                let sender_sig = sign(&fresh, &receiver.vk.to_bytes(), &mut rng);
                let idx = sim.board.post(
                    Payload::LiveToken {
                        sender_vk: fresh.vk.clone(),
                        receiver_vk: receiver.vk.clone(),
                        sender_sig,
                        bucket: bucket.clone(),
                        proof: proof.clone(),
                    },
                    PartyId::Bank(0),
                )?;
                adversarial.push(idx);

                // permuted bucket under another fresh key
                if bucket.len() >= 2 {
                    let mut permuted = bucket.clone();
                    permuted.swap(0, bucket.len() - 1);
                    if permuted != bucket {
                        let fresh = keygen::<G, _>(&mut rng);
                        let sender_sig = sign(&fresh, &receiver.vk.to_bytes(), &mut rng);
                        let idx = sim.board.post(
                            Payload::LiveToken {
                                sender_vk: fresh.vk.clone(),
                                receiver_vk: receiver.vk.clone(),
                                sender_sig,
                                bucket: permuted,
                                proof: proof.clone(),
                            },
                            PartyId::Bank(0),
                        )?;
                        adversarial.push(idx);
                    }
                }
                // widened bucket: drop handled by length mismatch, add one
                if let Some(extra) = some_bucket(&vs, bucket.len() + 1).last() {
                    if !bucket.contains(extra) {
                        let mut widened = bucket.clone();
                        widened.push(*extra);
                        let fresh = keygen::<G, _>(&mut rng);
                        let sender_sig = sign(&fresh, &receiver.vk.to_bytes(), &mut rng);
                        let idx = sim.board.post(
                            Payload::LiveToken {
                                sender_vk: fresh.vk.clone(),
                                receiver_vk: receiver.vk.clone(),
                                sender_sig,
                                bucket: widened,
                                proof: proof.clone(),
                            },
                            PartyId::Bank(0),
                        )?;
                        adversarial.push(idx);
                    }
                }
            }
        }
    }

    // fresh validator decides
    let vs = sim.validator_vs();
    let win = adversarial.iter().any(|idx| {
        vs.token(*idx).is_some_and(|t| t.status.counts()) || vs.burn_record(*idx).is_some()
    });
    Ok(win)
}

/// Token-forgery game: `trials` independent systems, one adversary strategy.
/// Honest validators must accept none of the adversary's posts.
pub fn run_forgery_game(
    cfg: &GameConfig,
    strategy: AdversaryStrategy,
) -> Result<ForgeryOutcome, SimError> {
    let mut wins = 0;
    for trial in 0..cfg.trials {
        if forgery_trial(strategy, cfg, trial)? {
            wins += 1;
        }
    }
    Ok(ForgeryOutcome {
        wins,
        trials: cfg.trials,
    })
}

/// Negative control: the same win check with the simulation backdoor. The
/// adversary programs the oracle and the validators, wired to the same
/// oracle, accept the witnessless token. Proves the harness detects wins.
#[cfg(any(test, feature = "sim-oracle"))]
pub fn run_forgery_game_with_backdoor(cfg: &GameConfig) -> Result<ForgeryOutcome, SimError> {
    let mut wins = 0;
    for trial in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, "oracle-backdoor", trial);
        let mut rng = trial_rng(cfg.seed, "oracle-backdoor", trial);
        let mut sim = Sim::new_with_oracle(cfg.sim.clone(), seed)?;
        let prelude = sequential_schedule(&cfg.sim, cfg.transfers)?;
        sim.run(&prelude)?;

        let vs = sim.validator_vs();
        let bucket = some_bucket(&vs, cfg.sim.bucket);
        let sender = keygen::<G, _>(&mut rng);
        let receiver = keygen::<G, _>(&mut rng);
        let stmt = OrStatement {
            betas: bucket
                .iter()
                .map(|i| vs.burn_record(*i).expect("certified").factor.clone())
                .collect(),
            vk: sender.vk.clone(),
        };
        let oracle = sim.oracle().expect("backdoor sim has an oracle");
        let proof = crate::orproof::simulate(&sim.public.crs, &stmt, oracle, &mut rng)
            .map_err(crate::protocol::ProtocolError::from)?;
        let sender_sig = sign(&sender, &receiver.vk.to_bytes(), &mut rng);
        let idx = sim.board.post(
            Payload::LiveToken {
                sender_vk: sender.vk.clone(),
                receiver_vk: receiver.vk.clone(),
                sender_sig,
                bucket,
                proof,
            },
            PartyId::Bank(0),
        )?;
        let vs = sim.validator_vs();
        if vs.token(idx).is_some_and(|t| t.status.counts()) {
            wins += 1;
        }
    }
    Ok(ForgeryOutcome {
        wins,
        trials: cfg.trials,
    })
}

/// Balance invariance over every prefix: outstanding value must equal the
/// number of valid genesis tokens seen so far, and the final genesis count
/// must match `expected`.
pub fn run_balance_audit(
    board: &BulletinBoard,
    public: &CbPublic,
    fs: FsMode<'_>,
    expected: u64,
) -> bool {
    let ctx = ValidationCtx {
        vk_cb: &public.vk_cb,
        vk_crs: &public.vk_crs,
        fs,
    };
    let mut vs = ValidSet::new();
    let mut genesis_seen = 0u64;
    for entry in board.entries() {
        if vs.ingest(entry, &ctx).is_err() {
            return false;
        }
        genesis_seen = vs
            .tokens()
            .filter(|t| {
                matches!(t.kind, crate::ledger::TokenKind::Genesis) && t.status.counts()
            })
            .count() as u64;
        if vs.balance() != genesis_seen {
            return false;
        }
    }
    genesis_seen == expected
}

/// The executable shadow of the hybrid chain: run the schedule with the
/// given rewriting and require every validator to accept the whole trace.
pub fn run_hybrid_trace_check(
    cfg: &SimConfig,
    seed: u64,
    schedule: &Schedule,
    mode: HybridMode,
) -> Result<bool, SimError> {
    let mut sim = Sim::new_hybrid(cfg.clone(), seed, mode)?;
    let report = sim.run(schedule)?;
    let spends = schedule
        .actions
        .iter()
        .filter(|a| matches!(a, Action::Spend { .. }))
        .count() as u64;
    let vs = sim.validator_vs();
    let clean = vs.ignored().is_empty();
    Ok(report.accepted == spends && clean && report.balance_invariant_holds())
}

/// True iff, after every completed spend and purge, the spender's serialized
/// state is byte-disjoint from that spend's witness scalars.
pub fn run_independence_check(cfg: &SimConfig, seed: u64, schedule: &Schedule) -> bool {
    independence_scan(cfg, seed, schedule, true)
}

/// Negative control: with purging disabled the scan must find the witness.
pub fn run_independence_check_without_purge(
    cfg: &SimConfig,
    seed: u64,
    schedule: &Schedule,
) -> bool {
    independence_scan(cfg, seed, schedule, false)
}

fn independence_scan(cfg: &SimConfig, seed: u64, schedule: &Schedule, purge: bool) -> bool {
    let sim = if purge {
        Sim::new(cfg.clone(), seed)
    } else {
        Sim::new_without_purge(cfg.clone(), seed)
    };
    let Ok(mut sim) = sim else {
        return false;
    };
    if sim.run(schedule).is_err() {
        return false;
    }
    for spend in &sim.spends {
        let party = sim.party(spend.spender).expect("spender exists");
        let haystack = party.canonical_bytes();
        for chunk in &spend.witness_chunks {
            if haystack.windows(chunk.len()).any(|w| w == &chunk[..]) {
                return false;
            }
        }
    }
    true
}

/// Stable one-line report formats.
pub fn forgery_report_line(
    strategy: AdversaryStrategy,
    outcome: &ForgeryOutcome,
    seed: u64,
) -> String {
    format!(
        "game=forgery strategy={} trials={} wins={} seed={}",
        strategy.as_str(),
        outcome.trials,
        outcome.wins,
        seed
    )
}

pub fn hybrid_report_line(mode: HybridMode, pass: bool, seed: u64) -> String {
    format!(
        "game=hybrids mode={} trials=1 pass={} seed={}",
        mode.as_str(),
        pass,
        seed
    )
}

pub fn balance_report_line(pass: bool, seed: u64) -> String {
    format!("game=balance trials=1 pass={pass} seed={seed}")
}

pub fn independence_report_line(pass: bool, seed: u64) -> String {
    format!("game=independence trials=1 pass={pass} seed={seed}")
}

/// The schedule generator; games and the CLI share it.
pub use crate::scenario::random_schedule;
