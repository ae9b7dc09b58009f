// SPDX-License-Identifier: Apache-2.0

//! Command-line driver: system setup, scenario execution, log verification
//! and security-game runs, producing deterministic reports.
//!
//! Exit codes: 0 pass, 1 verification or game failure, 2 usage error.
//! Reports and board logs are byte-identical for identical (config, seed);
//! wall-clock timing goes to stderr only.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use pidc_core::games::{
    self, forgery_report_line, run_balance_audit, run_forgery_game, AdversaryStrategy, GameConfig,
};
use pidc_core::ledger::{
    parse_log, BulletinBoard, FsMode, LogParseError, PartyId, ValidSet, ValidationCtx,
};
use pidc_core::protocol::{AcceptAll, DenyAll, MaxPostsPerBank, Policy};
use pidc_core::scenario::{
    random_schedule, sequential_schedule, Action, Schedule, Sim, SimConfig, Variant,
};
use pidc_core::VerificationKey;

#[derive(Parser)]
#[command(name = "pidc", about = "burn-and-reissue token transfer simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: setup, schedule execution, board log and trace report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for board.log, report.txt and vkcb.txt.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Protocol variant; overrides the config.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Re-validate an exported board log from scratch.
    VerifyLog {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        vkcb: PathBuf,
    },
    /// Run a security game: forgery, balance, hybrids or independence.
    Game {
        #[arg(long)]
        game: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Board log to audit (balance game).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Verification keys for the audited log (balance game).
        #[arg(long)]
        vkcb: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// config files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    banks: u32,
    users: u32,
    tau: u32,
    bucket: usize,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    policy: Option<String>,
    #[serde(default)]
    transfers: Option<u32>,
    #[serde(default)]
    schedule: Option<ScheduleSpec>,
    #[serde(default)]
    minters: Option<u32>,
    #[serde(default)]
    quota: Option<u32>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScheduleSpec {
    Named(String),
    Explicit(Vec<ActionSpec>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ActionSpec {
    Burn {
        party: String,
        #[serde(default)]
        token: Option<u64>,
    },
    Spend {
        sender: String,
        receiver: String,
        bucket: usize,
    },
    ForgeMint {
        minter: u32,
    },
    RescueAll {
        #[serde(default)]
        open: bool,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    #[serde(default)]
    banks: Option<u32>,
    #[serde(default)]
    users: Option<u32>,
    #[serde(default)]
    tau: Option<u32>,
    #[serde(default)]
    bucket: Option<usize>,
    #[serde(default)]
    trials: Option<u32>,
    #[serde(default)]
    transfers: Option<u32>,
    #[serde(default)]
    seed: Option<u64>,
}

fn parse_party(s: &str) -> Result<PartyId, String> {
    if s == "cb" {
        return Ok(PartyId::CentralBank);
    }
    if let Some(rest) = s.strip_prefix("bank") {
        return rest
            .parse()
            .map(PartyId::Bank)
            .map_err(|_| format!("bad party: {s}"));
    }
    if let Some(rest) = s.strip_prefix("user") {
        return rest
            .parse()
            .map(PartyId::User)
            .map_err(|_| format!("bad party: {s}"));
    }
    Err(format!("bad party: {s}"))
}

fn parse_actions(specs: &[ActionSpec]) -> Result<Schedule, String> {
    let mut actions = Vec::with_capacity(specs.len());
    for spec in specs {
        actions.push(match spec {
            ActionSpec::Burn { party, token } => Action::Burn {
                party: parse_party(party)?,
                token: *token,
            },
            ActionSpec::Spend {
                sender,
                receiver,
                bucket,
            } => Action::Spend {
                sender: parse_party(sender)?,
                receiver: parse_party(receiver)?,
                bucket: *bucket,
            },
            ActionSpec::ForgeMint { minter } => Action::ForgeMint { minter: *minter },
            ActionSpec::RescueAll { open } => Action::RescueAll { open: *open },
        });
    }
    Ok(Schedule { actions })
}

fn parse_policy(name: &str) -> Result<Box<dyn Policy>, String> {
    if name == "accept-all" {
        return Ok(Box::new(AcceptAll));
    }
    if name == "deny-all" {
        return Ok(Box::new(DenyAll));
    }
    if let Some(limit) = name.strip_prefix("max-posts:") {
        let limit: u32 = limit.parse().map_err(|_| format!("bad policy: {name}"))?;
        return Ok(Box::new(MaxPostsPerBank::new(limit)));
    }
    Err(format!("unknown policy: {name}"))
}

struct RunPlan {
    cfg: SimConfig,
    schedule: Schedule,
    policy: Box<dyn Policy>,
    seed: u64,
}

fn load_run_plan(
    path: &Path,
    seed_flag: Option<u64>,
    variant_flag: Option<&str>,
) -> Result<RunPlan, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config: {e}"))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))?;
    let variant_name = variant_flag
        .map(str::to_owned)
        .or(file.variant.clone())
        .unwrap_or_else(|| "pi-dc".into());
    let variant =
        Variant::parse(&variant_name).ok_or_else(|| format!("unknown variant: {variant_name}"))?;
    let cfg = SimConfig {
        banks: file.banks,
        users: file.users,
        tau: file.tau,
        bucket: file.bucket,
        variant,
        minters: file.minters.unwrap_or(1),
        quota: file.quota.unwrap_or(64),
    };
    let explicit = matches!(file.schedule, Some(ScheduleSpec::Explicit(_)));
    if explicit && (file.seed.is_some() || seed_flag.is_some()) {
        return Err("a seed and an explicit schedule are mutually exclusive".into());
    }
    let seed = seed_flag.or(file.seed).unwrap_or(0);
    let schedule = match &file.schedule {
        Some(ScheduleSpec::Explicit(specs)) => parse_actions(specs)?,
        Some(ScheduleSpec::Named(name)) => {
            let transfers = file.transfers.unwrap_or(20);
            match name.as_str() {
                "sequential" => sequential_schedule(&cfg, transfers).map_err(|e| e.to_string())?,
                "random" => random_schedule(seed, &cfg, transfers).map_err(|e| e.to_string())?,
                other => return Err(format!("unknown schedule: {other}")),
            }
        }
        None => {
            let transfers = file.transfers.unwrap_or(20);
            sequential_schedule(&cfg, transfers).map_err(|e| e.to_string())?
        }
    };
    let policy = parse_policy(file.policy.as_deref().unwrap_or("accept-all"))?;
    Ok(RunPlan {
        cfg,
        schedule,
        policy,
        seed,
    })
}

fn load_game_config(path: Option<&Path>, seed_flag: Option<u64>) -> Result<GameConfig, String> {
    let mut cfg = GameConfig::default();
    if let Some(path) = path {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read config: {e}"))?;
        let file: GameFile =
            serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))?;
        if let Some(v) = file.banks {
            cfg.sim.banks = v;
        }
        if let Some(v) = file.users {
            cfg.sim.users = v;
        }
        if let Some(v) = file.tau {
            cfg.sim.tau = v;
        }
        if let Some(v) = file.bucket {
            cfg.sim.bucket = v;
        }
        if let Some(v) = file.trials {
            cfg.trials = v;
        }
        if let Some(v) = file.transfers {
            cfg.transfers = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
    }
    if let Some(seed) = seed_flag {
        cfg.seed = seed;
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// vkcb files

fn write_vkcb(path: &Path, public: &pidc_core::protocol::CbPublic) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!("crs {}\n", hex::encode(public.vk_crs.to_bytes())));
    for vk in &public.vk_cb {
        out.push_str(&format!("cb {}\n", hex::encode(vk.to_bytes())));
    }
    std::fs::write(path, out)
}

fn read_vkcb(path: &Path) -> Result<(VerificationKey, Vec<VerificationKey>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read vkcb: {e}"))?;
    let mut vk_crs = None;
    let mut vk_cb = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(kind), Some(hex_key)) = (parts.next(), parts.next()) else {
            return Err(format!("malformed vkcb line {lineno}"));
        };
        let bytes =
            hex::decode(hex_key).map_err(|_| format!("malformed vkcb line {lineno}"))?;
        let vk = VerificationKey::from_bytes(&bytes)
            .ok_or_else(|| format!("bad key on vkcb line {lineno}"))?;
        match kind {
            "crs" => vk_crs = Some(vk),
            "cb" => vk_cb.push(vk),
            _ => return Err(format!("malformed vkcb line {lineno}")),
        }
    }
    let vk_crs = vk_crs.ok_or("vkcb file lacks a crs key")?;
    Ok((vk_crs, vk_cb))
}

// ---------------------------------------------------------------------------
// commands

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    variant: Option<&str>,
) -> Result<ExitCode, String> {
    let started = Instant::now();
    let plan = load_run_plan(config, seed, variant)?;
    std::fs::create_dir_all(out).map_err(|e| format!("cannot create out dir: {e}"))?;

    let mut sim = Sim::new(plan.cfg.clone(), plan.seed).map_err(|e| e.to_string())?;
    sim.set_policy(plan.policy);
    let report = sim.run(&plan.schedule).map_err(|e| e.to_string())?;

    let mut report_text = format!(
        "run variant={} banks={} users={} tau={} bucket={} seed={}\n",
        plan.cfg.variant.as_str(),
        plan.cfg.banks,
        plan.cfg.users,
        plan.cfg.tau,
        plan.cfg.bucket,
        plan.seed
    );
    report_text.push_str(&report.to_file_string());
    if plan.cfg.variant == Variant::Minter {
        let audit = sim.audit();
        report_text.push_str("audit\n");
        report_text.push_str(&audit.to_file_string());
        std::fs::write(out.join("registry.txt"), sim.registry.to_file_string())
            .map_err(|e| format!("cannot write registry: {e}"))?;
        std::fs::write(out.join("audit.txt"), audit.to_file_string())
            .map_err(|e| format!("cannot write audit: {e}"))?;
    }

    std::fs::write(out.join("board.log"), sim.export_log())
        .map_err(|e| format!("cannot write board log: {e}"))?;
    std::fs::write(out.join("report.txt"), &report_text)
        .map_err(|e| format!("cannot write report: {e}"))?;
    write_vkcb(&out.join("vkcb.txt"), &sim.public)
        .map_err(|e| format!("cannot write vkcb: {e}"))?;

    eprintln!("runtime_ms={}", started.elapsed().as_millis());
    print!("{report_text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_log(log: &Path, vkcb: &Path) -> Result<ExitCode, String> {
    let (vk_crs, vk_cb) = read_vkcb(vkcb)?;
    let text = std::fs::read_to_string(log).map_err(|e| format!("cannot read log: {e}"))?;
    let (entries, summary) = match parse_log(&text) {
        Ok(v) => v,
        Err(LogParseError::UnexpectedEnd) => {
            println!("verdict=fail reason=unexpected-end");
            return Ok(ExitCode::from(1));
        }
        Err(e) => {
            let line = e.failing_line().unwrap_or(0);
            println!("verdict=fail reason=corrupt-record index={line}");
            return Ok(ExitCode::from(1));
        }
    };

    let ctx = ValidationCtx {
        vk_cb: &vk_cb,
        vk_crs: &vk_crs,
        fs: FsMode::Standard,
    };
    let mut vs = ValidSet::new();
    let mut genesis_seen = 0u64;
    let mut board = BulletinBoard::new();
    for entry in &entries {
        if vs.ingest(entry, &ctx).is_err() {
            println!("verdict=fail reason=ordering index={}", entry.index);
            return Ok(ExitCode::from(1));
        }
        // replaying the accepted set catches the first divergent record
        let accepted_here = vs.token(entry.index).is_some();
        let expected_here = summary.accepted.contains(&entry.index);
        if accepted_here != expected_here {
            println!("verdict=fail reason=validity-divergence index={}", entry.index);
            return Ok(ExitCode::from(1));
        }
        genesis_seen = vs
            .tokens()
            .filter(|t| matches!(t.kind, pidc_core::ledger::TokenKind::Genesis))
            .count() as u64;
        if vs.balance() != genesis_seen {
            println!("verdict=fail reason=balance index={}", entry.index);
            return Ok(ExitCode::from(1));
        }
        board
            .post(entry.payload.clone(), entry.poster)
            .map_err(|e| e.to_string())?;
    }
    if genesis_seen != summary.expected {
        println!("verdict=fail reason=expected-genesis");
        return Ok(ExitCode::from(1));
    }
    if vs.live_view().len() as u64 != summary.live {
        println!("verdict=fail reason=live-count");
        return Ok(ExitCode::from(1));
    }
    if vs.canonical_digest() != summary.vs_digest {
        println!("verdict=fail reason=validset-digest");
        return Ok(ExitCode::from(1));
    }
    println!("verdict=pass entries={} live={}", entries.len(), summary.live);
    Ok(ExitCode::SUCCESS)
}

fn cmd_game(
    game: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    log: Option<&Path>,
    vkcb: Option<&Path>,
) -> Result<ExitCode, String> {
    std::fs::create_dir_all(out).map_err(|e| format!("cannot create out dir: {e}"))?;
    let cfg = load_game_config(config, seed)?;
    let mut lines = Vec::new();
    let pass = match game {
        "forgery" => {
            let mut total_wins = 0;
            for strategy in AdversaryStrategy::ALL {
                let outcome = run_forgery_game(&cfg, strategy).map_err(|e| e.to_string())?;
                total_wins += outcome.wins;
                lines.push(forgery_report_line(strategy, &outcome, cfg.seed));
            }
            total_wins == 0
        }
        "balance" => {
            let pass = match (log, vkcb) {
                (Some(log), Some(vkcb)) => audit_log_balance(log, vkcb)?,
                _ => {
                    // no log given: audit a fresh honest run
                    let schedule = sequential_schedule(&cfg.sim, cfg.transfers)
                        .map_err(|e| e.to_string())?;
                    let mut sim =
                        Sim::new(cfg.sim.clone(), cfg.seed).map_err(|e| e.to_string())?;
                    sim.run(&schedule).map_err(|e| e.to_string())?;
                    run_balance_audit(
                        &sim.board,
                        &sim.public,
                        FsMode::Standard,
                        cfg.sim.genesis_count(),
                    )
                }
            };
            lines.push(games::balance_report_line(pass, cfg.seed));
            pass
        }
        "hybrids" => {
            #[cfg(not(feature = "sim-oracle"))]
            {
                return Err("oracle unavailable: hybrids need a sim-oracle build".into());
            }
            #[cfg(feature = "sim-oracle")]
            {
                use pidc_core::scenario::HybridMode;
                let schedule = random_schedule(cfg.seed, &cfg.sim, cfg.transfers)
                    .map_err(|e| e.to_string())?;
                let mut all = true;
                for mode in [
                    HybridMode::Honest,
                    HybridMode::SimProofs,
                    HybridMode::ZeroCommitments,
                    HybridMode::Both,
                ] {
                    let pass =
                        games::run_hybrid_trace_check(&cfg.sim, cfg.seed, &schedule, mode)
                            .map_err(|e| e.to_string())?;
                    lines.push(games::hybrid_report_line(mode, pass, cfg.seed));
                    all &= pass;
                }
                all
            }
        }
        "independence" => {
            let schedule =
                sequential_schedule(&cfg.sim, cfg.transfers).map_err(|e| e.to_string())?;
            let honest = games::run_independence_check(&cfg.sim, cfg.seed, &schedule);
            let control =
                games::run_independence_check_without_purge(&cfg.sim, cfg.seed, &schedule);
            lines.push(games::independence_report_line(honest, cfg.seed));
            lines.push(format!(
                "game=independence control=no-purge trials=1 pass={} seed={}",
                !control, cfg.seed
            ));
            honest && !control
        }
        other => return Err(format!("unknown game: {other}")),
    };

    let mut text = String::new();
    for line in &lines {
        text.push_str(line);
        text.push('\n');
    }
    std::fs::write(out.join("game-report.txt"), &text)
        .map_err(|e| format!("cannot write game report: {e}"))?;
    print!("{text}");
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn audit_log_balance(log: &Path, vkcb: &Path) -> Result<bool, String> {
    let (vk_crs, vk_cb) = read_vkcb(vkcb)?;
    let text = std::fs::read_to_string(log).map_err(|e| format!("cannot read log: {e}"))?;
    let Ok((entries, summary)) = parse_log(&text) else {
        return Ok(false);
    };
    let ctx = ValidationCtx {
        vk_cb: &vk_cb,
        vk_crs: &vk_crs,
        fs: FsMode::Standard,
    };
    let mut vs = ValidSet::new();
    let mut genesis_seen = 0u64;
    for entry in &entries {
        if vs.ingest(entry, &ctx).is_err() {
            return Ok(false);
        }
        genesis_seen = vs
            .tokens()
            .filter(|t| matches!(t.kind, pidc_core::ledger::TokenKind::Genesis))
            .count() as u64;
        if vs.balance() != genesis_seen {
            return Ok(false);
        }
    }
    Ok(genesis_seen == summary.expected)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            variant,
        } => cmd_run(config, *seed, out, variant.as_deref()),
        Command::VerifyLog { log, vkcb } => cmd_verify_log(log, vkcb),
        Command::Game {
            game,
            config,
            seed,
            out,
            log,
            vkcb,
        } => cmd_game(
            game,
            config.as_deref(),
            *seed,
            out,
            log.as_deref(),
            vkcb.as_deref(),
        ),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
