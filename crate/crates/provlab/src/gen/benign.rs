//! Benign background emission: catalog archetypes, ever-changing churn,
//! and the three false-positive archetypes.

use rand::Rng;

use provlab_core::event::{ActionKind, EntityAttrs};

use super::catalog::Catalog;
use super::{DayBuilder, ScenarioSpec, StepCount};

pub(crate) const SHELL_PATH: &str = "/usr/bin/bash";
pub(crate) const BROWSER_PATH: &str = "/opt/browser/browser";
pub(crate) const DBSERVER_PATH: &str = "/usr/sbin/postgres";
pub(crate) const CROND_PATH: &str = "/usr/sbin/crond";
pub(crate) const REPORTER_PATH: &str = "/opt/report/reportd";
pub(crate) const INVENTORY_PATH: &str = "/usr/bin/inventoryd";

const HOST_IP: &str = "10.0.2.15";

const SHELL_UTILS: [&str; 6] = [
    "/usr/bin/ls",
    "/usr/bin/grep",
    "/usr/bin/cat",
    "/usr/bin/awk",
    "/usr/bin/sed",
    "/usr/bin/tar",
];
const DOTFILES: [&str; 3] = [
    "/home/user/.bashrc",
    "/home/user/.profile",
    "/home/user/.inputrc",
];
const BROWSER_SITES: [(&str, &str); 8] = [
    ("news.site0.example", "192.0.2.20"),
    ("news.site1.example", "192.0.2.21"),
    ("mail.site2.example", "192.0.2.22"),
    ("docs.site3.example", "192.0.2.23"),
    ("cdn.site4.example", "192.0.2.24"),
    ("chat.site5.example", "192.0.2.25"),
    ("wiki.site6.example", "192.0.2.26"),
    ("maps.site7.example", "192.0.2.27"),
];
const DB_CLIENTS: [&str; 4] = ["10.1.0.2", "10.1.0.3", "10.1.0.4", "10.1.0.5"];
const UPDATE_DOMAIN: (&str, &str) = ("update.pkg-mirror.example", "192.0.2.10");
const INDEX_SCRIPTS: [&str; 5] = [
    "scan /usr filesystem pass",
    "scan /var filesystem pass",
    "merge index shards",
    "vacuum stale entries",
    "refresh stopword table",
];
const MEETING_CODECS: [&str; 4] = [
    "/usr/lib/meeting/codec_h264.so",
    "/usr/lib/meeting/codec_vp9.so",
    "/usr/lib/meeting/codec_opus.so",
    "/usr/lib/meeting/codec_av1.so",
];

fn net(src_port: u16, domain: Option<&str>, dst_ip: &str, dst_port: u16) -> EntityAttrs {
    let attrs = EntityAttrs::network(HOST_IP, src_port, dst_ip, dst_port);
    match domain {
        Some(d) => attrs.with_domain(d),
        None => attrs,
    }
}

fn ephemeral_port(day: &mut DayBuilder) -> u16 {
    day.rng.random_range(20_000..60_000)
}

/// Picks an index by relative weight.
fn pick(day: &mut DayBuilder, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut roll = day.rng.random_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if roll < *w {
            return i;
        }
        roll -= w;
    }
    weights.len() - 1
}

fn emit_shell_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[40, 20, 10, 10, 10, 10]) {
            0 => {
                let util = SHELL_UTILS[day.rng.random_range(0..SHELL_UTILS.len())];
                let child = EntityAttrs::process(day.fresh_pid(), util);
                day.emit(me.clone(), ActionKind::Exec, child);
            }
            1 => {
                let dotfile = DOTFILES[day.rng.random_range(0..DOTFILES.len())];
                day.emit(me.clone(), ActionKind::Read, EntityAttrs::file(dotfile));
            }
            2 => day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file("/home/user/.bash_history"),
            ),
            3 => {
                let child = EntityAttrs::process(day.fresh_pid(), path);
                day.emit(me.clone(), ActionKind::Fork, child);
            }
            4 => day.emit(
                me.clone(),
                ActionKind::Open,
                EntityAttrs::file("/etc/profile"),
            ),
            _ => {
                let tmp = format!("/tmp/sh_scratch_{}", day.rng.random_range(0..4));
                day.emit(me.clone(), ActionKind::Delete, EntityAttrs::file(tmp));
            }
        }
        emitted += 1;
    }
}

fn emit_updater_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[10, 15, 35, 10, 13, 12, 5]) {
            0 => {
                let port = ephemeral_port(day);
                day.emit(
                    me.clone(),
                    ActionKind::Connect,
                    net(port, Some(UPDATE_DOMAIN.0), UPDATE_DOMAIN.1, 443),
                );
            }
            1 => day.emit(
                me.clone(),
                ActionKind::Read,
                EntityAttrs::file("/etc/pkg-updated.conf"),
            ),
            2 => {
                let pkg = format!("/var/cache/pkg/pkg_{}.pkg", day.rng.random_range(0..8));
                day.emit(me.clone(), ActionKind::Write, EntityAttrs::file(pkg));
            }
            3 => day.emit(
                me.clone(),
                ActionKind::ModifyRegistry,
                EntityAttrs::registry_key("HKLM/Software/PkgUpdated/LastRun"),
            ),
            4 => day.emit(
                me.clone(),
                ActionKind::Open,
                EntityAttrs::file("/var/lib/pkg/state.db"),
            ),
            5 => day.emit(
                me.clone(),
                ActionKind::Close,
                EntityAttrs::file("/var/lib/pkg/state.db"),
            ),
            _ => {
                let pkg = format!("/var/cache/pkg/pkg_{}.pkg", day.rng.random_range(0..8));
                day.emit(me.clone(), ActionKind::Delete, EntityAttrs::file(pkg));
            }
        }
        emitted += 1;
    }
}

fn emit_browser_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[20, 15, 10, 25, 10, 10, 10]) {
            0..=2 => {
                let (domain, ip) = BROWSER_SITES[day.rng.random_range(0..BROWSER_SITES.len())];
                let port = ephemeral_port(day);
                let action = match pick(day, &[45, 35, 20]) {
                    0 => ActionKind::Connect,
                    1 => ActionKind::Recv,
                    _ => ActionKind::Send,
                };
                day.emit(me.clone(), action, net(port, Some(domain), ip, 443));
            }
            3 => {
                let cache = format!(
                    "/home/user/.cache/browser/c{}.dat",
                    day.rng.random_range(0..12)
                );
                day.emit(me.clone(), ActionKind::Write, EntityAttrs::file(cache));
            }
            4 => day.emit(
                me.clone(),
                ActionKind::Read,
                EntityAttrs::file("/home/user/.config/browser/prefs.js"),
            ),
            5 => {
                let cache = format!(
                    "/home/user/.cache/browser/c{}.dat",
                    day.rng.random_range(0..12)
                );
                day.emit(me.clone(), ActionKind::Open, EntityAttrs::file(cache));
            }
            _ => {
                let plugin = format!("/usr/lib/browser/plugin_{}.so", day.rng.random_range(0..2));
                day.emit(me.clone(), ActionKind::Load, EntityAttrs::file(plugin));
            }
        }
        emitted += 1;
    }
}

fn emit_dbserver_instance(day: &mut DayBuilder, path: &str, budget: u32, imbalance: f64) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let openclose_boost = (imbalance * 60.0) as u32;
    let weights = [
        22 + openclose_boost, // open
        22 + openclose_boost, // close
        20,                   // read
        16,                   // write
        12,                   // recv
        8,                    // send
    ];
    let mut emitted = 0;
    while emitted < budget {
        let table = format!("/var/lib/db/tbl_{}.dat", day.rng.random_range(0..6));
        match pick(day, &weights) {
            0 => day.emit(me.clone(), ActionKind::Open, EntityAttrs::file(table)),
            1 => day.emit(me.clone(), ActionKind::Close, EntityAttrs::file(table)),
            2 => day.emit(me.clone(), ActionKind::Read, EntityAttrs::file(table)),
            3 => day.emit(me.clone(), ActionKind::Write, EntityAttrs::file(table)),
            _ => {
                let client = DB_CLIENTS[day.rng.random_range(0..DB_CLIENTS.len())];
                let port = ephemeral_port(day);
                let action = if pick(day, &[60, 40]) == 0 {
                    ActionKind::Recv
                } else {
                    ActionKind::Send
                };
                day.emit(me.clone(), action, net(port, None, client, 5432));
            }
        }
        emitted += 1;
    }
}

fn emit_logger_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[60, 25, 15]) {
            0 => day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file("/var/log/syslog"),
            ),
            1 => day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file("/var/log/auth.log"),
            ),
            _ => day.emit(
                me.clone(),
                ActionKind::Open,
                EntityAttrs::file("/var/log/syslog"),
            ),
        }
        emitted += 1;
    }
}

fn emit_indexer_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[60, 20, 20]) {
            0 => {
                let content = INDEX_SCRIPTS[day.rng.random_range(0..INDEX_SCRIPTS.len())];
                day.emit(
                    me.clone(),
                    ActionKind::RunScript,
                    EntityAttrs::script(content),
                );
            }
            1 => day.emit(
                me.clone(),
                ActionKind::Read,
                EntityAttrs::file("/etc/indexd.conf"),
            ),
            _ => day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file("/var/lib/index/idx.db"),
            ),
        }
        emitted += 1;
    }
}

fn emit_cron_instance(day: &mut DayBuilder, path: &str, budget: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), path);
    let mut emitted = 0;
    while emitted < budget {
        match pick(day, &[40, 30, 30]) {
            0 => {
                let child = EntityAttrs::process(day.fresh_pid(), "/usr/bin/logrotate");
                day.emit(me.clone(), ActionKind::Exec, child);
            }
            1 => {
                let child = EntityAttrs::process(day.fresh_pid(), "/usr/bin/updatedb");
                day.emit(me.clone(), ActionKind::Exec, child);
            }
            _ => day.emit(
                me.clone(),
                ActionKind::Read,
                EntityAttrs::file("/etc/crontab"),
            ),
        }
        emitted += 1;
    }
}

/// Emits one day of catalog background at roughly `spec.scale` events.
pub(crate) fn emit_catalog_day(
    day: &mut DayBuilder,
    catalog: &Catalog,
    spec: &ScenarioSpec,
    _global_day: u32,
) {
    let total_share = catalog.total_share();
    for entry in &catalog.archetypes {
        let archetype_budget = (spec.scale as u64 * entry.share as u64 / total_share as u64) as u32;
        let per_instance = (archetype_budget / entry.instances).max(1);
        for _ in 0..entry.instances {
            // Per-day volume jitter keeps the background from being a
            // carbon copy across days.
            let jitter = day.rng.random_range(90..=110);
            let budget = (per_instance as u64 * jitter / 100) as u32;
            match entry.name.as_str() {
                "shell" => emit_shell_instance(day, &entry.path, budget),
                "updater" => emit_updater_instance(day, &entry.path, budget),
                "browser" => emit_browser_instance(day, &entry.path, budget),
                "dbserver" => emit_dbserver_instance(day, &entry.path, budget, spec.imbalance),
                "logger" => emit_logger_instance(day, &entry.path, budget),
                "indexer" => emit_indexer_instance(day, &entry.path, budget),
                "cron" => emit_cron_instance(day, &entry.path, budget),
                other => panic!("catalog archetype `{other}` has no emitter"),
            }
        }
    }
}

/// Short-lived jobs with day-specific names: the ever-changing host churns
/// out a handful of fresh process entities every day.
pub(crate) fn emit_churn(day: &mut DayBuilder, global_day: u32) {
    let jobs = 4 + (global_day % 3);
    for i in 0..jobs {
        let path = format!("/tmp/run/job_d{global_day}_{i}");
        let me = EntityAttrs::process(day.fresh_pid(), &path);
        day.emit(
            me.clone(),
            ActionKind::Read,
            EntityAttrs::file("/etc/hosts"),
        );
        let interp = EntityAttrs::process(day.fresh_pid(), "/usr/bin/python3");
        day.emit(me.clone(), ActionKind::Exec, interp);
        for w in 0..3 {
            day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("/tmp/run/out_d{global_day}_{i}_{w}.tmp")),
            );
        }
        let port = ephemeral_port(day);
        day.emit(
            me.clone(),
            ActionKind::Connect,
            net(
                port,
                None,
                &format!("10.9.{}.{}", global_day % 200, i + 1),
                8443,
            ),
        );
    }
}

/// Sparse archetype: one inventory host process runs scripts. Rare in
/// training, then a large fan-out of the same activity shape on test days.
pub(crate) fn emit_sparse_host(day: &mut DayBuilder, global_day: u32, is_test: bool, volume: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), INVENTORY_PATH);
    day.emit(
        me.clone(),
        ActionKind::Read,
        EntityAttrs::file("/etc/inventoryd.conf"),
    );
    day.emit(
        me.clone(),
        ActionKind::Read,
        EntityAttrs::file("/etc/machine-id"),
    );
    for k in 0..volume {
        let content = if is_test {
            format!("inventory probe d{global_day} #{k:04}")
        } else {
            format!("inventory probe #{k:04}")
        };
        day.emit(
            me.clone(),
            ActionKind::RunScript,
            EntityAttrs::script(content),
        );
    }
    day.record_step(StepCount {
        template: "fp_sparse".into(),
        step: "run_inventory_scripts".into(),
        action: ActionKind::RunScript,
        subject_path: Some(INVENTORY_PATH.into()),
        object_key: None,
        count: volume as u64,
    });
}

/// Semantic-change archetype: a reporting job with a fixed behavioral shape
/// whose file names and destination address rotate on test days.
pub(crate) fn emit_semantic_reporter(day: &mut DayBuilder, is_test: bool, global_day: u32) {
    let me = EntityAttrs::process(day.fresh_pid(), REPORTER_PATH);
    let (cfg, report_stem, ip) = if is_test {
        (
            format!("/opt/report/cfg_d{global_day}.yaml"),
            format!("/srv/reports/daily_d{global_day}"),
            format!("10.8.0.{}", 10 + global_day % 200),
        )
    } else {
        (
            "/opt/report/cfg_alpha.yaml".to_string(),
            "/srv/reports/daily_alpha".to_string(),
            "10.8.0.1".to_string(),
        )
    };
    let rounds = 4;
    for r in 0..rounds {
        day.emit(me.clone(), ActionKind::Read, EntityAttrs::file(&cfg));
        for w in 0..6 {
            day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!("{report_stem}_{r}_{w}.dat")),
            );
        }
        let port = ephemeral_port(day);
        day.emit(me.clone(), ActionKind::Connect, net(port, None, &ip, 8080));
        for _ in 0..2 {
            let port = ephemeral_port(day);
            day.emit(me.clone(), ActionKind::Send, net(port, None, &ip, 8080));
        }
    }
    day.record_step(StepCount {
        template: "fp_semantic_change".into(),
        step: "report_writes".into(),
        action: ActionKind::Write,
        subject_path: Some(REPORTER_PATH.into()),
        object_key: None,
        count: rounds as u64 * 6,
    });
    day.record_step(StepCount {
        template: "fp_semantic_change".into(),
        step: "report_reads".into(),
        action: ActionKind::Read,
        subject_path: Some(REPORTER_PATH.into()),
        object_key: None,
        count: rounds as u64,
    });
}

/// Unknown archetype: a meeting-session fleet of fresh worker processes
/// downloading images, with structure absent from training days. The fleet
/// grows with the test-day index so novelty (and FPR) trends upward.
pub(crate) fn emit_unknown_fleet(day: &mut DayBuilder, test_day: u32) {
    let fleet = 120 + 6 * test_day;
    let cdn: Vec<(String, String)> = (0..4)
        .map(|j| {
            (
                format!("cdn-d{test_day}-{j}.meetingcdn.example"),
                format!("203.0.113.{}", (test_day * 4 + j) % 250),
            )
        })
        .collect();
    let cdn_pick = |day: &mut DayBuilder| day.rng.random_range(0..cdn.len());
    for i in 0..fleet {
        let path = format!("/opt/meetings/s{test_day}/fetch_{i:02}");
        let me = EntityAttrs::process(day.fresh_pid(), &path);
        day.emit(
            me.clone(),
            ActionKind::Read,
            EntityAttrs::file("/etc/meetingd.conf"),
        );
        for _ in 0..6 {
            let codec = MEETING_CODECS[day.rng.random_range(0..MEETING_CODECS.len())];
            day.emit(me.clone(), ActionKind::Load, EntityAttrs::file(codec));
        }
        for _ in 0..3 {
            let (domain, ip) = &cdn[cdn_pick(day)];
            let port = ephemeral_port(day);
            day.emit(
                me.clone(),
                ActionKind::Connect,
                net(port, Some(domain.as_str()), ip, 443),
            );
        }
        for _ in 0..4 {
            let (domain, ip) = &cdn[cdn_pick(day)];
            let port = ephemeral_port(day);
            day.emit(
                me.clone(),
                ActionKind::Recv,
                net(port, Some(domain.as_str()), ip, 443),
            );
        }
        for w in 0..8 {
            day.emit(
                me.clone(),
                ActionKind::Write,
                EntityAttrs::file(format!(
                    "/home/user/Pictures/meeting_{test_day}/img_{i}_{w}.jpg"
                )),
            );
        }
        for _ in 0..5 {
            let (domain, ip) = &cdn[cdn_pick(day)];
            let port = ephemeral_port(day);
            day.emit(
                me.clone(),
                ActionKind::Send,
                net(port, Some(domain.as_str()), ip, 443),
            );
        }
    }
    // One conf read per worker: the recountable fingerprint of fleet size.
    day.record_step(StepCount {
        template: "fp_unknown".into(),
        step: "fleet_conf_reads".into(),
        action: ActionKind::Read,
        subject_path: None,
        object_key: Some("file:/etc/meetingd.conf".into()),
        count: fleet as u64,
    });
}
