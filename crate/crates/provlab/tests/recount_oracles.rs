//! Independent recount oracles over the seeded default scenario: graph
//! stats against a raw-event inspector, model vector counts against
//! brute-force re-extraction, and process profiles against an event grep.

use std::collections::{BTreeMap, BTreeSet};

use provlab::gen::{generate_events, AttackKind, ScenarioSpec};
use provlab_core::detector::train;
use provlab_core::event::Event;
use provlab_core::features::{neighborhood_tuples, vectorize, TupleUniverse};
use provlab_core::fp_reduction::profile;
use provlab_core::graph::{canonical_key, entity_key, graph_stats, ProvGraph, StrategyPreset};

fn seeded_trace() -> Vec<Event> {
    let spec = ScenarioSpec {
        seed: 42,
        train_days: 1,
        days: 1,
        attacks: [AttackKind::Mining].into_iter().collect(),
        scale: 3_000,
        ..ScenarioSpec::default()
    };
    generate_events(&spec)
        .unwrap()
        .test
        .into_iter()
        .next()
        .unwrap()
}

#[test]
fn graph_stats_match_raw_event_inspection() {
    let events = seeded_trace();
    let strategy = StrategyPreset::Default.strategy();
    let g = ProvGraph::build(&events, &strategy).unwrap();
    let stats = graph_stats(&g);

    // Inspector: distinct canonical identity strings over raw events.
    let mut identities: BTreeSet<String> = BTreeSet::new();
    let mut entities: BTreeSet<String> = BTreeSet::new();
    let mut kind_of: BTreeMap<String, String> = BTreeMap::new();
    for e in &events {
        for attrs in [&e.subject, &e.object] {
            let key = canonical_key(attrs, &strategy).unwrap();
            kind_of
                .entry(key.clone())
                .or_insert_with(|| attrs.kind.as_str().to_string());
            identities.insert(key);
            entities.insert(entity_key(attrs).unwrap());
        }
    }
    assert_eq!(stats.node_count, identities.len());
    assert_eq!(stats.edge_count, events.len());
    assert_eq!(stats.entity_count, entities.len());

    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for kind in kind_of.values() {
        *kinds.entry(kind.clone()).or_insert(0) += 1;
    }
    assert_eq!(stats.nodes_by_kind, kinds);
}

#[test]
fn model_vector_count_matches_bruteforce_reextraction() {
    let events = seeded_trace();
    let g = ProvGraph::build(&events, &StrategyPreset::Default.strategy()).unwrap();
    let model = train(&g, 2, 100).unwrap();

    let universe = TupleUniverse::from_graph(&g);
    let mut distinct: BTreeSet<Vec<u32>> = BTreeSet::new();
    for n in g.nodes() {
        let tuples = neighborhood_tuples(&g, n.uuid, 2, 100).unwrap();
        distinct.insert(vectorize(&tuples, &universe, n.uuid).unwrap().counts);
    }
    assert_eq!(model.vector_count(), distinct.len());
    assert_eq!(model.train_node_count() as usize, g.node_count());
}

#[test]
fn profile_counts_match_event_grep() {
    let events = seeded_trace();
    let alerted: BTreeSet<String> = [
        "process:/usr/local/bin/postmaster".to_string(),
        "process:/usr/sbin/crond".to_string(),
    ]
    .into();
    let profiles = profile(&events, &alerted).unwrap();
    assert_eq!(profiles.len(), 2);
    for p in &profiles {
        let grep = events
            .iter()
            .filter(|e| entity_key(&e.subject).unwrap() == p.process)
            .count();
        assert_eq!(p.behaviors.len(), grep, "profile {}", p.process);
    }
}
