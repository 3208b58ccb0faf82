//! Scenario replay: fuse the active cluster's graph at every tick, reveal
//! structures, then fold per-structure hit histories through the k-of-m rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fusion::{integrated_graph, ColoredGraph, FusionError};
use crate::model::{ClusterId, Scenario, SystemModel};
use crate::reveal::{reveal, RevealError, RevealedStructure, StructureSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("tick {tick} out of range 0..{ticks}")]
    TickOutOfRange { tick: usize, ticks: usize },
    #[error("invalid track config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Reveal(#[from] RevealError),
}

/// The k-of-m rule parameters: a track is active when its structure was
/// revealed in at least `k` of the last `m` ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    pub k: usize,
    pub m: usize,
}

impl TrackConfig {
    pub fn new(k: usize, m: usize) -> Result<Self, StreamError> {
        let cfg = Self { k, m };
        cfg.check().map(|_| cfg)
    }

    pub fn check(&self) -> Result<(), StreamError> {
        if self.k == 0 || self.m < self.k {
            return Err(StreamError::InvalidConfig(format!(
                "need 1 <= k <= m, got k={} m={}",
                self.k, self.m
            )));
        }
        Ok(())
    }
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self { k: 2, m: 3 }
    }
}

/// Number of hits in the window `max(0, tick-m+1)..=tick`.
fn window_hits(hits: &[bool], tick: usize, m: usize) -> usize {
    let start = (tick + 1).saturating_sub(m);
    hits[start..=tick].iter().filter(|&&h| h).count()
}

/// k-of-m test at `tick`. Positions before tick 0 count as misses.
pub fn k_of_m(hits: &[bool], tick: usize, cfg: TrackConfig) -> bool {
    window_hits(hits, tick, cfg.m) >= cfg.k
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    /// No hit in the window.
    Absent,
    /// Some hits in the window, fewer than `k`.
    Candidate,
    Active,
}

mod bits {
    use super::*;

    pub fn serialize<S: Serializer>(hits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(hits.iter().map(|&h| u8::from(h)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("hit must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}

/// Lifecycle record of one monitored structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub id: String,
    /// The structure as first revealed.
    pub structure: RevealedStructure,
    #[serde(with = "bits")]
    pub hits: Vec<bool>,
    pub status: Vec<TrackStatus>,
    pub initiated_at: Option<usize>,
    pub active_ticks: Vec<usize>,
}

impl Track {
    pub fn hit_ticks(&self) -> Vec<usize> {
        self.hits
            .iter()
            .enumerate()
            .filter_map(|(t, &h)| h.then_some(t))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    pub cluster: Option<ClusterId>,
    pub vertices: usize,
    pub edges: usize,
    pub revealed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackLog {
    pub ticks: Vec<TickRecord>,
    pub tracks: BTreeMap<String, Track>,
}

impl TrackLog {
    /// Ticks at which the structure with this id was revealed.
    pub fn hit_ticks(&self, id: &str) -> Vec<usize> {
        self.tracks.get(id).map(Track::hit_ticks).unwrap_or_default()
    }
}

/// Integrated graph of the cluster active at `tick`; empty on idle ticks.
pub fn tick_graph(
    model: &SystemModel,
    scenario: &Scenario,
    tick: usize,
) -> Result<ColoredGraph, StreamError> {
    let states = scenario
        .states_at(tick)
        .ok_or(StreamError::TickOutOfRange {
            tick,
            ticks: scenario.ticks,
        })?;
    match scenario.chain.get(tick).and_then(Option::as_ref) {
        Some(cluster) => Ok(integrated_graph(model, cluster.as_str(), &states)?),
        None => Ok(ColoredGraph::empty(model.scale.levels)),
    }
}

/// Structures revealed at one tick, independent of any run history.
pub fn reveal_at(
    model: &SystemModel,
    scenario: &Scenario,
    tick: usize,
    spec: &StructureSpec,
) -> Result<Vec<RevealedStructure>, StreamError> {
    let graph = tick_graph(model, scenario, tick)?;
    Ok(reveal(&graph, spec)?)
}

/// Replays the scenario and builds the track log.
pub fn run(
    model: &SystemModel,
    scenario: &Scenario,
    spec: &StructureSpec,
    cfg: TrackConfig,
) -> Result<TrackLog, StreamError> {
    cfg.check()?;
    spec.check(model.scale.levels)?;
    let ticks = scenario.ticks;
    let mut records = Vec::with_capacity(ticks);
    let mut first_seen: BTreeMap<String, RevealedStructure> = BTreeMap::new();
    let mut hits: BTreeMap<String, Vec<bool>> = BTreeMap::new();

    for tick in 0..ticks {
        let graph = tick_graph(model, scenario, tick)?;
        let found = reveal(&graph, spec)?;
        for s in &found {
            hits.entry(s.id.clone()).or_insert_with(|| vec![false; ticks])[tick] = true;
            first_seen.entry(s.id.clone()).or_insert_with(|| s.clone());
        }
        records.push(TickRecord {
            tick,
            cluster: scenario.chain[tick].clone(),
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            revealed: found.into_iter().map(|s| s.id).collect(),
        });
    }

    let tracks = hits
        .into_iter()
        .map(|(id, hits)| {
            let status: Vec<TrackStatus> = (0..ticks)
                .map(|t| match window_hits(&hits, t, cfg.m) {
                    0 => TrackStatus::Absent,
                    n if n < cfg.k => TrackStatus::Candidate,
                    _ => TrackStatus::Active,
                })
                .collect();
            let active_ticks: Vec<usize> = status
                .iter()
                .enumerate()
                .filter_map(|(t, &s)| (s == TrackStatus::Active).then_some(t))
                .collect();
            let track = Track {
                structure: first_seen.remove(&id).expect("hit implies first sighting"),
                id: id.clone(),
                hits,
                status,
                initiated_at: active_ticks.first().copied(),
                active_ticks,
            };
            (id, track)
        })
        .collect();

    Ok(TrackLog {
        ticks: records,
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::testutil::REFERENCE;
    use proptest::prelude::*;

    fn reference() -> (SystemModel, Scenario) {
        let doc = parse_model(REFERENCE).unwrap();
        (doc.model, doc.scenario.unwrap())
    }

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn k_of_m_examples() {
        let hits = bits(&[0, 1, 0, 1, 1, 0]);
        let cfg = TrackConfig::new(2, 3).unwrap();
        assert!(k_of_m(&hits, 3, cfg));
        assert!(!k_of_m(&hits, 2, cfg));
        assert!(k_of_m(&[true], 0, TrackConfig::new(1, 3).unwrap()));
    }

    #[test]
    fn config_bounds() {
        assert!(TrackConfig::new(0, 3).is_err());
        assert!(TrackConfig::new(4, 3).is_err());
        assert!(TrackConfig::new(3, 3).is_ok());
    }

    #[test]
    fn tick_graphs() {
        let (m, sc) = reference();
        let g1 = tick_graph(&m, &sc, 1).unwrap();
        assert_eq!((g1.vertex_count(), g1.edge_count()), (8, 15));
        let g2 = tick_graph(&m, &sc, 2).unwrap();
        let ids: Vec<_> = g2.vertices().iter().map(|v| v.as_str()).collect();
        assert_eq!(ids, ["s5", "s6", "s7", "s8"]);
        assert_eq!(g2.edge_count(), 5);
        assert_eq!(
            tick_graph(&m, &sc, 6),
            Err(StreamError::TickOutOfRange { tick: 6, ticks: 6 })
        );
    }

    #[test]
    fn idle_tick_is_empty() {
        let (m, mut sc) = reference();
        sc.chain[2] = None;
        assert!(tick_graph(&m, &sc, 2).unwrap().is_empty());
    }

    #[test]
    fn reference_tracks() {
        let (m, sc) = reference();
        let log = run(&m, &sc, &StructureSpec::clique(1, 3), TrackConfig::new(2, 3).unwrap()).unwrap();
        assert_eq!(log.tracks.len(), 1);
        let t = &log.tracks["Clique/1/s3,s5,s6"];
        assert_eq!(t.hit_ticks(), vec![1, 3, 4]);
        assert_eq!(t.active_ticks, vec![3, 4, 5]);
        assert_eq!(t.initiated_at, Some(3));
        use TrackStatus::*;
        assert_eq!(t.status, vec![Absent, Candidate, Candidate, Active, Active, Active]);
        assert_eq!(log.ticks[1].revealed, vec!["Clique/1/s3,s5,s6".to_string()]);
        assert!(log.ticks[2].revealed.is_empty());
    }

    #[test]
    fn all_idle_has_no_tracks() {
        let (m, mut sc) = reference();
        sc.chain = vec![None; sc.ticks];
        let log = run(&m, &sc, &StructureSpec::clique(1, 1), TrackConfig::default()).unwrap();
        assert!(log.tracks.is_empty());
        assert!(log.ticks.iter().all(|r| r.vertices == 0));
    }

    #[test]
    fn degenerate_window_tracks_hits() {
        let (m, sc) = reference();
        let spec = StructureSpec {
            sub_size_floor: Some(1),
            ..StructureSpec::clique(2, 3)
        };
        let log = run(&m, &sc, &spec, TrackConfig::new(1, 1).unwrap()).unwrap();
        assert!(log.tracks.len() > 1);
        for t in log.tracks.values() {
            assert_eq!(t.active_ticks, t.hit_ticks());
        }
    }

    #[test]
    fn cluster_sized_min_size_sees_f3_pair() {
        let (m, sc) = reference();
        let spec = StructureSpec::default();
        let log = run(&m, &sc, &spec, TrackConfig::default()).unwrap();
        assert_eq!(log.hit_ticks("Clique/1/s5,s6"), vec![2]);
        assert_eq!(log.hit_ticks("Clique/1/s3,s5,s6"), vec![1, 3, 4]);
    }

    #[test]
    fn edge_requirement_blocks_other_clusters() {
        let (m, mut sc) = reference();
        sc.chain = ["F2", "F3", "F2", "F3", "F2", "F3"].iter().map(|&c| Some(c.into())).collect();
        let log = run(&m, &sc, &StructureSpec::clique(1, 2), TrackConfig::default()).unwrap();
        assert!(log.hit_ticks("Clique/1/s3,s5,s6").is_empty());
        assert!(log.tracks.values().all(|t| t.hits.iter().any(|&h| h)));
    }

    #[test]
    fn log_json_shape() {
        let (m, sc) = reference();
        let log = run(&m, &sc, &StructureSpec::clique(1, 3), TrackConfig::default()).unwrap();
        let v = serde_json::to_value(&log).unwrap();
        assert_eq!(v["tracks"]["Clique/1/s3,s5,s6"]["hits"], serde_json::json!([0, 1, 0, 1, 1, 0]));
        assert_eq!(v["tracks"]["Clique/1/s3,s5,s6"]["initiated_at"], 3);
        assert_eq!(v["ticks"][0]["cluster"], "F2");
        let back: TrackLog = serde_json::from_value(v).unwrap();
        assert_eq!(back, log);
    }

    proptest! {
        #[test]
        fn status_is_window_function(hits in proptest::collection::vec(any::<bool>(), 1..40), k in 1usize..=8, extra in 0usize..=7) {
            let m = (k + extra).min(8);
            let cfg = TrackConfig::new(k.min(m), m).unwrap();
            for t in 0..hits.len() {
                let lo = t.saturating_sub(cfg.m - 1);
                let count = (lo..=t).filter(|&i| hits[i]).count();
                prop_assert_eq!(k_of_m(&hits, t, cfg), count >= cfg.k);
            }
        }
    }
}
