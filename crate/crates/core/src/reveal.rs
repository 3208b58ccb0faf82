//! Revelation of cliques, quasi-cliques and sub-cliques in a colored graph.
//!
//! A vertex set `S` qualifies under a [`StructureSpec`] when
//!
//! * at most `max_missing_edges` vertex pairs of `S` are non-adjacent,
//! * at most `max_offending_vertices` members have a color above the
//!   threshold `l`, and every such member has a color `<= l'`,
//! * `|S|` reaches the reporting floor.
//!
//! The qualifying predicate is hereditary (dropping a vertex never breaks
//! it), which the maximal-set searches below rely on.

use std::cmp::Ordering;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fusion::ColoredGraph;
use crate::model::{ComponentId, Level};

/// Largest graph the exhaustive oracle accepts.
pub const ORACLE_MAX_VERTICES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RevealError {
    #[error("invalid structure spec: {0}")]
    InvalidSpec(String),
    #[error("vertex `{0}` is not in the graph")]
    UnknownVertex(String),
    #[error("graph has {0} vertices; the oracle handles at most {ORACLE_MAX_VERTICES}")]
    TooLarge(usize),
}

/// Target structure size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MinSize {
    Fixed(usize),
    /// The number of functions fused into the graph.
    #[default]
    Cluster,
}

impl Serialize for MinSize {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MinSize::Fixed(n) => s.serialize_u64(*n as u64),
            MinSize::Cluster => s.serialize_str("cluster"),
        }
    }
}

impl<'de> Deserialize<'de> for MinSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(MinSize::Fixed(n)),
            Raw::S(s) if s == "cluster" => Ok(MinSize::Cluster),
            Raw::S(s) => Err(de::Error::custom(format!(
                "min_size must be an integer or \"cluster\", got {s:?}"
            ))),
        }
    }
}

fn default_true() -> bool {
    true
}

/// Detection parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    /// Threshold `l`: members are expected to have color `<= l`.
    pub threshold: Level,
    #[serde(default)]
    pub min_size: MinSize,
    /// Lowest size still reported; sizes in `[floor, min_size)` come out as
    /// sub-cliques. Defaults to `min_size`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_size_floor: Option<usize>,
    #[serde(default, rename = "quasi_edges")]
    pub max_missing_edges: usize,
    #[serde(default, rename = "quasi_vertices")]
    pub max_offending_vertices: usize,
    /// Cap `l'` on the colors of offending vertices. Defaults to
    /// `min(l + 1, L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_threshold: Option<Level>,
    #[serde(default = "default_true")]
    pub maximal_only: bool,
}

impl Default for StructureSpec {
    fn default() -> Self {
        Self {
            threshold: 1,
            min_size: MinSize::Cluster,
            sub_size_floor: None,
            max_missing_edges: 0,
            max_offending_vertices: 0,
            secondary_threshold: None,
            maximal_only: true,
        }
    }
}

impl StructureSpec {
    pub fn clique(threshold: Level, min_size: usize) -> Self {
        Self {
            threshold,
            min_size: MinSize::Fixed(min_size),
            ..Self::default()
        }
    }

    pub fn quasi(threshold: Level, min_size: usize, missing_edges: usize, offending: usize) -> Self {
        Self {
            max_missing_edges: missing_edges,
            max_offending_vertices: offending,
            ..Self::clique(threshold, min_size)
        }
    }

    pub fn is_quasi(&self) -> bool {
        self.max_missing_edges + self.max_offending_vertices > 0
    }

    /// Checks the spec against a scale with `levels` levels.
    pub fn check(&self, levels: Level) -> Result<(), RevealError> {
        let bad = |m: String| Err(RevealError::InvalidSpec(m));
        if !(1..=levels).contains(&self.threshold) {
            return bad(format!("threshold {} outside 1..={levels}", self.threshold));
        }
        if let Some(l2) = self.secondary_threshold {
            if l2 < self.threshold || l2 > levels {
                return bad(format!(
                    "secondary threshold {l2} outside {}..={levels}",
                    self.threshold
                ));
            }
        }
        if self.min_size == MinSize::Fixed(0) {
            return bad("min_size must be >= 1".into());
        }
        match (self.sub_size_floor, self.min_size) {
            (Some(0), _) => bad("sub_size_floor must be >= 1".into()),
            (Some(f), MinSize::Fixed(n)) if f > n => {
                bad(format!("sub_size_floor {f} exceeds min_size {n}"))
            }
            _ => Ok(()),
        }
    }

    /// Binds the spec to a concrete graph.
    pub fn resolve(&self, graph: &ColoredGraph) -> Result<ResolvedSpec, RevealError> {
        self.check(graph.levels())?;
        let min_size = match self.min_size {
            MinSize::Fixed(n) => n,
            MinSize::Cluster => graph.function_count().max(1),
        };
        let secondary = self
            .secondary_threshold
            .unwrap_or_else(|| self.threshold.saturating_add(1).min(graph.levels()));
        Ok(ResolvedSpec {
            threshold: self.threshold,
            secondary,
            max_missing_edges: self.max_missing_edges,
            max_offending: self.max_offending_vertices,
            min_size,
            floor: self.sub_size_floor.unwrap_or(min_size).min(min_size),
            maximal_only: self.maximal_only,
        })
    }
}

/// A [`StructureSpec`] with every default filled in for one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolvedSpec {
    pub threshold: Level,
    pub secondary: Level,
    pub max_missing_edges: usize,
    pub max_offending: usize,
    pub min_size: usize,
    pub floor: usize,
    pub maximal_only: bool,
}

impl ResolvedSpec {
    /// Whether a vertex of this color can belong to a qualifying set at all.
    pub fn eligible(&self, color: Level) -> bool {
        if self.max_offending == 0 {
            color <= self.threshold
        } else {
            color <= self.secondary
        }
    }

    fn offends(&self, color: Level) -> bool {
        color > self.threshold
    }

    /// Qualifying predicate without the size requirement.
    pub fn admits(&self, graph: &ColoredGraph, set: &[usize]) -> bool {
        let (missing, offending) = deficiency(graph, set, self.threshold);
        set.iter().all(|&v| self.eligible(graph.color(v)))
            && missing <= self.max_missing_edges
            && offending <= self.max_offending
    }
}

fn deficiency(graph: &ColoredGraph, set: &[usize], threshold: Level) -> (usize, usize) {
    let mut missing = 0;
    for (a, &i) in set.iter().enumerate() {
        missing += set[a + 1..].iter().filter(|&&j| !graph.adjacent(i, j)).count();
    }
    let offending = set.iter().filter(|&&v| graph.color(v) > threshold).count();
    (missing, offending)
}

/// Structure taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    Clique,
    QuasiEdge,
    QuasiVertex,
    QuasiBoth,
    SubClique,
    QuasiSubClique,
}

impl Kind {
    pub fn from_counts(missing: usize, offending: usize, size: usize, min_size: usize) -> Self {
        let undersized = size < min_size;
        match (missing > 0, offending > 0, undersized) {
            (false, false, false) => Kind::Clique,
            (false, false, true) => Kind::SubClique,
            (_, _, true) => Kind::QuasiSubClique,
            (true, false, false) => Kind::QuasiEdge,
            (false, true, false) => Kind::QuasiVertex,
            (true, true, false) => Kind::QuasiBoth,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Clique => "Clique",
            Kind::QuasiEdge => "QuasiEdge",
            Kind::QuasiVertex => "QuasiVertex",
            Kind::QuasiBoth => "QuasiBoth",
            Kind::SubClique => "SubClique",
            Kind::QuasiSubClique => "QuasiSubClique",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A revealed clique-like structure ("critical unit subset").
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedStructure {
    pub id: String,
    pub kind: Kind,
    /// Member ids in ascending order.
    pub vertices: Vec<ComponentId>,
    /// Non-adjacent member pairs, each ordered and the list sorted.
    pub missing_edges: Vec<(ComponentId, ComponentId)>,
    /// Members whose color exceeds the threshold.
    pub offending_vertices: Vec<ComponentId>,
    pub threshold: Level,
}

impl RevealedStructure {
    fn from_indices(graph: &ColoredGraph, set: &[usize], spec: &ResolvedSpec) -> Self {
        let mut vertices: Vec<ComponentId> = set.iter().map(|&i| graph.vertex(i).clone()).collect();
        vertices.sort();
        let mut missing_edges = Vec::new();
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                if !graph.adjacent(i, j) {
                    let (x, y) = (graph.vertex(i).clone(), graph.vertex(j).clone());
                    missing_edges.push(if x < y { (x, y) } else { (y, x) });
                }
            }
        }
        missing_edges.sort();
        let mut offending_vertices: Vec<ComponentId> = set
            .iter()
            .filter(|&&i| spec.offends(graph.color(i)))
            .map(|&i| graph.vertex(i).clone())
            .collect();
        offending_vertices.sort();
        let kind = Kind::from_counts(
            missing_edges.len(),
            offending_vertices.len(),
            set.len(),
            spec.min_size,
        );
        let mut s = Self {
            id: String::new(),
            kind,
            vertices,
            missing_edges,
            offending_vertices,
            threshold: spec.threshold,
        };
        s.id = canonical_id(&s);
        s
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vertices.iter().any(|v| v.as_str() == id)
    }
}

/// `kind/threshold/v1,v2,...` with the vertex ids sorted.
pub fn canonical_id(s: &RevealedStructure) -> String {
    let mut ids: Vec<&str> = s.vertices.iter().map(ComponentId::as_str).collect();
    ids.sort_unstable();
    format!("{}/{}/{}", s.kind, s.threshold, ids.join(","))
}

fn output_order(a: &RevealedStructure, b: &RevealedStructure) -> Ordering {
    b.size()
        .cmp(&a.size())
        .then_with(|| a.vertices.cmp(&b.vertices))
}

fn finish(graph: &ColoredGraph, sets: Vec<Vec<usize>>, spec: &ResolvedSpec) -> Vec<RevealedStructure> {
    let mut out: Vec<_> = sets
        .iter()
        .map(|s| RevealedStructure::from_indices(graph, s, spec))
        .collect();
    out.sort_by(output_order);
    out.dedup_by(|a, b| a.vertices == b.vertices);
    out
}

/// Runs [`find_cliques`] or [`find_quasi`] depending on the deficiency
/// budgets.
pub fn reveal(graph: &ColoredGraph, spec: &StructureSpec) -> Result<Vec<RevealedStructure>, RevealError> {
    if spec.is_quasi() {
        find_quasi(graph, spec)
    } else {
        find_cliques(graph, spec)
    }
}

/// Maximal cliques of the subgraph induced by vertices of color `<= l`
/// (Bron–Kerbosch with pivoting). Deficiency budgets are ignored.
pub fn find_cliques(graph: &ColoredGraph, spec: &StructureSpec) -> Result<Vec<RevealedStructure>, RevealError> {
    let mut rs = spec.resolve(graph)?;
    rs.max_missing_edges = 0;
    rs.max_offending = 0;
    let low: Vec<usize> = (0..graph.vertex_count())
        .filter(|&v| graph.color(v) <= rs.threshold)
        .collect();
    let mut found = Vec::new();
    if rs.maximal_only {
        bron_kerbosch(graph, Vec::new(), low, Vec::new(), rs.floor, &mut found);
    } else {
        all_cliques(graph, &mut Vec::new(), &low, rs.floor, &mut found);
    }
    Ok(finish(graph, found, &rs))
}

fn bron_kerbosch(
    g: &ColoredGraph,
    r: Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    floor: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() && !r.is_empty() && r.len() >= floor {
            out.push(r);
        }
        return;
    }
    if r.len() + p.len() < floor {
        return;
    }
    // pivot: vertex of P ∪ X with most neighbours in P
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| (p.iter().filter(|&&v| g.adjacent(u, v)).count(), std::cmp::Reverse(u)))
        .expect("p is non-empty");
    let todo: Vec<usize> = p.iter().copied().filter(|&v| !g.adjacent(pivot, v)).collect();
    for v in todo {
        let mut next_r = r.clone();
        next_r.push(v);
        let next_p = p.iter().copied().filter(|&u| g.adjacent(v, u)).collect();
        let next_x = x.iter().copied().filter(|&u| g.adjacent(v, u)).collect();
        bron_kerbosch(g, next_r, next_p, next_x, floor, out);
        p.retain(|&u| u != v);
        x.push(v);
    }
}

fn all_cliques(g: &ColoredGraph, current: &mut Vec<usize>, cand: &[usize], floor: usize, out: &mut Vec<Vec<usize>>) {
    for (i, &v) in cand.iter().enumerate() {
        current.push(v);
        if current.len() >= floor {
            out.push(current.clone());
        }
        let next: Vec<usize> = cand[i + 1..].iter().copied().filter(|&u| g.adjacent(v, u)).collect();
        all_cliques(g, current, &next, floor, out);
        current.pop();
    }
}

/// Search state for the quasi-clique branch and bound.
struct QuasiSearch<'a> {
    g: &'a ColoredGraph,
    spec: ResolvedSpec,
    out: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct Partial {
    members: Vec<usize>,
    missing: usize,
    offending: usize,
}

impl QuasiSearch<'_> {
    /// The partial set extended by `v`, if that stays within budget.
    fn extend(&self, s: &Partial, v: usize) -> Option<Partial> {
        let missing = s.missing + s.members.iter().filter(|&&u| !self.g.adjacent(u, v)).count();
        let offending = s.offending + usize::from(self.spec.offends(self.g.color(v)));
        if missing > self.spec.max_missing_edges || offending > self.spec.max_offending {
            return None;
        }
        let mut members = s.members.clone();
        members.push(v);
        Some(Partial {
            members,
            missing,
            offending,
        })
    }

    fn addable(&self, s: &Partial, v: usize) -> bool {
        self.extend(s, v).is_some()
    }

    // Bron–Kerbosch generalised to a hereditary predicate: a vertex that
    // cannot be added to S cannot be added to any superset of S, so P and X
    // only ever shrink along a branch.
    fn maximal(&mut self, s: Partial, mut p: Vec<usize>, mut x: Vec<usize>) {
        if p.is_empty() {
            if x.is_empty() && !s.members.is_empty() && s.members.len() >= self.spec.floor {
                self.out.push(s.members);
            }
            return;
        }
        if s.members.len() + p.len() < self.spec.floor {
            return;
        }
        while let Some(&v) = p.first() {
            p.remove(0);
            let next = self.extend(&s, v).expect("P holds addable vertices only");
            let np = p.iter().copied().filter(|&u| self.addable(&next, u)).collect();
            let nx = x.iter().copied().filter(|&u| self.addable(&next, u)).collect();
            self.maximal(next, np, nx);
            x.push(v);
        }
    }

    fn every(&mut self, s: &Partial, cand: &[usize]) {
        for (i, &v) in cand.iter().enumerate() {
            if let Some(next) = self.extend(s, v) {
                if next.members.len() >= self.spec.floor {
                    self.out.push(next.members.clone());
                }
                self.every(&next, &cand[i + 1..]);
            }
        }
    }
}

/// Maximal vertex sets within the missing-edge and offending-vertex budgets,
/// classified by kind.
pub fn find_quasi(graph: &ColoredGraph, spec: &StructureSpec) -> Result<Vec<RevealedStructure>, RevealError> {
    let rs = spec.resolve(graph)?;
    let eligible: Vec<usize> = (0..graph.vertex_count())
        .filter(|&v| rs.eligible(graph.color(v)))
        .collect();
    let mut search = QuasiSearch {
        g: graph,
        spec: rs,
        out: Vec::new(),
    };
    let root = Partial {
        members: Vec::new(),
        missing: 0,
        offending: 0,
    };
    if rs.maximal_only {
        search.maximal(root, eligible, Vec::new());
    } else {
        search.every(&root, &eligible);
    }
    let found = search.out;
    Ok(finish(graph, found, &rs))
}

/// Exhaustive reference: scans all `2^|V|` vertex subsets.
pub fn oracle(graph: &ColoredGraph, spec: &StructureSpec) -> Result<Vec<RevealedStructure>, RevealError> {
    let n = graph.vertex_count();
    if n > ORACLE_MAX_VERTICES {
        return Err(RevealError::TooLarge(n));
    }
    let mut rs = spec.resolve(graph)?;
    if !spec.is_quasi() {
        rs.max_missing_edges = 0;
        rs.max_offending = 0;
    }
    let adj: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| graph.adjacent(i, j)).fold(0, |m, j| m | 1 << j))
        .collect();
    let total = 1usize << n;
    let mut missing = vec![0u32; total];
    let mut offending = vec![0u32; total];
    let mut ok = vec![false; total];
    ok[0] = true;
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let color = graph.color(low);
        missing[mask] = missing[rest] + (rest as u32 & !adj[low]).count_ones();
        offending[mask] = offending[rest] + u32::from(color > rs.threshold);
        let in_range = if rs.max_offending == 0 {
            color <= rs.threshold
        } else {
            color <= rs.secondary
        };
        ok[mask] = ok[rest]
            && in_range
            && missing[mask] as usize <= rs.max_missing_edges
            && offending[mask] as usize <= rs.max_offending;
    }
    let mut sets = Vec::new();
    for mask in 1..total {
        if !ok[mask] || (mask.count_ones() as usize) < rs.floor {
            continue;
        }
        if rs.maximal_only && (0..n).any(|v| mask & 1 << v == 0 && ok[mask | 1 << v]) {
            continue;
        }
        sets.push((0..n).filter(|&v| mask & 1 << v != 0).collect());
    }
    Ok(finish(graph, sets, &rs))
}

/// Kind of an arbitrary vertex set under the spec. Budgets are not checked.
pub fn classify<S: AsRef<str>>(
    vertices: &[S],
    graph: &ColoredGraph,
    spec: &StructureSpec,
) -> Result<Kind, RevealError> {
    let rs = spec.resolve(graph)?;
    let idx = vertices
        .iter()
        .map(|v| {
            graph
                .index_of(v.as_ref())
                .ok_or_else(|| RevealError::UnknownVertex(v.as_ref().to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (missing, offending) = deficiency(graph, &idx, rs.threshold);
    Ok(Kind::from_counts(missing, offending, idx.len(), rs.min_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::integrated_graph;
    use crate::model::parse_model;
    use crate::testutil::{reference_states, random_graph, REFERENCE};
    use proptest::prelude::*;

    fn cluster_graph(r: &str) -> ColoredGraph {
        let doc = parse_model(REFERENCE).unwrap();
        integrated_graph(&doc.model, r, &reference_states()).unwrap()
    }

    fn sets(found: &[RevealedStructure]) -> Vec<Vec<&str>> {
        found
            .iter()
            .map(|s| s.vertices.iter().map(|v| v.as_str()).collect())
            .collect()
    }

    fn pair(a: &str, b: &str) -> (ComponentId, ComponentId) {
        (a.into(), b.into())
    }

    #[test]
    fn clique_in_f1() {
        let found = find_cliques(&cluster_graph("F1"), &StructureSpec::clique(1, 3)).unwrap();
        assert_eq!(sets(&found), vec![vec!["s3", "s5", "s6"]]);
        assert_eq!(found[0].id, "Clique/1/s3,s5,s6");
        assert_eq!(found[0].kind, Kind::Clique);
    }

    #[test]
    fn all_best_colors_give_nothing() {
        let g = cluster_graph("F1");
        let g = g.recolored(4, vec![4; 8]);
        assert!(find_cliques(&g, &StructureSpec::clique(1, 1)).unwrap().is_empty());
    }

    #[test]
    fn f2_has_only_pairs() {
        let g = cluster_graph("F2");
        assert!(find_cliques(&g, &StructureSpec::clique(1, 3)).unwrap().is_empty());
        let found = find_cliques(&g, &StructureSpec::clique(1, 2)).unwrap();
        assert_eq!(sets(&found), vec![vec!["s3", "s6"], vec!["s5", "s6"]]);
    }

    #[test]
    fn quasi_by_edges_level_two() {
        let found = find_quasi(&cluster_graph("F1"), &StructureSpec::quasi(2, 4, 1, 0)).unwrap();
        let s = found
            .iter()
            .find(|s| s.id == "QuasiEdge/2/s1,s3,s5,s6")
            .expect("reference quasi-clique (a)");
        assert_eq!(s.missing_edges, vec![pair("s1", "s6")]);
        assert!(s.offending_vertices.is_empty());
    }

    #[test]
    fn quasi_by_edges_level_three() {
        let found = find_quasi(&cluster_graph("F1"), &StructureSpec::quasi(3, 5, 3, 0)).unwrap();
        let s = found
            .iter()
            .find(|s| sets(std::slice::from_ref(s))[0] == ["s1", "s3", "s5", "s6", "s7"])
            .expect("reference quasi-clique (b)");
        assert_eq!(
            s.missing_edges,
            vec![pair("s1", "s6"), pair("s1", "s7"), pair("s3", "s7")]
        );
        assert_eq!(s.kind, Kind::QuasiEdge);
    }

    #[test]
    fn complete_graph_is_one_clique() {
        let ids: Vec<ComponentId> = (0..5).map(|i| format!("v{i}").into()).collect();
        let edges: Vec<_> = ids
            .iter()
            .enumerate()
            .flat_map(|(i, a)| ids[i + 1..].iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        let g = ColoredGraph::new(4, ids.iter().cloned().map(|v| (v, 1)), edges).unwrap();
        for (de, dv) in [(0, 0), (1, 0), (0, 2), (2, 2)] {
            let found = reveal(&g, &StructureSpec::quasi(1, 3, de, dv)).unwrap();
            assert_eq!(found.len(), 1);
            assert_eq!(found[0].size(), 5);
            assert_eq!(found[0].kind, Kind::Clique);
        }
    }

    #[test]
    fn quasi_vertex_uses_secondary_cap() {
        // triangle a(1) b(1) c(3): with l = 1 the default cap is l' = 2
        let g = ColoredGraph::new(
            4,
            vec![("a".into(), 1), ("b".into(), 1), ("c".into(), 3)],
            vec![pair("a", "b"), pair("b", "c"), pair("a", "c")],
        )
        .unwrap();
        let mut spec = StructureSpec::quasi(1, 3, 0, 1);
        assert!(find_quasi(&g, &spec).unwrap().is_empty());
        spec.secondary_threshold = Some(3);
        let found = find_quasi(&g, &spec).unwrap();
        assert_eq!(found[0].id, "QuasiVertex/1/a,b,c");
        assert_eq!(found[0].offending_vertices, vec![ComponentId::from("c")]);
    }

    #[test]
    fn oracle_matches_on_fixture() {
        let g = cluster_graph("F1");
        let spec = StructureSpec::clique(1, 3);
        assert_eq!(oracle(&g, &spec).unwrap(), find_cliques(&g, &spec).unwrap());
        assert!(oracle(&ColoredGraph::empty(4), &spec).unwrap().is_empty());
    }

    #[test]
    fn oracle_rejects_large_graphs() {
        let g = random_graph(&mut crate::testutil::rng(1), 21, 4, 0.5);
        assert_eq!(oracle(&g, &StructureSpec::clique(1, 1)), Err(RevealError::TooLarge(21)));
    }

    #[test]
    fn canonical_ids() {
        let g = cluster_graph("F1");
        let mut s = find_cliques(&g, &StructureSpec::clique(1, 3)).unwrap().remove(0);
        s.vertices = vec!["s5".into(), "s3".into(), "s6".into()];
        assert_eq!(canonical_id(&s), "Clique/1/s3,s5,s6");
        s.vertices.reverse();
        assert_eq!(canonical_id(&s), "Clique/1/s3,s5,s6");
    }

    #[test]
    fn classification() {
        let g1 = cluster_graph("F1");
        assert_eq!(classify(&["s3", "s5", "s6"], &g1, &StructureSpec::clique(1, 3)), Ok(Kind::Clique));
        assert_eq!(
            classify(&["s1", "s3", "s5", "s6"], &g1, &StructureSpec::quasi(2, 4, 1, 0)),
            Ok(Kind::QuasiEdge)
        );
        let g3 = cluster_graph("F3");
        assert_eq!(classify(&["s5", "s6"], &g3, &StructureSpec::clique(1, 3)), Ok(Kind::SubClique));
        assert_eq!(
            classify(&["s5", "s7"], &g3, &StructureSpec::clique(1, 3)),
            Ok(Kind::QuasiSubClique)
        );
        assert_eq!(
            classify(&["s5", "s6", "s7"], &g3, &StructureSpec::clique(1, 3)),
            Ok(Kind::QuasiVertex)
        );
        assert_eq!(
            classify(&["s9"], &g3, &StructureSpec::clique(1, 3)),
            Err(RevealError::UnknownVertex("s9".into()))
        );
    }

    #[test]
    fn sub_cliques_below_cluster_size() {
        let g3 = cluster_graph("F2");
        let spec = StructureSpec {
            sub_size_floor: Some(2),
            ..StructureSpec::clique(1, 3)
        };
        let found = find_cliques(&g3, &spec).unwrap();
        assert_eq!(found.len(), 2);
        assert!(found.iter().all(|s| s.kind == Kind::SubClique));
        assert_eq!(found[0].id, "SubClique/1/s3,s6");
    }

    #[test]
    fn cluster_min_size_resolves_to_function_count() {
        let g3 = cluster_graph("F3");
        let spec = StructureSpec {
            min_size: MinSize::Cluster,
            ..StructureSpec::default()
        };
        assert_eq!(sets(&find_cliques(&g3, &spec).unwrap()), vec![vec!["s5", "s6"]]);
        assert!(find_cliques(&cluster_graph("F2"), &spec).unwrap().is_empty());
    }

    #[test]
    fn non_maximal_enumeration() {
        let spec = StructureSpec {
            maximal_only: false,
            ..StructureSpec::clique(1, 2)
        };
        let g = cluster_graph("F1");
        let found = find_cliques(&g, &spec).unwrap();
        assert_eq!(
            sets(&found),
            vec![vec!["s3", "s5", "s6"], vec!["s3", "s5"], vec!["s3", "s6"], vec!["s5", "s6"]]
        );
        assert_eq!(found, oracle(&g, &spec).unwrap());
    }

    #[test]
    fn spec_checks() {
        assert!(StructureSpec::clique(5, 3).check(4).is_err());
        assert!(StructureSpec::clique(1, 0).check(4).is_err());
        let spec = StructureSpec {
            secondary_threshold: Some(1),
            ..StructureSpec::clique(2, 3)
        };
        assert!(spec.check(4).is_err());
        let spec = StructureSpec {
            sub_size_floor: Some(4),
            ..StructureSpec::clique(2, 3)
        };
        assert!(spec.check(4).is_err());
    }

    #[test]
    fn min_size_serde() {
        let spec: StructureSpec = serde_json::from_str(r#"{"threshold":2,"min_size":"cluster"}"#).unwrap();
        assert_eq!(spec.min_size, MinSize::Cluster);
        assert!(spec.maximal_only);
        let spec: StructureSpec = serde_json::from_str(r#"{"threshold":2,"min_size":4,"quasi_edges":1}"#).unwrap();
        assert_eq!(spec, StructureSpec::quasi(2, 4, 1, 0));
        assert!(serde_json::from_str::<StructureSpec>(r#"{"threshold":2,"min_size":"x"}"#).is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = StructureSpec> {
        (1u8..=3, 1usize..=4, 0usize..=2, 0usize..=2, any::<bool>()).prop_map(|(l, min, de, dv, maximal)| {
            StructureSpec {
                maximal_only: maximal,
                ..StructureSpec::quasi(l, min, de, dv)
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn search_matches_oracle(seed in any::<u64>(), n in 0usize..=9, spec in spec_strategy()) {
            let g = random_graph(&mut crate::testutil::rng(seed), n, 4, 0.6);
            prop_assert_eq!(reveal(&g, &spec).unwrap(), oracle(&g, &spec).unwrap());
        }

        #[test]
        fn quasi_without_budget_is_clique_search(seed in any::<u64>(), n in 0usize..=10, l in 1u8..=4, min in 1usize..=4) {
            let g = random_graph(&mut crate::testutil::rng(seed), n, 4, 0.5);
            let spec = StructureSpec::clique(l, min);
            prop_assert_eq!(find_quasi(&g, &spec).unwrap(), find_cliques(&g, &spec).unwrap());
        }

        #[test]
        fn results_are_sound(seed in any::<u64>(), n in 1usize..=10, spec in spec_strategy()) {
            let g = random_graph(&mut crate::testutil::rng(seed), n, 4, 0.6);
            let rs = spec.resolve(&g).unwrap();
            for s in reveal(&g, &spec).unwrap() {
                let idx: Vec<usize> = s.vertices.iter().map(|v| g.index_of(v.as_str()).unwrap()).collect();
                prop_assert!(rs.admits(&g, &idx));
                prop_assert!(s.size() >= rs.floor);
                prop_assert!(s.missing_edges.len() <= spec.max_missing_edges);
                prop_assert!(s.offending_vertices.len() <= spec.max_offending_vertices);
                prop_assert_eq!(classify(&s.vertices, &g, &spec).unwrap(), s.kind);
            }
        }

        #[test]
        fn threshold_monotone(seed in any::<u64>(), n in 1usize..=9, spec in spec_strategy(), bump in 1u8..=3) {
            let g = random_graph(&mut crate::testutil::rng(seed), n, 4, 0.6);
            let rs = spec.resolve(&g).unwrap();
            let higher = rs.threshold.saturating_add(bump).min(4);
            let mut up = spec.clone();
            up.threshold = higher;
            up.secondary_threshold = Some(rs.secondary.max(higher));
            let rs_up = up.resolve(&g).unwrap();
            for s in reveal(&g, &spec).unwrap() {
                let idx: Vec<usize> = s.vertices.iter().map(|v| g.index_of(v.as_str()).unwrap()).collect();
                prop_assert!(rs_up.admits(&g, &idx));
                let kind = classify(&s.vertices, &g, &up).unwrap();
                prop_assert!(kind <= s.kind || kind == Kind::SubClique);
            }
        }

        #[test]
        fn budget_monotone(seed in any::<u64>(), n in 1usize..=9, spec in spec_strategy(), edge in any::<bool>()) {
            let g = random_graph(&mut crate::testutil::rng(seed), n, 4, 0.6);
            let mut wider = spec.clone();
            if edge { wider.max_missing_edges += 1 } else { wider.max_offending_vertices += 1 }
            let big = reveal(&g, &wider).unwrap();
            for s in reveal(&g, &spec).unwrap() {
                prop_assert!(big.iter().any(|b| s.vertices.iter().all(|v| b.vertices.contains(v))));
            }
        }
    }
}
