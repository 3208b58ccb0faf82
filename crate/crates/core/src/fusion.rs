//! Per-function complete graphs and their fusion into the colored integrated
//! graph of a function cluster.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    cluster_components, ComponentId, FunctionId, Level, ModelError, StateAssignment, SystemModel,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FusionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no state for component `{component}` in function {function}")]
    MissingState {
        component: ComponentId,
        function: FunctionId,
    },
    #[error("worst-color merge of an empty list")]
    EmptyMerge,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// Undirected vertex-colored graph over components.
///
/// Edges are stored as index pairs `(i, j)` with `i < j`; `adjacency` mirrors
/// them for constant-time lookups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    levels: Level,
    functions: usize,
    vertices: Vec<ComponentId>,
    colors: Vec<Level>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<bool>>,
}

impl ColoredGraph {
    pub fn empty(levels: Level) -> Self {
        Self {
            levels,
            functions: 0,
            vertices: Vec::new(),
            colors: Vec::new(),
            edges: BTreeSet::new(),
            adjacency: Vec::new(),
        }
    }

    /// Builds a graph from colored vertices and id pairs. Rejects unknown
    /// endpoints, self-loops, duplicate vertices and out-of-scale colors.
    pub fn new<C, E>(levels: Level, vertices: C, edges: E) -> Result<Self, FusionError>
    where
        C: IntoIterator<Item = (ComponentId, Level)>,
        E: IntoIterator<Item = (ComponentId, ComponentId)>,
    {
        let mut g = Self::empty(levels);
        let mut index = HashMap::new();
        for (v, c) in vertices {
            if !(1..=levels).contains(&c) {
                return Err(FusionError::InvalidGraph(format!(
                    "color {c} of {v} outside 1..={levels}"
                )));
            }
            if index.insert(v.clone(), g.vertices.len()).is_some() {
                return Err(FusionError::InvalidGraph(format!("duplicate vertex {v}")));
            }
            g.push_vertex(v, c);
        }
        for (a, b) in edges {
            let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) else {
                return Err(FusionError::InvalidGraph(format!(
                    "edge {a}-{b} references a missing vertex"
                )));
            };
            if i == j {
                return Err(FusionError::InvalidGraph(format!("self-loop on {a}")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    fn push_vertex(&mut self, v: ComponentId, color: Level) -> usize {
        self.vertices.push(v);
        self.colors.push(color);
        for row in &mut self.adjacency {
            row.push(false);
        }
        self.adjacency.push(vec![false; self.vertices.len()]);
        self.vertices.len() - 1
    }

    fn add_edge(&mut self, i: usize, j: usize) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges.insert((a, b));
        self.adjacency[a][b] = true;
        self.adjacency[b][a] = true;
    }

    /// Number of levels of the ordinal scale the colors live on.
    pub fn levels(&self) -> Level {
        self.levels
    }

    /// Number of function graphs fused into this graph (`0` for an empty or
    /// hand-built graph).
    pub fn function_count(&self) -> usize {
        self.functions
    }

    pub fn with_function_count(mut self, n: usize) -> Self {
        self.functions = n;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[ComponentId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &ComponentId {
        &self.vertices[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.as_str() == id)
    }

    pub fn colors(&self) -> &[Level] {
        &self.colors
    }

    pub fn color(&self, i: usize) -> Level {
        self.colors[i]
    }

    pub fn color_of(&self, id: &str) -> Option<Level> {
        self.index_of(id).map(|i| self.colors[i])
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.adjacency[i][j],
            _ => false,
        }
    }

    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ComponentId, &ComponentId)> + '_ {
        self.edges
            .iter()
            .map(|&(i, j)| (&self.vertices[i], &self.vertices[j]))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&a| a).count()
    }

    /// Same graph with different vertex colors. Used to evaluate improvement
    /// plans and scale shifts.
    pub fn recolored(&self, levels: Level, colors: Vec<Level>) -> Self {
        assert_eq!(colors.len(), self.colors.len());
        Self {
            levels,
            colors,
            ..self.clone()
        }
    }

    /// Subgraph induced by the given vertex indices, in the given order.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut g = Self::empty(self.levels).with_function_count(self.functions);
        for &i in keep {
            g.push_vertex(self.vertices[i].clone(), self.colors[i]);
        }
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if self.adjacency[i][j] {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }
}

/// Worst-color rule: the minimum level wins.
pub fn merge_color(levels: &[Level]) -> Result<Level, FusionError> {
    levels.iter().copied().min().ok_or(FusionError::EmptyMerge)
}

/// Complete graph over the function's components, colored by the per-function
/// state (override if present, global otherwise).
pub fn function_graph(
    model: &SystemModel,
    function: &str,
    states: &StateAssignment,
) -> Result<ColoredGraph, FusionError> {
    let comps = model.function(function)?;
    let fid = FunctionId::from(function);
    let mut colored = Vec::with_capacity(comps.len());
    for c in comps {
        let level = states
            .level_for(c, &fid)
            .ok_or_else(|| FusionError::MissingState {
                component: c.clone(),
                function: fid.clone(),
            })?;
        colored.push((c.clone(), level));
    }
    let edges: Vec<_> = comps
        .iter()
        .enumerate()
        .flat_map(|(i, a)| comps[i + 1..].iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    Ok(ColoredGraph::new(model.scale.levels, colored, edges)?.with_function_count(1))
}

/// Colored integrated graph of a cluster: union of its function graphs, with
/// each vertex taking the worst color among the function graphs containing
/// it. Vertices follow model component order.
pub fn integrated_graph(
    model: &SystemModel,
    cluster: &str,
    states: &StateAssignment,
) -> Result<ColoredGraph, FusionError> {
    let funcs = model.cluster(cluster)?;
    let members = cluster_components(model, cluster)?;
    let pos: HashMap<&ComponentId, usize> =
        members.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut seen: Vec<Vec<Level>> = vec![Vec::new(); members.len()];
    let mut edges = BTreeSet::new();
    let mut distinct = BTreeSet::new();
    for f in funcs {
        distinct.insert(f);
        let g = function_graph(model, f.as_str(), states)?;
        for (i, v) in g.vertices().iter().enumerate() {
            seen[pos[v]].push(g.color(i));
        }
        for (a, b) in g.edges() {
            let (i, j) = (pos[a], pos[b]);
            edges.insert((i.min(j), i.max(j)));
        }
    }

    let mut out = ColoredGraph::empty(model.scale.levels).with_function_count(distinct.len());
    for (v, colors) in members.into_iter().zip(seen) {
        out.push_vertex(v, merge_color(&colors)?);
    }
    for (i, j) in edges {
        out.add_edge(i, j);
    }
    Ok(out)
}

/// Graphviz rendering with `id (color)` labels and a gray fill that darkens
/// towards the worst level.
pub fn to_dot(graph: &ColoredGraph, name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph \"{}\" {{", name.replace('"', "\\\""));
    let _ = writeln!(s, "  node [shape=circle, style=filled];");
    let span = u32::from(graph.levels().max(2) - 1);
    for (v, &c) in graph.vertices().iter().zip(graph.colors()) {
        // level 1 -> gray30, best level -> gray90
        let gray = 30 + 60 * u32::from(c.saturating_sub(1)) / span;
        let font = if gray < 60 { "white" } else { "black" };
        let _ = writeln!(
            s,
            "  \"{v}\" [label=\"{v} ({c})\", fillcolor=gray{gray}, fontcolor={font}];"
        );
    }
    for (a, b) in graph.edges() {
        let _ = writeln!(s, "  \"{a}\" -- \"{b}\";");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::testutil::{reference_states, REFERENCE};

    fn model() -> SystemModel {
        parse_model(REFERENCE).unwrap().model
    }

    #[test]
    fn merge_is_minimum() {
        assert_eq!(merge_color(&[4, 2, 3]), Ok(2));
        assert_eq!(merge_color(&[1]), Ok(1));
        assert_eq!(merge_color(&[3, 3]), Ok(3));
        assert_eq!(merge_color(&[]), Err(FusionError::EmptyMerge));
    }

    #[test]
    fn function_graph_f3_triangle() {
        let g = function_graph(&model(), "f3", &reference_states()).unwrap();
        assert_eq!(g.vertices(), &["s5".into(), "s6".into(), "s7".into()] as &[ComponentId]);
        assert_eq!(g.colors(), &[1, 1, 3]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn function_graph_f1_is_k4() {
        let g = function_graph(&model(), "f1", &reference_states()).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn single_component_function() {
        let mut m = model();
        m.functions.insert("f6".into(), vec!["s1".into()]);
        let g = function_graph(&m, "f6", &reference_states()).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn function_graph_errors() {
        let m = model();
        assert!(matches!(
            function_graph(&m, "f9", &reference_states()),
            Err(FusionError::Model(ModelError::UnknownFunction(_)))
        ));
        let mut partial = reference_states();
        partial.global.shift_remove("s7");
        assert!(matches!(
            function_graph(&m, "f3", &partial),
            Err(FusionError::MissingState { .. })
        ));
    }

    #[test]
    fn integrated_f1() {
        let g = integrated_graph(&model(), "F1", &reference_states()).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.colors(), &[2, 4, 1, 4, 1, 1, 3, 4]);
        assert_eq!(g.function_count(), 3);
    }

    #[test]
    fn integrated_f2_and_f3() {
        let g = integrated_graph(&model(), "F2", &reference_states()).unwrap();
        let ids: Vec<_> = g.vertices().iter().map(|v| v.as_str()).collect();
        assert_eq!(ids, ["s1", "s2", "s3", "s4", "s5", "s6", "s8"]);
        assert_eq!(g.edge_count(), 10);
        assert!(!g.has_edge("s3", "s5"));

        let g3 = integrated_graph(&model(), "F3", &reference_states()).unwrap();
        assert_eq!((g3.vertex_count(), g3.edge_count()), (4, 5));
    }

    #[test]
    fn singleton_cluster_equals_function_graph() {
        let mut m = model();
        m.clusters.insert("F4".into(), vec!["f4".into()]);
        assert_eq!(
            integrated_graph(&m, "F4", &reference_states()).unwrap(),
            function_graph(&m, "f4", &reference_states()).unwrap()
        );
    }

    #[test]
    fn worst_color_across_functions() {
        let doc = parse_model(include_str!("../fixtures/worst_color.json")).unwrap();
        let states = doc.scenario.unwrap().states_at(0).unwrap();
        let g = integrated_graph(&doc.model, "F", &states).unwrap();
        assert_eq!(g.colors(), &[1, 1, 1, 3, 3, 3]);
        // s1 is colored 1 only through f1
        let f2 = function_graph(&doc.model, "f2", &states).unwrap();
        assert_eq!(f2.color_of("s1"), Some(3));
    }

    #[test]
    fn graph_rejects_bad_edges() {
        let v = vec![("a".into(), 1), ("b".into(), 2)];
        assert!(ColoredGraph::new(4, v.clone(), vec![("a".into(), "a".into())]).is_err());
        assert!(ColoredGraph::new(4, v.clone(), vec![("a".into(), "z".into())]).is_err());
        assert!(ColoredGraph::new(4, vec![("a".into(), 7)], vec![]).is_err());
        let g = ColoredGraph::new(4, v, vec![("b".into(), "a".into())]).unwrap();
        assert!(g.has_edge("a", "b") && g.has_edge("b", "a"));
    }

    #[test]
    fn dot_is_deterministic() {
        let g = integrated_graph(&model(), "F3", &reference_states()).unwrap();
        let dot = to_dot(&g, "F3");
        assert_eq!(dot, to_dot(&g, "F3"));
        assert!(dot.contains("\"s5\" [label=\"s5 (1)\", fillcolor=gray30"));
        assert!(dot.contains("\"s8\" [label=\"s8 (4)\", fillcolor=gray90"));
        assert!(dot.contains("\"s5\" -- \"s6\";"));
        assert_eq!(dot.matches(" -- ").count(), 5);
    }
}
