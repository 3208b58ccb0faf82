//! Minimum-cost component improvements that destroy critical structures.
//!
//! The only repair lever is raising a component's level. A structure is
//! destroyed once no vertex subset of it still qualifies under the detection
//! spec. Plans are found by exact depth-first search over the union of the
//! target vertex sets, pruned by the best cost found so far and by
//! per-structure checks as soon as all of a structure's members are decided.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::ColoredGraph;
use crate::model::{ComponentId, Level, StateAssignment};
use crate::reveal::{reveal, RevealError, ResolvedSpec, RevealedStructure, StructureSpec};

/// Scalar a plan cost can be expressed in (`u32`, `f64`, exact rationals...).
pub trait Cost: Num + Copy + PartialOrd + Debug + FromPrimitive {}

impl<T> Cost for T where T: Num + Copy + PartialOrd + Debug + FromPrimitive {}

/// Cost of raising one component.
pub trait CostModel<C: Cost> {
    fn cost(&self, component: &ComponentId, from: Level, to: Level) -> C;
}

/// One unit per level step (`to - from`).
#[derive(Clone, Copy, Debug, Default)]
pub struct LevelSteps;

/// One unit per action regardless of the size of the raise.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerAction;

impl<C: Cost> CostModel<C> for LevelSteps {
    fn cost(&self, _: &ComponentId, from: Level, to: Level) -> C {
        C::from_u8(to - from).expect("level difference fits every cost scalar")
    }
}

impl<C: Cost> CostModel<C> for PerAction {
    fn cost(&self, _: &ComponentId, _: Level, _: Level) -> C {
        C::one()
    }
}

impl<C, F> CostModel<C> for F
where
    C: Cost,
    F: Fn(&ComponentId, Level, Level) -> C,
{
    fn cost(&self, component: &ComponentId, from: Level, to: Level) -> C {
        self(component, from, to)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no improvement plan destroys every target structure")]
    Infeasible,
    #[error("vertex `{0}` is not in the graph")]
    UnknownVertex(String),
    #[error("action on `{component}` expects level {expected}, found {found}")]
    LevelMismatch {
        component: ComponentId,
        expected: Level,
        found: Level,
    },
    #[error("invalid action on `{0}`: target level must exceed the current level and stay on the scale")]
    InvalidAction(ComponentId),
    #[error(transparent)]
    Reveal(#[from] RevealError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImprovementAction {
    pub component: ComponentId,
    pub from: Level,
    pub to: Level,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPlan<C> {
    /// At most one action per component, sorted by component id.
    pub actions: Vec<ImprovementAction>,
    pub cost: C,
    /// Every optimal action set, in tie-break order; the first one is
    /// `actions`.
    pub alternatives: Vec<Vec<ImprovementAction>>,
}

impl<C: Cost> ImprovementPlan<C> {
    pub fn empty() -> Self {
        Self {
            actions: Vec::new(),
            cost: C::zero(),
            alternatives: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Critical structures of a graph; a thin wrapper over [`reveal`].
pub fn destruction_targets(
    graph: &ColoredGraph,
    spec: &StructureSpec,
) -> Result<Vec<RevealedStructure>, RevealError> {
    reveal(graph, spec)
}

/// Graph with the actions' target levels applied.
pub fn apply_to_graph(graph: &ColoredGraph, actions: &[ImprovementAction]) -> Result<ColoredGraph, PlanError> {
    let mut colors = graph.colors().to_vec();
    for a in actions {
        let i = graph
            .index_of(a.component.as_str())
            .ok_or_else(|| PlanError::UnknownVertex(a.component.to_string()))?;
        if colors[i] != a.from {
            return Err(PlanError::LevelMismatch {
                component: a.component.clone(),
                expected: a.from,
                found: colors[i],
            });
        }
        if a.to <= a.from || a.to > graph.levels() {
            return Err(PlanError::InvalidAction(a.component.clone()));
        }
        colors[i] = a.to;
    }
    Ok(graph.recolored(graph.levels(), colors))
}

/// Structures still revealed after applying `actions` that lie inside one of
/// the targets. Empty for every plan [`destruction_plan`] returns.
pub fn surviving_structures(
    graph: &ColoredGraph,
    targets: &[RevealedStructure],
    actions: &[ImprovementAction],
    spec: &StructureSpec,
) -> Result<Vec<RevealedStructure>, PlanError> {
    let improved = apply_to_graph(graph, actions)?;
    Ok(reveal(&improved, spec)?
        .into_iter()
        .filter(|s| {
            targets
                .iter()
                .any(|t| s.vertices.iter().all(|v| t.vertices.contains(v)))
        })
        .collect())
}

/// Applies a plan to a state assignment. Each action's `from` must equal the
/// component's worst level (global state or any per-function override); the
/// global level and every lower override are raised to `to`.
pub fn apply_plan(states: &StateAssignment, actions: &[ImprovementAction]) -> Result<StateAssignment, PlanError> {
    let mut out = states.clone();
    for a in actions {
        let global = *out
            .global
            .get(&a.component)
            .ok_or_else(|| PlanError::UnknownVertex(a.component.to_string()))?;
        let worst = out
            .overrides
            .iter()
            .filter(|((c, _), _)| *c == a.component)
            .map(|(_, &l)| l)
            .fold(global, Level::min);
        if worst != a.from {
            return Err(PlanError::LevelMismatch {
                component: a.component.clone(),
                expected: a.from,
                found: worst,
            });
        }
        if a.to <= a.from {
            return Err(PlanError::InvalidAction(a.component.clone()));
        }
        out.global.insert(a.component.clone(), global.max(a.to));
        for ((c, _), level) in out.overrides.iter_mut() {
            if *c == a.component {
                *level = (*level).max(a.to);
            }
        }
    }
    Ok(out)
}

struct Candidate {
    vertex: usize,
    from: Level,
    /// Useful raise targets: just above `l`, and just above `l'` when
    /// offending vertices are allowed.
    options: Vec<Level>,
}

struct Search<'a, C: Cost, M: CostModel<C>> {
    graph: &'a ColoredGraph,
    spec: &'a StructureSpec,
    resolved: ResolvedSpec,
    cost_model: &'a M,
    candidates: Vec<Candidate>,
    /// Targets (as graph indices) grouped by the position of their last
    /// candidate.
    closing: Vec<Vec<Vec<usize>>>,
    colors: Vec<Level>,
    chosen: Vec<Option<Level>>,
    best: Option<C>,
    optima: Vec<Vec<ImprovementAction>>,
}

impl<C: Cost, M: CostModel<C>> Search<'_, C, M> {
    fn destroyed(&self, target: &[usize]) -> Result<bool, RevealError> {
        let recolored = self.graph.recolored(self.graph.levels(), self.colors.clone());
        let sub = recolored.induced(target);
        Ok(reveal(&sub, self.spec)?.is_empty())
    }

    fn dfs(&mut self, pos: usize, cost: C) -> Result<(), RevealError> {
        if let Some(best) = self.best {
            if cost > best {
                return Ok(());
            }
        }
        if pos == self.candidates.len() {
            let actions = self.actions();
            match self.best.map(|b| cost.partial_cmp(&b)) {
                Some(Some(Ordering::Equal)) => self.optima.push(actions),
                _ => {
                    self.best = Some(cost);
                    self.optima = vec![actions];
                }
            }
            return Ok(());
        }
        let from = self.candidates[pos].from;
        let vertex = self.candidates[pos].vertex;
        let options: Vec<Option<Level>> = std::iter::once(None)
            .chain(self.candidates[pos].options.iter().copied().map(Some))
            .collect();
        for choice in options {
            let step = match choice {
                None => C::zero(),
                Some(to) => self.cost_model.cost(self.graph.vertex(vertex), from, to),
            };
            self.colors[vertex] = choice.unwrap_or(from);
            self.chosen[pos] = choice;
            let mut alive = true;
            for target in &self.closing[pos] {
                if !self.destroyed(target)? {
                    alive = false;
                    break;
                }
            }
            if alive {
                self.dfs(pos + 1, cost + step)?;
            }
        }
        self.colors[vertex] = from;
        self.chosen[pos] = None;
        Ok(())
    }

    fn actions(&self) -> Vec<ImprovementAction> {
        self.candidates
            .iter()
            .zip(&self.chosen)
            .filter_map(|(c, choice)| {
                choice.map(|to| ImprovementAction {
                    component: self.graph.vertex(c.vertex).clone(),
                    from: c.from,
                    to,
                })
            })
            .collect()
    }

    fn raise_targets(&self, color: Level) -> Vec<Level> {
        let rs = &self.resolved;
        let top = self.graph.levels();
        let mut out = Vec::new();
        if color <= rs.threshold && rs.threshold < top {
            out.push(rs.threshold + 1);
        }
        if rs.max_offending > 0 && color <= rs.secondary && rs.secondary < top && rs.secondary > rs.threshold {
            out.push(rs.secondary + 1);
        }
        out
    }
}

/// Minimum-cost set of improvement actions after which none of the
/// `structures` (nor any qualifying part of them) is revealed.
///
/// Ties on cost are broken by fewer actions, then the lexicographic list of
/// component ids, then lower target levels; all optima are listed in
/// `alternatives`. With strictly positive action costs the result is
/// irreducible.
pub fn destruction_plan<C, M>(
    graph: &ColoredGraph,
    structures: &[RevealedStructure],
    spec: &StructureSpec,
    cost_model: &M,
) -> Result<ImprovementPlan<C>, PlanError>
where
    C: Cost,
    M: CostModel<C>,
{
    if structures.is_empty() {
        return Ok(ImprovementPlan::empty());
    }
    let resolved = spec.resolve(graph)?;
    let targets = structures
        .iter()
        .map(|s| {
            s.vertices
                .iter()
                .map(|v| {
                    graph
                        .index_of(v.as_str())
                        .ok_or_else(|| PlanError::UnknownVertex(v.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut members: Vec<usize> = targets.iter().flatten().copied().collect();
    members.sort_by(|&a, &b| graph.vertex(a).cmp(graph.vertex(b)));
    members.dedup();

    let mut search = Search {
        graph,
        spec,
        resolved,
        cost_model,
        candidates: Vec::new(),
        closing: vec![Vec::new(); members.len()],
        colors: graph.colors().to_vec(),
        chosen: vec![None; members.len()],
        best: None,
        optima: Vec::new(),
    };
    search.candidates = members
        .iter()
        .map(|&v| Candidate {
            vertex: v,
            from: graph.color(v),
            options: search.raise_targets(graph.color(v)),
        })
        .collect();
    for t in targets {
        let last = t
            .iter()
            .map(|v| members.iter().position(|m| m == v).expect("member"))
            .max()
            .expect("structures are non-empty");
        search.closing[last].push(t);
    }

    search.dfs(0, C::zero())?;
    let cost = search.best.ok_or(PlanError::Infeasible)?;
    let mut optima = search.optima;
    optima.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| {
                let ids = |x: &[ImprovementAction]| x.iter().map(|a| a.component.clone()).collect::<Vec<_>>();
                ids(a).cmp(&ids(b))
            })
            .then_with(|| {
                let tos = |x: &[ImprovementAction]| x.iter().map(|a| a.to).collect::<Vec<_>>();
                tos(a).cmp(&tos(b))
            })
    });
    Ok(ImprovementPlan {
        actions: optima[0].clone(),
        cost,
        alternatives: optima,
    })
}
