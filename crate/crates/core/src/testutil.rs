use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fusion::ColoredGraph;
use crate::model::{ComponentId, Level, StateAssignment};

pub const REFERENCE: &str = include_str!("../fixtures/reference.json");

/// Component levels held constant over the reference scenario.
pub fn reference_states() -> StateAssignment {
    StateAssignment::from_global([
        ("s1", 2),
        ("s2", 4),
        ("s3", 1),
        ("s4", 4),
        ("s5", 1),
        ("s6", 1),
        ("s7", 3),
        ("s8", 4),
    ])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) with uniform colors on `1..=levels`.
pub fn random_graph(rng: &mut impl Rng, n: usize, levels: Level, p: f64) -> ColoredGraph {
    let ids: Vec<ComponentId> = (0..n).map(|i| format!("v{i:02}").into()).collect();
    let colors: Vec<(ComponentId, Level)> = ids.iter().map(|v| (v.clone(), rng.gen_range(1..=levels))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((ids[i].clone(), ids[j].clone()));
            }
        }
    }
    ColoredGraph::new(levels, colors, edges).expect("valid random graph")
}
