//! Seeded synthetic component-state streams.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with the 64-bit
//! model seed through `SeedableRng::seed_from_u64`. Each component draws from
//! its own ChaCha stream, selected by its declaration index, so streams do not
//! depend on generation order and may be produced in parallel.

use indexmap::IndexMap;
use num_traits::{Float, FromPrimitive, Num};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentId, Level, SystemModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("fixed level missing or out of range for component `{0}`")]
    BadFixedLevel(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamKind<P> {
    /// Given per-component levels, held for every tick.
    Fixed { levels: IndexMap<ComponentId, Level> },
    /// One draw per component from `initial`, held for every tick.
    Constant { initial: Vec<P> },
    /// Independent draws every tick.
    Iid { distribution: Vec<P> },
    /// Markov chain over levels: `transition[i][j]` is the probability of
    /// moving from level `i+1` to level `j+1`.
    Markov { initial: Vec<P>, transition: Vec<Vec<P>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamModel<P> {
    #[serde(flatten)]
    pub kind: StreamKind<P>,
    pub seed: u64,
}

fn tolerance<P: Float>() -> P {
    let floor = P::from(1e-9).expect("representable");
    floor.max(P::epsilon() * P::from(16.0).expect("representable"))
}

fn check_distribution<P: Float>(name: &str, dist: &[P], levels: Level) -> Result<(), GenError> {
    if dist.len() != usize::from(levels) {
        return Err(GenError::InvalidDistribution(format!(
            "{name} has {} entries, scale has {levels} levels",
            dist.len()
        )));
    }
    if dist.iter().any(|p| !p.is_finite() || *p < P::zero()) {
        return Err(GenError::InvalidDistribution(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let sum = dist.iter().fold(P::zero(), |a, &b| a + b);
    if (sum - P::one()).abs() > tolerance::<P>() {
        return Err(GenError::InvalidDistribution(format!(
            "{name} sums to {}, expected 1",
            sum.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

impl<P: Float> StreamModel<P> {
    pub fn check(&self, model: &SystemModel) -> Result<(), GenError> {
        let levels = model.scale.levels;
        match &self.kind {
            StreamKind::Fixed { levels: fixed } => {
                for c in &model.components {
                    match fixed.get(c) {
                        Some(&l) if model.scale.contains(l) => {}
                        _ => return Err(GenError::BadFixedLevel(c.to_string())),
                    }
                }
                Ok(())
            }
            StreamKind::Constant { initial } => check_distribution("initial", initial, levels),
            StreamKind::Iid { distribution } => check_distribution("distribution", distribution, levels),
            StreamKind::Markov { initial, transition } => {
                check_distribution("initial", initial, levels)?;
                if transition.len() != usize::from(levels) {
                    return Err(GenError::InvalidDistribution(format!(
                        "transition matrix has {} rows, scale has {levels} levels",
                        transition.len()
                    )));
                }
                for (i, row) in transition.iter().enumerate() {
                    check_distribution(&format!("transition row {}", i + 1), row, levels)?;
                }
                Ok(())
            }
        }
    }
}

/// Inverse-CDF draw of a level (1-based) from `dist`.
fn draw<P: Float, R: Rng>(rng: &mut R, dist: &[P]) -> Level {
    let u = P::from(rng.gen::<f64>()).expect("representable");
    let mut acc = P::zero();
    for (i, &p) in dist.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return (i + 1) as Level;
        }
    }
    // rounding left u above the total: take the last level with mass
    dist.iter().rposition(|&p| p > P::zero()).map_or(1, |i| (i + 1) as Level)
}

/// One stream per component, in model order. Fully determined by the model's
/// component list, `ticks` and the stream model (including its seed).
pub fn generate_streams<P: Float>(
    model: &SystemModel,
    ticks: usize,
    stream_model: &StreamModel<P>,
) -> Result<IndexMap<ComponentId, Vec<Level>>, GenError> {
    stream_model.check(model)?;
    let mut out = IndexMap::with_capacity(model.components.len());
    for (index, c) in model.components.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_model.seed);
        rng.set_stream(index as u64);
        let stream = match &stream_model.kind {
            StreamKind::Fixed { levels } => vec![levels[c]; ticks],
            StreamKind::Constant { initial } => vec![draw(&mut rng, initial); ticks],
            StreamKind::Iid { distribution } => (0..ticks).map(|_| draw(&mut rng, distribution)).collect(),
            StreamKind::Markov { initial, transition } => {
                let mut s = Vec::with_capacity(ticks);
                if ticks > 0 {
                    let mut level = draw(&mut rng, initial);
                    s.push(level);
                    for _ in 1..ticks {
                        level = draw(&mut rng, &transition[usize::from(level) - 1]);
                        s.push(level);
                    }
                }
                s
            }
        };
        out.insert(c.clone(), stream);
    }
    Ok(out)
}

/// Frequency of each level (index `0` is level 1) over all components and
/// ticks. All zeros for empty input.
pub fn empirical_marginals<P>(streams: &IndexMap<ComponentId, Vec<Level>>, levels: Level) -> Vec<P>
where
    P: Num + FromPrimitive + Copy,
{
    let mut counts = vec![0usize; usize::from(levels)];
    let mut total = 0usize;
    for s in streams.values() {
        for &l in s {
            if let Some(slot) = usize::from(l).checked_sub(1).and_then(|i| counts.get_mut(i)) {
                *slot += 1;
            }
            total += 1;
        }
    }
    if total == 0 {
        return vec![P::zero(); counts.len()];
    }
    let denom = P::from_usize(total).expect("count fits the scalar");
    counts
        .into_iter()
        .map(|c| P::from_usize(c).expect("count fits the scalar") / denom)
        .collect()
}
