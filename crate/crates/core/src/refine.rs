//! Partition refinement driven by sampled policy probabilities.
//!
//! A piece is split while its maximum probability spread exceeds the
//! threshold. The sampled spread is checked first because it is cheap and
//! can only under-estimate the certified one; the MILP bound is computed only
//! when sampling alone cannot justify a split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{policy_abstraction, BoundsError, MilpConfig, PolicyAbstraction};
use crate::geometry::{GeometryError, Polyhedron};
use crate::neural::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("no sample pair has distinct projections on any direction")]
    NoValidCut,
    #[error("invalid refinement setting: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Clamp applied to probabilities inside the logarithms of the loss.
const PROB_CLAMP: f64 = 1e-7;

/// Losses closer than this (relative) count as tied; the earlier cut wins.
const LOSS_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub samples: usize,
    pub bins: usize,
    pub min_frac: f64,
    /// Maximum number of leaves per refined state.
    pub leaf_budget: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            bins: 10,
            min_frac: 0.1,
            leaf_budget: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    /// `probs[i][a]`: probability of action `a` at `points[i]`.
    pub probs: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn actions(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    /// One-vs-all view for action `a`.
    pub fn column(&self, a: usize) -> Vec<f64> {
        self.probs.iter().map(|row| row[a]).collect()
    }

    /// Per-action `(min, max)` of the sampled probabilities.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        (0..self.actions())
            .map(|a| {
                self.probs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[a]), hi.max(r[a]))
                })
            })
            .collect()
    }

    /// Widest per-action sampled range and the action attaining it (lowest index on ties).
    pub fn spread(&self) -> (f64, usize) {
        let mut best = (0.0, 0);
        for (a, (lo, hi)) in self.ranges().into_iter().enumerate() {
            if hi - lo > best.0 {
                best = (hi - lo, a);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub direction: usize,
    pub boundary: f64,
    pub loss: f64,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub polyhedron: Polyhedron,
    pub abstraction: PolicyAbstraction,
    /// Spread may exceed the threshold because the leaf budget ran out or the
    /// piece could not be split further.
    pub saturated: bool,
}

pub fn sample_action_probs(
    net: &Network,
    p: &Polyhedron,
    count: usize,
    seed: u64,
) -> Result<SampleSet, RefineError> {
    let points = p.hit_and_run_sample(count, seed)?;
    let probs = points.iter().map(|s| net.action_distribution(s)).collect();
    Ok(SampleSet { points, probs })
}

/// Weighted binary cross-entropy of every threshold labelling along every
/// template direction, for the action with the widest sampled spread.
///
/// The action's probabilities are first rescaled to span `[0, 1]` over the
/// samples.
/// Points are sorted by their projection on the direction; cut `k` labels the
/// first `k` points 1 and the rest 0 (and, for directions without an opposite
/// in the template, also the reverse). Each sample is weighted by the inverse
/// population of its probability bin.
pub fn cross_entropy_split(
    samples: &SampleSet,
    p: &Polyhedron,
    min_frac: f64,
    bins: usize,
) -> Result<SplitChoice, RefineError> {
    if samples.len() < 2 {
        return Err(RefineError::NoValidCut);
    }
    if bins == 0 {
        return Err(RefineError::InvalidArgument("bins must be >= 1".into()));
    }
    let (spread, action) = samples.spread();
    let mut y = samples.column(action);
    let n = y.len();
    // Rescale to the sampled range so the labelling tracks where the
    // probability changes inside this piece, even when it never crosses 1/2.
    if spread > 0.0 {
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        y.iter_mut().for_each(|v| *v = (*v - lo) / spread);
    }

    let bin_of = |v: f64| ((v * bins as f64) as usize).min(bins - 1);
    let mut population = vec![0usize; bins];
    for &v in &y {
        population[bin_of(v)] += 1;
    }
    let w: Vec<f64> = y.iter().map(|&v| 1.0 / population[bin_of(v)] as f64).collect();
    let total_w: f64 = w.iter().sum();
    let y = y
        .iter()
        .map(|v| v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect::<Vec<_>>();
    // Weighted loss contributions when a point is labelled 1 or 0.
    let as_one: Vec<f64> = y.iter().zip(&w).map(|(p, w)| -w * p.ln()).collect();
    let as_zero: Vec<f64> = y.iter().zip(&w).map(|(p, w)| -w * (1.0 - p).ln()).collect();

    let template = p.template();
    // (admissible, direction, k, reversed, loss, boundary)
    let mut best: Option<(bool, usize, usize, bool, f64, f64)> = None;
    for (dir, d) in template.directions().iter().enumerate() {
        let (lo, hi) = p.range_along(dir)?;
        let extent = hi - lo;
        let mut proj: Vec<(f64, usize)> = samples
            .points
            .iter()
            .enumerate()
            .map(|(i, s)| (d.iter().zip(s).map(|(a, b)| a * b).sum(), i))
            .collect();
        proj.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let polarities: &[bool] = if template.opposite(dir).is_some() {
            &[false]
        } else {
            &[false, true]
        };
        // Prefix sums in sorted order.
        let mut one_prefix = vec![0.0; n + 1];
        let mut zero_prefix = vec![0.0; n + 1];
        for (r, &(_, i)) in proj.iter().enumerate() {
            one_prefix[r + 1] = one_prefix[r] + as_one[i];
            zero_prefix[r + 1] = zero_prefix[r] + as_zero[i];
        }
        for k in 1..n {
            let (a, b) = (proj[k - 1].0, proj[k].0);
            if b <= a {
                continue;
            }
            let boundary = 0.5 * (a + b);
            let admissible = extent > 0.0
                && boundary >= lo + min_frac * extent
                && boundary <= hi - min_frac * extent;
            for &reversed in polarities {
                let raw = if reversed {
                    zero_prefix[k] + one_prefix[n] - one_prefix[k]
                } else {
                    one_prefix[k] + zero_prefix[n] - zero_prefix[k]
                };
                let loss = raw / total_w;
                let better = match best {
                    None => true,
                    Some((adm, _, _, _, l, _)) => {
                        (admissible && !adm)
                            || (admissible == adm && loss < l - LOSS_TIE * (1.0 + l.abs()))
                    }
                };
                if better {
                    best = Some((admissible, dir, k, reversed, loss, boundary));
                }
            }
        }
    }
    let (_, direction, _, _, loss, boundary) = best.ok_or(RefineError::NoValidCut)?;
    Ok(SplitChoice {
        direction,
        boundary,
        loss,
        action,
    })
}

/// Seed for a child piece; `side` is 0 for the low half, 1 for the high half.
pub fn child_seed(parent: u64, side: u64) -> u64 {
    let mut z = parent ^ (side.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Outcome {
    Leaf(Leaf),
    Split(Polyhedron, Polyhedron),
}

struct Piece {
    poly: Polyhedron,
    seed: u64,
}

/// Bisect `p` until every piece's certified spread is at most `phi`.
///
/// Pieces are processed in rounds; every piece of a round is examined in
/// parallel and the results are merged in order, so the partition does not
/// depend on the thread count.
pub fn refine_to_threshold(
    net: &Network,
    p: &Polyhedron,
    phi: f64,
    cfg: &RefineConfig,
    milp: &MilpConfig,
    seed: u64,
) -> Result<Vec<Leaf>, RefineError> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(RefineError::InvalidArgument("phi must be in (0,1]".into()));
    }
    if cfg.leaf_budget == 0 {
        return Err(RefineError::InvalidArgument("leaf budget must be >= 1".into()));
    }
    if p.is_empty() {
        return Err(RefineError::Geometry(GeometryError::EmptyInput));
    }
    let mut leaves = Vec::new();
    let mut work = vec![Piece {
        poly: p.clone(),
        seed,
    }];
    while !work.is_empty() {
        // Every pending piece may split into two; only allow splits that fit.
        let room = cfg.leaf_budget.saturating_sub(leaves.len() + work.len());
        let outcomes: Vec<Result<Outcome, RefineError>> = work
            .par_iter()
            .enumerate()
            .map(|(i, piece)| examine(net, piece, phi, cfg, milp, i < room))
            .collect();
        let mut next = Vec::new();
        for (piece, outcome) in work.into_iter().zip(outcomes) {
            match outcome? {
                Outcome::Leaf(leaf) => leaves.push(leaf),
                Outcome::Split(low, high) => {
                    next.push(Piece {
                        poly: low,
                        seed: child_seed(piece.seed, 0),
                    });
                    next.push(Piece {
                        poly: high,
                        seed: child_seed(piece.seed, 1),
                    });
                }
            }
        }
        work = next;
    }
    Ok(leaves)
}

fn examine(
    net: &Network,
    piece: &Piece,
    phi: f64,
    cfg: &RefineConfig,
    milp: &MilpConfig,
    may_split: bool,
) -> Result<Outcome, RefineError> {
    let p = &piece.poly;
    let samples = match sample_action_probs(net, p, cfg.samples, piece.seed) {
        Ok(s) => Some(s),
        Err(RefineError::Geometry(GeometryError::DegenerateGeometry)) => None,
        Err(e) => return Err(e),
    };
    let sampled_spread = samples.as_ref().map_or(0.0, |s| s.spread().0);
    let mut abstraction = None;
    if sampled_spread <= phi {
        let abs = policy_abstraction(net, p, milp)?;
        if abs.spread <= phi {
            return Ok(Outcome::Leaf(Leaf {
                polyhedron: p.clone(),
                abstraction: abs,
                saturated: false,
            }));
        }
        abstraction = Some(abs);
    }
    let saturated_leaf = |abstraction: Option<PolicyAbstraction>| -> Result<Outcome, RefineError> {
        let abstraction = match abstraction {
            Some(a) => a,
            None => policy_abstraction(net, p, milp)?,
        };
        Ok(Outcome::Leaf(Leaf {
            polyhedron: p.clone(),
            abstraction,
            saturated: true,
        }))
    };
    if !may_split {
        return saturated_leaf(abstraction);
    }
    let cut = samples
        .as_ref()
        .and_then(|s| cross_entropy_split(s, p, cfg.min_frac, cfg.bins).ok())
        .map(|c| (c.direction, c.boundary));
    let (dir, boundary) = match cut {
        Some(c) => c,
        None => match widest_direction(p)? {
            Some(c) => c,
            None => return saturated_leaf(abstraction),
        },
    };
    match p.bisect(dir, boundary, cfg.min_frac) {
        Ok((low, high)) => Ok(Outcome::Split(low, high)),
        Err(GeometryError::DegenerateSplit { .. }) => saturated_leaf(abstraction),
        Err(e) => Err(e.into()),
    }
}

/// Midpoint cut along the direction of largest extent, if any is splittable.
fn widest_direction(p: &Polyhedron) -> Result<Option<(usize, f64)>, RefineError> {
    let mut best: Option<(usize, f64, f64)> = None;
    for j in 0..p.template().len() {
        let (lo, hi) = p.range_along(j)?;
        let norm: f64 = p.template().direction(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        let extent = (hi - lo) / norm;
        if extent > crate::geometry::WIDTH_FLOOR && best.is_none_or(|b| extent > b.2) {
            best = Some((j, 0.5 * (lo + hi), extent));
        }
    }
    Ok(best.map(|(j, b, _)| (j, b)))
}
