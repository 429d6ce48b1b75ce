//! Interval MDP abstraction of the closed-loop system and its solver.
//!
//! Abstract states are template polyhedra. Expanding a state refines it into
//! pieces with certified action-probability intervals; each piece, together
//! with a choice of guard mode per action, becomes one nondeterministic choice
//! whose transitions lead to the abstract successors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{MilpConfig, ProbInterval};
use crate::envmodel::{EnvError, Environment};
use crate::geometry::{GeometryError, Polyhedron, Template};
use crate::neural::Network;
use crate::refine::{child_seed, refine_to_threshold, Leaf, RefineConfig, RefineError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImdpError {
    #[error("interval transitions are infeasible: lower sum {lower}, upper sum {upper}")]
    InfeasibleIntervals { lower: f64, upper: f64 },
    #[error("invalid abstraction setting: {0}")]
    InvalidConfig(String),
    #[error("network has {net} inputs/{net_actions} actions, environment has {env} dims/{env_actions} actions")]
    Mismatch {
        net: usize,
        net_actions: usize,
        env: usize,
        env_actions: usize,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Slack allowed when checking that interval sums bracket 1.
const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    MaxMax,
    MaxMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbstractionConfig {
    pub horizon: usize,
    pub phi: f64,
    pub containment: bool,
    /// Bound the maxmax value with unnormalised upper probabilities.
    pub conservative: bool,
    pub seed: u64,
    /// Cap on the number of abstract states.
    pub state_budget: usize,
    /// Smallest lower bound kept on an existing transition.
    pub min_lower: f64,
    pub refine: RefineConfig,
    pub milp: MilpConfig,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            phi: 0.1,
            containment: true,
            conservative: false,
            seed: 0,
            state_budget: 100_000,
            min_lower: 1e-12,
            refine: RefineConfig::default(),
            milp: MilpConfig::default(),
        }
    }
}

impl AbstractionConfig {
    pub fn validate(&self) -> Result<(), ImdpError> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(ImdpError::InvalidConfig("phi must be in (0,1]".into()));
        }
        if self.horizon < 1 {
            return Err(ImdpError::InvalidConfig("horizon k must be >= 1".into()));
        }
        if self.state_budget < 1 || self.refine.leaf_budget < 1 {
            return Err(ImdpError::InvalidConfig("budgets must be >= 1".into()));
        }
        if !(self.refine.min_frac > 0.0 && self.refine.min_frac <= 0.5) {
            return Err(ImdpError::InvalidConfig("min_frac must be in (0,0.5]".into()));
        }
        if self.refine.samples < 1 || self.refine.bins < 1 {
            return Err(ImdpError::InvalidConfig("samples and bins must be >= 1".into()));
        }
        if !(self.min_lower > 0.0 && self.min_lower < 1e-6) {
            return Err(ImdpError::InvalidConfig("min_lower must be in (0,1e-6)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    /// Index into the owning state's `pieces`.
    pub piece: usize,
    pub transitions: Vec<(usize, ProbInterval)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractState {
    pub id: usize,
    pub polyhedron: Polyhedron,
    pub fail: bool,
    /// Labelled fail only because the state budget stopped the unfolding.
    pub budget_cut: bool,
    pub depth: usize,
    pub pieces: Vec<Leaf>,
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AbstractionStats {
    /// Refined pieces across all expanded states.
    pub polyhedra: usize,
    pub containment_merges: usize,
    pub imdp_states: usize,
    pub transitions: usize,
    pub clamped_lowers: usize,
    pub saturated_leaves: usize,
    pub uncertified_leaves: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imdp {
    pub states: Vec<AbstractState>,
    pub initial: Vec<usize>,
    pub horizon: usize,
    pub stats: AbstractionStats,
}

impl Imdp {
    /// First initial state containing `s`.
    pub fn covering_initial(&self, s: &[f64]) -> Option<usize> {
        self.initial
            .iter()
            .copied()
            .find(|&id| self.states[id].polyhedron.contains_point(s, 0.0))
    }

    /// Line-oriented dump: `initial`/`fail` headers, then
    /// `state choice target lower upper` per transition.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let ids = |it: &mut dyn Iterator<Item = usize>| {
            it.map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "initial {}", ids(&mut self.initial.iter().copied()));
        let _ = writeln!(
            out,
            "fail {}",
            ids(&mut self.states.iter().filter(|s| s.fail).map(|s| s.id))
        );
        for s in &self.states {
            for (j, c) in s.choices.iter().enumerate() {
                for (t, iv) in &c.transitions {
                    let _ = writeln!(out, "{} {} {} {:.16e} {:.16e}", s.id, j, t, iv.lower, iv.upper);
                }
            }
        }
        out
    }
}

/// Inner optimum of `sum p(t) values(t)` over distributions within the intervals.
///
/// Targets are visited from best to worst (descending values for `MaxMax`,
/// ascending for `MaxMin`); each is raised from its lower toward its upper
/// bound while probability mass remains.
pub fn robust_step(
    values: &[f64],
    transitions: &[(usize, ProbInterval)],
    objective: Objective,
) -> Result<f64, ImdpError> {
    let lower: f64 = transitions.iter().map(|(_, i)| i.lower).sum();
    let upper: f64 = transitions.iter().map(|(_, i)| i.upper).sum();
    if lower > 1.0 + SUM_TOL || upper < 1.0 - SUM_TOL {
        return Err(ImdpError::InfeasibleIntervals { lower, upper });
    }
    let mut order: Vec<usize> = (0..transitions.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[transitions[a].0], values[transitions[b].0]);
        let ord = match objective {
            Objective::MaxMax => vb.total_cmp(&va),
            Objective::MaxMin => va.total_cmp(&vb),
        };
        ord.then(a.cmp(&b))
    });
    let mut remaining = 1.0 - lower;
    let mut total = 0.0;
    for i in order {
        let (t, iv) = transitions[i];
        let extra = (iv.upper - iv.lower).min(remaining.max(0.0));
        remaining -= extra;
        total += (iv.lower + extra) * values[t];
    }
    Ok(total)
}

/// Upper probabilities against the values, without normalisation, capped at 1.
pub fn conservative_step(values: &[f64], transitions: &[(usize, ProbInterval)]) -> f64 {
    transitions
        .iter()
        .map(|(t, iv)| iv.upper * values[*t])
        .sum::<f64>()
        .min(1.0)
}

/// Backward induction for `k` sweeps. Entry `t` of the result holds the
/// values after `t` sweeps (entry 0: fail indicator).
pub fn robust_value_iteration(
    m: &Imdp,
    k: usize,
    objective: Objective,
    conservative: bool,
) -> Result<Vec<Vec<f64>>, ImdpError> {
    let init: Vec<f64> = m.states.iter().map(|s| if s.fail { 1.0 } else { 0.0 }).collect();
    let mut history = vec![init];
    for _ in 0..k {
        let prev = history.last().unwrap();
        let next: Result<Vec<f64>, ImdpError> = m
            .states
            .par_iter()
            .map(|s| {
                if s.fail {
                    return Ok(1.0);
                }
                let mut best: f64 = 0.0;
                for c in &s.choices {
                    let v = if conservative && objective == Objective::MaxMax {
                        conservative_step(prev, &c.transitions)
                    } else {
                        robust_step(prev, &c.transitions, objective)?
                    };
                    best = best.max(v);
                }
                Ok(best.clamp(0.0, 1.0))
            })
            .collect();
        history.push(next?);
    }
    Ok(history)
}

/// Expansion of one abstract state, computed independently of the store.
struct Expansion {
    pieces: Vec<Leaf>,
    /// Per piece, per action: successor polyhedra (one per feasible mode).
    posts: Vec<Vec<Vec<Polyhedron>>>,
}

fn expand(
    env: &Environment,
    net: &Network,
    cfg: &AbstractionConfig,
    poly: &Polyhedron,
    seed: u64,
) -> Result<Expansion, ImdpError> {
    let pieces = refine_to_threshold(net, poly, cfg.phi, &cfg.refine, &cfg.milp, seed)?;
    let posts = pieces
        .iter()
        .map(|leaf| {
            (0..env.actions())
                .map(|a| env.abstract_post(&leaf.polyhedron, a))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Expansion { pieces, posts })
}

/// State store with containment or exact-key lookup.
struct Store {
    states: Vec<AbstractState>,
    keys: HashMap<Vec<i64>, usize>,
    containment: bool,
    merges: usize,
}

impl Store {
    fn key(p: &Polyhedron) -> Vec<i64> {
        p.bounds().iter().map(|b| (b * 1e9).round() as i64).collect()
    }

    fn get_or_insert(
        &mut self,
        env: &Environment,
        poly: Polyhedron,
        depth: usize,
    ) -> Result<usize, ImdpError> {
        if self.containment {
            let hit = self.states.iter().find(|s| {
                s.polyhedron
                    .bounds()
                    .iter()
                    .zip(poly.bounds())
                    .all(|(outer, inner)| inner <= outer)
            });
            if let Some(s) = hit {
                self.merges += 1;
                return Ok(s.id);
            }
        } else if let Some(&id) = self.keys.get(&Self::key(&poly)) {
            return Ok(id);
        }
        let id = self.states.len();
        let fail = env.label_fail(&poly)?;
        self.keys.insert(Self::key(&poly), id);
        self.states.push(AbstractState {
            id,
            polyhedron: poly,
            fail,
            budget_cut: false,
            depth,
            pieces: Vec::new(),
            choices: Vec::new(),
        });
        Ok(id)
    }
}

/// Cartesian product of mode indices, first action varying slowest.
fn mode_combinations(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |m| {
                    let mut v = prefix.clone();
                    v.push(m);
                    v
                })
            })
            .collect();
    }
    out
}

/// Breadth-first `k`-step unfolding from the refined initial region.
pub fn build_abstraction(
    env: &Environment,
    net: &Network,
    template: Arc<Template>,
    cfg: &AbstractionConfig,
) -> Result<Imdp, ImdpError> {
    cfg.validate()?;
    if net.inputs() != env.dim() || net.actions() != env.actions() || template.dim() != env.dim() {
        return Err(ImdpError::Mismatch {
            net: net.inputs(),
            net_actions: net.actions(),
            env: env.dim(),
            env_actions: env.actions(),
        });
    }
    let mut store = Store {
        states: Vec::new(),
        keys: HashMap::new(),
        containment: cfg.containment,
        merges: 0,
    };
    let mut stats = AbstractionStats::default();

    let region = env.initial_polyhedron(template)?;
    let leaves = refine_to_threshold(net, &region, cfg.phi, &cfg.refine, &cfg.milp, cfg.seed)?;
    let mut initial = Vec::new();
    // Initial leaves are already refined; they become single-piece states.
    let mut prerefined: HashMap<usize, Leaf> = HashMap::new();
    for leaf in leaves {
        let id = store.states.len();
        let fail = env.label_fail(&leaf.polyhedron)?;
        store.keys.insert(Store::key(&leaf.polyhedron), id);
        store.states.push(AbstractState {
            id,
            polyhedron: leaf.polyhedron.clone(),
            fail,
            budget_cut: false,
            depth: 0,
            pieces: Vec::new(),
            choices: Vec::new(),
        });
        prerefined.insert(id, leaf);
        initial.push(id);
    }

    let mut frontier: Vec<usize> = initial.clone();
    for depth in 0..cfg.horizon {
        frontier.retain(|&id| !store.states[id].fail);
        if frontier.is_empty() {
            break;
        }
        if store.states.len() >= cfg.state_budget {
            stats.budget_exhausted = true;
            for &id in &frontier {
                store.states[id].fail = true;
                store.states[id].budget_cut = true;
            }
            break;
        }
        let expansions: Vec<Result<Expansion, ImdpError>> = frontier
            .par_iter()
            .map(|&id| {
                let poly = &store.states[id].polyhedron;
                match prerefined.get(&id) {
                    Some(leaf) => {
                        let posts = (0..env.actions())
                            .map(|a| env.abstract_post(&leaf.polyhedron, a))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(Expansion {
                            pieces: vec![leaf.clone()],
                            posts: vec![posts],
                        })
                    }
                    None => expand(env, net, cfg, poly, child_seed(cfg.seed, id as u64 + 2)),
                }
            })
            .collect();
        let mut next = Vec::new();
        for (&id, expansion) in frontier.iter().zip(expansions) {
            let Expansion { pieces, posts } = expansion?;
            let mut choices = Vec::new();
            for (j, per_action) in posts.into_iter().enumerate() {
                let mut ids: Vec<Vec<usize>> = Vec::with_capacity(per_action.len());
                for modes in per_action {
                    let mut row = Vec::with_capacity(modes.len());
                    for q in modes {
                        let before = store.states.len();
                        let t = store.get_or_insert(env, q, depth + 1)?;
                        if t >= before {
                            next.push(t);
                        }
                        row.push(t);
                    }
                    ids.push(row);
                }
                let counts: Vec<usize> = ids.iter().map(Vec::len).collect();
                for combo in mode_combinations(&counts) {
                    let mut transitions: Vec<(usize, ProbInterval)> = Vec::new();
                    for (a, &m) in combo.iter().enumerate() {
                        let target = ids[a][m];
                        let iv = pieces[j].abstraction.intervals[a];
                        match transitions.iter_mut().find(|(t, _)| *t == target) {
                            Some((_, acc)) => {
                                acc.lower += iv.lower;
                                acc.upper += iv.upper;
                            }
                            None => transitions.push((target, iv)),
                        }
                    }
                    for (_, iv) in &mut transitions {
                        iv.upper = iv.upper.min(1.0);
                        if iv.lower < cfg.min_lower {
                            iv.lower = cfg.min_lower;
                            stats.clamped_lowers += 1;
                        }
                        iv.upper = iv.upper.max(iv.lower);
                    }
                    let lower: f64 = transitions.iter().map(|(_, i)| i.lower).sum();
                    let upper: f64 = transitions.iter().map(|(_, i)| i.upper).sum();
                    if lower > 1.0 + SUM_TOL || upper < 1.0 - SUM_TOL {
                        return Err(ImdpError::InfeasibleIntervals { lower, upper });
                    }
                    stats.transitions += transitions.len();
                    choices.push(Choice { piece: j, transitions });
                }
            }
            stats.polyhedra += pieces.len();
            stats.saturated_leaves += pieces.iter().filter(|l| l.saturated).count();
            stats.uncertified_leaves += pieces.iter().filter(|l| !l.abstraction.certified).count();
            let state = &mut store.states[id];
            state.pieces = pieces;
            state.choices = choices;
        }
        frontier = next;
    }
    stats.containment_merges = store.merges;
    stats.imdp_states = store.states.len();
    Ok(Imdp {
        states: store.states,
        initial,
        horizon: cfg.horizon,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialBound {
    pub initial_state_id: usize,
    pub maxmax: f64,
    /// Not a lower bound on the failure probability; refinement guidance only.
    pub maxmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub polyhedra: usize,
    pub containment_merges: usize,
    pub imdp_states: usize,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: serde_json::Value,
    pub bounds: Vec<InitialBound>,
    pub global_maxmax: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_safe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub stats: ReportStats,
    pub flags: Vec<String>,
}

impl VerifyReport {
    /// Report with the wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.stats.wall_clock_s = 0.0;
        r
    }
}

/// Build the abstraction, solve both objectives and summarise.
pub fn verify(
    env: &Environment,
    net: &Network,
    template: Arc<Template>,
    cfg: &AbstractionConfig,
    p_safe: Option<f64>,
) -> Result<(VerifyReport, Imdp), ImdpError> {
    let start = Instant::now();
    let m = build_abstraction(env, net, template, cfg)?;
    let maxmax = robust_value_iteration(&m, cfg.horizon, Objective::MaxMax, cfg.conservative)?;
    let maxmin = robust_value_iteration(&m, cfg.horizon, Objective::MaxMin, false)?;
    let (hi, lo) = (maxmax.last().unwrap(), maxmin.last().unwrap());
    let bounds: Vec<InitialBound> = m
        .initial
        .iter()
        .map(|&id| InitialBound {
            initial_state_id: id,
            maxmax: hi[id],
            maxmin: lo[id].min(hi[id]),
        })
        .collect();
    let global_maxmax = bounds.iter().map(|b| b.maxmax).fold(0.0, f64::max);
    let mut flags = Vec::new();
    if m.stats.uncertified_leaves > 0 {
        flags.push("uncertified".to_string());
    }
    if m.stats.saturated_leaves > 0 {
        flags.push("saturated".to_string());
    }
    if m.stats.budget_exhausted {
        flags.push("budget_exhausted".to_string());
    }
    if m.stats.clamped_lowers > 0 {
        flags.push("clamped_lower".to_string());
    }
    if cfg.conservative {
        flags.push("conservative".to_string());
    }
    let report = VerifyReport {
        config: serde_json::Value::Null,
        bounds,
        global_maxmax,
        p_safe,
        pass: p_safe.map(|p| global_maxmax <= p),
        stats: ReportStats {
            polyhedra: m.stats.polyhedra,
            containment_merges: m.stats.containment_merges,
            imdp_states: m.stats.imdp_states,
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
        flags,
    };
    Ok((report, m))
}
