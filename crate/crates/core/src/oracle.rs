//! Concrete execution of the closed loop: simulation, Monte Carlo estimates
//! and exact finite-horizon failure probabilities.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::envmodel::{Environment, Trace, TraceStep};
use crate::neural::Network;
use crate::refine::child_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact expansion needs {actions}^{horizon} paths, above the cap {cap}")]
    CapExceeded { actions: usize, horizon: usize, cap: f64 },
    #[error("trials must be >= 1")]
    NoTrials,
}

/// Largest number of action sequences the exact recursion may expand.
pub const TREE_CAP: f64 = 1e7;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub trials: usize,
    pub failures: usize,
    pub wilson_ci: (f64, f64),
}

/// Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

fn sample_action(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.len() - 1
}

/// One execution of at most `k` steps, stopping at the first failure.
pub fn simulate_trace(
    env: &Environment,
    net: &Network,
    s0: &[f64],
    k: usize,
    seed: u64,
) -> (Trace, bool) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut trace = Vec::new();
    let mut s = s0.to_vec();
    if env.is_fail(&s) {
        return (trace, true);
    }
    for _ in 0..k {
        let a = sample_action(&net.action_distribution(&s), rng.random::<f64>());
        let next = env.concrete_step(&s, a);
        let failed = env.is_fail(&next);
        trace.push(TraceStep {
            state: s,
            action: a,
            next: next.clone(),
        });
        if failed {
            return (trace, true);
        }
        s = next;
    }
    (trace, false)
}

pub fn mc_failure_estimate(
    env: &Environment,
    net: &Network,
    s0: &[f64],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let failures = (0..trials)
        .into_par_iter()
        .filter(|&i| simulate_trace(env, net, s0, k, child_seed(seed, i as u64)).1)
        .count();
    Ok(McEstimate {
        estimate: failures as f64 / trials as f64,
        trials,
        failures,
        wilson_ci: wilson_interval(failures, trials, Z95),
    })
}

/// Exact probability of failing within `k` steps from `s0`.
pub fn exact_tree_probability(
    env: &Environment,
    net: &Network,
    s0: &[f64],
    k: usize,
) -> Result<f64, OracleError> {
    let paths = (env.actions() as f64).powi(k as i32);
    if paths > TREE_CAP {
        return Err(OracleError::CapExceeded {
            actions: env.actions(),
            horizon: k,
            cap: TREE_CAP,
        });
    }
    Ok(recurse(env, net, s0, k))
}

fn recurse(env: &Environment, net: &Network, s: &[f64], k: usize) -> f64 {
    if env.is_fail(s) {
        return 1.0;
    }
    if k == 0 {
        return 0.0;
    }
    let probs = net.action_distribution(s);
    // Actions reaching the same successor share one subtree.
    let mut successors: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, p) in probs.into_iter().enumerate() {
        let next = env.concrete_step(s, a);
        match successors.iter_mut().find(|(t, _)| *t == next) {
            Some((_, acc)) => *acc += p,
            None => successors.push((next, p)),
        }
    }
    successors
        .iter()
        .map(|(t, p)| p * recurse(env, net, t, k - 1))
        .sum()
}

/// One line per step: `t action state... -> next...`.
pub fn dump_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for (t, step) in trace.iter().enumerate() {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{t} {} {} -> {}", step.action, fmt(&step.state), fmt(&step.next));
    }
    out
}
