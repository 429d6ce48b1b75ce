//! Certified logit bounds over a polyhedron and the resulting policy abstraction.
//!
//! Each logit is maximised and minimised over the polyhedron with a big-M
//! mixed-integer encoding of the ReLU layers, solved by best-first
//! branch-and-bound over LP relaxations. Neuron pre-activation bounds come
//! from an exact first layer, interval propagation for deeper layers and an
//! optional LP tightening pass; neurons whose sign is fixed by those bounds
//! are encoded without an indicator.
//!
//! Indicator convention follows the classic encoding: `d = 1` means the
//! neuron is inactive.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Polyhedron};
use crate::linprog::{self, Constraint, LinearProgram, LpError, LpStatus, TOL};
use crate::neural::{softmax_at, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("polyhedron is empty")]
    EmptyInput,
    #[error("network expects {expected} inputs, polyhedron has dimension {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MilpConfig {
    /// Global big-M constant; `None` derives per-neuron constants from the
    /// propagated bounds.
    pub big_m: Option<f64>,
    /// Safety factor applied to derived big-M constants.
    pub big_m_factor: f64,
    /// Branch-and-bound node budget per optimised logit.
    pub node_budget: usize,
    /// Tighten hidden-layer bounds with LP relaxations before branching.
    pub lp_tightening: bool,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self {
            big_m: None,
            big_m_factor: 1.05,
            node_budget: 10_000,
            lp_tightening: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// False when some branch-and-bound run hit its node budget or could not
    /// solve a node LP; the bounds are then relaxation bounds, still sound but
    /// possibly loose.
    pub certified: bool,
    /// A user-supplied big-M was too small for some neuron and got enlarged.
    pub big_m_enlarged: bool,
    pub nodes: usize,
}

impl LogitBounds {
    pub fn actions(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ProbInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn point(p: f64) -> Self {
        Self::new(p, p)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64, tol: f64) -> bool {
        p >= self.lower - tol && p <= self.upper + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAbstraction {
    pub intervals: Vec<ProbInterval>,
    /// Largest per-action interval width.
    pub spread: f64,
    pub certified: bool,
}

impl PolicyAbstraction {
    pub fn from_intervals(intervals: Vec<ProbInterval>, certified: bool) -> Self {
        let spread = intervals.iter().map(ProbInterval::width).fold(0.0, f64::max);
        Self {
            intervals,
            spread,
            certified,
        }
    }
}

/// Probability intervals from logit bounds.
///
/// The upper bound for action `j` puts its own logit at its maximum and every
/// other logit at its minimum; the lower bound does the opposite. Softmax is
/// increasing in its own logit and decreasing in the others, so these two
/// assignments extremise the probability over the logit box.
pub fn softmax_intervals(lb: &LogitBounds) -> Vec<ProbInterval> {
    let k = lb.actions();
    (0..k)
        .map(|j| {
            let hi: Vec<f64> = (0..k)
                .map(|i| if i == j { lb.upper[i] } else { lb.lower[i] })
                .collect();
            let lo: Vec<f64> = (0..k)
                .map(|i| if i == j { lb.lower[i] } else { lb.upper[i] })
                .collect();
            let lower = softmax_at(&lo, j).clamp(0.0, 1.0);
            let upper = softmax_at(&hi, j).clamp(0.0, 1.0);
            ProbInterval::new(lower.min(upper), upper)
        })
        .collect()
}

pub fn policy_abstraction(
    net: &Network,
    p: &Polyhedron,
    cfg: &MilpConfig,
) -> Result<PolicyAbstraction, BoundsError> {
    let lb = logit_bounds(net, p, cfg)?;
    Ok(PolicyAbstraction::from_intervals(
        softmax_intervals(&lb),
        lb.certified,
    ))
}

/// Affine expression over encoding variables; missing trailing entries are zero.
#[derive(Debug, Clone, Default)]
struct Affine {
    coeffs: Vec<f64>,
    constant: f64,
}

impl Affine {
    fn var(i: usize) -> Self {
        let mut coeffs = vec![0.0; i + 1];
        coeffs[i] = 1.0;
        Self {
            coeffs,
            constant: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &Affine, w: f64) {
        if w == 0.0 {
            return;
        }
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += w * b;
        }
        self.constant += w * other.constant;
    }

    fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        v.resize(n, 0.0);
        v
    }

    /// Interval of the expression over the variable box.
    fn range(&self, bounds: &[(f64, f64)]) -> (f64, f64) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for (c, &(l, h)) in self.coeffs.iter().zip(bounds) {
            if *c >= 0.0 {
                lo += c * l;
                hi += c * h;
            } else {
                lo += c * h;
                hi += c * l;
            }
        }
        (lo, hi)
    }
}

/// Mixed-integer encoding of the network restricted to a polyhedron.
#[derive(Debug, Clone)]
struct Encoding {
    inputs: usize,
    bounds: Vec<(f64, f64)>,
    /// Each row reads `expression <= 0`.
    rows: Vec<Affine>,
    indicators: Vec<usize>,
    logits: Vec<Affine>,
    big_m_enlarged: bool,
}

impl Encoding {
    fn nvars(&self) -> usize {
        self.bounds.len()
    }

    fn lp(&self, objective: &Affine, fixings: &[(usize, f64)]) -> LinearProgram {
        let n = self.nvars();
        let mut lp = LinearProgram::maximize(objective.dense(n));
        lp.bounds = self.bounds.clone();
        for &(var, val) in fixings {
            lp.bounds[var] = (val, val);
        }
        for expr in &self.rows {
            lp.add_constraint(Constraint::le(expr.dense(n), -expr.constant));
        }
        lp
    }

    fn build(net: &Network, p: &Polyhedron, cfg: &MilpConfig) -> Result<Self, BoundsError> {
        let n = net.inputs();
        let (lo, hi) = p.bounding_box()?;
        let mut enc = Encoding {
            inputs: n,
            bounds: lo.iter().zip(&hi).map(|(&l, &h)| (l, h)).collect(),
            rows: Vec::new(),
            indicators: Vec::new(),
            logits: Vec::new(),
            big_m_enlarged: false,
        };
        for h in p.halfspaces() {
            let mut e = Affine {
                coeffs: h.normal.clone(),
                constant: -h.offset,
            };
            e.coeffs.resize(n, 0.0);
            enc.rows.push(e);
        }

        let mut post: Vec<Affine> = (0..n).map(Affine::var).collect();
        let layers = net.layers();
        for (li, layer) in layers.iter().enumerate() {
            let pre: Vec<Affine> = (0..layer.outputs())
                .map(|i| {
                    let mut e = Affine {
                        coeffs: Vec::new(),
                        constant: layer.bias(i),
                    };
                    for (w, z) in layer.weights[i].iter().zip(&post) {
                        e.add_scaled(z, *w);
                    }
                    e
                })
                .collect();
            if li + 1 == layers.len() {
                enc.logits = pre;
                break;
            }

            let mut ranges: Vec<(f64, f64)> = if li == 0 {
                // Exact over the polyhedron: support values of each weight row.
                (0..layer.outputs())
                    .map(|i| {
                        let row = &layer.weights[i];
                        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
                        let b = layer.bias(i);
                        Ok((b - p.support_value(&neg)?, b + p.support_value(row)?))
                    })
                    .collect::<Result<_, GeometryError>>()?
            } else {
                pre.iter().map(|e| e.range(&enc.bounds)).collect()
            };
            if li > 0 && cfg.lp_tightening {
                let tightened: Vec<(f64, f64)> = pre
                    .par_iter()
                    .zip(ranges.par_iter())
                    .map(|(e, &(l, u))| {
                        if l >= 0.0 || u <= 0.0 {
                            return (l, u);
                        }
                        let mut neg = e.clone();
                        neg.coeffs.iter_mut().for_each(|v| *v = -*v);
                        neg.constant = -neg.constant;
                        let up = enc.relaxed_max(e).unwrap_or(u);
                        let down = enc.relaxed_max(&neg).map(|v| -v).unwrap_or(l);
                        (l.max(down), u.min(up))
                    })
                    .collect();
                ranges = tightened;
            }

            let mut next = Vec::with_capacity(layer.outputs());
            for (e, &(l, u)) in pre.into_iter().zip(&ranges) {
                if u <= 0.0 {
                    next.push(Affine::default());
                } else if l >= 0.0 {
                    next.push(e);
                } else {
                    let (m_neg, m_pos) = match cfg.big_m {
                        Some(m) => {
                            let needed = (-l).max(u);
                            if m < needed {
                                enc.big_m_enlarged = true;
                                let m = needed * cfg.big_m_factor;
                                (m, m)
                            } else {
                                (m, m)
                            }
                        }
                        None => (-l * cfg.big_m_factor, u * cfg.big_m_factor),
                    };
                    let z = enc.nvars();
                    enc.bounds.push((0.0, u.max(0.0)));
                    let d = enc.nvars();
                    enc.bounds.push((0.0, 1.0));
                    enc.indicators.push(d);
                    // pre - z <= 0
                    let mut r1 = e.clone();
                    r1.add_scaled(&Affine::var(z), -1.0);
                    enc.rows.push(r1);
                    // z - pre - m_neg d <= 0
                    let mut r2 = Affine::var(z);
                    r2.add_scaled(&e, -1.0);
                    r2.add_scaled(&Affine::var(d), -m_neg);
                    enc.rows.push(r2);
                    // z + m_pos d - m_pos <= 0
                    let mut r3 = Affine::var(z);
                    r3.add_scaled(&Affine::var(d), m_pos);
                    r3.constant -= m_pos;
                    enc.rows.push(r3);
                    next.push(Affine::var(z));
                }
            }
            post = next;
        }
        Ok(enc)
    }

    fn relaxed_max(&self, objective: &Affine) -> Option<f64> {
        let r = linprog::solve(&self.lp(objective, &[])).ok()?;
        (r.status == LpStatus::Optimal).then(|| r.optimum + objective.constant)
    }
}

#[derive(Debug)]
struct Node {
    bound: f64,
    seq: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct BnbOutcome {
    bound: f64,
    certified: bool,
    nodes: usize,
}

/// Outward padding applied to every certified value to absorb LP round-off.
fn pad(v: f64) -> f64 {
    v + 1e-9 * (1.0 + v.abs())
}

/// Maximise `objective` (sign-adjusted logit) over the encoding.
fn branch_and_bound(
    enc: &Encoding,
    objective: &Affine,
    evaluate: impl Fn(&[f64]) -> f64,
    budget: usize,
) -> BnbOutcome {
    let fallback = objective.range(&enc.bounds).1;
    let mut incumbent = f64::NEG_INFINITY;
    let mut proven = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::INFINITY,
        seq,
        fixings: Vec::new(),
    });
    let mut nodes = 0usize;
    let mut exact = true;

    while let Some(node) = heap.pop() {
        if node.bound <= incumbent + TOL.bnb_gap {
            // Best-first: every open node is bounded by this one.
            proven = proven.max(node.bound);
            heap.clear();
            break;
        }
        if nodes >= budget {
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::max);
            return BnbOutcome {
                bound: pad(open.max(proven).max(incumbent).min(fallback.max(incumbent))),
                certified: false,
                nodes,
            };
        }
        nodes += 1;
        let lp = enc.lp(objective, &node.fixings);
        let result = match linprog::solve(&lp) {
            Ok(r) => r,
            Err(_) => {
                // Cannot solve this node: keep the parent's relaxation bound
                // (or the interval bound at the root) and stop claiming exactness.
                let mut b = enc.bounds.clone();
                for &(v, val) in &node.fixings {
                    b[v] = (val, val);
                }
                proven = proven.max(node.bound.min(objective.range(&b).1));
                exact = false;
                continue;
            }
        };
        match result.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                proven = proven.max(fallback);
                continue;
            }
            LpStatus::Optimal => {}
        }
        let value = (result.optimum + objective.constant).min(node.bound);
        let actual = evaluate(&result.witness[..enc.inputs]);
        incumbent = incumbent.max(actual);
        if value <= incumbent + TOL.bnb_gap {
            proven = proven.max(value);
            continue;
        }
        // Most fractional indicator; ties go to the earliest (lowest layer,
        // then lowest neuron) because indicators are numbered in that order.
        let mut branch: Option<(usize, f64)> = None;
        for &d in &enc.indicators {
            let v = result.witness[d];
            let frac = v.min(1.0 - v);
            if frac > TOL.integrality && branch.map_or(true, |(_, f)| frac > f + 1e-12) {
                branch = Some((d, frac));
            }
        }
        match branch {
            None => {
                // Integral relaxation: the value is attained by the network.
                proven = proven.max(value);
                incumbent = incumbent.max(value);
            }
            Some((d, _)) => {
                for val in [0.0, 1.0] {
                    seq += 1;
                    let mut fixings = node.fixings.clone();
                    fixings.push((d, val));
                    heap.push(Node {
                        bound: value,
                        seq,
                        fixings,
                    });
                }
            }
        }
    }
    BnbOutcome {
        bound: pad(proven.max(incumbent)),
        certified: exact,
        nodes,
    }
}

/// Certified lower and upper bounds on every logit over `p`.
pub fn logit_bounds(
    net: &Network,
    p: &Polyhedron,
    cfg: &MilpConfig,
) -> Result<LogitBounds, BoundsError> {
    if p.is_empty() {
        return Err(BoundsError::EmptyInput);
    }
    if p.dim() != net.inputs() {
        return Err(BoundsError::DimensionMismatch {
            expected: net.inputs(),
            found: p.dim(),
        });
    }
    let enc = Encoding::build(net, p, cfg)?;
    let k = net.actions();
    let jobs: Vec<(usize, f64)> = (0..k).flat_map(|j| [(j, 1.0), (j, -1.0)]).collect();
    let outcomes: Vec<BnbOutcome> = jobs
        .par_iter()
        .map(|&(j, sign)| {
            let mut obj = Affine::default();
            obj.add_scaled(&enc.logits[j], sign);
            branch_and_bound(
                &enc,
                &obj,
                |x| sign * net.forward_logits(x)[j],
                cfg.node_budget,
            )
        })
        .collect();
    let mut lower = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut certified = true;
    let mut nodes = 0;
    for (&(j, sign), o) in jobs.iter().zip(&outcomes) {
        certified &= o.certified;
        nodes += o.nodes;
        if sign > 0.0 {
            upper[j] = o.bound;
        } else {
            lower[j] = -o.bound;
        }
    }
    Ok(LogitBounds {
        lower,
        upper,
        certified,
        big_m_enlarged: enc.big_m_enlarged,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Template;
    use crate::neural::{Activation, Layer, NetworkDocument};

    fn net(layers: Vec<Layer>, inputs: usize, actions: usize) -> Network {
        Network::from_document(NetworkDocument {
            inputs,
            actions,
            layers,
            probes: vec![],
        })
        .unwrap()
    }

    fn unit_box() -> Polyhedron {
        Polyhedron::from_box(Template::rect(2), &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_network_bounds_are_bias() {
        let n = net(
            vec![
                Layer::new(vec![vec![0.0; 2]; 3], vec![0.0; 3], Activation::Relu),
                Layer::new(vec![vec![0.0; 3]; 2], vec![0.7, -1.2], Activation::Linear),
            ],
            2,
            2,
        );
        let b = logit_bounds(&n, &unit_box(), &MilpConfig::default()).unwrap();
        assert!((b.lower[0] - 0.7).abs() < 1e-8 && (b.upper[0] - 0.7).abs() < 1e-8);
        assert!((b.lower[1] + 1.2).abs() < 1e-8 && (b.upper[1] + 1.2).abs() < 1e-8);
        assert!(b.certified);
    }

    #[test]
    fn identity_network_bounds_are_box() {
        let n = net(
            vec![Layer::new(
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![0.0, 0.0],
                Activation::Linear,
            )],
            2,
            2,
        );
        let b = logit_bounds(&n, &unit_box(), &MilpConfig::default()).unwrap();
        for j in 0..2 {
            assert!(b.lower[j].abs() < 1e-8 && (b.upper[j] - 1.0).abs() < 1e-8);
        }
    }

    fn logits(lower: Vec<f64>, upper: Vec<f64>) -> LogitBounds {
        LogitBounds {
            lower,
            upper,
            certified: true,
            big_m_enlarged: false,
            nodes: 0,
        }
    }

    #[test]
    fn softmax_interval_examples() {
        let iv = softmax_intervals(&logits(vec![0.3; 3], vec![0.3; 3]));
        for i in &iv {
            assert!((i.lower - 1.0 / 3.0).abs() < 1e-15 && (i.upper - 1.0 / 3.0).abs() < 1e-15);
        }

        let e = std::f64::consts::E;
        let iv = softmax_intervals(&logits(vec![0.0, 0.0], vec![1.0, 1.0]));
        for i in &iv {
            assert!((i.lower - 1.0 / (1.0 + e)).abs() < 1e-12);
            assert!((i.upper - e / (1.0 + e)).abs() < 1e-12);
        }
        let pa = PolicyAbstraction::from_intervals(iv, true);
        assert!((pa.spread - 0.46211715726000974).abs() < 1e-12);

        let iv = softmax_intervals(&logits(vec![5.0, 0.0], vec![5.0, 0.0]));
        let sigma5 = 1.0 / (1.0 + (-5.0f64).exp());
        assert!((iv[0].lower - sigma5).abs() < 1e-12 && (iv[0].upper - sigma5).abs() < 1e-12);
        assert!((sigma5 - 0.9933).abs() < 1e-4);
    }

    #[test]
    fn point_polyhedron_has_zero_spread() {
        let n = net(
            vec![
                Layer::new(
                    vec![vec![1.0, -2.0], vec![-1.0, 1.0], vec![0.5, 0.5]],
                    vec![0.1, 0.2, -0.3],
                    Activation::Relu,
                ),
                Layer::new(
                    vec![vec![1.0, -1.0, 2.0], vec![-1.0, 0.5, 1.0]],
                    vec![0.0, 0.1],
                    Activation::Linear,
                ),
            ],
            2,
            2,
        );
        let s = [0.4, -0.2];
        let p = Polyhedron::from_box(Template::rect(2), &s, &s).unwrap();
        let pa = policy_abstraction(&n, &p, &MilpConfig::default()).unwrap();
        let dist = n.action_distribution(&s);
        for (iv, q) in pa.intervals.iter().zip(&dist) {
            assert!((iv.lower - q).abs() < 1e-8 && (iv.upper - q).abs() < 1e-8);
        }
        assert!(pa.spread < 1e-8);
    }

    #[test]
    fn small_global_big_m_is_enlarged() {
        let n = net(
            vec![
                Layer::new(vec![vec![10.0, -10.0]], vec![0.0], Activation::Relu),
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], Activation::Linear),
            ],
            2,
            2,
        );
        let cfg = MilpConfig {
            big_m: Some(1.0),
            ..MilpConfig::default()
        };
        let b = logit_bounds(&n, &unit_box(), &cfg).unwrap();
        assert!(b.big_m_enlarged);
        assert!((b.upper[0] - 10.0).abs() < 1e-6);
        assert!(b.lower[0].abs() < 1e-6);
    }

    #[test]
    fn tiny_budget_is_uncertified_but_sound() {
        let n = net(
            vec![
                Layer::new(
                    vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0], vec![2.0, -1.0]],
                    vec![0.0, 0.0, -1.0, -0.5],
                    Activation::Relu,
                ),
                Layer::new(
                    vec![vec![1.0, -2.0, 1.0, -1.0], vec![-1.0, 1.0, -1.0, 1.0]],
                    vec![0.0, 0.0],
                    Activation::Linear,
                ),
            ],
            2,
            2,
        );
        let p = Polyhedron::from_box(Template::rect(2), &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let exact = logit_bounds(&n, &p, &MilpConfig::default()).unwrap();
        let loose = logit_bounds(
            &n,
            &p,
            &MilpConfig {
                node_budget: 1,
                lp_tightening: false,
                ..MilpConfig::default()
            },
        )
        .unwrap();
        assert!(exact.certified);
        for j in 0..2 {
            assert!(loose.upper[j] >= exact.upper[j] - 1e-9);
            assert!(loose.lower[j] <= exact.lower[j] + 1e-9);
        }
    }
}
