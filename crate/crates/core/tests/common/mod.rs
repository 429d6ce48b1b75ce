//! Shared helpers for the integration tests: fixture paths, random networks
//! and independent reference solvers.

#![allow(dead_code)]

use std::path::PathBuf;

use polcert::bounds::ProbInterval;
use polcert::neural::{Activation, Layer, Network, NetworkDocument};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn random_net(rng: &mut impl Rng, inputs: usize, hidden: &[usize], actions: usize) -> Network {
    let mut layers = Vec::new();
    let mut width = inputs;
    let sizes: Vec<usize> = hidden.iter().copied().chain([actions]).collect();
    for (i, &out) in sizes.iter().enumerate() {
        let weights = (0..out)
            .map(|_| (0..width).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let bias = (0..out).map(|_| { let z: f64 = StandardNormal.sample(rng); 0.5 * z }).collect();
        let activation = if i + 1 == sizes.len() {
            Activation::Linear
        } else {
            Activation::Relu
        };
        layers.push(Layer::new(weights, bias, activation));
        width = out;
    }
    Network::from_document(NetworkDocument {
        inputs,
        actions,
        layers,
        probes: vec![],
    })
    .unwrap()
}

pub fn random_box(rng: &mut impl Rng, dim: usize, span: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for _ in 0..dim {
        let a = rng.random_range(-span..span);
        let w = rng.random_range(0.05..span);
        lo.push(a);
        hi.push(a + w);
    }
    (lo, hi)
}

/// Clip a convex polygon by `a . x + c >= 0` (sign +1) or `<= 0` (sign -1).
fn clip(poly: &[[f64; 2]], a: [f64; 2], c: f64, sign: f64) -> Vec<[f64; 2]> {
    let f = |p: &[f64; 2]| sign * (a[0] * p[0] + a[1] * p[1] + c);
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fp, fq) = (f(&p), f(&q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Exact logit ranges of a 2-input network over a box, by enumerating
/// activation patterns: every pattern region is a polygon on which the
/// network is affine, so extremes sit at polygon vertices.
pub fn pattern_enumeration_bounds(net: &Network, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(net.inputs(), 2);
    let square = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    // Affine maps x -> a . x + c of the current layer's inputs.
    let identity = vec![([1.0, 0.0], 0.0), ([0.0, 1.0], 0.0)];
    let k = net.actions();
    let mut best = (vec![f64::INFINITY; k], vec![f64::NEG_INFINITY; k]);
    descend(net, 0, identity, Vec::new(), 0, square, lo, hi, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn descend(
    net: &Network,
    layer: usize,
    inputs: Vec<([f64; 2], f64)>,
    mut outputs: Vec<([f64; 2], f64)>,
    neuron: usize,
    poly: Vec<[f64; 2]>,
    lo: &[f64],
    hi: &[f64],
    best: &mut (Vec<f64>, Vec<f64>),
) {
    if poly.is_empty() {
        return;
    }
    let layers = net.layers();
    if layer + 1 == layers.len() {
        for v in &poly {
            let x = [v[0].clamp(lo[0], hi[0]), v[1].clamp(lo[1], hi[1])];
            let z = net.forward_logits(&x);
            for j in 0..z.len() {
                best.0[j] = best.0[j].min(z[j]);
                best.1[j] = best.1[j].max(z[j]);
            }
        }
        return;
    }
    let l = &layers[layer];
    if neuron == l.outputs() {
        descend(net, layer + 1, outputs, Vec::new(), 0, poly, lo, hi, best);
        return;
    }
    let mut a = [0.0, 0.0];
    let mut c = l.bias(neuron);
    for (w, (ai, ci)) in l.weights[neuron].iter().zip(&inputs) {
        a[0] += w * ai[0];
        a[1] += w * ai[1];
        c += w * ci;
    }
    let active = clip(&poly, a, c, 1.0);
    let inactive = clip(&poly, a, c, -1.0);
    outputs.push((a, c));
    descend(net, layer, inputs.clone(), outputs.clone(), neuron + 1, active, lo, hi, best);
    outputs.pop();
    outputs.push(([0.0, 0.0], 0.0));
    descend(net, layer, inputs, outputs, neuron + 1, inactive, lo, hi, best);
}

/// Vertices of `{p : lower <= p <= upper, sum p = 1}`.
pub fn interval_vertices(intervals: &[ProbInterval]) -> Vec<Vec<f64>> {
    let n = intervals.len();
    let mut out = Vec::new();
    for free in 0..n {
        for mask in 0..(1usize << (n - 1)) {
            let mut p = vec![0.0; n];
            let mut bit = 0;
            for i in 0..n {
                if i == free {
                    continue;
                }
                p[i] = if mask >> bit & 1 == 1 {
                    intervals[i].upper
                } else {
                    intervals[i].lower
                };
                bit += 1;
            }
            let rest: f64 = p.iter().sum();
            p[free] = 1.0 - rest;
            if p[free] >= intervals[free].lower - 1e-12 && p[free] <= intervals[free].upper + 1e-12 {
                out.push(p);
            }
        }
    }
    out
}

/// Random intervals around a random distribution over `n` targets.
pub fn random_intervals(rng: &mut impl Rng, n: usize) -> Vec<ProbInterval> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|r| {
            let q = r / total;
            let l = q * rng.random_range(0.0..1.0);
            let u = q + (1.0 - q) * rng.random_range(0.0..0.5);
            ProbInterval::new(l, u)
        })
        .collect()
}
