//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Verification runs on the committed fixture configs are computed once and
//! shared between the criteria that inspect them.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use polcert::bounds::{logit_bounds, policy_abstraction, MilpConfig, ProbInterval};
use polcert::config::RunConfig;
use polcert::envmodel::Environment;
use polcert::geometry::{Polyhedron, Template};
use polcert::imdp::{
    robust_step, robust_value_iteration, AbstractState, AbstractionStats, Choice, Imdp, Objective,
    VerifyReport,
};
use polcert::linprog::{self, Constraint, LinearProgram, LpStatus};
use polcert::oracle::{exact_tree_probability, mc_failure_estimate, OracleError};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use common::{
    fixture, interval_vertices, pattern_enumeration_bounds, random_box, random_intervals, random_net,
};

const BALL: &str = "configs/bouncing_ball_small.json";
const CRUISE_050: &str = "configs/cruise_rect_phi050.json";
const CRUISE_033: &str = "configs/cruise_rect_phi033.json";
const CRUISE_050_CONTAIN: &str = "configs/cruise_rect_phi050_contain.json";
const PENDULUM: &str = "configs/pendulum_rect.json";

struct Run {
    cfg: RunConfig,
    report: VerifyReport,
    imdp: Imdp,
}

#[derive(Default)]
struct Runs {
    cache: HashMap<&'static str, Run>,
}

impl Runs {
    fn get(&mut self, name: &'static str) -> Result<&Run, String> {
        if !self.cache.contains_key(name) {
            let cfg = RunConfig::load(fixture(name)).map_err(|e| format!("{name}: {e}"))?;
            let (report, imdp) = cfg.run().map_err(|e| format!("{name}: {e}"))?;
            self.cache.insert(name, Run { cfg, report, imdp });
        }
        Ok(&self.cache[name])
    }
}

type Criterion = fn(&mut Runs) -> Result<String, String>;

fn main() -> ExitCode {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("bound_soundness", bound_soundness),
        ("policy_abstraction_soundness", policy_abstraction_soundness),
        ("milp_exactness", milp_exactness),
        ("robust_vi_correctness", robust_vi_correctness),
        ("refinement_contract", refinement_contract),
        ("bound_trends", bound_trends),
        ("post_soundness", post_soundness),
        ("determinism", determinism),
    ];
    let mut runs = Runs::default();
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check(&mut runs);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s] {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn uniform_in(rng: &mut impl Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(l, h)| rng.random_range(*l..=*h)).collect()
}

/// Exact (or Monte Carlo upper confidence) failure probability vs the bound
/// of the covering initial abstract state.
fn bound_soundness(runs: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let mut lines = Vec::new();
    for name in [BALL, CRUISE_050, PENDULUM] {
        let run = runs.get(name)?;
        let env = run.cfg.environment().map_err(|e| e.to_string())?;
        let net = run.cfg.load_network().map_err(|e| e.to_string())?;
        let (lo, hi) = env.initial_box();
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        let mut points: Vec<Vec<f64>> = (0..10).map(|_| uniform_in(&mut rng, &lo, &hi)).collect();
        // Corner closest to the fail region for the cruise controller.
        if env.name() == "cruise_control" {
            points.push(vec![lo[0], hi[1]]);
        }
        let bound_of: HashMap<usize, f64> = run
            .report
            .bounds
            .iter()
            .map(|b| (b.initial_state_id, b.maxmax))
            .collect();
        let mut worst_gap = f64::INFINITY;
        let mut max_truth: f64 = 0.0;
        for s in &points {
            let id = run
                .imdp
                .covering_initial(s)
                .ok_or_else(|| format!("{name}: no initial state covers {s:?}"))?;
            let bound = bound_of[&id];
            let truth = match exact_tree_probability(&env, &net, s, run.cfg.horizon) {
                Ok(p) => p,
                Err(OracleError::CapExceeded { .. }) => {
                    mc_failure_estimate(&env, &net, s, run.cfg.horizon, 10_000, 5)
                        .map_err(|e| e.to_string())?
                        .wilson_ci
                        .1
                }
                Err(e) => return Err(e.to_string()),
            };
            if truth > bound {
                return Err(format!("{name}: s={s:?} truth {truth} > bound {bound}"));
            }
            worst_gap = worst_gap.min(bound - truth);
            max_truth = max_truth.max(truth);
        }
        lines.push(format!(
            "{}: {} points, max truth {max_truth:.3e}, min slack {worst_gap:.3e}",
            env.name(),
            points.len()
        ));
    }
    Ok(lines.join("; "))
}

fn policy_abstraction_soundness(_: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(21);
    let mut checked = 0usize;
    for case in 0..100 {
        let inputs = 2 + case % 2;
        let actions = 2 + case % 3;
        let hidden = [[8, 8], [16, 0], [6, 10]][case % 3];
        let hidden: Vec<usize> = hidden.into_iter().filter(|&h| h > 0).collect();
        let net = random_net(&mut rng, inputs, &hidden, actions);
        let (lo, hi) = random_box(&mut rng, inputs, 1.5);
        let p = Polyhedron::from_box(Template::rect(inputs), &lo, &hi).map_err(|e| e.to_string())?;
        let abs = policy_abstraction(&net, &p, &MilpConfig::default()).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let s = uniform_in(&mut rng, &lo, &hi);
            let probs = net.action_distribution(&s);
            for (a, (pr, iv)) in probs.iter().zip(&abs.intervals).enumerate() {
                if !iv.contains(*pr, 0.0) {
                    return Err(format!("case {case}: action {a} prob {pr} outside {iv:?} at {s:?}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} sampled probabilities inside their intervals"))
}

fn milp_exactness(_: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(31);
    let shapes: [&[usize]; 5] = [&[12], &[6, 6], &[4, 4, 4], &[8, 4], &[5, 7]];
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let hidden = shapes[case % shapes.len()];
        let net = random_net(&mut rng, 2, hidden, 2 + case % 2);
        let (lo, hi) = random_box(&mut rng, 2, 2.0);
        let p = Polyhedron::from_box(Template::rect(2), &lo, &hi).map_err(|e| e.to_string())?;
        let lb = logit_bounds(&net, &p, &MilpConfig::default()).map_err(|e| e.to_string())?;
        if !lb.certified {
            return Err(format!("case {case}: bounds not certified"));
        }
        let (olo, ohi) = pattern_enumeration_bounds(&net, &lo, &hi);
        for j in 0..net.actions() {
            let gap = (lb.lower[j] - olo[j]).abs().max((lb.upper[j] - ohi[j]).abs());
            if gap > 1e-6 {
                return Err(format!(
                    "case {case} logit {j}: milp [{}, {}] vs oracle [{}, {}]",
                    lb.lower[j], lb.upper[j], olo[j], ohi[j]
                ));
            }
            worst = worst.max(gap);
        }
    }
    Ok(format!("50 nets, max deviation {worst:.2e}"))
}

fn lp_inner(values: &[f64], intervals: &[ProbInterval], objective: Objective) -> f64 {
    let sign = if objective == Objective::MaxMax { 1.0 } else { -1.0 };
    let mut lp = LinearProgram::maximize(values.iter().map(|v| sign * v).collect());
    lp.bounds = intervals.iter().map(|i| (i.lower, i.upper)).collect();
    lp.add_constraint(Constraint::eq(vec![1.0; values.len()], 1.0));
    let r = linprog::solve(&lp).expect("inner LP solves");
    assert_eq!(r.status, LpStatus::Optimal);
    sign * r.optimum
}

fn brute_force(m: &Imdp, s: usize, k: usize, objective: Objective) -> f64 {
    let state = &m.states[s];
    if state.fail {
        return 1.0;
    }
    if k == 0 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for c in &state.choices {
        let next: Vec<f64> = c
            .transitions
            .iter()
            .map(|(t, _)| brute_force(m, *t, k - 1, objective))
            .collect();
        let ivs: Vec<ProbInterval> = c.transitions.iter().map(|(_, i)| *i).collect();
        let vals = interval_vertices(&ivs)
            .into_iter()
            .map(|p| p.iter().zip(&next).map(|(a, b)| a * b).sum::<f64>());
        let inner = match objective {
            Objective::MaxMax => vals.fold(f64::NEG_INFINITY, f64::max),
            Objective::MaxMin => vals.fold(f64::INFINITY, f64::min),
        };
        best = best.max(inner);
    }
    best
}

fn random_imdp(rng: &mut impl Rng) -> Imdp {
    let n = rng.random_range(2..=4);
    let unit = Polyhedron::from_box(Template::rect(1), &[0.0], &[1.0]).unwrap();
    let states = (0..n)
        .map(|id| {
            let fail = id == n - 1 || rng.random_bool(0.2);
            let choices = if fail {
                Vec::new()
            } else {
                (0..rng.random_range(1..=2))
                    .map(|_| {
                        let targets = rng.random_range(1..=n);
                        let mut ids: Vec<usize> = (0..n).collect();
                        for i in (1..n).rev() {
                            ids.swap(i, rng.random_range(0..=i));
                        }
                        let ivs = random_intervals(rng, targets);
                        Choice {
                            piece: 0,
                            transitions: ids.into_iter().zip(ivs).collect(),
                        }
                    })
                    .collect()
            };
            AbstractState {
                id,
                polyhedron: unit.clone(),
                fail,
                budget_cut: false,
                depth: 0,
                pieces: Vec::new(),
                choices,
            }
        })
        .collect();
    Imdp {
        states,
        initial: vec![0],
        horizon: 0,
        stats: AbstractionStats::default(),
    }
}

fn robust_vi_correctness(_: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.random_range(1..=6);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let ivs = random_intervals(&mut rng, n);
        let transitions: Vec<(usize, ProbInterval)> = ivs.iter().copied().enumerate().collect();
        for o in [Objective::MaxMax, Objective::MaxMin] {
            let greedy = robust_step(&values, &transitions, o).map_err(|e| e.to_string())?;
            let lp = lp_inner(&values, &ivs, o);
            if (greedy - lp).abs() > 1e-9 {
                return Err(format!("step case {case} {o:?}: greedy {greedy} vs lp {lp}"));
            }
            worst = worst.max((greedy - lp).abs());
        }
    }
    for case in 0..20 {
        let m = random_imdp(&mut rng);
        let k = rng.random_range(1..=5);
        for o in [Objective::MaxMax, Objective::MaxMin] {
            let v = robust_value_iteration(&m, k, o, false).map_err(|e| e.to_string())?;
            for s in 0..m.states.len() {
                let exact = brute_force(&m, s, k, o);
                if (v[k][s] - exact).abs() > 1e-9 {
                    return Err(format!("imdp case {case} {o:?} state {s}: {} vs {exact}", v[k][s]));
                }
            }
        }
    }
    Ok(format!("1000 steps vs LP (max dev {worst:.1e}), 20 IMDPs vs enumeration"))
}

fn refinement_contract(runs: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(51);
    let mut leaves = 0usize;
    let mut saturated = 0usize;
    let mut points = 0usize;
    for name in [BALL, CRUISE_050, CRUISE_033, CRUISE_050_CONTAIN, PENDULUM] {
        let run = runs.get(name)?;
        let phi = run.cfg.phi;
        for s in &run.imdp.states {
            for leaf in &s.pieces {
                leaves += 1;
                if leaf.saturated {
                    saturated += 1;
                    continue;
                }
                if !leaf.abstraction.certified || leaf.abstraction.spread > phi {
                    return Err(format!(
                        "{name}: state {} leaf spread {} (certified {}) above phi {phi}",
                        s.id, leaf.abstraction.spread, leaf.abstraction.certified
                    ));
                }
            }
        }
        // The initial leaves partition the initial region.
        let env = run.cfg.environment().map_err(|e| e.to_string())?;
        let (lo, hi) = env.initial_box();
        for _ in 0..10_000 {
            let s = uniform_in(&mut rng, lo, hi);
            if run.imdp.covering_initial(&s).is_none() {
                return Err(format!("{name}: initial point {s:?} not covered"));
            }
            points += 1;
        }
        // Pieces of expanded states cover their parent.
        let split: Vec<&AbstractState> = run.imdp.states.iter().filter(|s| s.pieces.len() > 1).collect();
        let per_state = (10_000 / split.len().max(1)).max(20);
        for s in split.iter().take(500) {
            let samples = match s.polyhedron.hit_and_run_sample(per_state, s.id as u64) {
                Ok(v) => v,
                Err(_) => continue,
            };
            for x in samples {
                if !s.pieces.iter().any(|l| l.polyhedron.contains_point(&x, 1e-9)) {
                    return Err(format!("{name}: state {} point {x:?} not covered", s.id));
                }
                points += 1;
            }
        }
    }
    Ok(format!(
        "{leaves} leaves ({saturated} saturated) within phi; {points} coverage samples, 0 misses"
    ))
}

fn bound_trends(runs: &mut Runs) -> Result<String, String> {
    let b033 = runs.get(CRUISE_033)?.report.global_maxmax;
    let b050 = runs.get(CRUISE_050)?.report.global_maxmax;
    let b050c = runs.get(CRUISE_050_CONTAIN)?.report.global_maxmax;
    let ball = runs.get(BALL)?.report.global_maxmax;
    let detail = format!(
        "cruise phi=0.33 {b033:.4} <= phi=0.5 {b050:.4}; contain {b050c:.4} >= no-contain {b050:.4}; ball {ball:.4} <= 0.01"
    );
    if b033 <= b050 && b050c >= b050 && ball <= 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn post_soundness(_: &mut Runs) -> Result<String, String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(61);
    let envs: Vec<(Environment, Vec<(Vec<f64>, Vec<f64>)>)> = ["bouncing_ball", "cruise_control", "pendulum"]
        .iter()
        .map(|name| {
            let spec = serde_json::from_str(&format!("{{\"name\": \"{name}\"}}")).unwrap();
            let env = Environment::from_spec(&spec).unwrap();
            let (lo, hi) = env.initial_box();
            let mut boxes = vec![(lo.to_vec(), hi.to_vec())];
            boxes.extend(match *name {
                // Straddles the ground contact and both paddle guards.
                "bouncing_ball" => vec![
                    (vec![0.0, -12.0], vec![1.5, -2.0]),
                    (vec![3.0, -5.0], vec![10.0, 5.0]),
                ],
                "cruise_control" => vec![(vec![-1.0, 20.0], vec![2.0, 40.0])],
                // Wide enough for the speed clamp to engage.
                _ => vec![(vec![-0.5, -1.0], vec![0.5, 1.0]), (vec![0.5, 7.0], vec![1.5, 8.0])],
            });
            (env, boxes)
        })
        .collect();
    let mut checked = 0usize;
    for (env, boxes) in &envs {
        for template in [Template::rect(2), Template::octagon(2)] {
            for (lo, hi) in boxes {
                let p = Polyhedron::from_box(template.clone(), lo, hi).map_err(|e| e.to_string())?;
                for a in 0..env.actions() {
                    let posts = env.abstract_post(&p, a).map_err(|e| e.to_string())?;
                    for _ in 0..1000 {
                        let s = uniform_in(&mut rng, lo, hi);
                        let next = env.concrete_step(&s, a);
                        if !posts.iter().any(|q| q.contains_point(&next, 0.0)) {
                            return Err(format!(
                                "{} action {a}: successor {next:?} of {s:?} outside the post",
                                env.name()
                            ));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} concrete successors contained, 0 misses"))
}

fn determinism(runs: &mut Runs) -> Result<String, String> {
    let first = runs.get(PENDULUM)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .map_err(|e| e.to_string())?;
    let cfg = first.cfg.clone();
    let (report, imdp) = pool.install(|| cfg.run()).map_err(|e| e.to_string())?;
    let a = serde_json::to_string(&first.report.without_timing()).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&report.without_timing()).map_err(|e| e.to_string())?;
    if a != b {
        return Err("reports differ between runs".into());
    }
    if first.imdp.dump() != imdp.dump() {
        return Err("IMDP dumps differ between runs".into());
    }
    Ok(format!("pendulum report ({} bytes) and IMDP dump identical across thread counts", a.len()))
}
