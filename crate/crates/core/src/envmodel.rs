//! Benchmark environments: concrete steppers and abstract post operators.
//!
//! Three benchmarks are built in (bouncing ball, adaptive cruise control,
//! inverted pendulum) plus a generic per-action affine environment used for
//! crafted test cases. Every environment saturates states at its declared
//! variable ranges, which keeps the dynamics total.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{region_support, GeometryError, Halfspace, Polyhedron, Region, Template};
use crate::linprog::{self, dot, Constraint, LinearProgram, LpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("abstract post of an empty polyhedron")]
    EmptyInput,
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Outward slack added to every abstract post bound.
const POST_PAD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallParams {
    pub dt: f64,
    pub gravity: f64,
    /// Fraction of speed kept at a bounce.
    pub restitution: f64,
    /// Treat `restitution` as an energy fraction (speed factor `sqrt(restitution)`).
    pub energy_exact: bool,
    pub hit_impulse: f64,
    pub paddle_min: f64,
    pub paddle_max: f64,
    pub fail_height: f64,
    pub fail_speed: f64,
    /// "small", "large" or explicit `[[p_lo, p_hi], [v_lo, v_hi]]` via `initial_box`.
    pub initial: String,
    pub initial_box: Option<[[f64; 2]; 2]>,
    pub max_height: f64,
    pub max_speed: f64,
}

impl Default for BallParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            gravity: 9.81,
            restitution: 0.9,
            energy_exact: false,
            hit_impulse: 4.0,
            paddle_min: 4.0,
            paddle_max: 9.0,
            fail_height: 0.1,
            fail_speed: 1.0,
            initial: "small".into(),
            initial_box: None,
            max_height: 50.0,
            max_speed: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CruiseParams {
    pub dt: f64,
    pub lead_speed: f64,
    pub accel: f64,
    pub initial_box: [[f64; 2]; 2],
    pub range_distance: [f64; 2],
    pub range_speed: [f64; 2],
}

impl Default for CruiseParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            lead_speed: 28.0,
            accel: 1.0,
            initial_box: [[3.0, 10.0], [26.0, 32.0]],
            range_distance: [-100.0, 100.0],
            range_speed: [0.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_speed: f64,
    /// Torque per action: noop, left, right.
    pub torques: Vec<f64>,
    pub fail_angle: f64,
    pub fail_speed: f64,
    pub initial_box: [[f64; 2]; 2],
    /// Widest angle interval used when bounding `sin`.
    pub sin_slice_width: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            dt: 0.05,
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_speed: 8.0,
            torques: vec![0.0, -2.0, 2.0],
            fail_angle: 0.57,
            fail_speed: 2.5,
            initial_box: [[-0.05, 0.05], [-0.05, 0.05]],
            sin_slice_width: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineAction {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// A generic environment with per-action affine dynamics `s' = A s + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    pub dim: usize,
    pub actions: Vec<AffineAction>,
    /// Disjunction of closed halfspace conjunctions.
    pub fail: Vec<Region>,
    pub initial_box: Vec<[f64; 2]>,
    pub ranges: Vec<[f64; 2]>,
}

/// Environment selection plus constant overrides, as written in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnvSpec {
    BouncingBall(BallParams),
    CruiseControl(CruiseParams),
    Pendulum(PendulumParams),
    Affine(AffineParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    Linear,
    PiecewiseLinear,
    Nonlinear,
}

/// One affine piece of a (piecewise) affine dynamics: applies on `guard`.
#[derive(Debug, Clone, PartialEq)]
struct Mode {
    guard: Region,
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl Mode {
    fn apply(&self, s: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| dot(row, s) + c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Dynamics {
    /// Modes per action; the concrete step is given separately where guards overlap.
    Piecewise(Vec<Vec<Mode>>),
    Ball(BallParams),
    Pendulum(PendulumParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    name: String,
    var_names: Vec<String>,
    action_names: Vec<String>,
    ranges: Vec<(f64, f64)>,
    fail: Vec<Region>,
    initial: (Vec<f64>, Vec<f64>),
    dt: f64,
    kind: DynamicsKind,
    dynamics: Dynamics,
    ball_modes: Vec<Vec<Mode>>,
}

/// One transition of a concrete execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: Vec<f64>,
    pub action: usize,
    pub next: Vec<f64>,
}

pub type Trace = Vec<TraceStep>;

impl Environment {
    pub fn from_spec(spec: &EnvSpec) -> Result<Self, EnvError> {
        match spec {
            EnvSpec::BouncingBall(p) => Ok(Self::bouncing_ball(p.clone())),
            EnvSpec::CruiseControl(p) => Ok(Self::cruise_control(p.clone())),
            EnvSpec::Pendulum(p) => Self::pendulum(p.clone()),
            EnvSpec::Affine(p) => Self::affine(p.clone()),
        }
    }

    pub fn bouncing_ball(p: BallParams) -> Self {
        let initial = match (&p.initial_box, p.initial.as_str()) {
            (Some(b), _) => (vec![b[0][0], b[1][0]], vec![b[0][1], b[1][1]]),
            (None, "large") => (vec![5.0, -1.0], vec![9.0, 1.0]),
            _ => (vec![5.0, -0.1], vec![9.0, 0.0]),
        };
        let fail = vec![vec![
            Halfspace::new(vec![1.0, 0.0], p.fail_height),
            Halfspace::new(vec![0.0, 1.0], p.fail_speed),
            Halfspace::new(vec![0.0, -1.0], p.fail_speed),
        ]];
        let modes = Self::ball_modes(&p);
        Self {
            name: "bouncing_ball".into(),
            var_names: vec!["p".into(), "v".into()],
            action_names: vec!["noop".into(), "hit".into()],
            ranges: vec![(0.0, p.max_height), (-p.max_speed, p.max_speed)],
            fail,
            initial,
            dt: p.dt,
            kind: DynamicsKind::PiecewiseLinear,
            dynamics: Dynamics::Ball(p),
            ball_modes: modes,
        }
    }

    fn restitution_factor(p: &BallParams) -> f64 {
        if p.energy_exact {
            p.restitution.sqrt()
        } else {
            p.restitution
        }
    }

    /// Guarded affine pieces of the ball dynamics for both actions.
    fn ball_modes(p: &BallParams) -> Vec<Vec<Mode>> {
        let dt = p.dt;
        let e = Self::restitution_factor(p);
        // (guard on p, velocity impulse)
        let noop = vec![(Vec::new(), 0.0)];
        let hit = vec![
            (
                vec![
                    Halfspace::at_least(vec![1.0, 0.0], p.paddle_min),
                    Halfspace::new(vec![1.0, 0.0], p.paddle_max),
                ],
                -p.hit_impulse,
            ),
            (vec![Halfspace::new(vec![1.0, 0.0], p.paddle_min)], 0.0),
            (vec![Halfspace::at_least(vec![1.0, 0.0], p.paddle_max)], 0.0),
        ];
        [noop, hit]
            .into_iter()
            .map(|pieces| {
                let mut modes = Vec::new();
                for (guard, dv) in pieces {
                    // Ball stays above ground: p + (v + dv) dt >= 0.
                    let mut free = guard.clone();
                    free.push(Halfspace::at_least(vec![1.0, dt], -dv * dt));
                    modes.push(Mode {
                        guard: free,
                        matrix: vec![vec![1.0, dt], vec![0.0, 1.0]],
                        offset: vec![dv * dt, dv - p.gravity * dt],
                    });
                    let mut bounce = guard;
                    bounce.push(Halfspace::new(vec![1.0, dt], -dv * dt));
                    modes.push(Mode {
                        guard: bounce,
                        matrix: vec![vec![0.0, 0.0], vec![0.0, -e]],
                        offset: vec![0.0, -e * dv],
                    });
                }
                modes
            })
            .collect()
    }

    pub fn cruise_control(p: CruiseParams) -> Self {
        let dt = p.dt;
        let actions = [p.accel, -p.accel]
            .into_iter()
            .map(|a| {
                vec![Mode {
                    guard: Vec::new(),
                    matrix: vec![vec![1.0, -dt], vec![0.0, 1.0]],
                    offset: vec![p.lead_speed * dt - 0.5 * a * dt * dt, a * dt],
                }]
            })
            .collect();
        Self {
            name: "cruise_control".into(),
            var_names: vec!["x_rel".into(), "v_ego".into()],
            action_names: vec!["accelerate".into(), "decelerate".into()],
            ranges: vec![
                (p.range_distance[0], p.range_distance[1]),
                (p.range_speed[0], p.range_speed[1]),
            ],
            fail: vec![vec![Halfspace::new(vec![1.0, 0.0], 0.0)]],
            initial: (
                vec![p.initial_box[0][0], p.initial_box[1][0]],
                vec![p.initial_box[0][1], p.initial_box[1][1]],
            ),
            dt,
            kind: DynamicsKind::Linear,
            dynamics: Dynamics::Piecewise(actions),
            ball_modes: Vec::new(),
        }
    }

    pub fn pendulum(p: PendulumParams) -> Result<Self, EnvError> {
        if p.torques.len() < 2 {
            return Err(EnvError::Invalid("pendulum needs at least 2 actions".into()));
        }
        if !(p.sin_slice_width > 0.0) {
            return Err(EnvError::Invalid("sin_slice_width must be positive".into()));
        }
        let fail = vec![
            vec![Halfspace::at_least(vec![1.0, 0.0], p.fail_angle)],
            vec![Halfspace::new(vec![1.0, 0.0], -p.fail_angle)],
            vec![Halfspace::at_least(vec![0.0, 1.0], p.fail_speed)],
            vec![Halfspace::new(vec![0.0, 1.0], -p.fail_speed)],
        ];
        let names = ["noop", "left", "right"];
        let action_names = (0..p.torques.len())
            .map(|i| names.get(i).map_or(format!("a{i}"), |s| s.to_string()))
            .collect();
        Ok(Self {
            name: "pendulum".into(),
            var_names: vec!["theta".into(), "omega".into()],
            action_names,
            ranges: vec![(-2.0 * PI, 2.0 * PI), (-p.max_speed, p.max_speed)],
            fail,
            initial: (
                vec![p.initial_box[0][0], p.initial_box[1][0]],
                vec![p.initial_box[0][1], p.initial_box[1][1]],
            ),
            dt: p.dt,
            kind: DynamicsKind::Nonlinear,
            dynamics: Dynamics::Pendulum(p),
            ball_modes: Vec::new(),
        })
    }

    pub fn affine(p: AffineParams) -> Result<Self, EnvError> {
        let n = p.dim;
        if p.actions.len() < 2 {
            return Err(EnvError::Invalid("need at least 2 actions".into()));
        }
        for (a, act) in p.actions.iter().enumerate() {
            if act.matrix.len() != n
                || act.matrix.iter().any(|r| r.len() != n)
                || act.offset.len() != n
            {
                return Err(EnvError::Invalid(format!("action {a} has wrong shape")));
            }
        }
        if p.initial_box.len() != n || p.ranges.len() != n {
            return Err(EnvError::Invalid("initial box or ranges have wrong length".into()));
        }
        if p.fail.iter().flatten().any(|h| h.normal.len() != n) {
            return Err(EnvError::Invalid("fail halfspace has wrong dimension".into()));
        }
        let actions = p
            .actions
            .iter()
            .map(|a| {
                vec![Mode {
                    guard: Vec::new(),
                    matrix: a.matrix.clone(),
                    offset: a.offset.clone(),
                }]
            })
            .collect();
        Ok(Self {
            name: "affine".into(),
            var_names: (0..n).map(|i| format!("x{i}")).collect(),
            action_names: (0..p.actions.len()).map(|i| format!("a{i}")).collect(),
            ranges: p.ranges.iter().map(|r| (r[0], r[1])).collect(),
            fail: p.fail,
            initial: (
                p.initial_box.iter().map(|b| b[0]).collect(),
                p.initial_box.iter().map(|b| b[1]).collect(),
            ),
            dt: 1.0,
            kind: DynamicsKind::Linear,
            dynamics: Dynamics::Piecewise(actions),
            ball_modes: Vec::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn kind(&self) -> DynamicsKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn fail_region(&self) -> &[Region] {
        &self.fail
    }

    pub fn initial_box(&self) -> (&[f64], &[f64]) {
        (&self.initial.0, &self.initial.1)
    }

    pub fn initial_polyhedron(&self, template: Arc<Template>) -> Result<Polyhedron, EnvError> {
        Ok(Polyhedron::from_box(
            template,
            &self.initial.0,
            &self.initial.1,
        )?)
    }

    fn saturate(&self, mut s: Vec<f64>) -> Vec<f64> {
        for (v, &(lo, hi)) in s.iter_mut().zip(&self.ranges) {
            *v = v.clamp(lo, hi);
        }
        s
    }

    /// Deterministic successor of `s` under action `a`.
    pub fn concrete_step(&self, s: &[f64], a: usize) -> Vec<f64> {
        let next = match &self.dynamics {
            Dynamics::Piecewise(modes) => modes[a][0].apply(s),
            Dynamics::Ball(p) => {
                let (pos, mut v) = (s[0], s[1]);
                if a == 1 && pos >= p.paddle_min && pos <= p.paddle_max {
                    v -= p.hit_impulse;
                }
                if pos + v * p.dt < 0.0 {
                    vec![0.0, -Self::restitution_factor(p) * v]
                } else {
                    vec![pos + v * p.dt, v - p.gravity * p.dt]
                }
            }
            Dynamics::Pendulum(p) => {
                let (theta, omega) = (s[0], s[1]);
                let (k_sin, k_u) = pendulum_gains(p);
                let omega = (omega + (k_sin * theta.sin() + k_u * p.torques[a]) * p.dt)
                    .clamp(-p.max_speed, p.max_speed);
                vec![theta + omega * p.dt, omega]
            }
        };
        self.saturate(next)
    }

    /// Concrete failure predicate (strict where the property is strict).
    pub fn is_fail(&self, s: &[f64]) -> bool {
        match &self.dynamics {
            Dynamics::Ball(p) => s[0] <= p.fail_height && s[1].abs() <= p.fail_speed,
            Dynamics::Pendulum(p) => s[0].abs() > p.fail_angle || s[1].abs() > p.fail_speed,
            Dynamics::Piecewise(_) if self.name == "cruise_control" => s[0] < 0.0,
            Dynamics::Piecewise(_) => self
                .fail
                .iter()
                .any(|conj| conj.iter().all(|h| h.contains(s, 0.0))),
        }
    }

    /// Whether some state of `p` is a failure state (closed fail regions).
    pub fn label_fail(&self, p: &Polyhedron) -> Result<bool, EnvError> {
        for region in &self.fail {
            if p.intersects_region(region)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Sound successor polyhedra of `p` under action `a`, one per feasible mode.
    pub fn abstract_post(&self, p: &Polyhedron, a: usize) -> Result<Vec<Polyhedron>, EnvError> {
        if p.is_empty() {
            return Err(EnvError::EmptyInput);
        }
        let modes = match &self.dynamics {
            Dynamics::Piecewise(m) => &m[a],
            Dynamics::Ball(_) => &self.ball_modes[a],
            Dynamics::Pendulum(params) => {
                let slices = pendulum_slices(p, params.sin_slice_width)?;
                return Ok(vec![self.pendulum_post(p, a, params, slices)?]);
            }
        };
        let mut out = Vec::new();
        for mode in modes {
            if let Some(q) = self.mode_post(p, mode)? {
                out.push(q);
            }
        }
        Ok(out)
    }

    fn mode_post(&self, p: &Polyhedron, mode: &Mode) -> Result<Option<Polyhedron>, EnvError> {
        let template = p.template().clone();
        let n = p.dim();
        let mut region = p.halfspaces();
        region.extend(mode.guard.iter().cloned());
        let mut bounds = Vec::with_capacity(template.len());
        for d in template.directions() {
            // <d, A s + c> = <A^T d, s> + <d, c>
            let pulled: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|r| mode.matrix[r][i] * d[r]).sum())
                .collect();
            let Some(v) = region_support(n, &region, &pulled)? else {
                return Ok(None);
            };
            bounds.push(v + dot(d, &mode.offset));
        }
        Ok(Some(self.finish_post(template, bounds)?))
    }

    /// Pad, then saturate at the declared ranges.
    fn finish_post(&self, template: Arc<Template>, bounds: Vec<f64>) -> Result<Polyhedron, EnvError> {
        let bounds = bounds
            .into_iter()
            .map(|b| b + POST_PAD * (1.0 + b.abs()))
            .collect();
        let q = Polyhedron::new(template.clone(), bounds)?;
        let (lo, hi) = q.bounding_box()?;
        let inside = lo
            .iter()
            .zip(&hi)
            .zip(&self.ranges)
            .all(|((l, h), (rl, rh))| *l >= *rl && *h <= *rh);
        if inside {
            return Ok(q);
        }
        let clamp = |v: f64, i: usize| v.clamp(self.ranges[i].0, self.ranges[i].1);
        let lo: Vec<f64> = lo.iter().enumerate().map(|(i, &v)| clamp(v, i)).collect();
        let hi: Vec<f64> = hi.iter().enumerate().map(|(i, &v)| clamp(v, i)).collect();
        Ok(Polyhedron::from_box(template, &lo, &hi)?)
    }

    /// Pendulum post with an explicit number of angle slices (for precision studies).
    pub fn pendulum_post_with_slices(
        &self,
        p: &Polyhedron,
        a: usize,
        slices: usize,
    ) -> Result<Polyhedron, EnvError> {
        match &self.dynamics {
            Dynamics::Pendulum(params) => self.pendulum_post(p, a, params, slices.max(1)),
            _ => Err(EnvError::Invalid("not a pendulum environment".into())),
        }
    }

    fn pendulum_post(
        &self,
        p: &Polyhedron,
        a: usize,
        params: &PendulumParams,
        slices: usize,
    ) -> Result<Polyhedron, EnvError> {
        let template = p.template().clone();
        let (theta_lo, theta_hi) = {
            let (lo, hi) = p.bounding_box()?;
            (lo[0], hi[0])
        };
        let (k_sin, k_u) = pendulum_gains(params);
        let dt = params.dt;
        let torque = params.torques[a];
        // A chord band valid over the whole angle range, shared by all slices.
        let band = SinBand::over(theta_lo, theta_hi);

        let mut bounds = vec![f64::NEG_INFINITY; template.len()];
        let width = (theta_hi - theta_lo) / slices as f64;
        for k in 0..slices {
            let a_k = theta_lo + width * k as f64;
            let b_k = if k + 1 == slices {
                theta_hi
            } else {
                theta_lo + width * (k + 1) as f64
            };
            let (s_lo, s_hi) = sin_range(a_k, b_k);
            // Variables (theta, omega, sigma) with sigma standing in for sin(theta).
            let mut rows: Vec<Constraint> = p
                .halfspaces()
                .into_iter()
                .map(|h| Constraint::le(vec![h.normal[0], h.normal[1], 0.0], h.offset))
                .collect();
            rows.push(Constraint::le(vec![1.0, 0.0, 0.0], b_k));
            rows.push(Constraint::ge(vec![1.0, 0.0, 0.0], a_k));
            rows.push(Constraint::le(vec![0.0, 0.0, 1.0], s_hi));
            rows.push(Constraint::ge(vec![0.0, 0.0, 1.0], s_lo));
            // sigma - slope theta in [icept + lo_dev, icept + hi_dev]
            rows.push(Constraint::le(
                vec![-band.slope, 0.0, 1.0],
                band.intercept + band.hi_dev,
            ));
            rows.push(Constraint::ge(
                vec![-band.slope, 0.0, 1.0],
                band.intercept + band.lo_dev,
            ));
            // omega_raw = omega + k_sin dt sigma + k_u dt u
            let omega_raw = [0.0, 1.0, k_sin * dt];
            let omega_const = k_u * torque * dt;
            let raw_hi = lp_max(&rows, &omega_raw)?;
            let Some(raw_hi) = raw_hi else { continue };
            let raw_lo = -lp_max(&rows, &omega_raw.map(|v| -v))?.unwrap_or(f64::INFINITY);
            let (raw_lo, raw_hi) = (raw_lo + omega_const, raw_hi + omega_const);

            if raw_lo >= -params.max_speed && raw_hi <= params.max_speed {
                for (j, d) in template.directions().iter().enumerate() {
                    // <d, (theta + dt omega_raw, omega_raw)>
                    let c = d[0] * dt + d[1];
                    let obj = [d[0], c, c * k_sin * dt];
                    if let Some(v) = lp_max(&rows, &obj)? {
                        bounds[j] = bounds[j].max(v + c * omega_const);
                    }
                }
            } else {
                // Saturation active: interval fallback for this slice.
                let w_lo = raw_lo.clamp(-params.max_speed, params.max_speed);
                let w_hi = raw_hi.clamp(-params.max_speed, params.max_speed);
                let t_lo = -lp_max(&rows, &[-1.0, 0.0, 0.0])?.unwrap_or(f64::INFINITY);
                let t_hi = lp_max(&rows, &[1.0, 0.0, 0.0])?.unwrap_or(f64::NEG_INFINITY);
                let lo = [t_lo + dt * w_lo, w_lo];
                let hi = [t_hi + dt * w_hi, w_hi];
                for (j, d) in template.directions().iter().enumerate() {
                    let v: f64 = (0..2).map(|i| if d[i] >= 0.0 { d[i] * hi[i] } else { d[i] * lo[i] }).sum();
                    bounds[j] = bounds[j].max(v);
                }
            }
        }
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(EnvError::EmptyInput);
        }
        self.finish_post(template, bounds)
    }
}

fn pendulum_gains(p: &PendulumParams) -> (f64, f64) {
    (
        3.0 * p.gravity / (2.0 * p.length),
        3.0 / (p.mass * p.length * p.length),
    )
}

fn pendulum_slices(p: &Polyhedron, width: f64) -> Result<usize, EnvError> {
    let (lo, hi) = p.bounding_box()?;
    Ok((((hi[0] - lo[0]) / width).ceil() as usize).max(1))
}

fn lp_max(rows: &[Constraint], obj: &[f64]) -> Result<Option<f64>, EnvError> {
    let mut lp = LinearProgram::maximize(obj.to_vec());
    lp.constraints = rows.to_vec();
    let r = linprog::solve(&lp).map_err(GeometryError::from)?;
    match r.status {
        LpStatus::Optimal => Ok(Some(r.optimum)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(EnvError::Geometry(GeometryError::UnboundedDirection(
            obj.to_vec(),
        ))),
    }
}

/// Exact range of `sin` over `[a, b]`.
pub fn sin_range(a: f64, b: f64) -> (f64, f64) {
    let mut lo = a.sin().min(b.sin());
    let mut hi = a.sin().max(b.sin());
    // Interior extrema at pi/2 + k pi.
    let first = ((a - FRAC_PI_2) / PI).ceil() as i64;
    let last = ((b - FRAC_PI_2) / PI).floor() as i64;
    for k in first..=last {
        let v = (FRAC_PI_2 + k as f64 * PI).sin();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let pad = 1e-15;
    (lo - pad, hi + pad)
}

/// Linear enclosure `slope * x + intercept + [lo_dev, hi_dev]` of `sin` on an interval.
#[derive(Debug, Clone, Copy)]
struct SinBand {
    slope: f64,
    intercept: f64,
    lo_dev: f64,
    hi_dev: f64,
}

impl SinBand {
    fn over(a: f64, b: f64) -> Self {
        let slope = if b - a > 1e-12 {
            (b.sin() - a.sin()) / (b - a)
        } else {
            a.cos()
        };
        let intercept = a.sin() - slope * a;
        let dev = |x: f64| x.sin() - slope * x - intercept;
        let mut lo_dev = dev(a).min(dev(b));
        let mut hi_dev = dev(a).max(dev(b));
        // Critical points of the deviation: cos x = slope.
        if slope.abs() <= 1.0 {
            let base = slope.acos();
            let kmin = ((a - base) / (2.0 * PI)).floor() as i64 - 1;
            let kmax = ((b + base) / (2.0 * PI)).ceil() as i64 + 1;
            for k in kmin..=kmax {
                for x in [base + 2.0 * PI * k as f64, -base + 2.0 * PI * k as f64] {
                    if x >= a && x <= b {
                        lo_dev = lo_dev.min(dev(x));
                        hi_dev = hi_dev.max(dev(x));
                    }
                }
            }
        }
        let pad = 1e-12;
        Self {
            slope,
            intercept,
            lo_dev: lo_dev - pad,
            hi_dev: hi_dev + pad,
        }
    }
}
