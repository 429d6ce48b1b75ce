//! Dense tableau simplex.
//!
//! Every LP in the crate (support functions, feasibility checks, the
//! relaxations inside branch-and-bound, the inner problem of robust value
//! iteration in tests) goes through [`solve`]. Problems here are small, so
//! the solver favours robustness over speed: a two-phase dense tableau with
//! Dantzig pricing that falls back to Bland's rule once degenerate pivots
//! pile up.

use thiserror::Error;

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Constraint satisfaction of LP witnesses and geometric feasibility.
    pub feasibility: f64,
    /// Smallest pivot magnitude accepted by the ratio test.
    pub pivot: f64,
    /// Slack on support bounds when comparing polyhedra.
    pub containment: f64,
    /// Distance from {0, 1} below which a relaxed indicator counts as integral.
    pub integrality: f64,
    /// Branch-and-bound pruning gap on logit values.
    pub bnb_gap: f64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_pivots: usize,
}

pub const TOL: Tolerances = Tolerances {
    feasibility: 1e-9,
    pivot: 1e-12,
    containment: 1e-9,
    integrality: 1e-9,
    bnb_gap: 1e-6,
    degenerate_pivots: 1000,
};

const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: expected {expected} coefficients, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerical failure in simplex: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    fn activity(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    fn scale(&self, x: &[f64]) -> f64 {
        let act: f64 = self
            .coeffs
            .iter()
            .zip(x)
            .map(|(a, v)| (a * v).abs())
            .sum();
        1.0 + self.rhs.abs() + act
    }
}

/// A linear program over `dim` real variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable `[lo, hi]`; infinite entries mean unbounded on that side.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, c: Constraint) -> &mut Self {
        self.constraints.push(c);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn with_nonnegative_vars(mut self) -> Self {
        for b in &mut self.bounds {
            b.0 = 0.0;
        }
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.dim();
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                expected: n,
                found: self.bounds.len(),
            });
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    expected: n,
                    found: c.coeffs.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective value at `witness` (meaningful only when optimal).
    pub optimum: f64,
    pub witness: Vec<f64>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn infeasible(n: usize) -> Self {
        Self {
            status: LpStatus::Infeasible,
            optimum: f64::NAN,
            witness: vec![0.0; n],
        }
    }

    fn unbounded(n: usize, sense: Sense) -> Self {
        Self {
            status: LpStatus::Unbounded,
            optimum: match sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            },
            witness: vec![0.0; n],
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable is expressed in the nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset - y
    Mirror { col: usize, offset: f64 },
    /// x = y+ - y-
    Free { pos: usize, neg: usize },
}

/// Solve `lp` to proven optimality.
///
/// The witness is re-checked against the original constraints before it is
/// returned; a witness that misses by more than the feasibility tolerance is
/// reported as [`LpError::NumericalFailure`] after one retry under Bland's rule.
pub fn solve(lp: &LinearProgram) -> Result<LpResult, LpError> {
    lp.validate()?;
    match solve_with(lp, false) {
        Err(LpError::NumericalFailure(_)) => solve_with(lp, true),
        other => other,
    }
}

fn solve_with(lp: &LinearProgram, bland_from_start: bool) -> Result<LpResult, LpError> {
    let n = lp.dim();
    for &(lo, hi) in &lp.bounds {
        if lo > hi + TOL.feasibility {
            return Ok(LpResult::infeasible(n));
        }
    }

    // Map original variables onto nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap::Shift {
                col: ncols,
                offset: lo,
            });
            if hi.is_finite() {
                upper_rows.push((ncols, (hi - lo).max(0.0)));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror {
                col: ncols,
                offset: hi,
            });
            ncols += 1;
        } else {
            maps.push(VarMap::Free {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }

    // Rows in column space: (coeffs, relation, rhs).
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = c.rhs;
        for (i, &a) in c.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[i] {
                VarMap::Shift { col, offset } => {
                    coeffs[col] += a;
                    rhs -= a * offset;
                }
                VarMap::Mirror { col, offset } => {
                    coeffs[col] -= a;
                    rhs -= a * offset;
                }
                VarMap::Free { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for &(col, ub) in &upper_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push((coeffs, Relation::Le, ub));
    }

    let mut obj = vec![0.0; ncols];
    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    for (i, &c) in lp.objective.iter().enumerate() {
        let c = sign * c;
        match maps[i] {
            VarMap::Shift { col, .. } => obj[col] += c,
            VarMap::Mirror { col, .. } => obj[col] -= c,
            VarMap::Free { pos, neg } => {
                obj[pos] += c;
                obj[neg] -= c;
            }
        }
    }

    let ys = match Tableau::build(rows, ncols).and_then(|t| t.optimize(&obj, bland_from_start)) {
        Ok(Outcome::Optimal(ys)) => ys,
        Ok(Outcome::Infeasible) => return Ok(LpResult::infeasible(n)),
        Ok(Outcome::Unbounded) => return Ok(LpResult::unbounded(n, lp.sense)),
        Err(e) => return Err(e),
    };

    let witness: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, offset } => offset + ys[col],
            VarMap::Mirror { col, offset } => offset - ys[col],
            VarMap::Free { pos, neg } => ys[pos] - ys[neg],
        })
        .collect();

    for c in &lp.constraints {
        if c.violation(&witness) > TOL.feasibility * c.scale(&witness) {
            return Err(LpError::NumericalFailure(format!(
                "witness violates constraint by {:.3e}",
                c.violation(&witness)
            )));
        }
    }
    for (x, &(lo, hi)) in witness.iter().zip(&lp.bounds) {
        if *x < lo - TOL.feasibility * (1.0 + lo.abs()) || *x > hi + TOL.feasibility * (1.0 + hi.abs())
        {
            return Err(LpError::NumericalFailure(
                "witness violates variable bound".into(),
            ));
        }
    }
    let optimum = dot(&lp.objective, &witness);
    Ok(LpResult {
        status: LpStatus::Optimal,
        optimum,
        witness,
    })
}

enum Outcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Row-major dense tableau `m x (width + 1)`, the last column holding the rhs.
struct Tableau {
    m: usize,
    /// Structural columns (the caller's nonnegative variables).
    nstruct: usize,
    /// Structural + slack/surplus columns.
    nreal: usize,
    /// All columns including artificials.
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(rows: Vec<(Vec<f64>, Relation, f64)>, nstruct: usize) -> Result<Self, LpError> {
        // Equilibrate rows and make every rhs nonnegative.
        let mut norm_rows = Vec::with_capacity(rows.len());
        for (mut coeffs, mut rel, mut rhs) in rows {
            let scale = coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if scale < TOL.pivot {
                // Constant row: either trivially satisfied or infeasible.
                let ok = match rel {
                    Relation::Le => rhs >= -TOL.feasibility,
                    Relation::Ge => rhs <= TOL.feasibility,
                    Relation::Eq => rhs.abs() <= TOL.feasibility,
                };
                if ok {
                    continue;
                }
                // Keep an unsatisfiable artificial row so phase 1 reports it.
                coeffs.iter_mut().for_each(|v| *v = 0.0);
                norm_rows.push((coeffs, Relation::Eq, rhs.abs().max(1.0)));
                continue;
            }
            for v in &mut coeffs {
                *v /= scale;
            }
            rhs /= scale;
            if rhs < 0.0 {
                for v in &mut coeffs {
                    *v = -*v;
                }
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            norm_rows.push((coeffs, rel, rhs));
        }

        let m = norm_rows.len();
        let nslack = norm_rows
            .iter()
            .filter(|r| r.1 != Relation::Eq)
            .count();
        let nart = norm_rows
            .iter()
            .filter(|r| r.1 != Relation::Le)
            .count();
        let nreal = nstruct + nslack;
        let width = nreal + nart;
        let stride = width + 1;
        let mut data = vec![0.0; m * stride];
        let mut basis = vec![0usize; m];
        let mut slack = nstruct;
        let mut art = nreal;
        for (i, (coeffs, rel, rhs)) in norm_rows.into_iter().enumerate() {
            let row = &mut data[i * stride..(i + 1) * stride];
            row[..nstruct].copy_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Ok(Self {
            m,
            nstruct,
            nreal,
            width,
            data,
            basis,
        })
    }

    #[inline]
    fn stride(&self) -> usize {
        self.width + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.stride() + self.width]
    }

    fn optimize(mut self, obj: &[f64], bland_from_start: bool) -> Result<Outcome, LpError> {
        let has_artificials = self.width > self.nreal;
        if has_artificials {
            // Phase 1: maximize -sum(artificials).
            let mut phase1 = vec![0.0; self.width];
            for c in phase1.iter_mut().skip(self.nreal) {
                *c = -1.0;
            }
            match self.run(&phase1, self.width, bland_from_start)? {
                RunResult::Optimal => {}
                RunResult::Unbounded => {
                    return Err(LpError::NumericalFailure("phase 1 unbounded".into()))
                }
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.nreal)
                .map(|i| self.rhs(i))
                .sum();
            if infeas > TOL.feasibility {
                return Ok(Outcome::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut full_obj = vec![0.0; self.nreal];
        full_obj[..self.nstruct].copy_from_slice(obj);
        match self.run(&full_obj, self.nreal, bland_from_start)? {
            RunResult::Optimal => {}
            RunResult::Unbounded => return Ok(Outcome::Unbounded),
        }
        let mut ys = vec![0.0; self.nstruct];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.nstruct {
                ys[b] = self.rhs(i).max(0.0);
            }
        }
        Ok(Outcome::Optimal(ys))
    }

    /// Pivot basic artificials out after a feasible phase 1; drop redundant rows.
    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= self.nreal {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.nreal {
                    let v = self.at(i, j).abs();
                    if v > 1e-9 && best.map_or(true, |(_, bv)| v > bv) {
                        best = Some((j, v));
                    }
                }
                match best {
                    Some((j, _)) => self.pivot(i, j),
                    None => {
                        self.remove_row(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    fn remove_row(&mut self, i: usize) {
        let stride = self.stride();
        self.data.drain(i * stride..(i + 1) * stride);
        self.basis.remove(i);
        self.m -= 1;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.stride();
        let inv = 1.0 / self.at(r, c);
        {
            let row = &mut self.data[r * stride..(r + 1) * stride];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(r * stride);
        let (prow, after) = rest.split_at_mut(stride);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(stride).for_each(eliminate);
        after.chunks_mut(stride).for_each(eliminate);
        self.basis[r] = c;
    }

    /// Primal simplex maximizing `obj` over the first `active` columns.
    fn run(&mut self, obj: &[f64], active: usize, bland_from_start: bool) -> Result<RunResult, LpError> {
        let mut in_basis = vec![false; self.width];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        let mut degenerate = 0usize;
        let mut bland = bland_from_start;
        let mut reduced = vec![0.0; active];
        for _ in 0..MAX_PIVOTS {
            // Reduced costs c_j - c_B B^-1 A_j.
            for (j, rc) in reduced.iter_mut().enumerate() {
                *rc = obj[j];
            }
            for i in 0..self.m {
                let cb = obj.get(self.basis[i]).copied().unwrap_or(0.0);
                if cb != 0.0 {
                    let row = &self.data[i * self.stride()..i * self.stride() + active];
                    for (rc, a) in reduced.iter_mut().zip(row) {
                        *rc -= cb * a;
                    }
                }
            }
            let entering = if bland {
                (0..active).find(|&j| !in_basis[j] && reduced[j] > 1e-10)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..active {
                    if !in_basis[j] && reduced[j] > 1e-10 && best.map_or(true, |(_, v)| reduced[j] > v)
                    {
                        best = Some((j, reduced[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(RunResult::Optimal);
            };

            // Ratio test; among near-ties prefer the largest pivot (or the
            // smallest basis index under Bland).
            let mut min_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > RATIO_PIVOT {
                    let ratio = self.rhs(i).max(0.0) / a;
                    if ratio < min_ratio {
                        min_ratio = ratio;
                    }
                }
            }
            if !min_ratio.is_finite() {
                return Ok(RunResult::Unbounded);
            }
            let tie = min_ratio + 1e-12 * (1.0 + min_ratio);
            let mut leave: Option<usize> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > RATIO_PIVOT && self.rhs(i).max(0.0) / a <= tie {
                    leave = match leave {
                        None => Some(i),
                        Some(l) => {
                            let better = if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.at(l, col)
                            };
                            if better {
                                Some(i)
                            } else {
                                Some(l)
                            }
                        }
                    };
                }
            }
            let row = leave.expect("finite ratio implies a leaving row");
            if self.at(row, col).abs() < RATIO_PIVOT {
                return Err(LpError::NumericalFailure(format!(
                    "pivot magnitude {:.3e} too small",
                    self.at(row, col)
                )));
            }
            if min_ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > TOL.degenerate_pivots {
                    bland = true;
                }
            }
            in_basis[self.basis[row]] = false;
            in_basis[col] = true;
            self.pivot(row, col);
        }
        Err(LpError::NumericalFailure("pivot limit reached".into()))
    }
}

/// Column entries below this are ignored by the ratio test, so the simplex
/// never divides by a near-zero pivot.
const RATIO_PIVOT: f64 = 1e-9;

enum RunResult {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn box_maximum() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.set_bounds(0, 0.0, 1.0);
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(approx(r.optimum, 1.0));
    }

    #[test]
    fn simplex_corner() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]).with_nonnegative_vars();
        lp.add_constraint(Constraint::le(vec![1.0, 1.0], 1.0));
        let r = solve(&lp).unwrap();
        assert!(approx(r.optimum, 1.0));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add_constraint(Constraint::ge(vec![1.0], 2.0));
        lp.add_constraint(Constraint::le(vec![1.0], 1.0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add_constraint(Constraint::le(vec![0.0, 1.0], 1.0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x - y s.t. x + y = 2, x - y >= -4, y <= 5
        let mut lp = LinearProgram::minimize(vec![1.0, -1.0]);
        lp.add_constraint(Constraint::eq(vec![1.0, 1.0], 2.0));
        lp.add_constraint(Constraint::ge(vec![1.0, -1.0], -4.0));
        lp.add_constraint(Constraint::le(vec![0.0, 1.0], 5.0));
        let r = solve(&lp).unwrap();
        assert!(approx(r.optimum, -4.0), "{}", r.optimum);
        assert!(approx(r.witness[0], -1.0));
        assert!(approx(r.witness[1], 3.0));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0]).with_nonnegative_vars();
        lp.add_constraint(Constraint::eq(vec![1.0, 1.0], 1.0));
        lp.add_constraint(Constraint::eq(vec![2.0, 2.0], 2.0));
        let r = solve(&lp).unwrap();
        assert!(approx(r.optimum, 2.0));
    }

    #[test]
    fn fixed_and_mirrored_bounds() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.set_bounds(0, 3.0, 3.0);
        lp.set_bounds(1, f64::NEG_INFINITY, -2.0);
        lp.add_constraint(Constraint::ge(vec![0.0, 1.0], -10.0));
        let r = solve(&lp).unwrap();
        assert!(approx(r.optimum, -7.0));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under naive Dantzig pricing.
        let mut lp = LinearProgram::maximize(vec![0.75, -150.0, 0.02, -6.0]).with_nonnegative_vars();
        lp.add_constraint(Constraint::le(vec![0.25, -60.0, -0.04, 9.0], 0.0));
        lp.add_constraint(Constraint::le(vec![0.5, -90.0, -0.02, 3.0], 0.0));
        lp.add_constraint(Constraint::le(vec![0.0, 0.0, 1.0, 0.0], 1.0));
        let r = solve(&lp).unwrap();
        assert!(approx(r.optimum, 0.05), "{}", r.optimum);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_constraint(Constraint::le(vec![1.0], 1.0));
        assert!(matches!(solve(&lp), Err(LpError::DimensionMismatch { .. })));
    }
}
