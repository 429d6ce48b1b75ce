//! Bounded template polyhedra.
//!
//! A [`Template`] fixes an ordered direction set; a [`Polyhedron`] over it is
//! the set `{ s : <d_j, s> <= b_j for all j }`. Polyhedra are always kept in
//! canonical form, where every `b_j` equals the support value of the set in
//! direction `d_j`, so containment between same-template polyhedra reduces to
//! a componentwise comparison of bounds.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linprog::{self, dot, Constraint, LinearProgram, LpError, LpStatus, TOL};

/// Hit & Run steps discarded before the first returned sample.
pub const HIT_AND_RUN_BURN_IN: usize = 100;

/// Extents below this are treated as flat and cannot be bisected.
pub const WIDTH_FLOOR: f64 = 1e-9;

/// Chebyshev radius below which a polyhedron is considered to have no volume.
pub const INTERIOR_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polyhedron is empty")]
    EmptyInput,
    #[error("polyhedra use different templates")]
    TemplateMismatch,
    #[error("extent {extent:.3e} along direction {dir} is too small to split")]
    DegenerateSplit { dir: usize, extent: f64 },
    #[error("polyhedron has no interior point")]
    DegenerateGeometry,
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("support function unbounded in direction {0:?}")]
    UnboundedDirection(Vec<f64>),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// The closed halfspace `<normal, s> <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `<normal, s> >= value`, stored as `<-normal, s> <= -value`.
    pub fn at_least(normal: Vec<f64>, value: f64) -> Self {
        Self {
            normal: normal.into_iter().map(|v| -v).collect(),
            offset: -value,
        }
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        dot(&self.normal, s) <= self.offset + tol
    }
}

/// A conjunction of halfspaces.
pub type Region = Vec<Halfspace>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Rect,
    Oct,
    Custom,
}

/// An ordered, positively spanning direction set.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    kind: TemplateKind,
    dim: usize,
    directions: Vec<Vec<f64>>,
    /// Index of the direction equal to `-d_j`, when the template has one.
    opposite: Vec<Option<usize>>,
}

fn unit(n: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = sign;
    v
}

impl Template {
    /// Axis-aligned boxes: `e_0, -e_0, e_1, -e_1, ...`.
    pub fn rect(dim: usize) -> Arc<Self> {
        let mut dirs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            dirs.push(unit(dim, i, 1.0));
            dirs.push(unit(dim, i, -1.0));
        }
        Arc::new(Self::assemble(TemplateKind::Rect, dim, dirs))
    }

    /// Box directions followed by `±(e_i + e_j)` and `±(e_i - e_j)` for `i < j`.
    pub fn octagon(dim: usize) -> Arc<Self> {
        let mut dirs = Vec::new();
        for i in 0..dim {
            dirs.push(unit(dim, i, 1.0));
            dirs.push(unit(dim, i, -1.0));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                for (si, sj) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                    let mut d = vec![0.0; dim];
                    d[i] = si;
                    d[j] = sj;
                    dirs.push(d);
                }
            }
        }
        Arc::new(Self::assemble(TemplateKind::Oct, dim, dirs))
    }

    /// A user-supplied direction list; rejected unless it bounds every polyhedron.
    pub fn custom(directions: Vec<Vec<f64>>) -> Result<Arc<Self>, GeometryError> {
        let dim = directions
            .first()
            .map(Vec::len)
            .ok_or_else(|| GeometryError::InvalidTemplate("no directions".into()))?;
        if dim == 0 {
            return Err(GeometryError::InvalidTemplate("zero-dimensional".into()));
        }
        for (j, d) in directions.iter().enumerate() {
            if d.len() != dim {
                return Err(GeometryError::InvalidTemplate(format!(
                    "direction {j} has length {}, expected {dim}",
                    d.len()
                )));
            }
            if d.iter().any(|v| !v.is_finite()) || d.iter().all(|&v| v == 0.0) {
                return Err(GeometryError::InvalidTemplate(format!(
                    "direction {j} is zero or non-finite"
                )));
            }
        }
        let template = Self::assemble(TemplateKind::Custom, dim, directions);
        // Boundedness: every axis must be bounded on both sides over the
        // unit-offset polyhedron.
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::maximize(unit(dim, i, sign));
                for d in &template.directions {
                    lp.add_constraint(Constraint::le(d.clone(), 1.0));
                }
                if linprog::solve(&lp)?.status != LpStatus::Optimal {
                    return Err(GeometryError::InvalidTemplate(format!(
                        "directions do not bound axis {i} ({})",
                        if sign > 0.0 { "+" } else { "-" }
                    )));
                }
            }
        }
        Ok(Arc::new(template))
    }

    fn assemble(kind: TemplateKind, dim: usize, directions: Vec<Vec<f64>>) -> Self {
        let opposite = directions
            .iter()
            .map(|d| {
                directions
                    .iter()
                    .position(|e| e.iter().zip(d).all(|(a, b)| (a + b).abs() < 1e-15))
            })
            .collect();
        Self {
            kind,
            dim,
            directions,
            opposite,
        }
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn direction(&self, j: usize) -> &[f64] {
        &self.directions[j]
    }

    pub fn opposite(&self, j: usize) -> Option<usize> {
        self.opposite[j]
    }

    /// Support value in `d` of the axis box `[lo, hi]`.
    fn box_support(d: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
        d.iter()
            .zip(lo.iter().zip(hi))
            .map(|(&c, (&l, &h))| if c >= 0.0 { c * h } else { c * l })
            .sum()
    }
}

/// A canonical bounded template polyhedron.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    template: Arc<Template>,
    bounds: Vec<f64>,
    empty: bool,
}

impl PartialEq for Polyhedron {
    fn eq(&self, other: &Self) -> bool {
        same_template(&self.template, &other.template)
            && self.empty == other.empty
            && self.bounds == other.bounds
    }
}

pub fn same_template(a: &Arc<Template>, b: &Arc<Template>) -> bool {
    Arc::ptr_eq(a, b) || a.directions == b.directions
}

impl Polyhedron {
    /// Canonicalize `bounds` over `template`; fails with `EmptyInput` when the set is empty.
    pub fn new(template: Arc<Template>, bounds: Vec<f64>) -> Result<Self, GeometryError> {
        if bounds.len() != template.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: template.len(),
                found: bounds.len(),
            });
        }
        Self::canonical(template, bounds, &[])
    }

    /// An explicitly empty polyhedron.
    pub fn empty(template: Arc<Template>) -> Self {
        let n = template.len();
        Self {
            template,
            bounds: vec![f64::NEG_INFINITY; n],
            empty: true,
        }
    }

    /// The tightest polyhedron over `template` enclosing the box `[lo, hi]`.
    pub fn from_box(template: Arc<Template>, lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        let n = template.dim();
        for v in [lo.len(), hi.len()] {
            if v != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    found: v,
                });
            }
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(GeometryError::EmptyInput);
        }
        let bounds = template
            .directions
            .iter()
            .map(|d| Template::box_support(d, lo, hi))
            .collect();
        Ok(Self {
            template,
            bounds,
            empty: false,
        })
    }

    /// The tightest polyhedron over `template` enclosing a bounded convex region.
    pub fn enclosing(template: Arc<Template>, region: &[Halfspace]) -> Result<Self, GeometryError> {
        let bounds = vec![f64::INFINITY; template.len()];
        for h in region {
            if h.normal.len() != template.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: template.dim(),
                    found: h.normal.len(),
                });
            }
        }
        Self::canonical(template, bounds, region)
    }

    /// Componentwise-max hull of same-template polyhedra (canonical by construction).
    pub fn hull<'a>(polys: impl IntoIterator<Item = &'a Polyhedron>) -> Option<Polyhedron> {
        let mut iter = polys.into_iter().filter(|p| !p.empty);
        let first = iter.next()?.clone();
        Some(iter.fold(first, |mut acc, p| {
            for (a, b) in acc.bounds.iter_mut().zip(&p.bounds) {
                *a = a.max(*b);
            }
            acc
        }))
    }

    fn canonical(
        template: Arc<Template>,
        bounds: Vec<f64>,
        extra: &[Halfspace],
    ) -> Result<Self, GeometryError> {
        if template.kind == TemplateKind::Rect && extra.is_empty() {
            let n = template.dim;
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for i in 0..n {
                hi[i] = bounds[2 * i];
                lo[i] = -bounds[2 * i + 1];
                if !hi[i].is_finite() || !lo[i].is_finite() {
                    return Err(GeometryError::UnboundedDirection(unit(n, i, 1.0)));
                }
                if lo[i] > hi[i] + TOL.feasibility * (1.0 + hi[i].abs()) {
                    return Err(GeometryError::EmptyInput);
                }
                if lo[i] > hi[i] {
                    let mid = 0.5 * (lo[i] + hi[i]);
                    lo[i] = mid;
                    hi[i] = mid;
                }
            }
            return Self::from_box(template, &lo, &hi);
        }
        let constraints = constraint_rows(&template, &bounds, extra);
        if !feasible(template.dim, &constraints)? {
            return Err(GeometryError::EmptyInput);
        }
        let mut tight = Vec::with_capacity(template.len());
        for d in &template.directions {
            tight.push(lp_support(template.dim, &constraints, d)?);
        }
        Ok(Self {
            template,
            bounds: tight,
            empty: false,
        })
    }

    pub fn template(&self) -> &Arc<Template> {
        &self.template
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.template.dim
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// The constraints `<d_j, s> <= b_j` as halfspaces.
    pub fn halfspaces(&self) -> Region {
        self.template
            .directions
            .iter()
            .zip(&self.bounds)
            .map(|(d, &b)| Halfspace::new(d.clone(), b))
            .collect()
    }

    fn rows(&self) -> Vec<Constraint> {
        constraint_rows(&self.template, &self.bounds, &[])
    }

    fn axis_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.template.kind != TemplateKind::Rect {
            return None;
        }
        let n = self.dim();
        Some((
            (0..n).map(|i| -self.bounds[2 * i + 1]).collect(),
            (0..n).map(|i| self.bounds[2 * i]).collect(),
        ))
    }

    /// `sup { <d, s> : s in self }`.
    pub fn support_value(&self, d: &[f64]) -> Result<f64, GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        if d.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: d.len(),
            });
        }
        if let Some((lo, hi)) = self.axis_box() {
            return Ok(Template::box_support(d, &lo, &hi));
        }
        if let Some(j) = self
            .template
            .directions
            .iter()
            .position(|e| e.as_slice() == d)
        {
            return Ok(self.bounds[j]);
        }
        lp_support(self.dim(), &self.rows(), d)
    }

    /// Range of `<d_j, s>` over the polyhedron for template direction `j`.
    pub fn range_along(&self, j: usize) -> Result<(f64, f64), GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        let hi = self.bounds[j];
        let lo = match self.template.opposite[j] {
            Some(o) => -self.bounds[o],
            None => {
                let neg: Vec<f64> = self.template.directions[j].iter().map(|v| -v).collect();
                -self.support_value(&neg)?
            }
        };
        Ok((lo, hi))
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        if let Some(b) = self.axis_box() {
            return Ok(b);
        }
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            hi[i] = self.support_value(&unit(n, i, 1.0))?;
            lo[i] = -self.support_value(&unit(n, i, -1.0))?;
        }
        Ok((lo, hi))
    }

    /// `inner ⊆ self`, via componentwise bound comparison.
    pub fn contains(&self, inner: &Polyhedron) -> Result<bool, GeometryError> {
        if !same_template(&self.template, &inner.template) {
            return Err(GeometryError::TemplateMismatch);
        }
        if inner.empty {
            return Ok(true);
        }
        if self.empty {
            return Ok(false);
        }
        Ok(inner
            .bounds
            .iter()
            .zip(&self.bounds)
            .all(|(i, o)| *i <= o + TOL.containment))
    }

    pub fn contains_point(&self, s: &[f64], tol: f64) -> bool {
        !self.empty
            && self
                .template
                .directions
                .iter()
                .zip(&self.bounds)
                .all(|(d, b)| dot(d, s) <= b + tol)
    }

    /// Whether the polyhedron meets the closed region (touching counts).
    pub fn intersects_region(&self, region: &[Halfspace]) -> Result<bool, GeometryError> {
        if self.empty {
            return Ok(false);
        }
        for h in region {
            if h.normal.len() != self.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: self.dim(),
                    found: h.normal.len(),
                });
            }
        }
        let rows = constraint_rows(&self.template, &self.bounds, region);
        Ok(feasible(self.dim(), &rows)?)
    }

    /// Intersection with extra halfspaces, re-tightened over the same template.
    pub fn intersect(&self, region: &[Halfspace]) -> Result<Polyhedron, GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        Self::canonical(self.template.clone(), self.bounds.clone(), region)
    }

    /// Split along template direction `dir` at `boundary`.
    ///
    /// The cut is clamped so each side keeps at least `min_frac` of the
    /// extent along the direction. Returns `(low side, high side)`.
    pub fn bisect(
        &self,
        dir: usize,
        boundary: f64,
        min_frac: f64,
    ) -> Result<(Polyhedron, Polyhedron), GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        if dir >= self.template.len() {
            return Err(GeometryError::InvalidArgument(format!(
                "direction index {dir} out of range"
            )));
        }
        if !(min_frac > 0.0 && min_frac <= 0.5) {
            return Err(GeometryError::InvalidArgument(format!(
                "min_frac {min_frac} outside (0, 0.5]"
            )));
        }
        let (lo, hi) = self.range_along(dir)?;
        let extent = hi - lo;
        if extent < WIDTH_FLOOR {
            return Err(GeometryError::DegenerateSplit { dir, extent });
        }
        let cut = boundary.clamp(lo + min_frac * extent, hi - min_frac * extent);

        let mut low_bounds = self.bounds.clone();
        low_bounds[dir] = cut;
        let low = Self::canonical(self.template.clone(), low_bounds, &[])?;

        let high = match self.template.opposite[dir] {
            Some(o) => {
                let mut b = self.bounds.clone();
                b[o] = b[o].min(-cut);
                Self::canonical(self.template.clone(), b, &[])?
            }
            None => {
                let h = Halfspace::at_least(self.template.directions[dir].clone(), cut);
                Self::canonical(self.template.clone(), self.bounds.clone(), &[h])?
            }
        };
        Ok((low, high))
    }

    /// Chebyshev centre and radius (largest inscribed ball).
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64), GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        let n = self.dim();
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        lp.set_bounds(n, 0.0, f64::INFINITY);
        for (d, &b) in self.template.directions.iter().zip(&self.bounds) {
            let norm = dot(d, d).sqrt();
            let mut row = d.clone();
            row.push(norm);
            lp.add_constraint(Constraint::le(row, b));
        }
        let r = linprog::solve(&lp)?;
        match r.status {
            LpStatus::Optimal => {
                let radius = r.witness[n];
                let mut c = r.witness;
                c.truncate(n);
                Ok((c, radius))
            }
            LpStatus::Infeasible => Err(GeometryError::EmptyInput),
            LpStatus::Unbounded => Err(GeometryError::UnboundedDirection(vec![])),
        }
    }

    pub fn has_interior(&self) -> bool {
        matches!(self.chebyshev_center(), Ok((_, r)) if r > INTERIOR_FLOOR)
    }

    /// `count` Hit & Run samples, deterministic in `seed`.
    pub fn hit_and_run_sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GeometryError> {
        if self.empty {
            return Err(GeometryError::EmptyInput);
        }
        if count == 0 {
            return Err(GeometryError::InvalidArgument("count must be >= 1".into()));
        }
        let (mut x, radius) = self.chebyshev_center()?;
        if radius <= INTERIOR_FLOOR {
            return Err(GeometryError::DegenerateGeometry);
        }
        let n = self.dim();
        let dirs = &self.template.directions;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut u = vec![0.0; n];
        for step in 0..HIT_AND_RUN_BURN_IN + count {
            loop {
                for v in u.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = dot(&u, &u).sqrt();
                if norm > 1e-12 {
                    u.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            }
            let mut tmin = f64::NEG_INFINITY;
            let mut tmax = f64::INFINITY;
            for (d, &b) in dirs.iter().zip(&self.bounds) {
                let a = dot(d, &u);
                let slack = (b - dot(d, &x)).max(0.0);
                if a > 1e-14 {
                    tmax = tmax.min(slack / a);
                } else if a < -1e-14 {
                    tmin = tmin.max(slack / a);
                }
            }
            if !(tmin.is_finite() && tmax.is_finite()) {
                return Err(GeometryError::UnboundedDirection(u.clone()));
            }
            let t = tmin + (tmax - tmin) * rng.random::<f64>();
            for (xi, ui) in x.iter_mut().zip(&u) {
                *xi += t * ui;
            }
            if step >= HIT_AND_RUN_BURN_IN {
                out.push(x.clone());
            }
        }
        Ok(out)
    }
}

fn constraint_rows(template: &Template, bounds: &[f64], extra: &[Halfspace]) -> Vec<Constraint> {
    template
        .directions
        .iter()
        .zip(bounds)
        .filter(|(_, b)| b.is_finite())
        .map(|(d, &b)| Constraint::le(d.clone(), b))
        .chain(extra.iter().map(|h| Constraint::le(h.normal.clone(), h.offset)))
        .collect()
}

fn feasible(n: usize, rows: &[Constraint]) -> Result<bool, LpError> {
    let mut lp = LinearProgram::maximize(vec![0.0; n]);
    lp.constraints = rows.to_vec();
    Ok(linprog::solve(&lp)?.status == LpStatus::Optimal)
}

/// Support value of a closed region in direction `d`; `None` when the region is empty.
pub fn region_support(dim: usize, region: &[Halfspace], d: &[f64]) -> Result<Option<f64>, GeometryError> {
    let rows: Vec<Constraint> = region
        .iter()
        .map(|h| Constraint::le(h.normal.clone(), h.offset))
        .collect();
    match lp_support(dim, &rows, d) {
        Ok(v) => Ok(Some(v)),
        Err(GeometryError::EmptyInput) => Ok(None),
        Err(e) => Err(e),
    }
}

fn lp_support(_n: usize, rows: &[Constraint], d: &[f64]) -> Result<f64, GeometryError> {
    let mut lp = LinearProgram::maximize(d.to_vec());
    lp.constraints = rows.to_vec();
    let r = linprog::solve(&lp)?;
    match r.status {
        LpStatus::Optimal => Ok(r.optimum),
        LpStatus::Infeasible => Err(GeometryError::EmptyInput),
        LpStatus::Unbounded => Err(GeometryError::UnboundedDirection(d.to_vec())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(t: Arc<Template>) -> Polyhedron {
        Polyhedron::from_box(t, &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    /// Triangle {x >= 0, y >= 0, x + y <= 1} over the octagon template.
    fn triangle() -> Polyhedron {
        let region = vec![
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
            Halfspace::new(vec![1.0, 1.0], 1.0),
        ];
        Polyhedron::enclosing(Template::octagon(2), &region).unwrap()
    }

    #[test]
    fn support_of_unit_box() {
        let p = unit_box(Template::rect(2));
        assert_eq!(p.support_value(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(p.support_value(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn support_of_triangle_matches_vertices() {
        let p = triangle();
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for d in [[1.0, -1.0], [-1.0, 2.0], [0.3, 0.7], [-1.0, -1.0]] {
            let brute = verts
                .iter()
                .map(|v| d[0] * v[0] + d[1] * v[1])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((p.support_value(&d).unwrap() - brute).abs() < 1e-9, "{d:?}");
        }
        assert!((p.support_value(&[1.0, -1.0]).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_polyhedron_errors() {
        let t = Template::octagon(2);
        let mut b = vec![1.0; t.len()];
        b[0] = -2.0; // x <= -2 with -x <= 1
        assert_eq!(Polyhedron::new(t.clone(), b), Err(GeometryError::EmptyInput));
        let e = Polyhedron::empty(t);
        assert_eq!(e.support_value(&[1.0, 0.0]), Err(GeometryError::EmptyInput));
    }

    #[test]
    fn containment_examples() {
        let t = Template::rect(2);
        let outer = unit_box(t.clone());
        let inner = Polyhedron::from_box(t.clone(), &[0.2, 0.2], &[0.8, 0.8]).unwrap();
        let shifted = Polyhedron::from_box(t.clone(), &[0.5, 0.0], &[1.5, 1.0]).unwrap();
        assert!(outer.contains(&inner).unwrap());
        assert!(!outer.contains(&shifted).unwrap());

        let o = Template::octagon(2);
        let outer = unit_box(o.clone());
        let region = vec![
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
            Halfspace::new(vec![1.0, 1.0], 0.5),
        ];
        let inner = Polyhedron::enclosing(o, &region).unwrap();
        assert!(outer.contains(&inner).unwrap());
    }

    #[test]
    fn containment_requires_same_template() {
        let a = unit_box(Template::rect(2));
        let b = unit_box(Template::octagon(2));
        assert_eq!(a.contains(&b), Err(GeometryError::TemplateMismatch));
    }

    #[test]
    fn bisect_midpoint_and_clamp() {
        let p = unit_box(Template::rect(2));
        let (l, h) = p.bisect(0, 0.5, 0.1).unwrap();
        assert_eq!(l.bounding_box().unwrap(), (vec![0.0, 0.0], vec![0.5, 1.0]));
        assert_eq!(h.bounding_box().unwrap(), (vec![0.5, 0.0], vec![1.0, 1.0]));

        let (l, h) = p.bisect(0, 0.02, 0.1).unwrap();
        assert_eq!(l.bounding_box().unwrap(), (vec![0.0, 0.0], vec![0.1, 1.0]));
        assert_eq!(h.bounding_box().unwrap(), (vec![0.1, 0.0], vec![1.0, 1.0]));
    }

    #[test]
    fn bisect_octagon_diagonal_partitions_range() {
        let p = unit_box(Template::octagon(2));
        let d = 4; // (1, 1)
        assert_eq!(p.template().direction(d), &[1.0, 1.0]);
        let (lo, hi) = p.range_along(d).unwrap();
        let mid = 0.5 * (lo + hi);
        let (a, b) = p.bisect(d, mid, 0.1).unwrap();
        let (alo, ahi) = a.range_along(d).unwrap();
        let (blo, bhi) = b.range_along(d).unwrap();
        assert!((alo - lo).abs() < 1e-9 && (ahi - mid).abs() < 1e-9);
        assert!((blo - mid).abs() < 1e-9 && (bhi - hi).abs() < 1e-9);
    }

    #[test]
    fn bisect_flat_direction_is_degenerate() {
        let p = Polyhedron::from_box(Template::rect(2), &[0.0, 0.5], &[1.0, 0.5]).unwrap();
        assert!(matches!(
            p.bisect(2, 0.5, 0.1),
            Err(GeometryError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn bisect_without_opposite_direction() {
        let t = Template::custom(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let p = Polyhedron::new(t, vec![1.0, 1.0, 0.0]).unwrap();
        let (a, b) = p.bisect(0, 0.5, 0.1).unwrap();
        for s in p.hit_and_run_sample(500, 3).unwrap() {
            assert!(a.contains_point(&s, 1e-9) || b.contains_point(&s, 1e-9));
        }
        assert!(a.range_along(0).unwrap().1 <= 0.5 + 1e-9);
    }

    #[test]
    fn hit_and_run_membership_and_determinism() {
        let p = unit_box(Template::rect(2));
        let a = p.hit_and_run_sample(1000, 7).unwrap();
        let b = p.hit_and_run_sample(1000, 7).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| p.contains_point(s, 1e-9)));
    }

    #[test]
    fn hit_and_run_mean_is_centred() {
        let p = unit_box(Template::rect(2));
        let pts = p.hit_and_run_sample(10_000, 11).unwrap();
        for i in 0..2 {
            let mean = pts.iter().map(|s| s[i]).sum::<f64>() / pts.len() as f64;
            assert!((mean - 0.5).abs() < 0.05, "axis {i}: mean {mean}");
        }
    }

    #[test]
    fn hit_and_run_on_flat_set_fails() {
        let p = Polyhedron::from_box(Template::rect(2), &[0.0, 0.5], &[1.0, 0.5]).unwrap();
        assert_eq!(
            p.hit_and_run_sample(10, 1),
            Err(GeometryError::DegenerateGeometry)
        );
    }

    #[test]
    fn region_intersection() {
        let p = unit_box(Template::rect(2));
        assert!(!p
            .intersects_region(&[Halfspace::at_least(vec![1.0, 0.0], 2.0)])
            .unwrap());
        assert!(p
            .intersects_region(&[Halfspace::at_least(vec![1.0, 0.0], 1.0)])
            .unwrap());
        assert!(p
            .intersects_region(&[Halfspace::at_least(vec![1.0, 1.0], 1.5)])
            .unwrap());
    }

    #[test]
    fn canonical_bounds_equal_support_values() {
        let t = Template::octagon(2);
        let p = Polyhedron::new(t.clone(), vec![1.0, 0.0, 1.0, 0.0, 5.0, 5.0, 5.0, 5.0]).unwrap();
        for j in 0..t.len() {
            let s = p.support_value(t.direction(j)).unwrap();
            assert!((s - p.bounds()[j]).abs() < 1e-9);
        }
        // idempotent
        let q = Polyhedron::new(t, p.bounds().to_vec()).unwrap();
        for (a, b) in p.bounds().iter().zip(q.bounds()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_template_must_bound_space() {
        assert!(Template::custom(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(Template::custom(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).is_err());
    }
}
