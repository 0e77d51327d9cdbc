//! Uniform space-time grids, nodal fields and the discrete norms built on them.
//!
//! Index convention: a space-time node is `(k, m, n)` with `k` the time level,
//! `m` the row (`x2` direction) and `n` the column (`x1` direction). Storage is
//! row-major with `n` fastest. Every discrete integral uses the full cell
//! weight at every node it sums over; there are no trapezoid half-weights.

use crate::error::{QrmError, Result};

const COMMENSURATE_RTOL: f64 = 1e-9;

/// Rectangular space-time box `[x1_min, x1_max] x [x2_min, x2_max] x [0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub t_final: f64,
}

impl Extent {
    pub fn new(x1: (f64, f64), x2: (f64, f64), t_final: f64) -> Self {
        Extent {
            x1_min: x1.0,
            x1_max: x1.1,
            x2_min: x2.0,
            x2_max: x2.1,
            t_final,
        }
    }

    /// The square `(lo, hi)^2` over `(0, t_final)`.
    pub fn square(lo: f64, hi: f64, t_final: f64) -> Self {
        Extent::new((lo, hi), (lo, hi), t_final)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub h_x1: f64,
    pub h_x2: f64,
    pub h_t: f64,
}

impl Steps {
    pub fn uniform(h: f64, h_t: f64) -> Self {
        Steps {
            h_x1: h,
            h_x2: h,
            h_t,
        }
    }
}

/// Uniform grid over a space-time box with `nx + 1` columns, `ny + 1` rows
/// and `nt + 1` time levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeGrid {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub t_final: f64,
    pub h_x1: f64,
    pub h_x2: f64,
    pub h_t: f64,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

fn interval_count(extent: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(QrmError::InvalidGrid(format!("step {step} must be positive")));
    }
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(QrmError::InvalidGrid(format!(
            "extent length {extent} must be positive"
        )));
    }
    let ratio = extent / step;
    let count = ratio.round();
    if count < 1.0 || (ratio - count).abs() > COMMENSURATE_RTOL * ratio.max(1.0) {
        return Err(QrmError::NonCommensurate { extent, step });
    }
    Ok(count as usize)
}

/// Build a grid from an extent and step sizes. Steps are authoritative; node
/// counts are derived by division. A CFL violation is not an error here, query
/// [`SpaceTimeGrid::satisfies_cfl`].
pub fn make_grid(extent: Extent, steps: Steps) -> Result<SpaceTimeGrid> {
    let nx = interval_count(extent.x1_max - extent.x1_min, steps.h_x1)?;
    let ny = interval_count(extent.x2_max - extent.x2_min, steps.h_x2)?;
    let nt = interval_count(extent.t_final, steps.h_t)?;
    Ok(SpaceTimeGrid {
        x1_min: extent.x1_min,
        x1_max: extent.x1_max,
        x2_min: extent.x2_min,
        x2_max: extent.x2_max,
        t_final: extent.t_final,
        h_x1: steps.h_x1,
        h_x2: steps.h_x2,
        h_t: steps.h_t,
        nx,
        ny,
        nt,
    })
}

impl SpaceTimeGrid {
    pub fn new(extent: Extent, steps: Steps) -> Result<Self> {
        make_grid(extent, steps)
    }

    pub fn extent(&self) -> Extent {
        Extent::new(
            (self.x1_min, self.x1_max),
            (self.x2_min, self.x2_max),
            self.t_final,
        )
    }

    pub fn steps(&self) -> Steps {
        Steps {
            h_x1: self.h_x1,
            h_x2: self.h_x2,
            h_t: self.h_t,
        }
    }

    pub fn lambda_x(&self) -> f64 {
        (self.h_t * self.h_t) / (self.h_x1 * self.h_x1)
    }

    pub fn lambda_y(&self) -> f64 {
        (self.h_t * self.h_t) / (self.h_x2 * self.h_x2)
    }

    pub fn lambda_t(&self) -> f64 {
        2.0 * (1.0 - self.lambda_x() - self.lambda_y())
    }

    /// `lambda_x + lambda_y`; the explicit scheme needs this to be at most 1.
    pub fn cfl_number(&self) -> f64 {
        self.lambda_x() + self.lambda_y()
    }

    pub fn satisfies_cfl(&self) -> bool {
        self.cfl_number() <= 1.0 + 1e-12
    }

    pub fn cols(&self) -> usize {
        self.nx + 1
    }

    pub fn rows(&self) -> usize {
        self.ny + 1
    }

    pub fn levels(&self) -> usize {
        self.nt + 1
    }

    /// Nodes per time level.
    pub fn plane_len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn len(&self) -> usize {
        self.levels() * self.plane_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, k: usize, m: usize, n: usize) -> usize {
        (k * self.rows() + m) * self.cols() + n
    }

    pub fn x1(&self, n: usize) -> f64 {
        self.x1_min + n as f64 * self.h_x1
    }

    pub fn x2(&self, m: usize) -> f64 {
        self.x2_min + m as f64 * self.h_x2
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.h_t
    }

    /// Space-time cell volume `h_t * h_x1 * h_x2`.
    pub fn cell_volume(&self) -> f64 {
        self.h_t * self.h_x1 * self.h_x2
    }

    pub fn cell_area(&self) -> f64 {
        self.h_x1 * self.h_x2
    }

    /// Column whose `x1` coordinate equals `x1`, if there is one.
    pub fn column_of(&self, x1: f64) -> Option<usize> {
        snap(x1 - self.x1_min, self.h_x1, self.nx)
    }

    pub fn row_of(&self, x2: f64) -> Option<usize> {
        snap(x2 - self.x2_min, self.h_x2, self.ny)
    }

    /// Same grid restricted to a new spatial box with the same steps and time axis.
    pub fn with_spatial(&self, x1: (f64, f64), x2: (f64, f64)) -> Result<Self> {
        make_grid(Extent::new(x1, x2, self.t_final), self.steps())
    }
}

fn snap(offset: f64, step: f64, count: usize) -> Option<usize> {
    let r = offset / step;
    let i = r.round();
    if i < 0.0 || i > count as f64 || (r - i).abs() > 1e-7 {
        None
    } else {
        Some(i as usize)
    }
}

/// Nodal values at a single time level, `rows x cols` with `n` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SpatialField {
    pub fn zeros(grid: &SpaceTimeGrid) -> Self {
        SpatialField {
            rows: grid.rows(),
            cols: grid.cols(),
            values: vec![0.0; grid.plane_len()],
        }
    }

    pub fn from_values(grid: &SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.plane_len() {
            return Err(QrmError::GridMismatch(format!(
                "spatial field has {} values, grid needs {}",
                values.len(),
                grid.plane_len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QrmError::NonFiniteEncountered("spatial field"));
        }
        Ok(SpatialField {
            rows: grid.rows(),
            cols: grid.cols(),
            values,
        })
    }

    /// Evaluate `f(x1, x2)` at every node.
    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.plane_len());
        for m in 0..grid.rows() {
            for n in 0..grid.cols() {
                values.push(f(grid.x1(n), grid.x2(m)));
            }
        }
        SpatialField {
            rows: grid.rows(),
            cols: grid.cols(),
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * self.cols + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: f64) {
        self.values[m * self.cols + n] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn matches(&self, grid: &SpaceTimeGrid) -> bool {
        self.rows == grid.rows() && self.cols == grid.cols()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> Self {
        SpatialField {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Elementwise `self - other`. Panics on shape mismatch.
    pub fn sub(&self, other: &SpatialField) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SpatialField {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Nodal values on every space-time node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &SpaceTimeGrid) -> Self {
        Field {
            grid: *grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QrmError::GridMismatch(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QrmError::NonFiniteEncountered("field"));
        }
        Ok(Field {
            grid: *grid,
            values,
        })
    }

    /// Evaluate `f(t, x1, x2)` at every node.
    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.levels() {
            for m in 0..grid.rows() {
                for n in 0..grid.cols() {
                    values.push(f(grid.t(k), grid.x1(n), grid.x2(m)));
                }
            }
        }
        Field {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, k: usize, m: usize, n: usize) -> f64 {
        self.values[self.grid.index(k, m, n)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, m: usize, n: usize, v: f64) {
        let i = self.grid.index(k, m, n);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let p = self.grid.plane_len();
        &self.values[k * p..(k + 1) * p]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        let p = self.grid.plane_len();
        &mut self.values[k * p..(k + 1) * p]
    }

    pub fn level_field(&self, k: usize) -> SpatialField {
        SpatialField {
            rows: self.grid.rows(),
            cols: self.grid.cols(),
            values: self.level(k).to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Field) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.values, &self.values)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// Plain left-to-right inner product; the fixed order keeps results bit-reproducible.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_spatial(field: &SpatialField, grid: &SpaceTimeGrid) {
    assert!(
        field.matches(grid),
        "spatial field {}x{} does not match grid {}x{}",
        field.rows,
        field.cols,
        grid.rows(),
        grid.cols()
    );
}

/// `h_x1 * h_x2 * sum(v^2)` over all nodes.
pub fn discrete_l2_sq(field: &SpatialField, grid: &SpaceTimeGrid) -> f64 {
    check_spatial(field, grid);
    grid.cell_area() * field.values.iter().map(|v| v * v).sum::<f64>()
}

/// Squared `L2` norms of the forward-difference `x1` and `x2` derivatives.
pub fn gradient_l2_sq(field: &SpatialField, grid: &SpaceTimeGrid) -> (f64, f64) {
    check_spatial(field, grid);
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut dx1 = 0.0;
    for m in 0..rows {
        for n in 0..cols - 1 {
            let d = (field.get(m, n + 1) - field.get(m, n)) / grid.h_x1;
            dx1 += d * d;
        }
    }
    let mut dx2 = 0.0;
    for m in 0..rows - 1 {
        for n in 0..cols {
            let d = (field.get(m + 1, n) - field.get(m, n)) / grid.h_x2;
            dx2 += d * d;
        }
    }
    let w = grid.cell_area();
    (w * dx1, w * dx2)
}

/// Discrete `H1(Omega)` norm squared: value term plus both forward-difference derivative terms.
pub fn discrete_h1_sq(field: &SpatialField, grid: &SpaceTimeGrid) -> f64 {
    let (dx1, dx2) = gradient_l2_sq(field, grid);
    discrete_l2_sq(field, grid) + dx1 + dx2
}

/// Individual contributions to the discrete `H2(Q_T)` norm. Axis order in the
/// arrays is `[t, x2, x1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct H2Parts {
    pub value: f64,
    pub first: [f64; 3],
    pub second: [f64; 3],
}

impl H2Parts {
    pub fn total(&self) -> f64 {
        self.value + self.first.iter().sum::<f64>() + self.second.iter().sum::<f64>()
    }
}

/// Term-by-term discrete `H2` norm: values, forward first differences along
/// each axis, and pure central second differences along each axis. Mixed
/// partials are not included.
pub fn h2_parts(field: &Field) -> H2Parts {
    let g = field.grid();
    let u = field.values();
    let (lt, rows, cols) = (g.levels(), g.rows(), g.cols());
    let strides = [g.plane_len(), cols, 1];
    let steps = [g.h_t, g.h_x2, g.h_x1];
    let dims = [lt, rows, cols];
    let w = g.cell_volume();

    let value = u.iter().map(|v| v * v).sum::<f64>();
    let mut first = [0.0; 3];
    let mut second = [0.0; 3];
    for axis in 0..3 {
        let s = strides[axis];
        let inv_h = 1.0 / steps[axis];
        let inv_h2 = inv_h * inv_h;
        let mut f_acc = 0.0;
        let mut s_acc = 0.0;
        for k in 0..lt {
            for m in 0..rows {
                for n in 0..cols {
                    let pos = [k, m, n][axis];
                    let i = g.index(k, m, n);
                    if pos + 1 < dims[axis] {
                        let d = (u[i + s] - u[i]) * inv_h;
                        f_acc += d * d;
                        if pos >= 1 {
                            let d2 = (u[i + s] - 2.0 * u[i] + u[i - s]) * inv_h2;
                            s_acc += d2 * d2;
                        }
                    }
                }
            }
        }
        first[axis] = w * f_acc;
        second[axis] = w * s_acc;
    }
    H2Parts {
        value: w * value,
        first,
        second,
    }
}

pub fn discrete_h2_sq(field: &Field) -> f64 {
    h2_parts(field).total()
}

/// Adds the gradient of `scale * discrete_h2_sq(u)` into `grad`.
pub(crate) fn accumulate_h2_gradient(field: &Field, scale: f64, grad: &mut [f64]) {
    let g = field.grid();
    let u = field.values();
    let (lt, rows, cols) = (g.levels(), g.rows(), g.cols());
    let strides = [g.plane_len(), cols, 1];
    let steps = [g.h_t, g.h_x2, g.h_x1];
    let dims = [lt, rows, cols];
    let c = 2.0 * scale * g.cell_volume();

    for (gi, ui) in grad.iter_mut().zip(u) {
        *gi += c * ui;
    }
    for axis in 0..3 {
        let s = strides[axis];
        let inv_h2 = 1.0 / (steps[axis] * steps[axis]);
        let inv_h4 = inv_h2 * inv_h2;
        for k in 0..lt {
            for m in 0..rows {
                for n in 0..cols {
                    let pos = [k, m, n][axis];
                    let i = g.index(k, m, n);
                    if pos + 1 < dims[axis] {
                        let q = c * (u[i + s] - u[i]) * inv_h2;
                        grad[i + s] += q;
                        grad[i] -= q;
                        if pos >= 1 {
                            let r = c * (u[i + s] - 2.0 * u[i] + u[i - s]) * inv_h4;
                            grad[i + s] += r;
                            grad[i] -= 2.0 * r;
                            grad[i - s] += r;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_grid(h: f64, ht: f64) -> SpaceTimeGrid {
        make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(h, ht)).unwrap()
    }

    #[test]
    fn half_plane_preset_grid() {
        let g = make_grid(Extent::square(0.0, 4.0, 3.0), Steps::uniform(0.1, 1.0 / 15.0)).unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (40, 40, 45));
        assert_relative_eq!(g.lambda_x(), 4.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(g.lambda_y(), 4.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(g.lambda_t(), 2.0 / 9.0, max_relative = 1e-13);
        assert!(g.satisfies_cfl());
    }

    #[test]
    fn coarse_unit_grid() {
        let g = unit_grid(0.5, 0.25);
        assert_eq!((g.nx, g.ny, g.nt), (2, 2, 4));
        assert_eq!(g.lambda_x(), 0.25);
        assert_eq!(g.lambda_y(), 0.25);
        assert_eq!(g.lambda_t(), 1.0);
    }

    #[test]
    fn non_commensurate_extent() {
        let err = make_grid(Extent::new((0.0, 0.35), (0.0, 1.0), 1.0), Steps::uniform(0.1, 0.05));
        assert!(matches!(err, Err(QrmError::NonCommensurate { .. })));
    }

    #[test]
    fn non_positive_step() {
        let err = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.0, 0.1));
        assert!(matches!(err, Err(QrmError::InvalidGrid(_))));
    }

    #[test]
    fn cfl_violation_is_flagged_not_fatal() {
        let g = make_grid(Extent::square(0.0, 1.0, 0.75), Steps::uniform(0.05, 0.25)).unwrap();
        assert!(!g.satisfies_cfl());
        assert_relative_eq!(g.cfl_number(), 50.0, max_relative = 1e-12);
    }

    #[test]
    fn l2_of_constant() {
        let g = unit_grid(0.5, 0.25);
        let z = SpatialField::zeros(&g);
        assert_eq!(discrete_l2_sq(&z, &g), 0.0);
        let one = SpatialField::from_fn(&g, |_, _| 1.0);
        assert_relative_eq!(discrete_l2_sq(&one, &g), 2.25, max_relative = 1e-15);
        assert_relative_eq!(discrete_h1_sq(&one, &g), 2.25, max_relative = 1e-15);
    }

    #[test]
    fn h1_of_linear_field() {
        for &h in &[0.1, 0.05, 0.025] {
            let g = unit_grid(h, h / 2.0);
            let f = SpatialField::from_fn(&g, |x1, _| x1);
            let (dx1, dx2) = gradient_l2_sq(&f, &g);
            assert_eq!(dx2, 0.0);
            // N intervals by N+1 rows of unit slopes, cell area h^2.
            assert_relative_eq!(dx1, 1.0 + h, max_relative = 1e-10);
        }
    }

    #[test]
    fn h2_of_quadratic_in_time() {
        let g = unit_grid(0.5, 0.25);
        let f = Field::from_fn(&g, |t, _, _| t * t);
        let parts = h2_parts(&f);
        let interior_levels = (g.nt - 1) as f64;
        let nodes = g.plane_len() as f64;
        assert_relative_eq!(
            parts.second[0],
            4.0 * g.cell_volume() * interior_levels * nodes,
            max_relative = 1e-12
        );
        assert_eq!(parts.second[1], 0.0);
        assert_eq!(parts.second[2], 0.0);
    }

    #[test]
    fn h2_of_constant() {
        let g = unit_grid(0.5, 0.25);
        let c = 3.0;
        let f = Field::from_fn(&g, |_, _, _| c);
        let parts = h2_parts(&f);
        assert_relative_eq!(parts.total(), c * c * g.cell_volume() * g.len() as f64);
        assert_eq!(parts.first, [0.0; 3]);
        assert_eq!(parts.second, [0.0; 3]);
    }

    #[test]
    fn h2_gradient_matches_finite_differences() {
        let g = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.25, 0.25)).unwrap();
        let u = Field::from_fn(&g, |t, x, y| (1.3 * t + 0.2).sin() * (x - y * y).cos());
        let mut grad = vec![0.0; g.len()];
        accumulate_h2_gradient(&u, 1.0, &mut grad);
        for i in [0, 7, 31, g.len() / 2, g.len() - 1] {
            let mut up = u.clone();
            let mut dn = u.clone();
            up.values_mut()[i] += 1e-5;
            dn.values_mut()[i] -= 1e-5;
            let fd = (discrete_h2_sq(&up) - discrete_h2_sq(&dn)) / 2e-5;
            assert_relative_eq!(grad[i], fd, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn node_snapping() {
        let g = make_grid(Extent::square(-3.0, 4.0, 3.0), Steps::uniform(0.1, 1.0 / 15.0)).unwrap();
        assert_eq!(g.column_of(0.0), Some(30));
        assert_eq!(g.column_of(0.5), Some(35));
        assert_eq!(g.row_of(4.0), Some(70));
        assert_eq!(g.column_of(0.55), None);
        assert_eq!(g.column_of(4.1), None);
    }
}
