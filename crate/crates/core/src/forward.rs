//! Explicit leapfrog solver for `u_tt = Δu` with zero Dirichlet walls, used
//! to synthesise lateral Cauchy data.

use crate::cauchy::{BoundarySegment, CauchyData};
use crate::error::{QrmError, Result};
use crate::grid::{Field, SpaceTimeGrid, SpatialField};

const SUPPORT_TOL: f64 = 1e-9;

/// Initial displacement `phi` and velocity `psi` on a walled box, both
/// supported in the closed square `[0, support_side]^2`.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    grid: SpaceTimeGrid,
    phi: SpatialField,
    psi: SpatialField,
    support_side: f64,
}

impl ForwardProblem {
    pub fn new(
        grid: SpaceTimeGrid,
        phi: SpatialField,
        psi: SpatialField,
        support_side: f64,
    ) -> Result<Self> {
        if !grid.satisfies_cfl() {
            return Err(QrmError::CflViolation(grid.cfl_number()));
        }
        for f in [&phi, &psi] {
            if !f.matches(&grid) {
                return Err(QrmError::GridMismatch(
                    "initial condition does not match the forward grid".into(),
                ));
            }
        }
        let inside = |x: f64| x >= -SUPPORT_TOL && x <= support_side + SUPPORT_TOL;
        for f in [&phi, &psi] {
            for m in 0..grid.rows() {
                for n in 0..grid.cols() {
                    let v = f.get(m, n);
                    if v == 0.0 {
                        continue;
                    }
                    let (x1, x2) = (grid.x1(n), grid.x2(m));
                    let on_wall = m == 0 || n == 0 || m == grid.ny || n == grid.nx;
                    if !(inside(x1) && inside(x2)) || on_wall {
                        return Err(QrmError::SupportViolation { x1, x2, value: v });
                    }
                }
            }
        }
        Ok(ForwardProblem {
            grid,
            phi,
            psi,
            support_side,
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn phi(&self) -> &SpatialField {
        &self.phi
    }

    pub fn psi(&self) -> &SpatialField {
        &self.psi
    }

    pub fn support_side(&self) -> f64 {
        self.support_side
    }
}

/// Five-point Laplacian of `u` at interior node `i` of a level.
#[inline]
fn laplacian_at(u: &[f64], i: usize, cols: usize, inv_hx2: f64, inv_hy2: f64) -> f64 {
    (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_hx2 + (u[i + cols] - 2.0 * u[i] + u[i - cols]) * inv_hy2
}

/// One leapfrog step `next = 2 cur - prev + h_t^2 Δ_h cur` on interior nodes,
/// zero on the walls. Running it with `prev` and `next` exchanged steps
/// backwards in time.
pub fn leapfrog_step(grid: &SpaceTimeGrid, prev: &[f64], cur: &[f64], next: &mut [f64]) {
    let (rows, cols) = (grid.rows(), grid.cols());
    let lx = grid.lambda_x();
    let ly = grid.lambda_y();
    next.iter_mut().for_each(|v| *v = 0.0);
    for m in 1..rows - 1 {
        for n in 1..cols - 1 {
            let i = m * cols + n;
            next[i] = 2.0 * cur[i] - prev[i]
                + lx * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1])
                + ly * (cur[i + cols] - 2.0 * cur[i] + cur[i - cols]);
        }
    }
}

/// Solve the walled Cauchy problem on every time level of the grid.
///
/// `u^0 = phi`, `u^1 = phi + h_t psi + (h_t^2 / 2) Δ_h phi`, then leapfrog.
pub fn solve_forward(problem: &ForwardProblem) -> Result<Field> {
    let grid = problem.grid;
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut field = Field::zeros(&grid);

    field.level_mut(0).copy_from_slice(problem.phi.values());

    if grid.nt >= 1 {
        let inv_hx2 = 1.0 / (grid.h_x1 * grid.h_x1);
        let inv_hy2 = 1.0 / (grid.h_x2 * grid.h_x2);
        let ht = grid.h_t;
        let phi = problem.phi.values();
        let psi = problem.psi.values();
        let first = field.level_mut(1);
        for m in 1..rows - 1 {
            for n in 1..cols - 1 {
                let i = m * cols + n;
                first[i] = phi[i] + ht * psi[i] + 0.5 * ht * ht * laplacian_at(phi, i, cols, inv_hx2, inv_hy2);
            }
        }
    }

    let plane = grid.plane_len();
    let values = field.values_mut();
    for k in 1..grid.nt {
        let (done, rest) = values.split_at_mut((k + 1) * plane);
        let prev = &done[(k - 1) * plane..k * plane];
        let cur = &done[k * plane..(k + 1) * plane];
        leapfrog_step(&grid, prev, cur, &mut rest[..plane]);
    }

    if !field.is_finite() {
        return Err(QrmError::NonFiniteEncountered("forward solution"));
    }
    Ok(field)
}

/// Which segments carry measured data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMode {
    /// Data measured on Γ1 and Γ2 only; Γ3 and Γ4 are set to exact zero.
    LateralPair,
    /// Data measured on the whole boundary.
    FullBoundary,
}

/// Offsets of an inverse grid inside a forward grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embedding {
    pub col_offset: usize,
    pub row_offset: usize,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Locate `inner` inside `outer` on shared nodes: identical steps and time
/// axis, spatial box nested on node lines.
pub fn embed(outer: &SpaceTimeGrid, inner: &SpaceTimeGrid) -> Result<Embedding> {
    if !(close(outer.h_x1, inner.h_x1) && close(outer.h_x2, inner.h_x2) && close(outer.h_t, inner.h_t)) {
        return Err(QrmError::GridMismatch("forward and inverse steps differ".into()));
    }
    if outer.nt != inner.nt {
        return Err(QrmError::GridMismatch(format!(
            "forward grid has {} time intervals, inverse grid has {}",
            outer.nt, inner.nt
        )));
    }
    let col = outer.column_of(inner.x1_min);
    let row = outer.row_of(inner.x2_min);
    match (col, row) {
        (Some(c), Some(r)) if c + inner.nx <= outer.nx && r + inner.ny <= outer.ny => Ok(Embedding {
            col_offset: c,
            row_offset: r,
        }),
        _ => Err(QrmError::GridMismatch(
            "inverse domain is not nested on forward-grid nodes".into(),
        )),
    }
}

/// Record the trace and outward normal derivative of a forward solution on
/// the boundary of the inverse domain.
///
/// The normal derivative uses the second-order one-sided stencil
/// `(-3 u_b + 4 u_{b+h ν} - u_{b+2h ν}) / 2h`, reaching outward into the
/// larger forward domain.
pub fn extract_cauchy(
    field: &Field,
    inverse_grid: &SpaceTimeGrid,
    mode: DataMode,
) -> Result<CauchyData> {
    let outer = *field.grid();
    let emb = embed(&outer, inverse_grid)?;
    let mut data = CauchyData::zeros(inverse_grid);

    for seg in BoundarySegment::ALL {
        if mode == DataMode::LateralPair && seg.is_far_side() {
            continue;
        }
        let (dm, dn) = seg.inward();
        let (om, on) = (-dm, -dn);
        let h = seg.normal_step(inverse_grid);
        let nodes = seg.nodes(inverse_grid);
        // Two exterior nodes are needed along the outward normal.
        for &(m, n) in nodes.iter().take(1).chain(nodes.iter().last()) {
            let gm = (m + emb.row_offset) as isize + 2 * om;
            let gn = (n + emb.col_offset) as isize + 2 * on;
            if gm < 0 || gn < 0 || gm > outer.ny as isize || gn > outer.nx as isize {
                return Err(QrmError::GridMismatch(format!(
                    "forward domain does not extend two nodes beyond {}",
                    seg.name()
                )));
            }
        }
        let count = nodes.len();
        let s = data.segment_mut(seg);
        for k in 0..outer.levels() {
            for (i, &(m, n)) in nodes.iter().enumerate() {
                let gm = (m + emb.row_offset) as isize;
                let gn = (n + emb.col_offset) as isize;
                let at = |step: isize| {
                    field.get(k, (gm + step * om) as usize, (gn + step * on) as usize)
                };
                let ub = at(0);
                s.f[k * count + i] = ub;
                s.g[k * count + i] = (-3.0 * ub + 4.0 * at(1) - at(2)) / (2.0 * h);
            }
        }
    }
    Ok(data)
}

/// Discrete leapfrog energy between levels `k` and `k + 1`:
/// `|(u^{k+1} - u^k) / h_t|^2 + <∇u^{k+1}, ∇u^k>`, area weighted. It is
/// conserved exactly by the scheme under the CFL condition.
pub fn discrete_energy(field: &Field, k: usize) -> f64 {
    let g = field.grid();
    let (rows, cols) = (g.rows(), g.cols());
    let a = field.level(k);
    let b = field.level(k + 1);
    let mut kinetic = 0.0;
    for (x, y) in a.iter().zip(b) {
        let v = (y - x) / g.h_t;
        kinetic += v * v;
    }
    let mut potential = 0.0;
    for m in 0..rows {
        for n in 0..cols {
            let i = m * cols + n;
            if n + 1 < cols {
                potential += (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / (g.h_x1 * g.h_x1);
            }
            if m + 1 < rows {
                potential += (a[i + cols] - a[i]) * (b[i + cols] - b[i]) / (g.h_x2 * g.h_x2);
            }
        }
    }
    g.cell_area() * (kinetic + potential)
}
