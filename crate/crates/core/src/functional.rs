//! The discrete quasi-reversibility functional and its exact gradient.
//!
//! For a space-time field `u` on `Q_T = Ω x (0, T)`:
//!
//! ```text
//! J(u) = S * Σ_interior M_kmn^2
//!      + w_trace * Σ_Γ h_t h_edge Σ (u - f)^2
//!      + w_flux  * Σ_Γ h_t h_edge Σ (u_ν - g)^2
//!      + w_init  * P(u)
//!      + ε * |u|_{H2}^2
//! ```
//!
//! with `S = h_t h_x2 h_x1 / h_t^4`, `M_kmn` the seven-point wave stencil and
//! `u_ν` the interior one-sided difference `(u_boundary - u_inward) / h`.
//! `P` is `|(u^1 - u^0)/h_t - ψ|^2_{L2}` when the displacement is unknown and
//! `|u^0 - φ|^2_{H1}` when the velocity is unknown.

use crate::cauchy::{BoundarySegment, CauchyData};
use crate::error::{QrmError, Result};
use crate::grid::{
    accumulate_h2_gradient, discrete_h1_sq, discrete_h2_sq, discrete_l2_sq, Field,
    SpaceTimeGrid, SpatialField,
};

/// Which initial condition is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Recover `u(x, 0) = φ`; the velocity `ψ` is known.
    PhiProblem,
    /// Recover `u_t(x, 0) = ψ`; the displacement `φ` is known.
    PsiProblem,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::PhiProblem => "phi",
            ProblemKind::PsiProblem => "psi",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "phi" => Some(ProblemKind::PhiProblem),
            "psi" => Some(ProblemKind::PsiProblem),
            _ => None,
        }
    }

    pub fn chi_phi(self) -> f64 {
        matches!(self, ProblemKind::PhiProblem) as u8 as f64
    }

    pub fn chi_psi(self) -> f64 {
        matches!(self, ProblemKind::PsiProblem) as u8 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub epsilon: f64,
    pub w_trace: f64,
    pub w_flux: f64,
    pub w_init: f64,
}

impl Weights {
    pub const EPSILON: f64 = 1e-6;

    /// All balancing coefficients equal to one.
    pub fn unbalanced() -> Self {
        Weights {
            epsilon: Self::EPSILON,
            w_trace: 1.0,
            w_flux: 1.0,
            w_init: 1.0,
        }
    }

    /// 1000 on the trace misfit for the displacement problem, 100 on the
    /// initial `H1` penalty for the velocity problem, one elsewhere.
    pub fn balanced(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::PhiProblem => Weights {
                w_trace: 1000.0,
                ..Self::unbalanced()
            },
            ProblemKind::PsiProblem => Weights {
                w_init: 100.0,
                ..Self::unbalanced()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(QrmError::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        for (name, w) in [
            ("w_trace", self.w_trace),
            ("w_flux", self.w_flux),
            ("w_init", self.w_init),
        ] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(QrmError::InvalidArgument(format!("{name} must be >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Everything needed to evaluate the functional on one grid.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    grid: SpaceTimeGrid,
    kind: ProblemKind,
    weights: Weights,
    data: CauchyData,
    known_init: SpatialField,
}

impl FunctionalSpec {
    /// `known_init` is `ψ` for [`ProblemKind::PhiProblem`] and `φ` for
    /// [`ProblemKind::PsiProblem`].
    pub fn new(
        grid: SpaceTimeGrid,
        kind: ProblemKind,
        weights: Weights,
        data: CauchyData,
        known_init: SpatialField,
    ) -> Result<Self> {
        weights.validate()?;
        data.check(&grid)?;
        if !known_init.matches(&grid) {
            return Err(QrmError::GridMismatch(
                "known initial condition does not match the grid".into(),
            ));
        }
        if grid.nx < 2 || grid.ny < 2 || grid.nt < 2 {
            return Err(QrmError::InvalidGrid(
                "functional needs at least one interior node per axis".into(),
            ));
        }
        Ok(FunctionalSpec {
            grid,
            kind,
            weights,
            data,
            known_init,
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn data(&self) -> &CauchyData {
        &self.data
    }

    pub fn known_init(&self) -> &SpatialField {
        &self.known_init
    }

    /// The same functional with every datum (boundary data and known initial
    /// condition) set to zero: its value is the pure quadratic form.
    pub fn homogeneous(&self) -> FunctionalSpec {
        FunctionalSpec {
            data: CauchyData::zeros(&self.grid),
            known_init: SpatialField::zeros(&self.grid),
            ..self.clone()
        }
    }

    fn check(&self, u: &Field) {
        assert_eq!(u.grid(), &self.grid, "field grid does not match functional grid");
    }
}

/// Individual terms of the functional; `total` applies the weights.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FunctionalBreakdown {
    pub residual: f64,
    pub trace_misfit: f64,
    pub flux_misfit: f64,
    pub init_penalty: f64,
    pub regularization: f64,
    pub total: f64,
}

/// `M_kmn` at an interior node.
pub fn residual_stencil(u: &Field, k: usize, m: usize, n: usize) -> Result<f64> {
    let g = u.grid();
    if k == 0 || m == 0 || n == 0 || k >= g.nt || m >= g.ny || n >= g.nx {
        return Err(QrmError::IndexOutOfInterior { k, m, n });
    }
    let v = u.values();
    let i = g.index(k, m, n);
    Ok(stencil_at(v, i, g.plane_len(), g.cols(), [g.lambda_x(), g.lambda_y()]))
}

#[inline]
fn stencil_at(v: &[f64], i: usize, plane: usize, cols: usize, lam: [f64; 2]) -> f64 {
    // Equal to u_{k+1} + u_{k-1} - λ_x(..) - λ_y(..) - λ_t u_k; written as
    // second differences so that constants give exactly zero.
    let [lx, ly] = lam;
    let c = 2.0 * v[i];
    (v[i + plane] - c + v[i - plane]) - ly * (v[i + cols] - c + v[i - cols]) - lx * (v[i + 1] - c + v[i - 1])
}

fn residual_scale(g: &SpaceTimeGrid) -> f64 {
    g.cell_volume() / g.h_t.powi(4)
}

/// `(h_t h_x2 h_x1 / h_t^4) Σ M_kmn^2` over interior nodes.
pub fn residual_term(u: &Field) -> f64 {
    let g = u.grid();
    let v = u.values();
    let (plane, cols) = (g.plane_len(), g.cols());
    let lam = [g.lambda_x(), g.lambda_y()];
    let mut acc = 0.0;
    for k in 1..g.nt {
        for m in 1..g.ny {
            let row = g.index(k, m, 0);
            for n in 1..g.nx {
                let r = stencil_at(v, row + n, plane, cols, lam);
                acc += r * r;
            }
        }
    }
    residual_scale(g) * acc
}

/// Interior one-sided outward normal derivative at boundary node `(m, n)` of level `k`.
#[inline]
fn normal_derivative(u: &Field, seg: BoundarySegment, k: usize, m: usize, n: usize) -> f64 {
    let (dm, dn) = seg.inward();
    let inner = u.get(k, (m as isize + dm) as usize, (n as isize + dn) as usize);
    (u.get(k, m, n) - inner) / seg.normal_step(u.grid())
}

/// Unweighted `(trace, flux)` boundary misfits summed over all four segments.
pub fn boundary_misfit(u: &Field, data: &CauchyData) -> Result<(f64, f64)> {
    let g = u.grid();
    data.check(g)?;
    let mut trace = 0.0;
    let mut flux = 0.0;
    for seg in BoundarySegment::ALL {
        let nodes = seg.nodes(g);
        let s = data.segment(seg);
        let w = g.h_t * seg.edge_step(g);
        let mut t_acc = 0.0;
        let mut f_acc = 0.0;
        for k in 0..g.levels() {
            for (i, &(m, n)) in nodes.iter().enumerate() {
                let j = k * s.nodes + i;
                let dt = u.get(k, m, n) - s.f[j];
                let df = normal_derivative(u, seg, k, m, n) - s.g[j];
                t_acc += dt * dt;
                f_acc += df * df;
            }
        }
        trace += w * t_acc;
        flux += w * f_acc;
    }
    Ok((trace, flux))
}

/// Forward-difference velocity `(u^1 - u^0) / h_t` at t = 0.
pub fn initial_velocity(u: &Field) -> SpatialField {
    let g = u.grid();
    let values = u
        .level(1)
        .iter()
        .zip(u.level(0))
        .map(|(b, a)| (b - a) / g.h_t)
        .collect();
    SpatialField::from_values(g, values).expect("level shape")
}

/// Unweighted penalty on the known initial condition.
pub fn init_penalty(u: &Field, spec: &FunctionalSpec) -> f64 {
    spec.check(u);
    let g = u.grid();
    match spec.kind {
        ProblemKind::PhiProblem => discrete_l2_sq(&initial_velocity(u).sub(&spec.known_init), g),
        ProblemKind::PsiProblem => discrete_h1_sq(&u.level_field(0).sub(&spec.known_init), g),
    }
}

pub fn evaluate(u: &Field, spec: &FunctionalSpec) -> FunctionalBreakdown {
    spec.check(u);
    let w = &spec.weights;
    let residual = residual_term(u);
    let (trace_misfit, flux_misfit) = boundary_misfit(u, &spec.data).expect("data checked at construction");
    let init_penalty = init_penalty(u, spec);
    let regularization = discrete_h2_sq(u);
    let total = residual
        + w.w_trace * trace_misfit
        + w.w_flux * flux_misfit
        + w.w_init * init_penalty
        + w.epsilon * regularization;
    FunctionalBreakdown {
        residual,
        trace_misfit,
        flux_misfit,
        init_penalty,
        regularization,
        total,
    }
}

/// Exact gradient of `evaluate(u, spec).total` with respect to every nodal value.
pub fn gradient(u: &Field, spec: &FunctionalSpec) -> Field {
    spec.check(u);
    let g = *u.grid();
    let w = spec.weights;
    let v = u.values();
    let mut grad = Field::zeros(&g);
    let out = grad.values_mut();

    // Residual: transpose of the seven-point stencil applied to 2 S M.
    let (plane, cols) = (g.plane_len(), g.cols());
    let [lx, ly, lt] = [g.lambda_x(), g.lambda_y(), g.lambda_t()];
    let c = 2.0 * residual_scale(&g);
    for k in 1..g.nt {
        for m in 1..g.ny {
            let row = g.index(k, m, 0);
            for n in 1..g.nx {
                let i = row + n;
                let r = c * stencil_at(v, i, plane, cols, [lx, ly]);
                out[i + plane] += r;
                out[i - plane] += r;
                out[i + cols] -= ly * r;
                out[i - cols] -= ly * r;
                out[i + 1] -= lx * r;
                out[i - 1] -= lx * r;
                out[i] -= lt * r;
            }
        }
    }

    // Boundary trace and flux misfits.
    for seg in BoundarySegment::ALL {
        let nodes = seg.nodes(&g);
        let s = spec.data.segment(seg);
        let quad = g.h_t * seg.edge_step(&g);
        let h = seg.normal_step(&g);
        let (dm, dn) = seg.inward();
        for k in 0..g.levels() {
            for (i, &(m, n)) in nodes.iter().enumerate() {
                let j = k * s.nodes + i;
                let b = g.index(k, m, n);
                let inner = g.index(k, (m as isize + dm) as usize, (n as isize + dn) as usize);
                out[b] += 2.0 * w.w_trace * quad * (v[b] - s.f[j]);
                let q = 2.0 * w.w_flux * quad * ((v[b] - v[inner]) / h - s.g[j]) / h;
                out[b] += q;
                out[inner] -= q;
            }
        }
    }

    // Known initial condition.
    let area = g.cell_area();
    let known = spec.known_init.values();
    match spec.kind {
        ProblemKind::PhiProblem => {
            let c = 2.0 * w.w_init * area / g.h_t;
            for i in 0..plane {
                let r = c * ((v[plane + i] - v[i]) / g.h_t - known[i]);
                out[plane + i] += r;
                out[i] -= r;
            }
        }
        ProblemKind::PsiProblem => {
            let c = 2.0 * w.w_init * area;
            let d = |i: usize| v[i] - known[i];
            for i in 0..plane {
                out[i] += c * d(i);
            }
            let inv_hx2 = 1.0 / (g.h_x1 * g.h_x1);
            let inv_hy2 = 1.0 / (g.h_x2 * g.h_x2);
            for m in 0..g.rows() {
                for n in 0..cols {
                    let i = m * cols + n;
                    if n + 1 < cols {
                        let q = c * (d(i + 1) - d(i)) * inv_hx2;
                        out[i + 1] += q;
                        out[i] -= q;
                    }
                    if m + 1 < g.rows() {
                        let q = c * (d(i + cols) - d(i)) * inv_hy2;
                        out[i + cols] += q;
                        out[i] -= q;
                    }
                }
            }
        }
    }

    accumulate_h2_gradient(u, w.epsilon, out);
    grad
}
