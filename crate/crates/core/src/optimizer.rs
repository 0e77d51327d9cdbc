//! Nonlinear conjugate gradient (Polak-Ribière+) with an exact line search.
//!
//! The functional is an exact quadratic, so the curvature along a direction
//! `d` is `d . (∇J(u + d) - ∇J(u))` and the optimal step has a closed form.
//! The iteration starts from the zero field and, by default, runs a fixed
//! number of iterations: the iteration count acts as a regularizer.

use crate::error::{QrmError, Result};
use crate::functional::{evaluate, gradient, FunctionalSpec};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    ExactQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub max_iters: usize,
    /// Stop once `|∇J|^2` falls to this value. Disabled when `None`.
    pub grad_tol: Option<f64>,
    pub restart_period: usize,
    pub line_search: LineSearch,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            max_iters: 300,
            grad_tol: None,
            restart_period: 50,
            line_search: LineSearch::ExactQuadratic,
        }
    }
}

impl CgConfig {
    pub fn with_iters(max_iters: usize) -> Self {
        CgConfig {
            max_iters,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j_value: f64,
    pub grad_norm_sq: f64,
    /// Step that produced this iterate; zero for the starting point.
    pub step_alpha: f64,
}

/// One record per iterate, starting with the zero field at `iter = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceHistory {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_j(&self) -> Option<f64> {
        self.records.last().map(|r| r.j_value)
    }

    /// True when no recorded `J` exceeds its predecessor by more than
    /// `rel_tol * J_0`.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        let scale = self.records.first().map_or(0.0, |r| r.j_value.abs());
        self.records
            .windows(2)
            .all(|w| w[1].j_value <= w[0].j_value + rel_tol * scale)
    }
}

/// Step length minimizing `J(u + alpha d)`, together with the curvature
/// `d . H d`.
pub fn exact_step(g: &Field, d: &Field, spec: &FunctionalSpec, u: &Field) -> Result<(f64, f64)> {
    let mut probe = u.clone();
    probe.axpy(1.0, d);
    let g_probe = gradient(&probe, spec);
    let curvature = g_probe.dot(d) - g.dot(d);
    if !curvature.is_finite() {
        return Err(QrmError::NonFiniteEncountered("line search curvature"));
    }
    if curvature <= 0.0 {
        return Err(QrmError::DegenerateCurvature(curvature));
    }
    Ok((-g.dot(d) / curvature, curvature))
}

/// Minimize the functional from the zero field.
pub fn minimize(spec: &FunctionalSpec, config: &CgConfig) -> Result<(Field, ConvergenceHistory)> {
    minimize_from(Field::zeros(spec.grid()), spec, config)
}

pub fn minimize_from(
    start: Field,
    spec: &FunctionalSpec,
    config: &CgConfig,
) -> Result<(Field, ConvergenceHistory)> {
    if config.max_iters == 0 {
        return Err(QrmError::InvalidArgument("max_iters must be at least 1".into()));
    }
    let restart = config.restart_period.max(1);
    let mut u = start;
    let mut g = gradient(&u, spec);
    let mut g_sq = g.norm_sq();
    let mut history = ConvergenceHistory::default();
    history.records.push(IterationRecord {
        iter: 0,
        j_value: evaluate(&u, spec).total,
        grad_norm_sq: g_sq,
        step_alpha: 0.0,
    });
    let mut d = g.scaled(-1.0);

    for iter in 1..=config.max_iters {
        if !g_sq.is_finite() {
            return Err(QrmError::NonFiniteEncountered("gradient"));
        }
        if g_sq == 0.0 || config.grad_tol.is_some_and(|tol| g_sq <= tol) {
            break;
        }
        let slope = g.dot(&d);
        if !(slope < 0.0) {
            return Err(QrmError::NonDescentDirection(slope));
        }
        let (alpha, _) = exact_step(&g, &d, spec, &u)?;
        u.axpy(alpha, &d);
        let g_new = gradient(&u, spec);
        let g_new_sq = g_new.norm_sq();

        let beta = if iter % restart == 0 {
            0.0
        } else {
            ((g_new_sq - g_new.dot(&g)) / g_sq).max(0.0)
        };
        let mut d_new = g_new.scaled(-1.0);
        d_new.axpy(beta, &d);
        if g_new.dot(&d_new) >= 0.0 {
            // Rounding can spoil conjugacy; fall back to steepest descent.
            d_new = g_new.scaled(-1.0);
        }

        let j = evaluate(&u, spec).total;
        if !j.is_finite() {
            return Err(QrmError::NonFiniteEncountered("functional value"));
        }
        history.records.push(IterationRecord {
            iter,
            j_value: j,
            grad_norm_sq: g_new_sq,
            step_alpha: alpha,
        });
        g = g_new;
        g_sq = g_new_sq;
        d = d_new;
    }
    Ok((u, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::{BoundarySegment, CauchyData};
    use crate::functional::{ProblemKind, Weights};
    use crate::grid::{make_grid, Extent, SpatialField, Steps};

    fn small_spec() -> FunctionalSpec {
        let g = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.25, 0.2)).unwrap();
        let mut data = CauchyData::zeros(&g);
        for (i, v) in data.segment_mut(BoundarySegment::Gamma1).f.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        for (i, v) in data.segment_mut(BoundarySegment::Gamma2).g.iter_mut().enumerate() {
            *v = (i as f64 * 0.11).cos();
        }
        FunctionalSpec::new(
            g,
            ProblemKind::PhiProblem,
            Weights::balanced(ProblemKind::PhiProblem),
            data,
            SpatialField::zeros(&g),
        )
        .unwrap()
    }

    #[test]
    fn zero_data_stops_immediately() {
        let spec = small_spec().homogeneous();
        let (u, h) = minimize(&spec, &CgConfig::default()).unwrap();
        assert_eq!(h.iterations(), 0);
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_is_positive_and_orthogonal() {
        let spec = small_spec();
        let u = Field::zeros(spec.grid());
        let g = gradient(&u, &spec);
        let d = g.scaled(-1.0);
        let (alpha, _) = exact_step(&g, &d, &spec, &u).unwrap();
        assert!(alpha > 0.0);
        let mut next = u.clone();
        next.axpy(alpha, &d);
        let slope = gradient(&next, &spec).dot(&d);
        assert!(slope.abs() <= 1e-8 * g.norm_sq().sqrt() * d.norm_sq().sqrt());

        let (alpha2, _) = exact_step(&g, &d.scaled(2.0), &spec, &u).unwrap();
        assert!((alpha2 - alpha / 2.0).abs() <= 1e-10 * alpha);
    }

    #[test]
    fn descent_is_monotone_and_deterministic() {
        let spec = small_spec();
        let cfg = CgConfig::with_iters(60);
        let (u1, h1) = minimize(&spec, &cfg).unwrap();
        let (u2, h2) = minimize(&spec, &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(u1, u2);
        assert!(h1.is_monotone(1e-12));
        assert!(h1.final_j().unwrap() < h1.records[0].j_value);
    }

    #[test]
    fn early_stop_agrees_with_full_run() {
        let spec = small_spec();
        let tol = 1e-10;
        let (_, full) = minimize(&spec, &CgConfig::with_iters(300)).unwrap();
        let cfg = CgConfig {
            grad_tol: Some(tol),
            ..CgConfig::with_iters(300)
        };
        let (_, early) = minimize(&spec, &cfg).unwrap();
        assert!(early.iterations() <= full.iterations());
        assert!((early.final_j().unwrap() - full.final_j().unwrap()).abs() <= tol);
    }

    #[test]
    fn zero_iterations_rejected() {
        let spec = small_spec();
        assert!(minimize(&spec, &CgConfig::with_iters(0)).is_err());
    }
}
