//! Named experiment presets and the simulate → noise → reconstruct pipeline.

use std::fmt;

use crate::cauchy::CauchyData;
use crate::error::{QrmError, Result};
use crate::forward::{extract_cauchy, solve_forward, DataMode, ForwardProblem};
use crate::functional::{evaluate, initial_velocity, FunctionalBreakdown, FunctionalSpec, ProblemKind, Weights};
use crate::grid::{discrete_l2_sq, make_grid, Extent, Field, SpaceTimeGrid, SpatialField, Steps};
use crate::noise::{add_noise, NoiseSpec};
use crate::optimizer::{minimize, CgConfig, ConvergenceHistory};
use crate::phantoms::Phantom;

/// Side of the square that supports the unknown initial condition.
pub const SUPPORT_SIDE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    /// Ω is the square `(0, domain_side)^2`.
    pub domain_side: f64,
    pub t_final: f64,
    pub h: f64,
    pub h_t: f64,
    pub phantom: Phantom,
    pub kind: ProblemKind,
    pub data_mode: DataMode,
    /// Noise level of a single run.
    pub gamma: f64,
    /// Levels used by a sweep.
    pub noise_levels: Vec<f64>,
    pub ablate_init_penalty: bool,
    pub weights: Weights,
    pub iters: usize,
}

pub const PRESET_NAMES: [&str; 5] = ["test1", "test2", "test3", "test4", "test5"];

impl ExperimentPreset {
    /// One of `test1` … `test5`.
    pub fn named(name: &str) -> Result<Self> {
        let half_plane = |phantom, kind| ExperimentPreset {
            name: name.to_string(),
            domain_side: 4.0,
            t_final: 3.0,
            h: 0.1,
            h_t: 1.0 / 15.0,
            phantom,
            kind,
            data_mode: DataMode::LateralPair,
            gamma: 0.5,
            noise_levels: vec![0.05, 0.25, 0.5],
            ablate_init_penalty: false,
            weights: Weights::balanced(kind),
            iters: 300,
        };
        let unit_square = |t_final: f64, h_t: f64| ExperimentPreset {
            name: name.to_string(),
            domain_side: 1.0,
            t_final,
            h: 0.05,
            h_t,
            phantom: Phantom::SineFull,
            kind: ProblemKind::PhiProblem,
            data_mode: DataMode::FullBoundary,
            gamma: 0.25,
            noise_levels: vec![0.05, 0.25, 0.5],
            ablate_init_penalty: false,
            weights: Weights::balanced(ProblemKind::PhiProblem),
            iters: 300,
        };
        match name {
            "test1" => Ok(half_plane(Phantom::SineFull, ProblemKind::PhiProblem)),
            "test2" => Ok(half_plane(Phantom::SineShifted, ProblemKind::PsiProblem)),
            "test3" => Ok(unit_square(0.75, 0.025)),
            "test4" => Ok(unit_square(2.0, 1.0 / 30.0)),
            "test5" => Ok(half_plane(Phantom::DeltaPair, ProblemKind::PhiProblem)),
            other => Err(QrmError::InvalidArgument(format!(
                "unknown test '{other}', expected one of {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn inverse_grid(&self) -> Result<SpaceTimeGrid> {
        make_grid(
            Extent::square(0.0, self.domain_side, self.t_final),
            Steps::uniform(self.h, self.h_t),
        )
    }

    /// The walled box `(-T, a + T)^2` used to simulate the data.
    pub fn forward_grid(&self) -> Result<SpaceTimeGrid> {
        make_grid(
            Extent::square(-self.t_final, SUPPORT_SIDE + self.t_final, self.t_final),
            Steps::uniform(self.h, self.h_t),
        )
    }

    /// Weights actually used: the preset weights with the initial-condition
    /// penalty removed when ablated.
    pub fn effective_weights(&self) -> Weights {
        let mut w = self.weights;
        if self.ablate_init_penalty {
            w.w_init = 0.0;
        }
        w
    }

    /// Non-fatal remarks about the observation time.
    pub fn warnings(&self) -> Vec<String> {
        let a = SUPPORT_SIDE;
        let mut out = Vec::new();
        match self.data_mode {
            DataMode::LateralPair => {
                let bound = a * 2f64.sqrt() / (2.0 - 2f64.sqrt());
                if self.t_final <= bound {
                    out.push(format!(
                        "T = {} does not exceed a*sqrt(2)/(2-sqrt(2)) = {bound:.4}",
                        self.t_final
                    ));
                }
            }
            DataMode::FullBoundary => {
                let diam = a * 2f64.sqrt();
                if self.t_final < diam {
                    out.push(format!(
                        "T = {} is below the diameter {diam:.4} of the support square",
                        self.t_final
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.forward_grid()?;
        if !g.satisfies_cfl() {
            return Err(QrmError::CflViolation(g.cfl_number()));
        }
        self.inverse_grid()?;
        if self.iters == 0 {
            return Err(QrmError::InvalidArgument("iteration count must be positive".into()));
        }
        NoiseSpec::new(self.gamma, 0)?;
        Ok(())
    }
}

/// Output of the data-generation half of the pipeline.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub forward_grid: SpaceTimeGrid,
    pub inverse_grid: SpaceTimeGrid,
    /// The unknown initial condition sampled on the forward grid.
    pub phantom: SpatialField,
    pub forward: Field,
    pub clean: CauchyData,
    pub noisy: CauchyData,
}

pub fn simulate(preset: &ExperimentPreset, seed: u64) -> Result<Simulation> {
    preset.validate()?;
    let forward_grid = preset.forward_grid()?;
    let inverse_grid = preset.inverse_grid()?;
    let phantom = preset.phantom.sample(&forward_grid)?;
    let zero = SpatialField::zeros(&forward_grid);
    let (phi, psi) = match preset.kind {
        ProblemKind::PhiProblem => (phantom.clone(), zero),
        ProblemKind::PsiProblem => (zero, phantom.clone()),
    };
    let problem = ForwardProblem::new(forward_grid, phi, psi, SUPPORT_SIDE)?;
    let forward = solve_forward(&problem)?;
    let clean = extract_cauchy(&forward, &inverse_grid, preset.data_mode)?;
    let noisy = add_noise(&clean, NoiseSpec::new(preset.gamma, seed)?);
    Ok(Simulation {
        forward_grid,
        inverse_grid,
        phantom,
        forward,
        clean,
        noisy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x1: f64,
    pub x2: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub rel_l2_error: f64,
    pub max_value: f64,
    pub min_value: f64,
    /// Nodal values along `x1 = 0.5`, one per row.
    pub cross_section: Vec<f64>,
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub preset: ExperimentPreset,
    pub seed: u64,
    pub weights: Weights,
    pub grid: SpaceTimeGrid,
    pub exact: SpatialField,
    pub reconstruction: SpatialField,
    pub metrics: Metrics,
    pub breakdown: FunctionalBreakdown,
    /// Functional at the zero field, the starting point.
    pub zero_breakdown: FunctionalBreakdown,
    pub history: ConvergenceHistory,
    pub warnings: Vec<String>,
}

/// Column of nodal values at `x1 = x1_value`.
pub fn cross_section(field: &SpatialField, grid: &SpaceTimeGrid, x1_value: f64) -> Result<Vec<f64>> {
    let n = grid
        .column_of(x1_value)
        .ok_or(QrmError::NodeMisaligned { x1: x1_value, x2: grid.x2_min })?;
    Ok((0..field.rows()).map(|m| field.get(m, n)).collect())
}

/// Local maxima (not below any of their eight neighbours) exceeding half the
/// global maximum, highest first.
pub fn peak_metrics(field: &SpatialField, grid: &SpaceTimeGrid) -> Vec<Peak> {
    let top = field.max();
    if !(top > 0.0) {
        return Vec::new();
    }
    let (rows, cols) = (field.rows() as isize, field.cols() as isize);
    let mut peaks = Vec::new();
    for m in 0..rows {
        for n in 0..cols {
            let v = field.get(m as usize, n as usize);
            if v <= 0.5 * top {
                continue;
            }
            let is_max = (-1..=1).all(|dm| {
                (-1..=1).all(|dn| {
                    let (a, b) = (m + dm, n + dn);
                    (dm == 0 && dn == 0)
                        || a < 0
                        || b < 0
                        || a >= rows
                        || b >= cols
                        || field.get(a as usize, b as usize) <= v
                })
            });
            if is_max {
                peaks.push(Peak {
                    x1: grid.x1(n as usize),
                    x2: grid.x2(m as usize),
                    height: v,
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
    peaks
}

pub fn relative_l2_error(approx: &SpatialField, exact: &SpatialField, grid: &SpaceTimeGrid) -> f64 {
    let denom = discrete_l2_sq(exact, grid);
    let num = discrete_l2_sq(&approx.sub(exact), grid);
    if denom == 0.0 {
        num.sqrt()
    } else {
        (num / denom).sqrt()
    }
}

pub fn compute_metrics(recon: &SpatialField, exact: &SpatialField, grid: &SpaceTimeGrid) -> Result<Metrics> {
    Ok(Metrics {
        rel_l2_error: relative_l2_error(recon, exact, grid),
        max_value: recon.max(),
        min_value: recon.min(),
        cross_section: cross_section(recon, grid, 0.5)?,
        peaks: peak_metrics(recon, grid),
    })
}

/// Extract the unknown initial condition from a space-time minimizer:
/// `u^0` for the displacement problem, `(u^1 - u^0)/h_t` for the velocity.
pub fn recovered_initial(u: &Field, kind: ProblemKind) -> SpatialField {
    match kind {
        ProblemKind::PhiProblem => u.level_field(0),
        ProblemKind::PsiProblem => initial_velocity(u),
    }
}

pub fn functional_spec(preset: &ExperimentPreset, data: CauchyData) -> Result<FunctionalSpec> {
    let grid = preset.inverse_grid()?;
    FunctionalSpec::new(
        grid,
        preset.kind,
        preset.effective_weights(),
        data,
        SpatialField::zeros(&grid),
    )
}

/// Minimize the functional for the given (noisy) data and score the result.
pub fn reconstruct(preset: &ExperimentPreset, data: CauchyData, seed: u64) -> Result<RunReport> {
    preset.validate()?;
    let spec = functional_spec(preset, data)?;
    let grid = *spec.grid();
    let (u, history) = minimize(&spec, &CgConfig::with_iters(preset.iters))?;
    let reconstruction = recovered_initial(&u, preset.kind);
    let exact = preset.phantom.sample(&grid)?;
    let metrics = compute_metrics(&reconstruction, &exact, &grid)?;
    Ok(RunReport {
        preset: preset.clone(),
        seed,
        weights: *spec.weights(),
        grid,
        exact,
        reconstruction,
        metrics,
        breakdown: evaluate(&u, &spec),
        zero_breakdown: evaluate(&Field::zeros(&grid), &spec),
        history,
        warnings: preset.warnings(),
    })
}

pub fn run_experiment(preset: &ExperimentPreset, seed: u64) -> Result<RunReport> {
    let sim = simulate(preset, seed)?;
    reconstruct(preset, sim.noisy, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub seed: u64,
    pub rel_l2_error: f64,
    pub max_value: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `(gamma, mean rel_l2_error)` in the order the levels were given.
    pub fn mean_errors(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(g, _, _)| *g == r.gamma) {
                Some(e) => {
                    e.1 += r.rel_l2_error;
                    e.2 += 1;
                }
                None => out.push((r.gamma, r.rel_l2_error, 1)),
            }
        }
        out.into_iter().map(|(g, s, c)| (g, s / c as f64)).collect()
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, e) in self.mean_errors() {
            writeln!(f, "gamma={g} mean_rel_l2_error={e}")?;
        }
        Ok(())
    }
}

/// Run every `(gamma, seed)` pair, spreading runs over up to `workers`
/// threads. Row order is `gammas`-major regardless of scheduling.
pub fn noise_sweep(
    preset: &ExperimentPreset,
    gammas: &[f64],
    seeds: &[u64],
    workers: usize,
) -> Result<SweepReport> {
    if gammas.is_empty() {
        return Err(QrmError::InvalidArgument("noise sweep needs at least one gamma".into()));
    }
    if seeds.is_empty() {
        return Err(QrmError::InvalidArgument("noise sweep needs at least one seed".into()));
    }
    let jobs: Vec<(f64, u64)> = gammas
        .iter()
        .flat_map(|&g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let run = |&(gamma, seed): &(f64, u64)| -> Result<SweepRow> {
        let p = ExperimentPreset {
            gamma,
            ..preset.clone()
        };
        let r = run_experiment(&p, seed)?;
        Ok(SweepRow {
            gamma,
            seed,
            rel_l2_error: r.metrics.rel_l2_error,
            max_value: r.metrics.max_value,
            min_value: r.metrics.min_value,
        })
    };
    let results = parallel_map(&jobs, workers, run);
    Ok(SweepReport {
        rows: results.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Map `f` over `items` on up to `workers` scoped threads, preserving order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                done.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every job ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantoms::sine_full;

    #[test]
    fn presets_are_consistent() {
        for name in PRESET_NAMES {
            let p = ExperimentPreset::named(name).unwrap();
            p.validate().unwrap();
            let g = p.forward_grid().unwrap();
            assert!(g.satisfies_cfl(), "{name}");
        }
        let t1 = ExperimentPreset::named("test1").unwrap();
        let g = t1.inverse_grid().unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (40, 40, 45));
        assert!(t1.warnings().is_empty());
        let t3 = ExperimentPreset::named("test3").unwrap();
        let g = t3.inverse_grid().unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (20, 20, 30));
        assert!((g.cfl_number() - 0.5).abs() < 1e-12);
        assert_eq!(t3.warnings().len(), 1);
        let t4 = ExperimentPreset::named("test4").unwrap();
        let g = t4.inverse_grid().unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (20, 20, 60));
        assert!(t4.warnings().is_empty());
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = ExperimentPreset::named("test9").unwrap_err().to_string();
        for name in PRESET_NAMES {
            assert!(err.contains(name));
        }
    }

    #[test]
    fn cross_sections() {
        let g = make_grid(Extent::square(0.0, 4.0, 1.0), Steps::uniform(0.05, 0.025)).unwrap();
        let f = sine_full(&g);
        assert!(cross_section(&f, &g, 0.5).unwrap().iter().all(|&v| v == 0.0));
        let quarter = cross_section(&f, &g, 0.25).unwrap();
        for (m, v) in quarter.iter().enumerate() {
            let x2 = g.x2(m);
            let expect = if x2 <= 1.0 + 1e-9 { (2.0 * std::f64::consts::PI * x2).sin() } else { 0.0 };
            assert!((v - expect).abs() < 1e-12);
        }
        assert!(cross_section(&SpatialField::zeros(&g), &g, 0.5).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(cross_section(&f, &g, 0.26), Err(QrmError::NodeMisaligned { .. })));
    }

    #[test]
    fn peaks_of_delta_pair() {
        let g = make_grid(Extent::square(0.0, 4.0, 1.0), Steps::uniform(0.1, 0.05)).unwrap();
        let f = Phantom::DeltaPair.sample(&g).unwrap();
        let peaks = peak_metrics(&f, &g);
        assert_eq!(peaks.len(), 2);
        let mut locs: Vec<(f64, f64)> = peaks.iter().map(|p| (p.x1, p.x2)).collect();
        locs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((locs[0].0 - 0.4).abs() < 1e-9 && (locs[0].1 - 0.4).abs() < 1e-9);
        assert!((locs[1].0 - 0.7).abs() < 1e-9 && (locs[1].1 - 0.7).abs() < 1e-9);
        for p in peaks {
            assert!((p.height - 75.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_rejects_empty_inputs() {
        let p = ExperimentPreset::named("test4").unwrap();
        assert!(noise_sweep(&p, &[], &[1], 1).is_err());
        assert!(noise_sweep(&p, &[0.1], &[], 1).is_err());
    }

    #[test]
    fn parallel_map_preserves_order() {
        let items: Vec<u64> = (0..37).collect();
        let out = parallel_map(&items, 4, |x| x * x);
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
    }
}
