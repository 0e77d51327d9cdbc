use std::path::{Path, PathBuf};

use qrm::experiments::{RunReport, SweepReport};
use qrm::forward::discrete_energy;
use qrm::{noise_sweep, reconstruct, simulate, Simulation};

use crate::config::{data_mode_name, fmt_f64, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{
    history_csv, read_cauchy, read_text, verify_manifest, write_atomic, write_cauchy, write_manifest, FieldFile,
    Summary,
};

pub const PHANTOM_FILE: &str = "phantom.csv";
pub const CLEAN_DIR: &str = "clean";
pub const NOISY_DIR: &str = "noisy";

fn forward_summary(sim: &Simulation) -> Summary {
    let g = &sim.forward_grid;
    let mut s = Summary::default();
    for (k, v) in [
        ("x1_min", g.x1_min),
        ("x1_max", g.x1_max),
        ("x2_min", g.x2_min),
        ("x2_max", g.x2_max),
        ("t_final", g.t_final),
        ("h_x1", g.h_x1),
        ("h_x2", g.h_x2),
        ("h_t", g.h_t),
        ("cfl_number", g.cfl_number()),
    ] {
        s.put_f64(k, v);
    }
    s.put("nx", g.nx);
    s.put("ny", g.ny);
    s.put("nt", g.nt);
    let max_abs = sim.forward.values().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    s.put_f64("max_abs_u", max_abs);
    s.put_f64("energy_first", discrete_energy(&sim.forward, 0));
    s.put_f64("energy_last", discrete_energy(&sim.forward, g.nt - 1));
    s.put_f64("clean_data_norm_sq", sim.clean.norm_sq());
    s.put_f64("noisy_data_norm_sq", sim.noisy.norm_sq());
    s
}

/// Phantom, forward summary and clean and noisy boundary data under `out`.
fn write_simulation(cfg: &RunConfig, out: &Path) -> Result<()> {
    let p = &cfg.preset;
    let sim = simulate(p, cfg.seed)?;
    let phantom = p.phantom.sample(&sim.inverse_grid)?;
    write_atomic(&out.join("config.txt"), &cfg.to_text(false))?;
    FieldFile::from_field(&phantom, &sim.inverse_grid).write(&out.join(PHANTOM_FILE))?;
    write_atomic(&out.join("forward_summary.txt"), &forward_summary(&sim).to_text())?;
    write_cauchy(&out.join(CLEAN_DIR), &sim.clean, &sim.inverse_grid)?;
    write_cauchy(&out.join(NOISY_DIR), &sim.noisy, &sim.inverse_grid)?;
    Ok(())
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<PathBuf> {
    single_level(cfg)?;
    let out = cfg.out_dir()?;
    write_simulation(cfg, out)?;
    write_manifest(out)?;
    Ok(out.to_path_buf())
}

/// Single runs use `preset.gamma`; a preset's sweep list is not an error.
fn single_level(cfg: &RunConfig) -> Result<()> {
    match cfg.preset.noise_levels.len() {
        n if n > 1 && cfg.noise_explicit => Err(CliError::config(format!("this command takes one noise level, got {n}"))),
        _ => Ok(()),
    }
}

pub fn run_summary(cfg: &RunConfig, r: &RunReport) -> Summary {
    let p = &r.preset;
    let mut s = Summary::default();
    s.put("test", &p.name);
    s.put("phantom", p.phantom.name());
    s.put("problem", p.kind.name());
    s.put("data_mode", data_mode_name(p.data_mode));
    s.put("seed", cfg.seed);
    s.put_f64("noise", p.gamma);
    s.put("ablate_init_penalty", p.ablate_init_penalty);
    s.put_f64("epsilon", r.weights.epsilon);
    s.put_f64("w_trace", r.weights.w_trace);
    s.put_f64("w_flux", r.weights.w_flux);
    s.put_f64("w_init", r.weights.w_init);
    s.put("iters", p.iters);
    s.put("iterations_run", r.history.iterations());
    s.put("nx", r.grid.nx);
    s.put("ny", r.grid.ny);
    s.put("nt", r.grid.nt);
    s.put_f64("h", p.h);
    s.put_f64("h_t", p.h_t);
    s.put_f64("t_final", p.t_final);
    s.put_f64("J_initial", r.zero_breakdown.total);
    s.put_f64("J_final", r.breakdown.total);
    s.put_f64("residual", r.breakdown.residual);
    s.put_f64("trace_misfit", r.breakdown.trace_misfit);
    s.put_f64("flux_misfit", r.breakdown.flux_misfit);
    s.put_f64("init_penalty", r.breakdown.init_penalty);
    s.put_f64("regularization", r.breakdown.regularization);
    s.put_f64("rel_l2_error", r.metrics.rel_l2_error);
    s.put_f64("max_value", r.metrics.max_value);
    s.put_f64("min_value", r.metrics.min_value);
    s.put("peak_count", r.metrics.peaks.len());
    for w in &r.warnings {
        s.put("warning", w);
    }
    s
}

fn write_report(cfg: &RunConfig, r: &RunReport, out: &Path) -> Result<()> {
    FieldFile::from_field(&r.reconstruction, &r.grid).write(&out.join("reconstruction.csv"))?;
    write_atomic(&out.join("history.csv"), &history_csv(&r.history))?;
    let m = &r.metrics;
    let metrics = format!(
        "metric,value\nrel_l2_error,{}\nmax_value,{}\nmin_value,{}\npeak_count,{}\n",
        fmt_f64(m.rel_l2_error),
        fmt_f64(m.max_value),
        fmt_f64(m.min_value),
        m.peaks.len()
    );
    write_atomic(&out.join("metrics.csv"), &metrics)?;
    let mut section = String::from("x2,value\n");
    for (row, v) in m.cross_section.iter().enumerate() {
        section.push_str(&format!("{},{}\n", fmt_f64(r.grid.x2(row)), fmt_f64(*v)));
    }
    write_atomic(&out.join("cross_section.csv"), &section)?;
    let mut peaks = String::from("x1,x2,height\n");
    for pk in &m.peaks {
        peaks.push_str(&format!("{},{},{}\n", fmt_f64(pk.x1), fmt_f64(pk.x2), fmt_f64(pk.height)));
    }
    write_atomic(&out.join("peaks.csv"), &peaks)?;
    write_atomic(&out.join("summary.txt"), &run_summary(cfg, r).to_text())?;
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

pub fn reconstruct_cmd(cfg: &RunConfig, data_dir: &Path) -> Result<PathBuf> {
    single_level(cfg)?;
    let out = cfg.out_dir()?;
    if same_dir(out, data_dir) {
        return Err(CliError::config("output directory must differ from the data directory"));
    }
    let grid = cfg.preset.inverse_grid()?;
    let data = read_cauchy(&data_dir.join(NOISY_DIR), &grid)?;
    let phantom_path = data_dir.join(PHANTOM_FILE);
    let stored = FieldFile::read(&phantom_path)?.into_field(&grid, &phantom_path)?;
    if stored != cfg.preset.phantom.sample(&grid)? {
        return Err(CliError::data(format!(
            "{} does not hold the configured phantom '{}'",
            phantom_path.display(),
            cfg.preset.phantom
        )));
    }
    let report = reconstruct(&cfg.preset, data, cfg.seed)?;
    write_atomic(&out.join("config.txt"), &cfg.to_text(false))?;
    write_report(cfg, &report, out)?;
    write_manifest(out)?;
    Ok(out.to_path_buf())
}

/// Simulate into `<out>/data`, reconstruct into `<out>`.
pub fn run_test_cmd(cfg: &RunConfig) -> Result<PathBuf> {
    single_level(cfg)?;
    let out = cfg.out_dir()?;
    let data = out.join("data");
    write_simulation(cfg, &data)?;
    write_manifest(&data)?;
    let grid = cfg.preset.inverse_grid()?;
    let noisy = read_cauchy(&data.join(NOISY_DIR), &grid)?;
    let report = reconstruct(&cfg.preset, noisy, cfg.seed)?;
    write_atomic(&out.join("config.txt"), &cfg.to_text(false))?;
    write_report(cfg, &report, out)?;
    write_manifest(out)?;
    Ok(out.to_path_buf())
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut s = String::from("gamma,seed,rel_l2_error,max,min\n");
    for r in &report.rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(r.gamma),
            r.seed,
            fmt_f64(r.rel_l2_error),
            fmt_f64(r.max_value),
            fmt_f64(r.min_value)
        ));
    }
    s
}

pub fn sweep_cmd(cfg: &RunConfig, workers: usize) -> Result<PathBuf> {
    let out = cfg.out_dir()?;
    let report = noise_sweep(&cfg.preset, &cfg.preset.noise_levels, &cfg.seed_list(), workers)?;
    write_atomic(&out.join("config.txt"), &cfg.to_text(true))?;
    write_atomic(&out.join("sweep.csv"), &sweep_csv(&report))?;
    let mut s = Summary::default();
    s.put("test", &cfg.preset.name);
    s.put("seeds", cfg.seeds);
    s.put("first_seed", cfg.seed);
    for (g, e) in report.mean_errors() {
        s.put(&format!("mean_rel_l2_error@{}", fmt_f64(g)), fmt_f64(e));
    }
    write_atomic(&out.join("sweep_summary.txt"), &s.to_text())?;
    write_manifest(out)?;
    Ok(out.to_path_buf())
}

/// Human-readable digest of a run or sweep directory, after verifying its
/// manifest.
pub fn report_text(dir: &Path) -> Result<String> {
    let verified = verify_manifest(dir)?;
    let mut text = format!("verified artifacts: {verified}\n");
    let summary = dir.join("summary.txt");
    let sweep = dir.join("sweep_summary.txt");
    if summary.exists() {
        let s = Summary::parse(&read_text(&summary)?, &summary)?;
        let get = |k: &str| s.get(k).unwrap_or("?").to_string();
        text.push_str(&format!(
            "test {} ({} problem, phantom {}), seed {}, noise {}\n",
            get("test"),
            get("problem"),
            get("phantom"),
            get("seed"),
            get("noise")
        ));
        if get("ablate_init_penalty") == "true" {
            text.push_str("initial-condition penalty: ablated\n");
        }
        text.push_str(&format!(
            "iterations {} of {}, J {} -> {}\n",
            get("iterations_run"),
            get("iters"),
            get("J_initial"),
            get("J_final")
        ));
        text.push_str(&format!(
            "rel_l2_error {}, max {}, min {}\n",
            get("rel_l2_error"),
            get("max_value"),
            get("min_value")
        ));
        for (k, v) in &s.pairs {
            if k == "warning" {
                text.push_str(&format!("warning: {v}\n"));
            }
        }
    } else if sweep.exists() {
        let s = Summary::parse(&read_text(&sweep)?, &sweep)?;
        for (k, v) in &s.pairs {
            text.push_str(&format!("{k}: {v}\n"));
        }
    } else {
        return Err(CliError::data(format!(
            "{} holds neither summary.txt nor sweep_summary.txt",
            dir.display()
        )));
    }
    Ok(text)
}

pub fn report_cmd(dir: &Path, out: Option<&Path>) -> Result<String> {
    let text = report_text(dir)?;
    if let Some(out) = out {
        if same_dir(out, dir) {
            return Err(CliError::config("output directory must differ from the reported directory"));
        }
        write_atomic(&out.join("report.txt"), &text)?;
        write_manifest(out)?;
    }
    Ok(text)
}

/// Worker threads for sweeps: `QRM_THREADS` if set, else the machine's
/// available parallelism.
pub fn worker_count(env: Option<&str>) -> Result<usize> {
    match env {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::config(format!("QRM_THREADS must be a positive integer, got '{v}'"))),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
