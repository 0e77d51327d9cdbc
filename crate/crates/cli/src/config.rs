//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. `noise` may repeat, and each of
//! its values may itself be a comma-separated list; every other key may
//! appear once. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use qrm::{DataMode, ExperimentPreset, Phantom, ProblemKind};

use crate::error::{CliError, Location, Result};

pub const KEYS: [&str; 18] = [
    "test",
    "phantom",
    "problem",
    "data_mode",
    "domain_side",
    "t_final",
    "h",
    "h_t",
    "noise",
    "seed",
    "seeds",
    "ablate_init_penalty",
    "epsilon",
    "w_trace",
    "w_flux",
    "w_init",
    "iters",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub at: Option<Location>,
}

/// Settings given explicitly, in the order they were read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    entries: Vec<Entry>,
}

impl Settings {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut settings = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let at = Location::line(path, i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config_at(at, format!("expected 'key = value', got '{line}'")));
            };
            settings.push(key.trim(), value.trim(), Some(at))?;
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Add one setting; `at` is `None` for command-line flags.
    pub fn push(&mut self, key: &str, value: &str, at: Option<Location>) -> Result<()> {
        let err = |msg: String| match &at {
            Some(a) => CliError::config_at(a.clone(), msg),
            None => CliError::config(msg),
        };
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(err(format!("missing value for '{key}'")));
        }
        if key != "noise" && at.is_some() && self.entries.iter().any(|e| e.key == key && e.at.is_some()) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        self.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            at,
        });
        Ok(())
    }

    /// Later entries win: command-line flags are pushed after the file.
    fn last(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn extend(&mut self, other: Settings) {
        self.entries.extend(other.entries);
    }
}

/// A fully resolved run: preset plus everything a command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: ExperimentPreset,
    pub seed: u64,
    /// Number of consecutive seeds, starting at `seed`, used by a sweep.
    pub seeds: usize,
    pub out: Option<PathBuf>,
    /// Whether `noise` was set, as opposed to taken from the preset.
    pub noise_explicit: bool,
}

fn parse_value<T: std::str::FromStr>(e: &Entry, what: &str) -> Result<T> {
    e.value.parse().map_err(|_| {
        let msg = format!("'{}' expects {what}, got '{}'", e.key, e.value);
        match &e.at {
            Some(a) => CliError::config_at(a.clone(), msg),
            None => CliError::config(msg),
        }
    })
}

fn entry_error(e: &Entry, msg: String) -> CliError {
    match &e.at {
        Some(a) => CliError::config_at(a.clone(), msg),
        None => CliError::config(msg),
    }
}

pub fn parse_noise_list(e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = s
                .parse()
                .map_err(|_| entry_error(e, format!("'noise' expects numbers, got '{s}'")))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(entry_error(e, format!("noise level must be >= 0, got {s}")));
            }
            Ok(v)
        })
        .collect()
}

pub fn data_mode_name(mode: DataMode) -> &'static str {
    match mode {
        DataMode::LateralPair => "lateral-pair",
        DataMode::FullBoundary => "full-boundary",
    }
}

impl RunConfig {
    /// Resolve settings on top of the named preset (`test`, default `test1`).
    pub fn resolve(settings: &Settings) -> Result<Self> {
        let name = settings.last("test").map_or("test1", |e| e.value.as_str());
        let mut p = ExperimentPreset::named(name).map_err(|e| match settings.last("test") {
            Some(entry) => entry_error(entry, e.to_string()),
            None => CliError::config(e.to_string()),
        })?;

        // The problem kind selects the default weights, so it goes first and
        // explicit weights are applied after it.
        if let Some(e) = settings.last("problem") {
            p.kind = ProblemKind::from_name(&e.value)
                .ok_or_else(|| entry_error(e, format!("problem must be 'phi' or 'psi', got '{}'", e.value)))?;
            p.weights = qrm::Weights::balanced(p.kind);
        }
        if let Some(e) = settings.last("phantom") {
            p.phantom = e.value.parse::<Phantom>().map_err(|err| entry_error(e, err.to_string()))?;
        }
        if let Some(e) = settings.last("data_mode") {
            p.data_mode = match e.value.as_str() {
                "lateral-pair" => DataMode::LateralPair,
                "full-boundary" => DataMode::FullBoundary,
                other => {
                    return Err(entry_error(
                        e,
                        format!("data_mode must be 'lateral-pair' or 'full-boundary', got '{other}'"),
                    ))
                }
            };
        }
        for (key, slot) in [
            ("domain_side", &mut p.domain_side),
            ("t_final", &mut p.t_final),
            ("h", &mut p.h),
            ("h_t", &mut p.h_t),
            ("epsilon", &mut p.weights.epsilon),
            ("w_trace", &mut p.weights.w_trace),
            ("w_flux", &mut p.weights.w_flux),
            ("w_init", &mut p.weights.w_init),
        ] {
            if let Some(e) = settings.last(key) {
                *slot = parse_value(e, "a number")?;
            }
        }
        if let Some(e) = settings.last("iters") {
            p.iters = parse_value(e, "a positive integer")?;
        }
        if let Some(e) = settings.last("ablate_init_penalty") {
            p.ablate_init_penalty = parse_value(e, "'true' or 'false'")?;
        }

        // Flags replace the file's noise list rather than appending to it.
        let noise: Vec<&Entry> = settings.entries.iter().filter(|e| e.key == "noise").collect();
        let from_flags = noise.iter().any(|e| e.at.is_none());
        let mut levels = Vec::new();
        for e in noise.into_iter().filter(|e| !from_flags || e.at.is_none()) {
            levels.extend(parse_noise_list(e)?);
        }
        let noise_explicit = !levels.is_empty();
        if noise_explicit {
            p.gamma = levels[0];
            p.noise_levels = levels;
        }

        let seed: u64 = match settings.last("seed") {
            Some(e) => parse_value(e, "an unsigned integer")?,
            None => 1,
        };
        let seeds = match settings.last("seeds") {
            Some(e) => {
                let n: usize = parse_value(e, "a positive integer")?;
                if n == 0 {
                    return Err(entry_error(e, "'seeds' must be at least 1".into()));
                }
                if seed.checked_add(n as u64 - 1).is_none() {
                    return Err(entry_error(e, "seed range overflows u64".into()));
                }
                n
            }
            None => 5,
        };
        let out = settings.last("out").map(|e| PathBuf::from(&e.value));
        let config = RunConfig {
            preset: p,
            seed,
            seeds,
            out,
            noise_explicit,
        };
        config.validate()?;
        Ok(config)
    }

    /// Everything that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let p = &self.preset;
        p.validate()?;
        if p.noise_levels.is_empty() {
            return Err(CliError::config("at least one noise level is required"));
        }
        let grid = p.inverse_grid()?;
        // Building an empty functional checks the weights and grid size.
        qrm::FunctionalSpec::new(
            grid,
            p.kind,
            p.effective_weights(),
            qrm::CauchyData::zeros(&grid),
            qrm::SpatialField::zeros(&grid),
        )?;
        p.phantom.sample(&grid)?;
        p.phantom.sample(&p.forward_grid()?)?;
        Ok(())
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::config("no output directory: pass --out or set 'out'"))
    }

    /// Seeds of a sweep: `seed, seed + 1, ...`.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    /// A config file that resolves back to this run. `noise` holds either
    /// the single run level or every sweep level.
    pub fn to_text(&self, sweep: bool) -> String {
        let p = &self.preset;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("test", p.name.clone());
        kv("phantom", p.phantom.name().into());
        kv("problem", p.kind.name().into());
        kv("data_mode", data_mode_name(p.data_mode).into());
        kv("domain_side", fmt_f64(p.domain_side));
        kv("t_final", fmt_f64(p.t_final));
        kv("h", fmt_f64(p.h));
        kv("h_t", fmt_f64(p.h_t));
        if sweep {
            for g in &p.noise_levels {
                kv("noise", fmt_f64(*g));
            }
            kv("seeds", self.seeds.to_string());
        } else {
            kv("noise", fmt_f64(p.gamma));
        }
        kv("seed", self.seed.to_string());
        kv("ablate_init_penalty", p.ablate_init_penalty.to_string());
        kv("epsilon", fmt_f64(p.weights.epsilon));
        kv("w_trace", fmt_f64(p.weights.w_trace));
        kv("w_flux", fmt_f64(p.weights.w_flux));
        kv("w_init", fmt_f64(p.weights.w_init));
        kv("iters", p.iters.to_string());
        s
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Settings> {
        Settings::parse(text, Path::new("run.cfg"))
    }

    #[test]
    fn defaults_to_test1() {
        let c = RunConfig::resolve(&Settings::default()).unwrap();
        assert_eq!(c.preset, ExperimentPreset::named("test1").unwrap());
        assert_eq!((c.seed, c.seeds, c.out), (1, 5, None));
    }

    #[test]
    fn keys_and_lists() {
        let s = parse("# comment\ntest = test4\nnoise = 0.05, 0.25\nnoise = 0.5\nseed = 7 # trailing\nw_flux=2\n").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.preset.name, "test4");
        assert_eq!(c.preset.noise_levels, vec![0.05, 0.25, 0.5]);
        assert_eq!(c.preset.gamma, 0.05);
        assert_eq!(c.seed, 7);
        assert_eq!(c.preset.weights.w_flux, 2.0);
        assert_eq!(c.preset.weights.w_trace, 1000.0);
    }

    #[test]
    fn flags_override_file() {
        let mut s = parse("noise = 0.05\nnoise = 0.25\niters = 10\n").unwrap();
        s.push("noise", "0.5", None).unwrap();
        s.push("iters", "20", None).unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.preset.noise_levels, vec![0.5]);
        assert_eq!(c.preset.iters, 20);
    }

    #[test]
    fn problem_key_resets_weights() {
        let s = parse("problem = psi\nw_flux = 3\n").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.preset.kind, ProblemKind::PsiProblem);
        assert_eq!(c.preset.weights.w_init, 100.0);
        assert_eq!(c.preset.weights.w_trace, 1.0);
        assert_eq!(c.preset.weights.w_flux, 3.0);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("h = 0.1\nbogus = 1\n", 2, "unknown key"),
            ("seed = 1\nseed = 2\n", 2, "duplicate"),
            ("\n\niters = ten\n", 3, "positive integer"),
            ("noise = -0.1\n", 1, ">= 0"),
            ("just words\n", 1, "key = value"),
            ("test = test9\n", 1, "test1, test2"),
            ("seeds = 0\n", 1, "at least 1"),
        ];
        for (text, line, needle) in cases {
            let err = parse(text).and_then(|s| RunConfig::resolve(&s)).unwrap_err();
            match &err {
                CliError::Config { at: Some(at), message } => {
                    assert_eq!(at.line, Some(line), "{text}");
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_physics_is_a_config_error() {
        let s = parse("h_t = 0.2\n").unwrap();
        let err = RunConfig::resolve(&s).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let s = parse("h = 0.3\n").unwrap();
        assert_eq!(RunConfig::resolve(&s).unwrap_err().exit_code(), 2);
        let s = parse("epsilon = 0\n").unwrap();
        assert_eq!(RunConfig::resolve(&s).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn text_round_trips() {
        let s = parse("test = test5\nnoise = 0.05\nnoise = 0.25\nseeds = 3\nseed = 11\nablate_init_penalty = true\nw_flux = 0.3\n").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        for sweep in [false, true] {
            let back = RunConfig::resolve(&parse(&c.to_text(sweep)).unwrap()).unwrap();
            let mut expect = c.clone();
            if !sweep {
                expect.preset.noise_levels = vec![c.preset.gamma];
                expect.seeds = 5;
            }
            assert_eq!(back, expect);
        }
    }
}
