//! Reproducible runs: a manifest names a config, inputs, horizon and seed;
//! executing it writes the run's artifacts to a directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::equivalence::{blocking_premise, Premise};
use crate::grid::{
    classify, parse_config, run_grid, ConfigParseError, GridConfig, GridError, GridRun, Inputs,
    Regime, Trace,
};
use crate::schedule::ExchangeSchedule;
use crate::Tick;

pub const TOOL_VERSION: &str = concat!("gridsim ", env!("CARGO_PKG_VERSION"));

pub const TRACE_FILE: &str = "trace.txt";
pub const SPACE_FILE: &str = "space.txt";
pub const OUTPUTS_FILE: &str = "outputs.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunManifest {
    pub config: PathBuf,
    pub inputs: Inputs,
    /// Falls back to the config's `horizon` key.
    pub horizon: Option<Tick>,
    /// Replaces the seed of a random exchange schedule.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot access {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ConfigParseError),
    #[error("no horizon given and the config sets none")]
    NoHorizon,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug)]
pub struct RunReport {
    pub regime: Regime,
    /// `None` when the grid can be flattened.
    pub blocking_premise: Option<Premise>,
    pub run: GridRun,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<GridConfig, ManifestError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text, path)?)
}

/// Applies a manifest seed to a random schedule; other schedules have no
/// randomness and are left alone.
pub fn apply_seed(config: &mut GridConfig, seed: Option<u64>) {
    if let (Some(seed), ExchangeSchedule::Random { .. }) = (seed, &config.schedule) {
        config.schedule = ExchangeSchedule::Random { seed };
    }
}

impl RunManifest {
    pub fn to_text(&self, horizon: Tick) -> String {
        let mut out = String::new();
        writeln!(out, "tool = {TOOL_VERSION}").unwrap();
        writeln!(out, "config = {}", self.config.display()).unwrap();
        writeln!(out, "horizon = {horizon}").unwrap();
        match self.seed {
            Some(s) => writeln!(out, "seed = {s}").unwrap(),
            None => writeln!(out, "seed = none").unwrap(),
        }
        for (id, word) in &self.inputs {
            writeln!(out, "input {id} = {word}").unwrap();
        }
        writeln!(out, "trace = {TRACE_FILE}").unwrap();
        writeln!(out, "space = {SPACE_FILE}").unwrap();
        writeln!(out, "outputs = {OUTPUTS_FILE}").unwrap();
        out
    }
}

/// One `ID TAPE WORD` line per output tape.
pub fn outputs_text(run: &GridRun) -> String {
    let mut out = String::new();
    for (id, tapes) in &run.outputs {
        for (k, word) in tapes.iter().enumerate() {
            if word.is_empty() {
                writeln!(out, "{id} {k}").unwrap();
            } else {
                writeln!(out, "{id} {k} {word}").unwrap();
            }
        }
    }
    out
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), ManifestError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))
}

fn write_trace(dir: &Path, trace: &Trace) -> Result<(), ManifestError> {
    write_file(dir, TRACE_FILE, &trace.to_text())
}

/// Loads, runs and records. On an unresolved conflict the partial trace
/// is still written before the error is returned.
pub fn execute(manifest: &RunManifest) -> Result<RunReport, ManifestError> {
    let mut config = load_config(&manifest.config)?;
    apply_seed(&mut config, manifest.seed);
    let horizon = manifest
        .horizon
        .or(config.horizon)
        .ok_or(ManifestError::NoHorizon)?;
    fs::create_dir_all(&manifest.out_dir).map_err(io_err(&manifest.out_dir))?;
    write_file(&manifest.out_dir, MANIFEST_FILE, &manifest.to_text(horizon))?;

    let run = match run_grid(&config, &manifest.inputs, horizon) {
        Ok(run) => run,
        Err(e) => {
            if let GridError::UnresolvedConflict { trace, .. } = &e {
                write_trace(&manifest.out_dir, trace)?;
            }
            return Err(e.into());
        }
    };
    write_trace(&manifest.out_dir, &run.trace)?;
    write_file(
        &manifest.out_dir,
        SPACE_FILE,
        &format!("{}\n", run.space.contents()),
    )?;
    write_file(&manifest.out_dir, OUTPUTS_FILE, &outputs_text(&run))?;
    Ok(RunReport {
        regime: classify(&config),
        blocking_premise: blocking_premise(&config),
        run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::alternating_writers;
    use crate::grid::print_config;

    #[test]
    fn artifacts_are_stable() {
        let dir = std::env::temp_dir().join(format!("gridsim-manifest-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("pair.cfg");
        fs::write(&cfg_path, print_config(&alternating_writers())).unwrap();
        let manifest = |out: &str| RunManifest {
            config: cfg_path.clone(),
            inputs: Inputs::new(),
            horizon: Some(8),
            seed: None,
            out_dir: dir.join(out),
        };
        let report = execute(&manifest("a")).unwrap();
        assert_eq!(report.regime, Regime::ImplicitlyProcedural);
        assert_eq!(report.blocking_premise, Some(Premise::MissingController));
        execute(&manifest("b")).unwrap();
        for f in [TRACE_FILE, SPACE_FILE, OUTPUTS_FILE, MANIFEST_FILE] {
            let a = fs::read(dir.join("a").join(f)).unwrap();
            let b = fs::read(dir.join("b").join(f)).unwrap();
            assert_eq!(a, b, "{f}");
            assert!(a.ends_with(b"\n") || a.is_empty(), "{f}");
        }
        assert_eq!(
            fs::read_to_string(dir.join("a").join(SPACE_FILE)).unwrap(),
            "10101010\n"
        );
        assert_eq!(
            fs::read_to_string(dir.join("a").join(OUTPUTS_FILE)).unwrap(),
            ""
        );
        let no_horizon = RunManifest {
            horizon: None,
            ..manifest("c")
        };
        assert!(matches!(
            execute(&no_horizon),
            Err(ManifestError::NoHorizon)
        ));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn seed_only_touches_random_schedules() {
        let mut cfg = alternating_writers();
        apply_seed(&mut cfg, Some(3));
        assert_eq!(cfg.schedule, ExchangeSchedule::Always);
        cfg.schedule = ExchangeSchedule::Random { seed: 1 };
        apply_seed(&mut cfg, Some(3));
        assert_eq!(cfg.schedule, ExchangeSchedule::Random { seed: 3 });
    }
}
