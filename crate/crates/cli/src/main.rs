use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gridsim::constructions::{construct, ConstructionError, CONSTRUCTIONS};
use gridsim::equivalence::{
    blocking_premise, check_equivalence, enumerate_outputs, flatten, EnumerationError, Equivalence,
    FlattenError, LengthLex,
};
use gridsim::grid::{
    classify, first_divergence, print_config, ConfigParseError, GridError, Inputs,
};
use gridsim::machine::{format, ParseError, ValidationReport};
use gridsim::manifest::{apply_seed, execute, load_config, ManifestError, RunManifest};

#[derive(Parser)]
#[command(
    name = "gridsim",
    version,
    about = "Simulate grids of interacting Turing machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid config and write trace, space and outputs.
    Run {
        config: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a member's input, as ID=WORD. Repeatable.
        #[arg(long = "input", value_parser = parse_input)]
        inputs: Vec<(String, String)>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print a built-in construction as a config, optionally running it.
    Construct {
        name: String,
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Write the config to this file instead of standard output.
        #[arg(long)]
        write: Option<PathBuf>,
        /// Also run it, writing artifacts and the config to --out-dir.
        #[arg(long)]
        run: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print the interaction regime of a config.
    Classify { config: PathBuf },
    /// Report whether a config can be flattened into one sequential run.
    Flatten { config: PathBuf },
    /// Run a config and its flattened form and compare the results.
    CheckEq {
        config: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "input", value_parser = parse_input)]
        inputs: Vec<(String, String)>,
    },
    /// Dovetail a machine over its inputs and print the certificate.
    Enumerate {
        machine: PathBuf,
        #[arg(long)]
        budget: u64,
        /// Input symbols, in order, for the length-lexicographic order.
        #[arg(long, default_value = "01")]
        alphabet: String,
        /// Admit at most this many inputs.
        #[arg(long)]
        inputs: Option<usize>,
    },
    /// Compare two trace files and report the first differing line.
    DiffTraces { left: PathBuf, right: PathBuf },
}

fn parse_input(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(id, word)| (id.to_string(), word.to_string()))
        .ok_or_else(|| format!("expected ID=WORD, got `{s}`"))
}

const DIVERGENCE: u8 = 4;

/// Exit code and error kind for the error line.
fn classify_error(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ManifestError>() {
            return match e {
                ManifestError::Io { .. } | ManifestError::NoHorizon => (1, "usage"),
                ManifestError::Parse(_) => (1, "parse"),
                ManifestError::Grid(g) => grid_error_code(g),
            };
        }
        if let Some(g) = cause.downcast_ref::<GridError>() {
            return grid_error_code(g);
        }
        if cause.is::<ConfigParseError>() || cause.is::<ParseError>() {
            return (1, "parse");
        }
        if cause.is::<ValidationReport>() || cause.is::<EnumerationError>() {
            return (2, "validation");
        }
        if let Some(e) = cause.downcast_ref::<FlattenError>() {
            return match e {
                FlattenError::NotFlattenable(_) | FlattenError::Config(_) => (2, "validation"),
            };
        }
        if let Some(e) = cause.downcast_ref::<ConstructionError>() {
            return match e {
                ConstructionError::Unknown(_) | ConstructionError::OracleRequired(_) => {
                    (1, "usage")
                }
                _ => (2, "validation"),
            };
        }
        if cause.is::<std::io::Error>() {
            return (1, "usage");
        }
    }
    (1, "usage")
}

fn grid_error_code(e: &GridError) -> (u8, &'static str) {
    match e {
        GridError::UnresolvedConflict { .. } => (3, "conflict"),
        GridError::Config(_) | GridError::Directive { .. } => (2, "validation"),
    }
}

fn inputs_map(pairs: Vec<(String, String)>) -> Inputs {
    pairs.into_iter().collect()
}

fn cmd_run(manifest: RunManifest) -> Result<u8> {
    let report = execute(&manifest)?;
    println!("regime: {}", report.regime);
    match report.blocking_premise {
        None => println!("flattenable: yes"),
        Some(p) => println!("flattenable: no ({p})"),
    }
    println!("space: {}", report.run.space.contents());
    println!("artifacts: {}", manifest.out_dir.display());
    Ok(0)
}

fn cmd_construct(
    name: &str,
    oracle: Option<&str>,
    horizon: Option<u64>,
    write: Option<&Path>,
    run: bool,
    out_dir: PathBuf,
) -> Result<u8> {
    let mut config = construct(name, oracle, horizon.unwrap_or(0))?;
    config.horizon = horizon;
    let text = print_config(&config);
    match write {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None if !run => print!("{text}"),
        None => {}
    }
    if run {
        if horizon.is_none() {
            bail!("--run needs --horizon");
        }
        fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let path = out_dir.join("grid.cfg");
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        return cmd_run(RunManifest {
            config: path,
            inputs: Inputs::new(),
            horizon,
            seed: None,
            out_dir,
        });
    }
    Ok(0)
}

fn cmd_check_eq(
    config: &Path,
    horizon: Option<u64>,
    seed: Option<u64>,
    inputs: Inputs,
) -> Result<u8> {
    let mut cfg = load_config(config)?;
    apply_seed(&mut cfg, seed);
    let horizon = horizon.or(cfg.horizon).ok_or(ManifestError::NoHorizon)?;
    match check_equivalence(&cfg, &inputs, horizon)? {
        Equivalence::Equal => {
            println!("equal");
            Ok(0)
        }
        Equivalence::Divergence(what) => {
            println!("divergence: {what}");
            Ok(DIVERGENCE)
        }
    }
}

fn cmd_enumerate(machine: &Path, budget: u64, alphabet: &str, limit: Option<usize>) -> Result<u8> {
    let text =
        fs::read_to_string(machine).with_context(|| format!("reading {}", machine.display()))?;
    let spec = format::parse(&text).with_context(|| machine.display().to_string())?;
    let order = LengthLex::new(&alphabet.chars().collect::<Vec<_>>());
    let cert = enumerate_outputs(&spec, &order, budget, limit)?;
    print!("{}", cert.to_text());
    Ok(0)
}

fn cmd_diff(left: &Path, right: &Path) -> Result<u8> {
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    match first_divergence(&read(left)?, &read(right)?) {
        None => {
            println!("identical");
            Ok(0)
        }
        Some(d) => {
            println!("first divergence at line {}", d.line);
            println!("< {}", d.left.as_deref().unwrap_or("(end of trace)"));
            println!("> {}", d.right.as_deref().unwrap_or("(end of trace)"));
            Ok(DIVERGENCE)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run {
            config,
            horizon,
            seed,
            inputs,
            out_dir,
        } => cmd_run(RunManifest {
            config,
            inputs: inputs_map(inputs),
            horizon,
            seed,
            out_dir,
        }),
        Command::Construct {
            name,
            oracle,
            horizon,
            write,
            run,
            out_dir,
        } => {
            if !CONSTRUCTIONS.contains(&name.as_str()) {
                bail!(ConstructionError::Unknown(format!(
                    "{name} (known: {})",
                    CONSTRUCTIONS.join(", ")
                )));
            }
            cmd_construct(
                &name,
                oracle.as_deref(),
                horizon,
                write.as_deref(),
                run,
                out_dir,
            )
        }
        Command::Classify { config } => {
            println!("{}", classify(&load_config(&config)?));
            Ok(0)
        }
        Command::Flatten { config } => {
            let cfg = load_config(&config)?;
            match blocking_premise(&cfg) {
                Some(p) => println!("not flattenable: {p}"),
                None => {
                    flatten(&cfg)?;
                    println!("flattenable");
                }
            }
            Ok(0)
        }
        Command::CheckEq {
            config,
            horizon,
            seed,
            inputs,
        } => cmd_check_eq(&config, horizon, seed, inputs_map(inputs)),
        Command::Enumerate {
            machine,
            budget,
            alphabet,
            inputs,
        } => cmd_enumerate(&machine, budget, &alphabet, inputs),
        Command::DiffTraces { left, right } => cmd_diff(&left, &right),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let (code, kind) = classify_error(&err);
            eprintln!("error: {kind}: {err:#}");
            ExitCode::from(code)
        }
    }
}
