//! `thorpe-lab`: classify curvature models, run the identity suite, decompose
//! double forms and derive hyper-identity constants. JSON in, JSON out.
//!
//! Exit codes: 0 success, 1 identity failure, 2 unreadable or malformed input,
//! 3 input rejected by the library.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use thorpe_lab::basis::set_dimension_cap;
use thorpe_lab::{
    classify, constant_report, decomposition_report, realize, run_suite, CurvatureModel, DoubleForm, SuiteConfig,
};

#[derive(Parser)]
#[command(name = "thorpe-lab", version, about = "Double-form algebra and curvature invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON input file, or `-` for stdin.
    #[arg(long, conflicts_with = "json_inline")]
    input: Option<PathBuf>,
    /// JSON input given directly on the command line.
    #[arg(long)]
    json_inline: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Largest accepted dimension; overrides THORPE_LAB_NCAP.
    #[arg(long)]
    n_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a curvature model (JSON `CurvatureModel`) for every admissible k.
    Classify {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Run the identity suite; the optional input is a `SuiteConfig`.
    Verify {
        #[command(flatten)]
        io: Io,
        /// Overrides every per-identity tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Seeds as a comma list; `a..b` ranges are allowed, e.g. `0..10,42`.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma list of identity names.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Restrict the grid to this dimension.
        #[arg(long)]
        n: Option<usize>,
        /// Restrict the grid to this degree.
        #[arg(long)]
        p: Option<usize>,
    },
    /// Split a (p,p) form, or a curvature model, into trace-free components.
    Decompose {
        #[command(flatten)]
        io: Io,
    },
    /// Derive the hyper-identity constant c(n, p).
    Constants {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
    },
}

enum Failure {
    Parse(String),
    Invalid(String),
}

impl From<thorpe_lab::Error> for Failure {
    fn from(e: thorpe_lab::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Parse(format!("malformed JSON: {e}")))
}

impl Io {
    fn setup(&self) {
        if let Some(cap) = self.n_cap {
            set_dimension_cap(cap);
        }
    }

    fn read(&self) -> Result<Option<String>, Failure> {
        if let Some(text) = &self.json_inline {
            return Ok(Some(text.clone()));
        }
        let Some(path) = &self.input else { return Ok(None) };
        let mut text = String::new();
        let read = if path.as_os_str() == "-" {
            io::stdin().read_to_string(&mut text).map(|_| ())
        } else {
            fs::read_to_string(path).map(|t| text = t)
        };
        read.map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))?;
        Ok(Some(text))
    }

    fn require(&self) -> Result<String, Failure> {
        self.read()?.ok_or_else(|| Failure::Parse("no input: pass --input or --json-inline".into()))
    }

    fn write(&self, value: &impl Serialize) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Invalid(e.to_string()))?;
        text.push('\n');
        let written = match &self.output {
            Some(path) => fs::write(path, text),
            None => io::stdout().lock().write_all(text.as_bytes()),
        };
        written.map_err(|e| Failure::Invalid(format!("cannot write output: {e}")))
    }
}

fn positive(tol: f64) -> Result<f64, Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Failure::Parse(format!("tolerance must be positive, got {tol}")))
    }
}

fn parse_seeds(list: &str) -> Result<Vec<u64>, Failure> {
    let bad = |t: &str| Failure::Parse(format!("bad seed `{t}`"));
    let mut seeds = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|_| bad(token))?;
                let b: u64 = b.parse().map_err(|_| bad(token))?;
                seeds.extend(a..b);
            }
            None => seeds.push(token.parse().map_err(|_| bad(token))?),
        }
    }
    Ok(seeds)
}

/// A curvature model (tagged with `type`) or a bare double form.
fn parse_form(text: &str) -> Result<DoubleForm, Failure> {
    let value: Value = parse(text)?;
    if value.get("type").is_some() {
        let model: CurvatureModel =
            serde_json::from_value(value).map_err(|e| Failure::Parse(format!("malformed model: {e}")))?;
        Ok(realize(&model)?)
    } else {
        serde_json::from_value(value).map_err(|e| Failure::Parse(format!("malformed double form: {e}")))
    }
}

#[derive(Deserialize)]
struct ConstantsInput {
    n: usize,
    p: usize,
}

fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Classify { io, tolerance } => {
            io.setup();
            let tol = positive(tolerance)?;
            let model: CurvatureModel = parse(&io.require()?)?;
            io.write(&classify(&realize(&model)?, tol)?)?;
            Ok(true)
        }
        Command::Verify { io, tolerance, seeds, only, n, p } => {
            io.setup();
            let mut config = match io.read()? {
                Some(text) => parse(&text)?,
                None => SuiteConfig::default(),
            };
            if let Some(t) = tolerance {
                config.tolerance = Some(positive(t)?);
            }
            if let Some(s) = seeds {
                config.seeds = parse_seeds(&s)?;
            }
            if only.is_some() {
                config.only = only;
            }
            if let Some(n) = n {
                (config.n_min, config.n_max) = (n, n);
            }
            if let Some(p) = p {
                (config.p_min, config.p_max) = (p, p);
            }
            let report = run_suite(&config)?;
            io.write(&report)?;
            Ok(report.pass)
        }
        Command::Decompose { io } => {
            io.setup();
            io.write(&decomposition_report(&parse_form(&io.require()?)?)?)?;
            Ok(true)
        }
        Command::Constants { io, n, p } => {
            io.setup();
            let (n, p) = match (n, p, io.read()?) {
                (Some(n), Some(p), _) => (n, p),
                (_, _, Some(text)) => {
                    let c: ConstantsInput = parse(&text)?;
                    (c.n, c.p)
                }
                _ => return Err(Failure::Parse("pass --n and --p, or {\"n\", \"p\"} as input".into())),
            };
            io.write(&constant_report(n, p)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
