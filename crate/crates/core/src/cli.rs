//! `roman` command-line tool.
//!
//! Exit codes: 0 success, 1 task not completed, 2 usage or validation error.
//! Machine-readable output goes to stdout; diagnostics go to stderr.

use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::device;
use crate::profile::{make_template, MotionProfile, ProfileDoc, TemplateKind};
use crate::registry::Registry;
use crate::server::{self, AppState, DEFAULT_PORT};
use crate::tag::TagId;
use crate::testbed::{run_task, Scenario, TaskOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCOMPLETE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

pub const CSV_HEADER: [&str; 6] = ["t", "u", "motor_theta", "output_coord", "load", "completed"];

#[derive(Debug, Parser)]
#[command(name = "roman", version, about = "Simulate, validate and serve motion profiles for add-on mechanisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a profile against a virtual object and write the trajectory as CSV
    Simulate {
        /// Scenario JSON; the built-in demo catalog when omitted
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Tag id of the object to drive
        #[arg(long)]
        object: String,
        #[arg(long)]
        profile: PathBuf,
        /// CSV destination; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 0 even if the task does not complete
        #[arg(long)]
        no_require_complete: bool,
    },
    /// Check a profile document against the schema and its invariants
    Validate { profile: PathBuf },
    /// Run the control server
    Serve {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, env = "ROMAN_REGISTRY", default_value = "registry")]
        registry: PathBuf,
        #[arg(long, env = "ROMAN_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Print the compact device encoding of a profile as hex
    EncodeDevice { profile: PathBuf },
    /// Decode a hex device encoding (argument or stdin) back to profile JSON
    DecodeDevice { hex: Option<String> },
    /// Print the built-in demo scenario as JSON
    Scenario,
    /// Print a template profile as JSON
    Template {
        #[arg(value_enum)]
        kind: TemplateArg,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum TemplateArg {
    EndlessRotation,
    Periodic,
    OneWay,
    TwoWay,
}

impl From<TemplateArg> for TemplateKind {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::EndlessRotation => TemplateKind::EndlessRotation,
            TemplateArg::Periodic => TemplateKind::Periodic,
            TemplateArg::OneWay => TemplateKind::OneWay,
            TemplateArg::TwoWay => TemplateKind::TwoWay,
        }
    }
}

/// A failure that maps onto an exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn load_profile(path: &Path) -> Result<MotionProfile, Failure> {
    let text = read(path)?;
    let doc: ProfileDoc =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    doc.validate()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(MotionProfile::try_from(doc).expect("validated above"))
}

pub fn load_scenario(path: Option<&Path>) -> Result<Scenario, Failure> {
    let scenario = match path {
        None => Scenario::builtin(),
        Some(p) => serde_json::from_str(&read(p)?)
            .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
    };
    scenario
        .validate()
        .map_err(|e| invalid(format!("scenario: {e}")))?;
    Ok(scenario)
}

/// Writes the trajectory CSV with the fixed column order.
pub fn write_trajectory<W: Write>(out: W, outcome: &TaskOutcome) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &outcome.trajectory {
        w.write_record([
            s.t.to_string(),
            s.u.to_string(),
            s.motor_theta.to_string(),
            s.output_coord.to_string(),
            s.load.to_string(),
            u8::from(s.completed).to_string(),
        ])?;
    }
    w.flush()
}

fn simulate(
    scenario: Option<&Path>,
    object: &str,
    profile: &Path,
    out: Option<&Path>,
    require_complete: bool,
) -> Result<i32, Failure> {
    let scenario = load_scenario(scenario)?;
    let tag = TagId::parse(object).map_err(|e| invalid(e.to_string()))?;
    let object = scenario.object(&tag).map_err(|e| invalid(e.to_string()))?;
    let profile = load_profile(profile)?;
    let outcome = run_task(object, &profile, &scenario.motor).map_err(|e| invalid(e.to_string()))?;
    let written = match out {
        Some(path) => fs::File::create(path).and_then(|f| write_trajectory(io::BufWriter::new(f), &outcome)),
        None => write_trajectory(io::stdout().lock(), &outcome),
    };
    written.map_err(|e| invalid(format!("writing trajectory: {e}")))?;
    if let Some(fault) = &outcome.fault {
        eprintln!("fault: {fault}");
    }
    match outcome.t_complete {
        Some(t) => eprintln!("{}: completed at t = {t:.3} s", object.name),
        None => eprintln!("{}: task not completed", object.name),
    }
    Ok(if outcome.completed || !require_complete {
        EXIT_OK
    } else {
        EXIT_INCOMPLETE
    })
}

fn serve(scenario: Option<&Path>, registry: &Path, host: IpAddr, port: u16) -> Result<i32, Failure> {
    let scenario = load_scenario(scenario)?;
    let registry = Registry::open(registry).map_err(|e| invalid(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| invalid(e.to_string()))?;
    let state = AppState::new(registry, scenario);
    runtime
        .block_on(server::serve(
            state,
            SocketAddr::new(host, port),
            |addr| {
                println!("listening on http://{addr}");
                let _ = io::stdout().flush();
            },
            async {
                let _ = tokio::signal::ctrl_c().await;
            },
        ))
        .map_err(|e| invalid(format!("server: {e}")))?;
    Ok(EXIT_OK)
}

pub fn execute(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Simulate {
            scenario,
            object,
            profile,
            out,
            no_require_complete,
        } => simulate(
            scenario.as_deref(),
            &object,
            &profile,
            out.as_deref(),
            !no_require_complete,
        ),
        Command::Validate { profile } => {
            let p = load_profile(&profile)?;
            println!(
                "ok: {} keypoints, {} s{}",
                p.keypoints().len(),
                p.duration_s(),
                if p.continuous() { ", continuous" } else { "" }
            );
            Ok(EXIT_OK)
        }
        Command::Serve {
            scenario,
            registry,
            port,
            host,
        } => serve(scenario.as_deref(), &registry, host, port),
        Command::EncodeDevice { profile } => {
            let p = load_profile(&profile)?;
            let bytes = device::encode(&p).map_err(|e| invalid(e.to_string()))?;
            println!("{}", device::to_hex(&bytes));
            Ok(EXIT_OK)
        }
        Command::DecodeDevice { hex } => {
            let hex = match hex {
                Some(h) => h,
                None => io::read_to_string(io::stdin()).map_err(|e| invalid(e.to_string()))?,
            };
            let bytes = device::from_hex(&hex).ok_or_else(|| invalid("input is not valid hex"))?;
            let p = device::decode(&bytes).map_err(|e| invalid(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&p).expect("profile serializes"));
            Ok(EXIT_OK)
        }
        Command::Scenario => {
            let s = serde_json::to_string_pretty(&Scenario::builtin()).expect("scenario serializes");
            println!("{s}");
            Ok(EXIT_OK)
        }
        Command::Template { kind } => {
            let p = make_template(kind.into());
            println!("{}", serde_json::to_string_pretty(&p).expect("profile serializes"));
            Ok(EXIT_OK)
        }
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
