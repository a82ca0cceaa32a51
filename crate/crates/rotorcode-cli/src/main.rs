//! Command-line front end: construct code families, analyze homology, run
//! distance estimation, drive the truncated-rotor simulators, and print the
//! standard parameter table.
//!
//! Exit codes: 0 success, 1 malformed input file, 2 CSS violation or failed
//! table row, 3 memory cap exceeded.

use clap::{Args, Parser, Subcommand};
use rotorcode::code::{CodeFile, CodeFileError, RotorCode};
use rotorcode::constructions as cons;
use rotorcode::distance::{self, DistanceConfig, SpreadOptions};
use rotorcode::simulator::{self, SimError};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rotorcode", version, about = "Homological rotor code toolkit")]
struct Cli {
    /// Worker threads for distance shells and optimizer restarts
    /// (0 = all cores). Results are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named code family instance and write it as a code JSON file.
    Construct {
        /// Family instance, e.g. rp2_9, torus2(3,4), moebius(3,5), product_58
        family: String,
        /// Output path (stdout when omitted)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compute the homology and parameter string of a code file.
    Analyze {
        code: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Distance report: exact X distance, qudit bounds, Z-spread sandwich.
    Distance {
        code: PathBuf,
        /// Cap on the X-distance shell search weight
        #[arg(long, default_value_t = 6)]
        dx_max: u64,
        /// Logical angles (radians) for the Z bounds; repeatable
        #[arg(long)]
        alpha: Vec<f64>,
        /// Optimizer restarts per angle
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Seed for optimizer restarts
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Truncated-rotor simulations.
    Simulate {
        #[command(subcommand)]
        what: Simulate,
    },
    /// Declared vs computed parameters for every standard instance.
    PaperTable {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutArg {
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Simulate {
    /// Stabilizer expectation table of a codeword.
    Codeword {
        #[arg(long)]
        code: PathBuf,
        #[arg(long, default_value_t = 3)]
        l: i64,
        #[arg(long, default_value_t = 1)]
        box_radius: i64,
        /// Logical class coordinates, comma separated (default all zero)
        #[arg(long)]
        mbar: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Low spectrum of the code Hamiltonian.
    Spectrum {
        #[arg(long)]
        code: PathBuf,
        #[arg(long, default_value_t = 2)]
        l: i64,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Single-mode band structure sweep over phi_x (CSV).
    BaconShor {
        #[arg(long, default_value_t = 0)]
        sz: i64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        phix_grid: usize,
        #[arg(long, default_value_t = 16)]
        l: i64,
        #[arg(long, default_value_t = 3)]
        bands: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Four-node pair-tunneling gadget vs its effective model.
    FourPhase {
        #[arg(long, default_value_t = 100.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        cg: f64,
        #[arg(long, default_value_t = 0.0)]
        cj: f64,
        /// Junction energy in units of e^2/(Cg + 2 CJ)
        #[arg(long, default_value_t = 0.05)]
        ej: f64,
        #[arg(long, default_value_t = 2)]
        l: i64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn emit(out: &Option<PathBuf>, data: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, data)?,
        None => print!("{data}"),
    }
    Ok(())
}

fn load_code(path: &PathBuf) -> Result<RotorCode, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(1));
        }
    };
    let file = match CodeFile::from_json(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(ExitCode::from(1));
        }
    };
    match file.to_code() {
        Ok(c) => Ok(c),
        Err(e @ CodeFileError::Complex(_)) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}

/// Parameter string [[n, (k, d1 d2 ...), (d_X, delta_Z)]] with ? for
/// quantities not computed here.
fn param_string(code: &RotorCode) -> String {
    let torsion = if code.hom.torsion_orders.is_empty() {
        "0".to_string()
    } else {
        code.hom
            .torsion_orders
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("*")
    };
    format!("[[{},({},{}),(?,?)]]", code.n(), code.hom.free_rank, torsion)
}

fn sim_exit(e: SimError) -> ExitCode {
    match e {
        SimError::CapExceeded { .. } => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        other => {
            eprintln!("error: {other}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<(), ExitCode> {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .ok();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.jobs;
    match cli.command {
        Command::Construct { family, out } => {
            let code = cons::build_named(&family).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(1)
            })?;
            let mut text = CodeFile::from_code(&code).to_json();
            text.push('\n');
            emit(&out, &text).map_err(io_fail)?;
        }
        Command::Analyze { code, out } => {
            let code = load_code(&code)?;
            let report = serde_json::json!({
                "schema": "rotorcode-analysis/1",
                "name": code.name,
                "n": code.n(),
                "free_rank": code.hom.free_rank,
                "torsion": code.hom.torsion_orders.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "params": param_string(&code),
                "method": "exact",
            });
            let mut text = serde_json::to_string_pretty(&report).expect("serializes");
            text.push('\n');
            emit(&out, &text).map_err(io_fail)?;
        }
        Command::Distance { code, dx_max, alpha, restarts, seed, out } => {
            let code = load_code(&code)?;
            let alphas = if alpha.is_empty() {
                vec![PI, PI / 2.0, PI / 8.0]
            } else {
                alpha
            };
            let cfg = DistanceConfig {
                max_weight: dx_max,
                alphas,
                spread: SpreadOptions { restarts, seed, ..SpreadOptions::default() },
                ..DistanceConfig::default()
            };
            let report = distance::distance_report(&code, &cfg);
            let body = serde_json::json!({
                "schema": "rotorcode-distance/1",
                "report": report,
            });
            let mut text = serde_json::to_string_pretty(&body).expect("serializes");
            text.push('\n');
            emit(&out, &text).map_err(io_fail)?;
        }
        Command::Simulate { what } => run_simulate(what)?,
        Command::PaperTable { out } => {
            let mut text = String::new();
            let mut ok = true;
            for entry in cons::parameter_table() {
                let pass = entry.matches();
                ok &= pass;
                let computed_torsion = entry
                    .code
                    .hom
                    .torsion_orders
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join("*");
                text.push_str(&format!(
                    "{}: declared [[{},({},{})]], computed [[{},({},{})]], {}\n",
                    entry.code.name,
                    entry.declared.n,
                    entry.declared.free_rank,
                    if entry.declared.torsion.is_empty() {
                        "0".to_string()
                    } else {
                        entry
                            .declared
                            .torsion
                            .iter()
                            .map(|d| d.to_string())
                            .collect::<Vec<_>>()
                            .join("*")
                    },
                    entry.code.n(),
                    entry.code.hom.free_rank,
                    if computed_torsion.is_empty() { "0".to_string() } else { computed_torsion },
                    if pass { "PASS" } else { "FAIL" },
                ));
            }
            emit(&out, &text).map_err(io_fail)?;
            if !ok {
                return Err(ExitCode::from(2));
            }
        }
    }
    Ok(())
}

fn run_simulate(what: Simulate) -> Result<(), ExitCode> {
    match what {
        Simulate::Codeword { code, l, box_radius, mbar, out } => {
            let code = load_code(&code)?;
            let mbar: Vec<i64> = match mbar {
                None => vec![0; code.k()],
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| {
                        eprintln!("error: bad --mbar: {e}");
                        ExitCode::from(1)
                    })?,
            };
            let state = simulator::codeword(&code, &mbar, l, box_radius).map_err(sim_exit)?;
            let mut text = String::from("stabilizer,re,im\n");
            for j in 0..code.hx().rows() {
                let e = simulator::expect_stabilizer_x(&state, &code, j);
                text.push_str(&format!("S{j},{},{}\n", e.re, e.im));
            }
            emit(&out.out, &text).map_err(io_fail)?;
        }
        Simulate::Spectrum { code, l, k, out } => {
            let code = load_code(&code)?;
            let h = simulator::build_code_hamiltonian(&code, l).map_err(sim_exit)?;
            let (vals, _) = simulator::low_spectrum(&h, k);
            let mut text = String::from("index,energy\n");
            for (i, v) in vals.iter().enumerate() {
                text.push_str(&format!("{i},{v}\n"));
            }
            emit(&out.out, &text).map_err(io_fail)?;
        }
        Simulate::BaconShor { sz, eps, phix_grid, l, bands, out } => {
            let mut text = String::from("phi_x");
            for b in 0..bands {
                text.push_str(&format!(",E{b}"));
            }
            text.push('\n');
            for i in 0..=phix_grid {
                let phi_x = 2.0 * PI * i as f64 / phix_grid as f64;
                let vals = simulator::bacon_shor_band(sz, phi_x, eps, l, bands);
                text.push_str(&format!("{phi_x}"));
                for v in vals {
                    text.push_str(&format!(",{v}"));
                }
                text.push('\n');
            }
            emit(&out.out, &text).map_err(io_fail)?;
        }
        Simulate::FourPhase { c, cg, cj, ej, l, out } => {
            // --ej is given relative to the charging scale e^2/(Cg + 2 CJ).
            let scale = 1.0 / (cg + 2.0 * cj);
            let report =
                simulator::four_phase_effective(c, cg, cj, ej * scale, l).map_err(sim_exit)?;
            if !report.regime_ok {
                eprintln!("warning: outside the C >> Cg, CJ regime; results still computed");
            }
            let body = serde_json::json!({
                "schema": "rotorcode-four-phase/1",
                "report": report,
                "method": "numeric",
            });
            let mut text = serde_json::to_string_pretty(&body).expect("serializes");
            text.push('\n');
            emit(&out.out, &text).map_err(io_fail)?;
        }
    }
    Ok(())
}

fn io_fail(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
