use clap::{Args, Parser, Subcommand};
use nucresp::commands::{self, Options, SynthArgs};
use nucresp::config::{Config, REFERENCE};
use nucresp::manifest::Context;
use nucresp::verify::{self, Level};
use nucresp::{sweep, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nucresp", version, about = "Lattice two-body response functions on a simulated quantum computer")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat key = value with [section] headers); the
    /// bundled 8x8x8 reference is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trajectory sweeps (also NUCRESP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// amplitude | shots
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    shots: Option<usize>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, gap, width and Pauli mapping of the Hamiltonian.
    Model,
    /// Emit one circuit and its gate counts.
    Synth {
        /// kinetic | potential | step | evolution | filter | directional | transition | hwp | qpe
        #[arg(long)]
        target: Option<String>,
        /// gray_code | mcu_ladder | mcu_feedforward
        #[arg(long)]
        variant: Option<String>,
        /// V_then_T | T_then_V | T_V_T | V_T_V
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        /// System qubits for `potential` and `hwp`.
        #[arg(long)]
        qubits: Option<usize>,
    },
    /// Energy filter, initialization probabilities and the Trotter scan.
    Prep,
    /// Phase-estimation response function.
    Response,
    /// Response under two-qubit depolarizing noise.
    NoiseSweep {
        /// Comma-separated probabilities (overrides noise.p).
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
    },
    /// Built-in checks; exits 1 if any fails.
    Verify {
        /// quick | full
        #[arg(long, default_value = "quick")]
        level: String,
        /// Gate-count regression table (case,cnot,rz,conditioned_cz,t).
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, CliError> {
    match path {
        None => Config::parse(REFERENCE),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            Config::parse(&text)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    sweep::init_threads(c.threads);
    let opts = Options { seed: c.seed, mode: c.mode.clone(), shots: c.shots, trajectories: c.trajectories };
    if let Command::Verify { level, table } = &cli.command {
        let level = match level.as_str() {
            "quick" => Level::Quick,
            "full" => Level::Full,
            l => return Err(CliError::Config(format!("unknown verify level '{l}' (quick|full)"))),
        };
        let text = match table {
            None => Ok(verify::EXPECTED_COUNTS.to_string()),
            Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
        };
        let checks = match text {
            Ok(t) => verify::run(level, &t),
            Err(e) => vec![verify::Check { name: "table".into(), passed: false, detail: e, seconds: 0.0 }],
        };
        let mut ctx = Context::new(&c.out_dir, 0)?;
        let mut csv = String::from("check,passed,seconds,detail\n");
        for k in &checks {
            ctx.say(k.line());
            csv += &format!("{},{},{:.3},\"{}\"\n", k.name, k.passed, k.seconds, k.detail.replace('"', "'"));
        }
        ctx.option("level", format!("{level:?}").to_lowercase());
        ctx.write("verify.csv", &csv)?;
        ctx.finish("verify", &Default::default())?;
        let failed = checks.iter().filter(|k| !k.passed).count();
        return if failed == 0 { Ok(()) } else { Err(CliError::Runtime(format!("{failed} of {} checks failed", checks.len()))) };
    }
    let cfg = load_config(&c.config)?;
    let mut ctx = Context::new(&c.out_dir, opts.seed(&cfg))?;
    if let Some(p) = &c.config {
        ctx.option("config_path", p.display());
    }
    match cli.command {
        Command::Model => commands::cmd_model(&cfg, &mut ctx)?,
        Command::Synth { target, variant, order, steps, dt, qubits } => commands::cmd_synth(&cfg, &SynthArgs { target, variant, order, steps, dt, qubits }, &mut ctx)?,
        Command::Prep => commands::cmd_prep(&cfg, &mut ctx)?,
        Command::Response => commands::cmd_response(&cfg, &opts, &mut ctx)?,
        Command::NoiseSweep { p } => commands::cmd_noise_sweep(&cfg, &opts, p, &mut ctx)?,
        Command::Verify { .. } => unreachable!(),
    };
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nucresp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
