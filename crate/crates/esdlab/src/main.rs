use clap::{Args, Parser, Subcommand};
use esdlab::cli::{self, CliError, Doc};
use serde_json::Value;
use std::path::PathBuf;

/// Entanglement dynamics of two driven, coupled qubits with independent
/// reservoirs: time evolution, sudden-death detection, and phase-diagram
/// scans.
#[derive(Parser)]
#[command(name = "esdlab", version)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

/// Shared physics flags. Every flag mirrors a config key of the same name;
/// flags override the JSON document.
#[derive(Args)]
struct PhysicsFlags {
    /// Flat JSON config document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// kinetic | closed-form | secular-full | rotating-frame | thermal-undriven
    #[arg(long)]
    model: Option<String>,
    /// werner | ye | egge | eegg
    #[arg(long)]
    family: Option<String>,
    /// Werner fidelity.
    #[arg(long)]
    f: Option<f64>,
    /// ye family parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// egge family parameter.
    #[arg(long)]
    p: Option<f64>,
    /// eegg family parameter.
    #[arg(long)]
    s: Option<f64>,
    /// Relaxation rate for both qubits (reference units; default 1).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Rabi frequency for both qubits (default 25).
    #[arg(long)]
    rabi: Option<f64>,
    #[arg(long)]
    rabi1: Option<f64>,
    #[arg(long)]
    rabi2: Option<f64>,
    #[arg(long)]
    detuning1: Option<f64>,
    #[arg(long)]
    detuning2: Option<f64>,
    /// Effective coupling; split evenly into omega_xx + omega_yy.
    #[arg(long = "omega_c")]
    omega_c: Option<f64>,
    #[arg(long = "omega_xx")]
    omega_xx: Option<f64>,
    #[arg(long = "omega_yy")]
    omega_yy: Option<f64>,
    /// Thermal occupation for both reservoirs.
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    nbar1: Option<f64>,
    #[arg(long)]
    nbar2: Option<f64>,
    /// Time horizon (default 10).
    #[arg(long = "t_max")]
    t_max: Option<f64>,
    /// Integration step; default resolves the fastest frequency present.
    #[arg(long)]
    dt: Option<f64>,
    /// Concurrence death threshold (default 1e-6).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output path ("-" or absent = stdout).
    #[arg(long)]
    output: Option<String>,
    /// csv | json (default csv).
    #[arg(long)]
    format: Option<String>,
}

impl PhysicsFlags {
    fn overrides(&self) -> Vec<(&'static str, Value)> {
        let mut o: Vec<(&'static str, Value)> = Vec::new();
        let mut num = |key: &'static str, v: &Option<f64>| {
            if let Some(v) = v {
                o.push((key, Value::from(*v)));
            }
        };
        num("f", &self.f);
        num("alpha", &self.alpha);
        num("p", &self.p);
        num("s", &self.s);
        num("gamma", &self.gamma);
        num("gamma1", &self.gamma1);
        num("gamma2", &self.gamma2);
        num("rabi", &self.rabi);
        num("rabi1", &self.rabi1);
        num("rabi2", &self.rabi2);
        num("detuning1", &self.detuning1);
        num("detuning2", &self.detuning2);
        num("omega_c", &self.omega_c);
        num("omega_xx", &self.omega_xx);
        num("omega_yy", &self.omega_yy);
        num("nbar", &self.nbar);
        num("nbar1", &self.nbar1);
        num("nbar2", &self.nbar2);
        num("t_max", &self.t_max);
        num("dt", &self.dt);
        num("epsilon", &self.epsilon);
        for (key, v) in [
            ("model", &self.model),
            ("family", &self.family),
            ("output", &self.output),
            ("format", &self.format),
        ] {
            if let Some(v) = v {
                o.push((key, Value::from(v.clone())));
            }
        }
        o
    }
}

#[derive(Args)]
struct ScanFlags {
    #[command(flatten)]
    physics: PhysicsFlags,
    #[arg(long = "param_min")]
    param_min: Option<f64>,
    #[arg(long = "param_max")]
    param_max: Option<f64>,
    #[arg(long = "param_steps")]
    param_steps: Option<usize>,
    #[arg(long = "omega_c_min")]
    omega_c_min: Option<f64>,
    #[arg(long = "omega_c_max")]
    omega_c_max: Option<f64>,
    #[arg(long = "omega_c_steps")]
    omega_c_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial state and write the concurrence trace.
    Evolve(PhysicsFlags),
    /// Sweep (family parameter x omega_c) and write the sudden-death grid.
    Scan(ScanFlags),
    /// Cross-validate analytic solutions, integrators, and concurrence routes.
    Validate {
        /// Scale factor on the oracle integration steps.
        #[arg(long, default_value_t = 1.0)]
        dt_scale: f64,
    },
    /// List the initial-state families and parameter ranges.
    Families,
}

fn run() -> Result<(), CliError> {
    let args = CliArgs::parse();
    match args.command {
        Command::Evolve(flags) => {
            let allowed = cli::evolve_allowed_keys();
            let doc = Doc::load(flags.config.as_ref(), flags.overrides(), &allowed)?;
            cli::cmd_evolve(doc)
        }
        Command::Scan(flags) => {
            let allowed = cli::scan_allowed_keys();
            let mut overrides = flags.physics.overrides();
            if let Some(v) = flags.param_min {
                overrides.push(("param_min", Value::from(v)));
            }
            if let Some(v) = flags.param_max {
                overrides.push(("param_max", Value::from(v)));
            }
            if let Some(v) = flags.param_steps {
                overrides.push(("param_steps", Value::from(v)));
            }
            if let Some(v) = flags.omega_c_min {
                overrides.push(("omega_c_min", Value::from(v)));
            }
            if let Some(v) = flags.omega_c_max {
                overrides.push(("omega_c_max", Value::from(v)));
            }
            if let Some(v) = flags.omega_c_steps {
                overrides.push(("omega_c_steps", Value::from(v)));
            }
            let doc = Doc::load(flags.physics.config.as_ref(), overrides, &allowed)?;
            cli::cmd_scan(doc)
        }
        Command::Validate { dt_scale } => cli::cmd_validate(dt_scale),
        Command::Families => {
            cli::cmd_families();
            Ok(())
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("{}", err.message());
        std::process::exit(err.exit_code());
    }
}
