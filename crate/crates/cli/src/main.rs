mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbm_core::{Error, Result};

use config::Settings;

#[derive(Parser, Debug)]
#[command(name = "qbm", version, about = "Quantum Brownian motion: Green's functions, moments and localization")]
struct Cli {
    /// Flat key-value (TOML) file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads for inner loops.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for G(t) and write green.csv plus residual diagnostics.
    Green(GreenArgs),
    /// Tabulate the damping and noise kernels.
    Kernel(BathArgs),
    /// Second moments A, B, C and the pointer basis.
    Moments(MomentArgs),
    /// Localization time t_c and the criterion series.
    Tc(MomentArgs),
    /// Propagate an initial Wigner function and its pointer weight.
    Evolve(EvolveArgs),
    /// Localization time against coupling in the high-temperature Ohmic limit.
    Figure1(Figure1Args),
}

#[derive(Args, Debug)]
struct BathArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long = "omega-c")]
    omega_c: Option<f64>,
    /// `exponential` or `none` (p = 1 only).
    #[arg(long)]
    cutoff: Option<String>,
    /// Horizon T_max.
    #[arg(long)]
    tmax: Option<f64>,
    /// Time step of the Green's-function march.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct GreenArgs {
    #[command(flatten)]
    bath: BathArgs,
    /// Write every N-th grid point.
    #[arg(long)]
    every: Option<usize>,
    /// Cross-check against an independent method (`talbot`).
    #[arg(long)]
    check: Option<String>,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[command(flatten)]
    bath: BathArgs,
    /// Keep every N-th Green's-function sample in the moment series.
    #[arg(long)]
    decimation: Option<usize>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    moments: MomentArgs,
    /// `gaussian` or `cat`.
    #[arg(long)]
    state: Option<String>,
    /// Cat displacement.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    /// Gaussian mean `x,p`.
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    /// Covariance `xx,xp,pp`.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Grid points per axis (power of two).
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Comma-separated output times.
    #[arg(long)]
    times: Option<String>,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// Comma-separated couplings; overrides the log-spaced range.
    #[arg(long)]
    zetas: Option<String>,
    #[arg(long = "zeta-min")]
    zeta_min: Option<f64>,
    #[arg(long = "zeta-max")]
    zeta_max: Option<f64>,
    #[arg(long = "n-zeta")]
    n_zeta: Option<usize>,
    /// Couplings for full-pipeline finite-temperature probes.
    #[arg(long)]
    probes: Option<String>,
}

impl BathArgs {
    fn apply(&self, s: &mut Settings) -> Result<()> {
        s.set_opt("p", &self.p)?;
        s.set_opt("zeta", &self.zeta)?;
        s.set_opt("beta", &self.beta)?;
        s.set_opt("omega_c", &self.omega_c)?;
        s.set_opt("cutoff", &self.cutoff)?;
        s.set_opt("tmax", &self.tmax)?;
        s.set_opt("step", &self.step)
    }
}

impl MomentArgs {
    fn apply(&self, s: &mut Settings) -> Result<()> {
        self.bath.apply(s)?;
        s.set_opt("decimation", &self.decimation)
    }
}

impl Cli {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        match &self.command {
            Command::Green(a) => {
                a.bath.apply(&mut s)?;
                s.set_opt("every", &a.every)?;
                s.set_opt("check", &a.check)?;
            }
            Command::Kernel(a) => a.apply(&mut s)?,
            Command::Moments(a) | Command::Tc(a) => a.apply(&mut s)?,
            Command::Evolve(a) => {
                a.moments.apply(&mut s)?;
                s.set_opt("state", &a.state)?;
                s.set_opt("x0", &a.x0)?;
                s.set_opt("d", &a.d)?;
                s.set_opt("sigma", &a.sigma)?;
                s.set_opt("grid_n", &a.grid_n)?;
                s.set_opt("times", &a.times)?;
            }
            Command::Figure1(a) => {
                s.set_opt("zetas", &a.zetas)?;
                s.set_opt("zeta_min", &a.zeta_min)?;
                s.set_opt("zeta_max", &a.zeta_max)?;
                s.set_opt("n_zeta", &a.n_zeta)?;
                s.set_opt("probes", &a.probes)?;
            }
        }
        Ok(s)
    }

    fn run(&self) -> Result<()> {
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::Config("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut s = self.settings()?;
        std::fs::create_dir_all(&self.out)?;
        let out = self.out.as_path();
        match &self.command {
            Command::Green(_) => commands::green(&mut s, out),
            Command::Kernel(_) => commands::kernel(&mut s, out),
            Command::Moments(_) => commands::moments(&mut s, out),
            Command::Tc(_) => commands::tc(&mut s, out),
            Command::Evolve(_) => commands::evolve(&mut s, out),
            Command::Figure1(_) => commands::figure1(&mut s, out),
        }
    }
}

fn report(err: &Error, out: &std::path::Path) {
    let body = serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    eprintln!("{body}");
    if out.is_dir() {
        let _ = std::fs::write(out.join("error.json"), format!("{body:#}\n"));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match cli.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, &cli.out);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
