use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwl_chaos::certify::{certify, CertificateDocument, SearchConfig};
use pwl_chaos::error::Error;
use pwl_chaos::geom::Vec2;
use pwl_chaos::geometry::build_geometry;
use pwl_chaos::map::BcnfParams;
use pwl_chaos::sweep::{
    run_sweep, simulate, write_orbit_csv, write_sweep_csv, AxisRange, SweepSpec,
};

const EXIT_NOT_CERTIFIED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pwl-chaos",
    version,
    about = "Certify robust chaos in the 2d border-collision normal form"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full search at one parameter point and print the certificate.
    Certify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify every cell of a (tau_L, tau_R) grid and write CSV.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        tau_l_lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau_l_hi: f64,
        #[arg(long)]
        tau_l_count: usize,
        #[arg(long, allow_hyphen_values = true)]
        tau_r_lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau_r_hi: f64,
        #[arg(long)]
        tau_r_count: usize,
        #[arg(long, default_value_t = 0.3)]
        delta_l: f64,
        #[arg(long, default_value_t = 0.3)]
        delta_r: f64,
        #[command(flatten)]
        search: SearchArgs,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long, env = "PWL_CHAOS_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an orbit as CSV.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        transient: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the polygon, preimage lines and slope maps at one seed.
    Geometry {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 15)]
        r_max: usize,
        #[arg(long, default_value_t = 15)]
        l_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    tau_l: f64,
    #[arg(long, allow_hyphen_values = true)]
    tau_r: f64,
    #[arg(long)]
    delta_l: f64,
    #[arg(long)]
    delta_r: f64,
}

impl ParamArgs {
    fn params(&self) -> BcnfParams {
        BcnfParams::new(self.tau_l, self.tau_r, self.delta_l, self.delta_r)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0.01)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.01)]
    beta_step: f64,
    #[arg(long, default_value_t = 5.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 15)]
    r_max: usize,
    #[arg(long, default_value_t = 15)]
    l_max: usize,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            beta_min: self.beta_min,
            beta_step: self.beta_step,
            beta_max: self.beta_max,
            r_max: self.r_max,
            ell_max: self.l_max,
        }
    }
}

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> io::Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()
}

enum Failure {
    Usage(String),
    NotCertified,
    Diverged(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Certify {
            params,
            search,
            out,
        } => {
            let cert = certify(&params.params(), &search.config())?;
            write_json(&out, &CertificateDocument::from(&cert))?;
            if cert.chi_chaos {
                Ok(())
            } else {
                Err(Failure::NotCertified)
            }
        }
        Command::Sweep {
            tau_l_lo,
            tau_l_hi,
            tau_l_count,
            tau_r_lo,
            tau_r_hi,
            tau_r_count,
            delta_l,
            delta_r,
            search,
            workers,
            out,
        } => {
            let workers = workers
                .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
                .unwrap_or(1);
            let spec = SweepSpec {
                tau_l: AxisRange::new(tau_l_lo, tau_l_hi, tau_l_count)?,
                tau_r: AxisRange::new(tau_r_lo, tau_r_hi, tau_r_count)?,
                delta_l,
                delta_r,
                search: search.config(),
                workers,
            };
            let cells = run_sweep(&spec)?;
            let mut w = open_out(&out)?;
            write_sweep_csv(&mut w, &cells)?;
            w.flush()?;
            Ok(())
        }
        Command::Simulate {
            params,
            n,
            transient,
            x1,
            x2,
            out,
        } => {
            if n == 0 {
                return Err(Failure::Usage("--n must be at least 1".into()));
            }
            let points = simulate(&params.params(), Vec2::new(x1, x2), n, transient)?;
            let mut w = open_out(&out)?;
            write_orbit_csv(&mut w, &points)?;
            w.flush()?;
            Ok(())
        }
        Command::Geometry {
            params,
            beta,
            r_max,
            l_max,
            out,
        } => {
            let cfg = SearchConfig {
                r_max,
                ell_max: l_max,
                ..SearchConfig::default()
            };
            match build_geometry(&params.params(), beta, &cfg) {
                Ok(doc) => {
                    write_json(&out, &doc)?;
                    Ok(())
                }
                Err(e @ (Error::FailureC1(_) | Error::FailureC2(_))) => {
                    eprintln!("pwl-chaos: {e}");
                    Err(Failure::NotCertified)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotCertified) => ExitCode::from(EXIT_NOT_CERTIFIED),
        Err(Failure::Usage(msg)) => {
            eprintln!("pwl-chaos: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("pwl-chaos: {msg}");
            ExitCode::from(EXIT_DIVERGED)
        }
    }
}
