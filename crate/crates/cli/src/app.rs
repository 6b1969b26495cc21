use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mgrit_core::lyapunov::precision_horizon;

use crate::csvio;
use crate::experiments::{exit_code, run_fig1, run_fig3, run_lyapunov_sweep, run_solve, run_table};
use crate::spec::{Command, ExperimentSpec, Fine};
use crate::Result;

#[derive(Parser)]
#[command(
    name = "mgrit",
    about = "Multigrid-in-time experiments on the Lorenz system"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve once and write the residual history.
    Solve(Opts),
    /// Largest Lyapunov exponent versus step size for several schemes.
    LyapunovSweep(Opts),
    /// Two-grid iterations versus n_t at fixed T_f.
    Table1(Opts),
    /// Two-grid iterations versus T_f at fixed h.
    Table2(Opts),
    /// Iterations versus number of levels.
    Table3(Opts),
    /// Error over the time domain per iteration.
    Fig1(Opts),
    /// Residual histories of the two-grid variants.
    Fig3(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemName {
    Lorenz,
}

#[derive(Clone, Copy, ValueEnum)]
enum FineArg {
    Fe,
    Be,
}

#[derive(Args)]
struct Opts {
    #[arg(long, value_enum, default_value = "lorenz")]
    system: SystemName,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 28.0)]
    rho: f64,
    #[arg(long, default_value_t = 8.0 / 3.0)]
    beta: f64,
    /// Initial condition `x,y,z`.
    #[arg(long, default_value = "1,1,1", allow_hyphen_values = true)]
    u0: String,
    /// Final time in Lyapunov times.
    #[arg(long, default_value_t = 4.0)]
    tf: f64,
    #[arg(long, default_value_t = 8192)]
    nt: usize,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Coarsening factor.
    #[arg(long, default_value_t = 2)]
    cf: usize,
    /// θ-method coarse propagators.
    #[arg(long)]
    theta: bool,
    /// Δ correction.
    #[arg(long)]
    delta: bool,
    #[arg(long, value_enum, default_value = "fe")]
    fine_scheme: FineArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Step sizes for the Lyapunov sweep, comma separated.
    #[arg(long, default_value = "2e-4,5e-4,1e-3,2e-3,4e-3")]
    h: String,
    #[arg(long, default_value_t = 100.0)]
    spinup: f64,
    #[arg(long, default_value_t = 1000.0)]
    run_time: f64,
    #[arg(long, default_value_t = 10)]
    reorth: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn spec(&self, command: Command) -> Result<ExperimentSpec> {
        let SystemName::Lorenz = self.system;
        let spec = ExperimentSpec {
            command,
            sigma: self.sigma,
            rho: self.rho,
            beta: self.beta,
            u0: csvio::parse_u0(&self.u0)?,
            tf: self.tf,
            nt: self.nt,
            levels: self.levels,
            cf: self.cf,
            theta: self.theta,
            delta: self.delta,
            fine_scheme: match self.fine_scheme {
                FineArg::Fe => Fine::Fe,
                FineArg::Be => Fine::Be,
            },
            tol: self.tol,
            max_iters: self.max_iters,
            h_values: csvio::parse_h_list(&self.h)?,
            spinup_time: self.spinup,
            run_time: self.run_time,
            reorth_interval: self.reorth,
        };
        Ok(spec)
    }
}

fn emit(path: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let (command, opts) = match &cli.command {
        Sub::Solve(o) => (Command::Solve, o),
        Sub::LyapunovSweep(o) => (Command::LyapunovSweep, o),
        Sub::Table1(o) => (Command::Table1, o),
        Sub::Table2(o) => (Command::Table2, o),
        Sub::Table3(o) => (Command::Table3, o),
        Sub::Fig1(o) => (Command::Fig1, o),
        Sub::Fig3(o) => (Command::Fig3, o),
    };
    let spec = opts.spec(command)?;
    match command {
        Command::Solve => {
            let (report, csv) = run_solve(&spec)?;
            emit(&opts.out, &csv, stdout)?;
            writeln!(
                stderr,
                "{:?} after {} iterations, residual {:e}",
                report.status,
                report.iterations,
                report.final_residual()
            )?;
            if let Some(f) = &report.failure {
                writeln!(stderr, "failure: {f}")?;
            }
            let horizon = precision_horizon(spec.tol, f64::EPSILON);
            if spec.tf >= horizon {
                writeln!(
                    stderr,
                    "note: tf = {} exceeds the precision horizon {horizon:.2} for tol {:e}",
                    spec.tf, spec.tol
                )?;
            }
            Ok(exit_code(report.status) as u8)
        }
        Command::Table1 | Command::Table2 | Command::Table3 => {
            emit(&opts.out, &run_table(&spec)?.to_csv()?, stdout)?;
            Ok(0)
        }
        Command::Fig1 => {
            let (_, rows) = run_fig1(&spec)?;
            emit(&opts.out, &csvio::write_fig1_csv(&rows)?, stdout)?;
            Ok(0)
        }
        Command::Fig3 => {
            emit(
                &opts.out,
                &csvio::write_fig3_csv(&run_fig3(&spec)?)?,
                stdout,
            )?;
            Ok(0)
        }
        Command::LyapunovSweep => {
            emit(
                &opts.out,
                &csvio::write_sweep_csv(&run_lyapunov_sweep(&spec)?)?,
                stdout,
            )?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 converged, 1 usage or configuration error, 2 not
/// converged, 3 diverged.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                1
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("mgrit").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("lyapunov-sweep"));
    }

    #[test]
    fn usage_and_config_errors_exit_one() {
        let (code, out, err) = call(&["solve", "--levels", "9", "--nt", "100"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.starts_with("error:"));
        assert_eq!(call(&["frobnicate"]).0, 1);
    }

    #[test]
    fn solve_writes_run_csv() {
        let (code, out, err) = call(&["solve", "--tf", "1", "--nt", "512", "--delta"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("iteration,residual\n0,"));
        assert!(err.starts_with("Converged"));
    }
}
