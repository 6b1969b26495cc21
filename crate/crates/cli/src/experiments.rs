use rayon::prelude::*;

use mgrit_core::mgrit::TimeHierarchy;
use mgrit_core::steppers::theta_asymptotic_ratio;
use mgrit_core::{
    lyapunov_spectrum, sequential_solve, solve, FineScheme, LyapunovConfig, Mgrit, Scheme,
    SolveReport, SolveStatus,
};

use crate::csvio::{self, Cell, IterationTable};
use crate::spec::{Command, ExperimentSpec};
use crate::{CliError, Result};

/// Process exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::Stalled | SolveStatus::MaxIters => 2,
        SolveStatus::Diverged => 3,
    }
}

/// One row of an iteration table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub levels: usize,
    pub delta: bool,
    pub theta: bool,
}

impl Variant {
    pub fn new(levels: usize, delta: bool, theta: bool) -> Self {
        Self {
            levels,
            delta,
            theta,
        }
    }

    pub fn label(&self) -> String {
        let mut s = format!("MGRIT_{}", self.levels);
        if self.delta {
            s.push_str(", delta");
        }
        if self.theta {
            s.push_str(", theta");
        }
        s
    }

    fn apply(&self, spec: &ExperimentSpec, tf: f64, nt: usize) -> ExperimentSpec {
        ExperimentSpec {
            levels: self.levels,
            delta: self.delta,
            theta: self.theta,
            tf,
            nt,
            ..spec.clone()
        }
    }
}

/// The four two-grid variants in table order: plain, θ, Δ, Δ+θ.
fn two_grid_variants(levels: usize) -> [Variant; 4] {
    [
        Variant::new(levels, false, false),
        Variant::new(levels, false, true),
        Variant::new(levels, true, false),
        Variant::new(levels, true, true),
    ]
}

/// Rows and columns of the named table.
pub fn table_layout(command: Command) -> Result<(Vec<Variant>, Vec<(f64, usize)>)> {
    match command {
        Command::Table1 => Ok((
            two_grid_variants(2).to_vec(),
            [512, 1024, 2048, 4096, 8192]
                .into_iter()
                .map(|nt| (4.0, nt))
                .collect(),
        )),
        Command::Table2 => Ok((
            two_grid_variants(2).to_vec(),
            vec![
                (2.0, 4096),
                (4.0, 8192),
                (6.0, 12288),
                (8.0, 16384),
                (10.0, 20480),
                (12.0, 24576),
            ],
        )),
        Command::Table3 => {
            let mut rows = Vec::new();
            for (delta, theta) in [(false, false), (false, true), (true, false), (true, true)] {
                for levels in [2, 3, 5, 7] {
                    rows.push(Variant::new(levels, delta, theta));
                }
            }
            Ok((
                rows,
                vec![(2.0, 4096), (4.0, 8192), (6.0, 12288), (8.0, 16384)],
            ))
        }
        other => Err(CliError::Parse(format!("{other:?} is not a table"))),
    }
}

fn solve_spec(spec: &ExperimentSpec) -> Result<SolveReport> {
    spec.validate()?;
    let (_, report) = solve(
        &spec.system(),
        &spec.mgrit_config(),
        spec.initial_state(),
        spec.final_time(),
        spec.nt,
    )?;
    Ok(report)
}

/// A single solve. Returns the report and its `iteration,residual` CSV.
pub fn run_solve(spec: &ExperimentSpec) -> Result<(SolveReport, String)> {
    let report = solve_spec(spec)?;
    let csv = csvio::write_run_csv(&report.residual_history)?;
    Ok((report, csv))
}

fn cell(report: &SolveReport) -> Cell {
    match report.status {
        SolveStatus::Converged => Cell::Iterations(report.iterations),
        SolveStatus::Stalled | SolveStatus::MaxIters => Cell::NotConverged,
        SolveStatus::Diverged => Cell::Diverged,
    }
}

/// Runs every cell of an iteration table. Solver failures are recorded in
/// their cell; configuration errors are reported before any solve starts.
pub fn run_table_with(
    spec: &ExperimentSpec,
    rows: &[Variant],
    columns: &[(f64, usize)],
) -> Result<IterationTable> {
    let cells: Vec<(Variant, f64, usize)> = rows
        .iter()
        .flat_map(|v| columns.iter().map(move |&(tf, nt)| (*v, tf, nt)))
        .collect();
    for (v, tf, nt) in &cells {
        let s = v.apply(spec, *tf, *nt);
        s.validate()?;
        TimeHierarchy::new(s.final_time(), s.nt, s.levels, s.cf)?;
    }
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|(v, tf, nt)| match solve_spec(&v.apply(spec, *tf, *nt)) {
            Ok(report) => cell(&report),
            Err(_) => Cell::Diverged,
        })
        .collect();
    let rows = rows
        .iter()
        .zip(results.chunks(columns.len()))
        .map(|(v, c)| (v.label(), c.to_vec()))
        .collect();
    Ok(IterationTable {
        columns: columns.to_vec(),
        rows,
    })
}

pub fn run_table(spec: &ExperimentSpec) -> Result<IterationTable> {
    let (rows, columns) = table_layout(spec.command)?;
    run_table_with(spec, &rows, &columns)
}

/// Per-iteration error against sequential time-marching at every fine
/// C-point, as `(iteration, t, ‖v_i − u_i‖₂)`. Runs exactly `max_iters`
/// V-cycles unless the solve converges or diverges first.
pub fn run_fig1(spec: &ExperimentSpec) -> Result<(SolveReport, Vec<(usize, f64, f64)>)> {
    spec.validate()?;
    let system = spec.system();
    let u0 = spec.initial_state();
    let config = mgrit_core::MgritConfig {
        detect_stall: false,
        ..spec.mgrit_config()
    };
    let h = spec.final_time() / spec.nt as f64;
    let fine: Scheme = FineScheme::from(spec.fine_scheme).into();
    let reference = sequential_solve(&system, &fine, u0, h, spec.nt)?;
    let mut mgrit = Mgrit::new(&system, config, u0, spec.final_time(), spec.nt)?;
    let report = mgrit.run(Some(&reference));
    let mut rows = Vec::new();
    if let Some(errors) = &report.error_history_vs_reference {
        for (k, errs) in errors.iter().enumerate() {
            for (c, e) in errs.iter().enumerate() {
                rows.push((k, mgrit.hierarchy().time(0, c * spec.cf), *e));
            }
        }
    }
    Ok((report, rows))
}

/// Residual histories of the four two-grid variants.
pub fn run_fig3(spec: &ExperimentSpec) -> Result<Vec<(String, Vec<f64>)>> {
    two_grid_variants(2)
        .par_iter()
        .map(|v| {
            let report = solve_spec(&v.apply(spec, spec.tf, spec.nt))?;
            Ok((v.label(), report.residual_history))
        })
        .collect()
}

pub const SWEEP_SCHEMES: [&str; 4] = [
    "forward-euler",
    "backward-euler",
    "theta-forward",
    "theta-backward",
];

/// Largest Lyapunov exponent of forward Euler, backward Euler and the θ
/// method with asymptotic θ, across the configured step sizes. The θ rows treat
/// each step as a coarse step over the smallest `h` in the list, with
/// `m = h / h_min`.
pub fn run_lyapunov_sweep(spec: &ExperimentSpec) -> Result<Vec<(String, f64, Option<f64>)>> {
    let system = spec.system();
    let u0 = spec.initial_state();
    let config = LyapunovConfig {
        spinup_time: spec.spinup_time,
        run_time: spec.run_time,
        reorth_interval: spec.reorth_interval,
    };
    config.validate()?;
    if spec.h_values.is_empty() || spec.h_values.iter().any(|h| !(*h > 0.0)) {
        return Err(CliError::Parse("step sizes must be positive".into()));
    }
    let h_min = spec.h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let jobs: Vec<(&str, f64)> = SWEEP_SCHEMES
        .iter()
        .flat_map(|s| spec.h_values.iter().map(move |h| (*s, *h)))
        .collect();
    jobs.par_iter()
        .map(|&(name, h)| {
            let m = h / h_min;
            let scheme = match name {
                "forward-euler" => Scheme::ForwardEuler,
                "backward-euler" => Scheme::backward_euler(),
                "theta-forward" => {
                    Scheme::theta(theta_asymptotic_ratio(m, FineScheme::ForwardEuler))
                }
                _ => Scheme::theta(theta_asymptotic_ratio(m, FineScheme::BackwardEuler)),
            };
            match lyapunov_spectrum(&system, &scheme, u0, h, &config) {
                Ok(l) => Ok((name.to_string(), h, Some(l[0]))),
                Err(e) if e.is_instability() => Ok((name.to_string(), h, None)),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}
