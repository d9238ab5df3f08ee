//! Command dispatch and output files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Command, ConfigError, RunConfig};
use crate::graphs::graph_property_suite;
use crate::problem::{ProblemSpec, SolverConfig};
use crate::stepper::{lambda_continuation, solve_transient, SolutionState, StepperError};
use crate::sweep::parallel_map;
use crate::verification::{
    apriori_bounds, dependence_check, energy_monitors, spatial_study, temporal_study, BoundReport, ConvergenceReport, EstimateReport,
    VerificationError,
};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_NONCONVERGENCE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Verification(#[from] VerificationError),
    #[error("{failures} graph property checks failed")]
    PropertyViolation { failures: usize },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn stepper_code(e: &StepperError) -> i32 {
    match e {
        StepperError::InvalidConfig(_) | StepperError::Problem(_) | StepperError::Graph(_) => EXIT_CONFIG,
        _ => EXIT_NONCONVERGENCE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Stepper(e) => stepper_code(e),
            CliError::Verification(e) => match e {
                VerificationError::BoundViolation { .. } | VerificationError::DependenceViolation { .. } => EXIT_VIOLATION,
                VerificationError::Stepper(s) => stepper_code(s),
                _ => EXIT_CONFIG,
            },
            CliError::PropertyViolation { .. } => EXIT_VIOLATION,
        }
    }
}

/// Files written by one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io_err = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let file = File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.files.push(path);
        Ok(())
    }
}

/// Executes `config.command`, writing outputs below `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutput, CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut o = Out { dir: out, files: Vec::new() };
    let result = match config.command {
        Command::GraphCheck => graph_check(config, &mut o),
        Command::Solve => solve(config, &mut o),
        Command::Continuation => continuation(config, &mut o),
        Command::Convergence => convergence(config, &mut o),
        Command::Dependence => dependence(config, &mut o),
    };
    result.map(|_| RunOutput { files: o.files })
}

/// Exit code of a finished run.
pub fn exit_code(result: &Result<RunOutput, CliError>) -> i32 {
    match result {
        Ok(_) => EXIT_SUCCESS,
        Err(e) => e.exit_code(),
    }
}

fn problem(config: &RunConfig) -> Result<&ProblemSpec, CliError> {
    config
        .problem
        .as_ref()
        .ok_or_else(|| ConfigError::Validation(format!("command '{}' needs a [problem] section", config.command)).into())
}

fn graph_check(config: &RunConfig, o: &mut Out<'_>) -> Result<(), CliError> {
    let plan = &config.graph_check;
    let reports = parallel_map(&plan.graphs, |g| graph_property_suite(g, &plan.lambdas, &plan.samples));
    let mut failures = 0;
    o.write("graph_check.csv", |w| {
        writeln!(w, "graph,property,lambda,x,observed,violation,tolerance,passed")?;
        for (g, r) in plan.graphs.iter().zip(&reports) {
            for c in &r.checks {
                let lambda = c.lambda.map_or(String::new(), |l| format!("{l:.16e}"));
                writeln!(
                    w,
                    "\"{g}\",{},{lambda},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    c.property.name(),
                    c.x,
                    c.observed,
                    c.violation,
                    c.tolerance,
                    c.passed
                )?;
            }
        }
        Ok(())
    })?;
    o.write("summary.txt", |w| {
        writeln!(w, "command = graph-check")?;
        for (g, r) in plan.graphs.iter().zip(&reports) {
            let failed = r.failures().count();
            failures += failed;
            writeln!(w, "graph = {g}")?;
            writeln!(w, "  checks = {}", r.checks.len())?;
            writeln!(w, "  failures = {failed}")?;
            writeln!(w, "  max_violation = {:.16e}", r.max_violation())?;
        }
        writeln!(w, "status = {}", if failures == 0 { "pass" } else { "fail" })
    })?;
    if failures > 0 {
        return Err(CliError::PropertyViolation { failures });
    }
    Ok(())
}

fn mass_coefficient(config: &SolverConfig, lambda: f64) -> f64 {
    if config.mass_regularization {
        lambda
    } else {
        0.0
    }
}

fn check_run(spec: &ProblemSpec, config: &SolverConfig, solution: &SolutionState) -> Result<(EstimateReport, BoundReport), CliError> {
    let report = energy_monitors(solution, spec)?;
    let bounds = apriori_bounds(&report, spec, solution, mass_coefficient(config, solution.lambda))?;
    Ok((report, bounds))
}

fn write_solution(o: &mut Out<'_>, solution: &SolutionState, report: &EstimateReport) -> Result<(), CliError> {
    o.write("solution.csv", |w| solution.write_csv(w))?;
    o.write("boundary.csv", |w| solution.write_boundary_csv(w))?;
    o.write("estimates.csv", |w| report.write_csv(w))
}

fn write_run_summary(w: &mut impl Write, solution: &SolutionState, bounds: &BoundReport) -> io::Result<()> {
    writeln!(w, "lambda = {:.16e}", solution.lambda)?;
    writeln!(w, "epsilon = {:.16e}", solution.epsilon)?;
    writeln!(w, "tau = {:.16e}", solution.tau)?;
    writeln!(w, "steps = {}", solution.steps())?;
    writeln!(w, "total_iterations = {}", solution.iterations.iter().sum::<usize>())?;
    writeln!(w, "max_residual = {:.16e}", solution.residuals.iter().fold(0.0_f64, |m, &r| m.max(r)))?;
    bounds.write_summary(w)
}

fn solve(config: &RunConfig, o: &mut Out<'_>) -> Result<(), CliError> {
    let spec = problem(config)?;
    let solution = solve_transient(spec, &config.solver)?;
    let (report, bounds) = check_run(spec, &config.solver, &solution)?;
    write_solution(o, &solution, &report)?;
    o.write("summary.txt", |w| {
        writeln!(w, "command = solve")?;
        write_run_summary(w, &solution, &bounds)
    })?;
    bounds.into_result()?;
    Ok(())
}

fn continuation(config: &RunConfig, o: &mut Out<'_>) -> Result<(), CliError> {
    let spec = problem(config)?;
    let cont = lambda_continuation(spec, &config.solver)?;
    let checks = cont
        .runs
        .iter()
        .map(|r| check_run(spec, &config.solver, &r.solution))
        .collect::<Result<Vec<_>, _>>()?;
    let last = cont.runs.len() - 1;
    write_solution(o, &cont.runs[last].solution, &checks[last].0)?;
    o.write("continuation.csv", |w| {
        writeln!(w, "lambda,cauchy_diff,dual_norm,total_iterations,bounds_passed")?;
        for (j, (run, (_, bounds))) in cont.runs.iter().zip(&checks).enumerate() {
            let diff = if j == 0 { String::new() } else { format!("{:.16e}", cont.cauchy_diffs[j - 1]) };
            writeln!(
                w,
                "{:.16e},{diff},{:.16e},{},{}",
                run.lambda,
                run.dual_norm,
                run.solution.iterations.iter().sum::<usize>(),
                bounds.all_passed()
            )?;
        }
        Ok(())
    })?;
    o.write("summary.txt", |w| {
        writeln!(w, "command = continuation")?;
        writeln!(w, "runs = {}", cont.runs.len())?;
        let decreasing = cont.cauchy_diffs.windows(2).all(|p| p[1] < p[0]);
        writeln!(w, "cauchy_strictly_decreasing = {decreasing}")?;
        let duals: Vec<f64> = cont.runs.iter().map(|r| r.dual_norm).collect();
        let (lo, hi) = duals.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        writeln!(w, "dual_norm_ratio = {:.16e}", if lo > 0.0 { hi / lo } else { 1.0 })?;
        write_run_summary(w, &cont.runs[last].solution, &checks[last].1)
    })?;
    for (_, bounds) in checks {
        bounds.into_result()?;
    }
    Ok(())
}

fn convergence(config: &RunConfig, o: &mut Out<'_>) -> Result<(), CliError> {
    let plan = config
        .convergence
        .as_ref()
        .ok_or_else(|| ConfigError::Validation("command 'convergence' needs a [convergence] section".into()))?;
    let space = spatial_study(&plan.setup, &plan.resolutions, plan.space_tau)?;
    let time = temporal_study(&plan.setup, &plan.taus)?;
    o.write("convergence.csv", |w| {
        space.write_csv(w)?;
        for (p, e) in time.parameters.iter().zip(&time.errors) {
            writeln!(w, "{},{:.16e},{:.16e}", time.axis, p, e)?;
        }
        Ok(())
    })?;
    let line = |w: &mut BufWriter<File>, r: &ConvergenceReport| -> io::Result<()> {
        match r.estimate.order {
            Some(order) => writeln!(w, "order_{} = {:.16e}", r.axis, order)?,
            None => writeln!(w, "order_{} = saturated", r.axis)?,
        }
        writeln!(w, "saturated_{} = {}", r.axis, r.estimate.saturated)
    };
    o.write("summary.txt", |w| {
        writeln!(w, "command = convergence")?;
        writeln!(w, "preset = {}", plan.setup.preset)?;
        line(w, &space)?;
        line(w, &time)
    })
}

fn dependence(config: &RunConfig, o: &mut Out<'_>) -> Result<(), CliError> {
    let spec1 = problem(config)?;
    let spec2 = config
        .perturbed
        .as_ref()
        .ok_or_else(|| ConfigError::Validation("command 'dependence' needs a [perturbation] section".into()))?;
    let report = dependence_check(spec1, spec2, &config.solver)?;
    o.write("dependence.csv", |w| {
        writeln!(w, "alpha,trace_constant,sup_l2_sq,l2h1_sq,lhs,rhs,c_dep,margin")?;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            report.alpha, report.trace_constant, report.sup_l2_sq, report.l2h1_sq, report.lhs, report.rhs, report.c_dep, report.margin
        )
    })?;
    o.write("summary.txt", |w| {
        writeln!(w, "command = dependence")?;
        report.write_summary(w)
    })?;
    report.into_result()?;
    Ok(())
}
