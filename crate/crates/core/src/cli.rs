//! The `impulse` command line.
//!
//! Exit codes: 0 when the run succeeds and every check passes, 1 when a check
//! fails, 2 on input or runtime errors (message on standard error).

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adjoint::{pull_back_adjoint, solve_transformed_adjoint};
use crate::certify::{certify, CertifyOptions, Orientation};
use crate::error::{Error, Result};
use crate::io::{self, Format, Table};
use crate::propagate::{approximation_check, integrate_impulsive, random_pairs, robustness_gap, FLOWBOX_TOL};
use crate::sampling;
use crate::system::SystemSpec;
use crate::transform::TransformContext;

#[derive(Debug, Parser)]
#[command(name = "impulse", version, about = "Simulate and certify impulsive control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a system and audit commutativity of its impulse fields.
    Validate(AuditArgs),
    /// Check that the straightening transform rectifies every impulse field.
    Flowbox(AuditArgs),
    /// Integrate the impulsive system and write the trajectory.
    Simulate(RunArgs),
    /// Integrate, solve the adjoint and write the original-coordinate costate.
    Adjoint(RunArgs),
    /// Evaluate the necessary conditions along a candidate.
    Certify(CertifyArgs),
    /// Empirical robustness constant over random control pairs.
    Robustness(RobustnessArgs),
    /// Convergence of mollified controls to the impulsive trajectory.
    Approx(ApproxArgs),
}

#[derive(Debug, Args)]
pub struct SystemArg {
    #[arg(long)]
    pub system: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Table format. Reports are always JSON.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub system: SystemArg,
    /// Pass threshold; 1e-8 for validate, 1e-6 for flowbox.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sample count; 200 for validate, 100 for flowbox.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Half-width of the state box around x0.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Uniform samples from this seed instead of the Halton sequence.
    #[arg(long)]
    pub seed: Option<u64>,
    /// RK4 steps per unit flow time.
    #[arg(long, default_value_t = crate::transform::DEFAULT_FLOW_STEPS)]
    pub flow_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub control: PathBuf,
    #[arg(long)]
    pub ordinary: PathBuf,
    /// Integration step; T/1000 when absent.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = crate::transform::DEFAULT_FLOW_STEPS)]
    pub flow_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub candidate_u: PathBuf,
    #[arg(long)]
    pub candidate_a: PathBuf,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 9)]
    pub grid_u: usize,
    #[arg(long, default_value_t = 9)]
    pub grid_a: usize,
    #[arg(long, value_enum, default_value = "derived")]
    pub nc1_orientation: Orientation,
    /// One-sided admissibility radius.
    #[arg(long, default_value_t = 1e-6)]
    pub sigma0: f64,
    /// Upper bound on probe times.
    #[arg(long, default_value_t = 100)]
    pub max_times: usize,
    /// Random unit directions added to the second-order direction set.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::transform::DEFAULT_FLOW_STEPS)]
    pub flow_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub ordinary: PathBuf,
    #[arg(long)]
    pub step: Option<f64>,
    /// Rows with zero input gap are inconsistent when the output gap exceeds this.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Number of random control pairs.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Uniform knots per random control.
    #[arg(long, default_value_t = 6)]
    pub knots: usize,
    /// Half-width of the initial-state box around x0.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub control: PathBuf,
    #[arg(long)]
    pub ordinary: PathBuf,
    #[arg(long)]
    pub step: Option<f64>,
    /// Mollification parameters, increasing.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 80])]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = crate::transform::DEFAULT_FLOW_STEPS)]
    pub flow_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Outcome of a successful run: the rendered output and whether every check passed.
struct Outcome {
    text: String,
    pass: bool,
    summary: String,
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok((outcome, out)) => {
            if let Err(e) = emit(out, &outcome.text) {
                eprintln!("impulse: {e}");
                return 2;
            }
            eprintln!("{}", outcome.summary);
            if outcome.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("impulse: {e}");
            exit_code(&e)
        }
    }
}

/// 1 for failed checks surfaced as errors, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::FlowBox(_) | Error::TerminalMismatch(_) => 1,
        Error::Stage { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("IMPULSE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Fails harmlessly when the global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(format!("stdout: {e}"))),
    }
}

fn context(spec: &SystemSpec, flow_steps: usize) -> Result<TransformContext<'_>> {
    TransformContext::new(spec).with_steps(flow_steps)
}

fn step_or_default(spec: &SystemSpec, step: Option<f64>) -> f64 {
    step.unwrap_or(spec.horizon() / 1000.0)
}

fn execute(command: &Command) -> Result<(Outcome, Option<&Path>)> {
    match command {
        Command::Validate(args) => Ok((validate(args)?, args.output.out.as_deref())),
        Command::Flowbox(args) => Ok((flowbox(args)?, args.output.out.as_deref())),
        Command::Simulate(args) => Ok((simulate(args, false)?, args.output.out.as_deref())),
        Command::Adjoint(args) => Ok((simulate(args, true)?, args.output.out.as_deref())),
        Command::Certify(args) => Ok((certify_cmd(args)?, args.output.out.as_deref())),
        Command::Robustness(args) => Ok((robustness(args)?, args.output.out.as_deref())),
        Command::Approx(args) => Ok((approx(args)?, args.output.out.as_deref())),
    }
}

fn audit_samples(spec: &SystemSpec, args: &AuditArgs, default: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let count = args.samples.unwrap_or(default);
    sampling::state_control_points(spec.x0(), args.radius, spec.u_box(), count, args.seed)
}

fn validate(args: &AuditArgs) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let samples = audit_samples(&spec, args, 200);
    let report = spec.check_commutativity(&samples, args.tol.unwrap_or(1e-8));
    let worst = report
        .pairs
        .iter()
        .filter(|p| !p.pass)
        .map(|p| format!(" pair ({},{}) max bracket norm {:e}", p.alpha, p.beta, p.max_norm))
        .collect::<String>();
    Ok(Outcome {
        text: io::to_json_pretty(&report),
        pass: report.pass,
        summary: format!("validate: {}{worst}", verdict(report.pass)),
    })
}

fn flowbox(args: &AuditArgs) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let ctx = context(&spec, args.flow_steps)?;
    let samples = audit_samples(&spec, args, 100);
    let report = ctx.verify_flowbox(&samples, args.tol.unwrap_or(FLOWBOX_TOL));
    Ok(Outcome {
        text: io::to_json_pretty(&report),
        pass: report.pass,
        summary: format!(
            "flowbox: {} max residual {:e}",
            verdict(report.pass),
            report.max_residual
        ),
    })
}

fn simulate(args: &RunArgs, with_adjoint: bool) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let ctx = context(&spec, args.flow_steps)?;
    let (u, a) = io::load_signals(&spec, &args.control, &args.ordinary)?;
    let traj = integrate_impulsive(&ctx, &u, &a, step_or_default(&spec, args.step))?;
    let (table, summary) = if with_adjoint {
        let arc = solve_transformed_adjoint(&ctx, &traj).map_err(|e| e.in_stage("adjoint"))?;
        let arc = pull_back_adjoint(&ctx, &arc, &traj).map_err(|e| e.in_stage("pull-back"))?;
        let p0 = &arc.nodes()[0].p_right;
        (io::adjoint_table(&arc, &traj), format!("adjoint: ok p(0+) = {p0:?}"))
    } else {
        (
            io::trajectory_table(&traj),
            format!("simulate: ok x(T) = {:?}", traj.final_state()),
        )
    };
    Ok(Outcome {
        text: table.render(args.output.format),
        pass: true,
        summary,
    })
}

fn certify_cmd(args: &CertifyArgs) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let ctx = context(&spec, args.flow_steps)?;
    let (u, a) = io::load_signals(&spec, &args.candidate_u, &args.candidate_a)?;
    let options = CertifyOptions {
        step: args.step,
        tol: args.tol,
        grid_u: args.grid_u,
        grid_a: args.grid_a,
        nc1_orientation: args.nc1_orientation,
        sigma0: args.sigma0,
        max_times: args.max_times,
        random_directions: args.samples,
        seed: args.seed,
        ..CertifyOptions::default()
    };
    let report = certify(&ctx, &u, &a, &options)?;
    let failed: String = report
        .conditions
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!(" {} (margin {:e})", c.condition, c.margin))
        .collect();
    Ok(Outcome {
        text: io::to_json_pretty(&report),
        pass: report.pass,
        summary: format!("certify: {}{failed}", verdict(report.pass)),
    })
}

fn robustness(args: &RobustnessArgs) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let a = io::read_ordinary(&args.ordinary, &spec)?;
    let pairs = random_pairs(&spec, args.samples, args.knots, args.radius, args.seed);
    let report = robustness_gap(&spec, &pairs, &a, step_or_default(&spec, args.step), args.tol)?;
    let pass = report.max_ratio.is_finite() && report.rows.iter().all(|r| !r.inconsistent);
    Ok(Outcome {
        text: io::robustness_table(&report).render(args.output.format),
        pass,
        summary: format!("robustness: {} max ratio {:e}", verdict(pass), report.max_ratio),
    })
}

fn approx(args: &ApproxArgs) -> Result<Outcome> {
    let spec = io::read_system(&args.system.system)?;
    let ctx = context(&spec, args.flow_steps)?;
    let (u, a) = io::load_signals(&spec, &args.control, &args.ordinary)?;
    let rows = approximation_check(&ctx, &u, &a, &args.ks, step_or_default(&spec, args.step))?;
    let table: Table = io::approx_table(&rows);
    let ratios: Vec<String> = rows.iter().filter_map(|r| r.ratio).map(|r| format!("{r:.3}")).collect();
    Ok(Outcome {
        text: table.render(args.output.format),
        pass: true,
        summary: format!("approx: ok ratios [{}]", ratios.join(", ")),
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "impulse",
            "certify",
            "--system",
            "s.json",
            "--candidate-u",
            "u.json",
            "--candidate-a",
            "a.json",
            "--nc1-orientation",
            "printed",
            "--grid-u",
            "5",
            "--format",
            "json",
        ])
        .unwrap();
        match cli.command {
            Command::Certify(c) => {
                assert_eq!(c.nc1_orientation, Orientation::Printed);
                assert_eq!(c.grid_u, 5);
                assert_eq!(c.grid_a, 9);
                assert_eq!(c.output.format, Format::Json);
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from([
            "impulse",
            "approx",
            "--system",
            "s",
            "--control",
            "c",
            "--ordinary",
            "a",
            "--ks",
            "5,10",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Approx(ref a) if a.ks == vec![5, 10]));
    }

    #[test]
    fn usage_errors_exit_two() {
        for argv in [&["impulse", "simulate", "--system"][..], &["impulse", "frobnicate"]] {
            let e = Cli::try_parse_from(argv).unwrap_err();
            assert!(e.use_stderr());
        }
        assert_eq!(run(["impulse", "validate", "--system", "/nonexistent/system.json"]), 2);
    }

    #[test]
    fn check_failures_exit_one() {
        assert_eq!(exit_code(&Error::FlowBox(1.0).in_stage("integrate")), 1);
        assert_eq!(exit_code(&Error::TerminalMismatch(1.0)), 1);
        assert_eq!(exit_code(&Error::Blowup(1e12)), 2);
    }
}
