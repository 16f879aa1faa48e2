//! Assemble, solve, assess: one experiment point or a sweep of them.

use std::time::Instant;

use flexcolloc_core::assessment::{assess, AssessTolerances};
use flexcolloc_core::problems::{sine_approximation, ProblemKind, SineApproximation, SineMesh, SINE_FLEXIBILITY, SINE_INTERVALS};
use flexcolloc_core::transcription::{assemble, AssembledProblem, ConstraintMode, FlexibleMesh, Trajectory, TrajectoryData};
use flexcolloc_nlp::{solve, NlpProblem, NlpSolution, SolveStatus, SolverOptions};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SweepAxis};
use crate::CliError;

/// Perturbed restarts tried after a failed solve.
pub const RESTARTS: usize = 3;
/// Relative size of a restart perturbation.
pub const RESTART_SCALE: f64 = 0.1;
/// Dense samples per sub-interval in trajectory output.
pub const SAMPLES_PER_INTERVAL: usize = 200;

/// Config echo, solver outcome and quality metrics of one run. Metrics that
/// do not apply to the problem are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub problem: String,
    pub mode: String,
    pub degree: usize,
    pub intervals: usize,
    pub flex: Vec<f64>,
    pub constrained: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub warm_start: bool,
    pub status: String,
    pub error: Option<String>,
    pub iterations: usize,
    pub attempts: usize,
    pub wall_time_s: f64,
    pub objective: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub cost: Option<f64>,
    pub inequality_violation: Option<f64>,
    pub dynamic_violation: Option<f64>,
    pub l2_error: Option<f64>,
    pub max_abs: Option<f64>,
    pub breakpoints: Vec<f64>,
}

impl ResultRecord {
    fn echo(config: &ExperimentConfig) -> Self {
        Self {
            problem: config.problem.name().to_string(),
            mode: config.mode.letter().to_string(),
            degree: config.degree,
            intervals: config.intervals,
            flex: config.flex.clone(),
            constrained: config.constrained,
            tol: config.tol,
            max_iter: config.max_iter,
            seed: config.seed,
            warm_start: config.warm_start,
            status: String::new(),
            error: None,
            iterations: 0,
            attempts: 0,
            wall_time_s: 0.0,
            objective: None,
            kkt_residual: None,
            cost: None,
            inequality_violation: None,
            dynamic_violation: None,
            l2_error: None,
            max_abs: None,
            breakpoints: Vec::new(),
        }
    }

    /// Record of a point that produced no solution.
    pub fn failed(config: &ExperimentConfig, err: &CliError) -> Self {
        Self { status: "error".into(), error: Some(err.to_string()), ..Self::echo(config) }
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged.as_str()
    }
}

/// Dense samples for plotting, one row per time.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// What `assess` needs to re-evaluate a DOP solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedSolution {
    pub problem: ProblemKind,
    pub trajectory: TrajectoryData,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub samples: Samples,
    pub solution: Option<SavedSolution>,
    pub trajectory: Option<Trajectory>,
}

fn options(config: &ExperimentConfig) -> SolverOptions {
    SolverOptions { tol: config.tol, max_iter: config.max_iter }
}

/// Solve from the problem's initial guess, then from the `restarts` guesses
/// in turn while unconverged. Returns the chosen solution and the number of
/// attempts.
fn solve_with_restarts(
    nlp: &mut NlpProblem,
    opts: &SolverOptions,
    restarts: Vec<Vec<f64>>,
) -> Result<(NlpSolution, usize), CliError> {
    let mut best: Option<NlpSolution> = None;
    let mut last_err = None;
    let total = restarts.len() + 1;
    let mut guesses = restarts.into_iter();
    for attempt in 0..total {
        if attempt > 0 {
            nlp.initial_guess = guesses.next().expect("one guess per restart");
            info!("restart {attempt} of {}", total - 1);
        }
        match solve(nlp, opts) {
            Ok(sol) => {
                info!("attempt {attempt}: {} after {} iterations", sol.status.as_str(), sol.iterations);
                if sol.status == SolveStatus::Converged {
                    return Ok((sol, attempt + 1));
                }
                if best.as_ref().map_or(true, |b| sol.kkt_residual < b.kkt_residual) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                warn!("attempt {attempt} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    match (best, last_err) {
        (Some(sol), _) => Ok((sol, total)),
        (None, Some(e)) => Err(CliError::Solver(e.to_string())),
        (None, None) => unreachable!("at least one attempt runs"),
    }
}

fn mesh_for(config: &ExperimentConfig, t0: f64, tf: f64) -> Result<FlexibleMesh, CliError> {
    let nominal = FlexibleMesh::equispaced(t0, tf, config.intervals, 0.0)?.nominal().to_vec();
    Ok(FlexibleMesh::new(nominal, config.flex_per_interval())?)
}

/// One experiment point. `warm` seeds the solve from an earlier trajectory.
pub fn run(config: &ExperimentConfig, warm: Option<&Trajectory>) -> Result<RunOutput, CliError> {
    config.validate()?;
    let start = Instant::now();
    let mut out = match config.problem.dop() {
        Some(_) => run_dop(config, warm)?,
        None => run_sine(config)?,
    };
    out.record.wall_time_s = start.elapsed().as_secs_f64();
    info!(
        "{} mode {} n={} n_h={}: {} in {:.2}s",
        config.problem,
        config.mode.letter(),
        config.degree,
        config.intervals,
        out.record.status,
        out.record.wall_time_s
    );
    Ok(out)
}

fn run_dop(config: &ExperimentConfig, warm: Option<&Trajectory>) -> Result<RunOutput, CliError> {
    let dop = config.problem.dop().expect("caller checked");
    let mesh = mesh_for(config, dop.t0, dop.tf)?;
    let mut problem: AssembledProblem = assemble(&dop, config.degree, &mesh, config.mode)?;
    if let Some(t) = warm {
        problem.nlp.initial_guess = problem.warm_start(t)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let restarts = (0..RESTARTS).map(|_| problem.perturbed_guess(&mut rng, RESTART_SCALE)).collect();
    let (sol, attempts) = solve_with_restarts(&mut problem.nlp, &options(config), restarts)?;
    let traj = problem.trajectory(&sol.z)?;
    let report = assess(&traj, &dop, AssessTolerances::default())?;
    let mut record = ResultRecord::echo(config);
    record.status = sol.status.as_str().into();
    record.iterations = sol.iterations;
    record.attempts = attempts;
    record.objective = Some(sol.objective);
    record.kkt_residual = Some(sol.kkt_residual);
    record.cost = Some(report.cost);
    record.inequality_violation = Some(report.inequality_violation);
    record.dynamic_violation = Some(report.dynamic_violation);
    record.breakpoints = traj.breakpoints().to_vec();

    let mut columns = vec!["t".to_string()];
    columns.extend((1..=dop.n_x).map(|k| format!("x_{k}")));
    columns.extend((1..=dop.n_u).map(|k| format!("u_{k}")));
    let rows = traj
        .dense_samples(SAMPLES_PER_INTERVAL)
        .into_iter()
        .map(|s| std::iter::once(s.t).chain(s.x).chain(s.u).collect())
        .collect();
    Ok(RunOutput {
        record,
        samples: Samples { columns, rows },
        solution: Some(SavedSolution { problem: config.problem, trajectory: traj.data().clone() }),
        trajectory: Some(traj),
    })
}

fn sine_problem(config: &ExperimentConfig, mesh: SineMesh, constrained: bool) -> Result<SineApproximation, CliError> {
    Ok(sine_approximation(config.degree, mesh, constrained)?)
}

fn solve_sine(config: &ExperimentConfig, s: &mut SineApproximation) -> Result<(NlpSolution, usize), CliError> {
    let pieces = SINE_INTERVALS * (s.n_p + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let restarts = (0..RESTARTS)
        .map(|_| {
            let mut z = s.nlp.initial_guess.clone();
            for v in &mut z[..pieces] {
                *v += RESTART_SCALE * rng.gen_range(-1.0..=1.0);
            }
            z
        })
        .collect();
    solve_with_restarts(&mut s.nlp, &options(config), restarts)
}

/// The sine fit: mode `b` is the equispaced mesh, mode `c` the flexible one.
/// An unconstrained flexible fit is solved on the breakpoints chosen by the
/// constrained flexible fit.
fn run_sine(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mesh = match config.mode {
        ConstraintMode::SamplePoints => {
            return Err(CliError::Config("sine-approx supports modes b (equispaced) and c (flexible)".into()))
        }
        ConstraintMode::BernsteinFixed => SineMesh::Equispaced,
        ConstraintMode::BernsteinFlexible => SineMesh::Flexible,
    };
    if config.intervals != SINE_INTERVALS || config.flex_per_interval().iter().any(|&p| p != SINE_FLEXIBILITY) {
        return Err(CliError::Config(format!(
            "sine-approx uses {SINE_INTERVALS} sub-intervals with flex {SINE_FLEXIBILITY}"
        )));
    }
    let mut attempts = 0;
    let mut iterations = 0;
    let mut s = sine_problem(config, mesh, config.constrained)?;
    if mesh == SineMesh::Flexible && !config.constrained {
        let mut flexed = sine_problem(config, mesh, true)?;
        let (sol, a) = solve_sine(config, &mut flexed)?;
        attempts += a;
        iterations += sol.iterations;
        let bp = flexed.breakpoints(&sol.z);
        s.pin_breakpoints([bp[1], bp[2]])?;
    }
    let (sol, a) = solve_sine(config, &mut s)?;
    let mut record = ResultRecord::echo(config);
    record.status = sol.status.as_str().into();
    record.iterations = iterations + sol.iterations;
    record.attempts = attempts + a;
    record.objective = Some(sol.objective);
    record.kkt_residual = Some(sol.kkt_residual);
    record.l2_error = Some(s.l2_error(&sol.z)?);
    record.max_abs = Some(s.max_abs(&sol.z, 10_000));
    let bp = s.breakpoints(&sol.z);
    let rows = (0..SINE_INTERVALS)
        .flat_map(|i| {
            let (a, b) = (bp[i], bp[i + 1]);
            (0..SAMPLES_PER_INTERVAL).map(move |q| a + (b - a) * q as f64 / (SAMPLES_PER_INTERVAL - 1) as f64)
        })
        .map(|t| vec![t, s.eval(&sol.z, t)])
        .collect();
    record.breakpoints = bp;
    Ok(RunOutput {
        record,
        samples: Samples { columns: vec!["t".into(), "y".into()], rows },
        solution: None,
        trajectory: None,
    })
}

/// Configuration of sweep point `value`.
pub fn point_config(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig, CliError> {
    let mut c = base.clone();
    match axis {
        SweepAxis::Degree => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(CliError::Config(format!("degree {value} is not a positive integer")));
            }
            c.degree = value as usize;
        }
        SweepAxis::Flex => c.flex = vec![value],
    }
    c.validate()?;
    Ok(c)
}

/// One run per value, in value order. Failed points become records with an
/// error status. Degree sweeps with warm starts run sequentially; other
/// sweeps use up to `base.jobs` threads.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<RunOutput>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|&v| point_config(base, axis, v)).collect::<Result<Vec<_>, _>>()?;
    let settle = |c: &ExperimentConfig, r: Result<RunOutput, CliError>| {
        r.unwrap_or_else(|e| {
            warn!("sweep point {axis} failed: {e}");
            RunOutput { record: ResultRecord::failed(c, &e), samples: Samples { columns: vec![], rows: vec![] }, solution: None, trajectory: None }
        })
    };
    let outputs: Vec<RunOutput> = if base.warm_start && axis == SweepAxis::Degree {
        let mut prev: Option<Trajectory> = None;
        let mut outs = Vec::with_capacity(configs.len());
        for c in &configs {
            let out = settle(c, run(c, prev.as_ref()));
            if out.record.converged() {
                prev = out.trajectory.clone();
            }
            outs.push(out);
        }
        outs
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(base.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        pool.install(|| configs.par_iter().map(|c| settle(c, run(c, None))).collect())
    };
    if outputs.iter().all(|o| o.record.status == "error") {
        return Err(CliError::AllFailed(outputs.len()));
    }
    Ok(outputs)
}
