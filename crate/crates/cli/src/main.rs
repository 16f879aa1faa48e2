use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexcolloc_cli::config::{parse_flex, parse_mode, parse_values};
use flexcolloc_cli::emit::{
    read_solution_file, sibling, write_assessment, write_records, write_records_file, write_samples_file,
    write_solution_file, AssessmentRecord,
};
use flexcolloc_cli::{run, sweep, CliError, ConfigFile, ExperimentConfig, Format, RunOutput, SweepAxis};
use flexcolloc_core::assessment::{assess, AssessTolerances};
use flexcolloc_core::transcription::Trajectory;

/// Exit code when a run finished without converging.
const NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "flexcolloc", version, about = "Bernstein-constrained collocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and assess one configuration.
    Run(Common),
    /// Solve one configuration per value of a degree or flexibility axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// degree or flex
        #[arg(long)]
        axis: Option<String>,
        /// Comma list, or an inclusive integer range such as 3..10.
        #[arg(long)]
        values: Option<String>,
    },
    /// Re-assess a saved solution file.
    Assess {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Args)]
struct Common {
    /// key = value file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// a, b or c
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    intervals: Option<usize>,
    /// One flexibility, or one per sub-interval separated by commas.
    #[arg(long)]
    flex: Option<String>,
    /// Drop the Bernstein bound of the sine fit.
    #[arg(long)]
    unconstrained: bool,
    #[arg(long)]
    warm_start: bool,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path stem; extensions are appended.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, ConfigFile), CliError> {
        let mut c = ExperimentConfig::default();
        let file = match &self.config {
            Some(p) => ConfigFile::read(p)?,
            None => ConfigFile::default(),
        };
        file.apply(&mut c)?;
        if let Some(p) = &self.problem {
            c.set("problem", p)?;
        }
        if let Some(m) = &self.mode {
            c.mode = parse_mode(m)?;
        }
        if let Some(v) = self.degree {
            c.degree = v;
        }
        if let Some(v) = self.intervals {
            c.intervals = v;
        }
        if let Some(f) = &self.flex {
            c.flex = parse_flex(f)?;
        }
        if self.unconstrained {
            c.constrained = false;
        }
        if self.warm_start {
            c.warm_start = true;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(f) = &self.format {
            c.format = f.parse()?;
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
        c.validate()?;
        Ok((c, file))
    }
}

fn emit(config: &ExperimentConfig, outputs: &[RunOutput], label: impl Fn(usize) -> String) -> Result<(), CliError> {
    let records: Vec<_> = outputs.iter().map(|o| o.record.clone()).collect();
    match &config.out {
        None => write_records(&records, config.format, io::stdout().lock()),
        Some(stem) => {
            write_records_file(stem, &records, config.format)?;
            for (i, o) in outputs.iter().enumerate() {
                if o.samples.rows.is_empty() {
                    continue;
                }
                write_samples_file(&sibling(stem, &format!("{}.trajectory.csv", label(i))), &o.samples)?;
                if let Some(s) = &o.solution {
                    write_solution_file(&sibling(stem, &format!("{}.solution.json", label(i))), s)?;
                }
            }
            Ok(())
        }
    }
}

fn exit_for(outputs: &[RunOutput]) -> ExitCode {
    if outputs.iter().all(|o| o.record.converged()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NOT_CONVERGED)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(common) => {
            let (config, file) = common.resolve()?;
            if file.axis.is_some() || file.values.is_some() {
                return Err(CliError::Config("sweep settings in a run config".into()));
            }
            let out = run(&config, None)?;
            let outputs = [out];
            emit(&config, &outputs, |_| String::new())?;
            Ok(exit_for(&outputs))
        }
        Command::Sweep { common, axis, values } => {
            let (config, file) = common.resolve()?;
            let axis: SweepAxis = match axis {
                Some(a) => a.parse()?,
                None => file.axis.ok_or_else(|| CliError::Config("sweep needs an axis".into()))?,
            };
            let values = match values {
                Some(v) => parse_values(&v)?,
                None => file.values.clone().ok_or_else(|| CliError::Config("sweep needs values".into()))?,
            };
            let outputs = sweep(&config, axis, &values)?;
            emit(&config, &outputs, |i| format!(".{axis}-{}", values[i]))?;
            Ok(exit_for(&outputs))
        }
        Command::Assess { file, out, format } => {
            let format: Format = format.parse()?;
            let saved = read_solution_file(&file)?;
            let dop = saved.problem.dop().ok_or_else(|| CliError::Config(format!("{} has no trajectory", saved.problem)))?;
            let traj = Trajectory::from_data(saved.trajectory)?;
            let report = assess(&traj, &dop, AssessTolerances::default())?;
            let rec = AssessmentRecord::new(saved.problem.name(), &report);
            match out {
                None => write_assessment(&rec, format, io::stdout().lock())?,
                Some(stem) => {
                    let path = sibling(&stem, &format!(".{}", format.extension()));
                    let f = std::fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    write_assessment(&rec, format, f)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLEXCOLLOC_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("flexcolloc: {e}");
            ExitCode::FAILURE
        }
    }
}
