//! `dmpcorr`: fit, roll out and correct DMPs from CSV demonstrations.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
//! failure. Diagnostics go to stderr; results go to files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmpcorr_core::dmp::{DEFAULT_DT, DEFAULT_N_BASIS};
use dmpcorr_core::io;
use dmpcorr_core::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};
use dmpcorr_core::{
    correct, fit, rollout, BlendConfig, CorrectionRequest, DmpParams, Error, ErrorClass,
    FitOptions, Gains, Trajectory,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "dmpcorr",
    version,
    about = "DMP fitting, rollout and corrective merging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a DMP to a demonstration CSV.
    Fit(FitArgs),
    /// Integrate a DMP and write the trajectory as CSV.
    Rollout(RolloutArgs),
    /// Merge a deficient trajectory with a corrective demonstration and refit.
    Correct(CorrectArgs),
    /// Write a synthetic deficient/corrective pair.
    Generate(GenerateArgs),
    /// Copy a DMP with a new goal.
    SetGoal(SetGoalArgs),
    /// Copy a DMP with a new time constant.
    SetTau(SetTauArgs),
    /// Summarize a DMP JSON or trajectory CSV file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct GainArgs {
    #[arg(long, default_value_t = 25.0)]
    alpha_z: f64,
    #[arg(long, default_value_t = 6.25)]
    beta_z: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_x: f64,
}

impl GainArgs {
    fn gains(&self) -> Gains {
        Gains {
            alpha_z: self.alpha_z,
            beta_z: self.beta_z,
            alpha_x: self.alpha_x,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    demo: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N_BASIS)]
    n_basis: usize,
    /// Time constant in seconds, or `auto` for the demonstration duration.
    #[arg(long, default_value = "auto", value_parser = auto_or_f64)]
    tau: Auto,
    #[command(flatten)]
    gains: GainArgs,
}

#[derive(Debug, Args)]
struct RolloutArgs {
    #[arg(long)]
    dmp: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated start position; defaults to the DMP's start.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Seconds, or `auto` for 1.5 tau.
    #[arg(long, default_value = "auto", value_parser = auto_or_f64)]
    duration: Auto,
}

#[derive(Debug, Args)]
struct CorrectArgs {
    #[arg(long)]
    deficient: PathBuf,
    #[arg(long)]
    corrective: PathBuf,
    /// Row index (0-based, header excluded) of the first retained corrective sample.
    #[arg(long)]
    cut: usize,
    #[arg(long)]
    out_dmp: PathBuf,
    #[arg(long)]
    out_merged: PathBuf,
    /// Curvature penalty weight of the blend.
    #[arg(long, default_value_t = BlendConfig::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_N_BASIS)]
    n_basis: usize,
    #[command(flatten)]
    gains: GainArgs,
    /// Also write a long-format overlay CSV (`series,t,q1..qd`) with the
    /// deficient, corrective, merged and rolled-out trajectories plus the two
    /// split markers.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    dims: usize,
}

#[derive(Debug, Args)]
struct SetGoalArgs {
    #[arg(long)]
    dmp: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    goal: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SetTauArgs {
    #[arg(long)]
    dmp: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct InspectArgs {
    #[arg(long)]
    dmp: Option<PathBuf>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    fn or(self, default: f64) -> f64 {
        match self {
            Auto::Auto => default,
            Auto::Value(v) => v,
        }
    }
}

fn auto_or_f64(s: &str) -> Result<Auto, String> {
    if s == "auto" {
        return Ok(Auto::Auto);
    }
    s.parse()
        .map(Auto::Value)
        .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

/// Contents of `scenario.json` written by `generate`.
#[derive(Debug, Serialize)]
struct ScenarioFile {
    scenario: ScenarioKind,
    seed: u64,
    dims: usize,
    dt: f64,
    corrective_cut: usize,
    goal: Vec<f64>,
    deficient: &'static str,
    corrective: &'static str,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Data | ErrorClass::Io => 2,
                ErrorClass::Numeric => 3,
            })
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit(a) => {
            let demo = load_trajectory(&a.demo)?;
            let opts = FitOptions {
                tau: match a.tau {
                    Auto::Auto => None,
                    Auto::Value(v) => Some(v),
                },
                gains: a.gains.gains(),
                n_basis: a.n_basis,
            };
            let params = fit(&demo, &opts)?;
            save_dmp(&params, &a.out)?;
            eprintln!(
                "fitted {} dims, {} basis functions, tau = {} s",
                params.dims, params.n_basis, params.tau
            );
        }
        Command::Rollout(a) => {
            let params = load_dmp(&a.dmp)?;
            let start = a.start.unwrap_or_else(|| params.start.clone());
            let traj = rollout(&params, &start, a.dt, a.duration.or(1.5 * params.tau))?;
            save_trajectory(&traj, &a.out)?;
            eprintln!("wrote {} samples", traj.len());
        }
        Command::Correct(a) => correct_cmd(a)?,
        Command::Generate(a) => {
            let spec = ScenarioSpec {
                dims: a.dims,
                ..ScenarioSpec::new(a.scenario)
            };
            let sc = generate_scenario(&spec, a.seed)?;
            with_path(
                &a.out_dir,
                fs::create_dir_all(&a.out_dir).map_err(Error::from),
            )?;
            save_trajectory(&sc.deficient, a.out_dir.join("deficient.csv"))?;
            save_trajectory(&sc.corrective, a.out_dir.join("corrective.csv"))?;
            let meta = ScenarioFile {
                scenario: a.scenario,
                seed: a.seed,
                dims: a.dims,
                dt: sc.deficient.dt(),
                corrective_cut: sc.corrective_cut,
                goal: sc.goal,
                deficient: "deficient.csv",
                corrective: "corrective.csv",
            };
            write_json(&meta, &a.out_dir.join("scenario.json"))?;
            eprintln!("corrective cut: {}", sc.corrective_cut);
        }
        Command::SetGoal(a) => save_dmp(&load_dmp(&a.dmp)?.set_goal(&a.goal)?, &a.out)?,
        Command::SetTau(a) => save_dmp(&load_dmp(&a.dmp)?.set_tau(a.tau)?, &a.out)?,
        Command::Inspect(a) => {
            let mut out = std::io::stdout().lock();
            if let Some(path) = a.dmp {
                let p = load_dmp(&path)?;
                writeln!(out, "dims      {}", p.dims)?;
                writeln!(out, "tau       {}", p.tau)?;
                writeln!(
                    out,
                    "gains     alpha_z={} beta_z={} alpha_x={}",
                    p.alpha_z, p.beta_z, p.alpha_x
                )?;
                writeln!(out, "n_basis   {}", p.n_basis)?;
                writeln!(out, "start     {}", join(&p.start))?;
                writeln!(out, "goal      {}", join(&p.goal))?;
                let wmax = p
                    .weights
                    .iter()
                    .flatten()
                    .fold(0.0f64, |m, w| m.max(w.abs()));
                writeln!(out, "max |w|   {wmax}")?;
                writeln!(out, "context   {}", p.metadata.context)?;
            } else if let Some(path) = a.trajectory {
                let t = load_trajectory(&path)?;
                writeln!(out, "samples   {}", t.len())?;
                writeln!(out, "dims      {}", t.dims())?;
                writeln!(out, "dt        {}", t.dt())?;
                writeln!(out, "duration  {}", t.duration())?;
                writeln!(out, "first     {}", join(t.first()))?;
                writeln!(out, "last      {}", join(t.last()))?;
            }
        }
    }
    Ok(())
}

fn correct_cmd(a: CorrectArgs) -> Result<(), Error> {
    let deficient = load_trajectory(&a.deficient)?;
    let corrective = load_trajectory(&a.corrective)?;
    let mut req = CorrectionRequest::new(deficient, corrective, a.cut);
    req.blend = BlendConfig::new(a.lambda)?;
    req.fit = FitOptions {
        tau: None,
        gains: a.gains.gains(),
        n_basis: a.n_basis,
    };
    let out = correct(&req)?;
    save_dmp(&out.modified_dmp, &a.out_dmp)?;
    save_trajectory(&out.merged, &a.out_merged)?;

    let j = &out.junction;
    eprintln!("M                      {}", out.split.deficient_cut + 1);
    eprintln!("d_m                    {:e}", out.split.min_distance);
    eprintln!("junction index         {}", j.junction_index);
    eprintln!("max step               {:e}", j.max_step);
    eprintln!("junction 2nd diff      {:e}", j.junction_second_diff);
    eprintln!("p95 2nd diff elsewhere {:e}", j.p95_second_diff_elsewhere);
    eprintln!(
        "constraint residual    {:e}",
        out.blend.max_constraint_residual()
    );
    eprintln!(
        "blend solve time       {:.3} ms",
        out.blend_solve_time.as_secs_f64() * 1e3
    );

    if let Some(path) = &a.overlay {
        let p = &out.modified_dmp;
        let rolled = rollout(p, req.deficient.first(), req.deficient.dt(), 1.5 * p.tau)?;
        let corrective = req.corrective.resample_uniform(req.deficient.dt())?;
        write_overlay(
            path,
            &[
                ("deficient", &req.deficient),
                ("corrective", &corrective),
                ("merged", &out.merged),
                ("rollout", &rolled),
            ],
            &[
                ("deficient_cut", &req.deficient, out.split.deficient_cut),
                ("corrective_cut", &corrective, out.split.corrective_cut),
            ],
        )?;
    }
    Ok(())
}

fn write_overlay(
    path: &Path,
    series: &[(&str, &Trajectory)],
    markers: &[(&str, &Trajectory, usize)],
) -> Result<(), Error> {
    let dims = series[0].1.dims();
    let file = with_path(path, fs::File::create(path).map_err(Error::from))?;
    let mut out = std::io::BufWriter::new(file);
    write!(out, "series,t")?;
    for j in 1..=dims {
        write!(out, ",q{j}")?;
    }
    writeln!(out)?;
    let mut row = |name: &str, t: f64, s: &[f64]| -> std::io::Result<()> {
        write!(out, "{name},{t:?}")?;
        for v in s {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)
    };
    for (name, traj) in series {
        for (k, s) in traj.samples().enumerate() {
            row(name, k as f64 * traj.dt(), s)?;
        }
    }
    for (name, traj, k) in markers {
        row(name, *k as f64 * traj.dt(), traj.sample(*k))?;
    }
    out.flush()?;
    Ok(())
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Schema(e.to_string()))?;
    text.push('\n');
    with_path(path, fs::write(path, text).map_err(Error::from))
}

/// Names the file in I/O errors, which otherwise only carry the OS message.
fn with_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| match e {
        Error::Io(e) => Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )),
        e => e,
    })
}

fn load_trajectory(path: &Path) -> Result<Trajectory, Error> {
    with_path(path, io::load_trajectory(path))
}

fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), Error> {
    with_path(path.as_ref(), io::save_trajectory(traj, path.as_ref()))
}

fn load_dmp(path: &Path) -> Result<DmpParams, Error> {
    with_path(path, io::load_dmp(path))
}

fn save_dmp(params: &DmpParams, path: &Path) -> Result<(), Error> {
    with_path(path, io::save_dmp(params, path))
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}
