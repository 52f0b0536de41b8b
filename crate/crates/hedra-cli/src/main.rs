//! Command line front end: build stacked tensegrity manipulator models, run
//! inverse kinematics, generate trajectories with optional relaxation
//! validation, and export geometry.
//!
//! Exit codes: 0 success, 2 invalid arguments or parameters, 3 statically
//! infeasible pose, 4 solver non-convergence, 5 I/O or file format errors.
//! The environment variable `HEDRA_LOG` (error, info, debug) controls
//! diagnostics on standard error. All numeric output uses shortest
//! round-trip decimal formatting, and output files embed a manifest of the
//! run that produced them.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedra::ik::{
    posed_configuration, solve_configuration, IkOptions, DEFAULT_MIN_DENSITY, DEFAULT_TOLERANCE,
};
use hedra::io::{self, RunManifest};
use hedra::motion::{pose_sequence, relax, trace, MotionMode, RelaxationParams, TrajectorySpec};
use hedra::statics::{
    gravity_loads, standard_gravity_vector, Configuration, LoadVector,
    DEFAULT_MEMBER_MASS_PER_LENGTH,
};
use hedra::structure::{build_hedra, TensegrityModel, TetraParams};
use hedra::Error;
use nalgebra::Vector3;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hedra",
    version,
    about = "Stacked tetrahedral tensegrity manipulators: build, solve, validate, export"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a stacked manipulator model and write it as JSON.
    Build(BuildArgs),
    /// Solve the cable force distribution for one pose.
    Ik(IkArgs),
    /// Generate a trajectory: per-step solves, end-effector trace CSV and
    /// actuation schedule CSV.
    Traj(TrajArgs),
    /// Check a solution with dynamic relaxation: load rest lengths, settle
    /// the structure, report how far it lands from the solved pose.
    Relax(RelaxArgs),
    /// Export geometry as a Wavefront OBJ line mesh.
    Export(ExportArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Number of stacked modules.
    #[arg(long, default_value_t = 5)]
    modules: usize,
    /// Circumradius of the module triangle in m.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Module height in m.
    #[arg(long, default_value_t = 0.15)]
    height: f64,
    /// Nesting gap between consecutive modules in m.
    #[arg(long, default_value_t = 0.02)]
    gap: f64,
    /// Number of full-length active cable routes.
    #[arg(long, default_value_t = 3)]
    cables: usize,
    /// Output model file.
    #[arg(long, default_value = "model.json")]
    output: PathBuf,
}

/// Pose selection for a single solve. At most one of bend, twist and
/// contract may be given; none selects the upright rest pose.
#[derive(Args)]
struct PoseOpts {
    /// Bend angle in degrees, split evenly across the joints.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["twist", "contract"])]
    bend: Option<f64>,
    /// Twist angle in degrees, split evenly across the joints.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "contract")]
    twist: Option<f64>,
    /// Contraction ratio in (0, 1] applied to the module spacing.
    #[arg(long)]
    contract: Option<f64>,
    /// Bend plane azimuth in degrees from the +y axis; the default points
    /// the concave side at the first active route.
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    azimuth: f64,
}

/// External load construction, shared by the solving commands.
#[derive(Args)]
struct LoadOpts {
    /// Drop self-weight; only an explicit payload force remains.
    #[arg(long)]
    no_gravity: bool,
    /// Member mass per unit length in kg/m, lumped half to each endpoint.
    #[arg(long, default_value_t = DEFAULT_MEMBER_MASS_PER_LENGTH)]
    member_mass: f64,
    /// Extra lumped mass at every node in kg.
    #[arg(long, default_value_t = 0.0)]
    node_mass: f64,
    /// Payload mass in kg hung from the payload node.
    #[arg(long)]
    payload: Option<f64>,
    /// Node id carrying the payload; defaults to the top module's apex.
    #[arg(long, requires = "payload")]
    payload_node: Option<usize>,
}

#[derive(Args)]
struct SolverOpts {
    /// Minimum cable force density in N/m.
    #[arg(long, default_value_t = DEFAULT_MIN_DENSITY)]
    qmin: f64,
    /// Relative equilibrium residual tolerance.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Args)]
struct IkArgs {
    /// Input model file.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    #[command(flatten)]
    pose: PoseOpts,
    #[command(flatten)]
    loads: LoadOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Output solution file.
    #[arg(long, default_value = "solution.json")]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrajMode {
    Bend,
    Twist,
    Contract,
}

#[derive(Args)]
struct TrajArgs {
    /// Input model file.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Motion primitive.
    #[arg(long, value_enum)]
    mode: TrajMode,
    /// Total bend or twist angle in degrees.
    #[arg(long, allow_negative_numbers = true)]
    angle: Option<f64>,
    /// Final contraction ratio in (0, 1].
    #[arg(long)]
    ratio: Option<f64>,
    /// Bend plane azimuth in degrees from the +y axis.
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    azimuth: f64,
    /// Number of trajectory steps.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Relax each step from its solved rest lengths and append the
    /// relaxed-versus-target error column to the trace.
    #[arg(long)]
    validate: bool,
    #[command(flatten)]
    loads: LoadOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Output end-effector trace CSV.
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    /// Output actuation schedule CSV.
    #[arg(long, default_value = "actuation.csv")]
    actuation: PathBuf,
}

#[derive(Args)]
struct RelaxArgs {
    /// Input model file.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Solution file providing cable rest lengths and the target pose.
    #[arg(long, default_value = "solution.json")]
    solution: PathBuf,
    /// Start from the as-built stack instead of the solved pose. This
    /// exercises the full transient and may need many more iterations.
    #[arg(long)]
    cold: bool,
    /// Integrator point mass per node in kg; the time step rescales to keep
    /// the stability margin.
    #[arg(long)]
    inertia_mass: Option<f64>,
    /// Integration time step in s; the default derives from the stiffest
    /// node.
    #[arg(long)]
    time_step: Option<f64>,
    /// Iteration cap.
    #[arg(long, default_value_t = 200_000)]
    max_iterations: usize,
    /// Convergence threshold on the peak nodal residual force in N.
    #[arg(long)]
    force_tolerance: Option<f64>,
    #[command(flatten)]
    loads: LoadOpts,
    /// Output relaxation result file.
    #[arg(long, default_value = "relaxed.json")]
    output: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Input model file.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Take node positions from a solution file.
    #[arg(long, conflicts_with = "relaxed")]
    solution: Option<PathBuf>,
    /// Take node positions from a relaxation result file.
    #[arg(long)]
    relaxed: Option<PathBuf>,
    /// Output OBJ file.
    #[arg(long, default_value = "stack.obj")]
    output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HEDRA_LOG", "error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Ik(args) => cmd_ik(args),
        Command::Traj(args) => cmd_traj(args),
        Command::Relax(args) => cmd_relax(args),
        Command::Export(args) => cmd_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        // Infeasible solves: equilibrium impossible, the density bound
        // unreachable, or a rest length unrealizable at the cable stiffness.
        Error::Infeasible(_) | Error::InfeasibleLoad { .. } | Error::SlackImpossible { .. } => 3,
        Error::NonConvergence { .. } => 4,
        Error::Io(_) | Error::Format(_) => 5,
        _ => 2,
    }
}

fn report_error(e: &Error) {
    match e {
        Error::InfeasibleLoad { .. } => eprintln!("error: pose not statically feasible ({e})"),
        _ => eprintln!("error: {e}"),
    }
}

fn cmd_build(args: BuildArgs) -> hedra::Result<()> {
    let params = TetraParams::new(args.radius, args.height)?;
    let model = build_hedra(args.modules, &params, args.gap, args.cables)?;
    log::info!(
        "built {} modules: {} nodes, {} members",
        args.modules,
        model.node_count(),
        model.member_count()
    );
    let parameters = BTreeMap::from([
        ("modules".to_string(), args.modules.to_string()),
        ("radius".to_string(), args.radius.to_string()),
        ("height".to_string(), args.height.to_string()),
        ("gap".to_string(), args.gap.to_string()),
        ("cables".to_string(), args.cables.to_string()),
    ]);
    let manifest = manifest(&[], &[&args.output], parameters);
    io::write_model(&args.output, &model, &params, args.gap, manifest)?;
    println!(
        "{} modules, {} nodes, {} members ({} cables, {} bars), {} active routes",
        model.module_count(),
        model.node_count(),
        model.member_count(),
        model.cable_count(),
        model.bar_count(),
        model.active_routes().len()
    );
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_ik(args: IkArgs) -> hedra::Result<()> {
    let file = io::read_model(&args.model)?;
    let model = file.model()?;
    let params = TetraParams::new(file.meta.radius, file.meta.height)?;
    log::info!(
        "loaded {}: {} nodes, {} members",
        args.model.display(),
        model.node_count(),
        model.member_count()
    );
    let config = args.pose.configuration(&model, &params, file.meta.gap)?;
    let loads = args.loads.loads(&model, &config)?;
    let solution = solve_configuration(&model, &config, &loads, &args.solver.options())?;
    log::info!("density optimization took {} iterations", solution.iterations);

    let mut parameters = BTreeMap::new();
    args.pose.record(&mut parameters);
    args.loads.record(&mut parameters, &model);
    args.solver.record(&mut parameters);
    let manifest = manifest(&[&args.model], &[&args.output], parameters);
    io::write_solution(&args.output, &model, &solution, manifest)?;

    println!("residual: {}", solution.residual);
    println!("objective: {}", solution.objective);
    if model.cable_count() > 0 {
        let min_q = solution.q[..model.cable_count()]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        println!("minimum cable density: {min_q}");
    }
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_traj(args: TrajArgs) -> hedra::Result<()> {
    let (mode, magnitude) = match args.mode {
        TrajMode::Bend | TrajMode::Twist => {
            if args.ratio.is_some() {
                return Err(Error::InvalidParameter(
                    "--ratio applies only to --mode contract".into(),
                ));
            }
            let angle = args.angle.unwrap_or(0.0).to_radians();
            let mode = if args.mode == TrajMode::Bend {
                MotionMode::Bend
            } else {
                MotionMode::Twist
            };
            (mode, angle)
        }
        TrajMode::Contract => {
            if args.angle.is_some() {
                return Err(Error::InvalidParameter(
                    "--angle applies only to --mode bend or --mode twist".into(),
                ));
            }
            let ratio = args.ratio.ok_or_else(|| {
                Error::InvalidParameter("--mode contract needs --ratio".into())
            })?;
            (MotionMode::Contract, ratio)
        }
    };
    let file = io::read_model(&args.model)?;
    let model = file.model()?;
    let params = TetraParams::new(file.meta.radius, file.meta.height)?;
    let spec = TrajectorySpec {
        mode,
        magnitude,
        azimuth: args.azimuth.to_radians(),
        steps: args.steps,
    };
    let sequence = pose_sequence(model.module_count(), &params, file.meta.gap, &spec)?;

    let relax_params = RelaxationParams::for_model(&model);
    let mut configs = Vec::with_capacity(sequence.len());
    let mut relax_errors = if args.validate { Some(Vec::new()) } else { None };
    for (i, poses) in sequence.iter().enumerate() {
        let config = posed_configuration(&model, poses)?;
        let loads = args.loads.loads(&model, &config)?;
        let solution = solve_configuration(&model, &config, &loads, &args.solver.options())?;
        log::debug!(
            "step {}: residual {}, objective {}",
            i + 1,
            solution.residual,
            solution.objective
        );
        if let Some(errors) = relax_errors.as_mut() {
            let (relaxed, report) = relax(
                &model,
                &solution.rest_lengths,
                &loads,
                &relax_params,
                Some(&config),
            )?;
            let worst = worst_distance(&config, &relaxed);
            log::info!(
                "step {}: relaxation settled in {} iterations, worst node error {} m",
                i + 1,
                report.iterations,
                worst
            );
            errors.push(worst);
        }
        configs.push(config);
    }

    let records = trace(&model, &configs)?;
    let schedule: Vec<Vec<f64>> = records.iter().map(|r| r.active_lengths.clone()).collect();

    let mut parameters = BTreeMap::from([
        ("mode".to_string(), mode_name(args.mode).to_string()),
        ("azimuth".to_string(), args.azimuth.to_string()),
        ("steps".to_string(), args.steps.to_string()),
        ("validate".to_string(), args.validate.to_string()),
    ]);
    match args.mode {
        TrajMode::Contract => {
            parameters.insert("ratio".to_string(), magnitude.to_string());
        }
        _ => {
            parameters.insert("angle".to_string(), args.angle.unwrap_or(0.0).to_string());
        }
    }
    args.loads.record(&mut parameters, &model);
    args.solver.record(&mut parameters);
    let manifest = manifest(&[&args.model], &[&args.trace, &args.actuation], parameters);
    io::write_trace_csv(&args.trace, &records, relax_errors.as_deref(), &manifest)?;
    io::write_actuation_csv(&args.actuation, &schedule, &manifest)?;

    let last = records.last().expect("at least one step");
    println!("steps: {}", records.len());
    println!("final bend_deg: {}", last.bend_deg);
    println!("final twist_deg: {}", last.twist_deg);
    println!(
        "final position: {} {} {}",
        last.position.x, last.position.y, last.position.z
    );
    if let Some(errors) = &relax_errors {
        let worst = errors.iter().copied().fold(0.0, f64::max);
        println!("worst relaxation error: {worst}");
    }
    println!("wrote {}", args.trace.display());
    println!("wrote {}", args.actuation.display());
    Ok(())
}

fn cmd_relax(args: RelaxArgs) -> hedra::Result<()> {
    let file = io::read_model(&args.model)?;
    let model = file.model()?;
    let sol = io::read_solution(&args.solution)?;
    let target = sol.configuration();
    target.check_model(&model)?;
    let loads = args.loads.loads(&model, &target)?;

    let mut params = RelaxationParams::for_model(&model);
    if let Some(mass) = args.inertia_mass {
        params.time_step *= (mass / params.node_mass).sqrt();
        params.node_mass = mass;
    }
    if let Some(dt) = args.time_step {
        params.time_step = dt;
    }
    params.max_iterations = args.max_iterations;
    if let Some(f) = args.force_tolerance {
        params.force_tolerance = f;
    }
    let initial = if args.cold { None } else { Some(&target) };
    let (relaxed, report) = relax(&model, &sol.rest_lengths, &loads, &params, initial)?;
    let worst = worst_distance(&target, &relaxed);

    let mut parameters = BTreeMap::from([
        ("cold".to_string(), args.cold.to_string()),
        ("time_step".to_string(), params.time_step.to_string()),
        ("node_mass".to_string(), params.node_mass.to_string()),
        ("max_iterations".to_string(), params.max_iterations.to_string()),
        (
            "force_tolerance".to_string(),
            params.force_tolerance.to_string(),
        ),
    ]);
    args.loads.record(&mut parameters, &model);
    let manifest = manifest(&[&args.model, &args.solution], &[&args.output], parameters);
    io::write_relax(&args.output, &relaxed, &report, manifest)?;

    println!("iterations: {}", report.iterations);
    println!("peak residual force: {}", report.peak_residual_force);
    println!("minimum cable force: {}", report.min_cable_force);
    println!("worst node error: {worst}");
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_export(args: ExportArgs) -> hedra::Result<()> {
    let file = io::read_model(&args.model)?;
    let model = file.model()?;
    let mut inputs: Vec<&Path> = vec![&args.model];
    let config = if let Some(path) = &args.solution {
        inputs.push(path);
        io::read_solution(path)?.configuration()
    } else if let Some(path) = &args.relaxed {
        inputs.push(path);
        io::read_relax(path)?.configuration()
    } else {
        Configuration::from_model(&model)
    };
    let manifest = manifest(&inputs, &[&args.output], BTreeMap::new());
    io::write_obj(&args.output, &model, &config, &manifest)?;
    println!(
        "wrote {} ({} vertices, {} lines)",
        args.output.display(),
        model.node_count(),
        model.member_count()
    );
    Ok(())
}

impl PoseOpts {
    fn configuration(
        &self,
        model: &TensegrityModel,
        params: &TetraParams,
        joint_gap: f64,
    ) -> hedra::Result<Configuration> {
        let command = if let Some(deg) = self.bend {
            Some((MotionMode::Bend, deg.to_radians()))
        } else if let Some(deg) = self.twist {
            Some((MotionMode::Twist, deg.to_radians()))
        } else {
            self.contract.map(|ratio| (MotionMode::Contract, ratio))
        };
        match command {
            None => Ok(Configuration::from_model(model)),
            Some((mode, magnitude)) => {
                let spec = TrajectorySpec {
                    mode,
                    magnitude,
                    azimuth: self.azimuth.to_radians(),
                    steps: 1,
                };
                let poses = pose_sequence(model.module_count(), params, joint_gap, &spec)?
                    .pop()
                    .expect("a one-step sequence has one pose list");
                posed_configuration(model, &poses)
            }
        }
    }

    fn record(&self, parameters: &mut BTreeMap<String, String>) {
        if let Some(deg) = self.bend {
            parameters.insert("bend".to_string(), deg.to_string());
        }
        if let Some(deg) = self.twist {
            parameters.insert("twist".to_string(), deg.to_string());
        }
        if let Some(ratio) = self.contract {
            parameters.insert("contract".to_string(), ratio.to_string());
        }
        parameters.insert("azimuth".to_string(), self.azimuth.to_string());
    }
}

impl LoadOpts {
    fn loads(
        &self,
        model: &TensegrityModel,
        config: &Configuration,
    ) -> hedra::Result<LoadVector> {
        let payload = match self.payload {
            Some(kg) => {
                if !(kg >= 0.0) || !kg.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "payload mass must be non-negative, got {kg}"
                    )));
                }
                let node = self.payload_node.unwrap_or(self.default_payload_node(model));
                Some((node, Vector3::new(0.0, 0.0, -9.81 * kg)))
            }
            None => None,
        };
        let mut node_masses = BTreeMap::new();
        let member_mass = if self.no_gravity {
            0.0
        } else {
            if self.node_mass != 0.0 {
                for id in 1..=model.node_count() {
                    node_masses.insert(id, self.node_mass);
                }
            }
            self.member_mass
        };
        gravity_loads(
            model,
            config,
            member_mass,
            &node_masses,
            payload,
            &standard_gravity_vector(),
        )
    }

    fn default_payload_node(&self, model: &TensegrityModel) -> usize {
        4 * model.module_count() - 3
    }

    fn record(&self, parameters: &mut BTreeMap<String, String>, model: &TensegrityModel) {
        parameters.insert("gravity".to_string(), (!self.no_gravity).to_string());
        if !self.no_gravity {
            parameters.insert("member_mass".to_string(), self.member_mass.to_string());
            parameters.insert("node_mass".to_string(), self.node_mass.to_string());
        }
        if let Some(kg) = self.payload {
            parameters.insert("payload".to_string(), kg.to_string());
            parameters.insert(
                "payload_node".to_string(),
                self.payload_node
                    .unwrap_or(self.default_payload_node(model))
                    .to_string(),
            );
        }
    }
}

impl SolverOpts {
    fn options(&self) -> IkOptions {
        IkOptions {
            min_density: self.qmin,
            tolerance: self.tolerance,
            ..IkOptions::default()
        }
    }

    fn record(&self, parameters: &mut BTreeMap<String, String>) {
        parameters.insert("qmin".to_string(), self.qmin.to_string());
        parameters.insert("tolerance".to_string(), self.tolerance.to_string());
    }
}

fn mode_name(mode: TrajMode) -> &'static str {
    match mode {
        TrajMode::Bend => "bend",
        TrajMode::Twist => "twist",
        TrajMode::Contract => "contract",
    }
}

fn worst_distance(a: &Configuration, b: &Configuration) -> f64 {
    a.positions()
        .iter()
        .zip(b.positions())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

fn manifest(
    inputs: &[&Path],
    outputs: &[&Path],
    parameters: BTreeMap<String, String>,
) -> RunManifest {
    RunManifest {
        command: command_line(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        parameters,
        timestamp: io::manifest_timestamp(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: None,
    }
}

/// The invocation with the binary path normalized away, so identical flags
/// give identical manifests regardless of where the binary lives.
fn command_line() -> String {
    std::iter::once("hedra".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ")
}
