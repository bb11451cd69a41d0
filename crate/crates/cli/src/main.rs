//! Command-line front end: limit analysis, worst-case damage evaluation,
//! redundancy optimization and reporting for planar trusses.

mod render;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trussopt_core::instance::{Instance, InstanceError};
use trussopt_core::sqp::{self, SqpConfig, SqpError};
use trussopt_core::worstcase::{scenario_table_csv, strong_redundancy, StrongRedundancy};
use trussopt_core::{
    builtin_example, classical_limit_design, limit_load_factor, worst_case, Design, ExampleId,
    GroundStructure, LimitStatus,
};

use report::{header, scenario_list, sig6};

/// Exit codes are a stable contract:
/// 0 success / optimal, 1 internal error, 2 mechanism or overload,
/// 3 unbounded, 4 invalid input, 5 structure unstable at the damage level.
const EXIT_MECHANISM: u8 = 2;
const EXIT_UNBOUNDED: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;
const EXIT_UNSTABLE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "trussopt",
    version,
    about = "Plastic limit analysis and worst-case redundancy optimization of planar trusses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap the worker thread count (default: TRUSSOPT_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit wall-clock lines so reports are byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Args)]
struct Source {
    /// Built-in example instance (I or II).
    #[arg(long, conflicts_with = "instance")]
    example: Option<String>,
    /// Instance file in the documented JSON schema.
    #[arg(long)]
    instance: Option<String>,
    /// Design file overriding the instance areas (same schema; the
    /// `initial_areas_mm2` field is used).
    #[arg(long)]
    design: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Limit analysis of a design: load factor and member forces.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Write the report as JSON here as well.
        #[arg(long)]
        report_json: Option<String>,
    },
    /// Exact worst-case limit load factor over bounded damage scenarios.
    WorstCase {
        #[command(flatten)]
        source: Source,
        /// Maximum number of damaged members.
        #[arg(long)]
        alpha: usize,
        /// Damage degree in [0,1): fraction of a damaged member that remains.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Print the full scenario table.
        #[arg(long)]
        all_scenarios: bool,
        /// Write the scenario table as CSV here.
        #[arg(long)]
        csv: Option<String>,
        #[arg(long)]
        report_json: Option<String>,
    },
    /// Maximize the worst-case limit load factor over the design.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        alpha: usize,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Optimizer configuration file (JSON, partial overrides allowed).
        #[arg(long)]
        config: Option<String>,
        /// Initial stencil radius in mm².
        #[arg(long)]
        radius: Option<f64>,
        /// Radius floor in mm².
        #[arg(long)]
        r_min: Option<f64>,
        /// Direction-norm termination threshold in mm².
        #[arg(long)]
        eps: Option<f64>,
        /// Radius shrink factor in (0,1).
        #[arg(long)]
        rho: Option<f64>,
        /// Sufficient-decrease fraction in (0,1).
        #[arg(long)]
        eta: Option<f64>,
        /// Backtracking factor in (0,1).
        #[arg(long)]
        beta: Option<f64>,
        /// Maximum number of backtracks.
        #[arg(long)]
        tau_max: Option<u32>,
        /// Sample repair floor in mm².
        #[arg(long)]
        repair_eps: Option<f64>,
        /// Scale of the identity initial curvature model.
        #[arg(long)]
        b0_scale: Option<f64>,
        /// Curvature update denominator: paper or conventional.
        #[arg(long)]
        bfgs_denominator: Option<String>,
        /// Write the iteration trace as CSV here.
        #[arg(long)]
        trace_csv: Option<String>,
        /// Write the optimized design (instance schema) here.
        #[arg(long)]
        design_out: Option<String>,
        #[arg(long)]
        report_json: Option<String>,
    },
    /// Classical limit design: the optimal plastic design by one LP.
    LimitDesign {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        design_out: Option<String>,
        #[arg(long)]
        report_json: Option<String>,
    },
    /// Strong redundancy: the largest damage level meeting an allowance.
    Redundancy {
        #[command(flatten)]
        source: Source,
        /// Performance allowance on f = -lambda (e.g. -6 demands lambda >= 6).
        #[arg(long, allow_hyphen_values = true)]
        h_c: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long)]
        report_json: Option<String>,
    },
    /// Draw a design as SVG, member width proportional to area.
    Render {
        #[command(flatten)]
        source: Source,
        /// Damaged member ids to omit, comma separated.
        #[arg(long)]
        scenario: Option<String>,
        /// Output SVG path.
        #[arg(long)]
        out: String,
    },
    /// Write a built-in example in the instance schema.
    ExportExample {
        /// Example name (I or II).
        example: String,
        /// Output path.
        #[arg(long)]
        out: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::bad_input(e.to_string())
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("TRUSSOPT_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Resolved problem input: structure, design, instance echo and a label.
struct Loaded {
    gs: GroundStructure,
    design: Design,
    instance: Instance,
    label: String,
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    let (instance, label) = match (&source.example, &source.instance) {
        (Some(name), None) => {
            let id: ExampleId = name.parse().map_err(CliError::bad_input)?;
            let (gs, design) = builtin_example(id);
            (
                Instance::from_parts(&gs, &design),
                format!("builtin example {id}"),
            )
        }
        (None, Some(path)) => (Instance::read_file(path)?, path.clone()),
        _ => {
            return Err(CliError::bad_input(
                "exactly one of --example or --instance is required",
            ))
        }
    };
    let (gs, mut design) = instance.into_parts()?;
    if let Some(path) = &source.design {
        let overlay = Instance::read_file(path)?;
        if overlay.initial_areas_mm2.len() != gs.member_count() {
            return Err(CliError::bad_input(format!(
                "design file has {} areas for {} members",
                overlay.initial_areas_mm2.len(),
                gs.member_count()
            )));
        }
        design.areas = overlay.initial_areas_mm2;
    }
    Ok(Loaded {
        gs,
        design,
        instance,
        label,
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let started = std::time::Instant::now();
    let stamp = |out: &mut String| {
        if !cli.no_timestamp {
            let unix_ms = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0);
            out.push_str(&format!("generated_unix_ms: {unix_ms}\n"));
            out.push_str(&format!(
                "elapsed_ms: {}\n",
                started.elapsed().as_millis()
            ));
        }
    };

    match cli.command {
        Command::Analyze {
            source,
            report_json,
        } => {
            let loaded = load(&source)?;
            let result = limit_load_factor(&loaded.gs, &loaded.design.areas)
                .map_err(|e| CliError::bad_input(e.to_string()))?;
            let mut out = header("analyze", &loaded.label, &loaded.instance);
            let status = match result.status {
                LimitStatus::Optimal => "optimal",
                LimitStatus::MechanismOrOverload => "mechanism-or-overload",
                LimitStatus::Unbounded => "unbounded",
            };
            out.push_str(&format!("status: {status}\n"));
            out.push_str(&format!("lambda: {}\n", sig6(result.lambda)));
            if let Some(forces) = &result.forces {
                out.push_str("member_forces_N:\n");
                for (i, q) in forces.iter().enumerate() {
                    out.push_str(&format!("  {i}: {}\n", sig6(*q)));
                }
            }
            stamp(&mut out);
            print!("{out}");
            if let Some(path) = report_json {
                let json = serde_json::json!({
                    "schema_version": report::SCHEMA_VERSION,
                    "mode": "analyze",
                    "digest": loaded.instance.digest(),
                    "status": status,
                    "lambda": result.lambda,
                    "member_forces_N": result.forces,
                });
                write_file(&path, &serde_json::to_string_pretty(&json).unwrap())?;
            }
            Ok(match result.status {
                LimitStatus::Optimal => ExitCode::SUCCESS,
                LimitStatus::MechanismOrOverload => ExitCode::from(EXIT_MECHANISM),
                LimitStatus::Unbounded => ExitCode::from(EXIT_UNBOUNDED),
            })
        }

        Command::WorstCase {
            source,
            alpha,
            gamma,
            all_scenarios,
            csv,
            report_json,
        } => {
            let loaded = load(&source)?;
            validate_damage(&loaded.gs, alpha, gamma)?;
            let result = worst_case(&loaded.gs, &loaded.design.areas, alpha, gamma);
            let mut out = header("worst-case", &loaded.label, &loaded.instance);
            out.push_str(&format!("alpha: {alpha}\n"));
            out.push_str(&format!("gamma: {}\n", sig6(gamma)));
            out.push_str(&format!("worst_lambda: {}\n", sig6(result.worst_lambda)));
            out.push_str(&format!("f_value: {}\n", sig6(result.f_value)));
            out.push_str(&format!("multiplicity: {}\n", result.multiplicity()));
            out.push_str(&format!(
                "worst_scenarios: {}\n",
                scenario_list(&result.minimizers)
            ));
            out.push_str(&format!("scenarios_evaluated: {}\n", result.table.len()));
            if all_scenarios {
                out.push_str("scenario_table:\n");
                for line in scenario_table_csv(&result).lines() {
                    out.push_str(&format!("  {line}\n"));
                }
            }
            stamp(&mut out);
            print!("{out}");
            if let Some(path) = csv {
                write_file(&path, &scenario_table_csv(&result))?;
            }
            if let Some(path) = report_json {
                let json = serde_json::json!({
                    "schema_version": report::SCHEMA_VERSION,
                    "mode": "worst-case",
                    "digest": loaded.instance.digest(),
                    "alpha": alpha,
                    "gamma": gamma,
                    "worst_lambda": result.worst_lambda,
                    "f_value": result.f_value,
                    "multiplicity": result.multiplicity(),
                    "worst_scenarios": result.minimizers.iter()
                        .map(|s| s.damaged().to_vec()).collect::<Vec<_>>(),
                });
                write_file(&path, &serde_json::to_string_pretty(&json).unwrap())?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Optimize {
            source,
            alpha,
            gamma,
            config,
            radius,
            r_min,
            eps,
            rho,
            eta,
            beta,
            tau_max,
            repair_eps,
            b0_scale,
            bfgs_denominator,
            trace_csv,
            design_out,
            report_json,
        } => {
            let loaded = load(&source)?;
            validate_damage(&loaded.gs, alpha, gamma)?;
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::bad_input(format!("cannot read {path}: {e}")))?;
                    serde_json::from_str::<SqpConfig>(&text)
                        .map_err(|e| CliError::bad_input(format!("config {path}: {e}")))?
                }
                None => SqpConfig::default(),
            };
            apply(&mut cfg.initial_radius, radius);
            apply(&mut cfg.min_radius, r_min);
            apply(&mut cfg.direction_tolerance, eps);
            apply(&mut cfg.radius_shrink, rho);
            apply(&mut cfg.armijo_slope, eta);
            apply(&mut cfg.backtrack, beta);
            apply(&mut cfg.max_backtracks, tau_max);
            apply(&mut cfg.repair_epsilon, repair_eps);
            apply(&mut cfg.initial_hessian_scale, b0_scale);
            if let Some(mode) = bfgs_denominator {
                cfg.bfgs_denominator = match mode.as_str() {
                    "paper" => sqp::BfgsDenominator::Paper,
                    "conventional" => sqp::BfgsDenominator::Conventional,
                    other => {
                        return Err(CliError::bad_input(format!(
                            "unknown denominator {other:?} (expected paper or conventional)"
                        )))
                    }
                };
            }

            let outcome = sqp::run(&loaded.gs, alpha, gamma, &loaded.design, &cfg)
                .map_err(map_sqp_error)?;

            let mut out = header("optimize", &loaded.label, &loaded.instance);
            out.push_str(&format!("alpha: {alpha}\n"));
            out.push_str(&format!("gamma: {}\n", sig6(gamma)));
            out.push_str(&format!("config: {}\n", serde_json::to_string(&cfg).unwrap()));
            out.push_str(&format!("termination: {}\n", outcome.termination));
            out.push_str(&format!("iterations: {}\n", outcome.trace.last().map_or(0, |r| r.k)));
            out.push_str(&format!("qp_solves: {}\n", outcome.counters.qp_solves));
            out.push_str(&format!(
                "objective_evaluations: {}\n",
                outcome.counters.objective_evaluations
            ));
            out.push_str(&format!("lp_solves: {}\n", outcome.counters.lp_solves));
            out.push_str(&format!("final_radius: {}\n", sig6(outcome.final_radius)));
            out.push_str(&format!(
                "worst_lambda: {}\n",
                sig6(outcome.worst.worst_lambda)
            ));
            out.push_str(&format!("f_value: {}\n", sig6(outcome.worst.f_value)));
            out.push_str(&format!("multiplicity: {}\n", outcome.worst.multiplicity()));
            out.push_str(&format!(
                "worst_scenarios: {}\n",
                scenario_list(&outcome.worst.minimizers)
            ));
            out.push_str("areas_mm2:\n");
            for (i, a) in outcome.design.areas.iter().enumerate() {
                out.push_str(&format!("  {i}: {}\n", sig6(*a)));
            }
            stamp(&mut out);
            print!("{out}");

            if let Some(path) = trace_csv {
                write_file(&path, &trace_to_csv(&outcome.trace))?;
            }
            if let Some(path) = design_out {
                let exported = Instance::from_parts(&loaded.gs, &outcome.design);
                exported
                    .write_file(&path)
                    .map_err(|e| CliError::internal(e.to_string()))?;
            }
            if let Some(path) = report_json {
                let json = serde_json::json!({
                    "schema_version": report::SCHEMA_VERSION,
                    "mode": "optimize",
                    "digest": loaded.instance.digest(),
                    "alpha": alpha,
                    "gamma": gamma,
                    "config": cfg,
                    "termination": outcome.termination.to_string(),
                    "qp_solves": outcome.counters.qp_solves,
                    "objective_evaluations": outcome.counters.objective_evaluations,
                    "lp_solves": outcome.counters.lp_solves,
                    "worst_lambda": outcome.worst.worst_lambda,
                    "multiplicity": outcome.worst.multiplicity(),
                    "areas_mm2": outcome.design.areas,
                });
                write_file(&path, &serde_json::to_string_pretty(&json).unwrap())?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::LimitDesign {
            source,
            design_out,
            report_json,
        } => {
            let loaded = load(&source)?;
            let (design, lambda) =
                classical_limit_design(&loaded.gs, loaded.design.volume_budget).map_err(|e| {
                    CliError {
                        code: 1,
                        message: e.to_string(),
                    }
                })?;
            let surviving = design.areas.iter().filter(|a| **a > 1e-6).count();
            let mut out = header("limit-design", &loaded.label, &loaded.instance);
            out.push_str(&format!("lambda_star: {}\n", sig6(lambda)));
            out.push_str(&format!("surviving_members: {surviving}\n"));
            out.push_str("areas_mm2:\n");
            for (i, a) in design.areas.iter().enumerate() {
                out.push_str(&format!("  {i}: {}\n", sig6(*a)));
            }
            stamp(&mut out);
            print!("{out}");
            if let Some(path) = design_out {
                Instance::from_parts(&loaded.gs, &design)
                    .write_file(&path)
                    .map_err(|e| CliError::internal(e.to_string()))?;
            }
            if let Some(path) = report_json {
                let json = serde_json::json!({
                    "schema_version": report::SCHEMA_VERSION,
                    "mode": "limit-design",
                    "digest": loaded.instance.digest(),
                    "lambda_star": lambda,
                    "surviving_members": surviving,
                    "areas_mm2": design.areas,
                });
                write_file(&path, &serde_json::to_string_pretty(&json).unwrap())?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Redundancy {
            source,
            h_c,
            gamma,
            report_json,
        } => {
            let loaded = load(&source)?;
            validate_damage(&loaded.gs, 0, gamma)?;
            let verdict = strong_redundancy(&loaded.gs, &loaded.design.areas, h_c, gamma);
            let mut out = header("redundancy", &loaded.label, &loaded.instance);
            out.push_str(&format!("h_c: {}\n", sig6(h_c)));
            out.push_str(&format!("gamma: {}\n", sig6(gamma)));
            match verdict {
                StrongRedundancy::Level(a) => {
                    out.push_str(&format!("strong_redundancy: {a}\n"));
                }
                StrongRedundancy::NominalViolation => {
                    out.push_str("strong_redundancy: nominal-violation\n");
                }
            }
            stamp(&mut out);
            print!("{out}");
            if let Some(path) = report_json {
                let json = serde_json::json!({
                    "schema_version": report::SCHEMA_VERSION,
                    "mode": "redundancy",
                    "digest": loaded.instance.digest(),
                    "h_c": h_c,
                    "gamma": gamma,
                    "strong_redundancy": match verdict {
                        StrongRedundancy::Level(a) => serde_json::json!(a),
                        StrongRedundancy::NominalViolation => serde_json::json!("nominal-violation"),
                    },
                });
                write_file(&path, &serde_json::to_string_pretty(&json).unwrap())?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Render {
            source,
            scenario,
            out,
        } => {
            let loaded = load(&source)?;
            let damaged = match scenario {
                Some(list) => parse_id_list(&list, loaded.gs.member_count())?,
                None => Vec::new(),
            };
            let svg = render::render_svg(&loaded.gs, &loaded.design.areas, &damaged);
            write_file(&out, &svg)?;
            println!("wrote {out}");
            Ok(ExitCode::SUCCESS)
        }

        Command::ExportExample { example, out } => {
            let id: ExampleId = example.parse().map_err(CliError::bad_input)?;
            let (gs, design) = builtin_example(id);
            Instance::from_parts(&gs, &design)
                .write_file(&out)
                .map_err(|e| CliError::internal(e.to_string()))?;
            println!("wrote {out}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn apply<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn validate_damage(gs: &GroundStructure, alpha: usize, gamma: f64) -> Result<(), CliError> {
    if alpha > gs.member_count() {
        return Err(CliError::bad_input(format!(
            "alpha {alpha} exceeds the {} members",
            gs.member_count()
        )));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(CliError::bad_input(format!(
            "gamma {gamma} outside [0, 1)"
        )));
    }
    Ok(())
}

fn map_sqp_error(e: SqpError) -> CliError {
    match e {
        SqpError::UnstableAtStart => CliError {
            code: EXIT_UNSTABLE,
            message: e.to_string(),
        },
        SqpError::Config(_) | SqpError::InfeasibleStart(_) => CliError::bad_input(e.to_string()),
        other => CliError::internal(other.to_string()),
    }
}

fn parse_id_list(list: &str, members: usize) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let id: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::bad_input(format!("bad member id {part:?}")))?;
        if id >= members {
            return Err(CliError::bad_input(format!(
                "member id {id} out of range (m = {members})"
            )));
        }
        out.push(id);
    }
    Ok(out)
}

fn trace_to_csv(trace: &[sqp::IterationRecord]) -> String {
    let mut out = String::from("k,r,f,d_norm,step,lp_count\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.k,
            row.radius,
            row.f_value,
            row.direction_norm.map(|v| v.to_string()).unwrap_or_default(),
            row.step.map(|v| v.to_string()).unwrap_or_default(),
            row.lp_solves,
        ));
    }
    out
}

fn write_file(path: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::internal(format!("cannot write {path}: {e}")))
}
