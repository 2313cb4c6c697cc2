//! `se2lcs` — classify, simulate, estimate control sets, plan periodic
//! orbits and run verification suites for linear control systems on SE(2).
//!
//! Exit codes: 0 success, 2 invalid input, 3 case mismatch, 4 verification failure.

mod spec_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use se2lcs::flow::{flow_concat, rk4_se2, ConstantControlFlow, PiecewiseControl, DEFAULT_RK4_STEP};
use se2lcs::planner::plan_periodic;
use se2lcs::reachability::{estimate_control_set, estimate_control_set_from, lift_to_se2, Bounds, GridConfig, Region};
use se2lcs::system::reduce;
use se2lcs::verify::{run_suites, Suite, VerifyConfig};
use se2lcs::{classify, Error, GroupElement, Vec2};

const EXIT_INVALID: u8 = 2;
const EXIT_CASE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "se2lcs", version, about = "Linear control systems on SE(2)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank condition, determinant/trace and the control-set case.
    Classify {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form trajectory for a piecewise-constant control, as CSV.
    Simulate(SimulateArgs),
    /// Grid estimate of the control set.
    Reach(ReachArgs),
    /// Periodic trajectory through v0 and the origin (tr A = 0).
    Plan(PlanArgs),
    /// Run invariant suites against the system.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    spec: PathBuf,
    /// JSON file `{"segments": [{"duration": d, "u": u}, ...]}`.
    #[arg(long)]
    control: PathBuf,
    /// Initial state `t,v_x,v_y`.
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0", allow_hyphen_values = true)]
    x0: [f64; 3],
    /// Truncate the control, or extend it with u = 0, to this duration.
    #[arg(long)]
    horizon: Option<f64>,
    /// Simulate the reduced system (controls are then taken from αΩ).
    #[arg(long)]
    reduced: bool,
    /// Append the deviation from an RK4 integration.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReachArgs {
    spec: PathBuf,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    control_grid: Option<usize>,
    #[arg(long)]
    time_step: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Longest flow time tried per step.
    #[arg(long)]
    horizon: Option<f64>,
    /// `xmin,xmax,ymin,ymax`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<Bounds>,
    /// Control whose equilibrium seeds the estimate.
    #[arg(long, allow_hyphen_values = true)]
    generator: Option<f64>,
    /// Estimate JSON (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Occupied cell centres as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    spec: PathBuf,
    /// Start point `x,y` in reduced coordinates.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    v0: [f64; 2],
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    spec: PathBuf,
    /// Suites to run (lemma, ball, conjugacy, semigroup, oracle, monotone); all by default.
    #[arg(long = "suite")]
    suites: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 2.0)]
    horizon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
    }
    Ok(out)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_floats::<2>(s)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_floats::<3>(s)
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let [a, b, c, d] = parse_floats::<4>(s)?;
    Bounds::new(a, b, c, d).map_err(|e| e.to_string())
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CaseMismatch(_) => EXIT_CASE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_classify(spec: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let spec = spec_file::load_spec(spec)?;
    emit(out, &to_json(&classify(&spec)))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let spec = spec_file::load_spec(&args.spec)?;
    let mut control = spec_file::load_control(&args.control)?;
    if let Some(h) = args.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {h}")).into());
        }
        control = control.fit_to_horizon(h)?;
    }
    let x0 = GroupElement::new(args.x0[0], Vec2::new(args.x0[1], args.x0[2]));
    let (mut csv, deviation) = if args.reduced {
        simulate(&reduce(&spec)?, &control, &x0, args)?
    } else {
        simulate(&spec, &control, &x0, args)?
    };
    if let Some(d) = deviation {
        csv.push_str(&format!("# rk4_max_deviation,{d:e}\n"));
    }
    emit(args.out.as_deref(), &csv)?;
    match deviation {
        Some(d) if !(d < args.tol) => Err(Failure {
            code: EXIT_VERIFY,
            message: format!("closed form and RK4 differ by {d:e} (tolerance {:e})", args.tol),
        }),
        _ => Ok(()),
    }
}

fn simulate<S: ConstantControlFlow>(
    sys: &S,
    control: &PiecewiseControl,
    x0: &GroupElement,
    args: &SimulateArgs,
) -> Result<(String, Option<f64>), Failure> {
    let tr = flow_concat(sys, control, x0, args.samples)?;
    let deviation = if args.verify {
        // integrate each segment from the exact segment start and compare endpoints
        let mut max = 0.0f64;
        let mut g = *x0;
        for seg in &control.segments {
            let exact = sys.step(seg.duration, &g, seg.u)?;
            let oracle = rk4_se2(|h| sys.field(h, seg.u), &g, seg.duration, DEFAULT_RK4_STEP)?;
            max = max.max(exact.distance(&oracle));
            g = exact;
        }
        Some(max)
    } else {
        None
    };
    Ok((tr.to_csv(), deviation))
}

#[derive(Serialize)]
struct ReachOutput<'a> {
    estimate: se2lcs::reachability::EstimateSummary,
    lifted: se2lcs::reachability::LiftedControlSet,
    config: &'a GridConfig,
}

fn cmd_reach(args: &ReachArgs) -> Result<(), Failure> {
    let spec = spec_file::load_spec(&args.spec)?;
    if spec.is_degenerate() {
        return Err(Error::CaseMismatch(
            "A = 0: control sets are line segments; use `verify --suite monotone`".into(),
        )
        .into());
    }
    let rs = reduce(&spec)?;
    let mut cfg = GridConfig::default_for(&rs)?;
    if let Some(b) = args.bounds {
        cfg.bounds = b;
    }
    if let Some(r) = args.resolution {
        cfg.resolution = r;
    }
    if let Some(n) = args.control_grid {
        cfg.control_grid = n;
    }
    if let Some(t) = args.time_step {
        cfg.time_step = t;
    }
    if let Some(n) = args.max_steps {
        cfg.max_steps = n;
    }
    if let Some(h) = args.horizon {
        cfg.max_duration = h;
    }
    cfg.validate()?;
    let est = match args.generator {
        Some(u) => estimate_control_set_from(&rs, &cfg, u)?,
        None => estimate_control_set(&rs, &cfg)?,
    };
    if let (Some(path), Region::Grid(set)) = (&args.csv, &est.region) {
        std::fs::write(path, set.to_csv()).map_err(|e| io_failure(path, e))?;
    }
    let out = ReachOutput {
        estimate: est.summary(&cfg),
        lifted: lift_to_se2(&est),
        config: &cfg,
    };
    emit(args.out.as_deref(), &to_json(&out))
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    rho: f64,
    segments: &'a [se2lcs::flow::Segment],
    forward_segments: usize,
    waypoints: &'a [Vec2],
    radii: &'a [f64],
    final_control: Option<f64>,
    root_multiplicity: usize,
    origin_error: f64,
    closure_error: f64,
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let spec = spec_file::load_spec(&args.spec)?;
    if spec.is_degenerate() {
        return Err(Error::CaseMismatch("the planner needs det A ≠ 0 and tr A = 0".into()).into());
    }
    let rs = reduce(&spec)?;
    let plan = plan_periodic(&rs, Vec2::new(args.v0[0], args.v0[1]), args.tol, args.rho)?;
    if let Some(path) = &args.csv {
        std::fs::write(path, plan.trajectory.to_csv()).map_err(|e| io_failure(path, e))?;
    }
    let out = PlanOutput {
        rho: plan.rho,
        segments: &plan.control.segments,
        forward_segments: plan.forward_segments,
        waypoints: &plan.waypoints,
        radii: &plan.radii,
        final_control: plan.final_control,
        root_multiplicity: plan.root_multiplicity,
        origin_error: plan.origin_error,
        closure_error: plan.closure_error,
    };
    emit(args.out.as_deref(), &to_json(&out))
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let spec = spec_file::load_spec(&args.spec)?;
    let suites = if args.suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suites
            .iter()
            .map(|s| Suite::parse(s))
            .collect::<se2lcs::Result<Vec<_>>>()?
    };
    let cfg = VerifyConfig {
        suites,
        seed: args.seed,
        samples: args.samples,
        horizon: args.horizon,
    };
    let report = run_suites(&spec, &cfg);
    emit(args.out.as_deref(), &to_json(&report))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: "verification failed".into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Classify { spec, out } => cmd_classify(spec, out.as_deref()),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reach(a) => cmd_reach(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
