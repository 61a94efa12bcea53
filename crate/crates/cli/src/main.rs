use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use vmm_core::harness::{
    estimate_k_star, format_sci, run_sweep, solve_point, CatalogParams, CatalogProblem, ErrNorm,
    Feasibility, KStarConfig, ProblemCatalog, SolvedState, SweepConfig, SweepVariable,
};
use vmm_core::mesh::build_interval_mesh;
use vmm_core::mixed::{write_checkpoint, MixedSolveOptions, MixedSpace};
use vmm_core::nonlinearity::Gamma;
use vmm_core::radial::{HermiteOptions, RadialEval};
use vmm_core::surgery::{
    surgical_solve, ExtensionRegistry, SurgeryConfig, SurgeryInput, SurgerySolverRegistry,
};
use vmm_core::{Result, VmmError};

#[derive(Parser)]
#[command(
    name = "vmm",
    version,
    about = "Vanishing moment solvers and experiment driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial Hermite solve of a radial catalog problem.
    Radial(Common),
    /// Mixed finite element solve of a catalog problem.
    Mixed(Common),
    /// Iterative boundary-layer surgery.
    Surgery(SurgeryArgs),
    /// eps or h sweep with rate table.
    Sweep(SweepArgs),
    /// Curvature search for a Gauss curvature problem.
    Kstar(KStarArgs),
}

#[derive(Args, Clone)]
#[command(allow_negative_numbers = true)]
struct Common {
    #[arg(long, default_value = "radial-exp")]
    problem: String,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Cells per side (elements for radial problems).
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long)]
    tau: Option<f64>,
    /// Positive value or "auto" (gamma = eps^2).
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Start of the eps continuation.
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SurgeryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    #[arg(long, default_value_t = 2.0)]
    c_band: f64,
    #[arg(long, default_value = "linear-along-normal")]
    extension: String,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', conflicts_with = "h_list")]
    eps_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    /// Independent parallel solves instead of warm starts.
    #[arg(long)]
    cold: bool,
    #[arg(long, value_delimiter = ',', default_value = "L2,H1,H2,Linf")]
    norms: Vec<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct KStarArgs {
    #[arg(long, default_value = "gauss-cap")]
    problem: String,
    #[arg(long, default_value_t = -1e-3)]
    eps: f64,
    #[arg(long, default_value_t = -0.1)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 4.0)]
    k_hi: f64,
    #[arg(long, default_value_t = 0.05)]
    k_tol: f64,
    /// Boundary slope growth that marks a curvature infeasible; 0 uses
    /// Newton convergence alone.
    #[arg(long, default_value_t = 1.25)]
    slope_factor: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl Common {
    fn params(&self) -> Result<CatalogParams> {
        Ok(CatalogParams {
            gamma: self.gamma.as_deref().map(Gamma::parse).transpose()?,
            curvature: None,
        })
    }

    fn sweep_config(&self, variable: SweepVariable, values: Vec<f64>) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::new(self.problem.clone(), variable, values);
        cfg.eps = self.eps;
        cfg.degree = self.degree;
        cfg.tau = self.tau;
        cfg.params = self.params()?;
        cfg.tol = self.tol;
        cfg.eps_start = self.eps_start;
        Ok(cfg)
    }

    /// Mesh size giving `grid` cells across the problem's domain.
    fn h(&self, problem: &CatalogProblem) -> f64 {
        let width = match problem {
            CatalogProblem::Mixed { x_range, .. } => x_range.1 - x_range.0,
            CatalogProblem::Radial(p) => p.r_max,
        };
        width / self.grid.max(1) as f64
    }
}

fn print_errors(norms: &[Option<f64>; 4], sigma: Option<f64>) {
    for (n, e) in ErrNorm::ALL.iter().zip(norms) {
        if let Some(e) = e {
            println!("err_{} = {}", n.label(), format_sci(*e));
        }
    }
    if let Some(s) = sigma {
        println!("err_sigma_L2 = {}", format_sci(s));
    }
}

fn single(args: &Common, want_radial: bool) -> Result<bool> {
    let catalog = ProblemCatalog::default();
    let problem = catalog.build(&args.problem, &args.params()?)?;
    let is_radial = matches!(problem, CatalogProblem::Radial(_));
    if is_radial != want_radial {
        let kind = if want_radial { "radial" } else { "mixed" };
        return Err(VmmError::InvalidArgument(format!(
            "{} is not a {kind} problem",
            args.problem
        )));
    }
    let cfg = args.sweep_config(SweepVariable::Eps, vec![args.eps, args.eps * 0.5])?;
    let (errors, state) = solve_point(&problem, &cfg, args.eps, args.h(&problem), None)?;
    print_errors(&errors.norms, errors.sigma_l2);
    match state {
        SolvedState::Radial(st) => {
            let d = &st.diagnostics;
            println!("min_laplacian = {}", format_sci(d.min_laplacian));
            println!("nonconvex_band = {}", format_sci(d.band_width));
            if let Some(path) = &args.out {
                let mut text = String::from("r,u,u_r,lap\n");
                for &r in &st.mesh.nodes {
                    let j = st.u.jet(r);
                    text.push_str(&format!(
                        "{},{},{},{}\n",
                        format_sci(r),
                        format_sci(j.u),
                        format_sci(j.u_r),
                        format_sci(j.lap)
                    ));
                }
                std::fs::write(path, text)?;
            }
        }
        SolvedState::Mixed { space, state } => {
            println!("dofs = {}", space.n_total());
            if let Some(path) = &args.out {
                write_checkpoint(path, &space, &state)?;
            }
        }
    }
    Ok(true)
}

fn surgery(args: &SurgeryArgs) -> Result<bool> {
    let c = &args.common;
    let catalog = ProblemCatalog::default();
    let problem = catalog.build(&c.problem, &c.params()?)?;
    let h = c.h(&problem);
    let (name, input) = match problem {
        CatalogProblem::Radial(p) => {
            let problem = p.with_eps(c.eps)?;
            let mesh = Arc::new(build_interval_mesh(problem.r_max, c.grid)?);
            let exact = vmm_core::radial::exact_radial_solution(
                &problem,
                vmm_core::nonlinearity::Branch::Convex,
            )?;
            let opts = HermiteOptions {
                tol: c.tol,
                eps_start: c.eps_start.unwrap_or(0.1),
                ..Default::default()
            };
            (
                "radial",
                SurgeryInput::Radial {
                    problem,
                    mesh,
                    opts,
                    exact: Some(exact),
                },
            )
        }
        CatalogProblem::Mixed {
            spec,
            x_range,
            y_range,
            default_tau,
        } => {
            let nx = ((x_range.1 - x_range.0) / h).round() as usize;
            let ny = ((y_range.1 - y_range.0) / h).round().max(1.0) as usize;
            let mesh = Arc::new(vmm_core::mesh::build_rect_mesh(x_range, y_range, nx, ny)?);
            (
                "mixed",
                SurgeryInput::Mixed {
                    spec,
                    space: MixedSpace::new(mesh, c.degree)?,
                    eps: c.eps,
                    eps_start: c.eps_start.unwrap_or(c.eps),
                    tau: c.tau.unwrap_or(default_tau),
                    opts: MixedSolveOptions {
                        tol: c.tol,
                        ..Default::default()
                    },
                },
            )
        }
    };
    let solver = SurgerySolverRegistry::default().build(name, input)?;
    let config = SurgeryConfig {
        c_band: args.c_band,
        extension: args.extension.clone(),
        iterations: args.iterations,
    };
    let (_, trace) = surgical_solve(solver, &config, &ExtensionRegistry::default())?;
    let csv = trace.to_csv();
    print!("{csv}");
    if let Some(path) = &c.out {
        std::fs::write(path, csv)?;
    }
    Ok(true)
}

fn sweep(args: &SweepArgs) -> Result<bool> {
    let c = &args.common;
    let (variable, values) = match (&args.eps_list, &args.h_list) {
        (Some(v), None) => (SweepVariable::Eps, v.clone()),
        (None, Some(v)) => (SweepVariable::H, v.clone()),
        _ => {
            return Err(VmmError::InvalidArgument(
                "give exactly one of --eps-list and --h-list".into(),
            ))
        }
    };
    let mut cfg = c.sweep_config(variable, values)?;
    let catalog = ProblemCatalog::default();
    cfg.h = c.h(&catalog.build(&c.problem, &cfg.params)?);
    cfg.cold = args.cold;
    cfg.output = c.out.clone();
    cfg.norms = args
        .norms
        .iter()
        .map(|s| ErrNorm::parse(s))
        .collect::<Result<_>>()?;
    let outcome = run_sweep(&cfg, &catalog)?;
    print!("{}", outcome.table.to_csv_string());
    Ok(outcome.failures.is_empty())
}

fn kstar(args: &KStarArgs) -> Result<bool> {
    let feasibility = if args.slope_factor > 0.0 {
        Feasibility::BoundedSlope {
            factor: args.slope_factor,
        }
    } else {
        Feasibility::Convergence
    };
    let cfg = KStarConfig {
        problem: args.problem.clone(),
        eps: args.eps,
        eps_start: args.eps_start,
        h: args.h,
        degree: args.degree,
        k_hi: args.k_hi,
        k_tol: args.k_tol,
        feasibility,
        opts: MixedSolveOptions {
            tol: args.tol,
            ..Default::default()
        },
        ..Default::default()
    };
    let est = estimate_k_star(&cfg, &ProblemCatalog::default())?;
    println!("# search: bisection on Newton feasibility ({feasibility:?})");
    println!("k,feasible");
    for s in &est.samples {
        println!("{},{}", format_sci(s.k), s.feasible);
    }
    println!("k_star = {}", format_sci(est.k_star));
    println!(
        "bracket = [{}, {}]",
        format_sci(est.bracket.0),
        format_sci(est.bracket.1)
    );
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Radial(a) => single(a, true),
        Command::Mixed(a) => single(a, false),
        Command::Surgery(a) => surgery(a),
        Command::Sweep(a) => sweep(a),
        Command::Kstar(a) => kstar(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e @ VmmError::InvalidArgument(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
