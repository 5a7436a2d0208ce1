//! `gchsh`: fidelity bounds from generalized CHSH scores.
//!
//! Exit codes: 0 success, 1 internal or table error, 2 invalid input,
//! 3 table entry missing, 4 correlators outside the self-testing region,
//! 5 output path not writable.

mod run_config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gchsh_core::bell::{local_bound, CorrelatorPair, Theta, TSIRELSON};
use gchsh_core::bounds::{
    bound_at, check_supported_theta, compute_entry, find_curve, load_table, save_table, upsert,
    BoundCurve, TableEntry,
};
use gchsh_core::selector::{
    mesh, missing_thetas, normalize, region_violation, select, write_mesh_csv, MatchedCurves,
    ThetaGrid,
};
use gchsh_core::Error;
use log::info;
use serde_json::json;

use run_config::{parse_theta, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "gchsh",
    version,
    about = "Self-testing fidelity bounds from generalized CHSH scores"
)]
struct Cli {
    /// Print one JSON object per result instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the angle search (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bound table file (overrides GCHSH_TABLE and the config file).
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Only print warnings and errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the trivial score for one θ and store it in the table.
    TrivialScore {
        /// Radians, or a multiple of π such as pi/8.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
    },
    /// Evaluate the fidelity bound at a score.
    Bound {
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, allow_hyphen_values = true)]
        score: f64,
        /// Compute and store the curve if the table lacks it.
        #[arg(long)]
        compute_missing: bool,
    },
    /// Pick the best θ for observed correlators.
    Select {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Number of θ values scanned.
        #[arg(long)]
        theta_points: Option<usize>,
        #[arg(long)]
        compute_missing: bool,
    },
    /// Write bounds over a square grid of the (X, Y) region as CSV.
    Mesh {
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta_points: Option<usize>,
        #[arg(long)]
        compute_missing: bool,
    },
    /// Manage the bound table.
    Table {
        #[command(subcommand)]
        action: TableAction,
    },
}

#[derive(Subcommand, Debug)]
enum TableAction {
    /// Compute every missing θ of the scan grid.
    Build {
        #[arg(long)]
        theta_points: Option<usize>,
    },
    /// Show the stored curves.
    List,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Input(_) | Error::Domain(_) | Error::InfeasibleScore { .. } => 2,
            Error::TableIncomplete(_) => 3,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    table_path: PathBuf,
    json: bool,
}

impl Ctx {
    fn entries(&self) -> Result<Vec<TableEntry>, Failure> {
        if !self.table_path.exists() {
            return Ok(Vec::new());
        }
        load_table(&self.table_path).map_err(|e| {
            Failure::new(
                1,
                format!("cannot load table {}: {e}", self.table_path.display()),
            )
        })
    }

    fn store(&self, entries: &[TableEntry]) -> CmdResult {
        save_table(entries, &self.table_path).map_err(|e| {
            Failure::new(
                5,
                format!("cannot write table {}: {e}", self.table_path.display()),
            )
        })
    }

    fn grid(&self, points: Option<usize>) -> Result<ThetaGrid, Failure> {
        Ok(ThetaGrid::new(points.unwrap_or(self.cfg.theta_points))?)
    }

    fn compute(&self, theta: Theta) -> Result<TableEntry, Failure> {
        info!("computing trivial score for theta = {}", theta.value());
        Ok(compute_entry(theta, &self.cfg.sweep())?)
    }

    /// Loads the table, filling in grid values of θ when allowed.
    fn curves_for(
        &self,
        grid: &ThetaGrid,
        compute_missing: bool,
    ) -> Result<MatchedCurves, Failure> {
        let mut entries = self.entries()?;
        let have: Vec<BoundCurve> = entries.iter().map(|e| e.curve).collect();
        let missing = missing_thetas(&have, grid);
        if !missing.is_empty() {
            if !compute_missing {
                return Err(Failure::new(
                    3,
                    format!(
                        "table {} lacks {} of {} scan values of theta (first: {}); rerun with --compute-missing or `gchsh table build`",
                        self.table_path.display(),
                        missing.len(),
                        grid.points,
                        missing[0].value()
                    ),
                ));
            }
            for (i, t) in missing.iter().enumerate() {
                info!("theta {}/{}", i + 1, missing.len());
                upsert(&mut entries, self.compute(*t)?);
                self.store(&entries)?;
            }
        }
        let curves: Vec<BoundCurve> = entries.iter().map(|e| e.curve).collect();
        Ok(MatchedCurves::new(&curves, grid)?)
    }

    fn emit(&self, value: serde_json::Value, text: String) {
        if self.json {
            println!("{value}");
        } else {
            print!("{text}");
        }
    }
}

fn theta_arg(s: &str) -> Result<Theta, Failure> {
    let v = parse_theta(s).map_err(Failure::input)?;
    let t = Theta::new(v)?;
    check_supported_theta(t)?;
    Ok(t)
}

fn curve_fields(c: &BoundCurve) -> serde_json::Value {
    json!({
        "theta": c.theta.value(),
        "beta_local": c.beta_local,
        "beta_star": c.beta_star,
        "fidelity_star": c.fidelity_star,
        "slope_star": c.slope_star,
        "beta_trivial": c.beta_trivial,
    })
}

fn cmd_trivial_score(ctx: &Ctx, theta: &str) -> CmdResult {
    let theta = theta_arg(theta)?;
    let mut entries = ctx.entries()?;
    let entry = ctx.compute(theta)?;
    let c = entry.curve;
    let points = entry.sweep.len();
    upsert(&mut entries, entry);
    ctx.store(&entries)?;
    let mut value = curve_fields(&c);
    value["sweep_points"] = json!(points);
    ctx.emit(
        value,
        format!(
            "theta         {}\nbeta_local    {:.12}\nbeta_star     {:.12}\nfidelity_star {:.12}\nbeta_trivial  {:.12}\n",
            c.theta.value(),
            c.beta_local,
            c.beta_star,
            c.fidelity_star,
            c.beta_trivial
        ),
    );
    Ok(())
}

fn cmd_bound(ctx: &Ctx, theta: &str, score: f64, compute_missing: bool) -> CmdResult {
    let theta = theta_arg(theta)?;
    if !score.is_finite() || score > TSIRELSON + 1e-12 {
        return Err(Failure::input(format!(
            "score {score} exceeds the quantum maximum 2√2"
        )));
    }
    let mut entries = ctx.entries()?;
    let curve = match find_curve(&entries, theta) {
        Some(c) => *c,
        None if compute_missing => {
            let e = ctx.compute(theta)?;
            let c = e.curve;
            upsert(&mut entries, e);
            ctx.store(&entries)?;
            c
        }
        None => {
            return Err(Failure::new(
                3,
                format!(
                    "table {} has no curve for theta = {}; rerun with --compute-missing",
                    ctx.table_path.display(),
                    theta.value()
                ),
            ))
        }
    };
    let f = bound_at(&curve, score)?;
    ctx.emit(
        json!({
            "theta": theta.value(),
            "score": score,
            "beta_trivial": curve.beta_trivial,
            "fidelity": f,
        }),
        format!("{f:.12}\n"),
    );
    Ok(())
}

fn cmd_select(
    ctx: &Ctx,
    x: f64,
    y: f64,
    points: Option<usize>,
    compute_missing: bool,
) -> CmdResult {
    let pair = CorrelatorPair::new(x, y).map_err(|e| Failure::new(4, e.to_string()))?;
    let n = normalize(pair);
    if let Some(v) = region_violation(&n) {
        return Err(Failure::new(
            4,
            format!(
                "(X, Y) = ({}, {}) is outside the self-testing region: {v}",
                n.x, n.y
            ),
        ));
    }
    let grid = ctx.grid(points)?;
    let curves = ctx.curves_for(&grid, compute_missing)?;
    let r = select(&n, &curves)?;
    let symmetries: Vec<String> = n.transform_log.iter().map(|s| s.to_string()).collect();
    let mut text = String::new();
    let _ = writeln!(text, "theta_best     {}", r.theta_best.value());
    let _ = writeln!(text, "beta_at_best   {:.12}", r.beta_at_best);
    let _ = writeln!(text, "local_bound    {:.12}", local_bound(r.theta_best));
    let _ = writeln!(text, "fidelity_bound {:.12}", r.fidelity_bound);
    let _ = writeln!(
        text,
        "symmetries     {}",
        if symmetries.is_empty() {
            "none".to_string()
        } else {
            symmetries.join(",")
        }
    );
    ctx.emit(
        json!({
            "x": n.x,
            "y": n.y,
            "theta_best": r.theta_best.value(),
            "beta_at_best": r.beta_at_best,
            "fidelity_bound": r.fidelity_bound,
            "in_region": r.in_region,
            "symmetries": symmetries,
        }),
        text,
    );
    Ok(())
}

fn check_writable(path: &Path) -> CmdResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() || path.is_dir() {
        return Err(Failure::new(5, format!("cannot write {}", path.display())));
    }
    Ok(())
}

fn cmd_mesh(
    ctx: &Ctx,
    delta: f64,
    out: &Path,
    points: Option<usize>,
    compute_missing: bool,
) -> CmdResult {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Failure::input(format!("delta {delta} must be positive")));
    }
    check_writable(out)?;
    let grid = ctx.grid(points)?;
    let curves = ctx.curves_for(&grid, compute_missing)?;
    let records = mesh(delta, &curves)?;
    write_mesh_csv(&records, out)
        .map_err(|e| Failure::new(5, format!("cannot write {}: {e}", out.display())))?;
    ctx.emit(
        json!({ "path": out.display().to_string(), "rows": records.len(), "delta": delta }),
        format!("wrote {} rows to {}\n", records.len(), out.display()),
    );
    Ok(())
}

fn cmd_table(ctx: &Ctx, action: &TableAction) -> CmdResult {
    match action {
        TableAction::Build { theta_points } => {
            let grid = ctx.grid(*theta_points)?;
            let curves = ctx.curves_for(&grid, true)?;
            ctx.emit(
                json!({ "path": ctx.table_path.display().to_string(), "curves": curves.curves().len() }),
                format!("{} holds all {} scan values\n", ctx.table_path.display(), grid.points),
            );
        }
        TableAction::List => {
            let entries = ctx.entries()?;
            if ctx.json {
                for e in &entries {
                    println!("{}", curve_fields(&e.curve));
                }
            } else {
                println!(
                    "{:>16} {:>16} {:>16} {:>16}",
                    "theta", "beta_local", "beta_star", "beta_trivial"
                );
                for e in &entries {
                    let c = e.curve;
                    println!(
                        "{:>16.12} {:>16.12} {:>16.12} {:>16.12}",
                        c.theta.value(),
                        c.beta_local,
                        c.beta_star,
                        c.beta_trivial
                    );
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::input)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let table_path = cfg.resolve_table(cli.table.as_deref());
    let ctx = Ctx {
        cfg,
        table_path,
        json: cli.json,
    };
    match &cli.command {
        Command::TrivialScore { theta } => cmd_trivial_score(&ctx, theta),
        Command::Bound {
            theta,
            score,
            compute_missing,
        } => cmd_bound(&ctx, theta, *score, *compute_missing),
        Command::Select {
            x,
            y,
            theta_points,
            compute_missing,
        } => cmd_select(&ctx, *x, *y, *theta_points, *compute_missing),
        Command::Mesh {
            delta,
            out,
            theta_points,
            compute_missing,
        } => cmd_mesh(&ctx, *delta, out, *theta_points, *compute_missing),
        Command::Table { action } => cmd_table(&ctx, action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
