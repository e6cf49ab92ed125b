use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use c1spline::io::{
    parse_description, parse_plan, sample_curve, samples_to_csv, serialize_description,
    tessellate_surface, Model, PlanDoc, QuadricInfo,
};
use c1spline::mdspline::{Curve, MDSplineSpace};
use c1spline::polar::{Pole, PolarSurface};
use c1spline::quadrics::{
    ellipse_residual, ellipsoid_residual, make_ellipse, make_ellipsoid, perturb_ellipse,
    perturb_ellipsoid, EllipseSpec, EllipsoidSpec, Recipe,
};
use c1spline::refinement::{refine_curve, refine_surface, RefinementPlan};
use c1spline::sparse::DtaReport;

#[derive(Parser)]
#[command(name = "c1spline", version, about = "Build, check, refine and export C1 rational splines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the description of a named quadric recipe.
    Make(MakeArgs),
    /// Print a point of a curve or surface.
    Eval(EvalArgs),
    /// Check exactness and smoothness; exits 1 if any metric exceeds the tolerance.
    Verify(VerifyArgs),
    /// Refine a model and report how well the geometry is reproduced.
    Refine(RefineArgs),
    /// Write curve samples as CSV or a surface mesh as OBJ.
    Export(ExportArgs),
    /// Apply the standard local perturbation to a quadric model.
    Perturb(PerturbArgs),
}

#[derive(Args)]
struct MakeArgs {
    /// One of ellipse-quadratic, ellipse-cubic, ellipse-322, ellipsoid-22, ellipsoid-23, ellipsoid-33.
    #[arg(long)]
    recipe: Recipe,
    #[arg(long, default_value_t = 1.0)]
    ax: f64,
    #[arg(long, default_value_t = 1.0)]
    ay: f64,
    /// Ignored for ellipses.
    #[arg(long, default_value_t = 1.0)]
    az: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    input: PathBuf,
    /// Surface parameter around the rings.
    #[arg(short, long)]
    s: Option<f64>,
    #[arg(short, long)]
    t: f64,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Number of residual samples.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    S,
    T,
}

#[derive(Args)]
struct RefineArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Insert the midpoint of every knot span.
    #[arg(long)]
    midpoints: bool,
    /// Raise every segment's degree by this amount.
    #[arg(long, default_value_t = 0)]
    elevate: usize,
    /// JSON plan file; overrides --midpoints and --elevate.
    #[arg(long, conflicts_with_all = ["midpoints", "elevate"])]
    plan: Option<PathBuf>,
    /// Surface direction refined by --midpoints and --elevate.
    #[arg(long, value_enum, default_value_t = Direction::T)]
    dir: Direction,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "format")]
struct ExportTarget {
    /// Write a surface mesh.
    #[arg(long)]
    obj: Option<PathBuf>,
    /// Write curve samples.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    input: PathBuf,
    #[command(flatten)]
    target: ExportTarget,
    /// Curve samples.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Mesh vertices around each ring.
    #[arg(long, default_value_t = 48)]
    nu: usize,
    /// Mesh rows in t, pole rows included.
    #[arg(long, default_value_t = 25)]
    nv: usize,
}

#[derive(Args)]
struct PerturbArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

/// Verification failure, as opposed to a usage or input error.
#[derive(Debug)]
struct VerificationFailed;

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Make(a) => make(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Refine(a) => refine(a),
        Command::Export(a) => export(a),
        Command::Perturb(a) => perturb(a),
    }
}

fn read_model(path: &Path) -> Result<Model> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_description(&text).with_context(|| format!("invalid description {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn make(a: MakeArgs) -> Result<()> {
    let model = match a.recipe {
        Recipe::Ellipse(r) => Model::Curve {
            curve: make_ellipse(&EllipseSpec::new(r, a.ax, a.ay)?)?,
            quadric: Some(QuadricInfo {
                recipe: a.recipe,
                axes: vec![a.ax, a.ay],
            }),
        },
        Recipe::Ellipsoid(r) => Model::Surface {
            surface: make_ellipsoid(&EllipsoidSpec::new(r, a.ax, a.ay, a.az)?)?,
            quadric: Some(QuadricInfo {
                recipe: a.recipe,
                axes: vec![a.ax, a.ay, a.az],
            }),
        },
    };
    write_text(&a.output, &serialize_description(&model))
}

fn format_point(p: &[f64]) -> String {
    p.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn eval(a: EvalArgs) -> Result<()> {
    let point = match (read_model(&a.input)?, a.s) {
        (Model::Curve { curve, .. }, None) => curve.eval(a.t)?,
        (Model::Surface { surface, .. }, Some(s)) => surface.eval(s, a.t)?,
        (Model::Curve { .. }, Some(_)) => bail!("curves take only --t"),
        (Model::Surface { .. }, None) => bail!("surfaces need both --s and --t"),
    };
    println!("{}", format_point(&point));
    Ok(())
}

/// Largest `|left - γ right|` over all basis functions and joins.
fn join_mismatch(space: &MDSplineSpace) -> Result<f64> {
    let config = space.config();
    let mut worst = 0.0_f64;
    for k in 0..config.n_joins() {
        let gamma = config.gammas()[k];
        let (left, right) = space.one_sided_derivatives(k)?;
        for (l, r) in left.iter().zip(&right) {
            worst = worst.max((l - gamma * r).abs());
        }
        for v in space.value_jump(k)? {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

struct Metric {
    name: &'static str,
    value: f64,
    limit: f64,
}

fn curve_metrics(curve: &Curve, quadric: Option<&QuadricInfo>, samples: usize, tol: f64) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    if let Some(spec) = quadric.and_then(QuadricInfo::ellipse_spec) {
        out.push(Metric {
            name: "residual",
            value: ellipse_residual(curve, spec.axes(), samples)?,
            limit: tol,
        });
    }
    out.push(Metric {
        name: "derivative-jump",
        value: join_mismatch(curve.space())?,
        limit: tol,
    });
    push_dta(&mut out, &DtaReport::of(curve.space().extraction()));
    Ok(out)
}

fn surface_metrics(
    surface: &PolarSurface,
    quadric: Option<&QuadricInfo>,
    samples: usize,
    tol: f64,
) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    if let Some(spec) = quadric.and_then(QuadricInfo::ellipsoid_spec) {
        out.push(Metric {
            name: "residual",
            value: ellipsoid_residual(surface, spec.axes(), samples)?,
            limit: tol,
        });
    }
    let tp = surface.space().tensor_space();
    out.push(Metric {
        name: "derivative-jump",
        value: join_mismatch(tp.s_space())?.max(join_mismatch(tp.t_space())?),
        limit: tol,
    });
    let poles = surface.space().poles();
    let mut spread = 0.0_f64;
    if poles.has_bottom() {
        spread = spread.max(surface.pole_spread(Pole::Bottom, 100)?);
    }
    if poles.has_top() {
        spread = spread.max(surface.pole_spread(Pole::Top, 100)?);
    }
    out.push(Metric {
        name: "pole-spread",
        value: spread,
        limit: tol,
    });
    push_dta(&mut out, &DtaReport::of(surface.space().extraction()));
    Ok(out)
}

fn push_dta(out: &mut Vec<Metric>, dta: &DtaReport) {
    out.push(Metric {
        name: "dta-column-sum-error",
        value: dta.max_column_sum_error,
        limit: 1e-14,
    });
    out.push(Metric {
        name: "dta-min-entry",
        value: dta.min_entry.min(0.0).abs(),
        limit: 0.0,
    });
}

fn verify(a: VerifyArgs) -> Result<()> {
    let metrics = match read_model(&a.input)? {
        Model::Curve { curve, quadric } => curve_metrics(&curve, quadric.as_ref(), a.samples, a.tol)?,
        Model::Surface { surface, quadric } => {
            surface_metrics(&surface, quadric.as_ref(), a.samples, a.tol)?
        }
    };
    let mut ok = true;
    for m in &metrics {
        let pass = m.value <= m.limit;
        ok &= pass;
        println!(
            "{:<22} {:e}  (limit {:e}) {}",
            m.name,
            m.value,
            m.limit,
            if pass { "ok" } else { "FAIL" }
        );
    }
    if ok {
        Ok(())
    } else {
        Err(VerificationFailed.into())
    }
}

fn direction_plan(
    doc: Option<&PlanDoc>,
    space: &MDSplineSpace,
) -> RefinementPlan {
    doc.map_or_else(
        || RefinementPlan::identity(space.config().n_segments()),
        RefinementPlan::from,
    )
}

fn flag_plan(space: &MDSplineSpace, midpoints: bool, elevate: usize) -> RefinementPlan {
    let mut plan = if midpoints {
        RefinementPlan::midpoints(space.config())
    } else {
        RefinementPlan::identity(space.config().n_segments())
    };
    for seg in &mut plan.segments {
        seg.elevate = elevate;
    }
    plan
}

/// Max distance between coarse and fine evaluations on a grid that
/// includes every breakpoint.
fn curve_reproduction(coarse: &Curve, fine: &Curve) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in fine.space().sample_parameters(1000) {
        let (a, b) = (coarse.eval(t)?, fine.eval(t)?);
        worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
    }
    Ok(worst)
}

fn surface_reproduction(coarse: &PolarSurface, fine: &PolarSurface) -> Result<f64> {
    let tp = fine.space().tensor_space();
    let mut worst = 0.0_f64;
    for t in tp.t_space().sample_parameters(60) {
        for s in tp.s_space().sample_parameters(60) {
            let (a, b) = (coarse.eval(s, t)?, fine.eval(s, t)?);
            worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
        }
    }
    Ok(worst)
}

fn refine(a: RefineArgs) -> Result<()> {
    let plan_file = match &a.plan {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Some(parse_plan(&text).with_context(|| format!("invalid plan {}", path.display()))?)
        }
        None => None,
    };
    let (model, error) = match read_model(&a.input)? {
        Model::Curve { curve, quadric } => {
            let plan = match &plan_file {
                Some(f) => {
                    if f.s.is_some() || f.t.is_some() {
                        bail!("curve plans take a top-level \"segments\" list");
                    }
                    let segments = f.segments.clone().unwrap_or_default();
                    RefinementPlan::from(&PlanDoc { segments })
                }
                None => flag_plan(curve.space(), a.midpoints, a.elevate),
            };
            let (fine, _) = refine_curve(&curve, &plan)?;
            let error = curve_reproduction(&curve, &fine)?;
            (Model::Curve { curve: fine, quadric }, error)
        }
        Model::Surface { surface, quadric } => {
            let tp = surface.space().tensor_space();
            let (s_plan, t_plan) = match &plan_file {
                Some(f) => {
                    if f.segments.is_some() {
                        bail!("surface plans take \"s\" and \"t\" entries");
                    }
                    (
                        direction_plan(f.s.as_ref(), tp.s_space()),
                        direction_plan(f.t.as_ref(), tp.t_space()),
                    )
                }
                None => {
                    let s_id = RefinementPlan::identity(tp.s_space().config().n_segments());
                    let t_id = RefinementPlan::identity(tp.t_space().config().n_segments());
                    match a.dir {
                        Direction::S => (flag_plan(tp.s_space(), a.midpoints, a.elevate), t_id),
                        Direction::T => (s_id, flag_plan(tp.t_space(), a.midpoints, a.elevate)),
                    }
                }
            };
            let (fine, _) = refine_surface(&surface, &s_plan, &t_plan)?;
            let error = surface_reproduction(&surface, &fine)?;
            (Model::Surface { surface: fine, quadric }, error)
        }
    };
    write_text(&a.output, &serialize_description(&model))?;
    println!("reproduction-error {error:e}");
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    match (read_model(&a.input)?, &a.target.obj, &a.target.csv) {
        (Model::Curve { curve, .. }, None, Some(path)) => {
            write_text(path, &samples_to_csv(&sample_curve(&curve, a.samples)?))
        }
        (Model::Surface { surface, .. }, Some(path), None) => {
            let mesh = tessellate_surface(&surface, a.nu, a.nv)?;
            println!(
                "vertices {} faces {} euler {} boundary-loops {}",
                mesh.vertices.len(),
                mesh.faces.len(),
                mesh.euler_characteristic(),
                mesh.boundary_loops()
            );
            write_text(path, &mesh.to_obj())
        }
        (Model::Curve { .. }, _, _) => bail!("curves export with --csv"),
        (Model::Surface { .. }, _, _) => bail!("surfaces export with --obj"),
    }
}

fn perturb(a: PerturbArgs) -> Result<()> {
    // the perturbed model is no longer the quadric, so the recipe is dropped
    let model = match read_model(&a.input)? {
        Model::Curve { curve, quadric } => {
            let Some(spec) = quadric.as_ref().and_then(QuadricInfo::ellipse_spec) else {
                bail!("perturb needs a model made from an ellipse recipe");
            };
            Model::Curve {
                curve: perturb_ellipse(&curve, &spec)?,
                quadric: None,
            }
        }
        Model::Surface { surface, quadric } => {
            let Some(spec) = quadric.as_ref().and_then(QuadricInfo::ellipsoid_spec) else {
                bail!("perturb needs a model made from an ellipsoid recipe");
            };
            Model::Surface {
                surface: perturb_ellipsoid(&surface, &spec)?,
                quadric: None,
            }
        }
    };
    write_text(&a.output, &serialize_description(&model))
}
