//! Exact C¹ ellipses and ellipsoids.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Result, SplineError};
use crate::mdspline::{Curve, MDSplineSpace, SegmentConfiguration};
use crate::nurbs::NurbsSpace;
use crate::polar::{build_polar_extraction, PoleConfig, PolarSurface, TensorProductSpace};

const SQRT_6: f64 = 2.449_489_742_783_178;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipseRecipe {
    /// Four quadratic pieces.
    Quadratic4,
    /// Two cubic pieces.
    Cubic2,
    /// One cubic and two quadratic pieces.
    MultiDegree322,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipsoidRecipe {
    /// Bi-degree (2, 2), eight pieces.
    Deg22,
    /// Bi-degree (2, 3), four pieces.
    Deg23,
    /// Bi-degree (3, 3), two pieces.
    Deg33,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub recipe: EllipseRecipe,
    pub a_x: f64,
    pub a_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    pub recipe: EllipsoidRecipe,
    pub a_x: f64,
    pub a_y: f64,
    pub a_z: f64,
}

fn check_axes(axes: &[f64]) -> Result<()> {
    if let Some(a) = axes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(SplineError::Config(format!("axis length {a} is not positive")));
    }
    Ok(())
}

impl EllipseSpec {
    pub fn new(recipe: EllipseRecipe, a_x: f64, a_y: f64) -> Result<Self> {
        check_axes(&[a_x, a_y])?;
        Ok(EllipseSpec { recipe, a_x, a_y })
    }

    pub fn axes(&self) -> [f64; 2] {
        [self.a_x, self.a_y]
    }
}

impl EllipsoidSpec {
    pub fn new(recipe: EllipsoidRecipe, a_x: f64, a_y: f64, a_z: f64) -> Result<Self> {
        check_axes(&[a_x, a_y, a_z])?;
        Ok(EllipsoidSpec {
            recipe,
            a_x,
            a_y,
            a_z,
        })
    }

    pub fn axes(&self) -> [f64; 3] {
        [self.a_x, self.a_y, self.a_z]
    }
}

/// Any of the six recipes, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    Ellipse(EllipseRecipe),
    Ellipsoid(EllipsoidRecipe),
}

impl Recipe {
    pub const ALL: [Recipe; 6] = [
        Recipe::Ellipse(EllipseRecipe::Quadratic4),
        Recipe::Ellipse(EllipseRecipe::Cubic2),
        Recipe::Ellipse(EllipseRecipe::MultiDegree322),
        Recipe::Ellipsoid(EllipsoidRecipe::Deg22),
        Recipe::Ellipsoid(EllipsoidRecipe::Deg23),
        Recipe::Ellipsoid(EllipsoidRecipe::Deg33),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Ellipse(EllipseRecipe::Quadratic4) => "ellipse-quadratic",
            Recipe::Ellipse(EllipseRecipe::Cubic2) => "ellipse-cubic",
            Recipe::Ellipse(EllipseRecipe::MultiDegree322) => "ellipse-322",
            Recipe::Ellipsoid(EllipsoidRecipe::Deg22) => "ellipsoid-22",
            Recipe::Ellipsoid(EllipsoidRecipe::Deg23) => "ellipsoid-23",
            Recipe::Ellipsoid(EllipsoidRecipe::Deg33) => "ellipsoid-33",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = SplineError;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| SplineError::Config(format!("unknown recipe '{s}'")))
    }
}

fn quadratic_arc() -> Result<NurbsSpace> {
    NurbsSpace::from_parts(2, vec![0., 0., 0., 1., 1., 1.], vec![1.0, SQRT_2 / 2.0, 1.0])
}

fn cubic_arc(len: f64) -> Result<NurbsSpace> {
    NurbsSpace::from_parts(
        3,
        vec![0., 0., 0., 0., len, len, len, len],
        vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0],
    )
}

fn periodic(segments: Vec<NurbsSpace>) -> Result<MDSplineSpace> {
    MDSplineSpace::new(SegmentConfiguration::new(segments, 0.0, true, None)?)
}

fn open(segments: Vec<NurbsSpace>) -> Result<MDSplineSpace> {
    MDSplineSpace::new(SegmentConfiguration::new(segments, 0.0, false, None)?)
}

pub fn make_ellipse(spec: &EllipseSpec) -> Result<Curve> {
    let (ax, ay) = (spec.a_x, spec.a_y);
    let (space, points) = match spec.recipe {
        EllipseRecipe::Quadratic4 => (
            periodic(vec![quadratic_arc()?; 4])?,
            [[ax, ay], [ax, -ay], [-ax, -ay], [-ax, ay]],
        ),
        EllipseRecipe::Cubic2 => (
            periodic(vec![cubic_arc(1.0)?; 2])?,
            [[2.0 * ax, ay], [2.0 * ax, -ay], [-2.0 * ax, -ay], [-2.0 * ax, ay]],
        ),
        EllipseRecipe::MultiDegree322 => (
            periodic(vec![cubic_arc(SQRT_2)?, quadratic_arc()?, quadratic_arc()?])?,
            [[2.0 * ax, ay], [2.0 * ax, -ay], [-ax, -ay], [-ax, ay]],
        ),
    };
    Curve::new(space, DMatrix::from_fn(4, 2, |r, c| points[r][c]))
}

pub fn make_ellipsoid(spec: &EllipsoidSpec) -> Result<PolarSurface> {
    let (ax, ay, az) = (spec.a_x, spec.a_y, spec.a_z);
    let (s, t, kx, ky) = match spec.recipe {
        EllipsoidRecipe::Deg22 => (
            periodic(vec![quadratic_arc()?; 4])?,
            open(vec![quadratic_arc()?; 2])?,
            SQRT_6,
            SQRT_2,
        ),
        EllipsoidRecipe::Deg23 => (
            periodic(vec![quadratic_arc()?; 4])?,
            open(vec![cubic_arc(1.0)?])?,
            2.0 * SQRT_6,
            2.0 * SQRT_2,
        ),
        EllipsoidRecipe::Deg33 => (
            periodic(vec![cubic_arc(1.0)?; 2])?,
            open(vec![cubic_arc(1.0)?])?,
            4.0 * SQRT_6,
            2.0 * SQRT_2,
        ),
    };
    let space = build_polar_extraction(TensorProductSpace::new(s, t)?, PoleConfig::Both)?;
    let (x, y) = (kx * ax, ky * ay);
    let points = [
        [0.0, 2.0 * y, az],
        [-x, -y, az],
        [x, -y, az],
        [-x, -y, -az],
        [x, -y, -az],
        [0.0, 2.0 * y, -az],
    ];
    PolarSurface::new(space, DMatrix::from_fn(6, 3, |r, c| points[r][c]))
}

fn implicit_residual(p: &[f64], axes: &[f64]) -> f64 {
    (p.iter().zip(axes).map(|(x, a)| (x / a).powi(2)).sum::<f64>() - 1.0).abs()
}

/// Max of `|(x/a_x)² + (y/a_y)² - 1|` over `n_samples` uniform parameters
/// plus every breakpoint.
pub fn ellipse_residual(curve: &Curve, axes: [f64; 2], n_samples: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in curve.space().sample_parameters(n_samples.max(1)) {
        worst = worst.max(implicit_residual(&curve.eval(t)?, &axes));
    }
    Ok(worst)
}

/// Max of the ellipsoid residual over a tensor grid of about `n_samples`
/// parameter pairs plus every breakpoint line.
pub fn ellipsoid_residual(surface: &PolarSurface, axes: [f64; 3], n_samples: usize) -> Result<f64> {
    let per_dir = (n_samples.max(1) as f64).sqrt().ceil() as usize;
    let tp = surface.space().tensor_space();
    let ss = tp.s_space().sample_parameters(per_dir);
    let ts = tp.t_space().sample_parameters(per_dir);
    let mut worst = 0.0_f64;
    for &t in &ts {
        for &s in &ss {
            worst = worst.max(implicit_residual(&surface.eval(s, t)?, &axes));
        }
    }
    Ok(worst)
}

/// Shifts the first control point by `(0, a_y)`.
pub fn perturb_ellipse(curve: &Curve, spec: &EllipseSpec) -> Result<Curve> {
    let mut f = curve.control_points().clone();
    f[(0, 1)] += spec.a_y;
    curve.with_control_points(f)
}

/// Shifts the third control point by `(0, 0, 4 a_x)`.
pub fn perturb_ellipsoid(surface: &PolarSurface, spec: &EllipsoidSpec) -> Result<PolarSurface> {
    let mut f = surface.control_points().clone();
    f[(2, 2)] += 4.0 * spec.a_x;
    surface.with_control_points(f)
}
