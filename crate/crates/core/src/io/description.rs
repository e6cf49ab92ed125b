//! JSON description files for curves, polar surfaces and refinement plans.
//!
//! ```json
//! {
//!   "kind": "curve",
//!   "space": {
//!     "segments": [{ "degree": 2, "knots": [0, 0, 0, 1, 1, 1], "weights": [1, 0.7071067811865476, 1] }],
//!     "origin": 0.0,
//!     "periodic": false,
//!     "gammas": []
//!   },
//!   "control_points": [[1, 0], [1, 1], [0, 1]],
//!   "quadric": { "recipe": "ellipse-quadratic", "axes": [1, 1] }
//! }
//! ```
//!
//! Polar surfaces use `"kind": "polar-surface"` with `s_space`, `t_space`
//! and `poles` (`bottom`, `top` or `both`) in place of `space`. The
//! `quadric` entry is optional and records the recipe a model was built
//! from, so that it can be verified later.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SplineError;
use crate::mdspline::{Curve, MDSplineSpace, SegmentConfiguration};
use crate::nurbs::{KnotVector, NurbsSpace, WeightVector};
use crate::polar::{build_polar_extraction, PoleConfig, PolarSurface, TensorProductSpace};
use crate::quadrics::{EllipseSpec, EllipsoidSpec, Recipe};
use crate::refinement::{RefinementPlan, SegmentPlan};

#[derive(Debug, Error)]
pub enum DescriptionError {
    #[error("malformed document: {0}")]
    Syntax(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Invalid { path: String, source: SplineError },
}

type Result<T> = std::result::Result<T, DescriptionError>;

fn at<T>(path: impl Into<String>, r: std::result::Result<T, SplineError>) -> Result<T> {
    r.map_err(|source| DescriptionError::Invalid {
        path: path.into(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub segments: Vec<SegmentDoc>,
    #[serde(default)]
    pub origin: f64,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolesDoc {
    Bottom,
    Top,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadricDoc {
    pub recipe: String,
    pub axes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Document {
    Curve {
        space: SpaceDoc,
        control_points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadric: Option<QuadricDoc>,
    },
    PolarSurface {
        s_space: SpaceDoc,
        t_space: SpaceDoc,
        poles: PolesDoc,
        control_points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadric: Option<QuadricDoc>,
    },
}

/// Recipe and axis lengths a model was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricInfo {
    pub recipe: Recipe,
    pub axes: Vec<f64>,
}

impl QuadricInfo {
    pub fn ellipse_spec(&self) -> Option<EllipseSpec> {
        match self.recipe {
            Recipe::Ellipse(r) => EllipseSpec::new(r, self.axes[0], self.axes[1]).ok(),
            Recipe::Ellipsoid(_) => None,
        }
    }

    pub fn ellipsoid_spec(&self) -> Option<EllipsoidSpec> {
        match self.recipe {
            Recipe::Ellipsoid(r) => {
                EllipsoidSpec::new(r, self.axes[0], self.axes[1], self.axes[2]).ok()
            }
            Recipe::Ellipse(_) => None,
        }
    }
}

/// A validated curve or polar surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Curve {
        curve: Curve,
        quadric: Option<QuadricInfo>,
    },
    Surface {
        surface: PolarSurface,
        quadric: Option<QuadricInfo>,
    },
}

impl Model {
    pub fn quadric(&self) -> Option<&QuadricInfo> {
        match self {
            Model::Curve { quadric, .. } | Model::Surface { quadric, .. } => quadric.as_ref(),
        }
    }
}

fn build_space(doc: &SpaceDoc, path: &str) -> Result<MDSplineSpace> {
    let mut segments = Vec::with_capacity(doc.segments.len());
    for (i, seg) in doc.segments.iter().enumerate() {
        let seg_path = format!("{path}.segments[{i}]");
        for (j, &w) in seg.weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(DescriptionError::Invalid {
                    path: format!("{seg_path}.weights[{j}]"),
                    source: SplineError::Weights(format!("weight {w} is not positive")),
                });
            }
        }
        let kv = at(
            format!("{seg_path}.knots"),
            KnotVector::new(seg.degree, seg.knots.clone()),
        )?;
        let weights = at(
            format!("{seg_path}.weights"),
            WeightVector::new(seg.weights.clone()),
        )?;
        segments.push(at(format!("{seg_path}.weights"), NurbsSpace::new(kv, weights))?);
    }
    let config = at(
        path,
        SegmentConfiguration::new(segments, doc.origin, doc.periodic, doc.gammas.clone()),
    )?;
    at(path, MDSplineSpace::new(config))
}

fn build_points(rows: &[Vec<f64>], n: usize, min_dim: usize) -> Result<DMatrix<f64>> {
    let invalid = |path: String, msg: String| DescriptionError::Invalid {
        path,
        source: SplineError::Dimension(msg),
    };
    if rows.len() != n {
        return Err(invalid(
            "control_points".into(),
            format!("{} control points for a space of dimension {n}", rows.len()),
        ));
    }
    let d = rows.first().map_or(0, Vec::len);
    if d < min_dim {
        return Err(invalid(
            "control_points[0]".into(),
            format!("{d} coordinates, at least {min_dim} required"),
        ));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != d) {
        return Err(invalid(
            format!("control_points[{k}]"),
            format!("{} coordinates, expected {d}", rows[k].len()),
        ));
    }
    Ok(DMatrix::from_fn(n, d, |r, c| rows[r][c]))
}

fn build_quadric(doc: &Option<QuadricDoc>, surface: bool) -> Result<Option<QuadricInfo>> {
    let Some(doc) = doc else { return Ok(None) };
    let recipe = at("quadric.recipe", doc.recipe.parse::<Recipe>())?;
    let expected = match recipe {
        Recipe::Ellipse(_) if !surface => 2,
        Recipe::Ellipsoid(_) if surface => 3,
        _ => {
            return Err(DescriptionError::Invalid {
                path: "quadric.recipe".into(),
                source: SplineError::Config(format!(
                    "recipe {recipe} does not match the document kind"
                )),
            })
        }
    };
    if doc.axes.len() != expected {
        return Err(DescriptionError::Invalid {
            path: "quadric.axes".into(),
            source: SplineError::Config(format!("expected {expected} axis lengths")),
        });
    }
    if let Some(k) = doc.axes.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(DescriptionError::Invalid {
            path: format!("quadric.axes[{k}]"),
            source: SplineError::Config("axis lengths must be positive".into()),
        });
    }
    Ok(Some(QuadricInfo {
        recipe,
        axes: doc.axes.clone(),
    }))
}

/// Parses and validates a description.
pub fn parse_description(text: &str) -> Result<Model> {
    let doc: Document = serde_json::from_str(text)?;
    from_document(&doc)
}

pub fn from_document(doc: &Document) -> Result<Model> {
    match doc {
        Document::Curve {
            space,
            control_points,
            quadric,
        } => {
            let space = build_space(space, "space")?;
            let points = build_points(control_points, space.dim(), 2)?;
            Ok(Model::Curve {
                curve: at("control_points", Curve::new(space, points))?,
                quadric: build_quadric(quadric, false)?,
            })
        }
        Document::PolarSurface {
            s_space,
            t_space,
            poles,
            control_points,
            quadric,
        } => {
            let s = build_space(s_space, "s_space")?;
            let t = build_space(t_space, "t_space")?;
            let tp = at("s_space", TensorProductSpace::new(s, t))?;
            let poles = match poles {
                PolesDoc::Bottom => PoleConfig::Bottom,
                PolesDoc::Top => PoleConfig::Top,
                PolesDoc::Both => PoleConfig::Both,
            };
            let space = at("poles", build_polar_extraction(tp, poles))?;
            let points = build_points(control_points, space.dim(), 3)?;
            Ok(Model::Surface {
                surface: at("control_points", PolarSurface::new(space, points))?,
                quadric: build_quadric(quadric, true)?,
            })
        }
    }
}

fn space_doc(space: &MDSplineSpace) -> SpaceDoc {
    let config = space.config();
    SpaceDoc {
        segments: config
            .segments()
            .iter()
            .map(|s| SegmentDoc {
                degree: s.degree(),
                knots: s.knot_vector().knots().to_vec(),
                weights: s.weights().to_vec(),
            })
            .collect(),
        origin: config.origin(),
        periodic: config.is_periodic(),
        gammas: Some(config.gammas().to_vec()),
    }
}

fn point_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn quadric_doc(q: Option<&QuadricInfo>) -> Option<QuadricDoc> {
    q.map(|q| QuadricDoc {
        recipe: q.recipe.name().to_string(),
        axes: q.axes.clone(),
    })
}

pub fn to_document(model: &Model) -> Document {
    match model {
        Model::Curve { curve, quadric } => Document::Curve {
            space: space_doc(curve.space()),
            control_points: point_rows(curve.control_points()),
            quadric: quadric_doc(quadric.as_ref()),
        },
        Model::Surface { surface, quadric } => {
            let tp = surface.space().tensor_space();
            Document::PolarSurface {
                s_space: space_doc(tp.s_space()),
                t_space: space_doc(tp.t_space()),
                poles: match surface.space().poles() {
                    PoleConfig::Bottom => PolesDoc::Bottom,
                    PoleConfig::Top => PolesDoc::Top,
                    PoleConfig::Both => PolesDoc::Both,
                },
                control_points: point_rows(surface.control_points()),
                quadric: quadric_doc(quadric.as_ref()),
            }
        }
    }
}

/// Pretty-printed JSON; numbers use the shortest round-trip representation.
pub fn serialize_description(model: &Model) -> String {
    serde_json::to_string_pretty(&to_document(model)).expect("documents always serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentPlanDoc {
    #[serde(default)]
    pub insert: Vec<f64>,
    #[serde(default)]
    pub elevate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub segments: Vec<SegmentPlanDoc>,
}

impl From<&PlanDoc> for RefinementPlan {
    fn from(doc: &PlanDoc) -> Self {
        RefinementPlan {
            segments: doc
                .segments
                .iter()
                .map(|s| SegmentPlan {
                    insert: s.insert.clone(),
                    elevate: s.elevate,
                })
                .collect(),
        }
    }
}

/// Refinement plan file: `{"segments": [...]}` for curves, or
/// `{"s": {"segments": [...]}, "t": {"segments": [...]}}` for surfaces
/// (either direction may be omitted).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentPlanDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<PlanDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<PlanDoc>,
}

pub fn parse_plan(text: &str) -> Result<PlanFile> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrics::{
        ellipse_residual, make_ellipse, make_ellipsoid, EllipseRecipe, EllipsoidRecipe,
    };

    fn circle_model() -> Model {
        let spec = EllipseSpec::new(EllipseRecipe::Quadratic4, 1.0, 1.0).unwrap();
        Model::Curve {
            curve: make_ellipse(&spec).unwrap(),
            quadric: Some(QuadricInfo {
                recipe: Recipe::Ellipse(EllipseRecipe::Quadratic4),
                axes: vec![1.0, 1.0],
            }),
        }
    }

    #[test]
    fn circle_round_trip() {
        let text = serialize_description(&circle_model());
        let model = parse_description(&text).unwrap();
        assert_eq!(model, circle_model());
        let Model::Curve { curve, .. } = model else { panic!("expected a curve") };
        assert!(ellipse_residual(&curve, [1.0, 1.0], 1000).unwrap() <= 1e-12);
        assert_eq!(serialize_description(&circle_model()), text);
    }

    #[test]
    fn surface_round_trip() {
        let spec = EllipsoidSpec::new(EllipsoidRecipe::Deg23, 1.0, 0.5, 0.25).unwrap();
        let model = Model::Surface {
            surface: make_ellipsoid(&spec).unwrap(),
            quadric: None,
        };
        assert_eq!(parse_description(&serialize_description(&model)).unwrap(), model);
    }

    #[test]
    fn negative_weight_names_the_field() {
        let text = serialize_description(&circle_model()).replacen("0.7071067811865476", "-0.5", 3);
        let err = parse_description(&text).unwrap_err();
        assert!(err.to_string().starts_with("space.segments[0].weights[1]"), "{err}");
    }

    #[test]
    fn both_poles_need_four_rings() {
        let text = r#"{
            "kind": "polar-surface",
            "s_space": {"periodic": true, "segments": [
                {"degree": 2, "knots": [0,0,0,1,1,1], "weights": [1,1,1]},
                {"degree": 2, "knots": [0,0,0,1,1,1], "weights": [1,1,1]},
                {"degree": 2, "knots": [0,0,0,1,1,1], "weights": [1,1,1]}]},
            "t_space": {"segments": [{"degree": 2, "knots": [0,0,0,1,1,1], "weights": [1,1,1]}]},
            "poles": "both",
            "control_points": []
        }"#;
        let err = parse_description(text).unwrap_err();
        assert!(err.to_string().starts_with("poles:"), "{err}");
    }

    #[test]
    fn malformed_and_mismatched_documents() {
        assert!(matches!(
            parse_description("{\"kind\": \"curve\""),
            Err(DescriptionError::Syntax(_))
        ));
        let text = serialize_description(&circle_model()).replace("\"ellipse-quadratic\"", "\"ellipsoid-22\"");
        assert!(parse_description(&text).unwrap_err().to_string().starts_with("quadric.recipe"));
        let plan = parse_plan(r#"{"s": {"segments": [{"elevate": 1}]}}"#).unwrap();
        assert_eq!(RefinementPlan::from(plan.s.as_ref().unwrap()).segments[0].elevate, 1);
        assert!(parse_plan(r#"{"u": {}}"#).is_err());
    }
}
