//! Right inverses of the extraction matrices and refinement matrices.
//!
//! Refining a space changes its segment-local NURBS spaces; the coarse local
//! basis satisfies `b = S b̃`. Control points of a curve or surface are then
//! mapped by `F̃ = Rᵀ F` where `R = H S G̃` (curves) or `R = E S D̃`
//! (polar surfaces), with `G̃`, `D̃` right inverses of the fine extraction.

use crate::error::{Result, SplineError};
use crate::mdspline::{build_extraction, Curve, MDSplineSpace, SegmentConfiguration};
use crate::polar::{
    build_polar_extraction, ring_angles, PolarSplineSpace, PolarSurface, TensorProductSpace,
};
use crate::sparse::SparseMatrix;

/// Largest residual accepted in `R · (fine extraction) = (coarse extraction) · S`.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Knots to insert and degree raise for one segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentPlan {
    pub insert: Vec<f64>,
    pub elevate: usize,
}

/// Per-segment refinement. Each segment is first degree-elevated, then the
/// new knots are inserted into the elevated knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementPlan {
    pub segments: Vec<SegmentPlan>,
}

impl RefinementPlan {
    pub fn identity(n_segments: usize) -> Self {
        RefinementPlan {
            segments: vec![SegmentPlan::default(); n_segments],
        }
    }

    /// Inserts the midpoint of every non-empty knot span.
    pub fn midpoints(config: &SegmentConfiguration) -> Self {
        let segments = config
            .segments()
            .iter()
            .map(|seg| {
                let (x1, x2) = seg.interval();
                let mut breaks = vec![x1];
                breaks.extend(seg.knot_vector().interior_breaks().iter().map(|b| b.0));
                breaks.push(x2);
                SegmentPlan {
                    insert: breaks.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
                    elevate: 0,
                }
            })
            .collect();
        RefinementPlan { segments }
    }

    /// Raises the degree of every segment by `r`.
    pub fn elevate(n_segments: usize, r: usize) -> Self {
        RefinementPlan {
            segments: vec![
                SegmentPlan {
                    insert: Vec::new(),
                    elevate: r,
                };
                n_segments
            ],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.insert.is_empty() && s.elevate == 0)
    }
}

/// Selection matrix `G` with `H G = I`.
pub fn build_right_inverse(space: &MDSplineSpace) -> SparseMatrix {
    let config = space.config();
    let n = space.dim();
    let mu = config.mu();
    let o = usize::from(!config.is_periodic());
    let mut entries = Vec::with_capacity(n);
    for (k, seg) in config.segments().iter().enumerate() {
        for j in 1..seg.dim() - 1 {
            entries.push((mu[k] + j, config.eta(k) + j - 1 + o, 1.0));
        }
    }
    if !config.is_periodic() {
        entries.push((0, 0, 1.0));
        entries.push((config.local_dim() - 1, n - 1, 1.0));
    }
    SparseMatrix::accumulate(config.local_dim(), n, entries)
}

/// Refines every segment of `space` and returns the fine space together
/// with the block-diagonal rational refinement matrix `S` (`b = S b̃`).
pub fn refine_space(
    space: &MDSplineSpace,
    plan: &RefinementPlan,
) -> Result<(MDSplineSpace, SparseMatrix)> {
    let config = space.config();
    if plan.segments.len() != config.n_segments() {
        return Err(SplineError::Config(format!(
            "refinement plan has {} entries for {} segments",
            plan.segments.len(),
            config.n_segments()
        )));
    }
    let mut segments = Vec::with_capacity(config.n_segments());
    let mut blocks = Vec::with_capacity(config.n_segments());
    for (seg, p) in config.segments().iter().zip(&plan.segments) {
        let (fine, s) = seg.refine(&p.insert, p.elevate)?;
        segments.push(fine);
        blocks.push(s);
    }
    let fine_config = SegmentConfiguration::new(
        segments,
        config.origin(),
        config.is_periodic(),
        Some(config.gammas().to_vec()),
    )?;
    let block_refs: Vec<&SparseMatrix> = blocks.iter().collect();
    Ok((
        build_extraction(fine_config)?,
        SparseMatrix::block_diag(&block_refs),
    ))
}

fn check_consistency(lhs: &SparseMatrix, rhs: &SparseMatrix) -> Result<()> {
    let residual = lhs.max_abs_diff(rhs);
    if residual > CONSISTENCY_TOL {
        return Err(SplineError::InconsistentRefinement(residual));
    }
    Ok(())
}

/// `R = H S G̃`, verified against `R H̃ = H S`.
pub fn curve_refinement_matrix(
    coarse: &MDSplineSpace,
    fine: &MDSplineSpace,
    s: &SparseMatrix,
) -> Result<SparseMatrix> {
    let expected = (coarse.dim(), fine.dim());
    let hs = coarse.extraction().matmul(s);
    if s.shape() != (coarse.config().local_dim(), fine.config().local_dim()) {
        return Err(SplineError::Dimension(format!(
            "S is {:?}, spaces have local dimensions {} and {}",
            s.shape(),
            coarse.config().local_dim(),
            fine.config().local_dim()
        )));
    }
    let r = hs.matmul(&build_right_inverse(fine));
    debug_assert_eq!(r.shape(), expected);
    check_consistency(&r.matmul(fine.extraction()), &hs)?;
    Ok(r)
}

/// Refines a curve; the result traces the same geometry.
pub fn refine_curve(curve: &Curve, plan: &RefinementPlan) -> Result<(Curve, SparseMatrix)> {
    let (fine, s) = refine_space(curve.space(), plan)?;
    let r = curve_refinement_matrix(curve.space(), &fine, &s)?;
    let points = r.tr_mul_dense(curve.control_points());
    Ok((Curve::new(fine, points)?, r))
}

/// Indices `(κ, ι)` (1-based) of the two ring angles used by the right
/// inverse: `κ = 1`, `ι = 1 + ⌊n^s/4 + 1/2⌋`.
pub fn angle_indices(n_s: usize) -> (usize, usize) {
    (1, 1 + (n_s as f64 / 4.0 + 0.5).floor() as usize)
}

/// The `3 x 3` submatrix `M̃` of `Ẽ` on the columns of the first pole
/// function and the ring points at angles `θ_ι`, `θ_κ`.
pub fn pole_submatrix(n_s: usize) -> [[f64; 3]; 3] {
    let e = crate::polar::reduced_extraction(n_s);
    let (kappa, iota) = angle_indices(n_s);
    let cols = [0, n_s + iota - 1, n_s + kappa - 1];
    let mut m = [[0.0; 3]; 3];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, &col) in cols.iter().enumerate() {
            row[c] = e.get(r, col);
        }
    }
    m
}

/// Closed-form `M̃⁻¹` and `sin(θ_κ - θ_ι)`.
pub fn pole_submatrix_inverse(n_s: usize) -> Result<([[f64; 3]; 3], f64)> {
    let theta = ring_angles(n_s);
    let (kappa, iota) = angle_indices(n_s);
    let (ti, tk) = (theta[iota - 1], theta[kappa - 1]);
    let sin_diff = (tk - ti).sin();
    if sin_diff.abs() < 1e-12 {
        return Err(SplineError::DegenerateAngles(sin_diff));
    }
    let l = [
        [ti.sin() - tk.sin(), tk.cos() - ti.cos(), sin_diff],
        [tk.sin(), -tk.cos(), 0.0],
        [-ti.sin(), ti.cos(), 0.0],
    ];
    let s3 = 3.0_f64.sqrt();
    let k = [[2.0, -1.0, -1.0], [0.0, s3, -s3], [1.0, 1.0, 1.0]];
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|q| l[r][q] * k[q][c]).sum::<f64>() / sin_diff;
        }
    }
    Ok((inv, sin_diff))
}

/// `D̃` (`2n^s x 3`) with `Ẽ D̃ = I`.
pub fn reduced_right_inverse(n_s: usize) -> Result<SparseMatrix> {
    let (inv, _) = pole_submatrix_inverse(n_s)?;
    let (kappa, iota) = angle_indices(n_s);
    let rows = [0, n_s + iota - 1, n_s + kappa - 1];
    let entries = rows
        .iter()
        .zip(inv.iter())
        .flat_map(|(&r, m)| m.iter().enumerate().map(move |(c, &v)| (r, c, v)));
    Ok(SparseMatrix::accumulate(2 * n_s, 3, entries))
}

/// `D` with `E D = I` for any pole configuration.
pub fn build_polar_right_inverse(space: &PolarSplineSpace) -> Result<SparseMatrix> {
    let tp = space.tensor_space();
    let (n_s, n_t) = (tp.n_s(), tp.n_t());
    let d = reduced_right_inverse(n_s)?;
    let d_top = SparseMatrix::exchange(2 * n_s)
        .matmul(&d)
        .matmul(&SparseMatrix::exchange(3));
    use crate::polar::PoleConfig::*;
    Ok(match space.poles() {
        Bottom => SparseMatrix::block_diag(&[&d, &SparseMatrix::identity(n_s * (n_t - 2))]),
        Top => SparseMatrix::block_diag(&[&SparseMatrix::identity(n_s * (n_t - 2)), &d_top]),
        Both => SparseMatrix::block_diag(&[&d, &SparseMatrix::identity(n_s * (n_t - 4)), &d_top]),
    })
}

/// Refines the `s` and `t` factors of a polar space. Returns the fine
/// polar space and `S = R^t ⊗ R^s`, the refinement matrix of the tensor
/// basis (`B = S B̃`).
pub fn refine_polar(
    space: &PolarSplineSpace,
    s_plan: &RefinementPlan,
    t_plan: &RefinementPlan,
) -> Result<(PolarSplineSpace, SparseMatrix)> {
    let tp = space.tensor_space();
    let (s_fine, ss) = refine_space(tp.s_space(), s_plan)?;
    let (t_fine, st) = refine_space(tp.t_space(), t_plan)?;
    let rs = curve_refinement_matrix(tp.s_space(), &s_fine, &ss)?;
    let rt = curve_refinement_matrix(tp.t_space(), &t_fine, &st)?;
    let fine = build_polar_extraction(TensorProductSpace::new(s_fine, t_fine)?, space.poles())?;
    Ok((fine, rt.kron(&rs)))
}

/// `R = E S D̃`, verified against `R Ẽ = E S`.
pub fn polar_refinement_matrix(
    coarse: &PolarSplineSpace,
    fine: &PolarSplineSpace,
    s: &SparseMatrix,
) -> Result<SparseMatrix> {
    if s.shape() != (coarse.tensor_space().dim(), fine.tensor_space().dim()) {
        return Err(SplineError::Dimension(format!(
            "S is {:?}, tensor spaces have dimensions {} and {}",
            s.shape(),
            coarse.tensor_space().dim(),
            fine.tensor_space().dim()
        )));
    }
    let es = coarse.extraction().matmul(s);
    let r = es.matmul(&build_polar_right_inverse(fine)?);
    check_consistency(&r.matmul(fine.extraction()), &es)?;
    Ok(r)
}

/// Refines a polar surface; the result traces the same geometry.
pub fn refine_surface(
    surface: &PolarSurface,
    s_plan: &RefinementPlan,
    t_plan: &RefinementPlan,
) -> Result<(PolarSurface, SparseMatrix)> {
    let (fine, s) = refine_polar(surface.space(), s_plan, t_plan)?;
    let r = polar_refinement_matrix(surface.space(), &fine, &s)?;
    let points = r.tr_mul_dense(surface.control_points());
    Ok((PolarSurface::new(fine, points)?, r))
}
