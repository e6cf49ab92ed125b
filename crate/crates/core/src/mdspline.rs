//! C¹ multi-degree rational spline spaces.
//!
//! A space is assembled from `m` segment NURBS spaces laid end to end. The
//! segment-local bases are concatenated into `b` (length `μ_m`) and the
//! global basis is `N = H b`, where the sparse extraction matrix `H` glues
//! the last two functions of each segment to the first two of the next one.
//!
//! Segment and join indices in this API are 0-based. Join `k` sits between
//! segment `k` and segment `k + 1`; in a periodic space join `m - 1` is the
//! seam between the last and the first segment.

use nalgebra::DMatrix;

use crate::error::{Result, SplineError};
use crate::nurbs::NurbsSpace;
use crate::sparse::SparseMatrix;

/// `m` segment spaces with an origin, a periodicity flag and one positive
/// `γ` per join.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfiguration {
    segments: Vec<NurbsSpace>,
    origin: f64,
    periodic: bool,
    gammas: Vec<f64>,
    breakpoints: Vec<f64>,
    mu: Vec<usize>,
}

impl SegmentConfiguration {
    /// `gammas` defaults to all ones (parametric C¹) when `None`.
    pub fn new(
        segments: Vec<NurbsSpace>,
        origin: f64,
        periodic: bool,
        gammas: Option<Vec<f64>>,
    ) -> Result<Self> {
        let m = segments.len();
        if m == 0 {
            return Err(SplineError::Config("at least one segment is required".into()));
        }
        if periodic && m < 2 {
            return Err(SplineError::Config(
                "a periodic configuration needs at least two segments".into(),
            ));
        }
        if !origin.is_finite() {
            return Err(SplineError::Config("origin must be finite".into()));
        }
        if let Some(i) = segments.iter().position(|s| s.dim() < 3) {
            return Err(SplineError::Config(format!(
                "segment {i} has dimension {}, at least 3 is required",
                segments[i].dim()
            )));
        }
        let n_joins = if periodic { m } else { m - 1 };
        let gammas = gammas.unwrap_or_else(|| vec![1.0; n_joins]);
        if gammas.len() != n_joins {
            return Err(SplineError::Config(format!(
                "{} gammas given for {n_joins} joins",
                gammas.len()
            )));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(SplineError::Config(format!("gamma {g} is not positive")));
        }

        let mut breakpoints = vec![origin];
        let mut mu = vec![0];
        for s in &segments {
            let (x1, x2) = s.interval();
            breakpoints.push(breakpoints.last().unwrap() + (x2 - x1));
            mu.push(mu.last().unwrap() + s.dim());
        }
        Ok(SegmentConfiguration {
            segments,
            origin,
            periodic,
            gammas,
            breakpoints,
            mu,
        })
    }

    pub fn segments(&self) -> &[NurbsSpace] {
        &self.segments
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn n_joins(&self) -> usize {
        self.gammas.len()
    }

    /// Global breakpoints `τ_0 < … < τ_m`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Global parameter domain `[t1, t2]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.n_segments()])
    }

    /// Offsets `μ_0 = 0, …, μ_m` of each segment in the local basis vector.
    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    /// `η_i = μ_i - 2i`.
    pub fn eta(&self, i: usize) -> usize {
        self.mu[i] - 2 * i
    }

    /// Total number of segment-local functions `μ_m`.
    pub fn local_dim(&self) -> usize {
        self.mu[self.n_segments()]
    }

    /// Dimension of the glued space.
    pub fn dim(&self) -> usize {
        let m = self.n_segments();
        if self.periodic {
            self.eta(m)
        } else {
            self.eta(m) + 2
        }
    }

    /// `(α, β)` at join `k`: the right endpoint coefficient of segment `k`
    /// and the left endpoint coefficient of the following segment.
    pub fn join_coefficients(&self, k: usize) -> (f64, f64) {
        let m = self.n_segments();
        let alpha = self.segments[k].endpoint_coefficients().1;
        let beta = self.segments[(k + 1) % m].endpoint_coefficients().0;
        (alpha, beta)
    }

    /// Global parameter of local parameter `x` in segment `i`.
    pub fn phi_map(&self, i: usize, x: f64) -> Result<f64> {
        let seg = self.segment(i)?;
        seg.knot_vector().check_domain(x)?;
        Ok(x - seg.interval().0 + self.breakpoints[i])
    }

    /// Segment and local parameter of global parameter `t`. Breakpoints go
    /// to the segment on their right, except the right end of the domain.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.domain();
        if t.is_nan() || t < lo || t > hi {
            return Err(SplineError::Domain { value: t, lo, hi });
        }
        let m = self.n_segments();
        let i = if t >= hi {
            m - 1
        } else {
            self.breakpoints[1..m].partition_point(|&b| b <= t)
        };
        let (x1, x2) = self.segments[i].interval();
        let x = (t - self.breakpoints[i] + x1).clamp(x1, x2);
        Ok((i, x))
    }

    fn segment(&self, i: usize) -> Result<&NurbsSpace> {
        self.segments.get(i).ok_or_else(|| {
            SplineError::Config(format!(
                "segment index {i} out of range for {} segments",
                self.n_segments()
            ))
        })
    }

    fn join_index(&self, k: usize) -> Result<()> {
        if k >= self.n_joins() {
            return Err(SplineError::Config(format!(
                "join index {k} out of range for {} joins",
                self.n_joins()
            )));
        }
        Ok(())
    }
}

/// C¹ multi-degree spline space with extraction matrix `H` (`n x μ_m`).
#[derive(Debug, Clone, PartialEq)]
pub struct MDSplineSpace {
    config: SegmentConfiguration,
    h: SparseMatrix,
}

impl MDSplineSpace {
    pub fn new(config: SegmentConfiguration) -> Result<Self> {
        build_extraction(config)
    }

    pub fn config(&self) -> &SegmentConfiguration {
        &self.config
    }

    pub fn extraction(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.n_rows()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.config.domain()
    }

    pub fn is_periodic(&self) -> bool {
        self.config.is_periodic()
    }

    /// Segment-local basis vector `b(t)` of length `μ_m`.
    pub fn local_basis(&self, t: f64) -> Result<Vec<f64>> {
        let (i, x) = self.config.locate(t)?;
        self.local_vector(i, x, false)
    }

    /// Segment-local derivative vector `b'(t)`.
    pub fn local_basis_derivative(&self, t: f64) -> Result<Vec<f64>> {
        let (i, x) = self.config.locate(t)?;
        self.local_vector(i, x, true)
    }

    fn local_vector(&self, i: usize, x: f64, derivative: bool) -> Result<Vec<f64>> {
        let seg = &self.config.segments[i];
        let (first, values, derivs) = seg.local_values_and_derivatives(x)?;
        let mut b = vec![0.0; self.config.local_dim()];
        let offset = self.config.mu[i] + first;
        let src = if derivative { derivs } else { values };
        b[offset..offset + src.len()].copy_from_slice(&src);
        Ok(b)
    }

    /// All `n` global basis values `N(t) = H b(t)`.
    pub fn eval_basis(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.h.mul_vec(&self.local_basis(t)?))
    }

    /// All `n` global basis derivatives with respect to `t`.
    pub fn eval_basis_derivative(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.h.mul_vec(&self.local_basis_derivative(t)?))
    }

    /// Left and right derivatives of every global basis function at join `k`.
    pub fn one_sided_derivatives(&self, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.config.join_index(k)?;
        let m = self.config.n_segments();
        let left = &self.config.segments[k];
        let right_index = (k + 1) % m;
        let right = &self.config.segments[right_index];
        let b_left = self.local_vector(k, left.interval().1, true)?;
        let b_right = self.local_vector(right_index, right.interval().0, true)?;
        Ok((self.h.mul_vec(&b_left), self.h.mul_vec(&b_right)))
    }

    /// Jump `left - right` of the first derivative of each basis function
    /// across join `k`.
    pub fn derivative_jump(&self, k: usize) -> Result<Vec<f64>> {
        let (left, right) = self.one_sided_derivatives(k)?;
        Ok(left.iter().zip(&right).map(|(l, r)| l - r).collect())
    }

    /// Jump of the basis values across join `k`.
    pub fn value_jump(&self, k: usize) -> Result<Vec<f64>> {
        self.config.join_index(k)?;
        let m = self.config.n_segments();
        let right_index = (k + 1) % m;
        let b_left = self.local_vector(k, self.config.segments[k].interval().1, false)?;
        let b_right =
            self.local_vector(right_index, self.config.segments[right_index].interval().0, false)?;
        let (l, r) = (self.h.mul_vec(&b_left), self.h.mul_vec(&b_right));
        Ok(l.iter().zip(&r).map(|(l, r)| l - r).collect())
    }

    /// Uniform grid of `count` parameters over the domain, merged with every
    /// breakpoint.
    pub fn sample_parameters(&self, count: usize) -> Vec<f64> {
        let (t1, t2) = self.domain();
        let mut ts: Vec<f64> = (0..count)
            .map(|k| {
                if count == 1 {
                    t1
                } else {
                    t1 + (t2 - t1) * k as f64 / (count - 1) as f64
                }
            })
            .collect();
        ts.extend_from_slice(self.config.breakpoints());
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Builds `H` (non-periodic) or `H_per` (periodic) for a configuration.
pub fn build_extraction(config: SegmentConfiguration) -> Result<MDSplineSpace> {
    let m = config.n_segments();
    let n = config.dim();
    let mu = config.mu.clone();
    let local = config.local_dim();
    // non-periodic spaces carry an extra leading row for the first function
    let o = usize::from(!config.periodic);
    let mut entries = Vec::new();
    for (k, seg) in config.segments.iter().enumerate() {
        for j in 1..seg.dim() - 1 {
            entries.push((config.eta(k) + j - 1 + o, mu[k] + j, 1.0));
        }
    }
    for (k, &gamma) in config.gammas.iter().enumerate() {
        let (alpha, beta) = config.join_coefficients(k);
        let c = alpha / (alpha + gamma * beta);
        let d = gamma * beta / (alpha + gamma * beta);
        let row_a = config.eta(k + 1) - 1 + o;
        let row_b = (config.eta(k + 1) + o) % n;
        let last = mu[k + 1] - 1;
        let first = mu[k + 1] % local;
        entries.extend([
            (row_a, last, c),
            (row_a, first, c),
            (row_b, last, d),
            (row_b, first, d),
        ]);
    }
    if !config.periodic {
        entries.push((0, 0, 1.0));
        entries.push((n - 1, mu[m] - 1, 1.0));
    }
    let h = SparseMatrix::from_triplets(n, local, entries)?;
    Ok(MDSplineSpace { config, h })
}

/// Spline curve in `ℝ^d`: control points are the rows of an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    space: MDSplineSpace,
    control_points: DMatrix<f64>,
}

impl Curve {
    pub fn new(space: MDSplineSpace, control_points: DMatrix<f64>) -> Result<Self> {
        if control_points.nrows() != space.dim() {
            return Err(SplineError::Dimension(format!(
                "{} control points for a space of dimension {}",
                control_points.nrows(),
                space.dim()
            )));
        }
        if control_points.ncols() < 2 {
            return Err(SplineError::Dimension(
                "curve control points need at least 2 coordinates".into(),
            ));
        }
        if control_points.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::Dimension("control points must be finite".into()));
        }
        Ok(Curve {
            space,
            control_points,
        })
    }

    pub fn space(&self) -> &MDSplineSpace {
        &self.space
    }

    pub fn control_points(&self) -> &DMatrix<f64> {
        &self.control_points
    }

    pub fn dimension(&self) -> usize {
        self.control_points.ncols()
    }

    pub fn with_control_points(&self, control_points: DMatrix<f64>) -> Result<Self> {
        Curve::new(self.space.clone(), control_points)
    }

    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        for (i, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * self.control_points[(i, c)];
                }
            }
        }
        out
    }

    /// Point `f(t) = Σ f_i N_i(t)`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.combine(&self.space.eval_basis(t)?))
    }

    /// First derivative `f'(t)`.
    pub fn eval_derivative(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.combine(&self.space.eval_basis_derivative(t)?))
    }

    /// Segment-local NURBS control points `g = Hᵀ F` (`μ_m x d`).
    pub fn local_control_points(&self) -> DMatrix<f64> {
        self.space.h.tr_mul_dense(&self.control_points)
    }
}
