//! C¹ polar spline spaces on tensor-product domains with collapsed edges.
//!
//! The tensor basis is ordered with `s` running fastest: `B_{i + j n^s} =
//! B^s_i B^t_j` (0-based). The polar basis is `N = E B`; near a pole the
//! first two rings of tensor functions are replaced by three functions whose
//! Hermite data at the pole come from the barycentric coordinates of a
//! fixed equilateral source triangle.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Result, SplineError};
use crate::mdspline::MDSplineSpace;
use crate::sparse::SparseMatrix;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Tensor product of a periodic `s` space and a non-periodic `t` space.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorProductSpace {
    s: MDSplineSpace,
    t: MDSplineSpace,
}

impl TensorProductSpace {
    pub fn new(s: MDSplineSpace, t: MDSplineSpace) -> Result<Self> {
        if !s.is_periodic() {
            return Err(SplineError::Config("the s space must be periodic".into()));
        }
        if t.is_periodic() {
            return Err(SplineError::Config("the t space must not be periodic".into()));
        }
        Ok(TensorProductSpace { s, t })
    }

    pub fn s_space(&self) -> &MDSplineSpace {
        &self.s
    }

    pub fn t_space(&self) -> &MDSplineSpace {
        &self.t
    }

    pub fn n_s(&self) -> usize {
        self.s.dim()
    }

    pub fn n_t(&self) -> usize {
        self.t.dim()
    }

    pub fn dim(&self) -> usize {
        self.n_s() * self.n_t()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.n_s()
    }

    /// Extraction of the tensor basis from tensor products of segment NURBS.
    pub fn extraction(&self) -> SparseMatrix {
        self.t.extraction().kron(self.s.extraction())
    }

    /// Number of tensor-product segment NURBS.
    pub fn local_dim(&self) -> usize {
        self.s.config().local_dim() * self.t.config().local_dim()
    }

    /// Number of rational tensor-product pieces.
    pub fn n_pieces(&self) -> usize {
        self.s.config().n_segments() * self.t.config().n_segments()
    }

    fn combine(bs: &[f64], bt: &[f64]) -> Vec<f64> {
        bt.iter()
            .flat_map(|&vt| bs.iter().map(move |&vs| vs * vt))
            .collect()
    }

    pub fn eval_basis(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(Self::combine(&self.s.eval_basis(s)?, &self.t.eval_basis(t)?))
    }

    pub fn eval_basis_ds(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(Self::combine(
            &self.s.eval_basis_derivative(s)?,
            &self.t.eval_basis(t)?,
        ))
    }

    pub fn eval_basis_dt(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(Self::combine(
            &self.s.eval_basis(s)?,
            &self.t.eval_basis_derivative(t)?,
        ))
    }
}

/// Which edges of the parametric domain are collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleConfig {
    Bottom,
    Top,
    Both,
}

impl PoleConfig {
    pub fn has_bottom(self) -> bool {
        matches!(self, PoleConfig::Bottom | PoleConfig::Both)
    }

    pub fn has_top(self) -> bool {
        matches!(self, PoleConfig::Top | PoleConfig::Both)
    }
}

/// One of the two poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    Bottom,
    Top,
}

/// Ring angles `θ_i = 2π + (1 - 2i)π / n^s`, `i = 1..n^s`.
pub fn ring_angles(n_s: usize) -> Vec<f64> {
    (1..=n_s)
        .map(|i| 2.0 * PI + (1.0 - 2.0 * i as f64) * PI / n_s as f64)
        .collect()
}

/// Ring radii `ρ_j = (j - 1) / (n^t - 1)`, `j = 1..n^t`.
pub fn ring_radii(n_t: usize) -> Vec<f64> {
    (0..n_t).map(|j| j as f64 / (n_t - 1) as f64).collect()
}

/// Equilateral triangle centred at the origin whose inscribed circle has
/// radius `rho2`.
pub fn source_triangle(rho2: f64) -> [[f64; 2]; 3] {
    [
        [2.0 * rho2, 0.0],
        [-rho2, SQRT_3 * rho2],
        [-rho2, -SQRT_3 * rho2],
    ]
}

/// Barycentric coordinates of `p` with respect to `tri`.
pub fn barycentric(tri: &[[f64; 2]; 3], p: [f64; 2]) -> Result<[f64; 3]> {
    let [a, b, c] = tri;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let scale = [a, b, c]
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
        return Err(SplineError::DegenerateTriangle);
    }
    let l2 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l3 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    Ok([1.0 - l2 - l3, l2, l3])
}

/// Maps `(cos θ, sin θ, 1)` to the barycentric coordinates of
/// `ρ_2 (cos θ, sin θ)` in the source triangle of radius `ρ_2`.
const BARY: [[f64; 3]; 3] = [
    [1.0 / 3.0, 0.0, 1.0 / 3.0],
    [-1.0 / 6.0, SQRT_3 / 6.0, 1.0 / 3.0],
    [-1.0 / 6.0, -SQRT_3 / 6.0, 1.0 / 3.0],
];

/// The `3 x 2n^s` pole block `Ẽ` for the bottom pole.
pub fn reduced_extraction(n_s: usize) -> SparseMatrix {
    let theta = ring_angles(n_s);
    let mut entries = Vec::with_capacity(6 * n_s);
    for l in 0..3 {
        for i in 0..n_s {
            entries.push((l, i, 1.0 / 3.0));
            let (sin, cos) = theta[i].sin_cos();
            let v = BARY[l][0] * cos + BARY[l][1] * sin + BARY[l][2];
            // ring points touching an edge of the triangle have an exact zero
            let v = if v.abs() < 4.0 * f64::EPSILON { 0.0 } else { v };
            entries.push((l, n_s + i, v));
        }
    }
    SparseMatrix::accumulate(3, 2 * n_s, entries)
}

/// Polar spline space `N = E B` over a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSplineSpace {
    tp: TensorProductSpace,
    poles: PoleConfig,
    e: SparseMatrix,
    theta: Vec<f64>,
    rho: Vec<f64>,
}

/// Builds the polar extraction matrix for the given pole configuration.
pub fn build_polar_extraction(tp: TensorProductSpace, poles: PoleConfig) -> Result<PolarSplineSpace> {
    let (n_s, n_t) = (tp.n_s(), tp.n_t());
    if n_s < 3 {
        return Err(SplineError::Config(format!(
            "polar spaces need n^s >= 3, got {n_s}"
        )));
    }
    let min_t = if poles == PoleConfig::Both { 4 } else { 3 };
    if n_t < min_t {
        return Err(SplineError::Config(format!(
            "{poles:?} pole configuration needs n^t >= {min_t}, got {n_t}"
        )));
    }
    let e_bottom = reduced_extraction(n_s);
    let j3 = SparseMatrix::exchange(3);
    let j2 = SparseMatrix::exchange(2 * n_s);
    let e_top = j3.matmul(&e_bottom).matmul(&j2);
    let e = match poles {
        PoleConfig::Bottom => {
            SparseMatrix::block_diag(&[&e_bottom, &SparseMatrix::identity(n_s * (n_t - 2))])
        }
        PoleConfig::Top => {
            SparseMatrix::block_diag(&[&SparseMatrix::identity(n_s * (n_t - 2)), &e_top])
        }
        PoleConfig::Both => SparseMatrix::block_diag(&[
            &e_bottom,
            &SparseMatrix::identity(n_s * (n_t - 4)),
            &e_top,
        ]),
    };
    Ok(PolarSplineSpace {
        theta: ring_angles(n_s),
        rho: ring_radii(n_t),
        tp,
        poles,
        e,
    })
}

impl PolarSplineSpace {
    pub fn new(tp: TensorProductSpace, poles: PoleConfig) -> Result<Self> {
        build_polar_extraction(tp, poles)
    }

    pub fn tensor_space(&self) -> &TensorProductSpace {
        &self.tp
    }

    pub fn poles(&self) -> PoleConfig {
        self.poles
    }

    pub fn extraction(&self) -> &SparseMatrix {
        &self.e
    }

    pub fn dim(&self) -> usize {
        self.e.n_rows()
    }

    pub fn ring_angles(&self) -> &[f64] {
        &self.theta
    }

    pub fn ring_radii(&self) -> &[f64] {
        &self.rho
    }

    pub fn triangle(&self) -> [[f64; 2]; 3] {
        source_triangle(self.rho[1])
    }

    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        (self.tp.s.domain(), self.tp.t.domain())
    }

    /// Parameter `t` of a pole.
    pub fn pole_parameter(&self, pole: Pole) -> f64 {
        let (t1, t2) = self.tp.t.domain();
        match pole {
            Pole::Bottom => t1,
            Pole::Top => t2,
        }
    }

    /// Indices of the three basis functions attached to a pole.
    pub fn pole_functions(&self, pole: Pole) -> Result<[usize; 3]> {
        let n = self.dim();
        match pole {
            Pole::Bottom if self.poles.has_bottom() => Ok([0, 1, 2]),
            Pole::Top if self.poles.has_top() => Ok([n - 3, n - 2, n - 1]),
            _ => Err(SplineError::Config(format!(
                "{pole:?} pole is not collapsed in a {:?} configuration",
                self.poles
            ))),
        }
    }

    pub fn eval_basis(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.e.mul_vec(&self.tp.eval_basis(s, t)?))
    }

    pub fn eval_basis_ds(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.e.mul_vec(&self.tp.eval_basis_ds(s, t)?))
    }

    pub fn eval_basis_dt(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.e.mul_vec(&self.tp.eval_basis_dt(s, t)?))
    }

    fn map_points(&self, pole: Pole) -> Vec<[f64; 2]> {
        let n_s = self.tp.n_s();
        let n_t = self.tp.n_t();
        let mut c = Vec::with_capacity(n_s * n_t);
        for &rho in &self.rho {
            for &theta in &self.theta {
                let (r, a) = match pole {
                    Pole::Bottom => (rho, theta),
                    Pole::Top => (1.0 - rho, 2.0 * PI - theta),
                };
                c.push([r * a.cos(), r * a.sin()]);
            }
        }
        c
    }

    fn apply_map(points: &[[f64; 2]], b: &[f64]) -> [f64; 2] {
        points.iter().zip(b).fold([0.0, 0.0], |acc, (c, w)| {
            [acc[0] + w * c[0], acc[1] + w * c[1]]
        })
    }

    /// Polar map `F(s, t)` collapsing the given edge to the origin.
    pub fn polar_map(&self, pole: Pole, s: f64, t: f64) -> Result<[f64; 2]> {
        Ok(Self::apply_map(&self.map_points(pole), &self.tp.eval_basis(s, t)?))
    }

    pub fn polar_map_ds(&self, pole: Pole, s: f64, t: f64) -> Result<[f64; 2]> {
        Ok(Self::apply_map(&self.map_points(pole), &self.tp.eval_basis_ds(s, t)?))
    }

    pub fn polar_map_dt(&self, pole: Pole, s: f64, t: f64) -> Result<[f64; 2]> {
        Ok(Self::apply_map(&self.map_points(pole), &self.tp.eval_basis_dt(s, t)?))
    }

    /// Largest deviation, over all basis functions, from single-valued
    /// Hermite data at a pole sampled on `samples` values of `s`: the spread
    /// of the pole values and the residual of the least-squares fit
    /// `∂_t N(s) = β ∂_t F_u(s) + γ ∂_t F_v(s)`.
    pub fn pole_basis_spread(&self, pole: Pole, samples: usize) -> Result<f64> {
        let data = self.pole_samples(pole, samples, |s, t| {
            Ok((self.eval_basis(s, t)?, self.eval_basis_dt(s, t)?))
        })?;
        Ok(hermite_spread(&data))
    }

    fn pole_samples<F>(&self, pole: Pole, samples: usize, f: F) -> Result<Vec<PoleSample>>
    where
        F: Fn(f64, f64) -> Result<(Vec<f64>, Vec<f64>)>,
    {
        self.pole_functions(pole)?;
        let (s1, s2) = self.tp.s.domain();
        let t = self.pole_parameter(pole);
        (0..samples)
            .map(|k| {
                let s = s1 + (s2 - s1) * k as f64 / samples as f64;
                let (values, dt) = f(s, t)?;
                Ok(PoleSample {
                    values,
                    dt,
                    map_dt: self.polar_map_dt(pole, s, t)?,
                })
            })
            .collect()
    }
}

struct PoleSample {
    values: Vec<f64>,
    dt: Vec<f64>,
    map_dt: [f64; 2],
}

fn hermite_spread(data: &[PoleSample]) -> f64 {
    let n = data[0].values.len();
    // normal equations of the 2-parameter fit share one matrix
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    for d in data {
        a11 += d.map_dt[0] * d.map_dt[0];
        a12 += d.map_dt[0] * d.map_dt[1];
        a22 += d.map_dt[1] * d.map_dt[1];
    }
    let det = a11 * a22 - a12 * a12;
    let mut worst = 0.0_f64;
    for k in 0..n {
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.values[k]), hi.max(d.values[k]))
        });
        worst = worst.max(hi - lo);
        let (mut r1, mut r2) = (0.0, 0.0);
        for d in data {
            r1 += d.map_dt[0] * d.dt[k];
            r2 += d.map_dt[1] * d.dt[k];
        }
        let beta = (a22 * r1 - a12 * r2) / det;
        let gamma = (a11 * r2 - a12 * r1) / det;
        for d in data {
            let fit = beta * d.map_dt[0] + gamma * d.map_dt[1];
            worst = worst.max((d.dt[k] - fit).abs());
        }
    }
    worst
}

/// Plane through a point with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

/// Polar surface in `ℝ^d`, `d >= 3`; control points are rows of an `n x d`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSurface {
    space: PolarSplineSpace,
    control_points: DMatrix<f64>,
}

impl PolarSurface {
    pub fn new(space: PolarSplineSpace, control_points: DMatrix<f64>) -> Result<Self> {
        if control_points.nrows() != space.dim() {
            return Err(SplineError::Dimension(format!(
                "{} control points for a space of dimension {}",
                control_points.nrows(),
                space.dim()
            )));
        }
        if control_points.ncols() < 3 {
            return Err(SplineError::Dimension(
                "surface control points need at least 3 coordinates".into(),
            ));
        }
        if control_points.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::Dimension("control points must be finite".into()));
        }
        Ok(PolarSurface {
            space,
            control_points,
        })
    }

    pub fn space(&self) -> &PolarSplineSpace {
        &self.space
    }

    pub fn control_points(&self) -> &DMatrix<f64> {
        &self.control_points
    }

    pub fn dimension(&self) -> usize {
        self.control_points.ncols()
    }

    pub fn with_control_points(&self, control_points: DMatrix<f64>) -> Result<Self> {
        PolarSurface::new(self.space.clone(), control_points)
    }

    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        for (l, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * self.control_points[(l, c)];
                }
            }
        }
        out
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.combine(&self.space.eval_basis(s, t)?))
    }

    pub fn eval_ds(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.combine(&self.space.eval_basis_ds(s, t)?))
    }

    pub fn eval_dt(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        Ok(self.combine(&self.space.eval_basis_dt(s, t)?))
    }

    /// Tensor-product control points `g = Eᵀ F` (`n^s n^t x d`).
    pub fn tp_control_points(&self) -> DMatrix<f64> {
        self.space.e.tr_mul_dense(&self.control_points)
    }

    /// Tangent plane at a pole: through the centroid of the pole's control
    /// triangle, normal to it.
    pub fn pole_tangent_plane(&self, pole: Pole) -> Result<Plane> {
        if self.dimension() != 3 {
            return Err(SplineError::Unsupported(
                "tangent planes are only defined for surfaces in 3D".into(),
            ));
        }
        let idx = self.space.pole_functions(pole)?;
        let p: Vec<[f64; 3]> = idx
            .iter()
            .map(|&l| {
                [
                    self.control_points[(l, 0)],
                    self.control_points[(l, 1)],
                    self.control_points[(l, 2)],
                ]
            })
            .collect();
        let u = sub(p[1], p[0]);
        let v = sub(p[2], p[0]);
        let n = cross(u, v);
        let len = norm(n);
        if len <= 1e-14 * norm(u).max(norm(v)).powi(2) || len == 0.0 {
            return Err(SplineError::DegenerateTangent);
        }
        Ok(Plane {
            point: (0..3).map(|c| (p[0][c] + p[1][c] + p[2][c]) / 3.0).collect(),
            normal: n.iter().map(|x| x / len).collect(),
        })
    }

    /// Hermite-data spread at a pole, measured coordinate-wise.
    pub fn pole_spread(&self, pole: Pole, samples: usize) -> Result<f64> {
        let data = self.space.pole_samples(pole, samples, |s, t| {
            Ok((self.eval(s, t)?, self.eval_dt(s, t)?))
        })?;
        Ok(hermite_spread(&data))
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}
