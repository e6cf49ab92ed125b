//! Univariate B-spline and NURBS bases on a single open knot vector.
//!
//! Besides evaluation this module provides the two classical refinement
//! operators for one segment, knot insertion and degree elevation, both as
//! sparse matrices `A` with `b = A b̃`, plus the rational refinement matrix
//! built on top of them.

use crate::error::{Result, SplineError};
use crate::sparse::SparseMatrix;

/// Open knot vector whose interior knots have multiplicity at most `p - 1`,
/// so that the spanned spline space is at least C¹.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let p = degree;
        if p < 1 {
            return Err(SplineError::KnotVector("degree must be at least 1".into()));
        }
        if knots.len() < 2 * p + 2 {
            return Err(SplineError::KnotVector(format!(
                "{} knots is too few for degree {p} (need at least {})",
                knots.len(),
                2 * p + 2
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(SplineError::KnotVector("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::KnotVector("knots must be non-decreasing".into()));
        }
        let n = knots.len() - p - 1;
        let (x1, x2) = (knots[0], knots[knots.len() - 1]);
        if knots[..=p].iter().any(|&k| k != x1) || knots[n..].iter().any(|&k| k != x2) {
            return Err(SplineError::KnotVector(format!(
                "end knots must be repeated {} times",
                p + 1
            )));
        }
        if knots[p + 1] <= x1 || knots[n - 1] >= x2 {
            return Err(SplineError::KnotVector(format!(
                "end knots must have multiplicity exactly {}",
                p + 1
            )));
        }
        let kv = KnotVector { degree, knots };
        if let Some(&(knot, m)) = kv.interior_breaks().iter().find(|&&(_, m)| m + 1 > p) {
            return Err(SplineError::Multiplicity {
                knot,
                multiplicity: m,
                max: p - 1,
            });
        }
        Ok(kv)
    }

    /// Knot vector of a single Bézier segment on `[x1, x2]`.
    pub fn bezier(degree: usize, x1: f64, x2: f64) -> Result<Self> {
        let mut knots = vec![x1; degree + 1];
        knots.extend(std::iter::repeat_n(x2, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `n`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Basic interval `[x1, x2]`.
    pub fn interval(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Interior breakpoints with their multiplicities.
    pub fn interior_breaks(&self) -> Vec<(f64, usize)> {
        interior_breaks(self.degree, &self.knots)
    }

    /// Number of non-empty knot spans.
    pub fn n_spans(&self) -> usize {
        self.interior_breaks().len() + 1
    }

    pub fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.interval();
        if x.is_nan() || x < lo || x > hi {
            return Err(SplineError::Domain { value: x, lo, hi });
        }
        Ok(())
    }

    /// The `p + 1` possibly non-zero basis functions at `x` and their
    /// derivatives up to `order`, together with the index of the first one.
    pub fn local_derivatives(&self, x: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        self.check_domain(x)?;
        let span = find_span(self.degree, &self.knots, x);
        let ders = ders_basis_funs(span, x, self.degree, &self.knots, order);
        Ok((span - self.degree, ders))
    }

    /// All `n` B-spline values at `x`, left-continuous at the right end.
    pub fn basis_all(&self, x: f64) -> Result<Vec<f64>> {
        self.derivative_all(x, 0)
    }

    /// All `n` B-spline derivatives of the given order (0, 1 or 2) at `x`.
    pub fn derivative_all(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > 2 {
            return Err(SplineError::Unsupported(format!(
                "derivative order {order} (at most 2 supported)"
            )));
        }
        let (first, ders) = self.local_derivatives(x, order)?;
        let mut out = vec![0.0; self.dim()];
        out[first..first + self.degree + 1].copy_from_slice(&ders[order]);
        Ok(out)
    }

    /// Refines by inserting `new_knots` (sorted, strictly inside the basic
    /// interval). Returns the refined knot vector and `A` with `b = A b̃`.
    pub fn insertion_matrix(&self, new_knots: &[f64]) -> Result<(KnotVector, SparseMatrix)> {
        let (x1, x2) = self.interval();
        if new_knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::KnotVector("new knots must be sorted".into()));
        }
        let mut knots = self.knots.clone();
        let mut a = SparseMatrix::identity(self.dim());
        for &u in new_knots {
            if !(u > x1 && u < x2) {
                return Err(SplineError::Domain {
                    value: u,
                    lo: x1,
                    hi: x2,
                });
            }
            let multiplicity = knots.iter().filter(|&&k| k == u).count() + 1;
            if multiplicity + 1 > self.degree {
                return Err(SplineError::Multiplicity {
                    knot: u,
                    multiplicity,
                    max: self.degree - 1,
                });
            }
            let step = insert_knot(self.degree, &knots, u);
            a = a.matmul(&step.lift);
            knots = step.knots;
        }
        Ok((KnotVector::new(self.degree, knots)?, a))
    }

    /// Raises the degree by `r` keeping the breakpoints and the continuity
    /// at each of them. Returns the elevated knot vector and `A` with
    /// `b = A b̃`.
    pub fn elevation_matrix(&self, r: usize) -> Result<(KnotVector, SparseMatrix)> {
        if r == 0 {
            return Ok((self.clone(), SparseMatrix::identity(self.dim())));
        }
        let p = self.degree;
        let q = p + r;
        let breaks = self.interior_breaks();
        let (x1, x2) = self.interval();

        // old basis -> piecewise Bernstein basis of degree p
        let (bez_old, _) = to_bezier_form(p, &self.knots);

        // degree-p Bernstein pieces -> degree-q Bernstein pieces
        let n_pieces = breaks.len() + 1;
        let elev = bernstein_elevation(p, r);
        let mut entries = Vec::new();
        for piece in 0..n_pieces {
            for i in 0..=p {
                for k in i..=i + r {
                    let row = piece * p + i;
                    let col = piece * q + k;
                    // the join function's end coefficient was already added by the previous piece
                    if i == 0 && k == 0 && piece > 0 {
                        continue;
                    }
                    entries.push((row, col, elev[i][k - i]));
                }
            }
        }
        let elevate = SparseMatrix::from_triplets(n_pieces * p + 1, n_pieces * q + 1, entries)?;

        // new basis -> piecewise Bernstein basis of degree q, then back
        let mut knots = vec![x1; q + 1];
        for &(b, m) in &breaks {
            knots.extend(std::iter::repeat_n(b, m + r));
        }
        knots.extend(std::iter::repeat_n(x2, q + 1));
        let elevated = KnotVector::new(q, knots)?;
        let (_, remove) = to_bezier_form(q, &elevated.knots);

        let a = bez_old.matmul(&elevate).matmul(&remove);
        // exact entries are products of binomial ratios; anything this small is roundoff
        let a = SparseMatrix::from_triplets(
            a.n_rows(),
            a.n_cols(),
            a.triplets().filter(|&(_, _, v)| v.abs() > 1e-14),
        )?;
        Ok((elevated, a))
    }

    /// Elevates by `r` and then inserts `new_knots` into the elevated vector.
    pub fn refinement_matrix(
        &self,
        new_knots: &[f64],
        r: usize,
    ) -> Result<(KnotVector, SparseMatrix)> {
        let (elevated, a_elev) = self.elevation_matrix(r)?;
        let (fine, a_ins) = elevated.insertion_matrix(new_knots)?;
        Ok((fine, a_elev.matmul(&a_ins)))
    }
}

/// Strictly positive weights, one per basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(SplineError::Weights(format!(
                "weight {i} is {w}, weights must be positive"
            )));
        }
        Ok(WeightVector(weights))
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// NURBS space `R[ξ, w]` of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsSpace {
    kv: KnotVector,
    weights: WeightVector,
}

impl NurbsSpace {
    pub fn new(kv: KnotVector, weights: WeightVector) -> Result<Self> {
        if kv.dim() != weights.len() {
            return Err(SplineError::Weights(format!(
                "{} weights for a space of dimension {}",
                weights.len(),
                kv.dim()
            )));
        }
        Ok(NurbsSpace { kv, weights })
    }

    /// Convenience constructor from raw knots and weights.
    pub fn from_parts(degree: usize, knots: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(KnotVector::new(degree, knots)?, WeightVector::new(weights)?)
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.kv
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn degree(&self) -> usize {
        self.kv.degree
    }

    pub fn dim(&self) -> usize {
        self.kv.dim()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.kv.interval()
    }

    /// Rational basis values and first derivatives on the `p + 1` local
    /// functions at `x`, with the index of the first one.
    pub fn local_values_and_derivatives(&self, x: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let (first, ders) = self.kv.local_derivatives(x, 1)?;
        let w = &self.weights.as_slice()[first..first + self.degree() + 1];
        let weighted: Vec<f64> = ders[0].iter().zip(w).map(|(b, w)| b * w).collect();
        let weighted_d: Vec<f64> = ders[1].iter().zip(w).map(|(b, w)| b * w).collect();
        let denom: f64 = weighted.iter().sum();
        let denom_d: f64 = weighted_d.iter().sum();
        let values: Vec<f64> = weighted.iter().map(|v| v / denom).collect();
        let derivs = weighted_d
            .iter()
            .zip(&values)
            .map(|(d, r)| (d - r * denom_d) / denom)
            .collect();
        Ok((first, values, derivs))
    }

    pub fn basis_all(&self, x: f64) -> Result<Vec<f64>> {
        let (first, values, _) = self.local_values_and_derivatives(x)?;
        Ok(self.scatter(first, &values))
    }

    pub fn derivative_all(&self, x: f64) -> Result<Vec<f64>> {
        let (first, _, derivs) = self.local_values_and_derivatives(x)?;
        Ok(self.scatter(first, &derivs))
    }

    fn scatter(&self, first: usize, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[first..first + local.len()].copy_from_slice(local);
        out
    }

    /// `(a_left, a_right)` with `f'(x1) = a_left (f2 - f1)` and
    /// `f'(x2) = a_right (fn - fn-1)`.
    pub fn endpoint_coefficients(&self) -> (f64, f64) {
        let p = self.degree() as f64;
        let n = self.dim();
        let knots = self.kv.knots();
        let w = self.weights();
        let (x1, x2) = self.interval();
        let a_left = p / (knots[self.degree() + 1] - x1) * w[1] / w[0];
        let a_right = p / (x2 - knots[n - 1]) * w[n - 2] / w[n - 1];
        (a_left, a_right)
    }

    /// Refines this space (degree raise by `r`, then knot insertion) and
    /// returns the fine space with the rational refinement matrix `S`.
    pub fn refine(&self, new_knots: &[f64], r: usize) -> Result<(NurbsSpace, SparseMatrix)> {
        let (kv, a) = self.kv.refinement_matrix(new_knots, r)?;
        let w_fine = a.tr_mul_dense(&nalgebra::DMatrix::from_column_slice(
            self.dim(),
            1,
            self.weights(),
        ));
        let fine = NurbsSpace::new(kv, WeightVector::new(w_fine.as_slice().to_vec())?)?;
        let s = nurbs_refinement_matrix(self, &fine, &a)?;
        Ok((fine, s))
    }
}

/// Rational refinement matrix `S` with `S_jk = w_j A_jk / w̃_k`, so that
/// `R_j = Σ_k S_jk R̃_k`. The fine weights must equal `Aᵀw`.
pub fn nurbs_refinement_matrix(
    coarse: &NurbsSpace,
    fine: &NurbsSpace,
    a: &SparseMatrix,
) -> Result<SparseMatrix> {
    if a.shape() != (coarse.dim(), fine.dim()) {
        return Err(SplineError::Dimension(format!(
            "refinement matrix is {:?}, spaces have dimensions {} and {}",
            a.shape(),
            coarse.dim(),
            fine.dim()
        )));
    }
    let w = coarse.weights();
    let w_fine = fine.weights();
    let mut expected = vec![0.0; fine.dim()];
    for (j, k, v) in a.triplets() {
        expected[k] += w[j] * v;
    }
    let deviation = expected
        .iter()
        .zip(w_fine)
        .map(|(e, f)| (e - f).abs() / e.abs().max(f.abs()))
        .fold(0.0, f64::max);
    if deviation > 1e-12 {
        return Err(SplineError::NonNestedWeights(deviation));
    }
    SparseMatrix::from_triplets(
        a.n_rows(),
        a.n_cols(),
        a.triplets().map(|(j, k, v)| (j, k, w[j] * v / w_fine[k])),
    )
}

fn interior_breaks(p: usize, knots: &[f64]) -> Vec<(f64, usize)> {
    let n = knots.len() - p - 1;
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &k in &knots[p + 1..n] {
        match out.last_mut() {
            Some((b, m)) if *b == k => *m += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

/// Index `k` with `U[k] <= x < U[k+1]`; the last non-empty span at `x = x2`.
fn find_span(p: usize, knots: &[f64], x: f64) -> usize {
    let n = knots.len() - p - 1;
    if x >= knots[n] {
        return n - 1;
    }
    let (mut lo, mut hi) = (p, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Non-zero basis functions and their derivatives up to `order` on `span`
/// (triangular scheme, Piegl & Tiller A2.3).
fn ders_basis_funs(span: usize, x: f64, p: usize, knots: &[f64], order: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = order.min(p) as isize;
    let pi = p as isize;
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=pi {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r - k;
            let pk = pi - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
            for j in j1..=j2 {
                let ju = j as usize;
                a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][(rk + j) as usize];
                d += a[s2][ju] * ndu[(rk + j) as usize][pk as usize];
            }
            if r <= pk {
                let ku = k as usize;
                a[s2][ku] = -a[s1][ku - 1] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][ku] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nd as usize {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

struct InsertionStep {
    knots: Vec<f64>,
    /// `b = lift · b̃`, shape `n x (n + 1)`
    lift: SparseMatrix,
    /// right inverse of `lift`, shape `(n + 1) x n`
    restrict: SparseMatrix,
}

/// Single-knot insertion (Boehm) with an exact right inverse obtained from
/// the knot-removal recurrences.
fn insert_knot(p: usize, knots: &[f64], u: f64) -> InsertionStep {
    let n = knots.len() - p - 1;
    let k = find_span(p, knots, u);
    let alpha = |i: usize| (u - knots[i]) / (knots[i + p] - knots[i]);

    // coefficient map Q = T P; lift = Tᵀ
    let mut lift = Vec::new();
    for i in 0..=n {
        if i + p <= k {
            lift.push((i, i, 1.0));
        } else if i <= k {
            let a = alpha(i);
            lift.push((i, i, a));
            lift.push((i - 1, i, 1.0 - a));
        } else {
            lift.push((i - 1, i, 1.0));
        }
    }

    // left inverse of T: recover P from Q. P_i = Q_i for i <= k-p and
    // P_i = Q_{i+1} for i >= k; the p-1 unknowns in between come from the
    // forward recurrence while alpha >= 1/2 and the backward one afterwards.
    let mut p_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in p_rows.iter_mut().enumerate() {
        if i + p <= k {
            *row = vec![(i, 1.0)];
        } else if i >= k {
            *row = vec![(i + 1, 1.0)];
        }
    }
    let lo = k + 1 - p;
    let mut forward_end = lo - 1;
    for i in lo..k {
        let a = alpha(i);
        if a < 0.5 {
            break;
        }
        // P_i = (Q_i - (1 - a) P_{i-1}) / a
        let mut row: Vec<(usize, f64)> = p_rows[i - 1]
            .iter()
            .map(|&(q, c)| (q, -(1.0 - a) * c / a))
            .collect();
        row.push((i, 1.0 / a));
        p_rows[i] = row;
        forward_end = i;
    }
    for i in (forward_end + 2..=k).rev() {
        let a = alpha(i);
        // P_{i-1} = (Q_i - a P_i) / (1 - a)
        let mut row: Vec<(usize, f64)> = p_rows[i]
            .iter()
            .map(|&(q, c)| (q, -a * c / (1.0 - a)))
            .collect();
        row.push((i, 1.0 / (1.0 - a)));
        p_rows[i - 1] = row;
    }
    let restrict = SparseMatrix::accumulate(
        n + 1,
        n,
        p_rows
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().map(move |&(q, c)| (q, j, c))),
    );

    let mut new_knots = knots.to_vec();
    new_knots.insert(k + 1, u);
    InsertionStep {
        knots: new_knots,
        lift: SparseMatrix::accumulate(n, n + 1, lift),
        restrict,
    }
}

/// Inserts every interior breakpoint up to multiplicity `p`. Returns the
/// lifting matrix to the piecewise Bernstein basis and its right inverse.
fn to_bezier_form(p: usize, knots: &[f64]) -> (SparseMatrix, SparseMatrix) {
    let n = knots.len() - p - 1;
    let mut knots = knots.to_vec();
    let mut lift = SparseMatrix::identity(n);
    let mut restricts = Vec::new();
    for (b, m) in interior_breaks(p, &knots) {
        for _ in m..p {
            let step = insert_knot(p, &knots, b);
            lift = lift.matmul(&step.lift);
            restricts.push(step.restrict);
            knots = step.knots;
        }
    }
    let mut restrict = SparseMatrix::identity(lift.n_cols());
    for g in restricts.iter().rev() {
        restrict = restrict.matmul(g);
    }
    (lift, restrict)
}

/// `E[i][l]` with `B_{i,p} = Σ_l E[i][l] B_{i+l,p+r}`.
fn bernstein_elevation(p: usize, r: usize) -> Vec<Vec<f64>> {
    (0..=p)
        .map(|i| {
            (0..=r)
                .map(|l| binomial(p, i) * binomial(r, l) / binomial(p + r, i + l))
                .collect()
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
