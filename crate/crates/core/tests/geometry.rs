use nalgebra::DMatrix;

use c1spline::mdspline::MDSplineSpace;
use c1spline::polar::{Pole, PolarSplineSpace};
use c1spline::quadrics::{
    make_ellipse, make_ellipsoid, EllipseRecipe, EllipseSpec, EllipsoidRecipe, EllipsoidSpec,
};

const ELLIPSES: [EllipseRecipe; 3] = [
    EllipseRecipe::Quadratic4,
    EllipseRecipe::Cubic2,
    EllipseRecipe::MultiDegree322,
];
const ELLIPSOIDS: [EllipsoidRecipe; 3] =
    [EllipsoidRecipe::Deg22, EllipsoidRecipe::Deg23, EllipsoidRecipe::Deg33];

fn smallest_singular_ratio(m: DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    sv.min() / sv.max()
}

fn curve_gram_condition(space: &MDSplineSpace) -> f64 {
    let ts = space.sample_parameters(400);
    let rows: Vec<Vec<f64>> = ts.iter().map(|&t| space.eval_basis(t).unwrap()).collect();
    smallest_singular_ratio(DMatrix::from_fn(rows.len(), space.dim(), |r, c| rows[r][c]))
}

fn surface_gram_condition(space: &PolarSplineSpace) -> f64 {
    let ((s0, s1), (t0, t1)) = space.domain();
    let mut rows = Vec::new();
    for j in 0..=40 {
        for i in 0..40 {
            let s = s0 + (s1 - s0) * i as f64 / 40.0;
            let t = t0 + (t1 - t0) * j as f64 / 40.0;
            rows.push(space.eval_basis(s, t).unwrap());
        }
    }
    smallest_singular_ratio(DMatrix::from_fn(rows.len(), space.dim(), |r, c| rows[r][c]))
}

#[test]
fn recipe_dimensions() {
    let expected_local = [12, 8, 10];
    let expected_pieces = [4, 2, 3];
    for (k, recipe) in ELLIPSES.into_iter().enumerate() {
        let curve = make_ellipse(&EllipseSpec::new(recipe, 1.0, 1.0).unwrap()).unwrap();
        let config = curve.space().config();
        assert_eq!(curve.space().dim(), 4);
        assert_eq!(config.local_dim(), expected_local[k]);
        assert_eq!(config.n_segments(), expected_pieces[k]);
    }
    let expected_local = [72, 48, 32];
    let expected_pieces = [8, 4, 2];
    for (k, recipe) in ELLIPSOIDS.into_iter().enumerate() {
        let surface =
            make_ellipsoid(&EllipsoidSpec::new(recipe, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let tp = surface.space().tensor_space();
        assert_eq!(surface.space().dim(), 6);
        assert_eq!(tp.local_dim(), expected_local[k]);
        assert_eq!(tp.n_pieces(), expected_pieces[k]);
    }
}

#[test]
fn bases_are_linearly_independent() {
    for recipe in ELLIPSES {
        let curve = make_ellipse(&EllipseSpec::new(recipe, 1.0, 1.0).unwrap()).unwrap();
        assert!(curve_gram_condition(curve.space()) > 1e-6);
    }
    for recipe in ELLIPSOIDS {
        let surface =
            make_ellipsoid(&EllipsoidSpec::new(recipe, 1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(surface_gram_condition(surface.space()) > 1e-6);
    }
}

#[test]
fn axis_scaling_is_an_affine_map_of_control_points() {
    let (ax, ay, az) = (3.7, 0.45, 1.9);
    for recipe in ELLIPSES {
        let unit = make_ellipse(&EllipseSpec::new(recipe, 1.0, 1.0).unwrap()).unwrap();
        let scaled = make_ellipse(&EllipseSpec::new(recipe, ax, ay).unwrap()).unwrap();
        let mapped = unit.control_points() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ax, ay]));
        assert!((scaled.control_points() - mapped).amax() <= 1e-13);
    }
    for recipe in ELLIPSOIDS {
        let unit = make_ellipsoid(&EllipsoidSpec::new(recipe, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let scaled = make_ellipsoid(&EllipsoidSpec::new(recipe, ax, ay, az).unwrap()).unwrap();
        let mapped = unit.control_points() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ax, ay, az]));
        assert!((scaled.control_points() - mapped).amax() <= 1e-13);
    }
}

#[test]
fn quarter_arc_local_points() {
    let (ax, ay) = (2.0, 0.75);
    let spec = EllipseSpec::new(EllipseRecipe::Quadratic4, ax, ay).unwrap();
    let g = make_ellipse(&spec).unwrap().local_control_points();
    let expected = [[0.0, ay], [ax, ay], [ax, 0.0]];
    for (r, row) in expected.iter().enumerate() {
        for c in 0..2 {
            assert!((g[(r, c)] - row[c]).abs() <= 1e-15);
        }
    }
}

#[test]
fn seam_is_periodic() {
    for recipe in ELLIPSOIDS {
        let surface =
            make_ellipsoid(&EllipsoidSpec::new(recipe, 1.0, 0.5, 0.25).unwrap()).unwrap();
        let ((s0, s1), (t0, t1)) = surface.space().domain();
        for j in 0..=20 {
            let t = t0 + (t1 - t0) * j as f64 / 20.0;
            let (a, b) = (surface.eval(s0, t).unwrap(), surface.eval(s1, t).unwrap());
            let (da, db) = (surface.eval_dt(s0, t).unwrap(), surface.eval_dt(s1, t).unwrap());
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-12);
                assert!((da[k] - db[k]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn pole_basis_hermite_data_is_single_valued() {
    for recipe in ELLIPSOIDS {
        let surface =
            make_ellipsoid(&EllipsoidSpec::new(recipe, 1.0, 1.0, 1.0).unwrap()).unwrap();
        for pole in [Pole::Bottom, Pole::Top] {
            assert!(surface.space().pole_basis_spread(pole, 100).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn extraction_rows_are_local() {
    // each global function draws on at most two segments' worth of local functions
    for recipe in ELLIPSES {
        let curve = make_ellipse(&EllipseSpec::new(recipe, 1.0, 1.0).unwrap()).unwrap();
        let config = curve.space().config();
        let widest = config.segments().iter().map(|s| s.dim()).max().unwrap();
        assert!(curve.space().extraction().row_nnz().iter().all(|&n| n <= widest + 2));
    }
}
