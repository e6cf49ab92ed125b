use nalgebra::DMatrix;
use proptest::prelude::*;

use c1spline::mdspline::{Curve, MDSplineSpace, SegmentConfiguration};
use c1spline::nurbs::NurbsSpace;
use c1spline::polar::{PoleConfig, PolarSplineSpace, TensorProductSpace};
use c1spline::refinement::{refine_curve, RefinementPlan};

/// Open knot vector on `[a, b]` with interior multiplicities in `1..=p-1`.
fn arb_nurbs() -> impl Strategy<Value = NurbsSpace> {
    (2usize..=4, -2.0f64..2.0, 0.5f64..3.0)
        .prop_flat_map(|(p, a, len)| {
            let breaks = prop::collection::vec((0.05f64..0.95, 1usize..p), 0..4);
            (Just(p), Just(a), Just(len), breaks)
        })
        .prop_flat_map(|(p, a, len, mut breaks)| {
            breaks.sort_by(|x, y| x.0.total_cmp(&y.0));
            breaks.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-3);
            let b = a + len;
            let mut knots = vec![a; p + 1];
            for &(u, mult) in &breaks {
                knots.extend(std::iter::repeat_n(a + u * len, mult));
            }
            knots.extend(std::iter::repeat_n(b, p + 1));
            let n = knots.len() - p - 1;
            (
                Just(p),
                Just(knots),
                prop::collection::vec(0.2f64..5.0, n),
            )
        })
        .prop_map(|(p, knots, w)| NurbsSpace::from_parts(p, knots, w).unwrap())
}

fn arb_space() -> impl Strategy<Value = MDSplineSpace> {
    (prop::collection::vec(arb_nurbs(), 1..4), any::<bool>(), -1.0f64..1.0)
        .prop_flat_map(|(segs, periodic, origin)| {
            let periodic = periodic && segs.len() >= 2;
            let joins = if periodic { segs.len() } else { segs.len() - 1 };
            (
                Just(segs),
                Just(periodic),
                Just(origin),
                prop::collection::vec(0.5f64..2.0, joins),
            )
        })
        .prop_map(|(segs, periodic, origin, gammas)| {
            let config = SegmentConfiguration::new(segs, origin, periodic, Some(gammas)).unwrap();
            MDSplineSpace::new(config).unwrap()
        })
}

fn unit_samples(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

fn lerp((a, b): (f64, f64), u: f64) -> f64 {
    a + (b - a) * u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nurbs_partition_of_unity_and_support(space in arb_nurbs(), us in unit_samples(50)) {
        let knots = space.knot_vector().knots().to_vec();
        let p = space.degree();
        for u in us {
            let x = lerp(space.interval(), u);
            let r = space.basis_all(x).unwrap();
            let sum: f64 = r.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-13);
            for (j, &v) in r.iter().enumerate() {
                prop_assert!(v >= -1e-14);
                if x < knots[j] || x > knots[j + p + 1] {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
        let (a, b) = space.interval();
        let n = space.dim();
        prop_assert_eq!(space.basis_all(a).unwrap()[0], 1.0);
        prop_assert_eq!(space.basis_all(b).unwrap()[n - 1], 1.0);
    }

    #[test]
    fn nurbs_derivative_matches_central_difference(space in arb_nurbs(), us in unit_samples(20)) {
        let knots = space.knot_vector().knots().to_vec();
        let h = 1e-6;
        for u in us {
            let x = lerp(space.interval(), 0.01 + 0.98 * u);
            // Central differences are only meaningful away from knots.
            if knots.iter().any(|k| (k - x).abs() < 10.0 * h) {
                continue;
            }
            let d = space.derivative_all(x).unwrap();
            let plus = space.basis_all(x + h).unwrap();
            let minus = space.basis_all(x - h).unwrap();
            for j in 0..d.len() {
                let fd = (plus[j] - minus[j]) / (2.0 * h);
                prop_assert!((d[j] - fd).abs() <= 1e-6 * (1.0 + d[j].abs()), "{} vs {}", d[j], fd);
            }
        }
    }

    #[test]
    fn nurbs_refinement_reproduces(
        space in arb_nurbs(),
        inserts in prop::collection::vec(0.05f64..0.95, 0..3),
        r in 0usize..3,
        us in unit_samples(30),
    ) {
        let mut new_knots: Vec<f64> = inserts.iter().map(|&u| lerp(space.interval(), u)).collect();
        new_knots.sort_by(f64::total_cmp);
        new_knots.dedup();
        // keep inserted knots clear of existing ones so multiplicities stay valid
        new_knots.retain(|u| space.knot_vector().knots().iter().all(|k| (k - u).abs() > 1e-9));
        let (fine, s) = space.refine(&new_knots, r).unwrap();
        let f: Vec<f64> = (0..space.dim()).map(|j| (j as f64 * 0.37).sin()).collect();
        let fs: Vec<f64> = s.transpose().mul_vec(&f);
        for u in us {
            let x = lerp(space.interval(), u);
            let coarse: f64 = space.basis_all(x).unwrap().iter().zip(&f).map(|(a, b)| a * b).sum();
            let refined: f64 = fine.basis_all(x).unwrap().iter().zip(&fs).map(|(a, b)| a * b).sum();
            prop_assert!((coarse - refined).abs() <= 1e-12);
        }
    }

    #[test]
    fn mdspline_convex_partition(space in arb_space(), us in unit_samples(50)) {
        let h = space.extraction();
        let sums = h.column_sums();
        prop_assert!(sums.iter().all(|s| (s - 1.0).abs() <= 1e-14));
        prop_assert!(h.min_value() >= 0.0);
        for u in us {
            let t = lerp(space.domain(), u);
            let n = space.eval_basis(t).unwrap();
            prop_assert!((n.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
            prop_assert!(n.iter().all(|&v| v >= -1e-14));
        }
    }

    #[test]
    fn mdspline_join_derivatives_match(space in arb_space()) {
        // left = γ_k right at every join; γ_k = 1 is plain C¹
        for k in 0..space.config().n_joins() {
            let gamma = space.config().gammas()[k];
            let (left, right) = space.one_sided_derivatives(k).unwrap();
            let scale = left.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(left.iter().zip(&right).all(|(l, r)| (l - gamma * r).abs() <= 1e-11 * scale));
            prop_assert!(space.value_jump(k).unwrap().iter().all(|v| v.abs() <= 1e-14));
        }
    }

    #[test]
    fn locate_inverts_phi_map(space in arb_space(), us in unit_samples(100)) {
        let config = space.config();
        for u in us {
            let t = lerp(space.domain(), u);
            let (i, x) = config.locate(t).unwrap();
            prop_assert!((config.phi_map(i, x).unwrap() - t).abs() <= 1e-13 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn curve_evaluation_is_affine_invariant(
        space in arb_space(),
        m in prop::array::uniform4(-2.0f64..2.0),
        shift in prop::array::uniform2(-5.0f64..5.0),
        us in unit_samples(30),
    ) {
        let n = space.dim();
        let f = DMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3) as f64).cos());
        let map = |p: [f64; 2]| [m[0] * p[0] + m[1] * p[1] + shift[0], m[2] * p[0] + m[3] * p[1] + shift[1]];
        let g = DMatrix::from_fn(n, 2, |i, j| map([f[(i, 0)], f[(i, 1)]])[j]);
        let a = Curve::new(space.clone(), f).unwrap();
        let b = Curve::new(space.clone(), g).unwrap();
        for u in us {
            let t = lerp(space.domain(), u);
            let pa = a.eval(t).unwrap();
            let expected = map([pa[0], pa[1]]);
            let pb = b.eval(t).unwrap();
            prop_assert!((pb[0] - expected[0]).abs() <= 1e-12 && (pb[1] - expected[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_weight_scaling_leaves_basis_unchanged(space in arb_space(), c in 0.1f64..10.0, us in unit_samples(30)) {
        let config = space.config();
        let scaled: Vec<NurbsSpace> = config
            .segments()
            .iter()
            .map(|s| {
                let w = s.weights().iter().map(|w| w * c).collect();
                NurbsSpace::from_parts(s.degree(), s.knot_vector().knots().to_vec(), w).unwrap()
            })
            .collect();
        let other = MDSplineSpace::new(
            SegmentConfiguration::new(scaled, config.origin(), config.is_periodic(), Some(config.gammas().to_vec())).unwrap(),
        )
        .unwrap();
        for u in us {
            let t = lerp(space.domain(), u);
            let a = space.eval_basis(t).unwrap();
            let b = other.eval_basis(t).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-13));
        }
    }

    #[test]
    fn curve_refinement_reproduces(space in arb_space(), r in 0usize..2, us in unit_samples(40)) {
        let n = space.dim();
        let f = DMatrix::from_fn(n, 2, |i, j| ((i * 5 + j) as f64 * 0.9).sin());
        let curve = Curve::new(space.clone(), f).unwrap();
        let mut plan = RefinementPlan::midpoints(space.config());
        for seg in &mut plan.segments {
            seg.elevate = r;
        }
        let (fine, _) = refine_curve(&curve, &plan).unwrap();
        for u in us {
            let t = lerp(space.domain(), u);
            let (a, b) = (curve.eval(t).unwrap(), fine.eval(t).unwrap());
            prop_assert!((a[0] - b[0]).abs() <= 1e-11 && (a[1] - b[1]).abs() <= 1e-11);
        }
    }
}

fn bezier_segments(degrees: &[usize]) -> Vec<NurbsSpace> {
    degrees
        .iter()
        .map(|&p| {
            let knots = [vec![0.0; p + 1], vec![1.0; p + 1]].concat();
            NurbsSpace::from_parts(p, knots, vec![1.0; p + 1]).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polar_basis_is_a_convex_partition(
        s_deg in prop::collection::vec(2usize..=3, 3..6),
        t_deg in prop::collection::vec(2usize..=3, 1..3),
        both in any::<bool>(),
        us in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 40),
    ) {
        let s = MDSplineSpace::new(SegmentConfiguration::new(bezier_segments(&s_deg), 0.0, true, None).unwrap()).unwrap();
        let t = MDSplineSpace::new(SegmentConfiguration::new(bezier_segments(&t_deg), 0.0, false, None).unwrap()).unwrap();
        let tp = TensorProductSpace::new(s, t).unwrap();
        let poles = if both { PoleConfig::Both } else { PoleConfig::Bottom };
        prop_assume!(tp.n_s() >= 3 && tp.n_t() >= if both { 4 } else { 3 });
        let space = PolarSplineSpace::new(tp, poles).unwrap();
        let e = space.extraction();
        prop_assert!(e.column_sums().iter().all(|c| (c - 1.0).abs() <= 1e-14));
        prop_assert!(e.min_value() >= 0.0);
        let (sd, td) = space.domain();
        for (u, v) in us {
            let n = space.eval_basis(lerp(sd, u), lerp(td, v)).unwrap();
            prop_assert!((n.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
            prop_assert!(n.iter().all(|&x| x >= -1e-14));
        }
    }
}
