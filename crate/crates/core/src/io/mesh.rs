//! Curve sampling to CSV and surface tessellation to OBJ.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Result, SplineError};
use crate::mdspline::Curve;
use crate::polar::{Pole, PolarSurface};

/// Parameter and point of one curve sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub point: Vec<f64>,
}

/// `count` samples on a uniform grid over the whole domain, both ends
/// included, so a closed curve repeats its first point.
pub fn sample_curve(curve: &Curve, count: usize) -> Result<Vec<CurveSample>> {
    if count < 2 {
        return Err(SplineError::Config(format!(
            "at least 2 samples required, got {count}"
        )));
    }
    let (a, b) = curve.space().domain();
    (0..count)
        .map(|i| {
            let t = if i + 1 == count {
                b
            } else {
                a + (b - a) * i as f64 / (count - 1) as f64
            };
            Ok(CurveSample {
                t,
                point: curve.eval(t)?,
            })
        })
        .collect()
}

fn coordinate_name(k: usize) -> String {
    match k {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{k}"),
    }
}

/// CSV with header `t,x,y[,z,...]` and shortest round-trip floats.
pub fn samples_to_csv(samples: &[CurveSample]) -> String {
    let d = samples.first().map_or(2, |s| s.point.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..d).map(coordinate_name))
        .collect();
    w.write_record(&header).expect("writing to memory");
    for s in samples {
        let rec: Vec<String> = std::iter::once(s.t)
            .chain(s.point.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// Polygonal surface mesh with 0-based faces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

impl Mesh {
    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for f in &self.faces {
            for k in 0..f.len() {
                let (a, b) = (f[k], f[(k + 1) % f.len()]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edge_counts().len();
        self.vertices.len() as i64 - e as i64 + self.faces.len() as i64
    }

    /// Number of closed loops formed by edges that belong to one face.
    pub fn boundary_loops(&self) -> usize {
        let boundary: Vec<(usize, usize)> = self
            .edge_counts()
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| e)
            .collect();
        // Union-find over boundary vertices; each component is one loop.
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn root(parent: &mut HashMap<usize, usize>, v: usize) -> usize {
            let p = *parent.entry(v).or_insert(v);
            if p == v {
                return v;
            }
            let r = root(parent, p);
            parent.insert(v, r);
            r
        }
        for &(a, b) in &boundary {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let keys: Vec<usize> = parent.keys().copied().collect();
        let mut roots: Vec<usize> = keys.into_iter().map(|v| root(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Smallest distance between two distinct vertices.
    pub fn min_vertex_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2))
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }

    /// Wavefront OBJ text with 1-based face indices.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2]).unwrap();
        }
        for f in &self.faces {
            out.push('f');
            for i in f {
                write!(out, " {}", i + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Tessellates a polar surface with `n_u` samples around each ring and
/// `n_v` rows of vertices in `t`, counting each pole row as a single
/// vertex. The periodic seam is shared; poles are closed by triangle fans
/// and all other cells are quads.
pub fn tessellate_surface(surface: &PolarSurface, n_u: usize, n_v: usize) -> Result<Mesh> {
    let poles = surface.space().poles();
    let min_v = if poles.has_bottom() && poles.has_top() { 3 } else { 2 };
    if n_u < 3 || n_v < min_v {
        return Err(SplineError::Config(format!(
            "tessellation needs n_u >= 3 and n_v >= {min_v}, got {n_u} x {n_v}"
        )));
    }
    if surface.dimension() != 3 {
        return Err(SplineError::Dimension(format!(
            "meshes need points in 3 dimensions, got {}",
            surface.dimension()
        )));
    }
    let ((s0, s1), (t0, t1)) = surface.space().domain();
    let point = |s: f64, t: f64| -> Result<[f64; 3]> {
        let p = surface.eval(s, t)?;
        Ok([p[0], p[1], p[2]])
    };
    let mut mesh = Mesh::default();
    // Each row holds either one pole vertex or a ring of n_u vertices.
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n_v);
    for j in 0..n_v {
        let t = if j + 1 == n_v {
            t1
        } else {
            t0 + (t1 - t0) * j as f64 / (n_v - 1) as f64
        };
        let at_pole = (j == 0 && poles.has_bottom()) || (j + 1 == n_v && poles.has_top());
        if at_pole {
            let pole = if j == 0 { Pole::Bottom } else { Pole::Top };
            let t = surface.space().pole_parameter(pole);
            rows.push(vec![mesh.vertices.len()]);
            mesh.vertices.push(point(s0, t)?);
        } else {
            let mut ring = Vec::with_capacity(n_u);
            for i in 0..n_u {
                let s = s0 + (s1 - s0) * i as f64 / n_u as f64;
                ring.push(mesh.vertices.len());
                mesh.vertices.push(point(s, t)?);
            }
            rows.push(ring);
        }
    }
    for j in 0..n_v - 1 {
        let (lo, hi) = (&rows[j], &rows[j + 1]);
        for i in 0..n_u {
            let k = (i + 1) % n_u;
            let face = match (lo.len(), hi.len()) {
                (1, _) => vec![lo[0], hi[i], hi[k]],
                (_, 1) => vec![lo[i], lo[k], hi[0]],
                _ => vec![lo[i], lo[k], hi[k], hi[i]],
            };
            mesh.faces.push(face);
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrics::{
        make_ellipse, make_ellipsoid, EllipseRecipe, EllipseSpec, EllipsoidRecipe, EllipsoidSpec,
    };

    #[test]
    fn closed_curve_samples_repeat_the_start() {
        let spec = EllipseSpec::new(EllipseRecipe::MultiDegree322, 2.0, 1.0).unwrap();
        let curve = make_ellipse(&spec).unwrap();
        let samples = sample_curve(&curve, 17).unwrap();
        assert_eq!(samples.len(), 17);
        let (a, b) = (&samples[0].point, &samples[16].point);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        let csv = samples_to_csv(&samples);
        assert!(csv.starts_with("t,x,y\n"));
        assert_eq!(csv.lines().count(), 18);
        assert!(sample_curve(&curve, 1).is_err());
    }

    #[test]
    fn sphere_mesh_is_closed() {
        let spec = EllipsoidSpec::new(EllipsoidRecipe::Deg22, 1.0, 1.0, 1.0).unwrap();
        let mesh = tessellate_surface(&make_ellipsoid(&spec).unwrap(), 12, 8).unwrap();
        assert_eq!(mesh.vertices.len(), 2 + 12 * 6);
        for v in &mesh.vertices {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert_eq!(mesh.euler_characteristic(), 2);
        assert_eq!(mesh.boundary_loops(), 0);
        assert!(mesh.min_vertex_distance() > 1e-3);
        let obj = mesh.to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), mesh.faces.len());
        assert!(tessellate_surface(&make_ellipsoid(&spec).unwrap(), 12, 2).is_err());
    }

    #[test]
    fn disk_mesh_has_one_boundary() {
        let mesh = Mesh {
            vertices: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]],
            faces: vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 1]],
        };
        assert_eq!(mesh.euler_characteristic(), 1);
        assert_eq!(mesh.boundary_loops(), 1);
    }
}
