//! Constant-time cross sections of a tet mesh.
//!
//! The plane `t = tau` is perturbed symbolically towards the future: a
//! vertex with `t <= tau` lies below it. Crossing points are evaluated in
//! the limit of vanishing perturbation, i.e. exactly at `tau`, so a mesh
//! vertex lying on the plane becomes a slice vertex at its own position.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::tessellation::TetMesh4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SliceError {
    #[error("slice edge {0:?} is not shared by exactly two oppositely oriented triangles")]
    Open([u32; 2]),
}

/// Time hyperplane with symbolic upward perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePlane {
    pub tau: f64,
}

impl SlicePlane {
    pub fn new(tau: f64) -> Self {
        SlicePlane { tau }
    }

    #[inline]
    pub fn above(&self, t: f64) -> bool {
        t > self.tau
    }

    /// Crossing parameter along `below -> above`.
    #[inline]
    pub fn crossing(&self, t_below: f64, t_above: f64) -> f64 {
        (self.tau - t_below) / (t_above - t_below)
    }
}

/// Cyclic order of the crossed tet edges `(below, above)` for each mask of
/// vertices above the plane, oriented so that the polygon's normal agrees
/// with the spatial part of the tet's outward 4-normal.
fn polygon_table() -> &'static [Vec<(usize, usize)>; 16] {
    static TABLE: OnceLock<[Vec<(usize, usize)>; 16]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const REF: [[f64; 3]; 4] = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        std::array::from_fn(|mask| {
            let above: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            let below: Vec<usize> = (0..4).filter(|i| mask & (1 << i) == 0).collect();
            let mut edges: Vec<(usize, usize)> = match (below.len(), above.len()) {
                (1, 3) => above.iter().map(|&a| (below[0], a)).collect(),
                (3, 1) => below.iter().map(|&b| (b, above[0])).collect(),
                (2, 2) => vec![
                    (below[0], above[0]),
                    (below[0], above[1]),
                    (below[1], above[1]),
                    (below[1], above[0]),
                ],
                _ => return Vec::new(),
            };
            let mid = |(b, a): (usize, usize)| [0, 1, 2].map(|k| 0.5 * (REF[b][k] + REF[a][k]));
            let pts: Vec<[f64; 3]> = edges.iter().map(|&e| mid(e)).collect();
            // Newell normal of the polygon.
            let mut n = [0.0; 3];
            for i in 0..pts.len() {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                n[0] += (p[1] - q[1]) * (p[2] + q[2]);
                n[1] += (p[2] - q[2]) * (p[0] + q[0]);
                n[2] += (p[0] - q[0]) * (p[1] + q[1]);
            }
            let centroid = |idx: &[usize]| {
                [0, 1, 2].map(|k| idx.iter().map(|&i| REF[i][k]).sum::<f64>() / idx.len() as f64)
            };
            let (ca, cb) = (centroid(&above), centroid(&below));
            let up: f64 = (0..3).map(|k| n[k] * (ca[k] - cb[k])).sum();
            // Outward 4-normals put the polygon normal on the past side.
            if up < 0.0 {
                edges.reverse();
            }
            edges
        })
    })
}

/// Cross-section polygon of one tet: crossed edges as pairs of tet-local
/// vertex slots `(below, above)` with the crossing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePolygon {
    pub edges: Vec<(usize, usize, f64)>,
}

impl SlicePolygon {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Slices a tet given its vertex times.
pub fn slice_tet(times: [f64; 4], plane: SlicePlane) -> SlicePolygon {
    let mask = (0..4).fold(0usize, |m, i| m | (usize::from(plane.above(times[i])) << i));
    SlicePolygon {
        edges: polygon_table()[mask]
            .iter()
            .map(|&(b, a)| (b, a, plane.crossing(times[b], times[a])))
            .collect(),
    }
}

/// Closed oriented triangle mesh in 3D.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh3 {
    pub attr_names: Vec<String>,
    pub positions: Vec<[f64; 3]>,
    /// Per-vertex attribute values, one entry per name.
    pub attrs: Vec<Vec<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh3 {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Every undirected edge shared by exactly two triangles traversing it
    /// in opposite directions.
    pub fn check_closed(&self) -> Result<(), SliceError> {
        let mut directed: Vec<[u32; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]])
            .collect();
        directed.sort_unstable();
        for w in directed.windows(2) {
            if w[0] == w[1] {
                return Err(SliceError::Open(w[0]));
            }
        }
        for e in &directed {
            if directed.binary_search(&[e[1], e[0]]).is_err() {
                return Err(SliceError::Open(*e));
            }
        }
        Ok(())
    }

    /// Number of edge-connected components.
    pub fn components(&self) -> usize {
        let n = self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut edges: Vec<([u32; 2], usize)> = Vec::with_capacity(3 * n);
        for (i, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push(([a.min(b), a.max(b)], i));
            }
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0].0 == w[1].0 {
                let (a, b) = (find(&mut parent, w[0].1), find(&mut parent, w[1].1));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<[f64; 3]> {
        let mut n = vec![[0.0; 3]; self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let f = cross3(u, v);
            for &i in t {
                for k in 0..3 {
                    n[i as usize][k] += f[k];
                }
            }
        }
        for v in &mut n {
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if len > 0.0 {
                *v = v.map(|x| x / len);
            }
        }
        n
    }
}

pub fn cross3(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// One welded slice vertex: the mesh edge it lies on, below endpoint first.
type SliceKey = (u32, u32);

/// Slices the whole mesh at `tau`. Runs on the current rayon pool; the
/// output does not depend on its size.
pub fn slice(mesh: &TetMesh4, tau: f64) -> TriMesh3 {
    let plane = SlicePlane::new(tau);
    let polys: Vec<Vec<SliceKey>> = mesh
        .tets
        .par_iter()
        .map(|t| {
            let times = t.v.map(|i| mesh.vertices[i as usize].pos[3]);
            slice_tet(times, plane)
                .edges
                .iter()
                .map(|&(b, a, _)| (t.v[b], t.v[a]))
                .collect()
        })
        .collect();
    let mut out = TriMesh3 {
        attr_names: mesh.attr_names.clone(),
        ..TriMesh3::default()
    };
    let mut index: HashMap<SliceKey, u32> = HashMap::new();
    let mut weld = |out: &mut TriMesh3, key: SliceKey| -> u32 {
        *index.entry(key).or_insert_with(|| {
            let (pb, pa) = (
                &mesh.vertices[key.0 as usize],
                &mesh.vertices[key.1 as usize],
            );
            let l = plane.crossing(pb.pos[3], pa.pos[3]);
            out.positions
                .push([0, 1, 2].map(|k| pb.pos[k] + l * (pa.pos[k] - pb.pos[k])));
            out.attrs.push(
                pb.attrs
                    .iter()
                    .zip(&pa.attrs)
                    .map(|(x, y)| x + l * (y - x))
                    .collect(),
            );
            (out.positions.len() - 1) as u32
        })
    };
    for poly in polys {
        let ids: Vec<u32> = poly.iter().map(|&k| weld(&mut out, k)).collect();
        match ids.len() {
            3 => out.triangles.push([ids[0], ids[1], ids[2]]),
            4 => {
                // Split along the diagonal from the lowest-key corner.
                let k = (0..4).min_by_key(|&i| canonical(poly[i])).unwrap_or(0);
                let q = |i: usize| ids[(k + i) % 4];
                out.triangles.push([q(0), q(1), q(2)]);
                out.triangles.push([q(0), q(2), q(3)]);
            }
            _ => {}
        }
    }
    out
}

fn canonical((a, b): SliceKey) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Independent slices at each time, in the given order.
pub fn slice_series(mesh: &TetMesh4, taus: &[f64]) -> Vec<TriMesh3> {
    taus.iter().map(|&t| slice(mesh, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{cross4, Tet4, TetMesh4, Vertex4, VertexKey};
    use rand::{Rng, SeedableRng};

    #[test]
    fn tet_cases() {
        let p = SlicePlane::new(0.5);
        assert_eq!(slice_tet([0.0, 0.0, 0.0, 1.0], p).len(), 3);
        assert_eq!(slice_tet([0.0, 0.0, 1.0, 1.0], p).len(), 4);
        assert!(slice_tet([0.0, 0.0, 0.0, 0.0], p).is_empty());
        assert!(slice_tet([1.0, 1.0, 1.0, 1.0], p).is_empty());
        // A vertex on the plane counts as below.
        assert!(slice_tet([0.5, 0.5, 0.5, 0.5], p).is_empty());
        assert_eq!(slice_tet([0.5, 0.5, 0.5, 0.7], p).edges[0].2, 0.0);
    }

    #[test]
    fn orientation_follows_four_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 500 {
            let v: [[f64; 4]; 4] =
                std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
            let n = cross4(&v).map(|x| -x);
            let plane = SlicePlane::new(rng.gen_range(-0.5..0.5));
            let poly = slice_tet(v.map(|p| p[3]), plane);
            if poly.is_empty() {
                continue;
            }
            let pts: Vec<[f64; 3]> = poly
                .edges
                .iter()
                .map(|&(b, a, l)| [0, 1, 2].map(|k| v[b][k] + l * (v[a][k] - v[b][k])))
                .collect();
            let sub = |p: [f64; 3], q: [f64; 3]| [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            let m = cross3(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
            let d = m[0] * n[0] + m[1] * n[1] + m[2] * n[2];
            let scale = (m.iter().map(|x| x * x).sum::<f64>()
                * n[..3].iter().map(|x| x * x).sum::<f64>())
            .sqrt();
            if scale > 1e-9 {
                assert!(
                    d > 0.0,
                    "{v:?} tau {} d {d} scale {scale} poly {:?}",
                    plane.tau,
                    poly
                );
                checked += 1;
            }
        }
    }

    fn one_tet(times: [f64; 4]) -> TetMesh4 {
        let pos = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        TetMesh4 {
            attr_names: vec!["a".into()],
            vertices: (0..4)
                .map(|i| Vertex4 {
                    key: VertexKey::VolumeCenter {
                        cell: [0; 4],
                        section: i,
                    },
                    pos: [
                        pos[i as usize][0],
                        pos[i as usize][1],
                        pos[i as usize][2],
                        times[i as usize],
                    ],
                    attrs: vec![times[i as usize] * 10.0],
                })
                .collect(),
            tets: vec![Tet4 {
                v: [0, 1, 2, 3],
                normal: [0.0; 4],
                cell: [0; 4],
                section: 0,
            }],
        }
    }

    #[test]
    fn attributes_follow_crossing() {
        let s = slice(&one_tet([0.0, 0.0, 0.0, 1.0]), 0.25);
        assert_eq!(s.triangles.len(), 1);
        for a in &s.attrs {
            assert!((a[0] - 2.5).abs() < 1e-12);
        }
        let q = slice(&one_tet([0.0, 0.0, 1.0, 1.0]), 0.5);
        assert_eq!(q.triangles.len(), 2);
        assert_eq!(q.positions.len(), 4);
    }

    #[test]
    fn series_shapes() {
        let m = one_tet([0.0, 0.0, 0.0, 1.0]);
        assert_eq!(slice_series(&m, &[0.25, 0.75]).len(), 2);
        assert!(slice_series(&m, &[]).is_empty());
    }

    #[test]
    fn closure_detects_open_surface() {
        let m = TriMesh3 {
            triangles: vec![[0, 1, 2]],
            positions: vec![[0.0; 3]; 3],
            ..TriMesh3::default()
        };
        assert!(m.check_closed().is_err());
        assert_eq!(m.components(), 1);
    }
}
