//! Support placement, section decomposition into oriented tetrahedra, global
//! assembly and closedness validation.

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::extraction::{CellExtraction, ReducedCycle, Section};
use crate::field::{CellPattern, ExtractionConfig, Placement, ToxelField};
use crate::handles::{self, Inner, Node, Tri};
use crate::topology::{site_coords, Axis, CellGeometry, EdgeId, EDGE_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TessellationError {
    #[error("degenerate tet in cell {cell:?} section {section}: volume {volume:e}")]
    DegenerateTet {
        cell: [i64; 4],
        section: u32,
        volume: f64,
    },
    #[error("vertex key {0:?} produced with two different positions")]
    KeyCollision(VertexKey),
    #[error("section references support point {0} which was not placed")]
    MissingSupport(u8),
}

/// A grid edge: its lower toxel in the data frame plus the edge direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub base: [i64; 4],
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKey {
    EdgeSupport(EdgeKey),
    /// Sorted member supports of an N-cycle, N >= 4.
    FaceCentroid(Box<[EdgeKey]>),
    VolumeCenter {
        cell: [i64; 4],
        section: u32,
    },
    /// Interior vertex of a positive-genus section's filling.
    Interior {
        cell: [i64; 4],
        section: u32,
        index: u32,
    },
    /// Vertex read back from a mesh file, by index.
    Stored(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex4 {
    pub key: VertexKey,
    pub pos: [f64; 4],
    pub attrs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tet4 {
    pub v: [u32; 4],
    pub normal: [f64; 4],
    pub cell: [i64; 4],
    pub section: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TetMesh4 {
    pub attr_names: Vec<String>,
    pub vertices: Vec<Vertex4>,
    pub tets: Vec<Tet4>,
}

impl TetMesh4 {
    pub fn is_empty(&self) -> bool {
        self.tets.is_empty()
    }

    pub fn tet_positions(&self, t: &Tet4) -> [[f64; 4]; 4] {
        t.v.map(|i| self.vertices[i as usize].pos)
    }

    /// Distinct undirected triangles, each as a sorted vertex triple.
    pub fn triangles(&self) -> Vec<[u32; 3]> {
        let mut tris: Vec<[u32; 3]> = self
            .tets
            .iter()
            .flat_map(|t| facets(t.v).map(|(f, _)| f))
            .collect();
        tris.sort_unstable();
        tris.dedup();
        tris
    }
}

/// Interpolation parameter measured from the `from` endpoint.
///
/// Measured from either endpoint the result is the same point; callers pass
/// the lower-coordinate endpoint first so both orders of activity share bits.
pub fn support_lambda(
    f_from: f64,
    f_to: f64,
    isovalue: f64,
    placement: Placement,
    clamp: f64,
) -> f64 {
    match placement {
        Placement::Midpoint => 0.5,
        Placement::Interpolate => {
            if f_to == f_from {
                return 0.5;
            }
            let l = (isovalue - f_from) / (f_to - f_from);
            if l.is_nan() {
                0.5
            } else {
                l.clamp(clamp, 1.0 - clamp)
            }
        }
    }
}

/// Support point of one transition edge inside a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub key: EdgeKey,
    pub pos: [f64; 4],
    pub attrs: Vec<f64>,
}

/// Places the support points of every transition edge of the cell at grid
/// index `base` of `field`.
pub fn place_supports(
    field: &ToxelField,
    base: [usize; 4],
    pattern: &CellPattern,
    config: &ExtractionConfig,
) -> Vec<Option<SupportPoint>> {
    let geom = CellGeometry::canonical();
    let mut out = vec![None; EDGE_COUNT];
    for e in EdgeId::all() {
        let [lo, hi] = geom.edge_sites(e);
        if pattern.is_active(lo) == pattern.is_active(hi) {
            continue;
        }
        let axis = geom.edge_axis(e);
        let lo_grid = grid_corner(base, site_coords(lo));
        let hi_grid = grid_corner(base, site_coords(hi));
        let ghost = pattern.is_ghost(lo) || pattern.is_ghost(hi);
        let mu = if ghost {
            0.5
        } else {
            support_lambda(
                pattern.values[lo.index()],
                pattern.values[hi.index()],
                config.isovalue,
                config.placement,
                config.clamp,
            )
        };
        let data = field.data_coords(lo_grid);
        let mut p = data.map(|c| c as f64);
        p[axis.index()] += mu;
        let (il, ih) = (field.linear_index(lo_grid), field.linear_index(hi_grid));
        let attrs = field
            .aux_channels()
            .iter()
            .map(|a| a.values[il] + mu * (a.values[ih] - a.values[il]))
            .collect();
        out[e.index()] = Some(SupportPoint {
            key: EdgeKey { base: data, axis },
            pos: field.world(p),
            attrs,
        });
    }
    out
}

fn grid_corner(base: [usize; 4], off: [u8; 4]) -> [usize; 4] {
    [0, 1, 2, 3].map(|i| base[i] + off[i] as usize)
}

/// Vertex of a decomposed section before global keys are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TetVertex {
    Support(EdgeId),
    /// Face center of the section's cycle with this ordinal.
    FaceCenter(usize),
    VolumeCenter,
    /// Interior vertex of a positive-genus filling.
    Inner(usize),
}

type Centered = ([f64; 4], Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSection {
    /// Section cycles in the order `FaceCenter` indices refer to.
    pub cycles: Vec<ReducedCycle>,
    pub face_centers: Vec<Option<Centered>>,
    pub volume_center: Option<Centered>,
    /// Interior vertices of a positive-genus filling.
    pub inner: Vec<Centered>,
    pub tets: Vec<[TetVertex; 4]>,
}

impl DecomposedSection {
    pub fn position<'a>(
        &'a self,
        v: TetVertex,
        supports: &'a [Option<SupportPoint>],
    ) -> Option<&'a [f64; 4]> {
        match v {
            TetVertex::Support(e) => supports.get(e.index())?.as_ref().map(|s| &s.pos),
            TetVertex::FaceCenter(c) => self.face_centers.get(c)?.as_ref().map(|x| &x.0),
            TetVertex::VolumeCenter => self.volume_center.as_ref().map(|x| &x.0),
            TetVertex::Inner(i) => self.inner.get(i).map(|x| &x.0),
        }
    }
}

/// Splits a section into tetrahedra. A lone 3-simplex boundary (four
/// 3-cycles) becomes one tet; everything else is fanned around face centers
/// and coned from the volume center.
pub fn decompose(
    section: &Section,
    supports: &[Option<SupportPoint>],
) -> Result<DecomposedSection, TessellationError> {
    let sup = |e: EdgeId| -> Result<&SupportPoint, TessellationError> {
        supports
            .get(e.index())
            .and_then(|s| s.as_ref())
            .ok_or(TessellationError::MissingSupport(e.id()))
    };
    let naux = supports
        .iter()
        .flatten()
        .map(|s| s.attrs.len())
        .next()
        .unwrap_or(0);
    if section.is_tetrahedron() {
        let first = &section.cycles[0].edges;
        let apex = section
            .support_points()
            .into_iter()
            .find(|e| !first.contains(e))
            .expect("four 3-cycles span four points");
        for &e in first {
            sup(e)?;
        }
        sup(apex)?;
        return Ok(DecomposedSection {
            cycles: section.cycles.clone(),
            face_centers: vec![None; section.cycles.len()],
            volume_center: None,
            inner: Vec::new(),
            tets: vec![[
                TetVertex::Support(apex),
                TetVertex::Support(first[0]),
                TetVertex::Support(first[1]),
                TetVertex::Support(first[2]),
            ]],
        });
    }
    let section = &ordered(section);
    let mut centers = Vec::with_capacity(section.cycles.len());
    let mut face_centers = Vec::with_capacity(section.cycles.len());
    for c in &section.cycles {
        let mut members: Vec<&SupportPoint> =
            c.edges.iter().map(|&e| sup(e)).collect::<Result<_, _>>()?;
        members.sort_by(|a, b| a.key.cmp(&b.key));
        let center = mean(members.iter().map(|s| (&s.pos, &s.attrs)), naux);
        face_centers.push((c.len() >= 4).then(|| center.clone()));
        centers.push(center);
    }
    let volume_center = mean(centers.iter().map(|(p, a)| (p, a)), naux);
    let surface = section_surface(section);
    if section.euler() != 2 {
        let tris: Vec<Tri> = surface.iter().map(|t| t.map(local_id)).collect();
        if let Some(h) = handles::handlebody(&tris) {
            return Ok(fill_handlebody(
                section.cycles.clone(),
                &h,
                face_centers,
                volume_center,
                &centers,
                supports,
            ));
        }
    }
    let v = TetVertex::VolumeCenter;
    Ok(DecomposedSection {
        cycles: section.cycles.clone(),
        face_centers,
        volume_center: Some(volume_center),
        inner: Vec::new(),
        tets: surface.into_iter().map(|[a, b, c]| [v, a, b, c]).collect(),
    })
}

/// Cycles in order of their sorted support sets, so decomposition does not
/// depend on stitching order or cycle direction.
pub fn ordered(section: &Section) -> Section {
    let mut cycles: Vec<(Vec<u8>, &ReducedCycle)> = section
        .cycles
        .iter()
        .map(|c| {
            let mut ids: Vec<u8> = c.edges.iter().map(|e| e.id()).collect();
            ids.sort_unstable();
            (ids, c)
        })
        .collect();
    cycles.sort_by(|a, b| a.0.cmp(&b.0));
    Section {
        cycles: cycles.into_iter().map(|(_, c)| c.clone()).collect(),
        cell: section.cell,
    }
}

/// True when [`decompose`] fills the section without a pinched center: its
/// boundary is a sphere, or a system of non-separating loops exists.
pub fn is_fillable(section: &Section) -> bool {
    if section.euler() == 2 {
        return true;
    }
    handles::find_loops(&section_triangles(section)).is_some()
}

/// Oriented boundary triangles of a section as [`decompose`] fills them,
/// over ids below `EDGE_COUNT` for supports and above for face centers.
pub fn section_triangles(section: &Section) -> Vec<Tri> {
    section_surface(&ordered(section))
        .iter()
        .map(|t| t.map(local_id))
        .collect()
}

/// Oriented boundary triangles: 3-cycles whole, longer cycles fanned around
/// their face center.
fn section_surface(section: &Section) -> Vec<[TetVertex; 3]> {
    let mut out = Vec::new();
    for (ci, c) in section.cycles.iter().enumerate() {
        let s = |i: usize| TetVertex::Support(c.edges[i % c.len()]);
        if c.len() == 3 {
            out.push([s(0), s(1), s(2)]);
        } else {
            for i in 0..c.len() {
                out.push([TetVertex::FaceCenter(ci), s(i), s(i + 1)]);
            }
        }
    }
    out
}

fn local_id(v: TetVertex) -> u32 {
    match v {
        TetVertex::Support(e) => e.id() as u32,
        TetVertex::FaceCenter(ci) => EDGE_COUNT as u32 + ci as u32,
        _ => unreachable!("surface triangles hold supports and face centers only"),
    }
}

fn fill_handlebody(
    cycles: Vec<ReducedCycle>,
    h: &handles::Handlebody,
    face_centers: Vec<Option<Centered>>,
    core: Centered,
    centers: &[Centered],
    supports: &[Option<SupportPoint>],
) -> DecomposedSection {
    let mut inner: Vec<Centered> = Vec::with_capacity(h.inner.len());
    let tv = |n: Node| match n {
        Node::Surface(id) if (id as usize) < EDGE_COUNT => {
            TetVertex::Support(EdgeId::from_raw(id as u8))
        }
        Node::Surface(id) => TetVertex::FaceCenter(id as usize - EDGE_COUNT),
        Node::Inner(i) => TetVertex::Inner(i as usize),
    };
    for placement in &h.inner {
        let c = match placement {
            Inner::Core => core.clone(),
            Inner::Mix(parts) => {
                let mut p = [0.0; 4];
                let mut a = vec![0.0; core.1.len()];
                for &(n, w) in parts {
                    let (pos, attrs) = match tv(n) {
                        TetVertex::Support(e) => {
                            let s = supports[e.index()]
                                .as_ref()
                                .expect("surface supports are placed");
                            (&s.pos, &s.attrs)
                        }
                        TetVertex::FaceCenter(ci) => (&centers[ci].0, &centers[ci].1),
                        TetVertex::Inner(i) => (&inner[i].0, &inner[i].1),
                        TetVertex::VolumeCenter => unreachable!("fillings have no volume center"),
                    };
                    for k in 0..4 {
                        p[k] += w * pos[k];
                    }
                    for (acc, v) in a.iter_mut().zip(attrs) {
                        *acc += w * v;
                    }
                }
                (p, a)
            }
        };
        inner.push(c);
    }
    DecomposedSection {
        cycles,
        face_centers,
        volume_center: None,
        inner,
        tets: h.tets.iter().map(|t| t.map(tv)).collect(),
    }
}

fn mean<'a>(
    items: impl Iterator<Item = (&'a [f64; 4], &'a Vec<f64>)>,
    naux: usize,
) -> ([f64; 4], Vec<f64>) {
    let mut p = [0.0; 4];
    let mut a = vec![0.0; naux];
    let mut n = 0usize;
    for (pos, attrs) in items {
        for k in 0..4 {
            p[k] += pos[k];
        }
        for (acc, v) in a.iter_mut().zip(attrs) {
            *acc += v;
        }
        n += 1;
    }
    let inv = n as f64;
    (p.map(|x| x / inv), a.into_iter().map(|x| x / inv).collect())
}

/// Tet count a section decomposes into.
pub fn expected_tet_count(cycles: &[ReducedCycle]) -> usize {
    if cycles.len() == 4 && cycles.iter().all(|c| c.len() == 3) {
        return 1;
    }
    cycles
        .iter()
        .map(|c| if c.len() == 3 { 1 } else { c.len() })
        .sum()
}

/// Orientation sign making single-toxel normals point away from the toxel.
const NORMAL_SIGN: f64 = -1.0;

/// Unnormalized generalized cross product of the three edge vectors from
/// `v[0]`: `n . x = det[v1 - v0, v2 - v0, v3 - v0, x]`.
pub fn cross4(v: &[[f64; 4]; 4]) -> [f64; 4] {
    let d = |i: usize| [0, 1, 2, 3].map(|k| v[i][k] - v[0][k]);
    let (a, b, c) = (d(1), d(2), d(3));
    const COLS: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    let minor = |skip: usize| {
        let [i, j, k] = COLS[skip];
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    [0, 1, 2, 3].map(|k| if k % 2 == 0 { -minor(k) } else { minor(k) })
}

/// 3-volume of a tet embedded in 4D.
pub fn tet_volume(v: &[[f64; 4]; 4]) -> f64 {
    norm(&cross4(v)) / 6.0
}

/// Outward unit 4-normal, or `None` for a degenerate tet.
pub fn four_normal(v: &[[f64; 4]; 4]) -> Option<[f64; 4]> {
    let n = cross4(v);
    let len = norm(&n);
    (len > 0.0 && len.is_finite()).then(|| n.map(|x| NORMAL_SIGN * x / len))
}

fn norm(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Degenerate-volume tolerance for a grid spacing.
pub fn volume_tolerance(spacing: [f64; 4]) -> f64 {
    let h = spacing.iter().copied().fold(f64::INFINITY, f64::min);
    1e-10 * h * h * h
}

/// Tets of one cell with cell-local vertex indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellMesh {
    pub vertices: Vec<Vertex4>,
    pub tets: Vec<([u32; 4], u32)>,
    pub cell: [i64; 4],
}

/// Tessellates every section extracted from the cell at grid index `base`.
pub fn tessellate_cell(
    field: &ToxelField,
    base: [usize; 4],
    pattern: &CellPattern,
    extraction: &CellExtraction,
    config: &ExtractionConfig,
) -> Result<CellMesh, TessellationError> {
    let cell = field.data_coords(base);
    let supports = place_supports(field, base, pattern, config);
    let tol = volume_tolerance(field.spacing());
    let mut mesh = CellMesh {
        cell,
        ..CellMesh::default()
    };
    let mut support_index = [u32::MAX; EDGE_COUNT];
    for (si, section) in extraction.sections.iter().enumerate() {
        let si = si as u32;
        let dec = decompose(section, &supports)?;
        // Section-local vertices other than supports, in first-use order.
        let mut local: Vec<(TetVertex, u32)> = Vec::new();
        for tet in &dec.tets {
            let mut idx = [0u32; 4];
            let mut pos = [[0.0; 4]; 4];
            for (k, &tv) in tet.iter().enumerate() {
                let existing = match tv {
                    TetVertex::Support(e) => {
                        Some(support_index[e.index()]).filter(|&i| i != u32::MAX)
                    }
                    _ => local.iter().find(|(v, _)| *v == tv).map(|&(_, i)| i),
                };
                let id = match existing {
                    Some(id) => id,
                    None => {
                        let v = make_vertex(tv, si, cell, &dec, &supports)?;
                        mesh.vertices.push(v);
                        let id = (mesh.vertices.len() - 1) as u32;
                        match tv {
                            TetVertex::Support(e) => support_index[e.index()] = id,
                            _ => local.push((tv, id)),
                        }
                        id
                    }
                };
                idx[k] = id;
                pos[k] = mesh.vertices[id as usize].pos;
            }
            let volume = tet_volume(&pos);
            if !(volume > tol) {
                return Err(TessellationError::DegenerateTet {
                    cell,
                    section: si,
                    volume,
                });
            }
            mesh.tets.push((idx, si));
        }
    }
    Ok(mesh)
}

fn make_vertex(
    tv: TetVertex,
    si: u32,
    cell: [i64; 4],
    dec: &DecomposedSection,
    supports: &[Option<SupportPoint>],
) -> Result<Vertex4, TessellationError> {
    let missing = |e: EdgeId| TessellationError::MissingSupport(e.id());
    let (key, (pos, attrs)) = match tv {
        TetVertex::Support(e) => {
            let s = supports[e.index()].as_ref().ok_or(missing(e))?;
            (VertexKey::EdgeSupport(s.key), (s.pos, s.attrs.clone()))
        }
        TetVertex::FaceCenter(ci) => {
            let mut keys = Vec::with_capacity(dec.cycles[ci].len());
            for &e in &dec.cycles[ci].edges {
                keys.push(supports[e.index()].as_ref().ok_or(missing(e))?.key);
            }
            keys.sort();
            let c = dec.face_centers[ci]
                .clone()
                .expect("fan cycles have centers");
            (VertexKey::FaceCentroid(keys.into_boxed_slice()), c)
        }
        TetVertex::VolumeCenter => {
            let c = dec
                .volume_center
                .clone()
                .expect("coned sections have a center");
            (VertexKey::VolumeCenter { cell, section: si }, c)
        }
        TetVertex::Inner(index) => (
            VertexKey::Interior {
                cell,
                section: si,
                index: index as u32,
            },
            dec.inner[index].clone(),
        ),
    };
    Ok(Vertex4 { key, pos, attrs })
}

/// Merges per-cell meshes in the given order, deduplicating vertices by key.
pub fn assemble(
    attr_names: Vec<String>,
    cells: impl IntoIterator<Item = CellMesh>,
) -> Result<TetMesh4, TessellationError> {
    let mut mesh = TetMesh4 {
        attr_names,
        ..TetMesh4::default()
    };
    let mut index: FxHashMap<VertexKey, u32> = FxHashMap::default();
    for cm in cells {
        let mut remap = Vec::with_capacity(cm.vertices.len());
        for v in cm.vertices {
            let id = match index.get(&v.key) {
                Some(&id) => {
                    let old = &mesh.vertices[id as usize];
                    if old.pos.map(f64::to_bits) != v.pos.map(f64::to_bits) {
                        return Err(TessellationError::KeyCollision(v.key));
                    }
                    id
                }
                None => {
                    let id = mesh.vertices.len() as u32;
                    index.insert(v.key.clone(), id);
                    mesh.vertices.push(v);
                    id
                }
            };
            remap.push(id);
        }
        for (t, section) in cm.tets {
            let v = t.map(|i| remap[i as usize]);
            let normal = four_normal(&v.map(|i| mesh.vertices[i as usize].pos)).unwrap_or([0.0; 4]);
            mesh.tets.push(Tet4 {
                v,
                normal,
                cell: cm.cell,
                section,
            });
        }
    }
    Ok(mesh)
}

/// The four facets of a tet, each as (sorted triple, induced orientation
/// parity). Opposite parities mean opposite traversal.
pub fn facets(v: [u32; 4]) -> [([u32; 3], bool); 4] {
    // Boundary of [v0 v1 v2 v3] = [v1 v2 v3] - [v0 v2 v3] + [v0 v1 v3] - [v0 v1 v2].
    let faces = [
        ([v[1], v[2], v[3]], true),
        ([v[0], v[2], v[3]], false),
        ([v[0], v[1], v[3]], true),
        ([v[0], v[1], v[2]], false),
    ];
    faces.map(|(f, sign)| {
        let (sorted, even) = sort3(f);
        (sorted, sign == even)
    })
}

fn sort3(mut f: [u32; 3]) -> ([u32; 3], bool) {
    let mut even = true;
    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if f[i] > f[j] {
            f.swap(i, j);
            even = !even;
        }
    }
    (f, even)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationFailure {
    /// A triangle used by a number of tets other than two.
    TriangleUse {
        triangle: [u32; 3],
        count: usize,
    },
    /// A triangle whose two tets traverse it in the same direction.
    Orientation {
        triangle: [u32; 3],
    },
    DegenerateTet {
        tet: usize,
        volume: f64,
        cell: [i64; 4],
        section: u32,
    },
    Euler {
        component: usize,
        chi: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentStats {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub tets: usize,
}

impl ComponentStats {
    pub fn euler(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.triangles as i64 - self.tets as i64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub tets: usize,
    pub components: Vec<ComponentStats>,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn euler(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.triangles as i64 - self.tets as i64
    }

    pub fn boundary_triangles(&self) -> Vec<[u32; 3]> {
        self.failures
            .iter()
            .filter_map(|f| match f {
                ValidationFailure::TriangleUse { triangle, count: 1 } => Some(*triangle),
                _ => None,
            })
            .collect()
    }
}

/// Checks closedness, orientation, non-degeneracy and per-component Euler
/// characteristic. Never panics on malformed input indices.
pub fn validate(mesh: &TetMesh4, tolerance: f64) -> ValidationReport {
    let mut report = ValidationReport {
        tets: mesh.tets.len(),
        ..ValidationReport::default()
    };
    let nv = mesh.vertices.len();
    // Facet uses packed as (triangle, tet, parity) so they sort as integers.
    let pack = |f: [u32; 3], tet: u32, parity: bool| -> u128 {
        (f[0] as u128) << 96
            | (f[1] as u128) << 64
            | (f[2] as u128) << 32
            | (tet as u128) << 1
            | parity as u128
    };
    let unpack = |u: u128| -> ([u32; 3], u32, bool) {
        (
            [(u >> 96) as u32, (u >> 64) as u32, (u >> 32) as u32],
            ((u as u32) >> 1),
            u & 1 == 1,
        )
    };
    let mut uses: Vec<u128> = Vec::with_capacity(4 * mesh.tets.len());
    for (ti, t) in mesh.tets.iter().enumerate() {
        let in_range = t.v.iter().all(|&i| (i as usize) < nv);
        let vol = if in_range {
            tet_volume(&mesh.tet_positions(t))
        } else {
            f64::NAN
        };
        if !(vol > tolerance) {
            report.failures.push(ValidationFailure::DegenerateTet {
                tet: ti,
                volume: vol,
                cell: t.cell,
                section: t.section,
            });
        }
        if in_range {
            for (f, parity) in facets(t.v) {
                uses.push(pack(f, ti as u32, parity));
            }
        }
    }
    uses.sort_unstable();
    let uses: Vec<([u32; 3], u32, bool)> = uses.into_iter().map(unpack).collect();
    let mut parent: Vec<usize> = (0..mesh.tets.len()).collect();
    let mut tris: Vec<([u32; 3], u32)> = Vec::new();
    let mut i = 0;
    while i < uses.len() {
        let mut j = i + 1;
        while j < uses.len() && uses[j].0 == uses[i].0 {
            j += 1;
        }
        let group = &uses[i..j];
        if group.len() != 2 {
            report.failures.push(ValidationFailure::TriangleUse {
                triangle: group[0].0,
                count: group.len(),
            });
        } else if group[0].2 == group[1].2 {
            report.failures.push(ValidationFailure::Orientation {
                triangle: group[0].0,
            });
        }
        for w in group.windows(2) {
            union(&mut parent, w[0].1 as usize, w[1].1 as usize);
        }
        tris.push((group[0].0, group[0].1));
        i = j;
    }

    // Components are joined through shared triangles.
    let mut comp_of_tet = vec![0u32; mesh.tets.len()];
    let mut label = vec![u32::MAX; mesh.tets.len()];
    let mut ncomp = 0u32;
    for ti in 0..mesh.tets.len() {
        let r = find(&mut parent, ti);
        if label[r] == u32::MAX {
            label[r] = ncomp;
            ncomp += 1;
        }
        comp_of_tet[ti] = label[r];
    }
    let mut comps = vec![ComponentStats::default(); ncomp as usize];
    // Packed (edge, component) and (vertex, component) pairs.
    let mut edges: Vec<u128> = Vec::with_capacity(3 * tris.len());
    let mut verts: Vec<u64> = Vec::with_capacity(3 * tris.len());
    for (tri, tet) in &tris {
        let c = comp_of_tet[*tet as usize];
        comps[c as usize].triangles += 1;
        for [a, b] in [[tri[0], tri[1]], [tri[0], tri[2]], [tri[1], tri[2]]] {
            edges.push((a as u128) << 64 | (b as u128) << 32 | c as u128);
        }
        verts.extend(tri.iter().map(|&v| (v as u64) << 32 | c as u64));
    }
    for (ti, t) in mesh.tets.iter().enumerate() {
        if t.v.iter().all(|&i| (i as usize) < nv) {
            comps[comp_of_tet[ti] as usize].tets += 1;
        }
    }
    edges.sort_unstable();
    edges.dedup();
    verts.sort_unstable();
    verts.dedup();
    for e in &edges {
        comps[*e as u32 as usize].edges += 1;
    }
    for v in &verts {
        comps[*v as u32 as usize].vertices += 1;
    }
    report.triangles = tris.len();
    report.edges = count_distinct(edges.iter().map(|e| e >> 32));
    report.vertices = count_distinct(verts.iter().map(|v| v >> 32));
    for (i, c) in comps.iter().enumerate() {
        if c.euler() != 0 {
            report.failures.push(ValidationFailure::Euler {
                component: i,
                chi: c.euler(),
            });
        }
    }
    report.components = comps;
    report
}

/// Distinct items of a sorted sequence.
fn count_distinct<T: PartialEq>(sorted: impl Iterator<Item = T>) -> usize {
    let mut n = 0;
    let mut last = None;
    for x in sorted {
        if last.as_ref() != Some(&x) {
            n += 1;
            last = Some(x);
        }
    }
    n
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

fn union(p: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(p, a), find(p, b));
    if ra != rb {
        p[ra.max(rb)] = ra.min(rb);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract_cell;
    use crate::field::Mode;

    fn unit_supports(pattern: &CellPattern) -> Vec<Option<SupportPoint>> {
        let field = ToxelField::new([2; 4], pattern.values.to_vec()).unwrap();
        let mut p = *pattern;
        // Site values are stored in site order; reorder into grid order.
        let mut vals = vec![0.0; 16];
        for s in crate::topology::SiteId::all() {
            let c = site_coords(s);
            vals[field.linear_index(c.map(|x| x as usize))] = pattern.values[s.index()];
        }
        let field = ToxelField::new([2; 4], vals).unwrap();
        p.ghost = 0;
        place_supports(&field, [0; 4], &p, &ExtractionConfig::new(0.5))
    }

    fn tets_for(sites: &[u8], mode: Mode) -> Vec<usize> {
        let p = CellPattern::from_sites(sites);
        let x = extract_cell(&p, &ExtractionConfig::new(0.5).with_mode(mode), [0; 4]).unwrap();
        let sup = unit_supports(&p);
        x.sections
            .iter()
            .map(|s| {
                let d = decompose(s, &sup).unwrap();
                assert_eq!(d.tets.len(), expected_tet_count(&s.cycles));
                d.tets.len()
            })
            .collect()
    }

    #[test]
    fn lambda_examples() {
        let c = ExtractionConfig::DEFAULT_CLAMP;
        assert_eq!(
            support_lambda(1.0, 0.0, 0.5, Placement::Interpolate, c),
            0.5
        );
        assert_eq!(
            support_lambda(1.0, 0.0, 0.25, Placement::Interpolate, c),
            0.75
        );
        assert_eq!(
            support_lambda(0.6, 0.5999, 0.6, Placement::Interpolate, c),
            c
        );
        assert_eq!(support_lambda(0.3, 0.9, 0.6, Placement::Midpoint, c), 0.5);
        assert_eq!(
            support_lambda(0.6, 0.6, 0.6, Placement::Interpolate, c),
            0.5
        );
    }

    #[test]
    fn decomposition_counts() {
        assert_eq!(tets_for(&[0, 1, 2, 3, 4, 5, 6, 7], Mode::Mixed), vec![24]);
        assert_eq!(tets_for(&[7, 15], Mode::Mixed), vec![14]);
        assert_eq!(tets_for(&[4, 15], Mode::Connect), vec![16]);
        assert_eq!(tets_for(&[4, 15], Mode::Disconnect), vec![1, 1]);
        assert_eq!(tets_for(&[7], Mode::Mixed), vec![1]);
    }

    #[test]
    fn cross_product_is_orthogonal_and_antisymmetric() {
        let v = [
            [0.1, 0.2, -0.3, 0.4],
            [1.0, 0.5, 0.2, -0.1],
            [0.3, 1.2, 0.7, 0.0],
            [-0.4, 0.1, 1.1, 0.9],
        ];
        let n = cross4(&v);
        for i in 1..4 {
            let d: f64 = (0..4).map(|k| n[k] * (v[i][k] - v[0][k])).sum();
            assert!(d.abs() < 1e-12);
        }
        let mut w = v;
        w.swap(1, 2);
        let m = cross4(&w);
        for k in 0..4 {
            assert!((m[k] + n[k]).abs() < 1e-12);
        }
        // n . e_t equals the determinant with e_t as the last row.
        let rows = [1, 2, 3].map(|i| [0, 1, 2, 3].map(|k| v[i][k] - v[0][k]));
        let det = det3(&rows, [0, 1, 2]);
        assert!((n[3] - det).abs() < 1e-12);
    }

    fn det3(r: &[[f64; 4]; 3], c: [usize; 3]) -> f64 {
        r[0][c[0]] * (r[1][c[1]] * r[2][c[2]] - r[1][c[2]] * r[2][c[1]])
            - r[0][c[1]] * (r[1][c[0]] * r[2][c[2]] - r[1][c[2]] * r[2][c[0]])
            + r[0][c[2]] * (r[1][c[0]] * r[2][c[1]] - r[1][c[1]] * r[2][c[0]])
    }

    #[test]
    fn isochronous_normals_are_temporal() {
        let p = CellPattern::from_bits(0x00ff);
        let x = extract_cell(&p, &ExtractionConfig::new(0.5), [0; 4]).unwrap();
        let sup = unit_supports(&p);
        let d = decompose(&x.sections[0], &sup).unwrap();
        let pos = |tv: TetVertex| *d.position(tv, &sup).unwrap();
        for t in &d.tets {
            let n = four_normal(&t.map(pos)).unwrap();
            assert!(n[0].abs() < 1e-12 && n[1].abs() < 1e-12 && n[2].abs() < 1e-12);
            // Active past, inactive future: outward is +t.
            assert!((n[3] - 1.0).abs() < 1e-12, "{n:?}");
        }
    }

    #[test]
    fn facet_parity_detects_opposite_traversal() {
        let a = facets([0, 1, 2, 3]);
        let b = facets([4, 3, 2, 1]);
        let fa = a.iter().find(|(f, _)| *f == [1, 2, 3]).unwrap();
        let fb = b.iter().find(|(f, _)| *f == [1, 2, 3]).unwrap();
        assert_ne!(fa.1, fb.1);
        let c = facets([4, 1, 2, 3]);
        let fc = c.iter().find(|(f, _)| *f == [1, 2, 3]).unwrap();
        assert_eq!(fa.1, fc.1);
    }

    #[test]
    fn empty_mesh_validates() {
        let m = assemble(Vec::new(), Vec::new()).unwrap();
        assert!(m.is_empty());
        let r = validate(&m, 0.0);
        assert!(r.passed());
        assert!(r.components.is_empty());
    }
}
