//! Indexing scheme of a `2x2x2x2` toxel neighborhood (a 4-cell).
//!
//! A 4-cell has 56 indexed points:
//!
//! * ids `0..16` are toxel sites, the corners of the unit tesseract,
//! * ids `0..32` (as [`EdgeId`]) are boundary-cube centers, the midpoints of
//!   the 32 tesseract edges, i.e. the support points of the hypersurface,
//! * ids `32..56` are connectivity points, the centers of the 24 square faces.
//!
//! The vector path table maps every (boundary cube, orientation) pair to a
//! directed triplet of `face -> edge -> face` paths. The transcribed table is
//! kept in `data/paths.txt`. The spatial layout of edge and face ids is not
//! stored anywhere; [`reconstruct_geometry`] recovers it from the table's
//! incidence structure plus four anchored edges of site 7, and
//! [`generate_table`] rebuilds all 192 paths from the orientation convention
//! so the two can be checked against each other.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

pub const SITE_COUNT: usize = 16;
pub const EDGE_COUNT: usize = 32;
pub const FACE_COUNT: usize = 24;
pub const POINT_COUNT: usize = 56;
/// Id of the first connectivity point.
pub const FACE_BASE: u8 = 32;
pub const PATH_COUNT: usize = EDGE_COUNT * 2 * 3;

const TRANSCRIBED_TABLE: &str = include_str!("../data/paths.txt");

/// Spatial corner offsets of the sites `0..8`, `(x, y, z)`.
const SPATIAL_RING: [[u8; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("site id {0} out of range 0..16")]
    SiteOutOfRange(u32),
    #[error("edge id {0} out of range 0..32")]
    EdgeOutOfRange(u32),
    #[error("face id {0} out of range 32..56")]
    FaceOutOfRange(u32),
    #[error("path table line {line}: {msg}")]
    TableSyntax { line: usize, msg: String },
    #[error("corrupt path table: {0}")]
    CorruptTable(String),
    #[error("anchor {0} contradicts the site lattice")]
    AnchorMismatch(String),
    #[error("no labeling of the tesseract is consistent with the table and anchors")]
    NoConsistentLabeling,
    #[error("{candidates} incidence-consistent labelings exist but none satisfies the orientation convention")]
    OrientationMismatch { candidates: usize },
    #[error("{count} labelings remain after anchoring and orientation filtering")]
    AmbiguousLabeling { count: usize },
    #[error("orientation convention yields no directed 3-cycle around edge {0}")]
    InconsistentOrientation(u8),
}

macro_rules! point_id {
    ($name:ident, $lo:expr, $hi:expr, $err:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u8);

        impl $name {
            pub fn new(id: u32) -> Result<Self, TopologyError> {
                if ($lo..$hi).contains(&id) {
                    Ok(Self(id as u8))
                } else {
                    Err(TopologyError::$err(id))
                }
            }

            /// Caller guarantees the range.
            #[allow(dead_code)]
            pub(crate) const fn from_raw(id: u8) -> Self {
                Self(id)
            }

            pub const fn id(self) -> u8 {
                self.0
            }

            pub fn all() -> impl Iterator<Item = Self> + Clone {
                ($lo as u8..$hi as u8).map(Self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

point_id!(SiteId, 0, 16, SiteOutOfRange);
point_id!(EdgeId, 0, 32, EdgeOutOfRange);
point_id!(FaceId, 32, 56, FaceOutOfRange);

impl SiteId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl FaceId {
    /// Zero-based slot in `0..24`.
    pub const fn slot(self) -> usize {
        (self.0 - FACE_BASE) as usize
    }

    pub fn from_slot(slot: usize) -> Self {
        debug_assert!(slot < FACE_COUNT);
        Self(slot as u8 + FACE_BASE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    T,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::T];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Self::ALL[i]
    }

    pub fn name(self) -> char {
        ['x', 'y', 'z', 't'][self.index()]
    }
}

/// Direction of a range vector (active toxel center towards the inactive one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Plus => Orientation::Minus,
            Orientation::Minus => Orientation::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Orientation::Plus => '+',
            Orientation::Minus => '-',
        }
    }

    const fn slot(self) -> usize {
        match self {
            Orientation::Plus => 0,
            Orientation::Minus => 1,
        }
    }
}

/// Lattice corner `(x, y, z, t)` of a site. Sites `0..8` lie in the past
/// (`t = 0`), sites `8..16` in the future.
pub const fn site_coords(id: SiteId) -> [u8; 4] {
    let s = SPATIAL_RING[id.index() % 8];
    [s[0], s[1], s[2], (id.index() / 8) as u8]
}

/// Inverse of [`site_coords`].
pub fn site_at(coords: [u8; 4]) -> SiteId {
    let spatial = [coords[0], coords[1], coords[2]];
    let s = SPATIAL_RING
        .iter()
        .position(|c| *c == spatial)
        .expect("coordinates must be 0 or 1");
    SiteId(s as u8 + 8 * coords[3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Path {
    pub from: FaceId,
    pub via: EdgeId,
    pub to: FaceId,
}

impl Path {
    pub fn reversed(self) -> Self {
        Path {
            from: self.to,
            via: self.via,
            to: self.from,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} -> {}", self.from, self.via, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathTriplet {
    pub center: EdgeId,
    pub orientation: Orientation,
    pub paths: [Path; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMismatch {
    pub center: EdgeId,
    pub orientation: Orientation,
    pub index: usize,
    pub expected: Path,
    pub found: Path,
}

/// The 32 x 2 x 3 table of directed octant paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTable {
    rows: Vec<PathTriplet>,
}

impl PathTable {
    /// Parses the `center orient from to` line format, one line per path.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut slots: Vec<Vec<(FaceId, FaceId)>> = vec![Vec::new(); EDGE_COUNT * 2];
        let mut count = 0usize;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |msg: &str| TopologyError::TableSyntax {
                line: n + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(syntax("expected `center orient from to`"));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| syntax("not an integer"));
            let center = EdgeId::new(num(fields[0])?)?;
            let orientation = match fields[1] {
                "+" => Orientation::Plus,
                "-" => Orientation::Minus,
                _ => return Err(syntax("orientation must be + or -")),
            };
            let from = FaceId::new(num(fields[2])?)?;
            let to = FaceId::new(num(fields[3])?)?;
            slots[center.index() * 2 + orientation.slot()].push((from, to));
            count += 1;
        }
        if count != PATH_COUNT {
            return Err(TopologyError::CorruptTable(format!(
                "expected {PATH_COUNT} paths, found {count}"
            )));
        }
        let mut rows = Vec::with_capacity(EDGE_COUNT * 2);
        for center in EdgeId::all() {
            for orientation in [Orientation::Plus, Orientation::Minus] {
                let slot = &slots[center.index() * 2 + orientation.slot()];
                if slot.len() != 3 {
                    return Err(TopologyError::CorruptTable(format!(
                        "center {center}{} has {} paths",
                        orientation.symbol(),
                        slot.len()
                    )));
                }
                let paths = [0, 1, 2].map(|i| Path {
                    from: slot[i].0,
                    via: center,
                    to: slot[i].1,
                });
                rows.push(PathTriplet {
                    center,
                    orientation,
                    paths,
                });
            }
        }
        let table = PathTable { rows };
        table.check_structure()?;
        Ok(table)
    }

    /// The table shipped with the crate.
    pub fn transcribed() -> &'static PathTable {
        static TABLE: OnceLock<PathTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            PathTable::parse(TRANSCRIBED_TABLE).expect("bundled path table is well formed")
        })
    }

    fn from_rows(rows: Vec<PathTriplet>) -> Self {
        PathTable { rows }
    }

    fn check_structure(&self) -> Result<(), TopologyError> {
        for center in EdgeId::all() {
            let plus = self.triplet(center, Orientation::Plus);
            let minus = self.triplet(center, Orientation::Minus);
            for t in [plus, minus] {
                let p = &t.paths;
                let chained = (0..3).all(|i| p[i].to == p[(i + 1) % 3].from);
                let distinct =
                    p[0].from != p[1].from && p[1].from != p[2].from && p[0].from != p[2].from;
                if !chained || !distinct {
                    return Err(TopologyError::CorruptTable(format!(
                        "center {center}{} is not a directed 3-cycle",
                        t.orientation.symbol()
                    )));
                }
            }
            for path in &plus.paths {
                if !minus.paths.contains(&path.reversed()) {
                    return Err(TopologyError::CorruptTable(format!(
                        "center {center}: minus triplet is not the reversed plus triplet"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn triplet(&self, center: EdgeId, orientation: Orientation) -> &PathTriplet {
        &self.rows[center.index() * 2 + orientation.slot()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PathTriplet> {
        self.rows.iter()
    }

    pub fn path_count(&self) -> usize {
        self.rows.len() * 3
    }

    /// The three faces incident to `center`, in plus-triplet order.
    pub fn incident_faces(&self, center: EdgeId) -> [FaceId; 3] {
        self.triplet(center, Orientation::Plus)
            .paths
            .map(|p| p.from)
    }

    /// Serializes back to the line format accepted by [`PathTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(PATH_COUNT * 12);
        for t in &self.rows {
            for p in &t.paths {
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    t.center,
                    t.orientation.symbol(),
                    p.from,
                    p.to
                ));
            }
        }
        out
    }

    /// Path-by-path comparison, `self` taken as the expectation.
    pub fn diff(&self, other: &PathTable) -> Vec<TableMismatch> {
        let mut out = Vec::new();
        for (a, b) in self.rows.iter().zip(&other.rows) {
            for i in 0..3 {
                if a.paths[i] != b.paths[i] {
                    out.push(TableMismatch {
                        center: a.center,
                        orientation: a.orientation,
                        index: i,
                        expected: a.paths[i],
                        found: b.paths[i],
                    });
                }
            }
        }
        out
    }
}

/// One of the four fixed edge ids around a site used to pin the labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub site: SiteId,
    pub axis: Axis,
    /// Whether the neighbor along `axis` lies in the positive direction.
    pub positive: bool,
    pub edge: EdgeId,
}

/// Boundary cubes of site 7: `11+` along x, `9-` along y, `6-` along z and
/// `18+` along t.
pub const SITE7_ANCHORS: [Anchor; 4] = [
    Anchor {
        site: SiteId(7),
        axis: Axis::X,
        positive: true,
        edge: EdgeId(11),
    },
    Anchor {
        site: SiteId(7),
        axis: Axis::Y,
        positive: false,
        edge: EdgeId(9),
    },
    Anchor {
        site: SiteId(7),
        axis: Axis::Z,
        positive: false,
        edge: EdgeId(6),
    },
    Anchor {
        site: SiteId(7),
        axis: Axis::T,
        positive: true,
        edge: EdgeId(18),
    },
];

/// Canonical geometry and incidence of the 56 points of a 4-cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGeometry {
    /// Endpoints ordered low to high along the edge axis.
    edge_sites: [[SiteId; 2]; EDGE_COUNT],
    edge_axis: [Axis; EDGE_COUNT],
    /// Face spanned by the edge and each axis (`None` for the edge's own axis).
    edge_face_by_axis: [[Option<FaceId>; 4]; EDGE_COUNT],
    face_edges: [[EdgeId; 4]; FACE_COUNT],
    face_axes: [[Axis; 2]; FACE_COUNT],
    face_corners: [[SiteId; 4]; FACE_COUNT],
    site_edges: [[EdgeId; 4]; SITE_COUNT],
}

impl CellGeometry {
    /// Geometry reconstructed from the bundled table and [`SITE7_ANCHORS`].
    pub fn canonical() -> &'static CellGeometry {
        static GEOM: OnceLock<CellGeometry> = OnceLock::new();
        GEOM.get_or_init(|| {
            reconstruct_geometry(PathTable::transcribed(), &SITE7_ANCHORS)
                .expect("bundled path table admits a unique labeling")
        })
    }

    pub fn edge_sites(&self, e: EdgeId) -> [SiteId; 2] {
        self.edge_sites[e.index()]
    }

    pub fn edge_axis(&self, e: EdgeId) -> Axis {
        self.edge_axis[e.index()]
    }

    /// The three faces containing `e`, ordered by their second axis.
    pub fn edge_faces(&self, e: EdgeId) -> [FaceId; 3] {
        let mut out = [FaceId(FACE_BASE); 3];
        let mut n = 0;
        for f in self.edge_face_by_axis[e.index()].iter().flatten() {
            out[n] = *f;
            n += 1;
        }
        out
    }

    /// The face spanned by `e` and `axis`.
    pub fn face_along(&self, e: EdgeId, axis: Axis) -> Option<FaceId> {
        self.edge_face_by_axis[e.index()][axis.index()]
    }

    pub fn face_edges(&self, f: FaceId) -> [EdgeId; 4] {
        self.face_edges[f.slot()]
    }

    pub fn face_axes(&self, f: FaceId) -> [Axis; 2] {
        self.face_axes[f.slot()]
    }

    /// Corner sites of `f` in cyclic order around the face.
    pub fn face_corners(&self, f: FaceId) -> [SiteId; 4] {
        self.face_corners[f.slot()]
    }

    pub fn site_edge(&self, s: SiteId, axis: Axis) -> EdgeId {
        self.site_edges[s.index()][axis.index()]
    }

    /// Boundary cube between `s` and its in-cell neighbor along `axis`, with
    /// `Plus` when the neighbor lies in the positive direction.
    pub fn site_boundary(&self, s: SiteId, axis: Axis) -> (EdgeId, Orientation) {
        let e = self.site_edge(s, axis);
        let o = if site_coords(s)[axis.index()] == 0 {
            Orientation::Plus
        } else {
            Orientation::Minus
        };
        (e, o)
    }

    /// Twice the edge midpoint, so all coordinates are integers.
    pub fn edge_doubled(&self, e: EdgeId) -> [i32; 4] {
        let [a, b] = self.edge_sites(e);
        let (ca, cb) = (site_coords(a), site_coords(b));
        [0, 1, 2, 3].map(|i| ca[i] as i32 + cb[i] as i32)
    }

    /// Twice the face center.
    pub fn face_doubled(&self, f: FaceId) -> [i32; 4] {
        let corners = self.face_corners(f);
        [0, 1, 2, 3].map(|i| {
            corners
                .iter()
                .map(|s| site_coords(*s)[i] as i32)
                .sum::<i32>()
                / 2
        })
    }

    pub fn edge_pos(&self, e: EdgeId) -> [f64; 4] {
        self.edge_doubled(e).map(|c| c as f64 * 0.5)
    }

    pub fn face_pos(&self, f: FaceId) -> [f64; 4] {
        self.face_doubled(f).map(|c| c as f64 * 0.5)
    }

    /// Bounding cube `(axis, value)` that contains both faces (which must
    /// share an edge).
    pub fn shared_cube(&self, a: FaceId, b: FaceId) -> (Axis, u8) {
        let (da, db) = (self.face_doubled(a), self.face_doubled(b));
        let axis = (0..4)
            .find(|&i| da[i] == db[i] && da[i] != 1)
            .expect("faces sharing an edge lie in a common bounding cube");
        (Axis::from_index(axis), (da[axis] / 2) as u8)
    }
}

/// Geometric tesseract skeleton enumerated in a fixed order.
struct Skeleton {
    /// `(low site, high site, axis)`.
    edges: Vec<(SiteId, SiteId, Axis)>,
    /// `(corner sites in cyclic order, axes)`.
    faces: Vec<([SiteId; 4], [Axis; 2])>,
    face_edges: Vec<[usize; 4]>,
    edge_faces: Vec<[usize; 3]>,
}

impl Skeleton {
    fn build() -> Self {
        let mut edges = Vec::with_capacity(EDGE_COUNT);
        for s in SiteId::all() {
            let c = site_coords(s);
            for axis in Axis::ALL {
                if c[axis.index()] == 0 {
                    let mut d = c;
                    d[axis.index()] = 1;
                    edges.push((s, site_at(d), axis));
                }
            }
        }
        let mut faces = Vec::with_capacity(FACE_COUNT);
        for s in SiteId::all() {
            let c = site_coords(s);
            for i in 0..4 {
                for j in i + 1..4 {
                    if c[i] == 0 && c[j] == 0 {
                        let mut ci = c;
                        ci[i] = 1;
                        let mut cij = ci;
                        cij[j] = 1;
                        let mut cj = c;
                        cj[j] = 1;
                        let corners = [s, site_at(ci), site_at(cij), site_at(cj)];
                        faces.push((corners, [Axis::from_index(i), Axis::from_index(j)]));
                    }
                }
            }
        }
        let face_edges: Vec<[usize; 4]> = faces
            .iter()
            .map(|(corners, _)| {
                let mut out = [0usize; 4];
                for k in 0..4 {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    out[k] = edges
                        .iter()
                        .position(|&(lo, hi, _)| (lo, hi) == (a, b) || (lo, hi) == (b, a))
                        .expect("face side is a tesseract edge");
                }
                out
            })
            .collect();
        let mut edge_faces = vec![[usize::MAX; 3]; edges.len()];
        let mut fill = vec![0usize; edges.len()];
        for (g, fe) in face_edges.iter().enumerate() {
            for &x in fe {
                edge_faces[x][fill[x]] = g;
                fill[x] += 1;
            }
        }
        debug_assert!(fill.iter().all(|&n| n == 3));
        Skeleton {
            edges,
            faces,
            face_edges,
            edge_faces,
        }
    }
}

/// Incidence read off the table: label edge <-> label face.
struct LabelIncidence {
    edge_faces: [[u8; 3]; EDGE_COUNT],
    face_edges: [[u8; 4]; FACE_COUNT],
}

impl LabelIncidence {
    fn from_table(table: &PathTable) -> Result<Self, TopologyError> {
        let mut edge_faces = [[0u8; 3]; EDGE_COUNT];
        let mut face_edges = [[0u8; 4]; FACE_COUNT];
        let mut fill = [0usize; FACE_COUNT];
        for e in EdgeId::all() {
            let faces = table.incident_faces(e);
            edge_faces[e.index()] = faces.map(|f| f.slot() as u8);
            for f in faces {
                let slot = f.slot();
                if fill[slot] == 4 {
                    return Err(TopologyError::CorruptTable(format!(
                        "face {f} is incident to more than 4 centers"
                    )));
                }
                face_edges[slot][fill[slot]] = e.id();
                fill[slot] += 1;
            }
        }
        if let Some(slot) = fill.iter().position(|&n| n != 4) {
            return Err(TopologyError::CorruptTable(format!(
                "face {} is incident to {} centers",
                FaceId::from_slot(slot),
                fill[slot]
            )));
        }
        Ok(LabelIncidence {
            edge_faces,
            face_edges,
        })
    }

    fn edge_in_face(&self, e: u8, f: u8) -> bool {
        self.face_edges[f as usize].contains(&e)
    }
}

#[derive(Clone)]
struct Labeling {
    edge: [Option<u8>; EDGE_COUNT],
    face: [Option<u8>; FACE_COUNT],
    edge_used: u32,
    face_used: u32,
}

impl Labeling {
    fn empty() -> Self {
        Labeling {
            edge: [None; EDGE_COUNT],
            face: [None; FACE_COUNT],
            edge_used: 0,
            face_used: 0,
        }
    }

    fn set_edge(&mut self, geo: usize, label: u8) -> bool {
        match self.edge[geo] {
            Some(l) => l == label,
            None => {
                if self.edge_used & (1 << label) != 0 {
                    return false;
                }
                self.edge[geo] = Some(label);
                self.edge_used |= 1 << label;
                true
            }
        }
    }

    fn set_face(&mut self, geo: usize, label: u8) -> bool {
        match self.face[geo] {
            Some(l) => l == label,
            None => {
                if self.face_used & (1 << label) != 0 {
                    return false;
                }
                self.face[geo] = Some(label);
                self.face_used |= 1 << label;
                true
            }
        }
    }

    fn complete(&self) -> bool {
        self.edge.iter().all(Option::is_some) && self.face.iter().all(Option::is_some)
    }
}

/// Runs incidence propagation to a fixed point; `false` on contradiction.
fn propagate(state: &mut Labeling, sk: &Skeleton, inc: &LabelIncidence) -> bool {
    loop {
        let mut changed = false;
        // Two labeled edges of a geometric face pin that face's label.
        for (g, fe) in sk.face_edges.iter().enumerate() {
            let labeled: Vec<u8> = fe.iter().filter_map(|&x| state.edge[x]).collect();
            for (i, &a) in labeled.iter().enumerate() {
                for &b in &labeled[i + 1..] {
                    let common: Vec<u8> = inc.edge_faces[a as usize]
                        .iter()
                        .copied()
                        .filter(|f| inc.edge_faces[b as usize].contains(f))
                        .collect();
                    if common.len() != 1 {
                        return false;
                    }
                    let was = state.face[g];
                    if !state.set_face(g, common[0]) {
                        return false;
                    }
                    changed |= was.is_none();
                }
            }
        }
        // Two labeled faces around a geometric edge pin that edge's label.
        for (x, ef) in sk.edge_faces.iter().enumerate() {
            let labeled: Vec<u8> = ef.iter().filter_map(|&g| state.face[g]).collect();
            if labeled.len() < 2 {
                continue;
            }
            let candidates: Vec<u8> = inc.face_edges[labeled[0] as usize]
                .iter()
                .copied()
                .filter(|&e| labeled[1..].iter().all(|&f| inc.edge_in_face(e, f)))
                .collect();
            if candidates.len() != 1 {
                return false;
            }
            let was = state.edge[x];
            if !state.set_edge(x, candidates[0]) {
                return false;
            }
            changed |= was.is_none();
        }
        // Every known (edge, face) incidence must exist in the table.
        for (g, fe) in sk.face_edges.iter().enumerate() {
            if let Some(f) = state.face[g] {
                for &x in fe {
                    if let Some(e) = state.edge[x] {
                        if !inc.edge_in_face(e, f) {
                            return false;
                        }
                    }
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

fn search(mut state: Labeling, sk: &Skeleton, inc: &LabelIncidence, out: &mut Vec<Labeling>) {
    if !propagate(&mut state, sk, inc) {
        return;
    }
    if state.complete() {
        out.push(state);
        return;
    }
    // Branch on an unlabeled edge, preferring one next to a labeled face.
    let pick = (0..EDGE_COUNT)
        .filter(|&x| state.edge[x].is_none())
        .max_by_key(|&x| {
            sk.edge_faces[x]
                .iter()
                .filter(|&&g| state.face[g].is_some())
                .count()
        });
    let Some(x) = pick else {
        // All edges labeled but some face is not: faces follow from edges,
        // so this is unreachable for a well-formed table.
        return;
    };
    for label in 0..EDGE_COUNT as u8 {
        if state.edge_used & (1 << label) != 0 {
            continue;
        }
        let fits = sk.edge_faces[x].iter().all(|&g| match state.face[g] {
            Some(f) => inc.edge_in_face(label, f),
            None => true,
        });
        if fits {
            let mut next = state.clone();
            next.set_edge(x, label);
            search(next, sk, inc, out);
        }
    }
}

fn geometry_from_labeling(sk: &Skeleton, lab: &Labeling) -> CellGeometry {
    let edge_label = |x: usize| EdgeId(lab.edge[x].expect("complete labeling"));
    let face_label = |g: usize| FaceId::from_slot(lab.face[g].expect("complete labeling") as usize);

    let mut edge_sites = [[SiteId(0); 2]; EDGE_COUNT];
    let mut edge_axis = [Axis::X; EDGE_COUNT];
    let mut edge_face_by_axis = [[None; 4]; EDGE_COUNT];
    let mut site_edges = [[EdgeId(0); 4]; SITE_COUNT];
    for (x, &(lo, hi, axis)) in sk.edges.iter().enumerate() {
        let e = edge_label(x);
        edge_sites[e.index()] = [lo, hi];
        edge_axis[e.index()] = axis;
        site_edges[lo.index()][axis.index()] = e;
        site_edges[hi.index()][axis.index()] = e;
        for &g in &sk.edge_faces[x] {
            let [a, b] = sk.faces[g].1;
            let other = if a == axis { b } else { a };
            edge_face_by_axis[e.index()][other.index()] = Some(face_label(g));
        }
    }
    let mut face_edges = [[EdgeId(0); 4]; FACE_COUNT];
    let mut face_axes = [[Axis::X; 2]; FACE_COUNT];
    let mut face_corners = [[SiteId(0); 4]; FACE_COUNT];
    for (g, (corners, axes)) in sk.faces.iter().enumerate() {
        let f = face_label(g);
        let mut edges = sk.face_edges[g].map(edge_label);
        edges.sort();
        face_edges[f.slot()] = edges;
        face_axes[f.slot()] = *axes;
        face_corners[f.slot()] = *corners;
    }
    CellGeometry {
        edge_sites,
        edge_axis,
        edge_face_by_axis,
        face_edges,
        face_axes,
        face_corners,
        site_edges,
    }
}

/// Enumerates every labeling of the geometric tesseract compatible with the
/// table's incidence and the anchors, without the orientation filter.
pub fn incidence_labelings(
    table: &PathTable,
    anchors: &[Anchor],
) -> Result<Vec<CellGeometry>, TopologyError> {
    let inc = LabelIncidence::from_table(table)?;
    let sk = Skeleton::build();
    let mut start = Labeling::empty();
    for a in anchors {
        let c = site_coords(a.site);
        let positive = c[a.axis.index()] == 0;
        if positive != a.positive {
            return Err(TopologyError::AnchorMismatch(format!(
                "site {} {}{}",
                a.site,
                if a.positive { '+' } else { '-' },
                a.axis.name()
            )));
        }
        let x = sk
            .edges
            .iter()
            .position(|&(lo, hi, axis)| axis == a.axis && (lo == a.site || hi == a.site))
            .expect("every site has one edge per axis");
        if !start.set_edge(x, a.edge.id()) {
            return Err(TopologyError::AnchorMismatch(format!(
                "edge {} anchored twice",
                a.edge
            )));
        }
    }
    let mut found = Vec::new();
    search(start, &sk, &inc, &mut found);
    Ok(found
        .iter()
        .map(|l| geometry_from_labeling(&sk, l))
        .collect())
}

/// Recovers the unique assignment of geometric edges and faces to ids.
///
/// Fails unless exactly one incidence-consistent labeling also reproduces
/// the table under [`generate_table`].
pub fn reconstruct_geometry(
    table: &PathTable,
    anchors: &[Anchor],
) -> Result<CellGeometry, TopologyError> {
    let candidates = incidence_labelings(table, anchors)?;
    if candidates.is_empty() {
        return Err(TopologyError::NoConsistentLabeling);
    }
    let total = candidates.len();
    let mut accepted: Vec<CellGeometry> = candidates
        .into_iter()
        .filter(|g| matches!(generate_table(g), Ok(t) if t == *table))
        .collect();
    match accepted.len() {
        0 => Err(TopologyError::OrientationMismatch { candidates: total }),
        1 => Ok(accepted.pop().expect("one element")),
        count => Err(TopologyError::AmbiguousLabeling { count }),
    }
}

/// Sign required of `n . d` for a path lying in the bounding cube
/// `x_axis = value`, where `n` is the right-hand normal of the path in the
/// cube's remaining axes (ascending) and `d` the range vector.
///
/// At `t = 0` the bounding surface faces the enclosed toxel, at `t = 1` it
/// faces away; the other axes alternate with the axis parity.
pub fn cube_orientation_sign(axis: Axis, value: u8) -> i32 {
    let parity = if axis.index() % 2 == 0 { -1 } else { 1 };
    parity * if value == 0 { -1 } else { 1 }
}

/// Whether the path `from -> e -> to` follows the orientation convention
/// for a range vector along `e`'s axis with orientation `o`.
fn path_follows_convention(
    geom: &CellGeometry,
    from: FaceId,
    e: EdgeId,
    to: FaceId,
    o: Orientation,
) -> Result<bool, TopologyError> {
    let (cube_axis, value) = geom.shared_cube(from, to);
    let rem: Vec<usize> = (0..4).filter(|&i| i != cube_axis.index()).collect();
    let (pf, pe, pt) = (
        geom.face_doubled(from),
        geom.edge_doubled(e),
        geom.face_doubled(to),
    );
    let u: Vec<i32> = rem.iter().map(|&i| pe[i] - pf[i]).collect();
    let v: Vec<i32> = rem.iter().map(|&i| pt[i] - pe[i]).collect();
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let k = rem
        .iter()
        .position(|&i| i == geom.edge_axis(e).index())
        .expect("edge axis is not the cube's fixed axis");
    let d = match o {
        Orientation::Plus => 1,
        Orientation::Minus => -1,
    };
    let dot = n[k] * d;
    if dot == 0 {
        return Err(TopologyError::InconsistentOrientation(e.id()));
    }
    Ok(dot.signum() == cube_orientation_sign(cube_axis, value))
}

/// Builds all 192 paths from the geometry and the orientation convention.
///
/// Path 1 of each triplet is the one lying in the bounding cube across the
/// highest axis other than the center's own; paths 2 and 3 close the cycle
/// through the face spanned with that axis.
pub fn generate_table(geom: &CellGeometry) -> Result<PathTable, TopologyError> {
    let mut rows = Vec::with_capacity(EDGE_COUNT * 2);
    for e in EdgeId::all() {
        let axis = geom.edge_axis(e);
        let others: Vec<Axis> = Axis::ALL.into_iter().filter(|&a| a != axis).collect();
        let face = |a: Axis| {
            geom.face_along(e, a)
                .expect("edge spans a face with each other axis")
        };
        let (fa, fb, fc) = (face(others[0]), face(others[1]), face(others[2]));
        for o in [Orientation::Plus, Orientation::Minus] {
            let (p, q) = if path_follows_convention(geom, fa, e, fb, o)? {
                (fa, fb)
            } else {
                (fb, fa)
            };
            let paths = [
                Path {
                    from: p,
                    via: e,
                    to: q,
                },
                Path {
                    from: q,
                    via: e,
                    to: fc,
                },
                Path {
                    from: fc,
                    via: e,
                    to: p,
                },
            ];
            for path in &paths[1..] {
                if !path_follows_convention(geom, path.from, e, path.to, o)? {
                    return Err(TopologyError::InconsistentOrientation(e.id()));
                }
            }
            rows.push(PathTriplet {
                center: e,
                orientation: o,
                paths,
            });
        }
    }
    Ok(PathTable::from_rows(rows))
}
