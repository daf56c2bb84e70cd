//! Per-cell protomesh construction.
//!
//! Every active -> inactive transition inside a 4-cell contributes one
//! boundary-volume octant, i.e. three directed `face -> edge -> face` paths
//! from the path table. Paths are chained at the connectivity points (face
//! centers) into initial cycles; dropping the face centers leaves reduced
//! cycles over support points, which are grouped into closed sections.

use thiserror::Error;

use crate::field::{CellPattern, ExtractionConfig, Mode};
use crate::topology::{
    CellGeometry, EdgeId, FaceId, Orientation, PathTable, SiteId, EDGE_COUNT, FACE_BASE, FACE_COUNT,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("face {face} has {incoming} incoming and {outgoing} outgoing segments")]
    UnbalancedFace {
        face: u8,
        incoming: usize,
        outgoing: usize,
    },
    #[error("no unique continuation for segment {segment} at face {face}")]
    NoContinuation { face: u8, segment: usize },
    #[error("segment chain starting at {0} does not close")]
    OpenChain(usize),
    #[error("directed support pair {from} -> {to} lacks its reverse within its section")]
    OpenSection { from: u8, to: u8 },
    #[error("reduced cycle of length {0} is outside the admissible set")]
    CycleLength(usize),
}

/// Admissible reduced cycle lengths.
pub const CYCLE_LENGTHS: [usize; 8] = [3, 4, 5, 6, 7, 8, 9, 12];

/// One directed half of an octant path: face -> edge or edge -> face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub from: u8,
    pub to: u8,
    pub octant: (EdgeId, Orientation),
}

impl Segment {
    pub fn edge(&self) -> EdgeId {
        self.octant.0
    }

    /// Active and inactive site of the segment's octant.
    pub fn sites(&self, geom: &CellGeometry) -> (SiteId, SiteId) {
        let [lo, hi] = geom.edge_sites(self.octant.0);
        match self.octant.1 {
            Orientation::Plus => (lo, hi),
            Orientation::Minus => (hi, lo),
        }
    }
}

/// Emits the six segments of every transition octant, ordered by edge id.
pub fn emit_octants(pattern: &CellPattern) -> Vec<Segment> {
    emit_octants_with(pattern, CellGeometry::canonical(), PathTable::transcribed())
}

pub fn emit_octants_with(
    pattern: &CellPattern,
    geom: &CellGeometry,
    table: &PathTable,
) -> Vec<Segment> {
    let mut out = Vec::new();
    for e in EdgeId::all() {
        let [lo, hi] = geom.edge_sites(e);
        let (a_lo, a_hi) = (pattern.is_active(lo), pattern.is_active(hi));
        if a_lo == a_hi {
            continue;
        }
        let o = if a_lo {
            Orientation::Plus
        } else {
            Orientation::Minus
        };
        for p in table.triplet(e, o).paths {
            out.push(Segment {
                from: p.from.id(),
                to: e.id(),
                octant: (e, o),
            });
            out.push(Segment {
                from: e.id(),
                to: p.to.id(),
                octant: (e, o),
            });
        }
    }
    out
}

/// Whether `f` is a point of ambiguity: diagonal corners share activity and
/// adjacent corners differ.
pub fn is_ambiguous_face(f: FaceId, pattern: &CellPattern, geom: &CellGeometry) -> bool {
    let c = geom.face_corners(f).map(|s| pattern.is_active(s));
    c[0] == c[2] && c[1] == c[3] && c[0] != c[1]
}

/// Connect/disconnect decision for an ambiguous face.
pub fn connects(
    f: FaceId,
    pattern: &CellPattern,
    config: &ExtractionConfig,
    geom: &CellGeometry,
) -> bool {
    match config.mode {
        Mode::Connect => true,
        Mode::Disconnect => false,
        Mode::Mixed => {
            let corners = geom.face_corners(f);
            // Ghost toxels stand for -inf, which drags the mean below any isovalue.
            if corners.iter().any(|s| pattern.is_ghost(*s)) {
                return false;
            }
            let sum: f64 = corners.iter().map(|s| pattern.values[s.index()]).sum();
            config.is_active(sum / 4.0)
        }
    }
}

/// Bit `slot` set for every ambiguous face resolved as connect.
pub fn ambiguity_decisions(pattern: &CellPattern, config: &ExtractionConfig) -> (u32, u32) {
    let geom = CellGeometry::canonical();
    let mut ambiguous = 0u32;
    let mut connect = 0u32;
    for f in FaceId::all() {
        if is_ambiguous_face(f, pattern, geom) {
            ambiguous |= 1 << f.slot();
            if connects(f, pattern, config, geom) {
                connect |= 1 << f.slot();
            }
        }
    }
    (ambiguous, connect)
}

/// Pairs every segment arriving at `f` with the segment leaving it.
///
/// Two transitions on the face give a single non-anti-parallel pairing. Four
/// transitions make `f` a point of ambiguity: disconnect follows the octant
/// sharing the incoming octant's active toxel, connect the one sharing its
/// inactive toxel.
pub fn resolve_face(
    f: FaceId,
    segments: &[Segment],
    pattern: &CellPattern,
    config: &ExtractionConfig,
) -> Result<Vec<(usize, usize)>, ExtractionError> {
    resolve_face_with(f, segments, pattern, config, CellGeometry::canonical())
}

pub fn resolve_face_with(
    f: FaceId,
    segments: &[Segment],
    pattern: &CellPattern,
    config: &ExtractionConfig,
    geom: &CellGeometry,
) -> Result<Vec<(usize, usize)>, ExtractionError> {
    let connect = is_ambiguous_face(f, pattern, geom) && connects(f, pattern, config, geom);
    pair_at_face(f, segments, connect, geom)
}

/// Face pairing with the ambiguity decision supplied by the caller.
pub fn pair_at_face(
    f: FaceId,
    segments: &[Segment],
    connect: bool,
    geom: &CellGeometry,
) -> Result<Vec<(usize, usize)>, ExtractionError> {
    let id = f.id();
    let incoming: Vec<usize> = (0..segments.len())
        .filter(|&i| segments[i].to == id)
        .collect();
    let outgoing: Vec<usize> = (0..segments.len())
        .filter(|&i| segments[i].from == id)
        .collect();
    let mut pairs = Vec::with_capacity(incoming.len());
    pair_lists(
        id, segments, &incoming, &outgoing, connect, geom, &mut pairs,
    )?;
    Ok(pairs)
}

fn pair_lists(
    id: u8,
    segments: &[Segment],
    incoming: &[usize],
    outgoing: &[usize],
    connect: bool,
    geom: &CellGeometry,
    pairs: &mut Vec<(usize, usize)>,
) -> Result<(), ExtractionError> {
    if incoming.len() != outgoing.len() || !matches!(incoming.len(), 0 | 2 | 4) {
        return Err(ExtractionError::UnbalancedFace {
            face: id,
            incoming: incoming.len(),
            outgoing: outgoing.len(),
        });
    }
    for &i in incoming {
        let seg = segments[i];
        let (active, inactive) = seg.sites(geom);
        let mut found = None;
        for &o in outgoing {
            let next = segments[o];
            // Never continue along the anti-parallel segment.
            if next.to == seg.from {
                continue;
            }
            if incoming.len() == 4 {
                let [a, b] = geom.edge_sites(next.edge());
                let key = if connect { inactive } else { active };
                if a != key && b != key {
                    continue;
                }
            }
            if found.replace(o).is_some() {
                return Err(ExtractionError::NoContinuation {
                    face: id,
                    segment: i,
                });
            }
        }
        match found {
            Some(o) => pairs.push((i, o)),
            None => {
                return Err(ExtractionError::NoContinuation {
                    face: id,
                    segment: i,
                })
            }
        }
    }
    Ok(())
}

/// Cyclic list of point ids alternating face and edge centers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialCycle {
    pub points: Vec<u8>,
}

/// Cyclic list of support points (edge ids).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedCycle {
    pub edges: Vec<EdgeId>,
}

impl ReducedCycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Directed support pairs `(e[i], e[i+1])`, wrapping around.
    pub fn directed_pairs(&self) -> impl Iterator<Item = (EdgeId, EdgeId)> + '_ {
        let n = self.edges.len();
        (0..n).map(move |i| (self.edges[i], self.edges[(i + 1) % n]))
    }

    /// Rotation starting at the smallest id.
    pub fn canonical(&self) -> ReducedCycle {
        let n = self.edges.len();
        let start = (0..n).min_by_key(|&i| self.edges[i]).unwrap_or(0);
        ReducedCycle {
            edges: (0..n).map(|i| self.edges[(start + i) % n]).collect(),
        }
    }

    pub fn reversed(&self) -> ReducedCycle {
        let mut edges = self.edges.clone();
        edges.reverse();
        ReducedCycle { edges }
    }
}

/// Chains the paired segments into disjoint cycles covering every segment.
pub fn stitch(
    segments: &[Segment],
    pairings: &[(usize, usize)],
) -> Result<Vec<InitialCycle>, ExtractionError> {
    stitch_with(segments, pairings, PathTable::transcribed())
}

pub fn stitch_with(
    segments: &[Segment],
    pairings: &[(usize, usize)],
    table: &PathTable,
) -> Result<Vec<InitialCycle>, ExtractionError> {
    let n = segments.len();
    let mut next = vec![usize::MAX; n];
    for &(i, o) in pairings {
        next[i] = o;
    }
    // At edge centers the octant's own path links face -> edge -> face.
    for i in 0..n {
        let s = segments[i];
        if s.to >= FACE_BASE {
            continue;
        }
        let (e, o) = s.octant;
        let target = table
            .triplet(e, o)
            .paths
            .iter()
            .find(|p| p.from.id() == s.from)
            .map(|p| p.to.id());
        let Some(t) = target else {
            return Err(ExtractionError::OpenChain(i));
        };
        let leaves = |j: usize| segments[j].from == s.to && segments[j].to == t;
        // Emission order puts the continuation right after its segment.
        next[i] = if i + 1 < n && leaves(i + 1) {
            i + 1
        } else {
            (0..n)
                .find(|&j| leaves(j))
                .ok_or(ExtractionError::OpenChain(i))?
        };
    }
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut points = Vec::new();
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            points.push(segments[cur].from);
            cur = next[cur];
            if cur == usize::MAX {
                return Err(ExtractionError::OpenChain(start));
            }
        }
        if cur != start {
            return Err(ExtractionError::OpenChain(start));
        }
        cycles.push(InitialCycle { points });
    }
    Ok(cycles)
}

/// Drops the connectivity points of an initial cycle.
pub fn reduce(c: &InitialCycle) -> ReducedCycle {
    ReducedCycle {
        edges: c
            .points
            .iter()
            .filter(|&&p| p < FACE_BASE)
            .map(|&p| EdgeId::from_raw(p))
            .collect(),
    }
}

/// A closed polyhedron produced within one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub cycles: Vec<ReducedCycle>,
    /// Cell base index in the data frame.
    pub cell: [i64; 4],
}

impl Section {
    pub fn support_points(&self) -> Vec<EdgeId> {
        let mut pts: Vec<EdgeId> = self
            .cycles
            .iter()
            .flat_map(|c| c.edges.iter().copied())
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// Euler characteristic of the closed surface formed by the cycles.
    pub fn euler(&self) -> i64 {
        let pairs: usize = self.cycles.iter().map(ReducedCycle::len).sum();
        self.support_points().len() as i64 - (pairs / 2) as i64 + self.cycles.len() as i64
    }

    pub fn is_tetrahedron(&self) -> bool {
        self.cycles.len() == 4 && self.cycles.iter().all(|c| c.len() == 3)
    }
}

/// Groups cycles connected through shared support pairs and checks that
/// each group is a closed oriented polyhedron.
pub fn group_sections(
    cycles: &[ReducedCycle],
    cell: [i64; 4],
) -> Result<Vec<Section>, ExtractionError> {
    group_owned(cycles.to_vec(), cell)
}

fn group_owned(cycles: Vec<ReducedCycle>, cell: [i64; 4]) -> Result<Vec<Section>, ExtractionError> {
    let n = cycles.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    // Owner cycle of each undirected support pair.
    let mut owner = [[u16::MAX; EDGE_COUNT]; EDGE_COUNT];
    for (ci, c) in cycles.iter().enumerate() {
        for (a, b) in c.directed_pairs() {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let slot = &mut owner[lo.index()][hi.index()];
            if *slot == u16::MAX {
                *slot = ci as u16;
            } else {
                let (ra, rb) = (find(&mut parent, *slot as usize), find(&mut parent, ci));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut group_of = vec![usize::MAX; n];
    let mut sections: Vec<Section> = Vec::new();
    for (ci, cycle) in cycles.into_iter().enumerate() {
        let root = find(&mut parent, ci);
        if group_of[root] == usize::MAX {
            group_of[root] = sections.len();
            sections.push(Section {
                cycles: Vec::new(),
                cell,
            });
        }
        sections[group_of[root]].cycles.push(cycle);
    }
    for s in &sections {
        check_closed(s)?;
    }
    Ok(sections)
}

fn check_closed(s: &Section) -> Result<(), ExtractionError> {
    // Bit `b` of `out[a]` records the directed pair `a -> b`.
    let mut out = [0u32; EDGE_COUNT];
    for c in &s.cycles {
        for (a, b) in c.directed_pairs() {
            let bit = 1u32 << b.index();
            if out[a.index()] & bit != 0 {
                return Err(ExtractionError::OpenSection {
                    from: a.id(),
                    to: b.id(),
                });
            }
            out[a.index()] |= bit;
        }
    }
    for c in &s.cycles {
        for (a, b) in c.directed_pairs() {
            if out[b.index()] & (1 << a.index()) == 0 {
                return Err(ExtractionError::OpenSection {
                    from: a.id(),
                    to: b.id(),
                });
            }
        }
    }
    Ok(())
}

/// Everything extracted from one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellExtraction {
    pub initial: Vec<InitialCycle>,
    pub sections: Vec<Section>,
}

impl CellExtraction {
    pub fn cycles(&self) -> impl Iterator<Item = &ReducedCycle> {
        self.sections.iter().flat_map(|s| s.cycles.iter())
    }
}

/// Runs the whole per-cell pipeline: emit, resolve, stitch, reduce, group.
pub fn extract_cell(
    pattern: &CellPattern,
    config: &ExtractionConfig,
    cell: [i64; 4],
) -> Result<CellExtraction, ExtractionError> {
    let (_, connect) = ambiguity_decisions(pattern, config);
    extract_cell_decided(pattern, connect, cell)
}

/// Like [`extract_cell`], with bit `slot` of `connect` choosing connect at
/// each ambiguous face. Bits of unambiguous faces are ignored.
pub fn extract_cell_decided(
    pattern: &CellPattern,
    connect: u32,
    cell: [i64; 4],
) -> Result<CellExtraction, ExtractionError> {
    let geom = CellGeometry::canonical();
    let table = PathTable::transcribed();
    let segments = emit_octants_with(pattern, geom, table);
    let mut pairings = Vec::with_capacity(segments.len() / 2);
    let mut incoming = [[0usize; 4]; FACE_COUNT];
    let mut outgoing = [[0usize; 4]; FACE_COUNT];
    let mut counts = [(0usize, 0usize); FACE_COUNT];
    for (i, s) in segments.iter().enumerate() {
        let (list, n) = if s.to >= FACE_BASE {
            let slot = (s.to - FACE_BASE) as usize;
            (&mut incoming[slot], &mut counts[slot].0)
        } else {
            let slot = (s.from - FACE_BASE) as usize;
            (&mut outgoing[slot], &mut counts[slot].1)
        };
        if *n < 4 {
            list[*n] = i;
        }
        *n += 1;
    }
    for slot in 0..FACE_COUNT {
        let (ni, no) = counts[slot];
        if ni == 0 && no == 0 {
            continue;
        }
        let id = FACE_BASE + slot as u8;
        if ni > 4 || no > 4 {
            return Err(ExtractionError::UnbalancedFace {
                face: id,
                incoming: ni,
                outgoing: no,
            });
        }
        let c = connect & (1 << slot) != 0;
        pair_lists(
            id,
            &segments,
            &incoming[slot][..ni],
            &outgoing[slot][..no],
            c,
            geom,
            &mut pairings,
        )?;
    }
    let initial = stitch_with(&segments, &pairings, table)?;
    let reduced: Vec<ReducedCycle> = initial.iter().map(reduce).collect();
    for c in &reduced {
        if !CYCLE_LENGTHS.contains(&c.len()) {
            return Err(ExtractionError::CycleLength(c.len()));
        }
    }
    let sections = group_owned(reduced, cell)?;
    Ok(CellExtraction { initial, sections })
}
