//! Filling of sections whose boundary surface has positive genus.
//!
//! Coning a genus-g surface from a single center leaves a vertex whose link
//! is that surface. Instead g vertex-disjoint loops are chosen whose union
//! does not separate the surface. Each loop is capped by one disk per side,
//! which turns the cut surface into a sphere. A collar joins that sphere to an
//! inner copy coned from a core vertex, and a handle coned from its own center
//! fills the space between the two disks of each loop.

use std::collections::BTreeMap;

use rustc_hash::FxHashSet;

/// Oriented triangle of a section surface over local vertex ids.
pub type Tri = [u32; 3];

/// Euler characteristic of a closed triangulated surface.
pub fn euler(tris: &[Tri]) -> i64 {
    let mut verts: Vec<u32> = tris.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    let mut edges: Vec<[u32; 2]> = tris.iter().flat_map(|t| tri_edges(t)).collect();
    edges.sort_unstable();
    edges.dedup();
    verts.len() as i64 - edges.len() as i64 + tris.len() as i64
}

fn tri_edges(t: &Tri) -> [[u32; 2]; 3] {
    [0, 1, 2].map(|i| sorted(t[i], t[(i + 1) % 3]))
}

fn sorted(a: u32, b: u32) -> [u32; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Dense copy of a closed surface.
struct Surface {
    tris: Vec<[u32; 3]>,
    edge_tris: Vec<[u32; 2]>,
    /// Edge id of each vertex pair, `u32::MAX` if absent.
    eid: Vec<u32>,
    /// Neighbor set of each vertex as a bit mask.
    nbrs: Vec<u64>,
    /// Original id of each dense vertex.
    ids: Vec<u32>,
    /// Homology class of each edge over Z/2: a cycle's class is the sum of
    /// its edges' classes.
    class: Vec<u64>,
}

const NONE: u32 = u32::MAX;

/// Set bits of a mask in increasing order.
fn bits(mut m: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let b = m.trailing_zeros();
            m &= m - 1;
            b
        })
    })
}

impl Surface {
    fn new(input: &[Tri]) -> Option<Self> {
        let mut ids: Vec<u32> = input.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let nv = ids.len();
        if nv > 64 {
            return None;
        }
        let dense = |v: u32| ids.binary_search(&v).expect("vertex present") as u32;
        let tris: Vec<[u32; 3]> = input.iter().map(|t| t.map(dense)).collect();
        let mut eid = vec![NONE; nv * nv];
        let mut edge_tris: Vec<[u32; 2]> = Vec::new();
        let mut nbrs = vec![0u64; nv];
        for (ti, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k] as usize, t[(k + 1) % 3] as usize);
                let slot = a.min(b) * nv + a.max(b);
                if eid[slot] == NONE {
                    eid[slot] = edge_tris.len() as u32;
                    edge_tris.push([ti as u32, NONE]);
                    nbrs[a] |= 1 << b;
                    nbrs[b] |= 1 << a;
                } else {
                    let e = &mut edge_tris[eid[slot] as usize];
                    if e[1] != NONE {
                        return None;
                    }
                    e[1] = ti as u32;
                }
            }
        }
        if edge_tris.len() > 256 || edge_tris.iter().any(|e| e[1] == NONE) {
            return None;
        }
        let mut s = Surface {
            tris,
            edge_tris,
            eid,
            nbrs,
            ids,
            class: Vec::new(),
        };
        s.class = s.edge_classes()?;
        Some(s)
    }

    /// Edge classes from a tree-cotree decomposition: tree edges are zero,
    /// each leftover edge is a generator, and cotree edges are solved from
    /// the triangles, leaves first. `None` for a disconnected surface or
    /// beyond 64 generators.
    fn edge_classes(&self) -> Option<Vec<u64>> {
        let (nv, ne, nt) = (self.nv(), self.edge_tris.len(), self.tris.len());
        let mut tree = vec![false; ne];
        let mut reached = vec![false; nv];
        let mut order = vec![0u32];
        reached[0] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for n in bits(self.nbrs[v as usize]) {
                if !reached[n as usize] {
                    reached[n as usize] = true;
                    tree[self.edge(v, n)] = true;
                    order.push(n);
                }
            }
        }
        if order.len() != nv {
            return None;
        }
        let mut cotree = vec![false; ne];
        let mut up = vec![usize::MAX; nt];
        let mut seen = vec![false; nt];
        let mut faces = vec![0usize];
        seen[0] = true;
        let mut head = 0;
        while head < faces.len() {
            let f = faces[head];
            head += 1;
            let t = self.tris[f];
            for k in 0..3 {
                let e = self.edge(t[k], t[(k + 1) % 3]);
                if tree[e] {
                    continue;
                }
                let [a, b] = self.edge_tris[e];
                let g = if a as usize == f { b } else { a } as usize;
                if !seen[g] {
                    seen[g] = true;
                    cotree[e] = true;
                    up[g] = e;
                    faces.push(g);
                }
            }
        }
        let mut class = vec![0u64; ne];
        let mut next = 0;
        for e in 0..ne {
            if !tree[e] && !cotree[e] {
                if next == 64 {
                    return None;
                }
                class[e] = 1 << next;
                next += 1;
            }
        }
        for &f in faces.iter().skip(1).rev() {
            let t = self.tris[f];
            let mut sum = 0;
            for k in 0..3 {
                let e = self.edge(t[k], t[(k + 1) % 3]);
                if e != up[f] {
                    sum ^= class[e];
                }
            }
            class[up[f]] = sum;
        }
        Some(class)
    }

    fn nv(&self) -> usize {
        self.ids.len()
    }

    fn edge(&self, a: u32, b: u32) -> usize {
        let nv = self.nv();
        let (a, b) = (a.min(b) as usize, a.max(b) as usize);
        self.eid[a * nv + b] as usize
    }

    /// Non-separating fundamental cycles of the breadth-first tree from
    /// `root` avoiding `forbidden` vertices, shortest first, skipping edge
    /// sets in `seen`.
    fn root_loops(&self, root: u32, forbidden: u64, seen: &mut FxHashSet<[u64; 4]>) -> Vec<Loop> {
        let nv = self.nv();
        let free = |v: u32| forbidden & (1 << v) == 0;
        let mut out: Vec<Loop> = Vec::new();
        if !free(root) {
            return out;
        }
        let mut parent = vec![NONE; nv];
        let mut depth = vec![0u32; nv];
        // Class of the tree path from the root.
        let mut prefix = vec![0u64; nv];
        parent[root as usize] = root;
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for n in bits(self.nbrs[v as usize]) {
                if free(n) && parent[n as usize] == NONE {
                    parent[n as usize] = v;
                    depth[n as usize] = depth[v as usize] + 1;
                    prefix[n as usize] = prefix[v as usize] ^ self.class[self.edge(v, n)];
                    order.push(n);
                }
            }
        }
        for &u in &order {
            for w in bits(self.nbrs[u as usize]) {
                if u > w
                    || parent[w as usize] == NONE
                    || parent[u as usize] == w
                    || parent[w as usize] == u
                {
                    continue;
                }
                let class = prefix[u as usize] ^ prefix[w as usize] ^ self.class[self.edge(u, w)];
                if class == 0 {
                    continue;
                }
                let (mut a, mut b) = (vec![u], vec![w]);
                let (mut x, mut y) = (u, w);
                while x != y {
                    if depth[x as usize] >= depth[y as usize] {
                        x = parent[x as usize];
                        a.push(x);
                    } else {
                        y = parent[y as usize];
                        b.push(y);
                    }
                }
                b.pop();
                b.reverse();
                a.extend(b);
                let mut key = [0u64; 4];
                for i in 0..a.len() {
                    let e = self.edge(a[i], a[(i + 1) % a.len()]);
                    key[e / 64] |= 1 << (e % 64);
                }
                if seen.insert(key) {
                    let mask = a.iter().fold(0u64, |m, &v| m | (1 << v));
                    out.push(Loop {
                        verts: a,
                        mask,
                        class,
                    });
                }
            }
        }
        out.sort_by_key(|l| l.verts.len());
        out
    }
}

/// A simple loop in the surface's edge graph.
#[derive(Debug, Clone)]
struct Loop {
    verts: Vec<u32>,
    mask: u64,
    class: u64,
}

/// Depth-first search for non-separating loops.
struct Search<'s> {
    s: &'s Surface,
    genus: usize,
    budget: usize,
    /// Whether loops come from trees of the whole surface, generated once
    /// per root, rather than from trees avoiding the vertices used so far.
    fixed: bool,
    /// Per-root loops of the whole surface, filled on demand.
    cache: Vec<Option<Vec<Loop>>>,
    seen: FxHashSet<[u64; 4]>,
}

impl Search<'_> {
    /// Candidate loops from one root that avoid `forbidden`.
    fn candidates(&mut self, root: u32, forbidden: u64) -> Vec<Loop> {
        if !self.fixed {
            return self
                .s
                .root_loops(root, forbidden, &mut FxHashSet::default());
        }
        let r = root as usize;
        if self.cache[r].is_none() {
            self.cache[r] = Some(self.s.root_loops(root, 0, &mut self.seen));
        }
        self.cache[r]
            .iter()
            .flatten()
            .filter(|l| l.mask & forbidden == 0)
            .cloned()
            .collect()
    }

    /// `basis` holds the taken classes in echelon form, each with a
    /// distinct leading bit.
    fn run(&mut self, loops: &mut Vec<Loop>, basis: &mut Vec<u64>, forbidden: u64) -> bool {
        if loops.len() == self.genus {
            return true;
        }
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        for root in 0..self.s.nv() as u32 {
            for l in self.candidates(root, forbidden) {
                let reduced = basis.iter().fold(l.class, |c, &b| c.min(c ^ b));
                if reduced != 0 {
                    let mask = l.mask;
                    loops.push(l);
                    basis.push(reduced);
                    basis.sort_unstable_by(|a, b| b.cmp(a));
                    if self.run(loops, basis, forbidden | mask) {
                        return true;
                    }
                    basis.retain(|&b| b != reduced);
                    loops.pop();
                }
                if self.budget == 0 {
                    return false;
                }
            }
        }
        false
    }
}

/// Search nodes visited per strategy before [`find_loops`] gives up.
const SEARCH_BUDGET: usize = 4096;

/// Finds `g` vertex-disjoint simple loops on a closed connected oriented
/// surface of genus `g` whose union leaves the surface connected. Loops of
/// the whole surface are tried first, then loops rerouted around those
/// already taken. `None` if the input is not such a surface or both bounded
/// searches fail.
pub fn find_loops(input: &[Tri]) -> Option<Vec<Vec<u32>>> {
    let s = Surface::new(input)?;
    let chi = s.nv() as i64 - s.edge_tris.len() as i64 + s.tris.len() as i64;
    if chi > 2 || chi % 2 != 0 {
        return None;
    }
    let genus = ((2 - chi) / 2) as usize;
    for fixed in [true, false] {
        let mut search = Search {
            s: &s,
            genus,
            budget: SEARCH_BUDGET,
            fixed,
            cache: vec![None; s.nv()],
            seen: FxHashSet::default(),
        };
        let mut loops = Vec::new();
        if search.run(&mut loops, &mut Vec::new(), 0) {
            return Some(
                loops
                    .into_iter()
                    .map(|l| l.verts.into_iter().map(|v| s.ids[v as usize]).collect())
                    .collect(),
            );
        }
    }
    None
}

/// Vertex of a filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    /// Surface vertex by input id.
    Surface(u32),
    /// Interior vertex by index into [`Handlebody::inner`].
    Inner(u32),
}

/// Placement of an interior vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum Inner {
    /// Cone center of the inner sphere, placed by the caller.
    Core,
    /// Affine combination of surface vertices and earlier interior vertices.
    Mix(Vec<(Node, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handlebody {
    pub loops: Vec<Vec<u32>>,
    pub inner: Vec<Inner>,
    /// Oriented like `[apex, a, b, c]` over a surface triangle `[a, b, c]`.
    pub tets: Vec<[Node; 4]>,
}

/// Handlebody filling of a closed oriented surface, or `None` when no loop
/// system is found.
pub fn handlebody(input: &[Tri]) -> Option<Handlebody> {
    let loops = find_loops(input)?;
    Some(fill(input, loops))
}

/// Collar slot: a vertex of the capped cut surface, with its outer position
/// and its inner copy.
struct Slot {
    outer: Node,
    inner: Node,
}

fn fill(input: &[Tri], loops: Vec<Vec<u32>>) -> Handlebody {
    let core = Node::Inner(0);
    let mut inner = vec![Inner::Core];
    let mut add = |mix: Vec<(Node, f64)>| {
        inner.push(Inner::Mix(mix));
        Node::Inner(inner.len() as u32 - 1)
    };
    let mut tri_of: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (i, t) in input.iter().enumerate() {
        for k in 0..3 {
            tri_of.insert((t[k], t[(k + 1) % 3]), i);
        }
    }
    let third = |t: usize, x: u32, y: u32| {
        *input[t]
            .iter()
            .find(|&&v| v != x && v != y)
            .expect("triangles have three vertices")
    };

    // Triangles at a loop vertex on the left of the loop, found by turning
    // from the outgoing loop edge to the incoming one.
    let mut left: FxHashSet<(usize, u32)> = FxHashSet::default();
    let mut on_loop: BTreeMap<u32, usize> = BTreeMap::new();
    for (li, l) in loops.iter().enumerate() {
        let n = l.len();
        for k in 0..n {
            let (w, x, y) = (l[(k + n - 1) % n], l[k], l[(k + 1) % n]);
            on_loop.insert(x, li);
            let mut t = tri_of[&(x, y)];
            loop {
                left.insert((t, x));
                // Incoming edge `z -> x` of `t`.
                let p = input[t].iter().position(|&v| v == x).expect("x in t");
                let z = input[t][(p + 2) % 3];
                if z == w {
                    break;
                }
                t = tri_of[&(x, z)];
            }
        }
    }

    let mut slots: Vec<Slot> = Vec::new();
    let mut slot_of: BTreeMap<(u32, u8), usize> = BTreeMap::new();
    let mut handles = Vec::with_capacity(loops.len());
    for l in &loops {
        let n = l.len() as f64;
        let mut disks = [core; 2];
        for (side, disk) in disks.iter_mut().enumerate() {
            let mut mix: Vec<(Node, f64)> = l
                .iter()
                .map(|&v| (Node::Surface(v), 2.0 / (3.0 * n)))
                .collect();
            for k in 0..l.len() {
                let (x, y) = (l[k], l[(k + 1) % l.len()]);
                let t = if side == 0 {
                    tri_of[&(x, y)]
                } else {
                    tri_of[&(y, x)]
                };
                mix.push((Node::Surface(third(t, x, y)), 1.0 / (3.0 * n)));
            }
            *disk = add(mix);
        }
        let center = add(vec![(disks[0], 0.5), (disks[1], 0.5)]);
        handles.push((disks, center));
    }
    let mut verts: Vec<u32> = input.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    for &v in &verts {
        let outer = Node::Surface(v);
        match on_loop.get(&v) {
            None => {
                slot_of.insert((v, 0), slots.len());
                let inner = add(vec![(outer, 2.0 / 3.0), (core, 1.0 / 3.0)]);
                slots.push(Slot { outer, inner });
            }
            Some(&li) => {
                for side in 0..2u8 {
                    slot_of.insert((v, side), slots.len());
                    let disk = handles[li].0[side as usize];
                    let third = 1.0 / 3.0;
                    let inner = add(vec![(outer, third), (disk, third), (core, third)]);
                    slots.push(Slot { outer, inner });
                }
            }
        }
    }
    let mut disk_slots = Vec::with_capacity(loops.len());
    for (disks, _) in &handles {
        disk_slots.push(disks.map(|d| {
            let inner = add(vec![(d, 2.0 / 3.0), (core, 1.0 / 3.0)]);
            slots.push(Slot { outer: d, inner });
            slots.len() - 1
        }));
    }

    // The capped cut surface over slots.
    let mut sphere: Vec<[usize; 3]> = Vec::with_capacity(input.len());
    for (i, t) in input.iter().enumerate() {
        sphere.push(t.map(|v| {
            let side = u8::from(on_loop.contains_key(&v) && !left.contains(&(i, v)));
            slot_of[&(v, side)]
        }));
    }
    for (li, l) in loops.iter().enumerate() {
        let [d0, d1] = disk_slots[li];
        for k in 0..l.len() {
            let (x, y) = (l[k], l[(k + 1) % l.len()]);
            sphere.push([d0, slot_of[&(y, 0)], slot_of[&(x, 0)]]);
            sphere.push([d1, slot_of[&(x, 1)], slot_of[&(y, 1)]]);
        }
    }

    let mut tets = Vec::with_capacity(4 * sphere.len());
    for t in &sphere {
        let mut p = *t;
        p.sort_unstable();
        let even = (0..3).any(|r| [t[r], t[(r + 1) % 3], t[(r + 2) % 3]] == p);
        let (o, i) = (|k: usize| slots[p[k]].outer, |k: usize| slots[p[k]].inner);
        let staircase = [
            [o(0), i(0), i(1), i(2)],
            [o(0), o(1), i(1), i(2)],
            [o(0), o(1), o(2), i(2)],
        ];
        for (k, mut tet) in staircase.into_iter().enumerate() {
            if even == (k != 1) {
                tet.swap(0, 1);
            }
            tets.push(tet);
        }
        tets.push([
            core,
            slots[t[0]].inner,
            slots[t[1]].inner,
            slots[t[2]].inner,
        ]);
    }
    for (l, (disks, center)) in loops.iter().zip(&handles) {
        for k in 0..l.len() {
            let (x, y) = (Node::Surface(l[k]), Node::Surface(l[(k + 1) % l.len()]));
            tets.push([*center, disks[0], x, y]);
            tets.push([*center, disks[1], y, x]);
        }
    }
    Handlebody { loops, inner, tets }
}

/// Oriented triangle with its smallest vertex first.
fn oriented(t: [Node; 3]) -> [Node; 3] {
    let r = (0..3).min_by_key(|&k| t[k]).expect("three vertices");
    [t[r], t[(r + 1) % 3], t[(r + 2) % 3]]
}

/// Facets of an oriented tet with induced orientation.
fn tet_facets(t: &[Node; 4]) -> [[Node; 3]; 4] {
    [
        [t[1], t[2], t[3]],
        [t[0], t[3], t[2]],
        [t[0], t[1], t[3]],
        [t[0], t[2], t[1]],
    ]
}

/// Checks that `fill` is an oriented 3-manifold triangulation whose boundary
/// is exactly `surface`, with spherical or disk vertex links and the Euler
/// characteristic of a handlebody.
pub fn check_filling(surface: &[Tri], fill: &Handlebody) -> Result<(), String> {
    let mut faces: BTreeMap<[Node; 3], u32> = BTreeMap::new();
    let mut sets = FxHashSet::default();
    for t in &fill.tets {
        let mut s = *t;
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) || !sets.insert(s) {
            return Err(format!("degenerate or repeated tet {t:?}"));
        }
        for f in tet_facets(t) {
            *faces.entry(oriented(f)).or_default() += 1;
        }
    }
    let mut boundary: Vec<[Node; 3]> = Vec::new();
    for (f, &n) in &faces {
        let rev = oriented([f[0], f[2], f[1]]);
        let back = faces.get(&rev).copied().unwrap_or(0);
        match (n, back) {
            (1, 0) => boundary.push(*f),
            (1, 1) => {}
            _ => return Err(format!("triangle {f:?} in {n} tets, {back} reversed")),
        }
    }
    let mut expected: Vec<[Node; 3]> = surface
        .iter()
        .map(|t| oriented(t.map(Node::Surface)))
        .collect();
    expected.sort_unstable();
    boundary.sort_unstable();
    if expected != boundary {
        return Err("boundary differs from the surface".into());
    }

    let mut links: BTreeMap<Node, Vec<[Node; 3]>> = BTreeMap::new();
    for t in &fill.tets {
        for k in 0..4 {
            let mut f = [0, 1, 2, 3].into_iter().filter(|&j| j != k).map(|j| t[j]);
            let f = [f.next().unwrap(), f.next().unwrap(), f.next().unwrap()];
            links.entry(t[k]).or_default().push(f);
        }
    }
    for (v, link) in &links {
        let want = if matches!(v, Node::Surface(_)) { 1 } else { 2 };
        let chi = link_euler(link)?;
        if chi != want {
            return Err(format!("link of {v:?} has euler characteristic {chi}"));
        }
    }

    let mut edges = FxHashSet::default();
    for t in &fill.tets {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.insert((t[a].min(t[b]), t[a].max(t[b])));
            }
        }
    }
    let chi = links.len() as i64 - edges.len() as i64
        + (faces.len() - boundary.len()) as i64 / 2
        + boundary.len() as i64
        - fill.tets.len() as i64;
    let genus = (2 - euler(surface)) / 2;
    if chi != 1 - genus {
        return Err(format!(
            "euler characteristic {chi}, expected {}",
            1 - genus
        ));
    }
    Ok(())
}

/// Euler characteristic of a connected link surface whose edges lie in at
/// most two triangles.
fn link_euler(link: &[[Node; 3]]) -> Result<i64, String> {
    let mut edges: BTreeMap<(Node, Node), u32> = BTreeMap::new();
    let mut verts: Vec<Node> = Vec::new();
    for t in link {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            verts.push(a);
        }
    }
    if edges.values().any(|&n| n > 2) {
        return Err("link edge in more than two triangles".into());
    }
    verts.sort_unstable();
    verts.dedup();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let idx = |v: &Node| verts.binary_search(v).expect("link vertex");
    for (a, b) in edges.keys() {
        let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
        parent[ra.max(rb)] = ra.min(rb);
    }
    if (0..verts.len()).any(|v| find(&mut parent, v) != 0) {
        return Err("disconnected link".into());
    }
    Ok(verts.len() as i64 - edges.len() as i64 + link.len() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triangulated torus on an `n x m` grid with wrap-around.
    fn torus(n: u32, m: u32) -> Vec<Tri> {
        let id = |i: u32, j: u32| (i % n) * m + (j % m);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                t.push([a, b, c]);
                t.push([a, c, d]);
            }
        }
        t
    }

    fn octahedron() -> Vec<Tri> {
        vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ]
    }

    fn filled(s: &[Tri], genus: usize) -> Handlebody {
        let h = handlebody(s).unwrap();
        assert_eq!(h.loops.len(), genus);
        check_filling(s, &h).unwrap();
        h
    }

    #[test]
    fn euler_of_known_surfaces() {
        assert_eq!(euler(&octahedron()), 2);
        assert_eq!(euler(&torus(4, 4)), 0);
    }

    #[test]
    fn sphere_fills_as_collared_ball() {
        let s = octahedron();
        let h = filled(&s, 0);
        assert_eq!(h.tets.len(), 4 * s.len());
    }

    #[test]
    fn tori_fill_as_solid_tori() {
        for (n, m) in [(6, 4), (3, 3), (4, 3), (5, 5)] {
            filled(&torus(n, m), 1);
        }
    }

    #[test]
    fn loops_are_disjoint_and_simple() {
        let h = filled(&torus(3, 4), 1);
        let mut seen = FxHashSet::default();
        for l in &h.loops {
            assert!(l.len() >= 3);
            for v in l {
                assert!(seen.insert(*v));
            }
        }
    }

    #[test]
    fn pinched_cone_is_rejected() {
        let s = torus(4, 4);
        let cone = Handlebody {
            loops: Vec::new(),
            inner: vec![Inner::Core],
            tets: s
                .iter()
                .map(|t| {
                    let [a, b, c] = t.map(Node::Surface);
                    [Node::Inner(0), a, b, c]
                })
                .collect(),
        };
        assert!(check_filling(&s, &cone).is_err());
    }

    #[test]
    fn open_or_disconnected_input_has_no_loops() {
        let mut s = octahedron();
        s.pop();
        assert!(find_loops(&s).is_none());
        let mut two = octahedron();
        two.extend(octahedron().into_iter().map(|t| t.map(|v| v + 10)));
        assert!(find_loops(&two).is_none());
    }

    /// Flips triangles so neighbors traverse shared edges oppositely.
    fn orient(mut t: Vec<Tri>) -> Vec<Tri> {
        let mut done = vec![false; t.len()];
        done[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for k in 0..3 {
                let (a, b) = (t[i][k], t[i][(k + 1) % 3]);
                for j in 0..t.len() {
                    if done[j] || !t[j].contains(&a) || !t[j].contains(&b) {
                        continue;
                    }
                    let same = (0..3).any(|m| t[j][m] == a && t[j][(m + 1) % 3] == b);
                    if same {
                        t[j] = [t[j][0], t[j][2], t[j][1]];
                    }
                    done[j] = true;
                    stack.push(j);
                }
            }
        }
        t
    }

    #[test]
    fn double_torus_fills() {
        // Connected sum of two tori through a triangular tube.
        let a = torus(4, 4);
        let b: Vec<Tri> = torus(4, 4)
            .into_iter()
            .map(|t| t.map(|v| v + 100))
            .collect();
        let mut s: Vec<Tri> = a[1..].to_vec();
        s.extend(b.iter().skip(1).copied());
        let (h0, h1) = (a[0], b[0]);
        for k in 0..3 {
            let (x0, y0) = (h0[k], h0[(k + 1) % 3]);
            let (x1, y1) = (h1[k], h1[(k + 1) % 3]);
            s.push([y0, x0, x1]);
            s.push([y0, x1, y1]);
        }
        let s = orient(s);
        assert_eq!(euler(&s), -2);
        filled(&s, 2);
    }
}
