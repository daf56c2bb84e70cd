#![allow(dead_code)]

use std::collections::BTreeMap;

use hyperiso_core::extraction::{extract_cell, ReducedCycle};
use hyperiso_core::field::{ExtractionConfig, Mode, ToxelField, SITE_OFFSETS};
use hyperiso_core::pipeline::cell_meshes;
use hyperiso_core::tessellation::{assemble, facets, CellMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MODES: [Mode; 3] = [Mode::Connect, Mode::Disconnect, Mode::Mixed];

/// Uniform samples in [0, 1) plus an isovalue drawn from [0.2, 0.8).
pub fn random_field(dims: [usize; 4], seed: u64) -> (ToxelField, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iso = rng.gen_range(0.2..0.8);
    let f = ToxelField::from_fn(dims, |_| rng.gen::<f64>()).unwrap();
    (f, iso)
}

pub fn negated(f: &ToxelField) -> ToxelField {
    let vals = f.scalar().iter().map(|v| -v).collect();
    ToxelField::new(f.dims(), vals).unwrap()
}

/// A 2^4 field whose single cell has the given active sites.
pub fn cell_field(sites: &[u8]) -> ToxelField {
    ToxelField::from_fn([2; 4], |c| {
        let on = sites.iter().any(|&s| {
            SITE_OFFSETS[s as usize]
                .iter()
                .zip(&c)
                .all(|(&o, &x)| o as usize == x)
        });
        if on {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Tets of every section of a single-cell field, keyed by section.
pub fn tets_per_section(sites: &[u8], mode: Mode) -> Vec<usize> {
    let cfg = ExtractionConfig::new(0.5).with_mode(mode);
    let cells = cell_meshes(&cell_field(sites), &cfg).unwrap();
    let mut per: BTreeMap<u32, usize> = BTreeMap::new();
    for cm in &cells {
        for (_, s) in &cm.tets {
            *per.entry(*s).or_default() += 1;
        }
    }
    per.into_values().collect()
}

fn parity(mut v: [usize; 4]) -> bool {
    let mut even = true;
    for i in 0..4 {
        for j in 0..3 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                even = !even;
            }
        }
    }
    even
}

/// Tets as (sorted global vertex ids, orientation parity), with vertices
/// identified by exact position through `ids`. Section numbering may differ
/// between extractions, so keys are not compared.
fn oriented_tets(
    cells: Vec<CellMesh>,
    ids: &mut BTreeMap<[u64; 4], usize>,
) -> Vec<([usize; 4], bool)> {
    let mut out = Vec::new();
    for cm in cells {
        let local: Vec<usize> = cm
            .vertices
            .iter()
            .map(|v| {
                let n = ids.len();
                *ids.entry(v.pos.map(f64::to_bits)).or_insert(n)
            })
            .collect();
        for (t, _) in cm.tets {
            let g = t.map(|i| local[i as usize]);
            let mut s = g;
            s.sort_unstable();
            out.push((s, parity(g)));
        }
    }
    out.sort_unstable();
    out
}

fn cell_cycles(
    field: &ToxelField,
    cfg: &ExtractionConfig,
    reverse: bool,
) -> Vec<Vec<ReducedCycle>> {
    field
        .cells(cfg)
        .map(|(base, pattern)| {
            let x = extract_cell(&pattern, cfg, field.data_coords(base)).unwrap();
            let mut cs: Vec<ReducedCycle> = x
                .cycles()
                .map(|c| if reverse { c.reversed() } else { c.clone() }.canonical())
                .collect();
            cs.sort();
            cs
        })
        .collect()
}

/// Compares the extraction of `field` at `iso` under `mode` with that of the
/// negated field at `-iso` under the dual mode, over every cell of the grid.
pub fn complement_check(field: &ToxelField, iso: f64, mode: Mode) -> Result<(), String> {
    let a_cfg = ExtractionConfig::new(iso).with_mode(mode);
    let neg = negated(field);
    let b_cfg = ExtractionConfig::new(-iso).with_mode(mode.dual());
    if cell_cycles(field, &a_cfg, true) != cell_cycles(&neg, &b_cfg, false) {
        return Err("cycles are not reversed".into());
    }
    let mut ids = BTreeMap::new();
    let a = oriented_tets(
        cell_meshes(field, &a_cfg).map_err(|e| e.to_string())?,
        &mut ids,
    );
    let b = oriented_tets(
        cell_meshes(&neg, &b_cfg).map_err(|e| e.to_string())?,
        &mut ids,
    );
    if a.len() != b.len() {
        return Err(format!("{} tets vs {}", a.len(), b.len()));
    }
    let tris = |ts: &[([usize; 4], bool)]| {
        let mut v: Vec<[u32; 3]> = ts
            .iter()
            .flat_map(|(t, _)| facets(t.map(|i| i as u32)).map(|(f, _)| f))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    if tris(&a) != tris(&b) {
        return Err("undirected triangle sets differ".into());
    }
    for (x, y) in a.iter().zip(&b) {
        if x.0 != y.0 || x.1 == y.1 {
            return Err(format!("tet {:?} is not reversed", x.0));
        }
    }
    Ok(())
}

/// Assembled mesh of the unpadded grid, for checks that need global indices.
pub fn raw_mesh(
    field: &ToxelField,
    cfg: &ExtractionConfig,
) -> hyperiso_core::tessellation::TetMesh4 {
    assemble(Vec::new(), cell_meshes(field, cfg).unwrap()).unwrap()
}

/// A 2^4 field holding one cell's site samples.
pub fn cell_field_values(values: &[f64; 16]) -> ToxelField {
    ToxelField::from_fn([2; 4], |c| {
        let s = SITE_OFFSETS
            .iter()
            .position(|o| o.iter().zip(&c).all(|(&o, &x)| o as usize == x))
            .unwrap();
        values[s]
    })
    .unwrap()
}
