mod common;

use hyperiso_core::extraction::{extract_cell_decided, CellExtraction};
use hyperiso_core::field::{CellPattern, ExtractionConfig};
use hyperiso_core::handles::{check_filling, handlebody};
use hyperiso_core::tessellation::{section_triangles, tessellate_cell};
use hyperiso_core::topology::SITE_COUNT;

fn sites(bits: u16) -> Vec<u8> {
    (0..SITE_COUNT as u8)
        .filter(|s| bits & (1 << s) != 0)
        .collect()
}

/// Fills every positive-genus section combinatorially and geometrically.
fn check_cell(bits: u16, connect: u32) -> usize {
    let pattern = CellPattern::from_bits(bits);
    let x: CellExtraction = extract_cell_decided(&pattern, connect, [0; 4]).unwrap();
    let mut filled = 0;
    for s in x.sections.iter().filter(|s| s.euler() != 2) {
        let tris = section_triangles(s);
        let h = handlebody(&tris)
            .unwrap_or_else(|| panic!("no loops for pattern {bits:#06x} mask {connect:#x}"));
        assert_eq!(h.loops.len() as i64, (2 - s.euler()) / 2);
        if let Err(e) = check_filling(&tris, &h) {
            panic!("pattern {bits:#06x} mask {connect:#x}: {e}");
        }
        filled += 1;
    }
    if filled > 0 {
        let field = common::cell_field(&sites(bits));
        let config = ExtractionConfig::new(0.5);
        tessellate_cell(&field, [0; 4], &pattern, &x, &config)
            .unwrap_or_else(|e| panic!("pattern {bits:#06x} mask {connect:#x}: {e}"));
    }
    filled
}

#[test]
fn positive_genus_sections_of_pure_modes_are_handlebodies() {
    let mut filled = 0;
    for bits in 0..=u16::MAX {
        filled += check_cell(bits, 0) + check_cell(bits, u32::MAX);
    }
    assert!(filled > 0);
}

#[test]
fn genus_three_mixed_sections_are_handlebodies() {
    for (bits, connect) in [(11730, 547080), (23077, 10560579), (23460, 2187824)] {
        let x = extract_cell_decided(&CellPattern::from_bits(bits), connect, [0; 4]).unwrap();
        assert!(x.sections.iter().any(|s| s.euler() == -4));
        assert!(check_cell(bits, connect) > 0);
    }
}
