//! Whole-grid extraction: per-cell work in parallel, merged in cell order.

use rayon::prelude::*;
use thiserror::Error;

use crate::extraction::{extract_cell, ExtractionError};
use crate::field::{ExtractionConfig, ToxelField};
use crate::tessellation::{assemble, tessellate_cell, CellMesh, TessellationError, TetMesh4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("cell {cell:?}: {source}")]
    Extraction {
        cell: [i64; 4],
        source: ExtractionError,
    },
    #[error(transparent)]
    Tessellation(#[from] TessellationError),
}

/// Extracts the closed tet mesh of `{f >= isovalue}`. The field is padded
/// with an inactive ghost layer first, so the result is closed even where
/// the active region touches the grid boundary. Runs on the current rayon
/// pool; the output does not depend on its size.
pub fn extract_mesh(
    field: &ToxelField,
    config: &ExtractionConfig,
) -> Result<TetMesh4, PipelineError> {
    let padded = field.pad_ghost();
    let cells = cell_meshes(&padded, config)?;
    let names = padded
        .aux_channels()
        .iter()
        .map(|a| a.name.clone())
        .collect();
    Ok(assemble(names, cells)?)
}

/// Per-cell meshes of every non-trivial cell, in lexicographic cell order.
pub fn cell_meshes(
    field: &ToxelField,
    config: &ExtractionConfig,
) -> Result<Vec<CellMesh>, PipelineError> {
    let results: Vec<Result<Option<CellMesh>, PipelineError>> = (0..field.cell_count())
        .into_par_iter()
        .map(|lin| {
            let base = field.cell_base(lin);
            let pattern = field.cell_pattern(base, config);
            if pattern.is_trivial() {
                return Ok(None);
            }
            let cell = field.data_coords(base);
            let x = extract_cell(&pattern, config, cell)
                .map_err(|source| PipelineError::Extraction { cell, source })?;
            Ok(Some(tessellate_cell(field, base, &pattern, &x, config)?))
        })
        .collect();
    results.into_iter().filter_map(Result::transpose).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::validate;

    fn single(dims: [usize; 4], at: [usize; 4]) -> ToxelField {
        ToxelField::from_fn(dims, |c| if c == at { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn single_toxel_is_a_sixteen_cell() {
        let m = extract_mesh(&single([3; 4], [1; 4]), &ExtractionConfig::new(0.5)).unwrap();
        assert_eq!(m.tets.len(), 16);
        assert_eq!(m.vertices.len(), 8);
        let r = validate(&m, 0.0);
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!((r.triangles, r.edges), (32, 24));
        assert_eq!(r.euler(), 0);
        assert_eq!(r.components.len(), 1);
    }

    #[test]
    fn single_toxel_normals_point_outward() {
        let m = extract_mesh(&single([3; 4], [1; 4]), &ExtractionConfig::new(0.5)).unwrap();
        for t in &m.tets {
            let p = m.tet_positions(t);
            let c: Vec<f64> = (0..4)
                .map(|k| p.iter().map(|v| v[k]).sum::<f64>() / 4.0 - 1.0)
                .collect();
            let d: f64 = (0..4).map(|k| c[k] * t.normal[k]).sum();
            assert!(d > 0.0);
            // Each facet of the cross-polytope has one support per axis, so
            // the outward normal has all components of equal magnitude.
            for k in 0..4 {
                assert!((t.normal[k].abs() - 0.5).abs() < 1e-12);
                assert_eq!(t.normal[k] > 0.0, c[k] > 0.0);
            }
        }
    }

    #[test]
    fn boundary_toxel_is_closed_by_ghosts() {
        let m = extract_mesh(&single([2; 4], [0; 4]), &ExtractionConfig::new(0.5)).unwrap();
        assert_eq!(m.tets.len(), 16);
        assert!(validate(&m, 0.0).passed());
    }

    #[test]
    fn inactive_field_is_empty() {
        let f = ToxelField::from_fn([3; 4], |_| 0.0).unwrap();
        assert!(extract_mesh(&f, &ExtractionConfig::new(0.5))
            .unwrap()
            .is_empty());
    }
}
