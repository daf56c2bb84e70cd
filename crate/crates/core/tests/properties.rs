use hyperiso_core::field::{ExtractionConfig, Mode, Placement, ToxelField};
use hyperiso_core::io::{load_volume, parse_st4, render_st4, save_volume};
use hyperiso_core::pipeline::extract_mesh;
use hyperiso_core::slicing::slice;
use hyperiso_core::tessellation::{validate, volume_tolerance};
use proptest::prelude::*;

const MODES: [Mode; 3] = [Mode::Connect, Mode::Disconnect, Mode::Mixed];

/// Small fields with samples on a 1/16 grid, so they survive f32 storage.
fn field() -> impl Strategy<Value = ToxelField> {
    prop::array::uniform4(2usize..=4).prop_flat_map(|dims| {
        let n: usize = dims.iter().product();
        prop::collection::vec(0u8..=16, n).prop_map(move |v| {
            ToxelField::new(dims, v.into_iter().map(|k| k as f64 / 16.0).collect()).unwrap()
        })
    })
}

fn config() -> impl Strategy<Value = ExtractionConfig> {
    (0.1f64..0.9, 0usize..3, any::<bool>()).prop_map(|(iso, m, mid)| {
        let p = if mid {
            Placement::Midpoint
        } else {
            Placement::Interpolate
        };
        ExtractionConfig::new(iso)
            .with_mode(MODES[m])
            .with_placement(p)
    })
}

fn linear(p: &[f64; 4]) -> f64 {
    2.0 * p[0] - 0.5 * p[1] + 0.25 * p[2] - 3.0 * p[3] + 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extracted_meshes_are_closed_manifolds(f in field(), cfg in config()) {
        let mesh = extract_mesh(&f, &cfg).unwrap();
        let report = validate(&mesh, volume_tolerance(f.spacing()));
        prop_assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn slices_are_closed(f in field(), cfg in config(), u in 0.0f64..1.0) {
        let mesh = extract_mesh(&f, &cfg).unwrap();
        let tau = u * (f.dims()[3] - 1) as f64;
        let cut = slice(&mesh, tau);
        prop_assert!(cut.check_closed().is_ok(), "tau {}", tau);
    }

    #[test]
    fn extraction_is_deterministic(f in field(), cfg in config()) {
        prop_assert_eq!(extract_mesh(&f, &cfg).unwrap(), extract_mesh(&f, &cfg).unwrap());
    }

    #[test]
    fn linear_aux_is_reproduced_at_every_vertex(f in field(), cfg in config()) {
        // Keep the boundary inactive so no support touches the ghost layer.
        let d = f.dims().map(|n| n + 2);
        let inner = |c: [usize; 4]| (0..4).all(|i| c[i] > 0 && c[i] + 1 < d[i]);
        let src = f;
        let mut f = ToxelField::from_fn(d, |c| {
            if inner(c) {
                src.value(c.map(|x| x - 1))
            } else {
                0.0
            }
        })
        .unwrap();
        let aux = ToxelField::from_fn(d, |c| linear(&c.map(|x| x as f64))).unwrap();
        f.add_aux("lin", aux.scalar().to_vec()).unwrap();
        let mesh = extract_mesh(&f, &cfg).unwrap();
        for v in &mesh.vertices {
            prop_assert!((v.attrs[0] - linear(&v.pos)).abs() < 1e-9, "{:?}", v);
        }
    }

    #[test]
    fn st4_round_trip_preserves_mesh(f in field(), cfg in config()) {
        let mesh = extract_mesh(&f, &cfg).unwrap();
        let back = parse_st4(&render_st4(&mesh)).unwrap();
        prop_assert_eq!(back.vertices.len(), mesh.vertices.len());
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            prop_assert_eq!(a.pos, b.pos);
        }
        for (a, b) in back.tets.iter().zip(&mesh.tets) {
            prop_assert_eq!(a.v, b.v);
            prop_assert_eq!(a.normal, b.normal);
        }
        prop_assert_eq!(validate(&back, 1e-9), validate(&mesh, 1e-9));
    }

    #[test]
    fn volume_round_trip_is_exact(f in field()) {
        let dir = tempfile::tempdir().unwrap();
        let h = dir.path().join("v.hdr");
        let mut f = f;
        let ramp = (0..f.len()).map(|i| (i % 7) as f64 * 0.5).collect();
        f.add_aux("ramp", ramp).unwrap();
        save_volume(&f, &h).unwrap();
        prop_assert_eq!(load_volume(&h).unwrap(), f);
    }
}
