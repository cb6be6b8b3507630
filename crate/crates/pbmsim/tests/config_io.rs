use std::path::{Path, PathBuf};

use approx::assert_relative_eq;
use pbmsim::config::{parse_config, parse_config_str};
use pbmsim::io::{read_field_dump, write_field_dump};
use pbmsim_core::{Grid, Quantity, ScalarField};
use proptest::prelude::*;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn reference_config_carries_the_tissue_tables() {
    let (cfg, warnings) = parse_config(&configs().join("reference_head.toml"), false).unwrap();
    assert!(warnings.is_empty());
    let lib = cfg.library().unwrap();
    let scalp = lib.get("scalp").unwrap();
    let t = scalp.thermal.unwrap();
    assert_eq!(t.k, 0.50);
    assert_eq!(t.w_b, 0.00143);
    assert_eq!(t.rho, 1200.0);
    let o = scalp.optical.unwrap();
    // 0.16 /cm and 0.043 cm in SI.
    assert_relative_eq!(o.mu_a, 16.0, max_relative = 1e-15);
    assert_relative_eq!(o.d_override.unwrap(), 4.3e-4, max_relative = 1e-15);
    let brain = lib.get("brain").unwrap();
    assert_eq!(brain.thermal.unwrap().q_met, 10437.0);
    assert_relative_eq!(brain.optical.unwrap().mu_a, 57.0, max_relative = 1e-15);
    assert_eq!(cfg.sources.rows * cfg.sources.cols, 9);
    assert_eq!(cfg.sources.irradiance_mw_per_cm2, 100.0);
    assert_eq!(cfg.blood().t_b, 37.0);
}

#[test]
fn reference_config_restates_the_defaults_for_its_library() {
    let (cfg, _) = parse_config(&configs().join("reference_head.toml"), false).unwrap();
    let (empty, _) = parse_config_str("", false).unwrap();
    assert_eq!(cfg.library().unwrap(), empty.library().unwrap());
}

#[test]
fn slab_validation_config_parses() {
    let (cfg, warnings) = parse_config(&configs().join("slab_validation.toml"), false).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(cfg.phantom.layers.len(), 1);
}

#[test]
fn fractions_must_sum_to_one() {
    let e = parse_config_str("[sources]\nlight_fraction = 0.4\nheat_fraction = 0.7\n", false).unwrap_err();
    assert!(e.message.contains("heat_fraction"), "{e}");
    assert_eq!(e.line, Some(3));
}

#[test]
fn empty_layer_list_is_rejected() {
    let e = parse_config_str("[phantom]\nlayers = []\n", false).unwrap_err();
    assert!(e.message.contains("phantom.layers"), "{e}");
    assert_eq!(e.line, Some(2));
}

#[test]
fn undefined_material_is_rejected() {
    let text = "[[phantom.layers]]\nmaterial = \"csf\"\nthickness_mm = 2.0\n";
    let e = parse_config_str(text, false).unwrap_err();
    assert!(e.message.contains("csf"), "{e}");
}

#[test]
fn dump_rejects_a_corrupted_payload() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new([3, 2, 2], 1e-3).unwrap();
    let f = ScalarField::from_values(grid, Quantity::Temperature, (0..12).map(|i| 30.0 + i as f64).collect()).unwrap();
    let stem = dir.path().join("t");
    write_field_dump(&f, &stem).unwrap();
    let bin = stem.with_extension("bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[5] ^= 1;
    std::fs::write(&bin, &bytes).unwrap();
    assert!(read_field_dump(&stem).unwrap_err().to_string().contains("checksum"));
    bytes.pop();
    std::fs::write(&bin, &bytes).unwrap();
    assert!(read_field_dump(&stem).unwrap_err().to_string().contains("bytes"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dump_round_trip_is_bit_exact(
        dims in prop::array::uniform3(1usize..6), spacing in 0.1f64..3.0,
        raw in prop::collection::vec(-1e6f32..1e6, 125),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(dims, spacing * 1e-3).unwrap();
        // Dumps store float32, so start from float32-representable values.
        let values: Vec<f64> = raw[..grid.len()].iter().map(|&x| x as f64).collect();
        let f = ScalarField::from_values(grid, Quantity::FluenceRate, values).unwrap();
        let stem = dir.path().join("f");
        write_field_dump(&f, &stem).unwrap();
        let back = read_field_dump(&stem.with_extension("hdr")).unwrap();
        prop_assert_eq!(back.grid.dims, f.grid.dims);
        prop_assert_eq!(back.quantity, f.quantity);
        // Spacing travels as decimal millimetres in the header.
        prop_assert!((back.grid.spacing - f.grid.spacing).abs() <= 1e-15 * f.grid.spacing);
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
