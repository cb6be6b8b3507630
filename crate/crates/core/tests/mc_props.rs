use pbmsim_core::diffusion::PointSource;
use pbmsim_core::mc::{McAccumulator, McConfig, McSimulation};
use pbmsim_core::phantom::{build_layered_phantom, LayerSpec, Material, TissueOpticalProps};
use pbmsim_core::sources::{Footprint, SourcePatch};
use pbmsim_core::{Face, MaterialLibrary, VoxelPhantom};
use proptest::prelude::*;

fn lib(mu_a: f64, mu_s: f64, g: f64, n: f64) -> MaterialLibrary {
    let mut lib = MaterialLibrary::new();
    lib.insert(Material {
        name: "medium".into(),
        optical: Some(TissueOpticalProps::from_per_cm(mu_a, mu_s, g, n, None).unwrap()),
        thermal: None,
    })
    .unwrap();
    lib
}

fn top(extent_mm: f64) -> SourcePatch {
    let half = extent_mm / 2000.0;
    SourcePatch {
        face: Face::ZMin,
        center: [half; 2],
        footprint: Footprint::Rect { half_widths: [half; 2] },
        irradiance: 1000.0,
        light_fraction: 1.0,
        heat_fraction: 0.0,
    }
}

fn slab(l: &MaterialLibrary, extent: f64, depth: f64, h: f64) -> VoxelPhantom {
    build_layered_phantom(l, &[LayerSpec::new("medium", depth)], extent, h, Some(depth)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weight_budget_closes(
        mu_a in 0.01f64..5.0, mu_s in 0.0f64..80.0, g in 0.0f64..0.95, n in 1.0f64..1.6, seed in 0u64..1000,
    ) {
        let p = slab(&lib(mu_a, mu_s, g, n), 6.0, 4.0, 1.0);
        let cfg = McConfig { n_photons: 400, batch_size: 100, seed, ..McConfig::default() };
        let r = McSimulation::new(&p, &[top(6.0)], &[], cfg).unwrap().run().unwrap();
        prop_assert!(r.tallies.conservation_error() <= 1e-10, "{:?}", r.tallies);
        prop_assert!(r.fluence.min() >= 0.0);
    }
}

#[test]
fn beer_lambert_at_several_optical_depths() {
    let n = 200_000u64;
    for mu_a_d in [0.5, 1.0, 2.0] {
        // 1 cm slab, μa chosen to give the optical depth.
        let p = slab(&lib(mu_a_d, 0.0, 0.0, 1.0), 4.0, 10.0, 1.0);
        let cfg = McConfig { n_photons: n, seed: 99, ..McConfig::default() };
        let r = McSimulation::new(&p, &[top(4.0)], &[], cfg).unwrap().run().unwrap();
        let expected = (-mu_a_d).exp();
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        let got = r.tallies.transmitted / r.tallies.launched;
        assert!((got - expected).abs() <= 3.0 * sigma, "mu_a d = {mu_a_d}: {got} vs {expected}");
    }
}

#[test]
fn isotropic_source_gives_symmetric_octants() {
    let p = slab(&lib(0.5, 20.0, 0.0, 1.0), 20.0, 20.0, 1.0);
    // Centre of voxel (10, 10, 10).
    let c = 10.5e-3;
    let cfg = McConfig { n_photons: 80_000, seed: 5, ..McConfig::default() };
    let r = McSimulation::new(&p, &[], &[PointSource { position: [c; 3], power: 1e-3 }], cfg)
        .unwrap()
        .run()
        .unwrap();
    // Skip the source planes; the rest splits into mirror-image octants.
    let mut oct = [0.0f64; 8];
    let g = p.grid;
    for v in 0..g.len() {
        let [i, j, k] = g.coords(v);
        if i == 10 || j == 10 || k == 10 {
            continue;
        }
        let o = usize::from(i > 10) | usize::from(j > 10) << 1 | usize::from(k > 10) << 2;
        // Keep a cube that is symmetric about voxel 10 on every axis.
        if [i, j, k].iter().all(|&x| x >= 1) {
            oct[o] += r.fluence.values[v];
        }
    }
    let mean = oct.iter().sum::<f64>() / 8.0;
    for (o, x) in oct.iter().enumerate() {
        assert!((x - mean).abs() / mean < 0.05, "octant {o}: {x} vs mean {mean}");
    }
}

/// Batch-to-batch spread of a voxel's fluence, as a standard error.
fn standard_error(p: &VoxelPhantom, per_batch: u64, voxel: usize) -> f64 {
    let batches = 16u64;
    let cfg = McConfig { n_photons: per_batch * batches, batch_size: per_batch, seed: 17, ..McConfig::default() };
    let sim = McSimulation::new(p, &[top(10.0)], &[], cfg).unwrap();
    let mut values = Vec::new();
    for b in 0..batches {
        let t = sim.run_batch(b).unwrap();
        values.push(t.absorbed[voxel]);
    }
    let mean = values.iter().sum::<f64>() / batches as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    // Standard error of the mean fluence, in units of the per-batch mean.
    (var / batches as f64).sqrt() / mean
}

#[test]
fn standard_error_shrinks_as_inverse_root_n() {
    let p = slab(&lib(0.3, 30.0, 0.8, 1.4), 10.0, 6.0, 1.0);
    let voxel = p.grid.index(5, 5, 2);
    let small = standard_error(&p, 2_000, voxel);
    let large = standard_error(&p, 8_000, voxel);
    let ratio = small / large;
    // Quadrupling the packets halves the error; 16 batches leave about ±25%
    // scatter on each estimate.
    assert!((1.4..=2.9).contains(&ratio), "ratio {ratio}");
}

#[test]
fn merge_order_is_fixed_by_batch_index() {
    let p = slab(&lib(0.3, 30.0, 0.8, 1.4), 6.0, 4.0, 1.0);
    let cfg = McConfig { n_photons: 1_000, batch_size: 250, seed: 8, ..McConfig::default() };
    let sim = McSimulation::new(&p, &[top(6.0)], &[], cfg).unwrap();
    let serial = sim.run().unwrap();
    let mut tallies: Vec<_> = (0..sim.n_batches()).rev().map(|b| sim.run_batch(b).unwrap()).collect();
    tallies.sort_by_key(|t| t.batch);
    let mut acc = McAccumulator::new(p.grid.len());
    for t in &tallies {
        acc.push(t);
    }
    let merged = sim.finish(acc);
    assert_eq!(serial.tallies, merged.tallies);
    assert_eq!(serial.fluence.values, merged.fluence.values);
}
