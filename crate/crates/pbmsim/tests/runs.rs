use pbmsim::config::{parse_config, parse_config_str, BoundaryMode, MaterialEntry, OpticsSolver, PropertySet, SimConfig};
use pbmsim::io::read_field_dump;
use pbmsim::parallel::with_threads;
use pbmsim::pipeline::{run_coupled, run_sweep, write_outputs, SweepSpec};
use pbmsim_core::diffusion::effective_reflection;
use pbmsim_core::mc::fresnel_reflectance;
use pbmsim_core::sources::assemble_source_term;

/// Reference tissues on a coarse 30 mm block with one LED.
const SMALL: &str = r#"
[phantom]
spacing_mm = 1.0
lateral_extent_mm = 30.0
depth_mm = 30.0

[[phantom.layers]]
material = "scalp"
thickness_mm = 5.0

[[phantom.layers]]
material = "skull"
thickness_mm = 7.0

[[phantom.layers]]
material = "brain"
thickness_mm = 18.0

[sources]
rows = 1
cols = 1
radius_mm = 8.0

[optics]
solver = "diffusion"
boundary = "dirichlet"
tolerance = 1e-10
"#;

fn small() -> SimConfig {
    parse_config_str(SMALL, false).unwrap().0
}

fn reference_at_1mm(boundary: &str) -> SimConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference_head.toml");
    let mut cfg = parse_config(&path, false).unwrap().0;
    cfg.phantom.spacing_mm = 1.0;
    cfg.optics.solver = OpticsSolver::Diffusion;
    cfg.optics.boundary = if boundary == "robin" { BoundaryMode::Robin } else { BoundaryMode::Dirichlet };
    cfg
}

/// Runs, dumps and reads back the fluence.
fn dumped_fluence(cfg: &SimConfig) -> (pbmsim::pipeline::RunOutputs, pbmsim_core::ScalarField) {
    let out = run_coupled(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&out, cfg, dir.path()).unwrap();
    let phi = read_field_dump(&dir.path().join("fluence.hdr")).unwrap();
    (out, phi)
}

#[test]
fn dirichlet_reference_fluence_peaks_under_a_source() {
    let cfg = reference_at_1mm("dirichlet");
    let (out, phi) = dumped_fluence(&cfg);
    let lit = assemble_source_term(&out.phantom, &out.patches).unwrap();
    let surface_max = lit.entries.iter().map(|(e, _)| phi.values[e.voxel]).fold(0.0, f64::max);
    assert!(surface_max > 0.0);
    assert!(phi.max() <= surface_max, "{} > {surface_max}", phi.max());
}

#[test]
fn robin_reference_fluence_stays_below_the_boundary_potential() {
    let cfg = reference_at_1mm("robin");
    let (_, phi) = dumped_fluence(&cfg);
    // φ + 2AD·∂φ/∂n = 4q_t/(1 − R_eff) on lit faces, 0 elsewhere.
    let q = cfg.sources.irradiance_mw_per_cm2 * cfg.sources.light_fraction;
    let q_t = q * (1.0 - fresnel_reflectance(1.0, 1.4, 1.0));
    let potential = 4.0 * q_t / (1.0 - effective_reflection(1.4));
    assert!(phi.max() > 0.0);
    assert!(phi.max() <= potential as f32 as f64, "{} > {potential}", phi.max());
}

#[test]
fn report_residuals_are_small() {
    let out = run_coupled(&small()).unwrap();
    let r = &out.report;
    assert!(r.optics_balance_residual.unwrap() <= 1e-6);
    assert!(r.thermal_balance_residual.unwrap() <= 1e-6);
    assert!(r.peak_scalp_temperature_c.unwrap().is_finite());
    assert!(r.cortex_max_rise_c.unwrap() >= 0.0);
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let cfg = small();
    let rows = run_sweep(&cfg, &SweepSpec::Irradiance(vec![cfg.sources.irradiance_mw_per_cm2]));
    assert_eq!(rows.len(), 1);
    let swept = rows[0].result.as_ref().unwrap();
    let plain = run_coupled(&cfg).unwrap();
    assert_eq!(swept.report, plain.report);
    assert_eq!(swept.fluence().values, plain.fluence().values);
}

#[test]
fn property_set_sweep_keeps_input_order() {
    let set = |name: &str, mu_a: f64| {
        let mut s = PropertySet { name: name.into(), ..PropertySet::default() };
        s.materials.insert("brain".into(), MaterialEntry { mu_a_per_cm: Some(mu_a), ..MaterialEntry::default() });
        s
    };
    let sets = vec![set("850nm", 0.9), set("670nm", 0.3), set("810nm", 0.57)];
    let rows = run_sweep(&small(), &SweepSpec::PropertySets(sets));
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["850nm", "670nm", "810nm"]);
    let cortex: Vec<f64> = rows.iter().map(|r| r.result.as_ref().unwrap().report.cortex_fluence_mean_mw_per_cm2).collect();
    // Less brain absorption leaves more light in the cortex.
    assert!(cortex[1] > cortex[2] && cortex[2] > cortex[0], "{cortex:?}");
    for r in &rows {
        let rep = &r.result.as_ref().unwrap().report;
        assert_eq!(rep.property_set.as_deref(), Some(r.label.as_str()));
    }
}

#[test]
fn failed_sweep_row_stops_the_sweep() {
    let rows = run_sweep(&small(), &SweepSpec::Irradiance(vec![50.0, -1.0, 80.0]));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].result.is_ok());
    assert!(rows[1].result.is_err());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let mut cfg = small();
    cfg.optics.solver = OpticsSolver::Both;
    cfg.optics.photons = 4000;
    cfg.optics.batch_size = 500;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (threads, dir) in [1, 2].into_iter().zip(&dirs) {
        let c = cfg.clone();
        with_threads(threads, move || {
            let out = run_coupled(&c).unwrap();
            write_outputs(&out, &c, dir.path()).unwrap();
        });
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for n in &names {
        let a = std::fs::read(dirs[0].path().join(n)).unwrap();
        let b = std::fs::read(dirs[1].path().join(n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
    let mc = read_field_dump(&dirs[0].path().join("fluence_mc.hdr")).unwrap();
    assert!(mc.max() > 0.0);
}
