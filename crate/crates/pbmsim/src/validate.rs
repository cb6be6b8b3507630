//! Built-in analytic checks, run by `pbmsim validate`.

use std::fmt::Write as _;

use pbmsim_core::bioheat::{
    solve_pennes_steady, solve_pennes_transient, HeatSourceField, InitialTemps, Probe, ThermalBoundarySpec,
    TransientOptions,
};
use pbmsim_core::diffusion::{point_source_fluence, solve_fluence_cw, OpticalBoundaryMode, OpticalBoundarySpec, PointSource};
use pbmsim_core::mc::{fresnel_reflectance, sample_hg_cosine, BatchRng, McConfig, McSimulation};
use pbmsim_core::phantom::{build_layered_phantom, BloodProps, LayerSpec, Material, TissueOpticalProps};
use pbmsim_core::solver::CgOptions;
use pbmsim_core::sources::{Footprint, SourcePatch};
use pbmsim_core::units::{w_per_m2_to_mw_per_cm2, MM_TO_M};
use pbmsim_core::{Face, MaterialLibrary};

/// Faults that can be injected to prove a check is live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flips the sign of μa in the Beer–Lambert medium.
    NegativeMuA,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn compare(name: &'static str, measured: f64, expected: f64, tolerance: f64, note: impl Into<String>) -> Self {
        let passed = (measured - expected).abs() <= tolerance;
        Self { name, measured: Some(measured), expected, tolerance, passed, note: note.into() }
    }

    fn failed(name: &'static str, expected: f64, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self { name, measured: None, expected, tolerance, passed: false, note: format!("error: {err}") }
    }
}

fn single(name: &str, optical: TissueOpticalProps) -> pbmsim_core::Result<MaterialLibrary> {
    let mut lib = MaterialLibrary::new();
    lib.insert(Material { name: name.into(), optical: Some(optical), thermal: None })?;
    Ok(lib)
}

fn full_face(extent_mm: f64) -> SourcePatch {
    let half = extent_mm * MM_TO_M / 2.0;
    SourcePatch {
        face: Face::ZMin,
        center: [half; 2],
        footprint: Footprint::Rect { half_widths: [half; 2] },
        irradiance: 1000.0,
        light_fraction: 1.0,
        heat_fraction: 0.0,
    }
}

/// Worst relative error of the finite-volume point-source field against the
/// infinite-medium Green's function, for 0.5 cm ≤ r ≤ 1.2 cm.
fn greens_function() -> Check {
    let name = "diffusion Green's function";
    let tol = 0.05;
    let run = || -> pbmsim_core::Result<(f64, f64)> {
        let lib = MaterialLibrary::reference();
        let extent = 41.0;
        let p = build_layered_phantom(&lib, &[LayerSpec::new("scalp", extent)], extent, 1.0, Some(extent))?;
        let c = extent / 2.0 * MM_TO_M;
        let power = 1e-3;
        let spec = OpticalBoundarySpec::uniform(OpticalBoundaryMode::Dirichlet, vec![]);
        let sol = solve_fluence_cw(&p, &spec, &[PointSource { position: [c; 3], power }], CgOptions { tol: 1e-10, max_iter: 20_000 })?;
        let o = lib.get("scalp")?.optical.expect("optical");
        let d = o.diffusion()?;
        let mut worst = 0.0f64;
        let mut worst_r = 0.0;
        for i in 25..=32 {
            let x = (i as f64 + 0.5) * MM_TO_M;
            let r = x - c;
            let exact = w_per_m2_to_mw_per_cm2(point_source_fluence(power, o.mu_a, d, r));
            let got = sol.field.sample([x, c, c])?;
            let e = (got - exact).abs() / exact;
            if e > worst {
                worst = e;
                worst_r = r;
            }
        }
        Ok((worst, worst_r))
    };
    match run() {
        Ok((e, r)) => Check::compare(name, e, 0.0, tol, format!("max relative error, at r = {:.2} cm", r * 100.0)),
        Err(e) => Check::failed(name, 0.0, tol, e),
    }
}

fn beer_lambert(fault: Option<Fault>) -> Check {
    let name = "Beer-Lambert transmission";
    let expected = (-1.0f64).exp();
    let n = 100_000u64;
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    let tol = 3.0 * sigma;
    let mu_a = if fault == Some(Fault::NegativeMuA) { -1.0 } else { 1.0 };
    let run = || -> pbmsim_core::Result<f64> {
        let lib = single("absorber", TissueOpticalProps { mu_a: mu_a * 100.0, mu_s: 0.0, g: 0.0, n: 1.0, d_override: None })?;
        let p = build_layered_phantom(&lib, &[LayerSpec::new("absorber", 10.0)], 4.0, 1.0, Some(10.0))?;
        let cfg = McConfig { n_photons: n, seed: 7, ..McConfig::default() };
        let r = McSimulation::new(&p, &[full_face(4.0)], &[], cfg)?.run()?;
        Ok(r.tallies.transmitted / r.tallies.launched)
    };
    match run() {
        Ok(t) => Check::compare(name, t, expected, tol, "1 cm at mu_a = 1/cm, 3 binomial sigma"),
        Err(e) => Check::failed(name, expected, tol, e),
    }
}

fn mc_conservation() -> Check {
    let name = "MC energy conservation";
    let tol = 1e-10;
    let run = || -> pbmsim_core::Result<f64> {
        let lib = MaterialLibrary::reference();
        let p = build_layered_phantom(&lib, &[LayerSpec::new("scalp", 3.0), LayerSpec::new("brain", 5.0)], 8.0, 1.0, None)?;
        let cfg = McConfig { n_photons: 5_000, batch_size: 1_000, seed: 3, ..McConfig::default() };
        let r = McSimulation::new(&p, &[full_face(8.0)], &[], cfg)?.run()?;
        Ok(r.tallies.conservation_error())
    };
    match run() {
        Ok(e) => Check::compare(name, e, 0.0, tol, "relative error of the weight budget"),
        Err(e) => Check::failed(name, 0.0, tol, e),
    }
}

fn hg_mean() -> Check {
    let name = "HG mean cosine";
    let g = 0.89;
    let n = 200_000;
    let var = (1.0 + 2.0 * g * g) / 3.0 - g * g;
    let tol = 4.0 * (var / n as f64).sqrt();
    let mut rng = BatchRng::new(11, 0);
    let sum: f64 = (0..n).map(|_| sample_hg_cosine(g, rng.uniform())).sum();
    Check::compare(name, sum / n as f64, g, tol, "g = 0.89, 4 sigma")
}

fn fresnel_normal() -> Check {
    let n: f64 = 1.4;
    let expected = ((n - 1.0) / (n + 1.0)).powi(2);
    Check::compare("Fresnel normal incidence", fresnel_reflectance(1.0, n, 1.0), expected, 1e-12, "air to n = 1.4")
}

fn blood() -> BloodProps {
    crate::config::SimConfig::default().blood()
}

fn brain_block() -> pbmsim_core::Result<pbmsim_core::VoxelPhantom> {
    build_layered_phantom(&MaterialLibrary::reference(), &[LayerSpec::new("brain", 10.0)], 10.0, 1.0, None)
}

fn pennes_equilibrium() -> Check {
    let name = "Pennes perfusion equilibrium";
    let b = blood();
    let run = || -> pbmsim_core::Result<(f64, f64)> {
        let p = brain_block()?;
        let th = MaterialLibrary::reference().get("brain")?.thermal.expect("thermal");
        let expected = b.t_b + th.q_met / b.perfusion_coefficient(th.w_b);
        let s = solve_pennes_steady(
            &p,
            &b,
            &HeatSourceField::metabolic(&p),
            &ThermalBoundarySpec::insulated(),
            CgOptions { tol: 1e-12, max_iter: 10_000 },
        )?;
        Ok((s.field.max(), expected))
    };
    match run() {
        Ok((t, expected)) => Check::compare(name, t, expected, 1e-3, "insulated brain block, C"),
        Err(e) => Check::failed(name, 37.0345, 1e-3, e),
    }
}

fn transient_to_steady() -> Check {
    let name = "transient to steady";
    let tol = 1e-3;
    let b = blood();
    let run = || -> pbmsim_core::Result<f64> {
        let p = brain_block()?;
        let src = HeatSourceField::metabolic(&p);
        let bc = ThermalBoundarySpec::top_convective(5.0, 25.0);
        let cg = CgOptions { tol: 1e-12, max_iter: 10_000 };
        let s = solve_pennes_steady(&p, &b, &src, &bc, cg)?;
        let probe = Probe { name: "centre".into(), position: [5.0 * MM_TO_M; 3] };
        let opts = TransientOptions { dt: 1.0, t_end: 300.0, probe_interval: 10.0, cg };
        let t = solve_pennes_transient(&p, &b, &src, &bc, &InitialTemps::uniform(37.0), &[probe], &[], opts)?;
        Ok(t.final_field.values.iter().zip(&s.field.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    match run() {
        Ok(d) => Check::compare(name, d, 0.0, tol, "max |T(300 s) - T_steady|, C"),
        Err(e) => Check::failed(name, 0.0, tol, e),
    }
}

pub fn run_validation(fault: Option<Fault>) -> Vec<Check> {
    vec![
        greens_function(),
        beer_lambert(fault),
        mc_conservation(),
        hg_mean(),
        fresnel_normal(),
        pennes_equilibrium(),
        transient_to_steady(),
    ]
}

pub fn format_report(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let measured = c.measured.map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
        let _ = writeln!(
            s,
            "{} {:<30} measured {:>14} expected {:.6e} tol {:.1e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            measured,
            c.expected,
            c.tolerance,
            c.note
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(s, "{} of {} checks passed", checks.len() - failed, checks.len());
    s
}
