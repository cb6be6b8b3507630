//! Coupled optics → heat runs, their report, and sweeps over them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pbmsim_core::bioheat::{
    assemble_heat_sources, heat_density_field, solve_pennes_steady, solve_pennes_transient, HeatSourceField, Probe,
    SteadyTemperature, TransientResult,
};
use pbmsim_core::diffusion::{solve_fluence_cw, FluenceSolution, OpticalBoundarySpec};
use pbmsim_core::dosimetry::{
    difference, extract_cutline, penetration_depth, region_stats, CutlineSpec, PenetrationCriterion, Profile,
};
use pbmsim_core::mc::{compare_mc_diffusion, diffusive_mask, ErrorStats, McResult, McSimulation, Tallies};
use pbmsim_core::phantom::{build_layered_phantom, build_shell_phantom, light_speed_in_medium};
use pbmsim_core::sources::SourcePatch;
use pbmsim_core::units::{CM_TO_M, MM_TO_M, M_TO_CM};
use pbmsim_core::{MaterialId, ScalarField, VoxelPhantom};
use serde::Serialize;

use crate::config::{overlay_material, Geometry, Heating, OpticsSolver, PropertySet, SimConfig};
use crate::io::{self, IoError};
use crate::parallel::run_mc_parallel;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(#[from] pbmsim_core::Error),
    #[error("output: {0}")]
    Io(#[from] IoError),
}

/// Voxel runs of one material along the central column, top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRun {
    pub material: String,
    /// Depth range (m) from the top of the grid.
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientSummary {
    pub t_end_s: f64,
    pub dt_s: f64,
    pub probes: Vec<ProbeSummary>,
    /// Largest probe-cortex rise over the first 60 s (°C).
    pub cortex_first_minute_rise_c: Option<f64>,
    /// max |T(t_end) − T_steady| over tissue voxels (°C).
    pub final_vs_steady_max_c: Option<f64>,
    /// Every probe trace is monotone after the first 60 s.
    pub monotone_after_first_minute: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub name: String,
    pub position_mm: [f64; 3],
    pub initial_c: f64,
    pub final_c: f64,
    pub change_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub photons: u64,
    pub seed: u64,
    pub batches: u64,
    pub tallies: TalliesReport,
    pub conservation_error: f64,
    /// Relative difference to the diffusion fluence over the diffusive
    /// region, when both ran.
    pub vs_diffusion: Option<ErrorReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TalliesReport {
    pub launched: f64,
    pub absorbed: f64,
    pub reflected: f64,
    pub transmitted: f64,
    pub roulette_balance: f64,
}

impl From<Tallies> for TalliesReport {
    fn from(t: Tallies) -> Self {
        Self {
            launched: t.launched,
            absorbed: t.absorbed,
            reflected: t.reflected,
            transmitted: t.transmitted,
            roulette_balance: t.roulette_balance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
    pub voxels: usize,
}

impl From<ErrorStats> for ErrorReport {
    fn from(s: ErrorStats) -> Self {
        Self { max: s.max, mean: s.mean, rms: s.rms, voxels: s.count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub property_set: Option<String>,
    pub dims: [usize; 3],
    pub spacing_mm: f64,
    pub irradiance_mw_per_cm2: f64,
    pub light_speed_cm_per_s: Vec<(String, f64)>,
    pub optics_solver: String,
    pub optics_boundary: String,
    pub optics_cg_iterations: Option<usize>,
    pub optics_balance_residual: Option<f64>,
    /// Peak fluence and the voxel it sits in.
    pub fluence_max_mw_per_cm2: f64,
    pub fluence_argmax: [usize; 3],
    pub cortex_voxels: usize,
    pub cortex_fluence_min_mw_per_cm2: f64,
    pub cortex_fluence_max_mw_per_cm2: f64,
    pub cortex_fluence_mean_mw_per_cm2: f64,
    /// Top voxel layer of the cortex.
    pub cortex_surface_fluence_min_mw_per_cm2: f64,
    pub cortex_surface_fluence_max_mw_per_cm2: f64,
    pub penetration_depth_1e_cm: Option<f64>,
    pub penetration_threshold_mw_per_cm2: f64,
    pub penetration_depth_threshold_cm: Option<f64>,
    pub mc: Option<McSummary>,
    pub heating: String,
    pub peak_scalp_temperature_c: Option<f64>,
    pub scalp_cutline_min_c: Option<f64>,
    pub scalp_cutline_max_c: Option<f64>,
    pub brain_deep_temperature_c: Option<f64>,
    pub cortex_max_rise_c: Option<f64>,
    pub cortex_mean_rise_c: Option<f64>,
    pub cortex_heat_density_min_j_per_cm3: Option<f64>,
    pub cortex_heat_density_max_j_per_cm3: Option<f64>,
    pub cortex_heat_density_mean_j_per_cm3: Option<f64>,
    pub thermal_cg_iterations: Option<usize>,
    pub thermal_balance_residual: Option<f64>,
    pub transient: Option<TransientSummary>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "run report");
        if let Some(p) = &self.property_set {
            let _ = writeln!(s, "  property set                 {p}");
        }
        let _ = writeln!(s, "  grid                         {:?} at {} mm", self.dims, self.spacing_mm);
        let _ = writeln!(s, "  irradiance                   {} mW/cm^2", self.irradiance_mw_per_cm2);
        for (m, v) in &self.light_speed_cm_per_s {
            let _ = writeln!(s, "  light speed in {m:<13} {v:.6e} cm/s");
        }
        let _ = writeln!(s, "optics ({}, {} boundary)", self.optics_solver, self.optics_boundary);
        if let Some(i) = self.optics_cg_iterations {
            let _ = writeln!(s, "  CG iterations                {i}");
        }
        let _ = writeln!(s, "  balance residual             {}", opt(self.optics_balance_residual));
        let _ = writeln!(s, "  peak fluence                 {:.6} mW/cm^2 at {:?}", self.fluence_max_mw_per_cm2, self.fluence_argmax);
        let _ = writeln!(
            s,
            "  cortex fluence               {:.6} .. {:.6} mW/cm^2 (mean {:.6}, {} voxels)",
            self.cortex_fluence_min_mw_per_cm2,
            self.cortex_fluence_max_mw_per_cm2,
            self.cortex_fluence_mean_mw_per_cm2,
            self.cortex_voxels
        );
        let _ = writeln!(
            s,
            "  cortex surface fluence       {:.6} .. {:.6} mW/cm^2",
            self.cortex_surface_fluence_min_mw_per_cm2, self.cortex_surface_fluence_max_mw_per_cm2
        );
        let _ = writeln!(s, "  penetration depth (1/e)      {} cm", opt(self.penetration_depth_1e_cm));
        let _ = writeln!(
            s,
            "  penetration depth ({} mW/cm^2) {} cm",
            self.penetration_threshold_mw_per_cm2,
            opt(self.penetration_depth_threshold_cm)
        );
        if let Some(mc) = &self.mc {
            let t = &mc.tallies;
            let _ = writeln!(s, "monte carlo ({} packets, seed {}, {} batches)", mc.photons, mc.seed, mc.batches);
            let _ = writeln!(
                s,
                "  absorbed {:.6}  reflected {:.6}  transmitted {:.6}  roulette {:.6}",
                t.absorbed / t.launched,
                t.reflected / t.launched,
                t.transmitted / t.launched,
                t.roulette_balance / t.launched
            );
            let _ = writeln!(s, "  conservation error           {:.3e}", mc.conservation_error);
            if let Some(e) = &mc.vs_diffusion {
                let _ = writeln!(s, "  vs diffusion                 rms {:.4} mean {:.4} max {:.4} ({} voxels)", e.rms, e.mean, e.max, e.voxels);
            }
        }
        let _ = writeln!(s, "thermal ({} heating)", self.heating);
        let _ = writeln!(s, "  peak scalp temperature       {} C", opt(self.peak_scalp_temperature_c));
        let _ = writeln!(
            s,
            "  scalp cutline                {} .. {} C",
            opt(self.scalp_cutline_min_c),
            opt(self.scalp_cutline_max_c)
        );
        let _ = writeln!(s, "  deep brain temperature       {} C", opt(self.brain_deep_temperature_c));
        let _ = writeln!(
            s,
            "  cortex rise over no light    max {} mean {} C",
            opt(self.cortex_max_rise_c),
            opt(self.cortex_mean_rise_c)
        );
        let _ = writeln!(
            s,
            "  cortex heat density          {} .. {} J/cm^3 (mean {})",
            opt(self.cortex_heat_density_min_j_per_cm3),
            opt(self.cortex_heat_density_max_j_per_cm3),
            opt(self.cortex_heat_density_mean_j_per_cm3)
        );
        let _ = writeln!(s, "  balance residual             {}", opt(self.thermal_balance_residual));
        if let Some(t) = &self.transient {
            let _ = writeln!(s, "transient ({} s, dt {} s)", t.t_end_s, t.dt_s);
            for p in &t.probes {
                let _ = writeln!(
                    s,
                    "  {:<12} {:.6} -> {:.6} C (change {:+.6})",
                    p.name, p.initial_c, p.final_c, p.change_c
                );
            }
            let _ = writeln!(s, "  cortex rise, first minute    {} C", opt(t.cortex_first_minute_rise_c));
            let _ = writeln!(s, "  |T(end) - T(steady)| max     {} C", opt(t.final_vs_steady_max_c));
            let _ = writeln!(s, "  monotone after first minute  {}", t.monotone_after_first_minute);
        }
        s
    }
}

/// Everything a coupled run produced.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub phantom: VoxelPhantom,
    pub patches: Vec<SourcePatch>,
    pub column: [f64; 2],
    pub column_runs: Vec<ColumnRun>,
    pub cortex_mask: Vec<bool>,
    pub diffusion: Option<FluenceSolution>,
    pub mc: Option<McResult>,
    pub heat: HeatSourceField,
    pub steady: Option<SteadyTemperature>,
    pub baseline: Option<SteadyTemperature>,
    pub heat_density: Option<ScalarField>,
    pub transient: Option<TransientResult>,
    pub cutlines: Vec<(String, Profile)>,
    pub report: RunReport,
}

impl RunOutputs {
    /// The fluence that fed the heat model: diffusion if it ran, else MC.
    pub fn fluence(&self) -> &ScalarField {
        match (&self.diffusion, &self.mc) {
            (Some(d), _) => &d.field,
            (None, Some(m)) => &m.fluence,
            (None, None) => unreachable!("some optics solver always runs"),
        }
    }
}

/// Builds the phantom (with LED solids if requested) and its source patches.
pub fn build_phantom(cfg: &SimConfig) -> Result<(VoxelPhantom, Vec<SourcePatch>), RunError> {
    let lib = cfg.library().map_err(RunError::Config)?;
    let p = &cfg.phantom;
    let layers = cfg.layers();
    let phantom = match p.geometry {
        Geometry::Slab => build_layered_phantom(&lib, &layers, p.lateral_extent_mm, p.spacing_mm, p.depth_mm)?,
        Geometry::Shells => build_shell_phantom(&lib, &layers, p.outer_radius_mm, p.margin_mm, p.spacing_mm)?,
    };
    let patches = cfg.patches(&phantom.grid)?;
    if !p.model_led {
        return Ok((phantom, patches));
    }
    let covered = |x: f64, y: f64| patches.iter().any(|s| s.contains(x, y));
    let with_led = phantom.with_led_caps(&lib, "led", p.led_thickness_mm, covered)?;
    let patches = cfg.patches(&with_led.grid)?;
    Ok((with_led, patches))
}

/// Centre of the patch nearest the middle of the source face, as (x, y) for
/// the top face.
fn central_column(phantom: &VoxelPhantom, patches: &[SourcePatch]) -> [f64; 2] {
    let e = phantom.grid.extent();
    let mid = [e[0] / 2.0, e[1] / 2.0];
    patches
        .iter()
        .map(|p| p.center)
        .min_by(|a, b| {
            let da = (a[0] - mid[0]).powi(2) + (a[1] - mid[1]).powi(2);
            let db = (b[0] - mid[0]).powi(2) + (b[1] - mid[1]).powi(2);
            da.total_cmp(&db)
        })
        .unwrap_or(mid)
}

fn column_runs(phantom: &VoxelPhantom, column: [f64; 2]) -> Vec<ColumnRun> {
    let g = phantom.grid;
    let h = g.spacing;
    let i = ((column[0] / h) as usize).min(g.dims[0] - 1);
    let j = ((column[1] / h) as usize).min(g.dims[1] - 1);
    let mut runs: Vec<ColumnRun> = Vec::new();
    for k in 0..g.dims[2] {
        let m = phantom.material_of(g.index(i, j, k));
        let (z0, z1) = (k as f64 * h, (k + 1) as f64 * h);
        match runs.last_mut() {
            Some(r) if r.material == m.name => r.end = z1,
            _ => runs.push(ColumnRun { material: m.name.clone(), start: z0, end: z1 }),
        }
    }
    runs
}

fn tissue_runs(phantom: &VoxelPhantom, runs: &[ColumnRun]) -> Vec<ColumnRun> {
    runs.iter()
        .filter(|r| {
            phantom
                .find_material(&r.material)
                .map(|id| phantom.material(id).optical.is_some())
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

/// Material treated as brain for cortex statistics: "brain" if present,
/// otherwise the deepest layer.
fn cortex_material(cfg: &SimConfig, phantom: &VoxelPhantom) -> Result<MaterialId, RunError> {
    let name = if cfg.phantom.layers.iter().any(|l| l.material == "brain") {
        "brain".to_string()
    } else {
        cfg.phantom.layers.last().map(|l| l.material.clone()).unwrap_or_default()
    };
    Ok(phantom.find_material(&name)?)
}

/// Default probes along the central column: the surface voxel of the outer
/// layer, the middle of each inner layer, the middle of the cortex shell and
/// 1 cm below the cortex.
pub fn auto_probes(cfg: &SimConfig, phantom: &VoxelPhantom, column: [f64; 2], runs: &[ColumnRun]) -> Vec<Probe> {
    let h = phantom.grid.spacing;
    let tissue = tissue_runs(phantom, runs);
    let mut probes = Vec::new();
    let at = |z: f64| [column[0], column[1], z];
    let cortex_name = if cfg.phantom.layers.iter().any(|l| l.material == "brain") {
        "brain"
    } else {
        cfg.phantom.layers.last().map(|l| l.material.as_str()).unwrap_or("")
    };
    for (n, r) in tissue.iter().enumerate() {
        if r.material == cortex_name {
            let c = cfg.phantom.cortex_thickness_mm * MM_TO_M;
            probes.push(Probe { name: "cortex".into(), position: at(r.start + c / 2.0) });
            let deep = (r.start + c + 1.0 * CM_TO_M).min(r.end - h / 2.0);
            probes.push(Probe { name: r.material.clone(), position: at(deep) });
        } else if n == 0 {
            probes.push(Probe { name: r.material.clone(), position: at(r.start + h / 2.0) });
        } else {
            probes.push(Probe { name: r.material.clone(), position: at((r.start + r.end) / 2.0) });
        }
    }
    probes
}

/// Depth cutline through the central column, one sample per tissue voxel
/// from the first to the last tissue voxel centre.
fn central_cutline(phantom: &VoxelPhantom, column: [f64; 2], runs: &[ColumnRun]) -> Option<CutlineSpec> {
    let tissue = tissue_runs(phantom, runs);
    let h = phantom.grid.spacing;
    let top = tissue.first()?.start + h / 2.0;
    let bottom = tissue.last()?.end - h / 2.0;
    let samples = (((bottom - top) / h).round() as usize) + 1;
    if samples < 2 {
        return None;
    }
    Some(CutlineSpec { start: [column[0], column[1], top], end: [column[0], column[1], bottom], samples })
}

fn masked_max_min(field: &ScalarField, mask: impl Fn(usize) -> bool) -> Option<(f64, f64)> {
    let mut out: Option<(f64, f64)> = None;
    for (v, &x) in field.values.iter().enumerate() {
        if mask(v) {
            out = Some(match out {
                None => (x, x),
                Some((lo, hi)) => (lo.min(x), hi.max(x)),
            });
        }
    }
    out
}

/// Runs the optics and heat stages of `cfg` with no file output.
pub fn run_coupled(cfg: &SimConfig) -> Result<RunOutputs, RunError> {
    cfg.validate().map_err(|(k, m)| RunError::Config(format!("{k}: {m}")))?;
    let (phantom, patches) = build_phantom(cfg)?;
    let grid = phantom.grid;
    let h = grid.spacing;
    let column = central_column(&phantom, &patches);
    let runs = column_runs(&phantom, column);

    // Optics.
    let want_diffusion = matches!(cfg.optics.solver, OpticsSolver::Diffusion | OpticsSolver::Both);
    let want_mc = matches!(cfg.optics.solver, OpticsSolver::Mc | OpticsSolver::Both);
    let diffusion = if want_diffusion {
        let spec = OpticalBoundarySpec::uniform(cfg.optical_mode(), patches.clone());
        Some(solve_fluence_cw(&phantom, &spec, &[], cfg.optics_cg())?)
    } else {
        None
    };
    let mc = if want_mc {
        let sim = McSimulation::new(&phantom, &patches, &[], cfg.mc_config())?;
        Some(run_mc_parallel(&sim)?)
    } else {
        None
    };
    let fluence = match (&diffusion, &mc) {
        (Some(d), _) => d.field.clone(),
        (None, Some(m)) => m.fluence.clone(),
        (None, None) => unreachable!(),
    };

    let cortex_id = cortex_material(cfg, &phantom)?;
    let cortex_mask = phantom.layer_shell_mask(cortex_id, cfg.phantom.cortex_thickness_mm * MM_TO_M);
    let cortex_fluence = region_stats(&fluence, &cortex_mask)?;
    // Top voxel of the cortex in every column.
    let surface_mask: Vec<bool> = (0..grid.len())
        .map(|v| {
            let c = grid.coords(v);
            cortex_mask[v] && (c[2] == 0 || phantom.material_id[grid.index(c[0], c[1], c[2] - 1)] != cortex_id)
        })
        .collect();
    let surface = masked_max_min(&fluence, |v| surface_mask[v]).unwrap_or((0.0, 0.0));

    let line = central_cutline(&phantom, column, &runs);
    let fluence_profile = line.as_ref().map(|l| extract_cutline(&fluence, l)).transpose()?;
    let (pen_1e, pen_abs) = match &fluence_profile {
        Some(p) if p.values[0] > 0.0 => (
            penetration_depth(p, PenetrationCriterion::OneOverE)?.cm(),
            penetration_depth(p, PenetrationCriterion::Absolute(cfg.optics.penetration_threshold_mw_per_cm2))?.cm(),
        ),
        _ => (None, None),
    };

    let mc_summary = match &mc {
        Some(m) => {
            let vs = match &diffusion {
                Some(d) => {
                    let mask = diffusive_mask(&phantom, 3.0, 1.0);
                    Some(compare_mc_diffusion(&m.fluence, &d.field, Some(&mask))?.into())
                }
                None => None,
            };
            let c = cfg.mc_config();
            Some(McSummary {
                photons: c.n_photons,
                seed: c.seed,
                batches: c.n_batches(),
                tallies: m.tallies.into(),
                conservation_error: m.tallies.conservation_error(),
                vs_diffusion: vs,
            })
        }
        None => None,
    };

    // Heat.
    let heat = assemble_heat_sources(Some(&fluence), &phantom, &patches, cfg.heating())?;
    let bc = cfg.thermal_boundary().map_err(RunError::Config)?;
    let blood = cfg.blood();
    let need_steady = cfg.thermal.steady || cfg.thermal.transient.enabled;
    let (steady, baseline) = if need_steady {
        let s = solve_pennes_steady(&phantom, &blood, &heat, &bc, cfg.thermal_cg())?;
        let dark = HeatSourceField::metabolic(&phantom);
        let b = solve_pennes_steady(&phantom, &blood, &dark, &bc, cfg.thermal_cg())?;
        (Some(s), Some(b))
    } else {
        (None, None)
    };
    let init = cfg.initial_temps();
    let init_field = init.field(&phantom, bc.t_inf)?;
    let heat_density = steady.as_ref().map(|s| heat_density_field(&s.field, &init_field, &phantom)).transpose()?;

    let first_layer = cfg.phantom.layers.first().map(|l| l.material.clone()).unwrap_or_default();
    let first_id = phantom.find_material(&first_layer)?;
    let probes = if cfg.thermal.probes.is_empty() { auto_probes(cfg, &phantom, column, &runs) } else { cfg.explicit_probes() };

    let transient = if cfg.thermal.transient.enabled {
        Some(solve_pennes_transient(
            &phantom,
            &blood,
            &heat,
            &bc,
            &init,
            &probes,
            &cfg.thermal.transient.snapshot_times_s,
            cfg.transient_options(),
        )?)
    } else {
        None
    };

    // Cutlines.
    let mut cutlines = Vec::new();
    let temp_profile = match (&line, &steady) {
        (Some(l), Some(s)) => Some(extract_cutline(&s.field, l)?),
        _ => None,
    };
    if cfg.output.cutlines.is_empty() {
        if let Some(p) = &fluence_profile {
            cutlines.push(("center_fluence".to_string(), p.clone()));
        }
        if let (Some(l), Some(m), true) = (&line, &mc, diffusion.is_some()) {
            cutlines.push(("center_fluence_mc".to_string(), extract_cutline(&m.fluence, l)?));
        }
        if let Some(p) = &temp_profile {
            cutlines.push(("center_temperature".to_string(), p.clone()));
        }
        if let (Some(l), Some(d)) = (&line, &heat_density) {
            cutlines.push(("center_heat_density".to_string(), extract_cutline(d, l)?));
        }
    } else {
        for c in &cfg.output.cutlines {
            let field = match c.quantity.as_str() {
                "fluence" => Some(&fluence),
                "fluence_mc" => mc.as_ref().map(|m| &m.fluence),
                "temperature" => steady.as_ref().map(|s| &s.field),
                _ => heat_density.as_ref(),
            };
            let Some(field) = field else {
                return Err(RunError::Config(format!("cutline '{}': {} was not computed", c.name, c.quantity)));
            };
            cutlines.push((c.name.clone(), extract_cutline(field, &CutlineSpec::from_mm(c.from_mm, c.to_mm, c.samples))?));
        }
    }

    // Thermal summary numbers.
    let first_top = tissue_runs(&phantom, &runs).first().map(|r| r.start).unwrap_or(0.0);
    let first_end = runs.iter().find(|r| r.material == first_layer).map(|r| r.end).unwrap_or(0.0);
    let scalp_span = temp_profile.as_ref().map(|p| {
        let limit = (first_end - first_top) * M_TO_CM;
        let in_scalp: Vec<f64> =
            p.positions.iter().zip(&p.values).filter(|(x, _)| **x <= limit).map(|(_, v)| *v).collect();
        (in_scalp.iter().cloned().fold(f64::INFINITY, f64::min), in_scalp.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    });
    let peak_scalp = steady.as_ref().and_then(|s| masked_max_min(&s.field, |v| phantom.material_id[v] == first_id)).map(|m| m.1);
    let rise = match (&steady, &baseline) {
        (Some(s), Some(b)) => Some(region_stats(&difference(&s.field, &b.field)?, &cortex_mask)?),
        _ => None,
    };
    let dose = heat_density.as_ref().map(|d| region_stats(d, &cortex_mask)).transpose()?;
    let deep_brain = match (&steady, probes.iter().find(|p| p.name == phantom.material(cortex_id).name)) {
        (Some(s), Some(p)) => Some(s.field.values[grid_index(&phantom, p.position)]),
        _ => None,
    };

    let transient_summary = transient.as_ref().map(|t| {
        let probes_out = probes
            .iter()
            .zip(&t.traces)
            .map(|(p, tr)| ProbeSummary {
                name: p.name.clone(),
                position_mm: p.position.map(|x| x / MM_TO_M),
                initial_c: tr[0],
                final_c: *tr.last().unwrap(),
                change_c: tr.last().unwrap() - tr[0],
            })
            .collect();
        let minute = t.times.iter().position(|&x| x >= 60.0 - 1e-9);
        let cortex_first_minute = probes.iter().position(|p| p.name == "cortex").map(|i| {
            let end = minute.unwrap_or(t.times.len() - 1);
            t.traces[i][..=end].iter().map(|v| v - t.traces[i][0]).fold(f64::NEG_INFINITY, f64::max)
        });
        let final_vs_steady = steady.as_ref().map(|s| {
            t.final_field
                .values
                .iter()
                .zip(&s.field.values)
                .enumerate()
                .filter(|(v, _)| phantom.material_of(*v).thermal.is_some())
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0, f64::max)
        });
        let start = minute.unwrap_or(0);
        let monotone = t.traces.iter().all(|tr| {
            let w = &tr[start..];
            let tol = 1e-9;
            w.windows(2).all(|p| p[1] >= p[0] - tol) || w.windows(2).all(|p| p[1] <= p[0] + tol)
        });
        TransientSummary {
            t_end_s: cfg.thermal.transient.t_end_s,
            dt_s: cfg.thermal.transient.dt_s,
            probes: probes_out,
            cortex_first_minute_rise_c: cortex_first_minute,
            final_vs_steady_max_c: final_vs_steady,
            monotone_after_first_minute: monotone,
        }
    });

    let mut light_speed = Vec::new();
    for l in &cfg.phantom.layers {
        if light_speed.iter().any(|(n, _): &(String, f64)| *n == l.material) {
            continue;
        }
        let id = phantom.find_material(&l.material)?;
        if let Some(o) = phantom.material(id).optical {
            light_speed.push((l.material.clone(), light_speed_in_medium(o.n)?));
        }
    }

    let argmax = grid.coords(fluence.argmax());
    let report = RunReport {
        property_set: cfg.property_set.clone(),
        dims: grid.dims,
        spacing_mm: h / MM_TO_M,
        irradiance_mw_per_cm2: cfg.sources.irradiance_mw_per_cm2,
        light_speed_cm_per_s: light_speed,
        optics_solver: format!("{:?}", cfg.optics.solver).to_lowercase(),
        optics_boundary: format!("{:?}", cfg.optics.boundary).to_lowercase(),
        optics_cg_iterations: diffusion.as_ref().map(|d| d.stats.iterations),
        optics_balance_residual: diffusion.as_ref().map(|d| d.balance.relative_residual()),
        fluence_max_mw_per_cm2: fluence.max(),
        fluence_argmax: argmax,
        cortex_voxels: cortex_fluence.count,
        cortex_fluence_min_mw_per_cm2: cortex_fluence.min,
        cortex_fluence_max_mw_per_cm2: cortex_fluence.max,
        cortex_fluence_mean_mw_per_cm2: cortex_fluence.mean,
        cortex_surface_fluence_min_mw_per_cm2: surface.0,
        cortex_surface_fluence_max_mw_per_cm2: surface.1,
        penetration_depth_1e_cm: pen_1e,
        penetration_threshold_mw_per_cm2: cfg.optics.penetration_threshold_mw_per_cm2,
        penetration_depth_threshold_cm: pen_abs,
        mc: mc_summary,
        heating: match cfg.thermal.heating {
            Heating::LedOnly => "led-only".into(),
            Heating::Physical => "physical".into(),
        },
        peak_scalp_temperature_c: peak_scalp,
        scalp_cutline_min_c: scalp_span.map(|s| s.0),
        scalp_cutline_max_c: scalp_span.map(|s| s.1),
        brain_deep_temperature_c: deep_brain,
        cortex_max_rise_c: rise.map(|r| r.max),
        cortex_mean_rise_c: rise.map(|r| r.mean),
        cortex_heat_density_min_j_per_cm3: dose.map(|d| d.min),
        cortex_heat_density_max_j_per_cm3: dose.map(|d| d.max),
        cortex_heat_density_mean_j_per_cm3: dose.map(|d| d.mean),
        thermal_cg_iterations: steady.as_ref().map(|s| s.stats.iterations),
        thermal_balance_residual: steady.as_ref().map(|s| s.balance.relative_residual()),
        transient: transient_summary,
    };

    Ok(RunOutputs {
        phantom,
        patches,
        column,
        column_runs: runs,
        cortex_mask,
        diffusion,
        mc,
        heat,
        steady,
        baseline,
        heat_density,
        transient,
        cutlines,
        report,
    })
}

fn grid_index(phantom: &VoxelPhantom, p: [f64; 3]) -> usize {
    let c = phantom.grid.voxel_of(p).expect("probe inside grid");
    phantom.grid.index(c[0], c[1], c[2])
}

/// Writes every artifact of a run into `dir`. Returns the files written, in
/// a fixed order.
pub fn write_outputs(out: &RunOutputs, cfg: &SimConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    io::ensure_dir(dir)?;
    let mut written = Vec::new();
    if cfg.output.dump_fields {
        let mut dump = |name: &str, f: &ScalarField| -> Result<(), RunError> {
            let stem = dir.join(name);
            io::write_field_dump(f, &stem)?;
            let (h, b) = io::dump_paths(&stem);
            written.push(h);
            written.push(b);
            Ok(())
        };
        if let Some(d) = &out.diffusion {
            dump("fluence", &d.field)?;
        }
        if let Some(m) = &out.mc {
            dump("fluence_mc", &m.fluence)?;
        }
        if let Some(s) = &out.steady {
            dump("temperature", &s.field)?;
        }
        if let Some(b) = &out.baseline {
            dump("temperature_no_light", &b.field)?;
        }
        if let Some(d) = &out.heat_density {
            dump("heat_density", d)?;
        }
        if let Some(t) = &out.transient {
            dump("temperature_final", &t.final_field)?;
            for (time, f) in &t.snapshots {
                dump(&format!("temperature_t{time}s"), f)?;
            }
        }
    }
    for (name, p) in &out.cutlines {
        let path = dir.join(format!("{name}.csv"));
        io::write_cutline_csv(p, &path)?;
        written.push(path);
    }
    if let Some(t) = &out.transient {
        let path = dir.join("probes.csv");
        io::write_text(&path, &io::probe_csv(&t.times, &t.probe_names, &t.traces))?;
        written.push(path);
    }
    let txt = dir.join("report.txt");
    io::write_text(&txt, &out.report.to_text())?;
    written.push(txt);
    let json = dir.join("report.json");
    io::write_text(&json, &out.report.to_json())?;
    written.push(json);
    Ok(written)
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    /// Total LED irradiance values (mW/cm²).
    Irradiance(Vec<f64>),
    /// Optical property sets, applied over the base materials.
    PropertySets(Vec<PropertySet>),
}

#[derive(Debug)]
pub struct SweepRow {
    pub label: String,
    pub value: Option<f64>,
    pub result: Result<RunOutputs, RunError>,
}

/// The config for row `i` of a sweep.
pub fn sweep_config(base: &SimConfig, spec: &SweepSpec, i: usize) -> Result<(String, Option<f64>, SimConfig), RunError> {
    let mut cfg = base.clone();
    match spec {
        SweepSpec::Irradiance(values) => {
            let v = values[i];
            cfg.sources.irradiance_mw_per_cm2 = v;
            Ok((format!("{v}"), Some(v), cfg))
        }
        SweepSpec::PropertySets(sets) => {
            let set = &sets[i];
            let lib = cfg.library().map_err(RunError::Config)?;
            for (name, entry) in &set.materials {
                let base_m = lib.get(name).ok().cloned();
                let m = overlay_material(name, base_m, entry).map_err(RunError::Config)?;
                // Store the resolved optics back as a config entry.
                let merged = cfg.materials.entry(name.clone()).or_default();
                let o = m.optical.ok_or_else(|| RunError::Config(format!("'{name}' has no optics")))?;
                merged.mu_a_per_cm = Some(o.mu_a / 100.0);
                merged.mu_s_per_cm = Some(o.mu_s / 100.0);
                merged.mu_s_prime_per_cm = None;
                merged.g = Some(o.g);
                merged.n = Some(o.n);
                merged.d_cm = o.d_override.map(|d| d * 100.0);
            }
            cfg.property_set = Some(set.name.clone());
            Ok((set.name.clone(), None, cfg))
        }
    }
}

/// One coupled run per sweep value, in input order. Stops at the first
/// failure; the failed row is the last one returned.
pub fn run_sweep(base: &SimConfig, spec: &SweepSpec) -> Vec<SweepRow> {
    let n = match spec {
        SweepSpec::Irradiance(v) => v.len(),
        SweepSpec::PropertySets(s) => s.len(),
    };
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let row = match sweep_config(base, spec, i) {
            Ok((label, value, cfg)) => SweepRow { label, value, result: run_coupled(&cfg) },
            Err(e) => SweepRow { label: format!("#{i}"), value: None, result: Err(e) },
        };
        let failed = row.result.is_err();
        rows.push(row);
        if failed {
            break;
        }
    }
    rows
}

/// Summary table of a sweep; rows that did not run are absent and a failed
/// row is flagged.
pub fn sweep_csv(rows: &[SweepRow], total: usize) -> String {
    let mut s = String::from(
        "label,status,peak_fluence_mW_per_cm2,cortex_fluence_max_mW_per_cm2,penetration_depth_1e_cm,peak_scalp_temperature_C,cortex_max_rise_C\n",
    );
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
    for r in rows {
        match &r.result {
            Ok(o) => {
                let rep = &o.report;
                let _ = writeln!(
                    s,
                    "{},ok,{},{},{},{},{}",
                    r.label,
                    rep.fluence_max_mw_per_cm2,
                    rep.cortex_fluence_max_mw_per_cm2,
                    opt(rep.penetration_depth_1e_cm),
                    opt(rep.peak_scalp_temperature_c),
                    opt(rep.cortex_max_rise_c)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{},failed: {},,,,,", r.label, e.to_string().replace(',', ";"));
            }
        }
    }
    if rows.len() < total {
        let _ = writeln!(s, "# partial: {} of {} rows ran", rows.len(), total);
    }
    s
}
