//! Pennes bioheat transport on the voxel phantom.
//!
//! `ρc·∂T/∂t = ∇·(k∇T) + q_s + ρb·cb·wb·(T_b − T)`, discretised with the same
//! cell-centred finite volumes as the optics. Voxels without thermal
//! properties (air) are excluded; tissue faces that border them lose heat by
//! convection to the ambient.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{require, Error, Result};
use crate::field::{Quantity, ScalarField};
use crate::geometry::{Face, PerFace};
use crate::math::{self, ordered_sum};
use crate::phantom::{BloodProps, VoxelPhantom};
use crate::solver::{pcg, CgOptions, CgStats, Stencil};
use crate::sources::{assemble_heat_flux, BoundaryFluxMap, SourcePatch};
use crate::units::MW_PER_CM2_TO_W_PER_M2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalFace {
    Insulated,
    /// Convection to `T_inf` through the film coefficient `h`.
    Convective,
    /// Held at the given temperature (°C).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBoundarySpec {
    /// Heat transfer coefficient (W/m²·°C).
    pub h: f64,
    /// Ambient temperature (°C).
    pub t_inf: f64,
    /// Condition on each of the six grid faces. Tissue faces that touch air
    /// inside the grid are always convective.
    pub outer: PerFace<ThermalFace>,
}

impl ThermalBoundarySpec {
    /// Convection on the illuminated face, insulation elsewhere.
    pub fn top_convective(h: f64, t_inf: f64) -> Self {
        Self { h, t_inf, outer: PerFace::uniform(ThermalFace::Insulated).with(Face::ZMin, ThermalFace::Convective) }
    }

    pub fn insulated() -> Self {
        Self { h: 0.0, t_inf: 25.0, outer: PerFace::uniform(ThermalFace::Insulated) }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.h >= 0.0 && self.h.is_finite(), "h", self.h, "must be >= 0")?;
        require(self.t_inf.is_finite(), "T_inf", self.t_inf, "must be finite")?;
        for f in self.outer.0 {
            if let ThermalFace::Fixed(t) = f {
                require(t.is_finite(), "fixed face temperature", t, "must be finite")?;
            }
        }
        Ok(())
    }
}

/// How absorbed light enters the heat balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatingMode {
    /// Only metabolic heat is volumetric; LED heat enters through the patches.
    LedOnly,
    /// Adds `μa·φ` to the metabolic heat.
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatSourceField {
    /// Volumetric source (W/m³).
    pub volumetric: ScalarField,
    /// Heat flux (W/m²) into exposed face elements under the patches.
    pub boundary_flux: BoundaryFluxMap,
}

impl HeatSourceField {
    /// Metabolic heat only, no boundary flux.
    pub fn metabolic(phantom: &VoxelPhantom) -> Self {
        let values = (0..phantom.grid.len())
            .map(|v| phantom.material_of(v).thermal.map_or(0.0, |t| t.q_met))
            .collect();
        Self {
            volumetric: ScalarField { grid: phantom.grid, quantity: Quantity::HeatSource, values },
            boundary_flux: BoundaryFluxMap::default(),
        }
    }
}

/// Builds the heat sources for one run. `fluence` is in mW/cm² and is needed
/// only in physical mode.
pub fn assemble_heat_sources(
    fluence: Option<&ScalarField>,
    phantom: &VoxelPhantom,
    patches: &[SourcePatch],
    mode: HeatingMode,
) -> Result<HeatSourceField> {
    let mut out = HeatSourceField::metabolic(phantom);
    out.boundary_flux = assemble_heat_flux(phantom, patches)?;
    if let Some(phi) = fluence {
        if phi.grid != phantom.grid {
            return Err(Error::GridMismatch);
        }
        if let Some((voxel, &value)) = phi.values.iter().enumerate().find(|(_, &x)| !(x >= 0.0)) {
            return Err(Error::NegativeFluence { voxel, value });
        }
    }
    if mode == HeatingMode::Physical {
        let phi = fluence.ok_or_else(|| Error::InvalidInput("physical heating needs a fluence field".into()))?;
        for (v, q) in out.volumetric.values.iter_mut().enumerate() {
            let m = phantom.material_of(v);
            if let (Some(o), Some(_)) = (m.optical, m.thermal) {
                *q += o.mu_a * phi.values[v] * MW_PER_CM2_TO_W_PER_M2;
            }
        }
    }
    Ok(out)
}

/// Per-material starting temperatures (°C). Materials not listed start at
/// `default`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialTemps {
    pub by_material: Vec<(String, f64)>,
    pub default: f64,
}

impl InitialTemps {
    pub fn uniform(t: f64) -> Self {
        Self { by_material: Vec::new(), default: t }
    }

    /// Skin 33 °C, skull and brain 37 °C, LED housing 25 °C.
    pub fn reference() -> Self {
        Self {
            by_material: vec![
                ("scalp".into(), 33.0),
                ("skull".into(), 37.0),
                ("brain".into(), 37.0),
                ("led".into(), 25.0),
            ],
            default: 37.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.by_material.iter().map(|e| e.1).chain([self.default]) {
            require((0.0..=100.0).contains(&t), "initial temperature", t, "must lie in [0, 100] C")?;
        }
        Ok(())
    }

    pub fn of(&self, material: &str) -> f64 {
        self.by_material.iter().find(|e| e.0 == material).map_or(self.default, |e| e.1)
    }

    /// Initial field; voxels without thermal properties get `t_inf`.
    pub fn field(&self, phantom: &VoxelPhantom, t_inf: f64) -> Result<ScalarField> {
        self.validate()?;
        let values = (0..phantom.grid.len())
            .map(|v| {
                let m = phantom.material_of(v);
                if m.thermal.is_some() {
                    self.of(&m.name)
                } else {
                    t_inf
                }
            })
            .collect();
        Ok(ScalarField { grid: phantom.grid, quantity: Quantity::Temperature, values })
    }
}

/// Steady power bookkeeping (W). Positive values flow into the tissue.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatBalance {
    pub boundary_in: f64,
    pub volumetric: f64,
    pub perfusion: f64,
    /// Heat leaving through convective and fixed-temperature faces.
    pub boundary_out: f64,
}

impl HeatBalance {
    pub fn relative_residual(&self) -> f64 {
        let scale = self
            .boundary_in
            .abs()
            .max(self.volumetric.abs())
            .max(self.perfusion.abs())
            .max(self.boundary_out.abs());
        if scale == 0.0 {
            return 0.0;
        }
        (self.boundary_in + self.volumetric + self.perfusion - self.boundary_out).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyTemperature {
    pub field: ScalarField,
    pub stats: CgStats,
    pub balance: HeatBalance,
}

struct SinkFace {
    voxel: usize,
    conductance: f64,
    temperature: f64,
}

/// The assembled spatial operator and its constant right-hand side.
struct ThermalSystem {
    a: Stencil,
    rhs: Vec<f64>,
    /// ρc·V per voxel (J/°C); 0 for excluded voxels.
    capacity: Vec<f64>,
    active: Vec<bool>,
    faces: Vec<SinkFace>,
    /// (voxel, ρb·cb·wb·V) for perfused voxels.
    perfused: Vec<(usize, f64)>,
    boundary_in: f64,
    volumetric: f64,
    t_b: f64,
    t_inf: f64,
}

impl ThermalSystem {
    fn build(
        phantom: &VoxelPhantom,
        blood: &BloodProps,
        sources: &HeatSourceField,
        bc: &ThermalBoundarySpec,
    ) -> Result<Self> {
        blood.validate()?;
        bc.validate()?;
        let grid = phantom.grid;
        if sources.volumetric.grid != grid {
            return Err(Error::GridMismatch);
        }
        let n = grid.len();
        let h = grid.spacing;
        let vol = h * h * h;
        let area = h * h;
        let thermal: Vec<_> = phantom.materials.iter().map(|m| m.thermal).collect();
        let props = |v: usize| thermal[phantom.material_id[v].0 as usize];

        let mut a = Stencil::new(grid);
        let mut rhs = vec![0.0; n];
        let mut capacity = vec![0.0; n];
        let mut active = vec![false; n];
        let mut faces = Vec::new();
        let mut perfused = Vec::new();
        let mut volumetric = Vec::new();

        for v in 0..n {
            let Some(t) = props(v) else {
                a.add_diag(v, 1.0);
                rhs[v] = bc.t_inf;
                continue;
            };
            active[v] = true;
            capacity[v] = t.heat_capacity() * vol;
            let q = sources.volumetric.values[v];
            require(q.is_finite() && q >= 0.0, "volumetric heat source", q, "must be finite and >= 0")?;
            rhs[v] += q * vol;
            volumetric.push(q * vol);
            let perf = blood.perfusion_coefficient(t.w_b) * vol;
            if perf > 0.0 {
                a.add_diag(v, perf);
                rhs[v] += perf * blood.t_b;
                perfused.push((v, perf));
            }
            let c = grid.coords(v);
            for face in Face::ALL {
                let axis = face.axis();
                let neighbour = if face.is_min() {
                    (c[axis] > 0).then(|| v - grid.stride(axis))
                } else {
                    (c[axis] + 1 < grid.dims[axis]).then(|| v + grid.stride(axis))
                };
                let kind = match neighbour {
                    Some(w) => match props(w) {
                        Some(tw) => {
                            if !face.is_min() {
                                a.connect(axis, v, 2.0 * t.k * tw.k / (t.k + tw.k) * h);
                            }
                            continue;
                        }
                        None => ThermalFace::Convective,
                    },
                    None => bc.outer.get(face),
                };
                let sink = match kind {
                    ThermalFace::Insulated => None,
                    ThermalFace::Convective if bc.h > 0.0 => {
                        Some((area / (1.0 / bc.h + h / (2.0 * t.k)), bc.t_inf))
                    }
                    ThermalFace::Convective => None,
                    ThermalFace::Fixed(temp) => Some((2.0 * t.k * h, temp)),
                };
                if let Some((g, temp)) = sink {
                    a.add_diag(v, g);
                    rhs[v] += g * temp;
                    faces.push(SinkFace { voxel: v, conductance: g, temperature: temp });
                }
            }
        }

        let mut flux_in = Vec::with_capacity(sources.boundary_flux.len());
        for (e, q) in &sources.boundary_flux.entries {
            if !active[e.voxel] {
                return Err(Error::InvalidInput("boundary heat flux on a voxel without thermal properties".into()));
            }
            rhs[e.voxel] += q * area;
            flux_in.push(q * area);
        }

        Ok(Self {
            a,
            rhs,
            capacity,
            active,
            faces,
            perfused,
            boundary_in: ordered_sum(&flux_in),
            volumetric: ordered_sum(&volumetric),
            t_b: blood.t_b,
            t_inf: bc.t_inf,
        })
    }

    fn has_sink(&self) -> bool {
        !self.faces.is_empty() || !self.perfused.is_empty()
    }

    fn balance(&self, t: &[f64]) -> HeatBalance {
        let perf: Vec<f64> = self.perfused.iter().map(|&(v, c)| c * (self.t_b - t[v])).collect();
        let out: Vec<f64> = self.faces.iter().map(|f| f.conductance * (t[f.voxel] - f.temperature)).collect();
        HeatBalance {
            boundary_in: self.boundary_in,
            volumetric: self.volumetric,
            perfusion: ordered_sum(&perf),
            boundary_out: ordered_sum(&out),
        }
    }
}

/// Steady temperature (°C).
pub fn solve_pennes_steady(
    phantom: &VoxelPhantom,
    blood: &BloodProps,
    sources: &HeatSourceField,
    bc: &ThermalBoundarySpec,
    opts: CgOptions,
) -> Result<SteadyTemperature> {
    let sys = ThermalSystem::build(phantom, blood, sources, bc)?;
    if !sys.has_sink() {
        return Err(Error::NoSteadyState { net_input_w: sys.boundary_in + sys.volumetric });
    }
    // Solve for T − T_b. Without the common offset the residual measures the
    // heat flows themselves, so the stopping test bounds the energy error.
    let ones = vec![sys.t_b; sys.rhs.len()];
    let mut offset = vec![0.0; ones.len()];
    sys.a.apply(&ones, &mut offset);
    let rhs: Vec<f64> = sys.rhs.iter().zip(&offset).map(|(b, o)| b - o).collect();
    let mut t: Vec<f64> = sys.active.iter().map(|&a| if a { 0.0 } else { sys.t_inf - sys.t_b }).collect();
    let stats = pcg(&sys.a, &rhs, &mut t, opts)?;
    for x in &mut t {
        *x += sys.t_b;
    }
    let balance = sys.balance(&t);
    Ok(SteadyTemperature { field: ScalarField { grid: phantom.grid, quantity: Quantity::Temperature, values: t }, stats, balance })
}

/// A named point whose temperature is recorded during a transient run. The
/// value is that of the voxel containing `position` (m).
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    /// Time step (s).
    pub dt: f64,
    /// End time (s).
    pub t_end: f64,
    /// Interval between probe samples (s); rounded to a whole number of steps.
    pub probe_interval: f64,
    pub cg: CgOptions,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self { dt: 0.5, t_end: 1200.0, probe_interval: 1.0, cg: CgOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    /// Sample times (s), starting at 0.
    pub times: Vec<f64>,
    pub probe_names: Vec<String>,
    /// `traces[p][s]` is probe `p` at `times[s]` (°C).
    pub traces: Vec<Vec<f64>>,
    /// Fields at the requested snapshot times, in request order.
    pub snapshots: Vec<(f64, ScalarField)>,
    pub final_field: ScalarField,
    pub steps: usize,
    /// Most CG iterations any step needed.
    pub max_cg_iterations: usize,
}

/// Implicit-Euler transient from `init`.
#[allow(clippy::too_many_arguments)]
pub fn solve_pennes_transient(
    phantom: &VoxelPhantom,
    blood: &BloodProps,
    sources: &HeatSourceField,
    bc: &ThermalBoundarySpec,
    init: &InitialTemps,
    probes: &[Probe],
    snapshot_times: &[f64],
    opts: TransientOptions,
) -> Result<TransientResult> {
    require(opts.dt > 0.0 && opts.dt.is_finite(), "dt", opts.dt, "must be > 0")?;
    require(opts.t_end >= opts.dt, "t_end", opts.t_end, "must be >= dt")?;
    require(opts.probe_interval > 0.0, "probe interval", opts.probe_interval, "must be > 0")?;
    let grid = phantom.grid;
    let sys = ThermalSystem::build(phantom, blood, sources, bc)?;
    let mut t = init.field(phantom, bc.t_inf)?.values;

    let probe_voxels = probes
        .iter()
        .map(|p| {
            let c = grid
                .voxel_of(p.position)
                .ok_or(Error::OutsideGrid { x: p.position[0], y: p.position[1], z: p.position[2] })?;
            let v = grid.index(c[0], c[1], c[2]);
            if !sys.active[v] {
                return Err(Error::InvalidInput(alloc::format!("probe '{}' is not in tissue", p.name)));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = math::round(opts.t_end / opts.dt).max(1.0) as usize;
    let every = (math::round(opts.probe_interval / opts.dt) as usize).max(1);
    let mut a = sys.a.clone();
    for (v, &c) in sys.capacity.iter().enumerate() {
        a.add_diag(v, c / opts.dt);
    }

    let mut times = vec![0.0];
    let mut traces: Vec<Vec<f64>> = probe_voxels.iter().map(|&v| vec![t[v]]).collect();
    let mut pending: Vec<(usize, f64)> = snapshot_times.iter().copied().enumerate().collect();
    let mut snapshots: Vec<Option<ScalarField>> = vec![None; snapshot_times.len()];
    let take = |time: f64, t: &[f64], pending: &mut Vec<(usize, f64)>, snaps: &mut Vec<Option<ScalarField>>| {
        pending.retain(|&(i, ts)| {
            if ts <= time + 1e-9 {
                snaps[i] = Some(ScalarField { grid, quantity: Quantity::Temperature, values: t.to_vec() });
                false
            } else {
                true
            }
        });
    };
    take(0.0, &t, &mut pending, &mut snapshots);

    let mut b = vec![0.0; t.len()];
    let mut max_iter = 0;
    for step in 1..=steps {
        for v in 0..t.len() {
            b[v] = sys.rhs[v] + sys.capacity[v] / opts.dt * t[v];
        }
        let stats = pcg(&a, &b, &mut t, opts.cg)?;
        max_iter = max_iter.max(stats.iterations);
        let time = step as f64 * opts.dt;
        if step % every == 0 || step == steps {
            times.push(time);
            for (trace, &v) in traces.iter_mut().zip(&probe_voxels) {
                trace.push(t[v]);
            }
        }
        take(time, &t, &mut pending, &mut snapshots);
    }

    Ok(TransientResult {
        times,
        probe_names: probes.iter().map(|p| p.name.clone()).collect(),
        traces,
        snapshots: snapshot_times.iter().copied().zip(snapshots.into_iter().flatten()).collect(),
        final_field: ScalarField { grid, quantity: Quantity::Temperature, values: t },
        steps,
        max_cg_iterations: max_iter,
    })
}

/// `ρ·cp·(T − T_i)` with `ρ` in kg/cm³, giving J/cm³.
pub fn absorbed_heat_density(t: f64, t_init: f64, rho_kg_per_cm3: f64, cp: f64) -> f64 {
    rho_kg_per_cm3 * cp * (t - t_init)
}

/// Per-voxel stored heat (J/cm³) relative to `init`, using each material's
/// own density and specific heat. Voxels without thermal properties are 0.
pub fn heat_density_field(t: &ScalarField, init: &ScalarField, phantom: &VoxelPhantom) -> Result<ScalarField> {
    if !t.same_grid(init) || t.grid != phantom.grid {
        return Err(Error::GridMismatch);
    }
    let values = (0..t.values.len())
        .map(|v| match phantom.material_of(v).thermal {
            Some(th) => absorbed_heat_density(
                t.values[v],
                init.values[v],
                th.rho / crate::units::KG_PER_CM3_TO_KG_PER_M3,
                th.cp,
            ),
            None => 0.0,
        })
        .collect();
    Ok(ScalarField { grid: t.grid, quantity: Quantity::HeatDensity, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{build_layered_phantom, LayerSpec, MaterialLibrary};
    use approx::assert_relative_eq;

    fn block(material: &str, extent: f64, h: f64) -> VoxelPhantom {
        build_layered_phantom(&MaterialLibrary::reference(), &[LayerSpec::new(material, extent)], extent, h, None)
            .unwrap()
    }

    #[test]
    fn insulated_brain_reaches_perfusion_equilibrium() {
        let p = block("brain", 6.0, 1.0);
        let s = HeatSourceField::metabolic(&p);
        let sol = solve_pennes_steady(&p, &BloodProps::REFERENCE, &s, &ThermalBoundarySpec::insulated(), CgOptions::default())
            .unwrap();
        let expected = 37.0 + 10437.0 / (1050.0 * 3600.0 * 0.08);
        for &t in &sol.field.values {
            assert_relative_eq!(t, expected, epsilon = 1e-9);
        }
        assert!((expected - 37.0345).abs() < 1e-4);
        assert!(sol.balance.relative_residual() < 1e-9);
    }

    #[test]
    fn no_sink_with_heat_input_is_rejected() {
        let mut p = block("brain", 4.0, 1.0);
        for m in &mut p.materials {
            if let Some(t) = &mut m.thermal {
                t.w_b = 0.0;
            }
        }
        let s = HeatSourceField::metabolic(&p);
        let e = solve_pennes_steady(&p, &BloodProps::REFERENCE, &s, &ThermalBoundarySpec::insulated(), CgOptions::default());
        assert!(matches!(e, Err(Error::NoSteadyState { net_input_w }) if net_input_w > 0.0));
    }

    #[test]
    fn conduction_equilibrium_with_fixed_faces() {
        let mut p = block("skull", 4.0, 1.0);
        for m in &mut p.materials {
            if let Some(t) = &mut m.thermal {
                t.w_b = 0.0;
                t.q_met = 0.0;
            }
        }
        let s = HeatSourceField::metabolic(&p);
        let bc = ThermalBoundarySpec { h: 0.0, t_inf: 25.0, outer: PerFace::uniform(ThermalFace::Fixed(37.0)) };
        let sol = solve_pennes_steady(&p, &BloodProps::REFERENCE, &s, &bc, CgOptions::default()).unwrap();
        assert!(sol.field.values.iter().all(|&t| (t - 37.0).abs() < 1e-9));
    }

    #[test]
    fn physical_mode_adds_absorbed_light() {
        let p = block("brain", 3.0, 1.0);
        let phi = ScalarField::filled(p.grid, Quantity::FluenceRate, 0.1);
        let led_only = assemble_heat_sources(Some(&phi), &p, &[], HeatingMode::LedOnly).unwrap();
        let phys = assemble_heat_sources(Some(&phi), &p, &[], HeatingMode::Physical).unwrap();
        assert_eq!(led_only.volumetric, HeatSourceField::metabolic(&p).volumetric);
        // 0.57 /cm × 0.1 mW/cm² = 0.057 mW/cm³ = 57 W/m³.
        assert_relative_eq!(phys.volumetric.values[0] - led_only.volumetric.values[0], 57.0, epsilon = 1e-9);
        let zero = ScalarField::zeros(p.grid, Quantity::FluenceRate);
        let phys0 = assemble_heat_sources(Some(&zero), &p, &[], HeatingMode::Physical).unwrap();
        assert_eq!(phys0.volumetric, led_only.volumetric);
        let mut neg = zero.clone();
        neg.values[5] = -1.0;
        assert_eq!(
            assemble_heat_sources(Some(&neg), &p, &[], HeatingMode::Physical),
            Err(Error::NegativeFluence { voxel: 5, value: -1.0 })
        );
    }

    #[test]
    fn dose_arithmetic() {
        let d = absorbed_heat_density(0.05, 0.0, 0.00105, 3650.0);
        assert!((d - 0.191_625).abs() < 1e-15);
        // 0.19163 is the same number to five significant digits.
        assert!((d - 0.19163).abs() <= 5e-6 + 1e-15);
        assert_eq!(absorbed_heat_density(36.2, 36.2, 0.00105, 3650.0), 0.0);
    }

    #[test]
    fn brain_relaxes_with_perfusion_time_constant() {
        let p = block("brain", 3.0, 1.0);
        let s = HeatSourceField::metabolic(&p);
        let probe = Probe { name: "c".into(), position: [1.5e-3; 3] };
        let opts = TransientOptions { dt: 0.05, t_end: 20.0, probe_interval: 0.05, cg: CgOptions { tol: 1e-12, max_iter: 1000 } };
        let r = solve_pennes_transient(
            &p,
            &BloodProps::REFERENCE,
            &s,
            &ThermalBoundarySpec::insulated(),
            &InitialTemps::uniform(37.0),
            &[probe],
            &[],
            opts,
        )
        .unwrap();
        let tau: f64 = 1050.0 * 3650.0 / (1050.0 * 3600.0 * 0.08);
        assert!((tau - 12.67).abs() < 0.01);
        let rise = 10437.0 / (1050.0 * 3600.0 * 0.08);
        // Implicit Euler on T' = (T∞ − T)/τ: (1 + dt/τ)^-n decay.
        for (i, &time) in r.times.iter().enumerate() {
            let n = math::round(time / 0.05);
            let exact_ie = 37.0 + rise * (1.0 - libm::pow(1.0 + 0.05 / tau, -n));
            assert_relative_eq!(r.traces[0][i], exact_ie, epsilon = 1e-7);
            let exact = 37.0 + rise * (1.0 - math::exp(-time / tau));
            assert!((r.traces[0][i] - exact).abs() < 1e-3 * rise);
        }
    }
}
