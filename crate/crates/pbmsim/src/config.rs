//! TOML run configuration.
//!
//! Every section and almost every key has a default, so a config only needs to
//! state what differs from the reference head run. Values are written in the
//! units clinicians use (mm, 1/cm, mW/cm²) and converted to SI here.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use pbmsim_core::bioheat::{HeatingMode, InitialTemps, Probe, ThermalBoundarySpec, ThermalFace, TransientOptions};
use pbmsim_core::diffusion::OpticalBoundaryMode;
use pbmsim_core::geometry::{Face, PerFace};
use pbmsim_core::mc::McConfig;
use pbmsim_core::phantom::{BloodProps, LayerSpec, Material, TissueOpticalProps, TissueThermalProps};
use pbmsim_core::solver::CgOptions;
use pbmsim_core::sources::patch_grid;
use pbmsim_core::units::{MM_TO_M, MW_PER_CM2_C_TO_W_PER_M2_C};
use pbmsim_core::{Grid, MaterialLibrary};
use serde::{Deserialize, Serialize};

/// A rejected config, with the 1-based line of the offending key if known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Slab,
    Shells,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct LayerEntry {
    pub material: String,
    pub thickness_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct PhantomSection {
    pub geometry: Geometry,
    pub spacing_mm: f64,
    pub lateral_extent_mm: f64,
    /// Slab depth; defaults to the lateral extent.
    pub depth_mm: Option<f64>,
    pub layers: Vec<LayerEntry>,
    /// Shell mode: outer radius of the first layer and air margin around it.
    pub outer_radius_mm: f64,
    pub margin_mm: f64,
    pub cortex_thickness_mm: f64,
    pub model_led: bool,
    pub led_thickness_mm: f64,
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self {
            geometry: Geometry::Slab,
            spacing_mm: 0.5,
            lateral_extent_mm: 80.0,
            depth_mm: None,
            layers: pbmsim_core::phantom::reference_layers()
                .into_iter()
                .map(|l| LayerEntry { material: l.material, thickness_mm: l.thickness_mm })
                .collect(),
            outer_radius_mm: 40.0,
            margin_mm: 4.0,
            cortex_thickness_mm: 2.5,
            model_led: false,
            led_thickness_mm: 2.0,
        }
    }
}

/// Per-material overrides. Entries for materials of the built-in library
/// only need the keys that change; new materials must be complete.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct MaterialEntry {
    pub mu_a_per_cm: Option<f64>,
    pub mu_s_per_cm: Option<f64>,
    pub mu_s_prime_per_cm: Option<f64>,
    pub g: Option<f64>,
    pub n: Option<f64>,
    pub d_cm: Option<f64>,
    /// W/m·°C
    pub k: Option<f64>,
    /// kg/m³
    pub rho: Option<f64>,
    /// J/kg·°C
    pub cp: Option<f64>,
    /// 1/s
    pub w_b: Option<f64>,
    /// W/m³
    pub q_met: Option<f64>,
}

impl MaterialEntry {
    fn has_optical(&self) -> bool {
        self.mu_a_per_cm.is_some()
            || self.mu_s_per_cm.is_some()
            || self.mu_s_prime_per_cm.is_some()
            || self.g.is_some()
            || self.n.is_some()
            || self.d_cm.is_some()
    }

    fn has_thermal(&self) -> bool {
        self.k.is_some() || self.rho.is_some() || self.cp.is_some() || self.w_b.is_some() || self.q_met.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct BloodSection {
    pub rho: f64,
    pub cp: f64,
    pub t_b: f64,
}

impl Default for BloodSection {
    fn default() -> Self {
        let b = BloodProps::REFERENCE;
        Self { rho: b.rho_b, cp: b.c_b, t_b: b.t_b }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct SourcesSection {
    pub face: String,
    pub rows: usize,
    pub cols: usize,
    pub pitch_mm: f64,
    pub radius_mm: f64,
    pub irradiance_mw_per_cm2: f64,
    pub light_fraction: f64,
    pub heat_fraction: f64,
}

impl Default for SourcesSection {
    fn default() -> Self {
        Self {
            face: "z-min".into(),
            rows: 3,
            cols: 3,
            pitch_mm: 25.0,
            radius_mm: 8.0,
            irradiance_mw_per_cm2: 100.0,
            light_fraction: 0.35,
            heat_fraction: 0.65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpticsSolver {
    Diffusion,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Dirichlet,
    Robin,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct OpticsSection {
    pub solver: OpticsSolver,
    pub boundary: BoundaryMode,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub photons: u64,
    pub seed: u64,
    pub batch_size: u64,
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
    pub max_events: u64,
    /// Absolute level for the second penetration-depth criterion.
    pub penetration_threshold_mw_per_cm2: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        let mc = McConfig::default();
        Self {
            solver: OpticsSolver::Diffusion,
            boundary: BoundaryMode::Robin,
            tolerance: 1e-8,
            max_iterations: 20_000,
            photons: mc.n_photons,
            seed: mc.seed,
            batch_size: mc.batch_size,
            roulette_threshold: mc.roulette_threshold,
            roulette_survival: mc.roulette_survival,
            max_events: mc.max_events,
            penetration_threshold_mw_per_cm2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heating {
    LedOnly,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum FaceEntry {
    Kind(String),
    Fixed { fixed_c: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ProbeEntry {
    pub name: String,
    pub position_mm: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct TransientSection {
    pub enabled: bool,
    pub dt_s: f64,
    pub t_end_s: f64,
    pub probe_interval_s: f64,
    pub snapshot_times_s: Vec<f64>,
}

impl Default for TransientSection {
    fn default() -> Self {
        let t = TransientOptions::default();
        Self { enabled: false, dt_s: t.dt, t_end_s: t.t_end, probe_interval_s: t.probe_interval, snapshot_times_s: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct ThermalSection {
    pub h_mw_per_cm2_c: f64,
    pub t_inf_c: f64,
    pub heating: Heating,
    pub steady: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Grid-face conditions by face name; faces not listed are insulated.
    pub faces: BTreeMap<String, FaceEntry>,
    /// Initial temperature per material (°C).
    pub initial_c: BTreeMap<String, f64>,
    pub initial_default_c: f64,
    pub transient: TransientSection,
    /// Empty means one probe per layer under the central patch.
    pub probes: Vec<ProbeEntry>,
}

impl Default for ThermalSection {
    fn default() -> Self {
        let init = InitialTemps::reference();
        Self {
            h_mw_per_cm2_c: 0.5,
            t_inf_c: 25.0,
            heating: Heating::LedOnly,
            steady: true,
            tolerance: 1e-10,
            max_iterations: 50_000,
            faces: BTreeMap::from([("z-min".to_string(), FaceEntry::Kind("convective".into()))]),
            initial_c: init.by_material.into_iter().collect(),
            initial_default_c: init.default,
            transient: TransientSection::default(),
            probes: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct CutlineEntry {
    pub name: String,
    /// fluence | fluence_mc | temperature | heat_density
    pub quantity: String,
    pub from_mm: [f64; 3],
    pub to_mm: [f64; 3],
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct OutputSection {
    pub directory: String,
    pub dump_fields: bool,
    /// Empty means a depth cutline through the central patch for every
    /// computed field.
    pub cutlines: Vec<CutlineEntry>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), dump_fields: true, cutlines: vec![] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct SimConfig {
    /// Label of the optical property set (e.g. a wavelength).
    pub property_set: Option<String>,
    pub phantom: PhantomSection,
    pub materials: BTreeMap<String, MaterialEntry>,
    pub blood: BloodSection,
    pub sources: SourcesSection,
    pub optics: OpticsSection,
    pub thermal: ThermalSection,
    pub output: OutputSection,
}

/// Parses and validates a config file. In lenient mode unknown keys are
/// returned as warnings instead of rejected.
pub fn parse_config(path: &Path, lenient: bool) -> Result<(SimConfig, Vec<String>), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { message: format!("cannot read {}: {e}", path.display()), line: None })?;
    parse_config_str(&text, lenient)
}

pub fn parse_config_str(text: &str, lenient: bool) -> Result<(SimConfig, Vec<String>), ConfigError> {
    let (cfg, unknown) = deserialize_tracking::<SimConfig>(text)?;
    let mut warnings = Vec::new();
    for key in unknown {
        let line = key_line(text, &key);
        if lenient {
            let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
            warnings.push(format!("ignoring unknown key `{key}`{at}"));
        } else {
            return Err(ConfigError { message: format!("unknown key `{key}`"), line });
        }
    }
    cfg.validate().map_err(|(key, message)| ConfigError { message: format!("{key}: {message}"), line: key_line(text, &key) })?;
    Ok((cfg, warnings))
}

/// Deserializes `text`, collecting the dotted paths of keys that no field
/// accepted.
fn deserialize_tracking<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(T, Vec<String>), ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| toml_error(text, &e))?;
    let mut unknown = Vec::new();
    let value = serde_ignored::deserialize(de, |p| unknown.push(p.to_string())).map_err(|e| toml_error(text, &e))?;
    Ok((value, unknown))
}

fn toml_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError { message: e.message().trim().to_string(), line }
}

/// 1-based line that defines the dotted key `path` (array indices are
/// ignored). Falls back to the closest enclosing key.
pub fn key_line(text: &str, path: &str) -> Option<usize> {
    let parts: Vec<&str> = path.split('.').filter(|p| p.parse::<usize>().is_err()).collect();
    (1..=parts.len()).rev().find_map(|n| exact_key_line(text, &parts[..n]))
}

fn exact_key_line(text: &str, parts: &[&str]) -> Option<usize> {
    let clean = |s: &str| s.trim().trim_matches('"').trim_matches('\'').to_string();
    let mut table: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.starts_with('[') {
            let name = t.trim_start_matches('[').trim_end_matches(']');
            table = name.split('.').map(clean).collect();
            if table == parts {
                return Some(i + 1);
            }
            continue;
        }
        if let Some((k, _)) = t.split_once('=') {
            let mut full = table.clone();
            full.extend(k.split('.').map(clean));
            if full == parts {
                return Some(i + 1);
            }
        }
    }
    None
}

type Invalid = (String, String);

fn check(cond: bool, key: &str, msg: impl Into<String>) -> Result<(), Invalid> {
    if cond {
        Ok(())
    } else {
        Err((key.to_string(), msg.into()))
    }
}

impl SimConfig {
    /// Checks every invariant and that the derived objects can be built.
    /// Errors carry the dotted key they concern.
    pub fn validate(&self) -> Result<(), Invalid> {
        let p = &self.phantom;
        check(p.spacing_mm > 0.0 && p.spacing_mm.is_finite(), "phantom.spacing_mm", "must be > 0")?;
        check(p.lateral_extent_mm > 0.0, "phantom.lateral_extent_mm", "must be > 0")?;
        check(!p.layers.is_empty(), "phantom.layers", "at least one layer is required")?;
        for l in &p.layers {
            check(l.thickness_mm > 0.0, "phantom.layers.thickness_mm", format!("layer '{}' must be thicker than 0", l.material))?;
        }
        check(p.cortex_thickness_mm > 0.0, "phantom.cortex_thickness_mm", "must be > 0")?;
        let lib = self.library().map_err(|e| ("materials".to_string(), e))?;
        for l in &p.layers {
            let m = lib.get(&l.material).map_err(|_| ("phantom.layers.material".to_string(), format!("undefined material '{}'", l.material)))?;
            check(m.optical.is_some() || m.thermal.is_some(), "phantom.layers.material", format!("'{}' has no properties", l.material))?;
        }
        if p.model_led {
            check(p.geometry == Geometry::Slab, "phantom.model_led", "LED solids need slab geometry")?;
            check(lib.get("led").is_ok(), "phantom.model_led", "material 'led' is not defined")?;
        }
        self.blood().validate().map_err(|e| ("blood".to_string(), e.to_string()))?;

        let s = &self.sources;
        check(Face::from_name(&s.face).is_some(), "sources.face", format!("unknown face '{}'", s.face))?;
        check(s.irradiance_mw_per_cm2 >= 0.0, "sources.irradiance_mw_per_cm2", "must be >= 0")?;
        check((0.0..=1.0).contains(&s.light_fraction), "sources.light_fraction", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&s.heat_fraction), "sources.heat_fraction", "must lie in [0, 1]")?;
        check(
            (s.light_fraction + s.heat_fraction - 1.0).abs() <= 1e-9,
            "sources.heat_fraction",
            format!("light_fraction + heat_fraction = {} must equal 1", s.light_fraction + s.heat_fraction),
        )?;
        check(s.radius_mm > 0.0, "sources.radius_mm", "must be > 0")?;
        check(s.rows * s.cols == 0 || s.pitch_mm > 0.0, "sources.pitch_mm", "must be > 0")?;

        let o = &self.optics;
        check(o.tolerance > 0.0, "optics.tolerance", "must be > 0")?;
        check(o.max_iterations > 0, "optics.max_iterations", "must be > 0")?;
        self.mc_config().validate().map_err(|e| ("optics".to_string(), e.to_string()))?;
        check(o.penetration_threshold_mw_per_cm2 >= 0.0, "optics.penetration_threshold_mw_per_cm2", "must be >= 0")?;

        let t = &self.thermal;
        check(t.h_mw_per_cm2_c >= 0.0, "thermal.h_mw_per_cm2_c", "must be >= 0")?;
        check(t.tolerance > 0.0, "thermal.tolerance", "must be > 0")?;
        self.thermal_boundary().map_err(|e| ("thermal.faces".to_string(), e))?;
        self.initial_temps().validate().map_err(|e| ("thermal.initial_c".to_string(), e.to_string()))?;
        let tr = &t.transient;
        check(tr.dt_s > 0.0, "thermal.transient.dt_s", "must be > 0")?;
        check(tr.t_end_s >= tr.dt_s, "thermal.transient.t_end_s", "must be >= dt_s")?;
        check(tr.probe_interval_s > 0.0, "thermal.transient.probe_interval_s", "must be > 0")?;
        for c in &self.output.cutlines {
            check(c.samples >= 2, "output.cutlines.samples", "must be >= 2")?;
            check(
                matches!(c.quantity.as_str(), "fluence" | "fluence_mc" | "temperature" | "heat_density"),
                "output.cutlines.quantity",
                format!("unknown quantity '{}'", c.quantity),
            )?;
        }
        Ok(())
    }

    /// The built-in library with this config's overrides applied.
    pub fn library(&self) -> Result<MaterialLibrary, String> {
        let mut lib = MaterialLibrary::reference();
        for (name, entry) in &self.materials {
            let base = lib.get(name).ok().cloned();
            let m = overlay_material(name, base, entry)?;
            lib.insert(m).map_err(|e| format!("material '{name}': {e}"))?;
        }
        Ok(lib)
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        self.phantom.layers.iter().map(|l| LayerSpec::new(&l.material, l.thickness_mm)).collect()
    }

    pub fn blood(&self) -> BloodProps {
        BloodProps { rho_b: self.blood.rho, c_b: self.blood.cp, t_b: self.blood.t_b }
    }

    pub fn source_face(&self) -> Face {
        Face::from_name(&self.sources.face).unwrap_or(Face::ZMin)
    }

    pub fn patches(&self, grid: &Grid) -> pbmsim_core::Result<Vec<pbmsim_core::sources::SourcePatch>> {
        let s = &self.sources;
        patch_grid(grid, self.source_face(), s.rows, s.cols, s.pitch_mm, s.radius_mm, s.irradiance_mw_per_cm2, s.light_fraction)
    }

    pub fn optical_mode(&self) -> OpticalBoundaryMode {
        match self.optics.boundary {
            BoundaryMode::Dirichlet => OpticalBoundaryMode::Dirichlet,
            BoundaryMode::Robin => OpticalBoundaryMode::Robin,
        }
    }

    pub fn optics_cg(&self) -> CgOptions {
        CgOptions { tol: self.optics.tolerance, max_iter: self.optics.max_iterations }
    }

    pub fn thermal_cg(&self) -> CgOptions {
        CgOptions { tol: self.thermal.tolerance, max_iter: self.thermal.max_iterations }
    }

    pub fn mc_config(&self) -> McConfig {
        let o = &self.optics;
        McConfig {
            n_photons: o.photons,
            seed: o.seed,
            roulette_threshold: o.roulette_threshold,
            roulette_survival: o.roulette_survival,
            max_events: o.max_events,
            batch_size: o.batch_size,
        }
    }

    pub fn heating(&self) -> HeatingMode {
        match self.thermal.heating {
            Heating::LedOnly => HeatingMode::LedOnly,
            Heating::Physical => HeatingMode::Physical,
        }
    }

    pub fn thermal_boundary(&self) -> Result<ThermalBoundarySpec, String> {
        let t = &self.thermal;
        let mut outer = PerFace::uniform(ThermalFace::Insulated);
        for (name, entry) in &t.faces {
            let face = Face::from_name(name).ok_or_else(|| format!("unknown face '{name}'"))?;
            let kind = match entry {
                FaceEntry::Kind(k) => match k.as_str() {
                    "insulated" => ThermalFace::Insulated,
                    "convective" => ThermalFace::Convective,
                    other => return Err(format!("face '{name}': unknown condition '{other}'")),
                },
                FaceEntry::Fixed { fixed_c } => ThermalFace::Fixed(*fixed_c),
            };
            outer.set(face, kind);
        }
        let bc = ThermalBoundarySpec { h: t.h_mw_per_cm2_c * MW_PER_CM2_C_TO_W_PER_M2_C, t_inf: t.t_inf_c, outer };
        bc.validate().map_err(|e| e.to_string())?;
        Ok(bc)
    }

    pub fn initial_temps(&self) -> InitialTemps {
        InitialTemps {
            by_material: self.thermal.initial_c.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            default: self.thermal.initial_default_c,
        }
    }

    pub fn transient_options(&self) -> TransientOptions {
        let t = &self.thermal.transient;
        TransientOptions { dt: t.dt_s, t_end: t.t_end_s, probe_interval: t.probe_interval_s, cg: self.thermal_cg() }
    }

    pub fn explicit_probes(&self) -> Vec<Probe> {
        self.thermal
            .probes
            .iter()
            .map(|p| Probe { name: p.name.clone(), position: p.position_mm.map(|x| x * MM_TO_M) })
            .collect()
    }
}

/// Applies `entry` on top of `base` (if any).
pub fn overlay_material(name: &str, base: Option<Material>, entry: &MaterialEntry) -> Result<Material, String> {
    let mut m = base.unwrap_or(Material { name: name.to_string(), optical: None, thermal: None });
    if entry.has_optical() {
        if entry.mu_s_per_cm.is_some() && entry.mu_s_prime_per_cm.is_some() {
            return Err(format!("material '{name}': give mu_s_per_cm or mu_s_prime_per_cm, not both"));
        }
        let old = m.optical;
        let need = |v: Option<f64>, old: Option<f64>, key: &str| {
            v.or(old).ok_or_else(|| format!("material '{name}': missing {key}"))
        };
        let mu_a = need(entry.mu_a_per_cm, old.map(|o| o.mu_a / 100.0), "mu_a_per_cm")?;
        let g = need(entry.g, old.map(|o| o.g), "g")?;
        let n = need(entry.n, old.map(|o| o.n), "n")?;
        let mu_s = match (entry.mu_s_per_cm, entry.mu_s_prime_per_cm) {
            (Some(s), _) => s,
            (None, Some(sp)) => {
                if g >= 1.0 {
                    return Err(format!("material '{name}': g must be < 1"));
                }
                sp / (1.0 - g)
            }
            (None, None) => need(None, old.map(|o| o.mu_s / 100.0), "mu_s_per_cm or mu_s_prime_per_cm")?,
        };
        // A new scattering or absorption value invalidates a tabulated D
        // unless the entry restates it.
        let touched = entry.mu_a_per_cm.is_some() || entry.mu_s_per_cm.is_some() || entry.mu_s_prime_per_cm.is_some();
        let d = entry.d_cm.or(if touched { None } else { old.and_then(|o| o.d_override.map(|d| d * 100.0)) });
        m.optical = Some(
            TissueOpticalProps::from_per_cm(mu_a, mu_s, g, n, d).map_err(|e| format!("material '{name}': {e}"))?,
        );
    }
    if entry.has_thermal() {
        let old = m.thermal;
        let need = |v: Option<f64>, old: Option<f64>, key: &str| {
            v.or(old).ok_or_else(|| format!("material '{name}': missing {key}"))
        };
        let t = TissueThermalProps {
            k: need(entry.k, old.map(|t| t.k), "k")?,
            rho: need(entry.rho, old.map(|t| t.rho), "rho")?,
            cp: need(entry.cp, old.map(|t| t.cp), "cp")?,
            w_b: entry.w_b.or(old.map(|t| t.w_b)).unwrap_or(0.0),
            q_met: entry.q_met.or(old.map(|t| t.q_met)).unwrap_or(0.0),
        };
        t.validate().map_err(|e| format!("material '{name}': {e}"))?;
        m.thermal = Some(t);
    }
    Ok(m)
}

/// A named set of optical overrides, e.g. one wavelength.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default)]
pub struct PropertySet {
    pub name: String,
    pub materials: BTreeMap<String, MaterialEntry>,
}

pub fn parse_property_set(path: &Path) -> Result<PropertySet, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { message: format!("cannot read {}: {e}", path.display()), line: None })?;
    let (set, unknown) = deserialize_tracking::<PropertySet>(&text)?;
    if let Some(key) = unknown.first() {
        return Err(ConfigError { message: format!("unknown key `{key}`"), line: key_line(&text, key) });
    }
    for (name, e) in &set.materials {
        if e.has_thermal() {
            return Err(ConfigError {
                message: format!("property set may only change optical coefficients ('{name}')"),
                line: key_line(&text, &format!("materials.{name}")),
            });
        }
    }
    Ok(set)
}

pub const UNITS_TABLE: &str = "\
Config key                     unit            to SI
spacing_mm, *_mm               mm              x 1e-3 m
mu_a_per_cm, mu_s*_per_cm      1/cm            x 100 1/m
d_cm                           cm              x 1e-2 m
irradiance_mw_per_cm2          mW/cm^2         x 10 W/m^2
h_mw_per_cm2_c                 mW/cm^2.C       x 10 W/m^2.C
k                              W/m.C           as is
rho                            kg/m^3          as is
cp                             J/kg.C          as is
w_b                            1/s             as is
q_met                          W/m^3           as is
*_c, t_b                       C               as is
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_run() {
        let (cfg, w) = parse_config_str("", false).unwrap();
        assert!(w.is_empty());
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.library().unwrap(), MaterialLibrary::reference());
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = "[optics]\nsolver = \"mc\"\nphotonz = 10\n";
        let e = parse_config_str(text, false).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("photonz"), "{e}");
        let text = "[materials.scalp]\nk = 0.5\ncolour = 1\n";
        let e = parse_config_str(text, false).unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
        let (_, w) = parse_config_str(text, true).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("materials.scalp.colour"), "{w:?}");
    }

    #[test]
    fn fraction_error_points_at_its_line() {
        let text = "[sources]\nlight_fraction = 0.4\nheat_fraction = 0.7\n";
        let e = parse_config_str(text, false).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("must equal 1"));
    }

    #[test]
    fn empty_layers_rejected() {
        let e = parse_config_str("[phantom]\nlayers = []\n", false).unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn overrides_keep_unstated_values() {
        let (cfg, _) = parse_config_str("[materials.brain]\nw_b = 0.01\n", false).unwrap();
        let t = cfg.library().unwrap().get("brain").unwrap().thermal.unwrap();
        assert_eq!(t.w_b, 0.01);
        assert_eq!(t.k, 0.57);
        let e = parse_config_str("[materials.gel]\nk = 0.6\n", false).unwrap_err();
        assert!(e.message.contains("missing rho"), "{e}");
    }

    #[test]
    fn key_lines() {
        let text = "# c\n[a]\nx = 1\n[[a.list]]\ny = 2\n[b]\nz = { w = 1 }\n";
        assert_eq!(key_line(text, "a.x"), Some(3));
        assert_eq!(key_line(text, "a.list.0.y"), Some(5));
        assert_eq!(key_line(text, "b.z.w"), Some(7));
        assert_eq!(key_line(text, "c"), None);
    }
}
