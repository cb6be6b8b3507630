//! Tissue property tables and voxelized layered head phantoms.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{require, Error, Result};
use crate::field::Grid;
use crate::math;
use crate::units::{C_VACUUM_CM_PER_S, MM_TO_M, PER_CM_TO_PER_M};

/// μs′ = μs(1 − g). Units follow `mu_s`.
pub fn reduced_scattering(mu_s: f64, g: f64) -> Result<f64> {
    require(mu_s >= 0.0, "mu_s", mu_s, "must be >= 0")?;
    if !(0.0..1.0).contains(&g) {
        return Err(Error::UndefinedReducedScattering(g));
    }
    Ok(mu_s * (1.0 - g))
}

/// D = 1 / (3(μa + μs′)). Returns a length in the reciprocal of the input units.
pub fn diffusion_coefficient(mu_a: f64, mu_s_prime: f64) -> Result<f64> {
    require(mu_a >= 0.0, "mu_a", mu_a, "must be >= 0")?;
    require(mu_s_prime >= 0.0, "mu_s_prime", mu_s_prime, "must be >= 0")?;
    let total = mu_a + mu_s_prime;
    if total <= 0.0 {
        return Err(Error::Vacuum);
    }
    Ok(1.0 / (3.0 * total))
}

/// μeff = sqrt(μa / D), the CW decay rate far from sources.
pub fn effective_attenuation(mu_a: f64, d: f64) -> Result<f64> {
    require(mu_a >= 0.0, "mu_a", mu_a, "must be >= 0")?;
    require(d > 0.0, "D", d, "must be > 0")?;
    Ok(math::sqrt(mu_a / d))
}

/// Speed of light in a medium of refractive index `n`, in cm/s.
pub fn light_speed_in_medium(n: f64) -> Result<f64> {
    require(n >= 1.0, "n", n, "must be >= 1")?;
    Ok(C_VACUUM_CM_PER_S / n)
}

/// Optical coefficients, SI (1/m, m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueOpticalProps {
    pub mu_a: f64,
    pub mu_s: f64,
    pub g: f64,
    pub n: f64,
    /// Tabulated diffusion coefficient; takes precedence over the
    /// `1/(3(μa+μs′))` estimate when present.
    pub d_override: Option<f64>,
}

impl TissueOpticalProps {
    /// Builds from the customary tissue-optics units (1/cm, cm).
    pub fn from_per_cm(mu_a: f64, mu_s: f64, g: f64, n: f64, d_cm: Option<f64>) -> Result<Self> {
        let p = Self {
            mu_a: mu_a * PER_CM_TO_PER_M,
            mu_s: mu_s * PER_CM_TO_PER_M,
            g,
            n,
            d_override: d_cm.map(|d| d / PER_CM_TO_PER_M),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.mu_a >= 0.0 && self.mu_a.is_finite(), "mu_a", self.mu_a, "must be >= 0")?;
        require(self.mu_s >= 0.0 && self.mu_s.is_finite(), "mu_s", self.mu_s, "must be >= 0")?;
        require((0.0..1.0).contains(&self.g), "g", self.g, "must satisfy 0 <= g < 1")?;
        require(self.n >= 1.0 && self.n.is_finite(), "n", self.n, "must be >= 1")?;
        if let Some(d) = self.d_override {
            require(d > 0.0 && d.is_finite(), "D", d, "must be > 0")?;
        }
        Ok(())
    }

    pub fn mu_s_prime(&self) -> f64 {
        self.mu_s * (1.0 - self.g)
    }

    pub fn mu_t(&self) -> f64 {
        self.mu_a + self.mu_s
    }

    /// Diffusion coefficient (m).
    pub fn diffusion(&self) -> Result<f64> {
        match self.d_override {
            Some(d) => Ok(d),
            None => diffusion_coefficient(self.mu_a, self.mu_s_prime()),
        }
    }

    /// Transport mean free path 1/(μa + μs′) (m).
    pub fn transport_mfp(&self) -> f64 {
        1.0 / (self.mu_a + self.mu_s_prime())
    }
}

/// Thermal coefficients, SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueThermalProps {
    /// Conductivity (W/m·°C).
    pub k: f64,
    /// Density (kg/m³).
    pub rho: f64,
    /// Specific heat (J/kg·°C).
    pub cp: f64,
    /// Blood perfusion rate (1/s).
    pub w_b: f64,
    /// Metabolic heat (W/m³).
    pub q_met: f64,
}

impl TissueThermalProps {
    pub fn validate(&self) -> Result<()> {
        require(self.k > 0.0 && self.k.is_finite(), "k", self.k, "must be > 0")?;
        require(self.rho > 0.0 && self.rho.is_finite(), "rho", self.rho, "must be > 0")?;
        require(self.cp > 0.0 && self.cp.is_finite(), "cp", self.cp, "must be > 0")?;
        require(self.w_b >= 0.0 && self.w_b.is_finite(), "w_b", self.w_b, "must be >= 0")?;
        require(self.q_met >= 0.0 && self.q_met.is_finite(), "q_met", self.q_met, "must be >= 0")?;
        Ok(())
    }

    /// Volumetric heat capacity ρ·cp (J/m³·°C).
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.cp
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BloodProps {
    /// kg/m³
    pub rho_b: f64,
    /// J/kg·°C
    pub c_b: f64,
    /// Arterial temperature (°C).
    pub t_b: f64,
}

impl BloodProps {
    pub const REFERENCE: BloodProps = BloodProps { rho_b: 1050.0, c_b: 3600.0, t_b: 37.0 };

    pub fn validate(&self) -> Result<()> {
        require(self.rho_b > 0.0, "rho_b", self.rho_b, "must be > 0")?;
        require(self.c_b > 0.0, "c_b", self.c_b, "must be > 0")?;
        require((30.0..=42.0).contains(&self.t_b), "T_b", self.t_b, "must lie in [30, 42] C")?;
        Ok(())
    }

    /// ρb·cb·wb (W/m³·°C) for a tissue perfused at `w_b`.
    pub fn perfusion_coefficient(&self, w_b: f64) -> f64 {
        self.rho_b * self.c_b * w_b
    }
}

/// A named material. Missing optical properties mean the material is
/// transparent with index 1 (air, LED encapsulant); missing thermal properties
/// exclude it from the heat solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub optical: Option<TissueOpticalProps>,
    pub thermal: Option<TissueThermalProps>,
}

impl Material {
    pub fn air() -> Self {
        Self { name: "air".into(), optical: None, thermal: None }
    }

    pub fn is_air(&self) -> bool {
        self.optical.is_none() && self.thermal.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(o) = &self.optical {
            o.validate()?;
        }
        if let Some(t) = &self.thermal {
            t.validate()?;
        }
        Ok(())
    }

    pub fn refractive_index(&self) -> f64 {
        self.optical.map_or(1.0, |o| o.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaterialId(pub u8);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialLibrary {
    materials: Vec<Material>,
}

impl MaterialLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a material by name.
    pub fn insert(&mut self, m: Material) -> Result<()> {
        m.validate()?;
        match self.materials.iter_mut().find(|x| x.name == m.name) {
            Some(slot) => *slot = m,
            None => self.materials.push(m),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    /// Adult head at 810 nm: scalp, skull, brain, LED housing and air.
    ///
    /// Scalp and skull share optical coefficients. Scattering is stored as
    /// μs = μs′/(1−g) with μs′ = 7.6 /cm (scalp, skull) and 8.0 /cm (brain),
    /// which reproduces the tabulated D = 0.043 cm and 0.039 cm.
    pub fn reference() -> Self {
        let g = 0.89;
        let n = 1.4;
        let optical = |mu_a: f64, mu_s_prime: f64, d_cm: f64| {
            TissueOpticalProps::from_per_cm(mu_a, mu_s_prime / (1.0 - g), g, n, Some(d_cm))
                .expect("reference optical properties are valid")
        };
        let thermal = |k, rho, cp, w_b, q_met| TissueThermalProps { k, rho, cp, w_b, q_met };
        let scalp_skull = optical(0.16, 7.6, 0.043);
        let mut lib = Self::new();
        let mats = [
            Material {
                name: "scalp".into(),
                optical: Some(scalp_skull),
                thermal: Some(thermal(0.50, 1200.0, 4000.0, 0.00143, 363.0)),
            },
            Material {
                name: "skull".into(),
                optical: Some(scalp_skull),
                thermal: Some(thermal(1.15, 1990.0, 2300.0, 0.000143, 70.0)),
            },
            Material {
                name: "brain".into(),
                optical: Some(optical(0.57, 8.0, 0.039)),
                thermal: Some(thermal(0.57, 1050.0, 3650.0, 0.08, 10437.0)),
            },
            Material {
                name: "led".into(),
                optical: None,
                thermal: Some(thermal(0.20, 1190.0, 1170.0, 0.0, 0.0)),
            },
            Material::air(),
        ];
        for m in mats {
            lib.insert(m).expect("reference materials are valid");
        }
        lib
    }
}

/// Where each layer sits, so depth-based masks (the cortex shell) can be
/// computed without a distance transform.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Flat stack along z. `start`/`end` are depths in metres.
    Slab { layers: Vec<SlabLayer> },
    /// Concentric spherical shells, outermost first.
    Shells { center: [f64; 3], layers: Vec<ShellLayer> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabLayer {
    pub material: MaterialId,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellLayer {
    pub material: MaterialId,
    pub outer_radius: f64,
    pub inner_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelPhantom {
    pub grid: Grid,
    pub material_id: Vec<MaterialId>,
    pub materials: Vec<Material>,
    pub layout: Layout,
}

/// One entry of a layer stack: material name and thickness in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub material: String,
    pub thickness_mm: f64,
}

impl LayerSpec {
    pub fn new(material: &str, thickness_mm: f64) -> Self {
        Self { material: material.into(), thickness_mm }
    }
}

/// Scalp 5 mm, skull 7 mm, brain filling the rest.
pub fn reference_layers() -> Vec<LayerSpec> {
    vec![LayerSpec::new("scalp", 5.0), LayerSpec::new("skull", 7.0), LayerSpec::new("brain", 68.0)]
}

fn voxel_count(extent_mm: f64, spacing_mm: f64, what: &'static str) -> Result<usize> {
    require(extent_mm > 0.0 && extent_mm.is_finite(), what, extent_mm, "must be > 0")?;
    let n = math::round(extent_mm / spacing_mm);
    if n < 1.0 {
        return Err(Error::InvalidParameter { name: what, value: extent_mm, rule: "must span at least one voxel" });
    }
    Ok(n as usize)
}

fn check_layers(layers: &[LayerSpec], spacing_mm: f64) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::InvalidInput("layer list is empty".into()));
    }
    for l in layers {
        require(l.thickness_mm > 0.0 && l.thickness_mm.is_finite(), "layer thickness", l.thickness_mm, "must be > 0")?;
        if l.thickness_mm < spacing_mm {
            return Err(Error::LayerTooThin {
                material: l.material.clone(),
                thickness_mm: l.thickness_mm,
                spacing_mm,
            });
        }
    }
    Ok(())
}

/// Registers every material named by `layers` (plus `extra`) into a compact
/// table, returning the ids of the layers in order.
fn intern_materials(
    lib: &MaterialLibrary,
    layers: &[LayerSpec],
    extra: &[&str],
) -> Result<(Vec<Material>, Vec<MaterialId>)> {
    let mut table: Vec<Material> = Vec::new();
    let mut intern = |name: &str| -> Result<MaterialId> {
        if let Some(pos) = table.iter().position(|m| m.name == name) {
            return Ok(MaterialId(pos as u8));
        }
        if table.len() == u8::MAX as usize {
            return Err(Error::InvalidInput("too many materials".into()));
        }
        table.push(lib.get(name)?.clone());
        Ok(MaterialId((table.len() - 1) as u8))
    };
    let ids = layers.iter().map(|l| intern(&l.material)).collect::<Result<Vec<_>>>()?;
    for name in extra {
        intern(name)?;
    }
    Ok((table, ids))
}

/// Stacks `layers` along z starting at the outer surface (z = 0). The last
/// layer fills whatever depth remains. `depth_mm` defaults to the lateral
/// extent, giving a cube.
pub fn build_layered_phantom(
    lib: &MaterialLibrary,
    layers: &[LayerSpec],
    lateral_extent_mm: f64,
    spacing_mm: f64,
    depth_mm: Option<f64>,
) -> Result<VoxelPhantom> {
    require(spacing_mm > 0.0 && spacing_mm.is_finite(), "spacing", spacing_mm, "must be > 0")?;
    check_layers(layers, spacing_mm)?;
    let depth_mm = depth_mm.unwrap_or(lateral_extent_mm);
    let stacked: f64 = layers.iter().map(|l| l.thickness_mm).sum();
    let last = layers.len() - 1;
    let above_last: f64 = stacked - layers[last].thickness_mm;
    if above_last + spacing_mm > depth_mm + 1e-9 {
        return Err(Error::InvalidInput("layer stack is deeper than the phantom".into()));
    }
    let nxy = voxel_count(lateral_extent_mm, spacing_mm, "lateral extent")?;
    let nz = voxel_count(depth_mm, spacing_mm, "depth")?;
    let h = spacing_mm * MM_TO_M;
    let grid = Grid::new([nxy, nxy, nz], h)?;
    let (materials, ids) = intern_materials(lib, layers, &[])?;

    let mut extents = Vec::with_capacity(layers.len());
    let mut top = 0.0;
    for (i, l) in layers.iter().enumerate() {
        let end = if i == last { nz as f64 * h } else { top + l.thickness_mm * MM_TO_M };
        extents.push(SlabLayer { material: ids[i], start: top, end });
        top = end;
    }

    let slice = nxy * nxy;
    let mut material_id = vec![ids[last]; grid.len()];
    for k in 0..nz {
        let zc = (k as f64 + 0.5) * h;
        let id = extents.iter().find(|e| zc < e.end).map_or(ids[last], |e| e.material);
        material_id[k * slice..(k + 1) * slice].fill(id);
    }
    let p = VoxelPhantom { grid, material_id, materials, layout: Layout::Slab { layers: extents } };
    p.validate()?;
    Ok(p)
}

/// Concentric spherical shells (outermost first) centred in a cube of side
/// `2·(outer_radius + margin)`, with air outside. The innermost layer is a
/// solid ball of radius `outer_radius − Σ other thicknesses`.
pub fn build_shell_phantom(
    lib: &MaterialLibrary,
    layers: &[LayerSpec],
    outer_radius_mm: f64,
    margin_mm: f64,
    spacing_mm: f64,
) -> Result<VoxelPhantom> {
    require(spacing_mm > 0.0 && spacing_mm.is_finite(), "spacing", spacing_mm, "must be > 0")?;
    require(margin_mm >= 0.0, "margin", margin_mm, "must be >= 0")?;
    check_layers(layers, spacing_mm)?;
    let shells: f64 = layers[..layers.len() - 1].iter().map(|l| l.thickness_mm).sum();
    if shells + spacing_mm > outer_radius_mm {
        return Err(Error::InvalidInput("shell stack is thicker than the outer radius".into()));
    }
    let n = voxel_count(2.0 * (outer_radius_mm + margin_mm), spacing_mm, "shell phantom extent")?;
    let h = spacing_mm * MM_TO_M;
    let grid = Grid::new([n, n, n], h)?;
    let (materials, ids) = intern_materials(lib, layers, &["air"])?;
    let air = MaterialId((materials.len() - 1) as u8);
    let half = n as f64 * h / 2.0;
    let center = [half; 3];

    let mut shell_layers = Vec::with_capacity(layers.len());
    let mut r_out = outer_radius_mm * MM_TO_M;
    for (i, l) in layers.iter().enumerate() {
        let r_in = if i == layers.len() - 1 { 0.0 } else { r_out - l.thickness_mm * MM_TO_M };
        shell_layers.push(ShellLayer { material: ids[i], outer_radius: r_out, inner_radius: r_in });
        r_out = r_in;
    }
    let mut material_id = vec![air; grid.len()];
    for (idx, slot) in material_id.iter_mut().enumerate() {
        let c = grid.center(grid.coords(idx));
        let r = math::sqrt((0..3).map(|a| (c[a] - center[a]) * (c[a] - center[a])).sum());
        if let Some(s) = shell_layers.iter().rev().find(|s| r < s.outer_radius) {
            *slot = s.material;
        }
    }
    let p = VoxelPhantom { grid, material_id, materials, layout: Layout::Shells { center, layers: shell_layers } };
    p.validate()?;
    Ok(p)
}

impl VoxelPhantom {
    pub fn validate(&self) -> Result<()> {
        if self.material_id.len() != self.grid.len() {
            return Err(Error::InvalidInput("material map does not match grid".into()));
        }
        if let Some(bad) = self.material_id.iter().find(|id| id.0 as usize >= self.materials.len()) {
            return Err(Error::InvalidInput(alloc::format!("material id {} is undefined", bad.0)));
        }
        for m in &self.materials {
            m.validate()?;
        }
        if !self.material_id.iter().any(|id| !self.materials[id.0 as usize].is_air()) {
            return Err(Error::InvalidInput("phantom has no tissue".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn material_of(&self, idx: usize) -> &Material {
        &self.materials[self.material_id[idx].0 as usize]
    }

    pub fn material(&self, id: MaterialId) -> &Material {
        &self.materials[id.0 as usize]
    }

    pub fn find_material(&self, name: &str) -> Result<MaterialId> {
        self.materials
            .iter()
            .position(|m| m.name == name)
            .map(|p| MaterialId(p as u8))
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    /// Voxels per material id.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.materials.len()];
        for id in &self.material_id {
            c[id.0 as usize] += 1;
        }
        c
    }

    /// Replaces every material's optical coefficients by name. Used by
    /// wavelength sweeps; geometry is untouched.
    pub fn with_optical(&self, lib: &MaterialLibrary) -> Result<VoxelPhantom> {
        let mut p = self.clone();
        for m in &mut p.materials {
            if let Ok(src) = lib.get(&m.name) {
                m.optical = src.optical;
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Depth of a voxel centre below the outer boundary of the layer it
    /// belongs to, or `None` for voxels not covered by the layout.
    pub fn depth_in_layer(&self, idx: usize) -> Option<(MaterialId, f64)> {
        let c = self.grid.center(self.grid.coords(idx));
        match &self.layout {
            Layout::Slab { layers } => {
                layers.iter().find(|l| c[2] >= l.start && c[2] < l.end).map(|l| (l.material, c[2] - l.start))
            }
            Layout::Shells { center, layers } => {
                let r = math::sqrt((0..3).map(|a| (c[a] - center[a]) * (c[a] - center[a])).sum());
                layers
                    .iter()
                    .find(|l| r < l.outer_radius && r >= l.inner_radius)
                    .map(|l| (l.material, l.outer_radius - r))
            }
        }
    }

    /// Voxels of `material` within `thickness` (m) of that layer's outer
    /// boundary, e.g. the 2.5 mm cortex shell of the brain.
    pub fn layer_shell_mask(&self, material: MaterialId, thickness: f64) -> Vec<bool> {
        (0..self.grid.len())
            .map(|idx| {
                self.material_id[idx] == material
                    && matches!(self.depth_in_layer(idx), Some((m, d)) if m == material && d < thickness)
            })
            .collect()
    }

    /// Depth (m) of the outer boundary of the first layer made of `material`.
    pub fn layer_top(&self, material: MaterialId) -> Option<f64> {
        match &self.layout {
            Layout::Slab { layers } => layers.iter().find(|l| l.material == material).map(|l| l.start),
            Layout::Shells { center, layers } => {
                layers.iter().find(|l| l.material == material).map(|l| center[2] - l.outer_radius)
            }
        }
    }

    /// Prepends a `thickness_mm` band of air on top of a slab phantom and fills
    /// each `(x, y)` column for which `covered(x, y)` holds with `led`
    /// material. Layer depths shift down by the band thickness.
    pub fn with_led_caps(
        &self,
        lib: &MaterialLibrary,
        led: &str,
        thickness_mm: f64,
        covered: impl Fn(f64, f64) -> bool,
    ) -> Result<VoxelPhantom> {
        let Layout::Slab { layers } = &self.layout else {
            return Err(Error::InvalidInput("LED caps are only supported on slab phantoms".into()));
        };
        let h = self.grid.spacing;
        let band = voxel_count(thickness_mm, h / MM_TO_M, "LED thickness")?;
        let mut materials = self.materials.clone();
        let mut intern = |name: &str| -> Result<MaterialId> {
            if let Some(pos) = materials.iter().position(|m| m.name == name) {
                return Ok(MaterialId(pos as u8));
            }
            materials.push(lib.get(name)?.clone());
            Ok(MaterialId((materials.len() - 1) as u8))
        };
        let led_id = intern(led)?;
        let air_id = intern("air")?;
        let [nx, ny, nz] = self.grid.dims;
        let grid = Grid::new([nx, ny, nz + band], h)?;
        let mut material_id = Vec::with_capacity(grid.len());
        for _k in 0..band {
            for j in 0..ny {
                for i in 0..nx {
                    let c = grid.center([i, j, 0]);
                    material_id.push(if covered(c[0], c[1]) { led_id } else { air_id });
                }
            }
        }
        material_id.extend_from_slice(&self.material_id);
        let shift = band as f64 * h;
        let layers = layers
            .iter()
            .map(|l| SlabLayer { material: l.material, start: l.start + shift, end: l.end + shift })
            .collect();
        let p = VoxelPhantom { grid, material_id, materials, layout: Layout::Slab { layers } };
        p.validate()?;
        Ok(p)
    }
}
