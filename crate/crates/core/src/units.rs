//! Unit conversions applied at the boundary between user-facing values and
//! the SI quantities used by the solvers. Every factor is an exact power of ten.

/// Speed of light in vacuum (m/s).
pub const C_VACUUM_M_PER_S: f64 = 299_792_458.0;
/// Speed of light in vacuum (cm/s).
pub const C_VACUUM_CM_PER_S: f64 = 2.997_924_58e10;

/// 1/cm → 1/m.
pub const PER_CM_TO_PER_M: f64 = 100.0;
/// cm → m.
pub const CM_TO_M: f64 = 0.01;
pub const M_TO_CM: f64 = 100.0;
/// mm → m.
pub const MM_TO_M: f64 = 0.001;
/// mW/cm² → W/m².
pub const MW_PER_CM2_TO_W_PER_M2: f64 = 10.0;
/// mW/(cm²·°C) → W/(m²·°C).
pub const MW_PER_CM2_C_TO_W_PER_M2_C: f64 = 10.0;
/// J/cm³ → J/m³.
pub const J_PER_CM3_TO_J_PER_M3: f64 = 1.0e6;
/// mW/cm³ → W/m³.
pub const MW_PER_CM3_TO_W_PER_M3: f64 = 1.0e3;
/// kg/cm³ → kg/m³.
pub const KG_PER_CM3_TO_KG_PER_M3: f64 = 1.0e6;

pub fn w_per_m2_to_mw_per_cm2(x: f64) -> f64 {
    x / MW_PER_CM2_TO_W_PER_M2
}

pub fn mw_per_cm2_to_w_per_m2(x: f64) -> f64 {
    x * MW_PER_CM2_TO_W_PER_M2
}

/// Human-readable table of every conversion factor, as printed by
/// `pbmsim --explain-units`.
pub const EXPLANATION: &str = "\
quantity                   input unit        internal unit   factor
absorption/scattering      1/cm              1/m             x 100
diffusion coefficient      cm                m               x 0.01
lengths (geometry)         mm                m               x 0.001
irradiance, heat flux      mW/cm^2           W/m^2           x 10
convection coefficient     mW/(cm^2 C)       W/(m^2 C)       x 10
heat density (output)      J/m^3             J/cm^3          x 1e-6
volumetric power           mW/cm^3           W/m^3           x 1000
density (dose formula)     kg/cm^3           kg/m^3          x 1e6
fluence rate (output)      W/m^2             mW/cm^2         x 0.1
thermal conductivity       W/(m C)           W/(m C)         x 1
perfusion rate             1/s               1/s             x 1
metabolic heat             W/m^3             W/m^3           x 1
";
