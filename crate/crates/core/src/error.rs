use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {name}: {value} ({rule})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("{0}")]
    InvalidInput(String),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("layer `{material}` is {thickness_mm} mm thick, thinner than the {spacing_mm} mm voxel")]
    LayerTooThin {
        material: String,
        thickness_mm: f64,
        spacing_mm: f64,
    },
    #[error("reduced scattering is undefined for g = {0} (need 0 <= g < 1)")]
    UndefinedReducedScattering(f64),
    #[error("vacuum: mu_a + mu_s' = 0 has no diffusion coefficient")]
    Vacuum,
    #[error("source patch {index} does not lie on its {face:?} face")]
    PatchOffFace { index: usize, face: crate::Face },
    #[error("source patches {first} and {second} overlap")]
    OverlappingPatches { first: usize, second: usize },
    #[error("linear solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("no steady state exists: no heat sink (h = 0, zero perfusion, no fixed-temperature face); net heat input {net_input_w:e} W")]
    NoSteadyState { net_input_w: f64 },
    #[error("point ({x}, {y}, {z}) m lies outside the grid")]
    OutsideGrid { x: f64, y: f64, z: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("negative fluence {value} at voxel {voxel}")]
    NegativeFluence { voxel: usize, value: f64 },
    #[error("non-finite photon state in batch {batch}, packet {packet}: {what}")]
    NonFinitePacket {
        batch: u64,
        packet: u64,
        what: &'static str,
    },
    #[error("material `{0}` has zero total attenuation but is not transparent")]
    ZeroAttenuation(String),
}

pub(crate) fn require(cond: bool, name: &'static str, value: f64, rule: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, rule })
    }
}
