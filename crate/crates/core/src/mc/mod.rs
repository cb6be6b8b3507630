//! Photon-packet Monte Carlo transport through the voxel phantom.
//!
//! Packets carry a weight that is reduced by the absorbed fraction `μa/μt` at
//! every interaction (absorption weighting) and are terminated by Russian
//! roulette. Batches are seeded from `(master seed, batch index)` so a run is
//! bit-reproducible no matter how batches are scheduled, as long as their
//! results are merged in index order (see [`McAccumulator`]).

mod compare;
mod sampling;
mod transport;

pub use compare::{compare_mc_diffusion, diffusive_mask, ErrorStats};
pub use sampling::{
    fresnel_reflectance, isotropic_direction, sample_hg_cosine, sample_step, scatter_direction, uniform_open01,
    BatchRng,
};
pub use transport::{BatchTally, McAccumulator, McConfig, McResult, McSimulation, PhotonPacket, Tallies};
