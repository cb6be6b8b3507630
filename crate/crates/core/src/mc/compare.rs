use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math::{self, CompensatedSum};
use crate::phantom::{Layout, VoxelPhantom};

/// Relative-difference statistics between two fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorStats {
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
    /// Voxels that entered the statistics.
    pub count: usize,
}

/// Element-wise `|mc − diff| / diff` over `mask`, restricted to voxels where
/// both fields exceed `1e-6 ×` their own maximum. `mask = None` uses every
/// voxel.
pub fn compare_mc_diffusion(mc: &ScalarField, diff: &ScalarField, mask: Option<&[bool]>) -> Result<ErrorStats> {
    if !mc.same_grid(diff) {
        return Err(Error::GridMismatch);
    }
    if let Some(m) = mask {
        if m.len() != mc.values.len() {
            return Err(Error::GridMismatch);
        }
    }
    let floor_mc = 1e-6 * mc.max();
    let floor_diff = 1e-6 * diff.max();
    let mut rel = Vec::new();
    for (i, (&a, &b)) in mc.values.iter().zip(&diff.values).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if a > floor_mc && b > floor_diff {
            rel.push(math::abs(a - b) / b);
        }
    }
    if rel.is_empty() {
        return Ok(ErrorStats::default());
    }
    let mut sum = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    let mut max = 0.0f64;
    for &r in &rel {
        sum.add(r);
        sq.add(r * r);
        max = max.max(r);
    }
    let n = rel.len() as f64;
    Ok(ErrorStats { max, mean: sum.value() / n, rms: math::sqrt(sq.value() / n), count: rel.len() })
}

/// Voxels where diffusion theory is expected to hold: optically active, more
/// than `depth_mfp` transport mean free paths below the tissue surface and,
/// for slabs, more than `lateral_mfp` from the side faces. The longest mean
/// free path of any tissue sets the scale.
pub fn diffusive_mask(phantom: &VoxelPhantom, depth_mfp: f64, lateral_mfp: f64) -> Vec<bool> {
    let mfp = phantom
        .materials
        .iter()
        .filter_map(|m| m.optical.map(|o| o.transport_mfp()))
        .fold(0.0, f64::max);
    let g = phantom.grid;
    let e = g.extent();
    (0..g.len())
        .map(|v| {
            if phantom.material_of(v).optical.is_none() {
                return false;
            }
            let c = g.center(g.coords(v));
            match &phantom.layout {
                Layout::Slab { layers } => {
                    let top = layers
                        .iter()
                        .find(|l| phantom.materials[l.material.0 as usize].optical.is_some())
                        .map_or(0.0, |l| l.start);
                    let side = c[0].min(e[0] - c[0]).min(c[1]).min(e[1] - c[1]);
                    c[2] - top > depth_mfp * mfp && side > lateral_mfp * mfp
                }
                Layout::Shells { center, layers } => {
                    let r = math::sqrt((0..3).map(|a| (c[a] - center[a]) * (c[a] - center[a])).sum());
                    let outer = layers.first().map_or(0.0, |l| l.outer_radius);
                    outer - r > depth_mfp * mfp
                }
            }
        })
        .collect()
}
