//! LED source patches and the boundary flux maps they induce.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{require, Error, Result};
use crate::field::Grid;
use crate::geometry::Face;
use crate::phantom::VoxelPhantom;
use crate::units::{MM_TO_M, MW_PER_CM2_TO_W_PER_M2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    Disc { radius: f64 },
    Rect { half_widths: [f64; 2] },
}

/// One LED footprint on a phantom face. Lengths in metres, flux in W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePatch {
    pub face: Face,
    /// Centre in the face plane, along `face.tangent_axes()`.
    pub center: [f64; 2],
    pub footprint: Footprint,
    /// Total LED power density (W/m²).
    pub irradiance: f64,
    pub light_fraction: f64,
    pub heat_fraction: f64,
}

impl SourcePatch {
    /// Disc patch from millimetres and mW/cm².
    pub fn disc_mm(
        face: Face,
        center_mm: [f64; 2],
        radius_mm: f64,
        irradiance_mw_per_cm2: f64,
        light_fraction: f64,
    ) -> Result<Self> {
        let p = Self {
            face,
            center: [center_mm[0] * MM_TO_M, center_mm[1] * MM_TO_M],
            footprint: Footprint::Disc { radius: radius_mm * MM_TO_M },
            irradiance: irradiance_mw_per_cm2 * MW_PER_CM2_TO_W_PER_M2,
            light_fraction,
            heat_fraction: 1.0 - light_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.irradiance >= 0.0 && self.irradiance.is_finite(), "irradiance", self.irradiance, "must be >= 0")?;
        require((0.0..=1.0).contains(&self.light_fraction), "light_fraction", self.light_fraction, "must lie in [0, 1]")?;
        require((0.0..=1.0).contains(&self.heat_fraction), "heat_fraction", self.heat_fraction, "must lie in [0, 1]")?;
        let sum = self.light_fraction + self.heat_fraction;
        require((sum - 1.0).abs() <= 1e-9, "light_fraction + heat_fraction", sum, "must equal 1")?;
        match self.footprint {
            Footprint::Disc { radius } => require(radius > 0.0, "patch radius", radius, "must be > 0"),
            Footprint::Rect { half_widths } => {
                require(half_widths[0] > 0.0, "patch half width", half_widths[0], "must be > 0")?;
                require(half_widths[1] > 0.0, "patch half width", half_widths[1], "must be > 0")
            }
        }
    }

    /// Light entering the tissue (W/m²).
    pub fn light_flux(&self) -> f64 {
        self.irradiance * self.light_fraction
    }

    /// Heat dissipated by the LED (W/m²).
    pub fn heat_flux(&self) -> f64 {
        self.irradiance * self.heat_fraction
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let du = u - self.center[0];
        let dv = v - self.center[1];
        match self.footprint {
            Footprint::Disc { radius } => du * du + dv * dv <= radius * radius,
            Footprint::Rect { half_widths } => du.abs() <= half_widths[0] && dv.abs() <= half_widths[1],
        }
    }

    fn half_extents(&self) -> [f64; 2] {
        match self.footprint {
            Footprint::Disc { radius } => [radius, radius],
            Footprint::Rect { half_widths } => half_widths,
        }
    }

    /// Whether the whole footprint lies on the face rectangle.
    pub fn fits(&self, grid: &Grid) -> bool {
        let e = grid.extent();
        let half = self.half_extents();
        let slack = 1e-12;
        self.face.tangent_axes().iter().enumerate().all(|(t, &axis)| {
            self.center[t] - half[t] >= -slack && self.center[t] + half[t] <= e[axis] + slack
        })
    }
}

/// A voxel face on the illuminated or heated surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceElement {
    pub voxel: usize,
    pub face: Face,
}

/// Flux (W/m²) entering through individual voxel faces, sorted by element.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryFluxMap {
    pub entries: Vec<(FaceElement, f64)>,
    /// Index of the patch covering each entry.
    pub patch_of: Vec<usize>,
}

impl BoundaryFluxMap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Total power (W) through the map for voxel spacing `h`.
    pub fn total_power(&self, h: f64) -> f64 {
        crate::math::ordered_sum(&self.entries.iter().map(|e| e.1 * h * h).collect::<Vec<_>>())
    }

    pub fn flux_at(&self, voxel: usize, face: Face) -> f64 {
        let key = FaceElement { voxel, face };
        self.entries.binary_search_by(|e| e.0.cmp(&key)).map_or(0.0, |i| self.entries[i].1)
    }

    pub fn is_all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.1 == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|&(e, f)| (e, f * factor)).collect(),
            patch_of: self.patch_of.clone(),
        }
    }
}

/// Walks the grid column at in-plane cell `(a, b)` from `face` inward and
/// returns the first voxel for which `active` holds.
pub fn first_active(grid: &Grid, face: Face, a: usize, b: usize, active: impl Fn(usize) -> bool) -> Option<usize> {
    let axis = face.axis();
    let [ta, tb] = face.tangent_axes();
    let n = grid.dims[axis];
    (0..n).find_map(|step| {
        let depth = if face.is_min() { step } else { n - 1 - step };
        let mut c = [0usize; 3];
        c[axis] = depth;
        c[ta] = a;
        c[tb] = b;
        let idx = grid.index(c[0], c[1], c[2]);
        active(idx).then_some(idx)
    })
}

/// Maps every patch onto the exposed voxel faces it covers. A face element
/// is covered when its centre lies inside the footprint; the element is the
/// outward face of the first `active` voxel met walking in from the patch.
pub fn patch_flux_map(
    grid: &Grid,
    patches: &[SourcePatch],
    active: impl Fn(usize) -> bool,
    flux: impl Fn(&SourcePatch) -> f64,
) -> Result<BoundaryFluxMap> {
    let mut map: BTreeMap<FaceElement, (f64, usize)> = BTreeMap::new();
    let h = grid.spacing;
    for (pi, patch) in patches.iter().enumerate() {
        patch.validate()?;
        if !patch.fits(grid) {
            return Err(Error::PatchOffFace { index: pi, face: patch.face });
        }
        let [ta, tb] = patch.face.tangent_axes();
        for b in 0..grid.dims[tb] {
            let v = (b as f64 + 0.5) * h;
            for a in 0..grid.dims[ta] {
                let u = (a as f64 + 0.5) * h;
                if !patch.contains(u, v) {
                    continue;
                }
                let Some(voxel) = first_active(grid, patch.face, a, b, &active) else { continue };
                let key = FaceElement { voxel, face: patch.face };
                if let Some(&(_, other)) = map.get(&key) {
                    return Err(Error::OverlappingPatches { first: other, second: pi });
                }
                map.insert(key, (flux(patch), pi));
            }
        }
    }
    let mut out = BoundaryFluxMap::default();
    for (k, (f, pi)) in map {
        out.entries.push((k, f));
        out.patch_of.push(pi);
    }
    Ok(out)
}

/// Diffuse light flux map: `irradiance × light_fraction` on every optically
/// exposed face element under a patch.
pub fn assemble_source_term(phantom: &VoxelPhantom, patches: &[SourcePatch]) -> Result<BoundaryFluxMap> {
    patch_flux_map(
        &phantom.grid,
        patches,
        |i| phantom.material_of(i).optical.is_some(),
        SourcePatch::light_flux,
    )
}

/// Boundary heat flux map: `irradiance × heat_fraction` on every thermally
/// exposed face element under a patch.
pub fn assemble_heat_flux(phantom: &VoxelPhantom, patches: &[SourcePatch]) -> Result<BoundaryFluxMap> {
    patch_flux_map(
        &phantom.grid,
        patches,
        |i| phantom.material_of(i).thermal.is_some(),
        SourcePatch::heat_flux,
    )
}

/// `rows × cols` grid of identical disc patches on `face`, centred on the
/// face, `pitch` apart. Lengths in mm, irradiance in mW/cm².
#[allow(clippy::too_many_arguments)]
pub fn patch_grid(
    grid: &Grid,
    face: Face,
    rows: usize,
    cols: usize,
    pitch_mm: f64,
    radius_mm: f64,
    irradiance_mw_per_cm2: f64,
    light_fraction: f64,
) -> Result<Vec<SourcePatch>> {
    let e = grid.extent();
    let [ta, tb] = face.tangent_axes();
    let cu = e[ta] / 2.0 / MM_TO_M;
    let cv = e[tb] / 2.0 / MM_TO_M;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let du = (c as f64 - (cols as f64 - 1.0) / 2.0) * pitch_mm;
            let dv = (r as f64 - (rows as f64 - 1.0) / 2.0) * pitch_mm;
            out.push(SourcePatch::disc_mm(face, [cu + du, cv + dv], radius_mm, irradiance_mw_per_cm2, light_fraction)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{build_layered_phantom, LayerSpec, MaterialLibrary};

    fn block() -> VoxelPhantom {
        build_layered_phantom(&MaterialLibrary::reference(), &[LayerSpec::new("scalp", 20.0)], 20.0, 1.0, None).unwrap()
    }

    #[test]
    fn one_patch_carries_light_fraction() {
        let p = block();
        let patch = SourcePatch::disc_mm(Face::ZMin, [10.0, 10.0], 4.0, 100.0, 0.35).unwrap();
        let map = assemble_source_term(&p, &[patch]).unwrap();
        assert!(!map.is_empty());
        for (e, f) in &map.entries {
            assert_eq!(e.face, Face::ZMin);
            assert!((f - 350.0).abs() < 1e-12, "35 mW/cm² = 350 W/m²");
            assert_eq!(p.grid.coords(e.voxel)[2], 0);
        }
    }

    #[test]
    fn zero_light_fraction_gives_zero_map() {
        let p = block();
        let patch = SourcePatch::disc_mm(Face::ZMin, [10.0, 10.0], 4.0, 100.0, 0.0).unwrap();
        assert!(assemble_source_term(&p, &[patch]).unwrap().is_all_zero());
    }

    #[test]
    fn disjoint_patches_superpose() {
        let p = block();
        let a = SourcePatch::disc_mm(Face::ZMin, [5.0, 5.0], 3.0, 100.0, 0.35).unwrap();
        let b = SourcePatch::disc_mm(Face::ZMin, [15.0, 15.0], 3.0, 50.0, 0.35).unwrap();
        let ma = assemble_source_term(&p, &[a]).unwrap();
        let mb = assemble_source_term(&p, &[b]).unwrap();
        let both = assemble_source_term(&p, &[a, b]).unwrap();
        assert_eq!(both.len(), ma.len() + mb.len());
        let h = p.grid.spacing;
        assert!((both.total_power(h) - ma.total_power(h) - mb.total_power(h)).abs() < 1e-15);
    }

    #[test]
    fn overlap_and_off_face_rejected() {
        let p = block();
        let a = SourcePatch::disc_mm(Face::ZMin, [8.0, 10.0], 3.0, 100.0, 0.35).unwrap();
        let b = SourcePatch::disc_mm(Face::ZMin, [11.0, 10.0], 3.0, 100.0, 0.35).unwrap();
        assert_eq!(
            assemble_source_term(&p, &[a, b]),
            Err(Error::OverlappingPatches { first: 0, second: 1 })
        );
        let off = SourcePatch::disc_mm(Face::ZMin, [1.0, 10.0], 3.0, 100.0, 0.35).unwrap();
        assert!(matches!(assemble_source_term(&p, &[off]), Err(Error::PatchOffFace { index: 0, .. })));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let mut patch = SourcePatch::disc_mm(Face::ZMin, [10.0, 10.0], 4.0, 100.0, 0.4).unwrap();
        patch.heat_fraction = 0.7;
        assert!(patch.validate().is_err());
    }
}
