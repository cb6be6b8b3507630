//! Profiles along cutlines, penetration depth and region statistics.

use alloc::vec::Vec;

use crate::error::{require, Error, Result};
use crate::field::{Quantity, ScalarField};
use crate::math::{self, CompensatedSum};
use crate::units::M_TO_CM;

/// Straight sampling line between two points (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutlineSpec {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub samples: usize,
}

impl CutlineSpec {
    pub fn from_mm(start: [f64; 3], end: [f64; 3], samples: usize) -> Self {
        let m = |p: [f64; 3]| p.map(|x| x * crate::units::MM_TO_M);
        Self { start: m(start), end: m(end), samples }
    }

    pub fn length(&self) -> f64 {
        math::sqrt((0..3).map(|a| (self.end[a] - self.start[a]) * (self.end[a] - self.start[a])).sum())
    }
}

/// Values along a cutline; `positions` is the arc length from the start (cm).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub quantity: Quantity,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Trilinear samples at `spec.samples` equally spaced points, both ends
/// included.
pub fn extract_cutline(field: &ScalarField, spec: &CutlineSpec) -> Result<Profile> {
    require(spec.samples >= 2, "cutline samples", spec.samples as f64, "must be >= 2")?;
    let len = spec.length();
    require(len > 0.0, "cutline length", len, "endpoints must differ")?;
    for p in [spec.start, spec.end] {
        if !field.grid.contains(p) {
            return Err(Error::OutsideGrid { x: p[0], y: p[1], z: p[2] });
        }
    }
    let last = (spec.samples - 1) as f64;
    let mut positions = Vec::with_capacity(spec.samples);
    let mut values = Vec::with_capacity(spec.samples);
    for s in 0..spec.samples {
        let f = s as f64 / last;
        let p: [f64; 3] = core::array::from_fn(|a| spec.start[a] + f * (spec.end[a] - spec.start[a]));
        positions.push(f * len * M_TO_CM);
        values.push(field.sample(p)?);
    }
    Ok(Profile { quantity: field.quantity, positions, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenetrationCriterion {
    /// Fluence falls to 1/e of the first sample.
    OneOverE,
    /// Fluence falls to an absolute level (mW/cm²).
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenetrationDepth {
    /// Depth in cm.
    Depth(f64),
    /// The criterion is never met along the profile.
    BeyondProfile,
}

impl PenetrationDepth {
    pub fn cm(self) -> Option<f64> {
        match self {
            PenetrationDepth::Depth(d) => Some(d),
            PenetrationDepth::BeyondProfile => None,
        }
    }
}

/// First arc position at which the profile drops to the criterion level,
/// linearly interpolated between samples.
pub fn penetration_depth(profile: &Profile, criterion: PenetrationCriterion) -> Result<PenetrationDepth> {
    if profile.values.len() != profile.positions.len() || profile.is_empty() {
        return Err(Error::InvalidInput("profile is empty or ragged".into()));
    }
    let first = profile.values[0];
    require(first > 0.0 && first.is_finite(), "first profile sample", first, "must be > 0")?;
    let level = match criterion {
        PenetrationCriterion::OneOverE => first * math::exp(-1.0),
        PenetrationCriterion::Absolute(t) => {
            require(t.is_finite(), "absolute threshold", t, "must be finite")?;
            t
        }
    };
    if first <= level {
        return Ok(PenetrationDepth::Depth(profile.positions[0]));
    }
    for i in 1..profile.len() {
        let (v0, v1) = (profile.values[i - 1], profile.values[i]);
        if v1 <= level {
            let (x0, x1) = (profile.positions[i - 1], profile.positions[i]);
            let f = (v0 - level) / (v0 - v1);
            return Ok(PenetrationDepth::Depth(x0 + f * (x1 - x0)));
        }
    }
    Ok(PenetrationDepth::BeyondProfile)
}

/// Summary of a field over a voxel mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

pub fn region_stats(field: &ScalarField, mask: &[bool]) -> Result<RegionStats> {
    if mask.len() != field.values.len() {
        return Err(Error::GridMismatch);
    }
    let mut sum = CompensatedSum::new();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut count = 0;
    for (&v, _) in field.values.iter().zip(mask).filter(|(_, &m)| m) {
        sum.add(v);
        min = min.min(v);
        max = max.max(v);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("empty region".into()));
    }
    Ok(RegionStats { min, max, mean: sum.value() / count as f64, count })
}

/// Voxel-wise `a − b`.
pub fn difference(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    Ok(ScalarField { grid: a.grid, quantity: a.quantity, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use approx::assert_relative_eq;

    fn linear_z() -> ScalarField {
        let g = Grid::new([4, 4, 10], 1e-3).unwrap();
        let values = (0..g.len()).map(|i| 2.0 + 3.0 * g.center(g.coords(i))[2]).collect();
        ScalarField::from_values(g, Quantity::Temperature, values).unwrap()
    }

    #[test]
    fn linear_field_is_reproduced() {
        let f = linear_z();
        let spec = CutlineSpec::from_mm([2.0, 2.0, 0.5], [2.0, 2.0, 9.5], 19);
        let p = extract_cutline(&f, &spec).unwrap();
        for (x, v) in p.positions.iter().zip(&p.values) {
            let z = 0.5e-3 + x / M_TO_CM;
            assert_relative_eq!(*v, 2.0 + 3.0 * z, epsilon = 1e-12);
        }
        assert_relative_eq!(*p.positions.last().unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn cutline_rejects_outside_and_degenerate() {
        let f = linear_z();
        assert!(extract_cutline(&f, &CutlineSpec::from_mm([2.0, 2.0, 0.5], [2.0, 2.0, 20.0], 5)).is_err());
        assert!(extract_cutline(&f, &CutlineSpec::from_mm([2.0, 2.0, 0.5], [2.0, 2.0, 0.5], 5)).is_err());
        assert!(extract_cutline(&f, &CutlineSpec::from_mm([2.0, 2.0, 0.5], [2.0, 2.0, 5.0], 1)).is_err());
    }

    fn exp_profile(n: usize, dx: f64) -> Profile {
        let positions: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let values = positions.iter().map(|&z| math::exp(-2.0 * z)).collect();
        Profile { quantity: Quantity::FluenceRate, positions, values }
    }

    #[test]
    fn one_over_e_of_exp_minus_2z_is_half_a_centimetre() {
        let d = penetration_depth(&exp_profile(101, 0.01), PenetrationCriterion::OneOverE).unwrap();
        assert_relative_eq!(d.cm().unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unreachable_threshold_is_beyond_profile() {
        let d = penetration_depth(&exp_profile(50, 0.02), PenetrationCriterion::Absolute(0.0)).unwrap();
        assert_eq!(d, PenetrationDepth::BeyondProfile);
        let mut p = exp_profile(5, 0.1);
        p.values[0] = 0.0;
        assert!(penetration_depth(&p, PenetrationCriterion::OneOverE).is_err());
    }

    #[test]
    fn region_stats_over_mask() {
        let f = linear_z();
        let mask: Vec<bool> = (0..f.values.len()).map(|i| f.grid.coords(i)[2] == 0).collect();
        let s = region_stats(&f, &mask).unwrap();
        assert_eq!(s.count, 16);
        assert_relative_eq!(s.mean, 2.0 + 3.0 * 0.5e-3, epsilon = 1e-15);
    }
}
