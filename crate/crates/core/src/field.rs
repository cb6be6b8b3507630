//! Regular voxel grids and scalar fields sampled on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Cell-centred uniform grid. Voxel `(i, j, k)` spans
/// `[i·h, (i+1)·h) × [j·h, (j+1)·h) × [k·h, (k+1)·h)` metres, stored x-fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Voxel edge length (m).
    pub spacing: f64,
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: f64) -> Result<Self> {
        crate::error::require(spacing > 0.0 && spacing.is_finite(), "spacing", spacing, "must be > 0")?;
        if dims.contains(&0) {
            return Err(Error::InvalidInput("grid dimensions must be nonzero".into()));
        }
        Ok(Self { dims, spacing })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Linear index stride along an axis.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    pub fn center(&self, c: [usize; 3]) -> [f64; 3] {
        let h = self.spacing;
        [
            (c[0] as f64 + 0.5) * h,
            (c[1] as f64 + 0.5) * h,
            (c[2] as f64 + 0.5) * h,
        ]
    }

    pub fn extent(&self) -> [f64; 3] {
        let h = self.spacing;
        [self.dims[0] as f64 * h, self.dims[1] as f64 * h, self.dims[2] as f64 * h]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let e = self.extent();
        // Half a nanometre of slack so endpoints computed as n·h still count.
        let eps = 1e-12;
        (0..3).all(|a| p[a] >= -eps && p[a] <= e[a] + eps)
    }

    pub fn voxel_of(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        if !self.contains(p) {
            return None;
        }
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = math::floor(p[a] / self.spacing);
            c[a] = (f.max(0.0) as usize).min(self.dims[a] - 1);
        }
        Some(c)
    }

    /// Trilinear stencil: up to 8 `(index, weight)` pairs. Coordinates between
    /// the boundary and the outermost voxel centre clamp to that centre.
    pub fn trilinear_weights(&self, p: [f64; 3]) -> Result<[(usize, f64); 8]> {
        if !self.contains(p) {
            return Err(Error::OutsideGrid { x: p[0], y: p[1], z: p[2] });
        }
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0.0f64; 3];
        for a in 0..3 {
            let n = self.dims[a];
            let u = (p[a] / self.spacing - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (math::floor(u) as usize).min(n - 1);
            lo[a] = i0;
            hi[a] = (i0 + 1).min(n - 1);
            t[a] = u - i0 as f64;
        }
        let mut out = [(0usize, 0.0f64); 8];
        for (corner, slot) in out.iter_mut().enumerate() {
            let pick = |a: usize| if corner >> a & 1 == 1 { (hi[a], t[a]) } else { (lo[a], 1.0 - t[a]) };
            let (i, wx) = pick(0);
            let (j, wy) = pick(1);
            let (k, wz) = pick(2);
            *slot = (self.index(i, j, k), wx * wy * wz);
        }
        Ok(out)
    }
}

/// What a field holds. Determines the reporting units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Fluence rate, mW/cm².
    FluenceRate,
    /// Temperature, °C.
    Temperature,
    /// Absorbed heat per unit volume, J/cm³.
    HeatDensity,
    /// Volumetric heat source, W/m³.
    HeatSource,
    /// Unitless.
    Dimensionless,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::FluenceRate => "fluence_rate",
            Quantity::Temperature => "temperature",
            Quantity::HeatDensity => "heat_density",
            Quantity::HeatSource => "heat_source",
            Quantity::Dimensionless => "value",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Quantity::FluenceRate => "mW/cm^2",
            Quantity::Temperature => "C",
            Quantity::HeatDensity => "J/cm^3",
            Quantity::HeatSource => "W/m^3",
            Quantity::Dimensionless => "1",
        }
    }

    /// Units spelled with identifier-safe characters, for CSV headers.
    pub fn units_tag(self) -> &'static str {
        match self {
            Quantity::FluenceRate => "mW_per_cm2",
            Quantity::Temperature => "C",
            Quantity::HeatDensity => "J_per_cm3",
            Quantity::HeatSource => "W_per_m3",
            Quantity::Dimensionless => "1",
        }
    }

    pub fn from_name(s: &str) -> Option<Quantity> {
        [
            Quantity::FluenceRate,
            Quantity::Temperature,
            Quantity::HeatDensity,
            Quantity::HeatSource,
            Quantity::Dimensionless,
        ]
        .into_iter()
        .find(|q| q.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub quantity: Quantity,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, quantity: Quantity) -> Self {
        Self::filled(grid, quantity, 0.0)
    }

    pub fn filled(grid: Grid, quantity: Quantity, v: f64) -> Self {
        Self { grid, quantity, values: vec![v; grid.len()] }
    }

    pub fn from_values(grid: Grid, quantity: Quantity, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("field length does not match grid".into()));
        }
        Ok(Self { grid, quantity, values })
    }

    pub fn at(&self, c: [usize; 3]) -> f64 {
        self.values[self.grid.index(c[0], c[1], c[2])]
    }

    /// Trilinear interpolation at a point in metres.
    pub fn sample(&self, p: [f64; 3]) -> Result<f64> {
        let w = self.grid.trilinear_weights(p)?;
        Ok(w.iter().map(|&(i, wt)| wt * self.values[i]).sum())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        self.grid == other.grid
    }

    /// Index of the largest value. Values within a relative `1e-12` of the
    /// maximum count as ties and the first one wins, so symmetric fields give
    /// the same voxel after rescaling.
    pub fn argmax(&self) -> usize {
        let max = self.max();
        let cut = max - 1e-12 * math::abs(max);
        self.values.iter().position(|&v| v >= cut).unwrap_or(0)
    }
}
