//! Continuous-wave diffusion approximation on the voxel phantom.
//!
//! Solves `−∇·(D∇φ) + μa·φ = S` with cell-centred finite volumes. Interface
//! diffusion coefficients use the harmonic mean so that flux is continuous
//! across scalp/skull/brain jumps. The resulting system is an SPD M-matrix,
//! so the solution is nonnegative for nonnegative sources.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Quantity, ScalarField};
use crate::geometry::{Face, PerFace};
use crate::math::{self, ordered_sum};
use crate::mc::fresnel_reflectance;
use crate::phantom::VoxelPhantom;
use crate::solver::{pcg, CgOptions, CgStats, Stencil};
use crate::sources::{assemble_source_term, BoundaryFluxMap, SourcePatch};
use crate::units::{w_per_m2_to_mw_per_cm2, MW_PER_CM2_TO_W_PER_M2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpticalBoundaryMode {
    /// φ = 0 on the face. Illuminated faces become pure flux injection.
    Dirichlet,
    /// Partial-current condition `φ + 2A·D·∂φ/∂n = 4q/(1 − R_eff)` with `A`
    /// from the internal reflection at the tissue/air index step.
    Robin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalBoundarySpec {
    /// Mode on the six faces of the grid.
    pub outer: PerFace<OpticalBoundaryMode>,
    /// Mode on tissue faces that border transparent voxels (air, LED).
    pub surface: OpticalBoundaryMode,
    pub patches: Vec<SourcePatch>,
}

impl OpticalBoundarySpec {
    pub fn uniform(mode: OpticalBoundaryMode, patches: Vec<SourcePatch>) -> Self {
        Self { outer: PerFace::uniform(mode), surface: mode, patches }
    }
}

/// Isotropic point emitter (W), placed in the voxel containing `position` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub position: [f64; 3],
    pub power: f64,
}

/// Global power bookkeeping of a solve (W).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpticalBalance {
    pub injected: f64,
    pub absorbed: f64,
    pub outflow: f64,
}

impl OpticalBalance {
    /// |injected − absorbed − outflow| / injected (0 when nothing is injected).
    pub fn relative_residual(&self) -> f64 {
        if self.injected == 0.0 {
            return 0.0;
        }
        (self.injected - self.absorbed - self.outflow).abs() / self.injected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluenceSolution {
    /// Fluence rate in mW/cm².
    pub field: ScalarField,
    pub stats: CgStats,
    pub balance: OpticalBalance,
}

/// Effective reflection of diffuse light at an interface from index `n`
/// into index 1, `R_eff = (Rφ + Rj)/(2 − Rφ + Rj)` with the angular moments
/// of the unpolarised Fresnel reflectance.
pub fn effective_reflection(n: f64) -> f64 {
    if n <= 1.0 {
        return 0.0;
    }
    // Composite Simpson in μ = cos θ; the TIR kink makes this converge ~h².
    let steps = 20_000usize;
    let dmu = 1.0 / steps as f64;
    let mut r_phi = 0.0;
    let mut r_j = 0.0;
    for s in 0..=steps {
        let mu = s as f64 * dmu;
        let w = if s == 0 || s == steps { 1.0 } else if s % 2 == 1 { 4.0 } else { 2.0 };
        let r = fresnel_reflectance(n, 1.0, mu);
        r_phi += w * 2.0 * mu * r;
        r_j += w * 3.0 * mu * mu * r;
    }
    r_phi *= dmu / 3.0;
    r_j *= dmu / 3.0;
    (r_phi + r_j) / (2.0 - r_phi + r_j)
}

#[derive(Debug, Clone)]
struct BoundaryFace {
    voxel: usize,
    conductance: f64,
    /// Source potential the face relaxes towards (W/m²); 0 for sink faces.
    potential: f64,
    /// Power injected directly, independent of φ (W).
    injection: f64,
    /// Light entering through the face (W).
    source_power: f64,
}

/// The assembled finite-volume system `A·φ = b` (φ in W/m², `b` in W).
#[derive(Debug, Clone)]
pub struct FluenceSystem {
    pub operator: Stencil,
    pub rhs: Vec<f64>,
    faces: Vec<BoundaryFace>,
    absorption: Vec<f64>,
    point_power: f64,
}

impl FluenceSystem {
    /// Power balance of a solution `phi` (W/m²).
    fn balance(&self, phi: &[f64]) -> OpticalBalance {
        // Escaping power through each boundary face; for Robin faces that is
        // the transmitted light minus the net inward diffusive current.
        let mut injected = vec![self.point_power];
        let mut outflow = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let net_in = f.conductance * (f.potential - phi[f.voxel]) + f.injection;
            injected.push(f.source_power);
            outflow.push(f.source_power - net_in);
        }
        let absorbed: Vec<f64> = phi.iter().zip(&self.absorption).map(|(p, a)| p * a).collect();
        OpticalBalance { injected: ordered_sum(&injected), absorbed: ordered_sum(&absorbed), outflow: ordered_sum(&outflow) }
    }

    /// `‖A·φ − b‖ / ‖b‖` for `phi` in mW/cm².
    pub fn relative_residual(&self, phi_mw_per_cm2: &[f64]) -> f64 {
        let x: Vec<f64> = phi_mw_per_cm2.iter().map(|v| v * MW_PER_CM2_TO_W_PER_M2).collect();
        let mut ax = vec![0.0; x.len()];
        self.operator.apply(&x, &mut ax);
        let r: Vec<f64> = ax.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let nb = math::norm2(&self.rhs);
        if nb == 0.0 {
            return math::norm2(&r);
        }
        math::norm2(&r) / nb
    }
}

/// Assembles the CW diffusion system for the given boundary sources and point
/// emitters.
pub fn fluence_system(
    phantom: &VoxelPhantom,
    boundary: &OpticalBoundarySpec,
    points: &[PointSource],
) -> Result<FluenceSystem> {
    let grid = phantom.grid;
    let n = grid.len();
    let h = grid.spacing;
    let area = h * h;

    // Per-material D, μa, and Robin factors.
    let mut d_of = Vec::with_capacity(phantom.materials.len());
    for m in &phantom.materials {
        let entry = match &m.optical {
            Some(o) => {
                let d = o.diffusion()?;
                let r_eff = effective_reflection(o.n);
                let a = (1.0 + r_eff) / (1.0 - r_eff);
                let r_spec = fresnel_reflectance(1.0, o.n, 1.0);
                Some((d, o.mu_a, a, r_eff, r_spec))
            }
            None => None,
        };
        d_of.push(entry);
    }
    if d_of.iter().all(|e| e.is_none()) {
        return Err(Error::InvalidInput("no optically active material".into()));
    }
    let props = |v: usize| d_of[phantom.material_id[v].0 as usize];

    let sources = assemble_source_term(phantom, &boundary.patches)?;

    let mut a = Stencil::new(grid);
    let mut rhs = vec![0.0; n];
    let mut faces: Vec<BoundaryFace> = Vec::new();
    let mut absorption = vec![0.0; n];

    for v in 0..n {
        let Some((d, mu_a, big_a, r_eff, r_spec)) = props(v) else {
            a.add_diag(v, 1.0);
            continue;
        };
        absorption[v] = mu_a * h * h * h;
        a.add_diag(v, absorption[v]);
        let c = grid.coords(v);
        for face in Face::ALL {
            let axis = face.axis();
            let neighbour = if face.is_min() {
                (c[axis] > 0).then(|| v - grid.stride(axis))
            } else {
                (c[axis] + 1 < grid.dims[axis]).then(|| v + grid.stride(axis))
            };
            let mode = match neighbour {
                Some(w) => match props(w) {
                    Some((dw, ..)) => {
                        if !face.is_min() {
                            let g = 2.0 * d * dw / (d + dw) * h;
                            a.connect(axis, v, g);
                        }
                        continue;
                    }
                    None => boundary.surface,
                },
                None => boundary.outer.get(face),
            };
            let lit = sources_cover(&sources, v, face);
            let q = sources.flux_at(v, face);
            let face_rec = match (mode, lit) {
                (OpticalBoundaryMode::Dirichlet, true) => BoundaryFace {
                    voxel: v,
                    conductance: 0.0,
                    potential: 0.0,
                    injection: q * area,
                    source_power: q * area,
                },
                (OpticalBoundaryMode::Dirichlet, false) => BoundaryFace {
                    voxel: v,
                    conductance: 2.0 * d * h,
                    potential: 0.0,
                    injection: 0.0,
                    source_power: 0.0,
                },
                (OpticalBoundaryMode::Robin, _) => {
                    let g = 2.0 * d / (h + 4.0 * big_a * d) * area;
                    let q_t = q * (1.0 - r_spec);
                    BoundaryFace {
                        voxel: v,
                        conductance: g,
                        potential: 4.0 * q_t / (1.0 - r_eff),
                        injection: 0.0,
                        source_power: q_t * area,
                    }
                }
            };
            a.add_diag(v, face_rec.conductance);
            rhs[v] += face_rec.conductance * face_rec.potential + face_rec.injection;
            faces.push(face_rec);
        }
    }

    let mut point_power = 0.0;
    for p in points {
        crate::error::require(p.power >= 0.0, "point source power", p.power, "must be >= 0")?;
        let c = grid
            .voxel_of(p.position)
            .ok_or(Error::OutsideGrid { x: p.position[0], y: p.position[1], z: p.position[2] })?;
        let v = grid.index(c[0], c[1], c[2]);
        if props(v).is_none() {
            return Err(Error::InvalidInput("point source sits in a transparent voxel".into()));
        }
        rhs[v] += p.power;
        point_power += p.power;
    }
    Ok(FluenceSystem { operator: a, rhs, faces, absorption, point_power })
}

/// Steady CW fluence for the given boundary sources and point emitters.
pub fn solve_fluence_cw(
    phantom: &VoxelPhantom,
    boundary: &OpticalBoundarySpec,
    points: &[PointSource],
    opts: CgOptions,
) -> Result<FluenceSolution> {
    let sys = fluence_system(phantom, boundary, points)?;
    let mut phi = vec![0.0; sys.rhs.len()];
    let stats = pcg(&sys.operator, &sys.rhs, &mut phi, opts)?;
    for x in &mut phi {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let balance = sys.balance(&phi);
    let values = phi.into_iter().map(w_per_m2_to_mw_per_cm2).collect();
    Ok(FluenceSolution { field: ScalarField::from_values(phantom.grid, Quantity::FluenceRate, values)?, stats, balance })
}

fn sources_cover(map: &BoundaryFluxMap, voxel: usize, face: Face) -> bool {
    let key = crate::sources::FaceElement { voxel, face };
    map.entries.binary_search_by(|e| e.0.cmp(&key)).is_ok()
}

/// Fluence (mW/cm²) at `depth` (m) below `lateral = [x, y]` (m).
pub fn fluence_at_depth(field: &ScalarField, depth: f64, lateral: [f64; 2]) -> Result<f64> {
    field.sample([lateral[0], lateral[1], depth])
}

/// Infinite-medium Green's function of the steady diffusion equation,
/// `P·exp(−μeff·r)/(4π·D·r)`, in the units implied by the inputs.
pub fn point_source_fluence(power: f64, mu_a: f64, d: f64, r: f64) -> f64 {
    let mu_eff = math::sqrt(mu_a / d);
    power * math::exp(-mu_eff * r) / (4.0 * core::f64::consts::PI * d * r)
}
