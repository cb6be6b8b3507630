use alloc::vec;
use alloc::vec::Vec;

use super::sampling::{fresnel_reflectance, isotropic_direction, normalize, sample_hg_cosine, scatter_direction, BatchRng};
use crate::diffusion::PointSource;
use crate::error::{require, Error, Result};
use crate::field::{Grid, Quantity, ScalarField};
use crate::geometry::Face;
use crate::math::{self, CompensatedSum};
use crate::phantom::VoxelPhantom;
use crate::sources::{assemble_source_term, SourcePatch};
use crate::units::w_per_m2_to_mw_per_cm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_photons: u64,
    pub seed: u64,
    /// Packets lighter than this enter Russian roulette.
    pub roulette_threshold: f64,
    /// Survival probability in roulette.
    pub roulette_survival: f64,
    /// Interactions after which a packet is dropped (its weight goes to the
    /// roulette balance).
    pub max_events: u64,
    /// Packets per batch. Part of the reproducibility key.
    pub batch_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_photons: 100_000,
            seed: 1,
            roulette_threshold: 1e-4,
            roulette_survival: 0.1,
            max_events: 1_000_000,
            batch_size: 10_000,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.n_photons >= 1, "n_photons", self.n_photons as f64, "must be >= 1")?;
        require(
            self.roulette_threshold > 0.0 && self.roulette_threshold < 1.0,
            "roulette threshold",
            self.roulette_threshold,
            "must lie in (0, 1)",
        )?;
        require(
            self.roulette_survival > 0.0 && self.roulette_survival <= 1.0,
            "roulette survival",
            self.roulette_survival,
            "must lie in (0, 1]",
        )?;
        require(self.batch_size >= 1, "batch_size", self.batch_size as f64, "must be >= 1")?;
        require(self.max_events >= 1, "max_events", self.max_events as f64, "must be >= 1")?;
        Ok(())
    }

    pub fn n_batches(&self) -> u64 {
        self.n_photons.div_ceil(self.batch_size)
    }
}

/// Energy bookkeeping in packet-weight units (one launched packet = 1).
///
/// `launched = absorbed + reflected + transmitted + roulette_balance`, where
/// `reflected` includes specular loss at entry plus packets leaving through
/// the face they entered, and `roulette_balance` is the net weight removed by
/// roulette and by the interaction cap.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tallies {
    pub launched: f64,
    pub absorbed: f64,
    pub reflected: f64,
    pub transmitted: f64,
    pub roulette_balance: f64,
}

impl Tallies {
    pub fn conservation_error(&self) -> f64 {
        let out = self.absorbed + self.reflected + self.transmitted + self.roulette_balance;
        if self.launched == 0.0 {
            return out.abs();
        }
        (self.launched - out).abs() / self.launched
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TallySums {
    launched: CompensatedSum,
    absorbed: CompensatedSum,
    reflected: CompensatedSum,
    transmitted: CompensatedSum,
    roulette: CompensatedSum,
}

impl TallySums {
    fn merge(&mut self, other: &TallySums) {
        self.launched.add(other.launched.value());
        self.absorbed.add(other.absorbed.value());
        self.reflected.add(other.reflected.value());
        self.transmitted.add(other.transmitted.value());
        self.roulette.add(other.roulette.value());
    }

    fn snapshot(&self) -> Tallies {
        Tallies {
            launched: self.launched.value(),
            absorbed: self.absorbed.value(),
            reflected: self.reflected.value(),
            transmitted: self.transmitted.value(),
            roulette_balance: self.roulette.value(),
        }
    }
}

/// State of one packet. `voxel` is the grid cell containing `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPacket {
    pub position: [f64; 3],
    pub direction: [f64; 3],
    pub weight: f64,
    pub voxel: [usize; 3],
    /// Face the packet came in through, if launched from a patch.
    pub entry_face: Option<Face>,
}

/// Result of one batch: scalar tallies and absorbed weight per voxel.
#[derive(Debug, Clone)]
pub struct BatchTally {
    pub batch: u64,
    sums: TallySums,
    pub absorbed: Vec<f64>,
}

impl BatchTally {
    pub fn tallies(&self) -> Tallies {
        self.sums.snapshot()
    }
}

/// Ordered reduction of batch results.
#[derive(Debug, Clone)]
pub struct McAccumulator {
    next_batch: u64,
    sums: TallySums,
    absorbed: Vec<f64>,
}

impl McAccumulator {
    pub fn new(n_voxels: usize) -> Self {
        Self { next_batch: 0, sums: TallySums::default(), absorbed: vec![0.0; n_voxels] }
    }

    /// Adds a batch. Batches must arrive in index order.
    pub fn push(&mut self, b: &BatchTally) {
        assert_eq!(b.batch, self.next_batch, "batches must be merged in index order");
        self.next_batch += 1;
        self.sums.merge(&b.sums);
        for (acc, &x) in self.absorbed.iter_mut().zip(&b.absorbed) {
            *acc += x;
        }
    }

    pub fn batches(&self) -> u64 {
        self.next_batch
    }
}

#[derive(Debug, Clone)]
pub struct McResult {
    /// Fluence rate (mW/cm²) from the absorbed-weight tally.
    pub fluence: ScalarField,
    pub tallies: Tallies,
    /// Absorbed weight per voxel (packet units).
    pub absorbed_weight: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct OpticalCell {
    mu_a: f64,
    mu_s: f64,
    mu_t: f64,
    g: f64,
    n: f64,
}

#[derive(Debug, Clone, Copy)]
enum LaunchSite {
    Face { voxel: usize, face: Face },
    Point { position: [f64; 3] },
}

/// A prepared transport problem. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct McSimulation {
    grid: Grid,
    cells: Vec<OpticalCell>,
    material_id: Vec<u8>,
    sites: Vec<LaunchSite>,
    /// Cumulative launch probability per site.
    cdf: Vec<f64>,
    total_power: f64,
    cfg: McConfig,
}

impl McSimulation {
    pub fn new(
        phantom: &VoxelPhantom,
        patches: &[SourcePatch],
        points: &[PointSource],
        cfg: McConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let grid = phantom.grid;
        let mut cells = Vec::with_capacity(phantom.materials.len());
        for m in &phantom.materials {
            let cell = match &m.optical {
                Some(o) => {
                    o.validate()?;
                    if o.mu_t() <= 0.0 {
                        return Err(Error::ZeroAttenuation(m.name.clone()));
                    }
                    OpticalCell { mu_a: o.mu_a, mu_s: o.mu_s, mu_t: o.mu_t(), g: o.g, n: o.n }
                }
                None => OpticalCell { mu_a: 0.0, mu_s: 0.0, mu_t: 0.0, g: 0.0, n: 1.0 },
            };
            cells.push(cell);
        }
        let map = assemble_source_term(phantom, patches)?;
        let area = grid.spacing * grid.spacing;
        let mut sites = Vec::new();
        let mut weights = Vec::new();
        for (e, flux) in &map.entries {
            if *flux > 0.0 {
                sites.push(LaunchSite::Face { voxel: e.voxel, face: e.face });
                weights.push(flux * area);
            }
        }
        for p in points {
            require(p.power >= 0.0, "point source power", p.power, "must be >= 0")?;
            if grid.voxel_of(p.position).is_none() {
                return Err(Error::OutsideGrid { x: p.position[0], y: p.position[1], z: p.position[2] });
            }
            if p.power > 0.0 {
                sites.push(LaunchSite::Point { position: p.position });
                weights.push(p.power);
            }
        }
        let total_power = math::ordered_sum(&weights);
        if !(total_power > 0.0) {
            return Err(Error::InvalidInput("Monte Carlo needs a source with positive light power".into()));
        }
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = CompensatedSum::new();
        for w in &weights {
            acc.add(*w);
            cdf.push(acc.value() / total_power);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            grid,
            cells,
            material_id: phantom.material_id.iter().map(|m| m.0).collect(),
            sites,
            cdf,
            total_power,
            cfg,
        })
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Total light power represented by the launched packets (W).
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn n_batches(&self) -> u64 {
        self.cfg.n_batches()
    }

    #[inline]
    fn cell(&self, c: [usize; 3]) -> &OpticalCell {
        &self.cells[self.material_id[self.grid.index(c[0], c[1], c[2])] as usize]
    }

    fn launch(&self, rng: &mut BatchRng, sums: &mut TallySums) -> PhotonPacket {
        let u = rng.uniform();
        let site = self.sites[self.cdf.partition_point(|&c| c < u).min(self.sites.len() - 1)];
        sums.launched.add(1.0);
        match site {
            LaunchSite::Face { voxel, face } => {
                let c = self.grid.coords(voxel);
                let h = self.grid.spacing;
                let mut pos = [0.0; 3];
                let axis = face.axis();
                for a in 0..3 {
                    pos[a] = if a == axis {
                        (c[a] + usize::from(!face.is_min())) as f64 * h
                    } else {
                        (c[a] as f64 + rng.uniform()) * h
                    };
                }
                let n = face.normal();
                let dir = [-n[0], -n[1], -n[2]];
                // Specular loss at normal incidence, by weight splitting.
                let r = fresnel_reflectance(1.0, self.cell(c).n, 1.0);
                sums.reflected.add(r);
                PhotonPacket { position: pos, direction: dir, weight: 1.0 - r, voxel: c, entry_face: Some(face) }
            }
            LaunchSite::Point { position } => {
                let dir = isotropic_direction(rng.uniform(), rng.uniform());
                let voxel = self.grid.voxel_of(position).expect("checked at construction");
                PhotonPacket { position, direction: dir, weight: 1.0, voxel, entry_face: None }
            }
        }
    }

    /// Runs batch `batch` (0-based) and returns its private tally.
    pub fn run_batch(&self, batch: u64) -> Result<BatchTally> {
        let mut absorbed = vec![0.0; self.grid.len()];
        let mut sums = TallySums::default();
        let mut rng = BatchRng::new(self.cfg.seed, batch);
        let first = batch * self.cfg.batch_size;
        let last = (first + self.cfg.batch_size).min(self.cfg.n_photons);
        for packet in first..last {
            let p = self.launch(&mut rng, &mut sums);
            self.transport(p, &mut rng, &mut sums, &mut absorbed)
                .map_err(|what| Error::NonFinitePacket { batch, packet, what })?;
        }
        Ok(BatchTally { batch, sums, absorbed })
    }

    fn transport(
        &self,
        mut p: PhotonPacket,
        rng: &mut BatchRng,
        sums: &mut TallySums,
        absorbed: &mut [f64],
    ) -> core::result::Result<(), &'static str> {
        let h = self.grid.spacing;
        let dims = self.grid.dims;
        let mut tau = -math::ln(rng.uniform());
        let mut events = 0u64;
        loop {
            if !(p.weight.is_finite() && p.position.iter().all(|x| x.is_finite())) {
                return Err("weight or position");
            }
            let cell = *self.cell(p.voxel);
            // Distance to the nearest voxel wall along the direction.
            let mut d_wall = f64::INFINITY;
            let mut wall_axis = 0usize;
            for a in 0..3 {
                let u = p.direction[a];
                let d = if u > 0.0 {
                    ((p.voxel[a] + 1) as f64 * h - p.position[a]) / u
                } else if u < 0.0 {
                    (p.voxel[a] as f64 * h - p.position[a]) / u
                } else {
                    f64::INFINITY
                };
                let d = d.max(0.0);
                if d < d_wall {
                    d_wall = d;
                    wall_axis = a;
                }
            }

            if cell.mu_t > 0.0 && tau < d_wall * cell.mu_t {
                let s = tau / cell.mu_t;
                for a in 0..3 {
                    p.position[a] += s * p.direction[a];
                }
                let deposit = p.weight * (cell.mu_a / cell.mu_t);
                absorbed[self.grid.index(p.voxel[0], p.voxel[1], p.voxel[2])] += deposit;
                sums.absorbed.add(deposit);
                p.weight -= deposit;
                if cell.mu_s > 0.0 {
                    let cos_t = sample_hg_cosine(cell.g, rng.uniform());
                    p.direction = scatter_direction(p.direction, cos_t, rng.uniform());
                }
                events += 1;
                if events >= self.cfg.max_events {
                    sums.roulette.add(p.weight);
                    return Ok(());
                }
                if p.weight < self.cfg.roulette_threshold {
                    if p.weight == 0.0 {
                        return Ok(());
                    }
                    if rng.uniform() < self.cfg.roulette_survival {
                        let boosted = p.weight / self.cfg.roulette_survival;
                        sums.roulette.add(p.weight - boosted);
                        p.weight = boosted;
                    } else {
                        sums.roulette.add(p.weight);
                        return Ok(());
                    }
                }
                tau = -math::ln(rng.uniform());
                continue;
            }

            // Advance to the wall.
            for a in 0..3 {
                p.position[a] += d_wall * p.direction[a];
            }
            tau = (tau - d_wall * cell.mu_t).max(0.0);
            let a = wall_axis;
            let forward = p.direction[a] > 0.0;
            let plane = if forward { (p.voxel[a] + 1) as f64 * h } else { p.voxel[a] as f64 * h };
            p.position[a] = plane;
            let inside = if forward { p.voxel[a] + 1 < dims[a] } else { p.voxel[a] > 0 };
            let mut next = p.voxel;
            let n_next = if inside {
                next[a] = if forward { next[a] + 1 } else { next[a] - 1 };
                self.cell(next).n
            } else {
                1.0
            };
            if n_next != cell.n {
                let cos_i = p.direction[a].abs();
                let r = fresnel_reflectance(cell.n, n_next, cos_i);
                if r >= 1.0 || rng.uniform() < r {
                    p.direction[a] = -p.direction[a];
                    continue;
                }
                // Snell refraction: tangential components scale by n1/n2.
                let ratio = cell.n / n_next;
                let sin_t2 = ratio * ratio * (1.0 - cos_i * cos_i);
                let cos_t = math::sqrt((1.0 - sin_t2).max(0.0));
                let mut d = p.direction;
                for (b, db) in d.iter_mut().enumerate() {
                    if b != a {
                        *db *= ratio;
                    }
                }
                d[a] = if forward { cos_t } else { -cos_t };
                p.direction = normalize(d);
            }
            if !inside {
                let exit = Face::from_axis(a, !forward);
                if p.entry_face == Some(exit) {
                    sums.reflected.add(p.weight);
                } else {
                    sums.transmitted.add(p.weight);
                }
                return Ok(());
            }
            p.voxel = next;
        }
    }

    /// Converts an accumulated absorbed-weight tally into fluence.
    pub fn finish(&self, acc: McAccumulator) -> McResult {
        assert_eq!(acc.next_batch, self.n_batches(), "not all batches were merged");
        let per_packet = self.total_power / self.cfg.n_photons as f64;
        let volume = self.grid.voxel_volume();
        let values = acc
            .absorbed
            .iter()
            .zip(&self.material_id)
            .map(|(&w, &m)| {
                let mu_a = self.cells[m as usize].mu_a;
                if mu_a > 0.0 {
                    w_per_m2_to_mw_per_cm2(w * per_packet / (mu_a * volume))
                } else {
                    0.0
                }
            })
            .collect();
        McResult {
            fluence: ScalarField { grid: self.grid, quantity: Quantity::FluenceRate, values },
            tallies: acc.sums.snapshot(),
            absorbed_weight: acc.absorbed,
        }
    }

    /// Runs every batch sequentially in index order.
    pub fn run(&self) -> Result<McResult> {
        let mut acc = McAccumulator::new(self.grid.len());
        for b in 0..self.n_batches() {
            acc.push(&self.run_batch(b)?);
        }
        Ok(self.finish(acc))
    }
}
