use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{require, Result};
use crate::math;

/// Random stream for one photon batch: ChaCha8 keyed by the master seed with
/// the batch index as the stream id. Streams never overlap.
pub struct BatchRng(ChaCha8Rng);

impl BatchRng {
    pub fn new(master_seed: u64, batch: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(batch);
        Self(rng)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        uniform_open01(self.0.next_u64())
    }
}

/// Maps 64 random bits to (0, 1); never returns 0 or 1.
#[inline]
pub fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Free path length `−ln(u)/μt` for a uniform deviate `u ∈ (0, 1)`.
pub fn sample_step(mu_t: f64, u: f64) -> Result<f64> {
    require(mu_t > 0.0, "mu_t", mu_t, "must be > 0")?;
    require(u > 0.0 && u < 1.0, "u", u, "must lie in (0, 1)")?;
    Ok(-math::ln(u) / mu_t)
}

/// Henyey–Greenstein deflection cosine by inverse CDF.
pub fn sample_hg_cosine(g: f64, u: f64) -> f64 {
    if g == 0.0 {
        return 2.0 * u - 1.0;
    }
    let g2 = g * g;
    let frac = (1.0 - g2) / (1.0 - g + 2.0 * g * u);
    ((1.0 + g2 - frac * frac) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// Unpolarised Fresnel reflectance for light travelling from index `n_in`
/// into `n_out` at incidence cosine `cos_i`. Returns 1 past the critical angle.
pub fn fresnel_reflectance(n_in: f64, n_out: f64, cos_i: f64) -> f64 {
    if n_in == n_out {
        return 0.0;
    }
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin_i2 = 1.0 - cos_i * cos_i;
    let ratio = n_in / n_out;
    let sin_t2 = ratio * ratio * sin_i2;
    if sin_t2 >= 1.0 {
        return 1.0;
    }
    let cos_t = math::sqrt(1.0 - sin_t2);
    let rs = (n_in * cos_i - n_out * cos_t) / (n_in * cos_i + n_out * cos_t);
    let rp = (n_out * cos_i - n_in * cos_t) / (n_out * cos_i + n_in * cos_t);
    0.5 * (rs * rs + rp * rp)
}

/// Uniform direction on the unit sphere.
pub fn isotropic_direction(u1: f64, u2: f64) -> [f64; 3] {
    let cos_t = 2.0 * u1 - 1.0;
    let sin_t = math::sqrt((1.0 - cos_t * cos_t).max(0.0));
    let phi = 2.0 * PI * u2;
    [sin_t * math::cos(phi), sin_t * math::sin(phi), cos_t]
}

/// Rotates `dir` by polar cosine `cos_t` and azimuth `2π·u_phi`.
pub fn scatter_direction(dir: [f64; 3], cos_t: f64, u_phi: f64) -> [f64; 3] {
    let sin_t = math::sqrt((1.0 - cos_t * cos_t).max(0.0));
    let phi = 2.0 * PI * u_phi;
    let (cos_p, sin_p) = (math::cos(phi), math::sin(phi));
    let [ux, uy, uz] = dir;
    let out = if uz.abs() > 0.999_99 {
        [sin_t * cos_p, sin_t * sin_p, uz.signum() * cos_t]
    } else {
        let temp = math::sqrt(1.0 - uz * uz);
        [
            sin_t * (ux * uz * cos_p - uy * sin_p) / temp + ux * cos_t,
            sin_t * (uy * uz * cos_p + ux * sin_p) / temp + uy * cos_t,
            -sin_t * cos_p * temp + uz * cos_t,
        ]
    };
    normalize(out)
}

#[inline]
pub(crate) fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}
