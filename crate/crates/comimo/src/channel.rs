//! Statistical channel generation.
//!
//! Produces the three links of the collaborative setup — direct (BS to
//! primary device), first hop (BS to collaborator) and relay hop
//! (collaborator to primary) — from array geometry and Rician parameters,
//! with fully deterministic seeding.

use crate::error::{Error, Result};
use crate::linalg::{phasor, standard_complex, CMat};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Positions of the antenna elements of one device, in meters, plus the
/// reference wavelength of the band the array serves.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 3]>, wavelength: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("array needs at least one element".into()));
        }
        if positions.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidGeometry("non-finite element coordinate".into()));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::InvalidGeometry(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(Self { positions, wavelength })
    }

    /// Uniform linear array along the x axis with half-wavelength spacing,
    /// centered at `center`.
    pub fn ula(n: usize, wavelength: f64, center: [f64; 3]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGeometry("array needs at least one element".into()));
        }
        let d = wavelength / 2.0;
        let positions = (0..n)
            .map(|i| {
                let off = (i as f64 - (n as f64 - 1.0) / 2.0) * d;
                [center[0] + off, center[1], center[2]]
            })
            .collect();
        Self::new(positions, wavelength)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Largest pairwise element distance (array aperture).
    pub fn aperture(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }

    /// Centroid of the element positions.
    pub fn center(&self) -> [f64; 3] {
        let n = self.positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }
}

#[inline]
fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Rician fading description for one link. `kappa = f64::INFINITY` selects
/// the pure line-of-sight limit; `kappa = 0` is Rayleigh.
#[derive(Debug, Clone, Copy)]
pub struct RicianSpec {
    pub kappa: f64,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
}

impl RicianSpec {
    pub fn new(kappa: f64, seed: u64, rows: usize, cols: usize) -> Result<Self> {
        if kappa.is_nan() || kappa < 0.0 {
            return Err(Error::Domain(format!("kappa must be >= 0 or +inf, got {kappa}")));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("channel dimensions must be at least 1x1".into()));
        }
        Ok(Self { kappa, seed, rows, cols })
    }
}

/// The channel triplet feeding one composite-channel construction.
#[derive(Debug, Clone)]
pub struct LinkSet {
    pub h1: CMat,
    pub hc: CMat,
    pub hp: CMat,
    pub snr_db: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl LinkSet {
    pub fn new(h1: CMat, hc: CMat, hp: CMat, snr_db: f64, f_low_hz: f64, f_high_hz: f64) -> Result<Self> {
        if h1.ncols() != hc.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "h1 and hc must share the transmit antenna count: {} vs {}",
                h1.ncols(),
                hc.ncols()
            )));
        }
        if hp.ncols() != hc.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "hp column count {} must equal hc row count {}",
                hp.ncols(),
                hc.nrows()
            )));
        }
        Ok(Self { h1, hc, hp, snr_db, f_low_hz, f_high_hz })
    }
}

/// Line-of-sight channel matrix: entry (n, m) is `exp(-j 2π d_{n,m} / λ)`
/// for the Euclidean distance between receive element n and transmit
/// element m. Every entry has unit magnitude.
pub fn los_matrix(tx: &ArrayGeometry, rx: &ArrayGeometry, wavelength: f64) -> Result<CMat> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::InvalidGeometry(format!("wavelength must be positive, got {wavelength}")));
    }
    let mut h = CMat::zeros(rx.len(), tx.len());
    for (n, rp) in rx.positions().iter().enumerate() {
        for (m, tp) in tx.positions().iter().enumerate() {
            let d = dist(rp, tp);
            h[(n, m)] = phasor(-2.0 * std::f64::consts::PI * d / wavelength);
        }
    }
    Ok(h)
}

/// Rician mixture sample:
/// `sqrt(1/(κ+1)) H_iid + sqrt(κ/(κ+1)) H_los`, where `H_iid` has
/// i.i.d. standard complex Gaussian entries. `κ = 0` is pure Rayleigh;
/// `κ = ∞` returns `los` exactly (no RNG draw).
pub fn rician_sample(spec: &RicianSpec, los: &CMat, rng: &mut ChaCha8Rng) -> Result<CMat> {
    if los.nrows() != spec.rows || los.ncols() != spec.cols {
        return Err(Error::DimensionMismatch(format!(
            "los is {}x{}, spec wants {}x{}",
            los.nrows(),
            los.ncols(),
            spec.rows,
            spec.cols
        )));
    }
    if spec.kappa.is_infinite() {
        return Ok(los.clone());
    }
    let nlos_gain = (1.0 / (spec.kappa + 1.0)).sqrt();
    let los_gain = (spec.kappa / (spec.kappa + 1.0)).sqrt();
    let mut h = CMat::zeros(spec.rows, spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            h[(r, c)] = standard_complex(rng) * nlos_gain + los[(r, c)] * los_gain;
        }
    }
    Ok(h)
}

/// `rician_sample` with the stream derived from `spec.seed`; same
/// `(spec, los)` always yields a bitwise-identical matrix.
pub fn rician_sample_seeded(spec: &RicianSpec, los: &CMat) -> Result<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rician_sample(spec, los, &mut rng)
}

/// Free-space path loss as a linear power gain, `λ² / (4πd)²`.
pub fn free_space_path_loss(d: f64, wavelength: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!("wavelength must be positive, got {wavelength}")));
    }
    let x = wavelength / (4.0 * std::f64::consts::PI * d);
    Ok(x * x)
}

/// Scale both first-hop matrices by `sqrt(γ / M)` with `γ = 10^(snr_db/10)`,
/// so that with an identity-covariance transmit signal and unit-variance
/// noise the expected per-receive-antenna SNR on the direct link is `γ`.
/// The relay hop is not scaled here (it is governed by the LNA gain and
/// path loss).
pub fn apply_snr_scaling(h1: &CMat, hc: &CMat, snr_db: f64) -> (CMat, CMat) {
    let m = h1.ncols() as f64;
    let gamma = 10f64.powf(snr_db / 10.0);
    let s = Complex64::new((gamma / m).sqrt(), 0.0);
    (h1 * s, hc * s)
}

/// Far-field boundary `2 D² / λ` for an aperture `D`.
pub fn fraunhofer_distance(aperture: f64, wavelength: f64) -> f64 {
    2.0 * aperture * aperture / wavelength
}

/// Derives the sub-stream RNG for one (link, trial) pair from the master
/// seed. The three inputs are mixed through the SplitMix64 finalizer in
/// sequence, so distinct links and trials get statistically independent
/// streams and parallel execution stays reproducible.
pub fn substream(master: u64, link: u64, trial: u64) -> ChaCha8Rng {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ link.wrapping_mul(0xa076_1d64_78bd_642f));
    h = splitmix64(h ^ trial.wrapping_mul(0xe703_7ed1_a0b4_28db));
    ChaCha8Rng::seed_from_u64(h)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
