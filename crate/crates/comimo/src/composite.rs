//! Composite relay-channel construction.
//!
//! Builds the relay channel H2 for the two phase-shifter structures, stacks
//! the direct and relay channels into the composite matrix, and provides the
//! rank-one additive channel used as the RIS-style comparison baseline.

use crate::error::{Error, Result};
use crate::linalg::{phasor, CMat, CVec};
use nalgebra::RowDVector;
use num_complex::Complex64;

/// The two phase-shifter arrangements at the collaborating device.
///
/// Structure 1 keeps one phase shifter per parallel antenna chain
/// (multiplexing; the relay channel can be full rank). Structure 2 combines
/// into a single chain and splits back out (diversity; the relay channel is
/// rank one by construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    S1,
    S2,
}

impl Structure {
    pub fn label(&self) -> &'static str {
        match self {
            Structure::S1 => "structure1",
            Structure::S2 => "structure2",
        }
    }
}

/// Discrete phase-shifter state. Level k of q maps to the phase 2πk/q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseKind {
    /// One level per antenna chain.
    S1 { levels: Vec<u32> },
    /// Combiner levels (r) and splitter levels (t).
    S2 { r: Vec<u32>, t: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseConfig {
    kind: PhaseKind,
    q: u32,
}

impl PhaseConfig {
    pub fn new(kind: PhaseKind, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Config("phase resolution q must be at least 1".into()));
        }
        let check = |levels: &[u32]| -> Result<()> {
            if levels.is_empty() {
                return Err(Error::Config("phase vector must not be empty".into()));
            }
            if let Some(&bad) = levels.iter().find(|&&l| l >= q) {
                return Err(Error::Config(format!("phase level {bad} out of range [0, {q})")));
            }
            Ok(())
        };
        match &kind {
            PhaseKind::S1 { levels } => check(levels)?,
            PhaseKind::S2 { r, t } => {
                check(r)?;
                check(t)?;
                if r.len() != t.len() {
                    return Err(Error::Config(format!(
                        "combiner and splitter vectors must match in length: {} vs {}",
                        r.len(),
                        t.len()
                    )));
                }
            }
        }
        Ok(Self { kind, q })
    }

    /// All-zero-level configuration (every phase shifter at 0 rad).
    pub fn zeros(structure: Structure, nc: usize, q: u32) -> Result<Self> {
        match structure {
            Structure::S1 => Self::new(PhaseKind::S1 { levels: vec![0; nc] }, q),
            Structure::S2 => Self::new(PhaseKind::S2 { r: vec![0; nc], t: vec![0; nc] }, q),
        }
    }

    pub fn kind(&self) -> &PhaseKind {
        &self.kind
    }

    pub fn kind_mut(&mut self) -> &mut PhaseKind {
        &mut self.kind
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn structure(&self) -> Structure {
        match self.kind {
            PhaseKind::S1 { .. } => Structure::S1,
            PhaseKind::S2 { .. } => Structure::S2,
        }
    }

    pub fn nc(&self) -> usize {
        match &self.kind {
            PhaseKind::S1 { levels } => levels.len(),
            PhaseKind::S2 { r, .. } => r.len(),
        }
    }

    /// Phase in radians of one level at this resolution: exactly 2πk/q.
    pub fn phase_of(level: u32, q: u32) -> f64 {
        2.0 * std::f64::consts::PI * level as f64 / q as f64
    }

    pub fn phasor_of(level: u32, q: u32) -> Complex64 {
        phasor(Self::phase_of(level, q))
    }

    fn vector(levels: &[u32], q: u32) -> CVec {
        CVec::from_iterator(levels.len(), levels.iter().map(|&l| Self::phasor_of(l, q)))
    }

    /// Structure-1 unit-modulus phase vector.
    pub fn s1_vector(&self) -> Result<CVec> {
        match &self.kind {
            PhaseKind::S1 { levels } => Ok(Self::vector(levels, self.q)),
            PhaseKind::S2 { .. } => Err(Error::WrongStructure { expected: "structure1", got: "structure2" }),
        }
    }

    /// Structure-2 unit-modulus phase vectors `(r, t)`.
    pub fn s2_vectors(&self) -> Result<(CVec, CVec)> {
        match &self.kind {
            PhaseKind::S2 { r, t } => Ok((Self::vector(r, self.q), Self::vector(t, self.q))),
            PhaseKind::S1 { .. } => Err(Error::WrongStructure { expected: "structure2", got: "structure1" }),
        }
    }

    /// Compact textual form, e.g. `s1:0,3,2` or `s2:r=0,1;t=2,3`.
    pub fn describe(&self) -> String {
        let join = |v: &[u32]| v.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            PhaseKind::S1 { levels } => format!("s1:{}", join(levels)),
            PhaseKind::S2 { r, t } => format!("s2:r={};t={}", join(r), join(t)),
        }
    }

    /// Parses the `describe` format back into a configuration.
    pub fn parse(text: &str, q: u32) -> Result<Self> {
        let levels = |s: &str| -> Result<Vec<u32>> {
            s.split(',')
                .map(|p| p.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad level `{p}`"))))
                .collect()
        };
        if let Some(body) = text.strip_prefix("s1:") {
            return Self::new(PhaseKind::S1 { levels: levels(body)? }, q);
        }
        if let Some(body) = text.strip_prefix("s2:") {
            let parts: Vec<&str> = body.split(';').collect();
            let [r_part, t_part] = parts.as_slice() else {
                return Err(Error::Config(format!("bad config `{text}`")));
            };
            let r = levels(r_part.strip_prefix("r=").ok_or_else(|| Error::Config(format!("bad config `{text}`")))?)?;
            let t = levels(t_part.strip_prefix("t=").ok_or_else(|| Error::Config(format!("bad config `{text}`")))?)?;
            return Self::new(PhaseKind::S2 { r, t }, q);
        }
        Err(Error::Config(format!("bad config `{text}`")))
    }
}

/// Amplify-and-forward parameters of the collaborating device.
#[derive(Debug, Clone, Copy)]
pub struct RelayParams {
    pub rho: f64,
    pub structure: Structure,
    pub power_normalization: bool,
}

impl RelayParams {
    pub fn new(rho: f64, structure: Structure, power_normalization: bool) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("LNA power gain must be positive, got {rho}")));
        }
        Ok(Self { rho, structure, power_normalization })
    }

    /// Scalar applied to the forwarding matrix so that its Frobenius norm is
    /// sqrt(Nc) for both structures. Structure 1 satisfies this natively
    /// (unit-modulus diagonal); Structure 2 needs 1/sqrt(Nc).
    fn normalization(&self, nc: usize) -> f64 {
        match (self.structure, self.power_normalization) {
            (Structure::S2, true) => 1.0 / (nc as f64).sqrt(),
            _ => 1.0,
        }
    }
}

/// Relay channel for Structure 1 from continuous unit-modulus phases:
/// `sqrt(rho) * Hp * diag(phi) * Hc`.
pub fn h2_structure1_from_phases(hp: &CMat, hc: &CMat, phi: &CVec, rho: f64) -> Result<CMat> {
    let nc = hp.ncols();
    if hc.nrows() != nc {
        return Err(Error::DimensionMismatch(format!(
            "hp is {}x{nc} but hc has {} rows",
            hp.nrows(),
            hc.nrows()
        )));
    }
    if phi.len() != nc {
        return Err(Error::DimensionMismatch(format!("phase vector length {} != {nc}", phi.len())));
    }
    let amp = Complex64::new(rho.sqrt(), 0.0);
    // hp * diag(phi) scales hp columns; avoids forming the diagonal matrix.
    let mut scaled = hp.clone();
    for c in 0..nc {
        let f = phi[c] * amp;
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= f;
        }
    }
    Ok(scaled * hc)
}

/// Relay channel for Structure 2 from continuous unit-modulus phases:
/// `sqrt(rho) * c * Hp * phi_t * phi_r^H * Hc` (rank one), where `c` is the
/// optional power-normalization scalar.
pub fn h2_structure2_from_phases(
    hp: &CMat,
    hc: &CMat,
    phi_t: &CVec,
    phi_r: &CVec,
    rho: f64,
    normalization: f64,
) -> Result<CMat> {
    let nc = hp.ncols();
    if hc.nrows() != nc {
        return Err(Error::DimensionMismatch(format!(
            "hp is {}x{nc} but hc has {} rows",
            hp.nrows(),
            hc.nrows()
        )));
    }
    if phi_t.len() != nc || phi_r.len() != nc {
        return Err(Error::DimensionMismatch(format!(
            "phase vectors ({}, {}) must have length {nc}",
            phi_t.len(),
            phi_r.len()
        )));
    }
    let amp = Complex64::new(rho.sqrt() * normalization, 0.0);
    let a = hp * phi_t * amp; // N2 x 1
    let b = phi_r.adjoint() * hc; // 1 x M
    Ok(a * b)
}

/// Relay channel for Structure 1 under a discrete phase configuration.
pub fn build_h2_structure1(hp: &CMat, hc: &CMat, cfg: &PhaseConfig, params: &RelayParams) -> Result<CMat> {
    if params.structure != Structure::S1 {
        return Err(Error::WrongStructure { expected: "structure1", got: params.structure.label() });
    }
    let phi = cfg.s1_vector()?;
    h2_structure1_from_phases(hp, hc, &phi, params.rho)
}

/// Relay channel for Structure 2 under a discrete phase configuration.
/// The output has rank at most one for every configuration.
pub fn build_h2_structure2(hp: &CMat, hc: &CMat, cfg: &PhaseConfig, params: &RelayParams) -> Result<CMat> {
    if params.structure != Structure::S2 {
        return Err(Error::WrongStructure { expected: "structure2", got: params.structure.label() });
    }
    let (phi_r, phi_t) = cfg.s2_vectors()?;
    h2_structure2_from_phases(hp, hc, &phi_t, &phi_r, params.rho, params.normalization(cfg.nc()))
}

/// Relay channel for whichever structure the configuration carries.
pub fn build_h2(hp: &CMat, hc: &CMat, cfg: &PhaseConfig, params: &RelayParams) -> Result<CMat> {
    match cfg.structure() {
        Structure::S1 => build_h2_structure1(hp, hc, cfg, params),
        Structure::S2 => build_h2_structure2(hp, hc, cfg, params),
    }
}

/// Vertical stack `[h1; h2]`. `h2` may have zero rows.
pub fn stack_channel(h1: &CMat, h2: &CMat) -> Result<CMat> {
    if h2.nrows() == 0 {
        return Ok(h1.clone());
    }
    if h1.ncols() != h2.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "stack needs equal column counts, got {} and {}",
            h1.ncols(),
            h2.ncols()
        )));
    }
    let mut out = CMat::zeros(h1.nrows() + h2.nrows(), h1.ncols());
    out.view_mut((0, 0), (h1.nrows(), h1.ncols())).copy_from(h1);
    out.view_mut((h1.nrows(), 0), (h2.nrows(), h2.ncols())).copy_from(h2);
    Ok(out)
}

/// Rank-one additive channel `h1 + a * hrow`, the RIS-style modification of
/// the direct link. Unlike the stacked channel, this perturbation can
/// decrease singular values.
pub fn ris_additive_channel(h1: &CMat, a: &CVec, hrow: &RowDVector<Complex64>) -> Result<CMat> {
    if a.len() != h1.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "a has length {}, h1 has {} rows",
            a.len(),
            h1.nrows()
        )));
    }
    if hrow.len() != h1.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "hrow has length {}, h1 has {} columns",
            hrow.len(),
            h1.ncols()
        )));
    }
    Ok(h1 + a * hrow)
}
