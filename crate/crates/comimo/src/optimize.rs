//! Phase-shifter configuration search.
//!
//! Exhaustive searches (joint and separate), the measurement-driven blind
//! greedy optimizer, and the closed-form rank-one solutions. Every search
//! talks to the composite channel through [`SeOracle`] only, so an
//! optimizer never sees the individual hop matrices — mirroring a device
//! that can measure compound spectral efficiency but not per-hop state.

use crate::composite::{PhaseConfig, PhaseKind, Structure};
use crate::error::{Error, Result};
use crate::linalg::{log2_det_hpd, svd_full_right_basis, svd_sorted, CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Spectral-efficiency measurement interface. Implementations must be
/// deterministic for fixed channels and must count every evaluation.
pub trait SeOracle {
    fn evaluate(&mut self, cfg: &PhaseConfig) -> f64;
    fn evaluations(&self) -> u64;
}

/// Oracle over the stacked composite channel. Precomputes the direct-link
/// factors once so each probe costs a handful of small matrix products; the
/// evaluated quantity is exactly the stacked-channel spectral efficiency.
#[derive(Debug, Clone)]
pub struct ChannelOracle {
    hp: CMat,
    base_se: f64,
    /// Hc V diag(1/sqrt(1 + d)) for the multiplexing structure.
    hc_whitened: CMat,
    /// diag(1/sqrt(1 + d)) V^H Hc^H for the diversity structure.
    omega_map: CMat,
    rho: f64,
    normalization: bool,
    count: u64,
}

impl ChannelOracle {
    pub fn new(h1: &CMat, hc: &CMat, hp: &CMat, params: &crate::composite::RelayParams) -> Result<Self> {
        if hc.ncols() != h1.ncols() {
            return Err(Error::DimensionMismatch("h1 and hc transmit dims differ".into()));
        }
        if hp.ncols() != hc.nrows() {
            return Err(Error::DimensionMismatch("hp inner dim must match hc rows".into()));
        }
        let m = h1.ncols();
        let (s, v) = svd_full_right_basis(h1);
        let mut d2 = vec![0.0f64; m];
        for (i, si) in s.iter().enumerate() {
            d2[i] = si * si;
        }
        let base_se: f64 = d2.iter().map(|x| (1.0 + x).log2()).sum();
        let mut hc_whitened = hc * &v;
        for c in 0..m {
            let f = Complex64::new(1.0 / (1.0 + d2[c]).sqrt(), 0.0);
            for r in 0..hc_whitened.nrows() {
                hc_whitened[(r, c)] *= f;
            }
        }
        let omega_map = hc_whitened.adjoint();
        Ok(Self {
            hp: hp.clone(),
            base_se,
            hc_whitened,
            omega_map,
            rho: params.rho,
            normalization: params.power_normalization,
            count: 0,
        })
    }

    pub fn base_se(&self) -> f64 {
        self.base_se
    }

    fn gain_s1(&self, phi: &CVec) -> f64 {
        // X = sqrt(rho) Hp diag(phi) Hc_whitened; gain = log2 det(I + X X^H).
        let n2 = self.hp.nrows();
        let nc = self.hp.ncols();
        let m = self.hc_whitened.ncols();
        let amp = Complex64::new(self.rho.sqrt(), 0.0);
        let mut x = CMat::zeros(n2, m);
        for r in 0..n2 {
            for k in 0..nc {
                let f = self.hp[(r, k)] * phi[k] * amp;
                for c in 0..m {
                    x[(r, c)] += f * self.hc_whitened[(k, c)];
                }
            }
        }
        let g = CMat::identity(n2, n2) + &x * x.adjoint();
        log2_det_hpd(&g)
    }

    fn gain_s2(&self, phi_r: &CVec, phi_t: &CVec) -> f64 {
        let c = if self.normalization { 1.0 / (phi_t.len() as f64).sqrt() } else { 1.0 };
        let eta = (&self.hp * phi_t).norm_squared();
        let quad = (&self.omega_map * phi_r).norm_squared();
        (1.0 + self.rho * c * c * eta * quad).log2()
    }
}

impl SeOracle for ChannelOracle {
    fn evaluate(&mut self, cfg: &PhaseConfig) -> f64 {
        self.count += 1;
        match cfg.kind() {
            PhaseKind::S1 { .. } => {
                let phi = cfg.s1_vector().expect("kind checked");
                self.base_se + self.gain_s1(&phi)
            }
            PhaseKind::S2 { .. } => {
                let (phi_r, phi_t) = cfg.s2_vectors().expect("kind checked");
                self.base_se + self.gain_s2(&phi_r, &phi_t)
            }
        }
    }

    fn evaluations(&self) -> u64 {
        self.count
    }
}

/// Oracle over the rank-one additive channel `H1 + a(cfg) hrow(cfg)` — the
/// RIS-style baseline that forwards on the same band into the existing
/// receive antennas. Uses the diversity-structure phase layout.
#[derive(Debug, Clone)]
pub struct RisAdditiveOracle {
    h1: CMat,
    hp_low: CMat,
    hc: CMat,
    rho: f64,
    normalization: bool,
    count: u64,
}

impl RisAdditiveOracle {
    pub fn new(h1: &CMat, hc: &CMat, hp_low: &CMat, params: &crate::composite::RelayParams) -> Result<Self> {
        if hp_low.nrows() != h1.nrows() {
            return Err(Error::DimensionMismatch(
                "additive relay must feed the direct-link receive antennas".into(),
            ));
        }
        if hp_low.ncols() != hc.nrows() {
            return Err(Error::DimensionMismatch("hp inner dim must match hc rows".into()));
        }
        Ok(Self {
            h1: h1.clone(),
            hp_low: hp_low.clone(),
            hc: hc.clone(),
            rho: params.rho,
            normalization: params.power_normalization,
            count: 0,
        })
    }
}

impl SeOracle for RisAdditiveOracle {
    fn evaluate(&mut self, cfg: &PhaseConfig) -> f64 {
        self.count += 1;
        let (phi_r, phi_t) = cfg.s2_vectors().expect("additive oracle needs the two-vector layout");
        let c = if self.normalization { 1.0 / (phi_t.len() as f64).sqrt() } else { 1.0 };
        let a = &self.hp_low * phi_t * Complex64::new(self.rho.sqrt() * c, 0.0);
        let hrow = phi_r.adjoint() * &self.hc;
        let h = crate::composite::ris_additive_channel(&self.h1, &a, &hrow).expect("dims validated");
        crate::metrics::spectral_efficiency(&h)
    }

    fn evaluations(&self) -> u64 {
        self.count
    }
}

/// Search outcome: best configuration found, its SE, the accepted-step SE
/// trajectory, and the number of oracle probes spent.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best_config: PhaseConfig,
    pub best_se: f64,
    pub trajectory: Vec<(usize, f64)>,
    pub evaluations: u64,
}

/// Which diversity-structure block a sweep handles first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    TFirst,
    RFirst,
}

impl SweepOrder {
    pub fn label(&self) -> &'static str {
        match self {
            SweepOrder::TFirst => "t-first",
            SweepOrder::RFirst => "r-first",
        }
    }
}

/// Options shared by the exhaustive searches.
#[derive(Debug, Clone, Copy)]
pub struct EsOptions {
    /// Hard cap on oracle evaluations; the search refuses to start beyond it.
    pub budget: u128,
    /// Pin the first phase shifter of each block to level 0, shrinking the
    /// enumeration by a factor of q per block without changing the optimum
    /// SE (configurations differing by a per-block global offset tie).
    pub quotient: bool,
}

impl Default for EsOptions {
    fn default() -> Self {
        Self { budget: 1 << 25, quotient: false }
    }
}

fn checked_pow(q: u128, e: u32) -> u128 {
    q.checked_pow(e).unwrap_or(u128::MAX)
}

/// Advances a level vector odometer-style; returns false after the last
/// combination. `fixed_head` pins index 0 at level 0.
fn next_levels(levels: &mut [u32], q: u32, fixed_head: bool) -> bool {
    let start = usize::from(fixed_head);
    for i in (start..levels.len()).rev() {
        levels[i] += 1;
        if levels[i] < q {
            return true;
        }
        levels[i] = 0;
    }
    false
}

/// Global optimum over the discrete phase grid: all q^Nc level vectors for
/// the multiplexing structure, all q^2Nc pairs for the diversity structure.
pub fn joint_es<O: SeOracle>(
    oracle: &mut O,
    q: u32,
    nc: usize,
    structure: Structure,
    opts: &EsOptions,
) -> Result<OptResult> {
    joint_es_visit(oracle, q, nc, structure, opts, |_| {})
}

/// `joint_es` with a visitor invoked on every evaluated SE, for callers
/// collecting the full enumeration distribution.
pub fn joint_es_visit<O: SeOracle, F: FnMut(f64)>(
    oracle: &mut O,
    q: u32,
    nc: usize,
    structure: Structure,
    opts: &EsOptions,
    mut visit: F,
) -> Result<OptResult> {
    let free = if opts.quotient { nc.saturating_sub(1) } else { nc } as u32;
    let required = match structure {
        Structure::S1 => checked_pow(q as u128, free),
        Structure::S2 => checked_pow(q as u128, 2 * free),
    };
    if required > opts.budget {
        return Err(Error::BudgetExceeded { required, budget: opts.budget });
    }

    let start = oracle.evaluations();
    let mut cfg = PhaseConfig::zeros(structure, nc, q)?;
    let mut best_cfg = cfg.clone();
    let mut best_se = f64::NEG_INFINITY;
    loop {
        let se = oracle.evaluate(&cfg);
        visit(se);
        if se > best_se {
            best_se = se;
            best_cfg = cfg.clone();
        }
        let more = match cfg.kind_mut() {
            PhaseKind::S1 { levels } => next_levels(levels, q, opts.quotient),
            PhaseKind::S2 { r, t } => {
                // r is the minor odometer digit block.
                if next_levels(r, q, opts.quotient) {
                    true
                } else {
                    next_levels(t, q, opts.quotient)
                }
            }
        };
        if !more {
            break;
        }
    }
    let evaluations = oracle.evaluations() - start;
    Ok(OptResult { best_se, trajectory: vec![(0, best_se)], best_config: best_cfg, evaluations })
}

/// Diversity-structure two-pass search: exhausts the first block with the
/// second held at level 0, then the second block with the first fixed at
/// its optimum. Exactly `2 q^Nc` evaluations.
pub fn separate_es<O: SeOracle>(
    oracle: &mut O,
    q: u32,
    nc: usize,
    order: SweepOrder,
    opts: &EsOptions,
) -> Result<OptResult> {
    separate_es_visit(oracle, q, nc, order, opts, |_| {})
}

pub fn separate_es_visit<O: SeOracle, F: FnMut(f64)>(
    oracle: &mut O,
    q: u32,
    nc: usize,
    order: SweepOrder,
    opts: &EsOptions,
    mut visit: F,
) -> Result<OptResult> {
    let free = if opts.quotient { nc.saturating_sub(1) } else { nc } as u32;
    let required = 2 * checked_pow(q as u128, free);
    if required > opts.budget {
        return Err(Error::BudgetExceeded { required, budget: opts.budget });
    }

    let start = oracle.evaluations();
    let mut cfg = PhaseConfig::zeros(Structure::S2, nc, q)?;
    let mut best_se = f64::NEG_INFINITY;
    let mut best_cfg = cfg.clone();

    for pass in 0..2 {
        let sweep_t = matches!(
            (order, pass),
            (SweepOrder::TFirst, 0) | (SweepOrder::RFirst, 1)
        );
        // Reset the swept block; the other block keeps its current state
        // (level 0 on the first pass, the pass-1 optimum on the second).
        let mut pass_best_se = f64::NEG_INFINITY;
        let mut pass_best: Vec<u32> = Vec::new();
        {
            let PhaseKind::S2 { r, t } = cfg.kind_mut() else { unreachable!() };
            let block = if sweep_t { t } else { r };
            block.iter_mut().for_each(|l| *l = 0);
        }
        loop {
            let se = oracle.evaluate(&cfg);
            visit(se);
            if se > pass_best_se {
                pass_best_se = se;
                let PhaseKind::S2 { r, t } = cfg.kind() else { unreachable!() };
                pass_best = if sweep_t { t.clone() } else { r.clone() };
            }
            let PhaseKind::S2 { r, t } = cfg.kind_mut() else { unreachable!() };
            let block = if sweep_t { t } else { r };
            if !next_levels(block, q, opts.quotient) {
                break;
            }
        }
        {
            let PhaseKind::S2 { r, t } = cfg.kind_mut() else { unreachable!() };
            let block = if sweep_t { t } else { r };
            block.copy_from_slice(&pass_best);
        }
        if pass_best_se > best_se {
            best_se = pass_best_se;
            best_cfg = cfg.clone();
        }
    }
    let evaluations = oracle.evaluations() - start;
    Ok(OptResult { best_se, trajectory: vec![(0, best_se)], best_config: best_cfg, evaluations })
}

/// Blind greedy search: random-max sampling picks the best of `rms_trials`
/// uniform configurations as the start, then greedy sweeps update one phase
/// shifter at a time, probing all q levels and keeping the current level on
/// ties. One round sweeps every phase shifter once (the diversity structure
/// sweeps its two blocks in the order given); `rounds` rounds are run.
/// The trajectory records (0, rms SE) and the SE after each update.
pub fn bg_optimize<O: SeOracle>(
    oracle: &mut O,
    q: u32,
    nc: usize,
    structure: Structure,
    order: SweepOrder,
    rounds: usize,
    rms_trials: usize,
    rng: &mut ChaCha8Rng,
) -> OptResult {
    let start = oracle.evaluations();

    // Random-Max Sampling.
    let mut cfg = PhaseConfig::zeros(structure, nc, q).expect("valid dims");
    let mut best_se = f64::NEG_INFINITY;
    let mut best_levels: Vec<u32> = Vec::new();
    let mut scratch = cfg.clone();
    for _ in 0..rms_trials.max(1) {
        randomize(&mut scratch, q, rng);
        let se = oracle.evaluate(&scratch);
        if se > best_se {
            best_se = se;
            best_levels = flat_levels(&scratch);
        }
    }
    set_flat_levels(&mut cfg, &best_levels);
    let mut trajectory = vec![(0usize, best_se)];

    // Greedy sweeps.
    let ps_count = match structure {
        Structure::S1 => nc,
        Structure::S2 => 2 * nc,
    };
    let mut iteration = 0usize;
    for _ in 0..rounds {
        for ps in 0..ps_count {
            let slot = sweep_slot(structure, order, nc, ps);
            let current = get_level(&cfg, slot);
            let mut chosen = current;
            let mut chosen_se = f64::NEG_INFINITY;
            for level in 0..q {
                set_level(&mut cfg, slot, level);
                let se = oracle.evaluate(&cfg);
                if se > chosen_se || (se == chosen_se && level == current) {
                    // Strictly-better wins; an exact tie prefers the level
                    // already in place.
                    if se > chosen_se {
                        chosen_se = se;
                        chosen = level;
                    } else if level == current {
                        chosen = current;
                    }
                }
            }
            set_level(&mut cfg, slot, chosen);
            if chosen_se > best_se {
                best_se = chosen_se;
            }
            iteration += 1;
            trajectory.push((iteration, best_se));
        }
    }
    let evaluations = oracle.evaluations() - start;
    OptResult { best_config: cfg, best_se, trajectory, evaluations }
}

/// Flat index of the phase shifter swept at position `ps` within a round.
fn sweep_slot(structure: Structure, order: SweepOrder, nc: usize, ps: usize) -> usize {
    match structure {
        Structure::S1 => ps,
        Structure::S2 => {
            // Flat layout: r block then t block.
            let (block, idx) = (ps / nc, ps % nc);
            let r_block_first = order == SweepOrder::RFirst;
            match (block == 0) == r_block_first {
                true => idx,
                false => nc + idx,
            }
        }
    }
}

fn flat_levels(cfg: &PhaseConfig) -> Vec<u32> {
    match cfg.kind() {
        PhaseKind::S1 { levels } => levels.clone(),
        PhaseKind::S2 { r, t } => r.iter().chain(t.iter()).copied().collect(),
    }
}

fn set_flat_levels(cfg: &mut PhaseConfig, flat: &[u32]) {
    match cfg.kind_mut() {
        PhaseKind::S1 { levels } => levels.copy_from_slice(flat),
        PhaseKind::S2 { r, t } => {
            let nc = r.len();
            r.copy_from_slice(&flat[..nc]);
            t.copy_from_slice(&flat[nc..]);
        }
    }
}

fn get_level(cfg: &PhaseConfig, slot: usize) -> u32 {
    match cfg.kind() {
        PhaseKind::S1 { levels } => levels[slot],
        PhaseKind::S2 { r, t } => {
            if slot < r.len() {
                r[slot]
            } else {
                t[slot - r.len()]
            }
        }
    }
}

fn set_level(cfg: &mut PhaseConfig, slot: usize, level: u32) {
    match cfg.kind_mut() {
        PhaseKind::S1 { levels } => levels[slot] = level,
        PhaseKind::S2 { r, t } => {
            if slot < r.len() {
                r[slot] = level;
            } else {
                let i = slot - r.len();
                t[i] = level;
            }
        }
    }
}

fn randomize(cfg: &mut PhaseConfig, q: u32, rng: &mut ChaCha8Rng) {
    let draw = |rng: &mut ChaCha8Rng| rng.random_range(0..q);
    match cfg.kind_mut() {
        PhaseKind::S1 { levels } => levels.iter_mut().for_each(|l| *l = draw(rng)),
        PhaseKind::S2 { r, t } => {
            r.iter_mut().for_each(|l| *l = draw(rng));
            t.iter_mut().for_each(|l| *l = draw(rng));
        }
    }
}

/// Effective first hop whitened by the direct link:
/// `Hc (I + H1^H H1)^{-1/2}` through the unique Hermitian PSD root. The
/// closed-form solutions below take this matrix, not the raw first hop.
pub fn effective_first_hop(hc: &CMat, h1: &CMat) -> Result<CMat> {
    if hc.ncols() != h1.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "hc has {} columns, h1 has {}",
            hc.ncols(),
            h1.ncols()
        )));
    }
    let m = h1.ncols();
    let gram = CMat::identity(m, m) + h1.adjoint() * h1;
    Ok(hc * crate::linalg::hermitian_inv_sqrt(&gram))
}

/// Canonical unit-modulus vector carrying the entrywise phases of `v`, with
/// the global phase fixed so the largest-magnitude entry maps to 1.
fn aligned_phases(v: &CVec) -> Result<CVec> {
    let mut best = 0usize;
    let mut best_mag = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best_mag {
            best_mag = z.norm();
            best = i;
        }
    }
    if best_mag == 0.0 {
        return Err(Error::UndefinedDirection("zero singular vector has no phase profile".into()));
    }
    let pivot = v[best] / v[best].norm();
    Ok(CVec::from_iterator(v.len(), v.iter().map(|z| {
        let w = z / pivot;
        if w.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            w / w.norm()
        }
    })))
}

/// Closed-form diversity-structure phases for the rank-one special case:
/// the splitter compensates the phase profile of the relay hop's top right
/// singular vector, the combiner that of the whitened first hop's top left
/// singular vector (each shifter cancels the phase its channel entry
/// contributes, so the sums add coherently). Returns `(phi_t, phi_r)`.
pub fn closed_form_structure2(hp: &CMat, hc_eff: &CMat) -> Result<(CVec, CVec)> {
    if hp.norm() == 0.0 || hc_eff.norm() == 0.0 {
        return Err(Error::UndefinedDirection("zero channel matrix".into()));
    }
    let (_, _, v_hp) = svd_sorted(hp);
    let (u_hc, _, _) = svd_sorted(hc_eff);
    let phi_t = aligned_phases(&v_hp.column(0).into_owned())?;
    let phi_r = aligned_phases(&u_hc.column(0).into_owned())?;
    Ok((phi_t, phi_r))
}

/// Closed-form multiplexing-structure phases for the rank-one special case:
/// one phase vector compensates both hops at once, canceling the combined
/// per-chain phase of the relay hop's right singular vector against the
/// whitened first hop's left singular vector.
pub fn closed_form_structure1(hp: &CMat, hc_eff: &CMat) -> Result<CVec> {
    if hp.norm() == 0.0 || hc_eff.norm() == 0.0 {
        return Err(Error::UndefinedDirection("zero channel matrix".into()));
    }
    let (_, _, v_hp) = svd_sorted(hp);
    let (u_hc, _, _) = svd_sorted(hc_eff);
    let vt = aligned_phases(&v_hp.column(0).into_owned())?;
    let ur = aligned_phases(&u_hc.column(0).into_owned())?;
    Ok(CVec::from_iterator(vt.len(), vt.iter().zip(ur.iter()).map(|(a, b)| a * b.conj())))
}

/// Search algorithms with tabulated trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    JointEs,
    SeparateEs,
    Bg,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::JointEs => "joint-es",
            Algorithm::SeparateEs => "separate-es",
            Algorithm::Bg => "bg",
        }
    }
}

/// Tabulated trial metric per algorithm: `q^(2 Nc)` for joint search,
/// `2 q^Nc` for separate search, and `q * Nc * I` for the blind greedy
/// metric (64 at q=8, Nc=4, I=2). The greedy entry counts tabulated trials,
/// not raw oracle probes; `OptResult::evaluations` reports the probes.
pub fn trial_count(alg: Algorithm, q: u32, nc: usize, rounds: usize) -> u128 {
    match alg {
        Algorithm::JointEs => checked_pow(q as u128, 2 * nc as u32),
        Algorithm::SeparateEs => 2 * checked_pow(q as u128, nc as u32),
        Algorithm::Bg => q as u128 * nc as u128 * rounds as u128,
    }
}

/// Per-element powers in milliwatts: low-band LNA, phase shifter, high-band
/// LNA. The mixer draws approximately nothing.
const P_LNA_LOW_MW: f64 = 425.0;
const P_PS_MW: f64 = 0.15;
const P_LNA_HIGH_MW: f64 = 180.0;

/// Total relay power consumption in milliwatts. The multiplexing structure
/// replicates the full chain per antenna; the diversity structure shares
/// one amplifier pair behind per-antenna phase shifters.
pub fn power_consumption(structure: Structure, nc: usize) -> f64 {
    let n = nc as f64;
    match structure {
        Structure::S1 => n * (P_LNA_LOW_MW + P_PS_MW + P_LNA_HIGH_MW),
        Structure::S2 => n * P_PS_MW + P_LNA_LOW_MW + P_LNA_HIGH_MW + n * P_PS_MW,
    }
}
