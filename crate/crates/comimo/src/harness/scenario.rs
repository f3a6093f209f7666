//! Experiment description and the flat key-value config format.

use crate::composite::Structure;
use crate::error::{Error, Result};
use crate::optimize::{Algorithm, SweepOrder};

/// Full description of one experiment: dimensions, geometry, fading,
/// search settings and Monte-Carlo budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Base-station transmit antennas.
    pub m: usize,
    /// Primary-device low-band receive antennas.
    pub n1: usize,
    /// Primary-device high-band receive antennas.
    pub n2: usize,
    /// Collaborator antennas per band.
    pub nc: usize,
    /// Collaborator position in units of the high-band wavelength.
    pub co_ue_position: [f64; 3],
    pub kappa1: f64,
    pub kappa_c: f64,
    pub kappa_p: f64,
    pub snr_db: f64,
    /// SNR grid for the sweep driver.
    pub snr_sweep_db: Vec<f64>,
    /// Collaborator-to-primary distances in meters for the distance driver.
    pub distances_m: Vec<f64>,
    pub q: u32,
    pub structure: Structure,
    pub algorithm: Algorithm,
    pub order: SweepOrder,
    /// Greedy rounds (a round sweeps every phase shifter once).
    pub rounds: usize,
    pub rms_trials: usize,
    pub trials: usize,
    pub seed: u64,
    pub path_loss: bool,
    /// LNA power gain (linear).
    pub rho: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub bandwidth_hz: f64,
    pub overhead: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            m: 4,
            n1: 4,
            n2: 4,
            nc: 4,
            co_ue_position: [10.0, 10.0, 10.0],
            kappa1: 0.0,
            kappa_c: 0.0,
            kappa_p: f64::INFINITY,
            snr_db: 20.0,
            snr_sweep_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            distances_m: vec![0.03, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0],
            q: 4,
            structure: Structure::S2,
            algorithm: Algorithm::Bg,
            order: SweepOrder::TFirst,
            rounds: 2,
            rms_trials: 8,
            trials: 1000,
            seed: 1,
            path_loss: false,
            rho: 1.0,
            f_low_hz: 3.65e9,
            f_high_hz: 7.65e9,
            bandwidth_hz: 100e6,
            overhead: 0.14,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n1 == 0 || self.n2 == 0 || self.nc == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.q == 0 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        if self.rounds == 0 || self.rms_trials == 0 {
            return Err(Error::Config("rounds and rms_trials must be at least 1".into()));
        }
        if self.co_ue_position.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("co_ue_position must be finite".into()));
        }
        for (name, k) in [("kappa1", self.kappa1), ("kappa_c", self.kappa_c), ("kappa_p", self.kappa_p)] {
            if k.is_nan() || k < 0.0 {
                return Err(Error::Config(format!("{name} must be >= 0 or inf")));
            }
        }
        if !(self.rho > 0.0) {
            return Err(Error::Config("rho must be positive".into()));
        }
        if !(self.f_low_hz > 0.0) || !(self.f_high_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("frequencies and bandwidth must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overhead) {
            return Err(Error::Config("overhead must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn lambda_low(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.f_low_hz
    }

    pub fn lambda_high(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.f_high_hz
    }

    /// Collaborator position in meters.
    pub fn co_position_m(&self) -> [f64; 3] {
        let lh = self.lambda_high();
        [
            self.co_ue_position[0] * lh,
            self.co_ue_position[1] * lh,
            self.co_ue_position[2] * lh,
        ]
    }

    /// Parses the flat `key = value` config format. Lines starting with `#`
    /// are comments; keys mirror the field names exactly and unknown keys
    /// are rejected.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", lineno + 1)));
            };
            spec.set_field(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "m" => self.m = parse_num(key, value)?,
            "n1" => self.n1 = parse_num(key, value)?,
            "n2" => self.n2 = parse_num(key, value)?,
            "nc" => self.nc = parse_num(key, value)?,
            "co_ue_position" => {
                let parts = parse_f64_list(key, value)?;
                if parts.len() != 3 {
                    return Err(Error::Config(format!("co_ue_position needs 3 components, got {}", parts.len())));
                }
                self.co_ue_position = [parts[0], parts[1], parts[2]];
            }
            "kappa1" => self.kappa1 = parse_kappa(value)?,
            "kappa_c" => self.kappa_c = parse_kappa(value)?,
            "kappa_p" => self.kappa_p = parse_kappa(value)?,
            "snr_db" => self.snr_db = parse_num(key, value)?,
            "snr_sweep_db" => self.snr_sweep_db = parse_f64_list(key, value)?,
            "distances_m" => self.distances_m = parse_f64_list(key, value)?,
            "q" => self.q = parse_num(key, value)?,
            "structure" => {
                self.structure = match value {
                    "s1" | "structure1" => Structure::S1,
                    "s2" | "structure2" => Structure::S2,
                    other => return Err(Error::Config(format!("unknown structure `{other}`"))),
                }
            }
            "algorithm" => {
                self.algorithm = match value {
                    "bg" => Algorithm::Bg,
                    "joint-es" => Algorithm::JointEs,
                    "separate-es" => Algorithm::SeparateEs,
                    other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
                }
            }
            "order" => {
                self.order = match value {
                    "t-first" => SweepOrder::TFirst,
                    "r-first" => SweepOrder::RFirst,
                    other => return Err(Error::Config(format!("unknown order `{other}`"))),
                }
            }
            "rounds" => self.rounds = parse_num(key, value)?,
            "rms_trials" => self.rms_trials = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "path_loss" => {
                self.path_loss = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    other => return Err(Error::Config(format!("path_loss must be on/off, got `{other}`"))),
                }
            }
            "rho" => self.rho = parse_num(key, value)?,
            "f_low_hz" => self.f_low_hz = parse_num(key, value)?,
            "f_high_hz" => self.f_high_hz = parse_num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_num(key, value)?,
            "overhead" => self.overhead = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Config-format rendering; parses back to an identical spec.
    pub fn to_config(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        s.push_str(&format!("m = {}\n", self.m));
        s.push_str(&format!("n1 = {}\n", self.n1));
        s.push_str(&format!("n2 = {}\n", self.n2));
        s.push_str(&format!("nc = {}\n", self.nc));
        s.push_str(&format!("co_ue_position = {}\n", list(&self.co_ue_position)));
        s.push_str(&format!("kappa1 = {}\n", fmt_kappa(self.kappa1)));
        s.push_str(&format!("kappa_c = {}\n", fmt_kappa(self.kappa_c)));
        s.push_str(&format!("kappa_p = {}\n", fmt_kappa(self.kappa_p)));
        s.push_str(&format!("snr_db = {}\n", self.snr_db));
        s.push_str(&format!("snr_sweep_db = {}\n", list(&self.snr_sweep_db)));
        s.push_str(&format!("distances_m = {}\n", list(&self.distances_m)));
        s.push_str(&format!("q = {}\n", self.q));
        s.push_str(&format!("structure = {}\n", match self.structure {
            Structure::S1 => "s1",
            Structure::S2 => "s2",
        }));
        s.push_str(&format!("algorithm = {}\n", self.algorithm.label()));
        s.push_str(&format!("order = {}\n", self.order.label()));
        s.push_str(&format!("rounds = {}\n", self.rounds));
        s.push_str(&format!("rms_trials = {}\n", self.rms_trials));
        s.push_str(&format!("trials = {}\n", self.trials));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("path_loss = {}\n", if self.path_loss { "on" } else { "off" }));
        s.push_str(&format!("rho = {}\n", self.rho));
        s.push_str(&format!("f_low_hz = {}\n", self.f_low_hz));
        s.push_str(&format!("f_high_hz = {}\n", self.f_high_hz));
        s.push_str(&format!("bandwidth_hz = {}\n", self.bandwidth_hz));
        s.push_str(&format!("overhead = {}\n", self.overhead));
        s
    }
}

pub(crate) fn fmt_kappa(k: f64) -> String {
    if k.is_infinite() {
        "inf".to_string()
    } else {
        k.to_string()
    }
}

fn parse_kappa(value: &str) -> Result<f64> {
    match value {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid kappa `{other}`")))
            .and_then(|k| {
                if k >= 0.0 {
                    Ok(k)
                } else {
                    Err(Error::Config(format!("kappa must be >= 0, got {k}")))
                }
            }),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Config(format!("invalid number in `{key}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let mut spec = ScenarioSpec::default();
        spec.q = 8;
        spec.nc = 3;
        spec.kappa_p = f64::INFINITY;
        spec.kappa1 = 2.5;
        spec.structure = Structure::S1;
        spec.order = SweepOrder::RFirst;
        spec.path_loss = true;
        spec.snr_sweep_db = vec![0.0, 10.5, 20.0];
        let text = spec.to_config();
        let back = ScenarioSpec::parse_config(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ScenarioSpec::parse_config("mm = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key"), "{msg}");
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let spec = ScenarioSpec::parse_config("# comment\n\n  seed = 99\n").unwrap();
        assert_eq!(spec.seed, 99);
    }

    #[test]
    fn kappa_inf_parses() {
        let spec = ScenarioSpec::parse_config("kappa_c = inf\n").unwrap();
        assert!(spec.kappa_c.is_infinite());
        assert!(ScenarioSpec::parse_config("kappa_c = -1\n").is_err());
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = ScenarioSpec::default();
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = ScenarioSpec::default();
        spec.q = 0;
        assert!(spec.validate().is_err());
        let mut spec = ScenarioSpec::default();
        spec.overhead = 1.0;
        assert!(spec.validate().is_err());
    }
}
