//! Scenario configuration: physical constants, angle supports, solver
//! tolerances and sweep grids.
//!
//! Files are JSON or TOML (chosen by extension) deserialized into
//! [`ScenarioFile`], where dB/dBm quantities and degree-valued angles live.
//! [`ScenarioConfig`] is the validated runtime form with every dB field
//! converted to linear exactly once and every angle in radians.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Inclusive uniform support, degrees in files, radians at runtime.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Support(pub f64, pub f64);

impl Support {
    pub fn to_radians(self) -> Support {
        Support(self.0.to_radians(), self.1.to_radians())
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.0 && value <= self.1
    }
}

/// Angle supports of the multipath distributions, in degrees as configured.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleSupportsDeg {
    /// Direct-path departure at the BS (elevation, azimuth).
    pub los_bs_aod: (f64, f64),
    /// Direct-path arrival at the surface (elevation, azimuth).
    pub los_ris_aoa: (f64, f64),
    pub nlos_bs_aod_theta: Support,
    pub nlos_bs_aod_phi: Support,
    pub nlos_ris_aoa_theta: Support,
    pub nlos_ris_aoa_phi: Support,
    pub ue_los_aod_theta: Support,
    pub ue_los_aod_phi: Support,
    pub ue_nlos_aod_theta: Support,
    pub ue_nlos_aod_phi: Support,
}

impl Default for AngleSupportsDeg {
    fn default() -> Self {
        Self {
            los_bs_aod: (70.0, 150.0),
            los_ris_aoa: (110.0, -30.0),
            nlos_bs_aod_theta: Support(10.0, 70.0),
            nlos_bs_aod_phi: Support(90.0, 150.0),
            nlos_ris_aoa_theta: Support(90.0, 180.0),
            nlos_ris_aoa_phi: Support(-90.0, -30.0),
            ue_los_aod_theta: Support(100.0, 110.0),
            ue_los_aod_phi: Support(-20.0, 80.0),
            ue_nlos_aod_theta: Support(50.0, 160.0),
            ue_nlos_aod_phi: Support(-70.0, 130.0),
        }
    }
}

/// Same supports in radians, used by the channel sampler.
#[derive(Debug, Clone)]
pub struct AngleSupports {
    pub los_bs_aod: (f64, f64),
    pub los_ris_aoa: (f64, f64),
    pub nlos_bs_aod_theta: Support,
    pub nlos_bs_aod_phi: Support,
    pub nlos_ris_aoa_theta: Support,
    pub nlos_ris_aoa_phi: Support,
    pub ue_los_aod_theta: Support,
    pub ue_los_aod_phi: Support,
    pub ue_nlos_aod_theta: Support,
    pub ue_nlos_aod_phi: Support,
}

impl AngleSupportsDeg {
    fn to_radians(&self) -> AngleSupports {
        AngleSupports {
            los_bs_aod: (
                self.los_bs_aod.0.to_radians(),
                self.los_bs_aod.1.to_radians(),
            ),
            los_ris_aoa: (
                self.los_ris_aoa.0.to_radians(),
                self.los_ris_aoa.1.to_radians(),
            ),
            nlos_bs_aod_theta: self.nlos_bs_aod_theta.to_radians(),
            nlos_bs_aod_phi: self.nlos_bs_aod_phi.to_radians(),
            nlos_ris_aoa_theta: self.nlos_ris_aoa_theta.to_radians(),
            nlos_ris_aoa_phi: self.nlos_ris_aoa_phi.to_radians(),
            ue_los_aod_theta: self.ue_los_aod_theta.to_radians(),
            ue_los_aod_phi: self.ue_los_aod_phi.to_radians(),
            ue_nlos_aod_theta: self.ue_nlos_aod_theta.to_radians(),
            ue_nlos_aod_phi: self.ue_nlos_aod_phi.to_radians(),
        }
    }
}

/// Solver tolerances and iteration budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Outer alternating loop stops when the rate gap drops below this.
    pub outer: f64,
    pub max_outer: usize,
    /// Conjugate-gradient objective tolerance on the manifold.
    pub rcg: f64,
    pub rcg_max_iters: usize,
    /// Dual bracket width for the power bisection.
    pub bisection: f64,
    /// Armijo sufficient-increase constant.
    pub armijo_c1: f64,
    pub armijo_contraction: f64,
    pub armijo_max_backtracks: usize,
    /// Relative perturbation applied to the isotropic starting bank.
    pub init_perturbation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            outer: 1e-4,
            max_outer: 50,
            rcg: 1e-6,
            rcg_max_iters: 200,
            bisection: 1e-8,
            armijo_c1: 1e-4,
            armijo_contraction: 0.5,
            armijo_max_backtracks: 30,
            init_perturbation: 0.05,
        }
    }
}

/// Sweep grids for the experiment runner, desk scale by default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrids {
    /// Element counts; each must split as `m_y × m_z` (squares by default).
    pub m_values: Vec<usize>,
    pub nt_values: Vec<usize>,
    pub i_values: Vec<usize>,
}

impl Default for SweepGrids {
    fn default() -> Self {
        Self {
            m_values: vec![9, 16, 25, 36],
            nt_values: vec![2, 4, 6],
            i_values: vec![4, 9, 16, 25],
        }
    }
}

/// Settings for the point-to-point received-power comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerAnalysisConfig {
    pub num_instances: usize,
    /// Inclusive bounds on the per-side path counts of a random instance.
    pub path_bounds: (usize, usize),
    /// 1-D candidate-position grid: spacing in wavelengths and point count.
    pub grid_step_wavelengths: f64,
    pub grid_points: usize,
    pub noise_power: f64,
}

impl Default for PowerAnalysisConfig {
    fn default() -> Self {
        Self {
            num_instances: 200,
            path_bounds: (2, 4),
            grid_step_wavelengths: 1.0 / 64.0,
            grid_points: 512,
            noise_power: 0.0,
        }
    }
}

/// Pattern-fitting settings for the reconstruction experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternFitConfig {
    pub trunc_lens: Vec<usize>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for PatternFitConfig {
    fn default() -> Self {
        Self {
            trunc_lens: vec![15, 25, 50],
            n_theta: 64,
            n_phi: 128,
        }
    }
}

fn default_carrier_freq_ghz() -> f64 {
    5.0
}
fn default_bs_fris_distance_m() -> f64 {
    200.0
}
fn default_noise_dbm() -> f64 {
    -110.0
}
fn default_path_loss_exponent() -> f64 {
    2.6
}
fn default_power_budget_dbm() -> f64 {
    30.0
}
fn default_reference_gain_db() -> f64 {
    -20.0
}
fn default_num_ues() -> usize {
    3
}
fn default_m_y() -> usize {
    4
}
fn default_m_z() -> usize {
    4
}
fn default_n_t() -> usize {
    4
}
fn default_trunc_len() -> usize {
    16
}
fn default_path_count_bounds() -> (usize, usize) {
    (3, 8)
}
fn default_ue_distance_m() -> (f64, f64) {
    (20.0, 50.0)
}
fn default_nlos_excess() -> (f64, f64) {
    (0.0, 0.2)
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}

/// On-disk scenario description (dB/dBm units, degrees).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_carrier_freq_ghz")]
    pub carrier_freq_ghz: f64,
    #[serde(default = "default_bs_fris_distance_m")]
    pub bs_fris_distance_m: f64,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    #[serde(default = "default_path_loss_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default = "default_power_budget_dbm")]
    pub power_budget_dbm: f64,
    #[serde(default = "default_reference_gain_db")]
    pub reference_gain_db: f64,
    #[serde(default = "default_num_ues")]
    pub num_ues: usize,
    /// Rate weights ε_k; default is uniform `1/K`.
    pub ue_weights: Option<Vec<f64>>,
    #[serde(default = "default_m_y")]
    pub m_y: usize,
    #[serde(default = "default_m_z")]
    pub m_z: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_trunc_len")]
    pub trunc_len: usize,
    /// Inclusive bounds of the uniform path-count draw per link side.
    #[serde(default = "default_path_count_bounds")]
    pub path_count_bounds: (usize, usize),
    #[serde(default = "default_ue_distance_m")]
    pub ue_distance_m: (f64, f64),
    /// Extra relative length of scattered paths over the direct one.
    #[serde(default = "default_nlos_excess")]
    pub nlos_excess: (f64, f64),
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Antenna count used for the fixed-pattern baselines in sweeps, when
    /// they should run with more antennas than the reconfigurable schemes.
    pub baseline_nt_override: Option<usize>,
    pub angles_deg: AngleSupportsDeg,
    pub tolerances: Tolerances,
    pub sweep: SweepGrids,
    pub power_analysis: PowerAnalysisConfig,
    pub pattern_fit: PatternFitConfig,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: default_carrier_freq_ghz(),
            bs_fris_distance_m: default_bs_fris_distance_m(),
            noise_dbm: default_noise_dbm(),
            path_loss_exponent: default_path_loss_exponent(),
            power_budget_dbm: default_power_budget_dbm(),
            reference_gain_db: default_reference_gain_db(),
            num_ues: default_num_ues(),
            ue_weights: None,
            m_y: default_m_y(),
            m_z: default_m_z(),
            n_t: default_n_t(),
            trunc_len: default_trunc_len(),
            path_count_bounds: default_path_count_bounds(),
            ue_distance_m: default_ue_distance_m(),
            nlos_excess: default_nlos_excess(),
            seeds: default_seeds(),
            baseline_nt_override: None,
            angles_deg: AngleSupportsDeg::default(),
            tolerances: Tolerances::default(),
            sweep: SweepGrids::default(),
            power_analysis: PowerAnalysisConfig::default(),
            pattern_fit: PatternFitConfig::default(),
        }
    }
}

/// Validated runtime scenario: linear units, radians.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub carrier_freq_hz: f64,
    pub bs_fris_distance_m: f64,
    /// Noise power σ² in watts (same for every UE unless overridden later).
    pub noise_power_w: f64,
    pub path_loss_exponent: f64,
    pub power_budget_w: f64,
    /// Reference power gain ρ₀ at 1 m, linear.
    pub reference_gain: f64,
    pub num_ues: usize,
    pub ue_weights: Vec<f64>,
    pub m_y: usize,
    pub m_z: usize,
    pub n_t: usize,
    pub trunc_len: usize,
    pub path_count_bounds: (usize, usize),
    pub ue_distance_m: (f64, f64),
    pub nlos_excess: (f64, f64),
    pub seeds: Vec<u64>,
    pub baseline_nt_override: Option<usize>,
    pub angles: AngleSupports,
    pub tolerances: Tolerances,
    pub sweep: SweepGrids,
    pub power_analysis: PowerAnalysisConfig,
    pub pattern_fit: PatternFitConfig,
    /// SHA-256 of the loaded config file, for run manifests.
    pub source_digest: Option<String>,
}

impl ScenarioConfig {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let weights = match &file.ue_weights {
            Some(w) => w.clone(),
            None => vec![1.0 / file.num_ues as f64; file.num_ues],
        };
        let config = Self {
            carrier_freq_hz: file.carrier_freq_ghz * 1e9,
            bs_fris_distance_m: file.bs_fris_distance_m,
            noise_power_w: dbm_to_watts(file.noise_dbm),
            path_loss_exponent: file.path_loss_exponent,
            power_budget_w: dbm_to_watts(file.power_budget_dbm),
            reference_gain: db_to_linear(file.reference_gain_db),
            num_ues: file.num_ues,
            ue_weights: weights,
            m_y: file.m_y,
            m_z: file.m_z,
            n_t: file.n_t,
            trunc_len: file.trunc_len,
            path_count_bounds: file.path_count_bounds,
            ue_distance_m: file.ue_distance_m,
            nlos_excess: file.nlos_excess,
            seeds: file.seeds,
            baseline_nt_override: file.baseline_nt_override,
            angles: file.angles_deg.to_radians(),
            tolerances: file.tolerances,
            sweep: file.sweep,
            power_analysis: file.power_analysis,
            pattern_fit: file.pattern_fit,
            source_digest: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
        let file: ScenarioFile = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            Some("toml") => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            other => {
                return Err(Error::Config(format!(
                    "unsupported config extension {other:?} (expected .json or .toml)"
                )))
            }
        };
        let mut config = Self::from_file(file)?;
        config.source_digest = Some(sha256_hex(text.as_bytes()));
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ues == 0 {
            return Err(Error::Config("need at least one UE".into()));
        }
        if self.ue_weights.len() != self.num_ues {
            return Err(Error::Config(format!(
                "{} weights for {} UEs",
                self.ue_weights.len(),
                self.num_ues
            )));
        }
        let weight_sum: f64 = self.ue_weights.iter().sum();
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "UE weights must sum to 1 (got {weight_sum:.15})"
            )));
        }
        if self.ue_weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Config("UE weights must be nonnegative".into()));
        }
        for (name, value) in [
            ("carrier frequency", self.carrier_freq_hz),
            ("BS-FRIS distance", self.bs_fris_distance_m),
            ("noise power", self.noise_power_w),
            ("power budget", self.power_budget_w),
            ("reference gain", self.reference_gain),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.m_y == 0 || self.m_z == 0 || self.n_t == 0 || self.trunc_len == 0 {
            return Err(Error::Config("array sizes must be at least 1".into()));
        }
        if self.path_count_bounds.0 > self.path_count_bounds.1 || self.path_count_bounds.0 == 0 {
            return Err(Error::Config("invalid path-count bounds".into()));
        }
        if self.ue_distance_m.0 <= 0.0 || self.ue_distance_m.0 > self.ue_distance_m.1 {
            return Err(Error::Config("invalid UE distance range".into()));
        }
        if self.nlos_excess.0 < 0.0 || self.nlos_excess.0 > self.nlos_excess.1 {
            return Err(Error::Config("invalid excess path-length range".into()));
        }
        for support in [
            self.angles.nlos_bs_aod_theta,
            self.angles.nlos_ris_aoa_theta,
            self.angles.ue_los_aod_theta,
            self.angles.ue_nlos_aod_theta,
        ] {
            if support.0 > support.1 || support.0 < 0.0 || support.1 > std::f64::consts::PI {
                return Err(Error::Config(format!(
                    "elevation support [{}, {}] rad outside [0, pi]",
                    support.0, support.1
                )));
            }
        }
        for support in [
            self.angles.nlos_bs_aod_phi,
            self.angles.nlos_ris_aoa_phi,
            self.angles.ue_los_aod_phi,
            self.angles.ue_nlos_aod_phi,
        ] {
            if support.0 > support.1 {
                return Err(Error::Config("empty azimuth support".into()));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        Ok(())
    }

    /// Number of surface elements `M = M_y · M_z`.
    pub fn num_elements(&self) -> usize {
        self.m_y * self.m_z
    }

    /// Per-UE noise powers (identical unless changed by the caller).
    pub fn noise_vector(&self) -> Vec<f64> {
        vec![self.noise_power_w; self.num_ues]
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::from_file(ScenarioFile::default()).expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn table_defaults_convert_to_linear() {
        let config = ScenarioConfig::default();
        assert_relative_eq!(config.noise_power_w, 1e-14, max_relative = 1e-12);
        assert_relative_eq!(config.power_budget_w, 1.0, max_relative = 1e-12);
        assert_relative_eq!(config.reference_gain, 0.01, max_relative = 1e-12);
        assert_relative_eq!(config.carrier_freq_hz, 5e9, max_relative = 1e-12);
        assert_relative_eq!(config.ue_weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(config.angles.los_bs_aod.0, 70f64.to_radians());
        assert_relative_eq!(config.angles.los_ris_aoa.1, (-30f64).to_radians());
    }

    #[test]
    fn rejects_bad_weights() {
        let file = ScenarioFile {
            ue_weights: Some(vec![0.5, 0.2, 0.2]),
            ..ScenarioFile::default()
        };
        assert!(ScenarioConfig::from_file(file).is_err());
    }

    #[test]
    fn loads_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("scenario.toml");
        std::fs::write(&toml_path, "n_t = 6\ntrunc_len = 9\n").unwrap();
        let config = ScenarioConfig::load(&toml_path).unwrap();
        assert_eq!(config.n_t, 6);
        assert_eq!(config.trunc_len, 9);

        let json_path = dir.path().join("scenario.json");
        std::fs::write(&json_path, r#"{"m_y": 3, "m_z": 3}"#).unwrap();
        let config = ScenarioConfig::load(&json_path).unwrap();
        assert_eq!(config.num_elements(), 9);

        let bad = dir.path().join("scenario.yaml");
        std::fs::write(&bad, "x: 1").unwrap();
        assert!(ScenarioConfig::load(&bad).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trips(db in -180.0f64..60.0) {
            let linear = db_to_linear(db);
            prop_assert!((linear_to_db(linear) - db).abs() < 1e-12);
        }

        #[test]
        fn dbm_round_trips(dbm in -150.0f64..50.0) {
            let watts = dbm_to_watts(dbm);
            prop_assert!((watts_to_dbm(watts) - dbm).abs() < 1e-12);
        }
    }
}
