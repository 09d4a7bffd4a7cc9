use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ratelessnet::analytics::CodingParams;
use ratelessnet::geometry::Window;
use ratelessnet::netsim::{Mode, Scenario};
use ratelessnet::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_SLOTS: u32 = 10_000;
pub const DESK_WINDOW: f64 = 20.0;
pub const LARGE_WINDOW: f64 = 60.0;
/// Above this many path-loss entries per realization a warning is printed.
pub const PATHLOSS_WARN_ENTRIES: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeSetting {
    RatelessAck,
    FixedRate,
    Continuous,
}

impl From<ModeSetting> for Mode {
    fn from(m: ModeSetting) -> Self {
        match m {
            ModeSetting::RatelessAck => Mode::RatelessAck,
            ModeSetting::FixedRate => Mode::FixedRate,
            ModeSetting::Continuous => Mode::Continuous,
        }
    }
}

/// Experiment configuration; every command is a function of this and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub intensity: f64,
    pub alpha: f64,
    pub k_bits: f64,
    pub n_max: u32,
    pub window_side: f64,
    pub crofton_c: f64,
    pub mode: ModeSetting,
    pub realizations: usize,
    pub fading_trials: usize,
    pub master_seed: u64,
    pub n_grid: Vec<u32>,
    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            intensity: 1.0,
            alpha: 3.0,
            k_bits: 75.0,
            n_max: 60,
            window_side: DESK_WINDOW,
            crofton_c: 1.0,
            mode: ModeSetting::RatelessAck,
            realizations: 50,
            fading_trials: 1,
            master_seed: 42,
            n_grid: (1..=12).map(|i| 10 * i).collect(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("intensity", self.intensity),
            ("k_bits", self.k_bits),
            ("window_side", self.window_side),
            ("crofton_c", self.crofton_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must exceed 2, got {}",
                self.alpha
            )));
        }
        let slots_ok = |n: u32| (1..=MAX_SLOTS).contains(&n);
        if !slots_ok(self.n_max) {
            return Err(Error::Config(format!(
                "n_max must lie in [1, {MAX_SLOTS}], got {}",
                self.n_max
            )));
        }
        if self.n_grid.is_empty() || !self.n_grid.iter().all(|&n| slots_ok(n)) {
            return Err(Error::Config(format!(
                "n_grid must be a non-empty subset of [1, {MAX_SLOTS}]"
            )));
        }
        if self.realizations == 0 || self.fading_trials == 0 {
            return Err(Error::Config(
                "realizations and fading_trials must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn coding_params(&self) -> Result<CodingParams> {
        self.coding_params_at(self.n_max)
    }

    pub fn coding_params_at(&self, n: u32) -> Result<CodingParams> {
        Ok(CodingParams::new(self.k_bits, f64::from(n), self.alpha)?
            .with_crofton_c(self.crofton_c)?)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            intensity: self.intensity,
            window: Window::torus(self.window_side)?,
            alpha: self.alpha,
            realizations: self.realizations,
            fading_trials: self.fading_trials,
            master_seed: self.master_seed,
        })
    }

    /// Expected path-loss entries per realization, `(λW²)²`.
    pub fn expected_pathloss_entries(&self) -> f64 {
        (self.intensity * self.window_side * self.window_side).powi(2)
    }

    /// Sorted, de-duplicated delay grid.
    pub fn sorted_grid(&self) -> Vec<u32> {
        let mut g = self.n_grid.clone();
        g.sort_unstable();
        g.dedup();
        g
    }
}
