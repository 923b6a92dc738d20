//! Flat TOML scenario files.
//!
//! Every [`Scenario`] field may appear under its own name; missing fields keep
//! their default. The user model is either an explicit `bin_lambdas` list or
//! a background intensity `lambda_bg` plus hotspots given by
//! `hotspot_starts`, `hotspot_spans` and either `hotspot_intensities` (users
//! per bin) or `hotspot_ratios` (scaled so that all bins carry `lambda_sum`).

use std::fmt::Write as _;
use std::path::Path;

use flexsector_core::{build_intensities, hotspot_intensities_from_ratios, BinIntensities, HotspotSpec, Scenario};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Model(#[from] flexsector_core::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    num_sectors: Option<usize>,
    bins_per_sector: Option<usize>,
    num_bins: Option<usize>,
    total_antennas: Option<usize>,
    max_power_dbm: Option<f64>,
    max_outage: Option<f64>,
    noise_power_dbm: Option<f64>,
    d_min: Option<f64>,
    d_max: Option<f64>,
    height: Option<f64>,
    pathloss_exponent: Option<f64>,
    carrier_freq: Option<f64>,
    bisection_tolerance: Option<f64>,

    lambda_sum: Option<f64>,
    lambda_bg: Option<f64>,
    #[serde(default)]
    hotspot_starts: Vec<usize>,
    #[serde(default)]
    hotspot_spans: Vec<usize>,
    hotspot_ratios: Option<Vec<f64>>,
    hotspot_intensities: Option<Vec<f64>>,
    bin_lambdas: Option<Vec<f64>>,
}

/// How the per-bin user intensities are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum UserModel {
    Explicit(BinIntensities),
    Hotspots {
        background: f64,
        starts: Vec<usize>,
        spans: Vec<usize>,
        /// Users per bin inside each hotspot.
        intensities: Vec<f64>,
    },
}

impl UserModel {
    /// Bin intensities with the configured hotspot starts.
    pub fn bins(&self, num_bins: usize) -> Result<BinIntensities, flexsector_core::Error> {
        match self {
            UserModel::Explicit(b) => Ok(b.clone()),
            UserModel::Hotspots { starts, .. } => self.bins_with_starts(num_bins, starts),
        }
    }

    /// Bin intensities with the hotspots moved to `starts`. Explicit models
    /// ignore the starts.
    pub fn bins_with_starts(&self, num_bins: usize, starts: &[usize]) -> Result<BinIntensities, flexsector_core::Error> {
        match self {
            UserModel::Explicit(b) => Ok(b.clone()),
            UserModel::Hotspots { background, spans, intensities, .. } => {
                let hotspots: Vec<HotspotSpec> = starts
                    .iter()
                    .zip(spans)
                    .zip(intensities)
                    .map(|((&start_bin, &span), &intensity)| HotspotSpec { start_bin, span, intensity })
                    .collect();
                build_intensities(num_bins, *background, &hotspots)
            }
        }
    }

    /// Mean number of users over all `num_bins` bins.
    pub fn total(&self, num_bins: usize) -> f64 {
        match self {
            UserModel::Explicit(b) => b.total(),
            UserModel::Hotspots { background, spans, intensities, .. } => {
                num_bins as f64 * background + spans.iter().zip(intensities).map(|(&s, i)| s as f64 * i).sum::<f64>()
            }
        }
    }

    /// Every intensity multiplied by the same factor so that `num_bins` bins
    /// carry `total` users.
    pub fn rescaled(&self, num_bins: usize, total: f64) -> Result<UserModel, ConfigError> {
        let current = self.total(num_bins);
        if !(current > 0.0) {
            return Err(ConfigError::Invalid("cannot rescale a user model without users".into()));
        }
        let f = total / current;
        Ok(match self {
            UserModel::Explicit(b) => {
                UserModel::Explicit(BinIntensities::new(b.as_slice().iter().map(|x| x * f).collect())?)
            }
            UserModel::Hotspots { background, starts, spans, intensities } => UserModel::Hotspots {
                background: background * f,
                starts: starts.clone(),
                spans: spans.clone(),
                intensities: intensities.iter().map(|x| x * f).collect(),
            },
        })
    }

    /// Background users make up `share` of `total`; the hotspots keep their
    /// relative intensities and carry the rest.
    pub fn with_background_share(&self, num_bins: usize, total: f64, share: f64) -> Result<UserModel, ConfigError> {
        let UserModel::Hotspots { starts, spans, intensities, .. } = self else {
            return Err(ConfigError::Invalid("background share needs a hotspot user model".into()));
        };
        if !(0.0..=1.0).contains(&share) {
            return Err(ConfigError::Invalid(format!("background share {share} outside [0, 1]")));
        }
        let hot: f64 = spans.iter().zip(intensities).map(|(&s, i)| s as f64 * i).sum();
        let f = if share < 1.0 {
            if !(hot > 0.0) {
                return Err(ConfigError::Invalid("hotspots carry no users".into()));
            }
            (1.0 - share) * total / hot
        } else {
            0.0
        };
        Ok(UserModel::Hotspots {
            background: share * total / num_bins as f64,
            starts: starts.clone(),
            spans: spans.clone(),
            intensities: intensities.iter().map(|x| x * f).collect(),
        })
    }

    pub fn hotspot_count(&self) -> usize {
        match self {
            UserModel::Explicit(_) => 0,
            UserModel::Hotspots { starts, .. } => starts.len(),
        }
    }
}

/// A resolved scenario file.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub users: UserModel,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text)?;
        let d = Scenario::default();
        let scenario = Scenario {
            num_sectors: file.num_sectors.unwrap_or(d.num_sectors),
            bins_per_sector: file.bins_per_sector.unwrap_or(d.bins_per_sector),
            num_bins: file.num_bins.unwrap_or(d.num_bins),
            total_antennas: file.total_antennas.unwrap_or(d.total_antennas),
            max_power_dbm: file.max_power_dbm.unwrap_or(d.max_power_dbm),
            max_outage: file.max_outage.unwrap_or(d.max_outage),
            noise_power_dbm: file.noise_power_dbm.unwrap_or(d.noise_power_dbm),
            d_min: file.d_min.unwrap_or(d.d_min),
            d_max: file.d_max.unwrap_or(d.d_max),
            height: file.height.unwrap_or(d.height),
            pathloss_exponent: file.pathloss_exponent.unwrap_or(d.pathloss_exponent),
            carrier_freq: file.carrier_freq.unwrap_or(d.carrier_freq),
            bisection_tolerance: file.bisection_tolerance.unwrap_or(d.bisection_tolerance),
        };
        scenario.validate()?;
        let users = resolve_users(&file, scenario.num_bins)?;
        let config = Config { scenario, users };
        // surface bad hotspot specs at load time
        config.bins()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn bins(&self) -> Result<BinIntensities, flexsector_core::Error> {
        self.users.bins(self.scenario.num_bins)
    }

    /// First 16 hex digits of the SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        let s = &self.scenario;
        let mut canon = format!(
            "M={};L={};B={};N={};pmax={:?};pout={:?};noise={:?};dmin={:?};dmax={:?};H={:?};alpha={:?};fc={:?};eps={:?};",
            s.num_sectors,
            s.bins_per_sector,
            s.num_bins,
            s.total_antennas,
            s.max_power_dbm,
            s.max_outage,
            s.noise_power_dbm,
            s.d_min,
            s.d_max,
            s.height,
            s.pathloss_exponent,
            s.carrier_freq,
            s.bisection_tolerance
        );
        match &self.users {
            UserModel::Explicit(b) => {
                let _ = write!(canon, "bins={:?}", b.as_slice());
            }
            UserModel::Hotspots { background, starts, spans, intensities } => {
                let _ = write!(canon, "bg={background:?};starts={starts:?};spans={spans:?};hot={intensities:?}");
            }
        }
        let digest = Sha256::digest(canon.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

fn resolve_users(file: &ScenarioFile, num_bins: usize) -> Result<UserModel, ConfigError> {
    if let Some(bins) = &file.bin_lambdas {
        if bins.len() != num_bins {
            return Err(ConfigError::Invalid(format!(
                "bin_lambdas has {} entries, scenario has {num_bins} bins",
                bins.len()
            )));
        }
        return Ok(UserModel::Explicit(BinIntensities::new(bins.clone())?));
    }
    let background = file.lambda_bg.unwrap_or(0.0);
    let n_hot = file.hotspot_starts.len();
    if file.hotspot_spans.len() != n_hot {
        return Err(ConfigError::Invalid(format!(
            "{n_hot} hotspot starts but {} spans",
            file.hotspot_spans.len()
        )));
    }
    let intensities = match (&file.hotspot_intensities, &file.hotspot_ratios) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("give hotspot_intensities or hotspot_ratios, not both".into()))
        }
        (Some(v), None) => v.clone(),
        (None, Some(ratios)) => {
            let total = file
                .lambda_sum
                .ok_or_else(|| ConfigError::Invalid("hotspot_ratios need lambda_sum".into()))?;
            hotspot_intensities_from_ratios(num_bins, total, background, ratios, &file.hotspot_spans)?
        }
        (None, None) if n_hot == 0 => Vec::new(),
        (None, None) => return Err(ConfigError::Invalid("hotspots need intensities or ratios".into())),
    };
    if intensities.len() != n_hot {
        return Err(ConfigError::Invalid(format!(
            "{n_hot} hotspot starts but {} intensities",
            intensities.len()
        )));
    }
    Ok(UserModel::Hotspots { background, starts: file.hotspot_starts.clone(), spans: file.hotspot_spans.clone(), intensities })
}

/// The default scenario file shipped with the crate.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/default.toml");
