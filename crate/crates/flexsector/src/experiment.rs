//! Batch experiments: the closed-form check against Monte Carlo, the
//! single-instance case study and the throughput sweeps averaged over random
//! hotspot placements.
//!
//! Every experiment produces a [`Table`]. Rows are generated in x-then-scheme
//! order and every row ends with the scenario hash, so a rerun with the same
//! inputs yields a byte-identical CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use flexsector_core::{
    lambda_variance, power_lower_bound, sector_avg_power, throughput_upper_bound, PowerConstants, Problem, RateTarget,
    Rotation, Scenario, Scheme, Solution, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Config, ConfigError, UserModel};
use crate::montecarlo::{mc_sector_avg_power, mc_sector_avg_power_stratified, MCConfig};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] flexsector_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Spec(String),
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    ValidateTheorem1,
    CaseStudy,
    SweepPower,
    SweepAntennas,
    SweepUsers,
    SweepSectors,
    SweepBackgroundRatio,
    SweepHotspots,
    OracleCompare,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::ValidateTheorem1,
        Kind::CaseStudy,
        Kind::SweepPower,
        Kind::SweepAntennas,
        Kind::SweepUsers,
        Kind::SweepSectors,
        Kind::SweepBackgroundRatio,
        Kind::SweepHotspots,
        Kind::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ValidateTheorem1 => "validate_theorem1",
            Kind::CaseStudy => "case_study",
            Kind::SweepPower => "sweep_power",
            Kind::SweepAntennas => "sweep_antennas",
            Kind::SweepUsers => "sweep_users",
            Kind::SweepSectors => "sweep_sectors",
            Kind::SweepBackgroundRatio => "sweep_background_ratio",
            Kind::SweepHotspots => "sweep_hotspots",
            Kind::OracleCompare => "oracle_compare",
        }
    }

    /// Schemes used when none are requested.
    pub fn default_schemes(self) -> Vec<Scheme> {
        match self {
            Kind::OracleCompare => vec![Scheme::Joint, Scheme::VarianceHeuristic, Scheme::Esm],
            _ => vec![Scheme::Joint, Scheme::AntennaOnly, Scheme::RotationOnly, Scheme::Fixed],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Monte-Carlo estimator for the closed-form check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Plain sample mean over snapshots.
    #[default]
    Plain,
    /// Exact Poisson weights, sampled distances.
    Stratified,
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plain" => Ok(Estimator::Plain),
            "stratified" => Ok(Estimator::Stratified),
            _ => Err(format!("unknown estimator {s:?}, expected plain or stratified")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub config: Config,
    pub seed: u64,
    /// Hotspot placements averaged per sweep point.
    pub samples: usize,
    pub mc_realizations: u64,
    pub schemes: Vec<Scheme>,
    pub variant: Variant,
    /// Keep the configured hotspot starts instead of drawing them.
    pub fixed_hotspots: bool,
    pub estimator: Estimator,
}

impl ExperimentSpec {
    pub fn new(kind: Kind, config: Config) -> Self {
        ExperimentSpec {
            kind,
            config,
            seed: 1,
            samples: 100,
            mc_realizations: 1_000_000,
            schemes: kind.default_schemes(),
            variant: Variant::Paper,
            fixed_hotspots: false,
            estimator: Estimator::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_sig(*x)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Twelve significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise. Independent of locale.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mantissa, e) = sci.split_at(sci.find('e').unwrap());
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}{e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub scenario_hash: String,
}

impl Table {
    fn new(columns: Vec<&'static str>, scenario_hash: String) -> Self {
        Table { columns, rows: Vec::new(), scenario_hash }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.columns.clone();
        header.push("scenario_hash");
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.scenario_hash.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `count` hotspot start bins drawn uniformly from `0..num_bins`, with
/// repetition.
pub fn randomize_hotspot_starts<R: Rng + ?Sized>(rng: &mut R, num_bins: usize, count: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(0..num_bins)).collect()
}

/// Generator for placement sample `index`; shared by every scheme and sweep
/// point so comparisons use common random numbers.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-scheme statistics of the maximized common throughput over placement
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputStats {
    pub scheme: Scheme,
    pub mean: f64,
    /// Sample standard deviation; zero for a single sample.
    pub std_dev: f64,
    pub mean_power: f64,
    pub mean_iterations: f64,
    pub infeasible: usize,
    pub per_sample: Vec<f64>,
}

/// Solve every scheme on `samples` instances of `config`, each with freshly
/// drawn hotspot starts unless `fixed_hotspots` is set.
pub fn average_throughput(
    config: &Config,
    schemes: &[Scheme],
    samples: usize,
    seed: u64,
    fixed_hotspots: bool,
    variant: Variant,
) -> Result<Vec<ThroughputStats>> {
    if samples == 0 {
        return Err(ExperimentError::Spec("at least one sample is required".into()));
    }
    let s = &config.scenario;
    let n_hot = config.users.hotspot_count();
    let solved: Vec<Vec<Solution>> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<Solution>> {
            let bins = if fixed_hotspots {
                config.bins()?
            } else {
                let starts = randomize_hotspot_starts(&mut sample_rng(seed, i as u64), s.num_bins, n_hot);
                config.users.bins_with_starts(s.num_bins, &starts)?
            };
            let problem = Problem::new(s, &bins)?.with_variant(variant);
            schemes.iter().map(|&k| Ok(problem.maximize_common_throughput(k)?)).collect()
        })
        .collect::<Result<_>>()?;

    Ok(schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| {
            let rates: Vec<f64> = solved.iter().map(|sol| sol[j].rate).collect();
            let n = rates.len() as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let std_dev = if rates.len() > 1 {
                (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            ThroughputStats {
                scheme,
                mean,
                std_dev,
                mean_power: solved.iter().map(|sol| sol[j].total_power).sum::<f64>() / n,
                mean_iterations: solved.iter().map(|sol| sol[j].iterations as f64).sum::<f64>() / n,
                infeasible: solved.iter().filter(|sol| sol[j].infeasible).count(),
                per_sample: rates,
            }
        })
        .collect())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table> {
    match spec.kind {
        Kind::ValidateTheorem1 => validate_theorem1(spec),
        Kind::CaseStudy => case_study(spec),
        Kind::OracleCompare => oracle_compare(spec),
        Kind::SweepPower => {
            let xs = [25.0, 30.0, 35.0, 40.0, 45.0, 50.0];
            sweep(spec, "max_power_dbm", &xs, |c, x| {
                let mut c = c.clone();
                c.scenario.max_power_dbm = x;
                Ok(c)
            })
        }
        Kind::SweepAntennas => {
            let xs = [30.0, 60.0, 120.0, 180.0, 240.0, 300.0, 360.0, 420.0, 480.0];
            sweep(spec, "total_antennas", &xs, |c, x| {
                let mut c = c.clone();
                c.scenario.total_antennas = x as usize;
                Ok(c)
            })
        }
        Kind::SweepUsers => {
            let xs = [40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0];
            sweep(spec, "lambda_sum", &xs, |c, x| {
                Ok(Config { scenario: c.scenario.clone(), users: c.users.rescaled(c.scenario.num_bins, x)? })
            })
        }
        Kind::SweepSectors => {
            // B fixed at 60 so the rotation step is the same for every M
            let total = spec.config.users.total(spec.config.scenario.num_bins);
            let xs = [2.0, 3.0, 4.0, 5.0, 6.0];
            sweep(spec, "num_sectors", &xs, move |c, x| {
                let m = x as usize;
                let scenario = Scenario { num_sectors: m, bins_per_sector: 60 / m, num_bins: 60, ..c.scenario.clone() };
                scenario.validate()?;
                Ok(Config { users: c.users.rescaled(60, total)?, scenario })
            })
        }
        Kind::SweepBackgroundRatio => {
            let total = spec.config.users.total(spec.config.scenario.num_bins);
            let xs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
            sweep(spec, "background_share", &xs, move |c, x| {
                Ok(Config {
                    scenario: c.scenario.clone(),
                    users: c.users.with_background_share(c.scenario.num_bins, total, x)?,
                })
            })
        }
        Kind::SweepHotspots => {
            let total = spec.config.users.total(spec.config.scenario.num_bins);
            let xs: Vec<f64> = (0..=10).map(|n| n as f64).collect();
            let mut spec = spec.clone();
            // drawing the starts is the point of this sweep
            spec.fixed_hotspots = false;
            sweep(&spec, "hotspots", &xs, move |c, x| Ok(hotspot_count_config(&c.scenario, total, x as usize)))
        }
    }
}

/// Two sectors of twenty bins with `count` single-bin hotspots twice as
/// dense as the background, all bins together carrying `total` users.
pub fn hotspot_count_config(base: &Scenario, total: f64, count: usize) -> Config {
    let scenario = Scenario { num_sectors: 2, bins_per_sector: 20, num_bins: 40, ..base.clone() };
    let background = total / (40.0 + 2.0 * count as f64);
    Config {
        scenario,
        users: UserModel::Hotspots {
            background,
            starts: vec![0; count],
            spans: vec![1; count],
            intensities: vec![2.0 * background; count],
        },
    }
}

fn sweep(
    spec: &ExperimentSpec,
    x_name: &'static str,
    xs: &[f64],
    at: impl Fn(&Config, f64) -> Result<Config>,
) -> Result<Table> {
    let mut table = Table::new(
        vec![
            "x_name",
            "x",
            "scheme",
            "rate_mean",
            "rate_std",
            "power_mean_watt",
            "iterations_mean",
            "infeasible",
            "samples",
        ],
        spec.config.hash(),
    );
    let samples = if spec.fixed_hotspots { 1 } else { spec.samples };
    for &x in xs {
        let config = at(&spec.config, x)?;
        let stats = average_throughput(&config, &spec.schemes, samples, spec.seed, spec.fixed_hotspots, spec.variant)?;
        for st in &stats {
            table.push(vec![
                x_name.into(),
                x.into(),
                st.scheme.name().into(),
                st.mean.into(),
                st.std_dev.into(),
                st.mean_power.into(),
                st.mean_iterations.into(),
                st.infeasible.into(),
                samples.into(),
            ]);
        }
        let s = &config.scenario;
        let consts = PowerConstants::derive(s);
        let bound = throughput_upper_bound(
            &consts,
            s.num_sectors,
            s.total_antennas,
            config.users.total(s.num_bins),
            s.max_power_watt(),
        )
        .unwrap_or(0.0);
        table.push(vec![
            x_name.into(),
            x.into(),
            "upper_bound".into(),
            bound.into(),
            0.0.into(),
            s.max_power_watt().into(),
            0usize.into(),
            0usize.into(),
            samples.into(),
        ]);
        log::info!("{x_name}={} done", format_sig(x));
    }
    Ok(table)
}

fn validate_theorem1(spec: &ExperimentSpec) -> Result<Table> {
    let s = &spec.config.scenario;
    let consts = PowerConstants::derive(s);
    let target = RateTarget::new(0.7);
    let mut table = Table::new(
        vec![
            "lambda",
            "antennas",
            "rate",
            "estimate_watt",
            "std_error_watt",
            "closed_form_paper_watt",
            "closed_form_exact_watt",
            "relative_error_exact",
        ],
        spec.config.hash(),
    );
    let mut stream = 0;
    for &n in &[60usize, 100, 140] {
        for &lambda in &[5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let cfg = MCConfig::new(spec.mc_realizations, spec.seed, stream);
            stream += 1;
            let est = match spec.estimator {
                Estimator::Plain => mc_sector_avg_power(s, lambda, n, target, &cfg),
                Estimator::Stratified => mc_sector_avg_power_stratified(s, lambda, n, target, &cfg),
            };
            let paper = sector_avg_power(&consts, s.num_sectors, n, lambda, target, Variant::Paper)?;
            let exact = sector_avg_power(&consts, s.num_sectors, n, lambda, target, Variant::Exact)?;
            table.push(vec![
                lambda.into(),
                n.into(),
                target.rate().into(),
                est.mean.into(),
                est.std_error.into(),
                paper.into(),
                exact.into(),
                ((est.mean - exact) / exact).into(),
            ]);
            log::info!("lambda={lambda} N_m={n}: mc {} vs exact {exact}", est.mean);
        }
    }
    Ok(table)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn case_study(spec: &ExperimentSpec) -> Result<Table> {
    let config = &spec.config;
    let s = &config.scenario;
    let bins = config.bins()?;
    let problem = Problem::new(s, &bins)?.with_variant(spec.variant);
    let mut table = Table::new(
        vec![
            "scheme",
            "rotation",
            "allocation",
            "rate",
            "total_power_watt",
            "lambda_at_zero",
            "lambda_at_rotation",
            "variance_at_zero",
            "variance_at_rotation",
            "upper_bound",
            "leftover_antennas",
            "iterations",
        ],
        config.hash(),
    );
    let lambda0 = problem.lambdas(Rotation::ZERO).to_vec();
    let var = |l: &[f64]| lambda_variance(l).map(Value::from).unwrap_or(Value::Text(String::new()));
    for &scheme in &spec.schemes {
        let sol = problem.maximize_common_throughput(scheme)?;
        let fmt_l = |l: &[f64]| join(&l.iter().map(|x| format_sig(*x)).collect::<Vec<_>>());
        table.push(vec![
            scheme.name().into(),
            sol.rotation.get().into(),
            join(sol.allocation.as_slice()).into(),
            sol.rate.into(),
            sol.total_power.into(),
            fmt_l(&lambda0).into(),
            fmt_l(&sol.lambdas).into(),
            var(&lambda0),
            var(&sol.lambdas),
            sol.upper_bound.into(),
            sol.leftover_antennas.into(),
            sol.iterations.into(),
        ]);
    }
    Ok(table)
}

fn oracle_compare(spec: &ExperimentSpec) -> Result<Table> {
    let mut table = Table::new(
        vec!["max_power_dbm", "scheme", "rate", "total_power_watt", "rotation", "allocation", "lower_bound_watt"],
        spec.config.hash(),
    );
    let bins = spec.config.bins()?;
    for &p in &[25.0, 30.0, 35.0, 40.0, 45.0, 50.0] {
        let s = Scenario { max_power_dbm: p, ..spec.config.scenario.clone() };
        let problem = Problem::new(&s, &bins)?.with_variant(spec.variant);
        for &scheme in &spec.schemes {
            let sol = problem.maximize_common_throughput(scheme)?;
            let lb = power_lower_bound(
                problem.constants(),
                s.num_sectors,
                s.total_antennas,
                bins.total(),
                RateTarget::new(sol.rate),
            );
            table.push(vec![
                p.into(),
                scheme.name().into(),
                sol.rate.into(),
                sol.total_power.into(),
                sol.rotation.get().into(),
                join(sol.allocation.as_slice()).into(),
                lb.into(),
            ]);
        }
        log::info!("max_power_dbm={p} done");
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_SCENARIO;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(100.0 / 3.0), "33.3333333333");
        assert_eq!(format_sig(-0.125), "-0.125");
        assert_eq!(format_sig(1.0e-7), "1e-7");
        assert_eq!(format_sig(2.4e10), "24000000000");
        assert_eq!(format_sig(2.4e13), "2.4e13");
        assert_eq!(format_sig(17.897519467088236), "17.8975194671");
        assert_eq!(format_sig(f64::NAN), "nan");
    }

    #[test]
    fn kind_names_round_trip() {
        for k in Kind::ALL {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
        assert!("sweep".parse::<Kind>().is_err());
    }

    #[test]
    fn starts_are_seed_stable() {
        let a = randomize_hotspot_starts(&mut sample_rng(3, 7), 30, 5);
        let b = randomize_hotspot_starts(&mut sample_rng(3, 7), 30, 5);
        assert_eq!(a, b);
        assert!(randomize_hotspot_starts(&mut sample_rng(3, 7), 30, 0).is_empty());
        assert!(a.iter().all(|&s| s < 30));
    }

    #[test]
    fn single_sample_equals_single_instance() {
        let c = Config::from_toml(DEFAULT_SCENARIO).unwrap();
        let stats = average_throughput(&c, &[Scheme::Joint], 1, 9, false, Variant::Paper).unwrap();
        let starts = randomize_hotspot_starts(&mut sample_rng(9, 0), 30, 3);
        let bins = c.users.bins_with_starts(30, &starts).unwrap();
        let sol = Problem::new(&c.scenario, &bins).unwrap().maximize_common_throughput(Scheme::Joint).unwrap();
        assert_eq!(stats[0].mean, sol.rate);
        assert_eq!(stats[0].std_dev, 0.0);
    }

    #[test]
    fn hotspot_count_config_conserves_users() {
        for n in 0..8 {
            let c = hotspot_count_config(&Scenario::default(), 100.0, n);
            assert!((c.users.total(40) - 100.0).abs() < 1e-12);
            c.scenario.validate().unwrap();
        }
    }
}
