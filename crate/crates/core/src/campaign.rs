//! Seeded Monte Carlo campaigns over UE drops, power sweeps and algorithms.
//!
//! Trial `t` draws from `ChaCha8Rng::seed_from_u64(seed ^ t)`: first the UE
//! positions (K draws of radius then angle), then, if `RANDOM_ETA` is
//! requested, one sparsity level per sweep point. The drop of a trial is
//! shared by every sweep point and algorithm, so comparisons are paired.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::array::{effective_channels, feasible_sparsities, los_channels, make_mode, ChannelSet};
use crate::closed_form::{proposition1_select, single_ue_solution, DEFAULT_REGIME_FACTOR};
use crate::error::{Error, Result};
use crate::metrics;
use crate::scenario::{dbm_to_watts, watts_to_dbm, Geometry, Point3, Scenario, SystemConfig};
use crate::wmmse::{solve_at_eta, sparsity_search, FixedEtaOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// WA with the sparsity level searched over the feasible set.
    WaOptEta,
    /// WA on the compact array (`eta = 1`).
    CompactEta1,
    /// WA at a uniformly drawn feasible level.
    RandomEta,
    /// Best of WA over every feasible level. Same search as `WaOptEta`,
    /// listed separately so both can be reported side by side.
    ExhaustiveEta,
    /// Closed-form single-UE beamformer (K = 1 only).
    SingleUeClosed,
    /// WA at the level picked by the two-UE regime rule (K = 2 only).
    TwoUeProp1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Self::WaOptEta,
        Self::CompactEta1,
        Self::RandomEta,
        Self::ExhaustiveEta,
        Self::SingleUeClosed,
        Self::TwoUeProp1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WaOptEta => "WA_OPT_ETA",
            Self::CompactEta1 => "COMPACT_ETA1",
            Self::RandomEta => "RANDOM_ETA",
            Self::ExhaustiveEta => "EXHAUSTIVE_ETA",
            Self::SingleUeClosed => "SINGLE_UE_CLOSED",
            Self::TwoUeProp1 => "TWO_UE_PROP1",
        }
    }

    /// Comma-separated list, e.g. `WA_OPT_ETA,COMPACT_ETA1`.
    pub fn parse_list(text: &str) -> Result<Vec<Algorithm>> {
        let mut out: Vec<Algorithm> = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let algo: Algorithm = part.parse()?;
            if !out.contains(&algo) {
                out.push(algo);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("no algorithms given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                value: s.to_string(),
            })
    }
}

/// Total transmit power grid in dBm, endpoints inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub ptot_dbm: Vec<f64>,
}

impl Sweep {
    /// Parses `ptot_dbm=<start>:<stop>:<step>`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidConfig(format!("sweep `{text}`: {why}"));
        let (key, range) = text.split_once('=').ok_or_else(|| bad("expected key=start:stop:step"))?;
        if key.trim() != "ptot_dbm" {
            return Err(Error::Unknown {
                kind: "sweep parameter",
                value: key.trim().to_string(),
            });
        }
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected three fields"));
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(bad("values must be finite"));
        }
        if !(step > 0.0) || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad("too many points"));
        }
        Ok(Self {
            ptot_dbm: (0..count).map(|i| start + step * i as f64).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub scenario: Scenario,
    pub n_trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub sweep: Option<Sweep>,
    /// Run trials on the rayon pool. Output does not depend on this flag.
    pub parallel: bool,
}

impl Campaign {
    pub fn new(scenario: Scenario, n_trials: usize, seed: u64, algorithms: Vec<Algorithm>) -> Self {
        Self {
            scenario,
            n_trials,
            seed,
            algorithms,
            sweep: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        if let Some(s) = &self.sweep {
            if s.ptot_dbm.is_empty() || s.ptot_dbm.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("sweep values must be finite".into()));
            }
        }
        self.scenario.config.validate()
    }

    /// Sweep points in dBm; the scenario's own power when no sweep is set.
    pub fn sweep_points(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) => s.ptot_dbm.clone(),
            None => vec![watts_to_dbm(self.scenario.config.total_power)],
        }
    }
}

/// Uniform drop of `k` UEs over the horizontal disk of `radius` around
/// `center`, at the centre's height (`r = radius sqrt(U)`, angle `2 pi U`).
pub fn drop_ues(center: Point3, radius: f64, k: usize, rng: &mut impl Rng) -> Result<Vec<Point3>> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("drop radius must be finite and nonnegative, got {radius}")));
    }
    Ok((0..k)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            [center[0] + r * theta.cos(), center[1] + r * theta.sin(), center[2]]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    /// Hit the outer iteration cap; the best iterate is reported.
    NotConverged,
    Failed(String),
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::NotConverged => f.write_str("not_converged"),
            Self::Failed(why) => write!(f, "failed: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Total power in dBm.
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub eta: Option<usize>,
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    /// Outer iterations of the reported run.
    pub iterations: usize,
    pub wall_time: Duration,
    pub status: TrialStatus,
}

impl TrialRecord {
    pub fn min_ue_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn succeeded(&self) -> bool {
        !matches!(self.status, TrialStatus::Failed(_))
    }

    fn failed(trial: usize, sweep_value: f64, algorithm: Algorithm, why: String) -> Self {
        Self {
            trial,
            sweep_value,
            algorithm,
            eta: None,
            sum_rate: f64::NAN,
            rates: Vec::new(),
            iterations: 0,
            wall_time: Duration::ZERO,
            status: TrialStatus::Failed(why),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub records: Vec<TrialRecord>,
}

impl ResultTable {
    /// Sorts by (sweep value, algorithm name, trial).
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            a.sweep_value
                .total_cmp(&b.sweep_value)
                .then_with(|| a.algorithm.name().cmp(b.algorithm.name()))
                .then_with(|| a.trial.cmp(&b.trial))
        });
    }

    /// Records of one cell, in trial order.
    pub fn cell(&self, sweep_value: f64, algorithm: Algorithm) -> Vec<&TrialRecord> {
        let mut rows: Vec<&TrialRecord> = self
            .records
            .iter()
            .filter(|r| r.algorithm == algorithm && r.sweep_value == sweep_value)
            .collect();
        rows.sort_by_key(|r| r.trial);
        rows
    }
}

/// Mean and sample standard deviation of the successful trials of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_not_converged: usize,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub mean_min_rate: f64,
    pub mean_iters: f64,
    pub mean_wall_ms: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(table: &ResultTable) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(u64, &'static str), Vec<&TrialRecord>> = BTreeMap::new();
    for r in &table.records {
        // order-preserving key for finite and infinite values alike
        let bits = r.sweep_value.to_bits();
        let key = if bits >> 63 == 1 { !bits } else { bits | (1 << 63) };
        cells.entry((key, r.algorithm.name())).or_default().push(r);
    }
    cells
        .into_values()
        .map(|rows| {
            let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.succeeded()).collect();
            let col = |f: &dyn Fn(&TrialRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_sum_rate, std_sum_rate) = mean_std(&col(&|r| r.sum_rate));
            CellSummary {
                sweep_value: rows[0].sweep_value,
                algorithm: rows[0].algorithm,
                n_ok: ok.len(),
                n_failed: rows.len() - ok.len(),
                n_not_converged: ok.iter().filter(|r| r.status == TrialStatus::NotConverged).count(),
                mean_sum_rate,
                std_sum_rate,
                mean_min_rate: mean_std(&col(&|r| r.min_ue_rate())).0,
                mean_iters: mean_std(&col(&|r| r.iterations as f64)).0,
                mean_wall_ms: mean_std(&col(&|r| r.wall_time.as_secs_f64() * 1e3)).0,
            }
        })
        .collect()
}

/// Per-trial cache of WA runs keyed by sparsity level.
struct EtaCache<'a> {
    channels: &'a ChannelSet,
    config: &'a SystemConfig,
    runs: BTreeMap<usize, std::result::Result<FixedEtaOutcome, String>>,
}

impl<'a> EtaCache<'a> {
    fn get(&mut self, eta: usize) -> Result<FixedEtaOutcome> {
        let (channels, config) = (self.channels, self.config);
        self.runs
            .entry(eta)
            .or_insert_with(|| solve_at_eta(channels, config, eta).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Degenerate)
    }
}

fn record_from(trial: usize, sweep_value: f64, algorithm: Algorithm, out: &FixedEtaOutcome, wall_time: Duration) -> TrialRecord {
    TrialRecord {
        trial,
        sweep_value,
        algorithm,
        eta: Some(out.eta),
        sum_rate: out.report.sum_rate,
        rates: out.report.rate.clone(),
        iterations: out.report.iterations,
        wall_time,
        status: if out.report.converged { TrialStatus::Ok } else { TrialStatus::NotConverged },
    }
}

fn run_algorithm(
    algorithm: Algorithm,
    geometry: &Geometry,
    config: &SystemConfig,
    cache: &mut EtaCache<'_>,
    random_eta: usize,
    trial: usize,
    sweep_value: f64,
) -> Result<TrialRecord> {
    let etas = feasible_sparsities(config.n_elems, config.n_connected)?;
    let start = Instant::now();
    match algorithm {
        Algorithm::WaOptEta | Algorithm::ExhaustiveEta => {
            let search = sparsity_search(&etas, |eta| cache.get(eta))?;
            let wall = etas
                .iter()
                .filter_map(|eta| cache.runs.get(eta).and_then(|r| r.as_ref().ok()))
                .map(|o| o.report.wall_time)
                .sum();
            Ok(record_from(trial, sweep_value, algorithm, &search.best, wall))
        }
        Algorithm::CompactEta1 => {
            let out = cache.get(1)?;
            Ok(record_from(trial, sweep_value, algorithm, &out, out.report.wall_time))
        }
        Algorithm::RandomEta => {
            let out = cache.get(random_eta)?;
            Ok(record_from(trial, sweep_value, algorithm, &out, out.report.wall_time))
        }
        Algorithm::TwoUeProp1 => {
            if config.n_ues != 2 {
                return Err(Error::InvalidConfig(format!("{algorithm} needs K = 2, got {}", config.n_ues)));
            }
            let selection = proposition1_select(geometry, config, DEFAULT_REGIME_FACTOR)?;
            let eta = selection.preferred(geometry, config);
            let out = cache.get(eta)?;
            let wall = out.report.wall_time + start.elapsed();
            Ok(record_from(trial, sweep_value, algorithm, &out, wall))
        }
        Algorithm::SingleUeClosed => {
            if config.n_ues != 1 {
                return Err(Error::InvalidConfig(format!("{algorithm} needs K = 1, got {}", config.n_ues)));
            }
            let mode = make_mode(config.n_elems, config.n_connected, 1, 1)?;
            let closed = single_ue_solution(geometry, config, &mode)?;
            let h = effective_channels(cache.channels, &closed.solution.passive, &mode)?;
            let report = metrics::sum_rate(&h, &closed.solution.v, config.noise_power)?;
            Ok(TrialRecord {
                trial,
                sweep_value,
                algorithm,
                eta: Some(1),
                sum_rate: report.sum_rate,
                rates: report.rate,
                iterations: 0,
                wall_time: start.elapsed(),
                status: TrialStatus::Ok,
            })
        }
    }
}

/// Every sweep point and algorithm of one trial.
pub fn run_trial(campaign: &Campaign, trial: usize) -> Vec<TrialRecord> {
    let points = campaign.sweep_points();
    let fail_all = |why: String| {
        points
            .iter()
            .flat_map(|&p| campaign.algorithms.iter().map(move |&a| (p, a)))
            .map(|(p, a)| TrialRecord::failed(trial, p, a, why.clone()))
            .collect::<Vec<_>>()
    };
    let sc = &campaign.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(campaign.seed ^ trial as u64);
    let ue_pos = match &sc.ue_pos {
        Some(fixed) => fixed.clone(),
        None => match drop_ues(sc.ue_center, sc.ue_radius, sc.config.n_ues, &mut rng) {
            Ok(p) => p,
            Err(e) => return fail_all(e.to_string()),
        },
    };
    let geometry = match sc.geometry(&ue_pos) {
        Ok(g) => g,
        Err(e) => return fail_all(e.to_string()),
    };
    let etas = match feasible_sparsities(sc.config.n_elems, sc.config.n_connected) {
        Ok(e) => e,
        Err(e) => return fail_all(e.to_string()),
    };
    let wants_random = campaign.algorithms.contains(&Algorithm::RandomEta);

    let mut records = Vec::new();
    for &dbm in &points {
        let random_eta = if wants_random { etas[rng.random_range(0..etas.len())] } else { 1 };
        let mut config = sc.config.clone();
        config.total_power = dbm_to_watts(dbm);
        let channels = los_channels(&geometry, &config);
        let mut cache = EtaCache {
            channels: &channels,
            config: &config,
            runs: BTreeMap::new(),
        };
        for &algo in &campaign.algorithms {
            let record = run_algorithm(algo, &geometry, &config, &mut cache, random_eta, trial, dbm)
                .unwrap_or_else(|e| TrialRecord::failed(trial, dbm, algo, e.to_string()));
            records.push(record);
        }
    }
    records
}

/// Runs all trials, concurrently when `campaign.parallel`; the returned
/// table is sorted and identical either way (apart from wall times).
pub fn run_campaign(campaign: &Campaign) -> Result<ResultTable> {
    campaign.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> = if campaign.parallel {
        (0..campaign.n_trials).into_par_iter().map(|t| run_trial(campaign, t)).collect()
    } else {
        (0..campaign.n_trials).map(|t| run_trial(campaign, t)).collect()
    };
    let mut table = ResultTable {
        records: per_trial.into_iter().flatten().collect(),
    };
    table.sort();
    Ok(table)
}

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros trimmed, scientific notation outside `[1e-5, 10^digits)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Write measured wall times; when off the column is left empty so the
    /// file is a pure function of the campaign.
    pub wall_time: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { wall_time: true }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "trial",
    "sweep_value",
    "algorithm",
    "eta",
    "sum_rate_bits",
    "min_ue_rate",
    "iters",
    "wall_ms",
    "status",
];

/// Writes the table (in its current order) as CSV.
pub fn write_csv<W: Write>(table: &ResultTable, writer: W, options: CsvOptions) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &table.records {
        let ok = r.succeeded();
        let num = |x: f64| if ok { format_sig(x, 9) } else { String::new() };
        w.write_record([
            r.trial.to_string(),
            format_sig(r.sweep_value, 9),
            r.algorithm.name().to_string(),
            r.eta.map(|e| e.to_string()).unwrap_or_default(),
            num(r.sum_rate),
            num(r.min_ue_rate()),
            if ok { r.iterations.to_string() } else { String::new() },
            if options.wall_time { format_sig(r.wall_time.as_secs_f64() * 1e3, 9) } else { String::new() },
            r.status.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Sorts a copy of the table and writes it to `path`.
pub fn emit_csv(table: &ResultTable, path: &Path, options: CsvOptions) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut sorted = table.clone();
    sorted.sort();
    let mut buf = Vec::new();
    write_csv(&sorted, &mut buf, options)?;
    std::fs::write(path, buf).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario(k: usize) -> Scenario {
        let mut sc = Scenario::reference_defaults();
        sc.config = sc.config.with_sizes(4, 16, 4, k);
        sc
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("wa_opt_eta".parse::<Algorithm>().unwrap(), Algorithm::WaOptEta);
        assert!("MM".parse::<Algorithm>().is_err());
        assert_eq!(
            Algorithm::parse_list("WA_OPT_ETA, COMPACT_ETA1,WA_OPT_ETA").unwrap(),
            vec![Algorithm::WaOptEta, Algorithm::CompactEta1]
        );
        assert!(Algorithm::parse_list(" , ").is_err());
    }

    #[test]
    fn sweep_parsing() {
        assert_eq!(Sweep::parse("ptot_dbm=10:30:10").unwrap().ptot_dbm, vec![10.0, 20.0, 30.0]);
        assert_eq!(Sweep::parse("ptot_dbm=0:1:0.25").unwrap().ptot_dbm.len(), 5);
        assert_eq!(Sweep::parse("ptot_dbm=5:5:1").unwrap().ptot_dbm, vec![5.0]);
        for bad in ["ptot_dbm=1:0:1", "ptot_dbm=0:1:0", "ptot_dbm=0:1", "power=0:1:1", "ptot_dbm=a:1:1", "ptot_dbm=0:inf:1"] {
            assert!(Sweep::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn drop_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let at_center = drop_ues([1.0, 2.0, 3.0], 0.0, 4, &mut rng).unwrap();
        assert!(at_center.iter().all(|p| *p == [1.0, 2.0, 3.0]));
        let a = drop_ues([0.0, 0.0, 1.5], 20.0, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = drop_ues([0.0, 0.0, 1.5], 20.0, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(drop_ues([0.0; 3], -1.0, 1, &mut rng).is_err());
    }

    #[test]
    fn drop_is_uniform_over_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = drop_ues([10.0, -5.0, 2.0], 3.0, 100_000, &mut rng).unwrap();
        let mean_r = pts.iter().map(|p| (p[0] - 10.0).hypot(p[1] + 5.0)).sum::<f64>() / pts.len() as f64;
        assert!((mean_r - 2.0).abs() < 0.01 * 2.0);
        assert!(pts.iter().all(|p| p[2] == 2.0 && (p[0] - 10.0).hypot(p[1] + 5.0) <= 3.0));
    }

    #[test]
    fn format_sig_examples() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(30.0, 9), "30");
        assert_eq!(format_sig(-2.5, 9), "-2.5");
        assert_eq!(format_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_sig(123456789.4, 9), "123456789");
        assert_eq!(format_sig(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(format_sig(1.5e-7, 9), "1.5e-07");
        assert_eq!(format_sig(0.000123456789123, 9), "0.000123456789");
        assert_eq!(format_sig(9.9999999999, 9), "10");
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&ResultTable::default(), &mut buf, CsvOptions::default()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,sweep_value,algorithm,eta,sum_rate_bits,min_ue_rate,iters,wall_ms,status\n");
    }

    #[test]
    fn failed_rows_keep_reason() {
        let mut c = Campaign::new(small_scenario(2), 1, 5, vec![Algorithm::SingleUeClosed, Algorithm::CompactEta1]);
        c.parallel = false;
        let table = run_campaign(&c).unwrap();
        assert_eq!(table.records.len(), 2);
        let closed = table.cell(30.0, Algorithm::SingleUeClosed);
        assert!(matches!(&closed[0].status, TrialStatus::Failed(why) if why.contains("K = 1")));
        assert!(table.cell(30.0, Algorithm::CompactEta1)[0].succeeded());
        let s = summarize(&table);
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().find(|c| c.algorithm == Algorithm::SingleUeClosed).unwrap().n_failed, 1);
    }

    #[test]
    fn rows_sorted_by_sweep_algorithm_trial() {
        let mut c = Campaign::new(small_scenario(2), 2, 1, vec![Algorithm::RandomEta, Algorithm::CompactEta1]);
        c.sweep = Some(Sweep::parse("ptot_dbm=20:30:10").unwrap());
        let table = run_campaign(&c).unwrap();
        let keys: Vec<(f64, &str, usize)> = table.records.iter().map(|r| (r.sweep_value, r.algorithm.name(), r.trial)).collect();
        assert_eq!(
            keys,
            vec![
                (20.0, "COMPACT_ETA1", 0),
                (20.0, "COMPACT_ETA1", 1),
                (20.0, "RANDOM_ETA", 0),
                (20.0, "RANDOM_ETA", 1),
                (30.0, "COMPACT_ETA1", 0),
                (30.0, "COMPACT_ETA1", 1),
                (30.0, "RANDOM_ETA", 0),
                (30.0, "RANDOM_ETA", 1),
            ]
        );
    }

    #[test]
    fn invalid_campaigns_rejected() {
        let c = Campaign::new(small_scenario(1), 0, 1, vec![Algorithm::WaOptEta]);
        assert!(run_campaign(&c).is_err());
        let c = Campaign::new(small_scenario(1), 1, 1, vec![]);
        assert!(run_campaign(&c).is_err());
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }
}
