//! System parameters, deployment geometry and path loss.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point3 = [f64; 3];

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Scalar system parameters. Powers are in watts, lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antennas.
    pub n_tx: usize,
    /// RDARS elements.
    pub n_elems: usize,
    /// Elements in connection mode.
    pub n_connected: usize,
    pub n_ues: usize,
    /// Inter-element spacing of both ULAs.
    pub spacing: f64,
    pub carrier_freq: f64,
    pub wavelength: f64,
    pub total_power: f64,
    pub noise_power: f64,
    /// Path loss at the 1 m reference distance.
    pub ref_pathloss_db: f64,
    pub pathloss_exp_bs_rdars: f64,
    pub pathloss_exp_rdars_ue: f64,
    /// Fractional sum-rate increase below which the alternating loop stops.
    pub conv_threshold: f64,
    pub max_outer_iters: usize,
    /// Power-iteration sweeps per passive update, and the doubling budget of
    /// the power-constraint bisection.
    pub max_inner_iters: usize,
    pub bisection_tol: f64,
    /// Lower bound on the diagonal shift used by the phase power iteration.
    pub shift_nu: f64,
    /// Sup-norm step size at which the phase power iteration stops.
    pub power_iter_tol: f64,
    /// Unit direction of the BS array axis.
    pub bs_axis: Point3,
    /// Unit direction of the RDARS array axis.
    pub rdars_axis: Point3,
}

impl SystemConfig {
    /// The evaluation setup: N_t = 32, N = 128, a = 20, K = 20, 28 GHz,
    /// half-wavelength spacing, 30 dBm budget, -91.4 dBm noise, 61.4 dB
    /// reference loss.
    pub fn reference_defaults() -> Self {
        let carrier_freq = 28e9;
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        Self {
            n_tx: 32,
            n_elems: 128,
            n_connected: 20,
            n_ues: 20,
            spacing: wavelength / 2.0,
            carrier_freq,
            wavelength,
            total_power: dbm_to_watts(30.0),
            noise_power: dbm_to_watts(-91.4),
            ref_pathloss_db: 61.4,
            pathloss_exp_bs_rdars: 2.0,
            pathloss_exp_rdars_ue: 2.8,
            conv_threshold: 1e-4,
            max_outer_iters: 200,
            max_inner_iters: 100,
            bisection_tol: 1e-12,
            shift_nu: 0.0,
            power_iter_tol: 1e-6,
            bs_axis: [1.0, 0.0, 0.0],
            rdars_axis: [1.0, 0.0, 0.0],
        }
    }

    /// Same parameters with different array sizes.
    pub fn with_sizes(mut self, n_tx: usize, n_elems: usize, n_connected: usize, n_ues: usize) -> Self {
        self.n_tx = n_tx;
        self.n_elems = n_elems;
        self.n_connected = n_connected;
        self.n_ues = n_ues;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_tx == 0 || self.n_elems == 0 || self.n_ues == 0 {
            return fail("n_tx, n_elems and n_ues must be positive".into());
        }
        if self.n_connected == 0 || self.n_connected > self.n_elems {
            return fail(format!(
                "n_connected={} must lie in 1..={}",
                self.n_connected, self.n_elems
            ));
        }
        let positive = [
            ("spacing", self.spacing),
            ("wavelength", self.wavelength),
            ("carrier_freq", self.carrier_freq),
            ("total_power", self.total_power),
            ("noise_power", self.noise_power),
            ("pathloss_exp_bs_rdars", self.pathloss_exp_bs_rdars),
            ("pathloss_exp_rdars_ue", self.pathloss_exp_rdars_ue),
            ("conv_threshold", self.conv_threshold),
            ("bisection_tol", self.bisection_tol),
            ("power_iter_tol", self.power_iter_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name}={v} must be finite and positive"));
            }
        }
        if !(self.shift_nu.is_finite() && self.shift_nu >= 0.0) {
            return fail(format!("shift_nu={} must be nonnegative", self.shift_nu));
        }
        if !self.ref_pathloss_db.is_finite() {
            return fail("ref_pathloss_db must be finite".into());
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return fail("iteration bounds must be positive".into());
        }
        let expected = SPEED_OF_LIGHT / self.carrier_freq;
        if ((self.wavelength - expected) / expected).abs() > 1e-9 {
            return fail(format!(
                "wavelength {} inconsistent with carrier_freq {} (expected {expected})",
                self.wavelength, self.carrier_freq
            ));
        }
        for (name, axis) in [("bs_axis", self.bs_axis), ("rdars_axis", self.rdars_axis)] {
            if norm(axis) == 0.0 || !axis.iter().all(|c| c.is_finite()) {
                return fail(format!("{name} must be a finite nonzero direction"));
            }
        }
        Ok(())
    }

    /// `2 pi d / lambda`, the phase step per element per unit spatial frequency.
    pub fn phase_step(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing / self.wavelength
    }
}

/// Angles and gains of every link, derived from positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_pos: Point3,
    pub rdars_pos: Point3,
    pub ue_pos: Vec<Point3>,
    /// Spatial frequency of the BS seen from the RDARS array.
    pub u_br_aoa: f64,
    /// Spatial frequency of the RDARS seen from the BS array.
    pub u_br_aod: f64,
    /// Spatial frequency of each UE seen from the RDARS array.
    pub u_ru_aod: Vec<f64>,
    pub kappa_br: f64,
    pub kappa_ru: Vec<f64>,
}

impl Geometry {
    pub fn n_ues(&self) -> usize {
        self.u_ru_aod.len()
    }

    /// Geometry specified directly by spatial frequencies and gains, without
    /// positions. Useful for synthetic analyses.
    pub fn synthetic(u_br_aoa: f64, u_br_aod: f64, u_ru_aod: Vec<f64>, kappa_br: f64, kappa_ru: Vec<f64>) -> Self {
        assert_eq!(u_ru_aod.len(), kappa_ru.len());
        Self {
            bs_pos: [0.0; 3],
            rdars_pos: [0.0; 3],
            ue_pos: vec![[0.0; 3]; u_ru_aod.len()],
            u_br_aoa,
            u_br_aod,
            u_ru_aod,
            kappa_br,
            kappa_ru,
        }
    }
}

/// Linear amplitude path gain `sqrt(10^(-c0/10) * distance^(-exponent))`.
///
/// The square of the result is the power attenuation.
pub fn path_gain(distance: f64, c0_db: f64, exponent: f64) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(Error::Domain(format!(
            "path loss undefined below the 1 m reference distance (got {distance} m)"
        )));
    }
    if !(exponent > 0.0) {
        return Err(Error::Domain(format!("path loss exponent must be positive (got {exponent})")));
    }
    Ok((10f64.powf(-c0_db / 10.0) * distance.powf(-exponent)).sqrt())
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine of the angle between `dir` and `axis`, clamped to [-1, 1].
fn direction_cosine(dir: Point3, axis: Point3) -> f64 {
    (dot(dir, axis) / (norm(dir) * norm(axis))).clamp(-1.0, 1.0)
}

/// Computes spatial frequencies and path gains of all links.
///
/// Departure/arrival directions point from the array towards the far end of
/// the link: BS to RDARS for the BS AoD, RDARS to BS for the RDARS AoA, and
/// RDARS to UE k for the reflected/distributed AoD.
pub fn derive_geometry(
    bs_pos: Point3,
    rdars_pos: Point3,
    ue_pos: &[Point3],
    config: &SystemConfig,
) -> Result<Geometry> {
    let bs_to_rdars = sub(rdars_pos, bs_pos);
    let d_br = norm(bs_to_rdars);
    if d_br == 0.0 {
        return Err(Error::Domain("BS and RDARS positions coincide".into()));
    }
    let kappa_br = path_gain(d_br, config.ref_pathloss_db, config.pathloss_exp_bs_rdars)?;
    let u_br_aod = direction_cosine(bs_to_rdars, config.bs_axis);
    let u_br_aoa = direction_cosine(sub(bs_pos, rdars_pos), config.rdars_axis);

    let mut u_ru_aod = Vec::with_capacity(ue_pos.len());
    let mut kappa_ru = Vec::with_capacity(ue_pos.len());
    for &ue in ue_pos {
        let link = sub(ue, rdars_pos);
        let dist = norm(link);
        if dist == 0.0 {
            return Err(Error::Domain("UE coincides with the RDARS".into()));
        }
        kappa_ru.push(path_gain(dist, config.ref_pathloss_db, config.pathloss_exp_rdars_ue)?);
        u_ru_aod.push(direction_cosine(link, config.rdars_axis));
    }

    Ok(Geometry {
        bs_pos,
        rdars_pos,
        ue_pos: ue_pos.to_vec(),
        u_br_aoa,
        u_br_aod,
        u_ru_aod,
        kappa_br,
        kappa_ru,
    })
}

/// Flat key/value scenario file (TOML syntax).
///
/// Every [`SystemConfig`] field may appear; omitted fields take the
/// [`SystemConfig::reference_defaults`] value, except that an omitted
/// `wavelength` follows `carrier_freq` and an omitted `spacing` is half a
/// wavelength. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n_tx: Option<usize>,
    pub n_elems: Option<usize>,
    pub n_connected: Option<usize>,
    pub n_ues: Option<usize>,
    pub spacing: Option<f64>,
    pub carrier_freq: Option<f64>,
    pub wavelength: Option<f64>,
    pub total_power: Option<f64>,
    /// Alternative to `total_power`, in dBm.
    pub total_power_dbm: Option<f64>,
    pub noise_power: Option<f64>,
    /// Alternative to `noise_power`, in dBm.
    pub noise_power_dbm: Option<f64>,
    pub ref_pathloss_db: Option<f64>,
    pub pathloss_exp_bs_rdars: Option<f64>,
    pub pathloss_exp_rdars_ue: Option<f64>,
    pub conv_threshold: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub max_inner_iters: Option<usize>,
    pub bisection_tol: Option<f64>,
    pub shift_nu: Option<f64>,
    pub power_iter_tol: Option<f64>,
    pub bs_axis: Option<Point3>,
    pub rdars_axis: Option<Point3>,
    pub bs_pos: Option<Point3>,
    pub rdars_pos: Option<Point3>,
    /// Fixed UE positions. When absent, UEs are dropped in the disk below.
    pub ue_pos: Option<Vec<Point3>>,
    pub ue_center: Option<Point3>,
    pub ue_radius: Option<f64>,
}

/// A resolved scenario: parameters plus the deployment template.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub bs_pos: Point3,
    pub rdars_pos: Point3,
    pub ue_pos: Option<Vec<Point3>>,
    pub ue_center: Point3,
    pub ue_radius: f64,
}

impl Scenario {
    /// The evaluation layout: BS at (0,0,15), RDARS at (50,30,15), UEs in a
    /// 20 m disk centred at (100,0,1.5).
    pub fn reference_defaults() -> Self {
        Self {
            config: SystemConfig::reference_defaults(),
            bs_pos: [0.0, 0.0, 15.0],
            rdars_pos: [50.0, 30.0, 15.0],
            ue_pos: None,
            ue_center: [100.0, 0.0, 1.5],
            ue_radius: 20.0,
        }
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| e.to_string())?;
        file.resolve().map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn geometry(&self, ue_pos: &[Point3]) -> Result<Geometry> {
        derive_geometry(self.bs_pos, self.rdars_pos, ue_pos, &self.config)
    }
}

/// Watts from whichever of the two keys is present.
fn either_unit(key: &str, watts: Option<f64>, dbm: Option<f64>) -> Result<Option<f64>> {
    match (watts, dbm) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!("both {key} and {key}_dbm given"))),
        (w, d) => Ok(w.or(d.map(dbm_to_watts))),
    }
}

impl ScenarioFile {
    pub fn resolve(self) -> Result<Scenario> {
        let d = Scenario::reference_defaults();
        let base = d.config;
        let carrier_freq = self.carrier_freq.unwrap_or(base.carrier_freq);
        let wavelength = self.wavelength.unwrap_or(SPEED_OF_LIGHT / carrier_freq);
        let config = SystemConfig {
            n_tx: self.n_tx.unwrap_or(base.n_tx),
            n_elems: self.n_elems.unwrap_or(base.n_elems),
            n_connected: self.n_connected.unwrap_or(base.n_connected),
            n_ues: self.n_ues.unwrap_or(base.n_ues),
            spacing: self.spacing.unwrap_or(wavelength / 2.0),
            carrier_freq,
            wavelength,
            total_power: either_unit("total_power", self.total_power, self.total_power_dbm)?.unwrap_or(base.total_power),
            noise_power: either_unit("noise_power", self.noise_power, self.noise_power_dbm)?.unwrap_or(base.noise_power),
            ref_pathloss_db: self.ref_pathloss_db.unwrap_or(base.ref_pathloss_db),
            pathloss_exp_bs_rdars: self.pathloss_exp_bs_rdars.unwrap_or(base.pathloss_exp_bs_rdars),
            pathloss_exp_rdars_ue: self.pathloss_exp_rdars_ue.unwrap_or(base.pathloss_exp_rdars_ue),
            conv_threshold: self.conv_threshold.unwrap_or(base.conv_threshold),
            max_outer_iters: self.max_outer_iters.unwrap_or(base.max_outer_iters),
            max_inner_iters: self.max_inner_iters.unwrap_or(base.max_inner_iters),
            bisection_tol: self.bisection_tol.unwrap_or(base.bisection_tol),
            shift_nu: self.shift_nu.unwrap_or(base.shift_nu),
            power_iter_tol: self.power_iter_tol.unwrap_or(base.power_iter_tol),
            bs_axis: self.bs_axis.unwrap_or(base.bs_axis),
            rdars_axis: self.rdars_axis.unwrap_or(base.rdars_axis),
        };
        config.validate()?;
        let scenario = Scenario {
            config,
            bs_pos: self.bs_pos.unwrap_or(d.bs_pos),
            rdars_pos: self.rdars_pos.unwrap_or(d.rdars_pos),
            ue_pos: self.ue_pos,
            ue_center: self.ue_center.unwrap_or(d.ue_center),
            ue_radius: self.ue_radius.unwrap_or(d.ue_radius),
        };
        if let Some(ues) = &scenario.ue_pos {
            if ues.len() != scenario.config.n_ues {
                return Err(Error::InvalidConfig(format!(
                    "ue_pos lists {} positions but n_ues = {}",
                    ues.len(),
                    scenario.config.n_ues
                )));
            }
        }
        if !(scenario.ue_radius >= 0.0) {
            return Err(Error::InvalidConfig("ue_radius must be nonnegative".into()));
        }
        Ok(scenario)
    }
}
