//! Closed-form analysis for one and two UEs under LoS propagation.
//!
//! Notation follows the rest of the crate: `u` are spatial frequencies,
//! `du = u_ru[1] - u_ru[0]` is the UE separation seen from the RDARS and
//! `du_k = u_br_aoa - u_ru[k]` is the reflect-path mismatch of UE `k`.
//! Phases use the step `t = 2 pi d / lambda`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::array::{effective_channels, feasible_sparsities, los_channels, make_mode, steering, ModeSelection, PassiveBeam};
use crate::error::{Error, Result};
use crate::metrics::{self, BeamformingSolution};
use crate::scenario::{Geometry, SystemConfig};
use crate::{CMatrix, CVector};

/// Below this `|sin x|` the Dirichlet ratio is evaluated by its limit.
const SINGULAR_SIN: f64 = 1e-12;

/// Treats `|du|` at or below this as co-located UEs.
pub const SAME_DIRECTION_TOL: f64 = 1e-12;

/// Default separation between "much less" and "much greater" in the regime
/// test of [`proposition1_select`].
pub const DEFAULT_REGIME_FACTOR: f64 = 100.0;

/// `sin(count * x) / sin(x)`, continuous through the removable singularities
/// at `x = m pi`, where it equals `count * (-1)^(m (count - 1))`.
pub fn dirichlet_ratio(count: usize, x: f64) -> f64 {
    let c = count as f64;
    let s = x.sin();
    if s.abs() < SINGULAR_SIN {
        c * (c * x).cos() / x.cos()
    } else {
        (c * x).sin() / s
    }
}

/// Pattern of the uniform sparse subarray `{m0 + m eta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseDirichlet {
    /// Real Dirichlet ratio `S_eta(du)`.
    pub s: f64,
    /// Unit phasor `psi_{a,eta}(du)`.
    pub psi: Complex64,
    /// `s * psi`, equal to the coherent subarray sum.
    pub s_bar: Complex64,
}

/// `S_eta(du) = sin(a pi d eta du / lambda) / sin(pi d eta du / lambda)` and
/// its phase `exp(j t (m0 - 1 + (a - 1) eta / 2) du)`.
pub fn dirichlet_sparse(a: usize, eta: usize, m0: usize, d: f64, lambda: f64, du: f64) -> SparseDirichlet {
    let x = PI * d * eta as f64 * du / lambda;
    let s = dirichlet_ratio(a, x);
    let center = m0 as f64 - 1.0 + (a as f64 - 1.0) * eta as f64 / 2.0;
    let psi = Complex64::from_polar(1.0, 2.0 * PI * d / lambda * center * du);
    SparseDirichlet { s, psi, s_bar: psi * s }
}

/// Full-array pattern `D_N(du) exp(j psi_N(du))`, i.e. `sum_n exp(j t (n-1) du)`.
pub fn dirichlet_full(n: usize, d: f64, lambda: f64, du: f64) -> Complex64 {
    let x = PI * d * du / lambda;
    let phase = x * (n as f64 - 1.0);
    Complex64::from_polar(1.0, phase) * dirichlet_ratio(n, x)
}

/// `|S_eta(du)|^2 / a^2`, the two-UE correlation when the distributed path
/// dominates.
pub fn sparse_null_metric(a: usize, eta: usize, m0: usize, d: f64, lambda: f64, du: f64) -> f64 {
    let s = dirichlet_sparse(a, eta, m0, d, lambda, du).s;
    (s * s) / (a * a) as f64
}

/// Phased sums over the full array and over the connected subarray:
/// `D_N = sum_n phi_n exp(j t (n-1) du_k)` and the same restricted to the
/// mode's index set.
pub fn steered_sums(mode: &ModeSelection, d: f64, lambda: f64, phi: &PassiveBeam, du_k: f64) -> Result<(Complex64, Complex64)> {
    if phi.len() != mode.n {
        return Err(Error::DimensionMismatch(format!(
            "passive beam of length {} for N={}",
            phi.len(),
            mode.n
        )));
    }
    let t = 2.0 * PI * d / lambda;
    let term = |i: usize| phi.coeffs[i] * Complex64::from_polar(1.0, t * i as f64 * du_k);
    let full = (0..mode.n).map(term).sum();
    let sub = mode.positions().map(term).sum();
    Ok((full, sub))
}

/// Optimal single-UE design.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleUeSolution {
    pub solution: BeamformingSolution,
    /// Power on the BS precoder.
    pub p_b: f64,
    /// Power on the connected elements.
    pub p_r: f64,
    pub gamma_max: f64,
}

impl SingleUeSolution {
    /// The split written in amplitude form, `(sqrt(P_b), sqrt(P_r))`.
    pub fn amplitude_split(&self) -> (f64, f64) {
        (self.p_b.sqrt(), self.p_r.sqrt())
    }
}

/// `kappa_ru^2 P (kappa_br^2 (N - a)^2 N_t + a) / noise`.
pub fn single_ue_gamma_max(config: &SystemConfig, kappa_br: f64, kappa_ru: f64) -> f64 {
    let reflect = reflect_gain(config, kappa_br);
    kappa_ru * kappa_ru * config.total_power * (reflect + config.n_connected as f64) / config.noise_power
}

fn reflect_gain(config: &SystemConfig, kappa_br: f64) -> f64 {
    let free = (config.n_elems - config.n_connected) as f64;
    kappa_br * kappa_br * free * free * config.n_tx as f64
}

/// Phase alignment, maximum-ratio precoders and the optimal power split for
/// a single UE. The achieved SNR does not depend on the sparsity level.
pub fn single_ue_solution(geometry: &Geometry, config: &SystemConfig, mode: &ModeSelection) -> Result<SingleUeSolution> {
    if geometry.n_ues() != 1 {
        return Err(Error::InvalidConfig(format!(
            "single-UE solution needs K = 1, geometry has {}",
            geometry.n_ues()
        )));
    }
    if mode.n != config.n_elems || mode.a() != config.n_connected {
        return Err(Error::DimensionMismatch("mode selection does not match the configuration".into()));
    }
    let (d, lambda) = (config.spacing, config.wavelength);
    let (n, n_tx, a) = (config.n_elems, config.n_tx, config.n_connected);
    let u_ru = geometry.u_ru_aod[0];
    let kappa_ru = geometry.kappa_ru[0];
    let t = 2.0 * PI * d / lambda;

    // arg b(N, u_ru)_n - arg b(N, u_br_aoa)_n
    let phases: Vec<f64> = (0..n).map(|i| t * i as f64 * (u_ru - geometry.u_br_aoa)).collect();
    let passive = PassiveBeam::from_phases(&phases);

    let reflect = reflect_gain(config, geometry.kappa_br);
    let denom = reflect + a as f64;
    let p_b = config.total_power * reflect / denom;
    let p_r = config.total_power - p_b;

    let b_tx = steering(n_tx, geometry.u_br_aod, d, lambda);
    let w = b_tx.scale(p_b.sqrt() / b_tx.norm());
    let b_ru = steering(n, u_ru, d, lambda);
    let f_unnorm = CVector::from_iterator(a, mode.positions().map(|p| b_ru[p]));
    let f = f_unnorm.scale(p_r.sqrt() / (a as f64).sqrt());

    let mut v = CMatrix::zeros(n_tx + a, 1);
    v.view_mut((0, 0), (n_tx, 1)).copy_from(&w);
    v.view_mut((n_tx, 0), (a, 1)).copy_from(&f);

    Ok(SingleUeSolution {
        solution: BeamformingSolution { v, n_tx, passive },
        p_b,
        p_r,
        gamma_max: single_ue_gamma_max(config, geometry.kappa_br, kappa_ru),
    })
}

/// Linear precoding schemes with closed-form two-UE SINRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoUeScheme {
    Mrt,
    Zf,
    Mmse,
}

impl FromStr for TwoUeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MRT" => Ok(Self::Mrt),
            "ZF" => Ok(Self::Zf),
            "MMSE" => Ok(Self::Mmse),
            _ => Err(Error::Unknown {
                kind: "precoding scheme",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for TwoUeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mrt => "MRT",
            Self::Zf => "ZF",
            Self::Mmse => "MMSE",
        })
    }
}

/// Two-UE SINRs given per-UE power `p`, channel norms `beta` and correlation `eps`.
pub fn two_ue_sinr(scheme: TwoUeScheme, p: [f64; 2], beta: [f64; 2], eps: f64, noise: f64) -> Result<[f64; 2]> {
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Domain("per-UE powers must be nonnegative".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("correlation {eps} outside [0, 1]")));
    }
    if !(noise > 0.0) {
        return Err(Error::Domain("noise power must be positive".into()));
    }
    let mut out = [0.0; 2];
    for k in 0..2 {
        let other = 1 - k;
        let snr = p[k] * beta[k] * beta[k] / noise;
        let loss = match scheme {
            TwoUeScheme::Mrt => {
                let x = p[other] * beta[k] * beta[k] * eps / noise;
                x / (1.0 + x)
            }
            TwoUeScheme::Zf => eps,
            TwoUeScheme::Mmse => {
                let x = p[other] * beta[other] * beta[other] / noise;
                x / (1.0 + x) * eps
            }
        };
        out[k] = snr * (1.0 - loss);
    }
    Ok(out)
}

/// Intermediate quantities of the two-UE correlation analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoUeAnalysis {
    pub delta_u: f64,
    pub delta_u_k: [f64; 2],
    /// Reflect-path amplitude `kappa_br kappa_ru,k (D_N - S~_eta)`.
    pub xi: [Complex64; 2],
    /// Channel norms `sqrt(|xi_k|^2 N_t + kappa_ru,k^2 a)`.
    pub beta: [f64; 2],
    /// `sqrt(N_t) xi_k`.
    pub d_k: [Complex64; 2],
    /// Distributed-path cross term `kappa_ru,1 kappa_ru,2 S_eta(du) psi(du)`.
    pub s12: Complex64,
    pub eps: f64,
}

fn require_two(geometry: &Geometry) -> Result<()> {
    if geometry.n_ues() != 2 {
        return Err(Error::InvalidConfig(format!(
            "two-UE analysis needs K = 2, geometry has {}",
            geometry.n_ues()
        )));
    }
    Ok(())
}

/// Evaluates the two-UE correlation in closed form for a given mode and
/// passive beam.
pub fn analyze_two_ue(geometry: &Geometry, config: &SystemConfig, mode: &ModeSelection, phi: &PassiveBeam) -> Result<TwoUeAnalysis> {
    require_two(geometry)?;
    let (d, lambda) = (config.spacing, config.wavelength);
    let a = mode.a() as f64;
    let delta_u = geometry.u_ru_aod[1] - geometry.u_ru_aod[0];
    let delta_u_k = [
        geometry.u_br_aoa - geometry.u_ru_aod[0],
        geometry.u_br_aoa - geometry.u_ru_aod[1],
    ];
    let sqrt_nt = (config.n_tx as f64).sqrt();
    let mut xi = [Complex64::new(0.0, 0.0); 2];
    let mut beta = [0.0; 2];
    let mut d_k = [Complex64::new(0.0, 0.0); 2];
    for k in 0..2 {
        let (full, sub) = steered_sums(mode, d, lambda, phi, delta_u_k[k])?;
        xi[k] = (full - sub) * (geometry.kappa_br * geometry.kappa_ru[k]);
        d_k[k] = xi[k] * sqrt_nt;
        beta[k] = (xi[k].norm_sqr() * config.n_tx as f64 + geometry.kappa_ru[k].powi(2) * a).sqrt();
    }
    let sd = dirichlet_sparse(mode.a(), mode.eta, mode.m0, d, lambda, delta_u);
    let s12 = sd.s_bar * (geometry.kappa_ru[0] * geometry.kappa_ru[1]);
    let num = (d_k[0] * d_k[1].conj() + s12).norm_sqr();
    let den = (d_k[0].norm_sqr() + geometry.kappa_ru[0].powi(2) * a) * (d_k[1].norm_sqr() + geometry.kappa_ru[1].powi(2) * a);
    if den == 0.0 {
        return Err(Error::ZeroNorm("two-UE correlation"));
    }
    Ok(TwoUeAnalysis {
        delta_u,
        delta_u_k,
        xi,
        beta,
        d_k,
        s12,
        eps: (num / den).min(1.0),
    })
}

/// Two-UE correlation for a given mode and passive beam, in closed form.
pub fn cscc_closed(geometry: &Geometry, config: &SystemConfig, mode: &ModeSelection, phi: &PassiveBeam) -> Result<f64> {
    Ok(analyze_two_ue(geometry, config, mode, phi)?.eps)
}

/// Midpoint of the two UEs' spatial frequencies.
pub fn reference_direction(geometry: &Geometry) -> Result<f64> {
    require_two(geometry)?;
    Ok((geometry.u_ru_aod[0] + geometry.u_ru_aod[1]) / 2.0)
}

/// Passive beam steering the reflect path towards `u_ref`:
/// `phi_n = t (n - 1) (u_ref - u_br_aoa)`.
pub fn steer_towards(geometry: &Geometry, config: &SystemConfig, u_ref: f64) -> PassiveBeam {
    let t = config.phase_step();
    let phases: Vec<f64> = (0..config.n_elems)
        .map(|i| t * i as f64 * (u_ref - geometry.u_br_aoa))
        .collect();
    PassiveBeam::from_phases(&phases)
}

/// Passive beam pointing at the midpoint of the two UEs.
pub fn reference_beam(geometry: &Geometry, config: &SystemConfig) -> Result<PassiveBeam> {
    Ok(steer_towards(geometry, config, reference_direction(geometry)?))
}

/// Sparsity levels that put a null of the subarray pattern on the second UE:
/// `{round(q lambda / (a d |du|)) : q = 1..a-1}` intersected with `feasible`.
///
/// The pattern is even in `du`, so the magnitude of the separation is used.
pub fn r_set(a: usize, d: f64, lambda: f64, du: f64, feasible: &[usize]) -> Result<Vec<usize>> {
    if du.abs() <= SAME_DIRECTION_TOL {
        return Err(Error::Domain("r_set undefined for co-located UEs (du = 0)".into()));
    }
    let mut out: Vec<usize> = (1..a)
        .filter_map(|q| {
            let eta = (q as f64 * lambda / (a as f64 * d * du.abs())).round();
            (eta >= 1.0 && eta.is_finite()).then_some(eta as usize)
        })
        .filter(|eta| feasible.contains(eta))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Terms of the midpoint-steered two-UE correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct Case2Terms {
    /// Full-array minus subarray pattern at `du / 2`.
    pub x: Complex64,
    /// `N_t kappa_br^2 |x|^2 exp(j 2 arg x)`.
    pub x_tilde: Complex64,
    /// `kappa_ru,k^2 a + kappa_br^2 kappa_ru,k^2 |x|^2 N_t`.
    pub x_bar: [f64; 2],
    pub eps_bar: f64,
}

/// Correlation with the passive beam pointed at the UEs' midpoint, evaluated
/// through Dirichlet kernels at half the separation.
pub fn case2_terms(geometry: &Geometry, config: &SystemConfig, eta: usize) -> Result<Case2Terms> {
    require_two(geometry)?;
    let (d, lambda) = (config.spacing, config.wavelength);
    let (n, a, nt) = (config.n_elems, config.n_connected, config.n_tx as f64);
    let mode = make_mode(n, a, eta, 1)?;
    let du = geometry.u_ru_aod[1] - geometry.u_ru_aod[0];
    let half = du / 2.0;
    let x = dirichlet_full(n, d, lambda, half) - dirichlet_sparse(a, eta, mode.m0, d, lambda, half).s_bar;
    let kb2 = geometry.kappa_br * geometry.kappa_br;
    let x_tilde = Complex64::from_polar(nt * kb2 * x.norm_sqr(), 2.0 * x.arg());
    let x_bar = [0, 1].map(|k| {
        let kr2 = geometry.kappa_ru[k].powi(2);
        kr2 * a as f64 + kb2 * kr2 * x.norm_sqr() * nt
    });
    let s_bar = dirichlet_sparse(a, eta, mode.m0, d, lambda, du).s_bar;
    let k12 = geometry.kappa_ru[0].powi(2) * geometry.kappa_ru[1].powi(2);
    let eps_bar = (k12 * (x_tilde + s_bar).norm_sqr() / (x_bar[0] * x_bar[1])).min(1.0);
    Ok(Case2Terms { x, x_tilde, x_bar, eps_bar })
}

pub fn case2_cscc(geometry: &Geometry, config: &SystemConfig, eta: usize) -> Result<f64> {
    Ok(case2_terms(geometry, config, eta)?.eps_bar)
}

/// Size of the reflect-path cross term relative to the distributed-path
/// term, `|D~_1 D~_2^*| / |kappa_ru,1 kappa_ru,2 S_eta(du)|`, under the
/// midpoint beam. Small values mean the distributed link dominates.
pub fn subcase1_diagnostic(geometry: &Geometry, config: &SystemConfig, eta: usize) -> Result<f64> {
    let terms = case2_terms(geometry, config, eta)?;
    let du = geometry.u_ru_aod[1] - geometry.u_ru_aod[0];
    let s = dirichlet_sparse(config.n_connected, eta, 1, config.spacing, config.wavelength, du).s;
    let reflect = terms.x_tilde.norm() * geometry.kappa_ru[0] * geometry.kappa_ru[1];
    Ok(reflect / (geometry.kappa_ru[0] * geometry.kappa_ru[1] * s.abs()))
}

/// Channel regime that decides how the sparsity level is chosen for two UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsityCase {
    /// Distributed path dominates; place a subarray null on the other UE.
    Subcase1,
    /// Reflect path dominates; every level is equivalent.
    Subcase2,
    /// Intermediate regime; exhaustive scan of the midpoint-beam correlation.
    Case2,
    /// UEs share a direction; every level is equivalent.
    Case3,
}

impl fmt::Display for SparsityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Subcase1 => "SUBCASE1",
            Self::Subcase2 => "SUBCASE2",
            Self::Case2 => "CASE2",
            Self::Case3 => "CASE3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsitySelection {
    /// Optimal sparsity levels, increasing.
    pub etas: Vec<usize>,
    pub case: SparsityCase,
    /// `((N + a)^2 N_t / a) kappa_br^2`.
    pub ratio: f64,
    /// Set when the null-placement set came out empty and the levels were
    /// picked by minimizing `|S_eta|^2 / a^2` instead.
    pub fallback: bool,
}

impl SparsitySelection {
    /// A single representative level: the member that best serves the
    /// selection criterion, smallest on ties.
    pub fn preferred(&self, geometry: &Geometry, config: &SystemConfig) -> usize {
        match self.case {
            SparsityCase::Subcase1 => {
                let du = geometry.u_ru_aod[1] - geometry.u_ru_aod[0];
                argmin_by(&self.etas, |eta| {
                    sparse_null_metric(config.n_connected, eta, 1, config.spacing, config.wavelength, du)
                })
            }
            _ => self.etas[0],
        }
    }
}

/// Smallest-index minimizer of `f` over `etas`.
fn argmin_by(etas: &[usize], f: impl Fn(usize) -> f64) -> usize {
    let mut best = etas[0];
    let mut best_val = f(best);
    for &eta in &etas[1..] {
        let v = f(eta);
        if v < best_val {
            best = eta;
            best_val = v;
        }
    }
    best
}

/// Regime ratio `((N + a)^2 N_t / a) kappa_br^2`.
pub fn regime_ratio(config: &SystemConfig, kappa_br: f64) -> f64 {
    let (n, a) = (config.n_elems as f64, config.n_connected as f64);
    (n + a).powi(2) * config.n_tx as f64 / a * kappa_br * kappa_br
}

/// Chooses the two-UE sparsity level from the channel regime.
///
/// `regime_factor` is how far the regime ratio must sit from 1 to count as
/// "much greater" (`>= factor`) or "much less" (`<= 1 / factor`).
pub fn proposition1_select(geometry: &Geometry, config: &SystemConfig, regime_factor: f64) -> Result<SparsitySelection> {
    require_two(geometry)?;
    if !(regime_factor >= 1.0) {
        return Err(Error::Domain(format!("regime factor must be >= 1, got {regime_factor}")));
    }
    let feasible = feasible_sparsities(config.n_elems, config.n_connected)?;
    let du = geometry.u_ru_aod[1] - geometry.u_ru_aod[0];
    let ratio = regime_ratio(config, geometry.kappa_br);
    let select = |etas, case, fallback| SparsitySelection {
        etas,
        case,
        ratio,
        fallback,
    };

    if du.abs() <= SAME_DIRECTION_TOL {
        return Ok(select(feasible, SparsityCase::Case3, false));
    }
    if ratio >= regime_factor {
        return Ok(select(feasible, SparsityCase::Subcase2, false));
    }
    if ratio <= 1.0 / regime_factor {
        let r = r_set(config.n_connected, config.spacing, config.wavelength, du, &feasible)?;
        if !r.is_empty() {
            return Ok(select(r, SparsityCase::Subcase1, false));
        }
        let best = argmin_by(&feasible, |eta| {
            sparse_null_metric(config.n_connected, eta, 1, config.spacing, config.wavelength, du)
        });
        return Ok(select(vec![best], SparsityCase::Subcase1, true));
    }
    let mut scores = Vec::with_capacity(feasible.len());
    for &eta in &feasible {
        scores.push(case2_cscc(geometry, config, eta)?);
    }
    let best = argmin_by(&feasible, |eta| scores[eta - 1]);
    Ok(select(vec![best], SparsityCase::Case2, false))
}

/// Correlation of the assembled effective channels of UEs 0 and 1.
pub fn cscc_direct(geometry: &Geometry, config: &SystemConfig, mode: &ModeSelection, phi: &PassiveBeam) -> Result<f64> {
    require_two(geometry)?;
    let h = effective_channels(&los_channels(geometry, config), phi, mode)?;
    metrics::cscc(&h.row(0).transpose(), &h.row(1).transpose())
}
