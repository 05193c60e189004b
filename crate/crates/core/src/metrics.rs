//! SINR, achievable rate, per-UE MSE and channel squared-correlation.
//!
//! Effective channels are rows `h_k` of a `K x (N_t + a)` matrix; a single
//! row passed on its own is stored as a [`CVector`] holding the row entries
//! (not conjugated), so `h_k v = h.transpose() * v`.

use std::time::Duration;

use num_complex::Complex64;

use crate::array::PassiveBeam;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Active precoders of the BS and connected elements plus the passive beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// `(N_t + a) x K`; column `k` is `v_k = [w_k; f_k]`.
    pub v: CMatrix,
    pub n_tx: usize,
    pub passive: PassiveBeam,
}

impl BeamformingSolution {
    /// BS precoder `W` (`N_t x K`).
    pub fn w(&self) -> CMatrix {
        self.v.rows(0, self.n_tx).into_owned()
    }

    /// Connected-element precoder `F` (`a x K`).
    pub fn f(&self) -> CMatrix {
        self.v.rows(self.n_tx, self.v.nrows() - self.n_tx).into_owned()
    }

    /// `trace(V V^H)`.
    pub fn power(&self) -> f64 {
        self.v.norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    /// `log2(1 + sinr)` per UE.
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

impl RateReport {
    pub fn from_sinr(sinr: Vec<f64>) -> Self {
        let rate: Vec<f64> = sinr.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect();
        let sum_rate = rate.iter().sum();
        Self {
            sinr,
            rate,
            sum_rate,
            iterations: 0,
            converged: true,
            wall_time: Duration::ZERO,
        }
    }

    pub fn min_rate(&self) -> f64 {
        self.rate.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_dims(h: &CMatrix, v: &CMatrix) -> Result<()> {
    if h.ncols() != v.nrows() || h.nrows() != v.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "channels {}x{} incompatible with precoder {}x{}",
            h.nrows(),
            h.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}

/// Per-UE SINR `|h_k v_k|^2 / (sum_{i != k} |h_k v_i|^2 + noise)`.
pub fn sinr_all(h: &CMatrix, v: &CMatrix, noise: f64) -> Result<Vec<f64>> {
    check_dims(h, v)?;
    if !(noise > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {noise}")));
    }
    let gains = h * v;
    Ok((0..h.nrows())
        .map(|k| {
            let row = gains.row(k);
            let signal = row[k].norm_sqr();
            let interference = row.iter().map(|z| z.norm_sqr()).sum::<f64>() - signal;
            signal / (interference.max(0.0) + noise)
        })
        .collect())
}

pub fn sum_rate(h: &CMatrix, v: &CMatrix, noise: f64) -> Result<RateReport> {
    Ok(RateReport::from_sinr(sinr_all(h, v, noise)?))
}

/// MSE of UE `k` with scalar receiver `mu`:
/// `1 - 2 Re(conj(mu) h_k v_k) + |mu|^2 (sum_m |h_k v_m|^2 + noise)`.
pub fn mse_k(h_k: &CVector, v: &CMatrix, k: usize, mu: Complex64, noise: f64) -> f64 {
    let gains = v.transpose() * h_k;
    let total: f64 = gains.iter().map(|z| z.norm_sqr()).sum();
    1.0 - 2.0 * (mu.conj() * gains[k]).re + mu.norm_sqr() * (total + noise)
}

/// Channel squared-correlation coefficient `|h_a h_b^H|^2 / (|h_a|^2 |h_b|^2)`.
pub fn cscc(h_a: &CVector, h_b: &CVector) -> Result<f64> {
    if h_a.len() != h_b.len() {
        return Err(Error::DimensionMismatch(format!("rows of length {} and {}", h_a.len(), h_b.len())));
    }
    let na = h_a.norm_squared();
    let nb = h_b.norm_squared();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm("cscc"));
    }
    let inner = h_b.dotc(h_a);
    Ok((inner.norm_sqr() / (na * nb)).min(1.0))
}
