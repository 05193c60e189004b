//! Steering vectors, sparse mode selection, LoS channels and effective channels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{Geometry, SystemConfig};
use crate::{CMatrix, CVector};

/// ULA steering vector: entry `m` (0-based) is `exp(j 2 pi u m d / lambda)`.
pub fn steering(n: usize, u: f64, d: f64, lambda: f64) -> CVector {
    let step = 2.0 * std::f64::consts::PI * u * d / lambda;
    CVector::from_fn(n, |m, _| Complex64::from_polar(1.0, step * m as f64))
}

/// Steering vector restricted to the connected elements, zero elsewhere.
pub fn sparse_steering(n: usize, u: f64, d: f64, lambda: f64, mode: &ModeSelection) -> Result<CVector> {
    mode.check_len(n)?;
    let mut b = steering(n, u, d, lambda);
    for (entry, &on) in b.iter_mut().zip(&mode.connected) {
        if !on {
            *entry = Complex64::new(0.0, 0.0);
        }
    }
    Ok(b)
}

/// Sparsity levels `{1, ..., floor((n-1)/(a-1))}`; `{1}` when `a == 1`.
pub fn feasible_sparsities(n: usize, a: usize) -> Result<Vec<usize>> {
    if a == 0 || a > n {
        return Err(Error::InvalidConfig(format!("need 1 <= a <= N, got a={a}, N={n}")));
    }
    if a == 1 {
        return Ok(vec![1]);
    }
    Ok((1..=(n - 1) / (a - 1)).collect())
}

/// Which RDARS elements are in connection mode.
///
/// The connected set is the arithmetic progression `m0 + m * eta` for
/// `m = 0..a`, with 1-based element indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSelection {
    pub n: usize,
    pub eta: usize,
    pub m0: usize,
    /// 1-based indices of the connected elements, increasing.
    pub index_set: Vec<usize>,
    /// `connected[n]` is true iff element `n + 1` is in the index set.
    pub connected: Vec<bool>,
}

impl ModeSelection {
    pub fn new(n: usize, a: usize, eta: usize, m0: usize) -> Result<Self> {
        if a == 0 || a > n {
            return Err(Error::InvalidConfig(format!("need 1 <= a <= N, got a={a}, N={n}")));
        }
        if m0 == 0 || eta == 0 {
            return Err(Error::InvalidConfig("m0 and eta must be at least 1".into()));
        }
        let span = (a - 1) * eta;
        if m0 + span > n {
            return Err(Error::InfeasibleSparsity { n, m0, span });
        }
        let index_set: Vec<usize> = (0..a).map(|m| m0 + m * eta).collect();
        let mut connected = vec![false; n];
        for &z in &index_set {
            connected[z - 1] = true;
        }
        Ok(Self {
            n,
            eta,
            m0,
            index_set,
            connected,
        })
    }

    /// Number of connected elements.
    pub fn a(&self) -> usize {
        self.index_set.len()
    }

    /// 0-based positions of the connected elements.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.index_set.iter().map(|&z| z - 1)
    }

    /// Binary indicator vector `a(eta)`.
    pub fn a_vec(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, self.connected.iter().map(|&c| f64::from(u8::from(c))))
    }

    /// Diagonal mode switching matrix `A(eta)`.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.a_vec())
    }

    /// `N x a` selection matrix: the columns of `A(eta)` that contain a one.
    pub fn a_tilde(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.n, self.a());
        for (col, row) in self.positions().enumerate() {
            t[(row, col)] = 1.0;
        }
        t
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch(format!(
                "mode selection built for N={} used with N={n}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Builds the mode selection for `(n, a, eta, m0)`.
pub fn make_mode(n: usize, a: usize, eta: usize, m0: usize) -> Result<ModeSelection> {
    ModeSelection::new(n, a, eta, m0)
}

/// BS-RDARS and RDARS-UE channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `N x N_t`.
    pub g: CMatrix,
    /// One length-`N` vector per UE.
    pub h_r: Vec<CVector>,
}

impl ChannelSet {
    pub fn n_elems(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_ues(&self) -> usize {
        self.h_r.len()
    }
}

/// Rank-one LoS channels from the geometry.
pub fn los_channels(geometry: &Geometry, config: &SystemConfig) -> ChannelSet {
    let (d, lambda) = (config.spacing, config.wavelength);
    let aoa = steering(config.n_elems, geometry.u_br_aoa, d, lambda);
    let aod = steering(config.n_tx, geometry.u_br_aod, d, lambda);
    let g = (aoa * aod.adjoint()).scale(geometry.kappa_br);
    let h_r = geometry
        .u_ru_aod
        .iter()
        .zip(&geometry.kappa_ru)
        .map(|(&u, &kappa)| steering(config.n_elems, u, d, lambda).scale(kappa))
        .collect();
    ChannelSet { g, h_r }
}

/// Unit-modulus reflection coefficients, one per RDARS element.
///
/// Entry `n` is `exp(j phi_n)`, the phase a reflected signal picks up at
/// element `n`; the passive matrix is `diag(coeffs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveBeam {
    pub coeffs: CVector,
}

impl PassiveBeam {
    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            coeffs: CVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p))),
        }
    }

    /// All-ones beam (zero phase everywhere).
    pub fn identity(n: usize) -> Self {
        Self {
            coeffs: CVector::from_element(n, Complex64::new(1.0, 0.0)),
        }
    }

    /// Projects arbitrary nonzero entries onto the unit circle; zero entries
    /// become 1.
    pub fn from_unnormalized(v: &CVector) -> Self {
        Self {
            coeffs: v.map(unit_phase),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.arg()).collect()
    }

    /// Largest deviation of `|coeff|` from one.
    pub fn modulus_error(&self) -> f64 {
        self.coeffs.iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn unit_phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 && r.is_finite() {
        z / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Effective channel row of UE `k`: `[h_r^H (I - A) Phi G, h_r^H A_tilde]`,
/// of length `N_t + a`.
pub fn effective_channel(
    channels: &ChannelSet,
    passive: &PassiveBeam,
    mode: &ModeSelection,
    k: usize,
) -> Result<CVector> {
    let n = channels.n_elems();
    mode.check_len(n)?;
    if passive.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "passive beam has {} entries, RDARS has {n}",
            passive.len()
        )));
    }
    let h_r = channels.h_r.get(k).ok_or(Error::IndexOutOfRange {
        index: k,
        len: channels.n_ues(),
    })?;
    if h_r.len() != n {
        return Err(Error::DimensionMismatch(format!("h_r[{k}] has length {}", h_r.len())));
    }
    let n_tx = channels.n_tx();
    let a = mode.a();
    // Reflected weights: conj(h_r[n]) * phi[n] on reflecting elements only.
    let weights = CVector::from_fn(n, |i, _| {
        if mode.connected[i] {
            Complex64::new(0.0, 0.0)
        } else {
            h_r[i].conj() * passive.coeffs[i]
        }
    });
    let mut row = CVector::zeros(n_tx + a);
    // (weights^T G)^T = G^T weights
    let left = channels.g.transpose() * &weights;
    row.rows_mut(0, n_tx).copy_from(&left);
    for (m, pos) in mode.positions().enumerate() {
        row[n_tx + m] = h_r[pos].conj();
    }
    Ok(row)
}

/// Stacks every UE's effective channel as the rows of a `K x (N_t + a)` matrix.
pub fn effective_channels(channels: &ChannelSet, passive: &PassiveBeam, mode: &ModeSelection) -> Result<CMatrix> {
    let k = channels.n_ues();
    let width = channels.n_tx() + mode.a();
    let mut h = CMatrix::zeros(k, width);
    for ue in 0..k {
        let row = effective_channel(channels, passive, mode, ue)?;
        h.row_mut(ue).copy_from(&row.transpose());
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA: f64 = 1.0;
    const D: f64 = 0.5;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CVector, b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn steering_examples() {
        assert!(close(&steering(1, 0.37, D, LAMBDA), &[c(1.0, 0.0)], 0.0));
        assert!(close(&steering(2, 0.0, D, LAMBDA), &[c(1.0, 0.0); 2], 0.0));
        let alt = [c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        assert!(close(&steering(4, 1.0, D, LAMBDA), &alt, 1e-12));
        assert_eq!(steering(7, -0.3, D, LAMBDA)[0], c(1.0, 0.0));
    }

    #[test]
    fn sparse_steering_examples() {
        let full = make_mode(5, 5, 1, 1).unwrap();
        assert_eq!(sparse_steering(5, 0.2, D, LAMBDA, &full).unwrap(), steering(5, 0.2, D, LAMBDA));

        let three = make_mode(9, 3, 4, 1).unwrap();
        let s = sparse_steering(9, 0.0, D, LAMBDA, &three).unwrap();
        let ones: Vec<f64> = s.iter().map(|z| z.re).collect();
        assert_eq!(ones, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);

        let m = make_mode(4, 2, 3, 1).unwrap();
        let s = sparse_steering(4, 1.0, D, LAMBDA, &m).unwrap();
        assert!(close(&s, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)], 1e-12));

        assert!(sparse_steering(5, 0.0, D, LAMBDA, &m).is_err());
    }

    #[test]
    fn make_mode_examples() {
        assert_eq!(make_mode(9, 3, 4, 1).unwrap().index_set, vec![1, 5, 9]);
        assert!(matches!(make_mode(9, 3, 5, 1), Err(Error::InfeasibleSparsity { .. })));
        let m = make_mode(128, 20, 6, 1).unwrap();
        assert_eq!(m.index_set.len(), 20);
        assert_eq!(m.index_set[1], 7);
        assert_eq!(*m.index_set.last().unwrap(), 115);
    }

    #[test]
    fn feasible_sparsity_examples() {
        assert_eq!(feasible_sparsities(128, 20).unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(feasible_sparsities(5, 5).unwrap(), vec![1]);
        assert_eq!(feasible_sparsities(9, 3).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(feasible_sparsities(9, 1).unwrap(), vec![1]);
        assert!(feasible_sparsities(3, 4).is_err());
        // every listed level is constructible, the next one is not
        for (n, a) in [(128, 20), (32, 4), (9, 3), (17, 5)] {
            let f = feasible_sparsities(n, a).unwrap();
            for &eta in &f {
                make_mode(n, a, eta, 1).unwrap();
            }
            assert!(make_mode(n, a, f.len() + 1, 1).is_err());
        }
    }

    #[test]
    fn mode_matrices() {
        let m = make_mode(10, 3, 3, 2).unwrap();
        let at = m.a_tilde();
        assert_eq!(at.transpose() * &at, DMatrix::identity(3, 3));
        assert_eq!(m.a_matrix() * &at, at);
        assert_eq!(m.a_vec().sum(), 3.0);
        for (col, &z) in m.index_set.iter().enumerate() {
            assert_eq!(at[(z - 1, col)], 1.0);
            assert_eq!(at.column(col).sum(), 1.0);
        }
    }

    fn unit_geometry(n_ues: usize) -> (Geometry, SystemConfig) {
        let mut cfg = SystemConfig::reference_defaults().with_sizes(2, 2, 1, n_ues);
        cfg.wavelength = LAMBDA;
        cfg.spacing = D;
        let g = Geometry::synthetic(0.0, 0.0, vec![0.0; n_ues], 1.0, vec![1.0; n_ues]);
        (g, cfg)
    }

    #[test]
    fn los_channel_examples() {
        let (mut g, mut cfg) = unit_geometry(1);
        let ch = los_channels(&g, &cfg);
        assert_eq!(ch.g, CMatrix::from_element(2, 2, c(1.0, 0.0)));

        cfg.n_tx = 1;
        cfg.n_elems = 1;
        g.kappa_br = 0.3;
        let ch = los_channels(&g, &cfg);
        assert_eq!(ch.g, CMatrix::from_element(1, 1, c(0.3, 0.0)));
    }

    #[test]
    fn los_channel_norms_and_rank() {
        let mut cfg = SystemConfig::reference_defaults().with_sizes(6, 10, 3, 2);
        cfg.wavelength = LAMBDA;
        cfg.spacing = D;
        let g = Geometry::synthetic(0.31, -0.62, vec![0.1, 0.7], 0.02, vec![0.5, 0.25]);
        let ch = los_channels(&g, &cfg);
        assert!((ch.g.norm() - 0.02 * (60f64).sqrt()).abs() < 1e-12);
        let sv = ch.g.clone().singular_values();
        assert!(sv[1] < 1e-12 * sv[0]);
        assert!((ch.h_r[1].norm() - 0.25 * (10f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn effective_channel_two_element_case() {
        // N = 2, a = 1 (element 1 connected), unit gains, zero angles.
        let (g, cfg) = unit_geometry(1);
        let ch = los_channels(&g, &cfg);
        let mode = make_mode(2, 1, 1, 1).unwrap();
        let h = effective_channel(&ch, &PassiveBeam::identity(2), &mode, 0).unwrap();
        // left block: G row of the single reflecting element = [1, 1]
        assert!(close(&h, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 1e-15));
    }

    #[test]
    fn effective_channel_all_connected() {
        let mut cfg = SystemConfig::reference_defaults().with_sizes(3, 5, 5, 1);
        cfg.wavelength = LAMBDA;
        cfg.spacing = D;
        let g = Geometry::synthetic(0.2, 0.4, vec![-0.3], 0.5, vec![0.7]);
        let ch = los_channels(&g, &cfg);
        let mode = make_mode(5, 5, 1, 1).unwrap();
        let h = effective_channel(&ch, &PassiveBeam::from_phases(&[0.3; 5]), &mode, 0).unwrap();
        assert!(h.rows(0, 3).iter().all(|z| z.norm() == 0.0));
        let expected = ch.h_r[0].conjugate();
        assert!(close(&h.rows(3, 5).into_owned(), expected.as_slice(), 0.0));
        assert!(effective_channel(&ch, &PassiveBeam::identity(5), &mode, 1).is_err());
    }

    #[test]
    fn effective_channel_matches_matrix_product() {
        let mut cfg = SystemConfig::reference_defaults().with_sizes(4, 9, 3, 2);
        cfg.wavelength = LAMBDA;
        cfg.spacing = D;
        let geo = Geometry::synthetic(0.13, -0.4, vec![0.5, -0.75], 0.8, vec![0.3, 1.1]);
        let ch = los_channels(&geo, &cfg);
        let mode = make_mode(9, 3, 3, 2).unwrap();
        let phi = PassiveBeam::from_phases(&[0.1, -2.0, 0.5, 1.7, 3.0, -0.2, 0.9, 2.2, -1.1]);
        let a = mode.a_matrix().map(|x| c(x, 0.0));
        let at = mode.a_tilde().map(|x| c(x, 0.0));
        let abar = CMatrix::identity(9, 9) - a;
        let big_phi = CMatrix::from_diagonal(&phi.coeffs);
        for k in 0..2 {
            let hr_h = ch.h_r[k].adjoint();
            let left = &hr_h * &abar * &big_phi * &ch.g;
            let right = &hr_h * &at;
            let h = effective_channel(&ch, &phi, &mode, k).unwrap();
            for j in 0..4 {
                assert!((h[j] - left[(0, j)]).norm() < 1e-14);
            }
            for j in 0..3 {
                assert!((h[4 + j] - right[(0, j)]).norm() < 1e-14);
            }
            assert!((h.rows(4, 3).norm() - geo.kappa_ru[k] * 3f64.sqrt()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sparse_steering_is_masked_steering(n in 2usize..40, a in 1usize..6, u in -1.0f64..1.0, eta_pick in 0usize..100) {
            prop_assume!(a <= n);
            let f = feasible_sparsities(n, a).unwrap();
            let eta = f[eta_pick % f.len()];
            let mode = make_mode(n, a, eta, 1).unwrap();
            let b = steering(n, u, D, LAMBDA);
            let s = sparse_steering(n, u, D, LAMBDA, &mode).unwrap();
            let masked = mode.a_matrix().map(|x| c(x, 0.0)) * &b;
            prop_assert_eq!(&s, &masked);
            let selected = mode.a_tilde().map(|x| c(x, 0.0)).transpose() * &b;
            let nonzero: Vec<Complex64> = mode.positions().map(|p| s[p]).collect();
            prop_assert_eq!(selected.as_slice(), nonzero.as_slice());
        }

        #[test]
        fn common_phase_on_passive_beam_keeps_left_magnitudes(theta in -3.2f64..3.2, seed_phase in -3.0f64..3.0) {
            let mut cfg = SystemConfig::reference_defaults().with_sizes(4, 8, 2, 1);
            cfg.wavelength = LAMBDA;
            cfg.spacing = D;
            let geo = Geometry::synthetic(0.3, 0.1, vec![-0.45], 0.9, vec![0.6]);
            let ch = los_channels(&geo, &cfg);
            let mode = make_mode(8, 2, 3, 1).unwrap();
            let phases: Vec<f64> = (0..8).map(|i| seed_phase * i as f64).collect();
            let p0 = PassiveBeam::from_phases(&phases);
            let p1 = PassiveBeam { coeffs: p0.coeffs.map(|z| z * Complex64::from_polar(1.0, theta)) };
            let h0 = effective_channel(&ch, &p0, &mode, 0).unwrap();
            let h1 = effective_channel(&ch, &p1, &mode, 0).unwrap();
            let rot = Complex64::from_polar(1.0, theta);
            for j in 0..4 {
                prop_assert!((h0[j].norm() - h1[j].norm()).abs() < 1e-12);
                prop_assert!((h0[j] * rot - h1[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn compact_full_array_right_block_is_conjugate_channel() {
        let mut cfg = SystemConfig::reference_defaults().with_sizes(2, 6, 6, 1);
        cfg.wavelength = LAMBDA;
        cfg.spacing = D;
        let geo = Geometry::synthetic(0.0, 0.0, vec![0.55], 0.1, vec![0.9]);
        let ch = los_channels(&geo, &cfg);
        let mode = make_mode(6, 6, 1, 1).unwrap();
        let h = effective_channel(&ch, &PassiveBeam::identity(6), &mode, 0).unwrap();
        assert_eq!(h.rows(2, 6).into_owned(), ch.h_r[0].conjugate());
    }
}
