//! WMMSE-based alternating optimization (WA) for an arbitrary number of UEs.
//!
//! At a fixed sparsity level the solver alternates four block updates:
//! MMSE receivers, MSE weights, precoders under the total power budget, and
//! the passive phases. The phase step minimizes a unit-modulus quadratic by
//! lifting it to `max p^H D p, |p_n| = 1` and running the shifted power
//! iteration `p <- exp(j arg((D + nu I) p))`. The sparsity level itself is
//! picked by exhaustive search over the feasible set.
//!
//! The surrogate objective is `sum_k zeta_k e_k - ln zeta_k` (natural log);
//! reported rates are in bits.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::array::{effective_channels, feasible_sparsities, los_channels, make_mode, unit_phase, ChannelSet, ModeSelection, PassiveBeam};
use crate::error::{Error, Result};
use crate::metrics::{self, BeamformingSolution, RateReport};
use crate::scenario::{Geometry, SystemConfig};
use crate::{CMatrix, CVector};

/// Relative margin by which another sparsity level must beat the incumbent to
/// replace it in [`sparsity_search`].
pub const SPARSITY_TIE_RTOL: f64 = 1e-6;

/// Eigenvalues below this fraction of the largest are treated as zero in the
/// precoder update.
const NULLSPACE_RTOL: f64 = 1e-12;

/// Bisection steps after the bracket is found.
const MAX_BISECTION_STEPS: usize = 2000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Auxiliary variables and traces of one fixed-sparsity run.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    /// Scalar receivers.
    pub mu: Vec<Complex64>,
    /// MSE weights.
    pub zeta: Vec<f64>,
    /// Lagrange multiplier of the power constraint.
    pub rho: f64,
    pub solution: BeamformingSolution,
    pub mode: ModeSelection,
    /// Surrogate objective: the initial value, then one entry after each
    /// sub-update (receivers, weights, precoders, phases) of every outer
    /// iteration.
    pub objective_trace: Vec<f64>,
    /// Sum rate at initialization and after each outer iteration.
    pub sum_rate_trace: Vec<f64>,
    /// Number of power-iteration sweeps in each passive update.
    pub phase_sweeps: Vec<usize>,
}

/// `[phi; q]`, the lifted unit-modulus variable of the phase subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPhase {
    pub p: CVector,
}

impl LiftedPhase {
    /// Lifts a passive beam with auxiliary entry `q = 1`.
    pub fn from_beam(beam: &PassiveBeam) -> Self {
        let n = beam.len();
        let mut p = CVector::from_element(n + 1, Complex64::new(1.0, 0.0));
        p.rows_mut(0, n).copy_from(&beam.coeffs);
        Self { p }
    }

    /// The auxiliary scalar `q`.
    pub fn q(&self) -> Complex64 {
        self.p[self.p.len() - 1]
    }

    /// `exp(j arg(p[0..N] / q))`.
    pub fn beam(&self) -> PassiveBeam {
        let n = self.p.len() - 1;
        let q = self.q();
        PassiveBeam {
            coeffs: CVector::from_fn(n, |i, _| unit_phase(self.p[i] / q)),
        }
    }
}

/// Receivers `mu_k = h_k v_k / (sum_m |h_k v_m|^2 + (noise / P) sum_m |v_m|^2)`.
pub fn update_receivers(h: &CMatrix, v: &CMatrix, noise: f64, total_power: f64) -> Result<Vec<Complex64>> {
    let power = v.norm_squared();
    if power == 0.0 {
        return Err(Error::Degenerate("receiver update with an all-zero precoder".into()));
    }
    if h.ncols() != v.nrows() || h.nrows() != v.ncols() {
        return Err(Error::DimensionMismatch("channels and precoder disagree".into()));
    }
    let gains = h * v;
    let floor = noise / total_power * power;
    Ok((0..h.nrows())
        .map(|k| {
            let row = gains.row(k);
            let total: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            row[k] / (total + floor)
        })
        .collect())
}

/// MSE of every UE for receivers `mu`.
pub fn mse_all(h: &CMatrix, v: &CMatrix, mu: &[Complex64], noise: f64) -> Vec<f64> {
    (0..h.nrows())
        .map(|k| metrics::mse_k(&h.row(k).transpose(), v, k, mu[k], noise))
        .collect()
}

/// Weights `zeta_k = 1 / e_k`.
pub fn update_weights(e: &[f64]) -> Result<Vec<f64>> {
    e.iter()
        .map(|&ek| {
            if ek > 0.0 && ek.is_finite() {
                Ok(1.0 / ek)
            } else {
                Err(Error::Degenerate(format!("nonpositive MSE {ek}")))
            }
        })
        .collect()
}

/// `sum_k zeta_k e_k - ln zeta_k`.
pub fn wmmse_objective(h: &CMatrix, v: &CMatrix, mu: &[Complex64], zeta: &[f64], noise: f64) -> f64 {
    mse_all(h, v, mu, noise)
        .iter()
        .zip(zeta)
        .map(|(e, z)| z * e - z.ln())
        .sum()
}

/// Precoder update as a function of the power multiplier, diagonalized once.
struct PrecoderFamily {
    basis: CMatrix,
    eigenvalues: Vec<f64>,
    /// `U^H B`, rows for null-space directions zeroed.
    projected: CMatrix,
    /// Row norms squared of `projected`.
    weights: Vec<f64>,
    /// `sum_m |mu_m|^2 zeta_m`, the scale between the multiplier as written
    /// and the diagonal shift.
    scale: f64,
}

impl PrecoderFamily {
    fn new(h: &CMatrix, mu: &[Complex64], zeta: &[f64]) -> Result<Self> {
        let k = h.nrows();
        if mu.len() != k || zeta.len() != k {
            return Err(Error::DimensionMismatch("receivers/weights do not match channels".into()));
        }
        let coeff: Vec<f64> = (0..k).map(|m| mu[m].norm_sqr() * zeta[m]).collect();
        let scale: f64 = coeff.iter().sum();
        if !(scale > 0.0) {
            return Err(Error::Degenerate("precoder update needs a nonzero receiver".into()));
        }
        let h_adj = h.adjoint();
        let weighted = CMatrix::from_fn(h.ncols(), k, |i, m| h_adj[(i, m)] * coeff[m]);
        let mut gram = &weighted * h;
        // symmetrize against roundoff
        gram = (&gram + gram.adjoint()).scale(0.5);
        let b = CMatrix::from_fn(h.ncols(), k, |i, m| h_adj[(i, m)] * mu[m] * zeta[m]);
        let eig = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let mut projected = eig.eigenvectors.adjoint() * b;
        for (i, &l) in eigenvalues.iter().enumerate() {
            if l <= NULLSPACE_RTOL * lmax {
                projected.row_mut(i).fill(ZERO);
            }
        }
        let weights = (0..projected.nrows()).map(|i| projected.row(i).norm_squared()).collect();
        Ok(Self {
            basis: eig.eigenvectors,
            eigenvalues,
            projected,
            weights,
            scale,
        })
    }

    /// `trace(V V^H)` at multiplier `rho`.
    fn power(&self, rho: f64) -> f64 {
        let shift = rho * self.scale;
        self.weights
            .iter()
            .zip(&self.eigenvalues)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, l)| w / (shift + l).powi(2))
            .sum()
    }

    fn precoder(&self, rho: f64) -> CMatrix {
        let shift = rho * self.scale;
        let mut scaled = self.projected.clone();
        for (i, l) in self.eigenvalues.iter().enumerate() {
            let d = shift + l;
            if d > 0.0 {
                scaled.row_mut(i).iter_mut().for_each(|z| *z /= d);
            } else {
                scaled.row_mut(i).fill(ZERO);
            }
        }
        &self.basis * scaled
    }
}

/// Precoders `v_k = mu_k zeta_k (sum_m |mu_m|^2 zeta_m (rho I + h_m^H h_m))^-1 h_k^H`
/// with `rho >= 0` chosen by bisection so that `trace(V V^H) = P` whenever
/// the unconstrained (`rho = 0`) solution exceeds the budget.
///
/// The upper end of the bracket starts at 1 and doubles at most
/// `max_doublings` times.
pub fn update_precoders(
    h: &CMatrix,
    mu: &[Complex64],
    zeta: &[f64],
    total_power: f64,
    bisection_tol: f64,
    max_doublings: usize,
) -> Result<(CMatrix, f64)> {
    let family = PrecoderFamily::new(h, mu, zeta)?;
    if family.power(0.0) <= total_power {
        return Ok((family.precoder(0.0), 0.0));
    }
    let mut hi = 1.0;
    let mut lo = 0.0;
    let mut doublings = 0;
    while family.power(hi) > total_power {
        if doublings == max_doublings {
            return Err(Error::Bracket(max_doublings));
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }
    // power(lo) > P >= power(hi)
    let mut rho = hi;
    for _ in 0..MAX_BISECTION_STEPS {
        let p_hi = family.power(hi);
        if (p_hi - total_power).abs() <= bisection_tol {
            rho = hi;
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            rho = hi;
            break;
        }
        if family.power(mid) > total_power {
            lo = mid;
        } else {
            hi = mid;
        }
        rho = hi;
    }
    Ok((family.precoder(rho), rho))
}

/// Quadratic model `phi^H C phi + 2 Re(beta^H phi)` of the phase-dependent
/// part of `sum_k zeta_k e_k`, in the passive coefficients `phi`
/// (`PassiveBeam::coeffs`).
///
/// With `H_k = diag(h_r,k^H) G`, `Abar = I - A` and `g_m = G w_m`:
/// `C = sum_k zeta_k |mu_k|^2 conj(Abar H_k W W^H H_k^H Abar)` and
/// `beta = conj(sum_k zeta_k |mu_k|^2 Abar H_k sum_m w_m f_m^H A~^H h_r,k - zeta_k conj(mu_k) Abar H_k w_k)`.
pub fn build_phase_quadratic(
    channels: &ChannelSet,
    mode: &ModeSelection,
    w: &CMatrix,
    f: &CMatrix,
    mu: &[Complex64],
    zeta: &[f64],
) -> Result<(CMatrix, CVector)> {
    let n = channels.n_elems();
    let k = channels.n_ues();
    if w.nrows() != channels.n_tx() || w.ncols() != k || f.nrows() != mode.a() || f.ncols() != k {
        return Err(Error::DimensionMismatch("precoder blocks do not match channels".into()));
    }
    if mu.len() != k || zeta.len() != k || mode.n != n {
        return Err(Error::DimensionMismatch("receivers/weights/mode do not match channels".into()));
    }
    // g_m = G w_m, columns of N x K
    let g = &channels.g * w;
    let mut c = CMatrix::zeros(n, n);
    let mut beta = CVector::zeros(n);
    let mut outer = CMatrix::zeros(n, n);
    for ue in 0..k {
        let weight = zeta[ue] * mu[ue].norm_sqr();
        if weight == 0.0 && mu[ue] == ZERO {
            continue;
        }
        // d = Abar h_r,k, so that conj(b_km) = d o conj(g_m)
        let d = CVector::from_fn(n, |i, _| if mode.connected[i] { ZERO } else { channels.h_r[ue][i] });
        // c_km = h_r,k^H A~ f_m
        let cross: Vec<Complex64> = (0..k)
            .map(|m| mode.positions().enumerate().map(|(j, p)| channels.h_r[ue][p].conj() * f[(j, m)]).sum())
            .collect();
        outer.gerc(Complex64::new(weight, 0.0), &d, &d, Complex64::new(1.0, 0.0));
        for m in 0..k {
            let scale = weight * cross[m];
            for i in 0..n {
                beta[i] += d[i] * g[(i, m)].conj() * scale;
            }
        }
        let own = mu[ue] * zeta[ue];
        for i in 0..n {
            beta[i] -= d[i] * g[(i, ue)].conj() * own;
        }
    }
    // sum_m conj(g_m) g_m^T
    let q = g.conjugate() * g.transpose();
    c.zip_zip_apply(&outer, &q, |cij, o, qij| *cij = o * qij);
    Ok((c, beta))
}

/// `phi^H C phi + 2 Re(beta^H phi)`.
pub fn phase_objective(c: &CMatrix, beta: &CVector, phi: &CVector) -> f64 {
    (phi.dotc(&(c * phi))).re + 2.0 * beta.dotc(phi).re
}

/// Lifted matrix `D = [-C, -beta; -beta^H, 0]`.
pub fn lifted_matrix(c: &CMatrix, beta: &CVector) -> CMatrix {
    let n = c.nrows();
    let mut d = CMatrix::zeros(n + 1, n + 1);
    d.view_mut((0, 0), (n, n)).copy_from(&(-c));
    for i in 0..n {
        d[(i, n)] = -beta[i];
        d[(n, i)] = -beta[i].conj();
    }
    d
}

/// Diagonal shift making `D + nu I` positive definite: the Gershgorin bound on
/// `-lambda_min(D)` plus `1e-6 |D|_F`, and at least `nu_min`.
pub fn gershgorin_shift(d: &CMatrix, nu_min: f64) -> f64 {
    let mut lower = f64::INFINITY;
    for i in 0..d.nrows() {
        let radius: f64 = (0..d.ncols()).filter(|&j| j != i).map(|j| d[(i, j)].norm()).sum();
        lower = lower.min(d[(i, i)].re - radius);
    }
    let nu = (-lower).max(0.0) + 1e-6 * d.norm();
    let nu = nu.max(nu_min);
    if nu > 0.0 {
        nu
    } else {
        1.0
    }
}

/// Start point from the leading eigenvector of `D`, projected onto unit
/// modulus: the phases of the best rank-one fit of the lifted problem.
pub fn spectral_start(c: &CMatrix, beta: &CVector) -> LiftedPhase {
    let d = lifted_matrix(c, beta);
    let eig = SymmetricEigen::new(d);
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    LiftedPhase {
        p: CVector::from_fn(v.len(), |i, _| unit_phase(v[i])),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationResult {
    pub phi: PassiveBeam,
    pub lifted: LiftedPhase,
    /// `p^H D p` at the start and after every sweep.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub nu: f64,
}

/// Maximizes `p^H D p` over unit-modulus `p` by the shifted power iteration,
/// starting from `p0`, which minimizes `phi^H C phi + 2 Re(beta^H phi)`.
///
/// Stops once the sup-norm step falls below `tol` or after `max_iters` sweeps.
pub fn power_iteration(c: &CMatrix, beta: &CVector, nu_min: f64, tol: f64, max_iters: usize, p0: LiftedPhase) -> PowerIterationResult {
    let d = lifted_matrix(c, beta);
    let nu = gershgorin_shift(&d, nu_min);
    let mut shifted = d.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += nu;
    }
    let lifted_value = |p: &CVector| p.dotc(&(&d * p)).re;
    let mut p = p0.p;
    let mut trace = vec![lifted_value(&p)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let y = &shifted * &p;
        let scale = y.camax();
        let next = CVector::from_fn(p.len(), |i, _| {
            if y[i].norm() > 1e-300 && y[i].norm() > 1e-15 * scale {
                y[i] / y[i].norm()
            } else {
                p[i]
            }
        });
        let step = (&next - &p).camax();
        p = next;
        iterations += 1;
        trace.push(lifted_value(&p));
        if step < tol {
            converged = true;
            break;
        }
    }
    let lifted = LiftedPhase { p };
    PowerIterationResult {
        phi: lifted.beam(),
        lifted,
        trace,
        iterations,
        converged,
        nu,
    }
}

/// Zero-forcing start: `H^H (H H^H)^-1` with columns scaled to equal power
/// `P / K`; matched-filter columns when `K > N_t + a` or `H H^H` is singular.
pub fn zf_init(h: &CMatrix, total_power: f64) -> CMatrix {
    let (k, l) = h.shape();
    let h_adj = h.adjoint();
    let mut v = None;
    if k <= l {
        let gram = h * &h_adj;
        if let Some(chol) = gram.clone().cholesky() {
            let diag = chol.l_dirty().diagonal();
            let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(z.re), hi.max(z.re)));
            if lo > 1e-7 * hi {
                let zf = &h_adj * chol.inverse();
                if zf.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    v = Some(zf);
                }
            }
        }
    }
    let mut v = v.unwrap_or(h_adj);
    let per_ue = (total_power / k as f64).sqrt();
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col.scale_mut(per_ue / norm);
        }
    }
    // all-zero channel rows leave zero columns; spread their share
    let power = v.norm_squared();
    if power > 0.0 && power < total_power * (1.0 - 1e-12) {
        v.scale_mut((total_power / power).sqrt());
    } else if power == 0.0 {
        v.fill(Complex64::new((total_power / (k * l) as f64).sqrt(), 0.0));
    }
    v
}

/// Result of the alternating loop at one sparsity level.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEtaOutcome {
    pub eta: usize,
    pub state: WmmseState,
    pub report: RateReport,
}

/// Runs the alternating loop at a fixed mode from a ZF start with all-ones
/// phases, until the fractional sum-rate increase drops below
/// `conv_threshold` or `max_outer_iters` is reached. The best iterate by sum
/// rate is returned.
pub fn solve_fixed_mode(channels: &ChannelSet, config: &SystemConfig, mode: &ModeSelection) -> Result<FixedEtaOutcome> {
    let start = Instant::now();
    let k = channels.n_ues();
    let n_tx = channels.n_tx();
    let noise = config.noise_power;
    let p_tot = config.total_power;
    let reflecting = mode.a() < mode.n;

    let mut phi = PassiveBeam::identity(channels.n_elems());
    let mut h = effective_channels(channels, &phi, mode)?;
    let mut v = zf_init(&h, p_tot);
    let mut mu = vec![ZERO; k];
    let mut zeta = vec![1.0; k];
    let mut rho = 0.0;

    let mut objective_trace = vec![wmmse_objective(&h, &v, &mu, &zeta, noise)];
    let mut sum_rate_trace = vec![metrics::sum_rate(&h, &v, noise)?.sum_rate];
    let mut phase_sweeps = Vec::new();
    let mut best = (sum_rate_trace[0], v.clone(), phi.clone());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_outer_iters {
        iterations += 1;
        mu = update_receivers(&h, &v, noise, p_tot)?;
        objective_trace.push(wmmse_objective(&h, &v, &mu, &zeta, noise));

        zeta = update_weights(&mse_all(&h, &v, &mu, noise))?;
        objective_trace.push(wmmse_objective(&h, &v, &mu, &zeta, noise));

        let (v_new, rho_new) = update_precoders(&h, &mu, &zeta, p_tot, config.bisection_tol, config.max_inner_iters)?;
        v = v_new;
        rho = rho_new;
        objective_trace.push(wmmse_objective(&h, &v, &mu, &zeta, noise));

        if reflecting {
            let w = v.rows(0, n_tx).into_owned();
            let f = v.rows(n_tx, mode.a()).into_owned();
            let (c, beta) = build_phase_quadratic(channels, mode, &w, &f, &mu, &zeta)?;
            let result = power_iteration(
                &c,
                &beta,
                config.shift_nu,
                config.power_iter_tol,
                config.max_inner_iters,
                LiftedPhase::from_beam(&phi),
            );
            phase_sweeps.push(result.iterations);
            phi = result.phi;
            h = effective_channels(channels, &phi, mode)?;
        }
        objective_trace.push(wmmse_objective(&h, &v, &mu, &zeta, noise));

        let rate = metrics::sum_rate(&h, &v, noise)?.sum_rate;
        let prev = *sum_rate_trace.last().expect("trace starts non-empty");
        sum_rate_trace.push(rate);
        if rate > best.0 {
            best = (rate, v.clone(), phi.clone());
        }
        let gain = if prev > 0.0 { (rate - prev) / prev } else if rate > 0.0 { f64::INFINITY } else { 0.0 };
        if gain < config.conv_threshold {
            converged = true;
            break;
        }
    }

    let (_, v_best, phi_best) = best;
    let h_best = effective_channels(channels, &phi_best, mode)?;
    let mut report = metrics::sum_rate(&h_best, &v_best, noise)?;
    report.iterations = iterations;
    report.converged = converged;
    report.wall_time = start.elapsed();
    let solution = BeamformingSolution {
        v: v_best,
        n_tx,
        passive: phi_best,
    };
    Ok(FixedEtaOutcome {
        eta: mode.eta,
        state: WmmseState {
            mu,
            zeta,
            rho,
            solution,
            mode: mode.clone(),
            objective_trace,
            sum_rate_trace,
            phase_sweeps,
        },
        report,
    })
}

/// Alternating loop at sparsity level `eta` (reference element 1).
pub fn solve_at_eta(channels: &ChannelSet, config: &SystemConfig, eta: usize) -> Result<FixedEtaOutcome> {
    let mode = make_mode(config.n_elems, config.n_connected, eta, 1)?;
    solve_fixed_mode(channels, config, &mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsitySearch {
    pub eta_opt: usize,
    pub best: FixedEtaOutcome,
    /// Sum rate reached at every level tried, in search order.
    pub rates: Vec<(usize, f64)>,
}

/// Runs `solve` at every level in `etas` and keeps the highest sum rate.
/// A later level must beat the incumbent by more than [`SPARSITY_TIE_RTOL`]
/// relative, so near-ties resolve to the earliest (smallest) level.
pub fn sparsity_search(etas: &[usize], mut solve: impl FnMut(usize) -> Result<FixedEtaOutcome>) -> Result<SparsitySearch> {
    let (&first, rest) = etas
        .split_first()
        .ok_or_else(|| Error::InvalidConfig("empty sparsity set".into()))?;
    let mut best = solve(first)?;
    let mut rates = vec![(first, best.report.sum_rate)];
    for &eta in rest {
        let candidate = solve(eta)?;
        rates.push((eta, candidate.report.sum_rate));
        if candidate.report.sum_rate > best.report.sum_rate + SPARSITY_TIE_RTOL * best.report.sum_rate.abs() {
            best = candidate;
        }
    }
    Ok(SparsitySearch {
        eta_opt: best.eta,
        best,
        rates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaSolution {
    pub solution: BeamformingSolution,
    pub mode: ModeSelection,
    pub report: RateReport,
    pub rates: Vec<(usize, f64)>,
    pub state: WmmseState,
}

/// Full WA algorithm: LoS channels from the geometry, alternating
/// optimization at every feasible sparsity level, best level returned.
pub fn wa_solve(geometry: &Geometry, config: &SystemConfig) -> Result<WaSolution> {
    config.validate()?;
    let start = Instant::now();
    let channels = los_channels(geometry, config);
    let etas = feasible_sparsities(config.n_elems, config.n_connected)?;
    let search = sparsity_search(&etas, |eta| solve_at_eta(&channels, config, eta))?;
    let SparsitySearch { best, rates, .. } = search;
    let mut report = best.report;
    report.iterations = best.state.sum_rate_trace.len() - 1;
    report.wall_time = start.elapsed();
    Ok(WaSolution {
        solution: best.state.solution.clone(),
        mode: best.state.mode.clone(),
        report,
        rates,
        state: best.state,
    })
}
