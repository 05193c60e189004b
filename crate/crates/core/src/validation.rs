//! Self-checks of the solvers against closed forms, brute-force oracles and
//! their own invariants, at a reduced (`Quick`) or reference (`Full`) size.
//!
//! Each check returns a [`Check`] with a one-line verdict; the CLI's
//! `validate` command and the acceptance tests both run these.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{effective_channels, feasible_sparsities, los_channels, make_mode, PassiveBeam};
use crate::campaign::{drop_ues, emit_csv, run_campaign, Algorithm, Campaign, CsvOptions, ResultTable, Sweep};
use crate::closed_form::{
    case2_cscc, cscc_closed, cscc_direct, proposition1_select, reference_beam, single_ue_gamma_max, single_ue_solution,
    sparse_null_metric, SparsityCase, DEFAULT_REGIME_FACTOR,
};
use crate::error::Result;
use crate::metrics::{self, BeamformingSolution};
use crate::scenario::{Geometry, Scenario};
use crate::wmmse::{mse_all, phase_objective, power_iteration, solve_at_eta, spectral_start, update_receivers};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Reduced trial counts for a fast smoke run.
    Quick,
    /// The reference trial counts and array sizes.
    Full,
}

impl Scale {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Self::Quick => quick,
            Self::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl Check {
    fn finish(id: u8, title: &'static str, start: Instant, limit: Option<Duration>, ok: bool, detail: String) -> Self {
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        Self {
            id,
            title,
            passed: ok && in_time,
            detail,
            elapsed,
            limit,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {} ({}): {verdict}: {}; {:.2} s", self.id, self.title, self.detail, self.elapsed.as_secs_f64())?;
        if let Some(l) = self.limit {
            write!(f, " of {} s", l.as_secs())?;
        }
        Ok(())
    }
}

/// Worst constraint violations seen over a set of solutions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstraintTally {
    pub solutions: usize,
    /// Max of `trace(V V^H) / P - 1`.
    pub power_excess: f64,
    /// Max of `| |phi_n| - 1 |`.
    pub modulus_error: f64,
}

impl ConstraintTally {
    pub fn record(&mut self, solution: &BeamformingSolution, total_power: f64) {
        self.solutions += 1;
        self.power_excess = self.power_excess.max(solution.power() / total_power - 1.0);
        self.modulus_error = self.modulus_error.max(solution.passive.modulus_error());
    }

    pub fn record_beam(&mut self, beam: &PassiveBeam) {
        self.solutions += 1;
        self.modulus_error = self.modulus_error.max(beam.modulus_error());
    }

    pub fn merge(&mut self, other: &ConstraintTally) {
        self.solutions += other.solutions;
        self.power_excess = self.power_excess.max(other.power_excess);
        self.modulus_error = self.modulus_error.max(other.modulus_error);
    }

    pub fn ok(&self) -> bool {
        self.power_excess <= 1e-6 && self.modulus_error <= 1e-12
    }
}

/// Reference layout with the given array sizes.
pub fn reference_scenario(n_tx: usize, n: usize, a: usize, k: usize) -> Scenario {
    let mut sc = Scenario::reference_defaults();
    sc.config = sc.config.with_sizes(n_tx, n, a, k);
    sc
}

fn random_geometry(sc: &Scenario, rng: &mut impl Rng) -> Result<Geometry> {
    let ues = drop_ues(sc.ue_center, sc.ue_radius, sc.config.n_ues, rng)?;
    sc.geometry(&ues)
}

fn random_beam(rng: &mut impl Rng, n: usize) -> PassiveBeam {
    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
    PassiveBeam::from_phases(&phases)
}

fn limit(secs: u64) -> Option<Duration> {
    Some(Duration::from_secs(secs))
}

/// Single-UE closed form: assembled SNR equals `gamma_max` at every level.
pub fn single_ue_exactness(scale: Scale, tally: &mut ConstraintTally) -> Check {
    let start = Instant::now();
    let mut run = || -> Result<(usize, usize, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x51);
        let trials = scale.pick(20, 100);
        let mut sc = reference_scenario(32, 128, 20, 1);
        let etas = feasible_sparsities(128, 20)?;
        let (mut good, mut worst_err, mut worst_spread) = (0, 0.0f64, 0.0f64);
        for _ in 0..trials {
            // vary the RDARS placement too, so kappa_br moves
            sc.rdars_pos = [rng.random_range(30.0..70.0), rng.random_range(10.0..50.0), 15.0];
            let geo = random_geometry(&sc, &mut rng)?;
            let cfg = &sc.config;
            let ch = los_channels(&geo, cfg);
            let gamma_max = single_ue_gamma_max(cfg, geo.kappa_br, geo.kappa_ru[0]);
            let (mut lo, mut hi, mut err) = (f64::INFINITY, 0.0f64, 0.0f64);
            for &eta in &etas {
                let mode = make_mode(128, 20, eta, 1)?;
                let sol = single_ue_solution(&geo, cfg, &mode)?;
                tally.record(&sol.solution, cfg.total_power);
                let h = effective_channels(&ch, &sol.solution.passive, &mode)?;
                let snr = metrics::sinr_all(&h, &sol.solution.v, cfg.noise_power)?[0];
                err = err.max((snr - gamma_max).abs() / gamma_max);
                lo = lo.min(snr);
                hi = hi.max(snr);
            }
            let spread = (hi - lo) / lo;
            worst_err = worst_err.max(err);
            worst_spread = worst_spread.max(spread);
            if err <= 1e-9 && spread <= 1e-9 {
                good += 1;
            }
        }
        Ok((good, trials, worst_err, worst_spread))
    };
    let (ok, detail) = match run() {
        Ok((good, n, err, spread)) => (
            good == n,
            format!("{good}/{n} geometries exact; max rel err {err:.1e}, max spread over levels {spread:.1e}"),
        ),
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(1, "single-UE exactness", start, limit(10), ok, detail)
}

/// Closed-form correlation against the assembled channels, and the
/// midpoint-beam form against the closed form.
pub fn cscc_equivalence(scale: Scale) -> Check {
    let start = Instant::now();
    let run = || -> Result<(usize, usize, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x52);
        let trials = scale.pick(200, 1000);
        let sc = reference_scenario(32, 128, 20, 2);
        let cfg = &sc.config;
        let etas = feasible_sparsities(128, 20)?;
        let (mut good, mut worst_a, mut worst_b) = (0, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let geo = random_geometry(&sc, &mut rng)?;
            let eta = etas[rng.random_range(0..etas.len())];
            let mode = make_mode(128, 20, eta, 1)?;
            let phi = random_beam(&mut rng, 128);
            let closed = cscc_closed(&geo, cfg, &mode, &phi)?;
            let direct = cscc_direct(&geo, cfg, &mode, &phi)?;
            let err_a = (closed - direct).abs() / direct;
            let phi_ref = reference_beam(&geo, cfg)?;
            let c2 = case2_cscc(&geo, cfg, eta)?;
            let closed_ref = cscc_closed(&geo, cfg, &mode, &phi_ref)?;
            let err_b = (c2 - closed_ref).abs() / closed_ref;
            worst_a = worst_a.max(err_a);
            worst_b = worst_b.max(err_b);
            if err_a <= 1e-9 && err_b <= 1e-9 {
                good += 1;
            }
        }
        Ok((good, trials, worst_a, worst_b))
    };
    let (ok, detail) = match run() {
        Ok((good, n, a, b)) => (
            good == n,
            format!("{good}/{n} drops agree; max rel err closed/direct {a:.1e}, midpoint/closed {b:.1e}"),
        ),
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(2, "correlation oracle equivalence", start, limit(30), ok, detail)
}

/// UEs on one ray from the surface are fully correlated at every level.
pub fn same_direction(scale: Scale) -> Check {
    let start = Instant::now();
    let run = || -> Result<(usize, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x53);
        let sc = reference_scenario(32, 128, 20, 2);
        let cfg = &sc.config;
        let etas = feasible_sparsities(128, 20)?;
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..scale.pick(10, 50) {
            // two UEs at different ranges along one direction
            let dir = [rng.random_range(0.3..1.0), rng.random_range(-1.0..0.0), rng.random_range(-0.3..-0.1)];
            let r1 = rng.random_range(20.0..60.0);
            let r2 = r1 + rng.random_range(5.0..40.0);
            let ues: Vec<[f64; 3]> = [r1, r2]
                .iter()
                .map(|r| std::array::from_fn(|i| sc.rdars_pos[i] + r * dir[i]))
                .collect();
            let geo = sc.geometry(&ues)?;
            let synthetic = Geometry::synthetic(
                geo.u_br_aoa,
                geo.u_br_aod,
                vec![geo.u_ru_aod[0]; 2],
                geo.kappa_br,
                geo.kappa_ru.clone(),
            );
            for g in [&geo, &synthetic] {
                for &eta in &etas {
                    let mode = make_mode(128, 20, eta, 1)?;
                    let e = cscc_closed(g, cfg, &mode, &random_beam(&mut rng, 128))?;
                    worst = worst.max((e - 1.0).abs());
                    cases += 1;
                }
            }
        }
        Ok((cases, worst))
    };
    let (ok, detail) = match run() {
        Ok((n, worst)) => (worst <= 1e-12, format!("{n} cases; max |eps - 1| = {worst:.1e}")),
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(3, "same-direction exactness", start, None, ok, detail)
}

/// Regime rule against exhaustive scans.
pub fn proposition_vs_exhaustive(scale: Scale) -> Check {
    let start = Instant::now();
    let run = || -> Result<(usize, usize, usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x54);
        let trials = scale.pick(100, 500);
        let sc = reference_scenario(32, 128, 20, 2);
        let cfg = &sc.config;
        let etas = feasible_sparsities(128, 20)?;
        let (mut hit1, mut n1) = (0, 0);
        while n1 < trials {
            let geo = random_geometry(&sc, &mut rng)?;
            let sel = proposition1_select(&geo, cfg, DEFAULT_REGIME_FACTOR)?;
            if sel.case != SparsityCase::Subcase1 || sel.ratio > 1e-4 {
                continue;
            }
            n1 += 1;
            let du = geo.u_ru_aod[1] - geo.u_ru_aod[0];
            let best = argmin(&etas, |eta| sparse_null_metric(20, eta, 1, cfg.spacing, cfg.wavelength, du));
            if sel.etas.contains(&best) {
                hit1 += 1;
            }
        }
        // intermediate regime: scale the BS-surface gain so the ratio lands in (1/100, 100)
        let (mut hit2, mut n2) = (0, 0);
        while n2 < trials {
            let base = random_geometry(&sc, &mut rng)?;
            let unit = crate::closed_form::regime_ratio(cfg, 1.0);
            let target: f64 = 10f64.powf(rng.random_range(-1.9..1.9));
            let mut geo = base.clone();
            geo.kappa_br = (target / unit).sqrt();
            let sel = proposition1_select(&geo, cfg, DEFAULT_REGIME_FACTOR)?;
            if sel.case != SparsityCase::Case2 {
                continue;
            }
            n2 += 1;
            let phi_ref = reference_beam(&geo, cfg)?;
            let mut scores = Vec::with_capacity(etas.len());
            for &eta in &etas {
                scores.push(cscc_direct(&geo, cfg, &make_mode(128, 20, eta, 1)?, &phi_ref)?);
            }
            let best = argmin(&etas, |eta| scores[eta - 1]);
            if sel.etas == vec![best] {
                hit2 += 1;
            }
        }
        Ok((hit1, n1, hit2, n2))
    };
    let (ok, detail) = match run() {
        Ok((h1, n1, h2, n2)) => {
            let rate1 = h1 as f64 / n1 as f64;
            (
                rate1 >= 0.95 && h2 == n2,
                format!("distributed-dominant {h1}/{n1} ({:.1}%) contain exhaustive argmin; intermediate {h2}/{n2} equal", 100.0 * rate1),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(4, "regime rule vs exhaustive", start, limit(60), ok, detail)
}

fn argmin(etas: &[usize], f: impl Fn(usize) -> f64) -> usize {
    let mut best = etas[0];
    let mut val = f(best);
    for &eta in &etas[1..] {
        let v = f(eta);
        if v < val {
            best = eta;
            val = v;
        }
    }
    best
}

/// Summary of the fixed-level WA runs shared by the monotonicity and MMSE
/// identity checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoStudy {
    pub instances: usize,
    pub objective_violations: usize,
    pub rate_violations: usize,
    pub converged: usize,
    pub worst_objective_rise: f64,
    pub worst_rate_drop: f64,
    pub worst_mmse_gap: f64,
    pub inactive_power_steps: usize,
    pub tally: ConstraintTally,
}

/// Random fixed-level WA runs at `N = 32, N_t = 8, a = 4, K = 4`.
pub fn ao_study(scale: Scale) -> Result<AoStudy> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x55);
    let sc = reference_scenario(8, 32, 4, 4);
    let cfg = &sc.config;
    let etas = feasible_sparsities(32, 4)?;
    let mut s = AoStudy::default();
    for _ in 0..scale.pick(20, 100) {
        let geo = random_geometry(&sc, &mut rng)?;
        let ch = los_channels(&geo, cfg);
        let eta = etas[rng.random_range(0..etas.len())];
        let out = solve_at_eta(&ch, cfg, eta)?;
        s.instances += 1;
        let obj = &out.state.objective_trace;
        let rise = obj.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        s.worst_objective_rise = s.worst_objective_rise.max(rise);
        if rise > 1e-9 {
            s.objective_violations += 1;
        }
        let drop = out.state.sum_rate_trace.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        s.worst_rate_drop = s.worst_rate_drop.max(drop);
        if drop > 1e-8 {
            s.rate_violations += 1;
        }
        if out.report.converged {
            s.converged += 1;
        }
        if out.state.rho == 0.0 {
            s.inactive_power_steps += 1;
        }
        let sol = &out.state.solution;
        s.tally.record(sol, cfg.total_power);
        // MMSE identity at the receivers of the returned solution
        let h = effective_channels(&ch, &sol.passive, &out.state.mode)?;
        let mu = update_receivers(&h, &sol.v, cfg.noise_power, cfg.total_power)?;
        let e = mse_all(&h, &sol.v, &mu, cfg.noise_power);
        let sinr = metrics::sinr_all(&h, &sol.v, cfg.noise_power)?;
        for (ek, g) in e.iter().zip(&sinr) {
            s.worst_mmse_gap = s.worst_mmse_gap.max((ek - 1.0 / (1.0 + g)).abs());
        }
    }
    Ok(s)
}

/// Monotone traces and convergence of the alternating loop.
pub fn wmmse_monotonicity(scale: Scale, tally: &mut ConstraintTally) -> Check {
    let start = Instant::now();
    let (ok, detail) = match ao_study(scale) {
        Ok(s) => {
            tally.merge(&s.tally);
            let conv = s.converged as f64 / s.instances as f64;
            (
                s.objective_violations == 0 && s.rate_violations == 0 && conv >= 0.99,
                format!(
                    "{} instances; objective rises {} (worst {:.1e}), rate drops {} (worst {:.1e}); converged {:.0}%",
                    s.instances,
                    s.objective_violations,
                    s.worst_objective_rise,
                    s.rate_violations,
                    s.worst_rate_drop,
                    100.0 * conv
                ),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(5, "WMMSE monotonicity", start, limit(120), ok, detail)
}

/// Exhaustive 1-degree grid minimum of the phase objective for `N <= 2`.
fn grid_minimum(c: &CMatrix, beta: &CVector) -> f64 {
    let n = beta.len();
    let grid: Vec<Complex64> = (0..360).map(|d| Complex64::from_polar(1.0, (d as f64).to_radians())).collect();
    let mut best = f64::INFINITY;
    let mut phi = CVector::from_element(n, Complex64::new(1.0, 0.0));
    let count = 360usize.pow(n as u32);
    for idx in 0..count {
        let mut rest = idx;
        for i in 0..n {
            phi[i] = grid[rest % 360];
            rest /= 360;
        }
        best = best.min(phase_objective(c, beta, &phi));
    }
    best
}

/// Power iteration from the spectral start against a phase grid at
/// `N = 1, 2`.
pub fn power_iteration_optimality(scale: Scale, tally: &mut ConstraintTally) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x56);
    let per_n = scale.pick(20, 50);
    let (mut good, mut total, mut steps, mut falls) = (0, 0, 0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for n in [1usize, 2] {
        for _ in 0..per_n {
            let x = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let c = &x * x.adjoint();
            let beta = CVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let r = power_iteration(&c, &beta, 0.0, 1e-12, 100_000, spectral_start(&c, &beta));
            tally.record_beam(&r.phi);
            let got = phase_objective(&c, &beta, &r.phi.coeffs);
            let gap = got - grid_minimum(&c, &beta);
            worst = worst.max(gap);
            total += 1;
            if gap <= 1e-3 {
                good += 1;
            }
            for w in r.trace.windows(2) {
                steps += 1;
                if w[1] < w[0] - 1e-12 * w[0].abs().max(1.0) {
                    falls += 1;
                }
            }
        }
    }
    Check::finish(
        6,
        "power iteration vs phase grid",
        start,
        limit(30),
        good == total && falls == 0,
        format!("{good}/{total} within 1e-3 of grid (worst gap {worst:.1e}); lifted objective fell in {falls} of {steps} steps"),
    )
}

/// Power and unit-modulus constraints over every solution produced.
pub fn constraint_satisfaction(tally: &ConstraintTally) -> Check {
    let start = Instant::now();
    Check::finish(
        7,
        "constraint satisfaction",
        start,
        None,
        tally.solutions > 0 && tally.ok(),
        format!(
            "{} solutions; max power excess {:.1e} (relative), max modulus error {:.1e}",
            tally.solutions, tally.power_excess, tally.modulus_error
        ),
    )
}

/// `e_k = 1 / (1 + gamma_k)` at the receivers of the converged solutions.
pub fn mmse_identity(scale: Scale) -> Check {
    let start = Instant::now();
    let (ok, detail) = match ao_study(scale) {
        Ok(s) => (
            s.worst_mmse_gap <= 1e-9,
            format!(
                "{} instances; max |e_k - 1/(1+sinr_k)| = {:.1e}; power constraint inactive in {}",
                s.instances, s.worst_mmse_gap, s.inactive_power_steps
            ),
        ),
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(8, "MMSE identity", start, None, ok, detail)
}

fn mean_of(table: &ResultTable, algorithm: Algorithm) -> (f64, usize) {
    let rows: Vec<f64> = table
        .records
        .iter()
        .filter(|r| r.algorithm == algorithm && r.succeeded())
        .map(|r| r.sum_rate)
        .collect();
    (rows.iter().sum::<f64>() / rows.len() as f64, rows.len())
}

/// Sparse versus compact array, at two users and at the reference size.
pub fn sparse_vs_compact(scale: Scale, tally: &mut ConstraintTally) -> Check {
    let start = Instant::now();
    let mut run = || -> Result<String> {
        let two = Campaign::new(
            reference_scenario(32, 128, 20, 2),
            scale.pick(20, 200),
            0x5A,
            vec![Algorithm::WaOptEta, Algorithm::CompactEta1],
        );
        let t2 = run_campaign(&two)?;
        let (opt, n_opt) = mean_of(&t2, Algorithm::WaOptEta);
        let (compact, n_compact) = mean_of(&t2, Algorithm::CompactEta1);
        let gain = opt / compact - 1.0;

        let full = Campaign::new(
            reference_scenario(32, 128, 20, 20),
            scale.pick(3, 50),
            0x5B,
            vec![Algorithm::WaOptEta, Algorithm::CompactEta1],
        );
        let tf = run_campaign(&full)?;
        let opt_rows = tf.cell(30.0, Algorithm::WaOptEta);
        let compact_rows = tf.cell(30.0, Algorithm::CompactEta1);
        let mut wins = 0;
        let mut pairs = 0;
        let mut full_gain = (0.0, 0.0);
        for (o, c) in opt_rows.iter().zip(&compact_rows) {
            if o.succeeded() && c.succeeded() {
                pairs += 1;
                full_gain.0 += o.sum_rate;
                full_gain.1 += c.sum_rate;
                if o.sum_rate >= c.sum_rate {
                    wins += 1;
                }
            }
        }
        let win_rate = wins as f64 / full.n_trials as f64;
        // spot-check constraints on a reference-size solution
        let sc = &full.scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5C);
        let geo = random_geometry(sc, &mut rng)?;
        let sol = crate::wmmse::wa_solve(&geo, &sc.config)?;
        tally.record(&sol.solution, sc.config.total_power);

        let ok = n_opt == two.n_trials && n_compact == two.n_trials && opt > compact && gain >= 0.10 && win_rate >= 0.95;
        let detail = format!(
            "K=2: mean {opt:.3} vs compact {compact:.3} bits ({:+.1}%) over {n_opt} trials; K=20: optimized >= compact in {wins}/{} ({pairs} paired, mean gain {:+.1}%)",
            100.0 * gain,
            full.n_trials,
            100.0 * (full_gain.0 / full_gain.1 - 1.0)
        );
        if ok {
            Ok(detail)
        } else {
            Err(crate::error::Error::Degenerate(detail))
        }
    };
    let (ok, detail) = match run() {
        Ok(d) => (true, d),
        Err(e) => (false, e.to_string()),
    };
    Check::finish(9, "sparse vs compact", start, limit(600), ok, detail)
}

/// Same seed twice, serial and parallel: identical CSV bytes.
pub fn determinism(scale: Scale) -> Check {
    let start = Instant::now();
    let run = || -> Result<(bool, bool)> {
        let dir = std::env::temp_dir().join(format!("rdars-determinism-{}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|source| crate::error::Error::Io { path: dir.clone(), source })?;
        let mut c = Campaign::new(
            reference_scenario(4, 24, 4, 3),
            scale.pick(4, 12),
            0xD5,
            vec![Algorithm::WaOptEta, Algorithm::CompactEta1, Algorithm::RandomEta, Algorithm::ExhaustiveEta],
        );
        c.sweep = Some(Sweep::parse("ptot_dbm=20:30:10")?);
        let mut files = Vec::new();
        for (i, parallel) in [true, false, true].into_iter().enumerate() {
            c.parallel = parallel;
            let table = run_campaign(&c)?;
            let path = dir.join(format!("run{i}.csv"));
            emit_csv(&table, &path, CsvOptions { wall_time: i == 2 })?;
            files.push(std::fs::read_to_string(&path).map_err(|source| crate::error::Error::Io { path, source })?);
        }
        let _ = std::fs::remove_dir_all(&dir);
        let bytes_equal = files[0] == files[1];
        // with timings written, only the wall_ms column may differ
        let strip = |s: &str| -> Vec<String> {
            s.lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.remove(7);
                    f.join(",")
                })
                .collect()
        };
        Ok((bytes_equal, strip(&files[0]) == strip(&files[2])))
    };
    let (ok, detail) = match run() {
        Ok((a, b)) => (
            a && b,
            format!("serial vs parallel without timings byte-identical: {a}; with timings identical outside wall_ms: {b}"),
        ),
        Err(e) => (false, format!("error: {e}")),
    };
    Check::finish(10, "determinism", start, None, ok, detail)
}

/// Runs every check in order; constraint satisfaction covers the solutions
/// produced by the checks before it.
pub fn run_all(scale: Scale) -> Vec<Check> {
    let mut tally = ConstraintTally::default();
    let mut checks = vec![
        single_ue_exactness(scale, &mut tally),
        cscc_equivalence(scale),
        same_direction(scale),
        proposition_vs_exhaustive(scale),
        wmmse_monotonicity(scale, &mut tally),
        power_iteration_optimality(scale, &mut tally),
    ];
    let ninth = sparse_vs_compact(scale, &mut tally);
    checks.push(constraint_satisfaction(&tally));
    checks.push(mmse_identity(scale));
    checks.push(ninth);
    checks.push(determinism(scale));
    checks
}
