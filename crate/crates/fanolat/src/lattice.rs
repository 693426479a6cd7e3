//! Direct time-domain integration of the semi-infinite chain.
//!
//! The defect amplitude c_a and site amplitudes c_1..c_N obey
//!
//! ```text
//! i ċ_a = ω_a c_a - κ_a c_{n₀}
//! i ċ_n = -κ₀ (c_{n+1} + c_{n-1}) - κ_a c_a δ_{n,n₀},     c_0 ≡ c_{N+1} ≡ 0,
//! ```
//!
//! integrated with an embedded Dormand–Prince 5(4) pair under PI step
//! control. Truncating the chain at site N is exact until the wavefront
//! (group velocity 2κ₀) reaches the end; for longer runs a smooth complex
//! absorbing ramp -iη((n-n_s)/(N-n_s))^p c_n on the tail sites suppresses
//! the reflection.
//!
//! The same module builds the trapped in-band eigenstates in closed form:
//! for ω_a = Ω_m the state with c_n = sin(mπn/n₀) on n < n₀, zero from n₀
//! on, and c_a = -(κ₀/κ_a) c_{n₀-1} is an exact eigenvector, which is
//! checked through the Hamiltonian residual.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::model::{self, ModelParams, DEFAULT_RESONANCE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid simulation config: {0}")]
    ConfigError(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("mode index m = {m} outside 1..{max} for n0 = {n0}")]
    IndexOutOfRange { m: usize, max: usize, n0: usize },
    #[error("omega_a = {omega_a} does not match the mode frequency {expected}")]
    ResonanceMismatch { omega_a: f64, expected: f64 },
}

/// Complex amplitudes of the defect level and the chain at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub t: f64,
    pub ca: Complex64,
    /// `sites[i]` holds c_{i+1}.
    pub sites: Vec<Complex64>,
}

impl LatticeState {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Total norm |c_a|² + Σ|c_n|².
    pub fn norm_sqr(&self) -> f64 {
        self.ca.norm_sqr() + self.sites.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Σ|c_n|² over sites n in `lo..hi` (1-based, half-open).
    pub fn site_norm_sqr(&self, lo: usize, hi: usize) -> f64 {
        let lo = lo.max(1);
        let hi = hi.min(self.sites.len() + 1);
        if lo >= hi {
            return 0.0;
        }
        self.sites[lo - 1..hi - 1].iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Complex absorbing ramp on the chain tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    /// First absorbing site (1-based).
    pub start: usize,
    /// Peak damping rate η, reached at site N.
    pub strength: f64,
    /// Ramp exponent p ≥ 2.
    pub power: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_sites: usize,
    pub t_max: f64,
    /// Local error tolerance of the embedded pair (absolute and relative).
    pub rk_tol: f64,
    pub absorber: Option<Absorber>,
    /// Spacing of the recorded c_a / norm samples.
    pub sample_dt: f64,
    /// Spacing of full |c_n| snapshots; None records no snapshots.
    pub snapshot_stride: Option<f64>,
}

impl SimConfig {
    /// Sized-for-the-run defaults: without an absorber the chain is long
    /// enough that the wavefront never returns (N = n₀ + ⌈2κ₀ t_max⌉ + 50);
    /// with one, N = max(600, n₀ + 100) and the ramp η = κ₀, p = 3 occupies
    /// the last quarter of the chain.
    pub fn auto(params: &ModelParams, t_max: f64, with_absorber: bool) -> Self {
        let n0 = params.n0();
        let (n_sites, absorber) = if with_absorber {
            let n = 600usize.max(n0 + 100);
            let start = n - n / 4;
            (n, Some(Absorber { start, strength: params.kappa0(), power: 3 }))
        } else {
            let n = n0 + (2.0 * params.kappa0() * t_max).ceil() as usize + 50;
            (n, None)
        };
        Self {
            n_sites,
            t_max,
            rk_tol: 1e-9,
            absorber,
            sample_dt: 0.1,
            snapshot_stride: None,
        }
    }

    fn validate(&self, params: &ModelParams) -> Result<(), LatticeError> {
        if self.n_sites <= params.n0() + 2 {
            return Err(LatticeError::ConfigError(format!(
                "n_sites = {} must exceed n0 + 2 = {}",
                self.n_sites,
                params.n0() + 2
            )));
        }
        if !(self.t_max >= 0.0) {
            return Err(LatticeError::ConfigError("t_max must be >= 0".into()));
        }
        if !(self.rk_tol > 0.0) {
            return Err(LatticeError::ConfigError("rk_tol must be positive".into()));
        }
        if !(self.sample_dt > 0.0) {
            return Err(LatticeError::ConfigError("sample_dt must be positive".into()));
        }
        if let Some(ab) = &self.absorber {
            if ab.start <= params.n0() {
                return Err(LatticeError::ConfigError(format!(
                    "absorber start {} overlaps the defect attachment site {}",
                    ab.start,
                    params.n0()
                )));
            }
            if ab.start >= self.n_sites {
                return Err(LatticeError::ConfigError(
                    "absorber start beyond the last site".into(),
                ));
            }
            if ab.power < 2 {
                return Err(LatticeError::ConfigError("absorber power must be >= 2".into()));
            }
            if !(ab.strength > 0.0) {
                return Err(LatticeError::ConfigError("absorber strength must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Full |c_n| profile at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSnapshot {
    pub t: f64,
    pub site_abs: Vec<f64>,
}

/// Time series recorded by [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub ca: Vec<Complex64>,
    pub norm: Vec<f64>,
    pub snapshots: Vec<SiteSnapshot>,
    pub final_state: LatticeState,
}

impl DecayTrace {
    /// Mean of |c_a| over samples with t in [lo, hi].
    pub fn mean_abs_ca(&self, lo: f64, hi: f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, c) in self.times.iter().zip(self.ca.iter()) {
            if *t >= lo - 1e-12 && *t <= hi + 1e-12 {
                sum += c.norm();
                count += 1;
            }
        }
        if count == 0 { f64::NAN } else { sum / count as f64 }
    }
}

#[inline]
fn mul_i(z: Complex64) -> Complex64 {
    Complex64::new(-z.im, z.re)
}

/// Right-hand side ẏ of the coupled equations, with the absorbing ramp
/// included when present. `y[0]` is c_a, `y[n]` is c_n.
fn rhs_flat(
    kappa0: f64,
    kappa_a: f64,
    n0: usize,
    omega_a: f64,
    ramp: &[f64],
    y: &[Complex64],
    dy: &mut [Complex64],
) {
    let n = y.len() - 1;
    // ċ_a = -i(ω_a c_a - κ_a c_{n₀})
    dy[0] = -mul_i(omega_a * y[0] - kappa_a * y[n0]);
    for i in 1..=n {
        let left = if i > 1 { y[i - 1] } else { Complex64::new(0.0, 0.0) };
        let right = if i < n { y[i + 1] } else { Complex64::new(0.0, 0.0) };
        // ċ_n = i κ₀ (c_{n+1} + c_{n-1}) + i κ_a c_a δ_{n,n₀} - ramp_n c_n
        let mut hop = kappa0 * (left + right);
        if i == n0 {
            hop += kappa_a * y[0];
        }
        dy[i] = mul_i(hop) - ramp[i] * y[i];
    }
}

/// Time derivative of a state, as exposed to callers.
pub fn rhs(params: &ModelParams, state: &LatticeState, absorber: Option<&Absorber>) -> LatticeState {
    let n = state.n_sites();
    let ramp = build_ramp(n, absorber);
    let mut y = Vec::with_capacity(n + 1);
    y.push(state.ca);
    y.extend_from_slice(&state.sites);
    let mut dy = vec![Complex64::new(0.0, 0.0); n + 1];
    rhs_flat(params.kappa0(), params.kappa_a(), params.n0(), params.omega_a(), &ramp, &y, &mut dy);
    LatticeState { t: state.t, ca: dy[0], sites: dy[1..].to_vec() }
}

fn build_ramp(n_sites: usize, absorber: Option<&Absorber>) -> Vec<f64> {
    let mut ramp = vec![0.0; n_sites + 1];
    if let Some(ab) = absorber {
        let width = (n_sites - ab.start) as f64;
        for (n, r) in ramp.iter_mut().enumerate().skip(ab.start) {
            let x = if width > 0.0 { (n - ab.start) as f64 / width } else { 1.0 };
            *r = ab.strength * x.powi(ab.power as i32);
        }
    }
    ramp
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Decay run from the standard initial condition c_a(0) = 1, c_n(0) = 0.
pub fn integrate(params: &ModelParams, config: &SimConfig) -> Result<DecayTrace, LatticeError> {
    let initial = LatticeState {
        t: 0.0,
        ca: Complex64::new(1.0, 0.0),
        sites: vec![Complex64::new(0.0, 0.0); config.n_sites],
    };
    evolve(params, config, initial)
}

/// Decay run from an arbitrary initial state (used for wavepacket probes of
/// the absorber and for eigenstate checks).
pub fn evolve(
    params: &ModelParams,
    config: &SimConfig,
    initial: LatticeState,
) -> Result<DecayTrace, LatticeError> {
    config.validate(params)?;
    if initial.n_sites() != config.n_sites {
        return Err(LatticeError::ConfigError(format!(
            "initial state has {} sites, config says {}",
            initial.n_sites(),
            config.n_sites
        )));
    }

    let n = config.n_sites;
    let dim = n + 1;
    let ramp = build_ramp(n, config.absorber.as_ref());
    let (kappa0, kappa_a, n0, omega_a) =
        (params.kappa0(), params.kappa_a(), params.n0(), params.omega_a());
    let f = |y: &[Complex64], dy: &mut [Complex64]| {
        rhs_flat(kappa0, kappa_a, n0, omega_a, &ramp, y, dy)
    };

    // sample grid, always ending exactly at t_max
    let mut sample_times: Vec<f64> = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * config.sample_dt;
        if t > config.t_max - 1e-12 * config.sample_dt {
            break;
        }
        sample_times.push(t);
        j += 1;
    }
    sample_times.push(config.t_max);
    let snap_every = config
        .snapshot_stride
        .map(|s| ((s / config.sample_dt).round() as usize).max(1));

    let mut y: Vec<Complex64> = Vec::with_capacity(dim);
    y.push(initial.ca);
    y.extend_from_slice(&initial.sites);

    let mut k1 = vec![Complex64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut ytmp = k1.clone();
    let mut y5 = k1.clone();

    let mut trace = DecayTrace {
        times: Vec::with_capacity(sample_times.len()),
        ca: Vec::with_capacity(sample_times.len()),
        norm: Vec::with_capacity(sample_times.len()),
        snapshots: Vec::new(),
        final_state: initial.clone(),
    };
    let record = |trace: &mut DecayTrace, t: f64, y: &[Complex64], sample_idx: usize| {
        trace.times.push(t);
        trace.ca.push(y[0]);
        trace.norm.push(y.iter().map(|c| c.norm_sqr()).sum::<f64>());
        if let Some(every) = snap_every {
            if sample_idx % every == 0 {
                trace
                    .snapshots
                    .push(SiteSnapshot { t, site_abs: y[1..].iter().map(|c| c.norm()).collect() });
            }
        }
    };

    let mut t = 0.0;
    let mut next_sample = 0usize;
    record(&mut trace, t, &y, next_sample);
    next_sample += 1;

    if config.t_max == 0.0 {
        trace.final_state = LatticeState { t, ca: y[0], sites: y[1..].to_vec() };
        return Ok(trace);
    }

    f(&y, &mut k1);
    let rate_scale = 2.0 * kappa0 + kappa_a + omega_a.abs() + 1e-12;
    let mut h = (0.01 / rate_scale).min(config.sample_dt);
    let mut err_prev: f64 = 1.0;
    let mut rejects_in_a_row = 0u32;

    while t < config.t_max {
        let target = sample_times[next_sample];
        let clipped = t + h >= target - 1e-13 * target.max(1.0);
        let h_use = if clipped { target - t } else { h };
        if h_use < 1e-14 * t.max(1.0) {
            return Err(LatticeError::StepSizeUnderflow { t });
        }

        // stages
        for i in 0..dim {
            ytmp[i] = y[i] + h_use * A21 * k1[i];
        }
        f(&ytmp, &mut k2);
        for i in 0..dim {
            ytmp[i] = y[i] + h_use * (A31 * k1[i] + A32 * k2[i]);
        }
        f(&ytmp, &mut k3);
        for i in 0..dim {
            ytmp[i] = y[i] + h_use * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(&ytmp, &mut k4);
        for i in 0..dim {
            ytmp[i] = y[i] + h_use * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(&ytmp, &mut k5);
        for i in 0..dim {
            ytmp[i] = y[i]
                + h_use * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(&ytmp, &mut k6);
        for i in 0..dim {
            y5[i] = y[i] + h_use * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(&y5, &mut k7);

        // weighted rms of the embedded error estimate
        let mut err_sq = 0.0;
        for i in 0..dim {
            let e = h_use
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = config.rk_tol * (1.0 + y[i].norm().max(y5[i].norm()));
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / dim as f64).sqrt().max(1e-30);

        if err <= 1.0 {
            t = if clipped { target } else { t + h_use };
            std::mem::swap(&mut y, &mut y5);
            std::mem::swap(&mut k1, &mut k7); // first-same-as-last
            rejects_in_a_row = 0;

            while next_sample < sample_times.len()
                && t >= sample_times[next_sample] - 1e-13 * t.max(1.0)
            {
                record(&mut trace, sample_times[next_sample], &y, next_sample);
                next_sample += 1;
            }

            // PI controller
            let fac = 0.9 * err.powf(-0.17) * err_prev.powf(0.04);
            let fac = fac.clamp(0.2, 5.0);
            let h_new = h_use * fac;
            h = if clipped { h.max(h_new) } else { h_new };
            err_prev = err;
            if next_sample >= sample_times.len() {
                break;
            }
        } else {
            rejects_in_a_row += 1;
            if rejects_in_a_row > 60 {
                return Err(LatticeError::StepSizeUnderflow { t });
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = h_use * fac;
        }
    }

    trace.final_state = LatticeState { t, ca: y[0], sites: y[1..].to_vec() };
    Ok(trace)
}

/// The normalized trapped eigenstate for mode m: c_n = sin(mπn/n₀) up to
/// site n₀-1, zero beyond, c_a = -(κ₀/κ_a) sin(mπ(n₀-1)/n₀), all scaled to
/// unit norm. Requires ω_a to sit on the mode frequency Ω_m.
pub fn bic_state(
    params: &ModelParams,
    m: usize,
    n_sites: usize,
) -> Result<LatticeState, LatticeError> {
    let n0 = params.n0();
    if n0 < 2 || m < 1 || m > n0 - 1 {
        return Err(LatticeError::IndexOutOfRange { m, max: n0.saturating_sub(1), n0 });
    }
    if n_sites < n0 {
        return Err(LatticeError::ConfigError(format!(
            "n_sites = {n_sites} must be at least n0 = {n0}"
        )));
    }
    let expected = model::bic_frequencies(params)[m - 1];
    if (params.omega_a() - expected).abs() > DEFAULT_RESONANCE_TOL * params.kappa0() {
        return Err(LatticeError::ResonanceMismatch { omega_a: params.omega_a(), expected });
    }

    let mut sites = vec![Complex64::new(0.0, 0.0); n_sites];
    for n in 1..n0 {
        sites[n - 1] = Complex64::new((m as f64 * PI * n as f64 / n0 as f64).sin(), 0.0);
    }
    let ca = Complex64::new(
        -(params.kappa0() / params.kappa_a())
            * (m as f64 * PI * (n0 - 1) as f64 / n0 as f64).sin(),
        0.0,
    );
    let mut state = LatticeState { t: 0.0, ca, sites };
    let norm = state.norm_sqr().sqrt();
    state.ca /= norm;
    for c in &mut state.sites {
        *c /= norm;
    }
    Ok(state)
}

/// ‖H·state - ω·state‖₂ with the absorber off. Zero (to rounding) exactly
/// when the state is an eigenvector with eigenvalue ω.
pub fn hamiltonian_residual(params: &ModelParams, state: &LatticeState, omega: f64) -> f64 {
    let n = state.n_sites();
    let n0 = params.n0();
    let (k0, ka) = (params.kappa0(), params.kappa_a());
    let c_n0 = if n0 <= n { state.sites[n0 - 1] } else { Complex64::new(0.0, 0.0) };

    let ha = params.omega_a() * state.ca - ka * c_n0;
    let mut sum = (ha - omega * state.ca).norm_sqr();
    for i in 1..=n {
        let left = if i > 1 { state.sites[i - 2] } else { Complex64::new(0.0, 0.0) };
        let right = if i < n { state.sites[i] } else { Complex64::new(0.0, 0.0) };
        let mut h = -k0 * (left + right);
        if i == n0 {
            h -= ka * state.ca;
        }
        sum += (h - omega * state.sites[i - 1]).norm_sqr();
    }
    sum.sqrt()
}

/// Closed-form eigenpairs of the (n₀-1)×(n₀-1) tridiagonal hopping block
/// between the boundary and the attachment site: eigenvalues
/// Ω_m = -2κ₀ cos(mπ/n₀) with eigenvectors sin(mπn/n₀), n = 1..n₀-1.
///
/// The eigenvalues are bitwise identical to [`model::bic_frequencies`].
pub fn matrix_m_eigen(params: &ModelParams) -> Result<Vec<(f64, Vec<f64>)>, LatticeError> {
    let n0 = params.n0();
    if n0 < 2 {
        return Err(LatticeError::IndexOutOfRange { m: 1, max: 0, n0 });
    }
    let freqs = model::bic_frequencies(params);
    Ok(freqs
        .into_iter()
        .enumerate()
        .map(|(i, omega)| {
            let m = i + 1;
            let vec = (1..n0)
                .map(|n| (m as f64 * PI * n as f64 / n0 as f64).sin())
                .collect();
            (omega, vec)
        })
        .collect())
}
