//! Probe statistics and QND figures of merit.
//!
//! Conditional moments are exact functions of the interferometer phase
//! `phi = phi0 + kappa n`. For a coherent signal the photon number is Poisson
//! distributed and the conditional mean and variance are trigonometric
//! polynomials in `phi` of degree at most two, so every Poisson average needed
//! (mean, variance of the mean, covariance with `n`) reduces to the
//! characteristic function `E[e^{i k kappa n}] = exp(N (e^{i k kappa} - 1))`.
//! The linearized small-phase formulas are kept alongside as a regression
//! target.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::QuadratureMoments;
use crate::interferometer::{
    lossless_coefficients, lossless_input_states, lossy_coefficients, lossy_input_states,
    InterferometerParams, ParamError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("N_beta must be finite and >= 0, got {0}")]
    InvalidSignal(f64),
    #[error("linearized moments are only defined for the standard phases theta1 = 0, theta2 = pi, theta_alpha = pi/2, phi0 = 0")]
    NonStandardPhases,
    #[error("correlation undefined: var_N = {var_n}, var_X = {var_x}")]
    DegenerateVariance { var_n: f64, var_x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    Lossless,
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Poisson mixture of the exact conditional moments.
    #[default]
    Exact,
    /// Small-phase expansion around the standard phases.
    Linearized,
}

/// Joint moments of the signal photon number `N` and the probe amplitude
/// quadrature `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub cov_nx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub c2: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub ratio: f64,
    pub mean_x: f64,
    pub var_x: f64,
}

/// Correlation coefficients (not squared) of the three QND criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HollandCriteria {
    /// Signal in / signal out.
    pub signal_signal: f64,
    /// Signal in / probe out.
    pub signal_probe: f64,
    /// Signal out / probe out.
    pub probe_probe: f64,
}

/// Probe quadrature moments at an explicit interferometer phase.
pub fn moments_at_phase(params: &InterferometerParams, phi: f64, loss: LossModel) -> QuadratureMoments {
    match loss {
        LossModel::Lossless => lossless_coefficients(params, phi)
            .probe_row()
            .quadrature_moments(&lossless_input_states(params)),
        LossModel::Lossy => lossy_coefficients(params, phi)
            .probe_row(params)
            .quadrature_moments(&lossy_input_states(params)),
    }
}

/// Probe moments conditioned on `n` signal photons, without any small-phase
/// expansion.
pub fn conditional_moments(params: &InterferometerParams, n: u64, loss: LossModel) -> QuadratureMoments {
    moments_at_phase(params, params.phase_for(n as f64), loss)
}

/// Signal-to-noise ratio `<X>^2 / var X` of the lossless probe for a Fock
/// signal with `n_b` photons.
pub fn fock_snr(params: &InterferometerParams, n_b: u64) -> Snr {
    let m = conditional_moments(params, n_b, LossModel::Lossless);
    Snr { ratio: m.mean * m.mean / m.variance, mean_x: m.mean, var_x: m.variance }
}

/// `e^{i x} - 1` without cancellation for small `x`.
fn expm1_i(x: f64) -> C64 {
    let s = (x / 2.0).sin();
    C64::new(-2.0 * s * s, x.sin())
}

/// `e^z - 1` without cancellation for small `z`.
fn expm1(z: C64) -> C64 {
    let s = (z.im / 2.0).sin();
    C64::new(z.re.exp_m1() * z.im.cos() - 2.0 * s * s, z.re.exp() * z.im.sin())
}

/// `E[e^{i k kappa n}]` for `n ~ Poisson(n_beta)`.
pub fn poisson_phase_moment(n_beta: f64, k: i32, kappa: f64) -> C64 {
    (n_beta * expm1_i(k as f64 * kappa)).exp()
}

/// `E[n e^{i k kappa n}]` for `n ~ Poisson(n_beta)`.
pub fn poisson_weighted_phase_moment(n_beta: f64, k: i32, kappa: f64) -> C64 {
    n_beta * C64::from_polar(1.0, k as f64 * kappa) * poisson_phase_moment(n_beta, k, kappa)
}

const MAX_HARMONIC: i32 = 2;
const SAMPLES: usize = (2 * MAX_HARMONIC + 1) as usize;

/// Fourier coefficients `c_k`, `k = -2..=2`, of a real trigonometric
/// polynomial of degree <= 2, recovered exactly from equispaced samples.
fn harmonics(samples: &[f64; SAMPLES]) -> [C64; SAMPLES] {
    let mut out = [C64::new(0.0, 0.0); SAMPLES];
    for (slot, k) in out.iter_mut().zip(-MAX_HARMONIC..=MAX_HARMONIC) {
        *slot = samples
            .iter()
            .enumerate()
            .map(|(j, &f)| f * C64::from_polar(1.0, -(k as f64) * TAU * j as f64 / SAMPLES as f64))
            .sum::<C64>()
            / SAMPLES as f64;
    }
    out
}

/// Exact moments split into the pieces of the total-variance decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonMixture {
    pub moments: MomentSet,
    /// `E_n[var X | n]`.
    pub mean_conditional_variance: f64,
    /// `Var_n[E[X | n]]`.
    pub variance_of_mean: f64,
}

/// Poisson mixture of the exact conditional moments over a coherent signal
/// with mean photon number `n_beta`.
pub fn poisson_mixture(params: &InterferometerParams, n_beta: f64, loss: LossModel) -> PoissonMixture {
    let mut mean_samples = [0.0; SAMPLES];
    let mut var_samples = [0.0; SAMPLES];
    for j in 0..SAMPLES {
        let m = moments_at_phase(params, TAU * j as f64 / SAMPLES as f64, loss);
        mean_samples[j] = m.mean;
        var_samples[j] = m.variance;
    }
    let mu = harmonics(&mean_samples);
    let nu = harmonics(&var_samples);
    let kappa = params.kappa;

    // e^{i k phi0} E[e^{i k kappa n}], and the centred factor (e^{i k kappa} - 1)
    let mut weight = [C64::new(0.0, 0.0); SAMPLES];
    let mut step = [C64::new(0.0, 0.0); SAMPLES];
    for (idx, k) in (-MAX_HARMONIC..=MAX_HARMONIC).enumerate() {
        weight[idx] = C64::from_polar(1.0, k as f64 * params.phi0) * poisson_phase_moment(n_beta, k, kappa);
        step[idx] = expm1_i(k as f64 * kappa);
    }

    let mean_x: C64 = (0..SAMPLES).map(|i| mu[i] * weight[i]).sum();
    let mean_var: C64 = (0..SAMPLES).map(|i| nu[i] * weight[i]).sum();
    // Cov(n, e^{ik kappa n}) = N P(k) (e^{ik kappa} - 1)
    let cov: C64 = (0..SAMPLES).map(|i| mu[i] * weight[i] * step[i] * n_beta).sum();
    // Cov(e^{ij kappa n}, e^{ik kappa n}) = P(j) P(k) expm1(N (e^{ij kappa}-1)(e^{ik kappa}-1))
    let mut var_of_mean = C64::new(0.0, 0.0);
    for i in 0..SAMPLES {
        for j in 0..SAMPLES {
            var_of_mean += mu[i] * mu[j] * weight[i] * weight[j] * expm1(n_beta * step[i] * step[j]);
        }
    }

    PoissonMixture {
        moments: MomentSet {
            mean_x: mean_x.re,
            var_x: mean_var.re + var_of_mean.re,
            mean_n: n_beta,
            var_n: n_beta,
            cov_nx: cov.re,
        },
        mean_conditional_variance: mean_var.re,
        variance_of_mean: var_of_mean.re,
    }
}

fn linearized_moments(params: &InterferometerParams, n_beta: f64, loss: LossModel) -> MomentSet {
    let (g1, g2) = (params.g1, params.g2);
    let (big_g1, big_g2) = (params.big_g1(), params.big_g2());
    let kappa = params.kappa;
    let n_alpha = params.n_alpha;
    let pair = n_beta * (n_beta + 1.0);
    let (mean_x, var_x) = match loss {
        LossModel::Lossless => {
            let mean = g2 * kappa * n_alpha.sqrt() * n_beta;
            let var = (big_g2 * big_g1 - g2 * g1).powi(2)
                + (big_g2 * g1 - big_g1 * g2).powi(2)
                + g2 * g2 * kappa * kappa * n_alpha * n_beta
                + big_g1 * big_g1 * g2 * g2 * kappa * kappa * pair / 2.0;
            (mean, var)
        }
        LossModel::Lossy => {
            let (d1, d2) = (params.d1, params.d2);
            let (s1, s2) = (params.eta1.sqrt(), params.eta2.sqrt());
            let damp2 = d1 * d1 * d2 * d2;
            let mean = g2 * d1 * d2 * kappa * n_alpha.sqrt() * n_beta;
            let var = (s2 * big_g2 * big_g1 - g2 * g1 * d1 * d2 / 2.0 - g2 * g1 * d2 * s1 / 2.0).powi(2)
                + (s2 * big_g2 * g1 - big_g1 * g2 * d1 * d2 / 2.0 - big_g1 * g2 * d2 * s1 / 2.0).powi(2)
                + g2 * g2 * ((1.0 - d1 * d1) * d2 * d2 / 2.0 + (1.0 - d2 * d2))
                + g2 * g2 * (2.0 * g1 * g1 + 1.0) * kappa * kappa * pair * damp2 / 4.0
                + g2 * g2 * kappa * kappa * n_beta * (n_alpha + (n_beta + 1.0) / 4.0) * damp2
                + (g2 * d2 * s1 / 2.0 - g2 * d1 * d2 / 2.0).powi(2)
                + g2 * g2 * (1.0 - params.eta1) * d2 * d2 / 2.0
                + big_g2 * big_g2 * (1.0 - params.eta2);
            (mean, var)
        }
    };
    // <N X> = <X> (N_beta + 1), so <N X> - <N><X> = <X>
    MomentSet { mean_x, var_x, mean_n: n_beta, var_n: n_beta, cov_nx: mean_x }
}

fn check_inputs(params: &InterferometerParams, n_beta: f64) -> Result<(), MetricsError> {
    params.validate()?;
    if !n_beta.is_finite() || n_beta < 0.0 {
        return Err(MetricsError::InvalidSignal(n_beta));
    }
    Ok(())
}

/// Moments for a coherent signal with mean photon number `n_beta`.
pub fn coherent_moments(
    params: &InterferometerParams,
    n_beta: f64,
    method: Method,
    loss: LossModel,
) -> Result<MomentSet, MetricsError> {
    check_inputs(params, n_beta)?;
    match method {
        Method::Exact => Ok(poisson_mixture(params, n_beta, loss).moments),
        Method::Linearized => {
            if !params.has_standard_phases() {
                return Err(MetricsError::NonStandardPhases);
            }
            Ok(linearized_moments(params, n_beta, loss))
        }
    }
}

impl MomentSet {
    pub fn correlation(&self) -> Result<Correlation, MetricsError> {
        if !(self.var_n > 0.0 && self.var_x > 0.0) {
            return Err(MetricsError::DegenerateVariance { var_n: self.var_n, var_x: self.var_x });
        }
        let c2 = self.cov_nx * self.cov_nx / (self.var_n * self.var_x);
        Ok(Correlation { c2, c: c2.sqrt() })
    }
}

/// Normalized squared covariance between the input signal photon number and
/// the probe amplitude quadrature.
pub fn qnd_correlation(
    params: &InterferometerParams,
    n_beta: f64,
    method: Method,
    loss: LossModel,
) -> Result<Correlation, MetricsError> {
    coherent_moments(params, n_beta, method, loss)?.correlation()
}

/// The three QND criteria. The signal photon number is untouched by the
/// dispersive readout, so signal-in/signal-out is identically one and the two
/// probe criteria coincide with [`qnd_correlation`].
pub fn holland_criteria(
    params: &InterferometerParams,
    n_beta: f64,
    method: Method,
    loss: LossModel,
) -> Result<HollandCriteria, MetricsError> {
    let c = qnd_correlation(params, n_beta, method, loss)?.c;
    Ok(HollandCriteria { signal_signal: 1.0, signal_probe: c, probe_probe: c })
}
