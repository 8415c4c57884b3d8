//! The actively correlated atom-light interferometer: a two-mode squeezer
//! preparing a spin wave and a correlated optical wave, an SU(2) atom-light
//! interferometer carrying the signal-dependent phase on its atomic arm, and a
//! second squeezer recombining the interferometer output with the correlated
//! optical wave for readout.
//!
//! Each configuration is available twice: composed element by element on
//! [`BosonicNetwork`], and as closed-form coefficients. The two are
//! independent code paths and are cross-checked in the tests.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{BosonicNetwork, CoefficientRow, InputState, ModeSpec};

/// Probe optical mode, `a_S`.
pub const PROBE: &str = "a_S";
/// Atomic spin wave, `S_a`.
pub const SPIN: &str = "S_a";
/// Coherent write field entering the SU(2) stage, `a_W`.
pub const WRITE: &str = "a_W";
/// Photon-loss ancilla on the internal optical arm.
pub const LOSS_INTERNAL: &str = "V1";
/// Photon-loss ancilla on the correlated optical wave before readout.
pub const LOSS_EXTERNAL: &str = "V2";
/// Dephasing ancilla on the atomic arm inside the SU(2) stage.
pub const DEPHASING_INTERNAL: &str = "F1";
/// Dephasing ancilla on the SU(2) atomic output.
pub const DEPHASING_EXTERNAL: &str = "F2";

/// Input ordering of the lossy network and of [`LossyCoefficients::probe_row`].
pub const LOSSY_INPUTS: [&str; 7] =
    [PROBE, SPIN, WRITE, DEPHASING_INTERNAL, LOSS_INTERNAL, DEPHASING_EXTERNAL, LOSS_EXTERNAL];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ParamError {
    pub field: &'static str,
    pub message: String,
}

/// Physical parameters of the interferometer.
///
/// Gains are given by `g`; the companion `G = sqrt(1 + g^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerParams {
    /// Preparation squeezer gain.
    pub g1: f64,
    /// Readout squeezer gain.
    pub g2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Interferometer phase offset.
    pub phi0: f64,
    /// AC-Stark phase per signal photon (rad).
    pub kappa: f64,
    /// Photon number of the coherent write field.
    pub n_alpha: f64,
    pub theta_alpha: f64,
    /// Power transmission of the internal optical arm.
    pub eta1: f64,
    /// Power transmission of the correlated optical wave.
    pub eta2: f64,
    /// Amplitude dephasing factor `e^{-Gamma_1 tau_1}` inside the SU(2) stage.
    pub d1: f64,
    /// Amplitude dephasing factor `e^{-Gamma_2 tau_2}` after it.
    pub d2: f64,
}

impl InterferometerParams {
    /// Balanced operating point with `g1 = g2 = 3`, `kappa = 1e-10`,
    /// `N_alpha = 1e12`, dephasing factors 0.9, no photon loss and the
    /// standard phases (`theta1 = 0`, `theta2 = pi`, `theta_alpha = pi/2`,
    /// `phi0 = 0`).
    pub fn reference() -> Self {
        Self {
            g1: 3.0,
            g2: 3.0,
            theta1: 0.0,
            theta2: PI,
            phi0: 0.0,
            kappa: 1e-10,
            n_alpha: 1e12,
            theta_alpha: PI / 2.0,
            eta1: 1.0,
            eta2: 1.0,
            d1: 0.9,
            d2: 0.9,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn err(field: &'static str, message: &str) -> Result<(), ParamError> {
            Err(ParamError { field, message: message.to_string() })
        }
        let all = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("phi0", self.phi0),
            ("kappa", self.kappa),
            ("n_alpha", self.n_alpha),
            ("theta_alpha", self.theta_alpha),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("d1", self.d1),
            ("d2", self.d2),
        ];
        for (field, value) in all {
            if !value.is_finite() {
                return err(field, "must be finite");
            }
        }
        for (field, value) in [("g1", self.g1), ("g2", self.g2)] {
            if value < 0.0 {
                return err(field, &format!("{field} must be ≥ 0"));
            }
        }
        if self.kappa < 0.0 {
            return err("kappa", "kappa must be ≥ 0");
        }
        if self.n_alpha < 0.0 {
            return err("n_alpha", "n_alpha must be ≥ 0");
        }
        for (field, value) in
            [("eta1", self.eta1), ("eta2", self.eta2), ("d1", self.d1), ("d2", self.d2)]
        {
            if !(0.0..=1.0).contains(&value) {
                return err(field, &format!("{field} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn big_g1(&self) -> f64 {
        (1.0 + self.g1 * self.g1).sqrt()
    }

    pub fn big_g2(&self) -> f64 {
        (1.0 + self.g2 * self.g2).sqrt()
    }

    /// Coherent amplitude `sqrt(N_alpha) e^{i theta_alpha}` of the write field.
    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.n_alpha.sqrt(), self.theta_alpha)
    }

    /// Interferometer phase with `n` signal photons.
    pub fn phase_for(&self, n: f64) -> f64 {
        self.phi0 + self.kappa * n
    }

    pub fn lossless(self) -> Self {
        Self { eta1: 1.0, eta2: 1.0, d1: 1.0, d2: 1.0, ..self }
    }

    pub fn with_transmissions(self, eta1: f64, eta2: f64) -> Self {
        Self { eta1, eta2, ..self }
    }

    pub fn with_g2(self, g2: f64) -> Self {
        Self { g2, ..self }
    }

    /// Whether the phases are the standard readout configuration
    /// (`theta1 = 0`, `theta2 = pi`, `theta_alpha = pi/2`, `phi0 = 0`, all mod
    /// `2 pi`) for which the linearized formulas are stated.
    pub fn has_standard_phases(&self) -> bool {
        const TOL: f64 = 1e-9;
        let near = |x: f64, target: f64| {
            let d = (x - target).rem_euclid(2.0 * PI);
            d < TOL || 2.0 * PI - d < TOL
        };
        near(self.theta1, 0.0)
            && near(self.theta2, PI)
            && near(self.theta_alpha, PI / 2.0)
            && near(self.phi0, 0.0)
    }

    /// Input modes of the lossless network.
    pub fn input_modes(&self) -> Vec<ModeSpec> {
        vec![ModeSpec::vacuum(PROBE), ModeSpec::vacuum(SPIN), ModeSpec::coherent(WRITE, self.alpha())]
    }
}

/// Quantum state of the signal beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    Fock { n_b: u64 },
    Coherent { n_beta: f64 },
}

/// SU(2) interferometer transfer coefficients, `S3 = t S0 + r aW`,
/// `aW' = t aW + r S0`.
pub fn su2_transfer(phi: f64) -> (C64, C64) {
    let half = C64::from_polar(1.0, phi / 2.0);
    let t = half * (phi / 2.0).cos();
    let r = C64::i() * half * (phi / 2.0).sin();
    (t, r)
}

/// Closed-form coefficients of the lossless interferometer:
///
/// ```text
/// a_S^out = A a_S + B S_a^dagger + C a_W^dagger
/// S_a^out = D a_S^dagger + E S_a + F a_W
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosslessCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub e: C64,
    pub f: C64,
}

/// Closed-form coefficients of the probe output with losses:
///
/// ```text
/// a_S^out = A a_S + B S_a^dagger + C a_W^dagger + D V1^dagger + E V2
///           + F F1^dagger + G F2^dagger
/// ```
///
/// `F1`, `F2` are the Langevin operators of the two dephasing channels with
/// `<F F^dagger> = 1 - d^2`; in the network they are realized as
/// `sqrt(1 - d^2)` times a vacuum ancilla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossyCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub e: C64,
    pub f: C64,
    pub g: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSet {
    Lossless(LosslessCoefficients),
    Lossy(LossyCoefficients),
}

pub fn lossless_coefficients(params: &InterferometerParams, phi: f64) -> LosslessCoefficients {
    let (t, r) = su2_transfer(phi);
    let (g1, g2) = (params.g1, params.g2);
    let (big_g1, big_g2) = (params.big_g1(), params.big_g2());
    let e1 = C64::from_polar(1.0, params.theta1);
    let e2 = C64::from_polar(1.0, params.theta2);
    let e21 = C64::from_polar(1.0, params.theta2 - params.theta1);
    LosslessCoefficients {
        a: big_g2 * big_g1 + g2 * g1 * e21 * t.conj(),
        b: big_g2 * g1 * e1 + big_g1 * g2 * e2 * t.conj(),
        c: g2 * e2 * r.conj(),
        d: big_g1 * g2 * e2 + big_g2 * g1 * e1 * t,
        e: g2 * g1 * e21 + big_g2 * big_g1 * t,
        f: big_g2 * r,
    }
}

impl LosslessCoefficients {
    /// `|A|^2 - |B|^2 - |C|^2`, equal to 1 for a physical output.
    pub fn probe_commutator(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - self.c.norm_sqr()
    }

    /// `|E|^2 + |F|^2 - |D|^2`.
    pub fn spin_commutator(&self) -> f64 {
        self.e.norm_sqr() + self.f.norm_sqr() - self.d.norm_sqr()
    }

    /// Probe output row over `[a_S, S_a, a_W]`.
    pub fn probe_row(&self) -> CoefficientRow {
        let zero = C64::new(0.0, 0.0);
        CoefficientRow { u: vec![self.a, zero, zero], v: vec![zero, self.b, self.c] }
    }

    /// Spin output row over `[a_S, S_a, a_W]`.
    pub fn spin_row(&self) -> CoefficientRow {
        let zero = C64::new(0.0, 0.0);
        CoefficientRow { u: vec![zero, self.e, self.f], v: vec![self.d, zero, zero] }
    }
}

pub fn lossy_coefficients(params: &InterferometerParams, phi: f64) -> LossyCoefficients {
    let (g1, g2) = (params.g1, params.g2);
    let (big_g1, big_g2) = (params.big_g1(), params.big_g2());
    let (d1, d2) = (params.d1, params.d2);
    let (s_eta1, s_eta2) = (params.eta1.sqrt(), params.eta2.sqrt());
    let e1 = C64::from_polar(1.0, params.theta1);
    let e2 = C64::from_polar(1.0, params.theta2);
    let e21 = C64::from_polar(1.0, params.theta2 - params.theta1);
    let arm = C64::from_polar(d1, -phi);
    let sum = (arm + s_eta1) * d2 / 2.0;
    let diff = (arm - s_eta1) * d2 / 2.0;
    LossyCoefficients {
        a: s_eta2 * big_g2 * big_g1 + g2 * g1 * e21 * sum,
        b: s_eta2 * big_g2 * g1 * e1 + big_g1 * g2 * e2 * sum,
        c: g2 * e2 * diff,
        d: -g2 * e2 * (1.0 - params.eta1).sqrt() * d2 * FRAC_1_SQRT_2,
        e: C64::new(big_g2 * (1.0 - params.eta2).sqrt(), 0.0),
        f: g2 * e2 * d2 * FRAC_1_SQRT_2,
        g: g2 * e2,
    }
}

impl LossyCoefficients {
    /// Probe output row over [`LOSSY_INPUTS`], with the Langevin terms
    /// realized on unit vacuum ancillas.
    pub fn probe_row(&self, params: &InterferometerParams) -> CoefficientRow {
        let zero = C64::new(0.0, 0.0);
        let noise1 = (1.0 - params.d1 * params.d1).sqrt();
        let noise2 = (1.0 - params.d2 * params.d2).sqrt();
        CoefficientRow {
            u: vec![self.a, zero, zero, zero, zero, zero, self.e],
            v: vec![zero, self.b, self.c, self.f * noise1, self.d, self.g * noise2, zero],
        }
    }
}

/// Input states in [`LOSSY_INPUTS`] order.
pub fn lossy_input_states(params: &InterferometerParams) -> Vec<InputState> {
    let mut states = vec![InputState::Vacuum; LOSSY_INPUTS.len()];
    states[2] = InputState::Coherent { amplitude: params.alpha() };
    states
}

/// Input states in `[a_S, S_a, a_W]` order.
pub fn lossless_input_states(params: &InterferometerParams) -> Vec<InputState> {
    vec![InputState::Vacuum, InputState::Vacuum, InputState::Coherent { amplitude: params.alpha() }]
}

/// Lossless pipeline composed on the engine: preparation squeezer, SU(2)
/// stage as one beam splitter with [`su2_transfer`], readout squeezer.
pub fn build_lossless_network(params: &InterferometerParams, phi: f64) -> BosonicNetwork {
    let (t, r) = su2_transfer(phi);
    BosonicNetwork::new(params.input_modes())
        .and_then(|n| n.two_mode_squeezer(SPIN, PROBE, params.g1, params.theta1))
        .and_then(|n| n.beam_splitter(SPIN, WRITE, t, r))
        .and_then(|n| n.two_mode_squeezer(SPIN, PROBE, params.g2, params.theta2))
        .unwrap_or_else(|e| panic!("invalid interferometer parameters: {e}"))
}

/// First atom-light beam splitter: `S2 = (S0 + aW)/sqrt2`,
/// `aW1 = (aW - S0)/sqrt2`.
fn splitter() -> [[C64; 2]; 2] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [-h, h]]
}

/// Second atom-light beam splitter: `S3 = (S2 - aW1)/sqrt2`,
/// `aW2 = (S2 + aW1)/sqrt2`.
fn combiner() -> [[C64; 2]; 2] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [[h, -h], [h, h]]
}

/// Lossy pipeline with the SU(2) stage resolved into two 50:50 atom-light
/// beam splitters, so internal losses can sit on the individual arms.
/// All four ancillas are always registered, in [`LOSSY_INPUTS`] order.
pub fn build_lossy_network(params: &InterferometerParams, phi: f64) -> BosonicNetwork {
    BosonicNetwork::new(params.input_modes())
        .and_then(|n| n.two_mode_squeezer(SPIN, PROBE, params.g1, params.theta1))
        .and_then(|n| n.mode_mixer(SPIN, WRITE, splitter()))
        .and_then(|n| n.phase_shift(SPIN, phi))
        .and_then(|n| n.attenuate(SPIN, params.d1, DEPHASING_INTERNAL))
        .and_then(|n| n.attenuate(WRITE, params.eta1.sqrt(), LOSS_INTERNAL))
        .and_then(|n| n.mode_mixer(SPIN, WRITE, combiner()))
        .and_then(|n| n.attenuate(SPIN, params.d2, DEPHASING_EXTERNAL))
        .and_then(|n| n.attenuate(PROBE, params.eta2.sqrt(), LOSS_EXTERNAL))
        .and_then(|n| n.two_mode_squeezer(SPIN, PROBE, params.g2, params.theta2))
        .unwrap_or_else(|e| panic!("invalid interferometer parameters: {e}"))
}
