//! Linear bosonic network engine.
//!
//! Every tracked output operator is stored as a row of complex coefficients
//! over the input modes,
//!
//! ```text
//! o = sum_i u_i a_i + v_i a_i^dagger
//! ```
//!
//! so two-mode squeezers, beam splitters, phase shifts and attenuation
//! channels (realized as a beam splitter against a fresh vacuum ancilla) are
//! all linear updates of these rows. Inputs are vacuum or coherent states, so
//! first and second moments of any quadrature follow from the rows alone.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Absolute tolerance for unitarity and commutator checks.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown mode label `{0}`")]
    UnknownLabel(String),
    #[error("element needs two distinct modes, got `{0}` twice")]
    SameMode(String),
    #[error("squeezer gain must be finite and >= 0, got {0}")]
    InvalidGain(f64),
    #[error("beam splitter is not unitary: |t|^2+|r|^2 = {norm}, Re(t r*) = {cross}")]
    NonUnitaryBeamSplitter { norm: f64, cross: f64 },
    #[error("mode mixer is not unitary (max deviation of M M^dagger from identity: {0:e})")]
    NonUnitaryMixer(f64),
    #[error("amplitude transmission must lie in [0, 1], got {0}")]
    TransmissionOutOfRange(f64),
    #[error("non-finite parameter or coefficient")]
    NonFinite,
}

/// Input state of a mode. Only Gaussian pure states with vacuum fluctuations
/// are representable, which is all the moment formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputState {
    Vacuum,
    Coherent { amplitude: C64 },
}

impl InputState {
    pub fn mean_amplitude(&self) -> C64 {
        match self {
            InputState::Vacuum => C64::new(0.0, 0.0),
            InputState::Coherent { amplitude } => *amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub label: String,
    pub input_state: InputState,
}

impl ModeSpec {
    pub fn vacuum(label: impl Into<String>) -> Self {
        Self { label: label.into(), input_state: InputState::Vacuum }
    }

    pub fn coherent(label: impl Into<String>, amplitude: C64) -> Self {
        Self { label: label.into(), input_state: InputState::Coherent { amplitude } }
    }
}

/// Coefficients of one output operator on the annihilation (`u`) and
/// creation (`v`) operators of each input mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

impl CoefficientRow {
    pub fn zeros(len: usize) -> Self {
        Self { u: vec![C64::new(0.0, 0.0); len], v: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn identity(len: usize, index: usize) -> Self {
        let mut row = Self::zeros(len);
        row.u[index] = C64::new(1.0, 0.0);
        row
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Row of the hermitian conjugate operator.
    pub fn dagger(&self) -> Self {
        Self {
            u: self.v.iter().map(|c| c.conj()).collect(),
            v: self.u.iter().map(|c| c.conj()).collect(),
        }
    }

    fn scaled(&self, factor: C64) -> Self {
        Self {
            u: self.u.iter().map(|c| c * factor).collect(),
            v: self.v.iter().map(|c| c * factor).collect(),
        }
    }

    /// `a * self + b * other`
    fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(x, y)| a * x + b * y).collect(),
            v: self.v.iter().zip(&other.v).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    fn push_zero(&mut self) {
        self.u.push(C64::new(0.0, 0.0));
        self.v.push(C64::new(0.0, 0.0));
    }

    /// `sum_i |u_i|^2 - |v_i|^2`, i.e. `[o, o^dagger]`.
    pub fn commutator_weight(&self) -> f64 {
        self.u.iter().map(|c| c.norm_sqr()).sum::<f64>()
            - self.v.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Mean and variance of `X = o + o^dagger` for the given input states.
    ///
    /// Panics if `inputs` and the row have different lengths.
    pub fn quadrature_moments(&self, inputs: &[InputState]) -> QuadratureMoments {
        assert_eq!(inputs.len(), self.len(), "row/input length mismatch");
        let mut mean = C64::new(0.0, 0.0);
        let mut variance = 0.0;
        for ((u, v), state) in self.u.iter().zip(&self.v).zip(inputs) {
            let alpha = state.mean_amplitude();
            mean += u * alpha + v * alpha.conj();
            // X picks up (u + v*) a + h.c. from this mode; each mode contributes
            // its vacuum fluctuation |u + v*|^2.
            variance += (u + v.conj()).norm_sqr();
        }
        QuadratureMoments { mean: 2.0 * mean.re, variance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub mean: f64,
    pub variance: f64,
}

/// A linear network over labelled input modes. Every input mode has exactly
/// one tracked output operator with the same label; elements replace the
/// operators they act on, ancillas add both an input and an output.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonicNetwork {
    modes: Vec<ModeSpec>,
    rows: Vec<CoefficientRow>,
}

impl BosonicNetwork {
    /// Network with every output equal to its own input.
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self, NetworkError> {
        for (i, mode) in modes.iter().enumerate() {
            if modes[..i].iter().any(|m| m.label == mode.label) {
                return Err(NetworkError::DuplicateLabel(mode.label.clone()));
            }
            if let InputState::Coherent { amplitude } = mode.input_state {
                if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                    return Err(NetworkError::NonFinite);
                }
            }
        }
        let n = modes.len();
        let rows = (0..n).map(|i| CoefficientRow::identity(n, i)).collect();
        Ok(Self { modes, rows })
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn input_states(&self) -> Vec<InputState> {
        self.modes.iter().map(|m| m.input_state).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.modes.iter().map(|m| m.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize, NetworkError> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| NetworkError::UnknownLabel(label.to_string()))
    }

    pub fn row(&self, label: &str) -> Result<&CoefficientRow, NetworkError> {
        Ok(&self.rows[self.index_of(label)?])
    }

    /// Coefficient of output `output` on input `input`, as `(u, v)`.
    pub fn coefficient(&self, output: &str, input: &str) -> Result<(C64, C64), NetworkError> {
        let row = self.row(output)?;
        let j = self.index_of(input)?;
        Ok((row.u[j], row.v[j]))
    }

    fn pair(&self, first: &str, second: &str) -> Result<(usize, usize), NetworkError> {
        let i = self.index_of(first)?;
        let j = self.index_of(second)?;
        if i == j {
            return Err(NetworkError::SameMode(first.to_string()));
        }
        Ok((i, j))
    }

    /// Two-mode squeezer with gain `g` (`G = sqrt(1 + g^2)`) and pump phase
    /// `theta`:
    ///
    /// ```text
    /// S' = G S + g e^{i theta} a^dagger
    /// a' = G a + g e^{i theta} S^dagger
    /// ```
    pub fn two_mode_squeezer(
        mut self,
        spin: &str,
        optical: &str,
        g: f64,
        theta: f64,
    ) -> Result<Self, NetworkError> {
        if !g.is_finite() || g < 0.0 {
            return Err(NetworkError::InvalidGain(g));
        }
        if !theta.is_finite() {
            return Err(NetworkError::NonFinite);
        }
        let (i, j) = self.pair(spin, optical)?;
        let big_g = C64::new((1.0 + g * g).sqrt(), 0.0);
        let pump = C64::from_polar(g, theta);
        let spin_row = self.rows[i].combine(big_g, &self.rows[j].dagger(), pump);
        let optical_row = self.rows[j].combine(big_g, &self.rows[i].dagger(), pump);
        self.rows[i] = spin_row;
        self.rows[j] = optical_row;
        Ok(self)
    }

    /// Symmetric beam splitter `o1' = t o1 + r o2`, `o2' = t o2 + r o1`.
    ///
    /// The symmetric form is unitary only when `|t|^2 + |r|^2 = 1` and
    /// `Re(t r*) = 0`; both are checked.
    pub fn beam_splitter(
        self,
        first: &str,
        second: &str,
        t: C64,
        r: C64,
    ) -> Result<Self, NetworkError> {
        let norm = t.norm_sqr() + r.norm_sqr();
        let cross = (t * r.conj()).re;
        if !norm.is_finite() || !cross.is_finite() {
            return Err(NetworkError::NonFinite);
        }
        if (norm - 1.0).abs() > UNITARITY_TOL || cross.abs() > UNITARITY_TOL {
            return Err(NetworkError::NonUnitaryBeamSplitter { norm, cross });
        }
        self.mode_mixer(first, second, [[t, r], [r, t]])
    }

    /// General passive two-mode element `o1' = m00 o1 + m01 o2`,
    /// `o2' = m10 o1 + m11 o2` with unitary `m`.
    pub fn mode_mixer(
        mut self,
        first: &str,
        second: &str,
        m: [[C64; 2]; 2],
    ) -> Result<Self, NetworkError> {
        if m.iter().flatten().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(NetworkError::NonFinite);
        }
        let mut deviation: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let dot: C64 = (0..2).map(|k| m[a][k] * m[b][k].conj()).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                deviation = deviation.max((dot - target).norm());
            }
        }
        if deviation > UNITARITY_TOL {
            return Err(NetworkError::NonUnitaryMixer(deviation));
        }
        let (i, j) = self.pair(first, second)?;
        let new_i = self.rows[i].combine(m[0][0], &self.rows[j], m[0][1]);
        let new_j = self.rows[i].combine(m[1][0], &self.rows[j], m[1][1]);
        self.rows[i] = new_i;
        self.rows[j] = new_j;
        Ok(self)
    }

    /// Multiplies the operator by `e^{i phi}`.
    pub fn phase_shift(mut self, label: &str, phi: f64) -> Result<Self, NetworkError> {
        if !phi.is_finite() {
            return Err(NetworkError::NonFinite);
        }
        let i = self.index_of(label)?;
        self.rows[i] = self.rows[i].scaled(C64::from_polar(1.0, phi));
        Ok(self)
    }

    /// Amplitude damping by `transmission` (photon loss with power
    /// transmission `eta` uses `sqrt(eta)`, spin-wave dephasing uses
    /// `e^{-Gamma tau}`). A vacuum ancilla labelled `ancilla` is registered
    /// and mixed in:
    ///
    /// ```text
    /// o' = tau o + sqrt(1 - tau^2) V
    /// V' = tau V - sqrt(1 - tau^2) o
    /// ```
    pub fn attenuate(
        mut self,
        label: &str,
        transmission: f64,
        ancilla: &str,
    ) -> Result<Self, NetworkError> {
        if !(0.0..=1.0).contains(&transmission) {
            return Err(NetworkError::TransmissionOutOfRange(transmission));
        }
        self.index_of(label)?;
        if self.index_of(ancilla).is_ok() {
            return Err(NetworkError::DuplicateLabel(ancilla.to_string()));
        }
        for row in &mut self.rows {
            row.push_zero();
        }
        let n = self.modes.len() + 1;
        self.modes.push(ModeSpec::vacuum(ancilla));
        self.rows.push(CoefficientRow::identity(n, n - 1));
        let tau = C64::new(transmission, 0.0);
        let leak = C64::new((1.0 - transmission * transmission).sqrt(), 0.0);
        self.mode_mixer(label, ancilla, [[tau, leak], [-leak, tau]])
    }

    pub fn commutator_weight(&self, label: &str) -> Result<f64, NetworkError> {
        Ok(self.row(label)?.commutator_weight())
    }

    /// Mean and variance of the amplitude quadrature `X = o + o^dagger`.
    pub fn quadrature_moments(&self, label: &str) -> Result<QuadratureMoments, NetworkError> {
        let states = self.input_states();
        Ok(self.row(label)?.quadrature_moments(&states))
    }

    /// Feeds the outputs of `self` into `next`.
    ///
    /// Inputs of `next` whose label matches an output of `self` are
    /// substituted by that output's row; the remaining inputs of `next`
    /// (typically ancillas) become new inputs of the result. Outputs of
    /// `self` that `next` does not mention pass through unchanged.
    pub fn compose(&self, next: &BosonicNetwork) -> BosonicNetwork {
        let mut modes = self.modes.clone();
        for mode in &next.modes {
            if self.index_of(&mode.label).is_err() {
                modes.push(mode.clone());
            }
        }
        let n = modes.len();
        // Each input of `next`, expressed over the combined inputs.
        let next_inputs: Vec<CoefficientRow> = next
            .modes
            .iter()
            .map(|mode| match self.index_of(&mode.label) {
                Ok(k) => {
                    let mut row = self.rows[k].clone();
                    row.u.resize(n, C64::new(0.0, 0.0));
                    row.v.resize(n, C64::new(0.0, 0.0));
                    row
                }
                Err(_) => {
                    let idx = modes.iter().position(|m| m.label == mode.label).unwrap();
                    CoefficientRow::identity(n, idx)
                }
            })
            .collect();
        let rows = modes
            .iter()
            .enumerate()
            .map(|(idx, mode)| match next.index_of(&mode.label) {
                Ok(k) => {
                    let outer = &next.rows[k];
                    let mut row = CoefficientRow::zeros(n);
                    for (j, inner) in next_inputs.iter().enumerate() {
                        let inner_dag = inner.dagger();
                        for i in 0..n {
                            row.u[i] += outer.u[j] * inner.u[i] + outer.v[j] * inner_dag.u[i];
                            row.v[i] += outer.u[j] * inner.v[i] + outer.v[j] * inner_dag.v[i];
                        }
                    }
                    row
                }
                Err(_) => {
                    let mut row = self.rows[idx].clone();
                    row.u.resize(n, C64::new(0.0, 0.0));
                    row.v.resize(n, C64::new(0.0, 0.0));
                    row
                }
            })
            .collect();
        BosonicNetwork { modes, rows }
    }

    /// Largest entrywise difference between the rows of two networks over
    /// the same ordered inputs. `None` if the input lists differ.
    pub fn max_row_difference(&self, other: &BosonicNetwork) -> Option<f64> {
        let same_inputs = self.modes.len() == other.modes.len()
            && self.modes.iter().zip(&other.modes).all(|(a, b)| a.label == b.label);
        if !same_inputs {
            return None;
        }
        let diff = self
            .rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| {
                a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v)).map(|(x, y)| (x - y).norm())
            })
            .fold(0.0, f64::max);
        Some(diff)
    }
}
