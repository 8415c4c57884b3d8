//! Truncated Fock-space simulator.
//!
//! States are dense amplitude tensors over a product of truncated number
//! bases. Two-mode elements are exact exponentials of their quadratic
//! generators, evaluated block by block in the sector that the generator
//! conserves, and projected back onto the kept levels. Whatever norm leaks
//! past the cutoff is tracked as the norm deficit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::{InputState, ModeSpec};
use crate::interferometer::{
    InterferometerParams, ParamError, DEPHASING_EXTERNAL, DEPHASING_INTERNAL, LOSS_EXTERNAL,
    LOSS_INTERNAL, PROBE, SPIN, WRITE,
};

/// Largest tolerated norm deficit `1 - |psi|^2`.
pub const NORM_GUARD: f64 = 1e-8;
/// Required agreement between a run and the run with `cutoff + 4`.
pub const CONVERGENCE_TOL: f64 = 1e-7;
pub const MIN_CUTOFF: usize = 10;
pub const MAX_MODES: usize = 5;
pub const MAX_GAIN: f64 = 0.5;
pub const MAX_AMPLITUDE: f64 = 1.5;
pub const MAX_SIGNAL: u64 = 3;
/// Extra chain levels when exponentiating squeezer sectors.
const SQUEEZER_PAD: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("norm deficit {deficit:.3e} exceeds the guard at cutoff {cutoff}; increase the cutoff")]
    Truncation { deficit: f64, cutoff: usize },
    #[error("moments at cutoff {cutoff} and {} differ by {difference:.3e}", cutoff + 4)]
    NotConverged { difference: f64, cutoff: usize },
    #[error("cutoff {0} is below the minimum of {MIN_CUTOFF}")]
    CutoffTooSmall(usize),
    #[error("{0} modes exceed the limit of {MAX_MODES}")]
    TooManyModes(usize),
    #[error("outside the small-parameter domain: {0}")]
    OutOfDomain(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Dense state over the product of per-mode number bases; `dims[k]` is the
/// number of kept levels of mode `k`. The last mode varies fastest.
#[derive(Debug, Clone)]
pub struct TruncatedState {
    labels: Vec<String>,
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

/// Number-state amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)` for `n < levels`,
/// not renormalized.
fn coherent_amplitudes(alpha: C64, levels: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(levels);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..levels {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    amps
}

/// Sector of a two-mode generator, with the unitary mapping kept input
/// states to kept output states (`matrix[(out, in)]`).
struct Block {
    inputs: Vec<(usize, usize)>,
    outputs: Vec<(usize, usize)>,
    matrix: DMatrix<C64>,
}

/// Exponentiates a generator given on a chain of basis states by its
/// sub-diagonal couplings `K[k+1, k] = w[k] e^{i phase}`, anti-Hermitian
/// completion. The common phase is gauged out by `diag(e^{i k phase})`, so
/// only a real exponential is needed.
fn chain_exp(couplings: &[f64], phase: f64) -> DMatrix<C64> {
    let n = couplings.len() + 1;
    let mut k = DMatrix::<f64>::zeros(n, n);
    for (i, &w) in couplings.iter().enumerate() {
        k[(i + 1, i)] = w;
        k[(i, i + 1)] = -w;
    }
    let real = k.exp();
    DMatrix::from_fn(n, n, |r, c| C64::from_polar(real[(r, c)], (r as f64 - c as f64) * phase))
}

/// Beam-splitter sectors `n1 + n2 = N`, generator `theta (m1^dag m2 - h.c.)`:
/// `m1 -> cos(theta) m1 + sin(theta) m2`, `m2 -> cos(theta) m2 - sin(theta) m1`.
fn rotation_blocks(theta: f64, c1: usize, c2: usize) -> Vec<Block> {
    (0..c1 + c2 - 1)
        .map(|total| {
            let couplings: Vec<f64> =
                (0..total).map(|n1| theta * (((n1 + 1) * (total - n1)) as f64).sqrt()).collect();
            let full = chain_exp(&couplings, 0.0);
            let lo = total.saturating_sub(c2 - 1);
            let hi = total.min(c1 - 1);
            let kept: Vec<(usize, usize)> = (lo..=hi).map(|n1| (n1, total - n1)).collect();
            let matrix = DMatrix::from_fn(kept.len(), kept.len(), |r, c| full[(lo + r, lo + c)]);
            Block { inputs: kept.clone(), outputs: kept, matrix }
        })
        .collect()
}

/// Two-mode squeezer sectors `n1 - n2 = D`, generator
/// `r (e^{i theta} m1^dag m2^dag - h.c.)` with `sinh r = g`. Each sector is
/// exponentiated on a chain padded well past `out_levels` and then cut to
/// `in_levels` columns and `out_levels` rows per mode.
fn squeezer_blocks(g: f64, theta: f64, in_levels: usize, out_levels: usize, pad: usize) -> Vec<Block> {
    let r = g.asinh();
    let span = in_levels as isize - 1;
    (-span..=span)
        .map(|d| {
            let (s1, s2) = (d.max(0) as usize, (-d).max(0) as usize);
            let base = s1.max(s2);
            let chain = out_levels + pad - base;
            let couplings: Vec<f64> =
                (0..chain - 1).map(|k| r * (((k + s1 + 1) * (k + s2 + 1)) as f64).sqrt()).collect();
            let full = chain_exp(&couplings, theta);
            let n_in = in_levels - base;
            let n_out = out_levels - base;
            let state = |k: usize| (k + s1, k + s2);
            Block {
                inputs: (0..n_in).map(state).collect(),
                outputs: (0..n_out).map(state).collect(),
                matrix: DMatrix::from_fn(n_out, n_in, |r, c| full[(r, c)]),
            }
        })
        .collect()
}

/// First moments of a single mode: `<a>`, `<a^2>`, `<a^dag a>` and the norm
/// they were accumulated over.
#[derive(Debug, Clone, Copy, Default)]
struct ModeMoments {
    a: C64,
    a2: C64,
    n: f64,
    norm: f64,
}

impl ModeMoments {
    fn quadrature(&self) -> (f64, f64) {
        let a = self.a / self.norm;
        let a2 = self.a2 / self.norm;
        let n = self.n / self.norm;
        let mean = 2.0 * a.re;
        let second = 2.0 * a2.re + 2.0 * n + 1.0;
        (mean, second - mean * mean)
    }
}

impl TruncatedState {
    /// Product of the input states with `levels` kept levels per mode.
    pub fn new(modes: &[ModeSpec], levels: usize) -> Result<Self, OracleError> {
        if modes.len() > MAX_MODES {
            return Err(OracleError::TooManyModes(modes.len()));
        }
        let mut state = Self { labels: vec![], dims: vec![], amplitudes: vec![C64::new(1.0, 0.0)] };
        for m in modes {
            let alpha = match m.input_state {
                InputState::Vacuum => C64::new(0.0, 0.0),
                InputState::Coherent { amplitude } => amplitude,
            };
            state.push_mode(&m.label, coherent_amplitudes(alpha, levels))?;
        }
        Ok(state)
    }

    fn push_mode(&mut self, label: &str, factor: Vec<C64>) -> Result<(), OracleError> {
        if self.labels.len() == MAX_MODES {
            return Err(OracleError::TooManyModes(MAX_MODES + 1));
        }
        self.amplitudes =
            self.amplitudes.iter().flat_map(|&a| factor.iter().map(move |&f| a * f)).collect();
        self.labels.push(label.to_string());
        self.dims.push(factor.len());
        Ok(())
    }

    /// Appends a vacuum mode with `levels` kept levels.
    pub fn add_vacuum(&mut self, label: &str, levels: usize) -> Result<(), OracleError> {
        let mut factor = vec![C64::new(0.0, 0.0); levels];
        factor[0] = C64::new(1.0, 0.0);
        self.push_mode(label, factor)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `1 - |psi|^2`.
    pub fn deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    fn index(&self, label: &str) -> Result<usize, OracleError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| OracleError::UnknownMode(label.to_string()))
    }

    fn stride(&self, mode: usize) -> usize {
        self.dims[mode + 1..].iter().product()
    }

    /// Flat offsets with modes `i` and `j` at level zero.
    fn fibers(&self, i: usize, j: usize) -> Vec<usize> {
        let (si, sj) = (self.stride(i), self.stride(j));
        (0..self.amplitudes.len())
            .filter(|&idx| (idx / si) % self.dims[i] == 0 && (idx / sj) % self.dims[j] == 0)
            .collect()
    }

    fn apply_blocks(&mut self, i: usize, j: usize, blocks: &[Block]) {
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut input = Vec::new();
        for base in self.fibers(i, j) {
            for b in blocks {
                input.clear();
                input.extend(b.inputs.iter().map(|&(n1, n2)| self.amplitudes[base + n1 * si + n2 * sj]));
                if input.iter().all(|a| a.norm_sqr() == 0.0) {
                    continue;
                }
                for (r, &(n1, n2)) in b.outputs.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, x) in input.iter().enumerate() {
                        acc += b.matrix[(r, c)] * x;
                    }
                    self.amplitudes[base + n1 * si + n2 * sj] = acc;
                }
            }
        }
    }

    fn pair(&self, first: &str, second: &str) -> Result<(usize, usize), OracleError> {
        Ok((self.index(first)?, self.index(second)?))
    }

    /// `e^{i phi n}` on one mode, so that `a -> e^{i phi} a`.
    pub fn apply_phase(&mut self, label: &str, phi: f64) -> Result<(), OracleError> {
        let m = self.index(label)?;
        let (stride, dim) = (self.stride(m), self.dims[m]);
        for (idx, a) in self.amplitudes.iter_mut().enumerate() {
            let n = (idx / stride) % dim;
            *a *= C64::from_polar(1.0, phi * n as f64);
        }
        Ok(())
    }

    /// Real rotation `first -> cos(theta) first + sin(theta) second`,
    /// `second -> cos(theta) second - sin(theta) first`.
    pub fn apply_rotation(&mut self, first: &str, second: &str, theta: f64) -> Result<(), OracleError> {
        let (i, j) = self.pair(first, second)?;
        let blocks = rotation_blocks(theta, self.dims[i], self.dims[j]);
        self.apply_blocks(i, j, &blocks);
        Ok(())
    }

    /// Amplitude damping: registers a vacuum ancilla and rotates it in so
    /// that `o -> tau o + sqrt(1 - tau^2) V`.
    pub fn apply_attenuation(&mut self, label: &str, transmission: f64, ancilla: &str) -> Result<(), OracleError> {
        let levels = self.dims[self.index(label)?];
        self.add_vacuum(ancilla, levels)?;
        self.apply_rotation(label, ancilla, transmission.clamp(0.0, 1.0).acos())
    }

    /// Two-mode squeezer `S -> G S + g e^{i theta} a^dag` and the same with
    /// the roles exchanged. Both modes must share their number of levels.
    pub fn apply_squeezer(&mut self, spin: &str, optical: &str, g: f64, theta: f64) -> Result<(), OracleError> {
        let (i, j) = self.pair(spin, optical)?;
        let levels = self.dims[i];
        assert_eq!(levels, self.dims[j], "squeezed modes must share their cutoff");
        let blocks = squeezer_blocks(g, theta, levels, levels, SQUEEZER_PAD);
        self.apply_blocks(i, j, &blocks);
        Ok(())
    }

    fn accumulate(moments: &mut ModeMoments, fiber: &[C64], levels: usize, stride: usize) {
        // fiber(n, rest) with the measured mode at stride `stride`
        for (idx, &psi) in fiber.iter().enumerate() {
            if psi.norm_sqr() == 0.0 {
                continue;
            }
            let n = (idx / stride) % levels;
            moments.norm += psi.norm_sqr();
            moments.n += n as f64 * psi.norm_sqr();
            if n >= 1 {
                moments.a += fiber[idx - stride].conj() * (n as f64).sqrt() * psi;
            }
            if n >= 2 {
                moments.a2 += fiber[idx - 2 * stride].conj() * ((n * (n - 1)) as f64).sqrt() * psi;
            }
        }
    }

    fn mode_moments(&self, label: &str) -> Result<ModeMoments, OracleError> {
        let m = self.index(label)?;
        let mut out = ModeMoments::default();
        Self::accumulate(&mut out, &self.amplitudes, self.dims[m], self.stride(m));
        Ok(out)
    }

    /// Mean and variance of `X = a + a^dag` for one mode, normalized by the
    /// kept norm.
    pub fn quadrature_moments(&self, label: &str) -> Result<(f64, f64), OracleError> {
        Ok(self.mode_moments(label)?.quadrature())
    }

    /// `<a^dag a>`, normalized by the kept norm.
    pub fn mean_photons(&self, label: &str) -> Result<f64, OracleError> {
        let m = self.mode_moments(label)?;
        Ok(m.n / m.norm)
    }

    /// Applies a final squeezer on `(spin, optical)` with `out_levels` kept
    /// output levels per mode, fiber by fiber, and returns the quadrature
    /// moments of `optical` together with the norm deficit after the element.
    /// The squeezed output is never stored, so `out_levels` can be much
    /// larger than the stored cutoff.
    pub fn readout_squeezer(
        &self,
        spin: &str,
        optical: &str,
        g: f64,
        theta: f64,
        out_levels: usize,
    ) -> Result<((f64, f64), f64), OracleError> {
        let (i, j) = self.pair(spin, optical)?;
        let levels = self.dims[i];
        assert_eq!(levels, self.dims[j], "squeezed modes must share their cutoff");
        let blocks = squeezer_blocks(g, theta, levels, out_levels, SQUEEZER_PAD);
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut out = vec![C64::new(0.0, 0.0); out_levels * out_levels];
        let mut moments = ModeMoments::default();
        let mut input = Vec::new();
        for base in self.fibers(i, j) {
            out.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            for b in &blocks {
                input.clear();
                input.extend(b.inputs.iter().map(|&(n1, n2)| self.amplitudes[base + n1 * si + n2 * sj]));
                if input.iter().all(|a| a.norm_sqr() == 0.0) {
                    continue;
                }
                for (r, &(n1, n2)) in b.outputs.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, x) in input.iter().enumerate() {
                        acc += b.matrix[(r, c)] * x;
                    }
                    // optical index outermost
                    out[n2 * out_levels + n1] = acc;
                }
            }
            Self::accumulate(&mut moments, &out, out_levels, out_levels);
        }
        let deficit = 1.0 - moments.norm;
        Ok((moments.quadrature(), deficit))
    }
}

/// Certified oracle result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMoments {
    pub mean: f64,
    pub variance: f64,
    /// Cutoff of the reported run; the check ran at `cutoff + 4`.
    pub cutoff: usize,
    /// Largest norm deficit seen in the reported run.
    pub deficit: f64,
}

fn check_domain(params: &InterferometerParams, signal_n: u64, cutoff: usize) -> Result<(), OracleError> {
    params.validate()?;
    if cutoff < MIN_CUTOFF {
        return Err(OracleError::CutoffTooSmall(cutoff));
    }
    if params.g1 > MAX_GAIN || params.g2 > MAX_GAIN {
        return Err(OracleError::OutOfDomain(format!("gains must not exceed {MAX_GAIN}")));
    }
    if params.alpha().norm() > MAX_AMPLITUDE {
        return Err(OracleError::OutOfDomain(format!("|alpha| must not exceed {MAX_AMPLITUDE}")));
    }
    if signal_n > MAX_SIGNAL {
        return Err(OracleError::OutOfDomain(format!("signal photon number must not exceed {MAX_SIGNAL}")));
    }
    let channels = [params.d1, params.eta1, params.d2, params.eta2].iter().filter(|&&t| t < 1.0).count();
    if 3 + channels > MAX_MODES {
        return Err(OracleError::TooManyModes(3 + channels));
    }
    Ok(())
}

/// One uncertified run of the full interferometer at a fixed cutoff.
/// Loss ancillas are only registered for channels with transmission below
/// one.
pub fn oracle_run(params: &InterferometerParams, signal_n: u64, cutoff: usize) -> Result<OracleMoments, OracleError> {
    check_domain(params, signal_n, cutoff)?;
    let mut worst = 0.0_f64;
    let mut guard = |state: &TruncatedState| {
        let deficit = state.deficit();
        worst = worst.max(deficit);
        if deficit > NORM_GUARD {
            Err(OracleError::Truncation { deficit, cutoff })
        } else {
            Ok(())
        }
    };

    let mut psi = TruncatedState::new(&params.input_modes(), cutoff)?;
    guard(&psi)?;
    psi.apply_squeezer(SPIN, PROBE, params.g1, params.theta1)?;
    guard(&psi)?;
    psi.apply_rotation(SPIN, WRITE, std::f64::consts::FRAC_PI_4)?;
    guard(&psi)?;
    psi.apply_phase(SPIN, params.phase_for(signal_n as f64))?;
    if params.d1 < 1.0 {
        psi.apply_attenuation(SPIN, params.d1, DEPHASING_INTERNAL)?;
        guard(&psi)?;
    }
    if params.eta1 < 1.0 {
        psi.apply_attenuation(WRITE, params.eta1.sqrt(), LOSS_INTERNAL)?;
        guard(&psi)?;
    }
    psi.apply_rotation(SPIN, WRITE, -std::f64::consts::FRAC_PI_4)?;
    guard(&psi)?;
    if params.d2 < 1.0 {
        psi.apply_attenuation(SPIN, params.d2, DEPHASING_EXTERNAL)?;
        guard(&psi)?;
    }
    if params.eta2 < 1.0 {
        psi.apply_attenuation(PROBE, params.eta2.sqrt(), LOSS_EXTERNAL)?;
        guard(&psi)?;
    }
    let ((mean, variance), deficit) = psi.readout_squeezer(SPIN, PROBE, params.g2, params.theta2, 3 * cutoff)?;
    let worst = worst.max(deficit);
    if deficit > NORM_GUARD {
        return Err(OracleError::Truncation { deficit, cutoff });
    }
    Ok(OracleMoments { mean, variance, cutoff, deficit: worst })
}

/// Probe quadrature moments with `signal_n` signal photons, certified by
/// repeating the run at `cutoff + 4`.
pub fn oracle_simulate(params: &InterferometerParams, signal_n: u64, cutoff: usize) -> Result<OracleMoments, OracleError> {
    let coarse = oracle_run(params, signal_n, cutoff)?;
    let fine = oracle_run(params, signal_n, cutoff + 4)?;
    let difference = (coarse.mean - fine.mean).abs().max((coarse.variance - fine.variance).abs());
    if difference > CONVERGENCE_TOL {
        return Err(OracleError::NotConverged { difference, cutoff });
    }
    Ok(coarse)
}

/// [`oracle_simulate`] starting at `start` and raising the cutoff by two
/// while truncation or convergence fails, up to `max_cutoff`.
pub fn oracle_adaptive(
    params: &InterferometerParams,
    signal_n: u64,
    start: usize,
    max_cutoff: usize,
) -> Result<OracleMoments, OracleError> {
    let mut cutoff = start;
    loop {
        match oracle_simulate(params, signal_n, cutoff) {
            Err(OracleError::Truncation { .. } | OracleError::NotConverged { .. }) if cutoff + 2 <= max_cutoff => {
                cutoff += 2;
            }
            other => return other,
        }
    }
}
