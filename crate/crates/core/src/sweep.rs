//! Transmission sweeps of the correlation coefficient, readout-gain
//! optimization and level-set extraction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interferometer::InterferometerParams;
use crate::metrics::{qnd_correlation, LossModel, Method, MetricsError};

/// Points of the bracketing scan preceding the golden-section refinement.
pub const SCAN_POINTS: usize = 64;
/// Golden-section stopping width in `g2`.
pub const GOLDEN_TOL: f64 = 1e-6;
/// Default grid size per axis.
pub const DEFAULT_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("axis `{0}` must be strictly ascending")]
    NotAscending(&'static str),
    #[error("axis `{axis}` value {value} lies outside [0, 1]")]
    OutOfRange { axis: &'static str, value: f64 },
    #[error("invalid g2 bounds [{lo}, {hi}]: need 0 <= lo <= hi, both finite")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn unit_axis(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Search interval `[g1/10, 10 g1]` for the readout gain.
pub fn default_g2_bounds(g1: f64) -> (f64, f64) {
    (g1 / 10.0, 10.0 * g1)
}

/// Values on a rectangular grid, row-major with the first axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(x_axis: Vec<f64>, y_axis: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), x_axis.len() * y_axis.len(), "grid shape mismatch");
        Self { x_axis, y_axis, values }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_axis.len(), self.y_axis.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.y_axis.len() + j]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Bilinear interpolation; `None` outside the grid box.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let (i, tx) = locate(&self.x_axis, x)?;
        let (j, ty) = locate(&self.y_axis, y)?;
        let (nx, ny) = self.shape();
        let i1 = (i + 1).min(nx - 1);
        let j1 = (j + 1).min(ny - 1);
        let f00 = self.get(i, j);
        let f10 = self.get(i1, j);
        let f01 = self.get(i, j1);
        let f11 = self.get(i1, j1);
        Some(
            f00 * (1.0 - tx) * (1.0 - ty)
                + f10 * tx * (1.0 - ty)
                + f01 * (1.0 - tx) * ty
                + f11 * tx * ty,
        )
    }
}

/// Cell index and fractional position of `x` on an ascending axis.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (*axis.first()?, *axis.last()?);
    if !(first..=last).contains(&x) {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0.0));
    }
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(axis.len() - 2);
    Some((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
}

/// Result of maximizing `C` over the readout gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainOptimum {
    pub g2: f64,
    pub c: f64,
    /// The maximum sits on a search bound.
    pub at_boundary: bool,
}

/// Correlation coefficient `C` over a transmission grid, optionally with the
/// readout gain re-optimized at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub eta1_axis: Vec<f64>,
    pub eta2_axis: Vec<f64>,
    /// `C` at the base readout gain, row-major over `(eta1, eta2)`.
    pub c: Vec<f64>,
    /// Base preparation gain, for the optimized ratio `g2*/g1`.
    pub g1: f64,
    pub optimized: Option<Vec<GainOptimum>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Correlation,
    OptimizedCorrelation,
    OptimizedRatio,
}

impl SweepGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.eta2_axis.len() + j
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.c[self.index(i, j)]
    }

    pub fn optimum(&self, i: usize, j: usize) -> Option<GainOptimum> {
        self.optimized.as_ref().map(|o| o[self.index(i, j)])
    }

    /// One layer as a [`ScalarGrid`]; `None` for optimized layers of an
    /// unoptimized sweep.
    pub fn field(&self, field: Field) -> Option<ScalarGrid> {
        let values = match field {
            Field::Correlation => self.c.clone(),
            Field::OptimizedCorrelation => self.optimized.as_ref()?.iter().map(|o| o.c).collect(),
            Field::OptimizedRatio => {
                self.optimized.as_ref()?.iter().map(|o| o.g2 / self.g1).collect()
            }
        };
        Some(ScalarGrid::new(self.eta1_axis.clone(), self.eta2_axis.clone(), values))
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<(), SweepError> {
    if axis.is_empty() {
        return Err(SweepError::EmptyAxis(name));
    }
    if let Some(&value) = axis.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(SweepError::OutOfRange { axis: name, value });
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SweepError::NotAscending(name));
    }
    Ok(())
}

fn correlation_at(params: &InterferometerParams, n_beta: f64, method: Method) -> Result<f64, SweepError> {
    Ok(qnd_correlation(params, n_beta, method, LossModel::Lossy)?.c)
}

/// `C` at every `(eta1, eta2)` grid point, all other parameters from
/// `params`. Points are evaluated in parallel and assembled by index.
pub fn sweep_c(
    params: &InterferometerParams,
    n_beta: f64,
    eta1_axis: &[f64],
    eta2_axis: &[f64],
    method: Method,
) -> Result<SweepGrid, SweepError> {
    check_axis("eta1", eta1_axis)?;
    check_axis("eta2", eta2_axis)?;
    let n2 = eta2_axis.len();
    let c = (0..eta1_axis.len() * n2)
        .into_par_iter()
        .map(|k| {
            let p = params.with_transmissions(eta1_axis[k / n2], eta2_axis[k % n2]);
            correlation_at(&p, n_beta, method)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepGrid {
        eta1_axis: eta1_axis.to_vec(),
        eta2_axis: eta2_axis.to_vec(),
        c,
        g1: params.g1,
        optimized: None,
    })
}

/// Maximizes `f` on `[lo, hi]` by golden-section search, assuming a single
/// maximum inside the bracket.
pub fn golden_section_max<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64), E> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Scan abscissae: geometric when `lo > 0`, otherwise linear. The base gain
/// is included when it lies inside the bounds.
fn scan_points(lo: f64, hi: f64, include: f64) -> Vec<f64> {
    let last = (SCAN_POINTS - 1) as f64;
    let mut xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            let s = i as f64 / last;
            if lo > 0.0 {
                lo * (hi / lo).powf(s)
            } else {
                lo + (hi - lo) * s
            }
        })
        .collect();
    xs[0] = lo;
    xs[SCAN_POINTS - 1] = hi;
    if (lo..=hi).contains(&include) {
        xs.push(include);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
    }
    xs
}

/// Maximizes `C` over the readout gain `g2` in `bounds`, keeping `g1` fixed.
pub fn optimize_g2(
    params: &InterferometerParams,
    n_beta: f64,
    bounds: (f64, f64),
    method: Method,
) -> Result<GainOptimum, SweepError> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(SweepError::InvalidBounds { lo, hi });
    }
    let objective = |g2: f64| correlation_at(&params.with_g2(g2), n_beta, method);
    if lo == hi {
        return Ok(GainOptimum { g2: lo, c: objective(lo)?, at_boundary: true });
    }

    let xs = scan_points(lo, hi, params.g1);
    let values = xs.iter().map(|&x| objective(x)).collect::<Result<Vec<_>, _>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let left = xs[best.saturating_sub(1)];
    let right = xs[(best + 1).min(xs.len() - 1)];
    let (mut g2, mut c) = (xs[best], values[best]);
    let (x, fx) = golden_section_max(objective, left, right, GOLDEN_TOL)?;
    if fx > c {
        g2 = x;
        c = fx;
    }
    let edge = GOLDEN_TOL.max(1e-9 * hi);
    let at_boundary = (g2 - lo).abs() <= edge || (hi - g2).abs() <= edge;
    Ok(GainOptimum { g2, c, at_boundary })
}

/// Sweep with the readout gain re-optimized at every grid point.
pub fn optimized_ratio_grid(
    params: &InterferometerParams,
    n_beta: f64,
    eta1_axis: &[f64],
    eta2_axis: &[f64],
    bounds: (f64, f64),
    method: Method,
) -> Result<SweepGrid, SweepError> {
    let mut grid = sweep_c(params, n_beta, eta1_axis, eta2_axis, method)?;
    let n2 = eta2_axis.len();
    let optimized = (0..eta1_axis.len() * n2)
        .into_par_iter()
        .map(|k| {
            let p = params.with_transmissions(eta1_axis[k / n2], eta2_axis[k % n2]);
            optimize_g2(&p, n_beta, bounds, method)
        })
        .collect::<Result<Vec<_>, _>>()?;
    grid.optimized = Some(optimized);
    Ok(grid)
}

/// Level-set polylines in `(x, y)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

/// Grid edge: `(0, i, j)` joins `(i, j)`-`(i+1, j)`, `(1, i, j)` joins
/// `(i, j)`-`(i, j+1)`.
type EdgeKey = (u8, usize, usize);

/// Marching squares with linear interpolation along cell edges. Vertices
/// with value `>= level` count as inside; saddle cells are resolved by the
/// mean of their corners. Open polylines end on the grid boundary, closed
/// ones repeat their first point.
pub fn extract_contour(grid: &ScalarGrid, level: f64) -> ContourSet {
    let (nx, ny) = grid.shape();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut points: BTreeMap<EdgeKey, [f64; 2]> = BTreeMap::new();

    let mut edge_point = |key: EdgeKey| {
        *points.entry(key).or_insert_with(|| {
            let (dir, i, j) = key;
            let (i1, j1) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
            let (f0, f1) = (grid.get(i, j), grid.get(i1, j1));
            let t = (level - f0) / (f1 - f0);
            let (x0, y0) = (grid.x_axis[i], grid.y_axis[j]);
            let (x1, y1) = (grid.x_axis[i1], grid.y_axis[j1]);
            [x0 + t * (x1 - x0), y0 + t * (y1 - y0)]
        })
    };

    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            // corners counter-clockwise from (i, j); edge k joins corner k and k+1
            let corners = [grid.get(i, j), grid.get(i + 1, j), grid.get(i + 1, j + 1), grid.get(i, j + 1)];
            let edges: [EdgeKey; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let inside = corners.map(|v| v >= level);
            let crossed: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
                4 => {
                    let centre = corners.iter().sum::<f64>() / 4.0 >= level;
                    // cut off each corner whose state differs from the centre
                    for k in (0..4).filter(|&k| inside[k] != centre) {
                        segments.push((edges[(k + 3) % 4], edges[k]));
                    }
                }
                _ => {}
            }
        }
    }
    for &(a, b) in &segments {
        edge_point(a);
        edge_point(b);
    }

    let mut incident: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_seg: usize, start_edge: EdgeKey, used: &mut Vec<bool>| {
        let mut line = vec![points[&start_edge]];
        let (mut seg, mut from) = (start_seg, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let to = if a == from { b } else { a };
            line.push(points[&to]);
            match incident[&to].iter().copied().find(|&s| !used[s]) {
                Some(next) => {
                    seg = next;
                    from = to;
                }
                None => break,
            }
        }
        line
    };

    // open chains start on an edge with a single incident segment
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        if incident[&a].len() == 1 {
            polylines.push(walk(s, a, &mut used));
        } else if incident[&b].len() == 1 {
            polylines.push(walk(s, b, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let start = segments[s].0;
            polylines.push(walk(s, start, &mut used));
        }
    }

    ContourSet { level, polylines }
}
