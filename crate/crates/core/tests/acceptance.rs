//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qnd_core::fock::{oracle_adaptive, MIN_CUTOFF};
use qnd_core::interferometer::{
    build_lossless_network, build_lossy_network, lossless_coefficients, lossy_coefficients, PROBE, SPIN,
};
use qnd_core::metrics::{coherent_moments, conditional_moments, fock_snr, qnd_correlation};
use qnd_core::sweep::{
    default_g2_bounds, extract_contour, optimized_ratio_grid, sweep_c, unit_axis, Field, DEFAULT_GRID,
};
use qnd_core::{CoefficientRow, InterferometerParams, LossModel, Method};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn reference() -> InterferometerParams {
    InterferometerParams::reference()
}

const N_BETA: f64 = 1e8;

fn random_params(rng: &mut StdRng) -> InterferometerParams {
    let mut angle = || rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let (theta1, theta2, phi0, theta_alpha) = (angle(), angle(), angle(), angle());
    InterferometerParams {
        g1: rng.gen_range(0.0..3.0),
        g2: rng.gen_range(0.0..3.0),
        theta1,
        theta2,
        phi0,
        theta_alpha,
        kappa: rng.gen_range(0.0..1e-2),
        n_alpha: rng.gen_range(0.0..100.0),
        eta1: rng.gen_range(0.0..=1.0),
        eta2: rng.gen_range(0.0..=1.0),
        d1: rng.gen_range(0.0..=1.0),
        d2: rng.gen_range(0.0..=1.0),
    }
}

fn row_distance(a: &CoefficientRow, b: &CoefficientRow) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Poisson average of engine moments by explicit summation over photon
/// numbers within eight standard deviations of the mean.
struct SummedMoments {
    mean_x: f64,
    var_x: f64,
    cov_nx: f64,
}

fn summed_poisson_moments(params: &InterferometerParams, n_beta: f64, lossy: bool) -> SummedMoments {
    let sigma = n_beta.sqrt();
    let lo = (n_beta - 8.0 * sigma).max(0.0).floor() as u64;
    let hi = (n_beta + 8.0 * sigma).ceil() as u64;
    let mode = n_beta.floor() as u64;
    // pmf up to normalization, built outward from the mode
    let mut weights = vec![0.0; (hi - lo + 1) as usize];
    weights[(mode - lo) as usize] = 1.0;
    for n in mode + 1..=hi {
        weights[(n - lo) as usize] = weights[(n - 1 - lo) as usize] * n_beta / n as f64;
    }
    for n in (lo..mode).rev() {
        weights[(n - lo) as usize] = weights[(n + 1 - lo) as usize] * (n + 1) as f64 / n_beta;
    }
    let total: f64 = weights.iter().sum();

    let mut means = Vec::with_capacity(weights.len());
    let mut vars = Vec::with_capacity(weights.len());
    for n in lo..=hi {
        let phi = params.phase_for(n as f64);
        let net = if lossy { build_lossy_network(params, phi) } else { build_lossless_network(params, phi) };
        let m = net.quadrature_moments(PROBE).unwrap();
        means.push(m.mean);
        vars.push(m.variance);
    }
    let avg = |f: &dyn Fn(usize) -> f64| (0..weights.len()).map(|k| weights[k] * f(k)).sum::<f64>() / total;
    let mean_x = avg(&|k| means[k]);
    let mean_n = avg(&|k| (lo + k as u64) as f64);
    let var_x = avg(&|k| vars[k]) + avg(&|k| (means[k] - mean_x).powi(2));
    let cov_nx = avg(&|k| ((lo + k as u64) as f64 - mean_n) * (means[k] - mean_x));
    SummedMoments { mean_x, var_x, cov_nx }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst_row: f64 = 0.0;
    let mut worst_comm: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng).lossless();
        let phi = rng.gen_range(-10.0..10.0);
        let net = build_lossless_network(&p, phi);
        let k = lossless_coefficients(&p, phi);
        worst_row = worst_row.max(row_distance(net.row(PROBE).unwrap(), &k.probe_row()));
        worst_row = worst_row.max(row_distance(net.row(SPIN).unwrap(), &k.spin_row()));
        worst_comm = worst_comm.max((k.probe_commutator() - 1.0).abs());
    }
    ensure(worst_row <= 1e-12, format!("row mismatch {worst_row:.2e}"))?;
    ensure(worst_comm <= 1e-12, format!("|A|^2-|B|^2-|C|^2 off by {worst_comm:.2e}"))?;
    Ok(format!("max row diff {worst_row:.1e}, max commutator error {worst_comm:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst_row: f64 = 0.0;
    let mut worst_reduction: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let phi = rng.gen_range(-10.0..10.0);
        let net = build_lossy_network(&p, phi);
        worst_row = worst_row.max(row_distance(net.row(PROBE).unwrap(), &lossy_coefficients(&p, phi).probe_row(&p)));

        let q = p.lossless();
        let lossy = lossy_coefficients(&q, phi);
        let ideal = lossless_coefficients(&q, phi);
        for (x, y) in [(lossy.a, ideal.a), (lossy.b, ideal.b), (lossy.c, ideal.c)] {
            worst_reduction = worst_reduction.max((x - y).norm());
        }
        for z in [lossy.d, lossy.e] {
            worst_reduction = worst_reduction.max(z.norm());
        }
        // Langevin weights vanish at unit dephasing transmission
        let row = lossy.probe_row(&q);
        worst_reduction = worst_reduction.max(row.v[3].norm()).max(row.v[5].norm());
    }
    ensure(worst_row <= 1e-12, format!("row mismatch {worst_row:.2e}"))?;
    ensure(worst_reduction <= 1e-12, format!("lossless reduction off by {worst_reduction:.2e}"))?;
    Ok(format!("max row diff {worst_row:.1e}, reduction error {worst_reduction:.1e}"))
}

fn criterion_3() -> Outcome {
    let p = reference().lossless();
    let snr = fock_snr(&p, 10_000);
    let balanced = p.g1 * p.g1 * p.kappa * p.kappa * p.n_alpha * 1e8;
    ensure(relative(snr.ratio, 9.0) <= 1e-6, format!("R = {} vs 9", snr.ratio))?;
    ensure(relative(balanced, 9.0) <= 1e-12, "balanced-case value is not 9")?;

    let (big_g1, big_g2) = (p.big_g1(), p.big_g2());
    let mut worst: f64 = 0.0;
    for k in 0..=16 {
        let kn = 10f64.powf(-6.0 + 4.0 * k as f64 / 16.0);
        let n_b = (kn / p.kappa).round() as u64;
        let kn = p.kappa * n_b as f64;
        let m = conditional_moments(&p, n_b, LossModel::Lossless);
        let mean = p.g2 * p.kappa * p.n_alpha.sqrt() * n_b as f64;
        let var = (big_g2 * big_g1 - p.g2 * p.g1).powi(2)
            + (big_g2 * p.g1 - p.g2 * big_g1).powi(2)
            + big_g1 * big_g1 * p.g2 * p.g2 * kn * kn / 2.0;
        let err = relative(m.mean, mean).max(relative(m.variance, var));
        ensure(err <= 5.0 * kn, format!("kappa n = {kn:.1e}: relative deviation {err:.2e}"))?;
        worst = worst.max(err / kn);
    }
    Ok(format!("R = {:.9}, worst deviation {worst:.2} kappa n", snr.ratio))
}

fn criterion_4() -> Outcome {
    let p = reference().lossless();
    let lin = qnd_correlation(&p, N_BETA, Method::Linearized, LossModel::Lossless).map_err(|e| e.to_string())?;
    let exact = qnd_correlation(&p, N_BETA, Method::Exact, LossModel::Lossless).map_err(|e| e.to_string())?;

    let (big_g1, big_g2, g1, g2) = (p.big_g1(), p.big_g2(), p.g1, p.g2);
    let closed = 1.0
        / (1.0
            + ((big_g2 * big_g1 - g2 * g1).powi(2) + (big_g2 * g1 - big_g1 * g2).powi(2))
                / (g2 * g2 * p.kappa * p.kappa * p.n_alpha * N_BETA)
            + big_g1 * big_g1 * (N_BETA + 1.0) / (2.0 * p.n_alpha));
    let summed = summed_poisson_moments(&p, N_BETA, false);
    let summed_c2 = summed.cov_nx.powi(2) / (N_BETA * summed.var_x);

    ensure((lin.c2 - closed).abs() <= 1e-12, format!("C^2 {} vs closed form {closed}", lin.c2))?;
    ensure((lin.c2 - 0.89960).abs() <= 1e-4, format!("C^2 = {}", lin.c2))?;
    ensure((lin.c - 0.94847).abs() <= 1e-4, format!("C = {}", lin.c))?;
    ensure(relative(exact.c2, lin.c2) <= 1e-3, format!("exact C^2 {} vs linearized {}", exact.c2, lin.c2))?;
    ensure(relative(exact.c2, summed_c2) <= 1e-6, format!("exact C^2 {} vs summed {summed_c2}", exact.c2))?;
    Ok(format!("C^2 = {:.6}, C = {:.6}, exact C^2 = {:.6}", lin.c2, lin.c, exact.c2))
}

fn criterion_5() -> Outcome {
    let p = reference();
    let lin = qnd_correlation(&p, N_BETA, Method::Linearized, LossModel::Lossy).map_err(|e| e.to_string())?;
    let exact = qnd_correlation(&p, N_BETA, Method::Exact, LossModel::Lossy).map_err(|e| e.to_string())?;
    let summed = summed_poisson_moments(&p, N_BETA, true);
    let summed_c = (summed.cov_nx.powi(2) / (N_BETA * summed.var_x)).sqrt();
    let lin_moments = coherent_moments(&p, N_BETA, Method::Linearized, LossModel::Lossy).unwrap();

    ensure((lin.c - 0.6166).abs() <= 1e-3, format!("C = {}", lin.c))?;
    ensure(lin.c > 0.6, "C not above 0.6 in the upper-right corner")?;
    ensure((exact.c - summed_c).abs() <= 1e-6, format!("exact C {} vs summed {summed_c}", exact.c))?;
    ensure(relative(lin_moments.mean_x, summed.mean_x) <= 1e-3, "linearized mean off")?;
    ensure(relative(lin_moments.var_x, summed.var_x) <= 1e-3, "linearized variance off")?;

    let q = p.lossless();
    for method in [Method::Linearized, Method::Exact] {
        let a = coherent_moments(&q, N_BETA, method, LossModel::Lossy).unwrap();
        let b = coherent_moments(&q, N_BETA, method, LossModel::Lossless).unwrap();
        for (x, y) in [(a.mean_x, b.mean_x), (a.var_x, b.var_x), (a.cov_nx, b.cov_nx)] {
            ensure(relative(x, y) <= 1e-12, format!("{method:?} lossy vs lossless: {x} vs {y}"))?;
        }
    }
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let (g1, g2): (f64, f64) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
        let lhs = g2 * g2 * (2.0 * g1 * g1 + 1.0) / 4.0 + g2 * g2 / 4.0;
        let rhs = (1.0 + g1 * g1) * g2 * g2 / 2.0;
        ensure((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "recombination identity")?;
    }
    Ok(format!("C = {:.5} (linearized), {:.5} (exact), summed {:.5}", lin.c, exact.c, summed_c))
}

fn criterion_6() -> Outcome {
    let axis = unit_axis(DEFAULT_GRID);
    let grid = sweep_c(&reference(), N_BETA, &axis, &axis, Method::Exact).map_err(|e| e.to_string())?;
    let n = axis.len();
    let mut failures = Vec::new();

    let mut drops_eta1 = 0;
    let mut drops_eta2 = 0;
    let mut worst_drop: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = grid.correlation(i, j);
            if i + 1 < n && grid.correlation(i + 1, j) < c {
                drops_eta1 += 1;
                worst_drop = worst_drop.max(c - grid.correlation(i + 1, j));
            }
            if j + 1 < n && grid.correlation(i, j + 1) < c {
                drops_eta2 += 1;
                worst_drop = worst_drop.max(c - grid.correlation(i, j + 1));
            }
        }
    }
    if drops_eta1 + drops_eta2 > 0 {
        failures.push(format!(
            "C decreases along eta1 at {drops_eta1} and along eta2 at {drops_eta2} steps (largest drop {worst_drop:.3e})"
        ));
    }
    let corner = grid.correlation(n - 1, 0);
    if corner >= 0.2 {
        failures.push(format!("C(1, 0) = {corner:.5} is not below 0.2"));
    }

    let field = grid.field(Field::Correlation).unwrap();
    let contour = extract_contour(&field, 0.6);
    let single = contour.polylines.len() == 1 && {
        let line = &contour.polylines[0];
        let on_boundary = |p: &[f64; 2]| p.iter().any(|&x| x == 0.0 || x == 1.0);
        line.len() >= 2 && on_boundary(&line[0]) && on_boundary(line.last().unwrap())
    };
    let (lo, hi) = field.min_max();
    if !(single && lo < 0.6 && hi > 0.6) {
        failures.push(format!("expected one boundary-to-boundary C = 0.6 curve, got {} polylines", contour.polylines.len()));
    }
    if failures.is_empty() {
        Ok(format!("monotone, C(1, 0) = {corner:.4}, single 0.6 contour"))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let p = reference();
    let axis = unit_axis(DEFAULT_GRID);
    let grid = optimized_ratio_grid(&p, N_BETA, &axis, &axis, default_g2_bounds(p.g1), Method::Exact)
        .map_err(|e| e.to_string())?;
    let n = axis.len();
    let (mut base_cells, mut opt_cells, mut lost) = (0, 0, 0);
    let (mut below, mut above) = (false, false);
    for i in 0..n {
        for j in 0..n {
            let c = grid.correlation(i, j);
            let opt = grid.optimum(i, j).unwrap();
            ensure(opt.c >= c - 1e-12, format!("C* {} < C {c} at ({i}, {j})", opt.c))?;
            let (b, o) = (c >= 0.6, opt.c >= 0.6);
            base_cells += b as usize;
            opt_cells += o as usize;
            lost += (b && !o) as usize;
            let ratio = opt.g2 / p.g1;
            below |= ratio < 1.0;
            above |= ratio > 1.0;
        }
    }
    ensure(lost == 0, format!("{lost} cells leave the C >= 0.6 region after optimization"))?;
    ensure(opt_cells > base_cells, format!("no region growth ({base_cells} -> {opt_cells})"))?;
    ensure(below && above, format!("ratios below 1: {below}, above 1: {above}"))?;
    Ok(format!("C >= 0.6 region grows from {base_cells} to {opt_cells} cells, ratios straddle 1"))
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut max_cutoff = 0;
    for case in 0..50 {
        let mut channels = [1.0; 4];
        let lossy = rng.gen_range(0..=2);
        for _ in 0..lossy {
            let k = rng.gen_range(0..4);
            channels[k] = [1.0, 0.9, 0.8][rng.gen_range(0..3)];
        }
        let amplitude: f64 = rng.gen_range(0.0..=1.5);
        let p = InterferometerParams {
            g1: rng.gen_range(0.0..=0.5),
            g2: rng.gen_range(0.0..=0.5),
            theta1: rng.gen_range(0.0..std::f64::consts::TAU),
            theta2: rng.gen_range(0.0..std::f64::consts::TAU),
            phi0: rng.gen_range(0.0..std::f64::consts::PI),
            kappa: rng.gen_range(0.0..0.3),
            n_alpha: amplitude * amplitude,
            theta_alpha: rng.gen_range(0.0..std::f64::consts::TAU),
            d1: channels[0],
            eta1: channels[1],
            d2: channels[2],
            eta2: channels[3],
        };
        let signal = rng.gen_range(0..=3);
        let oracle = oracle_adaptive(&p, signal, MIN_CUTOFF, 30).map_err(|e| format!("case {case}: {e}"))?;
        let engine = build_lossy_network(&p, p.phase_for(signal as f64)).quadrature_moments(PROBE).unwrap();
        let err = (oracle.mean - engine.mean).abs().max((oracle.variance - engine.variance).abs());
        ensure(err <= 1e-6, format!("case {case}: oracle {oracle:?} vs engine {engine:?}"))?;
        worst = worst.max(err);
        max_cutoff = max_cutoff.max(oracle.cutoff);
    }
    Ok(format!("50 cases, max deviation {worst:.1e}, largest cutoff {max_cutoff}"))
}

fn criterion_9() -> Outcome {
    let mut report = Vec::new();
    for (g, kappa, n_alpha, n_beta) in [(3.0, 2e-10, 1e15, 1e8), (1.0, 2e-7, 2e12, 1e6), (0.5, 5e-4, 1e9, 1e3)] {
        let p = InterferometerParams { g1: g, g2: g, kappa, n_alpha, ..reference().lossless() };
        let big_g_sq = p.big_g1().powi(2);
        ensure(g * g * kappa * kappa * n_alpha * n_beta >= 1e4, "signal condition not met")?;
        ensure(2.0 * n_alpha >= 1e6 * big_g_sq * (n_beta + 1.0), "back-action condition not met")?;
        for method in [Method::Linearized, Method::Exact] {
            let c = qnd_correlation(&p, n_beta, method, LossModel::Lossless).map_err(|e| e.to_string())?;
            ensure(c.c2 > 0.999, format!("{method:?} C^2 = {} at g = {g}", c.c2))?;
            report.push(c.c2);
        }
    }
    Ok(format!("min C^2 = {:.6}", report.iter().cloned().fold(1.0, f64::min)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("coefficient identity, lossless", criterion_1),
        ("coefficient identity, lossy", criterion_2),
        ("Fock-signal SNR", criterion_3),
        ("QND correlation, lossless", criterion_4),
        ("QND correlation, lossy", criterion_5),
        ("transmission map", criterion_6),
        ("optimized readout gain", criterion_7),
        ("Fock oracle equivalence", criterion_8),
        ("perfect-correlation limit", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.2}s]: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.2}s]: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
