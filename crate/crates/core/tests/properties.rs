use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qnd_core::interferometer::{
    build_lossless_network, build_lossy_network, lossless_coefficients, lossy_coefficients, PROBE, SPIN,
};
use qnd_core::metrics::{coherent_moments, fock_snr, moments_at_phase, poisson_mixture, qnd_correlation};
use qnd_core::{BosonicNetwork, InterferometerParams, LossModel, Method, ModeSpec};

#[derive(Debug, Clone)]
enum Element {
    Squeezer(usize, usize, f64, f64),
    Splitter(usize, usize, f64, f64),
    Phase(usize, f64),
}

const LABELS: [&str; 3] = ["a", "b", "c"];

fn element() -> impl Strategy<Value = Element> {
    let pair = (0..3usize, 1..3usize).prop_map(|(i, k)| (i, (i + k) % 3));
    prop_oneof![
        (pair.clone(), 0.0..1.0, -PI..PI).prop_map(|((i, j), g, th)| Element::Squeezer(i, j, g, th)),
        (pair, 0.0..TAU, -PI..PI).prop_map(|((i, j), mix, ph)| Element::Splitter(i, j, mix, ph)),
        (0..3usize, -PI..PI).prop_map(|(i, phi)| Element::Phase(i, phi)),
    ]
}

fn apply(net: BosonicNetwork, e: &Element) -> BosonicNetwork {
    match *e {
        Element::Squeezer(i, j, g, th) => net.two_mode_squeezer(LABELS[i], LABELS[j], g, th),
        Element::Splitter(i, j, mix, ph) => {
            // t real, r purely imaginary up to a common phase: Re(t r*) = 0
            let common = C64::from_polar(1.0, ph);
            let t = common * mix.cos();
            let r = common * C64::i() * mix.sin();
            net.beam_splitter(LABELS[i], LABELS[j], t, r)
        }
        Element::Phase(i, phi) => net.phase_shift(LABELS[i], phi),
    }
    .unwrap()
}

fn network(elements: &[Element]) -> BosonicNetwork {
    let modes = vec![
        ModeSpec::vacuum("a"),
        ModeSpec::coherent("b", C64::new(0.3, -1.2)),
        ModeSpec::vacuum("c"),
    ];
    elements.iter().fold(BosonicNetwork::new(modes).unwrap(), apply)
}

fn params() -> impl Strategy<Value = InterferometerParams> {
    (
        (0.0..4.0, 0.0..4.0, -PI..PI, -PI..PI, -PI..PI, -PI..PI),
        (0.0..1e-3, 0.0..1e4),
        (0.0..=1.0, 0.0..=1.0, 0.0..=1.0, 0.0..=1.0),
    )
        .prop_map(|((g1, g2, theta1, theta2, phi0, theta_alpha), (kappa, n_alpha), (eta1, eta2, d1, d2))| {
            InterferometerParams { g1, g2, theta1, theta2, phi0, kappa, n_alpha, theta_alpha, eta1, eta2, d1, d2 }
        })
}

fn standard(p: InterferometerParams) -> InterferometerParams {
    InterferometerParams { theta1: 0.0, theta2: PI, theta_alpha: PI / 2.0, phi0: 0.0, ..p }
}

proptest! {
    #[test]
    fn commutator_weight_is_preserved(elements in prop::collection::vec(element(), 0..8)) {
        let net = network(&elements);
        for label in LABELS {
            prop_assert!((net.commutator_weight(label).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn attenuation_keeps_commutator(tau in 0.0..=1.0f64, g in 0.0..2.0f64) {
        let net = network(&[Element::Squeezer(0, 1, g, 0.4)])
            .attenuate("a", tau, "va")
            .unwrap()
            .attenuate("b", tau, "vb")
            .unwrap();
        for label in ["a", "b", "c", "va", "vb"] {
            prop_assert!((net.commutator_weight(label).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn composition_is_associative(
        first in prop::collection::vec(element(), 1..4),
        second in prop::collection::vec(element(), 1..4),
        third in prop::collection::vec(element(), 1..4),
    ) {
        let (x, y, z) = (network(&first), network(&second), network(&third));
        let left = x.compose(&y).compose(&z);
        let right = x.compose(&y.compose(&z));
        prop_assert!(left.max_row_difference(&right).unwrap() <= 1e-12);

        let all: Vec<Element> = first.iter().chain(&second).chain(&third).cloned().collect();
        prop_assert!(left.max_row_difference(&network(&all)).unwrap() <= 1e-12);
    }

    #[test]
    fn phase_is_two_pi_periodic(p in params(), phi in -PI..PI) {
        for loss in [LossModel::Lossless, LossModel::Lossy] {
            let a = moments_at_phase(&p, phi, loss);
            let b = moments_at_phase(&p, phi + TAU, loss);
            prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
            prop_assert!((a.variance - b.variance).abs() <= 1e-9 * a.variance);
        }
    }

    #[test]
    fn moment_sets_satisfy_cauchy_schwarz(p in params(), n_beta in 1.0..1e6f64) {
        for loss in [LossModel::Lossless, LossModel::Lossy] {
            for (q, method) in [(p, Method::Exact), (standard(p), Method::Linearized), (standard(p), Method::Exact)] {
                let m = coherent_moments(&q, n_beta, method, loss).unwrap();
                prop_assert!(m.var_x >= 0.0 && m.var_n >= 0.0);
                prop_assert!(m.cov_nx * m.cov_nx <= m.var_n * m.var_x * (1.0 + 1e-12));
                let c = qnd_correlation(&q, n_beta, method, loss).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&c.c2), "C^2 = {}", c.c2);
            }
        }
    }

    #[test]
    fn mixture_variance_dominates_conditional(p in params(), n_beta in 0.5..1e6f64) {
        for loss in [LossModel::Lossless, LossModel::Lossy] {
            let mix = poisson_mixture(&p, n_beta, loss);
            prop_assert!(mix.variance_of_mean >= 0.0);
            prop_assert!(mix.moments.var_x >= mix.mean_conditional_variance);
        }
    }

    #[test]
    fn snr_grows_with_readout_gain(g1 in 0.2..4.0f64, kn in 1e-6..1e-3f64) {
        let base = InterferometerParams { g1, g2: g1, ..InterferometerParams::reference().lossless() };
        let n_b = 1000;
        let p = InterferometerParams { kappa: kn / n_b as f64, ..base };
        let mut previous = -1.0;
        for k in 0..=40 {
            let r = fock_snr(&p.with_g2(g1 * k as f64 / 40.0), n_b).ratio;
            prop_assert!(r >= previous, "R dropped at g2 = {}", g1 * k as f64 / 40.0);
            previous = r;
        }
    }

    #[test]
    fn exact_tracks_linearized_at_operating_points(
        eta1 in 0.0..=1.0f64,
        eta2 in 0.0..=1.0f64,
        g2 in 0.3..30.0f64,
    ) {
        let p = InterferometerParams::reference().with_transmissions(eta1, eta2).with_g2(g2);
        let n_beta = 1e8;
        let bound = 1e-3f64.max(10.0 * p.kappa * p.kappa * n_beta);
        let exact = coherent_moments(&p, n_beta, Method::Exact, LossModel::Lossy).unwrap();
        let lin = coherent_moments(&p, n_beta, Method::Linearized, LossModel::Lossy).unwrap();
        for (x, y) in [(exact.mean_x, lin.mean_x), (exact.var_x, lin.var_x), (exact.cov_nx, lin.cov_nx)] {
            prop_assert!((x - y).abs() <= bound * y.abs(), "{x} vs {y}");
        }
        prop_assert_eq!(exact.mean_n, lin.mean_n);
        prop_assert_eq!(exact.var_n, lin.var_n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn engine_matches_closed_forms(p in params(), phi in -10.0..10.0f64) {
        let q = p.lossless();
        let net = build_lossless_network(&q, phi);
        let k = lossless_coefficients(&q, phi);
        let (probe, spin) = (k.probe_row(), k.spin_row());
        for (row, closed) in [(net.row(PROBE).unwrap(), &probe), (net.row(SPIN).unwrap(), &spin)] {
            for (x, y) in row.u.iter().zip(&closed.u).chain(row.v.iter().zip(&closed.v)) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
        }

        let lossy = build_lossy_network(&p, phi);
        let closed = lossy_coefficients(&p, phi).probe_row(&p);
        let row = lossy.row(PROBE).unwrap();
        for (x, y) in row.u.iter().zip(&closed.u).chain(row.v.iter().zip(&closed.v)) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
        prop_assert!((lossy.commutator_weight(PROBE).unwrap() - 1.0).abs() <= 1e-12);
    }
}
