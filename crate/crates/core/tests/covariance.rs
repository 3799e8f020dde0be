use ddpilot::covariance::{build_factor_exact, build_factor_sinc, Domain};
use ddpilot::quadrature::QuadratureSpec;
use ddpilot::{ChannelProfile, GridConfig, PowerProfile};
use num_complex::Complex64;
use std::f64::consts::PI;

mod common;

fn rect_channel(tau_d: f64, nu_d: f64) -> ChannelProfile {
    ChannelProfile::rectangular(tau_d, nu_d, 4.0).unwrap()
}

#[test]
fn rectangular_lag_zero_is_level_times_spread() {
    let grid = GridConfig::new(8, 4, 1.07e-4, 1e4).unwrap();
    let ch = rect_channel(2e-5, 300.0);
    let f = build_factor_exact(&ch, &grid, Domain::Delay, &QuadratureSpec::default()).unwrap();
    assert!(f.converged);
    // level is √S0 = 2
    assert!((f.factor.generator()[0].re / (2.0 * 2e-5) - 1.0).abs() < 1e-14);
}

#[test]
fn rectangular_exact_matches_sinc_formula() {
    let grid = GridConfig::new(256, 16, 1.07e-4, 1e4).unwrap();
    // F τ_D = 1e-2
    let ch = rect_channel(1e-6, 500.0);
    let quad = QuadratureSpec::default();
    let exact = build_factor_exact(&ch, &grid, Domain::Delay, &quad).unwrap().factor;
    let sinc = build_factor_sinc(&ch, &grid, Domain::Delay);
    let expected = 2.0 * 1e-6 * common::sinc(0.1);
    assert!((sinc.generator()[10].re - expected).abs() < 1e-15 * expected.abs().max(1e-300) + 1e-22);
    assert!((exact.generator()[10].re - expected).abs() / expected < 1e-8);
    for k in 0..256 {
        let (a, b) = (exact.generator()[k], sinc.generator()[k]);
        assert!((a - b).norm() <= 1e-8 * sinc.generator()[0].re, "lag {k}");
    }
}

#[test]
fn doppler_factor_uses_positive_phase() {
    // an asymmetric tabulated profile exposes the sign of the exponent
    let grid = GridConfig::new(4, 8, 1e-3, 1e3).unwrap();
    let delay = PowerProfile::Rectangular { level: 1.0 };
    let doppler = PowerProfile::Tabulated {
        points: vec![(-50.0, 0.0), (50.0, 2.0)],
    };
    let ch = ChannelProfile::new(1e-4, 100.0, delay, doppler).unwrap();
    let f = build_factor_exact(&ch, &grid, Domain::Doppler, &QuadratureSpec::default()).unwrap().factor;
    let n = 200_000;
    let h = 100.0 / n as f64;
    let direct: Complex64 = (0..n)
        .map(|i| {
            let x = -50.0 + (i as f64 + 0.5) * h;
            Complex64::cis(2.0 * PI * 3.0 * 1e-3 * x) * ((x + 50.0) / 50.0) * h
        })
        .sum();
    assert!((f.generator()[3] - direct).norm() < 1e-8 * direct.norm());
}

#[test]
fn triangular_lag_one_matches_dense_trapezoid() {
    let grid = GridConfig::new(8, 4, 1.07e-4, 1e4).unwrap();
    let tau_d = 3e-5;
    let tri = PowerProfile::Triangular { peak: 1.5, half_width: None };
    let ch = ChannelProfile::new(tau_d, 200.0, tri, PowerProfile::Rectangular { level: 1.0 }).unwrap();
    let f = build_factor_exact(&ch, &grid, Domain::Delay, &QuadratureSpec::default()).unwrap();
    let got = f.factor.generator()[1];

    let n = 1_000_000;
    let a = tau_d / 2.0;
    let h = 2.0 * a / n as f64;
    let integrand = |x: f64| Complex64::cis(-2.0 * PI * 1e4 * x) * 1.5 * (1.0 - x.abs() / a);
    let mut acc = (integrand(-a) + integrand(a)) * 0.5;
    for i in 1..n {
        acc += integrand(-a + i as f64 * h);
    }
    let oracle = acc * h;
    assert!((got - oracle).norm() / oracle.norm() < 1e-8, "{got} vs {oracle}");
}
