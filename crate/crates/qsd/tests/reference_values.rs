//! Frozen reference values for the built-in chains, computed with an
//! independent dense-linear-algebra stack (eigendecomposition for the
//! Perron pair, direct solves for stationarity and Poisson equations,
//! vectorized Kronecker solve for the Lyapunov equations). The assertions
//! here pin the crate's numbers to that independent route.

use qsd::theory::{
    clt_covariance, exact_qsd, iid_alpha_star, stability_l, u_star, CltVariant,
};
use qsd::AbsorbingChain;

const TOL: f64 = 1e-10;

#[test]
fn three_state_perron_pair() {
    let chain = AbsorbingChain::preset("paper-3state").unwrap();
    let sol = exact_qsd(&chain, 1e-13).unwrap();
    assert!((sol.lambda - 0.754138126514911).abs() < TOL);
    assert!((sol.theta_star.weights()[0] - 0.5413812651491098).abs() < TOL);
    assert!((sol.theta_star.weights()[1] - 0.45861873485089016).abs() < TOL);
}

#[test]
fn three_state_stability_margin() {
    let chain = AbsorbingChain::preset("paper-3state").unwrap();
    let stab = stability_l(&chain).unwrap();
    assert!((stab.l - 0.7121520912685814).abs() < 1e-9);
    assert!((stab.gamma_star_min - 1.404194430179465).abs() < 1e-9);
}

#[test]
fn three_state_noise_aggregate() {
    let chain = AbsorbingChain::preset("paper-3state").unwrap();
    let u = u_star(&chain).unwrap();
    let expect = 0.33308814491924765;
    assert!((u[(0, 0)] - expect).abs() < TOL);
    assert!((u[(1, 1)] - expect).abs() < TOL);
    assert!((u[(0, 1)] + expect).abs() < TOL);
}

#[test]
fn three_state_limit_covariances() {
    let chain = AbsorbingChain::preset("paper-3state").unwrap();
    let t = clt_covariance(&chain, 3.0, CltVariant::AlgI).unwrap();
    assert!((t.v[(0, 0)] - 0.30531351517075755).abs() < 1e-9);
    let t = clt_covariance(&chain, 3.0, CltVariant::AlgII { zeta: 0.3 }).unwrap();
    assert!((t.v[(0, 0)] - 0.3361230506294498).abs() < 1e-9);
    let t = clt_covariance(&chain, 3.0, CltVariant::AlgIIBeta { zeta: 0.3 }).unwrap();
    assert!((t.v[(0, 0)] - 0.23528613544061489).abs() < 1e-9);
}

#[test]
fn three_state_linear_growth_drift() {
    let chain = AbsorbingChain::preset("paper-3state").unwrap();
    let sol = exact_qsd(&chain, 1e-13).unwrap();
    let k0 = chain.kernel(&sol.theta_star);
    let alpha = iid_alpha_star(&k0, 0, 1.0).unwrap();
    assert!((alpha[0] - 0.0783187002243534).abs() < TOL);
    assert!((alpha[1] + 0.0783187002243534).abs() < TOL);
}

#[test]
fn ten_state_perron_pair_and_margin() {
    let chain = AbsorbingChain::preset("paper-10state").unwrap();
    let sol = exact_qsd(&chain, 1e-12).unwrap();
    assert!((sol.lambda - 0.986289278666547).abs() < 1e-9);
    let w = sol.theta_star.weights();
    assert!((w[0] - 0.03427680333363178).abs() < 1e-8);
    assert!((w[1] - 0.3037916330155967).abs() < 1e-8);
    assert!((w[4] - 0.2280236781427774).abs() < 1e-8);
    assert!((w[7] - 0.3037916330155914).abs() < 1e-8);
    let stab = stability_l(&chain).unwrap();
    assert!((stab.l - 0.28763420819985475).abs() < 1e-8);
    assert!((stab.gamma_star_min - 3.4766379362818256).abs() < 1e-7);
}

#[test]
fn ten_state_noise_aggregate_spot_values() {
    let chain = AbsorbingChain::preset("paper-10state").unwrap();
    let u = u_star(&chain).unwrap();
    assert!((u[(0, 0)] - 0.18994362145805685).abs() < 1e-8);
    assert!((u[(1, 1)] - 15.290084225805746).abs() < 1e-6);
    assert!((u[(4, 4)] - 15.006207047182329).abs() < 1e-6);
    assert!((u[(1, 7)] + 10.159814836823777).abs() < 1e-6);
}
