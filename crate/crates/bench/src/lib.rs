//! Shared fixtures for the benchmark targets.

use tcoint_core::simulate::{simulate_tvecm, DgpSpec};
use tcoint_core::Panel;

/// Two-regime panel with well-separated adjustment dynamics.
pub fn threshold_panel(seed: u64, t: usize) -> Panel {
    let spec = DgpSpec {
        beta: 1.0,
        tau: 0.0,
        a1: vec![[0.0, 0.4], [0.0, 0.9], [0.05, 0.0], [0.0, 0.3]],
        a2: vec![[0.0, -0.1], [0.0, 0.1], [0.05, 0.0], [0.0, -0.3]],
        noise_cov: [[1.0, 0.3], [0.3, 1.0]],
        t,
        burn_in: 200,
        seed,
    };
    simulate_tvecm(&spec).expect("valid spec")
}

/// Single-regime panel (both coefficient blocks equal).
pub fn linear_panel(seed: u64, t: usize) -> Panel {
    let a = vec![[0.0, 0.0], [0.0, 0.25], [0.1, 0.0], [0.0, 0.1]];
    let spec = DgpSpec {
        beta: 1.0,
        tau: 0.0,
        a1: a.clone(),
        a2: a,
        noise_cov: [[1.0, 0.3], [0.3, 1.0]],
        t,
        burn_in: 200,
        seed,
    };
    simulate_tvecm(&spec).expect("valid spec")
}
