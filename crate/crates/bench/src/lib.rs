// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared inputs for the criterion benches.

use lqcp_core::simgen::{apply_mean_shifts, gen_gaussian, single_shift};
use lqcp_core::{CovarianceSpec, DataMatrix};

/// Gaussian `n x p` data with one dense shift at `n / 2`.
pub fn shifted(n: usize, p: usize, seed: u64) -> DataMatrix {
    let x = gen_gaussian(n, p, CovarianceSpec::Identity, seed).expect("valid dimensions");
    apply_mean_shifts(&x, &single_shift(p, n / 2, 4.0, p)).expect("shift fits")
}
