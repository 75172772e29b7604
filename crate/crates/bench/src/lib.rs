//! Fixed benchmark instances shared by the criterion targets.

use v2vsched_core::{build_scenario, AcirProfile, RadioParams, Scenario};

/// A convoy drawn with the default radio parameters and the 3GPP mask.
pub fn convoy(n: usize, f: usize, t: usize, seed: u64) -> Scenario {
    build_scenario(n, f, t, &RadioParams::table_ii(), &AcirProfile::three_gpp(), seed).expect("valid benchmark scenario")
}
