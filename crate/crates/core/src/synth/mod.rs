//! Synthetic array measurements and cross-spectral matrix estimation.
//!
//! Sources are uncorrelated band-limited white-noise monopoles, propagated to
//! each microphone with a fractional delay `r/c` and spherical spreading `1/r`.
//! "Flow noise" is emulated as independent white sensor noise; no convection
//! or shear-layer effects are modelled.

mod csm;
mod filter;
mod monopole;
mod scenario;
mod welch;

pub use csm::{
    denoise_csm, geometry_hash, read_csm, superpose_csms, write_csm, CrossSpectralMatrix, CSM_MAGIC,
};
pub use filter::{Biquad, BandFilter};
pub use monopole::{fractional_delay_taps, synthesize_time_signals, MonopoleSpec, FRACTIONAL_DELAY_TAPS};
pub use scenario::{ArraySpec, ConfigEntry, Scenario, SourceEntry};
pub use welch::{hann_periodic, welch_csm};

/// Mixes integer seeds into one well-spread 64-bit seed (splitmix64 finaliser).
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
