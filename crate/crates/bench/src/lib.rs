//! Fixed inputs shared by the benchmarks.

use gffperc::field::SpectralSampler;
use gffperc::{BoxRegion, FieldSample};

/// Window sizes benchmarked by every group.
pub const SIZES: [i64; 3] = [8, 16, 32];

/// One padded sample of `B_n` with `κ = 2`.
pub fn fixture(n: i64) -> FieldSample {
    SpectralSampler::padded(3, n, 2).expect("valid sampler").sample(1, 0)
}

pub fn window(n: i64) -> BoxRegion {
    BoxRegion::centered(3, n)
}
