//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, path, step, coordinate)`, computed
//! with the Philox4x32-10 bijection. Any increment of any path can be
//! regenerated in isolation, so paths can be produced in parallel and in any
//! order without changing a single bit of output.

use std::f64::consts::PI;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Identifies one independent noise stream: a master seed and a path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u32,
}

impl StreamKey {
    pub fn new(seed: u64, path: u32) -> Self {
        Self { seed, path }
    }

    #[inline]
    fn block(&self, index: u64, lane: u32) -> [u32; 4] {
        let counter = [index as u32, (index >> 32) as u32, lane, self.path];
        let key = [self.seed as u32, (self.seed >> 32) as u32];
        philox4x32(counter, key)
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, index: u64, lane: u32) -> f64 {
        let b = self.block(index, lane);
        open_unit(u64::from(b[0]) << 32 | u64::from(b[1]))
    }

    /// Standard normal draw via Box-Muller on one Philox block.
    #[inline]
    pub fn standard_normal(&self, index: u64, lane: u32) -> f64 {
        let b = self.block(index, lane);
        let u1 = open_unit(u64::from(b[0]) << 32 | u64::from(b[1]));
        let u2 = open_unit(u64::from(b[2]) << 32 | u64::from(b[3]));
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

#[inline(always)]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
