//! 16-bit Fibonacci LFSR, the entropy source of the digital p-neuron.

use std::num::NonZeroU16;

use crate::error::{Error, Result};

/// Fibonacci LFSR with feedback polynomial x^16 + x^15 + x^13 + x^4 + 1.
///
/// The register shifts right; the feedback bit enters at the top and the
/// bit shifted out of position 0 is the output. The all-zero state is
/// unreachable and cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr16 {
    register: NonZeroU16,
}

impl Lfsr16 {
    pub const PERIOD: u32 = 65_535;

    pub fn new(register: u16) -> Result<Self> {
        NonZeroU16::new(register)
            .map(|register| Self { register })
            .ok_or_else(|| Error::InvalidParameter("LFSR register must be non-zero".into()))
    }

    /// Maps an arbitrary seed onto a non-zero register.
    pub fn from_seed(seed: u64) -> Self {
        // splitmix64 finalizer, folded to 16 bits
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        let folded = (z ^ (z >> 16) ^ (z >> 32) ^ (z >> 48)) as u16;
        Self::new(folded).unwrap_or(Self {
            register: NonZeroU16::new(0xACE1).expect("non-zero literal"),
        })
    }

    pub fn register(&self) -> u16 {
        self.register.get()
    }

    /// Pure transition: the emitted bit and the successor state.
    pub fn next(self) -> (u8, Self) {
        let r = self.register.get();
        let feedback = (r ^ (r >> 1) ^ (r >> 3) ^ (r >> 12)) & 1;
        let next = (r >> 1) | (feedback << 15);
        // A maximal-length register never reaches zero from a non-zero state.
        let register = NonZeroU16::new(next).expect("LFSR reached the zero state");
        ((r & 1) as u8, Self { register })
    }

    pub fn next_bit(&mut self) -> u8 {
        let (bit, next) = self.next();
        *self = next;
        bit
    }

    /// Clocks 16 times and returns the fully refreshed register. Over one
    /// period of 65535 words every non-zero 16-bit value appears exactly once.
    pub fn next_word(&mut self) -> u16 {
        for _ in 0..16 {
            self.next_bit();
        }
        self.register.get()
    }

    /// A uniform in `(0, 1)` with 16-bit resolution.
    pub fn next_uniform(&mut self) -> f64 {
        f64::from(self.next_word()) / 65_536.0
    }
}
