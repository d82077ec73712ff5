//! Gray-mapped rectangular and square M-QAM.
//!
//! Points are indexed by their label: the point at index `k` carries the bit
//! string of `k` written MSB first. The top `i_bits` of a label select the
//! in-phase level and the remaining bits the quadrature level, each through a
//! binary-reflected Gray code, so the all-zero axis label sits on the most
//! negative amplitude. Amplitudes lie on the odd-integer grid scaled to unit
//! average energy.

use crate::error::{Error, Result};
use crate::numeric::is_power_of_two;
use num_complex::Complex64;

/// Largest supported label width. A 2^24-point alphabet already needs
/// 256 MiB of points.
pub const MAX_BITS_PER_SYMBOL: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: u64,
    i_bits: u32,
    q_bits: u32,
    scale: f64,
    points: Vec<Complex64>,
}

/// Result of a maximum-likelihood decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub index: usize,
    pub bits: Vec<u8>,
}

/// Builds the Gray-mapped M-QAM alphabet of order `m`.
pub fn build_qam(m: u64) -> Result<Constellation> {
    Constellation::qam(m)
}

fn gray(b: u32) -> u32 {
    b ^ (b >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    pub fn qam(m: u64) -> Result<Self> {
        if !is_power_of_two(m) {
            return Err(Error::InvalidOrder(m));
        }
        let bits = m.trailing_zeros();
        if bits > MAX_BITS_PER_SYMBOL {
            return Err(Error::InvalidOrder(m));
        }
        // In-phase axis takes the extra bit of a rectangular layout.
        let i_bits = bits.div_ceil(2);
        let q_bits = bits / 2;
        let ni = (1u64 << i_bits) as f64;
        let nq = (1u64 << q_bits) as f64;
        let raw_energy = (ni * ni - 1.0) / 3.0 + (nq * nq - 1.0) / 3.0;
        let scale = raw_energy.recip().sqrt();

        let mut c = Constellation {
            order: m,
            i_bits,
            q_bits,
            scale,
            points: Vec::new(),
        };
        c.points = (0..m as u32).map(|label| c.compute_point(label)).collect();
        Ok(c)
    }

    fn compute_point(&self, label: u32) -> Complex64 {
        let q_mask = (1u32 << self.q_bits) - 1;
        let li = gray_inverse(label >> self.q_bits) as f64;
        let lq = gray_inverse(label & q_mask) as f64;
        let ni = (1u64 << self.i_bits) as f64;
        let nq = (1u64 << self.q_bits) as f64;
        Complex64::new(
            (2.0 * li - (ni - 1.0)) * self.scale,
            (2.0 * lq - (nq - 1.0)) * self.scale,
        )
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.i_bits + self.q_bits
    }

    pub fn is_square(&self) -> bool {
        self.i_bits == self.q_bits
    }

    /// Bits carried on the in-phase and quadrature axes.
    pub fn axis_bits(&self) -> (u32, u32) {
        (self.i_bits, self.q_bits)
    }

    /// Half the distance between neighbouring points on an axis.
    pub fn half_spacing(&self) -> f64 {
        self.scale
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Bit label of point `index`, MSB first.
    pub fn bit_label(&self, index: usize) -> Vec<u8> {
        label_to_bits(index as u32, self.bits_per_symbol())
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Complex64> {
        let n = self.bits_per_symbol() as usize;
        if bits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bits.len(),
            });
        }
        Ok(self.point(bits_to_label(bits)))
    }

    /// Exhaustive minimum-distance search over `gain * point`.
    ///
    /// Ties resolve to the lowest index.
    pub fn ml_detect(&self, received: Complex64, gain: Complex64) -> Result<Detection> {
        if gain == Complex64::new(0.0, 0.0) {
            return Err(Error::DegenerateChannel);
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let d = (received - gain * p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        Ok(Detection {
            index: best,
            bits: self.bit_label(best),
        })
    }

    /// Per-axis slicer. The alphabet is a separable rectangular grid and the
    /// channel a single complex gain, so after equalisation the nearest point
    /// is found axis by axis; this returns the same label as [`ml_detect`]
    /// except on exact decision-boundary ties. `gain` must be non-zero.
    ///
    /// [`ml_detect`]: Constellation::ml_detect
    #[inline]
    pub fn slice(&self, received: Complex64, gain: Complex64) -> u32 {
        let z = received / gain;
        let li = axis_level(z.re / self.scale, self.i_bits);
        let lq = axis_level(z.im / self.scale, self.q_bits);
        (gray(li) << self.q_bits) | gray(lq)
    }

    /// Average energy over the alphabet.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

#[inline]
fn axis_level(x: f64, bits: u32) -> u32 {
    let n = 1u32 << bits;
    if n == 1 {
        return 0;
    }
    let level = ((x + (n - 1) as f64) / 2.0).round();
    level.clamp(0.0, (n - 1) as f64) as u32
}

pub fn label_to_bits(label: u32, width: u32) -> Vec<u8> {
    (0..width)
        .rev()
        .map(|k| ((label >> k) & 1) as u8)
        .collect()
}

pub fn bits_to_label(bits: &[u8]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32)
}
