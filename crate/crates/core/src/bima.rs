//! Bit-interleaved multiple access.
//!
//! The transmitter concatenates every device's bits (device 0 first),
//! permutes the concatenation with a seeded multiaccess interleaver and maps
//! the result onto a single `M_bw = Π M_i` QAM symbol. Each receiver detects
//! that joint symbol, deinterleaves and keeps its own bit slots. No power
//! allocation is involved.
//!
//! Bit position `k` of the interleaved word is bit `N-1-k` of the joint
//! label, so position 0 is the label MSB.

use crate::constellation::{bits_to_label, label_to_bits, Constellation, MAX_BITS_PER_SYMBOL};
use crate::error::{Error, Result};
use crate::numeric::is_power_of_two;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiaccessInterleaver {
    seed: u64,
    bits: Vec<u32>,
    offsets: Vec<usize>,
    /// `interleaved[k] = concatenated[permutation[k]]`.
    permutation: Vec<usize>,
    inverse: Vec<usize>,
    /// Per device, `(joint label shift, device label shift)` for every bit.
    slots: Vec<Vec<(u32, u32)>>,
}

impl MultiaccessInterleaver {
    /// Fisher–Yates permutation of `Σ log2 M_i` slots drawn from `seed`.
    pub fn build(orders: &[u64], seed: u64) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidArgument("no devices".into()));
        }
        let mut bits = Vec::with_capacity(orders.len());
        for &m in orders {
            if !is_power_of_two(m) {
                return Err(Error::InvalidOrder(m));
            }
            bits.push(m.trailing_zeros());
        }
        let total: u32 = bits.iter().sum();
        if total > MAX_BITS_PER_SYMBOL {
            return Err(Error::InvalidArgument(format!(
                "joint symbol of {total} bits exceeds {MAX_BITS_PER_SYMBOL}"
            )));
        }
        let n = total as usize;
        let mut offsets = Vec::with_capacity(bits.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &b in &bits {
            acc += b as usize;
            offsets.push(acc);
        }

        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut inverse = vec![0; n];
        for (k, &c) in permutation.iter().enumerate() {
            inverse[c] = k;
        }

        let slots = bits
            .iter()
            .enumerate()
            .map(|(d, &b)| {
                (0..b as usize)
                    .map(|j| {
                        let k = inverse[offsets[d] + j];
                        ((total - 1) - k as u32, b - 1 - j as u32)
                    })
                    .collect()
            })
            .collect();

        Ok(MultiaccessInterleaver {
            seed,
            bits,
            offsets,
            permutation,
            inverse,
            slots,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn devices(&self) -> usize {
        self.bits.len()
    }

    pub fn total_bits(&self) -> usize {
        self.permutation.len()
    }

    pub fn device_bits(&self, device: usize) -> u32 {
        self.bits[device]
    }

    /// Concatenated-bit range owned by `device`.
    pub fn slot_range(&self, device: usize) -> std::ops::Range<usize> {
        self.offsets[device]..self.offsets[device + 1]
    }

    pub fn interleave(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits.len())?;
        Ok(self.permutation.iter().map(|&c| bits[c]).collect())
    }

    pub fn deinterleave(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits.len())?;
        Ok(self.inverse.iter().map(|&k| bits[k]).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total_bits() {
            return Err(Error::LengthMismatch {
                expected: self.total_bits(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Joint label carrying the per-device labels `labels[d]`.
    #[inline]
    pub fn joint_label(&self, labels: &[u32]) -> u32 {
        let mut joint = 0;
        for (slots, &label) in self.slots.iter().zip(labels) {
            for &(js, ds) in slots {
                joint |= ((label >> ds) & 1) << js;
            }
        }
        joint
    }

    /// Label of `device` extracted from a joint label.
    #[inline]
    pub fn device_label(&self, joint: u32, device: usize) -> u32 {
        let mut label = 0;
        for &(js, ds) in &self.slots[device] {
            label |= ((joint >> js) & 1) << ds;
        }
        label
    }
}

/// Joint constellation of order `Π M_i` matching an interleaver.
pub fn joint_constellation(itl: &MultiaccessInterleaver) -> Result<Constellation> {
    Constellation::qam(1u64 << itl.total_bits())
}

fn check_joint(itl: &MultiaccessInterleaver, joint: &Constellation) -> Result<()> {
    if joint.bits_per_symbol() as usize != itl.total_bits() {
        return Err(Error::LengthMismatch {
            expected: itl.total_bits(),
            actual: joint.bits_per_symbol() as usize,
        });
    }
    Ok(())
}

/// Concatenates, interleaves and maps one bit block per device.
pub fn bima_transmit<B: AsRef<[u8]>>(
    device_bits: &[B],
    itl: &MultiaccessInterleaver,
    joint: &Constellation,
) -> Result<Complex64> {
    check_joint(itl, joint)?;
    if device_bits.len() != itl.devices() {
        return Err(Error::LengthMismatch {
            expected: itl.devices(),
            actual: device_bits.len(),
        });
    }
    let mut concat = Vec::with_capacity(itl.total_bits());
    for (d, b) in device_bits.iter().enumerate() {
        let b = b.as_ref();
        if b.len() != itl.device_bits(d) as usize {
            return Err(Error::LengthMismatch {
                expected: itl.device_bits(d) as usize,
                actual: b.len(),
            });
        }
        concat.extend_from_slice(b);
    }
    joint.map_bits(&itl.interleave(&concat)?)
}

/// ML-detects the joint symbol and returns the bits of `device`.
pub fn bima_receive(
    y: Complex64,
    gain: Complex64,
    itl: &MultiaccessInterleaver,
    joint: &Constellation,
    device: usize,
) -> Result<Vec<u8>> {
    check_joint(itl, joint)?;
    if device >= itl.devices() {
        return Err(Error::InvalidArgument(format!("no device {device}")));
    }
    let det = joint.ml_detect(y, gain)?;
    let concat = itl.deinterleave(&det.bits)?;
    Ok(concat[itl.slot_range(device)].to_vec())
}

/// Label form of [`bima_transmit`].
pub fn transmit_labels(labels: &[u32], itl: &MultiaccessInterleaver, joint: &Constellation) -> Complex64 {
    joint.point(itl.joint_label(labels))
}

/// Label form of [`bima_receive`] using the per-axis slicer.
pub fn receive_label(
    y: Complex64,
    gain: Complex64,
    itl: &MultiaccessInterleaver,
    joint: &Constellation,
    device: usize,
) -> u32 {
    itl.device_label(joint.slice(y, gain), device)
}

/// Bit vector of a device label, MSB first.
pub fn device_label_bits(label: u32, itl: &MultiaccessInterleaver, device: usize) -> Vec<u8> {
    label_to_bits(label, itl.device_bits(device))
}

/// Device label of a bit vector, MSB first.
pub fn device_bits_label(bits: &[u8]) -> u32 {
    bits_to_label(bits)
}
