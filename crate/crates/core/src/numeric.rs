//! Small numeric helpers shared by the analytic and order-statistics code.

/// Binomial coefficient as `f64`. Exact for every `n` used here (n <= 60).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as f64
}

/// Neumaier-compensated accumulator.
///
/// The alternating binomial sums of the order statistics cancel heavily at
/// high SNR; carrying the rounding error in a second word keeps roughly
/// twice the working precision for the sizes of interest (L <= 8).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Unevaluated sum `hi + lo` carrying about 32 significant digits.
///
/// Used where an alternating sum of O(1/a) terms cancels down to
/// O(a^-L); plain doubles would lose `L·log10(a)` digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub(crate) fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub(crate) fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    pub(crate) fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }

    pub(crate) fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub(crate) fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub(crate) fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Self::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Self::from_f64(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }.add(Self::from_f64(q3))
    }

    pub(crate) fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(0.0);
        }
        // One Newton step on the double-precision root doubles the digits.
        let x = self.hi.sqrt();
        let xx = Self::from_f64(x).mul(Self::from_f64(x));
        let corr = self.sub(xx).hi / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        DoubleDouble { hi, lo }
    }
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn is_power_of_two(m: u64) -> bool {
    m >= 2 && m.is_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(4, 4), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(40, 20), 137_846_528_820.0);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn double_double_arithmetic() {
        let third = DoubleDouble::from_f64(1.0).div(DoubleDouble::from_f64(3.0));
        let back = third.mul(DoubleDouble::from_f64(3.0)).sub(DoubleDouble::from_f64(1.0));
        assert!(back.to_f64().abs() < 1e-31);
        let two = DoubleDouble::from_f64(2.0);
        let r = two.sqrt();
        assert!(r.mul(r).sub(two).to_f64().abs() < 1e-30);
        // (1 + 1e-20) - 1 survives.
        let tiny = DoubleDouble::from_f64(1.0)
            .add(DoubleDouble::from_f64(1e-20))
            .sub(DoubleDouble::from_f64(1.0));
        assert_eq!(tiny.to_f64(), 1e-20);
    }
}
