//! Binomial confidence intervals.

use serde::Serialize;

/// Two-sided 99% standard normal quantile, `Φ⁻¹(0.995)`.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // The endpoints are exactly 0 and 1 at the extremes; avoid rounding them away.
    Interval {
        lo: if successes == 0 {
            0.0
        } else {
            (center - half).max(0.0)
        },
        hi: if successes == trials {
            1.0
        } else {
            (center + half).min(1.0)
        },
    }
}

pub fn wilson99(successes: u64, trials: u64) -> Interval {
    wilson(successes, trials, Z_99)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_value() {
        // 95%: 8/10 -> [0.4902, 0.9433]
        let i = wilson(8, 10, 1.959963984540054);
        assert!((i.lo - 0.49016).abs() < 1e-4);
        assert!((i.hi - 0.94332).abs() < 1e-4);
    }

    #[test]
    fn all_successes() {
        let i = wilson99(100, 100);
        assert_eq!(i.hi, 1.0);
        let z2 = Z_99 * Z_99;
        assert!((i.lo - 100.0 / (100.0 + z2)).abs() < 1e-12);
    }

    #[test]
    fn single_trial_is_wide() {
        for s in 0..=1 {
            let i = wilson99(s, 1);
            assert!(i.lo >= 0.0 && i.hi <= 1.0);
            assert!(i.hi - i.lo > 0.8);
        }
    }

    #[test]
    fn contains_estimate() {
        for t in [1u64, 7, 50, 1000] {
            for s in [0, t / 3, t / 2, t] {
                let i = wilson99(s, t);
                assert!(i.contains(s as f64 / t as f64));
            }
        }
    }
}
