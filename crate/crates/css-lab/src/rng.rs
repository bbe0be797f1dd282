//! Small deterministic RNG for seeded verification fields.
//!
//! SplitMix64 is used instead of an external crate so that seeded field
//! generation never changes underneath the frozen test expectations.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (-1, 1), avoiding exact zero.
    pub fn next_symmetric(&mut self) -> f64 {
        loop {
            let x = 2.0 * self.next_f64() - 1.0;
            if x != 0.0 {
                return x;
            }
        }
    }

    /// Standard normal pair (Marsaglia polar method).
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        loop {
            let u = self.next_symmetric();
            let v = self.next_symmetric();
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                return (u * factor, v * factor);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = SplitMix64::new(1);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn normals_have_reasonable_moments() {
        let mut rng = SplitMix64::new(7);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let count = 20_000;
        for _ in 0..count {
            let (a, b) = rng.next_normal_pair();
            sum += a + b;
            sumsq += a * a + b * b;
        }
        let n = (2 * count) as f64;
        assert!((sum / n).abs() < 0.02);
        assert!((sumsq / n - 1.0).abs() < 0.03);
    }
}
