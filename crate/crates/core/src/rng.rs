//! Portable seeded pseudo-random numbers.
//!
//! Every stochastic stage of the pipeline draws from [`SplitMix64`] so that
//! any implementation following the algorithm below reproduces the same
//! trajectories, subsets, triplets and initial weights bit for bit.
//!
//! * State update: `state = state + 0x9E3779B97F4A7C15 (mod 2^64)`.
//! * Output: `z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;`
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^ (z >> 31)`
//!   (wrapping multiplications).
//! * `uniform()`: `(next() >> 11) * 2^-53`, a double in `[0, 1)`.
//! * `below(n)`: rejection sampling; draws `x = next()` until
//!   `x < 2^64 - (2^64 mod n)` and returns `x mod n`.
//! * `normal()`: Box–Muller on `u1 = 1 - uniform()`, `u2 = uniform()`,
//!   returning `sqrt(-2 ln u1) * cos(2π u2)`; the sine branch is discarded.
//! * `shuffle()`: Fisher–Yates from the last index down, swapping
//!   `i` with `below(i + 1)`.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, in draw order (partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
