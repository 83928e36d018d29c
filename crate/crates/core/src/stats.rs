//! Regenerative ratio estimation.
//!
//! A run is cut into rounds at consensus points. Rounds are i.i.d., so the
//! long-run share of pool `i` is the ratio `E[R_i] / E[B]` of the blocks it
//! wins per round over the main-chain blocks per round, and the delta method
//! gives its standard error.

/// Running sums over completed rounds. Merging two accumulators is plain
/// addition, so shards can be combined in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAccumulator {
    pub rounds: u64,
    pub blocks: [u64; 3],
    sum_b2: f64,
    sum_r2: [f64; 3],
    sum_rb: [f64; 3],
}

impl RatioAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a completed round won with `credit[i]` blocks per pool.
    pub fn push(&mut self, credit: [u64; 3]) {
        let b: u64 = credit.iter().sum();
        let bf = b as f64;
        self.rounds += 1;
        self.sum_b2 += bf * bf;
        for i in 0..3 {
            let r = credit[i] as f64;
            self.blocks[i] += credit[i];
            self.sum_r2[i] += r * r;
            self.sum_rb[i] += r * bf;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.rounds += other.rounds;
        self.sum_b2 += other.sum_b2;
        for i in 0..3 {
            self.blocks[i] += other.blocks[i];
            self.sum_r2[i] += other.sum_r2[i];
            self.sum_rb[i] += other.sum_rb[i];
        }
    }

    pub fn total_blocks(&self) -> u64 {
        self.blocks.iter().sum()
    }

    /// Long-run shares; all zero when no round has completed.
    pub fn ratios(&self) -> [f64; 3] {
        let total = self.total_blocks();
        if total == 0 {
            return [0.0; 3];
        }
        let t = total as f64;
        [
            self.blocks[0] as f64 / t,
            self.blocks[1] as f64 / t,
            self.blocks[2] as f64 / t,
        ]
    }

    /// Delta-method standard errors of [`Self::ratios`]. Infinite with fewer
    /// than two rounds.
    pub fn std_errors(&self) -> [f64; 3] {
        if self.rounds < 2 {
            return [f64::INFINITY; 3];
        }
        let n = self.rounds as f64;
        let sum_b = self.total_blocks() as f64;
        let mean_b = sum_b / n;
        let ratios = self.ratios();
        let mut out = [0.0; 3];
        for i in 0..3 {
            let r = ratios[i];
            // sum over rounds of (R_i - r B)^2
            let ss = self.sum_r2[i] - 2.0 * r * self.sum_rb[i] + r * r * self.sum_b2;
            let var = ss.max(0.0) / (n - 1.0) / (n * mean_b * mean_b);
            out[i] = var.sqrt();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rounds_have_zero_error() {
        let mut acc = RatioAccumulator::new();
        for _ in 0..10 {
            acc.push([1, 2, 1]);
        }
        assert_eq!(acc.ratios(), [0.25, 0.5, 0.25]);
        for e in acc.std_errors() {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn merge_matches_sequential() {
        let rounds = [[1, 0, 0], [0, 2, 0], [0, 0, 3], [2, 1, 0]];
        let mut all = RatioAccumulator::new();
        let (mut a, mut b) = (RatioAccumulator::new(), RatioAccumulator::new());
        for (k, r) in rounds.iter().enumerate() {
            all.push(*r);
            if k % 2 == 0 { a.push(*r) } else { b.push(*r) }
        }
        a.merge(&b);
        assert_eq!(a.blocks, all.blocks);
        assert_eq!(a.rounds, all.rounds);
        for i in 0..3 {
            assert!((a.std_errors()[i] - all.std_errors()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bernoulli_rounds_match_binomial_error() {
        // one block per round, pool 0 wins a fixed 3 of every 10
        let mut acc = RatioAccumulator::new();
        for k in 0..10_000 {
            acc.push(if k % 10 < 3 { [1, 0, 0] } else { [0, 1, 0] });
        }
        let se = acc.std_errors()[0];
        let expected = (0.3f64 * 0.7 / 10_000.0).sqrt();
        assert!((se - expected).abs() < 1e-5, "{se} vs {expected}");
    }
}
