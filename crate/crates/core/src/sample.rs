//! Seeded random block sums for property tests and reproducible fuzzing.

use rand::Rng;

use crate::blocks::{Block, BlockSum};
use crate::scalar::GaussianRational;

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub max_total_size: usize,
    pub forbid_h2_minus_one: bool,
    pub forbid_h4_plus_one: bool,
    pub forbid_j1: bool,
    /// Candidate μ values for generic Type-II blocks (validity-filtered).
    pub mu_pool: Vec<GaussianRational>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            max_total_size: 16,
            forbid_h2_minus_one: false,
            forbid_h4_plus_one: false,
            forbid_j1: false,
            mu_pool: vec![
                GaussianRational::from_int(2),
                GaussianRational::from_ratio(1, 2),
                GaussianRational::from_int(3),
                GaussianRational::from_ints(0, 2),
                GaussianRational::from_int(-1),
                GaussianRational::from_int(1),
            ],
        }
    }
}

/// A random valid block sum of total size between 1 and the configured
/// budget. Validity of every block is guaranteed; blocks forbidden by the
/// configuration never appear.
pub fn random_block_sum(rng: &mut impl Rng, cfg: &SampleConfig) -> BlockSum {
    loop {
        let mut sum = BlockSum::empty();
        let mut budget = rng.random_range(1..=cfg.max_total_size);
        while budget > 0 {
            if let Some(block) = random_block(rng, budget, cfg) {
                budget -= block.size();
                sum.push(block);
            } else {
                break;
            }
        }
        if !sum.is_empty() {
            return sum;
        }
    }
}

fn random_block(rng: &mut impl Rng, budget: usize, cfg: &SampleConfig) -> Option<Block> {
    for _ in 0..32 {
        let family = rng.random_range(0..5u8);
        let candidate = match family {
            0 => Block::j(rng.random_range(1..=budget.min(7))).ok(),
            1 => Block::gamma(rng.random_range(1..=budget.min(7))).ok(),
            2 => Block::gamma_tilde(rng.random_range(1..=budget.min(7))).ok(),
            _ => {
                if budget < 2 {
                    continue;
                }
                let k = rng.random_range(1..=(budget / 2).min(4));
                let mu = cfg.mu_pool[rng.random_range(0..cfg.mu_pool.len())].clone();
                let b = if family == 3 {
                    Block::h(2 * k, mu)
                } else {
                    Block::h_tilde(2 * k, mu)
                };
                b.ok().filter(|b| b.validate().is_ok())
            }
        };
        let Some(b) = candidate else { continue };
        if cfg.forbid_h2_minus_one && b.is_h2_minus_one() {
            continue;
        }
        if cfg.forbid_h4_plus_one && b.is_h4_plus_one() {
            continue;
        }
        if cfg.forbid_j1 && b.kind() == crate::blocks::BlockKind::J && b.size() == 1 {
            continue;
        }
        return Some(b);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid_and_respect_forbids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SampleConfig {
            forbid_h2_minus_one: true,
            forbid_h4_plus_one: true,
            ..Default::default()
        };
        for _ in 0..200 {
            let s = random_block_sum(&mut rng, &cfg);
            assert!(s.validate().is_ok());
            assert!(s.total_size() >= 1 && s.total_size() <= cfg.max_total_size);
            assert_eq!(s.count_matching(Block::is_h2_minus_one), 0);
            assert_eq!(s.count_matching(Block::is_h4_plus_one), 0);
        }
    }
}
