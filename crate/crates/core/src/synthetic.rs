//! Seeded synthetic rating data with planted low-rank structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Rating, RatingDataset};
use crate::error::{Error, Result};
use crate::scores::ScoreSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub num_users: usize,
    pub num_items: usize,
    /// Rank of the planted user/item structure.
    pub rank: usize,
    /// Probability that a user/item pair is rated.
    pub density: f64,
    /// Standard deviation of the Gaussian noise added before rounding.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_users: 500,
            num_items: 200,
            rank: 3,
            density: 0.2,
            noise: 0.4,
            seed: 7,
        }
    }
}

/// Generates ratings on `scores`: each pair's latent value is a user bias
/// plus an item bias plus a scaled inner product of Gaussian factors, plus
/// noise. The value is mapped linearly onto the score range and rounded to
/// the nearest score.
pub fn generate(config: &SyntheticConfig, scores: &ScoreSet) -> Result<RatingDataset> {
    if config.num_users == 0 || config.num_items == 0 || config.rank == 0 {
        return Err(Error::InvalidArgument(
            "synthetic sizes must be positive".into(),
        ));
    }
    if !(config.density > 0.0 && config.density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must be in (0, 1], got {}",
            config.density
        )));
    }
    if !(config.noise >= 0.0 && config.noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be non-negative, got {}",
            config.noise
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| normal.sample(rng)).collect()
    };
    let k = config.rank;
    let p = draw(config.num_users * k, &mut rng);
    let q = draw(config.num_items * k, &mut rng);
    let bu: Vec<f64> = draw(config.num_users, &mut rng)
        .iter()
        .map(|x| 0.5 * x)
        .collect();
    let bi: Vec<f64> = draw(config.num_items, &mut rng)
        .iter()
        .map(|x| 0.5 * x)
        .collect();
    let scale = 1.0 / (k as f64).sqrt();
    let d = scores.len();
    let mid = (d - 1) as f64 / 2.0;
    let mut ratings = Vec::new();
    for u in 0..config.num_users {
        for i in 0..config.num_items {
            if rng.random::<f64>() >= config.density {
                continue;
            }
            let dot: f64 = (0..k).map(|f| p[u * k + f] * q[i * k + f]).sum();
            let y = bu[u] + bi[i] + scale * dot + config.noise * normal.sample(&mut rng);
            let idx = (mid + mid * 0.8 * y).round().clamp(0.0, (d - 1) as f64) as usize;
            ratings.push(Rating {
                user: u,
                item: i,
                score: idx,
            });
        }
    }
    RatingDataset::from_ratings(scores.clone(), config.num_users, config.num_items, &ratings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_uses_whole_scale() {
        let five = ScoreSet::from_range(1.0, 5.0, 1.0).unwrap();
        let cfg = SyntheticConfig {
            num_users: 60,
            num_items: 40,
            ..Default::default()
        };
        let a = generate(&cfg, &five).unwrap();
        let b = generate(&cfg, &five).unwrap();
        assert_eq!(a.ratings(), b.ratings());
        let expected = 60.0 * 40.0 * cfg.density;
        assert!((a.num_ratings() as f64 - expected).abs() < 4.0 * expected.sqrt());
        assert!(a.score_counts().iter().all(|&c| c > 0));
        let c = generate(&SyntheticConfig { seed: 8, ..cfg }, &five).unwrap();
        assert_ne!(a.ratings(), c.ratings());
    }

    #[test]
    fn rejects_bad_config() {
        let five = ScoreSet::from_range(1.0, 5.0, 1.0).unwrap();
        assert!(generate(
            &SyntheticConfig {
                density: 0.0,
                ..Default::default()
            },
            &five
        )
        .is_err());
        assert!(generate(
            &SyntheticConfig {
                rank: 0,
                ..Default::default()
            },
            &five
        )
        .is_err());
    }
}
