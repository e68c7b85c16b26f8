//! Neighbourhood collaborative filtering with the JMSD similarity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::predictor::RatingPredictor;
use crate::scores::ScoreSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnMode {
    UserBased,
    ItemBased,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub mode: KnnMode,
    /// Number of neighbours.
    pub neighbors: usize,
}

/// Jaccard overlap times one minus the mean squared difference of
/// co-ratings, with differences normalized by the score range.
///
/// Profiles are `(key, score index)` lists sorted by key. Returns 0 when the
/// profiles share no key.
pub fn jmsd(a: &[(usize, usize)], b: &[(usize, usize)], scores: &ScoreSet) -> f64 {
    let range = scores.max() - scores.min();
    let (mut x, mut y) = (0, 0);
    let (mut common, mut sq) = (0usize, 0.0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                let d = (scores.value(a[x].1) - scores.value(b[y].1)) / range;
                sq += d * d;
                common += 1;
                x += 1;
                y += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let jaccard = common as f64 / (a.len() + b.len() - common) as f64;
    jaccard * (1.0 - sq / common as f64)
}

/// A fitted KNN predictor. Similarities are computed per query unless a
/// cache was requested.
#[derive(Clone, Debug)]
pub struct KnnModel {
    train: RatingDataset,
    config: KnnConfig,
    cache: Option<Vec<f64>>,
}

impl KnnModel {
    pub fn new(train: RatingDataset, config: KnnConfig) -> Result<Self> {
        if config.neighbors == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        Ok(KnnModel {
            train,
            config,
            cache: None,
        })
    }

    /// Precomputes the full similarity matrix (rows in parallel).
    pub fn with_cache(mut self) -> Self {
        let n = self.size();
        let sims: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|a| {
                let this = &self;
                (0..n).map(move |b| this.compute_similarity(a, b))
            })
            .collect();
        self.cache = Some(sims);
        self
    }

    pub fn config(&self) -> KnnConfig {
        self.config
    }

    pub fn train(&self) -> &RatingDataset {
        &self.train
    }

    fn size(&self) -> usize {
        match self.config.mode {
            KnnMode::UserBased => self.train.num_users(),
            KnnMode::ItemBased => self.train.num_items(),
        }
    }

    fn profile(&self, j: usize) -> &[(usize, usize)] {
        match self.config.mode {
            KnnMode::UserBased => self.train.user_ratings(j),
            KnnMode::ItemBased => self.train.item_ratings(j),
        }
    }

    fn compute_similarity(&self, a: usize, b: usize) -> f64 {
        jmsd(self.profile(a), self.profile(b), self.train.score_set())
    }

    /// Similarity between two users (user-based) or two items (item-based).
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        match &self.cache {
            Some(c) => c[a * self.size() + b],
            None => self.compute_similarity(a, b),
        }
    }

    /// Similarity-weighted mean over the K most similar neighbours that have
    /// a rating for the target. `None` when no such neighbour has positive
    /// similarity.
    pub fn predict(&self, user: usize, item: usize) -> Option<f64> {
        let scores = self.train.score_set();
        let (anchor, candidates) = match self.config.mode {
            KnnMode::UserBased => (user, self.train.item_ratings(item)),
            KnnMode::ItemBased => (item, self.train.user_ratings(user)),
        };
        let mut neigh: Vec<(f64, usize, f64)> = candidates
            .iter()
            .filter(|&&(j, _)| j != anchor)
            .map(|&(j, s)| (self.similarity(anchor, j), j, scores.value(s)))
            .filter(|&(sim, _, _)| sim > 0.0)
            .collect();
        if neigh.is_empty() {
            return None;
        }
        neigh.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        neigh.truncate(self.config.neighbors);
        let (num, den) = neigh
            .iter()
            .fold((0.0, 0.0), |(n, d), &(sim, _, r)| (n + sim * r, d + sim));
        Some(num / den)
    }
}

impl RatingPredictor for KnnModel {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64> {
        self.predict(user, item)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::Rating;

    fn five() -> ScoreSet {
        ScoreSet::from_range(1.0, 5.0, 1.0).unwrap()
    }

    #[test]
    fn jmsd_basic_cases() {
        let s = five();
        let a = vec![(0, 4), (1, 2), (5, 0)];
        assert_eq!(jmsd(&a, &a, &s), 1.0);
        assert_eq!(jmsd(&a, &[(2, 1), (3, 3)], &s), 0.0);
        assert_eq!(jmsd(&[], &a, &s), 0.0);
    }

    #[test]
    fn jmsd_hand_example() {
        // 5-star scale, range 4. Co-rated items 0 and 1 with normalized
        // differences 0 and 0.5; union of 4 items.
        let s = five();
        let a = vec![(0, 4), (1, 4), (2, 0)];
        let b = vec![(0, 4), (1, 2), (3, 1)];
        assert!((jmsd(&a, &b, &s) - 0.4375).abs() < 1e-15);
    }

    fn toy() -> RatingDataset {
        // five users, four items
        let cells = [
            (0, 0, 4),
            (0, 1, 3),
            (0, 2, 4),
            (1, 0, 4),
            (1, 1, 3),
            (1, 3, 1),
            (2, 0, 0),
            (2, 2, 0),
            (2, 3, 4),
            (3, 1, 2),
            (3, 2, 3),
            (3, 3, 2),
            (4, 0, 3),
            (4, 1, 3),
            (4, 2, 4),
            (4, 3, 0),
        ];
        let ratings: Vec<Rating> = cells
            .iter()
            .map(|&(user, item, score)| Rating { user, item, score })
            .collect();
        RatingDataset::from_ratings(five(), 5, 4, &ratings).unwrap()
    }

    /// Sorts every candidate by similarity and averages the top K by hand.
    fn brute_force(
        ds: &RatingDataset,
        mode: KnnMode,
        k: usize,
        user: usize,
        item: usize,
    ) -> Option<f64> {
        let s = ds.score_set();
        let mut all = Vec::new();
        match mode {
            KnnMode::UserBased => {
                for v in 0..ds.num_users() {
                    if v == user {
                        continue;
                    }
                    if let Some(r) = ds.get(v, item) {
                        all.push((
                            jmsd(ds.user_ratings(user), ds.user_ratings(v), s),
                            v,
                            s.value(r),
                        ));
                    }
                }
            }
            KnnMode::ItemBased => {
                for j in 0..ds.num_items() {
                    if j == item {
                        continue;
                    }
                    if let Some(r) = ds.get(user, j) {
                        all.push((
                            jmsd(ds.item_ratings(item), ds.item_ratings(j), s),
                            j,
                            s.value(r),
                        ));
                    }
                }
            }
        }
        all.retain(|x| x.0 > 0.0);
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let top = &all[..all.len().min(k)];
        if top.is_empty() {
            return None;
        }
        let w: f64 = top.iter().map(|x| x.0).sum();
        Some(top.iter().map(|x| x.0 * x.2).sum::<f64>() / w)
    }

    #[test]
    fn matches_brute_force_on_toy() {
        let ds = toy();
        for mode in [KnnMode::UserBased, KnnMode::ItemBased] {
            let lazy = KnnModel::new(ds.clone(), KnnConfig { mode, neighbors: 2 }).unwrap();
            let cached = lazy.clone().with_cache();
            for u in 0..5 {
                for i in 0..4 {
                    let expected = brute_force(&ds, mode, 2, u, i);
                    let got = lazy.predict(u, i);
                    match (expected, got) {
                        (Some(e), Some(g)) => assert!((e - g).abs() < 1e-12, "{mode:?} ({u},{i})"),
                        (None, None) => {}
                        other => panic!("{mode:?} ({u},{i}): {other:?}"),
                    }
                    assert_eq!(got, cached.predict(u, i));
                }
            }
        }
    }

    #[test]
    fn single_neighbour_and_abstention() {
        let ratings = [
            Rating {
                user: 0,
                item: 0,
                score: 2,
            },
            Rating {
                user: 1,
                item: 0,
                score: 2,
            },
            Rating {
                user: 1,
                item: 1,
                score: 4,
            },
        ];
        let ds = RatingDataset::from_ratings(five(), 3, 3, &ratings).unwrap();
        let knn = KnnModel::new(
            ds,
            KnnConfig {
                mode: KnnMode::UserBased,
                neighbors: 5,
            },
        )
        .unwrap();
        // user 0 and user 1 agree on item 0
        assert_eq!(knn.predict(0, 1), Some(5.0));
        // nobody rated item 2
        assert_eq!(knn.predict(0, 2), None);
        // user 2 has no profile
        assert_eq!(knn.predict(2, 0), None);
        assert!(KnnModel::new(
            knn.train().clone(),
            KnnConfig {
                mode: KnnMode::UserBased,
                neighbors: 0
            }
        )
        .is_err());
    }

    fn profile() -> impl Strategy<Value = Vec<(usize, usize)>> {
        proptest::collection::btree_map(0usize..12, 0usize..5, 0..12)
            .prop_map(|m| m.into_iter().collect())
    }

    proptest! {
        #[test]
        fn jmsd_is_symmetric_and_bounded(a in profile(), b in profile()) {
            let s = five();
            let x = jmsd(&a, &b, &s);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert_eq!(x, jmsd(&b, &a, &s));
            if !a.is_empty() {
                prop_assert_eq!(jmsd(&a, &a, &s), 1.0);
            }
        }

        #[test]
        fn prediction_within_neighbour_range(cells in proptest::collection::btree_map((0usize..6, 0usize..6), 0usize..5, 1..30), k in 1usize..4) {
            let ratings: Vec<Rating> = cells.iter().map(|(&(user, item), &score)| Rating { user, item, score }).collect();
            let ds = RatingDataset::from_ratings(five(), 6, 6, &ratings).unwrap();
            let knn = KnnModel::new(ds.clone(), KnnConfig { mode: KnnMode::UserBased, neighbors: k }).unwrap();
            for u in 0..6 {
                for i in 0..6 {
                    if let Some(p) = knn.predict(u, i) {
                        let vals: Vec<f64> = ds.item_ratings(i).iter().filter(|x| x.0 != u).map(|x| ds.score_set().value(x.1)).collect();
                        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                        prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
                    }
                }
            }
        }
    }
}
