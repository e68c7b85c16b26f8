//! Rating ingestion, sparse storage, train/test splits and per-score views.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scores::ScoreSet;

/// One known rating. `score` is an index into the dataset's [`ScoreSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub score: usize,
}

/// Bidirectional map between external ids and contiguous indices, in
/// first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ids `"0"`, `"1"`, ... for datasets built in memory.
    pub fn sequential(n: usize) -> Self {
        let mut map = Self::new();
        for j in 0..n {
            map.insert(&j.to_string());
        }
        map
    }

    pub fn insert(&mut self, id: &str) -> usize {
        if let Some(&j) = self.index.get(id) {
            return j;
        }
        let j = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), j);
        j
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delimiter {
    Tab,
    Comma,
}

impl Delimiter {
    pub fn as_char(self) -> char {
        match self {
            Delimiter::Tab => '\t',
            Delimiter::Comma => ',',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RatingFormat {
    pub delimiter: Delimiter,
    pub has_header: bool,
}

impl Default for RatingFormat {
    fn default() -> Self {
        RatingFormat {
            delimiter: Delimiter::Comma,
            has_header: false,
        }
    }
}

/// Sparse user x item rating matrix with adjacency lists in both directions.
///
/// Adjacency lists are sorted by the neighbour index, so lookups are binary
/// searches and iteration order is canonical.
#[derive(Clone, Debug)]
pub struct RatingDataset {
    score_set: ScoreSet,
    by_user: Vec<Vec<(usize, usize)>>,
    by_item: Vec<Vec<(usize, usize)>>,
    num_ratings: usize,
    user_ids: IdMap,
    item_ids: IdMap,
}

impl RatingDataset {
    /// Builds a dataset over `num_users x num_items` with sequential ids.
    pub fn from_ratings(
        score_set: ScoreSet,
        num_users: usize,
        num_items: usize,
        ratings: &[Rating],
    ) -> Result<Self> {
        Self::with_ids(
            score_set,
            IdMap::sequential(num_users),
            IdMap::sequential(num_items),
            ratings,
        )
    }

    /// Builds a dataset whose dimensions are given by the id maps.
    pub fn with_ids(
        score_set: ScoreSet,
        user_ids: IdMap,
        item_ids: IdMap,
        ratings: &[Rating],
    ) -> Result<Self> {
        let (n, m, d) = (user_ids.len(), item_ids.len(), score_set.len());
        let mut by_user = vec![Vec::new(); n];
        let mut by_item = vec![Vec::new(); m];
        for r in ratings {
            if r.user >= n || r.item >= m || r.score >= d {
                return Err(Error::InvalidArgument(format!(
                    "rating {r:?} out of range for {n} users, {m} items, {d} scores"
                )));
            }
            by_user[r.user].push((r.item, r.score));
            by_item[r.item].push((r.user, r.score));
        }
        for (u, row) in by_user.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate rating for user {u}, item {}",
                    w[0].0
                )));
            }
        }
        for col in by_item.iter_mut() {
            col.sort_unstable();
        }
        Ok(RatingDataset {
            score_set,
            by_user,
            by_item,
            num_ratings: ratings.len(),
            user_ids,
            item_ids,
        })
    }

    pub fn score_set(&self) -> &ScoreSet {
        &self.score_set
    }

    pub fn num_users(&self) -> usize {
        self.by_user.len()
    }

    pub fn num_items(&self) -> usize {
        self.by_item.len()
    }

    pub fn num_ratings(&self) -> usize {
        self.num_ratings
    }

    pub fn is_empty(&self) -> bool {
        self.num_ratings == 0
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.item_ids
    }

    /// `(item, score)` pairs rated by `user`, sorted by item.
    pub fn user_ratings(&self, user: usize) -> &[(usize, usize)] {
        &self.by_user[user]
    }

    /// `(user, score)` pairs for `item`, sorted by user.
    pub fn item_ratings(&self, item: usize) -> &[(usize, usize)] {
        &self.by_item[item]
    }

    pub fn get(&self, user: usize, item: usize) -> Option<usize> {
        let row = self.by_user.get(user)?;
        row.binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// All ratings in canonical `(user, item)` order.
    pub fn iter(&self) -> impl Iterator<Item = Rating> + '_ {
        self.by_user.iter().enumerate().flat_map(|(user, row)| {
            row.iter()
                .map(move |&(item, score)| Rating { user, item, score })
        })
    }

    pub fn ratings(&self) -> Vec<Rating> {
        self.iter().collect()
    }

    /// Number of ratings per score index.
    pub fn score_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.score_set.len()];
        for r in self.iter() {
            counts[r.score] += 1;
        }
        counts
    }

    /// Mean rating value, or `None` when empty.
    pub fn mean_value(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let total: f64 = self.iter().map(|r| self.score_set.value(r.score)).sum();
        Some(total / self.num_ratings as f64)
    }
}

/// Reads `user<sep>item<sep>rating` records. Extra trailing fields (such as
/// timestamps) are ignored; blank lines are skipped.
pub fn parse_ratings<R: BufRead>(
    source: R,
    score_set: &ScoreSet,
    format: RatingFormat,
) -> Result<RatingDataset> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut ratings = Vec::new();
    let mut seen = HashMap::new();
    for record in records(source, format) {
        let rec = record?;
        let score = score_index(score_set, &rec)?;
        let user = users.insert(&rec.user);
        let item = items.insert(&rec.item);
        if seen.insert((user, item), rec.line).is_some() {
            return Err(Error::DuplicateRating {
                line: rec.line,
                user: rec.user,
                item: rec.item,
            });
        }
        ratings.push(Rating { user, item, score });
    }
    RatingDataset::with_ids(score_set.clone(), users, items, &ratings)
}

/// Reads records against existing id maps (e.g. a test file paired with a
/// training file). Unknown users or items are rejected.
pub fn parse_ratings_with_ids<R: BufRead>(
    source: R,
    score_set: &ScoreSet,
    format: RatingFormat,
    users: &IdMap,
    items: &IdMap,
) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for record in records(source, format) {
        let rec = record?;
        let score = score_index(score_set, &rec)?;
        let user = users.get(&rec.user).ok_or_else(|| Error::UnknownId {
            line: rec.line,
            kind: "user",
            id: rec.user.clone(),
        })?;
        let item = items.get(&rec.item).ok_or_else(|| Error::UnknownId {
            line: rec.line,
            kind: "item",
            id: rec.item.clone(),
        })?;
        if seen.insert((user, item), rec.line).is_some() {
            return Err(Error::DuplicateRating {
                line: rec.line,
                user: rec.user,
                item: rec.item,
            });
        }
        out.push(Rating { user, item, score });
    }
    Ok(out)
}

/// Writes ratings using the dataset's external ids and canonical score text.
pub fn write_ratings<W: Write>(
    mut out: W,
    dataset: &RatingDataset,
    ratings: impl IntoIterator<Item = Rating>,
    format: RatingFormat,
) -> Result<()> {
    let sep = format.delimiter.as_char();
    if format.has_header {
        writeln!(out, "user{sep}item{sep}rating")?;
    }
    for r in ratings {
        writeln!(
            out,
            "{}{sep}{}{sep}{}",
            dataset.user_ids.id(r.user),
            dataset.item_ids.id(r.item),
            dataset.score_set.format(r.score)
        )?;
    }
    Ok(())
}

struct Record {
    line: usize,
    user: String,
    item: String,
    rating: String,
}

fn records<R: BufRead>(source: R, format: RatingFormat) -> impl Iterator<Item = Result<Record>> {
    let sep = format.delimiter.as_char();
    let skip = usize::from(format.has_header);
    source
        .lines()
        .enumerate()
        .skip(skip)
        .filter_map(move |(j, line)| {
            let line_no = j + 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                return None;
            }
            let mut fields = trimmed.split(sep).map(str::trim);
            let (user, item, rating) = match (fields.next(), fields.next(), fields.next()) {
                (Some(u), Some(i), Some(r)) if !u.is_empty() && !i.is_empty() => (u, i, r),
                _ => {
                    return Some(Err(Error::MalformedLine {
                        line: line_no,
                        reason: format!("expected user{sep}item{sep}rating, got {trimmed:?}"),
                    }))
                }
            };
            Some(Ok(Record {
                line: line_no,
                user: user.to_string(),
                item: item.to_string(),
                rating: rating.to_string(),
            }))
        })
}

fn score_index(score_set: &ScoreSet, rec: &Record) -> Result<usize> {
    if rec.rating.parse::<f64>().is_err() {
        return Err(Error::MalformedLine {
            line: rec.line,
            reason: format!("rating {:?} is not a number", rec.rating),
        });
    }
    score_set
        .index_of_str(&rec.rating)
        .ok_or_else(|| Error::RatingNotInScoreSet {
            line: rec.line,
            value: rec.rating.clone(),
        })
}

/// A training dataset plus the held-out test ratings.
#[derive(Clone, Debug)]
pub struct SplitDataset {
    pub train: RatingDataset,
    pub test: Vec<Rating>,
    pub seed: u64,
    pub test_ratio: f64,
}

/// Assigns each rating to the test side independently with probability
/// `test_ratio`. Users and items keep their indices even when all of their
/// ratings land in the test side.
pub fn split_train_test(
    dataset: &RatingDataset,
    test_ratio: f64,
    seed: u64,
) -> Result<SplitDataset> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test ratio must be in (0, 1), got {test_ratio}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for r in dataset.iter() {
        if rng.random::<f64>() < test_ratio {
            test.push(r);
        } else {
            train.push(r);
        }
    }
    let train = RatingDataset::with_ids(
        dataset.score_set.clone(),
        dataset.user_ids.clone(),
        dataset.item_ids.clone(),
        &train,
    )?;
    Ok(SplitDataset {
        train,
        test,
        seed,
        test_ratio,
    })
}

/// The binary view of the ratings for one score: positives are ratings equal
/// to that score, negatives are all other known ratings. Unrated pairs are
/// never materialized.
#[derive(Clone, Copy, Debug)]
pub struct BinaryScoreView<'a> {
    dataset: &'a RatingDataset,
    score: usize,
}

impl<'a> BinaryScoreView<'a> {
    pub fn new(dataset: &'a RatingDataset, score: usize) -> Self {
        assert!(score < dataset.score_set.len(), "score index out of range");
        BinaryScoreView { dataset, score }
    }

    pub fn score(&self) -> usize {
        self.score
    }

    pub fn dataset(&self) -> &'a RatingDataset {
        self.dataset
    }

    /// `(user, item)` pairs rated exactly this score.
    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + 'a {
        let score = self.score;
        self.dataset
            .iter()
            .filter(move |r| r.score == score)
            .map(|r| (r.user, r.item))
    }

    /// `(user, item)` pairs rated with a different score.
    pub fn negatives(&self) -> impl Iterator<Item = (usize, usize)> + 'a {
        let score = self.score;
        self.dataset
            .iter()
            .filter(move |r| r.score != score)
            .map(|r| (r.user, r.item))
    }

    /// Every known entry as `(user, item, is_positive)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, bool)> + 'a {
        let score = self.score;
        self.dataset
            .iter()
            .map(move |r| (r.user, r.item, r.score == score))
    }
}

pub fn score_views(dataset: &RatingDataset) -> Vec<BinaryScoreView<'_>> {
    (0..dataset.score_set.len())
        .map(|s| BinaryScoreView::new(dataset, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::io::Cursor;

    use proptest::prelude::*;

    use super::*;

    fn five() -> ScoreSet {
        ScoreSet::from_range(1.0, 5.0, 1.0).unwrap()
    }

    fn parse(text: &str) -> Result<RatingDataset> {
        parse_ratings(Cursor::new(text), &five(), RatingFormat::default())
    }

    #[test]
    fn parses_small_file() {
        let ds = parse("a,x,5\na,y,1\nb,x,4\n").unwrap();
        assert_eq!(
            (ds.num_users(), ds.num_items(), ds.num_ratings()),
            (2, 2, 3)
        );
        assert_eq!(ds.get(0, 0), Some(4));
        assert_eq!(ds.get(0, 1), Some(0));
        assert_eq!(ds.get(1, 0), Some(3));
        assert_eq!(ds.get(1, 1), None);
        assert_eq!(ds.user_ids().get("b"), Some(1));
        assert_eq!(ds.item_ids().id(1), "y");
    }

    #[test]
    fn tab_delimited_with_header_and_extra_fields() {
        let text = "user\titem\trating\tts\n1\t10\t3\t999\n\n2\t10\t2\t1000\n";
        let fmt = RatingFormat {
            delimiter: Delimiter::Tab,
            has_header: true,
        };
        let ds = parse_ratings(Cursor::new(text), &five(), fmt).unwrap();
        assert_eq!(ds.num_ratings(), 2);
        assert_eq!(ds.item_ratings(0), &[(0, 2), (1, 1)]);
    }

    #[test]
    fn reports_line_numbers() {
        match parse("a,x,5\nbroken line\n") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("a,x,5\na,y,4.3\n") {
            Err(Error::RatingNotInScoreSet { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "4.3");
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse("a,x,5\nb,x,2\na,x,1\n") {
            Err(Error::DuplicateRating { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("a,x,abc\n"),
            Err(Error::MalformedLine { .. })
        ));
    }

    #[test]
    fn test_file_must_use_known_ids() {
        let ds = parse("a,x,5\nb,y,1\n").unwrap();
        let ok = parse_ratings_with_ids(
            Cursor::new("a,y,3\n"),
            &five(),
            RatingFormat::default(),
            ds.user_ids(),
            ds.item_ids(),
        )
        .unwrap();
        assert_eq!(
            ok,
            vec![Rating {
                user: 0,
                item: 1,
                score: 2
            }]
        );
        let err = parse_ratings_with_ids(
            Cursor::new("a,y,3\nc,x,1\n"),
            &five(),
            RatingFormat::default(),
            ds.user_ids(),
            ds.item_ids(),
        );
        assert!(matches!(
            err,
            Err(Error::UnknownId {
                line: 2,
                kind: "user",
                ..
            })
        ));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let half = ScoreSet::parse_range("0.5,4,0.5").unwrap();
        let text = "u1,i1,3.5\nu2,i1,0.5\nu1,i2,4.0\n";
        let ds = parse_ratings(Cursor::new(text), &half, RatingFormat::default()).unwrap();
        let mut buf = Vec::new();
        write_ratings(&mut buf, &ds, ds.iter(), RatingFormat::default()).unwrap();
        let back = parse_ratings(Cursor::new(buf), &half, RatingFormat::default()).unwrap();
        let triples = |d: &RatingDataset| -> BTreeSet<(String, String, String)> {
            d.iter()
                .map(|r| {
                    (
                        d.user_ids().id(r.user).to_string(),
                        d.item_ids().id(r.item).to_string(),
                        d.score_set().format(r.score),
                    )
                })
                .collect()
        };
        assert_eq!(triples(&ds), triples(&back));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let ratings: Vec<Rating> = (0..400)
            .map(|j| Rating {
                user: j / 20,
                item: j % 20,
                score: j % 5,
            })
            .collect();
        let ds = RatingDataset::from_ratings(five(), 20, 20, &ratings).unwrap();
        let a = split_train_test(&ds, 0.2, 42).unwrap();
        let b = split_train_test(&ds, 0.2, 42).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.ratings(), b.train.ratings());
        let c = split_train_test(&ds, 0.2, 43).unwrap();
        assert_ne!(a.test, c.test);

        let mut union: Vec<Rating> = a.train.iter().chain(a.test.iter().copied()).collect();
        union.sort();
        assert_eq!(union, ds.ratings());
        for t in &a.test {
            assert_eq!(a.train.get(t.user, t.item), None);
        }
        assert_eq!(a.train.num_users(), 20);
    }

    #[test]
    fn split_rejects_bad_input() {
        let empty = RatingDataset::from_ratings(five(), 0, 0, &[]).unwrap();
        assert!(matches!(
            split_train_test(&empty, 0.5, 1),
            Err(Error::EmptyDataset)
        ));
        let one = RatingDataset::from_ratings(
            five(),
            1,
            1,
            &[Rating {
                user: 0,
                item: 0,
                score: 0,
            }],
        )
        .unwrap();
        assert!(split_train_test(&one, 0.0, 1).is_err());
        assert!(split_train_test(&one, 1.0, 1).is_err());
    }

    #[test]
    fn half_split_size_within_three_sigma() {
        // n = 10000, p = 0.5: sigma = 50, 3 sigma window [4850, 5150] lies inside [4700, 5300]
        let ratings: Vec<Rating> = (0..10_000)
            .map(|j| Rating {
                user: j / 100,
                item: j % 100,
                score: j % 5,
            })
            .collect();
        let ds = RatingDataset::from_ratings(five(), 100, 100, &ratings).unwrap();
        for seed in 0..5 {
            let split = split_train_test(&ds, 0.5, seed).unwrap();
            let t = split.test.len();
            assert!((4700..=5300).contains(&t), "seed {seed}: {t}");
        }
    }

    #[test]
    fn all_same_score_views() {
        let ratings: Vec<Rating> = (0..6)
            .map(|j| Rating {
                user: j,
                item: 0,
                score: 0,
            })
            .collect();
        let ds = RatingDataset::from_ratings(five(), 6, 1, &ratings).unwrap();
        let views = score_views(&ds);
        assert_eq!(views[0].positives().count(), 6);
        assert_eq!(views[0].negatives().count(), 0);
        assert_eq!(views[3].positives().count(), 0);
        assert_eq!(views[3].negatives().count(), 6);
    }

    proptest! {
        #[test]
        fn views_partition_known_ratings(cells in proptest::collection::btree_map((0usize..15, 0usize..15), 0usize..5, 1..100)) {
            let ratings: Vec<Rating> = cells.iter().map(|(&(user, item), &score)| Rating { user, item, score }).collect();
            let ds = RatingDataset::from_ratings(five(), 15, 15, &ratings).unwrap();
            let views = score_views(&ds);
            prop_assert_eq!(views.len(), 5);
            let total: usize = views.iter().map(|v| v.positives().count()).sum();
            prop_assert_eq!(total, ratings.len());
            let mut all_pos = BTreeSet::new();
            for v in &views {
                let pos: BTreeSet<_> = v.positives().collect();
                let neg: BTreeSet<_> = v.negatives().collect();
                prop_assert!(pos.is_disjoint(&neg));
                prop_assert_eq!(pos.len() + neg.len(), ratings.len());
                for p in &pos {
                    prop_assert!(all_pos.insert(*p));
                }
            }
            // adjacency lists agree with each other
            let mut from_items: Vec<Rating> = (0..15)
                .flat_map(|i| ds.item_ratings(i).iter().map(move |&(user, score)| Rating { user, item: i, score }))
                .collect();
            from_items.sort();
            prop_assert_eq!(from_items, ds.ratings());
        }
    }
}
