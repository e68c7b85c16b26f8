#![allow(dead_code)]

use bemf_core::{BemfModel, FactorMatrix, Hyperparams, Rating, RatingDataset, ScoreSet};

/// Two-score scale of the running example: dislike = 0, like = 1.
pub fn like_dislike() -> ScoreSet {
    ScoreSet::new(&[0.0, 1.0]).unwrap()
}

pub const DISLIKE: usize = 0;
pub const LIKE: usize = 1;

/// 4 users x 6 items; `None` is unrated.
pub const RATINGS: [[Option<usize>; 6]; 4] = [
    [Some(0), Some(1), None, Some(1), None, None],
    [Some(1), None, Some(1), Some(0), Some(0), None],
    [None, Some(1), Some(1), None, None, Some(0)],
    [Some(0), None, Some(0), None, Some(1), Some(1)],
];

pub fn running_example() -> RatingDataset {
    let mut ratings = Vec::new();
    for (u, row) in RATINGS.iter().enumerate() {
        for (i, r) in row.iter().enumerate() {
            if let Some(score) = r {
                ratings.push(Rating {
                    user: u,
                    item: i,
                    score: *score,
                });
            }
        }
    }
    RatingDataset::from_ratings(like_dislike(), 4, 6, &ratings).unwrap()
}

pub const INIT_USERS_LIKE: [[f64; 3]; 4] = [
    [0.99, 0.26, 0.55],
    [0.77, 0.77, 0.85],
    [0.20, 0.27, 0.35],
    [0.11, 0.96, 0.13],
];
pub const INIT_USERS_DISLIKE: [[f64; 3]; 4] = [
    [0.61, 0.83, 0.47],
    [0.12, 0.02, 0.54],
    [0.11, 0.41, 0.07],
    [0.81, 0.92, 0.52],
];
pub const INIT_ITEMS_LIKE: [[f64; 3]; 6] = [
    [0.91, 0.15, 0.27],
    [0.54, 0.54, 0.79],
    [0.31, 0.57, 0.09],
    [1.00, 0.83, 0.75],
    [0.68, 0.03, 0.05],
    [0.35, 0.50, 0.75],
];
pub const INIT_ITEMS_DISLIKE: [[f64; 3]; 6] = [
    [0.92, 0.53, 0.67],
    [0.40, 0.24, 0.12],
    [0.64, 0.22, 0.89],
    [0.64, 0.86, 0.60],
    [0.51, 0.12, 0.41],
    [0.92, 0.23, 0.75],
];

pub const TRAINED_USERS_LIKE: [[f64; 3]; 4] = [
    [0.96, 0.27, 0.56],
    [0.72, 0.75, 0.81],
    [0.21, 0.29, 0.34],
    [0.05, 0.92, 0.12],
];
pub const TRAINED_USERS_DISLIKE: [[f64; 3]; 4] = [
    [0.55, 0.76, 0.43],
    [0.07, 0.02, 0.49],
    [0.10, 0.39, 0.05],
    [0.73, 0.90, 0.46],
];
pub const TRAINED_ITEMS_LIKE: [[f64; 3]; 6] = [
    [0.82, 0.13, 0.24],
    [0.58, 0.58, 0.84],
    [0.31, 0.58, 0.09],
    [0.95, 0.79, 0.71],
    [0.66, 0.03, 0.05],
    [0.34, 0.48, 0.72],
];
pub const TRAINED_ITEMS_DISLIKE: [[f64; 3]; 6] = [
    [0.90, 0.52, 0.66],
    [0.36, 0.21, 0.11],
    [0.57, 0.20, 0.80],
    [0.61, 0.82, 0.58],
    [0.50, 0.12, 0.40],
    [0.89, 0.22, 0.73],
];

pub fn matrix<const R: usize>(rows: &[[f64; 3]; R]) -> FactorMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    FactorMatrix::from_rows(&rows).unwrap()
}

pub fn example_hyperparams() -> Hyperparams {
    Hyperparams {
        k: 3,
        gamma: 0.1,
        eta: 0.01,
        iterations: 1,
        seed: 0,
        ..Default::default()
    }
}

pub fn initial_model() -> BemfModel {
    BemfModel::from_factors(
        like_dislike(),
        example_hyperparams(),
        vec![matrix(&INIT_USERS_DISLIKE), matrix(&INIT_USERS_LIKE)],
        vec![matrix(&INIT_ITEMS_DISLIKE), matrix(&INIT_ITEMS_LIKE)],
    )
    .unwrap()
}

pub fn trained_model() -> BemfModel {
    BemfModel::from_factors(
        like_dislike(),
        example_hyperparams(),
        vec![matrix(&TRAINED_USERS_DISLIKE), matrix(&TRAINED_USERS_LIKE)],
        vec![matrix(&TRAINED_ITEMS_DISLIKE), matrix(&TRAINED_ITEMS_LIKE)],
    )
    .unwrap()
}

/// Largest entrywise distance between a model's factors and the trained
/// reference values, as `(users, items)`.
pub fn distance_to_trained(model: &BemfModel) -> (f64, f64) {
    let diff = |m: &FactorMatrix, expected: &[[f64; 3]]| {
        expected
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(f, &x)| (r, f, x)))
            .map(|(r, f, x)| (m.row(r)[f] - x).abs())
            .fold(0.0, f64::max)
    };
    let users = diff(model.user_factors(LIKE), &TRAINED_USERS_LIKE)
        .max(diff(model.user_factors(DISLIKE), &TRAINED_USERS_DISLIKE));
    let items = diff(model.item_factors(LIKE), &TRAINED_ITEMS_LIKE)
        .max(diff(model.item_factors(DISLIKE), &TRAINED_ITEMS_DISLIKE));
    (users, items)
}
