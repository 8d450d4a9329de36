//! MovieLens `ratings.dat` (`UserID::MovieID::Rating::Timestamp`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{EntryIndex, MaskedMatrix, MASKED};

pub const MOVIELENS_USERS: usize = 6040;
pub const MOVIELENS_MOVIES: usize = 3952;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rating {
    pub entry: EntryIndex,
    pub rating: u8,
    pub timestamp: i64,
}

/// Users × movies over the full id ranges; id `k` maps to index `k - 1`.
#[derive(Debug, Clone)]
pub struct MovieLens {
    pub matrix: MaskedMatrix,
    /// In file order.
    pub ratings: Vec<Rating>,
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} '{raw}'"),
    })
}

fn id(raw: &str, name: &str, max: usize, line: usize) -> Result<usize> {
    let k: usize = field(raw, name, line)?;
    if k == 0 || k > max {
        return Err(Error::Parse {
            line,
            message: format!("{name} {k} outside 1..={max}"),
        });
    }
    Ok(k - 1)
}

pub fn read_movielens<R: BufRead>(input: R, n_users: usize, n_movies: usize) -> Result<MovieLens> {
    let mut values = Array2::from_elem((n_users, n_movies), MASKED);
    let mut mask = Array2::from_elem((n_users, n_movies), false);
    let mut ratings = Vec::new();
    let mut first_line: HashMap<EntryIndex, usize> = HashMap::new();
    for (k, text) in input.lines().enumerate() {
        let line = k + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = text.split("::").collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 '::'-separated fields, found {}", parts.len()),
            });
        }
        let entry = EntryIndex::new(
            id(parts[0], "user id", n_users, line)?,
            id(parts[1], "movie id", n_movies, line)?,
        );
        let rating: i64 = field(parts[2], "rating", line)?;
        if !(1..=5).contains(&rating) {
            return Err(Error::RatingOutOfRange { line, rating });
        }
        let timestamp: i64 = field(parts[3], "timestamp", line)?;
        if let Some(&first) = first_line.get(&entry) {
            return Err(Error::DuplicateEntry {
                row_id: (entry.row + 1).to_string(),
                col_id: (entry.col + 1).to_string(),
                first_line: first,
                second_line: line,
            });
        }
        first_line.insert(entry, line);
        values[[entry.row, entry.col]] = rating as f64;
        mask[[entry.row, entry.col]] = true;
        ratings.push(Rating {
            entry,
            rating: rating as u8,
            timestamp,
        });
    }
    Ok(MovieLens {
        matrix: MaskedMatrix::new(values, mask)?,
        ratings,
    })
}

/// Loads the MovieLens 1M shape (6040 users × 3952 movies).
pub fn load_movielens(path: impl AsRef<Path>) -> Result<MovieLens> {
    load_movielens_with_shape(path, MOVIELENS_USERS, MOVIELENS_MOVIES)
}

pub fn load_movielens_with_shape(path: impl AsRef<Path>, n_users: usize, n_movies: usize) -> Result<MovieLens> {
    read_movielens(BufReader::new(File::open(path)?), n_users, n_movies)
}

/// Time-ordered split of the ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct ChronologicalSplit {
    /// Sample from the earliest 80%, for tuning.
    pub early_sample: Vec<EntryIndex>,
    /// Sample from the latest 20%, for evaluation.
    pub late_sample: Vec<EntryIndex>,
    /// Every rating in the latest 20%; hidden from training.
    pub late: Vec<EntryIndex>,
}

/// Orders ratings by timestamp (file order breaks ties), cuts at 80%, and
/// draws seeded samples of the given sizes from each side (capped at the
/// side's size). All lists are row-major.
pub fn chronological_split(ml: &MovieLens, early_size: usize, late_size: usize, seed: u64) -> ChronologicalSplit {
    let mut order: Vec<usize> = (0..ml.ratings.len()).collect();
    order.sort_by_key(|&k| (ml.ratings[k].timestamp, k));
    let cut = ml.ratings.len() * 4 / 5;
    let (early, late) = order.split_at(cut);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |side: &[usize], size: usize| -> Vec<EntryIndex> {
        let mut out: Vec<EntryIndex> = rand::seq::index::sample(&mut rng, side.len(), size.min(side.len()))
            .into_iter()
            .map(|i| ml.ratings[side[i]].entry)
            .collect();
        out.sort_unstable();
        out
    };
    let early_sample = pick(early, early_size);
    let late_sample = pick(late, late_size);
    let mut late: Vec<EntryIndex> = late.iter().map(|&k| ml.ratings[k].entry).collect();
    late.sort_unstable();
    ChronologicalSplit {
        early_sample,
        late_sample,
        late,
    }
}
