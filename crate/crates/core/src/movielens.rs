//! MovieLens 100k ingestion, binarization, and train/test splitting.
//!
//! The upstream `u.data` file has one `user item rating timestamp` record
//! per line (tab-separated, 1-based ids, ratings 1..=5). Ratings are
//! binarized against the global mean rating: above the mean becomes `+1`,
//! below becomes `-1`, and the measure-zero exact ties are dropped. The
//! dataset itself is not bundled; see [`DATASET_URL`].

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::observe::BinaryObservations;
use crate::rng::{stream_rng, Stream};
use crate::sampling::Mask;

/// Canonical upstream location of the ratings archive.
pub const DATASET_URL: &str = "https://files.grouplens.org/datasets/movielens/ml-100k.zip";

/// One rating record after dense reindexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub rating: u8,
    pub timestamp: i64,
}

/// Ratings with dense 0-based user and item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsTable {
    pub n_users: usize,
    pub n_items: usize,
    pub triples: Vec<Rating>,
    /// Number of duplicate `(user, item)` records dropped during loading
    /// (the last occurrence wins).
    pub duplicates_dropped: usize,
}

/// Parses the upstream format from a reader. Fields may be separated by
/// tabs or other whitespace; ids are remapped to dense 0-based indices in
/// increasing id order.
pub fn load_movielens_from<R: BufRead>(r: R) -> Result<RatingsTable> {
    let mut raw: Vec<(u64, u64, u8, i64)> = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 fields, found {}", toks.len()),
            });
        }
        let user: u64 = toks[0].parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("user id: {e}"),
        })?;
        let item: u64 = toks[1].parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("item id: {e}"),
        })?;
        let rating: u8 = toks[2].parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("rating: {e}"),
        })?;
        let timestamp: i64 = toks[3].parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("timestamp: {e}"),
        })?;
        if user == 0 || item == 0 {
            return Err(Error::Parse {
                line: lineno,
                message: "ids are 1-based; found 0".into(),
            });
        }
        if !(1..=5).contains(&rating) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("rating {rating} outside 1..=5"),
            });
        }
        raw.push((user, item, rating, timestamp));
    }
    if raw.is_empty() {
        return Err(Error::invalid("ratings file contains no records"));
    }

    let mut user_ids: Vec<u64> = raw.iter().map(|t| t.0).collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    let mut item_ids: Vec<u64> = raw.iter().map(|t| t.1).collect();
    item_ids.sort_unstable();
    item_ids.dedup();
    let user_index = |id: u64| user_ids.binary_search(&id).expect("id present");
    let item_index = |id: u64| item_ids.binary_search(&id).expect("id present");

    // Last occurrence of a (user, item) pair wins.
    let mut seen: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
    let mut triples: Vec<Rating> = Vec::with_capacity(raw.len());
    let mut duplicates_dropped = 0usize;
    for (user, item, rating, timestamp) in raw {
        let record = Rating {
            user: user_index(user),
            item: item_index(item),
            rating,
            timestamp,
        };
        match seen.entry((record.user, record.item)) {
            std::collections::hash_map::Entry::Occupied(slot) => {
                duplicates_dropped += 1;
                triples[*slot.get()] = record;
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(triples.len());
                triples.push(record);
            }
        }
    }
    if duplicates_dropped > 0 {
        log::warn!("dropped {duplicates_dropped} duplicate (user, item) ratings; kept the last occurrence");
    }

    Ok(RatingsTable {
        n_users: user_ids.len(),
        n_items: item_ids.len(),
        triples,
        duplicates_dropped,
    })
}

/// Loads the upstream `u.data` file; errors carry download instructions
/// when the file is absent.
pub fn load_movielens<P: AsRef<Path>>(path: P) -> Result<RatingsTable> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| {
        Error::invalid(format!(
            "cannot open {}: {e}; download the archive from {DATASET_URL} and point at its u.data",
            path.display()
        ))
    })?;
    load_movielens_from(std::io::BufReader::new(f))
}

impl RatingsTable {
    /// Global mean rating.
    pub fn mean_rating(&self) -> f64 {
        let sum: f64 = self.triples.iter().map(|t| t.rating as f64).sum();
        sum / self.triples.len() as f64
    }

    /// Writes records back in the upstream format (1-based dense ids).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.triples {
            writeln!(w, "{}\t{}\t{}\t{}", t.user + 1, t.item + 1, t.rating, t.timestamp)?;
        }
        Ok(())
    }

    /// Deterministically subsamples `count` ratings (for smoke-scale runs).
    pub fn subsample(&self, count: usize, seed: u64) -> RatingsTable {
        if count >= self.triples.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.triples.len()).collect();
        let mut rng = stream_rng(seed, Stream::Split);
        order.shuffle(&mut rng);
        order.truncate(count);
        order.sort_unstable();
        let triples: Vec<Rating> = order.iter().map(|&i| self.triples[i]).collect();
        RatingsTable {
            n_users: self.n_users,
            n_items: self.n_items,
            triples,
            duplicates_dropped: 0,
        }
    }
}

/// Binarizes ratings against the global mean: `+1` above, `-1` below,
/// exact ties dropped. The resulting observations live on the
/// `n_users x n_items` index grid.
pub fn binarize(table: &RatingsTable) -> Result<BinaryObservations> {
    if table.triples.is_empty() {
        return Err(Error::invalid("empty ratings table"));
    }
    let mean = table.mean_rating();
    let mut tagged: Vec<((usize, usize), i8)> = Vec::with_capacity(table.triples.len());
    for t in &table.triples {
        let r = t.rating as f64;
        if r > mean {
            tagged.push(((t.user, t.item), 1));
        } else if r < mean {
            tagged.push(((t.user, t.item), -1));
        }
    }
    tagged.sort_unstable_by_key(|&(key, _)| key);
    let entries: Vec<(usize, usize)> = tagged.iter().map(|&(key, _)| key).collect();
    let values: Vec<i8> = tagged.iter().map(|&(_, v)| v).collect();
    let mask = Mask::from_entries(table.n_users, table.n_items, entries)?;
    BinaryObservations::new(mask, values)
}

/// Uniform random split of the observed entries into train and test;
/// `floor(len * train_fraction)` entries go to training.
pub fn split(
    obs: &BinaryObservations,
    train_fraction: f64,
    seed: u64,
) -> Result<(BinaryObservations, BinaryObservations)> {
    if obs.is_empty() {
        return Err(Error::invalid("cannot split empty observations"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = (obs.len() as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == obs.len() {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} leaves an empty side for {} entries",
            obs.len()
        )));
    }
    let mut order: Vec<usize> = (0..obs.len()).collect();
    let mut rng = stream_rng(seed, Stream::Split);
    order.shuffle(&mut rng);
    let train = obs.select(&order[..n_train])?;
    let test = obs.select(&order[n_train..])?;
    Ok((train, test))
}
