//! Ratings ingestion, per-user splits and pair-task construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sparse user-by-item ratings. User and item ids are kept in canonical
/// order (numeric when every id is an integer, lexicographic otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsTable {
    users: Vec<String>,
    items: Vec<String>,
    ratings: BTreeMap<(usize, usize), f64>,
    user_features: Option<BTreeMap<usize, Vec<f64>>>,
}

fn canonical_ids(ids: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = ids.into_iter().collect();
    if v.iter().all(|s| s.parse::<i64>().is_ok()) {
        v.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    v
}

fn index_of(ids: &[String]) -> BTreeMap<&str, usize> {
    ids.iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect()
}

/// One parsed rating with the source line it came from.
#[derive(Clone, Debug)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub line: usize,
}

impl RatingsTable {
    pub fn from_records(records: Vec<RatingRecord>) -> Result<Self> {
        let users = canonical_ids(records.iter().map(|r| r.user.clone()).collect());
        let items = canonical_ids(records.iter().map(|r| r.item.clone()).collect());
        let (uidx, iidx) = (index_of(&users), index_of(&items));
        let mut ratings = BTreeMap::new();
        for r in &records {
            let key = (uidx[r.user.as_str()], iidx[r.item.as_str()]);
            if ratings.insert(key, r.rating).is_some() {
                return Err(Error::Duplicate {
                    user: r.user.clone(),
                    item: r.item.clone(),
                    line: r.line,
                });
            }
        }
        Ok(RatingsTable {
            users,
            items,
            ratings,
            user_features: None,
        })
    }

    /// A table over the same ids holding only `ratings`.
    fn with_ratings(&self, ratings: BTreeMap<(usize, usize), f64>) -> RatingsTable {
        RatingsTable {
            users: self.users.clone(),
            items: self.items.clone(),
            ratings,
            user_features: self.user_features.clone(),
        }
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn get(&self, user: usize, item: usize) -> Option<f64> {
        self.ratings.get(&(user, item)).copied()
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.iter().position(|u| u == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i == id)
    }

    /// `(user, item, rating)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.ratings.iter().map(|(&(u, i), &r)| (u, i, r))
    }

    /// `(item, rating)` for one user.
    pub fn user_ratings(&self, user: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.ratings
            .range((user, 0)..(user + 1, 0))
            .map(|(&(_, i), &r)| (i, r))
    }

    pub fn user_features(&self) -> Option<&BTreeMap<usize, Vec<f64>>> {
        self.user_features.as_ref()
    }

    /// Attaches side features keyed by user id. Every user must be covered
    /// and all vectors must share one dimension.
    pub fn attach_features(&mut self, features: &BTreeMap<String, Vec<f64>>) -> Result<()> {
        let mut out = BTreeMap::new();
        let mut dim = None;
        for (u, id) in self.users.iter().enumerate() {
            let f = features
                .get(id)
                .ok_or_else(|| Error::invalid(format!("no features for user {id}")))?;
            if *dim.get_or_insert(f.len()) != f.len() {
                return Err(Error::invalid(format!(
                    "feature dimension mismatch for user {id}"
                )));
            }
            out.insert(u, f.clone());
        }
        self.user_features = Some(out);
        Ok(())
    }

    /// Keeps only the listed users' ratings (ids unchanged).
    pub fn restrict_users(&self, keep: &[usize]) -> RatingsTable {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        self.with_ratings(
            self.ratings
                .iter()
                .filter(|((u, _), _)| keep.contains(u))
                .map(|(&k, &v)| (k, v))
                .collect(),
        )
    }

    /// Keeps only ratings of the listed items (ids unchanged).
    pub fn restrict_items(&self, keep: &[usize]) -> RatingsTable {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        self.with_ratings(
            self.ratings
                .iter()
                .filter(|((_, i), _)| keep.contains(i))
                .map(|(&k, &v)| (k, v))
                .collect(),
        )
    }

    /// Number of ratings per item.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.items.len()];
        for &(_, i) in self.ratings.keys() {
            counts[i] += 1;
        }
        counts
    }
}

fn parse_rating(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid rating `{field}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite rating `{field}`"),
        });
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses MovieLens `u.data` text: `user<TAB>item<TAB>rating<TAB>timestamp`.
/// Timestamps are validated as integers and discarded. Blank lines are skipped.
pub fn parse_movielens_str(text: &str) -> Result<RatingsTable> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let id = |s: &str, what: &str| -> Result<String> {
            let s = s.trim();
            s.parse::<u64>()
                .map(|_| s.to_string())
                .map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid {what} id `{s}`"),
                })
        };
        let user = id(fields[0], "user")?;
        let item = id(fields[1], "item")?;
        let rating = parse_rating(fields[2], line)?;
        fields[3].trim().parse::<i64>().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid timestamp `{}`", fields[3]),
        })?;
        records.push(RatingRecord {
            user,
            item,
            rating,
            line,
        });
    }
    RatingsTable::from_records(records)
}

pub fn parse_movielens(path: impl AsRef<Path>) -> Result<RatingsTable> {
    parse_movielens_str(&read(path.as_ref())?)
}

/// Serializes in `u.data` layout with zero timestamps.
pub fn to_movielens_string(t: &RatingsTable) -> String {
    let mut out = String::new();
    for (u, i, r) in t.iter() {
        out.push_str(&format!("{}\t{}\t{}\t0\n", t.users[u], t.items[i], r));
    }
    out
}

pub fn write_movielens(t: &RatingsTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_movielens_string(t)).map_err(|e| Error::io(path, e))
}

/// Parses a ratings CSV with header `user,item,rating`.
pub fn parse_ratings_csv_str(text: &str) -> Result<RatingsTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["user", "item", "rating"]) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `user,item,rating`".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 3 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                line,
                msg: "expected `user,item,rating`".into(),
            });
        }
        records.push(RatingRecord {
            user: fields[0].to_string(),
            item: fields[1].to_string(),
            rating: parse_rating(fields[2], line)?,
            line,
        });
    }
    RatingsTable::from_records(records)
}

pub fn parse_ratings_csv(path: impl AsRef<Path>) -> Result<RatingsTable> {
    parse_ratings_csv_str(&read(path.as_ref())?)
}

/// Parses a features CSV `user,f1,...,fd` (header required).
pub fn parse_features_csv_str(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let dim = match lines.next() {
        Some((_, h)) if h.split(',').next().map(str::trim) == Some("user") => {
            h.split(',').count() - 1
        }
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `user,f1,...`".into(),
            })
        }
    };
    let mut out = BTreeMap::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        let vals = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid feature `{f}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if out.insert(fields[0].to_string(), vals).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate features for user {}", fields[0]),
            });
        }
    }
    Ok(out)
}

pub fn parse_features_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    parse_features_csv_str(&read(path.as_ref())?)
}

/// Train / validation / test partition of one table.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTable {
    pub train: RatingsTable,
    pub val: RatingsTable,
    pub test: RatingsTable,
}

/// Users with fewer ratings than this go entirely to train.
pub const MIN_SPLIT_RATINGS: usize = 3;

/// Splits every user's ratings by the given fractions: `floor(f_train c)`
/// to train, `floor(f_val c)` to validation, the remainder to test.
pub fn split_per_user(t: &RatingsTable, fractions: [f64; 3], seed: u64) -> Result<SplitTable> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for u in 0..t.users.len() {
        let mut rated: Vec<(usize, f64)> = t.user_ratings(u).collect();
        let c = rated.len();
        if c == 0 {
            continue;
        }
        if c < MIN_SPLIT_RATINGS {
            warn!("user {} has {c} ratings; all placed in train", t.users[u]);
            train.extend(rated.into_iter().map(|(i, r)| ((u, i), r)));
            continue;
        }
        rated.shuffle(&mut rng);
        let n_train = (fractions[0] * c as f64).floor() as usize;
        let n_val = (fractions[1] * c as f64).floor() as usize;
        for (pos, (i, r)) in rated.into_iter().enumerate() {
            let dst = if pos < n_train {
                &mut train
            } else if pos < n_train + n_val {
                &mut val
            } else {
                &mut test
            };
            dst.insert((u, i), r);
        }
    }
    Ok(SplitTable {
        train: t.with_ratings(train),
        val: t.with_ratings(val),
        test: t.with_ratings(test),
    })
}

/// The `m` most-rated items, most popular first (ties to the lower index).
pub fn top_items(t: &RatingsTable, m: usize) -> Vec<usize> {
    let counts = t.item_counts();
    let mut idx: Vec<usize> = (0..counts.len()).collect();
    idx.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// The `count` users with the most ratings among `items` (ties to the lower
/// index), returned in index order.
pub fn top_users(t: &RatingsTable, items: &[usize], count: usize) -> Vec<usize> {
    let items: BTreeSet<usize> = items.iter().copied().collect();
    let mut counts = vec![0usize; t.users.len()];
    for (u, i, _) in t.iter() {
        if items.contains(&i) {
            counts[u] += 1;
        }
    }
    let mut idx: Vec<usize> = (0..counts.len()).filter(|&u| counts[u] > 0).collect();
    idx.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// One pair task: documents `pair = (j, k)` (positions in the sorted item
/// subset, `j < k`), the users who rated both, and `z = r_j - r_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTask {
    pub pair: (usize, usize),
    pub queries: Vec<usize>,
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairTaskSet {
    /// Table item indices in ascending order; document `j` is `item_subset[j]`.
    pub item_subset: Vec<usize>,
    pub tasks: Vec<PairTask>,
}

impl PairTaskSet {
    pub fn documents(&self) -> usize {
        self.item_subset.len()
    }

    /// Sorted distinct users appearing in any task.
    pub fn query_users(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .tasks
            .iter()
            .flat_map(|t| t.queries.iter().copied())
            .collect();
        set.into_iter().collect()
    }
}

/// One task per unordered item pair with at least one co-rating.
pub fn build_pair_tasks(t: &RatingsTable, item_subset: &[usize]) -> Result<PairTaskSet> {
    let subset: BTreeSet<usize> = item_subset.iter().copied().collect();
    if subset.len() != item_subset.len() {
        return Err(Error::invalid("item subset contains duplicates"));
    }
    if subset.len() < 2 {
        return Err(Error::invalid("item subset needs at least two items"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= t.items.len()) {
        return Err(Error::invalid(format!("item index {bad} out of range")));
    }
    let subset: Vec<usize> = subset.into_iter().collect();
    let mut tasks = Vec::new();
    for j in 0..subset.len() {
        for k in (j + 1)..subset.len() {
            let (mut queries, mut z) = (Vec::new(), Vec::new());
            for u in 0..t.users.len() {
                if let (Some(a), Some(b)) = (t.get(u, subset[j]), t.get(u, subset[k])) {
                    queries.push(u);
                    z.push(a - b);
                }
            }
            if !queries.is_empty() {
                tasks.push(PairTask {
                    pair: (j, k),
                    queries,
                    z,
                });
            }
        }
    }
    Ok(PairTaskSet {
        item_subset: subset,
        tasks,
    })
}

/// Per-user input features. Attached side features win; otherwise the
/// user's ratings on `items`, with missing entries imputed by the user's
/// mean over the rated ones (or the table mean if none).
pub fn user_feature_vectors(t: &RatingsTable, items: &[usize]) -> Vec<Vec<f64>> {
    if let Some(f) = &t.user_features {
        return (0..t.users.len()).map(|u| f[&u].clone()).collect();
    }
    let global = if t.is_empty() {
        0.0
    } else {
        t.ratings.values().sum::<f64>() / t.len() as f64
    };
    (0..t.users.len())
        .map(|u| {
            let vals: Vec<Option<f64>> = items.iter().map(|&i| t.get(u, i)).collect();
            let known: Vec<f64> = vals.iter().flatten().copied().collect();
            let mean = if known.is_empty() {
                global
            } else {
                known.iter().sum::<f64>() / known.len() as f64
            };
            vals.into_iter().map(|v| v.unwrap_or(mean)).collect()
        })
        .collect()
}

/// Rating-derived features for a linear kernel: the mean-imputed vector
/// centered on the user's mean and scaled to unit length, so the kernel is
/// a correlation between users' preferences. Users with constant ratings
/// map to zero. Attached side features are returned unchanged.
pub fn preference_features(t: &RatingsTable, items: &[usize]) -> Vec<Vec<f64>> {
    let raw = user_feature_vectors(t, items);
    if t.user_features.is_some() {
        return raw;
    }
    raw.into_iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
            let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                centered.into_iter().map(|x| x / norm).collect()
            } else {
                vec![0.0; centered.len()]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preference_features_are_centered_unit() {
        let t = parse_movielens_str("1\t1\t5\t0\n1\t2\t1\t0\n2\t1\t3\t0\n2\t2\t3\t0\n").unwrap();
        let f = preference_features(&t, &[0, 1]);
        let h = 0.5f64.sqrt();
        assert!((f[0][0] - h).abs() < 1e-15 && (f[0][1] + h).abs() < 1e-15);
        assert_eq!(f[1], vec![0.0, 0.0]);
    }

    #[test]
    fn parse_single_record() {
        let t = parse_movielens_str("1\t5\t3\t881250949\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t.get(t.user_index("1").unwrap(), t.item_index("5").unwrap()),
            Some(3.0)
        );
    }

    #[test]
    fn parse_empty() {
        assert!(parse_movielens_str("").unwrap().is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_movielens_str("1\t5\tthree\t0") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_movielens_str("1\t5\t3\t0\n2\t5\t3\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_movielens_str("1\t5\t3\t0\n1\t5\t4\t0\n") {
            Err(Error::Duplicate { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_and_features() {
        let t = parse_ratings_csv_str("user,item,rating\nalice,x,4\nbob,x,2\nalice,y,1\n").unwrap();
        assert_eq!(t.users(), &["alice".to_string(), "bob".to_string()]);
        assert_eq!(t.len(), 3);
        assert!(parse_ratings_csv_str("u,i,r\n").is_err());
        assert!(matches!(
            parse_ratings_csv_str("user,item,rating\na,b,c\n"),
            Err(Error::Parse { line: 2, .. })
        ));

        let f = parse_features_csv_str("user,f1,f2\nalice,1,2\nbob,0.5,-1\n").unwrap();
        let mut t = t;
        t.attach_features(&f).unwrap();
        let feats = user_feature_vectors(&t, &[0, 1]);
        assert_eq!(feats[1], vec![0.5, -1.0]);
        assert!(parse_features_csv_str("user,f1\nalice,1,2\n").is_err());
    }

    fn table_with_counts(counts: &[usize]) -> RatingsTable {
        let mut records = Vec::new();
        for (u, &c) in counts.iter().enumerate() {
            for i in 0..c {
                records.push(RatingRecord {
                    user: u.to_string(),
                    item: i.to_string(),
                    rating: ((u + i) % 5 + 1) as f64,
                    line: 0,
                });
            }
        }
        RatingsTable::from_records(records).unwrap()
    }

    #[test]
    fn split_fractions_and_fallback() {
        let t = table_with_counts(&[10, 2]);
        let s = split_per_user(&t, [0.5, 0.2, 0.3], 3).unwrap();
        assert_eq!(s.train.user_ratings(0).count(), 5);
        assert_eq!(s.val.user_ratings(0).count(), 2);
        assert_eq!(s.test.user_ratings(0).count(), 3);
        assert_eq!(s.train.user_ratings(1).count(), 2);
        assert_eq!(
            s.val.user_ratings(1).count() + s.test.user_ratings(1).count(),
            0
        );

        assert_eq!(s, split_per_user(&t, [0.5, 0.2, 0.3], 3).unwrap());
        assert!(split_per_user(&t, [0.5, 0.5, 0.5], 3).is_err());
    }

    #[test]
    fn pair_task_examples() {
        let t = parse_movielens_str("1\t10\t4\t0\n1\t20\t2\t0\n").unwrap();
        let p = build_pair_tasks(&t, &[0, 1]).unwrap();
        assert_eq!(p.tasks.len(), 1);
        assert_eq!(p.tasks[0].z, vec![2.0]);

        // Items 10 and 30 are never co-rated.
        let t =
            parse_movielens_str("1\t10\t4\t0\n1\t20\t2\t0\n2\t20\t5\t0\n2\t30\t5\t0\n").unwrap();
        let p = build_pair_tasks(&t, &[0, 1, 2]).unwrap();
        let pairs: Vec<_> = p.tasks.iter().map(|t| t.pair).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(p.tasks[1].z, vec![0.0]);

        assert!(build_pair_tasks(&t, &[0]).is_err());
        assert!(build_pair_tasks(&t, &[0, 0]).is_err());
    }

    #[test]
    fn mean_imputed_features() {
        let t = parse_movielens_str("1\t10\t4\t0\n1\t20\t2\t0\n2\t20\t5\t0\n").unwrap();
        let f = user_feature_vectors(&t, &[0, 1, 2]);
        assert_eq!(f[0], vec![4.0, 2.0, 3.0]);
        assert_eq!(f[1], vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn top_items_and_users() {
        let t = table_with_counts(&[3, 1, 2]);
        assert_eq!(top_items(&t, 2), vec![0, 1]);
        assert_eq!(top_users(&t, &[1, 2], 1), vec![0]);
    }

    fn records_strategy() -> impl Strategy<Value = Vec<(u16, u16, u8)>> {
        prop::collection::btree_map((1u16..40, 1u16..60), 1u8..6, 0..80)
            .prop_map(|m| m.into_iter().map(|((u, i), r)| (u, i, r)).collect())
    }

    fn table_from(recs: &[(u16, u16, u8)], reverse: bool) -> RatingsTable {
        let mut text = String::new();
        let mut recs = recs.to_vec();
        if reverse {
            recs.reverse();
        }
        for (u, i, r) in recs {
            text.push_str(&format!("{u}\t{i}\t{r}\t123\n"));
        }
        parse_movielens_str(&text).unwrap()
    }

    proptest! {
        #[test]
        fn serialize_round_trip(recs in records_strategy()) {
            let t = table_from(&recs, false);
            prop_assert_eq!(parse_movielens_str(&to_movielens_string(&t)).unwrap(), t);
        }

        #[test]
        fn split_partitions_each_user(recs in records_strategy(), seed in any::<u64>()) {
            let t = table_from(&recs, false);
            let s = split_per_user(&t, [0.5, 0.2, 0.3], seed).unwrap();
            prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), t.len());
            for u in 0..t.users().len() {
                let parts = s.train.user_ratings(u).count() + s.val.user_ratings(u).count() + s.test.user_ratings(u).count();
                prop_assert_eq!(parts, t.user_ratings(u).count());
            }
            for (u, i, r) in t.iter() {
                let hits = [&s.train, &s.val, &s.test].iter().filter(|p| p.get(u, i) == Some(r)).count();
                prop_assert_eq!(hits, 1);
            }
        }

        #[test]
        fn pair_tasks_ignore_input_order(recs in records_strategy()) {
            let a = table_from(&recs, false);
            let b = table_from(&recs, true);
            prop_assert_eq!(&a, &b);
            let n_items = a.items().len();
            if n_items >= 2 {
                let fwd: Vec<usize> = (0..n_items.min(6)).collect();
                let rev: Vec<usize> = fwd.iter().rev().copied().collect();
                prop_assert_eq!(build_pair_tasks(&a, &fwd).unwrap(), build_pair_tasks(&b, &rev).unwrap());
            }
        }
    }
}
