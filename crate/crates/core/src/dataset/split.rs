//! Deterministic, stratified train/validation/test splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use thiserror::Error;

use super::SampleRecord;
use crate::rng::SeededRng;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    Fractions([f64; 3]),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits record indices by `fractions = (train, val, test)`.
///
/// Split sizes are the largest-remainder rounding of `fractions * n`. Inside
/// every (material, loading) stratum each split receives the floor or ceiling of
/// its proportional share, so strata are preserved to within one record.
pub fn split(records: &[SampleRecord], fractions: [f64; 3], seed: u64) -> Result<Split, SplitError> {
    let keys: Vec<String> = records
        .iter()
        .map(|r| {
            let (m, l) = r.stratum();
            format!("{m}/{l:?}")
        })
        .collect();
    split_keys(&keys, fractions, seed)
}

/// Like [`split`], with the stratum of record `k` given by `keys[k]`.
pub fn split_keys(keys: &[String], fractions: [f64; 3], seed: u64) -> Result<Split, SplitError> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(SplitError::Fractions(fractions));
    }
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, key) in keys.iter().enumerate() {
        strata.entry(key.as_str()).or_default().push(k);
    }
    let active = fractions.iter().filter(|&&f| f > 0.0).count();
    for (key, members) in &strata {
        if members.len() < active {
            log::warn!("stratum `{key}` has {} record(s), fewer than the {active} splits; it cannot be represented in every split", members.len());
        }
    }

    let totals = largest_remainder(keys.len(), &fractions);
    let sizes: Vec<usize> = strata.values().map(Vec::len).collect();
    let alloc = controlled_rounding(&sizes, &fractions, totals);

    let mut rng = SeededRng::new(seed, 0x5_911);
    let mut out = Split::default();
    for (k, members) in strata.values().enumerate() {
        let mut m = members.clone();
        m.shuffle(&mut rng);
        let (a, b) = (alloc[k][0], alloc[k][0] + alloc[k][1]);
        out.train.extend_from_slice(&m[..a]);
        out.val.extend_from_slice(&m[a..b]);
        out.test.extend_from_slice(&m[b..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Rounds the table `sizes[k] * fractions[s]` to integers so that every entry
/// is its floor or ceiling, rows sum to `sizes` and columns sum to `totals`.
///
/// The floors are fixed first; the leftover units form a transportation
/// problem (stratum to split, one unit per fractional entry) solved by
/// augmenting paths. A fractional solution always exists, so an integral
/// one does too.
fn controlled_rounding(sizes: &[usize], fractions: &[f64; 3], totals: [usize; 3]) -> Vec<[usize; 3]> {
    let k = sizes.len();
    let mut alloc = vec![[0usize; 3]; k];
    let mut open = vec![[false; 3]; k];
    let mut supply = vec![0usize; k];
    let mut demand = totals;
    for (r, &n) in sizes.iter().enumerate() {
        for s in 0..3 {
            let exact = fractions[s] * n as f64;
            let fl = exact.floor();
            alloc[r][s] = fl as usize;
            open[r][s] = exact - fl > 1e-9;
            demand[s] = demand[s].saturating_sub(alloc[r][s]);
        }
        supply[r] = n - alloc[r].iter().sum::<usize>();
    }
    // Unit-capacity bipartite flow: route one unit at a time from a stratum with
    // supply to a split with demand along an alternating path.
    let mut extra = vec![[false; 3]; k];
    for r in 0..k {
        while supply[r] > 0 {
            match augmenting_path(r, &open, &extra, &demand) {
                Some((path, end)) => {
                    for (row, col, add) in path {
                        extra[row][col] = add;
                    }
                    demand[end] -= 1;
                    supply[r] -= 1;
                }
                None => break,
            }
        }
    }
    for r in 0..k {
        for s in 0..3 {
            if extra[r][s] {
                alloc[r][s] += 1;
            }
        }
        // Unroutable units (only possible with degenerate fractions) go to the largest share.
        let missing = sizes[r] - alloc[r].iter().sum::<usize>();
        if missing > 0 {
            let s = (0..3).max_by(|&a, &b| fractions[a].total_cmp(&fractions[b])).unwrap_or(0);
            alloc[r][s] += missing;
        }
    }
    alloc
}

/// Breadth-first search for an alternating path from stratum `start` to a split
/// with spare demand. Returns the edge flips and the final split.
fn augmenting_path(
    start: usize,
    open: &[[bool; 3]],
    extra: &[[bool; 3]],
    demand: &[usize; 3],
) -> Option<(Vec<(usize, usize, bool)>, usize)> {
    // parent of split s: the stratum that reached it; parent of a stratum: the split it came from.
    let mut split_parent: [Option<usize>; 3] = [None; 3];
    let mut row_parent: Vec<Option<usize>> = vec![None; open.len()];
    let mut seen_row = vec![false; open.len()];
    let mut queue = std::collections::VecDeque::from([start]);
    seen_row[start] = true;
    while let Some(r) = queue.pop_front() {
        for s in 0..3 {
            if !open[r][s] || extra[r][s] || split_parent[s].is_some() {
                continue;
            }
            split_parent[s] = Some(r);
            if demand[s] > 0 {
                let mut path = Vec::new();
                let mut col = s;
                loop {
                    let row = split_parent[col].unwrap();
                    path.push((row, col, true));
                    match row_parent[row] {
                        Some(prev) => {
                            path.push((row, prev, false));
                            col = prev;
                        }
                        None => break,
                    }
                }
                return Some((path, s));
            }
            for (r2, row) in extra.iter().enumerate() {
                if row[s] && !seen_row[r2] {
                    seen_row[r2] = true;
                    row_parent[r2] = Some(s);
                    queue.push_back(r2);
                }
            }
        }
    }
    None
}

fn largest_remainder(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut rem = [0f64; 3];
    for s in 0..3 {
        let exact = fractions[s] * n as f64;
        out[s] = exact.floor() as usize;
        rem[s] = exact - out[s] as f64;
    }
    let mut left = n - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| rem[b].partial_cmp(&rem[a]).unwrap().then(a.cmp(&b)));
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[s] > 0.0 {
            out[s] += 1;
            left -= 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize, strata: usize) -> Vec<String> {
        (0..n).map(|k| format!("s{}", k % strata)).collect()
    }

    #[test]
    fn sizes_follow_fractions() {
        let s = split_keys(&keys(100, 1), [0.8, 0.1, 0.1], 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
    }

    #[test]
    fn disjoint_cover_and_deterministic() {
        let k = keys(137, 5);
        let a = split_keys(&k, [0.7, 0.2, 0.1], 9).unwrap();
        let b = split_keys(&k, [0.7, 0.2, 0.1], 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..137).collect::<Vec<_>>());
    }

    #[test]
    fn bad_fractions_rejected() {
        assert!(split_keys(&keys(10, 1), [0.5, 0.5, 0.5], 0).is_err());
        assert!(split_keys(&keys(10, 1), [1.2, -0.1, -0.1], 0).is_err());
    }
}
