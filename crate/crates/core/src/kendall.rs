//! Kendall's τ-b rank correlation.
//!
//! `τ_b = (C - D) / sqrt((C + D + T_a)(C + D + T_b))` where `C`/`D` count
//! concordant/discordant pairs and `T_a`/`T_b` pairs tied only in `a`/`b`.
//! Pairs tied in both are ignored. The counts are obtained with Knight's
//! O(n log n) sort-and-merge method.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KendallError {
    #[error("rankings differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 ranked items, got {0}")]
    TooShort(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tau {
    pub tau: f64,
    /// Set when either ranking is fully tied; `tau` is then 0.
    pub degenerate: bool,
}

/// Pair counts behind τ-b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    /// Concordant minus discordant pairs.
    pub score: i64,
    /// Pairs not tied in `a` (`C + D + T_b`).
    pub untied_a: u64,
    /// Pairs not tied in `b` (`C + D + T_a`).
    pub untied_b: u64,
}

impl PairCounts {
    pub fn tau(&self) -> Tau {
        if self.untied_a == 0 || self.untied_b == 0 {
            return Tau {
                tau: 0.0,
                degenerate: true,
            };
        }
        Tau {
            tau: self.score as f64 / ((self.untied_a as f64) * (self.untied_b as f64)).sqrt(),
            degenerate: false,
        }
    }
}

fn tied_pairs(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

/// Sum of tied pairs over runs of equal consecutive values.
fn tie_pairs_sorted<T: PartialEq>(values: impl Iterator<Item = T>) -> u64 {
    let mut total = 0;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in values {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += tied_pairs(run);
            run = 1;
        }
        prev = Some(v);
    }
    total + tied_pairs(run)
}

/// Merge sort of `idx` by `key`, returning the number of inversions.
fn sort_count_swaps<T: Ord>(idx: &mut [usize], key: &[T], buf: &mut [usize]) -> u64 {
    let n = idx.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = idx.split_at_mut(mid);
    let (buf_l, buf_r) = buf.split_at_mut(mid);
    let mut swaps = sort_count_swaps(left, key, buf_l) + sort_count_swaps(right, key, buf_r);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if key[right[j]] < key[left[i]] {
            buf[k] = right[j];
            swaps += (left.len() - i) as u64;
            j += 1;
        } else {
            buf[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    buf[k..k + right.len() - j].copy_from_slice(&right[j..]);
    idx.copy_from_slice(&buf[..n]);
    swaps
}

pub fn pair_counts<T: Ord>(a: &[T], b: &[T]) -> Result<PairCounts, KendallError> {
    if a.len() != b.len() {
        return Err(KendallError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(KendallError::TooShort(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].cmp(&a[j]).then_with(|| b[i].cmp(&b[j])));

    let total = tied_pairs(n as u64);
    let ties_a = tie_pairs_sorted(idx.iter().map(|&i| &a[i]));
    let ties_joint = tie_pairs_sorted(idx.iter().map(|&i| (&a[i], &b[i])));

    let mut buf = vec![0usize; n];
    let swaps = sort_count_swaps(&mut idx, b, &mut buf);
    let ties_b = tie_pairs_sorted(idx.iter().map(|&i| &b[i]));

    let score = total as i64 - ties_a as i64 - ties_b as i64 + ties_joint as i64 - 2 * swaps as i64;
    Ok(PairCounts {
        score,
        untied_a: total - ties_a,
        untied_b: total - ties_b,
    })
}

pub fn kendall_tau<T: Ord>(a: &[T], b: &[T]) -> Result<Tau, KendallError> {
    Ok(pair_counts(a, b)?.tau())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn identical_and_reversed() {
        let a = [1, 2, 3, 4, 5];
        assert_eq!(kendall_tau(&a, &a).unwrap().tau, 1.0);
        assert_eq!(kendall_tau(&a, &[5, 4, 3, 2, 1]).unwrap().tau, -1.0);
    }

    #[test]
    fn one_adjacent_swap() {
        // 9 concordant, 1 discordant: (9 - 1) / 10.
        let t = kendall_tau(&[1, 2, 3, 4, 5], &[2, 1, 3, 4, 5]).unwrap();
        assert!((t.tau - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ties_reduce_denominator() {
        // a = (1,1,2), b = (1,2,3): C=2, D=0, T_a=1, T_b=0 -> 2/sqrt(3*2)
        let t = kendall_tau(&[1, 1, 2], &[1, 2, 3]).unwrap();
        assert!((t.tau - 2.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fully_tied_is_degenerate() {
        let t = kendall_tau(&[3, 3, 3], &[1, 2, 3]).unwrap();
        assert_eq!(t, Tau { tau: 0.0, degenerate: true });
    }

    #[test]
    fn input_errors() {
        assert_eq!(kendall_tau(&[1, 2], &[1]), Err(KendallError::LengthMismatch(2, 1)));
        assert_eq!(kendall_tau(&[1], &[1]), Err(KendallError::TooShort(1)));
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            pairs in prop::collection::vec((0u8..4, 0u8..4), 2..40)
        ) {
            let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let ab = kendall_tau(&a, &b).unwrap();
            let ba = kendall_tau(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0..=1.0).contains(&ab.tau));
        }
    }
}
