use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;

use super::{ConversationRecord, Split};
use crate::seed;

/// Assigns whole threads to splits. Thread ids are sorted, shuffled with
/// `seed`, and cut at `n·a/(a+b+c)` and `n·(a+b)/(a+b+c)` (floored), so ten
/// threads under 8:1:1 split exactly 8/1/1.
pub fn split_by_thread(records: &mut [ConversationRecord], ratios: [u32; 3], seed: u64) {
    let mut threads: Vec<String> =
        records.iter().map(|r| r.thread_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    threads.shuffle(&mut seed::rng(seed, "thread-split", &[]));
    let total = u64::from(ratios.iter().sum::<u32>().max(1));
    let n = threads.len() as u64;
    let train_end = (n * u64::from(ratios[0]) / total) as usize;
    let valid_end = (n * u64::from(ratios[0] + ratios[1]) / total) as usize;
    let assignment: HashMap<String, Split> = threads
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let s = if i < train_end {
                Split::Train
            } else if i < valid_end {
                Split::Valid
            } else {
                Split::Test
            };
            (t, s)
        })
        .collect();
    for r in records.iter_mut() {
        r.split = assignment[&r.thread_id];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::thread_split_leaks;

    fn rec(thread: usize, i: usize) -> ConversationRecord {
        ConversationRecord {
            id: format!("{thread}/{i}"),
            thread_id: format!("t{thread}"),
            domain: "d".into(),
            context: vec!["a b".into()],
            context_speakers: vec!["x".into()],
            persona: vec![],
            response: "c d".into(),
            respondent: "y".into(),
            split: Split::Train,
        }
    }

    fn counts(records: &[ConversationRecord]) -> [usize; 3] {
        let mut per: HashMap<Split, BTreeSet<&str>> = HashMap::new();
        for r in records {
            per.entry(r.split).or_default().insert(&r.thread_id);
        }
        Split::ALL.map(|s| per.get(&s).map_or(0, BTreeSet::len))
    }

    #[test]
    fn ten_threads_split_eight_one_one() {
        let mut rs: Vec<_> = (0..10).flat_map(|t| (0..3).map(move |i| rec(t, i))).collect();
        split_by_thread(&mut rs, [8, 1, 1], 7);
        assert_eq!(counts(&rs), [8, 1, 1]);
        assert!(thread_split_leaks(&rs).is_empty());
    }

    #[test]
    fn one_thread_stays_together_and_is_deterministic() {
        let mut rs: Vec<_> = (0..50).map(|i| rec(0, i)).collect();
        split_by_thread(&mut rs, [8, 1, 1], 3);
        assert!(rs.iter().all(|r| r.split == rs[0].split));

        let mut a: Vec<_> = (0..40).map(|t| rec(t, 0)).collect();
        let mut b = a.clone();
        split_by_thread(&mut a, [8, 1, 1], 11);
        split_by_thread(&mut b, [8, 1, 1], 11);
        assert_eq!(a, b);
    }
}
