//! Brute-force recomputations of the baseline rankers: every ordering is
//! built by repeated linear selection and every similarity by rescanning
//! all sessions.

use murzim::data::{Session, SessionSet, Vocabulary};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Repeatedly takes the best remaining item under `better`.
pub fn select_order(n: usize, k: usize, better: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut left: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best = 0;
        for c in 1..left.len() {
            if better(left[c], left[best]) {
                best = c;
            }
        }
        out.push(left.remove(best));
    }
    out
}

pub fn brute_counts(set: &SessionSet) -> Vec<usize> {
    let mut counts = vec![0; set.num_items()];
    for s in &set.sessions {
        for &i in &s.items {
            counts[i] += 1;
        }
    }
    counts
}

pub fn brute_pop(set: &SessionSet, k: usize) -> Vec<usize> {
    let c = brute_counts(set);
    select_order(set.num_items(), k, |a, b| {
        c[a] > c[b] || (c[a] == c[b] && a < b)
    })
}

pub fn brute_spop(set: &SessionSet, prefix: &[usize], k: usize) -> Vec<usize> {
    let n = set.num_items();
    let local = |i: usize| prefix.iter().filter(|&&p| p == i).count();
    let last = |i: usize| prefix.iter().rposition(|&p| p == i).unwrap();
    let in_prefix: Vec<usize> = (0..n).filter(|&i| local(i) > 0).collect();
    let mut out: Vec<usize> = select_order(n, k, |a, b| {
        let (la, lb) = (local(a), local(b));
        if la == 0 || lb == 0 {
            return la > lb;
        }
        la > lb || (la == lb && (last(a) > last(b) || (last(a) == last(b) && a < b)))
    })
    .into_iter()
    .take(in_prefix.len().min(k))
    .collect();
    for i in brute_pop(set, n) {
        if out.len() >= k {
            break;
        }
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

pub fn brute_similarity(set: &SessionSet, raw: bool) -> Vec<Vec<f64>> {
    let n = set.num_items();
    let has = |s: &Session, i: usize| s.items.contains(&i);
    let count: Vec<usize> = (0..n)
        .map(|i| set.sessions.iter().filter(|s| has(s, i)).count())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let co = set
                        .sessions
                        .iter()
                        .filter(|s| has(s, i) && has(s, j))
                        .count();
                    if co == 0 {
                        0.0
                    } else if raw {
                        co as f64
                    } else {
                        co as f64 / ((count[i] * count[j]) as f64).sqrt()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn brute_knn(set: &SessionSet, sim: &[Vec<f64>], prefix: &[usize], k: usize) -> Vec<usize> {
    let seen = |i: usize| set.sessions.iter().any(|s| s.items.contains(&i));
    match prefix.last() {
        Some(&l) if seen(l) => {
            let row = &sim[l];
            select_order(set.num_items(), k, |a, b| {
                row[a] > row[b] || (row[a] == row[b] && a < b)
            })
        }
        _ => brute_pop(set, k),
    }
}

/// A small corpus of random sessions, some of length 1.
pub fn random_corpus(rng: &mut ChaCha8Rng) -> SessionSet {
    let n = rng.gen_range(3..25);
    let sessions = (0..rng.gen_range(1..20))
        .map(|s| {
            let len = rng.gen_range(1..9);
            Session {
                id: format!("s{s}"),
                items: (0..len).map(|_| rng.gen_range(0..n)).collect(),
                times: vec![0.0; len],
            }
        })
        .collect();
    SessionSet {
        sessions,
        vocab: Vocabulary::from_ids((0..n).map(|i| format!("v{i}"))),
    }
}
