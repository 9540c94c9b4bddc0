use crate::data::SessionSet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// Something that proposes the next items after a prefix.
pub trait Ranker {
    fn name(&self) -> &str;

    /// At most `k` distinct items, best first.
    fn rank(&self, prefix: &[usize], k: usize) -> Vec<usize>;
}

/// Items by training occurrence count, ties by index.
#[derive(Clone, Debug, PartialEq)]
pub struct Pop {
    order: Vec<usize>,
    counts: Vec<usize>,
}

impl Pop {
    pub fn fit(train: &SessionSet) -> Self {
        let counts = train.item_counts();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        Pop { order, counts }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn count(&self, item: usize) -> usize {
        self.counts.get(item).copied().unwrap_or(0)
    }

    /// Appends global-order items not yet in `out` until it holds `k`.
    fn fill(&self, out: &mut Vec<usize>, k: usize) {
        let listed: BTreeSet<usize> = out.iter().copied().collect();
        for &i in &self.order {
            if out.len() >= k {
                break;
            }
            if !listed.contains(&i) {
                out.push(i);
            }
        }
    }
}

impl Ranker for Pop {
    fn name(&self) -> &str {
        "POP"
    }

    fn rank(&self, _prefix: &[usize], k: usize) -> Vec<usize> {
        self.order.iter().take(k).copied().collect()
    }
}

/// Items by frequency within the prefix (ties by most recent occurrence,
/// then index), completed with the global popularity order.
#[derive(Clone, Debug, PartialEq)]
pub struct SPop {
    pop: Pop,
}

impl SPop {
    pub fn fit(train: &SessionSet) -> Self {
        SPop {
            pop: Pop::fit(train),
        }
    }
}

impl Ranker for SPop {
    fn name(&self) -> &str {
        "S-POP"
    }

    fn rank(&self, prefix: &[usize], k: usize) -> Vec<usize> {
        // item -> (count, last position)
        let mut seen: HashMap<usize, (usize, usize)> = HashMap::new();
        for (pos, &i) in prefix.iter().enumerate() {
            let e = seen.entry(i).or_insert((0, pos));
            e.0 += 1;
            e.1 = pos;
        }
        let mut local: Vec<(usize, usize, usize)> = seen
            .into_iter()
            .map(|(i, (c, last))| (i, c, last))
            .collect();
        local.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
        let mut out: Vec<usize> = local.into_iter().map(|(i, _, _)| i).take(k).collect();
        self.pop.fill(&mut out, k);
        out
    }
}

/// Co-occurrence normalization of [`ItemKnn`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnnWeighting {
    /// Divide by `sqrt(count_i * count_j)`.
    #[default]
    Cosine,
    /// Raw co-occurrence counts.
    Raw,
}

/// Neighbours of the prefix's last item by session co-occurrence.
///
/// Counts are per session: `co(i, j)` is the number of training sessions
/// containing both `i != j`, and `count(i)` the number containing `i`.
/// Candidates are ordered by similarity, then index; an item is never its
/// own neighbour. Last items unseen in training fall back to POP.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemKnn {
    neighbours: Vec<Vec<(usize, f64)>>,
    session_counts: Vec<usize>,
    num_items: usize,
    pop: Pop,
    weighting: KnnWeighting,
}

impl ItemKnn {
    pub fn fit(train: &SessionSet, weighting: KnnWeighting) -> Self {
        let n = train.num_items();
        let mut session_counts = vec![0usize; n];
        let mut co: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n];
        for s in &train.sessions {
            let distinct: BTreeSet<usize> = s.items.iter().copied().collect();
            for &i in &distinct {
                session_counts[i] += 1;
                for &j in &distinct {
                    if i != j {
                        *co[i].entry(j).or_insert(0) += 1;
                    }
                }
            }
        }
        let neighbours = co
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let mut list: Vec<(usize, f64)> = row
                    .into_iter()
                    .map(|(j, c)| {
                        let w = match weighting {
                            KnnWeighting::Cosine => {
                                c as f64 / ((session_counts[i] * session_counts[j]) as f64).sqrt()
                            }
                            KnnWeighting::Raw => c as f64,
                        };
                        (j, w)
                    })
                    .collect();
                list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                list
            })
            .collect();
        ItemKnn {
            neighbours,
            session_counts,
            num_items: n,
            pop: Pop::fit(train),
            weighting,
        }
    }

    pub fn weighting(&self) -> KnnWeighting {
        self.weighting
    }

    /// Similarity of `i` and `j`; 0 when they never share a session.
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        self.neighbours
            .get(i)
            .and_then(|row| row.iter().find(|(n, _)| *n == j))
            .map_or(0.0, |&(_, w)| w)
    }
}

impl Ranker for ItemKnn {
    fn name(&self) -> &str {
        "Item-KNN"
    }

    fn rank(&self, prefix: &[usize], k: usize) -> Vec<usize> {
        let last = match prefix.last() {
            Some(&l) if self.session_counts.get(l).copied().unwrap_or(0) > 0 => l,
            _ => {
                log::debug!("item-knn: last item unseen in training, using popularity");
                return self.pop.rank(prefix, k);
            }
        };
        let mut out: Vec<usize> = self.neighbours[last]
            .iter()
            .take(k)
            .map(|&(j, _)| j)
            .collect();
        // remaining items all have similarity 0: ascending index
        let listed: BTreeSet<usize> = out.iter().copied().collect();
        for i in 0..self.num_items {
            if out.len() >= k {
                break;
            }
            if !listed.contains(&i) {
                out.push(i);
            }
        }
        out
    }
}
