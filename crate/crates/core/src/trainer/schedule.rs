use std::ops::Range;

use crate::graph::{CsrGraph, VertexId};

/// Contiguous, disjoint per-worker index ranges covering a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSchedule {
    pub worker_ranges: Vec<Range<usize>>,
}

impl BatchSchedule {
    /// Equal vertex counts per worker.
    pub fn static_split(len: usize, workers: usize) -> Self {
        let workers = workers.max(1);
        let (q, r) = (len / workers, len % workers);
        let mut start = 0;
        let worker_ranges = (0..workers)
            .map(|w| {
                let end = start + q + usize::from(w < r);
                let range = start..end;
                start = end;
                range
            })
            .collect();
        BatchSchedule { worker_ranges }
    }

    /// Contiguous ranges with near-equal total weight.
    ///
    /// Each cut is placed at the prefix sum closest to its ideal share, then
    /// cuts are nudged one vertex at a time while that lowers the heavier of
    /// the two ranges they separate. If the loads still differ by more than
    /// the largest single weight, an exact search for ranges whose loads all
    /// fall in `[L, L + max_weight]` takes over.
    pub fn balanced(weights: &[usize], workers: usize) -> Self {
        let workers = workers.max(1);
        let len = weights.len();
        let mut prefix = Vec::with_capacity(len + 1);
        prefix.push(0usize);
        for &w in weights {
            prefix.push(prefix.last().unwrap() + w);
        }
        let total = prefix[len];
        if total == 0 || workers == 1 {
            return BatchSchedule::static_split(len, workers);
        }

        let mut cuts = vec![0usize; workers + 1];
        cuts[workers] = len;
        for w in 1..workers {
            let target = total as f64 * w as f64 / workers as f64;
            let hi = prefix.partition_point(|&p| (p as f64) < target).min(len);
            let lo = hi.saturating_sub(1);
            let pick = if target - prefix[lo] as f64 <= prefix[hi] as f64 - target {
                lo
            } else {
                hi
            };
            cuts[w] = pick.max(cuts[w - 1]);
        }

        let load = |a: usize, b: usize| prefix[b] - prefix[a];
        let mut improved = true;
        while improved {
            improved = false;
            for w in 1..workers {
                let (a, c, b) = (cuts[w - 1], cuts[w], cuts[w + 1]);
                let current = load(a, c).max(load(c, b));
                if c > a && load(a, c - 1).max(load(c - 1, b)) < current {
                    cuts[w] = c - 1;
                    improved = true;
                } else if c < b && load(a, c + 1).max(load(c + 1, b)) < current {
                    cuts[w] = c + 1;
                    improved = true;
                }
            }
        }
        let spread = |cuts: &[usize]| {
            let loads = cuts.windows(2).map(|c| load(c[0], c[1]));
            loads.clone().max().unwrap() - loads.min().unwrap()
        };
        let max_w = weights.iter().copied().max().unwrap_or(0);
        if spread(&cuts) > max_w {
            if let Some(exact) = banded_cuts(&prefix, workers, max_w) {
                cuts = exact;
            }
        }
        BatchSchedule {
            worker_ranges: cuts.windows(2).map(|c| c[0]..c[1]).collect(),
        }
    }

    pub fn loads(&self, weights: &[usize]) -> Vec<usize> {
        self.worker_ranges
            .iter()
            .map(|r| weights[r.clone()].iter().sum())
            .collect()
    }
}

/// Cuts whose range loads all lie in `[lo, lo + band]`, trying `lo` from
/// the mean load downwards.
fn banded_cuts(prefix: &[usize], workers: usize, band: usize) -> Option<Vec<usize>> {
    let len = prefix.len() - 1;
    let mean = prefix[len] / workers;
    let lowest = mean.saturating_sub(band);
    // reach[j][i]: prefix index i ends some valid sequence of j ranges.
    let mut reach = vec![vec![false; len + 1]; workers + 1];
    for lo in (lowest..=mean).rev() {
        let hi = lo + band;
        reach[0]
            .iter_mut()
            .enumerate()
            .for_each(|(i, r)| *r = i == 0);
        for j in 1..=workers {
            let (prev, cur) = reach.split_at_mut(j);
            let (prev, cur) = (&prev[j - 1], &mut cur[0]);
            // Predecessors of i are the i' <= i with lo <= P[i] - P[i'] <= hi,
            // a window [first, last] that only moves right as i grows.
            let (mut first, mut last, mut count) = (0usize, 0usize, 0usize);
            for i in 0..=len {
                while last <= i && prefix[i] - prefix[last] >= lo {
                    count += usize::from(prev[last]);
                    last += 1;
                }
                while first < last && prefix[i] - prefix[first] > hi {
                    count -= usize::from(prev[first]);
                    first += 1;
                }
                cur[i] = count > 0;
            }
        }
        if reach[workers][len] {
            let mut cuts = vec![0; workers + 1];
            cuts[workers] = len;
            for j in (1..workers).rev() {
                let next = cuts[j + 1];
                cuts[j] = (0..=next)
                    .rev()
                    .find(|&i| {
                        let l = prefix[next] - prefix[i];
                        reach[j][i] && l >= lo && l <= hi
                    })
                    .expect("reachable predecessor");
            }
            return Some(cuts);
        }
    }
    None
}

/// Schedule for a batch by vertex degree (`balanced`) or vertex count.
pub fn make_schedule(
    g: &CsrGraph,
    batch: &[VertexId],
    workers: usize,
    balanced: bool,
) -> BatchSchedule {
    if balanced {
        let degrees: Vec<usize> = batch.iter().map(|&u| g.degree(u as usize)).collect();
        BatchSchedule::balanced(&degrees, workers)
    } else {
        BatchSchedule::static_split(batch.len(), workers)
    }
}
