use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;

use super::{GraphError, WeightedDigraph};

pub const DEFAULT_MAX_PATHS: u64 = 100_000_000;

/// Number of prefix partitions the search tree is cut into. Fixed so that the
/// merge order, and hence every floating-point sum, is independent of the
/// number of worker threads.
const TARGET_PARTITIONS: usize = 256;
const MAX_SPLIT_DEPTH: usize = 12;
const FLUSH_EVERY: u64 = 1 << 14;

/// A path handed to a visitor. Slices are only valid during the call.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub states: &'a [usize],
    pub length: f64,
    pub costs: &'a [f64],
}

/// Streaming consumer of enumerated paths.
///
/// `split` produces an empty accumulator with the same configuration;
/// `merge` folds a partition result in. Merges happen in partition order.
pub trait PathVisitor: Send + Sync + Sized {
    fn visit(&mut self, path: &PathView<'_>);
    fn split(&self) -> Self;
    fn merge(&mut self, other: Self);
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountingVisitor {
    pub count: u64,
}

impl PathVisitor for CountingVisitor {
    fn visit(&mut self, _path: &PathView<'_>) {
        self.count += 1;
    }
    fn split(&self) -> Self {
        CountingVisitor::default()
    }
    fn merge(&mut self, other: Self) {
        self.count += other.count;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub closed_only: bool,
    pub include_single_state: bool,
    /// Cap on the number of paths walked (visited or not).
    pub max_paths: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            closed_only: false,
            include_single_state: true,
            max_paths: DEFAULT_MAX_PATHS,
            threads: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationSummary<V> {
    /// N(T): number of paths handed to the visitor.
    pub count: u64,
    /// All paths walked, including those filtered out by `closed_only`.
    pub explored: u64,
    pub partitions: usize,
    pub visitor: V,
}

/// Counting visitor wrapper so that N(T) is tracked independently of `V`.
struct Counted<V> {
    inner: V,
    count: u64,
}

struct Walk<'g> {
    g: &'g WeightedDigraph,
    t: f64,
    accept: Vec<bool>,
    min_depth: usize,
    max_paths: u64,
    explored: AtomicU64,
    abort: AtomicBool,
}

struct Partition {
    root: Vec<usize>,
    /// Prefixes of `root` with at least this many states are visited here.
    first_visit: usize,
}

impl<'g> Walk<'g> {
    fn run<V: PathVisitor>(&self, part: &Partition, visitor: &mut Counted<V>) -> u64 {
        let g = self.g;
        let n = g.cost_dim();
        let mut path: Vec<usize> = Vec::with_capacity(64);
        let mut cum_len: Vec<f64> = Vec::with_capacity(64);
        let mut cum_cost: Vec<f64> = Vec::with_capacity(64 * n.max(1));
        let mut next_slot: Vec<usize> = Vec::with_capacity(64);
        let mut local: u64 = 0;
        let mut flushed: u64 = 0;

        let push = |path: &mut Vec<usize>,
                        cum_len: &mut Vec<f64>,
                        cum_cost: &mut Vec<f64>,
                        next_slot: &mut Vec<usize>,
                        state: usize,
                        slot: usize| {
            let st = g.state(state);
            let d = path.len();
            if d == 0 {
                cum_len.push(st.length);
                cum_cost.extend(st.costs.iter().map(|&c| 0.0 + c));
            } else {
                let prev = path[d - 1];
                cum_len.push(cum_len[d - 1] + st.length);
                let base = (d - 1) * n;
                match g.pair_cost_at(prev, slot) {
                    Some(pc) => {
                        for j in 0..n {
                            let v = (cum_cost[base + j] + pc[j]) + st.costs[j];
                            cum_cost.push(v);
                        }
                    }
                    None => {
                        for j in 0..n {
                            let v = cum_cost[base + j] + st.costs[j];
                            cum_cost.push(v);
                        }
                    }
                }
            }
            path.push(state);
            next_slot.push(0);
        };

        let visit = |path: &[usize],
                     cum_len: &[f64],
                     cum_cost: &[f64],
                     visitor: &mut Counted<V>| {
            let d = path.len();
            if d < self.min_depth || !self.accept[path[d - 1]] {
                return;
            }
            visitor.count += 1;
            visitor.inner.visit(&PathView {
                states: path,
                length: cum_len[d - 1],
                costs: &cum_cost[(d - 1) * n..d * n],
            });
        };

        for (i, &s) in part.root.iter().enumerate() {
            let slot = if i == 0 {
                0
            } else {
                let prev = part.root[i - 1];
                g.successors(prev).binary_search(&s).unwrap_or(0)
            };
            push(&mut path, &mut cum_len, &mut cum_cost, &mut next_slot, s, slot);
            if i + 1 >= part.first_visit {
                local += 1;
                visit(&path, &cum_len, &cum_cost, visitor);
            }
        }
        let root_depth = part.root.len();

        loop {
            let d = path.len() - 1;
            let cur = path[d];
            let succ = g.successors(cur);
            let slot = next_slot[d];
            if slot < succ.len() && cum_len[d] + g.state(succ[slot]).length < self.t {
                next_slot[d] += 1;
                push(&mut path, &mut cum_len, &mut cum_cost, &mut next_slot, succ[slot], slot);
                local += 1;
                visit(&path, &cum_len, &cum_cost, visitor);
                if local - flushed >= FLUSH_EVERY {
                    let total = self.explored.fetch_add(local - flushed, Ordering::Relaxed)
                        + (local - flushed);
                    flushed = local;
                    if total > self.max_paths || self.abort.load(Ordering::Relaxed) {
                        self.abort.store(true, Ordering::Relaxed);
                        break;
                    }
                }
            } else {
                if path.len() == root_depth {
                    break;
                }
                path.pop();
                cum_len.pop();
                cum_cost.truncate(path.len() * n);
                next_slot.pop();
            }
        }
        self.explored.fetch_add(local - flushed, Ordering::Relaxed);
        local
    }
}

/// Cuts the search tree into prefix partitions. Concatenating the partitions
/// in order reproduces the lexicographic visit order of a sequential search.
fn split_tree(g: &WeightedDigraph, roots: &[usize], t: f64) -> Vec<Partition> {
    let mut frontier: Vec<(Partition, f64, bool)> = roots
        .iter()
        .map(|&r| {
            (
                Partition {
                    root: vec![r],
                    first_visit: 1,
                },
                g.state(r).length,
                true,
            )
        })
        .collect();
    let mut depth = 1;
    while frontier.len() < TARGET_PARTITIONS && depth < MAX_SPLIT_DEPTH {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        let mut grew = false;
        for (part, len, open) in frontier {
            if !open {
                next.push((part, len, false));
                continue;
            }
            let last = *part.root.last().expect("non-empty root");
            let children: Vec<usize> = g
                .successors(last)
                .iter()
                .copied()
                .take_while(|&c| len + g.state(c).length < t)
                .collect();
            if children.is_empty() {
                next.push((part, len, false));
                continue;
            }
            grew = true;
            for (ci, &c) in children.iter().enumerate() {
                let mut root = part.root.clone();
                root.push(c);
                let first_visit = if ci == 0 { part.first_visit } else { root.len() };
                next.push((Partition { root, first_visit }, len + g.state(c).length, true));
            }
        }
        frontier = next;
        depth += 1;
        if !grew {
            break;
        }
    }
    frontier.into_iter().map(|(p, _, _)| p).collect()
}

/// Enumerates every path whose first state starts at vertex `start` and whose
/// length is strictly below `t`, handing each one to `visitor`.
pub fn enumerate_paths<V: PathVisitor>(
    g: &WeightedDigraph,
    start: &str,
    t: f64,
    visitor: V,
    options: EnumerationOptions,
) -> Result<EnumerationSummary<V>, GraphError> {
    if !(t > 0.0) {
        return Err(GraphError::BadThreshold(t));
    }
    let starts = g
        .start_set(start)
        .ok_or_else(|| GraphError::UnknownVertex(start.to_string()))?;
    let roots: Vec<usize> = starts
        .iter()
        .copied()
        .filter(|&s| g.state(s).length < t)
        .collect();

    let accept: Vec<bool> = g
        .states()
        .iter()
        .map(|s| !options.closed_only || s.to == start)
        .collect();
    let walk = Walk {
        g,
        t,
        accept,
        min_depth: if options.include_single_state { 1 } else { 2 },
        max_paths: options.max_paths,
        explored: AtomicU64::new(0),
        abort: AtomicBool::new(false),
    };

    let parts = split_tree(g, &roots, t);
    let partitions = parts.len();
    let template = visitor.split();
    let mut acc = Counted {
        inner: visitor,
        count: 0,
    };

    let batch = options
        .threads
        .unwrap_or_else(rayon::current_num_threads)
        .max(1)
        * 4;
    let mut work = || {
        for chunk in parts.chunks(batch) {
            let results: Vec<Counted<V>> = chunk
                .par_iter()
                .map(|part| {
                    let mut c = Counted {
                        inner: template.split(),
                        count: 0,
                    };
                    if !walk.abort.load(Ordering::Relaxed) {
                        walk.run(part, &mut c);
                    }
                    c
                })
                .collect();
            for r in results {
                acc.count += r.count;
                acc.inner.merge(r.inner);
            }
            if walk.abort.load(Ordering::Relaxed) {
                break;
            }
        }
    };
    match options.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| GraphError::Internal(e.to_string()))?;
            pool.install(work);
        }
        None => work(),
    }

    let explored = walk.explored.load(Ordering::Relaxed);
    if explored > options.max_paths {
        return Err(GraphError::BudgetExceeded {
            visited: explored,
            budget: options.max_paths,
        });
    }
    Ok(EnumerationSummary {
        count: acc.count,
        explored,
        partitions,
        visitor: acc.inner,
    })
}
