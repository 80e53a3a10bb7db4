use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{GraphError, PathRecord, WeightedDigraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    /// Stop after this many simple cycles.
    pub max_cycles: usize,
    /// Cap on DFS steps over all roots.
    pub max_steps: u64,
    /// Pair connectors are built among the first this many simple cycles.
    pub connector_cycles: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            max_cycles: 10_000,
            max_steps: 10_000_000,
            connector_cycles: 32,
        }
    }
}

/// Simple cycles of the transition relation up to `max_len` (each rooted at its
/// smallest state id, so each appears once), followed by one connecting cycle
/// through every pair among the first few simple cycles.
///
/// Records are cyclic: their costs include the closing transition.
pub fn cycle_basis(
    g: &WeightedDigraph,
    max_len: f64,
    opts: CycleOptions,
) -> Result<Vec<PathRecord>, GraphError> {
    let k = g.len();
    let mut simple: Vec<Vec<usize>> = Vec::new();
    let mut steps: u64 = 0;
    let mut on_path = vec![false; k];

    'roots: for r in 0..k {
        let lr = g.state(r).length;
        if lr > max_len {
            break;
        }
        let mut path = vec![r];
        let mut cum = vec![lr];
        let mut slot = vec![0usize];
        on_path[r] = true;
        while let Some(&cur) = path.last() {
            let d = path.len() - 1;
            let succ = g.successors(cur);
            let mut advanced = false;
            while slot[d] < succ.len() {
                let x = succ[slot[d]];
                slot[d] += 1;
                steps += 1;
                if steps > opts.max_steps {
                    for &p in &path {
                        on_path[p] = false;
                    }
                    break 'roots;
                }
                if x < r {
                    continue;
                }
                let l = cum[d] + g.state(x).length;
                if l > max_len {
                    break;
                }
                if x == r {
                    simple.push(path.clone());
                    if simple.len() >= opts.max_cycles {
                        for &p in &path {
                            on_path[p] = false;
                        }
                        break 'roots;
                    }
                } else if !on_path[x] {
                    on_path[x] = true;
                    path.push(x);
                    cum.push(l);
                    slot.push(0);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                on_path[cur] = false;
                path.pop();
                cum.pop();
                slot.pop();
            }
        }
    }

    if simple.is_empty() {
        return Err(GraphError::Internal(format!(
            "no cycles of length <= {max_len}"
        )));
    }

    let mut out = Vec::with_capacity(simple.len());
    for c in &simple {
        out.push(g.cycle_record(c)?);
    }

    let m = simple.len().min(opts.connector_cycles);
    for i in 0..m {
        for j in (i + 1)..m {
            let (c1, c2) = (&simple[i], &simple[j]);
            let a = c1[0];
            let b = c2[0];
            let (Some(p1), Some(p2)) = (
                bfs_path(g, *c1.last().unwrap(), b),
                bfs_path(g, *c2.last().unwrap(), a),
            ) else {
                continue;
            };
            let mut seq = c1.clone();
            seq.extend_from_slice(&p1[1..p1.len() - 1]);
            seq.extend_from_slice(c2);
            seq.extend_from_slice(&p2[1..p2.len() - 1]);
            out.push(g.cycle_record(&seq)?);
        }
    }
    Ok(out)
}

/// Fewest-transition path `from -> .. -> to` with at least one transition.
fn bfs_path(g: &WeightedDigraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let k = g.len();
    let mut prev = vec![usize::MAX; k];
    let mut seen = vec![false; k];
    let mut queue = VecDeque::new();
    for &x in g.successors(from) {
        if !seen[x] {
            seen[x] = true;
            prev[x] = from;
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut path = vec![to];
            let mut cur = to;
            loop {
                let p = prev[cur];
                path.push(p);
                if p == from && path.len() >= 2 {
                    break;
                }
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &y in g.successors(x) {
            if !seen[y] {
                seen[y] = true;
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    None
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest-length paths from `from` to every state; entry is
/// `(length including both endpoints, predecessor)`.
pub(crate) fn dijkstra(g: &WeightedDigraph, from: usize) -> Vec<(f64, usize)> {
    let k = g.len();
    let mut best = vec![(f64::INFINITY, usize::MAX); k];
    best[from] = (g.state(from).length, usize::MAX);
    let mut heap = BinaryHeap::new();
    heap.push(Item(best[from].0, from));
    while let Some(Item(d, x)) = heap.pop() {
        if d > best[x].0 {
            continue;
        }
        for &y in g.successors(x) {
            let nd = d + g.state(y).length;
            if nd < best[y].0 {
                best[y] = (nd, x);
                heap.push(Item(nd, y));
            }
        }
    }
    best
}

pub(crate) fn trace_path(best: &[(f64, usize)], from: usize, to: usize) -> Option<Vec<usize>> {
    if !best[to].0.is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = best[cur].1;
        if cur == usize::MAX {
            return None;
        }
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Shortest path (by total length) that starts with `from` and ends with `to`.
pub fn shortest_connector(g: &WeightedDigraph, from: usize, to: usize) -> Option<PathRecord> {
    let best = dijkstra(g, from);
    let path = trace_path(&best, from, to)?;
    g.path_record(&path).ok()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{lat2, loop2};
    use super::super::GraphBuilder;
    use super::*;

    fn lengths(cs: &[PathRecord]) -> Vec<f64> {
        cs.iter().map(|c| c.length).collect()
    }

    #[test]
    fn loop2_contains_both_loops_and_their_concatenation() {
        let cs = cycle_basis(&loop2(), 10.0, Default::default()).unwrap();
        let seqs: Vec<&[usize]> = cs.iter().map(|c| c.states.as_slice()).collect();
        assert!(seqs.contains(&&[0][..]));
        assert!(seqs.contains(&&[1][..]));
        assert!(seqs.contains(&&[0, 1][..]));
    }

    #[test]
    fn two_cycle_graph_has_one_simple_cycle() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("uw", "u", "w", 1.0, vec![]);
        b.add_state("wu", "w", "u", 1.0, vec![]);
        b.transall();
        let g = b.build().unwrap();
        let cs = cycle_basis(&g, 10.0, Default::default()).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].states, vec![0, 1]);
    }

    #[test]
    fn lat2_cycle_lengths() {
        let ls = lengths(&cycle_basis(&lat2(), 10.0, Default::default()).unwrap());
        for want in [1.0, 2.0, 3.0] {
            assert!(ls.contains(&want), "{ls:?}");
        }
    }

    #[test]
    fn records_are_closed_and_valid() {
        let mut b = GraphBuilder::new(1, 3.0);
        b.add_state("x", "u", "w", 1.0, vec![1.0]);
        b.add_state("y", "w", "u", 1.3, vec![0.0]);
        b.add_state("z", "w", "w", 0.7, vec![-1.0]);
        b.add_state("q", "u", "u", 2.1, vec![0.5]);
        b.transall();
        let g = b.build().unwrap();
        let cs = cycle_basis(&g, 6.0, Default::default()).unwrap();
        assert!(cs.len() > 4);
        for c in &cs {
            assert!(c.cyclic);
            let first = g.state(c.states[0]);
            let last = g.state(*c.states.last().unwrap());
            assert_eq!(first.from, last.to);
            assert!(g.cycle_record(&c.states).is_ok());
        }
    }

    #[test]
    fn empty_family_is_an_error() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("uw", "u", "w", 1.0, vec![]);
        let g = b.build().unwrap();
        assert!(matches!(
            cycle_basis(&g, 10.0, Default::default()),
            Err(GraphError::Internal(_))
        ));
    }

    #[test]
    fn connector_minimises_length() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("s", "a", "b", 1.0, vec![]);
        b.add_state("long", "b", "c", 5.0, vec![]);
        b.add_state("m1", "b", "d", 1.0, vec![]);
        b.add_state("m2", "d", "c", 1.0, vec![]);
        b.add_state("e", "c", "a", 1.0, vec![]);
        b.transall();
        let g = b.build().unwrap();
        let s = g.states().iter().find(|x| x.label == "s").unwrap().id;
        let e = g.states().iter().find(|x| x.label == "e").unwrap().id;
        let p = shortest_connector(&g, s, e).unwrap();
        assert_eq!(p.length, 4.0);
    }
}
