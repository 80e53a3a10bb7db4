//! Finite truncations of countable weighted digraphs.
//!
//! States carry a positive length and a cost vector; transitions may carry an
//! additional pair cost. States are kept sorted by non-decreasing length, so
//! state ids double as length ranks and successor lists (sorted by id) are
//! sorted by length as well. Enumeration relies on this for early pruning.

mod assumptions;
mod cycles;
mod enumerate;
mod parse;

use std::collections::BTreeMap;

use thiserror::Error;

pub use assumptions::{
    lattice_search, validate_assumptions, AssumptionReport, ConnectivityReport, G1Entry,
    LatticeReport,
};
pub(crate) use assumptions::strongly_connected;
pub use cycles::{cycle_basis, shortest_connector, CycleOptions};
pub use enumerate::{
    enumerate_paths, CountingVisitor, EnumerationOptions, EnumerationSummary, PathView,
    PathVisitor, DEFAULT_MAX_PATHS,
};
pub use parse::{load_graph, to_graph_text};

/// Relative slack allowed when checking `|cost| <= bound * length`.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("non-positive length {length} for state `{label}`")]
    NonPositiveLength { label: String, length: f64 },
    #[error("cost bound violated: state `{label}` cost {cost} exceeds {bound} * length {length}")]
    CostBound {
        label: String,
        cost: f64,
        bound: f64,
        length: f64,
    },
    #[error("pair cost bound violated on `{from}` -> `{to}`: {cost} exceeds {bound} * length {length}")]
    PairCostBound {
        from: String,
        to: String,
        cost: f64,
        bound: f64,
        length: f64,
    },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("pair cost given for `{from}` -> `{to}` which is not a transition")]
    PairCostWithoutTransition { from: String, to: String },
    #[error("expected {expected} cost values, found {found}")]
    CostDimension { expected: usize, found: usize },
    #[error("graph has no states")]
    Empty,
    #[error("unknown start vertex `{0}`")]
    UnknownVertex(String),
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("states {0} -> {1} are not related by a transition")]
    NotATransition(usize, usize),
    #[error("path budget of {budget} exceeded after {visited} paths")]
    BudgetExceeded { visited: u64, budget: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}

/// One state of the transition system (an edge of the underlying graph).
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    /// Position in the length-sorted state list.
    pub id: usize,
    pub label: String,
    /// Initial vertex.
    pub from: String,
    /// Terminal vertex.
    pub to: String,
    pub length: f64,
    pub costs: Vec<f64>,
}

/// A path through the state graph together with its recomputed totals.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub states: Vec<usize>,
    pub length: f64,
    pub costs: Vec<f64>,
    /// Cyclic records treat the last state as followed by the first one, and
    /// `costs` includes the pair cost of that closing transition.
    pub cyclic: bool,
}

#[derive(Debug, Clone)]
pub struct WeightedDigraph {
    states: Vec<StateRecord>,
    successors: Vec<Vec<usize>>,
    /// Flat per-state pair costs aligned with `successors`, `cost_dim` values
    /// per successor. Empty vectors when the graph has no pair costs.
    pair_costs: Vec<Vec<f64>>,
    has_pair_costs: bool,
    start_sets: BTreeMap<String, Vec<usize>>,
    cost_dim: usize,
    cost_bound: f64,
    truncation: Option<f64>,
}

impl WeightedDigraph {
    pub fn states(&self) -> &[StateRecord] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &StateRecord {
        &self.states[id]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn cost_dim(&self) -> usize {
        self.cost_dim
    }

    pub fn cost_bound(&self) -> f64 {
        self.cost_bound
    }

    /// Cutoff length when this graph truncates an infinite system.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.successors[id]
    }

    pub fn has_pair_costs(&self) -> bool {
        self.has_pair_costs
    }

    pub fn transition_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn start_sets(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.start_sets
    }

    pub fn start_set(&self, vertex: &str) -> Option<&[usize]> {
        self.start_sets.get(vertex).map(Vec::as_slice)
    }

    pub fn min_length(&self) -> f64 {
        self.states.first().map_or(f64::INFINITY, |s| s.length)
    }

    pub fn max_length(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.length)
    }

    pub fn is_transition(&self, from: usize, to: usize) -> bool {
        self.successors[from].binary_search(&to).is_ok()
    }

    /// Pair costs of the `slot`-th successor of `from`.
    pub(crate) fn pair_cost_at(&self, from: usize, slot: usize) -> Option<&[f64]> {
        if !self.has_pair_costs {
            return None;
        }
        let n = self.cost_dim;
        Some(&self.pair_costs[from][slot * n..(slot + 1) * n])
    }

    pub fn pair_cost(&self, from: usize, to: usize) -> Option<&[f64]> {
        let slot = self.successors[from].binary_search(&to).ok()?;
        self.pair_cost_at(from, slot)
    }

    /// Builds a record for a linear path, validating every transition.
    pub fn path_record(&self, states: &[usize]) -> Result<PathRecord, GraphError> {
        self.record(states, false)
    }

    /// Builds a record for a cyclic state sequence (closing transition included).
    pub fn cycle_record(&self, states: &[usize]) -> Result<PathRecord, GraphError> {
        self.record(states, true)
    }

    fn record(&self, states: &[usize], cyclic: bool) -> Result<PathRecord, GraphError> {
        let n = self.cost_dim;
        let mut costs = vec![0.0; n];
        let mut length = 0.0;
        for (pos, &id) in states.iter().enumerate() {
            let st = self
                .states
                .get(id)
                .ok_or_else(|| GraphError::UnknownState(id.to_string()))?;
            length += st.length;
            for (acc, c) in costs.iter_mut().zip(&st.costs) {
                *acc += c;
            }
            let next = if pos + 1 < states.len() {
                Some(states[pos + 1])
            } else if cyclic {
                Some(states[0])
            } else {
                None
            };
            if let Some(next) = next {
                if next >= self.states.len() {
                    return Err(GraphError::UnknownState(next.to_string()));
                }
                let slot = self.successors[id]
                    .binary_search(&next)
                    .map_err(|_| GraphError::NotATransition(id, next))?;
                if let Some(pc) = self.pair_cost_at(id, slot) {
                    for (acc, c) in costs.iter_mut().zip(pc) {
                        *acc += c;
                    }
                }
            }
        }
        Ok(PathRecord {
            states: states.to_vec(),
            length,
            costs,
            cyclic,
        })
    }

    /// Same graph with every length multiplied by `factor`; costs untouched.
    pub fn scaled_lengths(&self, factor: f64) -> WeightedDigraph {
        let mut out = self.clone();
        for st in &mut out.states {
            st.length *= factor;
        }
        out.cost_bound = self.cost_bound / factor;
        out.truncation = self.truncation.map(|l| l * factor);
        out
    }

    /// Same transition structure with replacement state costs.
    ///
    /// `costs[id]` must have `cost_dim` entries; pair costs are dropped.
    pub fn with_state_costs(
        &self,
        cost_dim: usize,
        cost_bound: f64,
        costs: impl Fn(&StateRecord) -> Vec<f64>,
    ) -> Result<WeightedDigraph, GraphError> {
        let mut b = GraphBuilder::new(cost_dim, cost_bound);
        for st in &self.states {
            b.add_state(&st.label, &st.from, &st.to, st.length, costs(st));
        }
        for (from, succ) in self.successors.iter().enumerate() {
            for &to in succ {
                b.add_transition(from, to);
            }
        }
        b.truncation(self.truncation);
        b.build()
    }
}

/// Index-based builder; indices returned by [`GraphBuilder::add_state`] refer
/// to insertion order, not to the final sorted ids.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    cost_dim: usize,
    cost_bound: f64,
    states: Vec<(String, String, String, f64, Vec<f64>)>,
    transitions: Vec<(usize, usize)>,
    transall: bool,
    pair_costs: Vec<(usize, usize, Vec<f64>)>,
    truncation: Option<f64>,
}

impl GraphBuilder {
    pub fn new(cost_dim: usize, cost_bound: f64) -> Self {
        GraphBuilder {
            cost_dim,
            cost_bound,
            states: Vec::new(),
            transitions: Vec::new(),
            transall: false,
            pair_costs: Vec::new(),
            truncation: None,
        }
    }

    pub fn add_state(
        &mut self,
        label: &str,
        from: &str,
        to: &str,
        length: f64,
        costs: Vec<f64>,
    ) -> usize {
        self.states
            .push((label.to_string(), from.to_string(), to.to_string(), length, costs));
        self.states.len() - 1
    }

    pub fn add_transition(&mut self, from: usize, to: usize) -> &mut Self {
        self.transitions.push((from, to));
        self
    }

    /// Adds every transition `e -> e'` with `to(e) == from(e')`.
    pub fn transall(&mut self) -> &mut Self {
        self.transall = true;
        self
    }

    pub fn add_pair_cost(&mut self, from: usize, to: usize, costs: Vec<f64>) -> &mut Self {
        self.pair_costs.push((from, to, costs));
        self
    }

    pub fn truncation(&mut self, cutoff: Option<f64>) -> &mut Self {
        self.truncation = cutoff;
        self
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn build(&self) -> Result<WeightedDigraph, GraphError> {
        if self.states.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = self.cost_dim;
        let bound = self.cost_bound;
        let mut seen = std::collections::HashSet::new();
        for (label, _, _, length, costs) in &self.states {
            if !seen.insert(label.as_str()) {
                return Err(GraphError::DuplicateState(label.clone()));
            }
            if !(*length > 0.0) || !length.is_finite() {
                return Err(GraphError::NonPositiveLength {
                    label: label.clone(),
                    length: *length,
                });
            }
            if costs.len() != n {
                return Err(GraphError::CostDimension {
                    expected: n,
                    found: costs.len(),
                });
            }
            for &c in costs {
                if !(c.abs() <= bound * length * (1.0 + BOUND_SLACK)) {
                    return Err(GraphError::CostBound {
                        label: label.clone(),
                        cost: c,
                        bound,
                        length: *length,
                    });
                }
            }
        }

        // Stable sort by length; ties keep input order.
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by(|&a, &b| self.states[a].3.total_cmp(&self.states[b].3));
        let mut rank = vec![0usize; order.len()];
        for (new_id, &old) in order.iter().enumerate() {
            rank[old] = new_id;
        }

        let states: Vec<StateRecord> = order
            .iter()
            .enumerate()
            .map(|(id, &old)| {
                let (label, from, to, length, costs) = &self.states[old];
                StateRecord {
                    id,
                    label: label.clone(),
                    from: from.clone(),
                    to: to.clone(),
                    length: *length,
                    costs: costs.clone(),
                }
            })
            .collect();

        let k = states.len();
        let mut successors: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &(a, b) in &self.transitions {
            if a >= k {
                return Err(GraphError::UnknownState(a.to_string()));
            }
            if b >= k {
                return Err(GraphError::UnknownState(b.to_string()));
            }
            successors[rank[a]].push(rank[b]);
        }
        if self.transall {
            let mut by_from: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for st in &states {
                by_from.entry(st.from.as_str()).or_default().push(st.id);
            }
            for st in &states {
                if let Some(next) = by_from.get(st.to.as_str()) {
                    successors[st.id].extend_from_slice(next);
                }
            }
        }
        for succ in &mut successors {
            succ.sort_unstable();
            succ.dedup();
        }

        let has_pair_costs = !self.pair_costs.is_empty();
        let mut pair_costs: Vec<Vec<f64>> = if has_pair_costs {
            successors.iter().map(|s| vec![0.0; s.len() * n]).collect()
        } else {
            vec![Vec::new(); k]
        };
        for (a, b, costs) in &self.pair_costs {
            if *a >= k || *b >= k {
                return Err(GraphError::UnknownState(format!("{a}/{b}")));
            }
            if costs.len() != n {
                return Err(GraphError::CostDimension {
                    expected: n,
                    found: costs.len(),
                });
            }
            let (from, to) = (rank[*a], rank[*b]);
            let slot = successors[from].binary_search(&to).map_err(|_| {
                GraphError::PairCostWithoutTransition {
                    from: states[from].label.clone(),
                    to: states[to].label.clone(),
                }
            })?;
            let target_len = states[to].length;
            for (j, &c) in costs.iter().enumerate() {
                if !(c.abs() <= bound * target_len * (1.0 + BOUND_SLACK)) {
                    return Err(GraphError::PairCostBound {
                        from: states[from].label.clone(),
                        to: states[to].label.clone(),
                        cost: c,
                        bound,
                        length: target_len,
                    });
                }
                pair_costs[from][slot * n + j] = c;
            }
        }

        let mut start_sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for st in &states {
            start_sets.entry(st.from.clone()).or_default().push(st.id);
        }

        Ok(WeightedDigraph {
            states,
            successors,
            pair_costs,
            has_pair_costs,
            start_sets,
            cost_dim: n,
            cost_bound: bound,
            truncation: self.truncation,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn states_sorted_with_stable_ties() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("long", "u", "u", 3.0, vec![]);
        b.add_state("t1", "u", "u", 1.0, vec![]);
        b.add_state("t2", "u", "u", 1.0, vec![]);
        let g = b.build().unwrap();
        let labels: Vec<_> = g.states().iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["t1", "t2", "long"]);
    }

    #[test]
    fn transall_follows_vertices() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("uw", "u", "w", 1.0, vec![]);
        b.add_state("wu", "w", "u", 1.5, vec![]);
        b.transall();
        let g = b.build().unwrap();
        assert_eq!(g.successors(0), &[1]);
        assert_eq!(g.successors(1), &[0]);
        assert_eq!(g.start_set("u"), Some(&[0][..]));
    }

    #[test]
    fn records_sum_state_and_pair_costs() {
        let mut b = GraphBuilder::new(1, 10.0);
        let x = b.add_state("x", "v", "v", 1.0, vec![0.5]);
        let y = b.add_state("y", "v", "v", 2.0, vec![1.0]);
        b.transall();
        b.add_pair_cost(x, y, vec![3.0]);
        b.add_pair_cost(y, x, vec![-2.0]);
        let g = b.build().unwrap();
        let p = g.path_record(&[0, 1, 0]).unwrap();
        assert!((p.costs[0] - (0.5 + 1.0 + 0.5 + 3.0 - 2.0)).abs() < 1e-15);
        let c = g.cycle_record(&[0, 1]).unwrap();
        assert!((c.costs[0] - (0.5 + 1.0 + 3.0 - 2.0)).abs() < 1e-15);
        assert!((c.length - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut b = GraphBuilder::new(1, 1.0);
        b.add_state("z", "v", "v", 0.0, vec![0.0]);
        assert!(matches!(b.build(), Err(GraphError::NonPositiveLength { .. })));

        let mut b = GraphBuilder::new(1, 1.0);
        b.add_state("a", "v", "v", 1.0, vec![5.0]);
        assert!(matches!(b.build(), Err(GraphError::CostBound { .. })));

        let mut b = GraphBuilder::new(1, 1.0);
        let a = b.add_state("a", "u", "u", 1.0, vec![0.0]);
        let c = b.add_state("c", "w", "w", 1.0, vec![0.0]);
        b.add_pair_cost(a, c, vec![0.0]);
        assert!(matches!(
            b.build(),
            Err(GraphError::PairCostWithoutTransition { .. })
        ));
    }

    #[test]
    fn path_record_rejects_non_transitions() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("uw", "u", "w", 1.0, vec![]);
        b.add_state("wu", "w", "u", 1.0, vec![]);
        b.transall();
        let g = b.build().unwrap();
        assert_eq!(g.path_record(&[0, 0]), Err(GraphError::NotATransition(0, 0)));
    }

    #[test]
    fn fixtures_shape() {
        let g = loop2();
        assert_eq!(g.len(), 2);
        assert_eq!(g.transition_count(), 4);
        assert_eq!(lat2().max_length(), 2.0);
    }
}
