use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::graph::{strongly_connected, GraphBuilder, WeightedDigraph};
use crate::limit_laws::{accumulate, AccumulateOptions, EmpiricalSummary};
use crate::spectral::{degeneracy_test, DegeneracyReport, SolverOptions, SpectralResult, SpectralSolver};

use super::model::norm;
use super::{enumerate_saddles_with, Point, SaddleConnection, SaddleOptions, SaddleSet, SurfaceError, TranslationSurface};

/// Both angles at a turn must be at least `pi - LEGALITY_TOL`.
pub const LEGALITY_TOL: f64 = 1e-9;

/// Outcome of concatenating two connections at a cone point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Turn {
    /// `angle` is the smaller of the two cone angles between the segments;
    /// `change = angle - pi`, in `[0, pi k]`.
    Legal { angle: f64, change: f64 },
    Illegal { angle: f64 },
}

impl Turn {
    pub fn is_legal(self) -> bool {
        matches!(self, Turn::Legal { .. })
    }

    pub fn angle(self) -> f64 {
        match self {
            Turn::Legal { angle, .. } | Turn::Illegal { angle } => angle,
        }
    }

    pub fn change(self) -> Option<f64> {
        match self {
            Turn::Legal { change, .. } => Some(change),
            Turn::Illegal { .. } => None,
        }
    }
}

/// Turn from `s` into `next` at their shared cone point.
pub fn angle_change(
    surface: &TranslationSurface,
    s: &SaddleConnection,
    next: &SaddleConnection,
) -> Result<Turn, SurfaceError> {
    if s.end_class != next.start_class {
        return Err(SurfaceError::EndpointMismatch {
            first: s.id,
            second: next.id,
            end: s.end_class,
            start: next.start_class,
        });
    }
    let class = surface.class(s.end_class)?;
    let g1 = next.out_angle.minus(s.in_back_angle, class.sectors());
    let g2 = class.cone_angle - g1;
    let angle = g1.min(g2);
    if g1 >= PI - LEGALITY_TOL && g2 >= PI - LEGALITY_TOL {
        Ok(Turn::Legal {
            angle,
            change: (angle - PI).max(0.0),
        })
    } else {
        Ok(Turn::Illegal { angle })
    }
}

/// One cost coordinate of a saddle path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostChannel {
    /// 1 per connection.
    SingularityCount,
    RealChange,
    ImagChange,
    AbsReal,
    AbsImag,
    /// Angle change at each turn, carried as a pair cost.
    AngleChange,
    /// 1 when the connection ends at the given class.
    VisitIndicator(usize),
    Length,
}

impl CostChannel {
    fn state_cost(self, s: &SaddleConnection) -> f64 {
        match self {
            CostChannel::SingularityCount => 1.0,
            CostChannel::RealChange => s.holonomy[0],
            CostChannel::ImagChange => s.holonomy[1],
            CostChannel::AbsReal => s.holonomy[0].abs(),
            CostChannel::AbsImag => s.holonomy[1].abs(),
            CostChannel::AngleChange => 0.0,
            CostChannel::VisitIndicator(y) => f64::from(u8::from(s.end_class == y)),
            CostChannel::Length => s.length,
        }
    }
}

impl fmt::Display for CostChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostChannel::SingularityCount => write!(f, "count"),
            CostChannel::RealChange => write!(f, "re"),
            CostChannel::ImagChange => write!(f, "im"),
            CostChannel::AbsReal => write!(f, "abs_re"),
            CostChannel::AbsImag => write!(f, "abs_im"),
            CostChannel::AngleChange => write!(f, "angle"),
            CostChannel::VisitIndicator(y) => write!(f, "visit:{y}"),
            CostChannel::Length => write!(f, "length"),
        }
    }
}

impl FromStr for CostChannel {
    type Err = SurfaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let c = match s.trim() {
            "count" => CostChannel::SingularityCount,
            "re" => CostChannel::RealChange,
            "im" => CostChannel::ImagChange,
            "abs_re" => CostChannel::AbsReal,
            "abs_im" => CostChannel::AbsImag,
            "angle" => CostChannel::AngleChange,
            "length" => CostChannel::Length,
            other => match other.strip_prefix("visit:").map(str::parse::<usize>) {
                Some(Ok(y)) => CostChannel::VisitIndicator(y),
                _ => return Err(SurfaceError::UnknownChannel(other.to_string())),
            },
        };
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMenu {
    pub channels: Vec<CostChannel>,
}

impl CostMenu {
    pub fn new(channels: Vec<CostChannel>) -> CostMenu {
        CostMenu { channels }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

impl FromStr for CostMenu {
    type Err = SurfaceError;

    /// Comma-separated channel names, e.g. `re,im` or `count,visit:0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let channels = s
            .split(',')
            .filter(|c| !c.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()?;
        if channels.is_empty() {
            return Err(SurfaceError::EmptyMenu);
        }
        Ok(CostMenu { channels })
    }
}

impl fmt::Display for CostMenu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.channels.iter().map(ToString::to_string).collect();
        write!(f, "{}", names.join(","))
    }
}

/// `max(1 / l_min, 1, pi k_max / l_min)`: bounds every channel by a multiple
/// of the connection length.
pub fn cost_bound(surface: &TranslationSurface, min_length: f64) -> f64 {
    (1.0 / min_length)
        .max(1.0)
        .max(PI * surface.k_max() as f64 / min_length)
}

/// States are oriented connections, transitions are legal turns, and the
/// angle change (if selected) is a pair cost. Start sets are keyed by
/// `x<class>`; state labels are `s<id>`.
pub fn build_transition_graph(
    surface: &TranslationSurface,
    saddles: &SaddleSet,
    menu: &CostMenu,
) -> Result<WeightedDigraph, SurfaceError> {
    if menu.is_empty() {
        return Err(SurfaceError::EmptyMenu);
    }
    for c in &menu.channels {
        if let CostChannel::VisitIndicator(y) = *c {
            surface.class(y)?;
        }
    }
    let min_length = saddles.min_length().ok_or(SurfaceError::EmptyGraph(saddles.cutoff))?;
    let mut b = GraphBuilder::new(menu.len(), cost_bound(surface, min_length));
    let mut index = Vec::with_capacity(saddles.len());
    for s in &saddles.saddles {
        let costs = menu.channels.iter().map(|c| c.state_cost(s)).collect();
        let label = format!("s{}", s.id);
        let from = surface.classes()[s.start_class].label();
        let to = surface.classes()[s.end_class].label();
        index.push(b.add_state(&label, &from, &to, s.length, costs));
    }
    let angle_slot = menu.channels.iter().position(|&c| c == CostChannel::AngleChange);
    let mut by_start: Vec<Vec<usize>> = vec![Vec::new(); surface.classes().len()];
    for s in &saddles.saddles {
        by_start[s.start_class].push(s.id);
    }
    for s in &saddles.saddles {
        for &n in &by_start[s.end_class] {
            let next = &saddles.saddles[n];
            if let Turn::Legal { change, .. } = angle_change(surface, s, next)? {
                b.add_transition(index[s.id], index[n]);
                if let Some(slot) = angle_slot {
                    let mut pc = vec![0.0; menu.len()];
                    pc[slot] = change;
                    b.add_pair_cost(index[s.id], index[n], pc);
                }
            }
        }
    }
    b.truncation(Some(saddles.cutoff));
    Ok(b.build()?)
}

/// First chain of connections with the given holonomies whose consecutive
/// turns are legal and measure `angles` (to `tol`).
pub fn find_turn_path(
    surface: &TranslationSurface,
    saddles: &SaddleSet,
    holonomies: &[Point],
    angles: &[f64],
    tol: f64,
) -> Option<Vec<usize>> {
    if holonomies.is_empty() || angles.len() + 1 != holonomies.len() {
        return None;
    }
    let matching = |h: Point| -> Vec<usize> {
        saddles
            .saddles
            .iter()
            .filter(|s| norm([s.holonomy[0] - h[0], s.holonomy[1] - h[1]]) <= 1e-9)
            .map(|s| s.id)
            .collect()
    };
    let candidates: Vec<Vec<usize>> = holonomies.iter().map(|&h| matching(h)).collect();
    fn extend(
        surface: &TranslationSurface,
        saddles: &SaddleSet,
        candidates: &[Vec<usize>],
        angles: &[f64],
        tol: f64,
        path: &mut Vec<usize>,
    ) -> bool {
        let depth = path.len();
        if depth == candidates.len() {
            return true;
        }
        for &c in &candidates[depth] {
            if let Some(&prev) = path.last() {
                let (a, b) = (saddles.get(prev), saddles.get(c));
                if a.end_class != b.start_class {
                    continue;
                }
                match angle_change(surface, a, b) {
                    Ok(Turn::Legal { angle, .. }) if (angle - angles[depth - 1]).abs() <= tol => {}
                    _ => continue,
                }
            }
            path.push(c);
            if extend(surface, saddles, candidates, angles, tol, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    extend(surface, saddles, &candidates, angles, tol, &mut path).then_some(path)
}

#[derive(Debug, Clone)]
pub struct PathStatsOptions {
    /// Saddle cutoff `L`; must be at least the path threshold.
    pub cutoff: f64,
    pub menu: CostMenu,
    pub solver: SolverOptions,
    pub saddle: SaddleOptions,
    pub accumulate: AccumulateOptions,
    /// Longest cycle used by the degeneracy test; `None` is twice the cutoff.
    pub cycle_length: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddlePathStats {
    pub saddles: usize,
    pub transitions: usize,
    pub spectral: SpectralResult,
    pub degeneracy: DegeneracyReport,
    pub empirical: EmpiricalSummary,
}

/// Spectral predictions on the truncated transition graph next to exact path
/// statistics from class `start` below `threshold`.
pub fn saddle_path_stats(
    surface: &TranslationSurface,
    start: usize,
    threshold: f64,
    opts: &PathStatsOptions,
) -> Result<SaddlePathStats, SurfaceError> {
    if opts.cutoff < threshold {
        return Err(SurfaceError::CutoffBelowThreshold {
            cutoff: opts.cutoff,
            threshold,
        });
    }
    let label = surface.class(start)?.label();
    let saddles = enumerate_saddles_with(surface, opts.cutoff, opts.saddle)?;
    let g = build_transition_graph(surface, &saddles, &opts.menu)?;
    if !strongly_connected(&g) {
        return Err(SurfaceError::NotStronglyConnected);
    }
    let spectral = SpectralSolver::new(&g, opts.solver)?.analyze()?;
    let cycle_length = opts.cycle_length.unwrap_or(2.0 * opts.cutoff);
    let degeneracy = degeneracy_test(&g, &spectral.lambda, cycle_length)?;
    let empirical = accumulate(&g, &label, threshold, &spectral.lambda, &opts.accumulate)?;
    Ok(SaddlePathStats {
        saddles: saddles.len(),
        transitions: g.transition_count(),
        spectral,
        degeneracy,
        empirical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{enumerate_saddles, lshape, sheared_lshape, staircase, transform, SHEAR, TURN_PATH};

    #[test]
    fn turn_angles_on_lshape() {
        let s = lshape();
        let set = enumerate_saddles(&s, 2.5).unwrap();
        let want = [1.25 * PI, 2.0 * PI + 0.5f64.atan()];
        let path = find_turn_path(&s, &set, &TURN_PATH, &want, 1e-9).expect("path exists");
        let t1 = angle_change(&s, set.get(path[0]), set.get(path[1])).unwrap();
        assert!((t1.change().unwrap() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sheared_turns_hit_exact_values() {
        let s = sheared_lshape();
        let set = enumerate_saddles(&s, 2.5).unwrap();
        let hol: Vec<Point> = TURN_PATH.iter().map(|&h| transform(SHEAR, h)).collect();
        let want = [1.25 * PI, 13.0 * PI / 6.0];
        let path = find_turn_path(&s, &set, &hol, &want, 1e-9).expect("path exists");
        let t2 = angle_change(&s, set.get(path[1]), set.get(path[2])).unwrap();
        assert!((t2.change().unwrap() - 7.0 * PI / 6.0).abs() < 1e-9);
    }

    #[test]
    fn reversing_preserves_legality_and_change() {
        for s in [lshape(), staircase()] {
            let set = enumerate_saddles(&s, 3.0).unwrap();
            let k_max = s.k_max() as f64;
            for a in &set.saddles {
                for b in set.saddles.iter().filter(|b| b.start_class == a.end_class) {
                    let fwd = angle_change(&s, a, b).unwrap();
                    let back = angle_change(&s, set.get(b.reversal_id), set.get(a.reversal_id)).unwrap();
                    assert_eq!(fwd.is_legal(), back.is_legal());
                    assert!((fwd.angle() - back.angle()).abs() < 1e-9);
                    if let Some(c) = fwd.change() {
                        assert!((0.0..=PI * k_max + 1e-12).contains(&c));
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_endpoints_and_backtracking() {
        let s = staircase();
        let set = enumerate_saddles(&s, 1.01).unwrap();
        let a = set.get(0);
        let b = set.saddles.iter().find(|b| b.start_class != a.end_class).unwrap();
        assert!(matches!(angle_change(&s, a, b), Err(SurfaceError::EndpointMismatch { .. })));
        let back = angle_change(&s, a, set.get(a.reversal_id)).unwrap();
        assert_eq!(back, Turn::Illegal { angle: 0.0 });
    }

    #[test]
    fn unit_graph_on_lshape() {
        let s = lshape();
        let set = enumerate_saddles(&s, 1.01).unwrap();
        let menu: CostMenu = "count,re,im,angle,visit:0".parse().unwrap();
        let g = build_transition_graph(&s, &set, &menu).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.truncation(), Some(1.01));
        for (i, a) in set.saddles.iter().enumerate() {
            for (j, b) in set.saddles.iter().enumerate() {
                let legal = angle_change(&s, a, b).unwrap().is_legal();
                let (gi, gj) = (state_of(&g, i), state_of(&g, j));
                assert_eq!(g.is_transition(gi, gj), legal);
            }
        }
        assert!(g.states().iter().all(|st| st.costs[0] == 1.0 && st.costs[4] == 1.0));
    }

    fn state_of(g: &WeightedDigraph, saddle: usize) -> usize {
        let label = format!("s{saddle}");
        g.states().iter().position(|st| st.label == label).unwrap()
    }

    #[test]
    fn menu_parsing() {
        let m: CostMenu = "re, im,visit:2".parse().unwrap();
        assert_eq!(m.to_string(), "re,im,visit:2");
        assert!(matches!("".parse::<CostMenu>(), Err(SurfaceError::EmptyMenu)));
        assert!(matches!("spin".parse::<CostMenu>(), Err(SurfaceError::UnknownChannel(_))));
    }

    #[test]
    fn cutoff_must_cover_threshold() {
        let opts = PathStatsOptions {
            cutoff: 2.0,
            menu: "count".parse().unwrap(),
            solver: SolverOptions::default(),
            saddle: SaddleOptions::default(),
            accumulate: AccumulateOptions::default(),
            cycle_length: None,
        };
        let r = saddle_path_stats(&lshape(), 0, 3.0, &opts);
        assert!(matches!(r, Err(SurfaceError::CutoffBelowThreshold { .. })));
    }
}
